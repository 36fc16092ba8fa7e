//! Compiles a C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "pdecont.h"

int main(void) {
    PdcState *s = NULL;
    if (pdc_demo_init("nosuch", &s) != PDC_STATUS_UNKNOWN_DEMO || s != NULL) return 1;
    if (pdc_last_error() == NULL) return 2;
    if (pdc_demo_init("bratu", &s) != PDC_STATUS_OK) return 3;
    size_t steps = 0;
    if (pdc_set_checks(s, false, false) != PDC_STATUS_OK) return 4;
    if (pdc_cont(s, 2, &steps) != PDC_STATUS_OK || steps != 2) return 5;
    double r = 1.0, lam = 0.0;
    if (pdc_residual_norm(s, &r) != PDC_STATUS_OK || !(r <= 1e-10)) return 6;
    if (pdc_get_param(s, 1, &lam) != PDC_STATUS_OK || !(lam > 0.0)) return 7;
    printf("steps %zu lam %.6f\n", steps, lam);
    pdc_state_free(s);
    return 0;
}
"#;

/// Static library built alongside this test; `cargo test` leaves the fresh
/// artifact next to the test binary in `<target>/<profile>/deps`.
fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent().unwrap();
    [deps, deps.parent().unwrap()]
        .iter()
        .map(|d| d.join("libpdecont_ffi.a"))
        .find(|p| p.is_file())
        .expect("libpdecont_ffi.a not built")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pdecont.h")).unwrap();
    for sym in [
        "PDECONT_H",
        "typedef struct PdcState PdcState;",
        "PDC_STATUS_OK = 0",
        "PDC_STATUS_PANIC",
        "pdc_demo_init",
        "pdc_load_point",
        "pdc_state_free",
        "pdc_cont",
        "pdc_findbif",
        "pdc_swibra",
        "pdc_spcontini",
        "pdc_time_integrate",
        "pdc_last_error",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib = static_lib();
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = tmp.path().join("smoke");
    let inc = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let st = Command::new("cc")
        .arg("-std=c11")
        .arg("-I")
        .arg(&inc)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(st.success(), "compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("steps 2"));
}
