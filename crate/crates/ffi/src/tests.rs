use super::*;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = pdc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn init(name: &str) -> *mut PdcState {
    let mut s = ptr::null_mut();
    let st = unsafe { pdc_demo_init(cs(name).as_ptr(), &mut s) };
    assert_eq!(st, PdcStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn unknown_demo_reports_status_and_message() {
    let mut s = std::ptr::NonNull::<PdcState>::dangling().as_ptr();
    let st = unsafe { pdc_demo_init(cs("fch").as_ptr(), &mut s) };
    assert_eq!(st, PdcStatus::UnknownDemo);
    assert!(s.is_null());
    assert!(last_error().contains("fch"));
}

#[test]
fn null_arguments_rejected() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(pdc_demo_init(ptr::null(), &mut s), PdcStatus::NullPointer);
        assert_eq!(pdc_demo_init(cs("bratu").as_ptr(), ptr::null_mut()), PdcStatus::NullPointer);
        assert_eq!(pdc_cont(ptr::null_mut(), 1, ptr::null_mut()), PdcStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(pdc_residual_norm(ptr::null_mut(), &mut v), PdcStatus::NullPointer);
        assert_eq!(pdc_u_len(ptr::null()), 0);
        pdc_state_free(ptr::null_mut());
    }
}

#[test]
fn state_access_and_continuation() {
    unsafe {
        let s = init("bratu");
        let n = pdc_u_len(s);
        assert_eq!(n, pdc_nu(s) + 2);
        let mut u = vec![f64::NAN; n];
        assert_eq!(pdc_get_u(s, u.as_mut_ptr(), n - 1), PdcStatus::BufferTooSmall);
        assert_eq!(pdc_get_u(s, u.as_mut_ptr(), n), PdcStatus::Ok);
        assert!(u[..n - 2].iter().all(|&v| v == 0.0));
        let mut k = 0.0;
        assert_eq!(pdc_get_param(s, 2, &mut k), PdcStatus::Ok);
        assert_eq!(k, 10.0);
        assert_eq!(pdc_get_param(s, 3, &mut k), PdcStatus::Domain);
        let mut r = 1.0;
        assert_eq!(pdc_residual_norm(s, &mut r), PdcStatus::Ok);
        assert_eq!(r, 0.0);
        assert_eq!(pdc_set_ds(s, 0.0), PdcStatus::Domain);
        assert_eq!(pdc_set_window(s, 1.0, 0.0), PdcStatus::Domain);
        assert_eq!(pdc_set_checks(s, false, false), PdcStatus::Ok);
        let mut steps = 0;
        assert_eq!(pdc_cont(s, 3, &mut steps), PdcStatus::Ok);
        assert_eq!(steps, 3);
        assert_eq!(pdc_residual_norm(s, &mut r), PdcStatus::Ok);
        assert!(r <= 1e-10);
        let mut lam = 0.0;
        pdc_get_param(s, 1, &mut lam);
        assert!(lam > 0.0);
        pdc_state_free(s);
    }
}

#[test]
fn check_and_save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let s = init("schnak");
        let (mut j, mut sp) = (1.0, 1.0);
        assert_eq!(pdc_check(s, &mut j, &mut sp), PdcStatus::Ok);
        assert!(j <= 1e-5 && sp <= 1e-5, "{j} {sp}");
        let path = dir.path().join("x");
        assert_eq!(pdc_save_point(s, cs(path.to_str().unwrap()).as_ptr()), PdcStatus::Ok);
        let mut q = ptr::null_mut();
        let d = cs(dir.path().to_str().unwrap());
        assert_eq!(pdc_load_point(d.as_ptr(), cs("x").as_ptr(), &mut q), PdcStatus::Ok);
        assert_eq!((*q).inner.u, (*s).inner.u);
        assert_eq!(pdc_load_point(d.as_ptr(), cs("nope").as_ptr(), &mut q), PdcStatus::Format);
        assert!(q.is_null());
        let n = init("nlbc");
        assert_eq!(pdc_check(n, &mut j, &mut sp), PdcStatus::Ok);
        assert!(sp.is_nan());
        for h in [s, n] {
            pdc_state_free(h);
        }
    }
}

#[test]
fn swibra_rejects_regular_point() {
    unsafe {
        let s = init("acfold");
        assert_eq!(pdc_swibra(s, 0.1), PdcStatus::Domain);
        assert!(last_error().contains("not a bifurcation point"));
        assert_eq!(pdc_spcontini(s, 3), PdcStatus::Domain);
        pdc_state_free(s);
    }
}
