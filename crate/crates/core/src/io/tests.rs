use super::*;
use crate::continuation::cont;
use crate::demos::{self, DemoConfig};
use crate::periodic::BcPer;
use crate::problem::jaccheck;
use proptest::prelude::*;

fn small(name: &str, nx: usize, ny: usize) -> ProblemState {
    let mut cfg = DemoConfig::default_for(name).unwrap();
    cfg.mesh.nx = nx;
    cfg.mesh.ny = ny;
    demos::init(name, &cfg).unwrap()
}

fn assert_same_state(a: &ProblemState, b: &ProblemState) {
    assert_eq!(a.u, b.u);
    assert_eq!(a.tau, b.tau);
    assert_eq!(a.ilam, b.ilam);
    assert_eq!(a.aux, b.aux);
    assert_eq!(a.layout, b.layout);
    assert_eq!(a.nc, b.nc);
    assert_eq!(a.sw, b.sw);
    assert_eq!(a.sol, b.sol);
    assert_eq!(a.usrlam, b.usrlam);
    assert_eq!(a.u_ref, b.u_ref);
    assert_eq!(a.mesh.spec(), b.mesh.spec());
}

#[test]
fn continuation_point_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = small("acfold", 12, 10);
    p.dir = Some(dir.path().to_path_buf());
    p.sw.bifcheck = false;
    cont(&mut p, 5).unwrap();
    let q = load_point(dir.path(), "pt5").unwrap();
    assert_same_state(&p, &q);
    assert_eq!(q.sol.count, 5);
    let b = load_branch(dir.path()).unwrap();
    assert_eq!(b, p.branch);
    assert_eq!(b.rows.len(), 6);
}

#[test]
fn periodic_point_reload_rebuilds_operators() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = small("schnak", 4, 20);
    crate::demos::schnak::travel_setup(&mut p).unwrap();
    let n = p.nu;
    for (i, v) in p.u[..n].iter_mut().enumerate() {
        *v += 0.01 * ((i % 7) as f64 - 3.0);
    }
    save_to(&p, &dir.path().join("x")).unwrap();
    let q = load_point(dir.path(), "x").unwrap();
    assert_same_state(&p, &q);
    assert_eq!(q.sw.bcper, BcPer::TopBottom);
    assert_eq!(q.ops.per, p.ops.per);
    let (r1, r2) = (p.residual(&p.u).unwrap(), q.residual(&q.u).unwrap());
    let d = crate::sparse::vecops::norm_inf(&crate::sparse::vecops::sub(&r1, &r2));
    assert!(d <= 1e-12);
    assert!(jaccheck(&q).unwrap() <= 1e-5);
}

#[test]
fn extended_point_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = small("bratu", 6, 6);
    let nu = p.nu;
    let par = p.params().to_vec();
    let mut u = p.u[..nu].to_vec();
    u.extend((0..nu).map(|i| i as f64 * 0.1));
    u.extend(par);
    p.layout = crate::problem::Layout::Extended;
    p.u = u;
    p.sw.spcont = crate::problem::SpMode::Fold;
    p.set_ilam(vec![1, 2]).unwrap();
    p.sol.time = Some(0.25);
    save_to(&p, &dir.path().join("e")).unwrap();
    let q = load_point(dir.path(), "e").unwrap();
    assert_same_state(&p, &q);
}

#[test]
fn wrong_demo_fails_closed() {
    let p = small("bratu", 4, 4);
    let text = encode_point(&p, &p.u, None, 0, -1).replacen("demo bratu", "demo nosuch", 1);
    assert!(matches!(decode_point(&text), Err(Error::UnknownDemo(_))));
    let bad = encode_point(&p, &p.u, None, 0, -1).replacen("pdecont-point 1", "pdecont-point 9", 1);
    assert!(decode_point(&bad).is_err());
    let text = encode_point(&p, &p.u, None, 0, -1);
    let cut = &text[..text.len() - 30];
    assert!(decode_point(cut).is_err());
    assert!(load_point(Path::new("/nonexistent"), "pt0").is_err());
}

#[test]
fn empty_branch_table_rejected() {
    assert!(parse_branch_csv("").is_err());
    assert!(parse_branch_csv("a,b\n1,2\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn branch_csv_round_trip(rows in proptest::collection::vec(
        (0usize..1000, -2i8..3, proptest::collection::vec(-1e6f64..1e6, 2), -1i64..9, any::<f64>().prop_filter("finite", |x| x.is_finite()), any::<bool>()),
        1..8,
    )) {
        let b = Branch {
            param_names: vec!["lam".into(), "c".into()],
            user_names: vec!["max".into()],
            rows: rows
                .into_iter()
                .map(|(count, ptype, params, ineg, l2, target)| BranchRecord {
                    count,
                    ptype,
                    params,
                    ineg,
                    err: 0.0,
                    l2,
                    target,
                    user: vec![l2 * 0.5],
                })
                .collect(),
        };
        let back = parse_branch_csv(&branch_csv(&b)).unwrap();
        prop_assert_eq!(back, b);
    }

    #[test]
    fn point_values_round_trip_bit_exact(vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 25)) {
        let mut p = small("acfold", 4, 4);
        p.u[..25].copy_from_slice(&vals);
        p.tau = Some(vals.iter().rev().copied().chain([1.0]).collect());
        let q = decode_point(&encode_point(&p, &p.u, p.tau.as_deref(), 0, 3)).unwrap();
        prop_assert_eq!(q.u.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), p.u.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(q.tau, p.tau);
        prop_assert_eq!(q.sol.ineg, 3);
    }
}
