//! Linearly implicit time integration of `M u_t = -G(u)`.
//!
//! Linear operator parts are implicit, the nonlinearity `f` and the boundary
//! data `Gb` explicit:
//! `(M + dt·L) u^{n+1} = M u^n + dt·(M f(u^n) + Gb)`.
//! There is no error or stepsize control.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::fem::{assemble_boundary, assemble_interior, assemble_load};
use crate::io;
use crate::linsolve::Lu;
use crate::problem::{Layout, ProblemState};
use crate::sparse::vecops;

#[derive(Clone, Debug, Default)]
pub struct TintReport {
    /// `(time, ‖G(u)‖)` every `pmod` steps (and at the start).
    pub residuals: Vec<(f64, f64)>,
    pub steps: usize,
    /// Number of LU factorizations performed.
    pub factorizations: usize,
    pub snapshots: Vec<PathBuf>,
}

fn check(p: &ProblemState, dt: f64, pmod: usize) -> Result<()> {
    if p.layout != Layout::Normal {
        return Err(Error::domain("time integration needs the normal layout"));
    }
    if !(dt > 0.0) || pmod == 0 {
        return Err(Error::domain(format!("need dt > 0 and pmod >= 1 (dt = {dt}, pmod = {pmod})")));
    }
    Ok(())
}

struct Recorder {
    dir: Option<PathBuf>,
    report: TintReport,
    k: usize,
}

impl Recorder {
    fn new(p: &ProblemState) -> Result<Self> {
        let dir = p.dir.as_ref().map(|d| d.join("pre"));
        let mut r = Self {
            dir,
            report: TintReport::default(),
            k: 0,
        };
        if let Some(d) = &r.dir {
            let path = d.join("pt0");
            io::save_to(p, &path)?;
            r.report.snapshots.push(path);
        }
        Ok(r)
    }

    fn record(&mut self, p: &ProblemState, t: f64) -> Result<()> {
        let r = p.pde_residual(&p.u[..p.nu], p.params())?;
        self.report.residuals.push((t, p.residual_norm(&r)));
        if let Some(d) = &self.dir {
            self.k += 1;
            let path = d.join(format!("u{}", self.k));
            io::save_u_only(&path, &p.u[..p.nu], t)?;
            self.report.snapshots.push(path);
        }
        Ok(())
    }
}

/// Full-assembly integrator: operators and the factorization are rebuilt at
/// every step from the tensors at `u^n`.
pub fn tint(p: &mut ProblemState, dt: f64, nt: usize, pmod: usize) -> Result<TintReport> {
    check(p, dt, pmod)?;
    let nu = p.nu;
    let mut t = p.sol.time.unwrap_or(0.0);
    let mut rec = Recorder::new(p)?;
    rec.record(p, t)?;
    let per = p.ops.per.clone();
    let mfull = crate::fem::assemble_mass(&p.mesh, p.neq);
    for n in 0..nt {
        let par = p.params().to_vec();
        let uf = per.extend_vector(&p.u[..nu])?;
        let co = p.model.coefficients(&p.mesh, &uf, &par)?;
        let int = assemble_interior(&p.mesh, &co, p.neq)?;
        let bnd = assemble_boundary(&p.mesh, &p.ops.bc, &uf, &par)?;
        let load = assemble_load(&p.mesh, &co.f, p.neq)?;
        let l = int.total().add(&bnd.q);
        let lam = per.periodize_operator(&mfull.lincomb(1.0, &l, dt))?;
        let mut rhs = mfull.matvec(&uf);
        for i in 0..rhs.len() {
            rhs[i] += dt * (load[i] + bnd.gb[i]);
        }
        let rhs = per.periodize_vector(&rhs)?;
        let lu = Lu::new(&lam).map_err(|e| Error::Singular(format!("step {n}: {e}")))?;
        rec.report.factorizations += 1;
        let un = lu.solve(&rhs).map_err(|e| Error::Singular(format!("step {n}: {e}")))?;
        p.u[..nu].copy_from_slice(&un);
        t += dt;
        rec.report.steps += 1;
        if (n + 1) % pmod == 0 {
            rec.record(p, t)?;
        }
    }
    p.sol.time = Some(t);
    Ok(rec.report)
}

/// Semilinear integrator: `Λ = M + dt·(L + Q)` is factorized once.
pub fn tints(p: &mut ProblemState, dt: f64, nt: usize, pmod: usize) -> Result<TintReport> {
    check(p, dt, pmod)?;
    let bnd = p
        .ops
        .bnd
        .clone()
        .ok_or_else(|| Error::domain("tints needs u-independent boundary conditions"))?;
    let nu = p.nu;
    let par = p.params().to_vec();
    let [a, b] = p.model.operator_scales(&par);
    let ops = &p.ops;
    let l = ops.k.lincomb(a, &ops.kadv, b).add(&bnd.q);
    let lam = ops.m.lincomb(1.0, &l, dt);
    let lu = Lu::new(&lam)?;
    let mut t = p.sol.time.unwrap_or(0.0);
    let mut rec = Recorder::new(p)?;
    rec.report.factorizations = 1;
    rec.record(p, t)?;
    for n in 0..nt {
        let u = &p.u[..nu];
        let f = p.model.f(u, &par);
        let mut rhs = p.ops.m.matvec(&vecops::add_scaled(u, dt, &f));
        vecops::axpy(dt, &bnd.gb, &mut rhs);
        let un = lu.solve(&rhs).map_err(|e| Error::Singular(format!("step {n}: {e}")))?;
        p.u[..nu].copy_from_slice(&un);
        t += dt;
        rec.report.steps += 1;
        if (n + 1) % pmod == 0 {
            rec.record(p, t)?;
        }
    }
    p.sol.time = Some(t);
    Ok(rec.report)
}
