//! Newton correctors, predictor-corrector continuation, stepsize control,
//! detection and localization of bifurcation and fold points.

use crate::error::{Error, Result};
use crate::io;
use crate::linsolve::{self, lss_with, spectrum_near_zero, Lu};
use crate::problem::{ptype, BifLoc, Para, ProblemState};
use crate::sparse::vecops;

/// Outcome of a Newton loop. Singular systems yield `converged = false`.
#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub u: Vec<f64>,
    pub res: f64,
    pub iter: usize,
    pub converged: bool,
    /// Residual norm before each iteration and after the last one.
    pub history: Vec<f64>,
}

fn newton<S, J>(p: &ProblemState, u0: &[f64], system: S, jac: J, n: usize) -> Result<NewtonResult>
where
    S: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64], &[f64]) -> Result<crate::sparse::SpMat>,
{
    let pos = p.active_positions();
    let mut u = u0.to_vec();
    let mut r = system(&u)?;
    let mut res = p.residual_norm(&r);
    let mut history = vec![res];
    let mut iter = 0;
    let mut frozen: Option<(Lu, crate::sparse::SpMat)> = None;
    while !(res <= p.nc.tol) && iter < p.nc.imax {
        if !res.is_finite() {
            break;
        }
        if frozen.is_none() || !p.sw.newt {
            let a = jac(&u, &r)?;
            let lu = match Lu::new(&a) {
                Ok(lu) => lu,
                Err(Error::Singular(_)) => break,
                Err(e) => return Err(e),
            };
            frozen = Some((lu, a));
        }
        let (lu, a) = frozen.as_ref().expect("factorization present");
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = match lss_with(lu, a, &rhs) {
            Ok(dx) => dx,
            Err(Error::Singular(_)) => break,
            Err(e) => return Err(e),
        };
        for (c, &q) in pos[..n].iter().enumerate() {
            u[q] += dx[c];
        }
        r = system(&u)?;
        res = p.residual_norm(&r);
        history.push(res);
        iter += 1;
    }
    Ok(NewtonResult {
        converged: res <= p.nc.tol,
        u,
        res,
        iter,
        history,
    })
}

/// Newton loop for `(G, q) = 0` with the primary parameter fixed.
pub fn nloop(p: &ProblemState, u0: &[f64]) -> Result<NewtonResult> {
    let n = p.n_eq();
    newton(p, u0, |u| p.residual(u), |u, r| p.jacobian_square(u, r), n)
}

/// Newton loop for `(G, q, arclength) = 0`, the arclength equation being
/// `⟨τ, x - x_old⟩_W = ds`.
pub fn nloopext(p: &ProblemState, u_pred: &[f64], u_old: &[f64], tau: &[f64], ds: f64) -> Result<NewtonResult> {
    let n = p.n_eq();
    let x_old = p.to_active(u_old);
    let wtau = p.weighted(tau);
    let arc = |u: &[f64]| vecops::dot(&wtau, &vecops::sub(&p.to_active(u), &x_old)) - ds;
    newton(
        p,
        u_pred,
        |u| {
            let mut r = p.residual(u)?;
            r.push(arc(u));
            Ok(r)
        },
        |u, r| linsolve::bordered(&p.jacobian_with(u, &r[..n])?, &wtau),
        n + 1,
    )
}

/// Tangent at `u` from the Jacobian bordered with `border` (already weighted),
/// normalized in the weighted product.
pub fn tangent_bordered(p: &ProblemState, u: &[f64], border: &[f64]) -> Result<Vec<f64>> {
    let n = p.n_eq();
    let j = p.jacobian(u)?;
    let t = linsolve::blss(&j, border, 1.0, &vec![0.0; n])?;
    let nrm = vecops::dot(&t, &p.weighted(&t)).sqrt();
    if !(nrm > 0.0 && nrm.is_finite()) {
        return Err(Error::Singular("degenerate tangent".into()));
    }
    Ok(vecops::scale(1.0 / nrm, &t))
}

/// Tangent continuing the direction of `tau_old`.
pub fn tangent(p: &ProblemState, u: &[f64], tau_old: &[f64]) -> Result<Vec<f64>> {
    tangent_bordered(p, u, &p.weighted(tau_old))
}

/// Stepsize rule: halve on failure; grow by `dsincfac` when `iter < dsinciter`,
/// bounded by `dsmax` and by `|Δα| ≤ dlammax`. `None` means stop.
pub fn stepsize_update(p: &ProblemState, ds: f64, iter: usize, failed: bool, lamd: f64) -> Option<f64> {
    let nc = &p.nc;
    if failed {
        let new = ds / 2.0;
        return (new.abs() >= nc.dsmin).then_some(new);
    }
    if iter >= nc.dsinciter {
        return Some(ds);
    }
    let mut a = (ds.abs() * nc.dsincfac).min(nc.dsmax);
    if lamd.abs() > 0.0 {
        a = a.min(nc.dlammax / lamd.abs());
    }
    Some(ds.signum() * a.max(nc.dsmin))
}

/// Negative eigenvalue count of `∂uG` at `u` (within the `neig` window).
pub fn compute_ineg(p: &ProblemState, u: &[f64]) -> Result<i64> {
    let nv = p.nv();
    let gu = p.pde_jacobian(&u[..p.nu], &u[nv..])?;
    let sp = spectrum_near_zero(&gu, &p.ops.m, p.nc.neig)?;
    Ok(sp.ineg as i64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialKind {
    Bifurcation,
    Fold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Steps,
    DsMin,
    Window,
    Ntot,
    /// `findbif` found the requested number of points.
    Found,
}

#[derive(Clone, Debug)]
pub struct ContReport {
    pub steps: usize,
    pub stop: StopReason,
    /// `(ptype, count)` of located special points.
    pub special: Vec<(i8, usize)>,
    /// Located special points, in order.
    pub points: Vec<SpecialPoint>,
    /// Points hit at `usrlam` targets: `(target, u)`.
    pub hits: Vec<(f64, Vec<f64>)>,
}

#[derive(Clone, Debug)]
pub struct SpecialPoint {
    pub ptype: i8,
    pub count: usize,
    pub u: Vec<f64>,
    pub tau: Vec<f64>,
    pub ineg: i64,
}

impl SpecialPoint {
    /// Copy of `p` positioned at this point, as if loaded from its file.
    pub fn state(&self, p: &ProblemState) -> ProblemState {
        let mut q = p.clone();
        q.u = self.u.clone();
        q.tau = Some(self.tau.clone());
        q.sol.ptype = self.ptype;
        q.sol.ineg = self.ineg;
        q.sol.count = self.count;
        q.sol.lamd = self.tau[self.tau.len() - 1];
        if q.u_ref.is_some() {
            q.u_ref = Some(q.u[..q.nu].to_vec());
        }
        q
    }
}

/// A converged point with its tangent.
#[derive(Clone, Debug)]
pub struct Located {
    pub u: Vec<f64>,
    pub tau: Vec<f64>,
    pub ineg: i64,
    /// α-component of the tangent.
    pub lamd: f64,
    /// Corrector failed inside the bisection; `u` is the best bracket end.
    pub warn: bool,
    pub solves: usize,
}

/// Bisection between `(u0, τ0)` and the point reached with step `ds`.
///
/// Every trial point is corrected on the arclength hyperplane
/// `⟨τ0, x - x0⟩_W = s`; the bracket `[s_lo, s_hi]` halves until it is
/// shorter than `dsminbis` or `bisecmax` solves were done.
pub fn bisect_special_point(
    p: &ProblemState,
    left: (&[f64], &[f64], i64),
    right: (&[f64], &[f64], i64),
    ds: f64,
    kind: SpecialKind,
) -> Result<Located> {
    let (u0, tau0, ineg0) = left;
    let (u1, tau1, ineg1) = right;
    let x0 = p.to_active(u0);
    let x1 = p.to_active(u1);
    let indicator = |tau: &[f64], ineg: i64| -> i64 {
        match kind {
            SpecialKind::Bifurcation => ineg,
            SpecialKind::Fold => (tau[tau.len() - 1] > 0.0) as i64,
        }
    };
    let i0 = indicator(tau0, ineg0);
    let mut best = Located {
        u: u1.to_vec(),
        tau: tau1.to_vec(),
        ineg: ineg1,
        lamd: tau1[tau1.len() - 1],
        warn: false,
        solves: 0,
    };
    let (mut lo, mut hi) = (0.0f64, ds);
    let mut first = true;
    for _ in 0..p.nc.bisecmax {
        if (hi - lo).abs() < p.nc.dsminbis {
            break;
        }
        let s = 0.5 * (lo + hi);
        let t = s / ds;
        let xp: Vec<f64> = match p.sw.bifloc {
            BifLoc::Tangent => x0.iter().zip(tau0).map(|(a, b)| a + s * b).collect(),
            BifLoc::Secant => x0.iter().zip(&x1).map(|(a, b)| a + t * (b - a)).collect(),
            BifLoc::Quadratic => {
                // cubic Hermite through (x0, τ0) and (x1, τ1)
                let (h00, h10, h01, h11) = (
                    2.0 * t.powi(3) - 3.0 * t * t + 1.0,
                    t.powi(3) - 2.0 * t * t + t,
                    -2.0 * t.powi(3) + 3.0 * t * t,
                    t.powi(3) - t * t,
                );
                (0..x0.len())
                    .map(|i| h00 * x0[i] + h10 * ds * tau0[i] + h01 * x1[i] + h11 * ds * tau1[i])
                    .collect()
            }
        };
        let mut up = u0.to_vec();
        p.from_active(&mut up, &xp);
        let nr = nloopext(p, &up, u0, tau0, s)?;
        best.solves += 1;
        if !nr.converged {
            log::warn!("bisection corrector failed at s = {s:.3e}; keeping bracket end");
            best.warn = true;
            break;
        }
        let tau = tangent(p, &nr.u, tau0)?;
        let ineg = if kind == SpecialKind::Bifurcation {
            compute_ineg(p, &nr.u)?
        } else {
            -1
        };
        if indicator(&tau, ineg) == i0 {
            lo = s;
        } else {
            hi = s;
        }
        best = Located {
            lamd: tau[tau.len() - 1],
            u: nr.u,
            tau,
            ineg,
            warn: false,
            solves: best.solves,
        };
        first = false;
    }
    if first {
        best.warn = true;
    }
    if kind == SpecialKind::Fold && best.ineg < 0 && p.sw.spcalc {
        best.ineg = compute_ineg(p, &best.u)?;
    }
    Ok(best)
}

/// Makes the current point converged and its tangent available.
pub fn prepare_start(p: &mut ProblemState) -> Result<()> {
    p.nc.validate()?;
    if p.sol.xi == 0.0 {
        p.init_weights();
    }
    if p.tau.is_none() {
        let nr = nloop(p, &p.u)?;
        if !nr.converged {
            return Err(Error::NotConverged(format!(
                "initial point: residual {:.3e} after {} iterations",
                nr.res, nr.iter
            )));
        }
        p.u = nr.u;
        crate::switching::getinitau(p)?;
        p.sol.ds = p.nc.ds;
    }
    if p.sol.ds == 0.0 {
        p.sol.ds = p.nc.ds;
    }
    Ok(())
}

fn uses_phase(p: &ProblemState) -> bool {
    p.u_ref.is_some()
}

fn record_start(p: &mut ProblemState) -> Result<()> {
    if !p.branch.rows.is_empty() {
        return Ok(());
    }
    if p.sol.ineg < 0 && (p.sw.spcalc || p.sw.bifcheck) {
        p.sol.ineg = compute_ineg(p, &p.u)?;
    }
    let rec = p.record(&p.u, p.sol.ptype, p.sol.ineg, false)?;
    p.push_record(rec);
    let name = format!("pt{}", p.sol.count);
    io::save_current(p, &name)?;
    io::save_branch(p)?;
    Ok(())
}

/// Records a special point as its own branch entry and point file.
fn store_special(p: &mut ProblemState, loc: &Located, kind: SpecialKind) -> Result<usize> {
    p.sol.count += 1;
    let (code, name) = match kind {
        SpecialKind::Bifurcation => {
            p.sol.bcount += 1;
            (ptype::BIFURCATION, format!("bpt{}", p.sol.bcount))
        }
        SpecialKind::Fold => {
            p.sol.fcount += 1;
            (ptype::FOLD, format!("fpt{}", p.sol.fcount))
        }
    };
    let rec = p.record(&loc.u, code, loc.ineg, false)?;
    p.push_record(rec);
    io::save_point(p, &loc.u, Some(&loc.tau), code, loc.ineg, &name)?;
    log::info!(
        "{} at {} = {:.8}",
        if code == ptype::BIFURCATION { "bifurcation" } else { "fold" },
        p.branch.param_names.first().map(String::as_str).unwrap_or("α"),
        loc.u[p.nv() + p.ilam[0] - 1]
    );
    Ok(p.sol.count)
}

/// Solves at `α = target` from a linear interpolation between two points.
fn intercept(p: &ProblemState, u0: &[f64], u1: &[f64], target: f64) -> Result<Option<Vec<f64>>> {
    let ia = p.nv() + p.ilam[0] - 1;
    let (a0, a1) = (u0[ia], u1[ia]);
    let th = if a1 != a0 { (target - a0) / (a1 - a0) } else { 1.0 };
    let mut up: Vec<f64> = u0.iter().zip(u1).map(|(a, b)| a + th * (b - a)).collect();
    up[ia] = target;
    let nr = nloop(p, &up)?;
    if nr.converged {
        return Ok(Some(nr.u));
    }
    // the interpolant can excite a nearly neutral mode (e.g. a weakly pinned
    // front); the nearer endpoint is a solution up to the parameter shift
    let mut up = if th <= 0.5 { u0.to_vec() } else { u1.to_vec() };
    up[ia] = target;
    let nr = nloop(p, &up)?;
    Ok(nr.converged.then_some(nr.u))
}

/// Computes the points at `usrlam` targets strictly after the primary value
/// of `u0` up to and including `end`, in the direction of travel.
fn hit_targets(
    p: &mut ProblemState,
    (u0, u1): (&[f64], &[f64]),
    end: f64,
    tau1: &[f64],
    need_ineg: bool,
    report: &mut ContReport,
) -> Result<()> {
    let a0 = u0[p.nv() + p.ilam[0] - 1];
    let mut targets: Vec<f64> = p
        .usrlam
        .iter()
        .copied()
        .filter(|&t| if end >= a0 { t > a0 && t <= end } else { t < a0 && t >= end })
        .collect();
    targets.sort_by(f64::total_cmp);
    if end < a0 {
        targets.reverse();
    }
    for t in targets {
        match intercept(p, u0, u1, t)? {
            Some(ut) => {
                p.sol.count += 1;
                let ineg = if need_ineg { compute_ineg(p, &ut)? } else { -1 };
                let rec = p.record(&ut, ptype::REGULAR, ineg, true)?;
                p.push_record(rec);
                io::save_point(p, &ut, Some(tau1), ptype::REGULAR, ineg, &format!("pt{}", p.sol.count))?;
                report.hits.push((t, ut));
            }
            None => log::warn!("no convergence at target {t}"),
        }
    }
    Ok(())
}

/// Largest accepted weighted corrector distance, relative to `|ds|`.
pub const MAX_CORRECTION: f64 = 1.0;

/// One predictor-corrector step with retries. Returns the corrector result
/// and the ds actually used, or `None` when ds fell below dsmin.
pub fn step(p: &mut ProblemState) -> Result<Option<(NewtonResult, f64, bool)>> {
    let tau = p.tau.clone().ok_or_else(|| Error::domain("no tangent"))?;
    let x0 = p.to_active(&p.u);
    loop {
        let ds = p.sol.ds;
        let xp: Vec<f64> = x0.iter().zip(&tau).map(|(a, b)| a + ds * b).collect();
        let mut up = p.u.clone();
        p.from_active(&mut up, &xp);
        let lamd = tau[tau.len() - 1];
        let natural = match p.sw.para {
            Para::Natural => true,
            Para::Auto => lamd.abs() > p.nc.lamdtol,
            Para::Arclength => false,
        };
        let nr = if natural {
            nloop(p, &up)?
        } else {
            nloopext(p, &up, &p.u, &tau, ds)?
        };
        if nr.converged {
            // a corrector that moved farther than the step itself has
            // most likely jumped to another branch
            let dx = vecops::sub(&p.to_active(&nr.u), &xp);
            let dist = p.weighted_dot(&dx, &dx)?.sqrt();
            if dist <= MAX_CORRECTION * ds.abs() {
                return Ok(Some((nr, ds, !natural)));
            }
            log::debug!("corrector distance {dist:.3e} exceeds step {ds:.3e}; retrying");
        } else {
            log::debug!("corrector failed at ds = {ds:.3e} (res {:.3e})", nr.res);
        }
        match stepsize_update(p, ds, nr.iter, true, lamd) {
            Some(d) => p.sol.ds = d,
            None => return Ok(None),
        }
    }
}

/// An accepted continuation step: old and new point with their tangents.
pub struct Accepted<'a> {
    pub u_old: &'a [f64],
    pub tau_old: &'a [f64],
    pub u_new: &'a [f64],
    pub tau_new: &'a [f64],
    /// Step actually used.
    pub ds: f64,
    /// Corrected with the arclength equation (else natural parametrization).
    pub arclength: bool,
}

/// Observer of accepted steps (used by property tests).
pub trait StepObserver {
    fn accepted(&mut self, _p: &ProblemState, _step: &Accepted) {}
}

impl StepObserver for () {}

/// Continuation for up to `nsteps` steps.
pub fn cont(p: &mut ProblemState, nsteps: usize) -> Result<ContReport> {
    cont_observed(p, nsteps, &mut ())
}

pub fn cont_observed(p: &mut ProblemState, nsteps: usize, obs: &mut dyn StepObserver) -> Result<ContReport> {
    run(p, nsteps, None, obs)
}

/// Shared loop of [`cont`] and `findbif`: with `nbif = Some(n)` it stops after
/// `n` bifurcation points.
pub(crate) fn run(
    p: &mut ProblemState,
    nsteps: usize,
    nbif: Option<usize>,
    obs: &mut dyn StepObserver,
) -> Result<ContReport> {
    prepare_start(p)?;
    record_start(p)?;
    let mut report = ContReport {
        steps: 0,
        stop: StopReason::Steps,
        special: Vec::new(),
        points: Vec::new(),
        hits: Vec::new(),
    };
    let ia_of = |p: &ProblemState| p.nv() + p.ilam[0] - 1;
    let need_ineg = p.sw.spcalc || p.sw.bifcheck || nbif.is_some();
    for _ in 0..nsteps {
        if p.sol.count >= p.nc.ntot {
            report.stop = StopReason::Ntot;
            break;
        }
        let tau0 = p.tau.clone().expect("tangent prepared");
        let u0 = p.u.clone();
        let ineg0 = p.sol.ineg;
        let Some((nr, ds, arclength)) = step(p)? else {
            log::warn!("stepsize below dsmin; stopping");
            report.stop = StopReason::DsMin;
            break;
        };
        let u1 = nr.u;
        let tau1 = tangent(p, &u1, &tau0)?;
        let ineg1 = if need_ineg { compute_ineg(p, &u1)? } else { -1 };
        let a1 = u1[ia_of(p)];

        // window exit: stop at the bound
        let (lmin, lmax) = (p.nc.lammin, p.nc.lammax);
        if a1 < lmin || a1 > lmax {
            let bound = if a1 < lmin { lmin } else { lmax };
            hit_targets(p, (&u0, &u1), bound, &tau1, need_ineg, &mut report)?;
            if let Some(ub) = intercept(p, &u0, &u1, bound)? {
                p.sol.count += 1;
                let ineg = if need_ineg { compute_ineg(p, &ub)? } else { -1 };
                let rec = p.record(&ub, ptype::REGULAR, ineg, false)?;
                p.push_record(rec);
                io::save_point(p, &ub, Some(&tau1), ptype::REGULAR, ineg, &format!("pt{}", p.sol.count))?;
                p.u = ub;
                p.sol.ineg = ineg;
            }
            io::save_branch(p)?;
            report.stop = StopReason::Window;
            break;
        }

        let mut found_bif = false;
        if (p.sw.bifcheck || nbif.is_some()) && ineg0 >= 0 && ineg1 >= 0 && ineg0 != ineg1 {
            let loc = bisect_special_point(p, (&u0, &tau0, ineg0), (&u1, &tau1, ineg1), ds, SpecialKind::Bifurcation)?;
            let c = store_special(p, &loc, SpecialKind::Bifurcation)?;
            report.special.push((ptype::BIFURCATION, c));
            report.points.push(SpecialPoint { ptype: ptype::BIFURCATION, count: c, u: loc.u, tau: loc.tau, ineg: loc.ineg });
            found_bif = true;
        }
        let (l0, l1) = (tau0[tau0.len() - 1], tau1[tau1.len() - 1]);
        if p.sw.foldcheck && l0 * l1 < 0.0 {
            let loc = bisect_special_point(p, (&u0, &tau0, ineg0), (&u1, &tau1, ineg1), ds, SpecialKind::Fold)?;
            let c = store_special(p, &loc, SpecialKind::Fold)?;
            report.special.push((ptype::FOLD, c));
            report.points.push(SpecialPoint { ptype: ptype::FOLD, count: c, u: loc.u, tau: loc.tau, ineg: loc.ineg });
        }

        obs.accepted(
            p,
            &Accepted {
                u_old: &u0,
                tau_old: &tau0,
                u_new: &u1,
                tau_new: &tau1,
                ds,
                arclength,
            },
        );
        hit_targets(p, (&u0, &u1), a1, &tau1, need_ineg, &mut report)?;

        p.sol.count += 1;
        p.u = u1;
        p.tau = Some(tau1);
        p.sol.ineg = ineg1;
        p.sol.iter = nr.iter;
        p.sol.res = nr.res;
        p.sol.lamd = l1;
        p.sol.ptype = ptype::REGULAR;
        let rec = p.record(&p.u, ptype::REGULAR, ineg1, false)?;
        p.push_record(rec);
        io::save_current(p, &format!("pt{}", p.sol.count))?;
        io::save_branch(p)?;
        if uses_phase(p) {
            p.u_ref = Some(p.u[..p.nu].to_vec());
        }
        report.steps += 1;
        if let Some(d) = stepsize_update(p, ds, nr.iter, false, l1) {
            p.sol.ds = d;
        }
        if let Some(n) = nbif {
            let nfound = report.special.iter().filter(|s| s.0 == ptype::BIFURCATION).count();
            if found_bif && nfound >= n {
                report.stop = StopReason::Found;
                break;
            }
        }
    }
    Ok(report)
}
