//! Tangent initialization, branch switching and bifurcation search.

use crate::continuation::{self, ContReport, StepObserver};
use crate::error::{Error, Result};
use crate::linsolve::{self, spectrum_near_zero};
use crate::problem::{ptype, Branch, ProblemState};
use crate::sparse::{vecops, SpMat};

/// Tangent from one bordered solve with the unit vector in the α slot,
/// normalized in the weighted product (`α̇ > 0`).
pub fn getinitau(p: &mut ProblemState) -> Result<()> {
    if p.sol.xi == 0.0 {
        p.init_weights();
    }
    let n = p.n_eq();
    let mut e = vec![0.0; n + 1];
    e[n] = 1.0;
    let tau = continuation::tangent_bordered(p, &p.u, &e)?;
    p.sol.lamd = tau[n];
    p.tau = Some(tau);
    Ok(())
}

/// Largest accepted `|μ₀|/|μ₂|` of the bordered Jacobian in [`swibra`].
pub const KERNEL_GAP: f64 = 1e-2;

/// Result of the kernel computation at a bifurcation point.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub psi: Vec<f64>,
    /// The three smallest eigenvalue magnitudes of the bordered matrix.
    pub mu: [f64; 3],
    pub scale: f64,
}

/// The bordered Jacobian `[J; (Wτ)ᵀ]` at the current point.
pub fn bordered_jacobian(p: &ProblemState, tau: &[f64]) -> Result<SpMat> {
    let j = p.jacobian(&p.u)?;
    linsolve::bordered(&j, &p.weighted(tau))
}

/// Kernel direction at a bifurcation point, orthogonal to `tau` in the
/// weighted product.
pub fn kernel_direction(p: &ProblemState, tau: &[f64]) -> Result<Kernel> {
    let a = bordered_jacobian(p, tau)?;
    let n = a.nrows();
    let sp = spectrum_near_zero(&a, &SpMat::identity(n), 4.min(n))?;
    let (_, mut psi) = sp
        .smallest_real_vector()
        .ok_or_else(|| Error::Singular("no kernel vector".into()))?;
    let mu: Vec<f64> = sp.values.iter().map(|z| z.norm()).collect();
    let at = |i: usize| mu.get(i).copied().unwrap_or(f64::INFINITY);
    let mu = [at(0), at(1), at(2)];
    if mu[1] <= 10.0 * mu[0] {
        log::warn!("nearly double kernel ({:.3e}, {:.3e}); using the smallest", mu[0], mu[1]);
    }
    let tt = p.weighted_dot(tau, tau)?;
    let pt = p.weighted_dot(&psi, tau)?;
    vecops::axpy(-pt / tt, tau, &mut psi);
    let nrm = p.weighted_dot(&psi, &psi)?.sqrt();
    if !(nrm > 0.0) {
        return Err(Error::Singular("kernel vector parallel to the tangent".into()));
    }
    psi.iter_mut().for_each(|v| *v /= nrm);
    // deterministic sign: largest entry positive
    let imax = (0..psi.len())
        .max_by(|&i, &j| psi[i].abs().total_cmp(&psi[j].abs()))
        .unwrap_or(0);
    if psi[imax] < 0.0 {
        psi.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(Kernel { psi, mu, scale: sp.scale })
}

/// Prepares branch switching at a bifurcation point: the new tangent is the
/// kernel direction, the first step uses `ds`.
pub fn swibra(p: &mut ProblemState, ds: f64) -> Result<Kernel> {
    if p.sol.ptype != ptype::BIFURCATION {
        log::warn!("swibra at a point of type {}", p.sol.ptype);
    }
    if p.sol.xi == 0.0 {
        p.init_weights();
    }
    let tau = match p.tau.clone() {
        Some(t) => t,
        None => {
            getinitau(p)?;
            p.tau.clone().expect("tangent installed")
        }
    };
    let k = kernel_direction(p, &tau)?;
    // at a bifurcation point the bordered Jacobian is numerically singular:
    // its smallest eigenvalue is well separated from the rest of the
    // spectrum (the third one, so that double kernels pass)
    if k.mu[0] > KERNEL_GAP * k.mu[2] {
        return Err(Error::domain(format!(
            "bordered Jacobian not singular (|μ| = {:.3e}, {:.3e}, {:.3e}); not a bifurcation point",
            k.mu[0], k.mu[1], k.mu[2]
        )));
    }
    p.tau = Some(k.psi.clone());
    p.sol.lamd = k.psi[k.psi.len() - 1];
    p.sol.ds = ds;
    p.nc.ds = ds;
    p.sol.ptype = ptype::SWIBRA;
    p.sol.ineg = -1;
    p.sol.count = 0;
    p.sol.bcount = 0;
    p.sol.fcount = 0;
    p.branch = Branch::default();
    Ok(k)
}

/// Steps along the branch until `nbif` bifurcation points were located
/// (by change of the stability index), the window is left or `nsteps` is used up.
pub fn findbif(p: &mut ProblemState, nbif: usize, nsteps: usize) -> Result<ContReport> {
    findbif_observed(p, nbif, nsteps, &mut ())
}

pub fn findbif_observed(
    p: &mut ProblemState,
    nbif: usize,
    nsteps: usize,
    obs: &mut dyn StepObserver,
) -> Result<ContReport> {
    if nbif == 0 {
        return Err(Error::domain("findbif needs nbif >= 1"));
    }
    continuation::run(p, nsteps, Some(nbif), obs)
}
