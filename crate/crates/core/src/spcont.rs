//! Continuation of fold and branch points in two parameters.
//!
//! The extended unknown is `(u, φ, w)` and the system is
//! `H = (G, ∂uG·φ, φᵀMφ - 1, q)`; continuation and the Jacobian layout are
//! handled by the problem layer once the layout is switched.

use crate::error::{Error, Result};
use crate::linsolve::spectrum_near_zero;
use crate::problem::{ptype, Branch, Layout, ProblemState, SpMode};
use crate::sparse::vecops;

/// Largest `|μ|` accepted as "near zero" when entering the extended system.
pub const KERNEL_TOL: f64 = 1e-2;

/// Switches a fold (ptype 2) or branch point (ptype 1) to the extended layout
/// with `extra` (1-based) as additional free parameter.
pub fn spcontini(p: &mut ProblemState, extra: usize) -> Result<()> {
    if p.layout != Layout::Normal {
        return Err(Error::domain("state is already extended"));
    }
    if extra == 0 || extra > p.naux() || p.ilam.contains(&extra) {
        return Err(Error::domain(format!("extra parameter {extra} is invalid or already active")));
    }
    let mode = match p.sol.ptype {
        ptype::BIFURCATION => SpMode::BranchPoint,
        _ => SpMode::Fold,
    };
    let nu = p.nu;
    let gu = p.pde_jacobian(&p.u[..nu], p.params())?;
    let sp = spectrum_near_zero(&gu, &p.ops.m, 4.min(nu))?;
    let (mu, mut phi) = sp
        .smallest_real_vector()
        .ok_or_else(|| Error::Singular("no eigenvector".into()))?;
    if mu.abs() > KERNEL_TOL {
        return Err(Error::domain(format!(
            "smallest eigenvalue {mu:.3e} is not near zero; not a fold or branch point"
        )));
    }
    let n2 = vecops::dot(&phi, &p.ops.m.matvec(&phi));
    phi.iter_mut().for_each(|v| *v /= n2.sqrt());
    let par = p.params().to_vec();
    let mut u = p.u[..nu].to_vec();
    u.extend(phi);
    u.extend(par);
    let mut ilam = p.ilam.clone();
    ilam.push(extra);
    p.u = u;
    p.layout = Layout::Extended;
    p.sw.spcont = mode;
    // the stability index of the extended system carries no information
    p.sw.bifcheck = false;
    p.sw.spcalc = false;
    p.set_ilam(ilam)?;
    p.sol.ptype = ptype::INITIAL;
    p.sol.xi = 0.0;
    p.sol.ineg = -1;
    p.sol.count = 0;
    p.sol.bcount = 0;
    p.sol.fcount = 0;
    p.branch = Branch::default();
    Ok(())
}

/// `φ` of an extended state.
pub fn phi(p: &ProblemState) -> Result<&[f64]> {
    if p.layout != Layout::Extended {
        return Err(Error::domain("state is not extended"));
    }
    Ok(&p.u[p.nu..2 * p.nu])
}

/// Drops `φ` and returns to the normal layout with `primary` (1-based) as
/// primary parameter. The auxiliary active variables are kept.
pub fn spcontexit(p: &mut ProblemState, primary: usize) -> Result<()> {
    if p.layout != Layout::Extended {
        return Err(Error::domain("state is not extended"));
    }
    let nu = p.nu;
    let mut u = p.u[..nu].to_vec();
    u.extend_from_slice(&p.u[2 * nu..]);
    let k = p.ilam.len();
    let mut ilam = vec![primary];
    ilam.extend(p.ilam[1..k - 1].iter().copied().filter(|&i| i != primary));
    if ilam.len() != p.nq() + 1 {
        // the primary replaced one of the auxiliary active variables
        ilam.push(p.ilam[k - 1]);
    }
    p.u = u;
    p.layout = Layout::Normal;
    p.sw.spcont = SpMode::Normal;
    p.set_ilam(ilam)?;
    p.sol.ptype = ptype::INITIAL;
    p.sol.xi = 0.0;
    p.sol.ineg = -1;
    p.branch = Branch::default();
    Ok(())
}
