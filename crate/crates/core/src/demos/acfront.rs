//! Bistable fronts `-Δu - s∂ₓu - λu(1 - u)(μ + u) = 0`, zero flux.

use std::sync::Arc;

use super::DemoConfig;
use crate::continuation::{self, ContReport};
use crate::error::{Error, Result};
use crate::fem::{BcSpec, CoeffTensors, Field};
use crate::problem::{ptype, AuxEq, Axis, Branch, Model, ProblemState};
use crate::switching;

/// Parameters `(λ, μ, s)`.
#[derive(Debug, Clone, Copy)]
pub struct AcFront;

pub const DEFAULT_PARAMS: [f64; 3] = [0.05, 1.0, 0.0];

impl Model for AcFront {
    fn name(&self) -> &'static str {
        "acfront"
    }
    fn neq(&self) -> usize {
        1
    }
    fn param_names(&self) -> Vec<String> {
        ["lam", "mu", "s"].map(String::from).to_vec()
    }
    fn bc(&self) -> BcSpec {
        BcSpec::neumann(1)
    }
    fn base_diffusion(&self) -> Field {
        Field::scalar(1.0).into_c(1)
    }
    fn base_advection(&self) -> Field {
        CoeffTensors::diagonal_advection(1, 1.0, 0.0)
    }
    fn operator_scales(&self, par: &[f64]) -> [f64; 2] {
        [1.0, par[2]]
    }
    fn f(&self, u: &[f64], par: &[f64]) -> Vec<f64> {
        let (lam, mu) = (par[0], par[1]);
        u.iter().map(|&u| lam * u * (1.0 - u) * (mu + u)).collect()
    }
    fn fu(&self, u: &[f64], par: &[f64]) -> Vec<f64> {
        // u(1-u)(μ+u) = μu + (1-μ)u² - u³
        let (lam, mu) = (par[0], par[1]);
        u.iter().map(|&u| lam * (mu + 2.0 * (1.0 - mu) * u - 3.0 * u * u)).collect()
    }
    fn fuu(&self, u: &[f64], par: &[f64]) -> Option<Vec<f64>> {
        let (lam, mu) = (par[0], par[1]);
        Some(u.iter().map(|&u| lam * (2.0 * (1.0 - mu) - 6.0 * u)).collect())
    }
}

/// Trivial state `u = 0`, primary parameter `λ`.
pub fn init(cfg: &DemoConfig) -> Result<ProblemState> {
    super::build(Arc::new(AcFront), cfg, &DEFAULT_PARAMS, |_| vec![0.0])
}

/// Speed of the front joining `-μ` and `1`.
pub fn front_speed(lam: f64, mu: f64) -> f64 {
    (lam / 2.0).sqrt() * (1.0 - mu)
}

/// Stage 1: first pitchfork of `u = 0`, then the bifurcating branch up to
/// `λ = lam_end`. Returns the state at `lam_end`.
pub fn stage1(p: &mut ProblemState, cfg: &DemoConfig) -> Result<ProblemState> {
    let lam_end = cfg.scenario("lam_end")?;
    let rep = switching::findbif(p, 1, 200)?;
    let bp = rep
        .points
        .iter()
        .find(|s| s.ptype == ptype::BIFURCATION)
        .ok_or_else(|| Error::NotConverged("no pitchfork on the trivial branch".into()))?;
    let mut q = bp.state(p);
    let ds = q.nc.ds;
    switching::swibra(&mut q, ds)?;
    q.sw.bifcheck = false;
    q.sw.spcalc = false;
    q.usrlam = vec![lam_end];
    q.nc.lammax = lam_end + 1.0;
    let rep: ContReport = continuation::cont(&mut q, 400)?;
    let (_, u) = rep
        .hits
        .iter()
        .find(|(t, _)| *t == lam_end)
        .ok_or_else(|| Error::NotConverged(format!("branch did not reach lam = {lam_end}")))?;
    let mut r = q;
    r.u = u.clone();
    r.tau = None;
    Ok(r)
}

/// Stage 2 setup: speed `s` free with an anchored x-phase condition,
/// continuation in `μ`.
pub fn stage2_setup(p: &mut ProblemState) -> Result<()> {
    p.aux = vec![AuxEq::Phase { axis: Axis::X, anchored: true }];
    p.u_ref = Some(p.u[..p.nu].to_vec());
    p.set_ilam(vec![2, 3])?;
    p.tau = None;
    p.sol.xi = 0.0;
    p.sol.ineg = -1;
    p.sol.ptype = ptype::INITIAL;
    p.sol.count = 0;
    p.sol.bcount = 0;
    p.sol.fcount = 0;
    p.branch = Branch::default();
    p.sw.bifcheck = false;
    p.sw.spcalc = false;
    Ok(())
}
