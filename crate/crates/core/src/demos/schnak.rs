//! Schnakenberg reaction-diffusion system
//! `-ρDΔU - s∂_yU - N(U, λ) - σ(u - 1/v)²(1, -1) = 0`, `D = diag(1, d)`,
//! `N = (-u + u²v, λ - u²v)`, zero flux.

use std::sync::Arc;

use super::DemoConfig;
use crate::error::{Error, Result};
use crate::fem::{BcSpec, CoeffTensors, Field};
use crate::periodic::BcPer;
use crate::problem::{ptype, AuxEq, Axis, Branch, Layout, Model, ProblemState};

/// Diffusion ratio of the inhibitor.
pub const D: f64 = 60.0;

/// Parameters `(λ, s, ρ, σ)`.
#[derive(Debug, Clone, Copy)]
pub struct Schnak;

pub const DEFAULT_PARAMS: [f64; 4] = [3.4, 0.0, 1.0, 0.0];

/// Critical wave number `√(√2 - 1)` of the Turing instability for `d = 60`.
pub fn kc() -> f64 {
    (2f64.sqrt() - 1.0).sqrt()
}

/// Turing point `λc = √(d(3 - 2√2))` for `σ = 0`, `ρ = 1`.
pub fn lambda_c() -> f64 {
    (D * (3.0 - 2.0 * 2f64.sqrt())).sqrt()
}

impl Model for Schnak {
    fn name(&self) -> &'static str {
        "schnak"
    }
    fn neq(&self) -> usize {
        2
    }
    fn param_names(&self) -> Vec<String> {
        ["lam", "s", "rho", "sig"].map(String::from).to_vec()
    }
    fn bc(&self) -> BcSpec {
        BcSpec::neumann(2)
    }
    fn base_diffusion(&self) -> Field {
        CoeffTensors::diagonal_diffusion(&[1.0, D])
    }
    fn base_advection(&self) -> Field {
        CoeffTensors::diagonal_advection(2, 0.0, 1.0)
    }
    fn operator_scales(&self, par: &[f64]) -> [f64; 2] {
        [par[2], par[1]]
    }
    fn f(&self, u: &[f64], par: &[f64]) -> Vec<f64> {
        let np = u.len() / 2;
        let (lam, sig) = (par[0], par[3]);
        let mut out = vec![0.0; 2 * np];
        for i in 0..np {
            let (a, b) = (u[i], u[np + i]);
            let w = a - 1.0 / b;
            let s = sig * w * w;
            out[i] = -a + a * a * b + s;
            out[np + i] = lam - a * a * b - s;
        }
        out
    }
    fn fu(&self, u: &[f64], par: &[f64]) -> Vec<f64> {
        let np = u.len() / 2;
        let sig = par[3];
        let mut out = vec![0.0; 4 * np];
        for i in 0..np {
            let (a, b) = (u[i], u[np + i]);
            let w = a - 1.0 / b;
            let (su, sv) = (2.0 * sig * w, 2.0 * sig * w / (b * b));
            let o = &mut out[4 * i..4 * i + 4];
            o[0] = -1.0 + 2.0 * a * b + su;
            o[1] = a * a + sv;
            o[2] = -2.0 * a * b - su;
            o[3] = -a * a - sv;
        }
        out
    }
    fn fuu(&self, u: &[f64], par: &[f64]) -> Option<Vec<f64>> {
        let np = u.len() / 2;
        let sig = par[3];
        let mut out = vec![0.0; 8 * np];
        for i in 0..np {
            let (a, b) = (u[i], u[np + i]);
            let w = a - 1.0 / b;
            let b2 = b * b;
            // second derivatives of the first row; the second row is its negative
            let uu = 2.0 * b + 2.0 * sig;
            let uv = 2.0 * a + 2.0 * sig / b2;
            let vv = 2.0 * sig * (1.0 / (b2 * b2) - 2.0 * w / (b2 * b));
            let o = &mut out[8 * i..8 * i + 8];
            o[..4].copy_from_slice(&[uu, uv, uv, vv]);
            o[4..].copy_from_slice(&[-uu, -uv, -uv, -vv]);
        }
        Some(out)
    }
}

/// Homogeneous state `(λ, 1/λ)`, primary parameter `λ`.
pub fn init(cfg: &DemoConfig) -> Result<ProblemState> {
    super::build(Arc::new(Schnak), cfg, &DEFAULT_PARAMS, |par| vec![par[0], 1.0 / par[0]])
}

/// Converts a zero-flux stripe state on a full y-period into the traveling
/// wave setting: y-periodic, speed `s` free with a y-phase condition,
/// continuation in `ρ` (`ilam = [3, 2]`).
pub fn travel_setup(p: &mut ProblemState) -> Result<()> {
    if p.model.name() != "schnak" || p.layout != Layout::Normal || !p.aux.is_empty() {
        return Err(Error::domain("travel setup needs a normal schnak state without constraints"));
    }
    let full = p.full_pde(&p.u[..p.nu])?;
    let par = p.params().to_vec();
    p.sw.bcper = BcPer::TopBottom;
    p.rebuild_ops()?;
    let mut u = p.ops.per.restrict_vector(&full)?;
    p.nu = u.len();
    p.u_ref = Some(u.clone());
    u.extend(par);
    p.u = u;
    p.aux = vec![AuxEq::Phase { axis: Axis::Y, anchored: true }];
    p.set_ilam(vec![3, 2])?;
    p.tau = None;
    p.sol.xi = 0.0;
    p.sol.ineg = -1;
    p.sol.ptype = ptype::INITIAL;
    p.branch = Branch::default();
    Ok(())
}
