//! Bratu-type problem `-Δu + κ(u - λeᵘ) = 0` with zero flux.

use std::sync::Arc;

use super::DemoConfig;
use crate::error::Result;
use crate::fem::{BcSpec, Field};
use crate::problem::{Model, ProblemState};

/// Parameters `(λ, κ)`.
#[derive(Debug, Clone, Copy)]
pub struct Bratu;

pub const DEFAULT_PARAMS: [f64; 2] = [0.0, 10.0];

impl Model for Bratu {
    fn name(&self) -> &'static str {
        "bratu"
    }
    fn neq(&self) -> usize {
        1
    }
    fn param_names(&self) -> Vec<String> {
        ["lam", "kappa"].map(String::from).to_vec()
    }
    fn bc(&self) -> BcSpec {
        BcSpec::neumann(1)
    }
    fn base_diffusion(&self) -> Field {
        Field::scalar(1.0).into_c(1)
    }
    fn f(&self, u: &[f64], par: &[f64]) -> Vec<f64> {
        u.iter().map(|&u| -par[1] * (u - par[0] * u.exp())).collect()
    }
    fn fu(&self, u: &[f64], par: &[f64]) -> Vec<f64> {
        u.iter().map(|&u| -par[1] * (1.0 - par[0] * u.exp())).collect()
    }
    fn fuu(&self, u: &[f64], par: &[f64]) -> Option<Vec<f64>> {
        Some(u.iter().map(|&u| par[1] * par[0] * u.exp()).collect())
    }
}

/// Constant state solving `u = λeᵘ` on the lower branch (`u = 0` at `λ = 0`).
pub fn init(cfg: &DemoConfig) -> Result<ProblemState> {
    super::build(Arc::new(Bratu), cfg, &DEFAULT_PARAMS, |par| vec![lower_constant(par[0])])
}

/// Lower root of `u = λeᵘ` for `0 <= λ < 1/e` (fixed-point iteration).
pub fn lower_constant(lam: f64) -> f64 {
    let mut u = 0.0;
    for _ in 0..200 {
        u = lam * f64::exp(u);
    }
    u
}
