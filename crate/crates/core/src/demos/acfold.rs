//! Cubic-quintic Allen-Cahn `-cΔu - λu - u³ + γu⁵ = 0`, zero Dirichlet data.

use std::sync::Arc;

use super::DemoConfig;
use crate::error::Result;
use crate::fem::{BcSpec, Field};
use crate::problem::{Model, ProblemState};

/// Parameters `(λ, c, γ)`.
#[derive(Debug, Clone, Copy)]
pub struct AcFold;

pub const DEFAULT_PARAMS: [f64; 3] = [1.0, 0.25, 1.0];

impl Model for AcFold {
    fn name(&self) -> &'static str {
        "acfold"
    }
    fn neq(&self) -> usize {
        1
    }
    fn param_names(&self) -> Vec<String> {
        ["lam", "c", "gam"].map(String::from).to_vec()
    }
    fn bc(&self) -> BcSpec {
        BcSpec::zero_dirichlet(1)
    }
    fn base_diffusion(&self) -> Field {
        Field::scalar(1.0).into_c(1)
    }
    fn operator_scales(&self, par: &[f64]) -> [f64; 2] {
        [par[1], 0.0]
    }
    fn f(&self, u: &[f64], par: &[f64]) -> Vec<f64> {
        let (lam, gam) = (par[0], par[2]);
        u.iter().map(|&u| lam * u + u.powi(3) - gam * u.powi(5)).collect()
    }
    fn fu(&self, u: &[f64], par: &[f64]) -> Vec<f64> {
        let (lam, gam) = (par[0], par[2]);
        u.iter().map(|&u| lam + 3.0 * u * u - 5.0 * gam * u.powi(4)).collect()
    }
    fn fuu(&self, u: &[f64], par: &[f64]) -> Option<Vec<f64>> {
        Some(u.iter().map(|&u| 6.0 * u - 20.0 * par[2] * u.powi(3)).collect())
    }
}

/// Trivial state `u = 0`, primary parameter `λ`.
pub fn init(cfg: &DemoConfig) -> Result<ProblemState> {
    super::build(Arc::new(AcFold), cfg, &DEFAULT_PARAMS, |_| vec![0.0])
}

/// Closed-form Dirichlet eigenvalue `c((kπ/2lx)² + (lπ/2ly)²)` of `-cΔ`.
pub fn dirichlet_eigenvalue(c: f64, lx: f64, ly: f64, k: usize, l: usize) -> f64 {
    let pi = std::f64::consts::PI;
    c * ((k as f64 * pi / (2.0 * lx)).powi(2) + (l as f64 * pi / (2.0 * ly)).powi(2))
}
