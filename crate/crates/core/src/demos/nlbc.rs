//! Laplace equation with the nonlinear boundary condition
//! `∂ₙu + λ(0.5 + x + y)u(1 - u) = 0` on the unit disk.

use std::sync::Arc;

use super::DemoConfig;
use crate::error::Result;
use crate::fem::{BcPoint, BcSpec, BcValues, Field, SegmentBc};
use crate::problem::{Model, ProblemState};

/// Parameter `λ`.
#[derive(Debug, Clone, Copy)]
pub struct Nlbc;

pub const DEFAULT_PARAMS: [f64; 1] = [0.1];

impl Model for Nlbc {
    fn name(&self) -> &'static str {
        "nlbc"
    }
    fn neq(&self) -> usize {
        1
    }
    fn param_names(&self) -> Vec<String> {
        vec!["lam".into()]
    }
    fn bc(&self) -> BcSpec {
        // q = λw(1-u), g = 0, w = 0.5 + x + y
        BcSpec::uniform(
            1,
            SegmentBc::Robin(Arc::new(|pt: &BcPoint| {
                let w = pt.par[0] * (0.5 + pt.x + pt.y);
                BcValues {
                    q: vec![w * (1.0 - pt.u[0])],
                    g: vec![0.0],
                    dq: Some(vec![-w]),
                    dg: None,
                }
            })),
        )
    }
    fn base_diffusion(&self) -> Field {
        Field::scalar(1.0).into_c(1)
    }
    fn f(&self, u: &[f64], _par: &[f64]) -> Vec<f64> {
        vec![0.0; u.len()]
    }
    fn fu(&self, u: &[f64], _par: &[f64]) -> Vec<f64> {
        vec![0.0; u.len()]
    }
}

/// Trivial state `u = 0`.
pub fn init(cfg: &DemoConfig) -> Result<ProblemState> {
    super::build(Arc::new(Nlbc), cfg, &DEFAULT_PARAMS, |_| vec![0.0])
}
