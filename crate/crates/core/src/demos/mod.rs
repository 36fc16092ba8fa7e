//! Demo problems, registered by name.
//!
//! Mesh, parameters and scenario values come from TOML configs; the
//! defaults are embedded at compile time.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mesh::{Geometry, MeshSpec};
use crate::problem::{Model, ProblemState};

pub mod acfold;
pub mod acfront;
pub mod bratu;
pub mod nlbc;
pub mod schnak;

pub const NAMES: [&str; 5] = ["acfold", "schnak", "bratu", "nlbc", "acfront"];

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshCfg {
    #[serde(default = "rect")]
    pub geometry: String,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

fn rect() -> String {
    "rect".into()
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsCfg {
    pub ds: Option<f64>,
    pub dsmin: Option<f64>,
    pub dsmax: Option<f64>,
    pub neig: Option<usize>,
    pub nsteps: Option<usize>,
    pub lammin: Option<f64>,
    pub lammax: Option<f64>,
    pub dlammax: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchesCfg {
    pub sfem: Option<bool>,
    pub bifcheck: Option<bool>,
    pub foldcheck: Option<bool>,
    pub spcalc: Option<bool>,
}

/// Demo configuration; unknown keys are rejected.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub mesh: MeshCfg,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub ilam: Option<Vec<usize>>,
    #[serde(default)]
    pub usrlam: Vec<f64>,
    #[serde(default)]
    pub controls: ControlsCfg,
    #[serde(default)]
    pub switches: SwitchesCfg,
    /// Demo-specific scenario values.
    #[serde(default)]
    pub scenario: BTreeMap<String, f64>,
}

impl DemoConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format(format!("demo config: {e}")))
    }

    /// Embedded default for `name`.
    pub fn default_for(name: &str) -> Result<Self> {
        let text = match name {
            "acfold" => include_str!("../../configs/acfold.toml"),
            "schnak" => include_str!("../../configs/schnak.toml"),
            "bratu" => include_str!("../../configs/bratu.toml"),
            "nlbc" => include_str!("../../configs/nlbc.toml"),
            "acfront" => include_str!("../../configs/acfront.toml"),
            _ => return Err(Error::UnknownDemo(name.to_string())),
        };
        Self::parse(text)
    }

    pub fn mesh_spec(&self) -> Result<MeshSpec> {
        let m = &self.mesh;
        Ok(MeshSpec {
            geometry: Geometry::parse(&m.geometry)?,
            lx: m.lx,
            ly: m.ly,
            nx: m.nx,
            ny: m.ny,
        })
    }

    /// Parameter vector in model order; config entries override `defaults`.
    pub fn param_vector(&self, model: &dyn Model, defaults: &[f64]) -> Result<Vec<f64>> {
        let names = model.param_names();
        for k in self.params.keys() {
            if !names.contains(k) {
                return Err(Error::domain(format!("{} has no parameter `{k}`", model.name())));
            }
        }
        Ok(names
            .iter()
            .zip(defaults)
            .map(|(n, d)| self.params.get(n).copied().unwrap_or(*d))
            .collect())
    }

    pub fn scenario(&self, key: &str) -> Result<f64> {
        self.scenario
            .get(key)
            .copied()
            .ok_or_else(|| Error::domain(format!("scenario value `{key}` missing from config")))
    }

    /// Sets a parameter by name (`k=v` style overrides).
    pub fn set_param(&mut self, key: &str, v: f64) {
        self.params.insert(key.to_string(), v);
    }

    /// Copies controls, switches and `usrlam` into `p`.
    pub fn apply(&self, p: &mut ProblemState) -> Result<()> {
        let c = &self.controls;
        let nc = &mut p.nc;
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = c.$f { nc.$f = v; } )* };
        }
        set!(ds, dsmin, dsmax, neig, nsteps, lammin, lammax, dlammax, tol);
        let s = &self.switches;
        let sw = &mut p.sw;
        macro_rules! setb {
            ($($f:ident),*) => { $( if let Some(v) = s.$f { sw.$f = v; } )* };
        }
        setb!(sfem, bifcheck, foldcheck, spcalc);
        p.nc.validate()?;
        p.usrlam = self.usrlam.clone();
        if let Some(ilam) = &self.ilam {
            p.set_ilam(ilam.clone())?;
        }
        Ok(())
    }
}

/// Model registered under `name`, with default model constants.
pub fn model_by_name(name: &str) -> Result<Arc<dyn Model>> {
    Ok(match name {
        "acfold" => Arc::new(acfold::AcFold),
        "schnak" => Arc::new(schnak::Schnak),
        "bratu" => Arc::new(bratu::Bratu),
        "nlbc" => Arc::new(nlbc::Nlbc),
        "acfront" => Arc::new(acfront::AcFront),
        _ => return Err(Error::UnknownDemo(name.to_string())),
    })
}

/// Initial state of demo `name` built from `cfg`.
pub fn init(name: &str, cfg: &DemoConfig) -> Result<ProblemState> {
    match name {
        "acfold" => acfold::init(cfg),
        "schnak" => schnak::init(cfg),
        "bratu" => bratu::init(cfg),
        "nlbc" => nlbc::init(cfg),
        "acfront" => acfront::init(cfg),
        _ => Err(Error::UnknownDemo(name.to_string())),
    }
}

/// Initial state of demo `name` with its embedded config.
pub fn init_default(name: &str) -> Result<ProblemState> {
    init(name, &DemoConfig::default_for(name)?)
}

/// Max-entry differences of the analytic Jacobian and, when the model
/// provides `f_uu`, of `∂u(∂uG·φ)` against finite differences.
///
/// Both are evaluated at a deterministic smooth perturbation of the current
/// state, with a smooth `φ`.
pub fn check(p: &ProblemState) -> Result<(f64, Option<f64>)> {
    let mut q = p.clone();
    let nu = q.nu;
    for (i, v) in q.u[..nu].iter_mut().enumerate() {
        *v += 0.2 * (0.7 * i as f64).sin();
    }
    let jac = crate::problem::jaccheck(&q)?;
    let has_fuu = q.model.fuu(&q.u[..nu], q.params()).is_some();
    let sp = if has_fuu {
        let phi: Vec<f64> = (0..nu).map(|i| (1.3 * i as f64).cos()).collect();
        Some(q.spjac_check(&phi)?)
    } else {
        None
    };
    Ok((jac, sp))
}

/// Shared construction: constant initial field `u0` per component.
pub(crate) fn build(
    model: Arc<dyn Model>,
    cfg: &DemoConfig,
    defaults: &[f64],
    u0: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<ProblemState> {
    let spec = cfg.mesh_spec()?;
    let par = cfg.param_vector(model.as_ref(), defaults)?;
    let np = spec.build()?.np();
    let c = u0(&par);
    let mut u = Vec::with_capacity(np * c.len());
    for v in &c {
        u.extend(std::iter::repeat_n(*v, np));
    }
    let mut p = ProblemState::new(model, spec, Default::default(), &u, par, vec![1], vec![])?;
    cfg.apply(&mut p)?;
    Ok(p)
}
