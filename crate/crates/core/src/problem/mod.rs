//! Problem definition: unknown vector `U = (u, w)`, parameters, auxiliary
//! equations, and residual/Jacobian dispatch.
//!
//! A PDE has the form `G(u) = L(par)·u + boundary(u) - M·f(u, par)` where
//! `L = a(par)·K + b(par)·Kadv`. The full path assembles the same operator
//! from per-triangle tensors at `fill·u`; the semilinear path reuses the
//! cached, periodized matrices.

mod eval;
pub mod fdjac;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{assemble_boundary, assemble_interior, assemble_mass, BcSpec, BoundaryOps, CoeffTensors, Field};
use crate::mesh::{Mesh, MeshSpec};
use crate::periodic::{build_periodization, BcPer, Periodization};
use crate::sparse::{vecops, SpMat};

pub use eval::jaccheck;
pub use fdjac::Coloring;

/// Numerical controls.
#[derive(Clone, Debug, PartialEq)]
pub struct Controls {
    pub tol: f64,
    pub imax: usize,
    /// Finite-difference step.
    pub del: f64,
    pub ds: f64,
    pub dsmin: f64,
    pub dsmax: f64,
    pub dsinciter: usize,
    pub dsincfac: f64,
    pub dlammax: f64,
    pub lamdtol: f64,
    pub dsminbis: f64,
    pub bisecmax: usize,
    pub nsteps: usize,
    pub ntot: usize,
    pub neig: usize,
    pub lammin: f64,
    pub lammax: f64,
    /// Weight of the PDE part of the arclength product; `None` means `1/nv`.
    pub xi: Option<f64>,
    pub xiq: Option<f64>,
    pub stiff_spring: f64,
}

impl Default for Controls {
    fn default() -> Self {
        let imax = 10;
        Self {
            tol: 1e-10,
            imax,
            del: 1e-8,
            ds: 0.01,
            dsmin: 1e-6,
            dsmax: 0.1,
            dsinciter: imax / 2,
            dsincfac: 2.0,
            dlammax: 1.0,
            lamdtol: 0.5,
            dsminbis: 1e-9,
            bisecmax: 10,
            nsteps: 10,
            ntot: 10000,
            neig: 50,
            lammin: -1e6,
            lammax: 1e6,
            xi: None,
            xiq: None,
            stiff_spring: crate::fem::DEFAULT_STIFF_SPRING,
        }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.del > 0.0
            && self.dsmin > 0.0
            && self.dsmin <= self.dsmax
            && self.ds.abs() >= self.dsmin
            && self.ds.abs() <= self.dsmax
            && self.imax > 0
            && self.bisecmax > 0
            && self.ntot > 0
            && self.neig > 0
            && self.dsincfac >= 1.0
            && self.lammin < self.lammax;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("inconsistent controls: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Para {
    Natural = 0,
    #[default]
    Auto = 1,
    Arclength = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpMode {
    #[default]
    Normal = 0,
    BranchPoint = 1,
    Fold = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BifLoc {
    Tangent = 0,
    Secant = 1,
    #[default]
    Quadratic = 2,
}

impl Para {
    pub fn from_code(c: i64) -> Result<Self> {
        match c {
            0 => Ok(Para::Natural),
            1 => Ok(Para::Auto),
            2 => Ok(Para::Arclength),
            _ => Err(Error::domain(format!("para must be 0..=2, got {c}"))),
        }
    }
}

impl SpMode {
    pub fn from_code(c: i64) -> Result<Self> {
        match c {
            0 => Ok(SpMode::Normal),
            1 => Ok(SpMode::BranchPoint),
            2 => Ok(SpMode::Fold),
            _ => Err(Error::domain(format!("spcont must be 0..=2, got {c}"))),
        }
    }
}

impl BifLoc {
    pub fn from_code(c: i64) -> Result<Self> {
        match c {
            0 => Ok(BifLoc::Tangent),
            1 => Ok(BifLoc::Secant),
            2 => Ok(BifLoc::Quadratic),
            _ => Err(Error::domain(format!("bifloc must be 0..=2, got {c}"))),
        }
    }
}

/// Algorithm switches.
#[derive(Clone, Debug, PartialEq)]
pub struct Switches {
    pub bifcheck: bool,
    pub foldcheck: bool,
    pub spcalc: bool,
    /// Analytic `∂uG` (otherwise colored forward differences).
    pub jac: bool,
    pub qjac: bool,
    pub spjac: bool,
    /// Semilinear path.
    pub sfem: bool,
    pub para: Para,
    pub bifloc: BifLoc,
    pub bcper: BcPer,
    pub spcont: SpMode,
    /// Chord iteration (Jacobian frozen at entry).
    pub newt: bool,
    /// Residual norm exponent; `f64::INFINITY` for the max norm.
    pub norm: f64,
}

impl Default for Switches {
    fn default() -> Self {
        Self {
            bifcheck: true,
            foldcheck: false,
            spcalc: true,
            jac: true,
            qjac: true,
            spjac: true,
            sfem: false,
            para: Para::Auto,
            bifloc: BifLoc::Quadratic,
            bcper: BcPer::None,
            spcont: SpMode::Normal,
            newt: false,
            norm: f64::INFINITY,
        }
    }
}

impl Switches {
    pub fn residual_norm(&self, r: &[f64]) -> f64 {
        if self.norm.is_infinite() {
            vecops::norm_inf(r)
        } else {
            r.iter().map(|v| v.abs().powf(self.norm)).sum::<f64>().powf(1.0 / self.norm)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Auxiliary scalar equation `q_i(U) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum AuxEq {
    /// `∫ u_component dx - par[target]` (1-based `target`).
    Mass { component: usize, target: usize },
    /// `⟨∂ u_ref, u - u_ref⟩_M`, or `⟨∂ u_ref, u⟩_M` when `anchored` is false.
    Phase { axis: Axis, anchored: bool },
}

/// Pre-assembled operators; rebuilt from the mesh and never serialized.
#[derive(Clone, Debug)]
pub struct OperatorCache {
    pub per: Periodization,
    /// Periodized, block-diagonal over components.
    pub m: SpMat,
    pub k: SpMat,
    pub kadv: SpMat,
    /// Discrete `-M∂x`, `-M∂y` on every component.
    pub dx: SpMat,
    pub dy: SpMat,
    /// Boundary `Q`, `Gb` when independent of `u` (periodized).
    pub bnd: Option<BoundaryOps>,
    pub bc: BcSpec,
    pub coloring: Coloring,
}

/// A PDE system in the semilinear form described in the module docs.
pub trait Model: Send + Sync + fmt::Debug {
    /// Registry name.
    fn name(&self) -> &'static str;
    fn neq(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    fn bc(&self) -> BcSpec;
    /// Diffusion tensor of the cached `K`.
    fn base_diffusion(&self) -> Field;
    /// Advection tensor of the cached `Kadv`.
    fn base_advection(&self) -> Field {
        Field::zero(2 * self.neq() * self.neq())
    }
    /// `(a, b)` with `L(par) = a·K + b·Kadv`.
    fn operator_scales(&self, _par: &[f64]) -> [f64; 2] {
        [1.0, 0.0]
    }
    /// Nodal nonlinearity, component-blocked like `u`.
    fn f(&self, u: &[f64], par: &[f64]) -> Vec<f64>;
    /// `∂f_k/∂u_l`, node-major (`node·neq² + k·neq + l`).
    fn fu(&self, u: &[f64], par: &[f64]) -> Vec<f64>;
    /// `∂²f_k/∂u_l∂u_m`, node-major (`node·neq³ + (k·neq + l)·neq + m`).
    fn fuu(&self, _u: &[f64], _par: &[f64]) -> Option<Vec<f64>> {
        None
    }
    /// Full-path tensors at the full-mesh state `u`.
    fn coefficients(&self, _mesh: &Mesh, u: &[f64], par: &[f64]) -> Result<CoeffTensors> {
        let [a, b] = self.operator_scales(par);
        let neq = self.neq();
        Ok(CoeffTensors {
            c: scale_field(self.base_diffusion(), a),
            a: Field::zero(neq * neq),
            b: scale_field(self.base_advection(), b),
            f: Field::Nodal(self.f(u, par)),
        })
    }
    /// Full-path Jacobian tensors (`f` ignored).
    fn jac_coefficients(&self, _mesh: &Mesh, u: &[f64], par: &[f64]) -> Result<CoeffTensors> {
        let [a, b] = self.operator_scales(par);
        let neq = self.neq();
        Ok(CoeffTensors {
            c: scale_field(self.base_diffusion(), a),
            a: Field::Nodal(self.fu(u, par).into_iter().map(|v| -v).collect()),
            b: scale_field(self.base_advection(), b),
            f: Field::zero(neq),
        })
    }
    fn user_columns(&self) -> Vec<String> {
        Vec::new()
    }
    /// Extra branch columns, evaluated at the full-mesh state.
    fn outfu(&self, _mesh: &Mesh, _u: &[f64], _par: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

pub(crate) fn scale_field(f: Field, s: f64) -> Field {
    match f {
        Field::Const(v) => Field::Const(v.into_iter().map(|x| x * s).collect()),
        Field::PerTriangle(v) => Field::PerTriangle(v.into_iter().map(|x| x * s).collect()),
        Field::Nodal(v) => Field::Nodal(v.into_iter().map(|x| x * s).collect()),
    }
}

/// Point type codes.
pub mod ptype {
    pub const SWIBRA: i8 = -2;
    pub const INITIAL: i8 = -1;
    pub const REGULAR: i8 = 0;
    pub const BIFURCATION: i8 = 1;
    pub const FOLD: i8 = 2;
}

/// Runtime scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct SolInfo {
    pub ds: f64,
    pub xi: f64,
    pub xiq: f64,
    /// Negative eigenvalue count; -1 when not computed.
    pub ineg: i64,
    pub iter: usize,
    pub res: f64,
    /// α-component of the tangent.
    pub lamd: f64,
    pub ptype: i8,
    pub count: usize,
    pub bcount: usize,
    pub fcount: usize,
    pub err: f64,
    pub time: Option<f64>,
}

impl Default for SolInfo {
    fn default() -> Self {
        Self {
            ds: 0.01,
            xi: 0.0,
            xiq: 0.0,
            ineg: -1,
            iter: 0,
            res: 0.0,
            lamd: 0.0,
            ptype: ptype::INITIAL,
            count: 0,
            bcount: 0,
            fcount: 0,
            err: 0.0,
            time: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchRecord {
    pub count: usize,
    pub ptype: i8,
    /// Active parameter values, in `ilam` order.
    pub params: Vec<f64>,
    pub ineg: i64,
    pub err: f64,
    pub l2: f64,
    /// Point computed at a `usrlam` target.
    pub target: bool,
    pub user: Vec<f64>,
}

/// A branch with its column names.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Branch {
    pub param_names: Vec<String>,
    pub user_names: Vec<String>,
    pub rows: Vec<BranchRecord>,
}

/// Layout of the unknown vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// `(u, w)`
    Normal,
    /// `(u, φ, w)`
    Extended,
}

/// Everything defining a problem and its current point.
#[derive(Clone, Debug)]
pub struct ProblemState {
    pub model: Arc<dyn Model>,
    pub mesh: Mesh,
    pub neq: usize,
    /// PDE unknowns (reduced under periodization).
    pub nu: usize,
    /// `(u, w)` or `(u, φ, w)`.
    pub u: Vec<f64>,
    /// Tangent over the active vector `(v, w̃, α)`.
    pub tau: Option<Vec<f64>>,
    /// 1-based active parameter indices; the first one is primary.
    pub ilam: Vec<usize>,
    pub aux: Vec<AuxEq>,
    pub layout: Layout,
    pub nc: Controls,
    pub sw: Switches,
    pub ops: OperatorCache,
    pub sol: SolInfo,
    pub branch: Branch,
    /// Sorted targets of the primary parameter.
    pub usrlam: Vec<f64>,
    /// Reference profile for phase conditions (reduced PDE part).
    pub u_ref: Option<Vec<f64>>,
    /// Output directory for point files.
    pub dir: Option<std::path::PathBuf>,
}

impl OperatorCache {
    pub fn build(model: &dyn Model, mesh: &Mesh, bcper: BcPer, stiff: f64) -> Result<Self> {
        let neq = model.neq();
        let per = build_periodization(mesh, neq, bcper)?;
        let mut co = CoeffTensors::zeros(neq);
        co.c = model.base_diffusion();
        co.b = model.base_advection();
        let int = assemble_interior(mesh, &co, neq)?;
        let m = per.periodize_operator(&assemble_mass(mesh, neq))?;
        let k = per.periodize_operator(&int.k)?;
        let kadv = per.periodize_operator(&int.kadv)?;
        let mut co = CoeffTensors::zeros(neq);
        co.b = CoeffTensors::diagonal_advection(neq, 1.0, 0.0);
        let dx = per.periodize_operator(&assemble_interior(mesh, &co, neq)?.kadv)?;
        co.b = CoeffTensors::diagonal_advection(neq, 0.0, 1.0);
        let dy = per.periodize_operator(&assemble_interior(mesh, &co, neq)?.kadv)?;
        let bc = model.bc().with_stiff(stiff);
        if bc.neq != neq {
            return Err(Error::domain(format!("boundary spec has neq {} but model has {neq}", bc.neq)));
        }
        let bnd = if bc.is_u_independent() {
            // u-independent coefficients may still use parameters: the
            // snapshot is taken at zero parameters and must not depend on them
            let ops = assemble_boundary(mesh, &bc, &vec![0.0; neq * mesh.np()], &[])?;
            Some(BoundaryOps {
                q: per.periodize_operator(&ops.q)?,
                gb: per.periodize_vector(&ops.gb)?,
            })
        } else {
            None
        };
        let coloring = Coloring::new(mesh, &per);
        Ok(Self { per, m, k, kadv, dx, dy, bnd, bc, coloring })
    }
}

impl ProblemState {
    /// New state in normal layout; `u0` is the full-mesh PDE part.
    pub fn new(
        model: Arc<dyn Model>,
        mesh_spec: MeshSpec,
        bcper: BcPer,
        u0: &[f64],
        par: Vec<f64>,
        ilam: Vec<usize>,
        aux: Vec<AuxEq>,
    ) -> Result<Self> {
        let mesh = mesh_spec.build()?;
        let nc = Controls::default();
        let sw = Switches { bcper, ..Switches::default() };
        let ops = OperatorCache::build(model.as_ref(), &mesh, bcper, nc.stiff_spring)?;
        let neq = model.neq();
        if par.len() != model.param_names().len() {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected: model.param_names().len(),
                got: par.len(),
            });
        }
        let upde = ops.per.restrict_vector(u0)?;
        let nu = ops.per.nu_per;
        let mut u = upde;
        u.extend_from_slice(&par);
        let mut st = Self {
            model,
            mesh,
            neq,
            nu,
            u,
            tau: None,
            ilam: Vec::new(),
            aux,
            layout: Layout::Normal,
            nc,
            sw,
            ops,
            sol: SolInfo::default(),
            branch: Branch::default(),
            usrlam: Vec::new(),
            u_ref: None,
            dir: None,
        };
        st.set_ilam(ilam)?;
        if st.aux.iter().any(|a| matches!(a, AuxEq::Phase { .. })) {
            st.u_ref = Some(st.u[..nu].to_vec());
        }
        Ok(st)
    }

    /// Rebuilds mesh-derived data (after a load or a change of `bcper`).
    pub fn rebuild_ops(&mut self) -> Result<()> {
        self.ops = OperatorCache::build(self.model.as_ref(), &self.mesh, self.sw.bcper, self.nc.stiff_spring)?;
        Ok(())
    }

    pub fn naux(&self) -> usize {
        self.u.len() - self.nv()
    }

    pub fn nq(&self) -> usize {
        self.aux.len()
    }

    /// PDE-level unknown count (`nu`, or `2nu` in the extended layout).
    pub fn nv(&self) -> usize {
        match self.layout {
            Layout::Normal => self.nu,
            Layout::Extended => 2 * self.nu,
        }
    }

    /// Number of equations of the continuation system.
    pub fn n_eq(&self) -> usize {
        self.nv() + self.ilam.len() - 1
    }

    /// Active-parameter count required by the layout.
    fn expected_active(&self) -> usize {
        match self.layout {
            Layout::Normal => self.nq() + 1,
            Layout::Extended => self.nq() + 2,
        }
    }

    pub fn set_ilam(&mut self, ilam: Vec<usize>) -> Result<()> {
        let naux = self.naux();
        if ilam.len() != self.expected_active() {
            return Err(Error::domain(format!(
                "{} active parameters given, {} required",
                ilam.len(),
                self.expected_active()
            )));
        }
        for (i, &a) in ilam.iter().enumerate() {
            if a == 0 || a > naux {
                return Err(Error::domain(format!("parameter index {a} outside 1..={naux}")));
            }
            if ilam[..i].contains(&a) {
                return Err(Error::domain(format!("parameter index {a} repeated")));
            }
        }
        self.ilam = ilam;
        self.tau = None;
        Ok(())
    }

    /// Replaces the active parameters and invalidates the tangent.
    pub fn swipar(&mut self, ilam: Vec<usize>) -> Result<()> {
        self.set_ilam(ilam)?;
        self.sol.ptype = ptype::INITIAL;
        self.branch = Branch::default();
        Ok(())
    }

    pub fn params(&self) -> &[f64] {
        &self.u[self.nv()..]
    }

    pub fn param(&self, i: usize) -> Result<f64> {
        self.params()
            .get(i.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::domain(format!("parameter index {i} out of range")))
    }

    pub fn set_param(&mut self, i: usize, v: f64) -> Result<()> {
        let nv = self.nv();
        let n = self.naux();
        if i == 0 || i > n {
            return Err(Error::domain(format!("parameter index {i} out of range")));
        }
        self.u[nv + i - 1] = v;
        Ok(())
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.model.param_names().iter().position(|n| n == name).map(|i| i + 1)
    }

    pub fn primary(&self) -> f64 {
        self.u[self.nv() + self.ilam[0] - 1]
    }

    pub fn pde(&self) -> &[f64] {
        &self.u[..self.nu]
    }

    /// Positions in `U` of the active vector `(v, w̃, α)`.
    pub fn active_positions(&self) -> Vec<usize> {
        let nv = self.nv();
        let mut pos: Vec<usize> = (0..nv).collect();
        pos.extend(self.ilam[1..].iter().map(|&i| nv + i - 1));
        pos.push(nv + self.ilam[0] - 1);
        pos
    }

    pub fn to_active(&self, u: &[f64]) -> Vec<f64> {
        self.active_positions().into_iter().map(|p| u[p]).collect()
    }

    pub fn from_active(&self, u: &mut [f64], x: &[f64]) {
        for (p, &v) in self.active_positions().into_iter().zip(x) {
            u[p] = v;
        }
    }

    /// Arclength weights `(ξ, ξq, 1-(ξ+ξq)/2)`.
    pub fn weights(&self) -> (f64, f64, f64) {
        let (xi, xiq) = (self.sol.xi, self.sol.xiq);
        (xi, xiq, 1.0 - (xi + xiq) / 2.0)
    }

    /// Installs the default weights unless set by the user.
    pub fn init_weights(&mut self) {
        let d = 1.0 / self.nv() as f64;
        self.sol.xi = self.nc.xi.unwrap_or(d);
        self.sol.xiq = self.nc.xiq.unwrap_or(d);
    }

    /// `W·b`, so that `weighted_dot(a, b) = aᵀ(W b)`.
    pub fn weighted(&self, b: &[f64]) -> Vec<f64> {
        let nv = self.nv();
        let n = b.len();
        let (xi, xiq, xa) = self.weights();
        b.iter()
            .enumerate()
            .map(|(i, &v)| {
                if i < nv {
                    xi * v
                } else if i + 1 < n {
                    xiq * v
                } else {
                    xa * v
                }
            })
            .collect()
    }

    pub fn weighted_dot(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let n = self.n_eq() + 1;
        crate::error::check_len("weighted_dot a", n, a.len())?;
        crate::error::check_len("weighted_dot b", n, b.len())?;
        Ok(vecops::dot(a, &self.weighted(b)))
    }

    /// `√(uᵀ M u)` of the PDE part.
    pub fn l2norm(&self, u: &[f64]) -> f64 {
        let upde = &u[..self.nu];
        vecops::dot(upde, &self.ops.m.matvec(upde)).max(0.0).sqrt()
    }

    pub fn full_pde(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.ops.per.extend_vector(&u[..self.nu])
    }

    pub fn residual_norm(&self, r: &[f64]) -> f64 {
        self.sw.residual_norm(r)
    }

    /// Branch record of `U` (ineg and ptype supplied by the caller).
    pub fn record(&self, u: &[f64], ptype: i8, ineg: i64, target: bool) -> Result<BranchRecord> {
        let nv = self.nv();
        let full = self.full_pde(u)?;
        let par = &u[nv..];
        Ok(BranchRecord {
            count: self.sol.count,
            ptype,
            params: self.ilam.iter().map(|&i| u[nv + i - 1]).collect(),
            ineg,
            err: self.sol.err,
            l2: self.l2norm(u),
            target,
            user: self.model.outfu(&self.mesh, &full, par),
        })
    }

    pub fn push_record(&mut self, rec: BranchRecord) {
        if self.branch.rows.is_empty() {
            let names = self.model.param_names();
            self.branch.param_names = self.ilam.iter().map(|&i| names[i - 1].clone()).collect();
            self.branch.user_names = self.model.user_columns();
        }
        self.branch.rows.push(rec);
    }
}
