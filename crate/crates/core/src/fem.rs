//! P1 finite-element assembly for
//!
//! ```text
//! -∇·(c⊗∇u) + a u - b⊗∇u - f = 0,     n·(c⊗∇u) + q u = g  on ∂Ω
//! ```
//!
//! Unknowns are component-blocked: index `k*np + i` is component `k` at node `i`.
//! Interior coefficients are constant per triangle (one-point quadrature);
//! boundary coefficients are evaluated at edge midpoints.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::mesh::Mesh;
use crate::sparse::{SpMat, Triplets};

/// A coefficient given as one constant block, one block per triangle, or
/// one value per node.
///
/// Block sizes: `c` has `4·neq²` entries ordered `[k][l][α][β]`, `a` has `neq²`
/// ordered `[k][l]`, `b` has `2·neq²` ordered `[k][l][α]`, `f` has `neq`.
/// Per-triangle data is triangle-major (`t*block + idx`).
///
/// `Nodal` is only meaningful for `a` and `f`. For `a` it is node-major
/// (`node*neq² + k*neq + l`) and assembles `Σ_j M_ij a_j`; for `f` it is
/// component-blocked like `u` and assembles `M f`.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Const(Vec<f64>),
    PerTriangle(Vec<f64>),
    Nodal(Vec<f64>),
}

impl Field {
    pub fn zero(block: usize) -> Self {
        Field::Const(vec![0.0; block])
    }

    pub fn scalar(v: f64) -> Self {
        Field::Const(vec![v])
    }

    fn block(&self, t: usize, block: usize) -> &[f64] {
        match self {
            Field::Const(v) => v,
            Field::PerTriangle(v) => &v[t * block..(t + 1) * block],
            Field::Nodal(_) => unreachable!("nodal field has no per-triangle block"),
        }
    }

    fn check(&self, name: &'static str, block: usize, nt: usize, nodal_len: Option<usize>) -> Result<()> {
        match self {
            Field::Const(v) => check_len(name, block, v.len()),
            Field::PerTriangle(v) => check_len(name, block * nt, v.len()),
            Field::Nodal(v) => match nodal_len {
                Some(n) => check_len(name, n, v.len()),
                None => Err(Error::domain(format!("coefficient `{name}` cannot be nodal"))),
            },
        }
    }

    /// Whether the `[k][l]` sub-block is identically zero (cheap skip).
    fn pair_is_zero(&self, k: usize, l: usize, neq: usize, sub: usize) -> bool {
        match self {
            Field::Const(v) => {
                let off = (k * neq + l) * sub;
                v[off..off + sub].iter().all(|&x| x == 0.0)
            }
            _ => false,
        }
    }
}

/// Coefficients of the PDE for one assembly pass.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTensors {
    pub c: Field,
    pub a: Field,
    pub b: Field,
    pub f: Field,
}

impl CoeffTensors {
    /// All-zero coefficients for `neq` components.
    pub fn zeros(neq: usize) -> Self {
        Self {
            c: Field::zero(4 * neq * neq),
            a: Field::zero(neq * neq),
            b: Field::zero(2 * neq * neq),
            f: Field::zero(neq),
        }
    }

    /// Isotropic diffusion `diag(d)` (one value per component).
    pub fn diagonal_diffusion(d: &[f64]) -> Field {
        let neq = d.len();
        let mut c = vec![0.0; 4 * neq * neq];
        for (k, &dk) in d.iter().enumerate() {
            let off = (k * neq + k) * 4;
            c[off] = dk;
            c[off + 3] = dk;
        }
        Field::Const(c)
    }

    /// Advection `b_kk = (bx, by)` on every component.
    pub fn diagonal_advection(neq: usize, bx: f64, by: f64) -> Field {
        let mut b = vec![0.0; 2 * neq * neq];
        for k in 0..neq {
            let off = (k * neq + k) * 2;
            b[off] = bx;
            b[off + 1] = by;
        }
        Field::Const(b)
    }

    fn check(&self, mesh: &Mesh, neq: usize) -> Result<()> {
        let (nt, np) = (mesh.nt(), mesh.np());
        self.c.check("c", 4 * neq * neq, nt, None)?;
        self.a.check("a", neq * neq, nt, Some(np * neq * neq))?;
        self.b.check("b", 2 * neq * neq, nt, None)?;
        self.f.check("f", neq, nt, Some(np * neq))
    }
}

/// Interior operators; the residual contribution is `(k + ma + kadv)·u`.
#[derive(Clone, Debug)]
pub struct InteriorOps {
    pub k: SpMat,
    pub ma: SpMat,
    pub kadv: SpMat,
}

impl InteriorOps {
    pub fn total(&self) -> SpMat {
        self.k.add(&self.ma).add(&self.kadv)
    }
}

const MASS_REF: [[f64; 3]; 3] = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];

/// Consistent P1 mass matrix, block-diagonal over `neq` components.
pub fn assemble_mass(mesh: &Mesh, neq: usize) -> SpMat {
    let np = mesh.np();
    let mut t = Triplets::with_capacity(neq * np, neq * np, 9 * neq * mesh.nt());
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let a12 = mesh.area(ti) / 12.0;
        for k in 0..neq {
            for i in 0..3 {
                for j in 0..3 {
                    t.push(
                        k * np + tri.nodes[i],
                        k * np + tri.nodes[j],
                        a12 * MASS_REF[i][j],
                    );
                }
            }
        }
    }
    t.build()
}

/// Assembles the diffusion, reaction and advection operators.
pub fn assemble_interior(mesh: &Mesh, coeffs: &CoeffTensors, neq: usize) -> Result<InteriorOps> {
    coeffs.check(mesh, neq)?;
    let np = mesh.np();
    let n = neq * np;
    let mut tk = Triplets::new(n, n);
    let mut ta = Triplets::new(n, n);
    let mut tb = Triplets::new(n, n);
    let nn = neq * neq;
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = mesh.gradients(ti);
        let nodes = tri.nodes;
        let c = coeffs.c.block(ti, 4 * nn);
        for k in 0..neq {
            for l in 0..neq {
                if coeffs.c.pair_is_zero(k, l, neq, 4) {
                    continue;
                }
                let ckl = &c[(k * neq + l) * 4..(k * neq + l) * 4 + 4];
                for i in 0..3 {
                    for j in 0..3 {
                        let v = area
                            * (ckl[0] * g[i][0] * g[j][0]
                                + ckl[1] * g[i][0] * g[j][1]
                                + ckl[2] * g[i][1] * g[j][0]
                                + ckl[3] * g[i][1] * g[j][1]);
                        tk.push(k * np + nodes[i], l * np + nodes[j], v);
                    }
                }
            }
        }
        let a12 = area / 12.0;
        match &coeffs.a {
            Field::Nodal(an) => {
                for k in 0..neq {
                    for l in 0..neq {
                        for i in 0..3 {
                            for j in 0..3 {
                                let v = an[nodes[j] * nn + k * neq + l];
                                if v != 0.0 {
                                    ta.push(k * np + nodes[i], l * np + nodes[j], a12 * MASS_REF[i][j] * v);
                                }
                            }
                        }
                    }
                }
            }
            field => {
                let a = field.block(ti, nn);
                for k in 0..neq {
                    for l in 0..neq {
                        let akl = a[k * neq + l];
                        if akl == 0.0 {
                            continue;
                        }
                        for i in 0..3 {
                            for j in 0..3 {
                                ta.push(k * np + nodes[i], l * np + nodes[j], akl * a12 * MASS_REF[i][j]);
                            }
                        }
                    }
                }
            }
        }
        let b = coeffs.b.block(ti, 2 * nn);
        let a3 = area / 3.0;
        for k in 0..neq {
            for l in 0..neq {
                if coeffs.b.pair_is_zero(k, l, neq, 2) {
                    continue;
                }
                let bx = b[(k * neq + l) * 2];
                let by = b[(k * neq + l) * 2 + 1];
                for j in 0..3 {
                    let v = -a3 * (bx * g[j][0] + by * g[j][1]);
                    for i in 0..3 {
                        tb.push(k * np + nodes[i], l * np + nodes[j], v);
                    }
                }
            }
        }
    }
    Ok(InteriorOps {
        k: tk.build(),
        ma: ta.build(),
        kadv: tb.build(),
    })
}

/// Load vector `F_i = ∫ f φ_i`.
pub fn assemble_load(mesh: &Mesh, f: &Field, neq: usize) -> Result<Vec<f64>> {
    let (np, nt) = (mesh.np(), mesh.nt());
    f.check("f", neq, nt, Some(np * neq))?;
    let mut out = vec![0.0; neq * np];
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.area(ti);
        match f {
            Field::Nodal(fv) => {
                for k in 0..neq {
                    for i in 0..3 {
                        let mut s = 0.0;
                        for j in 0..3 {
                            s += MASS_REF[i][j] * fv[k * np + tri.nodes[j]];
                        }
                        out[k * np + tri.nodes[i]] += area / 12.0 * s;
                    }
                }
            }
            field => {
                let fb = field.block(ti, neq);
                for k in 0..neq {
                    for &node in &tri.nodes {
                        out[k * np + node] += fb[k] * area / 3.0;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Where and at what state a boundary coefficient is evaluated.
pub struct BcPoint<'a> {
    pub x: f64,
    pub y: f64,
    /// Midpoint value of every component.
    pub u: &'a [f64],
    pub par: &'a [f64],
}

/// Boundary coefficients at one point.
///
/// `dq[(k*neq + l)*neq + m] = ∂q_kl/∂u_m` and `dg[k*neq + m] = ∂g_k/∂u_m`;
/// `None` means independent of `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct BcValues {
    pub q: Vec<f64>,
    pub g: Vec<f64>,
    pub dq: Option<Vec<f64>>,
    pub dg: Option<Vec<f64>>,
}

pub type BcFn = Arc<dyn Fn(&BcPoint) -> BcValues + Send + Sync>;
pub type DirichletFn = Arc<dyn Fn(f64, f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum SegmentBc {
    /// Homogeneous Neumann (`q = g = 0`).
    Neumann,
    /// Stiff-spring Dirichlet: `q = s·I`, `g = s·u_D(x, y, par)`.
    Dirichlet(DirichletFn),
    /// General Robin coefficients.
    Robin(BcFn),
}

impl fmt::Debug for SegmentBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentBc::Neumann => write!(f, "Neumann"),
            SegmentBc::Dirichlet(_) => write!(f, "Dirichlet(..)"),
            SegmentBc::Robin(_) => write!(f, "Robin(..)"),
        }
    }
}

/// Boundary conditions for every boundary segment.
#[derive(Clone, Debug)]
pub struct BcSpec {
    pub neq: usize,
    pub segments: BTreeMap<u8, SegmentBc>,
    /// Stiff-spring factor used by [`SegmentBc::Dirichlet`].
    pub stiff: f64,
}

pub const DEFAULT_STIFF_SPRING: f64 = 1e3;

impl BcSpec {
    pub fn uniform(neq: usize, seg: SegmentBc) -> Self {
        Self {
            neq,
            segments: (1..=4).map(|s| (s, seg.clone())).collect(),
            stiff: DEFAULT_STIFF_SPRING,
        }
    }

    pub fn neumann(neq: usize) -> Self {
        Self::uniform(neq, SegmentBc::Neumann)
    }

    /// Homogeneous stiff-spring Dirichlet on all sides.
    pub fn zero_dirichlet(neq: usize) -> Self {
        Self::uniform(neq, SegmentBc::Dirichlet(Arc::new(move |_, _, _| vec![0.0; neq])))
    }

    pub fn with_stiff(mut self, s: f64) -> Self {
        self.stiff = s;
        self
    }

    /// True when all coefficients are independent of `u`.
    pub fn is_u_independent(&self) -> bool {
        !self.segments.values().any(|s| matches!(s, SegmentBc::Robin(_)))
    }

    fn values(&self, seg: u8, pt: &BcPoint) -> Result<Option<BcValues>> {
        let neq = self.neq;
        match self.segments.get(&seg) {
            None => Err(Error::domain(format!("no boundary condition for segment {seg}"))),
            Some(SegmentBc::Neumann) => Ok(None),
            Some(SegmentBc::Dirichlet(ud)) => {
                let ud = ud(pt.x, pt.y, pt.par);
                check_len("Dirichlet value", neq, ud.len())?;
                let mut q = vec![0.0; neq * neq];
                for k in 0..neq {
                    q[k * neq + k] = self.stiff;
                }
                Ok(Some(BcValues {
                    q,
                    g: ud.iter().map(|v| self.stiff * v).collect(),
                    dq: None,
                    dg: None,
                }))
            }
            Some(SegmentBc::Robin(f)) => {
                let v = f(pt);
                check_len("q", neq * neq, v.q.len())?;
                check_len("g", neq, v.g.len())?;
                if let Some(dq) = &v.dq {
                    check_len("dq", neq * neq * neq, dq.len())?;
                }
                if let Some(dg) = &v.dg {
                    check_len("dg", neq * neq, dg.len())?;
                }
                Ok(Some(v))
            }
        }
    }
}

/// Boundary operators; the residual contribution is `q·u - gb`.
#[derive(Clone, Debug)]
pub struct BoundaryOps {
    pub q: SpMat,
    pub gb: Vec<f64>,
}

fn edge_state(mesh: &Mesh, u: &[f64], neq: usize, a: usize, b: usize) -> Vec<f64> {
    let np = mesh.np();
    (0..neq).map(|k| 0.5 * (u[k * np + a] + u[k * np + b])).collect()
}

/// Assembles `∫_∂Ω (q u - g) φ_i ds` with `q`, `g` taken at edge midpoints.
pub fn assemble_boundary(mesh: &Mesh, bc: &BcSpec, u: &[f64], par: &[f64]) -> Result<BoundaryOps> {
    let neq = bc.neq;
    let np = mesh.np();
    check_len("assemble_boundary u", neq * np, u.len())?;
    let mut tq = Triplets::new(neq * np, neq * np);
    let mut gb = vec![0.0; neq * np];
    for e in &mesh.edges {
        let [a, b] = e.nodes;
        let [x, y] = mesh.edge_midpoint(e);
        let um = edge_state(mesh, u, neq, a, b);
        let Some(v) = bc.values(e.segment, &BcPoint { x, y, u: &um, par })? else {
            continue;
        };
        let len = mesh.edge_length(e);
        for k in 0..neq {
            for l in 0..neq {
                let q = v.q[k * neq + l];
                if q == 0.0 {
                    continue;
                }
                tq.push(k * np + a, l * np + a, q * len / 3.0);
                tq.push(k * np + a, l * np + b, q * len / 6.0);
                tq.push(k * np + b, l * np + a, q * len / 6.0);
                tq.push(k * np + b, l * np + b, q * len / 3.0);
            }
        }
        if let Some(SegmentBc::Dirichlet(ud)) = bc.segments.get(&e.segment) {
            // interpolated data integrated exactly, consistent with Q, so the
            // stiff-spring limit reproduces u_D at the nodes
            let [pa, pb] = [mesh.points[a], mesh.points[b]];
            let (da, db) = (ud(pa[0], pa[1], par), ud(pb[0], pb[1], par));
            check_len("Dirichlet value", neq, da.len())?;
            check_len("Dirichlet value", neq, db.len())?;
            for k in 0..neq {
                gb[k * np + a] += bc.stiff * len / 6.0 * (2.0 * da[k] + db[k]);
                gb[k * np + b] += bc.stiff * len / 6.0 * (da[k] + 2.0 * db[k]);
            }
        } else {
            for k in 0..neq {
                gb[k * np + a] += v.g[k] * len / 2.0;
                gb[k * np + b] += v.g[k] * len / 2.0;
            }
        }
    }
    Ok(BoundaryOps { q: tq.build(), gb })
}

/// Exact derivative of `Q(u)·u - Gb(u)` with respect to `u`.
pub fn assemble_boundary_jacobian(mesh: &Mesh, bc: &BcSpec, u: &[f64], par: &[f64]) -> Result<SpMat> {
    let neq = bc.neq;
    let np = mesh.np();
    let ops = assemble_boundary(mesh, bc, u, par)?;
    if bc.is_u_independent() {
        return Ok(ops.q);
    }
    let mut t = Triplets::new(neq * np, neq * np);
    for e in &mesh.edges {
        let [a, b] = e.nodes;
        let [x, y] = mesh.edge_midpoint(e);
        let um = edge_state(mesh, u, neq, a, b);
        let Some(v) = bc.values(e.segment, &BcPoint { x, y, u: &um, par })? else {
            continue;
        };
        let len = mesh.edge_length(e);
        for (row, other) in [(a, b), (b, a)] {
            for k in 0..neq {
                for m in 0..neq {
                    let mut d = 0.0;
                    if let Some(dq) = &v.dq {
                        for l in 0..neq {
                            let w = len / 6.0 * (2.0 * u[l * np + row] + u[l * np + other]);
                            d += dq[(k * neq + l) * neq + m] * w;
                        }
                    }
                    if let Some(dg) = &v.dg {
                        d -= dg[k * neq + m] * len / 2.0;
                    }
                    if d != 0.0 {
                        // midpoint value depends on both endpoints with weight 1/2
                        t.push(k * np + row, m * np + a, 0.5 * d);
                        t.push(k * np + row, m * np + b, 0.5 * d);
                    }
                }
            }
        }
    }
    Ok(ops.q.add(&t.build()))
}

impl Field {
    /// Expands a scalar diffusion value into the `c` layout (isotropic,
    /// component-diagonal).
    pub fn into_c(self, neq: usize) -> Field {
        match self {
            Field::Const(v) if v.len() == 1 => CoeffTensors::diagonal_diffusion(&vec![v[0]; neq]),
            other => other,
        }
    }
}
