//! Structured triangulations of axis-aligned rectangles.
//!
//! Nodes are numbered row-major (y outer, x inner). Every grid cell is split
//! along its lower-left to upper-right diagonal. Boundary edges run
//! counterclockwise from the bottom-left corner and carry a segment label
//! (1 bottom, 2 right, 3 top, 4 left).

use crate::error::{check_len, Error, Result};

pub const SEG_BOTTOM: u8 = 1;
pub const SEG_RIGHT: u8 = 2;
pub const SEG_TOP: u8 = 3;
pub const SEG_LEFT: u8 = 4;

/// How grid nodes are placed in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// The rectangle (-lx,lx)×(-ly,ly).
    Rect,
    /// The square grid mapped onto the disk of radius `lx`; boundary nodes
    /// land on the circle, so the domain is an inscribed polygon.
    Disk,
}

impl Geometry {
    pub fn as_str(self) -> &'static str {
        match self {
            Geometry::Rect => "rect",
            Geometry::Disk => "disk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rect" => Ok(Geometry::Rect),
            "disk" => Ok(Geometry::Disk),
            _ => Err(Error::format(format!("unknown geometry `{s}`"))),
        }
    }
}

/// Everything needed to rebuild a mesh bit-identically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshSpec {
    pub geometry: Geometry,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl MeshSpec {
    pub fn rect(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self {
            geometry: Geometry::Rect,
            lx,
            ly,
            nx,
            ny,
        }
    }

    pub fn build(&self) -> Result<Mesh> {
        match self.geometry {
            Geometry::Rect => build_rect_mesh(self.lx, self.ly, self.nx, self.ny),
            Geometry::Disk => build_disk_mesh(self.lx, self.nx),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub nodes: [usize; 3],
    pub region: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub segment: u8,
    /// Normalized arclength positions of the endpoints along the segment.
    pub s: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<Triangle>,
    pub edges: Vec<BoundaryEdge>,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub geometry: Geometry,
}

/// Uniform triangulation of (-lx,lx)×(-ly,ly) with `nx`×`ny` cells.
pub fn build_rect_mesh(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::domain(format!("grid needs nx, ny >= 1 (got {nx}, {ny})")));
    }
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::domain(format!("half-widths must be positive (got {lx}, {ly})")));
    }
    let row = nx + 1;
    let xs: Vec<f64> = (0..=nx).map(|i| grid_coord(lx, i, nx)).collect();
    let ys: Vec<f64> = (0..=ny).map(|j| grid_coord(ly, j, ny)).collect();
    let mut points = Vec::with_capacity(row * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            points.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = j * row + i;
            let b = a + 1;
            let c = a + row + 1;
            let d = a + row;
            triangles.push(Triangle {
                nodes: [a, b, c],
                region: 1,
            });
            triangles.push(Triangle {
                nodes: [a, c, d],
                region: 1,
            });
        }
    }
    let mut edges = Vec::with_capacity(2 * (nx + ny));
    let node = |i: usize, j: usize| j * row + i;
    for i in 0..nx {
        edges.push(edge(node(i, 0), node(i + 1, 0), SEG_BOTTOM, i, nx));
    }
    for j in 0..ny {
        edges.push(edge(node(nx, j), node(nx, j + 1), SEG_RIGHT, j, ny));
    }
    for k in 0..nx {
        let i = nx - k;
        edges.push(edge(node(i, ny), node(i - 1, ny), SEG_TOP, k, nx));
    }
    for k in 0..ny {
        let j = ny - k;
        edges.push(edge(node(0, j), node(0, j - 1), SEG_LEFT, k, ny));
    }
    Ok(Mesh {
        points,
        triangles,
        edges,
        lx,
        ly,
        nx,
        ny,
        geometry: Geometry::Rect,
    })
}

/// The `n`×`n` square grid mapped onto the disk of radius `r`.
pub fn build_disk_mesh(r: f64, n: usize) -> Result<Mesh> {
    let mut mesh = build_rect_mesh(1.0, 1.0, n, n)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("disk radius must be positive (got {r})")));
    }
    for p in &mut mesh.points {
        let [x, y] = *p;
        *p = [
            r * x * (1.0 - 0.5 * y * y).sqrt(),
            r * y * (1.0 - 0.5 * x * x).sqrt(),
        ];
    }
    mesh.lx = r;
    mesh.ly = r;
    mesh.geometry = Geometry::Disk;
    Ok(mesh)
}

// Endpoints are set exactly so opposite sides agree bit-for-bit.
fn grid_coord(l: f64, i: usize, n: usize) -> f64 {
    if i == 0 {
        -l
    } else if i == n {
        l
    } else {
        -l + 2.0 * l * (i as f64) / (n as f64)
    }
}

fn edge(a: usize, b: usize, segment: u8, k: usize, n: usize) -> BoundaryEdge {
    BoundaryEdge {
        nodes: [a, b],
        segment,
        s: [k as f64 / n as f64, (k + 1) as f64 / n as f64],
    }
}

impl Mesh {
    pub fn spec(&self) -> MeshSpec {
        MeshSpec {
            geometry: self.geometry,
            lx: self.lx,
            ly: self.ly,
            nx: self.nx,
            ny: self.ny,
        }
    }

    /// Number of nodes.
    #[inline]
    pub fn np(&self) -> usize {
        self.points.len()
    }

    /// Number of triangles.
    #[inline]
    pub fn nt(&self) -> usize {
        self.triangles.len()
    }

    /// Signed area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].nodes;
        let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.nt()).map(|t| self.area(t)).sum()
    }

    /// Gradients of the three P1 hat functions on triangle `t`, and its area.
    pub fn gradients(&self, t: usize) -> ([[f64; 2]; 3], f64) {
        let [a, b, c] = self.triangles[t].nodes;
        let (p0, p1, p2) = (self.points[a], self.points[b], self.points[c]);
        let area = self.area(t);
        let s = 0.5 / area;
        let g = [
            [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
            [(p2[1] - p0[1]) * s, (p0[0] - p2[0]) * s],
            [(p0[1] - p1[1]) * s, (p1[0] - p0[0]) * s],
        ];
        (g, area)
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].nodes;
        let (pa, pb, pc) = (self.points[a], self.points[b], self.points[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let (p, q) = (self.points[e.nodes[0]], self.points[e.nodes[1]]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn edge_midpoint(&self, e: &BoundaryEdge) -> [f64; 2] {
        let (p, q) = (self.points[e.nodes[0]], self.points[e.nodes[1]]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Nodes of boundary segment `seg`, in the order the edges traverse them.
    pub fn segment_nodes(&self, seg: u8) -> Vec<usize> {
        let mut out = Vec::new();
        for e in self.edges.iter().filter(|e| e.segment == seg) {
            if out.last() != Some(&e.nodes[0]) {
                out.push(e.nodes[0]);
            }
            out.push(e.nodes[1]);
        }
        out
    }

    /// Interpolates a component-blocked nodal field to triangles (vertex mean).
    pub fn node_to_triangle(&self, v: &[f64], neq: usize) -> Result<Vec<f64>> {
        let np = self.np();
        check_len("node_to_triangle", neq * np, v.len())?;
        let nt = self.nt();
        let mut out = vec![0.0; neq * nt];
        for k in 0..neq {
            let vk = &v[k * np..(k + 1) * np];
            for (t, tri) in self.triangles.iter().enumerate() {
                let [a, b, c] = tri.nodes;
                out[k * nt + t] = (vk[a] + vk[b] + vk[c]) / 3.0;
            }
        }
        Ok(out)
    }

    /// Nodal field from a function of the coordinates.
    pub fn nodal<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.points.iter().map(|p| f(p[0], p[1])).collect()
    }
}
