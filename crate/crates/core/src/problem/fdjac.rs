//! Forward-difference Jacobians exploiting the P1 sparsity pattern.
//!
//! Two nodes interact iff they share a triangle. A distance-2 coloring of that
//! graph lets one residual evaluation recover every column of one color.

use crate::error::{check_len, Result};
use crate::mesh::Mesh;
use crate::periodic::Periodization;
use crate::sparse::{SpMat, Triplets};

#[derive(Clone, Debug)]
pub struct Coloring {
    /// Sorted neighbours (including the node itself) of every reduced node.
    pub adj: Vec<Vec<usize>>,
    pub colors: Vec<usize>,
    pub ncolors: usize,
}

impl Coloring {
    pub fn new(mesh: &Mesh, per: &Periodization) -> Self {
        let n = per.np_per;
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for t in &mesh.triangles {
            let r = t.nodes.map(|v| per.node_map[v]);
            for &a in &r {
                for &b in &r {
                    adj[a].push(b);
                }
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let mut colors = vec![usize::MAX; n];
        let mut ncolors = 0;
        let mut mark = Vec::<usize>::new();
        for i in 0..n {
            // colors used within distance two
            mark.clear();
            for &j in &adj[i] {
                for &k in &adj[j] {
                    if colors[k] != usize::MAX {
                        mark.push(colors[k]);
                    }
                }
            }
            mark.sort_unstable();
            mark.dedup();
            let mut c = 0;
            for &m in &mark {
                if m == c {
                    c += 1;
                } else if m > c {
                    break;
                }
            }
            colors[i] = c;
            ncolors = ncolors.max(c + 1);
        }
        Self { adj, colors, ncolors }
    }

    pub fn nodes(&self) -> usize {
        self.adj.len()
    }
}

/// `∂r/∂u` by forward differences with step `h`, `r0 = r(u)`.
///
/// `r` must be local: component `l` at node `i` may only depend on nodes
/// adjacent to `i`. Rows beyond `neq·np` (none expected) are ignored.
pub fn fd_jacobian<F>(r: F, u: &[f64], r0: &[f64], neq: usize, col: &Coloring, h: f64) -> Result<SpMat>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let np = col.nodes();
    let n = neq * np;
    check_len("fd_jacobian u", n, u.len())?;
    check_len("fd_jacobian r0", n, r0.len())?;
    let groups: Vec<Vec<usize>> = {
        let mut g = vec![Vec::new(); col.ncolors];
        for (i, &c) in col.colors.iter().enumerate() {
            g[c].push(i);
        }
        g
    };
    let mut t = Triplets::with_capacity(n, n, n * 9 * neq);
    let mut up = u.to_vec();
    for k in 0..neq {
        for group in &groups {
            for &j in group {
                up[k * np + j] += h;
            }
            let r1 = r(&up)?;
            check_len("fd_jacobian residual", n, r1.len())?;
            for &j in group {
                // the representable step, not the nominal one
                let hj = up[k * np + j] - u[k * np + j];
                up[k * np + j] = u[k * np + j];
                for &i in &col.adj[j] {
                    for l in 0..neq {
                        let row = l * np + i;
                        let d = (r1[row] - r0[row]) / hj;
                        if d != 0.0 {
                            t.push(row, k * np + j, d);
                        }
                    }
                }
            }
        }
    }
    Ok(t.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;
    use crate::periodic::{build_periodization, BcPer};

    #[test]
    fn coloring_is_distance_two() {
        let m = build_rect_mesh(1.0, 1.0, 7, 5).unwrap();
        for bc in [BcPer::None, BcPer::Torus] {
            let p = build_periodization(&m, 1, bc).unwrap();
            let c = Coloring::new(&m, &p);
            for i in 0..c.nodes() {
                for &j in &c.adj[i] {
                    for &k in &c.adj[j] {
                        assert!(k == i || c.colors[k] != c.colors[i]);
                    }
                }
            }
            assert!(c.ncolors <= 13, "{}", c.ncolors);
        }
    }

    #[test]
    fn recovers_sparse_matrix() {
        let m = build_rect_mesh(1.0, 1.0, 6, 4).unwrap();
        let p = build_periodization(&m, 2, BcPer::LeftRight).unwrap();
        let c = Coloring::new(&m, &p);
        let mass = crate::fem::assemble_mass(&m, 2);
        let a = p.periodize_operator(&mass).unwrap();
        let u: Vec<f64> = (0..p.nu_per).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = |v: &[f64]| Ok(a.matvec(v));
        let j = fd_jacobian(r, &u, &a.matvec(&u), 2, &c, 1e-7).unwrap();
        assert!(j.max_abs_diff(&a) < 1e-8);
    }
}
