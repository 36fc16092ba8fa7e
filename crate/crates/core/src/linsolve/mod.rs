//! Sparse direct solves, bordered solves and the spectrum near zero.

mod arnoldi;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu as FaerLu;

use crate::error::{check_len, Error, Result};
use crate::sparse::{vecops, SpMat};

pub use arnoldi::{spectrum_near_zero, Spectrum, DENSE_EIG_MAX};
pub use num_complex::Complex64 as C64;

/// Sparse LU factorization (partial pivoting) of a square matrix.
///
/// Dense rows (borders, normalization rows) are split into chains of short
/// partial-sum rows with auxiliary unknowns before factorizing; a single
/// dense row otherwise collapses the fill-reducing ordering. The augmented
/// system is equivalent, so its solution restricted to the first `n`
/// entries solves the original one.
pub struct Lu {
    n: usize,
    /// Size of the factorized (augmented) system.
    naug: usize,
    inner: FaerLu<usize, f64>,
}

impl std::fmt::Debug for Lu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lu").field("n", &self.n).field("naug", &self.naug).finish_non_exhaustive()
    }
}

/// Rows with more entries than this are split (never below 64).
fn dense_row_limit(n: usize) -> usize {
    64.max(4 * (n as f64).sqrt() as usize)
}

/// Replaces every dense row `Σ a_j x_j = g` by
/// `Σ_{S_1} a_j x_j - t_1 = 0`, `t_{i-1} + Σ_{S_i} a_j x_j - t_i = 0`, …,
/// `t_{m-1} + Σ_{S_m} a_j x_j = g` (the last one keeps the row index).
fn split_dense_rows(a: &SpMat) -> Option<SpMat> {
    let n = a.nrows();
    let limit = dense_row_limit(n);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, j, v) in a.iter() {
        rows[i].push((j, v));
    }
    if rows.iter().all(|r| r.len() <= limit) {
        return None;
    }
    let chunk = ((n as f64).sqrt() as usize).max(8);
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz() + n);
    let mut next = n;
    for (i, r) in rows.iter().enumerate() {
        if r.len() <= limit {
            t.extend(r.iter().map(|&(j, v)| (i, j, v)));
            continue;
        }
        let chunks: Vec<&[(usize, f64)]> = r.chunks(chunk).collect();
        let m = chunks.len();
        let mut prev: Option<usize> = None;
        for (c, part) in chunks.iter().enumerate() {
            let row = if c + 1 == m { i } else { next + c };
            t.extend(part.iter().map(|&(j, v)| (row, j, v)));
            if let Some(p) = prev {
                t.push((row, p, 1.0));
            }
            if c + 1 < m {
                let tc = next + c;
                t.push((row, tc, -1.0));
                prev = Some(tc);
            }
        }
        next += m - 1;
    }
    Some(SpMat::from_triplets(next, next, t))
}

impl Lu {
    pub fn new(a: &SpMat) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::domain(format!(
                "LU of non-square {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let split = split_dense_rows(a);
        let m = split.as_ref().unwrap_or(a);
        let inner = m
            .to_faer()
            .sp_lu()
            .map_err(|e| Error::Singular(format!("sparse LU failed: {e:?}")))?;
        Ok(Self {
            n: a.nrows(),
            naug: m.nrows(),
            inner,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Raw solve; the result may be non-finite for a numerically singular matrix.
    pub fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let rhs = faer::Col::<f64>::from_fn(self.naug, |i| if i < self.n { b[i] } else { 0.0 });
        let x = self.inner.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }

    /// Solve with a finiteness check.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("Lu::solve rhs", self.n, b.len())?;
        let x = self.solve_unchecked(b);
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular("non-finite solution (zero pivot)".into()))
        }
    }
}

/// Residual target of [`lss`]: `‖Ax - b‖∞ ≤ LSS_RTOL·(1 + ‖b‖∞)`.
pub const LSS_RTOL: f64 = 1e-8;

/// Solves `A x = rhs` by sparse LU with up to two steps of iterative refinement.
///
/// A residual above [`LSS_RTOL`] after refinement is logged, not fatal: near
/// singular points the Newton correction is still usable.
pub fn lss(a: &SpMat, rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = Lu::new(a)?;
    lss_with(&lu, a, rhs)
}

/// [`lss`] with an existing factorization of `a`.
pub fn lss_with(lu: &Lu, a: &SpMat, rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = lu.solve(rhs)?;
    let bound = LSS_RTOL * (1.0 + vecops::norm_inf(rhs));
    for _ in 0..2 {
        let r = vecops::sub(rhs, &a.matvec(&x));
        if vecops::norm_inf(&r) <= bound {
            return Ok(x);
        }
        let dx = lu.solve(&r)?;
        vecops::axpy(1.0, &dx, &mut x);
    }
    let res = vecops::norm_inf(&vecops::sub(rhs, &a.matvec(&x)));
    if res > bound {
        log::warn!("lss: residual {res:.3e} above {bound:.3e} (ill-conditioned system)");
    }
    Ok(x)
}

/// Appends `row` as a last row to the `n×(n+1)` matrix `a`.
pub fn bordered(a: &SpMat, row: &[f64]) -> Result<SpMat> {
    if a.ncols() != a.nrows() + 1 {
        return Err(Error::domain(format!(
            "bordered system needs n x (n+1), got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_len("border row", a.ncols(), row.len())?;
    Ok(a.append_rows(&[row.to_vec()]))
}

/// Solves `[A; rowᵀ] x = [rhs; border_rhs]` for `A` of shape `n×(n+1)`.
pub fn blss(a: &SpMat, row: &[f64], border_rhs: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    check_len("blss rhs", a.nrows(), rhs.len())?;
    let full = bordered(a, row)?;
    let mut b = rhs.to_vec();
    b.push(border_rhs);
    lss(&full, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_mass;
    use crate::mesh::build_rect_mesh;
    use crate::sparse::Triplets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(lss(&SpMat::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn mass_solve_recovers_ones() {
        let m = build_rect_mesh(1.0, 0.9, 12, 10).unwrap();
        let mass = assemble_mass(&m, 1);
        let rhs = mass.matvec(&vec![1.0; m.np()]);
        let x = lss(&mass, &rhs).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    fn random_spd(n: usize, seed: u64) -> SpMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Triplets::new(n, n);
        for _ in 0..3 * n {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let v: f64 = rng.gen_range(-1.0..1.0);
            t.push(i, j, v);
            t.push(j, i, v);
        }
        let b = t.build();
        let shift: Vec<f64> = (0..n)
            .map(|i| {
                let (_, v) = b.col(i);
                v.iter().map(|x| x.abs()).sum::<f64>() + 1.0
            })
            .collect();
        b.add(&SpMat::diag(&shift))
    }

    #[test]
    fn manufactured_spd_solution() {
        let a = random_spd(100, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = lss(&a, &a.matvec(&xs)).unwrap();
        for (a, b) in x.iter().zip(&xs) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn lss_is_deterministic() {
        let a = random_spd(60, 3);
        let b: Vec<f64> = (0..60).map(|i| (i as f64).sin()).collect();
        let x1 = lss(&a, &b).unwrap();
        let x2 = lss(&a, &b).unwrap();
        assert!(x1.iter().zip(&x2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn structurally_singular_is_error() {
        let a = SpMat::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0)]);
        assert!(matches!(lss(&a, &[1.0, 1.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn blss_decoupled() {
        let n = 4;
        let mut t = Triplets::new(n, n + 1);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        let a = t.build();
        let mut row = vec![0.0; n + 1];
        row[n] = 1.0;
        let rhs = vec![1.0, 2.0, 3.0, 4.0];
        let x = blss(&a, &row, 5.0, &rhs).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn blss_matches_assembled_system() {
        let sq = random_spd(30, 11);
        let col: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut t = Triplets::new(30, 31);
        for (i, j, v) in sq.iter() {
            t.push(i, j, v);
        }
        for (i, &v) in col.iter().enumerate() {
            t.push(i, 30, v);
        }
        let a = t.build();
        let row: Vec<f64> = (0..31).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let rhs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let x = blss(&a, &row, 0.7, &rhs).unwrap();
        let mut b = rhs.clone();
        b.push(0.7);
        let y = lss(&bordered(&a, &row).unwrap(), &b).unwrap();
        assert_eq!(x, y);
        let full = bordered(&a, &row).unwrap();
        let r = vecops::sub(&full.matvec(&x), &b);
        assert!(vecops::norm_inf(&r) < 1e-10);
    }
}
