//! Eigenvalues of `Gu v = μ M v` closest to zero.
//!
//! Large problems use shift-invert Arnoldi on `(Gu - σM)^{-1} M` with
//! thick restarts: the kept subspace is spanned by the real and imaginary
//! parts of the wanted Ritz vectors, which is invariant under the projected
//! operator, so expansion continues from the current residual direction
//! exactly as in Krylov-Schur. Small problems go through a dense solver.

use faer::linalg::solvers::Solve;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{vecops, SpMat};

use super::Lu;

/// Problems up to this size use the dense eigen solver.
pub const DENSE_EIG_MAX: usize = 600;

const RITZ_TOL: f64 = 1e-11;
const MAX_RESTARTS: usize = 300;

/// Eigenpairs sorted by increasing `|μ|`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<C64>,
    /// Unit 2-norm eigenvectors, phase fixed so the largest entry is real positive.
    pub vectors: Vec<Vec<C64>>,
    /// `‖Gu v - μ M v‖₂` per pair.
    pub residuals: Vec<f64>,
    /// Number of returned eigenvalues with negative real part.
    pub ineg: usize,
    /// Shift actually used by the iterative path (0 for the dense path).
    pub shift: f64,
    /// `max(1, ‖Gu‖∞ / ‖M‖∞)`, the reference magnitude for residual checks.
    pub scale: f64,
}

impl Spectrum {
    /// Real part of the eigenvector for the smallest `|μ|`, normalized.
    pub fn smallest_real_vector(&self) -> Option<(f64, Vec<f64>)> {
        let (mu, v) = (self.values.first()?, self.vectors.first()?);
        let mut re: Vec<f64> = v.iter().map(|z| z.re).collect();
        let nrm = vecops::norm2(&re);
        if nrm == 0.0 {
            return None;
        }
        re.iter_mut().for_each(|x| *x /= nrm);
        Some((mu.re, re))
    }

    pub fn certified(&self, tol: f64) -> bool {
        self.residuals.iter().all(|&r| r <= tol * self.scale)
    }
}

/// The `min(neig, n)` eigenvalues of `Gu v = μ M v` of smallest magnitude.
pub fn spectrum_near_zero(gu: &SpMat, m: &SpMat, neig: usize) -> Result<Spectrum> {
    let n = gu.nrows();
    if gu.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::domain("spectrum_near_zero: shape mismatch"));
    }
    let nev = neig.min(n);
    if nev == 0 {
        return Err(Error::domain("spectrum_near_zero: neig must be positive"));
    }
    let scale = (gu.norm_inf() / m.norm_inf().max(f64::MIN_POSITIVE)).max(1.0);
    let (pairs, shift) = if n <= DENSE_EIG_MAX {
        (dense_pairs(gu, m)?, 0.0)
    } else {
        iterative_pairs(gu, m, nev, scale)?
    };
    let mut pairs = pairs;
    pairs.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()).then(a.0.im.total_cmp(&b.0.im)));
    pairs.truncate(nev);
    let mut values = Vec::with_capacity(nev);
    let mut vectors = Vec::with_capacity(nev);
    let mut residuals = Vec::with_capacity(nev);
    for (mu, v) in pairs {
        let v = normalize_phase(v);
        residuals.push(generalized_residual(gu, m, mu, &v));
        values.push(mu);
        vectors.push(v);
    }
    let ineg = values.iter().filter(|z| z.re < 0.0).count();
    Ok(Spectrum {
        values,
        vectors,
        residuals,
        ineg,
        shift,
        scale,
    })
}

fn normalize_phase(mut v: Vec<C64>) -> Vec<C64> {
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { C64::new(1.0, 0.0) };
    let s = phase / nrm.max(f64::MIN_POSITIVE);
    v.iter_mut().for_each(|z| *z *= s);
    v
}

fn complex_matvec(a: &SpMat, v: &[C64]) -> Vec<C64> {
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    let (ar, ai) = (a.matvec(&re), a.matvec(&im));
    ar.into_iter().zip(ai).map(|(r, i)| C64::new(r, i)).collect()
}

fn generalized_residual(gu: &SpMat, m: &SpMat, mu: C64, v: &[C64]) -> f64 {
    let gv = complex_matvec(gu, v);
    let mv = complex_matvec(m, v);
    gv.iter()
        .zip(&mv)
        .map(|(g, mm)| (g - mu * mm).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Dense path: eigenpairs of `M^{-1} Gu`.
fn dense_pairs(gu: &SpMat, m: &SpMat) -> Result<Vec<(C64, Vec<C64>)>> {
    let n = gu.nrows();
    let md = m.to_faer_dense();
    let gd = gu.to_faer_dense();
    let c = md.partial_piv_lu().solve(&gd);
    if (0..n).any(|j| (0..n).any(|i| !c[(i, j)].is_finite())) {
        return Err(Error::Singular("mass matrix is singular".into()));
    }
    let evd = c
        .eigen()
        .map_err(|e| Error::NotConverged(format!("dense eigen solver: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    Ok((0..n)
        .map(|k| (s[k], (0..n).map(|i| u[(i, k)]).collect()))
        .collect())
}

/// Eigen-decomposition of a small dense real matrix given row-major.
fn small_eig(h: &[Vec<f64>]) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let k = h.len();
    let hm = faer::Mat::<f64>::from_fn(k, k, |i, j| h[i][j]);
    let evd = hm
        .eigen()
        .map_err(|e| Error::NotConverged(format!("projected eigen problem: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let vals = (0..k).map(|i| s[i]).collect();
    let vecs = (0..k).map(|c| (0..k).map(|r| u[(r, c)]).collect()).collect();
    Ok((vals, vecs))
}

/// Orthogonalizes `x` against `basis` (two classical Gram-Schmidt passes).
fn orthogonalize(basis: &[Vec<f64>], x: &mut [f64]) {
    for _ in 0..2 {
        for b in basis {
            let c = vecops::dot(b, x);
            vecops::axpy(-c, b, x);
        }
    }
}

fn lin_comb(cols: &[Vec<f64>], coef: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (c, &a) in cols.iter().zip(coef) {
        if a != 0.0 {
            vecops::axpy(a, c, &mut out);
        }
    }
    out
}

fn iterative_pairs(gu: &SpMat, m: &SpMat, nev: usize, scale: f64) -> Result<(Vec<(C64, Vec<C64>)>, f64)> {
    let mut shift = 0.0;
    let lu = match Lu::new(gu).and_then(|lu| probe(lu, gu)) {
        Ok(lu) => lu,
        Err(_) => {
            shift = -1e-6 * scale;
            log::debug!("spectrum: Gu singular at 0, shifting to {shift:e}");
            let a = gu.lincomb(1.0, m, -shift);
            Lu::new(&a)
                .and_then(|lu| probe(lu, &a))
                .map_err(|e| Error::Singular(format!("shift-invert factorization failed: {e}")))?
        }
    };
    let op = |x: &[f64]| lu.solve(&m.matvec(x));
    let thetas = shift_invert_arnoldi(&op, gu.nrows(), nev)?;
    Ok((
        thetas
            .into_iter()
            .map(|(theta, v)| (C64::new(shift, 0.0) + theta.inv(), v))
            .collect(),
        shift,
    ))
}

/// Rejects factorizations that are numerically singular: solves that are
/// non-finite or grow beyond `1/PROBE_EPS` relative to `‖A‖∞`.
fn probe(lu: Lu, a: &SpMat) -> Result<Lu> {
    const PROBE_EPS: f64 = 1e-12;
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let x = lu.solve(&b)?;
    if vecops::norm_inf(&x) * a.norm_inf() * PROBE_EPS > vecops::norm_inf(&b) {
        return Err(Error::Singular("numerically singular at shift".into()));
    }
    Ok(lu)
}

/// `nev` eigenpairs of largest `|θ|` of the operator `op` (dimension `n`).
fn shift_invert_arnoldi(
    op: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    n: usize,
    nev: usize,
) -> Result<Vec<(C64, Vec<C64>)>> {
    let mmax = n.min((2 * nev + 20).max(40));
    let keep = (nev + (mmax - nev) / 3).min(mmax.saturating_sub(4)).max(nev.min(mmax - 1));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001 ^ n as u64);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(mmax + 1);
    let mut w: Vec<Vec<f64>> = Vec::with_capacity(mmax + 1);
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut candidate = random(&mut rng);

    for restart in 0..=MAX_RESTARTS {
        while v.len() < mmax {
            let before = vecops::norm2(&candidate);
            orthogonalize(&v, &mut candidate);
            let mut nrm = vecops::norm2(&candidate);
            if !(nrm > 1e-10 * before.max(f64::MIN_POSITIVE)) {
                // invariant subspace found; continue with a fresh direction
                candidate = random(&mut rng);
                orthogonalize(&v, &mut candidate);
                nrm = vecops::norm2(&candidate);
            }
            let q = vecops::scale(1.0 / nrm, &candidate);
            let aq = op(&q)?;
            let k = v.len();
            for (i, row) in h.iter_mut().enumerate() {
                row.push(vecops::dot(&v[i], &aq));
            }
            let mut last: Vec<f64> = w.iter().map(|wj| vecops::dot(&q, wj)).collect();
            last.push(vecops::dot(&q, &aq));
            h.push(last);
            debug_assert_eq!(h.len(), k + 1);
            v.push(q);
            candidate = aq.clone();
            w.push(aq);
        }

        let k = v.len();
        let (vals, vecs) = small_eig(&h)?;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| vals[b].norm().total_cmp(&vals[a].norm()).then(vals[b].im.total_cmp(&vals[a].im)));

        let ritz = |idx: usize| -> (Vec<C64>, f64) {
            let y = &vecs[idx];
            let mut x = vec![C64::new(0.0, 0.0); n];
            let mut r = vec![C64::new(0.0, 0.0); n];
            for j in 0..k {
                let yj = y[j];
                for i in 0..n {
                    x[i] += yj * v[j][i];
                    r[i] += yj * w[j][i];
                }
            }
            let th = vals[idx];
            let mut rn = 0.0;
            let mut xn = 0.0;
            for i in 0..n {
                rn += (r[i] - th * x[i]).norm_sqr();
                xn += x[i].norm_sqr();
            }
            (x, (rn / xn.max(f64::MIN_POSITIVE)).sqrt())
        };

        let wanted = &order[..nev.min(k)];
        let mut converged = true;
        let mut pairs = Vec::with_capacity(wanted.len());
        for &idx in wanted {
            let (x, res) = ritz(idx);
            if res > RITZ_TOL * vals[idx].norm() {
                converged = false;
            }
            pairs.push((vals[idx], x, res));
        }
        log::trace!(
            "arnoldi restart {restart}: worst relative Ritz residual {:e}",
            pairs.iter().map(|p| p.2 / p.0.norm()).fold(0.0, f64::max)
        );
        if converged || k == n || restart == MAX_RESTARTS {
            if !converged {
                log::warn!("shift-invert Arnoldi: not all {nev} Ritz pairs converged");
            }
            return Ok(pairs.into_iter().map(|(t, x, _)| (t, x)).collect());
        }

        // thick restart on the real span of the leading Ritz vectors
        let mut ycols: Vec<Vec<f64>> = Vec::new();
        for &idx in order.iter().take(keep) {
            let y = &vecs[idx];
            let re: Vec<f64> = y.iter().map(|z| z.re).collect();
            ycols.push(re);
            if vals[idx].im.abs() > 0.0 {
                ycols.push(y.iter().map(|z| z.im).collect());
            }
        }
        let mut q: Vec<Vec<f64>> = Vec::new();
        for mut y in ycols {
            let before = vecops::norm2(&y);
            orthogonalize(&q, &mut y);
            let nrm = vecops::norm2(&y);
            if nrm > 1e-8 * before && q.len() < mmax - 2 {
                q.push(vecops::scale(1.0 / nrm, &y));
            }
        }
        let nv: Vec<Vec<f64>> = q.iter().map(|c| lin_comb(&v, c, n)).collect();
        let nw: Vec<Vec<f64>> = q.iter().map(|c| lin_comb(&w, c, n)).collect();
        let hq: Vec<Vec<f64>> = q.iter().map(|c| {
            (0..k).map(|i| vecops::dot(&h[i], c)).collect::<Vec<f64>>()
        }).collect();
        let nh: Vec<Vec<f64>> = q
            .iter()
            .map(|qi| hq.iter().map(|hqj| vecops::dot(qi, hqj)).collect())
            .collect();
        // projected out of the old basis, the last A·v is the Arnoldi residual
        orthogonalize(&v, &mut candidate);
        v = nv;
        w = nw;
        h = nh;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_interior, assemble_mass, CoeffTensors, Field};
    use crate::mesh::build_rect_mesh;

    fn laplacian(nx: usize, ny: usize) -> (SpMat, SpMat) {
        let m = build_rect_mesh(1.0, 0.9, nx, ny).unwrap();
        let mut co = CoeffTensors::zeros(1);
        co.c = Field::scalar(1.0).into_c(1);
        (assemble_interior(&m, &co, 1).unwrap().k, assemble_mass(&m, 1))
    }

    #[test]
    fn neumann_kernel_dense() {
        let (k, m) = laplacian(10, 9);
        let s = spectrum_near_zero(&k, &m, 5).unwrap();
        assert!(s.values[0].norm() < 1e-9);
        assert_eq!(s.ineg, 0);
        assert!(s.values.iter().all(|z| z.im.abs() <= 1e-9 * z.norm().max(1.0)));
        assert!(s.certified(1e-6));
    }

    #[test]
    fn neumann_kernel_iterative() {
        let (k, m) = laplacian(30, 27);
        let s = spectrum_near_zero(&k, &m, 6).unwrap();
        assert!(s.values[0].norm() < 1e-6, "{:?}", s.values);
        assert!(s.certified(1e-6), "{:?} {:?} {}", s.residuals, s.values, s.scale);
        // Neumann eigenvalues (kπ/2)² + (lπ/1.8)² on (-1,1)x(-0.9,0.9)
        let exact = (std::f64::consts::PI / 2.0).powi(2);
        assert!((s.values[1].re - exact).abs() / exact < 0.02);
    }

    #[test]
    fn fifty_eigenvalues_on_fine_grid() {
        let (k, m) = laplacian(60, 54);
        let t = std::time::Instant::now();
        let s = spectrum_near_zero(&k, &m, 50).unwrap();
        eprintln!("n={} neig=50 took {:?}", k.nrows(), t.elapsed());
        assert_eq!(s.values.len(), 50);
        assert!(s.certified(1e-6), "{:?}", s.residuals);
        let mut exact: Vec<f64> = (0..20)
            .flat_map(|a| (0..20).map(move |b| {
                let (a, b) = (a as f64, b as f64);
                (a * std::f64::consts::PI / 2.0).powi(2) + (b * std::f64::consts::PI / 1.8).powi(2)
            }))
            .collect();
        exact.sort_by(f64::total_cmp);
        for i in 1..10 {
            assert!((s.values[i].re - exact[i]).abs() <= 0.02 * exact[i], "{i}: {} vs {}", s.values[i], exact[i]);
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let (k, m) = laplacian(20, 18);
        assert!(k.nrows() <= DENSE_EIG_MAX);
        let shifted = k.lincomb(1.0, &m, -3.0);
        let dense = spectrum_near_zero(&shifted, &m, 8).unwrap();
        let op_lu = Lu::new(&shifted).unwrap();
        let op = |x: &[f64]| op_lu.solve(&m.matvec(x));
        let mut it: Vec<C64> = shift_invert_arnoldi(&op, k.nrows(), 8)
            .unwrap()
            .into_iter()
            .map(|(t, _)| t.inv())
            .collect();
        it.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        for (a, b) in dense.values.iter().zip(&it) {
            assert!((a - b).norm() <= 1e-6 * a.norm().max(1.0), "{a} vs {b}");
        }
        assert_eq!(dense.ineg, it.iter().filter(|z| z.re < 0.0).count());
    }

    #[test]
    fn nonsymmetric_complex_pairs() {
        // advection makes the operator non-normal with complex eigenvalues
        let mesh = build_rect_mesh(1.0, 0.9, 28, 25).unwrap();
        let mut co = CoeffTensors::zeros(2);
        co.c = CoeffTensors::diagonal_diffusion(&[1.0, 1.0]);
        co.a = Field::Const(vec![0.0, -2.0, 2.0, 0.0]);
        co.b = CoeffTensors::diagonal_advection(2, 0.5, 0.2);
        let ops = assemble_interior(&mesh, &co, 2).unwrap();
        let gu = ops.total();
        let m = assemble_mass(&mesh, 2);
        let s = spectrum_near_zero(&gu, &m, 6).unwrap();
        assert!(s.certified(1e-6), "{:?} {:?} {}", s.residuals, s.values, s.scale);
        assert!(s.values.iter().any(|z| z.im.abs() > 1e-3));
    }
}
