//! Residual and Jacobian evaluation.

use super::fdjac::fd_jacobian;
use super::{Axis, AuxEq, Layout, ProblemState};
use crate::error::{check_len, Error, Result};
use crate::fem::{assemble_boundary, assemble_boundary_jacobian, assemble_interior, assemble_load};
use crate::sparse::{vecops, SpMat, Triplets};

impl ProblemState {
    fn check_pde(&self, u: &[f64]) -> Result<()> {
        check_len("PDE vector", self.nu, u.len())
    }

    /// `G(u)` on the reduced unknowns.
    pub fn pde_residual(&self, u: &[f64], par: &[f64]) -> Result<Vec<f64>> {
        self.check_pde(u)?;
        if self.sw.sfem {
            self.pde_residual_semilinear(u, par)
        } else {
            self.pde_residual_full(u, par)
        }
    }

    pub fn pde_residual_full(&self, u: &[f64], par: &[f64]) -> Result<Vec<f64>> {
        let per = &self.ops.per;
        let uf = per.extend_vector(u)?;
        let co = self.model.coefficients(&self.mesh, &uf, par)?;
        let int = assemble_interior(&self.mesh, &co, self.neq)?;
        let load = assemble_load(&self.mesh, &co.f, self.neq)?;
        let bnd = assemble_boundary(&self.mesh, &self.ops.bc, &uf, par)?;
        let mut r = int.total().add(&bnd.q).matvec(&uf);
        for ((ri, fi), gi) in r.iter_mut().zip(&load).zip(&bnd.gb) {
            *ri -= fi + gi;
        }
        per.periodize_vector(&r)
    }

    pub fn pde_residual_semilinear(&self, u: &[f64], par: &[f64]) -> Result<Vec<f64>> {
        let ops = &self.ops;
        let [a, b] = self.model.operator_scales(par);
        let f = self.model.f(u, par);
        check_len("nodal f", self.nu, f.len())?;
        let mut r = ops.m.matvec(&f);
        r.iter_mut().for_each(|v| *v = -*v);
        ops.k.matvec_acc(u, a, &mut r);
        if b != 0.0 {
            ops.kadv.matvec_acc(u, b, &mut r);
        }
        match &ops.bnd {
            Some(bnd) => {
                bnd.q.matvec_acc(u, 1.0, &mut r);
                vecops::axpy(-1.0, &bnd.gb, &mut r);
            }
            None => {
                let uf = ops.per.extend_vector(u)?;
                let bnd = assemble_boundary(&self.mesh, &ops.bc, &uf, par)?;
                let mut rb = bnd.q.matvec(&uf);
                vecops::axpy(-1.0, &bnd.gb, &mut rb);
                vecops::axpy(1.0, &ops.per.periodize_vector(&rb)?, &mut r);
            }
        }
        Ok(r)
    }

    /// `∂uG`, analytic when `sw.jac` is set.
    pub fn pde_jacobian(&self, u: &[f64], par: &[f64]) -> Result<SpMat> {
        if self.sw.jac {
            self.pde_jacobian_analytic(u, par)
        } else {
            self.pde_jacobian_fd(u, par)
        }
    }

    pub fn pde_jacobian_analytic(&self, u: &[f64], par: &[f64]) -> Result<SpMat> {
        self.check_pde(u)?;
        let ops = &self.ops;
        if !self.sw.sfem {
            let uf = ops.per.extend_vector(u)?;
            let co = self.model.jac_coefficients(&self.mesh, &uf, par)?;
            let int = assemble_interior(&self.mesh, &co, self.neq)?;
            let bj = assemble_boundary_jacobian(&self.mesh, &ops.bc, &uf, par)?;
            return ops.per.periodize_operator(&int.total().add(&bj));
        }
        let [a, b] = self.model.operator_scales(par);
        let fu = self.model.fu(u, par);
        let np = ops.per.np_per;
        check_len("nodal fu", np * self.neq * self.neq, fu.len())?;
        let mut j = ops.k.lincomb(a, &ops.m.mul(&self.node_blocks(&fu)), -1.0);
        if b != 0.0 {
            j = j.lincomb(1.0, &ops.kadv, b);
        }
        let bj = match &ops.bnd {
            Some(bnd) => bnd.q.clone(),
            None => {
                let uf = ops.per.extend_vector(u)?;
                ops.per
                    .periodize_operator(&assemble_boundary_jacobian(&self.mesh, &ops.bc, &uf, par)?)?
            }
        };
        Ok(j.add(&bj))
    }

    /// Block matrix with `neq×neq` node-local blocks, node-major input.
    fn node_blocks(&self, blocks: &[f64]) -> SpMat {
        let neq = self.neq;
        let np = self.ops.per.np_per;
        let mut t = Triplets::with_capacity(self.nu, self.nu, np * neq * neq);
        for i in 0..np {
            for k in 0..neq {
                for l in 0..neq {
                    let v = blocks[i * neq * neq + k * neq + l];
                    if v != 0.0 {
                        t.push(k * np + i, l * np + i, v);
                    }
                }
            }
        }
        t.build()
    }

    /// Colored forward differences of [`Self::pde_residual`] with step `del`.
    pub fn pde_jacobian_fd(&self, u: &[f64], par: &[f64]) -> Result<SpMat> {
        let r0 = self.pde_residual(u, par)?;
        fd_jacobian(
            |v| self.pde_residual(v, par),
            u,
            &r0,
            self.neq,
            &self.ops.coloring,
            self.nc.del,
        )
    }

    /// `∂u(∂uG·φ)`; analytic when `sw.spjac` is set and the model has `f_uu`
    /// and `u`-independent boundary coefficients.
    pub fn spjac(&self, u: &[f64], phi: &[f64], par: &[f64]) -> Result<SpMat> {
        self.check_pde(phi)?;
        if self.sw.spjac && self.ops.bnd.is_some() {
            if let Some(fuu) = self.model.fuu(u, par) {
                let neq = self.neq;
                let np = self.ops.per.np_per;
                check_len("nodal fuu", np * neq * neq * neq, fuu.len())?;
                let mut b = vec![0.0; np * neq * neq];
                for i in 0..np {
                    for k in 0..neq {
                        for m in 0..neq {
                            let mut s = 0.0;
                            for l in 0..neq {
                                s += fuu[i * neq * neq * neq + (k * neq + l) * neq + m] * phi[l * np + i];
                            }
                            b[i * neq * neq + k * neq + m] = s;
                        }
                    }
                }
                return Ok(self.ops.m.mul(&self.node_blocks(&b)).scaled(-1.0));
            }
        }
        self.spjac_fd(u, phi, par)
    }

    /// Forward differences of `∂uG·φ`. With `u`-independent boundary terms
    /// only the nonlinear part `-M·(f_u φ)` depends on `u`; differencing it
    /// alone avoids cancellation against the (possibly large) linear part.
    pub fn spjac_fd(&self, u: &[f64], phi: &[f64], par: &[f64]) -> Result<SpMat> {
        if self.ops.bnd.is_some() {
            let neq = self.neq;
            let np = self.ops.per.np_per;
            let gphi = |v: &[f64]| -> Result<Vec<f64>> {
                let fu = self.model.fu(v, par);
                check_len("nodal fu", np * neq * neq, fu.len())?;
                let mut w = vec![0.0; self.nu];
                for i in 0..np {
                    for k in 0..neq {
                        w[k * np + i] = -(0..neq).map(|l| fu[i * neq * neq + k * neq + l] * phi[l * np + i]).sum::<f64>();
                    }
                }
                Ok(self.ops.m.matvec(&w))
            };
            let r0 = gphi(u)?;
            return fd_jacobian(gphi, u, &r0, self.neq, &self.ops.coloring, self.nc.del);
        }
        let gphi = |v: &[f64]| -> Result<Vec<f64>> { Ok(self.pde_jacobian(v, par)?.matvec(phi)) };
        let r0 = gphi(u)?;
        fd_jacobian(gphi, u, &r0, self.neq, &self.ops.coloring, self.nc.del)
    }

    fn phase_row(&self, axis: Axis) -> Result<Vec<f64>> {
        let uref = self
            .u_ref
            .as_ref()
            .ok_or_else(|| Error::domain("phase condition without reference profile"))?;
        let d = match axis {
            Axis::X => &self.ops.dx,
            Axis::Y => &self.ops.dy,
        };
        Ok(d.matvec(uref))
    }

    fn mass_row(&self, component: usize) -> Result<Vec<f64>> {
        if component >= self.neq {
            return Err(Error::domain(format!("mass constraint on missing component {component}")));
        }
        let np = self.ops.per.np_per;
        let mut ones = vec![0.0; self.nu];
        ones[component * np..(component + 1) * np].fill(1.0);
        Ok(self.ops.m.matvec(&ones))
    }

    /// Auxiliary equations `q(U)`.
    pub fn aux_residual(&self, u: &[f64], par: &[f64]) -> Result<Vec<f64>> {
        self.aux
            .iter()
            .map(|a| match *a {
                AuxEq::Mass { component, target } => {
                    let t = par
                        .get(target.wrapping_sub(1))
                        .ok_or_else(|| Error::domain(format!("mass target {target} out of range")))?;
                    Ok(vecops::dot(&self.mass_row(component)?, u) - t)
                }
                AuxEq::Phase { axis, anchored } => {
                    let g = self.phase_row(axis)?;
                    let mut q = vecops::dot(&g, u);
                    if anchored {
                        q -= vecops::dot(&g, self.u_ref.as_deref().unwrap_or_default());
                    }
                    Ok(q)
                }
            })
            .collect()
    }

    /// `∂q/∂u` (`nq × nu`), analytic when `sw.qjac` is set.
    pub fn aux_jacobian(&self, u: &[f64], par: &[f64]) -> Result<SpMat> {
        let nq = self.nq();
        let rows: Vec<Vec<f64>> = if self.sw.qjac {
            self.aux
                .iter()
                .map(|a| match *a {
                    AuxEq::Mass { component, .. } => self.mass_row(component),
                    AuxEq::Phase { axis, .. } => self.phase_row(axis),
                })
                .collect::<Result<_>>()?
        } else {
            let q0 = self.aux_residual(u, par)?;
            let mut rows = vec![vec![0.0; self.nu]; nq];
            let mut up = u.to_vec();
            for j in 0..self.nu {
                up[j] += self.nc.del;
                let q1 = self.aux_residual(&up, par)?;
                up[j] = u[j];
                for i in 0..nq {
                    rows[i][j] = (q1[i] - q0[i]) / self.nc.del;
                }
            }
            rows
        };
        Ok(SpMat::zeros(0, self.nu).append_rows(&rows))
    }

    /// Residual of the continuation system (length `n_eq`).
    pub fn residual(&self, uu: &[f64]) -> Result<Vec<f64>> {
        check_len("U", self.nv() + self.naux(), uu.len())?;
        let nu = self.nu;
        let nv = self.nv();
        let (u, par) = (&uu[..nu], &uu[nv..]);
        let mut r = self.pde_residual(u, par)?;
        if self.layout == Layout::Extended {
            let phi = &uu[nu..2 * nu];
            let gu = self.pde_jacobian(u, par)?;
            r.extend(gu.matvec(phi));
            r.push(vecops::dot(phi, &self.ops.m.matvec(phi)) - 1.0);
        }
        r.extend(self.aux_residual(u, par)?);
        Ok(r)
    }

    /// `∂(residual)/∂(v, w̃, α)`, shape `n_eq × (n_eq + 1)`.
    pub fn jacobian(&self, uu: &[f64]) -> Result<SpMat> {
        let r0 = self.residual(uu)?;
        self.jacobian_with(uu, &r0)
    }

    /// [`Self::jacobian`] with a known residual at `uu`.
    pub fn jacobian_with(&self, uu: &[f64], r0: &[f64]) -> Result<SpMat> {
        self.jacobian_impl(uu, r0, true)
    }

    /// Square part `∂(residual)/∂(v, w̃)` (α column omitted).
    pub fn jacobian_square(&self, uu: &[f64], r0: &[f64]) -> Result<SpMat> {
        self.jacobian_impl(uu, r0, false)
    }

    fn jacobian_impl(&self, uu: &[f64], r0: &[f64], with_alpha: bool) -> Result<SpMat> {
        let n = self.n_eq();
        check_len("residual", n, r0.len())?;
        let nu = self.nu;
        let nv = self.nv();
        let (u, par) = (&uu[..nu], &uu[nv..]);
        let gu = self.pde_jacobian(u, par)?;
        let qu = self.aux_jacobian(u, par)?;
        let ncols = if with_alpha { n + 1 } else { n };
        let mut t = Triplets::with_capacity(n, ncols, 2 * gu.nnz() + n);
        t.push_block(0, 0, &gu, 1.0);
        let qrow0 = match self.layout {
            Layout::Normal => nu,
            Layout::Extended => {
                let phi = &uu[nu..2 * nu];
                t.push_block(nu, 0, &self.spjac(u, phi, par)?, 1.0);
                t.push_block(nu, nu, &gu, 1.0);
                for (j, v) in self.ops.m.matvec(phi).into_iter().enumerate() {
                    t.push(2 * nu, nu + j, 2.0 * v);
                }
                2 * nu + 1
            }
        };
        t.push_block(qrow0, 0, &qu, 1.0);
        // parameter columns (w̃ first, α last) by forward differences
        let pos = self.active_positions();
        let mut up = uu.to_vec();
        for (c, &p) in pos.iter().enumerate().take(ncols).skip(nv) {
            up[p] += self.nc.del;
            let r1 = self.residual(&up)?;
            up[p] = uu[p];
            for (i, (a, b)) in r1.iter().zip(r0).enumerate() {
                let d = (a - b) / self.nc.del;
                if d != 0.0 {
                    t.push(i, c, d);
                }
            }
        }
        Ok(t.build())
    }
}

/// Largest entrywise difference between the analytic `∂uG` and its
/// forward-difference approximation at the current point.
pub fn jaccheck(p: &ProblemState) -> Result<f64> {
    let (u, par) = (&p.u[..p.nu], p.params());
    let a = p.pde_jacobian_analytic(u, par)?;
    let n = p.pde_jacobian_fd(u, par)?;
    Ok(a.max_abs_diff(&n))
}

impl ProblemState {
    /// Largest entrywise difference between the analytic `∂u(∂uG·φ)` and
    /// forward differences of `∂uG·φ`.
    pub fn spjac_check(&self, phi: &[f64]) -> Result<f64> {
        let (u, par) = (&self.u[..self.nu], self.params());
        let mut p = self.clone();
        p.sw.spjac = true;
        let a = p.spjac(u, phi, par)?;
        let n = p.spjac_fd(u, phi, par)?;
        Ok(a.max_abs_diff(&n))
    }
}
