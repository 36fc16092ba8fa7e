//! Identification of opposite rectangle sides (cylinder and torus geometries).
//!
//! `fill` (full × reduced) copies reduced values onto partner nodes, `drop`
//! (reduced × full) selects the retained nodes. Bottom and left sides are
//! retained; top and right nodes are mapped onto them.

use crate::error::{check_len, Error, Result};
use crate::mesh::{Geometry, Mesh};
use crate::sparse::{SpMat, Triplets};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BcPer {
    #[default]
    None = 0,
    TopBottom = 1,
    LeftRight = 2,
    Torus = 3,
}

impl BcPer {
    pub fn from_code(c: i64) -> Result<Self> {
        match c {
            0 => Ok(BcPer::None),
            1 => Ok(BcPer::TopBottom),
            2 => Ok(BcPer::LeftRight),
            3 => Ok(BcPer::Torus),
            _ => Err(Error::domain(format!("bcper must be 0..=3, got {c}"))),
        }
    }

    pub fn code(self) -> i64 {
        self as i64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Periodization {
    pub bcper: BcPer,
    pub fill: SpMat,
    pub drop: SpMat,
    /// Reduced unknown count over all components.
    pub nu_per: usize,
    /// Reduced node count per component.
    pub np_per: usize,
    pub np_full: usize,
    pub neq: usize,
    /// Reduced node index of every full-mesh node.
    pub node_map: Vec<usize>,
}

impl Periodization {
    /// Builds fill/drop from a partner map: `partner[i] = j` identifies node `i`
    /// with the retained node `j < ...`; retained nodes map to themselves.
    pub fn from_partners(partner: &[usize], neq: usize, bcper: BcPer) -> Result<Self> {
        let np = partner.len();
        let mut reduced = vec![usize::MAX; np];
        let mut np_per = 0;
        for i in 0..np {
            if partner[i] == i {
                reduced[i] = np_per;
                np_per += 1;
            }
        }
        let mut fill = Triplets::with_capacity(np, np_per, np);
        let mut drop = Triplets::with_capacity(np_per, np, np_per);
        for i in 0..np {
            let p = partner[i];
            if p >= np || partner[p] != p {
                return Err(Error::domain(format!("node {i} maps to non-retained node {p}")));
            }
            fill.push(i, reduced[p], 1.0);
            if p == i {
                drop.push(reduced[i], i, 1.0);
            }
        }
        let (fill, drop) = (fill.build(), drop.build());
        let node_map = partner.iter().map(|&p| reduced[p]).collect();
        Ok(Self {
            bcper,
            fill: fill.kron_identity(neq),
            drop: drop.kron_identity(neq),
            nu_per: neq * np_per,
            np_per,
            np_full: np,
            neq,
            node_map,
        })
    }

    pub fn identity(np: usize, neq: usize) -> Self {
        let partner: Vec<usize> = (0..np).collect();
        Self::from_partners(&partner, neq, BcPer::None).expect("identity partners are valid")
    }

    pub fn is_identity(&self) -> bool {
        self.bcper == BcPer::None
    }

    pub fn nu_full(&self) -> usize {
        self.neq * self.np_full
    }

    /// `fillᵀ·A·fill`.
    pub fn periodize_operator(&self, a: &SpMat) -> Result<SpMat> {
        check_len("periodize_operator rows", self.nu_full(), a.nrows())?;
        check_len("periodize_operator cols", self.nu_full(), a.ncols())?;
        if self.is_identity() {
            return Ok(a.clone());
        }
        Ok(self.fill.transpose().mul(&a.mul(&self.fill)))
    }

    /// `fillᵀ·A` for a matrix with full-length rows and arbitrary columns.
    pub fn periodize_rows(&self, a: &SpMat) -> Result<SpMat> {
        check_len("periodize_rows", self.nu_full(), a.nrows())?;
        if self.is_identity() {
            return Ok(a.clone());
        }
        Ok(self.fill.transpose().mul(a))
    }

    /// `fillᵀ·F`.
    pub fn periodize_vector(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len("periodize_vector", self.nu_full(), f.len())?;
        if self.is_identity() {
            return Ok(f.to_vec());
        }
        Ok(self.fill.tmatvec(f))
    }

    /// `fill·u_per`.
    pub fn extend_vector(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("extend_vector", self.nu_per, u.len())?;
        if self.is_identity() {
            return Ok(u.to_vec());
        }
        Ok(self.fill.matvec(u))
    }

    /// `drop·u_full`.
    pub fn restrict_vector(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("restrict_vector", self.nu_full(), u.len())?;
        if self.is_identity() {
            return Ok(u.to_vec());
        }
        Ok(self.drop.matvec(u))
    }
}

/// Builds the identification for a structured rectangle mesh.
pub fn build_periodization(mesh: &Mesh, neq: usize, bcper: BcPer) -> Result<Periodization> {
    let np = mesh.np();
    if bcper == BcPer::None {
        return Ok(Periodization::identity(np, neq));
    }
    if mesh.geometry != Geometry::Rect || np != (mesh.nx + 1) * (mesh.ny + 1) {
        return Err(Error::domain("periodic identification needs a structured rectangle mesh"));
    }
    let row = mesh.nx + 1;
    let (nx, ny) = (mesh.nx, mesh.ny);
    let mut partner: Vec<usize> = (0..np).collect();
    let top_bottom = matches!(bcper, BcPer::TopBottom | BcPer::Torus);
    let left_right = matches!(bcper, BcPer::LeftRight | BcPer::Torus);
    if top_bottom {
        for i in 0..=nx {
            let (t, b) = (ny * row + i, i);
            if mesh.points[t][0] != mesh.points[b][0] {
                return Err(Error::domain(format!("top/bottom grids differ at column {i}")));
            }
            partner[t] = b;
        }
    }
    if left_right {
        for j in 0..=ny {
            let (r, l) = (j * row + nx, j * row);
            if mesh.points[r][1] != mesh.points[l][1] {
                return Err(Error::domain(format!("left/right grids differ at row {j}")));
            }
            partner[r] = partner[l];
        }
    }
    if top_bottom && left_right {
        // top-right corner collapses onto the bottom-left one
        partner[ny * row + nx] = 0;
    }
    // resolve chains (e.g. top-left → bottom-left)
    for i in 0..np {
        let mut p = partner[i];
        while partner[p] != p {
            p = partner[p];
        }
        partner[i] = p;
    }
    Periodization::from_partners(&partner, neq, bcper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_interior, assemble_mass, CoeffTensors, Field};
    use crate::mesh::build_rect_mesh;
    use proptest::prelude::*;

    fn chain() -> Periodization {
        Periodization::from_partners(&[0, 1, 2, 0], 1, BcPer::LeftRight).unwrap()
    }

    #[test]
    fn chain_fill_drop() {
        let p = chain();
        assert_eq!(
            p.fill.to_dense(),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0]
            ]
        );
        assert_eq!(
            p.drop.to_dense(),
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0]
            ]
        );
        assert_eq!(p.drop.mul(&p.fill), SpMat::identity(3));
    }

    #[test]
    fn chain_operator_and_vector() {
        let p = chain();
        let m: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| (1 + i * 4 + j) as f64).collect())
            .collect();
        let a = SpMat::from_dense(&m);
        let ap = p.periodize_operator(&a).unwrap();
        assert_eq!(ap.get(0, 0), m[0][0] + m[0][3] + m[3][0] + m[3][3]);
        assert_eq!(p.periodize_vector(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![5.0, 2.0, 3.0]);
        assert_eq!(p.extend_vector(&[7.0, 8.0, 9.0]).unwrap(), vec![7.0, 8.0, 9.0, 7.0]);
    }

    #[test]
    fn none_is_identity() {
        let m = build_rect_mesh(1.0, 1.0, 3, 2).unwrap();
        let p = build_periodization(&m, 2, BcPer::None).unwrap();
        assert_eq!(p.nu_per, 2 * m.np());
        assert_eq!(p.fill, SpMat::identity(2 * m.np()));
        assert_eq!(p.drop, SpMat::identity(2 * m.np()));
    }

    #[test]
    fn torus_counts() {
        let m = build_rect_mesh(1.0, 1.0, 2, 2).unwrap();
        let p = build_periodization(&m, 1, BcPer::Torus).unwrap();
        assert_eq!(p.np_per, 4);
        let sums: Vec<f64> = (0..4).map(|j| p.fill.col(j).1.iter().sum()).collect();
        let mut sorted = sums.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(build_periodization(&m, 1, BcPer::TopBottom).unwrap().np_per, 6);
        assert_eq!(build_periodization(&m, 3, BcPer::LeftRight).unwrap().nu_per, 18);
    }

    #[test]
    fn disk_is_rejected() {
        let m = crate::mesh::build_disk_mesh(1.0, 4).unwrap();
        assert!(build_periodization(&m, 1, BcPer::TopBottom).is_err());
    }

    #[test]
    fn operator_identities() {
        let m = build_rect_mesh(1.0, 0.7, 9, 6).unwrap();
        let mut co = CoeffTensors::zeros(1);
        co.c = Field::scalar(1.0).into_c(1);
        let k = assemble_interior(&m, &co, 1).unwrap().k;
        let mass = assemble_mass(&m, 1);
        for bc in [BcPer::None, BcPer::TopBottom, BcPer::LeftRight, BcPer::Torus] {
            let p = build_periodization(&m, 1, bc).unwrap();
            let kp = p.periodize_operator(&k).unwrap();
            let r = kp.matvec(&vec![1.0; p.nu_per]);
            assert!(r.iter().all(|v| v.abs() <= 1e-12));
            assert!(kp.is_symmetric(1e-14));
            let mp = p.periodize_operator(&mass).unwrap();
            assert!((mp.sum() - 2.8).abs() <= 1e-10);
            assert_eq!(p.drop.mul(&p.fill), SpMat::identity(p.nu_per));
        }
    }

    proptest! {
        #[test]
        fn drop_extend_roundtrip(nx in 1usize..6, ny in 1usize..6, code in 0i64..4, seed in 0u64..1000) {
            let m = build_rect_mesh(1.0, 1.0, nx, ny).unwrap();
            let p = build_periodization(&m, 2, BcPer::from_code(code).unwrap()).unwrap();
            let u: Vec<f64> = (0..p.nu_per).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64).collect();
            let full = p.extend_vector(&u).unwrap();
            prop_assert_eq!(p.restrict_vector(&full).unwrap(), u);
            // fill·drop is the identity on periodic vectors
            prop_assert_eq!(p.extend_vector(&p.restrict_vector(&full).unwrap()).unwrap(), full);
            for j in 0..p.nu_per {
                let s: f64 = p.fill.col(j).1.iter().sum();
                prop_assert!(s == 1.0 || s == 2.0 || s == 4.0);
            }
        }
    }
}
