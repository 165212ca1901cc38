//! Matrix-free XXZ Hamiltonian inside one magnetization sector,
//!
//! ```text
//! H = sum_j ( Sx_j Sx_{j+1} + Sy_j Sy_{j+1} + lambda Sz_j Sz_{j+1} )
//! ```
//!
//! with unit transverse coupling. The transverse part is written as
//! `(S+ S- + S- S+) / 2`, so every antiparallel bond hops with amplitude 1/2,
//! and every bond contributes `+lambda/4` (parallel) or `-lambda/4`
//! (antiparallel) to the diagonal.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SpinBasis;
use crate::error::{Error, Result};

/// Largest sector that [`XxzHamiltonian::materialize`] will build.
pub const MAX_DENSE_DIM: usize = 4096;

const ROW_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

impl Boundary {
    pub fn bond_count(self, sites: usize) -> usize {
        match self {
            Boundary::Periodic => sites,
            Boundary::Open => sites - 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            "open" | "obc" => Ok(Boundary::Open),
            other => Err(Error::domain(format!(
                "unknown boundary condition {other:?} (expected periodic or open)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct XxzHamiltonian {
    basis: Arc<SpinBasis>,
    lambda: f64,
    boundary: Boundary,
    /// Bits `j` for which the bond `(j, j+1 mod L)` exists.
    bond_mask: u64,
}

impl XxzHamiltonian {
    pub fn new(basis: Arc<SpinBasis>, lambda: f64, boundary: Boundary) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::domain(format!("anisotropy must be finite, got {lambda}")));
        }
        let sites = basis.sites();
        if boundary == Boundary::Periodic && sites < 3 {
            return Err(Error::domain(format!(
                "periodic chains need at least 3 sites (L = {sites} would count its single bond twice)"
            )));
        }
        let bond_mask = (1u64 << boundary.bond_count(sites)) - 1;
        Ok(Self {
            basis,
            lambda,
            boundary,
            bond_mask,
        })
    }

    pub fn basis(&self) -> &Arc<SpinBasis> {
        &self.basis
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Bit `j` set iff bond `(j, j+1)` is antiparallel in `state`.
    #[inline]
    fn antiparallel_bonds(&self, state: u64) -> u64 {
        let sites = self.basis.sites();
        let shifted = (state >> 1) | ((state & 1) << (sites - 1));
        (state ^ shifted) & self.bond_mask
    }

    #[inline]
    fn partner(&self, state: u64, bond: u32) -> u64 {
        let next = (bond as usize + 1) % self.basis.sites();
        state ^ (1u64 << bond) ^ (1u64 << next)
    }

    /// `sum_j Sz_j Sz_{j+1}` evaluated on a basis configuration.
    #[inline]
    pub fn zz_diagonal(&self, state: u64) -> f64 {
        let bonds = self.bond_mask.count_ones() as f64;
        let anti = self.antiparallel_bonds(state).count_ones() as f64;
        0.25 * (bonds - 2.0 * anti)
    }

    fn row(&self, state: u64, v_row: f64, v: &[f64]) -> f64 {
        let states = self.basis.states();
        let mut acc = self.lambda * self.zz_diagonal(state) * v_row;
        let mut anti = self.antiparallel_bonds(state);
        while anti != 0 {
            let bond = anti.trailing_zeros();
            anti &= anti - 1;
            match states.binary_search(&self.partner(state, bond)) {
                Ok(j) => acc += 0.5 * v[j],
                Err(_) => debug_assert!(false, "hop left the magnetization sector"),
            }
        }
        acc
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let dim = self.dim();
        if v.len() != dim {
            return Err(Error::Shape { expected: dim, got: v.len() });
        }
        if out.len() != dim {
            return Err(Error::Shape { expected: dim, got: out.len() });
        }
        let states = self.basis.states();
        if dim >= 4 * ROW_CHUNK {
            out.par_chunks_mut(ROW_CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * ROW_CHUNK;
                    for (k, y) in chunk.iter_mut().enumerate() {
                        let i = base + k;
                        *y = self.row(states[i], v[i], v);
                    }
                });
        } else {
            for (i, y) in out.iter_mut().enumerate() {
                *y = self.row(states[i], v[i], v);
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// The lambda-independent `sum_j Sz_j Sz_{j+1}` operator applied to `v`.
    pub fn apply_zz(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Shape { expected: self.dim(), got: v.len() });
        }
        Ok(self
            .basis
            .states()
            .iter()
            .zip(v)
            .map(|(&s, &x)| self.zz_diagonal(s) * x)
            .collect())
    }

    /// Dense copy of the sector matrix, for oracle checks on small sectors.
    pub fn materialize(&self) -> Result<DenseMatrix> {
        let dim = self.dim();
        if dim > MAX_DENSE_DIM {
            return Err(Error::TooLarge { dim, max: MAX_DENSE_DIM });
        }
        let mut m = DenseMatrix::zeros(dim);
        for (i, &s) in self.basis.states().iter().enumerate() {
            *m.get_mut(i, i) += self.lambda * self.zz_diagonal(s);
            let mut anti = self.antiparallel_bonds(s);
            while anti != 0 {
                let bond = anti.trailing_zeros();
                anti &= anti - 1;
                let j = self.basis.state_index(self.partner(s, bond))?;
                *m.get_mut(j, i) += 0.5;
            }
        }
        Ok(m)
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    entries: Vec<f64>,
}

/// Full spectrum of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl DenseEigen {
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k]
    }
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![0.0; dim * dim] }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.entries[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.entries[i * self.dim + j]
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::Shape { expected: self.dim, got: v.len() });
        }
        Ok(self
            .entries
            .chunks(self.dim.max(1))
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Dense symmetric eigendecomposition (reads the lower triangle).
    pub fn symmetric_eigen(&self) -> DenseEigen {
        let n = self.dim;
        let m = faer::Mat::<f64>::from_fn(n, n, |i, j| self.get(i, j));
        let evd = m.selfadjoint_eigendecomposition(faer::Side::Lower);
        let s = evd.s().column_vector();
        let u = evd.u();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s.read(a).total_cmp(&s.read(b)));
        DenseEigen {
            values: order.iter().map(|&k| s.read(k)).collect(),
            vectors: order
                .iter()
                .map(|&k| (0..n).map(|i| u.read(i, k)).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ham(sites: usize, n_up: usize, lambda: f64, bc: Boundary) -> XxzHamiltonian {
        XxzHamiltonian::new(Arc::new(SpinBasis::new(sites, n_up).unwrap()), lambda, bc).unwrap()
    }

    #[test]
    fn two_site_open_matrix() {
        for &lambda in &[-0.7, 0.0, 0.3, 1.0] {
            let m = ham(2, 1, lambda, Boundary::Open).materialize().unwrap();
            assert_eq!(m.dim(), 2);
            assert_eq!(m.get(0, 0), -lambda / 4.0);
            assert_eq!(m.get(1, 1), -lambda / 4.0);
            assert_eq!(m.get(0, 1), 0.5);
            assert_eq!(m.get(1, 0), 0.5);
        }
    }

    #[test]
    fn free_three_site_open_chain_is_tridiagonal() {
        let m = ham(3, 1, 0.0, Boundary::Open).materialize().unwrap();
        // states 001, 010, 100: the up spin hops between neighbours
        let expected = [[0.0, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), expected[i][j]);
            }
        }
    }

    #[test]
    fn four_site_heisenberg_ring_ground_energy() {
        let m = ham(4, 2, 1.0, Boundary::Periodic).materialize().unwrap();
        let eig = m.symmetric_eigen();
        assert!((eig.values[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_maps_to_zero() {
        let h = ham(6, 3, 0.4, Boundary::Periodic);
        assert!(h.apply(&vec![0.0; h.dim()]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matvec_matches_dense() {
        let h = ham(8, 3, -0.35, Boundary::Periodic);
        let m = h.materialize().unwrap();
        assert!(m.max_asymmetry() < 1e-12);
        let v: Vec<f64> = (0..h.dim()).map(|i| ((i * 31 % 17) as f64 - 8.0) / 5.0).collect();
        let a = h.apply(&v).unwrap();
        let b = m.matvec(&v).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_two_site_refused() {
        let basis = Arc::new(SpinBasis::new(2, 1).unwrap());
        assert!(matches!(
            XxzHamiltonian::new(basis, 0.0, Boundary::Periodic),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn shape_errors() {
        let h = ham(4, 2, 0.0, Boundary::Open);
        assert!(matches!(h.apply(&[1.0; 5]), Err(Error::Shape { expected: 6, got: 5 })));
    }

    #[test]
    fn dense_refusal_above_limit() {
        let h = ham(16, 8, 0.0, Boundary::Periodic);
        assert!(matches!(h.materialize(), Err(Error::TooLarge { dim: 12870, .. })));
    }

    #[test]
    fn parallel_rows_match_dense_path() {
        // 16 choose 8 exceeds the parallel threshold; compare against a
        // direct sequential evaluation of the same rows.
        let h = ham(16, 8, 0.8, Boundary::Periodic);
        let v: Vec<f64> = (0..h.dim()).map(|i| ((i * 13 % 29) as f64 - 14.0) / 9.0).collect();
        let fast = h.apply(&v).unwrap();
        for (i, &s) in h.basis().states().iter().enumerate().step_by(97) {
            assert_eq!(fast[i].to_bits(), h.row(s, v[i], &v).to_bits());
        }
    }

    #[test]
    fn boundary_parsing() {
        assert_eq!("periodic".parse::<Boundary>().unwrap(), Boundary::Periodic);
        assert_eq!("open".parse::<Boundary>().unwrap(), Boundary::Open);
        assert!("twisted".parse::<Boundary>().is_err());
    }
}
