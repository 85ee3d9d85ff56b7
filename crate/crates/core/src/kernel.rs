//! Dense complex linear algebra for chains of up to twelve qubits.
//!
//! Basis ordering: site 1 is the most significant tensor factor, so the
//! computational basis index of `|s_1 s_2 ... s_N>` is `sum_k s_k 2^(N-k)`.
//! [`kron`] follows the same convention: its left factor addresses the
//! lower-numbered site.
//!
//! Time evolution is always realized through a cached [`Spectrum`]:
//! `U(t) = V exp(-i diag(lambda) t) V^dagger`.

use std::ops::{Add, Mul, Sub};
use std::sync::Once;

use faer::{c64, Col, ColRef, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};

/// Largest supported chain length.
pub const MAX_SITES: usize = 12;
/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 1 << MAX_SITES;

/// Maximum elementwise `|A - A^dagger|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_WIDTH: f64 = 1e-10;
/// Components below this magnitude are ignored when fixing phases and order.
pub const SIGNIFICANT: f64 = 1e-8;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

static SEQUENTIAL: Once = Once::new();

// faer's parallel kernels may split reductions differently depending on the
// thread count. Results must not depend on the sweep worker count.
fn sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Square dense complex matrix.
#[derive(Clone, Debug)]
pub struct CMatrix {
    inner: Mat<c64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: Mat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: Mat::identity(dim, dim),
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        Self {
            inner: Mat::from_fn(dim, dim, f),
        }
    }

    /// Builds a matrix from row-major complex entries. Panics if not square.
    pub fn from_rows(rows: &[Vec<c64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m.inner[(k, k)] = c64::new(d, 0.0);
        }
        m
    }

    pub fn as_faer(&self) -> MatRef<'_, c64> {
        self.inner.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.inner[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: c64) {
        self.inner[(row, col)] = value;
    }

    pub(crate) fn add_at(&mut self, row: usize, col: usize, value: c64) {
        self.inner[(row, col)] += value;
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint().to_owned(),
        }
    }

    pub fn scale(&self, k: c64) -> Self {
        Self {
            inner: Mat::from_fn(self.dim(), self.dim(), |i, j| k * self.inner[(i, j)]),
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(c64::new(k, 0.0))
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|k| self.inner[(k, k)]).sum()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(self.dim(), v.dim(), "dimension mismatch in apply");
        sequential();
        let out: Col<c64> = self.inner.as_ref() * ColRef::from_slice(&v.data);
        CVector::from_faer(out)
    }

    /// `<v|A|v>` (complex; real up to rounding when `A` is Hermitian).
    pub fn expectation(&self, v: &CVector) -> c64 {
        v.inner(&self.apply(v))
    }

    /// Largest elementwise modulus.
    pub fn norm_max(&self) -> f64 {
        self.inner.norm_max()
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.inner.norm_l2()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        (&self.inner - &other.inner).norm_max()
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = (self.inner[(i, j)] - self.inner[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() < HERMITIAN_TOL
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) + &(other * self)
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> c64 {
        let n = self.dim();
        assert_eq!(n, other.dim(), "dimension mismatch");
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.inner[(i, k)] * other.inner[(k, i)];
            }
        }
        acc
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        sequential();
        CMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

/// Dense complex vector of amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    data: Vec<c64>,
}

impl CVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![ZERO; dim],
        }
    }

    /// Computational basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = ONE;
        v
    }

    pub fn from_vec(data: Vec<c64>) -> Self {
        Self { data }
    }

    fn from_faer(col: Col<c64>) -> Self {
        Self {
            data: col.iter().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[c64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [c64] {
        &mut self.data
    }

    pub fn get(&self, index: usize) -> c64 {
        self.data[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &CVector) -> c64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in inner");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, k: c64) -> CVector {
        CVector {
            data: self.data.iter().map(|z| k * z).collect(),
        }
    }

    pub fn sub(&self, other: &CVector) -> CVector {
        CVector {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &CVector) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Tensor product `a (x) b`; `a` addresses the more significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (da, db) = (a.dim(), b.dim());
    CMatrix::from_fn(da * db, |r, c| {
        a.get(r / db, c / db) * b.get(r % db, c % db)
    })
}

/// Eigendecomposition `A = V diag(lambda) V^dagger` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary matrix whose columns are the eigenvectors.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        CVector::from_vec(
            (0..self.dim())
                .map(|i| self.eigenvectors.get(i, k))
                .collect(),
        )
    }

    /// Coefficients `V^dagger v` in the eigenbasis.
    pub fn to_eigenbasis(&self, v: &CVector) -> CVector {
        assert_eq!(self.dim(), v.dim(), "dimension mismatch");
        sequential();
        let out: Col<c64> = self.eigenvectors.as_faer().adjoint() * ColRef::from_slice(v.as_slice());
        CVector::from_faer(out)
    }

    /// Back-transform `V c` of eigenbasis coefficients.
    pub fn from_eigenbasis(&self, c: &CVector) -> CVector {
        self.eigenvectors.apply(c)
    }

    /// `V^dagger O V`.
    pub fn operator_to_eigenbasis(&self, o: &CMatrix) -> CMatrix {
        let v = &self.eigenvectors;
        &(&v.adjoint() * o) * v
    }

    /// Phases `exp(-i lambda_k t)`.
    pub fn phases(&self, t: f64) -> Vec<c64> {
        self.eigenvalues
            .iter()
            .map(|&l| c64::cis(-l * t))
            .collect()
    }

    /// Evolves eigenbasis coefficients: `c_k -> exp(-i lambda_k t) c_k`.
    pub fn evolve_coefficients(&self, c: &CVector, t: f64) -> CVector {
        CVector::from_vec(
            self.phases(t)
                .iter()
                .zip(c.as_slice())
                .map(|(p, z)| p * z)
                .collect(),
        )
    }

    /// Dense propagator `U(t) = exp(-i t A)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let v = &self.eigenvectors;
        let phases = self.phases(t);
        let scaled = CMatrix::from_fn(self.dim(), |i, k| v.get(i, k) * phases[k]);
        &scaled * &v.adjoint()
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let scaled = CMatrix::from_fn(self.dim(), |i, k| {
            v.get(i, k) * self.eigenvalues[k]
        });
        &scaled * &v.adjoint()
    }

    /// `max |V^dagger V - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = &self.eigenvectors;
        (&v.adjoint() * v).max_abs_diff(&CMatrix::identity(self.dim()))
    }
}

/// Hermitian eigendecomposition with deterministic degenerate-subspace bases.
///
/// Within each cluster of eigenvalues of width [`DEGENERACY_WIDTH`] the solver's
/// arbitrary basis is replaced by a canonical one: the reduced row-echelon form
/// of the subspace, orthonormalized from the last pivot backwards so the leading
/// component positions survive. Every eigenvector's first significant component
/// is made real and positive, and columns inside a cluster are ordered by that
/// component's position.
pub fn eigh(a: &CMatrix) -> Result<Spectrum> {
    let defect = a.hermiticity_defect();
    if defect >= HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            max_asymmetry: defect,
        });
    }
    if a.dim() > MAX_DIM {
        return Err(Error::Capacity {
            n_sites: a.dim().ilog2() as usize,
            max: MAX_SITES,
        });
    }
    sequential();
    let evd = a
        .as_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenSolver)?;
    let n = a.dim();
    let eigenvalues: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re).collect();
    let u = evd.U();
    let mut columns: Vec<Vec<c64>> = (0..n)
        .map(|k| (0..n).map(|i| u[(i, k)]).collect())
        .collect();

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[end - 1] <= DEGENERACY_WIDTH {
            end += 1;
        }
        if end - start > 1 {
            let cluster = canonical_basis(columns[start..end].to_vec());
            columns.splice(start..end, cluster);
        } else {
            fix_phase(&mut columns[start]);
        }
        start = end;
    }

    let eigenvectors = CMatrix::from_fn(n, |i, k| columns[k][i]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn leading(v: &[c64]) -> Option<usize> {
    v.iter().position(|z| z.norm() > SIGNIFICANT)
}

fn fix_phase(v: &mut [c64]) {
    if let Some(p) = leading(v) {
        let rot = v[p].conj() / v[p].norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

fn canonical_basis(mut rows: Vec<Vec<c64>>) -> Vec<Vec<c64>> {
    let k = rows.len();
    let dim = rows[0].len();

    // Reduced row-echelon form with partial pivoting.
    let mut pivot_row = 0;
    for col in 0..dim {
        if pivot_row == k {
            break;
        }
        let (best, mag) = (pivot_row..k)
            .map(|r| (r, rows[r][col].norm()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= SIGNIFICANT {
            continue;
        }
        rows.swap(pivot_row, best);
        let inv = ONE / rows[pivot_row][col];
        for z in rows[pivot_row].iter_mut() {
            *z *= inv;
        }
        let pivot = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == pivot_row {
                continue;
            }
            let f = row[col];
            if f != ZERO {
                for (z, p) in row.iter_mut().zip(&pivot) {
                    *z -= f * p;
                }
            }
        }
        pivot_row += 1;
    }

    // Orthonormalize from the last row backwards (twice, for stability).
    let mut out: Vec<Vec<c64>> = Vec::with_capacity(k);
    for row in rows.into_iter().rev() {
        let mut v = row;
        for _ in 0..2 {
            for q in &out {
                let proj: c64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (z, qz) in v.iter_mut().zip(q) {
                    *z -= proj * qz;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= norm;
        }
        fix_phase(&mut v);
        out.push(v);
    }
    out.sort_by(|a, b| {
        let (pa, pb) = (leading(a).unwrap_or(dim), leading(b).unwrap_or(dim));
        pa.cmp(&pb).then_with(|| {
            let (za, zb) = (a[pa.min(dim - 1)], b[pb.min(dim - 1)]);
            za.re
                .total_cmp(&zb.re)
                .then_with(|| za.im.total_cmp(&zb.im))
        })
    });
    out
}

/// `V exp(-i lambda t) V^dagger v`.
pub fn evolve_state(s: &Spectrum, v: &CVector, t: f64) -> CVector {
    s.from_eigenbasis(&s.evolve_coefficients(&s.to_eigenbasis(v), t))
}

/// Heisenberg-picture operator `U^dagger(t) O U(t)`.
pub fn heisenberg(s: &Spectrum, o: &CMatrix, t: f64) -> CMatrix {
    let u = s.propagator(t);
    &(&u.adjoint() * o) * &u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_rows(
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| c64::new(x, 0.0)).collect())
                .collect::<Vec<_>>(),
        )
    }

    fn pauli_x() -> CMatrix {
        real(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_z() -> CMatrix {
        real(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    #[test]
    fn kron_identities() {
        let i4 = kron(&CMatrix::identity(2), &CMatrix::identity(2));
        assert_eq!(i4.max_abs_diff(&CMatrix::identity(4)), 0.0);
    }

    #[test]
    fn kron_zz_diagonal() {
        let zz = kron(&pauli_z(), &pauli_z());
        let diag: Vec<f64> = (0..4).map(|k| zz.get(k, k).re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(zz.max_abs_diff(&CMatrix::from_diagonal(&diag)), 0.0);
    }

    #[test]
    fn kron_left_factor_is_most_significant() {
        let x1 = kron(&pauli_x(), &CMatrix::identity(2));
        let out = x1.apply(&CVector::basis(4, 0));
        assert_eq!(out, CVector::basis(4, 2));
    }

    #[test]
    fn eigh_pauli_z() {
        let s = eigh(&pauli_z()).unwrap();
        assert_eq!(s.eigenvalues(), &[-1.0, 1.0]);
    }

    #[test]
    fn eigh_pauli_x_eigenvectors() {
        let s = eigh(&pauli_x()).unwrap();
        assert!((s.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues()[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let minus = CVector::from_vec(vec![c64::new(h, 0.0), c64::new(-h, 0.0)]);
        let plus = CVector::from_vec(vec![c64::new(h, 0.0), c64::new(h, 0.0)]);
        // phase fixed: first component real positive
        assert!(s.eigenvector(0).max_abs_diff(&minus) < 1e-14);
        assert!(s.eigenvector(1).max_abs_diff(&plus) < 1e-14);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let a = real(&[&[0.0, 1.0], &[0.5, 0.0]]);
        match eigh(&a) {
            Err(Error::NotHermitian { max_asymmetry }) => {
                assert!((max_asymmetry - 0.5).abs() < 1e-15)
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_clusters_get_canonical_basis() {
        // Diagonal matrix with a threefold level; the canonical basis is the
        // standard one regardless of how the solver mixes the subspace.
        let a = CMatrix::from_diagonal(&[2.0, -1.0, 0.5, -1.0, -1.0]);
        let s = eigh(&a).unwrap();
        assert_eq!(&s.eigenvalues()[..3], &[-1.0, -1.0, -1.0]);
        for (col, expect) in [(0, 1), (1, 3), (2, 4)] {
            assert!(s.eigenvector(col).max_abs_diff(&CVector::basis(5, expect)) < 1e-14);
        }

        // Rotate the degenerate block by a unitary; the result must not change.
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let rot = CMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c64::new(c, 0.0),
            (0, 1) => c64::new(0.0, c),
            (1, 0) => c64::new(0.0, c),
            _ => c64::new(c, 0.0),
        });
        let mixed = &(&rot * &CMatrix::from_diagonal(&[1.0, 1.0])) * &rot.adjoint();
        let s2 = eigh(&mixed).unwrap();
        assert!(s2.eigenvectors().max_abs_diff(&CMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let h = &kron(&pauli_z(), &pauli_z()) + &kron(&pauli_x(), &CMatrix::identity(2));
        let s = eigh(&h).unwrap();
        let v = CVector::from_vec(vec![
            c64::new(0.5, 0.1),
            c64::new(-0.2, 0.3),
            c64::new(0.4, 0.0),
            c64::new(0.1, -0.6),
        ]);
        assert!(evolve_state(&s, &v, 0.0).max_abs_diff(&v) < 1e-14);
    }

    #[test]
    fn evolve_eigenvector_picks_up_phase() {
        let h = &kron(&pauli_z(), &pauli_z()) + &kron(&pauli_x(), &pauli_x());
        let s = eigh(&h).unwrap();
        let t = 1.3;
        for k in 0..4 {
            let v = s.eigenvector(k);
            let expect = v.scale(c64::cis(-s.eigenvalues()[k] * t));
            assert!(evolve_state(&s, &v, t).max_abs_diff(&expect) < 1e-13);
        }
    }

    #[test]
    fn heisenberg_trivial_cases() {
        let h = &kron(&pauli_z(), &pauli_z()) + &kron(&pauli_x(), &CMatrix::identity(2));
        let s = eigh(&h).unwrap();
        let o = kron(&CMatrix::identity(2), &pauli_x());
        assert!(heisenberg(&s, &o, 0.0).max_abs_diff(&o) < 1e-14);
        assert!(heisenberg(&s, &h, 2.7).max_abs_diff(&h) < 1e-13);
    }

    #[test]
    fn commutator_of_paulis() {
        // [X, Z] = -2iY
        let c = pauli_x().commutator(&pauli_z());
        assert!((c.get(0, 1) - c64::new(-2.0, 0.0)).norm() < 1e-15);
        assert!((c.get(1, 0) - c64::new(2.0, 0.0)).norm() < 1e-15);
        assert_eq!(pauli_x().anticommutator(&pauli_z()).norm_max(), 0.0);
    }
}
