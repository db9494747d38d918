//! Dense symmetric matrices and a cyclic Jacobi eigensolver.
//!
//! Everything downstream (the low-rank initializer, truncation errors, the
//! spectral checks in [`crate::rmt`]) works on the full eigendecomposition
//! `J = U diag(λ) Uᵀ` with eigenvalues in nonincreasing order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension accepted by [`eigh`].
pub const MAX_DENSE_DIM: usize = 2048;

const JACOBI_REL_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Real symmetric `n × n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle
    /// (`i <= j`) and mirrored.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Builds from row-major storage, replacing the input by `(A + Aᵀ)/2`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        let mut m = Self { n, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Self::from_row_major(n, data)
    }

    fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.n.max(1))
            .take(self.n)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(self)
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn off_diagonal_frobenius(&self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += self.data[i * n + j].powi(2);
                }
            }
        }
        acc.sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self + shift·I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += shift;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn with_zero_diagonal(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] = 0.0;
        }
        out
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let dot: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += x[i] * dot;
        }
        acc
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

pub fn frobenius(m: &SymMatrix) -> f64 {
    m.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Eigenpairs of a symmetric matrix, eigenvalues nonincreasing.
///
/// Column `m` of the stored `n × n` matrix is the unit eigenvector paired with
/// `eigenvalues[m]`. Each eigenvector has its first component of magnitude
/// above `1e-12` made positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `U[i][m]`: component `i` of eigenvector `m`.
    #[inline]
    pub fn component(&self, i: usize, m: usize) -> f64 {
        self.vectors[i * self.n() + m]
    }

    pub fn eigenvector(&self, m: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.component(i, m)).collect()
    }

    pub fn smallest(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty decomposition")
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `Σ_{m<k} values[m] u_m u_mᵀ`, where `values` replaces the eigenvalues.
    pub fn reconstruct_with(&self, values: &[f64]) -> SymMatrix {
        let n = self.n();
        SymMatrix::from_upper_fn(n, |i, j| {
            values
                .iter()
                .enumerate()
                .map(|(m, &lam)| lam * self.component(i, m) * self.component(j, m))
                .sum()
        })
    }

    /// Rank-`k` truncation `U_k diag(λ_1..λ_k) U_kᵀ`.
    pub fn reconstruct(&self, k: usize) -> SymMatrix {
        let k = k.min(self.n());
        self.reconstruct_with(&self.eigenvalues[..k])
    }

    /// `‖UᵀU − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n)
                    .map(|i| self.component(i, a) * self.component(i, b))
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                acc += (dot - target).powi(2);
            }
        }
        acc.sqrt()
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal norm drops to `1e-12·‖m‖_F`.
pub fn eigh(m: &SymMatrix) -> Result<EigenDecomposition> {
    let n = m.n();
    if n == 0 {
        return Err(Error::InvalidDimension("empty matrix".into()));
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::InvalidDimension(format!(
            "dense eigendecomposition limited to n <= {MAX_DENSE_DIM}, got {n}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix entries"));
    }

    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let threshold = JACOBI_REL_TOL * frobenius(m);
    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a, n) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }
    if !converged && off_norm(&a, n) > threshold {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]));

    let eigenvalues: Vec<f64> = order.iter().map(|&c| a[c * n + c]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        let flip = (0..n)
            .map(|i| v[i * n + src])
            .find(|c| c.abs() > 1e-12)
            .is_some_and(|c| c < 0.0);
        let s = if flip { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[i * n + dst] = s * v[i * n + src];
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
    })
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    acc.sqrt()
}

/// Annihilates `a[p][q]` with a plane rotation and accumulates it into `v`.
fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymMatrix::from_upper_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eigh(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_input_sorts_and_permutes_axes() {
        let e = eigh(&SymMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues(), &[3.0, 2.0, 1.0]);
        assert_eq!(e.eigenvector(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(e.eigenvector(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(e.eigenvector(2), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two_matches_characteristic_roots() {
        let (a, b, d) = (0.7, -1.3, 2.1);
        let m = SymMatrix::from_rows(vec![vec![a, b], vec![b, d]]).unwrap();
        let e = eigh(&m).unwrap();
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        assert!((e.eigenvalues()[0] - (mean + rad)).abs() < 1e-14);
        assert!((e.eigenvalues()[1] - (mean - rad)).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_orthogonality() {
        for seed in 0..10 {
            let m = random_sym(8, seed);
            let e = eigh(&m).unwrap();
            let rebuilt = e.reconstruct(8);
            let err = frobenius(&rebuilt.sub(&m).unwrap());
            assert!(err <= 1e-8 * frobenius(&m), "seed {seed}: {err}");
            assert!(e.orthogonality_defect() <= 1e-10 * 8.0);
            assert!(e.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn trace_and_frobenius_preserved() {
        let m = random_sym(12, 99);
        let e = eigh(&m).unwrap();
        let tr: f64 = e.eigenvalues().iter().sum();
        let sq: f64 = e.eigenvalues().iter().map(|l| l * l).sum();
        assert!((tr - m.trace()).abs() <= 1e-9 * m.trace().abs().max(1.0));
        assert!((sq - frobenius(&m).powi(2)).abs() <= 1e-9 * frobenius(&m).powi(2));
    }

    #[test]
    fn deterministic_bit_identical() {
        let m = random_sym(9, 5);
        assert_eq!(eigh(&m).unwrap(), eigh(&m).unwrap());
    }

    #[test]
    fn sign_convention_first_component_positive() {
        let m = random_sym(6, 17);
        let e = eigh(&m).unwrap();
        for c in 0..6 {
            let first = e
                .eigenvector(c)
                .into_iter()
                .find(|x| x.abs() > 1e-12)
                .unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 1, f64::NAN);
        assert!(matches!(eigh(&m), Err(Error::NonFinite(_))));
    }

    #[test]
    fn zero_matrix_decomposes() {
        let e = eigh(&SymMatrix::zeros(4)).unwrap();
        assert!(e.eigenvalues().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn frobenius_hand_cases() {
        assert_eq!(frobenius(&SymMatrix::zeros(3)), 0.0);
        assert!((frobenius(&SymMatrix::identity(5)) - 5f64.sqrt()).abs() < 1e-15);
        let ones = SymMatrix::from_upper_fn(2, |_, _| 1.0);
        assert_eq!(frobenius(&ones), 2.0);
    }

    #[test]
    fn construction_symmetrizes() {
        let m = SymMatrix::from_rows(vec![vec![0.0, 1.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert!(SymMatrix::from_rows(vec![vec![0.0, 1.0], vec![3.0]]).is_err());
    }
}
