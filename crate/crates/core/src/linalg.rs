//! Dense complex linear algebra.
//!
//! Everything downstream (states, projectors, unitaries, functionals) is a
//! [`ComplexMatrix`]. Storage is row-major and dense; the target sizes are a
//! few dozen to a few hundred rows, so no sparsity or blocking is attempted.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Elementwise tolerance used when checking Hermiticity of eigen inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Result of [`ComplexMatrix::herm_eig`]: `a = V diag(values) V†`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid matrix")
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    /// Real matrix from a row-major slice.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        let cols = columns.len();
        let mut data = vec![C64::new(0.0, 0.0); rows * cols];
        for (j, col) in columns.iter().enumerate() {
            for (i, &z) in col.iter().enumerate() {
                data[i * cols + j] = z;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    /// Orthogonal projector onto the span of the given orthonormal vectors.
    pub fn projector_onto(vectors: &[&[C64]], dim: usize) -> Self {
        let mut p = Self::zeros(dim, dim);
        for v in vectors {
            for i in 0..dim {
                for j in 0..dim {
                    p.data[i * dim + j] += v[i] * v[j].conj();
                }
            }
        }
        p
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn matmul(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != b.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let (n, m, p) = (self.rows, self.cols, b.cols);
        let mut out = vec![C64::new(0.0, 0.0); n * p];
        for i in 0..n {
            let out_row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b_row = &b.data[k * p..(k + 1) * p];
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a * bv;
                }
            }
        }
        Ok(ComplexMatrix {
            rows: n,
            cols: p,
            data: out,
        })
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i].conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.data[j * self.cols + i])
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> ComplexMatrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> Result<C64> {
        let n = self.require_square()?;
        Ok((0..n).map(|i| self.data[i * n + i]).sum())
    }

    /// `Tr(self · b)` without forming the product.
    pub fn trace_product(&self, b: &ComplexMatrix) -> Result<C64> {
        if self.cols != b.rows || self.rows != b.cols {
            return Err(Error::DimensionMismatch(format!(
                "trace of {}x{} times {}x{}",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * b.data[k * b.cols + i];
            }
        }
        Ok(acc)
    }

    /// Kronecker product: `(a ⊗ b)[i·b.rows + k, j·b.cols + l] = a[i,j]·b[k,l]`.
    pub fn kron(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * b.rows;
        let cols = self.cols * b.cols;
        let mut data = vec![C64::new(0.0, 0.0); rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                for k in 0..b.rows {
                    for l in 0..b.cols {
                        data[(i * b.rows + k) * cols + j * b.cols + l] = a * b.data[k * b.cols + l];
                    }
                }
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn commutator(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(&self.matmul(b)? - &b.matmul(self)?)
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise `|self - other|`; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest elementwise `|a - a†|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Largest elementwise `|a a† - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.matmul(&self.adjoint()).expect("square");
        prod.max_abs_diff(&ComplexMatrix::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// `(a + a†)/2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations.
    ///
    /// Eigenvalues come back ascending. Each eigenvector is rephased so its
    /// largest-modulus component (lowest index on ties) is real and positive.
    pub fn herm_eig(&self) -> Result<HermitianEigen> {
        let n = self.require_square()?;
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let mut a = self.hermitian_part();
        let mut v = ComplexMatrix::identity(n);
        let scale = a.frobenius_norm();
        if scale > 0.0 {
            for _ in 0..JACOBI_MAX_SWEEPS {
                if off_diagonal_norm(&a) <= 1e-15 * scale {
                    break;
                }
                for p in 0..n {
                    for q in (p + 1)..n {
                        jacobi_rotate(&mut a, &mut v, p, q);
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
        let values = order.iter().map(|&i| diag[i]).collect();
        let columns: Vec<Vec<C64>> = order
            .iter()
            .map(|&j| {
                let mut col = v.column(j);
                fix_phase(&mut col);
                col
            })
            .collect();
        Ok(HermitianEigen {
            values,
            vectors: ComplexMatrix::from_columns(&columns)?,
        })
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.data[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One rotation zeroing `a[p,q]`. The rotation is `J = D·R` with `D` a phase
/// that makes `a[p,q]` real and `R` the classical real Jacobi rotation.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.rows;
    let apq = a.data[p * n + q];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let phase = apq / mag;
    let app = a.data[p * n + p].re;
    let aqq = a.data[q * n + q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let j_pp = C64::new(c, 0.0);
    let j_pq = C64::new(s, 0.0);
    let j_qp = phase.conj() * (-s);
    let j_qq = phase.conj() * c;

    // a <- a J, v <- v J
    for m in [&mut *a, &mut *v] {
        for k in 0..n {
            let xp = m.data[k * n + p];
            let xq = m.data[k * n + q];
            m.data[k * n + p] = xp * j_pp + xq * j_qp;
            m.data[k * n + q] = xp * j_pq + xq * j_qq;
        }
    }
    // a <- J† a
    for k in 0..n {
        let xp = a.data[p * n + k];
        let xq = a.data[q * n + k];
        a.data[p * n + k] = j_pp.conj() * xp + j_qp.conj() * xq;
        a.data[q * n + k] = j_pq.conj() * xp + j_qq.conj() * xq;
    }
    a.data[p * n + q] = C64::new(0.0, 0.0);
    a.data[q * n + p] = C64::new(0.0, 0.0);
    a.data[p * n + p].im = 0.0;
    a.data[q * n + q].im = 0.0;
}

fn fix_phase(col: &mut [C64]) {
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = col
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("nonempty column");
    let rot = col[pivot].conj() / col[pivot].norm();
    for z in col.iter_mut() {
        *z *= rot;
    }
    col[pivot].im = 0.0;
}

/// Unitary propagator `exp(-i h t)` for a Hermitian generator `h`.
pub fn exp_generator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = h.herm_eig()?;
    let phases: Vec<C64> = eig
        .values
        .iter()
        .map(|&lambda| C64::from_polar(1.0, -lambda * t))
        .collect();
    let v = &eig.vectors;
    v.matmul(&ComplexMatrix::diagonal(&phases))?.matmul(&v.adjoint())
}

/// `⟨a|b⟩`, antilinear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    norm_sqr(v).sqrt()
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    /// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for fallible products.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Pauli matrices and a few other fixtures shared by tests and scenarios.
pub mod pauli {
    use super::{c64, ComplexMatrix};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::new(2, 2, vec![c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)])
            .unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Entry-wise triple loop, kept independent of `matmul`.
    fn matmul_oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..a.cols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            acc
        })
    }

    #[test]
    fn identity_and_pauli_products() {
        let m = ComplexMatrix::from_rows(&[
            vec![c64(1.0, 2.0), c64(-0.5, 0.0)],
            vec![c64(0.0, 3.0), c64(4.0, -1.0)],
        ])
        .unwrap();
        assert_eq!(ComplexMatrix::identity(2).matmul(&m).unwrap(), m);
        assert_eq!(pauli::x().matmul(&pauli::x()).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        assert!(a.matmul(&b).unwrap().max_abs_diff(&matmul_oracle(&a, &b)) <= 1e-13);
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn non_finite_entries_rejected() {
        let err = ComplexMatrix::new(1, 2, vec![c64(1.0, 0.0), c64(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn adjoint_cases() {
        let sym = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(sym.adjoint(), sym);
        assert_eq!(pauli::y().adjoint(), pauli::y());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 3, 4);
        assert_eq!(m.adjoint().adjoint(), m);
    }

    #[test]
    fn trace_cases() {
        assert_eq!(ComplexMatrix::identity(5).trace().unwrap(), c64(5.0, 0.0));
        let e0 = [c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)];
        let e2 = [c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)];
        let p = ComplexMatrix::projector_onto(&[&e0, &e2], 3);
        assert_eq!(p.trace().unwrap(), c64(2.0, 0.0));
        assert!(matches!(
            ComplexMatrix::zeros(2, 3).trace(),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 4, 4);
        let b = random_matrix(&mut rng, 4, 4);
        let ab = a.matmul(&b).unwrap().trace().unwrap();
        let ba = b.matmul(&a).unwrap().trace().unwrap();
        assert!((ab - ba).norm() <= 1e-13);
        assert!((a.trace_product(&b).unwrap() - ab).norm() <= 1e-13);
    }

    #[test]
    fn kron_cases() {
        let i2 = ComplexMatrix::identity(2);
        let i3 = ComplexMatrix::identity(3);
        assert_eq!(i2.kron(&i3), ComplexMatrix::identity(6));
        let k = ComplexMatrix::zeros(2, 2).kron(&ComplexMatrix::zeros(3, 3));
        assert_eq!((k.rows(), k.cols()), (6, 6));

        let lhs = pauli::z().kron(&i2).matmul(&i2.kron(&pauli::x())).unwrap();
        assert!(lhs.max_abs_diff(&pauli::z().kron(&pauli::x())) <= 1e-13);
    }

    #[test]
    fn eig_of_paulis() {
        let ez = pauli::z().herm_eig().unwrap();
        assert_eq!(ez.values, vec![-1.0, 1.0]);

        let ex = pauli::x().herm_eig().unwrap();
        assert!((ex.values[0] + 1.0).abs() < 1e-14 && (ex.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // phase convention: largest component real positive, first index on ties
        let minus = ex.vectors.column(0);
        let plus = ex.vectors.column(1);
        assert!((minus[0] - c64(h, 0.0)).norm() < 1e-14 && (minus[1] - c64(-h, 0.0)).norm() < 1e-14);
        assert!((plus[0] - c64(h, 0.0)).norm() < 1e-14 && (plus[1] - c64(h, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 4, 9] {
            let a = random_hermitian(&mut rng, n);
            let eig = a.herm_eig().unwrap();
            assert!(eig.vectors.unitarity_deviation() <= 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let lam: Vec<C64> = eig.values.iter().map(|&x| c64(x, 0.0)).collect();
            let rebuilt = &(&eig.vectors * &ComplexMatrix::diagonal(&lam)) * &eig.vectors.adjoint();
            assert!(rebuilt.max_abs_diff(&a) <= 1e-10, "n = {n}");
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(m.herm_eig(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn exp_generator_cases() {
        let zero = ComplexMatrix::zeros(3, 3);
        assert!(exp_generator(&zero, 1.3).unwrap().max_abs_diff(&ComplexMatrix::identity(3)) <= 1e-15);

        let u = exp_generator(&pauli::z(), PI).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2).scale_real(-1.0)) <= 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_hermitian(&mut rng, 5);
        let u = exp_generator(&h, 0.7).unwrap();
        assert!(u.unitarity_deviation() <= 1e-10);

        let nh = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(exp_generator(&nh, 1.0).is_err());
    }
}
