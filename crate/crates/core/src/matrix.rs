//! Dense complex matrices, Hermitian factorizations, and circularly-symmetric
//! Gaussian sampling.
//!
//! Storage is column-major `Vec<Complex64>`. All dimensions in this crate are
//! small (antenna counts and their products), so the factorizations are plain
//! textbook loops: pivoted Cholesky with a semidefinite tolerance band, a
//! cyclic complex Jacobi eigensolver, and power iteration for the operator
//! norm.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::Error;
use crate::Result;

/// Asymmetry tolerance accepted by the checked Hermitian constructor.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative pivot tolerance for semidefinite Cholesky.
pub const PSD_PIVOT_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// ComplexMatrix
// ---------------------------------------------------------------------------

/// Dense complex matrix, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for j in 0..dim {
            m.set(j, j, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Build from column-major data; `data.len()` must equal `rows * cols`.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[c * self.rows + r] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Column `c` as an owned vector (columns are contiguous).
    pub fn column(&self, c: usize) -> Vec<Complex64> {
        debug_assert!(c < self.cols);
        self.data[c * self.rows..(c + 1) * self.rows].to_vec()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for c in 0..other.cols {
            for k in 0..self.cols {
                let b = other.get(k, c);
                if b.re == 0.0 && b.im == 0.0 {
                    continue;
                }
                for r in 0..self.rows {
                    let v = out.get(r, c) + self.get(r, k) * b;
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for c in 0..self.cols {
            let xc = x[c];
            if xc.re == 0.0 && xc.im == 0.0 {
                continue;
            }
            for r in 0..self.rows {
                y[r] += self.get(r, c) * xc;
            }
        }
        Ok(y)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

// ---------------------------------------------------------------------------
// HermitianMatrix
// ---------------------------------------------------------------------------

/// Square complex matrix with enforced conjugate symmetry.
///
/// Construction symmetrizes exactly: stored entries satisfy
/// `a[j][i] == conj(a[i][j])` and diagonal imaginary parts are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: ComplexMatrix,
}

impl HermitianMatrix {
    /// Checked constructor: rejects inputs whose asymmetry exceeds
    /// [`HERMITIAN_TOL`] absolute, then stores the exact Hermitian part.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix from {}x{} input",
                m.rows(),
                m.cols()
            )));
        }
        let mut max_asym: f64 = 0.0;
        for c in 0..m.cols() {
            for r in 0..=c {
                let asym = (m.get(r, c) - m.get(c, r).conj()).norm();
                max_asym = max_asym.max(asym);
            }
        }
        if max_asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                max_asymmetry: max_asym,
            });
        }
        Ok(Self::part_of(m))
    }

    /// Column-major entries, checked as in [`HermitianMatrix::from_matrix`].
    pub fn from_entries(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        let m = ComplexMatrix::from_column_major(dim, dim, data)?;
        Self::from_matrix(&m)
    }

    /// Exact Hermitian part `(m + m^H) / 2` of a square matrix, no tolerance
    /// check. Used where tiny asymmetry is expected from arithmetic noise.
    pub fn part_of(m: &ComplexMatrix) -> Self {
        assert!(m.is_square());
        let dim = m.rows();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for c in 0..dim {
            out.set(c, c, Complex64::new(m.get(c, c).re, 0.0));
            for r in 0..c {
                let v = (m.get(r, c) + m.get(c, r).conj()) * 0.5;
                out.set(r, c, v);
                out.set(c, r, v.conj());
            }
        }
        Self { inner: out }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: ComplexMatrix::identity(dim),
        }
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        Self {
            inner: ComplexMatrix::identity(dim).scale(Complex64::new(s, 0.0)),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (j, &d) in entries.iter().enumerate() {
            m.set(j, j, Complex64::new(d, 0.0));
        }
        Self { inner: m }
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.inner.get(r, c)
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|j| self.get(j, j).re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            inner: self.inner.add(&other.inner)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            inner: self.inner.sub(&other.inner)?,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            inner: self.inner.scale(Complex64::new(s, 0.0)),
        }
    }

    /// Block-diagonal stacking of two Hermitian matrices.
    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let (da, db) = (a.dim(), b.dim());
        let mut m = ComplexMatrix::zeros(da + db, da + db);
        for c in 0..da {
            for r in 0..da {
                m.set(r, c, a.get(r, c));
            }
        }
        for c in 0..db {
            for r in 0..db {
                m.set(da + r, da + c, b.get(r, c));
            }
        }
        Self { inner: m }
    }
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

enum PivotPolicy {
    /// Zero pivots inside the band `[-tol*scale, tol*scale]`, error below it.
    Semidefinite { tol: f64 },
    /// Error on any pivot <= 0.
    StrictlyPositive,
}

fn cholesky_impl(m: &HermitianMatrix, policy: PivotPolicy) -> Result<ComplexMatrix> {
    let n = m.dim();
    let scale = (0..n).map(|j| m.get(j, j).re).fold(0.0_f64, f64::max).max(0.0);
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j).re;
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        match policy {
            PivotPolicy::Semidefinite { tol } => {
                let band = tol * scale;
                if d < -band {
                    return Err(Error::NotPsd {
                        pivot: d,
                        tol: band,
                    });
                }
                if d <= band {
                    // Deficient direction: zero the column.
                    continue;
                }
            }
            PivotPolicy::StrictlyPositive => {
                if d <= 0.0 {
                    return Err(Error::NotPd { pivot: d, col: j });
                }
            }
        }
        let ljj = d.sqrt();
        l.set(j, j, Complex64::new(ljj, 0.0));
        for i in (j + 1)..n {
            let mut v = m.get(i, j);
            for k in 0..j {
                v -= l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, v / ljj);
        }
    }
    Ok(l)
}

/// Lower-triangular `L` with `L L^H = m` for positive semi-definite `m`.
///
/// Pivots within `tol * max(diag)` of zero are treated as exact zeros and
/// their columns dropped, so singular covariance matrices factor cleanly.
pub fn cholesky_psd(m: &HermitianMatrix, tol: f64) -> Result<ComplexMatrix> {
    if tol < 0.0 {
        return Err(Error::InvalidParams(format!(
            "cholesky tolerance must be non-negative, got {tol}"
        )));
    }
    cholesky_impl(m, PivotPolicy::Semidefinite { tol })
}

/// Cholesky factorization of a positive-definite Hermitian matrix, kept
/// around for repeated solves and log-determinants.
pub struct CholeskyFactor {
    l: ComplexMatrix,
}

impl CholeskyFactor {
    pub fn new(m: &HermitianMatrix) -> Result<Self> {
        Ok(Self {
            l: cholesky_impl(m, PivotPolicy::StrictlyPositive)?,
        })
    }

    pub fn lower(&self) -> &ComplexMatrix {
        &self.l
    }

    /// log2 det of the factored matrix: `2 * sum log2 L[j][j]`.
    pub fn logdet_bits(&self) -> f64 {
        (0..self.l.rows())
            .map(|j| self.l.get(j, j).re.log2())
            .sum::<f64>()
            * 2.0
    }

    /// Solve `A x = b` by forward/back substitution.
    pub fn solve_vec(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.l.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "solve with length-{} rhs for dim {}",
                b.len(),
                n
            )));
        }
        // L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l.get(i, k);
                y[i] = y[i] - lik * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        // L^H x = y
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l.get(k, i).conj();
                y[i] = y[i] - lki * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        Ok(y)
    }

    /// Solve `A X = B` column by column.
    pub fn solve_mat(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.l.rows();
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "solve with {}x{} rhs for dim {}",
                b.rows(),
                b.cols(),
                n
            )));
        }
        let mut out = ComplexMatrix::zeros(n, b.cols());
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..b.cols() {
            for r in 0..n {
                col[r] = b.get(r, c);
            }
            let x = self.solve_vec(&col)?;
            for r in 0..n {
                out.set(r, c, x[r]);
            }
        }
        Ok(out)
    }
}

/// log2 det of a positive-definite Hermitian matrix.
pub fn logdet_hermitian_pd(m: &HermitianMatrix) -> Result<f64> {
    Ok(CholeskyFactor::new(m)?.logdet_bits())
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic complex Jacobi)
// ---------------------------------------------------------------------------

fn off_diagonal_sq(b: &ComplexMatrix) -> f64 {
    let n = b.rows();
    let mut s = 0.0;
    for c in 0..n {
        for r in 0..n {
            if r != c {
                s += b.get(r, c).norm_sqr();
            }
        }
    }
    s
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues ascending and a
/// unitary matrix of eigenvectors (columns), with `m = V diag(w) V^H`.
pub fn eigh(m: &HermitianMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.dim();
    let mut b = m.as_matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let frob_sq = b.frobenius_norm().powi(2).max(f64::MIN_POSITIVE);
    let target = frob_sq * 1e-28;

    for _sweep in 0..100 {
        if off_diagonal_sq(&b) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let bpq = b.get(p, q);
                let apq = bpq.norm();
                if apq <= 1e-300 {
                    continue;
                }
                let u = bpq / apq;
                let theta = (b.get(q, q).re - b.get(p, p).re) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let su = u * s;
                let su_conj = u.conj() * s;

                // Rows: B <- U^H B.
                for col in 0..n {
                    let bp = b.get(p, col);
                    let bq = b.get(q, col);
                    b.set(p, col, bp * c - su * bq);
                    b.set(q, col, su_conj * bp + bq * c);
                }
                // Columns: B <- B U, V <- V U.
                for row in 0..n {
                    let bp = b.get(row, p);
                    let bq = b.get(row, q);
                    b.set(row, p, bp * c - su_conj * bq);
                    b.set(row, q, su * bp + bq * c);
                    let vp = v.get(row, p);
                    let vq = v.get(row, q);
                    v.set(row, p, vp * c - su_conj * vq);
                    v.set(row, q, su * vp + vq * c);
                }
                b.set(p, q, Complex64::new(0.0, 0.0));
                b.set(q, p, Complex64::new(0.0, 0.0));
                let dp = b.get(p, p).re;
                let dq = b.get(q, q).re;
                b.set(p, p, Complex64::new(dp, 0.0));
                b.set(q, q, Complex64::new(dq, 0.0));
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| b.get(i, i).re.partial_cmp(&b.get(j, j).re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| b.get(i, i).re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    (eigenvalues, vectors)
}

// ---------------------------------------------------------------------------
// Projection onto the trace-constrained PSD cone
// ---------------------------------------------------------------------------

/// Frobenius-nearest matrix in `{Q >= 0, tr Q <= p}`.
///
/// Eigenvalues are clipped at zero; if the clipped trace still exceeds `p`
/// the spectrum is shifted down by the water level `theta >= 0` solving
/// `sum max(lambda_i - theta, 0) = p`.
pub fn project_psd_trace(m: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    if p < 0.0 {
        return Err(Error::InvalidParams(format!(
            "trace budget must be non-negative, got {p}"
        )));
    }
    if p == 0.0 {
        return Ok(HermitianMatrix::zeros(m.dim()));
    }
    let (lambda, v) = eigh(m);
    let clipped: Vec<f64> = lambda.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let projected: Vec<f64> = if total <= p {
        clipped
    } else {
        // Water level over the eigenvalues sorted descending.
        let mut desc = lambda.clone();
        desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut theta = 0.0;
        let mut cumsum = 0.0;
        for (k, &lam) in desc.iter().enumerate() {
            cumsum += lam;
            let candidate = (cumsum - p) / (k + 1) as f64;
            if lam - candidate > 0.0 {
                theta = candidate;
            } else {
                break;
            }
        }
        lambda.iter().map(|&l| (l - theta).max(0.0)).collect()
    };

    let n = m.dim();
    let mut scaled = v.clone();
    for c in 0..n {
        for r in 0..n {
            scaled.set(r, c, v.get(r, c) * projected[c]);
        }
    }
    let q = scaled.mul(&v.adjoint())?;
    Ok(HermitianMatrix::part_of(&q))
}

// ---------------------------------------------------------------------------
// Operator norm
// ---------------------------------------------------------------------------

/// Largest singular value, by power iteration on the smaller Gram matrix to
/// relative tolerance 1e-10.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.frobenius_norm() == 0.0 {
        return 0.0;
    }
    let gram = if m.rows() <= m.cols() {
        m.mul(&m.adjoint()).expect("shape checked")
    } else {
        m.adjoint().mul(m).expect("shape checked")
    };
    let n = gram.rows();

    // Deterministic start with nonuniform entries so it is not orthogonal to
    // the dominant eigenspace for the matrices seen in practice.
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| {
            let w = ((i as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0;
            Complex64::new(1.0 + 0.25 * w, 0.125 * w)
        })
        .collect();
    let norm0: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm0);

    let mut lambda = 0.0_f64;
    for _ in 0..100_000 {
        let w = gram.matvec(&v).expect("shape checked");
        let wnorm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if wnorm == 0.0 {
            return 0.0;
        }
        lambda = wnorm;
        let next: Vec<Complex64> = w.iter().map(|z| z / wnorm).collect();
        // Residual || G v - lambda v ||; v is unit.
        let mut resid_sq = 0.0;
        for (wi, vi) in w.iter().zip(&v) {
            resid_sq += (wi - vi * lambda).norm_sqr();
        }
        v = next;
        if resid_sq.sqrt() <= 1e-10 * lambda {
            break;
        }
    }
    lambda.max(0.0).sqrt()
}

// ---------------------------------------------------------------------------
// Circularly-symmetric Gaussian sampling
// ---------------------------------------------------------------------------

/// One standard circularly-symmetric complex Gaussian scalar: real and
/// imaginary parts independent N(0, 1/2), so E|u|^2 = 1.
#[inline]
pub fn standard_complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draw `x ~ N_C(0, k)`: `x = L u` with `L L^H = k` and `u` standard
/// circularly symmetric (`E[u u^H] = I`).
pub fn sample_complex_gaussian(k: &HermitianMatrix, rng: &mut impl Rng) -> Result<Vec<Complex64>> {
    let l = cholesky_psd(k, PSD_PIVOT_TOL)?;
    Ok(sample_with_factor(&l, rng))
}

/// Same draw given a precomputed Cholesky factor of the covariance.
pub fn sample_with_factor(l: &ComplexMatrix, rng: &mut impl Rng) -> Vec<Complex64> {
    let n = l.cols();
    let u: Vec<Complex64> = (0..n).map(|_| standard_complex_gaussian(rng)).collect();
    l.matvec(&u).expect("factor is square")
}
