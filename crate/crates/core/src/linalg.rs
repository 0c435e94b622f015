//! Small dense real-matrix kernels.
//!
//! Everything here targets dimensions up to 8: determinants and adjugates for
//! the regression mixing step, a cyclic Jacobi eigen-solver for symmetric
//! matrices, and the Lyapunov / Riccati solvers used to synthesize the
//! baseline controller.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{contract, Error, Result};

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Mat {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(contract(format!("matrix shape {rows}x{cols} is empty")));
        }
        if data.len() != rows * cols {
            return Err(contract(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(contract(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be non-empty");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Builds a matrix from nested rows. Panics on ragged input; use
    /// [`Mat::new`] for fallible construction.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), cols, data).expect("invalid matrix rows")
    }

    /// Column vector (n×1).
    pub fn column(values: &[f64]) -> Self {
        Self::new(values.len(), 1, values.to_vec()).expect("invalid column")
    }

    /// Wraps a buffer without the finiteness check. Used on hot paths where
    /// blowups are detected downstream.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn outer(a: &[f64], b: &[f64]) -> Self {
        let mut data = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                data.push(x * y);
            }
        }
        Self::from_raw(a.len(), b.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.data[r * self.cols + c]);
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|v| v * s).collect())
    }

    /// `self · v` for a vector `v` of length `cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// `selfᵀ · v` for a vector `v` of length `rows`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tr_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (r, vr) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    /// Frobenius norm of `self − selfᵀ`.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self.data[i * n + j] - self.data[j * n + i];
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Removes row `skip_r` and column `skip_c`.
    pub fn minor(&self, skip_r: usize, skip_c: usize) -> Self {
        let mut out = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for r in (0..self.rows).filter(|&r| r != skip_r) {
            for c in (0..self.cols).filter(|&c| c != skip_c) {
                out.push(self.data[r * self.cols + c]);
            }
        }
        Self::from_raw(self.rows - 1, self.cols - 1, out)
    }

    pub fn add_scaled(&mut self, other: &Mat, s: f64) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul {}x{} · {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Mat::from_raw(self.rows, rhs.cols, out)
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        Mat::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        Mat::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        )
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn require_square(m: &Mat, what: &str) -> Result<usize> {
    if !m.is_square() {
        return Err(contract(format!(
            "{what} needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    Ok(m.rows)
}

// ---------------------------------------------------------------------------
// LU factorization
// ---------------------------------------------------------------------------

/// LU factorization with partial pivoting, `P·A = L·U` packed in place.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    /// Returns `None` when an exactly zero pivot is met.
    fn factor(m: &Mat) -> Option<Self> {
        let n = m.rows;
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let v = lu[r * n + k].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            if piv != k {
                for c in 0..n {
                    lu.swap(k * n + c, piv * n + c);
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let f = lu[r * n + k] / pivot;
                lu[r * n + k] = f;
                if f != 0.0 {
                    for c in (k + 1)..n {
                        lu[r * n + c] -= f * lu[k * n + c];
                    }
                }
            }
        }
        Some(Self { n, lu, perm, sign })
    }

    fn det(&self) -> f64 {
        let n = self.n;
        (0..n).fold(self.sign, |acc, i| acc * self.lu[i * n + i])
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    fn inverse(&self) -> Mat {
        let n = self.n;
        let mut inv = Mat::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            self.solve_in_place(&mut col);
            for i in 0..n {
                inv.data[i * n + j] = col[i];
            }
        }
        inv
    }
}

/// Determinant via LU (partial pivoting).
pub fn det(m: &Mat) -> Result<f64> {
    require_square(m, "det")?;
    Ok(Lu::factor(m).map(|lu| lu.det()).unwrap_or(0.0))
}

/// Inverse via LU; errors on an exactly singular matrix.
pub fn inverse(m: &Mat) -> Result<Mat> {
    require_square(m, "inverse")?;
    Lu::factor(m)
        .map(|lu| lu.inverse())
        .ok_or_else(|| contract("inverse of a singular matrix"))
}

/// Solves `m · X = rhs` for a square `m`.
pub fn solve(m: &Mat, rhs: &Mat) -> Result<Mat> {
    let n = require_square(m, "solve")?;
    if rhs.rows != n {
        return Err(contract("solve: right-hand side row mismatch"));
    }
    let lu = Lu::factor(m).ok_or_else(|| contract("solve with a singular matrix"))?;
    let mut out = Mat::zeros(n, rhs.cols);
    let mut col = vec![0.0; n];
    for j in 0..rhs.cols {
        for i in 0..n {
            col[i] = rhs.data[i * rhs.cols + j];
        }
        lu.solve_in_place(&mut col);
        for i in 0..n {
            out.data[i * rhs.cols + j] = col[i];
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Determinant and adjugate
// ---------------------------------------------------------------------------

const MAX_ADJ_DIM: usize = 8;
/// Below this |det| the inverse-based adjugate is replaced by cofactors.
const ADJ_LU_DET_FLOOR: f64 = 1e-250;

/// Determinant by explicit expansion (dimension ≤ 4) or LU otherwise.
fn det_direct(m: &Mat) -> f64 {
    let d = &m.data;
    match m.rows {
        1 => d[0],
        2 => d[0] * d[3] - d[1] * d[2],
        3 => {
            d[0] * (d[4] * d[8] - d[5] * d[7]) - d[1] * (d[3] * d[8] - d[5] * d[6]) + d[2] * (d[3] * d[7] - d[4] * d[6])
        }
        4 => (0..4)
            .map(|c| {
                let s = if c % 2 == 0 { 1.0 } else { -1.0 };
                s * d[c] * det_direct(&m.minor(0, c))
            })
            .sum(),
        _ => Lu::factor(m).map(|lu| lu.det()).unwrap_or(0.0),
    }
}

fn adj_by_cofactors(m: &Mat) -> Mat {
    let n = m.rows;
    if n == 1 {
        return Mat::identity(1);
    }
    let mut adj = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // adj = transpose of the cofactor matrix
            adj.data[j * n + i] = s * det_direct(&m.minor(i, j));
        }
    }
    adj
}

/// Determinant and adjugate of a square matrix of dimension 1..=8.
///
/// Cofactors are used up to dimension 4. Larger matrices go through
/// `det · inverse`, falling back to cofactors when `|det| < 1e-250`.
pub fn det_adj(m: &Mat) -> Result<(f64, Mat)> {
    let n = require_square(m, "det_adj")?;
    if n > MAX_ADJ_DIM {
        return Err(contract(format!("det_adj supports dimension 1..=8, got {n}")));
    }
    if n <= 4 {
        return Ok((det_direct(m), adj_by_cofactors(m)));
    }
    match Lu::factor(m) {
        Some(lu) => {
            let d = lu.det();
            if d.abs() >= ADJ_LU_DET_FLOOR && d.is_finite() {
                Ok((d, lu.inverse().scale(d)))
            } else {
                Ok((d, adj_by_cofactors(m)))
            }
        }
        None => Ok((0.0, adj_by_cofactors(m))),
    }
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblem
// ---------------------------------------------------------------------------

const JACOBI_MAX_SWEEPS: usize = 50;
const JACOBI_REL_TOL: f64 = 1e-14;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Mat,
}

fn check_symmetric(m: &Mat) -> Result<usize> {
    let n = require_square(m, "symmetric eigen-solver")?;
    let fro = m.frobenius_norm();
    if m.asymmetry() > 1e-9 * fro {
        return Err(contract(format!(
            "matrix not symmetric: ‖m − mᵀ‖ = {:e}, ‖m‖ = {:e}",
            m.asymmetry(),
            fro
        )));
    }
    Ok(n)
}

/// Cyclic Jacobi eigen-solver.
pub fn sym_eigen(m: &Mat) -> Result<SymEigen> {
    let n = check_symmetric(m)?;
    let mut a = m.symmetrized().data;
    let mut v = Mat::identity(n).data;
    let fro = m.frobenius_norm();
    if n > 1 && fro > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum::<f64>()
                .sqrt();
            if off <= JACOBI_REL_TOL * fro {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
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
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vectors.data[r * n + new_c] = v[r * n + old_c];
        }
    }
    Ok(SymEigen { values, vectors })
}

fn eig_2x2(m: &Mat) -> (f64, f64) {
    let (a, b, c) = (m.data[0], 0.5 * (m.data[1] + m.data[2]), m.data[3]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean - r, mean + r)
}

/// Smallest eigenvalue of a symmetric matrix. Closed form for dimension ≤ 2.
pub fn sym_eig_min(m: &Mat) -> Result<f64> {
    let n = check_symmetric(m)?;
    match n {
        1 => Ok(m.data[0]),
        2 => Ok(eig_2x2(m).0),
        _ => Ok(sym_eigen(m)?.values[0]),
    }
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_eig_max(m: &Mat) -> Result<f64> {
    let n = check_symmetric(m)?;
    match n {
        1 => Ok(m.data[0]),
        2 => Ok(eig_2x2(m).1),
        _ => Ok(*sym_eigen(m)?.values.last().expect("non-empty")),
    }
}

/// Number of eigenvalues exceeding `eps_rank · (1 + λ_max)`.
pub fn numerical_rank(m: &Mat, eps_rank: f64) -> Result<usize> {
    if !(eps_rank > 0.0) {
        return Err(contract("eps_rank must be positive"));
    }
    let eig = sym_eigen(m)?;
    let lmax = *eig.values.last().expect("non-empty");
    let thresh = eps_rank * (1.0 + lmax);
    Ok(eig.values.iter().filter(|&&v| v > thresh).count())
}

// ---------------------------------------------------------------------------
// Stability tests
// ---------------------------------------------------------------------------

/// Characteristic polynomial coefficients `[1, c1, …, cn]` of
/// `λⁿ + c1 λⁿ⁻¹ + … + cn` (Faddeev–LeVerrier).
pub fn char_poly(m: &Mat) -> Result<Vec<f64>> {
    let n = require_square(m, "char_poly")?;
    let mut coeffs = vec![1.0];
    let mut mk = Mat::zeros(n, n);
    for k in 1..=n {
        // M_k = A·M_{k-1} + c_{k-1} I
        let mut next = m * &mk;
        let c_prev = coeffs[k - 1];
        for i in 0..n {
            next.data[i * n + i] += c_prev;
        }
        let c = -(m * &next).trace() / k as f64;
        coeffs.push(c);
        mk = next;
    }
    Ok(coeffs)
}

/// Routh–Hurwitz test: true when every eigenvalue has negative real part.
pub fn is_hurwitz(m: &Mat) -> Result<bool> {
    let poly = char_poly(m)?;
    Ok(routh_stable(&poly))
}

fn routh_stable(poly: &[f64]) -> bool {
    let deg = poly.len() - 1;
    if poly.iter().any(|c| !(*c > 0.0)) {
        return false;
    }
    if deg <= 1 {
        return true;
    }
    let width = deg / 2 + 1;
    let mut prev: Vec<f64> = (0..width).map(|i| *poly.get(2 * i).unwrap_or(&0.0)).collect();
    let mut cur: Vec<f64> = (0..width).map(|i| *poly.get(2 * i + 1).unwrap_or(&0.0)).collect();
    for _ in 0..deg - 1 {
        if !(cur[0] > 0.0) {
            return false;
        }
        let mut next = vec![0.0; width];
        for i in 0..width - 1 {
            next[i] = (cur[0] * prev[i + 1] - prev[0] * cur[i + 1]) / cur[0];
        }
        prev = cur;
        cur = next;
    }
    cur[0] > 0.0
}

// ---------------------------------------------------------------------------
// Lyapunov and Riccati equations
// ---------------------------------------------------------------------------

/// Solves `aᵀP + P·a = −q` by vectorization, without stability checks.
fn lyapunov_vectorized(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.rows;
    let nn = n * n;
    let mut big = Mat::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                big.data[row * nn + k * n + j] += a.data[k * n + i];
                big.data[row * nn + i * n + k] += a.data[k * n + j];
            }
        }
    }
    let rhs = Mat::from_raw(nn, 1, q.data.iter().map(|v| -v).collect());
    let sol = solve(&big, &rhs)?;
    Ok(Mat::from_raw(n, n, sol.data).symmetrized())
}

/// Solves `aᵀP + P·a = −q` for a Hurwitz `a` and symmetric positive
/// definite `q`. The returned `P` is symmetric positive definite.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = require_square(a, "solve_lyapunov")?;
    if q.shape() != (n, n) {
        return Err(contract("solve_lyapunov: q shape mismatch"));
    }
    if sym_eig_min(q)? <= 0.0 {
        return Err(contract("solve_lyapunov: q must be positive definite"));
    }
    if !is_hurwitz(a)? {
        return Err(Error::UnstableReference);
    }
    lyapunov_vectorized(a, q)
}

/// `[B, AB, …, Aⁿ⁻¹B]`.
pub fn controllability_matrix(a: &Mat, b: &Mat) -> Mat {
    let n = a.rows;
    let m = b.cols;
    let mut out = Mat::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        for r in 0..n {
            for c in 0..m {
                out.data[r * n * m + k * m + c] = blk.data[r * m + c];
            }
        }
        blk = a * &blk;
    }
    out
}

fn is_controllable(a: &Mat, b: &Mat) -> Result<bool> {
    let c = controllability_matrix(a, b);
    let gram = &c * &c.transpose();
    let eig = sym_eigen(&gram)?;
    let lmax = *eig.values.last().expect("non-empty");
    Ok(lmax > 0.0 && eig.values[0] > 1e-13 * lmax)
}

/// Single-input pole placement at −1, −2, …, −n (Ackermann).
fn ackermann_gain(a: &Mat, b: &Mat) -> Result<Mat> {
    let n = a.rows;
    let c = controllability_matrix(a, b);
    let mut poly_a = Mat::identity(n);
    for i in 1..=n {
        let mut shifted = a.clone();
        for d in 0..n {
            shifted.data[d * n + d] += i as f64;
        }
        poly_a = &poly_a * &shifted;
    }
    let c_inv = inverse(&c)?;
    let last_row = Mat::from_raw(1, n, c_inv.row(n - 1).to_vec());
    Ok(&last_row * &poly_a)
}

/// Multi-input stabilizing gain `Bᵀ W⁻¹` with
/// `(A + βI)W + W(A + βI)ᵀ = 2BBᵀ` (Bass' method).
fn bass_gain(a: &Mat, b: &Mat) -> Result<Mat> {
    let n = a.rows;
    let beta = a.frobenius_norm() + 1.0;
    let mut shifted = a.scale(-1.0);
    for d in 0..n {
        shifted.data[d * n + d] -= beta;
    }
    // Lyapunov form ÃᵀW + WÃ = −2BBᵀ with Ã = −(A + βI)ᵀ
    let a_tilde = shifted.transpose();
    let rhs = (b * &b.transpose()).scale(2.0);
    let w = lyapunov_vectorized(&a_tilde, &rhs)?;
    let w_inv = inverse(&w)?;
    Ok(&b.transpose() * &w_inv)
}

const CARE_MAX_ITER: usize = 100;

/// Solves `AᵀP + PA − PBR⁻¹BᵀP + Q = 0` by Newton–Kleinman iteration.
/// Returns `(P, K)` with `K = R⁻¹BᵀP`; `A − B·K` is Hurwitz.
pub fn solve_care(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<(Mat, Mat)> {
    let n = require_square(a, "solve_care")?;
    let m = b.cols;
    if b.rows != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(contract("solve_care: dimension mismatch"));
    }
    if sym_eig_min(r)? <= 0.0 {
        return Err(contract("solve_care: r must be positive definite"));
    }
    if sym_eig_min(q)? < -1e-12 * (1.0 + q.frobenius_norm()) {
        return Err(contract("solve_care: q must be positive semidefinite"));
    }
    if !is_controllable(a, b)? {
        return Err(Error::Uncontrollable);
    }
    let r_inv = inverse(r)?;
    let mut gain = if m == 1 {
        ackermann_gain(a, b)?
    } else {
        bass_gain(a, b)?
    };
    let mut p_prev: Option<Mat> = None;
    for iter in 0..CARE_MAX_ITER {
        let closed = a - &(b * &gain);
        if !is_hurwitz(&closed)? {
            return Err(Error::CareDiverged { iterations: iter });
        }
        let weight = q + &(&(&gain.transpose() * r) * &gain);
        let p = lyapunov_vectorized(&closed, &weight)?;
        gain = &(&r_inv * &b.transpose()) * &p;
        if let Some(prev) = &p_prev {
            let delta = (&p - prev).frobenius_norm();
            if delta <= 1e-13 * (1.0 + p.frobenius_norm()) {
                return finish_care(a, b, q, &r_inv, p, gain, iter);
            }
        }
        p_prev = Some(p);
    }
    // Newton stagnates at rounding level; accept if the residual is small.
    let p = p_prev.expect("at least one iteration");
    finish_care(a, b, q, &r_inv, p, gain, CARE_MAX_ITER)
}

fn finish_care(a: &Mat, b: &Mat, q: &Mat, r_inv: &Mat, p: Mat, gain: Mat, iterations: usize) -> Result<(Mat, Mat)> {
    let resid = care_residual(a, b, q, r_inv, &p);
    if !(resid <= 1e-7 * (1.0 + q.frobenius_norm())) {
        return Err(Error::CareDiverged { iterations });
    }
    Ok((p, gain))
}

/// `‖AᵀP + PA − PBR⁻¹BᵀP + Q‖_F`.
pub fn care_residual(a: &Mat, b: &Mat, q: &Mat, r_inv: &Mat, p: &Mat) -> f64 {
    let at_p = &a.transpose() * p;
    let pa = p * a;
    let pb = p * b;
    let quad = &(&pb * r_inv) * &pb.transpose();
    let res = &(&(&at_p + &pa) - &quad) + q;
    res.frobenius_norm()
}

/// `‖AᵀP + PA + Q‖_F`.
pub fn lyapunov_residual(a: &Mat, q: &Mat, p: &Mat) -> f64 {
    let res = &(&(&a.transpose() * p) + &(p * a)) + q;
    res.frobenius_norm()
}
