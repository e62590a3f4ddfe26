//! Dense linear algebra for the small systems this crate deals with (n ≲ 10):
//! a row-major [`Matrix`], the matrix exponential, exact integrals of the
//! state-transition kernel `e^{-As} B` over time cells, and a numerical rank.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Relative tolerance used by [`Matrix::rank`] and [`kalman_rank`].
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Matrix::new(r, c, rows.concat())
    }

    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Matrix::new(values.len(), 1, values.to_vec())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Sub-block `[r0, r0+rows) x [c0, c0+cols)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    fn lu(&self) -> Result<Lu> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(Lu::factor(self.clone()))
    }

    pub fn determinant(&self) -> Result<f64> {
        Ok(self.lu()?.determinant())
    }

    /// Solves `self · X = rhs`. Returns `None` when `self` is singular.
    pub fn solve(&self, rhs: &Matrix) -> Result<Option<Matrix>> {
        if rhs.rows != self.rows {
            return Err(Error::Dimension("solve: rhs row count".into()));
        }
        Ok(self.lu()?.solve(rhs))
    }

    pub fn inverse(&self) -> Result<Option<Matrix>> {
        self.solve(&Matrix::identity(self.rows))
    }

    /// Numerical rank from column-pivoted Householder QR, with pivots below
    /// `tol · |R₀₀|` counted as zero.
    pub fn rank(&self, tol: f64) -> usize {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.clone();
        let mut col_norms: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)].powi(2)).sum())
            .collect();
        let mut rank = 0;
        let mut lead = 0.0;
        for k in 0..m.min(n) {
            // pivot on the largest remaining column
            let (p, _) = col_norms
                .iter()
                .enumerate()
                .skip(k)
                .fold(
                    (k, -1.0),
                    |best, (j, &v)| if v > best.1 { (j, v) } else { best },
                );
            if p != k {
                for i in 0..m {
                    a.data.swap(i * n + k, i * n + p);
                }
                col_norms.swap(k, p);
            }
            let alpha: f64 = (k..m).map(|i| a[(i, k)].powi(2)).sum::<f64>().sqrt();
            if k == 0 {
                lead = alpha;
            }
            if alpha <= tol * lead || alpha == 0.0 {
                break;
            }
            rank += 1;
            let sign = if a[(k, k)] >= 0.0 { 1.0 } else { -1.0 };
            let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
            v[0] += sign * alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 > 0.0 {
                for j in k..n {
                    let dot: f64 = (k..m).map(|i| v[i - k] * a[(i, j)]).sum();
                    let f = 2.0 * dot / vnorm2;
                    for i in k..m {
                        a[(i, j)] -= f * v[i - k];
                    }
                }
            }
            for (j, norm) in col_norms.iter_mut().enumerate().skip(k + 1) {
                *norm = (k + 1..m).map(|i| a[(i, j)].powi(2)).sum();
            }
        }
        rank
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

/// LU factorization with partial pivoting.
struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    swaps: usize,
    singular: bool,
}

impl Lu {
    fn factor(mut lu: Matrix) -> Lu {
        let n = lu.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[(x, k)].abs().total_cmp(&lu[(y, k)].abs()))
                .unwrap();
            if lu[(p, k)] == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu.data[i * n + j] -= f * lu.data[k * n + j];
                    }
                }
            }
        }
        Lu {
            lu,
            perm,
            swaps,
            singular,
        }
    }

    fn determinant(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        let d: f64 = (0..self.lu.rows).map(|i| self.lu[(i, i)]).product();
        if self.swaps.is_multiple_of(2) {
            d
        } else {
            -d
        }
    }

    fn solve(&self, rhs: &Matrix) -> Option<Matrix> {
        if self.singular {
            return None;
        }
        let n = self.lu.rows;
        let mut x = Matrix::zeros(n, rhs.cols);
        for c in 0..rhs.cols {
            let mut y: Vec<f64> = self.perm.iter().map(|&p| rhs[(p, c)]).collect();
            for i in 0..n {
                for k in 0..i {
                    y[i] -= self.lu[(i, k)] * y[k];
                }
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    y[i] -= self.lu[(i, k)] * y[k];
                }
                y[i] /= self.lu[(i, i)];
            }
            for i in 0..n {
                x[(i, c)] = y[i];
            }
        }
        Some(x)
    }
}

// Degree-13 Padé coefficients and the norm bound below which no scaling is
// needed for double precision (Higham, "The scaling and squaring method for
// the matrix exponential revisited").
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `e^{M t}` by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(m: &Matrix, t: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "expm needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("expm time argument"));
    }
    let n = m.rows;
    let a = m.scale(t);
    let norm = a.norm1();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scale(2f64.powi(-squarings));
    let b = &PADE13;
    let id = Matrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> Matrix {
        let mut out = a6.scale(c6);
        out = &out + &a4.scale(c4);
        out = &out + &a2.scale(c2);
        &out + &id.scale(c0)
    };
    let inner_u = &a6 * &lin(b[13], b[11], b[9], 0.0);
    let u = &a * &(&inner_u + &lin(b[7], b[5], b[3], b[1]));
    let inner_v = &a6 * &lin(b[12], b[10], b[8], 0.0);
    let v = &inner_v + &lin(b[6], b[4], b[2], b[0]);

    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom
        .solve(&numer)?
        .ok_or_else(|| Error::Dimension("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn check_pair(a: &Matrix, b: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "A must be square, got {}x{}",
            a.rows, a.cols
        )));
    }
    if b.cols != 1 || b.rows != a.rows {
        return Err(Error::Dimension(format!(
            "B must be {}x1, got {}x{}",
            a.rows, b.rows, b.cols
        )));
    }
    Ok(())
}

/// `∫₀^Δ e^{-As} B ds`, read off the top-right block of
/// `exp([[-A, B], [0, 0]] Δ)`.
fn kernel_integral(a: &Matrix, b: &Matrix, delta: f64) -> Result<Vec<f64>> {
    let n = a.rows;
    let mut aug = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = -a[(i, j)];
        }
        aug[(i, n)] = b[(i, 0)];
    }
    let e = expm(&aug, delta)?;
    Ok((0..n).map(|i| e[(i, n)]).collect())
}

/// Exact `∫_{t0}^{t1} e^{-As} B ds` as an `n`-vector.
pub fn cell_integral(a: &Matrix, b: &Matrix, t0: f64, t1: f64) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    if t0.is_nan() || t1.is_nan() || t0 >= t1 {
        return Err(Error::InvalidInterval { t0, t1 });
    }
    let local = kernel_integral(a, b, t1 - t0)?;
    if t0 == 0.0 {
        return Ok(local);
    }
    Ok(expm(a, -t0)?.mul_vec(&local))
}

/// `[B, AB, ..., A^{n-1}B]`.
pub fn controllability_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_pair(a, b)?;
    let n = a.rows;
    let mut out = Matrix::zeros(n, n);
    let mut col = b.column(0);
    for j in 0..n {
        for (i, v) in col.iter().enumerate() {
            out[(i, j)] = *v;
        }
        col = a.mul_vec(&col);
    }
    Ok(out)
}

pub fn kalman_rank(a: &Matrix, b: &Matrix) -> Result<usize> {
    Ok(controllability_matrix(a, b)?.rank(RANK_TOL))
}
