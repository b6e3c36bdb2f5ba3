//! Dense complex square matrices and the handful of factorizations the rest
//! of the crate needs: LU determinant, Hessenberg QR eigenvalues and a
//! one-sided Jacobi SVD.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix dimension {0} outside supported range {MIN_DIM}..={MAX_DIM}")]
    Dimension(usize),
    #[error("matrix rows are not square: expected {expected} entries, row {row} has {found}")]
    Ragged { expected: usize, row: usize, found: usize },
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    Mismatch(usize, usize),
    #[error("matrix is singular")]
    Singular,
    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
}

/// Row-major complex square matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6e}{:+.6e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl CMatrix {
    /// Zero matrix. Internal helper; user-facing construction goes through
    /// [`CMatrix::from_rows`] which validates the dimension.
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, z) in d.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }

    /// Single Jordan block of size `n`: `lambda` on the diagonal, ones above.
    pub fn jordan(n: usize, lambda: Complex64) -> Self {
        Self::from_fn(n, |i, j| {
            if i == j {
                lambda
            } else if j == i + 1 {
                ONE
            } else {
                ZERO
            }
        })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self, MatrixError> {
        let n = rows.len();
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(MatrixError::Dimension(n));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(MatrixError::Ragged { expected: n, row: i, found: row.len() });
            }
            for (j, z) in row.into_iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(MatrixError::NonFinite(i, j));
                }
                data.push(z);
            }
        }
        Ok(CMatrix { n, data })
    }

    /// Real-valued convenience constructor, mostly for tests and generators.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, MatrixError> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        CMatrix { n: self.n, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// `self - z * 1`.
    pub fn shift(&self, z: Complex64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] -= z;
        }
        m
    }

    /// Traceless part `H - tr(H)/n`.
    pub fn traceless(&self) -> Self {
        self.shift(self.trace() / self.n as f64)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.n);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Maximum absolute row sum (the induced infinity norm).
    pub fn norm(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (a, b) = (self.n, other.n);
        CMatrix::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, other: &CMatrix) -> CMatrix {
        let n = self.n + other.n;
        CMatrix::from_fn(n, |i, j| {
            if i < self.n && j < self.n {
                self[(i, j)]
            } else if i >= self.n && j >= self.n {
                other[(i - self.n, j - self.n)]
            } else {
                ZERO
            }
        })
    }

    /// LU factorization with partial pivoting. Returns the packed factors,
    /// the permutation and its sign.
    fn lu(&self) -> (CMatrix, Vec<usize>, f64) {
        let n = self.n;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].norm().total_cmp(&a[(y, k)].norm()))
                .unwrap_or(k);
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = a[(k, k)];
            if piv == ZERO {
                continue;
            }
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                a[(i, k)] = f;
                for j in k + 1..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
        (a, perm, sign)
    }

    pub fn det(&self) -> Complex64 {
        let (lu, _, sign) = self.lu();
        let mut d = Complex64::new(sign, 0.0);
        for i in 0..self.n {
            d *= lu[(i, i)];
        }
        d
    }

    pub fn inverse(&self) -> Result<CMatrix, MatrixError> {
        let n = self.n;
        let (lu, perm, _) = self.lu();
        let tiny = f64::EPSILON * self.max_abs().max(f64::MIN_POSITIVE);
        if (0..n).any(|i| lu[(i, i)].norm() <= tiny) {
            return Err(MatrixError::Singular);
        }
        let mut inv = CMatrix::zeros(n);
        for col in 0..n {
            let mut x: Vec<Complex64> = (0..n).map(|i| if perm[i] == col { ONE } else { ZERO }).collect();
            for i in 0..n {
                for k in 0..i {
                    let t = lu[(i, k)] * x[k];
                    x[i] -= t;
                }
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    let t = lu[(i, k)] * x[k];
                    x[i] -= t;
                }
                x[i] /= lu[(i, i)];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        Ok(inv)
    }

    /// Eigenvalues via Householder reduction to Hessenberg form followed by
    /// single-shift complex QR. Order is whatever deflation produces; callers
    /// sort as needed.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>, MatrixError> {
        let n = self.n;
        let mut h = self.clone();
        hessenberg(&mut h);
        let norm = h.frobenius().max(f64::MIN_POSITIVE);
        let eps = f64::EPSILON;
        let mut out = vec![ZERO; n];
        let mut hi = n as isize - 1;
        let mut iter = 0usize;
        let max_iter = 60 * n;
        let mut total = 0usize;
        while hi >= 0 {
            let hu = hi as usize;
            // find lo: the start of the unreduced block ending at hi
            let mut lo = hu;
            while lo > 0 {
                let sub = h[(lo, lo - 1)].norm();
                let s = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
                let s = if s == 0.0 { norm } else { s };
                if sub <= eps * s || sub <= f64::MIN_POSITIVE * norm {
                    h[(lo, lo - 1)] = ZERO;
                    break;
                }
                lo -= 1;
            }
            if lo == hu {
                out[hu] = h[(hu, hu)];
                hi -= 1;
                iter = 0;
                continue;
            }
            if lo + 1 == hu {
                // a 2x2 window is solved directly; QR can cycle on +-a pairs
                let (l1, l2) = eig2(h[(lo, lo)], h[(lo, hu)], h[(hu, lo)], h[(hu, hu)]);
                out[lo] = l1;
                out[hu] = l2;
                hi -= 2;
                iter = 0;
                continue;
            }
            iter += 1;
            total += 1;
            if iter > max_iter {
                return Err(MatrixError::NoConvergence(total));
            }
            let mu = if iter % 10 == 0 {
                // exceptional shift to break cycles
                let e = h[(hu, hu - 1)].norm()
                    + if hu >= lo + 2 { h[(hu - 1, hu - 2)].norm() } else { 0.0 };
                // off the real axis so that spectra symmetric about a real
                // point cannot keep the shift equidistant
                h[(hu, hu)] + Complex64::new(0.75 * e, 0.4375 * e)
            } else {
                wilkinson_shift(h[(hu - 1, hu - 1)], h[(hu - 1, hu)], h[(hu, hu - 1)], h[(hu, hu)])
            };
            qr_step(&mut h, lo, hu, mu);
        }
        Ok(out)
    }

    /// Singular values in descending order (one-sided Jacobi).
    pub fn singular_values(&self) -> Vec<f64> {
        let n = self.n;
        // columns of A
        let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| (0..n).map(|i| self[(i, j)]).collect()).collect();
        let tol = 1e-15;
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                    let gamma: Complex64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a.conj() * b).sum();
                    let g = gamma.norm();
                    if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..n {
                        let ap = cols[p][i];
                        let bq = cols[q][i] * phase.conj();
                        cols[p][i] = ap * c - bq * s;
                        cols[q][i] = (ap * s + bq * c) * phase;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Numerical rank: singular values above `tol * sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let sv = self.singular_values();
        let smax = sv.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > tol * smax).count()
    }

    pub fn max_diff(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Both eigenvalues of `[[a, b], [c, d]]`, computed around the mean to
/// limit cancellation.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let m = (a + d) / 2.0;
    let h = (a - d) / 2.0;
    let disc = (h * h + b * c).sqrt();
    (m + disc, m - disc)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    // eigenvalue of [[a,b],[c,d]] closer to d
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) / 2.0;
    let l2 = (tr - disc) / 2.0;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn hessenberg(h: &mut CMatrix) {
    let n = h.n;
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let mut v = x.clone();
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- (I - 2 v v^H / |v|^2) H (I - 2 v v^H / |v|^2)
        for j in 0..n {
            let s: Complex64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            let f = s * 2.0 / vnorm2;
            for i in 0..v.len() {
                let t = v[i] * f;
                h[(k + 1 + i, j)] -= t;
            }
        }
        for i in 0..n {
            let s: Complex64 = (0..v.len()).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            let f = s * 2.0 / vnorm2;
            for j in 0..v.len() {
                let t = f * v[j].conj();
                h[(i, k + 1 + j)] -= t;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// One explicit shifted QR step on the active window `lo..=hi` using Givens
/// rotations. Only eigenvalues are needed, so rotations are applied to the
/// window alone.
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, mu: Complex64) {
    for i in lo..=hi {
        h[(i, i)] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (a / r, b / r) };
        // G = [[c*, s*], [-s, c]] applied to rows k, k+1
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c.conj() * x + s.conj() * y;
            h[(k + 1, j)] = -s * x + c * y;
        }
        rots.push((c, s));
    }
    for (idx, k) in (lo..hi).enumerate() {
        let (c, s) = rots[idx];
        // right-multiply columns k, k+1 by G^H = [[c, -s*], [s, c*]]
        for i in lo..=(k + 1).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s;
            h[(i, k + 1)] = -x * s.conj() + y * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += mu;
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in product");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in sum");
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in difference");
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().map(|z| -z).collect() }
    }
}

/// Sort complex numbers lexicographically by (re, im).
pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
