//! Traceless matrix bases and coefficient decomposition.
//!
//! Index conventions are 1-based in the public API (`d_1 .. d_{n^2-1}`) and
//! follow the ordering used throughout the symmetry tables: imaginary
//! antisymmetric generators first, then real symmetric, then diagonal.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::CMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisFamily {
    Pauli,
    GellMann3,
    GellMann4,
    Gamma,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("basis index {index} out of range 1..={max} for {family:?}")]
    Index { family: BasisFamily, index: usize, max: usize },
    #[error("{family:?} acts on dimension {expected}, got {found}")]
    Dimension { family: BasisFamily, expected: usize, found: usize },
    #[error("{family:?} expects {expected} coefficients, got {found}")]
    Count { family: BasisFamily, expected: usize, found: usize },
    #[error("the Gamma family does not span 4x4 matrices; use GellMann4 to decompose")]
    Incomplete,
}

impl BasisFamily {
    pub fn dim(self) -> usize {
        match self {
            BasisFamily::Pauli => 2,
            BasisFamily::GellMann3 => 3,
            BasisFamily::GellMann4 | BasisFamily::Gamma => 4,
        }
    }

    pub fn len(self) -> usize {
        match self {
            BasisFamily::Pauli => 3,
            BasisFamily::GellMann3 => 8,
            BasisFamily::GellMann4 => 15,
            BasisFamily::Gamma => 5,
        }
    }

    /// The complete family for a given dimension.
    pub fn for_dim(n: usize) -> Option<BasisFamily> {
        match n {
            2 => Some(BasisFamily::Pauli),
            3 => Some(BasisFamily::GellMann3),
            4 => Some(BasisFamily::GellMann4),
            _ => None,
        }
    }

    pub fn matrices(self) -> Vec<CMatrix> {
        match self {
            BasisFamily::Pauli => vec![sigma_x(), sigma_y(), sigma_z()],
            BasisFamily::GellMann3 => gell_mann(3),
            BasisFamily::GellMann4 => gell_mann(4),
            BasisFamily::Gamma => gammas(),
        }
    }

    /// 1-based accessor.
    pub fn matrix(self, index: usize) -> Result<CMatrix, BasisError> {
        if index == 0 || index > self.len() {
            return Err(BasisError::Index { family: self, index, max: self.len() });
        }
        Ok(self.matrices().swap_remove(index - 1))
    }

    /// Short label for coefficient `index` (1-based), e.g. `x` for Pauli.
    pub fn label(self, index: usize) -> String {
        match self {
            BasisFamily::Pauli => ["x", "y", "z"].get(index.wrapping_sub(1)).unwrap_or(&"?").to_string(),
            _ => index.to_string(),
        }
    }
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    })
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_diag(&[ONE, -ONE])
}

/// Generalized Gell-Mann matrices for dimension 3 or 4: antisymmetric
/// imaginary pairs, symmetric real pairs (both in row-major pair order),
/// then the diagonal generators normalized to `tr(B_a B_b) = 2 delta_ab`.
fn gell_mann(n: usize) -> Vec<CMatrix> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::with_capacity(n * n - 1);
    for &(a, b) in &pairs {
        let mut m = CMatrix::zeros(n);
        m[(a, b)] = -I;
        m[(b, a)] = I;
        out.push(m);
    }
    for &(a, b) in &pairs {
        let mut m = CMatrix::zeros(n);
        m[(a, b)] = ONE;
        m[(b, a)] = ONE;
        out.push(m);
    }
    for l in 1..n {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = vec![ZERO; n];
        for z in d.iter_mut().take(l) {
            *z = Complex64::new(norm, 0.0);
        }
        d[l] = Complex64::new(-(l as f64) * norm, 0.0);
        out.push(CMatrix::from_diag(&d));
    }
    out
}

/// Euclidean Dirac matrices `sigma_a (x) tau_b` in the ordering
/// (x0, yy, z0, yx, yz).
fn gammas() -> Vec<CMatrix> {
    let id = CMatrix::identity(2);
    vec![
        sigma_x().kron(&id),
        sigma_y().kron(&sigma_y()),
        sigma_z().kron(&id),
        sigma_y().kron(&sigma_x()),
        sigma_y().kron(&sigma_z()),
    ]
}

/// `d_0` and the generator coefficients of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub family: BasisFamily,
    pub d0: Complex64,
    pub d: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn max_abs(&self) -> f64 {
        self.d.iter().map(|z| z.norm()).fold(self.d0.norm(), f64::max)
    }
}

/// `d_0 = tr H / n`, `d_a = tr(H B_a) / 2`.
pub fn decompose(h: &CMatrix, family: BasisFamily) -> Result<CoefficientVector, BasisError> {
    if family == BasisFamily::Gamma {
        return Err(BasisError::Incomplete);
    }
    let n = family.dim();
    if h.dim() != n {
        return Err(BasisError::Dimension { family, expected: n, found: h.dim() });
    }
    let d = family.matrices().iter().map(|b| (h * b).trace() / 2.0).collect();
    Ok(CoefficientVector { family, d0: h.trace() / n as f64, d })
}

pub fn reconstruct(c: &CoefficientVector) -> Result<CMatrix, BasisError> {
    let family = c.family;
    if c.d.len() != family.len() {
        return Err(BasisError::Count { family, expected: family.len(), found: c.d.len() });
    }
    let n = family.dim();
    let mut h = CMatrix::identity(n).scale(c.d0);
    for (b, z) in family.matrices().iter().zip(&c.d) {
        h = &h + &b.scale(*z);
    }
    Ok(h)
}

/// Named constant generators used in configs, e.g. `sigma_x`, `M7`,
/// `Lambda13`, `Gamma5`, `identity`.
pub fn named_matrix(name: &str) -> Option<CMatrix> {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "sigma_x" | "sx" => return Some(sigma_x()),
        "sigma_y" | "sy" => return Some(sigma_y()),
        "sigma_z" | "sz" => return Some(sigma_z()),
        "identity2" | "id2" => return Some(CMatrix::identity(2)),
        "identity3" | "id3" => return Some(CMatrix::identity(3)),
        "identity4" | "id4" => return Some(CMatrix::identity(4)),
        _ => {}
    }
    let split = |prefix: &str, fam: BasisFamily| -> Option<CMatrix> {
        lower.strip_prefix(prefix).and_then(|rest| rest.parse::<usize>().ok()).and_then(|k| fam.matrix(k).ok())
    };
    split("lambda", BasisFamily::GellMann4)
        .or_else(|| split("gamma", BasisFamily::Gamma))
        .or_else(|| split("m", BasisFamily::GellMann3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orthonormal_and_traceless() {
        for fam in [BasisFamily::Pauli, BasisFamily::GellMann3, BasisFamily::GellMann4, BasisFamily::Gamma] {
            let ms = fam.matrices();
            assert_eq!(ms.len(), fam.len());
            for (a, ma) in ms.iter().enumerate() {
                assert!(ma.trace().norm() < 1e-15);
                assert!(ma.max_diff(&ma.adjoint()) < 1e-15, "{fam:?} {a} not Hermitian");
                for (b, mb) in ms.iter().enumerate() {
                    let t = (ma * mb).trace();
                    let norm = if fam == BasisFamily::Gamma { 4.0 } else { 2.0 };
                    let want = if a == b { norm } else { 0.0 };
                    assert!((t - c(want, 0.0)).norm() < 1e-14, "{fam:?} {a} {b}: {t}");
                }
            }
        }
    }

    #[test]
    fn gell_mann_3_entries() {
        let m = BasisFamily::GellMann3.matrices();
        assert_eq!(m[0][(0, 1)], -I);
        assert_eq!(m[1][(2, 0)], I);
        assert_eq!(m[2][(1, 2)], -I);
        assert_eq!(m[3][(1, 0)], ONE);
        assert_eq!(m[5][(2, 1)], ONE);
        assert_eq!(m[6], CMatrix::from_diag(&[ONE, -ONE, ZERO]));
        let s3 = 3f64.sqrt();
        assert!(m[7].max_diff(&CMatrix::from_diag(&[c(1.0 / s3, 0.0), c(1.0 / s3, 0.0), c(-2.0 / s3, 0.0)])) < 1e-15);
    }

    #[test]
    fn gell_mann_4_entries() {
        let l = BasisFamily::GellMann4.matrices();
        assert_eq!(l[2][(0, 3)], -I);
        assert_eq!(l[5][(3, 2)], I);
        assert_eq!(l[8][(3, 0)], ONE);
        assert_eq!(l[11][(2, 3)], ONE);
        assert_eq!(l[12], CMatrix::from_diag(&[ONE, -ONE, ZERO, ZERO]));
        assert!((l[14][(3, 3)] - c(-(1.5f64).sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gammas_in_gell_mann_terms() {
        let l = BasisFamily::GellMann4.matrices();
        let g = BasisFamily::Gamma.matrices();
        assert!(g[0].max_diff(&(&l[7] + &l[10])) < 1e-15);
        assert!(g[1].max_diff(&(&l[9] - &l[8])) < 1e-15);
        let g3 = &l[13].scale(c(2.0 / 3f64.sqrt(), 0.0)) + &l[14].scale(c((2.0 / 3.0f64).sqrt(), 0.0));
        assert!(g[2].max_diff(&g3) < 1e-15);
        assert!(g[3].max_diff(&(&l[2] + &l[3])) < 1e-15);
        assert!(g[4].max_diff(&(&l[1] - &l[4])) < 1e-15);
        // Clifford algebra
        for a in 0..5 {
            for b in 0..5 {
                let ac = &(&g[a] * &g[b]) + &(&g[b] * &g[a]);
                let want = if a == b { CMatrix::identity(4).scale(c(2.0, 0.0)) } else { CMatrix::zeros(4) };
                assert!(ac.max_diff(&want) < 1e-15);
            }
        }
    }

    #[test]
    fn decompose_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for fam in [BasisFamily::Pauli, BasisFamily::GellMann3, BasisFamily::GellMann4] {
            for _ in 0..50 {
                let n = fam.dim();
                let h = CMatrix::from_fn(n, |_, _| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
                let cv = decompose(&h, fam).unwrap();
                let back = reconstruct(&cv).unwrap();
                assert!(back.max_diff(&h) < 1e-13 * h.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn decompose_errors() {
        let h = CMatrix::identity(3);
        assert!(matches!(decompose(&h, BasisFamily::Pauli), Err(BasisError::Dimension { .. })));
        assert_eq!(decompose(&CMatrix::identity(4), BasisFamily::Gamma), Err(BasisError::Incomplete));
        assert!(matches!(BasisFamily::GellMann3.matrix(9), Err(BasisError::Index { .. })));
        assert!(matches!(BasisFamily::GellMann3.matrix(0), Err(BasisError::Index { .. })));
    }

    #[test]
    fn named_lookup() {
        assert_eq!(named_matrix("sigma_y"), Some(sigma_y()));
        assert_eq!(named_matrix("M7"), BasisFamily::GellMann3.matrix(7).ok());
        assert_eq!(named_matrix("Lambda15"), BasisFamily::GellMann4.matrix(15).ok());
        assert_eq!(named_matrix("Gamma5"), BasisFamily::Gamma.matrix(5).ok());
        assert_eq!(named_matrix("nope"), None);
    }
}
