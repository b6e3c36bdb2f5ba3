//! Characteristic polynomials from power traces, EP constraint sets,
//! discriminants, the perturbed-Jordan companion form and closed-form roots
//! for n <= 4.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{sort_complex, CMatrix, MatrixError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharPolyError {
    #[error("closed-form roots are only available for n <= 4, got n = {0}")]
    NoClosedForm(usize),
    #[error("{what} needs dimension {expected}, got {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Coefficients of `det(lambda - H) = lambda^n - s1 lambda^(n-1) + ... + (-1)^n sn`
/// together with the power traces they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    n: usize,
    /// `sigma[k-1] = sigma_k`
    sigma: Vec<Complex64>,
    /// `s[k-1] = tr H^k`
    s: Vec<Complex64>,
}

impl CharPoly {
    /// Faddeev-LeVerrier: power traces `s_k` feed the Newton recursion for
    /// `p_k = (-1)^k sigma_k`, k < n. The last coefficient is the LU
    /// determinant, which is better conditioned than closing the recursion.
    pub fn from_matrix(h: &CMatrix) -> CharPoly {
        let n = h.dim();
        let mut s = Vec::with_capacity(n);
        let mut pw = h.clone();
        for k in 1..=n {
            if k > 1 {
                pw = &pw * h;
            }
            s.push(pw.trace());
        }
        let mut p = vec![ZERO; n + 1];
        p[0] = ONE;
        for k in 1..n {
            let mut acc = s[k - 1];
            for j in 1..k {
                acc += p[j] * s[k - j - 1];
            }
            p[k] = -acc / k as f64;
        }
        let det = h.det();
        p[n] = if n % 2 == 0 { det } else { -det };
        let sigma = (1..=n).map(|k| if k % 2 == 0 { p[k] } else { -p[k] }).collect();
        CharPoly { n, sigma, s }
    }

    /// Build from `sigma_1 .. sigma_n`; power traces follow from Newton's
    /// identities run forward.
    pub fn from_sigma(sigma: Vec<Complex64>) -> CharPoly {
        let n = sigma.len();
        let p: Vec<Complex64> = std::iter::once(ONE)
            .chain(sigma.iter().enumerate().map(|(i, z)| if (i + 1) % 2 == 0 { *z } else { -z }))
            .collect();
        let mut s = Vec::with_capacity(n);
        for k in 1..=n {
            let mut acc = p[k] * k as f64;
            for j in 1..k {
                acc += p[j] * s[k - j - 1];
            }
            s.push(-acc);
        }
        CharPoly { n, sigma, s }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `sigma_k` for k in 1..=n.
    pub fn sigma(&self, k: usize) -> Complex64 {
        self.sigma[k - 1]
    }

    pub fn sigmas(&self) -> &[Complex64] {
        &self.sigma
    }

    /// `p_k = (-1)^k sigma_k`, with `p_0 = 1`.
    pub fn p(&self, k: usize) -> Complex64 {
        if k == 0 {
            ONE
        } else if k % 2 == 0 {
            self.sigma[k - 1]
        } else {
            -self.sigma[k - 1]
        }
    }

    /// `tr H^k` for k in 1..=n.
    pub fn power_trace(&self, k: usize) -> Complex64 {
        self.s[k - 1]
    }

    pub fn trace(&self) -> Complex64 {
        self.sigma[0]
    }

    pub fn det(&self) -> Complex64 {
        self.sigma[self.n - 1]
    }

    /// Monic coefficients, highest degree first: `[1, p_1, ..., p_n]`.
    pub fn monic(&self) -> Vec<Complex64> {
        (0..=self.n).map(|k| self.p(k)).collect()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.monic().iter().fold(ZERO, |acc, a| acc * z + a)
    }

    /// Characteristic energy scale `max_k |sigma_k|^(1/k)`.
    pub fn scale(&self) -> f64 {
        self.sigma.iter().enumerate().map(|(i, z)| z.norm().powf(1.0 / (i + 1) as f64)).fold(0.0, f64::max)
    }

    /// Relative backward error of `z` as a root.
    pub fn residual(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let denom: f64 = self.monic().iter().enumerate().map(|(k, a)| a.norm() * r.powi((self.n - k) as i32)).sum();
        if denom == 0.0 {
            0.0
        } else {
            self.eval(z).norm() / denom
        }
    }
}

/// `[tr H~^2, ..., tr H~^(n-1), det H~]` for the traceless part `H~`; all
/// entries vanish at an EPn.
pub fn constraint_vector(h: &CMatrix) -> Vec<Complex64> {
    let n = h.dim();
    let ht = h.traceless();
    let mut out = Vec::with_capacity(n - 1);
    let mut pw = ht.clone();
    for _k in 2..n {
        pw = &pw * &ht;
        out.push(pw.trace());
    }
    out.push(ht.det());
    out
}

/// Polynomial degree (in energy units) of each entry of [`constraint_vector`].
pub fn constraint_degrees(n: usize) -> Vec<i32> {
    let mut d: Vec<i32> = (2..n as i32).collect();
    d.push(n as i32);
    d
}

/// The named constraint quantities for n = 2, 3, 4 plus the generic vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub n: usize,
    pub eta: Complex64,
    pub nu: Complex64,
    pub kappa: Option<Complex64>,
    pub generic: Vec<Complex64>,
}

/// Two bands: with `H - tr/2 = d.sigma`, `eta = d_R^2 - d_I^2` and
/// `nu = d_R . d_I`, read off from `d.d = (tr^2 - 4 det)/4`.
pub fn constraints2(h: &CMatrix) -> Result<ConstraintSet, CharPolyError> {
    check_dim("constraints2", h, 2)?;
    let dd = (h.trace() * h.trace() - h.det() * 4.0) / 4.0;
    Ok(ConstraintSet { n: 2, eta: c(dd.re), nu: c(dd.im / 2.0), kappa: None, generic: constraint_vector(h) })
}

pub fn constraints3(h: &CMatrix) -> Result<ConstraintSet, CharPolyError> {
    check_dim("constraints3", h, 3)?;
    let cp = CharPoly::from_matrix(h);
    let (eta, nu) = eta_nu3(&cp);
    Ok(ConstraintSet { n: 3, eta, nu, kappa: None, generic: constraint_vector(h) })
}

pub fn constraints4(h: &CMatrix) -> Result<ConstraintSet, CharPolyError> {
    check_dim("constraints4", h, 4)?;
    let cp = CharPoly::from_matrix(h);
    let (eta, nu, kappa) = eta_nu_kappa4(&cp);
    Ok(ConstraintSet { n: 4, eta, nu, kappa: Some(kappa), generic: constraint_vector(h) })
}

pub fn constraints(h: &CMatrix) -> Result<ConstraintSet, CharPolyError> {
    match h.dim() {
        2 => constraints2(h),
        3 => constraints3(h),
        4 => constraints4(h),
        n => Err(CharPolyError::NoClosedForm(n)),
    }
}

fn check_dim(what: &'static str, h: &CMatrix, n: usize) -> Result<(), CharPolyError> {
    if h.dim() != n {
        return Err(CharPolyError::Dimension { what, expected: n, found: h.dim() });
    }
    Ok(())
}

fn eta_nu3(cp: &CharPoly) -> (Complex64, Complex64) {
    let tr = cp.trace();
    let t2 = cp.power_trace(2);
    let det = cp.det();
    let eta = tr * tr / 2.0 - t2 * 1.5;
    let nu = det * 27.0 - tr * tr * tr * 2.5 + tr * t2 * 4.5;
    (eta, nu)
}

/// Quartic invariants from `a = tr`, `b = sigma_2`, `c = sigma_3`, `d = det`.
fn eta_nu_kappa4(cp: &CharPoly) -> (Complex64, Complex64, Complex64) {
    let a = cp.sigma(1);
    let b = cp.sigma(2);
    let cc = cp.sigma(3);
    let d = cp.sigma(4);
    let eta = -a * cc * 3.0 + b * b + d * 12.0;
    let nu = a * a * d * 27.0 - a * b * cc * 9.0 + b * b * b * 2.0 - b * d * 72.0 + cc * cc * 27.0;
    let kappa = a * a * a - a * b * 4.0 + cc * 8.0;
    (eta, nu, kappa)
}

/// Discriminant `prod_{i<j} (lambda_i - lambda_j)^2`. Closed forms for
/// n <= 4, eigenvalue product otherwise.
pub fn discriminant(h: &CMatrix) -> Result<Complex64, CharPolyError> {
    let cp = CharPoly::from_matrix(h);
    match h.dim() {
        2 => Ok(cp.trace() * cp.trace() - cp.det() * 4.0),
        3 => {
            let (eta, nu) = eta_nu3(&cp);
            Ok(-(eta * eta * eta * 4.0 + nu * nu) / 27.0)
        }
        4 => {
            let (eta, nu, _) = eta_nu_kappa4(&cp);
            Ok((eta * eta * eta * 4.0 - nu * nu) / 27.0)
        }
        _ => Ok(discriminant_from_roots(&h.eigenvalues()?)),
    }
}

pub fn discriminant_from_roots(roots: &[Complex64]) -> Complex64 {
    let mut d = ONE;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let x = roots[i] - roots[j];
            d *= x * x;
        }
    }
    d
}

/// `J_n` plus a bottom-row perturbation `delta_j = dJ_{n,j}`, j = 1..n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedJordan {
    pub delta: Vec<Complex64>,
}

impl PerturbedJordan {
    pub fn n(&self) -> usize {
        self.delta.len()
    }

    /// `dJ_{n,j} = (-1)^(n+j) sigma_{n+1-j}` for j < n and `dJ_{n,n} = tr`.
    pub fn from_charpoly(cp: &CharPoly) -> PerturbedJordan {
        let n = cp.n();
        let delta = (1..=n)
            .map(|j| {
                let s = cp.sigma(n + 1 - j);
                if (n + j) % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        PerturbedJordan { delta }
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.n();
        let mut m = CMatrix::zeros(n);
        for i in 0..n - 1 {
            m[(i, i + 1)] = ONE;
        }
        for (j, z) in self.delta.iter().enumerate() {
            m[(n - 1, j)] += *z;
        }
        m
    }
}

/// Frobenius companion matrix in perturbed-Jordan form.
pub fn companion(cp: &CharPoly) -> CMatrix {
    PerturbedJordan::from_charpoly(cp).to_matrix()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub residuals: Vec<f64>,
}

impl Spectrum {
    fn from_poly_roots(cp: &CharPoly, mut roots: Vec<Complex64>) -> Spectrum {
        sort_complex(&mut roots);
        let residuals = roots.iter().map(|z| cp.residual(*z)).collect();
        Spectrum { eigenvalues: roots, residuals }
    }
}

/// Eigenvalues of `H` by Hessenberg QR, sorted by (re, im). Residuals are
/// `sigma_min(H - lambda) / ||H||`.
pub fn roots_numeric(h: &CMatrix) -> Result<Spectrum, CharPolyError> {
    let mut ev = h.eigenvalues()?;
    sort_complex(&mut ev);
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let residuals = ev.iter().map(|z| h.shift(*z).singular_values().last().copied().unwrap_or(0.0) / scale).collect();
    Ok(Spectrum { eigenvalues: ev, residuals })
}

/// Roots of a characteristic polynomial via the eigenvalues of its companion
/// matrix.
pub fn roots_of_poly(cp: &CharPoly) -> Result<Spectrum, CharPolyError> {
    let ev = companion(cp).eigenvalues()?;
    Ok(Spectrum::from_poly_roots(cp, ev))
}

/// Like [`roots_of_poly`] but trailing coefficients at rounding level are
/// treated as exact zeros, so a multiple root at the origin is returned
/// exactly instead of being smeared over a ring of radius eps^(1/m).
pub fn roots_deflated(cp: &CharPoly, scale: f64) -> Result<Vec<Complex64>, CharPolyError> {
    let n = cp.n();
    let tol = 64.0 * f64::EPSILON;
    let mut m = 0;
    while m < n {
        let k = n - m;
        if cp.sigma(k).norm() <= tol * scale.powi(k as i32) {
            m += 1;
        } else {
            break;
        }
    }
    let mut roots = vec![ZERO; m];
    let rest = n - m;
    if rest == 1 {
        roots.push(cp.sigma(1));
    } else if rest >= 2 {
        let reduced = CharPoly::from_sigma(cp.sigmas()[..rest].to_vec());
        roots.extend(companion(&reduced).eigenvalues()?);
    }
    Ok(roots)
}

/// Closed-form roots for n = 2, 3, 4 (principal branches; the sign of the
/// inner square root is chosen to avoid cancellation). Near-degenerate
/// radicands fall back to companion-matrix eigenvalues.
pub fn roots_closed(cp: &CharPoly) -> Result<Spectrum, CharPolyError> {
    let roots = match cp.n() {
        2 => {
            let tr = cp.trace();
            let sq = (tr * tr - cp.det() * 4.0).sqrt();
            Some(vec![(tr + sq) / 2.0, (tr - sq) / 2.0])
        }
        3 => cubic_roots(cp),
        4 => quartic_roots(cp),
        n => return Err(CharPolyError::NoClosedForm(n)),
    };
    match roots {
        Some(r) if r.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(Spectrum::from_poly_roots(cp, r)),
        _ => roots_of_poly(cp),
    }
}

/// `z` or `-z`, whichever keeps `z + nu` away from cancellation.
fn stable_sqrt(radicand: Complex64, nu: Complex64) -> Complex64 {
    let sq = radicand.sqrt();
    if (sq + nu).norm() >= (nu - sq).norm() {
        sq
    } else {
        -sq
    }
}

fn cubic_roots(cp: &CharPoly) -> Option<Vec<Complex64>> {
    let (eta, nu) = eta_nu3(cp);
    let tr = cp.trace();
    let scale = cp.scale();
    let radicand = eta * eta * eta * 4.0 + nu * nu;
    if radicand.norm() < 1e-30 * scale.powi(6) {
        return None;
    }
    let cube = stable_sqrt(radicand, nu) + nu;
    if cube.norm() == 0.0 {
        return None;
    }
    let cc = cube.powf(1.0 / 3.0);
    let cbrt2 = 2f64.cbrt();
    let c23 = cbrt2 * cbrt2;
    let s3 = 3f64.sqrt();
    let i = Complex64::new(0.0, 1.0);
    let l1 = (cc * c23 - eta * (2.0 * cbrt2) / cc + tr * 2.0) / 6.0;
    let l2 = (i * (i + s3) * cc * c23 + (c(2.0) + i * (2.0 * s3)) * cbrt2 * eta / cc + tr * 4.0) / 12.0;
    let l3 = (i * (i - s3) * cc * c23 + (c(2.0) - i * (2.0 * s3)) * cbrt2 * eta / cc + tr * 4.0) / 12.0;
    Some(vec![l1, l2, l3])
}

/// Quartic roots of the traceless shift, then shifted back by `tr/4`.
fn quartic_roots(cp: &CharPoly) -> Option<Vec<Complex64>> {
    let a = cp.trace();
    let shift = a / 4.0;
    // sigma_k of H - a/4, via the shifted monic polynomial
    let shifted = shift_poly(cp, shift);
    let b = shifted.sigma(2);
    let (eta, nu, kappa) = eta_nu_kappa4(&shifted);
    let scale = cp.scale();
    let radicand = nu * nu - eta * eta * eta * 4.0;
    if radicand.norm() < 1e-30 * scale.powi(6) && (eta.norm() > 1e-14 * scale.powi(2)) {
        return None;
    }
    let r3 = stable_sqrt(radicand, nu) + nu;
    let cbrt2 = 2f64.cbrt();
    let c23 = cbrt2 * cbrt2;
    let c53 = 2.0 * c23;
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let r0 = if r3.norm() == 0.0 { ZERO } else { r3.powf(1.0 / 3.0) };
    // choose the cube-root branch giving the largest S (Ferrari's resolvent root)
    let mut best: Option<(Complex64, Complex64)> = None;
    for j in 0..3 {
        let r = r0 * omega.powu(j);
        let eta_over_r = if r.norm() == 0.0 { ZERO } else { eta / r };
        let s = (-b * 8.0 + r * c53 + eta_over_r * (4.0 * cbrt2)).sqrt();
        if best.map_or(true, |(bs, _)| s.norm() > bs.norm()) {
            best = Some((s, r));
        }
    }
    let (s, r) = best?;
    let eta_over_r = if r.norm() == 0.0 { ZERO } else { eta / r };
    let base = -b * 8.0 - r * c23 - eta_over_r * (2.0 * cbrt2);
    let (tm, tp) = if s.norm() <= 1e-12 * scale {
        // biquadratic: kappa must vanish too, the roots pair up as +-
        if kappa.norm() > 1e-10 * scale.powi(3) {
            return None;
        }
        (base.sqrt(), base.sqrt())
    } else {
        let k = kappa * (3.0 * s3) / s;
        ((-k + base).sqrt(), (k + base).sqrt())
    };
    let roots = vec![
        (-tm * s6 - s * s3) / 12.0,
        (tm * s6 - s * s3) / 12.0,
        (-tp * s6 + s * s3) / 12.0,
        (tp * s6 + s * s3) / 12.0,
    ];
    Some(roots.into_iter().map(|z| z + shift).collect())
}

/// Characteristic polynomial of `H - t` given that of `H`.
fn shift_poly(cp: &CharPoly, t: Complex64) -> CharPoly {
    // coefficients of q(x) = p(x + t), p monic in descending order
    let n = cp.n();
    let mut coef = cp.monic();
    // synthetic Taylor shift
    for i in 0..n {
        for j in 1..=n - i {
            let prev = coef[j - 1];
            coef[j] += prev * t;
        }
    }
    let sigma = (1..=n).map(|k| if k % 2 == 0 { coef[k] } else { -coef[k] }).collect();
    CharPoly::from_sigma(sigma)
}

/// Result of optimally pairing two multisets of complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `perm[i]` is the index in `b` matched to `a[i]`.
    pub perm: Vec<usize>,
    pub total: f64,
    pub max: f64,
}

/// Minimum total-distance assignment between equal-size multisets (exact
/// branch and bound; sizes here never exceed eight).
pub fn min_cost_matching(a: &[Complex64], b: &[Complex64]) -> Matching {
    assert_eq!(a.len(), b.len(), "matching needs equal sizes");
    let n = a.len();
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    // greedy start for a finite bound
    let mut used = vec![false; n];
    let mut perm = vec![0; n];
    let mut total = 0.0;
    for i in 0..n {
        let j = (0..n).filter(|&j| !used[j]).min_by(|&x, &y| cost[i][x].total_cmp(&cost[i][y])).unwrap_or(0);
        used[j] = true;
        perm[i] = j;
        total += cost[i][j];
    }
    let mut best = (total, perm.clone());
    let mut cur = vec![0; n];
    let mut used = vec![false; n];
    fn dfs(i: usize, acc: f64, cost: &[Vec<f64>], used: &mut [bool], cur: &mut [usize], best: &mut (f64, Vec<usize>)) {
        let n = cost.len();
        if acc >= best.0 {
            return;
        }
        if i == n {
            *best = (acc, cur.to_vec());
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                cur[i] = j;
                dfs(i + 1, acc + cost[i][j], cost, used, cur, best);
                used[j] = false;
            }
        }
    }
    dfs(0, 0.0, &cost, &mut used, &mut cur, &mut best);
    let max = best.1.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max);
    Matching { perm: best.1, total: best.0, max }
}

/// Largest distance in the optimal matching, relative to `scale`.
pub fn spectral_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    min_cost_matching(a, b).max
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(n, |_, _| z(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// Brute-force sigma_k as the sum of principal k-minors.
    fn minors_sigma(h: &CMatrix, k: usize) -> Complex64 {
        let n = h.dim();
        let mut total = ZERO;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            total += small_det(&idx.iter().map(|&i| idx.iter().map(|&j| h[(i, j)]).collect()).collect::<Vec<Vec<_>>>());
        }
        total
    }

    fn small_det(m: &[Vec<Complex64>]) -> Complex64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut d = ZERO;
        for j in 0..n {
            let sub: Vec<Vec<Complex64>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect()).collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            d += m[0][j] * small_det(&sub) * sign;
        }
        d
    }

    #[test]
    fn sigma_matches_principal_minors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=6 {
            for _ in 0..10 {
                let h = random(n, &mut rng);
                let cp = CharPoly::from_matrix(&h);
                for k in 1..=n {
                    let want = minors_sigma(&h, k);
                    assert!((cp.sigma(k) - want).norm() < 1e-11, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn from_sigma_recovers_power_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=8 {
            let h = random(n, &mut rng);
            let cp = CharPoly::from_matrix(&h);
            let back = CharPoly::from_sigma(cp.sigmas().to_vec());
            for k in 1..=n {
                assert!((back.power_trace(k) - cp.power_trace(k)).norm() < 1e-10 * (1.0 + cp.power_trace(k).norm()));
            }
        }
    }

    #[test]
    fn jordan_block_has_zero_constraints() {
        for n in 2..=8 {
            let j = PerturbedJordan { delta: vec![ZERO; n] }.to_matrix();
            assert!(constraint_vector(&j).iter().all(|x| x.norm() == 0.0));
            assert_eq!(discriminant(&j).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn companion_bottom_rows() {
        // traceless 2x2: [[0,1],[-det,0]]
        let h = CMatrix::from_rows(vec![vec![z(1.0, 0.5), z(2.0, 0.0)], vec![z(0.3, -1.0), z(-1.0, -0.5)]]).unwrap();
        let cp = CharPoly::from_matrix(&h);
        let m = companion(&cp);
        assert!((m[(1, 0)] + h.det()).norm() < 1e-15);
        assert_eq!(m[(1, 1)], ZERO);
        // traceless 3x3: (det, tr H^2 / 2, 0)
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h3 = random(3, &mut rng).traceless();
        let m3 = companion(&CharPoly::from_matrix(&h3));
        assert!((m3[(2, 0)] - h3.det()).norm() < 1e-14);
        assert!((m3[(2, 1)] - (&h3 * &h3).trace() / 2.0).norm() < 1e-14);
        assert!(m3[(2, 2)].norm() < 1e-15);
        // traceless 4x4: (-det, tr H^3 / 3, tr H^2 / 2, 0)
        let h4 = random(4, &mut rng).traceless();
        let m4 = companion(&CharPoly::from_matrix(&h4));
        assert!((m4[(3, 0)] + h4.det()).norm() < 1e-14);
        assert!((m4[(3, 1)] - h4.pow(3).trace() / 3.0).norm() < 1e-14);
        assert!((m4[(3, 2)] - h4.pow(2).trace() / 2.0).norm() < 1e-14);
        assert!(m4[(3, 3)].norm() < 1e-15);
    }

    #[test]
    fn two_band_eta_nu() {
        let h = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        assert!((discriminant(&h).unwrap() - z(1.0, 0.0)).norm() < 1e-15);
        // d = (1+2i, 0.5, -i): eta = |dR|^2 - |dI|^2, nu = dR.dI
        let d = [z(1.0, 2.0), z(0.5, 0.0), z(0.0, -1.0)];
        let pauli = crate::basis::BasisFamily::Pauli.matrices();
        let mut h = CMatrix::identity(2).scale(z(0.7, 0.1));
        for (m, x) in pauli.iter().zip(d) {
            h = &h + &m.scale(x);
        }
        let cs = constraints2(&h).unwrap();
        assert!((cs.eta - z(1.25 - 5.0, 0.0)).norm() < 1e-14);
        assert!((cs.nu - z(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn discriminant_matches_eigenvalue_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 2..=6 {
            for _ in 0..100 {
                let h = random(n, &mut rng);
                let d = discriminant(&h).unwrap();
                let want = discriminant_from_roots(&h.eigenvalues().unwrap());
                assert!((d - want).norm() <= 1e-9 * want.norm().max(1e-12), "n={n}: {d} vs {want}");
            }
        }
    }

    #[test]
    fn closed_form_degenerate_cases() {
        // triple root at 2: companion of (x-2)^3
        let cp = CharPoly::from_sigma(vec![z(6.0, 0.0), z(12.0, 0.0), z(8.0, 0.0)]);
        let sp = roots_closed(&cp).unwrap();
        for e in &sp.eigenvalues {
            assert!((e - z(2.0, 0.0)).norm() < 1e-4);
        }
        // biquadratic x^4 - 5x^2 + 4
        let cp = CharPoly::from_sigma(vec![ZERO, z(-5.0, 0.0), ZERO, z(4.0, 0.0)]);
        let sp = roots_closed(&cp).unwrap();
        let want = [z(-2.0, 0.0), z(-1.0, 0.0), z(1.0, 0.0), z(2.0, 0.0)];
        assert!(spectral_distance(&sp.eigenvalues, &want) < 1e-12);
        // x^3 - 1 (eta = 0)
        let cp = CharPoly::from_sigma(vec![ZERO, ZERO, ONE]);
        let sp = roots_closed(&cp).unwrap();
        for e in &sp.eigenvalues {
            assert!((e.norm() - 1.0).abs() < 1e-14);
        }
        // x^3 + 1: principal branch would hit C = 0
        let cp = CharPoly::from_sigma(vec![ZERO, ZERO, -ONE]);
        let sp = roots_closed(&cp).unwrap();
        for e in &sp.eigenvalues {
            assert!((e.powu(3) + ONE).norm() < 1e-13);
        }
        assert_eq!(roots_closed(&CharPoly::from_sigma(vec![ONE; 5])), Err(CharPolyError::NoClosedForm(5)));
    }

    #[test]
    fn deflation_returns_exact_zeros() {
        // x^2 (x^3 - 1e-8)
        let cp = CharPoly::from_sigma(vec![ZERO, ZERO, z(1e-8, 0.0), ZERO, ZERO]);
        let r = roots_deflated(&cp, 1.0).unwrap();
        assert_eq!(r.iter().filter(|x| x.norm() == 0.0).count(), 2);
        let cp = CharPoly::from_sigma(vec![ZERO; 4]);
        assert!(roots_deflated(&cp, 1.0).unwrap().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn matching_is_optimal() {
        let a = [z(0.0, 0.0), z(1.0, 0.0), z(2.0, 0.0)];
        let b = [z(2.1, 0.0), z(-0.1, 0.0), z(1.0, 0.05)];
        let m = min_cost_matching(&a, &b);
        assert_eq!(m.perm, vec![1, 2, 0]);
        assert!((m.max - 0.1).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn companion_shares_charpoly(seed in 0u64..10_000, n in 2usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random(n, &mut rng);
            let cp = CharPoly::from_matrix(&h);
            let back = CharPoly::from_matrix(&companion(&cp));
            for k in 1..=n {
                prop_assert!((back.sigma(k) - cp.sigma(k)).norm() <= 1e-9 * (1.0 + cp.sigma(k).norm()));
            }
        }

        #[test]
        fn newton_recursion_holds(seed in 0u64..10_000, n in 2usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random(n, &mut rng);
            let cp = CharPoly::from_matrix(&h);
            for k in 1..=n {
                let mut acc = cp.p(k) * k as f64 + cp.power_trace(k);
                for j in 1..k {
                    acc += cp.p(j) * cp.power_trace(k - j);
                }
                prop_assert!(acc.norm() <= 1e-9 * 10f64.powi(k as i32));
            }
        }

        #[test]
        fn shift_leaves_constraints_invariant(seed in 0u64..10_000, n in 2usize..=5, re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random(n, &mut rng);
            let a = constraint_vector(&h);
            let b = constraint_vector(&h.shift(z(re, im)));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).norm() <= 1e-9 * (1.0 + x.norm()));
            }
            prop_assert!((discriminant(&h).unwrap() - discriminant(&h.shift(z(re, im))).unwrap()).norm()
                <= 1e-8 * (1.0 + discriminant(&h).unwrap().norm()));
        }

        #[test]
        fn closed_and_numeric_roots_agree(seed in 0u64..100_000, n in 2usize..=4, mag in -2i32..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random(n, &mut rng).scale(z(10f64.powi(mag), 0.0));
            let closed = roots_closed(&CharPoly::from_matrix(&h)).unwrap();
            let num = roots_numeric(&h).unwrap();
            let scale = h.norm();
            prop_assert!(spectral_distance(&closed.eigenvalues, &num.eigenvalues) <= 1e-9 * scale);
        }
    }
}
