//! Low-energy dispersion near exceptional points: classification by which
//! invariants vanish along an approach path, and log-log fits of the band
//! splitting `|lambda_i(w) - lambda*| ~ w^p`.

use std::fmt;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charpoly::{constraints, min_cost_matching, roots_closed, roots_deflated, CharPoly, CharPolyError};
use crate::epfinder::{analyze_matrix, DegeneracyReport, EpError};
use crate::field::{FieldError, HamiltonianField};
use crate::matrix::{sort_complex, CMatrix, MatrixError};

const ZERO: C = C::new(0.0, 0.0);

/// A quantity vanishes identically when it stays below this times
/// `scale^degree` at every sample.
pub const VANISH_REL: f64 = 1e-12;
/// Minimum difference of decay exponents for "decays faster".
pub const RATE_MARGIN: f64 = 0.25;
/// Fits with a lower coefficient of determination are reported unreliable.
pub const MIN_R2: f64 = 0.98;
/// Bands whose splitting never exceeds this are flat.
pub const FLAT_SPLITTING: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum DispersionError {
    #[error("no exceptional point at k: principal cluster has m_a = {algebraic}, Jordan blocks {blocks:?}")]
    NotEp { algebraic: usize, blocks: Vec<usize> },
    #[error("classification covers EPs of 2 to 4 coalescing bands, got {0}")]
    Unsupported(usize),
    #[error("class {0} has no closed-form dispersion")]
    NoClosedForm(EpLabel),
    #[error("invalid approach direction: {0}")]
    Direction(String),
    #[error("invalid sampling: {0}")]
    Sampling(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    CharPoly(#[from] CharPolyError),
    #[error(transparent)]
    Ep(#[from] EpError),
}

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EpLabel {
    #[serde(rename = "EP2")]
    Ep2,
    #[serde(rename = "EP3-0")]
    Ep3_0,
    #[serde(rename = "EP3-I")]
    Ep3_I,
    #[serde(rename = "EP3-II")]
    Ep3_II,
    #[serde(rename = "EP3-III")]
    Ep3_III,
    #[serde(rename = "EP4-0")]
    Ep4_0,
    #[serde(rename = "EP4-I")]
    Ep4_I,
    #[serde(rename = "EP4-II")]
    Ep4_II,
    #[serde(rename = "EP4-III")]
    Ep4_III,
    #[serde(rename = "EP4-IV")]
    Ep4_IV,
}

impl EpLabel {
    pub const ALL: [EpLabel; 10] = [
        EpLabel::Ep2,
        EpLabel::Ep3_0,
        EpLabel::Ep3_I,
        EpLabel::Ep3_II,
        EpLabel::Ep3_III,
        EpLabel::Ep4_0,
        EpLabel::Ep4_I,
        EpLabel::Ep4_II,
        EpLabel::Ep4_III,
        EpLabel::Ep4_IV,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EpLabel::Ep2 => "EP2",
            EpLabel::Ep3_0 => "EP3-0",
            EpLabel::Ep3_I => "EP3-I",
            EpLabel::Ep3_II => "EP3-II",
            EpLabel::Ep3_III => "EP3-III",
            EpLabel::Ep4_0 => "EP4-0",
            EpLabel::Ep4_I => "EP4-I",
            EpLabel::Ep4_II => "EP4-II",
            EpLabel::Ep4_III => "EP4-III",
            EpLabel::Ep4_IV => "EP4-IV",
        }
    }

    /// Number of coalescing bands.
    pub fn order(self) -> usize {
        match self {
            EpLabel::Ep2 => 2,
            EpLabel::Ep3_0 | EpLabel::Ep3_I | EpLabel::Ep3_II | EpLabel::Ep3_III => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for EpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EpLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EpLabel::ALL.iter().copied().find(|l| l.as_str() == s).ok_or_else(|| format!("unknown EP class {s:?}"))
    }
}

/// Classifying evidence: quantities found vanishing, plus `Rate` when the
/// decay-rate comparison holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Det,
    TrH2,
    TrH3,
    ImEta,
    ImNu,
    Rate,
}

/// Sampling of the approach path and the tolerances used to locate the EP
/// cluster at `k*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub samples: usize,
    pub cluster_radius: f64,
    pub rank_tol: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig { omega_min: 1e-8, omega_max: 1e-2, samples: 25, cluster_radius: 1e-6, rank_tol: 1e-8 }
    }
}

impl DispersionConfig {
    /// Log-spaced `w` values with exact endpoints.
    pub fn omegas(&self) -> Result<Vec<f64>, DispersionError> {
        if !(self.omega_min > 0.0 && self.omega_max > self.omega_min && self.omega_max.is_finite()) {
            return Err(DispersionError::Sampling(format!(
                "need 0 < omega_min < omega_max, got [{}, {}]",
                self.omega_min, self.omega_max
            )));
        }
        if self.samples < 3 {
            return Err(DispersionError::Sampling(format!("need at least 3 samples, got {}", self.samples)));
        }
        let (a, b) = (self.omega_min.ln(), self.omega_max.ln());
        let last = self.samples - 1;
        Ok((0..self.samples)
            .map(|i| match i {
                0 => self.omega_min,
                i if i == last => self.omega_max,
                i => (a + (b - a) * i as f64 / last as f64).exp(),
            })
            .collect())
    }
}

/// Unit vector along the diagonal of momentum space (kx = ky = ...).
pub fn default_direction(arity: usize) -> Vec<f64> {
    vec![1.0 / (arity as f64).sqrt(); arity]
}

fn unit_direction(field: &dyn HamiltonianField, k: &[f64], direction: &[f64]) -> Result<Vec<f64>, DispersionError> {
    if k.len() != field.arity() || direction.len() != field.arity() {
        return Err(DispersionError::Direction(format!(
            "field takes {} momenta, got k of length {} and direction of length {}",
            field.arity(),
            k.len(),
            direction.len()
        )));
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(DispersionError::Direction("direction must be a nonzero finite vector".into()));
    }
    Ok(direction.iter().map(|x| x / norm).collect())
}

/// Traceless invariants of a matrix. `eta`, `nu`, `kappa` follow the
/// conventions of [`crate::charpoly::constraints`]; `kappa` is zero below
/// n = 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub n: usize,
    pub tr_h2: C,
    pub tr_h3: C,
    pub det: C,
    pub eta: C,
    pub nu: C,
    pub kappa: C,
}

impl Invariants {
    pub fn of(h: &CMatrix) -> Result<Invariants, DispersionError> {
        let n = h.dim();
        if !(2..=4).contains(&n) {
            return Err(DispersionError::Unsupported(n));
        }
        let ht = h.traceless();
        let cp = CharPoly::from_matrix(&ht);
        let cs = constraints(&ht)?;
        Ok(Invariants {
            n,
            tr_h2: cp.power_trace(2),
            tr_h3: if n >= 3 { cp.power_trace(3) } else { ZERO },
            det: cp.det(),
            eta: cs.eta,
            nu: cs.nu,
            kappa: cs.kappa.unwrap_or(ZERO),
        })
    }
}

/// One classifying quantity sampled along the path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityCheck {
    pub name: String,
    pub max_abs: f64,
    pub threshold: f64,
    pub vanishes: bool,
    /// Slope of `log|q|` against `log w` over the samples above threshold;
    /// absent when fewer than two samples are.
    pub decay_exponent: Option<f64>,
}

impl QuantityCheck {
    fn new(name: &str, values: &[f64], threshold: f64, omegas: &[f64]) -> QuantityCheck {
        let max_abs = values.iter().copied().fold(0.0, f64::max);
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            omegas.iter().zip(values).filter(|(_, &v)| v > threshold).map(|(w, v)| (w.ln(), v.ln())).unzip();
        QuantityCheck {
            name: name.to_string(),
            max_abs,
            threshold,
            vanishes: values.iter().all(|&v| v < threshold),
            decay_exponent: linear_fit(&xs, &ys).map(|f| f.0),
        }
    }

    /// Identically vanishing (or unfittable) quantities decay infinitely fast.
    fn rate(&self) -> f64 {
        if self.vanishes {
            f64::INFINITY
        } else {
            self.decay_exponent.unwrap_or(f64::INFINITY)
        }
    }
}

/// `a` decays to zero faster than `b` by more than [`RATE_MARGIN`].
fn faster(a: &QuantityCheck, b: &QuantityCheck) -> bool {
    let (ra, rb) = (a.rate(), b.rate());
    rb.is_finite() && ra - rb > RATE_MARGIN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpClass {
    pub k: Vec<f64>,
    pub direction: Vec<f64>,
    /// Number of coalescing bands (algebraic multiplicity).
    pub order: usize,
    pub jordan_blocks: Vec<usize>,
    pub eigenvalue: C,
    pub label: EpLabel,
    pub evidence: Vec<Quantity>,
    pub checks: Vec<QuantityCheck>,
    /// Largest norm of the effective traceless block along the path.
    pub scale: f64,
}

fn locate(field: &dyn HamiltonianField, k: &[f64], cfg: &DispersionConfig) -> Result<(CMatrix, DegeneracyReport), DispersionError> {
    let h = field.eval(k)?;
    let rep = analyze_matrix(&h, k, cfg.cluster_radius, cfg.rank_tol)?;
    if !rep.is_ep {
        return Err(DispersionError::NotEp { algebraic: rep.algebraic_mult, blocks: rep.jordan_blocks });
    }
    Ok((h, rep))
}

/// Roots of `det(H - lambda* - z)` near zero: the `m` closest are the bands
/// that coalesce at the EP. Rounding-level trailing coefficients are deflated
/// so that flat bands come out exactly at zero.
fn cluster_roots(h: &CMatrix, lambda: C, m: usize) -> Result<Vec<C>, DispersionError> {
    let hs = h.shift(lambda);
    let mut r = roots_deflated(&CharPoly::from_matrix(&hs), hs.norm())?;
    r.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
    r.truncate(m);
    Ok(r)
}

/// Traceless `m x m` matrix carrying the cluster's invariants: `H` itself
/// when the whole spectrum coalesces, otherwise the diagonal of cluster
/// roots about their mean.
fn effective_block(h: &CMatrix, lambda: C, m: usize) -> Result<CMatrix, DispersionError> {
    if m == h.dim() {
        return Ok(h.traceless());
    }
    let r = cluster_roots(h, lambda, m)?;
    let mean = r.iter().sum::<C>() / m as f64;
    Ok(CMatrix::from_diag(&r.iter().map(|z| z - mean).collect::<Vec<_>>()))
}

fn path_matrices(
    field: &dyn HamiltonianField,
    k: &[f64],
    dir: &[f64],
    omegas: &[f64],
) -> Result<Vec<CMatrix>, DispersionError> {
    omegas
        .par_iter()
        .map(|w| {
            let kw: Vec<f64> = k.iter().zip(dir).map(|(a, d)| a + w * d).collect();
            Ok(field.eval(&kw)?)
        })
        .collect()
}

/// Dispersion class of the EP at `k` from the invariants of the coalescing
/// block sampled along `k + w * direction`.
pub fn classify(
    field: &dyn HamiltonianField,
    k: &[f64],
    direction: &[f64],
    cfg: &DispersionConfig,
) -> Result<EpClass, DispersionError> {
    let dir = unit_direction(field, k, direction)?;
    let (h0, rep) = locate(field, k, cfg)?;
    let m = rep.algebraic_mult;
    let mut class = EpClass {
        k: k.to_vec(),
        direction: dir.clone(),
        order: m,
        jordan_blocks: rep.jordan_blocks.clone(),
        eigenvalue: rep.eigenvalue,
        label: EpLabel::Ep2,
        evidence: Vec::new(),
        checks: Vec::new(),
        scale: 0.0,
    };
    match m {
        2 => return Ok(class),
        3 | 4 => {}
        _ => return Err(DispersionError::Unsupported(m)),
    }
    let omegas = cfg.omegas()?;
    let mats = path_matrices(field, k, &dir, &omegas)?;
    let blocks: Vec<CMatrix> = mats.iter().map(|h| effective_block(h, rep.eigenvalue, m)).collect::<Result<_, _>>()?;
    let scale = blocks
        .iter()
        .map(|b| b.norm())
        .fold(effective_block(&h0, rep.eigenvalue, m)?.norm(), f64::max)
        .max(f64::MIN_POSITIVE);
    class.scale = scale;
    let inv: Vec<Invariants> = blocks.iter().map(Invariants::of).collect::<Result<_, _>>()?;
    let thr = |deg: i32| VANISH_REL * scale.powi(deg);
    let check = |name: &str, f: &dyn Fn(&Invariants) -> f64, deg: i32| {
        let v: Vec<f64> = inv.iter().map(f).collect();
        QuantityCheck::new(name, &v, thr(deg), &omegas)
    };

    let det = check("det", &|i| i.det.norm(), m as i32);
    let t2 = check("tr_h2", &|i| i.tr_h2.norm(), 2);
    let mut evidence = Vec::new();
    if det.vanishes {
        evidence.push(Quantity::Det);
    }
    if t2.vanishes {
        evidence.push(Quantity::TrH2);
    }
    if m == 3 {
        let im_eta = check("im_eta", &|i| i.eta.im.abs(), 2);
        let im_nu = check("im_nu", &|i| i.nu.im.abs(), 3);
        let re_eta = check("re_eta", &|i| i.eta.re.abs(), 2);
        let re_nu = check("re_nu", &|i| i.nu.re.abs(), 3);
        if im_eta.vanishes {
            evidence.push(Quantity::ImEta);
        }
        if im_nu.vanishes {
            evidence.push(Quantity::ImNu);
        }
        let rate = faster(&re_eta, &re_nu);
        if rate {
            evidence.push(Quantity::Rate);
        }
        class.label = if det.vanishes {
            EpLabel::Ep3_I
        } else if t2.vanishes {
            EpLabel::Ep3_II
        } else if im_eta.vanishes && im_nu.vanishes && rate {
            EpLabel::Ep3_III
        } else {
            EpLabel::Ep3_0
        };
        class.checks = vec![det, t2, im_eta, im_nu, re_eta, re_nu];
    } else {
        let t3 = check("tr_h3", &|i| i.tr_h3.norm(), 3);
        let eta = check("eta", &|i| i.eta.norm(), 4);
        let nu = check("nu", &|i| i.nu.norm(), 6);
        let kappa = check("kappa", &|i| i.kappa.norm(), 3);
        if t3.vanishes {
            evidence.push(Quantity::TrH3);
        }
        let rate = faster(&eta, &nu) && faster(&kappa, &nu);
        if rate {
            evidence.push(Quantity::Rate);
        }
        class.label = if t2.vanishes && t3.vanishes {
            EpLabel::Ep4_I
        } else if det.vanishes && t2.vanishes {
            EpLabel::Ep4_II
        } else if det.vanishes && t3.vanishes {
            EpLabel::Ep4_III
        } else if rate {
            EpLabel::Ep4_IV
        } else {
            EpLabel::Ep4_0
        };
        class.checks = vec![det, t2, t3, eta, nu, kappa];
    }
    evidence.sort();
    class.evidence = evidence;
    Ok(class)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFit {
    /// Fitted `p` in `|lambda_i - lambda*| ~ w^p`; absent for flat bands and
    /// unreliable fits.
    pub exponent: Option<f64>,
    pub r2: Option<f64>,
    pub flat: bool,
    pub reliable: bool,
    pub max_splitting: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub k: Vec<f64>,
    pub direction: Vec<f64>,
    pub eigenvalue: C,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omegas: Vec<f64>,
    pub bands: Vec<BandFit>,
    pub flat_bands: usize,
    /// Smallest exponent among the dispersive bands.
    pub leading_exponent: Option<f64>,
    /// False when any dispersive band has `r2 < MIN_R2`.
    pub reliable: bool,
    /// `splitting[s][i]`: band `i` at sample `s`, relative to the EP.
    pub splitting: Vec<Vec<C>>,
}

/// Per-band scaling exponents of the coalescing bands along
/// `k + w * direction`. Bands are tracked across samples by min-cost
/// matching, starting from the smallest `w`.
pub fn scaling_exponents(
    field: &dyn HamiltonianField,
    k: &[f64],
    direction: &[f64],
    cfg: &DispersionConfig,
) -> Result<ScalingFit, DispersionError> {
    let dir = unit_direction(field, k, direction)?;
    let (_, rep) = locate(field, k, cfg)?;
    let m = rep.algebraic_mult;
    let lambda = rep.eigenvalue;
    let omegas = cfg.omegas()?;
    let mats = path_matrices(field, k, &dir, &omegas)?;
    let raw: Vec<Vec<C>> = mats.par_iter().map(|h| cluster_roots(h, lambda, m)).collect::<Result<_, _>>()?;

    let mut tracked: Vec<Vec<C>> = Vec::with_capacity(raw.len());
    for mut cur in raw {
        match tracked.last() {
            None => sort_complex(&mut cur),
            Some(prev) => {
                let perm = min_cost_matching(prev, &cur).perm;
                cur = perm.iter().map(|&j| cur[j]).collect();
            }
        }
        tracked.push(cur);
    }

    let xs: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
    let mut bands = Vec::with_capacity(m);
    for i in 0..m {
        let mags: Vec<f64> = tracked.iter().map(|s| s[i].norm()).collect();
        let max_splitting = mags.iter().copied().fold(0.0, f64::max);
        if max_splitting < FLAT_SPLITTING {
            bands.push(BandFit { exponent: None, r2: None, flat: true, reliable: true, max_splitting });
            continue;
        }
        let (bx, by): (Vec<f64>, Vec<f64>) =
            xs.iter().zip(&mags).filter(|(_, &v)| v > 0.0).map(|(x, v)| (*x, v.ln())).unzip();
        let fit = linear_fit(&bx, &by);
        let reliable = fit.is_some_and(|f| f.1 >= MIN_R2);
        bands.push(BandFit {
            exponent: fit.filter(|_| reliable).map(|f| f.0),
            r2: fit.map(|f| f.1),
            flat: false,
            reliable,
            max_splitting,
        });
    }
    let flat_bands = bands.iter().filter(|b| b.flat).count();
    let leading_exponent = bands.iter().filter_map(|b| b.exponent).reduce(f64::min);
    let reliable = bands.iter().all(|b| b.reliable);
    Ok(ScalingFit {
        k: k.to_vec(),
        direction: dir,
        eigenvalue: lambda,
        omega_min: cfg.omega_min,
        omega_max: cfg.omega_max,
        omegas,
        bands,
        flat_bands,
        leading_exponent,
        reliable,
        splitting: tracked,
    })
}

/// Least-squares line through `(x, y)`: `(slope, r2)`.
fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - ssr / syy).clamp(0.0, 1.0) };
    Some((slope, r2))
}

/// All `p`-th roots of `w`, starting from the principal one.
fn nth_roots(w: C, p: usize) -> Vec<C> {
    let (r, th) = w.to_polar();
    (0..p)
        .map(|k| C::from_polar(r.powf(1.0 / p as f64), (th + 2.0 * std::f64::consts::PI * k as f64) / p as f64))
        .collect()
}

/// Leading-order bands of a traceless EP block of the given class, as a
/// multiset sorted by (re, im). The bands solve the traceless characteristic
/// polynomial with the class's vanishing invariants set to zero. Classes
/// EP3-III and EP4-IV have no simplification beyond the general cubic and
/// quartic, so their closed-form roots are returned.
pub fn predicted_dispersion(label: EpLabel, inv: &Invariants) -> Result<Vec<C>, DispersionError> {
    let half_t2 = inv.tr_h2 / 2.0;
    let mut out = match label {
        EpLabel::Ep3_0 | EpLabel::Ep4_0 => return Err(DispersionError::NoClosedForm(label)),
        EpLabel::Ep2 => {
            let s = half_t2.sqrt();
            vec![s, -s]
        }
        EpLabel::Ep3_I => {
            let s = half_t2.sqrt();
            vec![ZERO, s, -s]
        }
        EpLabel::Ep3_II => nth_roots(inv.det, 3),
        EpLabel::Ep3_III => roots_closed(&CharPoly::from_sigma(vec![ZERO, -half_t2, inv.det]))?.eigenvalues,
        // lambda^4 + det = 0 once the other invariants vanish
        EpLabel::Ep4_I => nth_roots(-inv.det, 4),
        EpLabel::Ep4_II => {
            let mut v = vec![ZERO];
            v.extend(nth_roots(inv.tr_h3 / 3.0, 3));
            v
        }
        EpLabel::Ep4_III => {
            let s = half_t2.sqrt();
            vec![ZERO, ZERO, s, -s]
        }
        EpLabel::Ep4_IV => {
            roots_closed(&CharPoly::from_sigma(vec![ZERO, -half_t2, inv.tr_h3 / 3.0, inv.det]))?.eigenvalues
        }
    };
    sort_complex(&mut out);
    Ok(out)
}
