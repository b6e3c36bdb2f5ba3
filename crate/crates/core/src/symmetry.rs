//! The twelve non-Hermitian symmetries: defining relations, projectors onto
//! the symmetric subspace, spectral relations, constraint-count prediction
//! and measurement of which traces and coefficients survive.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{self, BasisFamily};
use crate::charpoly::min_cost_matching;
use crate::field::{Field, FieldError, HamiltonianField, TrigField};
use crate::matrix::CMatrix;

const GEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SymmetryKind {
    #[serde(rename = "PHS")]
    Phs,
    #[serde(rename = "PHSdag")]
    PhsDag,
    #[serde(rename = "TRS")]
    Trs,
    #[serde(rename = "TRSdag")]
    TrsDag,
    #[serde(rename = "CS")]
    Cs,
    #[serde(rename = "psCS")]
    PsCs,
    #[serde(rename = "SLS")]
    Sls,
    #[serde(rename = "psH")]
    PsH,
    #[serde(rename = "I")]
    Inversion,
    #[serde(rename = "P")]
    Parity,
    #[serde(rename = "PT")]
    Pt,
    #[serde(rename = "CP")]
    Cp,
}

use SymmetryKind::*;

impl SymmetryKind {
    pub const ALL: [SymmetryKind; 12] = [Phs, PhsDag, Trs, TrsDag, Cs, PsCs, Sls, PsH, Inversion, Parity, Pt, Cp];

    pub fn name(self) -> &'static str {
        match self {
            Phs => "PHS",
            PhsDag => "PHSdag",
            Trs => "TRS",
            TrsDag => "TRSdag",
            Cs => "CS",
            PsCs => "psCS",
            Sls => "SLS",
            PsH => "psH",
            Inversion => "I",
            Parity => "P",
            Pt => "PT",
            Cp => "CP",
        }
    }

    /// Relations connecting `k` with `-k`.
    pub fn is_nonlocal(self) -> bool {
        matches!(self, Phs | PhsDag | Trs | TrsDag | Inversion | Parity)
    }

    /// Kinds whose generator obeys `A A* = zeta 1` rather than `A^2 ~ 1`.
    pub fn is_antiunitary(self) -> bool {
        matches!(self, Phs | PhsDag | Trs | TrsDag | Pt | Cp)
    }

    pub fn supports(self, n: usize) -> bool {
        !(self == Cs && n % 2 == 1)
    }

    /// Default generator, `zeta` selecting the `A A* = -1` variant of the
    /// antiunitary kinds where one is tabulated.
    pub fn default_generator(self, n: usize, zeta: i8) -> Result<CMatrix, SymmetryError> {
        if !self.supports(n) {
            return Err(SymmetryError::Unsupported { kind: self, n });
        }
        let none = || SymmetryError::NoDefault { kind: self, n, zeta };
        let i = Complex64::new(0.0, 1.0);
        let d = |v: &[f64]| CMatrix::from_diag(&v.iter().map(|x| Complex64::new(*x, 0.0)).collect::<Vec<_>>());
        let alt = |n: usize| d(&(0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect::<Vec<_>>());
        let flip = matches!(self, Phs | PhsDag | Trs | TrsDag);
        if zeta == -1 && !flip {
            return Err(none());
        }
        let g = match (n, self) {
            (2, Phs | PhsDag | Trs | TrsDag) => {
                if zeta == -1 {
                    basis::sigma_y().scale(i)
                } else {
                    CMatrix::identity(2)
                }
            }
            (2, Cs | PsCs | Sls | Inversion) => basis::sigma_z(),
            (2, PsH | Parity | Pt | Cp) => basis::sigma_x(),
            (3, Phs | PhsDag | Trs | TrsDag) if zeta == 1 => CMatrix::identity(3),
            (3, PsCs | Sls | Parity | Cp) => d(&[1.0, -1.0, 1.0]),
            (3, Pt) => CMatrix::from_diag(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), i]),
            (3, Inversion) => CMatrix::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]])?,
            (3, PsH) => CMatrix::from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]])?,
            (4, Phs | PhsDag | Trs | TrsDag) => {
                if zeta == -1 {
                    let l1 = BasisFamily::GellMann4.matrix(1)?;
                    let l6 = BasisFamily::GellMann4.matrix(6)?;
                    (&l1 + &l6).scale(-i)
                } else {
                    BasisFamily::Gamma.matrix(1)?
                }
            }
            (4, Cs | PsCs) => BasisFamily::Gamma.matrix(5)?,
            (4, Sls) => BasisFamily::Gamma.matrix(5)?.scale(i),
            (4, Inversion | Parity) => alt(4),
            (4, PsH) => BasisFamily::Gamma.matrix(1)?,
            (4, Pt) => &alt(4) * &BasisFamily::Gamma.matrix(1)?,
            (4, Cp) => &BasisFamily::GellMann4.matrix(8)? - &BasisFamily::GellMann4.matrix(11)?,
            (n, PsCs | Sls) if n % 2 == 1 && n <= 8 => alt(n),
            _ => return Err(none()),
        };
        Ok(g)
    }

    /// Bernard-LeClair image of the kind, if it has one.
    pub fn blc_alias(self) -> Option<BlcLabel> {
        let (symbol, epsilon) = match self {
            Phs => ('C', -1),
            TrsDag => ('C', 1),
            Cs => ('Q', -1),
            PsH => ('Q', 1),
            Trs => ('K', 1),
            PhsDag => ('K', -1),
            Sls => ('P', -1),
            _ => return None,
        };
        Some(BlcLabel { symbol, epsilon })
    }
}

impl fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SymmetryKind {
    type Err = SymmetryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let kind = match key.as_str() {
            "phs" => Phs,
            "phsdag" | "phsdagger" => PhsDag,
            "trs" => Trs,
            "trsdag" | "trsdagger" => TrsDag,
            "cs" | "chiral" => Cs,
            "pscs" => PsCs,
            "sls" => Sls,
            "psh" => PsH,
            "i" | "inversion" => Inversion,
            "p" | "parity" => Parity,
            "pt" => Pt,
            "cp" => Cp,
            _ => return Err(SymmetryError::UnknownKind(s.to_string())),
        };
        Ok(kind)
    }
}

/// `Q`, `C`, `K` or `P` with its sign `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlcLabel {
    pub symbol: char,
    pub epsilon: i8,
}

impl fmt::Display for BlcLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbol == 'P' {
            write!(f, "P")
        } else {
            write!(f, "{}(eps={:+})", self.symbol, self.epsilon)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("unknown symmetry kind `{0}`")]
    UnknownKind(String),
    #[error("{kind} is not defined for n = {n}")]
    Unsupported { kind: SymmetryKind, n: usize },
    #[error("no default generator for {kind} at n = {n} (zeta = {zeta})")]
    NoDefault { kind: SymmetryKind, n: usize, zeta: i8 },
    #[error("generator is {found}x{found}, field is {expected}x{expected}")]
    Dimension { expected: usize, found: usize },
    #[error("generator for {kind} is not unitary (residual {residual:.3e})")]
    NotUnitary { kind: SymmetryKind, residual: f64 },
    #[error("generator for {kind} violates {condition} (residual {residual:.3e})")]
    BadGenerator { kind: SymmetryKind, condition: &'static str, residual: f64 },
    #[error("declared zeta = {declared} but A A* = {found} 1")]
    Zeta { declared: i8, found: i8 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Matrix(#[from] crate::matrix::MatrixError),
    #[error(transparent)]
    Basis(#[from] crate::basis::BasisError),
}

/// A symmetry kind with a validated generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryOperator {
    pub kind: SymmetryKind,
    pub generator: CMatrix,
    /// `A A* = zeta 1` for antiunitary kinds.
    pub zeta: Option<i8>,
    #[serde(skip)]
    inverse: CMatrix,
}

impl SymmetryOperator {
    /// Validates the generator: unitarity, then `A^2 = c 1` with `|c| = 1`
    /// for unitary kinds or `A A* = +-1` for antiunitary ones.
    pub fn new(kind: SymmetryKind, generator: CMatrix) -> Result<SymmetryOperator, SymmetryError> {
        let n = generator.dim();
        if !kind.supports(n) {
            return Err(SymmetryError::Unsupported { kind, n });
        }
        let id = CMatrix::identity(n);
        let unit = (&generator * &generator.adjoint()).max_diff(&id);
        if unit > GEN_TOL {
            return Err(SymmetryError::NotUnitary { kind, residual: unit });
        }
        let zeta = if kind.is_antiunitary() {
            let aa = &generator * &generator.conj();
            let z = if aa[(0, 0)].re >= 0.0 { 1 } else { -1 };
            let r = aa.max_diff(&id.scale(Complex64::new(z as f64, 0.0)));
            if r > GEN_TOL {
                return Err(SymmetryError::BadGenerator { kind, condition: "A A* = +-1", residual: r });
            }
            Some(z)
        } else {
            let a2 = &generator * &generator;
            let c = a2[(0, 0)];
            let r = a2.max_diff(&id.scale(c)).max((c.norm() - 1.0).abs());
            if r > GEN_TOL {
                return Err(SymmetryError::BadGenerator { kind, condition: "A^2 = c 1, |c| = 1", residual: r });
            }
            None
        };
        let inverse = generator.adjoint();
        Ok(SymmetryOperator { kind, generator, zeta, inverse })
    }

    /// Like [`SymmetryOperator::new`] but also checks a declared `zeta`.
    pub fn with_zeta(kind: SymmetryKind, generator: CMatrix, zeta: i8) -> Result<SymmetryOperator, SymmetryError> {
        let op = Self::new(kind, generator)?;
        if let Some(found) = op.zeta {
            if found != zeta {
                return Err(SymmetryError::Zeta { declared: zeta, found });
            }
        }
        Ok(op)
    }

    pub fn default_for(kind: SymmetryKind, n: usize) -> Result<SymmetryOperator, SymmetryError> {
        Self::new(kind, kind.default_generator(n, 1)?)
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn momentum_flips(&self) -> bool {
        self.kind.is_nonlocal()
    }

    /// The involution `T` with `H = T[H]` for symmetric fields. `hk` and
    /// `hmk` are `H(k)` and `H(-k)`.
    pub fn transform(&self, hk: &CMatrix, hmk: &CMatrix) -> CMatrix {
        let a = &self.generator;
        let ai = &self.inverse;
        let neg = |m: CMatrix| -&m;
        match self.kind {
            Phs => neg(&(a * &hmk.transpose()) * ai),
            PhsDag => neg(&(a * &hmk.conj()) * ai),
            Trs => &(a * &hmk.conj()) * ai,
            TrsDag => &(a * &hmk.transpose()) * ai,
            Cs => neg(&(a * &hk.adjoint()) * ai),
            PsCs => neg(&(ai * &hk.transpose()) * a),
            Sls => neg(&(a * hk) * ai),
            PsH => &(a * &hk.adjoint()) * ai,
            Inversion => &(ai * &hmk.adjoint()) * a,
            Parity => &(ai * hmk) * a,
            Pt => &(a * &hk.conj()) * ai,
            Cp => neg(&(a * &hk.conj()) * ai),
        }
    }

    /// Max-entry residual of the defining relation, written exactly as
    /// tabulated (left side minus right side).
    pub fn relation_residual(&self, hk: &CMatrix, hmk: &CMatrix) -> f64 {
        let a = &self.generator;
        let ai = &self.inverse;
        let (lhs, rhs) = match self.kind {
            Phs => (hmk.clone(), -&(&(a * &hk.transpose()) * ai)),
            PhsDag => (hmk.clone(), -&(&(a * &hk.conj()) * ai)),
            Trs => (hmk.clone(), &(a * &hk.conj()) * ai),
            TrsDag => (hmk.clone(), &(a * &hk.transpose()) * ai),
            Cs => (hk.clone(), -&(&(a * &hk.adjoint()) * ai)),
            PsCs => (hk.transpose(), -&(&(a * hk) * ai)),
            Sls => (hk.clone(), -&(&(a * hk) * ai)),
            PsH => (hk.clone(), &(a * &hk.adjoint()) * ai),
            Inversion => (hmk.adjoint(), &(a * hk) * ai),
            Parity => (hmk.clone(), &(a * hk) * ai),
            Pt => (hk.clone(), &(a * &hk.conj()) * ai),
            Cp => (hk.clone(), -&(&(a * &hk.conj()) * ai)),
        };
        lhs.max_diff(&rhs)
    }

    /// Spectrum `{f(e)}` that `{e(k)}` must equal; `mk` is the spectrum at
    /// `-k` (ignored for local kinds).
    pub fn spectral_image(&self, k: &[Complex64], mk: &[Complex64]) -> Vec<Complex64> {
        spectral_image(self.kind, k, mk)
    }
}

fn neg_k(k: &[f64]) -> Vec<f64> {
    k.iter().map(|x| -x).collect()
}

/// Max residual of the defining relation over the sampled momenta.
pub fn check_symmetry(field: &dyn HamiltonianField, op: &SymmetryOperator, samples: &[Vec<f64>]) -> Result<f64, SymmetryError> {
    if op.dim() != field.dim() {
        return Err(SymmetryError::Dimension { expected: field.dim(), found: op.dim() });
    }
    let res: Result<Vec<f64>, SymmetryError> = samples
        .par_iter()
        .map(|k| {
            let hk = field.eval(k)?;
            let hmk = field.eval(&neg_k(k))?;
            Ok(op.relation_residual(&hk, &hmk))
        })
        .collect();
    Ok(res?.into_iter().fold(0.0, f64::max))
}

/// `(H + T[H]) / 2` as a field.
pub struct SymmetrizedField {
    inner: Field,
    op: SymmetryOperator,
}

impl HamiltonianField for SymmetrizedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        let hk = self.inner.eval(k)?;
        let hmk = if self.op.momentum_flips() { self.inner.eval(&neg_k(k))? } else { hk.clone() };
        let t = self.op.transform(&hk, &hmk);
        Ok((&hk + &t).scale(Complex64::new(0.5, 0.0)))
    }
}

pub fn symmetrize(field: Field, op: &SymmetryOperator) -> Result<Field, SymmetryError> {
    if op.dim() != field.dim() {
        return Err(SymmetryError::Dimension { expected: field.dim(), found: op.dim() });
    }
    Ok(Arc::new(SymmetrizedField { inner: field, op: op.clone() }))
}

/// Apply projectors in the given order.
pub fn symmetrize_all(mut field: Field, ops: &[SymmetryOperator]) -> Result<Field, SymmetryError> {
    for op in ops {
        field = symmetrize(field, op)?;
    }
    Ok(field)
}

pub fn spectral_image(kind: SymmetryKind, k: &[Complex64], mk: &[Complex64]) -> Vec<Complex64> {
    let src = if kind.is_nonlocal() { mk } else { k };
    src.iter()
        .map(|e| match kind {
            Phs | PsCs | Sls => -e,
            PhsDag | Cs | Cp => -e.conj(),
            Trs | PsH | Inversion | Pt => e.conj(),
            TrsDag | Parity => *e,
        })
        .collect()
}

/// Matching distance between `{e(k)}` and the image the kind demands.
pub fn spectral_relation(spectrum_k: &[Complex64], spectrum_mk: &[Complex64], kind: Option<SymmetryKind>) -> f64 {
    let image = match kind {
        Some(kind) => spectral_image(kind, spectrum_k, spectrum_mk),
        None => spectrum_mk.to_vec(),
    };
    min_cost_matching(spectrum_k, &image).max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quantity {
    /// `tr H^k`
    Trace(u32),
    Det,
}

impl Quantity {
    pub fn degree(self, n: usize) -> i32 {
        match self {
            Quantity::Trace(k) => k as i32,
            Quantity::Det => n as i32,
        }
    }

    pub fn eval(self, h: &CMatrix) -> Complex64 {
        match self {
            Quantity::Trace(k) => h.pow(k).trace(),
            Quantity::Det => h.det(),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Trace(1) => write!(f, "tr H"),
            Quantity::Trace(k) => write!(f, "tr H^{k}"),
            Quantity::Det => write!(f, "det H"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    pub fn of(self, z: Complex64) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }
}

/// One real-valued trace or determinant part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RealQuantity {
    pub quantity: Quantity,
    pub part: Part,
}

impl fmt::Display for RealQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}]", self.part, self.quantity)
    }
}

/// All of `Re/Im tr H^k` (k = 1..n) and `Re/Im det H`.
pub fn all_quantities(n: usize) -> Vec<RealQuantity> {
    let mut out = Vec::new();
    for q in (1..=n as u32).map(Quantity::Trace).chain(std::iter::once(Quantity::Det)) {
        for part in [Part::Re, Part::Im] {
            out.push(RealQuantity { quantity: q, part });
        }
    }
    out
}

/// Parts of the traces and determinant forced to zero by the kind. Nonlocal
/// kinds force nothing.
pub fn predicted_vanishing(kind: SymmetryKind, n: usize) -> Result<BTreeSet<RealQuantity>, SymmetryError> {
    if !kind.supports(n) {
        return Err(SymmetryError::Unsupported { kind, n });
    }
    let rq = |quantity, part| RealQuantity { quantity, part };
    let mut out = BTreeSet::new();
    for k in 1..=n as u32 {
        let t = Quantity::Trace(k);
        match kind {
            PsCs | Sls if k % 2 == 1 => {
                out.insert(rq(t, Part::Re));
                out.insert(rq(t, Part::Im));
            }
            PsH | Pt => {
                out.insert(rq(t, Part::Im));
            }
            Cs | Cp => {
                out.insert(rq(t, if k % 2 == 0 { Part::Im } else { Part::Re }));
            }
            _ => {}
        }
    }
    let d = Quantity::Det;
    match kind {
        PsCs | Sls if n % 2 == 1 => {
            out.insert(rq(d, Part::Re));
            out.insert(rq(d, Part::Im));
        }
        PsH | Pt => {
            out.insert(rq(d, Part::Im));
        }
        Cs | Cp => {
            out.insert(rq(d, if n % 2 == 0 { Part::Im } else { Part::Re }));
        }
        _ => {}
    }
    Ok(out)
}

/// The real EPn constraints left once the kinds' vanishing parts are
/// removed from `Re/Im` of `tr H~^2 .. tr H~^(n-1), det H~`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintPrediction {
    pub count: usize,
    pub constraints: Vec<RealQuantity>,
}

pub fn predicted_constraints(kinds: &[SymmetryKind], n: usize) -> Result<ConstraintPrediction, SymmetryError> {
    let mut forbidden = BTreeSet::new();
    for &k in kinds {
        forbidden.extend(predicted_vanishing(k, n)?);
    }
    let mut constraints = Vec::new();
    for q in (2..n as u32).map(Quantity::Trace).chain(std::iter::once(Quantity::Det)) {
        for part in [Part::Re, Part::Im] {
            let r = RealQuantity { quantity: q, part };
            if !forbidden.contains(&r) {
                constraints.push(r);
            }
        }
    }
    Ok(ConstraintPrediction { count: constraints.len(), constraints })
}

/// Per-quantity statistics of `|part| / ||H||^deg` over the sampled draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityStat {
    pub quantity: RealQuantity,
    pub max_rel: f64,
    pub median_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingPattern {
    pub stats: Vec<QuantityStat>,
}

impl VanishingPattern {
    /// Quantities below `tol` relative in every sample.
    pub fn vanishing(&self, tol: f64) -> BTreeSet<RealQuantity> {
        self.stats.iter().filter(|s| s.max_rel < tol).map(|s| s.quantity).collect()
    }

    pub fn stat(&self, q: RealQuantity) -> Option<&QuantityStat> {
        self.stats.iter().find(|s| s.quantity == q)
    }
}

fn random_momentum(arity: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // stay clear of the time-reversal invariant momenta 0 and pi
    (0..arity)
        .map(|_| {
            let x: f64 = rng.gen_range(0.2..2.9);
            if rng.gen_bool(0.5) {
                x
            } else {
                -x
            }
        })
        .collect()
}

/// Evaluate every trace/determinant part on each field at `samples`
/// random momenta.
pub fn observe_vanishing(fields: &[Field], samples: usize, seed: u64) -> Result<VanishingPattern, SymmetryError> {
    let n = fields.first().map(|f| f.dim()).unwrap_or(2);
    let quantities = all_quantities(n);
    let per_field: Result<Vec<Vec<Vec<f64>>>, SymmetryError> = fields
        .par_iter()
        .enumerate()
        .map(|(idx, f)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
            let mut rows = Vec::with_capacity(samples);
            for _ in 0..samples {
                let k = random_momentum(f.arity(), &mut rng);
                let h = f.eval(&k)?;
                let s = h.norm().max(f64::MIN_POSITIVE);
                rows.push(quantities.iter().map(|q| q.part.of(q.quantity.eval(&h)).abs() / s.powi(q.quantity.degree(n))).collect());
            }
            Ok(rows)
        })
        .collect();
    let rows: Vec<Vec<f64>> = per_field?.into_iter().flatten().collect();
    let stats = quantities
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            col.sort_by(f64::total_cmp);
            let max_rel = col.last().copied().unwrap_or(0.0);
            let median_rel = if col.is_empty() { 0.0 } else { col[col.len() / 2] };
            QuantityStat { quantity: *q, max_rel, median_rel }
        })
        .collect();
    Ok(VanishingPattern { stats })
}

/// Random trigonometric fields projected onto the symmetric subspace.
pub fn symmetrized_draws(n: usize, ops: &[SymmetryOperator], draws: usize, seed: u64) -> Result<Vec<Field>, SymmetryError> {
    (0..draws)
        .map(|d| {
            let base: Field = Arc::new(TrigField::random(n, 1, seed.wrapping_mul(7919).wrapping_add(d as u64)));
            symmetrize_all(base, ops)
        })
        .collect()
}

/// Measured vanishing pattern for the kinds' default generators.
pub fn vanishing_pattern(ops: &[SymmetryOperator], n: usize, trials: usize, seed: u64) -> Result<VanishingPattern, SymmetryError> {
    let fields = symmetrized_draws(n, ops, trials, seed)?;
    observe_vanishing(&fields, 1, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

/// One real coefficient slot `d_{a,R/I,s/a}`; `component` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Slot {
    pub component: usize,
    pub part: Part,
    pub parity: Parity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSet {
    pub family: BasisFamily,
    pub slots: BTreeSet<Slot>,
    /// Whether momentum parity is meaningful (some kind is nonlocal).
    pub with_parity: bool,
}

impl ParameterSet {
    /// Number of real parameters: distinct `(component, R/I)` pairs.
    pub fn count(&self) -> usize {
        self.slots.iter().map(|s| (s.component, s.part)).collect::<BTreeSet<_>>().len()
    }

    /// Labels such as `dxRa`, `d4I`. A component surviving in both parities
    /// is written without a parity suffix.
    pub fn labels(&self) -> Vec<String> {
        let mut grouped: BTreeMap<(usize, Part), Vec<Parity>> = BTreeMap::new();
        for s in &self.slots {
            grouped.entry((s.component, s.part)).or_default().push(s.parity);
        }
        grouped
            .into_iter()
            .map(|((c, part), parities)| {
                let p = match (self.with_parity, parities.as_slice()) {
                    (true, [Parity::Symmetric]) => "s",
                    (true, [Parity::Antisymmetric]) => "a",
                    _ => "",
                };
                let ri = if part == Part::Re { "R" } else { "I" };
                format!("d{}{}{}", self.family.label(c), ri, p)
            })
            .collect()
    }
}

/// Coefficient slots that are not identically zero over `draws` random
/// symmetrized fields and `k_samples` momenta each. Parity parts come from
/// `(d(k) +- d(-k)) / 2`.
pub fn surviving_parameters(
    ops: &[SymmetryOperator],
    n: usize,
    draws: usize,
    k_samples: usize,
    seed: u64,
) -> Result<ParameterSet, SymmetryError> {
    let family = BasisFamily::for_dim(n).ok_or(SymmetryError::Unsupported { kind: ops.first().map_or(Sls, |o| o.kind), n })?;
    let fields = symmetrized_draws(n, ops, draws, seed)?;
    let len = family.len();
    let maxima: Result<Vec<Vec<f64>>, SymmetryError> = fields
        .par_iter()
        .enumerate()
        .map(|(idx, f)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9e37_79b9));
            let mut m = vec![0.0; 4 * len];
            for _ in 0..k_samples {
                let k = random_momentum(f.arity(), &mut rng);
                let hk = f.eval(&k)?;
                let hmk = f.eval(&neg_k(&k))?;
                let scale = hk.max_abs().max(hmk.max_abs()).max(f64::MIN_POSITIVE);
                let ck = basis::decompose(&hk, family)?;
                let cm = basis::decompose(&hmk, family)?;
                for a in 0..len {
                    let s = (ck.d[a] + cm.d[a]) / 2.0;
                    let anti = (ck.d[a] - cm.d[a]) / 2.0;
                    let vals = [s.re, s.im, anti.re, anti.im];
                    for (j, v) in vals.iter().enumerate() {
                        m[4 * a + j] = f64::max(m[4 * a + j], v.abs() / scale);
                    }
                }
            }
            Ok(m)
        })
        .collect();
    let mut total = vec![0.0; 4 * len];
    for m in maxima? {
        for (t, v) in total.iter_mut().zip(m) {
            *t = f64::max(*t, v);
        }
    }
    let mut slots = BTreeSet::new();
    for a in 0..len {
        for (j, (part, parity)) in [
            (Part::Re, Parity::Symmetric),
            (Part::Im, Parity::Symmetric),
            (Part::Re, Parity::Antisymmetric),
            (Part::Im, Parity::Antisymmetric),
        ]
        .iter()
        .enumerate()
        {
            if total[4 * a + j] > 1e-12 {
                slots.insert(Slot { component: a + 1, part: *part, parity: *parity });
            }
        }
    }
    Ok(ParameterSet { family, slots, with_parity: ops.iter().any(|o| o.momentum_flips()) })
}

/// Eigenvalue-pair relation residual of a symmetrized field at one momentum.
pub fn spectral_residual(field: &dyn HamiltonianField, op: &SymmetryOperator, k: &[f64]) -> Result<f64, SymmetryError> {
    let ek = field.eval(k)?.eigenvalues()?;
    let emk = field.eval(&neg_k(k))?.eigenvalues()?;
    Ok(spectral_relation(&ek, &emk, Some(op.kind)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trig(n: usize, seed: u64) -> Field {
        Arc::new(TrigField::random(n, 1, seed))
    }

    fn supported(n: usize) -> impl Iterator<Item = SymmetryKind> {
        SymmetryKind::ALL.into_iter().filter(move |k| k.supports(n))
    }

    #[test]
    fn default_generators_validate() {
        for n in 2..=4 {
            for kind in supported(n) {
                SymmetryOperator::default_for(kind, n).unwrap_or_else(|e| panic!("{kind} n={n}: {e}"));
                if matches!(kind, Phs | PhsDag | Trs | TrsDag) && n != 3 {
                    let g = kind.default_generator(n, -1).unwrap();
                    assert_eq!(SymmetryOperator::new(kind, g).unwrap().zeta, Some(-1));
                }
            }
        }
        assert!(SymmetryOperator::default_for(Cs, 3).is_err());
        assert!(SymmetryOperator::default_for(Sls, 5).is_ok());
        let bad = CMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(SymmetryOperator::new(PsH, bad).is_err());
    }

    #[test]
    fn projector_is_idempotent_and_symmetric() {
        let ks: Vec<Vec<f64>> = vec![vec![0.3], vec![-1.1], vec![2.4]];
        for n in 2..=4 {
            for kind in supported(n) {
                let op = SymmetryOperator::default_for(kind, n).unwrap();
                let once = symmetrize(trig(n, 11), &op).unwrap();
                let twice = symmetrize(once.clone(), &op).unwrap();
                assert!(check_symmetry(once.as_ref(), &op, &ks).unwrap() < 1e-13, "{kind} n={n}");
                for k in &ks {
                    let d = once.eval(k).unwrap().max_diff(&twice.eval(k).unwrap());
                    assert!(d < 1e-13, "{kind} n={n} not idempotent: {d}");
                }
                let r = spectral_residual(once.as_ref(), &op, &ks[0]).unwrap();
                assert!(r < 1e-9, "{kind} n={n}: spectral residual {r}");
            }
        }
    }

    #[test]
    fn hermitian_matrix_is_psh_with_identity() {
        let h = CMatrix::from_rows(vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 2.0)],
            vec![Complex64::new(0.5, -2.0), Complex64::new(-3.0, 0.0)],
        ])
        .unwrap();
        let op = SymmetryOperator::new(PsH, CMatrix::identity(2)).unwrap();
        assert_eq!(op.relation_residual(&h, &h), 0.0);
    }

    #[test]
    fn constraint_counts() {
        assert_eq!(predicted_constraints(&[PsH], 4).unwrap().count, 3);
        let sls3 = predicted_constraints(&[Sls], 3).unwrap();
        assert_eq!(sls3.count, 2);
        assert!(sls3.constraints.iter().all(|c| c.quantity == Quantity::Trace(2)));
        for n in 2..=6 {
            for kind in [Phs, PhsDag, Trs, TrsDag, Inversion, Parity] {
                assert_eq!(predicted_constraints(&[kind], n).unwrap().count, 2 * (n - 1));
            }
            for kind in [PsH, Pt, Cp] {
                assert_eq!(predicted_constraints(&[kind], n).unwrap().count, n - 1);
            }
            for kind in [PsCs, Sls] {
                let want = if n % 2 == 0 { n } else { n - 1 };
                assert_eq!(predicted_constraints(&[kind], n).unwrap().count, want);
            }
            if n % 2 == 0 {
                assert_eq!(predicted_constraints(&[Cs], n).unwrap().count, n - 1);
            } else {
                assert!(predicted_constraints(&[Cs], n).is_err());
            }
        }
        assert_eq!(predicted_constraints(&[PsH, Cs], 2).unwrap().count, 1);
    }

    #[test]
    fn blc_aliases() {
        assert_eq!(Sls.blc_alias().unwrap().symbol, 'P');
        assert_eq!(PsH.blc_alias().unwrap().symbol, 'Q');
        assert_eq!(Cs.blc_alias().unwrap().symbol, 'Q');
        assert_eq!(Phs.blc_alias().unwrap(), BlcLabel { symbol: 'C', epsilon: -1 });
        assert_eq!(TrsDag.blc_alias().unwrap(), BlcLabel { symbol: 'C', epsilon: 1 });
        assert_eq!(Trs.blc_alias().unwrap().symbol, 'K');
        for kind in [PsCs, Inversion, Parity, Pt, Cp] {
            assert!(kind.blc_alias().is_none());
        }
    }

    #[test]
    fn kind_names_roundtrip() {
        for kind in SymmetryKind::ALL {
            assert_eq!(kind.name().parse::<SymmetryKind>().unwrap(), kind);
        }
        assert!("XYZ".parse::<SymmetryKind>().is_err());
    }

    #[test]
    fn sls_two_band_survivors() {
        let op = SymmetryOperator::default_for(Sls, 2).unwrap();
        let set = surviving_parameters(&[op], 2, 10, 5, 1).unwrap();
        assert_eq!(set.labels(), vec!["dxR", "dxI", "dyR", "dyI"]);
        assert_eq!(set.count(), 4);
    }
}
