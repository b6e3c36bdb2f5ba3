//! Hamiltonian fields `k -> H(k)`: closures, DSL-defined matrices and
//! coefficient expansions, random trigonometric fields and combinators.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::basis::{BasisError, BasisFamily, CoefficientVector};
use crate::expr::{self, Bindings, Expr, ExprError, MOMENTA};
use crate::matrix::{CMatrix, MatrixError, MAX_DIM, MIN_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field takes {expected} momenta, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("matrix dimension {0} outside 2..=8")]
    Dimension(usize),
    #[error("entry ({row}, {col}): {source}")]
    Entry { row: usize, col: usize, source: ExprError },
    #[error("coefficient {index}: {source}")]
    Coefficient { index: usize, source: ExprError },
    #[error("{found} entries supplied for a {n}x{n} matrix")]
    Shape { n: usize, found: usize },
    #[error("identifier `{0}` is neither a momentum nor a bound parameter")]
    Unbound(String),
    #[error("momentum name `{0}` is not one of k_x, k_y, k_z")]
    Momentum(String),
    #[error("fields have different dimension or arity")]
    Mismatch,
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// A matrix-valued function of `arity` real momenta.
pub trait HamiltonianField: Send + Sync {
    fn dim(&self) -> usize;
    fn arity(&self) -> usize;
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError>;
}

pub type Field = Arc<dyn HamiltonianField>;

impl fmt::Debug for dyn HamiltonianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HamiltonianField(n={}, arity={})", self.dim(), self.arity())
    }
}

pub(crate) fn check_arity(expected: usize, k: &[f64]) -> Result<(), FieldError> {
    if k.len() != expected {
        return Err(FieldError::Arity { expected, found: k.len() });
    }
    Ok(())
}

type MatrixFn = dyn Fn(&[f64]) -> CMatrix + Send + Sync;

/// A field backed by a Rust closure; the built-in models use this.
pub struct FnField {
    n: usize,
    arity: usize,
    f: Box<MatrixFn>,
}

impl FnField {
    pub fn new(n: usize, arity: usize, f: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static) -> FnField {
        FnField { n, arity, f: Box::new(f) }
    }

    pub fn shared(n: usize, arity: usize, f: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static) -> Field {
        Arc::new(Self::new(n, arity, f))
    }
}

impl HamiltonianField for FnField {
    fn dim(&self) -> usize {
        self.n
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        check_arity(self.arity, k)?;
        let h = (self.f)(k);
        if !h.is_finite() {
            return Err(MatrixError::NonFinite(0, 0).into());
        }
        Ok(h)
    }
}

/// A k-independent matrix.
pub struct ConstantField {
    h: CMatrix,
    arity: usize,
}

impl ConstantField {
    pub fn new(h: CMatrix, arity: usize) -> ConstantField {
        ConstantField { h, arity }
    }
}

impl HamiltonianField for ConstantField {
    fn dim(&self) -> usize {
        self.h.dim()
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        check_arity(self.arity, k)?;
        Ok(self.h.clone())
    }
}

/// `H(w) = base + w * direction`, a one-parameter pencil.
pub struct PencilField {
    base: CMatrix,
    direction: CMatrix,
}

impl PencilField {
    pub fn new(base: CMatrix, direction: CMatrix) -> Result<PencilField, FieldError> {
        if base.dim() != direction.dim() {
            return Err(FieldError::Mismatch);
        }
        Ok(PencilField { base, direction })
    }
}

impl HamiltonianField for PencilField {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn arity(&self) -> usize {
        1
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        check_arity(1, k)?;
        Ok(&self.base + &self.direction.scale(Complex64::new(k[0], 0.0)))
    }
}

/// Resolve momentum names to positions and check that every identifier is
/// either a momentum or a bound parameter.
fn resolve_momenta(momenta: &[String], exprs: &[&Expr], params: &Bindings) -> Result<(), FieldError> {
    for m in momenta {
        if !MOMENTA.contains(&m.as_str()) {
            return Err(FieldError::Momentum(m.clone()));
        }
    }
    let mut free = BTreeSet::new();
    for e in exprs {
        free.extend(expr::free_identifiers(e));
    }
    for name in free {
        if !momenta.contains(&name) && !params.contains_key(&name) {
            return Err(FieldError::Unbound(name));
        }
    }
    Ok(())
}

/// Default momentum list: the prefix of (k_x, k_y, k_z) up to the highest
/// one mentioned.
pub fn infer_momenta(exprs: &[&Expr]) -> Vec<String> {
    let mut used = 0;
    for e in exprs {
        for name in expr::free_identifiers(e) {
            if let Some(pos) = MOMENTA.iter().position(|m| *m == name) {
                used = used.max(pos + 1);
            }
        }
    }
    MOMENTA[..used].iter().map(|s| s.to_string()).collect()
}

fn bind(params: &Bindings, momenta: &[String], k: &[f64]) -> Bindings {
    let mut b = params.clone();
    for (name, x) in momenta.iter().zip(k) {
        b.insert(name.clone(), Complex64::new(*x, 0.0));
    }
    b
}

/// Matrix given entrywise by DSL expressions.
#[derive(Debug, Clone)]
pub struct DslEntriesField {
    n: usize,
    entries: Vec<Expr>,
    momenta: Vec<String>,
    params: Bindings,
}

impl DslEntriesField {
    /// `entries` is row-major, `n*n` expressions.
    pub fn new(entries: Vec<Expr>, momenta: Option<Vec<String>>, params: Bindings) -> Result<DslEntriesField, FieldError> {
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n * n != entries.len() {
            return Err(FieldError::Shape { n, found: entries.len() });
        }
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(FieldError::Dimension(n));
        }
        let refs: Vec<&Expr> = entries.iter().collect();
        let momenta = momenta.unwrap_or_else(|| infer_momenta(&refs));
        resolve_momenta(&momenta, &refs, &params)?;
        Ok(DslEntriesField { n, entries, momenta, params })
    }
}

impl HamiltonianField for DslEntriesField {
    fn dim(&self) -> usize {
        self.n
    }
    fn arity(&self) -> usize {
        self.momenta.len()
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        check_arity(self.momenta.len(), k)?;
        let b = bind(&self.params, &self.momenta, k);
        let mut h = CMatrix::zeros(self.n);
        for (idx, e) in self.entries.iter().enumerate() {
            let (row, col) = (idx / self.n, idx % self.n);
            h[(row, col)] = expr::evaluate(e, &b).map_err(|source| FieldError::Entry { row, col, source })?;
        }
        Ok(h)
    }
}

/// `d_0 1 + sum_a d_a B_a` with DSL coefficients.
#[derive(Debug, Clone)]
pub struct DslCoefficientField {
    family: BasisFamily,
    d0: Expr,
    d: Vec<Expr>,
    momenta: Vec<String>,
    params: Bindings,
    basis: Vec<CMatrix>,
}

impl DslCoefficientField {
    pub fn new(
        family: BasisFamily,
        d0: Expr,
        d: Vec<Expr>,
        momenta: Option<Vec<String>>,
        params: Bindings,
    ) -> Result<DslCoefficientField, FieldError> {
        if d.len() != family.len() {
            return Err(BasisError::Count { family, expected: family.len(), found: d.len() }.into());
        }
        let refs: Vec<&Expr> = std::iter::once(&d0).chain(d.iter()).collect();
        let momenta = momenta.unwrap_or_else(|| infer_momenta(&refs));
        resolve_momenta(&momenta, &refs, &params)?;
        Ok(DslCoefficientField { family, d0, d, momenta, params, basis: family.matrices() })
    }

    pub fn coefficients(&self, k: &[f64]) -> Result<CoefficientVector, FieldError> {
        check_arity(self.momenta.len(), k)?;
        let b = bind(&self.params, &self.momenta, k);
        let d0 = expr::evaluate(&self.d0, &b).map_err(|source| FieldError::Coefficient { index: 0, source })?;
        let d = self
            .d
            .iter()
            .enumerate()
            .map(|(i, e)| expr::evaluate(e, &b).map_err(|source| FieldError::Coefficient { index: i + 1, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CoefficientVector { family: self.family, d0, d })
    }
}

impl HamiltonianField for DslCoefficientField {
    fn dim(&self) -> usize {
        self.family.dim()
    }
    fn arity(&self) -> usize {
        self.momenta.len()
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        let c = self.coefficients(k)?;
        let mut h = CMatrix::identity(self.dim()).scale(c.d0);
        for (m, z) in self.basis.iter().zip(&c.d) {
            h = &h + &m.scale(*z);
        }
        Ok(h)
    }
}

/// Random field `A_0 + sum_j (C_j cos k_j + S_j sin k_j + D_j cos 2k_j + E_j sin 2k_j)`
/// with complex Gaussian-free uniform entries. Every matrix element has
/// independent even and odd parts in each momentum, so symmetry projections
/// of it are generic.
#[derive(Debug, Clone)]
pub struct TrigField {
    n: usize,
    arity: usize,
    terms: Vec<CMatrix>,
}

impl TrigField {
    pub fn random(n: usize, arity: usize, seed: u64) -> TrigField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = 1 + 4 * arity;
        let terms = (0..count)
            .map(|_| CMatrix::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        TrigField { n, arity, terms }
    }
}

impl HamiltonianField for TrigField {
    fn dim(&self) -> usize {
        self.n
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        check_arity(self.arity, k)?;
        let mut h = self.terms[0].clone();
        for (j, &kj) in k.iter().enumerate() {
            let w = [kj.cos(), kj.sin(), (2.0 * kj).cos(), (2.0 * kj).sin()];
            for (t, wt) in w.iter().enumerate() {
                h = &h + &self.terms[1 + 4 * j + t].scale(Complex64::new(*wt, 0.0));
            }
        }
        Ok(h)
    }
}

/// Block-diagonal combination; scalar bands enter as 1x1 blocks.
pub struct BlockField {
    blocks: Vec<Block>,
    arity: usize,
}

pub enum Block {
    Matrix(Field),
    Scalar(Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>),
}

impl Block {
    fn dim(&self) -> usize {
        match self {
            Block::Matrix(f) => f.dim(),
            Block::Scalar(_) => 1,
        }
    }
}

impl BlockField {
    pub fn new(blocks: Vec<Block>, arity: usize) -> Result<BlockField, FieldError> {
        for b in &blocks {
            if let Block::Matrix(f) = b {
                if f.arity() != arity {
                    return Err(FieldError::Mismatch);
                }
            }
        }
        let n: usize = blocks.iter().map(Block::dim).sum();
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(FieldError::Dimension(n));
        }
        Ok(BlockField { blocks, arity })
    }

    /// `inner (+) [band(k)]`: one extra decoupled band.
    pub fn with_band(inner: Field, band: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Result<BlockField, FieldError> {
        let arity = inner.arity();
        BlockField::new(vec![Block::Matrix(inner), Block::Scalar(Arc::new(band))], arity)
    }
}

impl HamiltonianField for BlockField {
    fn dim(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        check_arity(self.arity, k)?;
        let mut h = CMatrix::zeros(self.dim());
        let mut off = 0;
        for b in &self.blocks {
            match b {
                Block::Matrix(f) => {
                    let m = f.eval(k)?;
                    for i in 0..m.dim() {
                        for j in 0..m.dim() {
                            h[(off + i, off + j)] = m[(i, j)];
                        }
                    }
                    off += m.dim();
                }
                Block::Scalar(g) => {
                    h[(off, off)] = g(k);
                    off += 1;
                }
            }
        }
        if !h.is_finite() {
            return Err(MatrixError::NonFinite(0, 0).into());
        }
        Ok(h)
    }
}

/// `U H(k) U^-1` for a fixed invertible `U`.
pub struct ConjugatedField {
    inner: Field,
    u: CMatrix,
    u_inv: CMatrix,
}

impl ConjugatedField {
    pub fn new(inner: Field, u: CMatrix) -> Result<ConjugatedField, FieldError> {
        if u.dim() != inner.dim() {
            return Err(FieldError::Mismatch);
        }
        let u_inv = u.inverse()?;
        Ok(ConjugatedField { inner, u, u_inv })
    }
}

impl HamiltonianField for ConjugatedField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn eval(&self, k: &[f64]) -> Result<CMatrix, FieldError> {
        Ok(&(&self.u * &self.inner.eval(k)?) * &self.u_inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dsl_entries_match_closure() {
        let src = ["0", "h_x", "k_y", "0"];
        let entries = src.iter().map(|s| expr::parse(s).unwrap()).collect();
        let mut params = Bindings::new();
        params.insert("h_x".into(), z(0.5, 0.0));
        let f = DslEntriesField::new(entries, None, params).unwrap();
        assert_eq!(f.arity(), 2);
        let h = f.eval(&[0.1, 0.7]).unwrap();
        assert_eq!(h[(0, 1)], z(0.5, 0.0));
        assert_eq!(h[(1, 0)], z(0.7, 0.0));
        assert!(matches!(f.eval(&[0.1]), Err(FieldError::Arity { expected: 2, found: 1 })));
    }

    #[test]
    fn unbound_identifiers_are_rejected_early() {
        let entries = ["a", "0", "0", "0"].iter().map(|s| expr::parse(s).unwrap()).collect();
        let err = DslEntriesField::new(entries, None, Bindings::new()).unwrap_err();
        assert_eq!(err, FieldError::Unbound("a".into()));
        let entries: Vec<Expr> = ["0"; 5].iter().map(|s| expr::parse(s).unwrap()).collect();
        assert!(matches!(DslEntriesField::new(entries, None, Bindings::new()), Err(FieldError::Shape { .. })));
    }

    #[test]
    fn coefficient_field_reconstructs() {
        let d: Vec<Expr> = ["sin(k_x)", "0", "1"].iter().map(|s| expr::parse(s).unwrap()).collect();
        let f = DslCoefficientField::new(BasisFamily::Pauli, expr::parse("i").unwrap(), d, None, Bindings::new()).unwrap();
        let h = f.eval(&[std::f64::consts::FRAC_PI_2]).unwrap();
        assert!((h[(0, 1)] - z(1.0, 0.0)).norm() < 1e-15);
        assert!((h[(0, 0)] - z(1.0, 1.0)).norm() < 1e-15);
        assert!((h[(1, 1)] - z(-1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn block_field_embeds_bands() {
        let inner: Field = Arc::new(TrigField::random(2, 1, 3));
        let f = BlockField::with_band(inner.clone(), |k| z(k[0], 0.0)).unwrap();
        let h = f.eval(&[0.3]).unwrap();
        assert_eq!(h.dim(), 3);
        assert_eq!(h[(2, 2)], z(0.3, 0.0));
        assert_eq!(h[(0, 2)], z(0.0, 0.0));
        assert_eq!(h[(1, 1)], inner.eval(&[0.3]).unwrap()[(1, 1)]);
    }

    #[test]
    fn trig_field_is_deterministic() {
        let a = TrigField::random(3, 2, 9).eval(&[0.2, -0.4]).unwrap();
        let b = TrigField::random(3, 2, 9).eval(&[0.2, -0.4]).unwrap();
        assert_eq!(a, b);
    }
}
