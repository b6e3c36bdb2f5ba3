//! Job configuration: JSON schema 1, parsed with JSON-pointer diagnostics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64 as C;
use serde::Deserialize;

use ep_atlas::basis::{self, BasisFamily};
use ep_atlas::dispersion::DispersionConfig;
use ep_atlas::epfinder::{Axis, ScanConfig};
use ep_atlas::expr::{self, Bindings};
use ep_atlas::field::{DslCoefficientField, DslEntriesField, Field};
use ep_atlas::matrix::CMatrix;
use ep_atlas::models;
use ep_atlas::symmetry::{SymmetryKind, SymmetryOperator};

use crate::error::CliError;

pub const SCHEMA: u32 = 1;

/// A complex number: a real literal, an `[re, im]` pair or a DSL expression
/// without free identifiers (e.g. `"i*sqrt(0.18)"`).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Pair([f64; 2]),
    Expr(String),
}

impl Value {
    pub fn to_complex(&self) -> Result<C, String> {
        match self {
            Value::Real(x) => Ok(C::new(*x, 0.0)),
            Value::Pair([re, im]) => Ok(C::new(*re, *im)),
            Value::Expr(s) => expr::eval_str(s, &Bindings::new()).map_err(|e| format!("{s:?}: {e}")),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub model: Option<String>,
    /// Model parameters, or bindings for the DSL expressions.
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    pub dimension: Option<usize>,
    pub family: Option<BasisFamily>,
    /// Identity coefficient for `coefficients` (default `0`).
    pub d0: Option<String>,
    pub coefficients: Option<Vec<String>>,
    /// Row-major matrix of DSL strings.
    pub entries: Option<Vec<Vec<String>>>,
    /// Momentum names in argument order (subset of `k_x`, `k_y`, `k_z`).
    pub momenta: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    /// `"default"` or a named matrix such as `"sigma_z"`, `"Gamma1"`, `"M7"`.
    Named(String),
    Rows(Vec<Vec<Value>>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    pub kind: SymmetryKind,
    pub generator: Option<GeneratorSpec>,
    /// Selects the `A A* = -1` default generator where one exists.
    pub zeta: Option<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Bands,
    Constraints,
    EpReport,
    Dispersion,
    SymmetryReport,
    TableCheck,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Bands => "bands",
            OutputKind::Constraints => "constraints",
            OutputKind::EpReport => "ep_report",
            OutputKind::Dispersion => "dispersion",
            OutputKind::SymmetryReport => "symmetry_report",
            OutputKind::TableCheck => "table_check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub kind: OutputKind,
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSpec {
    /// EP to classify; when absent, every EP found by the scan is classified.
    pub k: Option<Vec<f64>>,
    /// Approach direction; defaults to the momentum-space diagonal.
    pub direction: Option<Vec<f64>>,
    #[serde(default)]
    pub sampling: DispersionConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableCheckSpec {
    pub n: Option<usize>,
    /// Row name or `"all"`.
    pub kind: String,
    /// Draws per table row for the surviving-coefficient count.
    pub draws: usize,
    pub k_samples: usize,
    /// Symmetrized draws per (kind, n) for the vanishing pattern.
    pub trials: usize,
    pub seed: u64,
}

impl Default for TableCheckSpec {
    fn default() -> Self {
        TableCheckSpec { n: None, kind: "all".into(), draws: 50, k_samples: 20, trials: 100, seed: 11 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub schema: u32,
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default)]
    pub symmetries: Vec<SymmetrySpec>,
    pub scan: Option<ScanConfig>,
    pub dispersion: Option<DispersionSpec>,
    pub table_check: Option<TableCheckSpec>,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut s = String::new();
    for seg in path.iter() {
        s.push('/');
        match seg {
            Segment::Seq { index } => s.push_str(&index.to_string()),
            Segment::Map { key } => s.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => s.push_str(variant),
            Segment::Unknown => s.push('?'),
        }
    }
    if s.is_empty() {
        s.push('/');
    }
    s
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<JobConfig, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: JobConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::config(pointer(e.path()), e.inner()))?;
        if cfg.schema != SCHEMA {
            return Err(CliError::config("/schema", format!("unsupported schema {}, expected {SCHEMA}", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<JobConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn new_empty() -> JobConfig {
        JobConfig { schema: SCHEMA, ..Default::default() }
    }
}

/// Description of where the field came from, for reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Source {
    pub kind: &'static str,
    pub model: Option<String>,
    pub params: BTreeMap<String, C>,
    pub momenta: Vec<String>,
    pub dimension: usize,
}

pub struct Resolved {
    pub field: Field,
    pub source: Source,
    pub operators: Vec<SymmetryOperator>,
}

fn params_of(spec: &HamiltonianSpec) -> Result<BTreeMap<String, C>, CliError> {
    spec.params
        .iter()
        .map(|(k, v)| {
            v.to_complex()
                .map(|z| (k.clone(), z))
                .map_err(|e| CliError::config(format!("/hamiltonian/params/{k}"), e))
        })
        .collect()
}

fn parse_exprs(items: &[String], at: &str) -> Result<Vec<expr::Expr>, CliError> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| expr::parse(s).map_err(|e| CliError::config(format!("{at}/{i}"), format!("{s:?}: {e}"))))
        .collect()
}

pub fn resolve_hamiltonian(spec: &HamiltonianSpec) -> Result<(Field, Source, Vec<SymmetryOperator>), CliError> {
    let sources = [spec.model.is_some(), spec.coefficients.is_some(), spec.entries.is_some()];
    if sources.iter().filter(|&&b| b).count() != 1 {
        return Err(CliError::config("/hamiltonian", "exactly one of `model`, `coefficients`, `entries` is required"));
    }
    let params = params_of(spec)?;
    if let Some(name) = &spec.model {
        let m = models::build(name, &params).map_err(|e| CliError::config("/hamiltonian/model", e))?;
        let ops = m.operators().map_err(|e| CliError::config("/hamiltonian/model", e))?;
        let source = Source {
            kind: "model",
            model: Some(m.name.clone()),
            params: m.params.clone(),
            momenta: m.momenta.clone(),
            dimension: m.field.dim(),
        };
        return Ok((m.field, source, ops));
    }
    let bindings: Bindings = params.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let (field, kind): (Field, &'static str) = if let Some(coeffs) = &spec.coefficients {
        let family = match (spec.family, spec.dimension) {
            (Some(f), _) => f,
            (None, Some(n)) => BasisFamily::for_dim(n)
                .ok_or_else(|| CliError::config("/hamiltonian/dimension", format!("no coefficient basis for n = {n}")))?,
            (None, None) => return Err(CliError::config("/hamiltonian", "`coefficients` needs `family` or `dimension`")),
        };
        if let Some(n) = spec.dimension {
            if n != family.dim() {
                return Err(CliError::config("/hamiltonian/dimension", format!("{family:?} acts on n = {}, got {n}", family.dim())));
            }
        }
        let d = parse_exprs(coeffs, "/hamiltonian/coefficients")?;
        let d0 = expr::parse(spec.d0.as_deref().unwrap_or("0")).map_err(|e| CliError::config("/hamiltonian/d0", e))?;
        let f = DslCoefficientField::new(family, d0, d, spec.momenta.clone(), bindings)
            .map_err(|e| CliError::config("/hamiltonian/coefficients", e))?;
        (Arc::new(f), "coefficients")
    } else {
        let rows = spec.entries.as_ref().expect("checked above");
        let n = rows.len();
        if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(CliError::config(format!("/hamiltonian/entries/{i}"), format!("expected {n} entries per row")));
        }
        if let Some(d) = spec.dimension {
            if d != n {
                return Err(CliError::config("/hamiltonian/dimension", format!("entries are {n} x {n}, got dimension {d}")));
            }
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            flat.extend(parse_exprs(r, &format!("/hamiltonian/entries/{i}"))?);
        }
        let f = DslEntriesField::new(flat, spec.momenta.clone(), bindings).map_err(|e| CliError::config("/hamiltonian/entries", e))?;
        (Arc::new(f), "entries")
    };
    let momenta = match &spec.momenta {
        Some(m) => m.clone(),
        None => expr::MOMENTA[..field.arity()].iter().map(|s| s.to_string()).collect(),
    };
    let source = Source { kind, model: None, params, momenta, dimension: field.dim() };
    Ok((field, source, Vec::new()))
}

fn generator(spec: &SymmetrySpec, n: usize, at: &str) -> Result<CMatrix, CliError> {
    let zeta = spec.zeta.unwrap_or(1);
    match &spec.generator {
        None => spec.kind.default_generator(n, zeta).map_err(|e| CliError::config(at, e)),
        Some(GeneratorSpec::Named(s)) if s == "default" => spec.kind.default_generator(n, zeta).map_err(|e| CliError::config(at, e)),
        Some(GeneratorSpec::Named(s)) => {
            basis::named_matrix(s).ok_or_else(|| CliError::config(format!("{at}/generator"), format!("unknown matrix name {s:?}")))
        }
        Some(GeneratorSpec::Rows(rows)) => {
            let rows: Vec<Vec<C>> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r.iter()
                        .enumerate()
                        .map(|(j, v)| v.to_complex().map_err(|e| CliError::config(format!("{at}/generator/{i}/{j}"), e)))
                        .collect()
                })
                .collect::<Result<_, _>>()?;
            CMatrix::from_rows(rows).map_err(|e| CliError::config(format!("{at}/generator"), e))
        }
    }
}

pub fn resolve_symmetries(specs: &[SymmetrySpec], n: usize) -> Result<Vec<SymmetryOperator>, CliError> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let at = format!("/symmetries/{i}");
            let g = generator(s, n, &at)?;
            if g.dim() != n {
                return Err(CliError::config(format!("{at}/generator"), format!("generator is {} x {0}, field is {n} x {n}", g.dim())));
            }
            let op = match s.zeta {
                Some(z) => SymmetryOperator::with_zeta(s.kind, g, z),
                None => SymmetryOperator::new(s.kind, g),
            };
            op.map_err(|e| CliError::config(at.clone(), e))
        })
        .collect()
}

impl JobConfig {
    /// Field, its description, and the symmetry operators to use: the
    /// configured ones, or the model's declared ones when none are given.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let spec = self.hamiltonian.as_ref().ok_or_else(|| CliError::config("/hamiltonian", "missing"))?;
        let (field, source, declared) = resolve_hamiltonian(spec)?;
        let operators = if self.symmetries.is_empty() { declared } else { resolve_symmetries(&self.symmetries, field.dim())? };
        Ok(Resolved { field, source, operators })
    }

    pub fn scan_config(&self) -> Result<ScanConfig, CliError> {
        let cfg = self.scan.clone().ok_or_else(|| CliError::config("/scan", "missing; give a `scan` section or --grid"))?;
        cfg.validate().map_err(|e| CliError::config("/scan", e))?;
        Ok(cfg)
    }
}

/// `--grid min:max:count[,min:max:count...]`.
pub fn parse_grid(s: &str) -> Result<Vec<Axis>, CliError> {
    s.split(',')
        .map(|ax| {
            let parts: Vec<&str> = ax.split(':').collect();
            let bad = || CliError::config("--grid", format!("axis {ax:?} is not min:max:count"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let min = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
            let max = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
            let count = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
            Ok(Axis::new(min, max, count))
        })
        .collect()
}

/// `--param name=value`, the value being a DSL expression.
pub fn parse_param(s: &str) -> Result<(String, Value), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::config("--param", format!("{s:?} is not name=value")))?;
    let value = Value::Expr(v.trim().to_string());
    value.to_complex().map_err(|e| CliError::config("--param", e))?;
    Ok((k.trim().to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointer_paths_in_errors() {
        let e = JobConfig::parse(r#"{"schema": 1, "hamiltonian": {"model": "kitaev", "params": {"mu": {}}}}"#).unwrap_err();
        assert!(e.to_string().contains("/hamiltonian/params/mu"), "{e}");
        let e = JobConfig::parse(r#"{"schema": 1, "scan": {"grid": [{"min": 0, "max": 1, "count": 3}], "bogus": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("/scan"), "{e}");
        let e = JobConfig::parse(r#"{"schema": 2}"#).unwrap_err();
        assert!(e.to_string().contains("/schema"), "{e}");
    }

    #[test]
    fn exactly_one_source() {
        let spec = HamiltonianSpec { model: Some("kitaev".into()), entries: Some(vec![vec!["0".into()]]), ..Default::default() };
        assert!(resolve_hamiltonian(&spec).is_err());
        assert!(resolve_hamiltonian(&HamiltonianSpec::default()).is_err());
    }

    #[test]
    fn values_and_flags() {
        assert_eq!(Value::Expr("i*2".into()).to_complex().unwrap(), C::new(0.0, 2.0));
        assert_eq!(Value::Pair([1.0, -1.0]).to_complex().unwrap(), C::new(1.0, -1.0));
        let g = parse_grid("-1:1:5,0:2:3").unwrap();
        assert_eq!(g, vec![Axis::new(-1.0, 1.0, 5), Axis::new(0.0, 2.0, 3)]);
        assert!(parse_grid("1:2").is_err());
        assert_eq!(parse_param("alpha = 0.2").unwrap().0, "alpha");
        assert!(parse_param("alpha").is_err());
    }

    #[test]
    fn entries_and_coefficients_agree() {
        let e = HamiltonianSpec {
            entries: Some(vec![vec!["0".into(), "k_x + g".into()], vec!["k_x - g".into(), "0".into()]]),
            params: [("g".to_string(), Value::Real(0.5))].into(),
            ..Default::default()
        };
        let c = HamiltonianSpec {
            coefficients: Some(vec!["k_x".into(), "i*g".into(), "0".into()]),
            family: Some(BasisFamily::Pauli),
            params: [("g".to_string(), Value::Real(0.5))].into(),
            ..Default::default()
        };
        let (fe, se, _) = resolve_hamiltonian(&e).unwrap();
        let (fc, _, _) = resolve_hamiltonian(&c).unwrap();
        assert_eq!(se.momenta, vec!["k_x"]);
        for k in [-0.7, 0.1, 1.3] {
            assert!(fe.eval(&[k]).unwrap().max_diff(&fc.eval(&[k]).unwrap()) < 1e-15);
        }
    }
}
