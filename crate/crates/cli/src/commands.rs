//! The five subcommands. Each returns its reports plus an exit status; the
//! caller decides where the reports go.

use rayon::prelude::*;
use serde_json::{json, Value};

use ep_atlas::charpoly::constraint_vector;
use ep_atlas::dispersion::{classify, default_direction, scaling_exponents, DispersionConfig, EpClass, ScalingFit};
use ep_atlas::epfinder::{scan, Axis, ScanReport};
use ep_atlas::field::HamiltonianField;
use ep_atlas::matrix::sort_complex;
use ep_atlas::symmetry::{
    all_quantities, check_symmetry, predicted_vanishing, spectral_residual, vanishing_pattern, SymmetryKind,
    SymmetryOperator,
};
use ep_atlas::tables::{check_row, rows, RowCheck};

use crate::config::{JobConfig, OutputKind, Resolved, SCHEMA};
use crate::error::{CliError, Status};
use crate::output::{to_value, Cell, Document, Table};

/// A forbidden part must stay below this relative size in every draw.
pub const FORBIDDEN_TOL: f64 = 1e-12;
/// A permitted part must have at least this median relative size.
pub const PERMITTED_MIN: f64 = 1e-3;
/// Relation residual allowed in `symcheck`, relative to the field scale.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug)]
pub struct Outcome {
    pub documents: Vec<Document>,
    pub status: Status,
}

fn header(kind: OutputKind, resolved: Option<&Resolved>) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("kind".into(), json!(kind.name()));
    if let Some(r) = resolved {
        m.insert("source".into(), to_value(&r.source));
    }
    m
}

fn check_arity(field: &dyn HamiltonianField, grid: &[Axis]) -> Result<(), CliError> {
    if grid.len() != field.arity() {
        return Err(CliError::config("/scan/grid", format!("grid has {} axes but the field takes {} momenta", grid.len(), field.arity())));
    }
    Ok(())
}

/// Grid points in row-major order, last axis fastest.
pub fn grid_points(grid: &[Axis]) -> Vec<Vec<f64>> {
    let total: usize = grid.iter().map(|a| a.count).product();
    (0..total)
        .map(|mut i| {
            let mut k = vec![0.0; grid.len()];
            for (d, a) in grid.iter().enumerate().rev() {
                k[d] = a.value(i % a.count);
                i /= a.count;
            }
            k
        })
        .collect()
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn bands(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let r = cfg.resolve()?;
    let sc = cfg.scan_config()?;
    check_arity(r.field.as_ref(), &sc.grid)?;
    let n = r.field.dim();
    let points = grid_points(&sc.grid);
    let per_point: Vec<(Vec<f64>, Vec<f64>)> = points
        .par_iter()
        .map(|k| {
            let h = r.field.eval(k).map_err(numerical)?;
            let mut ev = h.eigenvalues().map_err(numerical)?;
            sort_complex(&mut ev);
            let bands = ev.iter().flat_map(|z| [z.re, z.im]).collect();
            let cons = constraint_vector(&h).iter().flat_map(|z| [z.re, z.im]).collect();
            Ok((bands, cons))
        })
        .collect::<Result<_, CliError>>()?;

    let mut cols: Vec<String> = r.source.momenta.clone();
    for i in 1..=n {
        cols.push(format!("re_{i}"));
        cols.push(format!("im_{i}"));
    }
    let mut band_table = Table::new(cols);
    let mut cons_cols: Vec<String> = r.source.momenta.clone();
    let names: Vec<String> = (2..n).map(|p| format!("tr_h{p}")).chain(std::iter::once("det".to_string())).collect();
    for name in &names {
        cons_cols.push(format!("re_{name}"));
        cons_cols.push(format!("im_{name}"));
    }
    let mut cons_table = Table::new(cons_cols);
    for (k, (b, c)) in points.iter().zip(per_point) {
        let lead = k.iter().map(|&x| Cell::Num(x));
        band_table.rows.push(lead.clone().chain(b.into_iter().map(Cell::Num)).collect());
        cons_table.rows.push(lead.chain(c.into_iter().map(Cell::Num)).collect());
    }

    let doc = |kind: OutputKind, t: Table| {
        let mut m = header(kind, Some(&r));
        m.insert("grid".into(), to_value(&sc.grid));
        if let Value::Object(body) = t.to_json() {
            m.extend(body);
        }
        Document { kind, json: Value::Object(m), table: Some(t) }
    };
    Ok(Outcome {
        documents: vec![doc(OutputKind::Bands, band_table), doc(OutputKind::Constraints, cons_table)],
        status: Status::Ok,
    })
}

fn run_scan(cfg: &JobConfig, r: &Resolved) -> Result<(ScanReport, Vec<SymmetryKind>), CliError> {
    let sc = cfg.scan_config()?;
    check_arity(r.field.as_ref(), &sc.grid)?;
    let hint: Vec<SymmetryKind> = r.operators.iter().map(|o| o.kind).collect();
    let rep = scan(r.field.as_ref(), &sc, &hint).map_err(numerical)?;
    Ok((rep, hint))
}

fn scan_table(rep: &ScanReport, momenta: &[String]) -> Table {
    let mut cols = momenta.to_vec();
    for c in ["re_lambda", "im_lambda", "algebraic_mult", "geometric_mult", "ep_order", "jordan_blocks", "residual", "target", "curve"] {
        cols.push(c.to_string());
    }
    let mut t = Table::new(cols);
    for c in &rep.candidates {
        let mut row: Vec<Cell> = c.k.iter().map(|&x| Cell::Num(x)).collect();
        row.extend([
            Cell::Num(c.eigenvalue.re),
            Cell::Num(c.eigenvalue.im),
            Cell::Int(c.algebraic_mult as i64),
            Cell::Int(c.geometric_mult as i64),
            Cell::Int(c.ep_order as i64),
            Cell::Text(c.jordan_blocks.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("+")),
            Cell::Num(c.residual),
            Cell::Text(to_value(&c.target).as_str().unwrap_or("").to_string()),
            Cell::Int(c.curve.map_or(-1, |i| i as i64)),
        ]);
        t.rows.push(row);
    }
    t
}

pub fn scan_cmd(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let r = cfg.resolve()?;
    let (rep, hint) = run_scan(cfg, &r)?;
    let mut m = header(OutputKind::EpReport, Some(&r));
    m.insert("tolerances".into(), to_value(&cfg.scan_config()?));
    m.insert("symmetries".into(), to_value(&hint));
    m.insert("candidates".into(), to_value(&rep.candidates));
    m.insert("curves".into(), to_value(&rep.curves));
    m.insert("unconverged".into(), to_value(&rep.unconverged));
    m.insert("scale".into(), to_value(&rep.scale));
    let status = if rep.candidates.is_empty() && !rep.unconverged.is_empty() { Status::NonConvergence } else { Status::Ok };
    let table = scan_table(&rep, &r.source.momenta);
    Ok(Outcome { documents: vec![Document { kind: OutputKind::EpReport, json: Value::Object(m), table: Some(table) }], status })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Classified {
    pub k: Vec<f64>,
    pub classification: Option<EpClass>,
    pub scaling: Option<ScalingFit>,
    pub error: Option<String>,
}

pub fn classify_at(field: &dyn HamiltonianField, k: &[f64], direction: &[f64], sampling: &DispersionConfig) -> Classified {
    let class = classify(field, k, direction, sampling);
    let fit = scaling_exponents(field, k, direction, sampling);
    let error = match (&class, &fit) {
        (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
        _ => None,
    };
    Classified { k: k.to_vec(), classification: class.ok(), scaling: fit.ok(), error }
}

pub fn classify_cmd(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let r = cfg.resolve()?;
    let spec = cfg.dispersion.clone().unwrap_or_default();
    let arity = r.field.arity();
    let direction = spec.direction.clone().unwrap_or_else(|| default_direction(arity));
    if direction.len() != arity || direction.iter().all(|&x| x == 0.0) {
        return Err(CliError::config("/dispersion/direction", format!("need a nonzero vector of length {arity}")));
    }
    let points: Vec<Vec<f64>> = match &spec.k {
        Some(k) if k.len() != arity => return Err(CliError::config("/dispersion/k", format!("need {arity} momenta"))),
        Some(k) => vec![k.clone()],
        None => run_scan(cfg, &r)?.0.candidates.into_iter().filter(|c| c.is_ep).map(|c| c.k).collect(),
    };
    let results: Vec<Classified> = points.par_iter().map(|k| classify_at(r.field.as_ref(), k, &direction, &spec.sampling)).collect();
    if spec.k.is_some() {
        if let Some(e) = &results[0].error {
            return Err(CliError::Numerical(format!("classification at {:?}: {e}", results[0].k)));
        }
    }
    let status = if results.iter().any(|c| c.error.is_some()) { Status::NonConvergence } else { Status::Ok };

    let mut cols = r.source.momenta.clone();
    for c in ["label", "order", "re_lambda", "im_lambda", "leading_exponent", "flat_bands", "reliable", "error"] {
        cols.push(c.to_string());
    }
    let mut t = Table::new(cols);
    for c in &results {
        let mut row: Vec<Cell> = c.k.iter().map(|&x| Cell::Num(x)).collect();
        let (label, order, lam) = match &c.classification {
            Some(cl) => (cl.label.to_string(), cl.order as i64, cl.eigenvalue),
            None => (String::new(), 0, num_complex::Complex64::new(f64::NAN, f64::NAN)),
        };
        row.extend([Cell::Text(label), Cell::Int(order), Cell::Num(lam.re), Cell::Num(lam.im)]);
        match &c.scaling {
            Some(f) => row.extend([
                Cell::Num(f.leading_exponent.unwrap_or(f64::NAN)),
                Cell::Int(f.flat_bands as i64),
                Cell::Text(f.reliable.to_string()),
            ]),
            None => row.extend([Cell::Num(f64::NAN), Cell::Int(0), Cell::Text("false".into())]),
        }
        row.push(Cell::Text(c.error.clone().unwrap_or_default()));
        t.rows.push(row);
    }
    let mut m = header(OutputKind::Dispersion, Some(&r));
    m.insert("direction".into(), to_value(&direction));
    m.insert("sampling".into(), to_value(&spec.sampling));
    m.insert("results".into(), to_value(&results));
    Ok(Outcome { documents: vec![Document { kind: OutputKind::Dispersion, json: Value::Object(m), table: Some(t) }], status })
}

/// Fixed sample momenta for symmetry checks, away from the invariant points.
pub fn symmetry_samples(arity: usize) -> Vec<Vec<f64>> {
    const V: [f64; 5] = [-2.7, -1.1, -0.35, 0.6, 1.9];
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out.into_iter().flat_map(|k| V.iter().map(move |&v| [k.clone(), vec![v]].concat())).collect();
    }
    out
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SymmetryResult {
    pub kind: SymmetryKind,
    pub operator: SymmetryOperator,
    pub relation_residual: f64,
    pub spectral_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn symcheck(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let r = cfg.resolve()?;
    if r.operators.is_empty() {
        return Err(CliError::config("/symmetries", "no symmetries given and the source declares none"));
    }
    let samples = symmetry_samples(r.field.arity());
    let scale = samples
        .iter()
        .map(|k| r.field.eval(k).map(|h| h.norm()).map_err(numerical))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let tol = SYMMETRY_TOL * scale.max(1.0);
    let mut results = Vec::new();
    for op in &r.operators {
        let rel = check_symmetry(r.field.as_ref(), op, &samples).map_err(|e| CliError::config("/symmetries", e))?;
        let spec = samples
            .iter()
            .map(|k| spectral_residual(r.field.as_ref(), op, k).map_err(numerical))
            .collect::<Result<Vec<f64>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        results.push(SymmetryResult { kind: op.kind, operator: op.clone(), relation_residual: rel, spectral_residual: spec, tolerance: tol, pass: rel < tol });
    }
    let mut t = Table::new(["kind", "relation_residual", "spectral_residual", "tolerance", "pass"].map(String::from).to_vec());
    for s in &results {
        t.rows.push(vec![
            Cell::Text(s.kind.name().into()),
            Cell::Num(s.relation_residual),
            Cell::Num(s.spectral_residual),
            Cell::Num(s.tolerance),
            Cell::Text(s.pass.to_string()),
        ]);
    }
    let status = if results.iter().all(|s| s.pass) { Status::Ok } else { Status::Mismatch };
    let mut m = header(OutputKind::SymmetryReport, Some(&r));
    m.insert("samples".into(), json!(samples.len()));
    m.insert("scale".into(), to_value(&scale));
    m.insert("results".into(), to_value(&results));
    m.insert("pass".into(), json!(status == Status::Ok));
    Ok(Outcome { documents: vec![Document { kind: OutputKind::SymmetryReport, json: Value::Object(m), table: Some(t) }], status })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PatternCheck {
    pub kind: SymmetryKind,
    pub n: usize,
    pub expected_vanishing: Vec<String>,
    pub observed_vanishing: Vec<String>,
    /// Permitted parts whose median fell below the floor.
    pub spurious: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Skipped {
    pub kind: SymmetryKind,
    pub n: usize,
    pub reason: String,
}

pub fn pattern_check(kind: SymmetryKind, n: usize, trials: usize, seed: u64) -> Result<PatternCheck, String> {
    let op = SymmetryOperator::default_for(kind, n).map_err(|e| e.to_string())?;
    let pattern = vanishing_pattern(&[op], n, trials, seed).map_err(|e| e.to_string())?;
    let forbidden = predicted_vanishing(kind, n).map_err(|e| e.to_string())?;
    let observed = pattern.vanishing(FORBIDDEN_TOL);
    let spurious: Vec<String> = all_quantities(n)
        .into_iter()
        .filter(|q| !forbidden.contains(q))
        .filter(|q| pattern.stat(*q).map_or(true, |s| s.median_rel <= PERMITTED_MIN))
        .map(|q| q.to_string())
        .collect();
    Ok(PatternCheck {
        kind,
        n,
        pass: observed == forbidden && spurious.is_empty(),
        expected_vanishing: forbidden.iter().map(|q| q.to_string()).collect(),
        observed_vanishing: observed.iter().map(|q| q.to_string()).collect(),
        spurious,
    })
}

fn parse_kind(s: &str) -> Option<SymmetryKind> {
    serde_json::from_value(Value::String(s.to_string())).ok()
}

pub fn tablecheck(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let spec = cfg.table_check.clone().unwrap_or_default();
    if let Some(n) = spec.n {
        if !(2..=5).contains(&n) {
            return Err(CliError::config("/table_check/n", format!("n must be 2..5, got {n}")));
        }
    }
    let all = spec.kind == "all";
    let single = parse_kind(&spec.kind);
    let table_rows: Vec<_> = rows()
        .into_iter()
        .filter(|r| spec.n.map_or(true, |n| r.n == n))
        .filter(|r| all || r.name == spec.kind || single.is_some_and(|k| r.kinds() == [k]))
        .collect();
    let kinds: Vec<SymmetryKind> = if all { SymmetryKind::ALL.to_vec() } else { single.into_iter().collect() };
    if kinds.is_empty() && table_rows.is_empty() {
        return Err(CliError::config("/table_check/kind", format!("no symmetry kind or table row named {:?}", spec.kind)));
    }
    let mut combos = Vec::new();
    for &kind in &kinds {
        let ns: Vec<usize> = match spec.n {
            Some(n) => vec![n],
            None if matches!(kind, SymmetryKind::Sls | SymmetryKind::PsCs) => vec![2, 3, 4, 5],
            None => vec![2, 3, 4],
        };
        combos.extend(ns.into_iter().map(|n| (kind, n)));
    }
    let (supported, unsupported): (Vec<_>, Vec<_>) = combos.into_iter().partition(|(k, n)| k.supports(*n));
    let skipped: Vec<Skipped> = unsupported
        .into_iter()
        .map(|(kind, n)| Skipped { kind, n, reason: format!("{} has no generator for n = {n}", kind.name()) })
        .collect();
    let patterns: Vec<PatternCheck> = supported
        .par_iter()
        .map(|&(k, n)| pattern_check(k, n, spec.trials, spec.seed))
        .collect::<Result<_, _>>()
        .map_err(CliError::Numerical)?;
    let checks: Vec<RowCheck> = table_rows
        .par_iter()
        .map(|r| check_row(r, spec.draws, spec.k_samples, spec.seed))
        .collect::<Result<_, _>>()
        .map_err(CliError::Numerical)?;

    let mut t = Table::new(["section", "name", "n", "expected", "observed", "pass"].map(String::from).to_vec());
    for p in &patterns {
        t.rows.push(vec![
            Cell::Text("vanishing".into()),
            Cell::Text(p.kind.name().into()),
            Cell::Int(p.n as i64),
            Cell::Text(p.expected_vanishing.join(" ")),
            Cell::Text(p.observed_vanishing.join(" ")),
            Cell::Text(p.pass.to_string()),
        ]);
    }
    for c in &checks {
        t.rows.push(vec![
            Cell::Text(to_value(&c.table).as_str().unwrap_or("").to_string()),
            Cell::Text(c.name.clone()),
            Cell::Int(c.n as i64),
            Cell::Text(format!("{} constraints, {} parameters: {}", c.expected_constraints, c.expected_parameters, c.expected_labels.join(" "))),
            Cell::Text(format!("{} constraints, {} parameters: {}", c.observed_constraints, c.observed_parameters, c.observed_labels.join(" "))),
            Cell::Text(c.pass.to_string()),
        ]);
    }
    for s in &skipped {
        t.rows.push(vec![
            Cell::Text("skipped".into()),
            Cell::Text(s.kind.name().into()),
            Cell::Int(s.n as i64),
            Cell::Text(String::new()),
            Cell::Text(s.reason.clone()),
            Cell::Text(String::new()),
        ]);
    }
    let pass = patterns.iter().all(|p| p.pass) && checks.iter().all(|c| c.pass);
    let mut m = header(OutputKind::TableCheck, None);
    m.insert("settings".into(), json!({"n": spec.n, "kind": spec.kind, "draws": spec.draws, "k_samples": spec.k_samples, "trials": spec.trials, "seed": spec.seed}));
    m.insert("patterns".into(), to_value(&patterns));
    m.insert("rows".into(), to_value(&checks));
    m.insert("skipped".into(), to_value(&skipped));
    m.insert("pass".into(), json!(pass));
    Ok(Outcome {
        documents: vec![Document { kind: OutputKind::TableCheck, json: Value::Object(m), table: Some(t) }],
        status: if pass { Status::Ok } else { Status::Mismatch },
    })
}

/// Human-readable expected-vs-observed lines for `tablecheck`.
pub fn table_summary(doc: &Document) -> Vec<String> {
    let Some(t) = &doc.table else { return Vec::new() };
    t.rows
        .iter()
        .map(|r| {
            let s: Vec<String> = r
                .iter()
                .map(|c| match c {
                    Cell::Text(s) => s.clone(),
                    Cell::Int(i) => i.to_string(),
                    Cell::Num(x) => x.to_string(),
                })
                .collect();
            let verdict = match s[5].as_str() {
                "true" => "PASS",
                "false" => "FAIL",
                _ => "SKIP",
            };
            format!("{verdict} [{}] {} n={}: expected {{{}}} observed {{{}}}", s[0], s[1], s[2], s[3], s[4])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_is_row_major() {
        let g = [Axis::new(0.0, 1.0, 2), Axis::new(0.0, 2.0, 3)];
        let p = grid_points(&g);
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![0.0, 1.0]);
        assert_eq!(p[3], vec![1.0, 0.0]);
    }

    #[test]
    fn samples_cover_the_product() {
        let s = symmetry_samples(2);
        assert_eq!(s.len(), 25);
        assert!(s.iter().all(|k| k.len() == 2));
    }

    #[test]
    fn single_pattern() {
        let p = pattern_check(SymmetryKind::Sls, 3, 30, 1).unwrap();
        assert!(p.pass, "{p:?}");
        assert!(p.observed_vanishing.iter().any(|q| q.contains("det")));
    }
}
