//! The DSL configs under `configs/` reproduce the built-in models.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64 as C;

use ep_atlas::models;
use ep_atlas_cli::config::JobConfig;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn mirror(file: &str, model: &str, params: &[(&str, C)]) {
    let cfg = JobConfig::load(&configs().join(file)).unwrap();
    let r = cfg.resolve().unwrap();
    let overrides: BTreeMap<String, C> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let m = models::build(model, &overrides).unwrap();
    assert_eq!(r.field.dim(), m.field.dim());
    assert_eq!(r.field.arity(), m.field.arity());
    let mut worst = 0.0f64;
    for i in 0..40 {
        let k: Vec<f64> = (0..r.field.arity()).map(|d| ((i * 7 + d * 13) % 41) as f64 * 0.15 - 3.0).collect();
        let a = r.field.eval(&k).unwrap();
        let b = m.field.eval(&k).unwrap();
        worst = worst.max(a.max_diff(&b));
    }
    assert!(worst < 1e-12, "{file} vs {model}: {worst}");
}

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

#[test]
fn kitaev() {
    mirror("kitaev_dsl.json", "kitaev", &[("gamma_l", re(1.25)), ("gamma_g", re(1.25))]);
}

#[test]
fn threefold() {
    mirror("threefold_dsl.json", "threefold_alpha", &[("alpha", re(0.3))]);
}

#[test]
fn threefold_pt() {
    mirror("threefold_pt_dsl.json", "threefold_pt", &[("alpha", re(0.3))]);
}

#[test]
fn fourfold() {
    mirror("fourfold_dsl.json", "fourfold_alpha", &[("alpha", re(0.15))]);
}

#[test]
fn fourfold_psh() {
    mirror("fourfold_psh_dsl.json", "fourfold_psh", &[("alpha", re(0.2))]);
}

#[test]
fn every_config_parses() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let cfg = JobConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            if cfg.hamiltonian.is_some() {
                cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            }
        }
    }
}
