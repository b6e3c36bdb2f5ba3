//! Built-in Hamiltonian fields for the worked examples: the driven-dissipative
//! Kitaev chain, three- and four-fold fermion models, and block embeddings.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64 as C;
use serde::Serialize;
use thiserror::Error;

use crate::field::{ConstantField, Field, FnField};
use crate::matrix::CMatrix;
use crate::symmetry::{symmetrize, SymmetryError, SymmetryKind, SymmetryOperator};

const I: C = C::new(0.0, 1.0);

fn r(x: f64) -> C {
    C::new(x, 0.0)
}

fn m(rows: Vec<Vec<C>>) -> CMatrix {
    CMatrix::from_rows(rows).expect("square model matrix")
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model `{0}`; known: {1}")]
    Unknown(String, String),
    #[error("model `{model}` has no parameter `{param}`; parameters: {known}")]
    Param { model: String, param: String, known: String },
    #[error("parameter `{param}` of `{model}` must be real, got {value}")]
    NotReal { model: String, param: String, value: C },
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// Driven-dissipative Kitaev chain in momentum space.
pub fn kitaev(j: f64, mu: f64, gamma_l: f64, gamma_g: f64) -> Field {
    let g = 2.0 * (gamma_l * gamma_g).sqrt();
    FnField::shared(2, 1, move |k| {
        let e = C::from_polar(1.0, k[0]);
        m(vec![
            vec![-I * g, -I * (e * 2.0 * j + mu)],
            vec![I * (e.conj() * 2.0 * j + mu), I * g],
        ])
    })
}

/// `det H` of the Kitaev chain (also `-eta` in the `d.d` convention).
pub fn kitaev_det(j: f64, mu: f64, gamma_l: f64, gamma_g: f64, k: f64) -> f64 {
    4.0 * gamma_g * gamma_l - 4.0 * j * j - 4.0 * j * mu * k.cos() - mu * mu
}

/// Non-Hermitian three-fold fermion at `k_z = pi/2`, momenta `(k_x, k_y)`.
pub fn threefold(ax: C, ay: C, az: C) -> Field {
    FnField::shared(3, 2, move |k| {
        let hx = ax + I * k[0].sin();
        let hy = ay + I * k[1].sin();
        let hz = az + I * (-2.0 + k[0].cos() + k[1].cos());
        let z = r(0.0);
        m(vec![vec![z, hx, -hy], vec![-hx, z, hz], vec![hy, -hz, z]])
    })
}

/// `alpha_x = alpha_y = alpha`, `alpha_z = i sqrt(2 alpha^2)`.
pub fn threefold_alpha(alpha: f64) -> Field {
    threefold(r(alpha), r(alpha), I * (2.0 * alpha * alpha).sqrt())
}

/// `-tr(H^2)/2` of [`threefold`] as displayed.
pub fn threefold_half_trace2(ax: C, ay: C, az: C, kx: f64, ky: f64) -> C {
    ax * ax + ay * ay + az * (az - 4.0 * I) + 2.0 * I * ax * kx.sin()
        + kx.cos() * (2.0 * I * az - 2.0 * ky.cos() + 4.0)
        + 2.0 * I * ay * ky.sin()
        + (4.0 + 2.0 * I * az) * ky.cos()
        - 6.0
}

/// Pseudo-chiral and PT symmetric three-band model.
pub fn threefold_pt(alpha: f64) -> Field {
    FnField::shared(3, 2, move |k| {
        let s = I * k[0].sin();
        let h = I * (2f64.sqrt() * alpha + k[0].cos() + k[1].cos() - 2.0);
        let z = r(0.0);
        m(vec![vec![z, s, r(-alpha)], vec![-s, z, h], vec![r(alpha), -h, z]])
    })
}

/// `Omega_alpha` as displayed with the factorization `-l (l^2 - Omega)`.
/// The matrix itself gives `l^2 = tr(H^2)/2 = -Omega`; the zero set is the same.
pub fn omega(alpha: f64, kx: f64, ky: f64) -> f64 {
    let s2 = 2f64.sqrt();
    let (cx, cy) = (kx.cos(), ky.cos());
    -alpha * alpha + 4.0 * s2 * alpha - 2.0 * s2 * alpha * cx - 2.0 * cx * cy - kx.sin().powi(2) - cx * cx + 4.0 * cx
        - 2.0 * s2 * alpha * cy
        - cy * cy
        + 4.0 * cy
        - 4.0
}

/// Three-band block with a decoupled zero band and `e = -b`:
/// eigenvalues `0, +-sqrt(b^2 + cd)`.
pub fn sls3_block(b: C, c: C, d: C) -> CMatrix {
    let z = r(0.0);
    m(vec![vec![z, z, z], vec![z, b, c], vec![z, d, -b]])
}

/// [`sls3_block`] plus `d1 M^1 + d4 M^4`, coupling the zero band.
pub fn sls3_coupled(b: C, c: C, d: C, d1: C, d4: C) -> CMatrix {
    let mut h = sls3_block(b, c, d);
    h[(0, 1)] += -I * d1 + d4;
    h[(1, 0)] += I * d1 + d4;
    h
}

/// Non-Hermitian four-fold fermion at `k_y = 0`, momenta `(k_x, k_z)`.
pub fn fourfold(ap: C, am: C, az: C, ab: C, theta1: f64, theta2: f64) -> Field {
    FnField::shared(4, 2, move |k| fourfold_matrix(ap, am, az, ab, theta1, theta2, k[0], k[1]))
}

#[allow(clippy::too_many_arguments)]
pub fn fourfold_matrix(ap: C, am: C, az: C, ab: C, theta1: f64, theta2: f64, kx: f64, kz: f64) -> CMatrix {
    let e1 = C::from_polar(1.0, theta1);
    let e2 = C::from_polar(1.0, theta2);
    let hzz2 = az - e1 * kz;
    let thzz2 = -az - e1.conj() * kz;
    let hbx = ab + e2.conj() * kx;
    let thbx = -ab + e2 * kx;
    let thbx2 = -ab + e2.conj() * kx;
    let hbx2 = ab + e2 * kx;
    let hzz1 = az + e1 * kz;
    let thzz1 = -az + e1.conj() * kz;
    let z = r(0.0);
    m(vec![
        vec![z, ap + kx, hzz2, hbx],
        vec![kx - ap, z, thbx2, hzz1],
        vec![thzz2, hbx2, z, kx - am],
        vec![thbx, thzz1, am + kx, z],
    ])
}

/// `alpha_p = alpha_m = alpha`, `alpha_z = i alpha`, `alpha_b = 0`.
pub fn fourfold_alpha(alpha: f64, theta1: f64, theta2: f64) -> Field {
    fourfold(r(alpha), r(alpha), I * alpha, r(0.0), theta1, theta2)
}

/// Closed forms of `tr H^2`, `tr H^3`, `det H` at `theta1 = theta2 = pi/2`.
pub fn fourfold_invariants(ap: C, am: C, az: C, ab: C, kx: f64, kz: f64) -> (C, C, C) {
    let t2 = -2.0 * (2.0 * ab * ab + am * am + ap * ap + 2.0 * az * az) + 8.0 * kx * kx + 4.0 * kz * kz;
    let t3 = 24.0 * I * az * kx * kx;
    let q = ab * ab + am * ap + az * az + kz * kz;
    let det = kx * kx * (-(am - ap) * (am - ap) + 4.0 * az * az + 4.0 * kz * kz) + q * q;
    (t2, t3, det)
}

pub fn gamma1() -> CMatrix {
    crate::basis::sigma_x().kron(&CMatrix::identity(2))
}

/// psH (generator `Gamma_1`) projection of the four-fold alpha family at
/// `theta1 = theta2 = pi/2`.
pub fn fourfold_psh(alpha: f64) -> Result<Field, SymmetryError> {
    let op = SymmetryOperator::new(SymmetryKind::PsH, gamma1())?;
    symmetrize(fourfold_alpha(alpha, FRAC_PI_2, FRAC_PI_2), &op)
}

/// The psH-symmetric four-band matrix in closed form for real parameters.
pub fn fourfold_psh_matrix(ap: f64, am: f64, az: f64, theta1: f64, theta2: f64, kx: f64, kz: f64) -> CMatrix {
    let h1 = r((am + ap + 2.0 * kx) / 2.0);
    let hzz = r(az - kz * theta1.cos());
    let thzz = r(az + kz * theta1.cos());
    let hmpx = r(-am / 2.0 - ap / 2.0 + kx);
    let hx2 = r(kx * theta2.cos());
    let z = r(0.0);
    m(vec![vec![z, h1, hzz, hx2], vec![hmpx, z, hx2, thzz], vec![-thzz, hx2, z, hmpx], vec![hx2, -hzz, h1, z]])
}

/// `[[-(b+e), 0], [0, h]]` with `h = [[b, c], [d, e]]`.
pub fn three_h1(b: C, c: C, d: C, e: C) -> CMatrix {
    let z = r(0.0);
    m(vec![vec![-(b + e), z, z], vec![z, b, c], vec![z, d, e]])
}

/// `a (+) h_3x3`, entries `a..j` row-major.
pub fn four_h1(e: [C; 10]) -> CMatrix {
    let z = r(0.0);
    m(vec![vec![e[0], z, z, z], vec![z, e[1], e[2], e[3]], vec![z, e[4], e[5], e[6]], vec![z, e[7], e[8], e[9]]])
}

/// `diag(a, b) (+) [[c, d], [e, f]]`.
pub fn four_h2(e: [C; 6]) -> CMatrix {
    let z = r(0.0);
    m(vec![vec![e[0], z, z, z], vec![z, e[1], z, z], vec![z, z, e[2], e[3]], vec![z, z, e[4], e[5]]])
}

/// `[[a, b], [c, d]] (+) [[e, f], [g, h]]`.
pub fn four_h3(e: [C; 8]) -> CMatrix {
    let z = r(0.0);
    m(vec![vec![e[0], e[1], z, z], vec![e[2], e[3], z, z], vec![z, z, e[4], e[5]], vec![z, z, e[6], e[7]]])
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectedSymmetry {
    pub kind: SymmetryKind,
    pub generator: CMatrix,
}

/// A named model instance with its parameters and declared symmetries.
#[derive(Clone, Serialize)]
pub struct Model {
    pub name: String,
    pub params: BTreeMap<String, C>,
    pub momenta: Vec<String>,
    pub symmetries: Vec<ExpectedSymmetry>,
    /// Short statements of the known answers, for reports.
    pub known: Vec<String>,
    #[serde(skip)]
    pub field: Field,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model").field("name", &self.name).field("params", &self.params).finish_non_exhaustive()
    }
}

impl Model {
    pub fn operators(&self) -> Result<Vec<SymmetryOperator>, SymmetryError> {
        self.symmetries.iter().map(|s| SymmetryOperator::new(s.kind, s.generator.clone())).collect()
    }
}

pub const MODELS: [&str; 13] = [
    "kitaev",
    "threefold",
    "threefold_alpha",
    "threefold_pt",
    "sls3_block",
    "sls3_coupled",
    "fourfold",
    "fourfold_alpha",
    "fourfold_psh",
    "three_H1",
    "four_H1",
    "four_H2",
    "four_H3",
];

pub fn default_params(name: &str) -> Option<Vec<(&'static str, C)>> {
    let a = 0.15;
    Some(match name {
        "kitaev" => vec![("J", r(1.0)), ("mu", r(0.5)), ("gamma_l", r(1.25)), ("gamma_g", r(1.25))],
        "threefold" => vec![("alpha_x", r(0.3)), ("alpha_y", r(0.3)), ("alpha_z", I * 0.18f64.sqrt())],
        "threefold_alpha" | "threefold_pt" => vec![("alpha", r(0.3))],
        "sls3_block" => vec![("b", r(1.0)), ("c", r(1.0)), ("d", r(-1.0))],
        "sls3_coupled" => vec![("b", r(1.0)), ("c", r(1.0)), ("d", r(-1.0)), ("d1", I * 0.5), ("d4", r(0.5))],
        "fourfold" => vec![
            ("alpha_p", r(a)),
            ("alpha_m", r(a)),
            ("alpha_z", I * a),
            ("alpha_b", r(0.0)),
            ("theta_1", r(FRAC_PI_2)),
            ("theta_2", r(FRAC_PI_2)),
        ],
        "fourfold_alpha" => vec![("alpha", r(a)), ("theta_1", r(FRAC_PI_2)), ("theta_2", r(FRAC_PI_2))],
        "fourfold_psh" => vec![("alpha", r(0.2))],
        // h_2x2 defective at 0.5, decoupled band at -1
        "three_H1" => vec![("b", r(1.5)), ("c", r(1.0)), ("d", r(-1.0)), ("e", r(-0.5))],
        // h_3x3 = J_3
        "four_H1" => {
            let v = [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
            ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"].into_iter().zip(v.map(r)).collect()
        }
        "four_H2" => {
            let v = [1.0, -1.0, 0.5, 1.0, -0.25, -0.5];
            ["a", "b", "c", "d", "e", "f"].into_iter().zip(v.map(r)).collect()
        }
        // EP2 at 0 and EP2 at 1
        "four_H3" => {
            let v = [0.5, 1.0, -0.25, -0.5, 1.0, 1.0, 0.0, 1.0];
            ["a", "b", "c", "d", "e", "f", "g", "h"].into_iter().zip(v.map(r)).collect()
        }
        _ => return None,
    })
}

/// Instantiate a model by name; `overrides` replace defaults.
pub fn build(name: &str, overrides: &BTreeMap<String, C>) -> Result<Model, ModelError> {
    let defaults = default_params(name).ok_or_else(|| ModelError::Unknown(name.to_string(), MODELS.join(", ")))?;
    let mut params: BTreeMap<String, C> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !params.contains_key(k) {
            let known = defaults.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(", ");
            return Err(ModelError::Param { model: name.to_string(), param: k.clone(), known });
        }
        params.insert(k.clone(), *v);
    }
    let p = |k: &str| params[k];
    let real = |k: &str| -> Result<f64, ModelError> {
        let v = params[k];
        if v.im != 0.0 {
            return Err(ModelError::NotReal { model: name.to_string(), param: k.to_string(), value: v });
        }
        Ok(v.re)
    };
    let one = CMatrix::identity;
    let sym = |kind, generator| ExpectedSymmetry { kind, generator };
    let mk = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let constant = |h: CMatrix| -> Field { Arc::new(ConstantField::new(h, 0)) };
    use SymmetryKind::*;
    let (field, momenta, symmetries, known): (Field, Vec<String>, Vec<ExpectedSymmetry>, Vec<&str>) = match name {
        "kitaev" => {
            let (j, mu, gl, gg) = (real("J")?, real("mu")?, real("gamma_l")?, real("gamma_g")?);
            (
                kitaev(j, mu, gl, gg),
                mk(&["k"]),
                vec![
                    sym(TrsDag, crate::basis::sigma_z()),
                    sym(PhsDag, one(2)),
                    sym(Cs, crate::basis::sigma_z()),
                ],
                vec!["EP2 at k = 0 iff 2 sqrt(gamma_l gamma_g) = 2J + mu", "EP2 at k = pi iff 2 sqrt(gamma_l gamma_g) = 2J - mu"],
            )
        }
        "threefold" | "threefold_alpha" => {
            let f = if name == "threefold" {
                threefold(p("alpha_x"), p("alpha_y"), p("alpha_z"))
            } else {
                threefold_alpha(real("alpha")?)
            };
            (
                f,
                mk(&["k_x", "k_y"]),
                vec![sym(PsCs, one(3).scale(r(-1.0)))],
                vec!["alpha family: EP3 at k -> 0, class EP3-I", "det H = 0 identically"],
            )
        }
        "threefold_pt" => {
            let pt = CMatrix::from_diag(&[r(1.0), r(-1.0), r(1.0)]);
            (
                threefold_pt(real("alpha")?),
                mk(&["k_x", "k_y"]),
                vec![sym(PsCs, one(3).scale(r(-1.0))), sym(Pt, pt)],
                vec!["EP2s on the ring Omega_alpha = 0", "zero-energy flat band decoupled"],
            )
        }
        "sls3_block" => (
            constant(sls3_block(p("b"), p("c"), p("d"))),
            vec![],
            vec![],
            vec!["eigenvalues 0, +-sqrt(b^2 + cd)", "b^2 = -cd: triple eigenvalue, EP2"],
        ),
        "sls3_coupled" => (
            constant(sls3_coupled(p("b"), p("c"), p("d"), p("d1"), p("d4"))),
            vec![],
            vec![],
            vec!["one-sided coupling of the zero band promotes the EP2 to an EP3"],
        ),
        "fourfold" | "fourfold_alpha" => {
            let (t1, t2) = (real("theta_1")?, real("theta_2")?);
            let f = if name == "fourfold" {
                fourfold(p("alpha_p"), p("alpha_m"), p("alpha_z"), p("alpha_b"), t1, t2)
            } else {
                fourfold_alpha(real("alpha")?, t1, t2)
            };
            (
                f,
                mk(&["k_x", "k_z"]),
                vec![],
                vec!["alpha family: fourfold degeneracy at the origin, class EP4-0", "EP2s near k_x = k_z = 0.47 for alpha = 0.15"],
            )
        }
        "fourfold_psh" => (
            fourfold_psh(real("alpha")?)?,
            mk(&["k_x", "k_z"]),
            vec![sym(PsH, gamma1())],
            vec!["EP2s at k_x = +-alpha", "all bands doubly degenerate", "kappa = 0"],
        ),
        "three_H1" => (
            constant(three_h1(p("b"), p("c"), p("d"), p("e"))),
            vec![],
            vec![],
            vec!["EP2 from h_2x2 when (b - e)^2 + 4cd = 0"],
        ),
        "four_H1" => {
            let e = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"].map(p);
            (constant(four_h1(e)), vec![], vec![], vec!["EP3 from h_3x3 when its eta and nu vanish"])
        }
        "four_H2" => {
            let e = ["a", "b", "c", "d", "e", "f"].map(p);
            (constant(four_h2(e)), vec![], vec![], vec!["EP2 from h_2x2 plus two trivial bands"])
        }
        "four_H3" => {
            let e = ["a", "b", "c", "d", "e", "f", "g", "h"].map(p);
            (constant(four_h3(e)), vec![], vec![], vec!["two coexisting EP2s when both blocks are defective"])
        }
        _ => unreachable!("default_params covers every name"),
    };
    Ok(Model {
        name: name.to_string(),
        params,
        momenta,
        symmetries,
        known: known.into_iter().map(String::from).collect(),
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charpoly::{constraints, CharPoly};
    use crate::epfinder::analyze_matrix;
    use crate::symmetry::check_symmetry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(arity: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| (0..arity).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect()
    }

    fn rel(a: C, b: C) -> f64 {
        (a - b).norm() / b.norm().max(1.0)
    }

    #[test]
    fn declared_symmetries_hold() {
        for name in MODELS {
            let model = build(name, &BTreeMap::new()).unwrap();
            let ks = samples(model.field.arity(), 100, 1);
            for op in model.operators().unwrap() {
                let res = check_symmetry(model.field.as_ref(), &op, &ks).unwrap();
                assert!(res < 1e-13, "{name} {:?}: {res}", op.kind);
            }
        }
    }

    #[test]
    fn kitaev_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (j, mu, gl, gg, k) = (rng.gen_range(0.1..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(-3.2..3.2));
            let h = kitaev(j, mu, gl, gg).eval(&[k]).unwrap();
            assert!(h.trace().norm() < 1e-14);
            let det = kitaev_det(j, mu, gl, gg, k);
            assert!(rel(h.det(), r(det)) < 1e-12);
            let cs = constraints(&h).unwrap();
            assert!(rel(cs.eta, r(-det)) < 1e-12);
            assert!(cs.nu.norm() < 1e-12);
        }
        // 2 sqrt(gl gg) = 2J + mu
        assert!(kitaev_det(1.0, 0.5, 1.25, 1.25, 0.0).abs() < 1e-14);
    }

    #[test]
    fn threefold_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut c = || C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (ax, ay, az) = (c(), c(), c());
            let (kx, ky) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let h = threefold(ax, ay, az).eval(&[kx, ky]).unwrap();
            assert!(h.trace().norm() < 1e-14);
            assert!(h.det().norm() < 1e-12);
            let want = threefold_half_trace2(ax, ay, az, kx, ky);
            assert!(rel(-h.pow(2).trace() / 2.0, want) < 1e-12);
        }
    }

    #[test]
    fn threefold_small_k_pair() {
        let alpha = 0.3;
        let f = threefold_alpha(alpha);
        let (kx, ky) = (1e-3, 2e-3);
        let ev = f.eval(&[kx, ky]).unwrap().eigenvalues().unwrap();
        let e2 = I * (C::new(-kx * kx - ky * ky, 2.0 * alpha * (kx + ky))).sqrt();
        // leading order agreement; corrections are O(k^2)
        let best = ev.iter().map(|z| (z - e2).norm().min((z + e2).norm())).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-4 * e2.norm() * 10.0, "{ev:?} vs {e2}");
        assert!(ev.iter().any(|z| z.norm() < 1e-12));
    }

    #[test]
    fn threefold_pt_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let alpha = rng.gen_range(-1.0..1.0);
            let (kx, ky) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let h = threefold_pt(alpha).eval(&[kx, ky]).unwrap();
            let cp = CharPoly::from_matrix(&h);
            // lambda^3 - s1 lambda^2 + s2 lambda - s3 = lambda (lambda^2 + s2)
            assert!(cp.sigma(1).norm() < 1e-13);
            assert!(cp.sigma(3).norm() < 1e-13);
            let half = h.pow(2).trace() / 2.0;
            assert!(rel(half, r(-omega(alpha, kx, ky))) < 1e-12);
            assert!(rel(-cp.sigma(2), half) < 1e-12);
        }
    }

    #[test]
    fn sls3_block_cases() {
        let h = sls3_block(r(1.0), r(1.0), r(-1.0));
        let rep = analyze_matrix(&h, &[], 1e-6, 1e-8).unwrap();
        assert_eq!((rep.algebraic_mult, rep.geometric_mult, rep.ep_order), (3, 2, 2));
        let mut ev = sls3_block(r(1.0), r(0.0), r(0.0)).eigenvalues().unwrap();
        crate::matrix::sort_complex(&mut ev);
        assert!(ev.iter().zip([-1.0, 0.0, 1.0]).all(|(a, b)| (a - b).norm() < 1e-14));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut c = || C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (b, cc, d) = (c(), c(), c());
            let s = (b * b + cc * d).sqrt();
            let ev = sls3_block(b, cc, d).eigenvalues().unwrap();
            assert!(crate::charpoly::spectral_distance(&ev, &[r(0.0), s, -s]) < 1e-12);
        }
        let h = sls3_coupled(r(1.0), r(1.0), r(-1.0), I * 0.5, r(0.5));
        let rep = analyze_matrix(&h, &[], 1e-6, 1e-8).unwrap();
        assert_eq!((rep.algebraic_mult, rep.jordan_blocks.clone()), (3, vec![3]));
    }

    #[test]
    fn fourfold_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let mut c = || C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (ap, am, az, ab) = (c(), c(), c(), c());
            let (kx, kz) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let h = fourfold_matrix(ap, am, az, ab, FRAC_PI_2, FRAC_PI_2, kx, kz);
            let (t2, t3, det) = fourfold_invariants(ap, am, az, ab, kx, kz);
            assert!(h.trace().norm() < 1e-13);
            assert!(rel(h.pow(2).trace(), t2) < 1e-12);
            assert!(rel(h.pow(3).trace(), t3) < 1e-12);
            assert!(rel(h.det(), det) < 1e-12);
        }
    }

    #[test]
    fn fourfold_alpha_constraints() {
        let a = 0.15;
        let f = fourfold_alpha(a, FRAC_PI_2, FRAC_PI_2);
        for k in samples(2, 50, 7) {
            let (kx, kz) = (k[0], k[1]);
            let cs = constraints(&f.eval(&k).unwrap()).unwrap();
            let kappa = cs.kappa.unwrap();
            assert!(rel(kappa, r(-64.0 * a * kx * kx)) < 1e-12);
            let s = -4.0 * kx * kx - 2.0 * kz * kz;
            let q = kx * kx * (4.0 * kz * kz - 4.0 * a * a) + kz.powi(4);
            assert!(rel(cs.eta, r(s * s + 12.0 * q)) < 1e-12);
            let half_nu = 864.0 * a * a * kx.powi(4) + s * s * s - 36.0 * s * q;
            assert!(rel(cs.nu / 2.0, r(half_nu)) < 1e-12);
        }
        // H(0)^2 = 0 with rank 2: a fourfold eigenvalue with two Jordan blocks
        let h0 = f.eval(&[0.0, 0.0]).unwrap();
        assert!(h0.pow(2).max_abs() < 1e-15);
        let rep = analyze_matrix(&h0, &[0.0, 0.0], 1e-6, 1e-8).unwrap();
        assert_eq!(rep.jordan_blocks, vec![2, 2]);
    }

    #[test]
    fn fourfold_psh_projection_matches_closed_form() {
        let g1 = gamma1();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let v: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h = fourfold_matrix(r(v[0]), r(v[1]), r(v[2]), r(0.0), v[3], v[4], v[5], v[6]);
            let proj = (&h + &(&(&g1 * &h.adjoint()) * &g1)).scale(r(0.5));
            let want = fourfold_psh_matrix(v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
            assert!(proj.max_diff(&want) < 1e-14);
        }
    }

    #[test]
    fn fourfold_psh_spectrum() {
        let a = 0.2;
        let f = fourfold_psh(a).unwrap();
        for k in samples(2, 50, 9) {
            let h = f.eval(&k).unwrap();
            let cp = CharPoly::from_matrix(&h);
            // (-a^2 - l^2 + kx^2)^2 = l^4 + 2(a^2 - kx^2) l^2 + (kx^2 - a^2)^2
            let x = k[0] * k[0] - a * a;
            let want = [r(0.0), r(2.0 * -x), r(0.0), r(x * x)];
            for (j, w) in want.iter().enumerate() {
                assert!(rel(cp.sigma(j + 1), *w) < 1e-12, "sigma_{}", j + 1);
            }
            let cs = constraints(&h).unwrap();
            assert!(cs.kappa.unwrap().norm() < 1e-12);
            assert!(rel(cs.eta, r(16.0 * x * x)) < 1e-12);
            assert!(rel(cs.nu, r(128.0 * x * x * x)) < 1e-12);
        }
        let rep = analyze_matrix(&f.eval(&[a, 0.0]).unwrap(), &[a, 0.0], 1e-6, 1e-8).unwrap();
        assert_eq!((rep.algebraic_mult, rep.jordan_blocks.clone()), (4, vec![2, 2]), "{rep:?}");
    }

    #[test]
    fn block_models() {
        let no = BTreeMap::new();
        let rep = |name: &str| {
            let m = build(name, &no).unwrap();
            crate::epfinder::clusters(&m.field.eval(&[]).unwrap(), 1e-6, 1e-8).unwrap()
        };
        let h1 = rep("three_H1");
        assert_eq!(h1.iter().filter(|c| c.is_ep()).count(), 1);
        assert!(h1.iter().any(|c| c.jordan_blocks == vec![2] && (c.eigenvalue - 0.5).norm() < 1e-7));
        let f1 = rep("four_H1");
        assert!(f1.iter().any(|c| c.jordan_blocks == vec![3]));
        let f2 = rep("four_H2");
        assert_eq!(f2.iter().filter(|c| c.is_ep()).count(), 1);
        assert_eq!(f2.len(), 3);
        let f3 = rep("four_H3");
        assert_eq!(f3.iter().filter(|c| c.is_ep() && c.jordan_blocks == vec![2]).count(), 2);
    }

    #[test]
    fn registry_errors() {
        assert!(matches!(build("nope", &BTreeMap::new()), Err(ModelError::Unknown(..))));
        let bad: BTreeMap<String, C> = [("beta".to_string(), r(1.0))].into();
        assert!(matches!(build("kitaev", &bad), Err(ModelError::Param { .. })));
        let cplx: BTreeMap<String, C> = [("J".to_string(), I)].into();
        assert!(matches!(build("kitaev", &cplx), Err(ModelError::NotReal { .. })));
    }
}
