use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ep_atlas::dispersion::*;
use ep_atlas::field::{ConjugatedField, Field, PencilField};
use ep_atlas::matrix::CMatrix;
use ep_atlas::models;

fn jordan_pencil(n: usize, j: usize, a: C) -> PencilField {
    let mut d = CMatrix::zeros(n);
    d[(n - 1, j - 1)] = a;
    PencilField::new(CMatrix::jordan(n, C::new(0.0, 0.0)), d).unwrap()
}

#[test]
fn exponent_universality() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = DispersionConfig::default();
    for n in 3..=5 {
        for j in 1..n {
            let want = 1.0 / (n + 1 - j) as f64;
            for _ in 0..20 {
                let a = C::from_polar(rng.gen_range(0.2..2.0), rng.gen_range(0.0..std::f64::consts::TAU));
                let fit = scaling_exponents(&jordan_pencil(n, j, a), &[0.0], &[1.0], &cfg).unwrap();
                assert!(fit.reliable, "n={n} j={j} a={a}");
                assert_eq!(fit.flat_bands, j - 1, "n={n} j={j} a={a}");
                let p = fit.leading_exponent.unwrap();
                assert!((p - want).abs() < 0.05, "n={n} j={j} a={a}: {p} vs {want}");
            }
        }
    }
}

#[test]
fn threefold_type_one_with_square_root_pair() {
    let f = models::threefold_alpha(0.3);
    let cfg = DispersionConfig::default();
    let dir = default_direction(2);
    let c = classify(f.as_ref(), &[0.0, 0.0], &dir, &cfg).unwrap();
    assert_eq!(c.label, EpLabel::Ep3_I);
    assert!(c.evidence.contains(&Quantity::Det));
    let fit = scaling_exponents(f.as_ref(), &[0.0, 0.0], &dir, &cfg).unwrap();
    assert_eq!(fit.flat_bands, 1);
    for b in fit.bands.iter().filter(|b| !b.flat) {
        assert!((b.exponent.unwrap() - 0.5).abs() < 0.05, "{b:?}");
    }
    let flat = fit.bands.iter().find(|b| b.flat).unwrap();
    assert!(flat.max_splitting < 1e-8);
}

#[test]
fn fourfold_origin_is_type_zero() {
    let f = models::fourfold_alpha(0.15, FRAC_PI_2, FRAC_PI_2);
    let c = classify(f.as_ref(), &[0.0, 0.0], &default_direction(2), &DispersionConfig::default()).unwrap();
    assert_eq!(c.order, 4);
    assert_eq!(c.label, EpLabel::Ep4_0);
    assert!(c.evidence.is_empty(), "{:?}", c.evidence);
}

#[test]
fn odd_sublattice_field_disperses_with_square_root() {
    // psCS-symmetric threefold family: det vanishes, so the EP3 splits as w^(1/2)
    let f = models::threefold_alpha(0.45);
    let fit = scaling_exponents(f.as_ref(), &[0.0, 0.0], &[1.0, 0.3], &DispersionConfig::default()).unwrap();
    assert!((fit.leading_exponent.unwrap() - 0.5).abs() < 0.05);
    assert_eq!(fit.flat_bands, 1);
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    // product of two Householder reflectors
    let mut u = CMatrix::identity(n);
    for _ in 0..2 {
        let v: Vec<C> = (0..n).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let r = CMatrix::from_fn(n, |i, j| {
            let d = if i == j { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
            d - v[i] * v[j].conj() * (2.0 / vv)
        });
        u = &u * &r;
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn labels_invariant_under_unitary_conjugation(seed in 0u64..1000, j in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = C::new(rng.gen_range(0.3..1.5), rng.gen_range(-1.0..1.0));
        let base: Field = Arc::new(jordan_pencil(4, j, a));
        let cfg = DispersionConfig::default();
        let want = classify(base.as_ref(), &[0.0], &[1.0], &cfg).unwrap().label;
        let conj = ConjugatedField::new(base, random_unitary(4, &mut rng)).unwrap();
        let got = classify(&conj, &[0.0], &[1.0], &cfg).unwrap().label;
        prop_assert_eq!(got, want);
    }
}
