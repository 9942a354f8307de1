//! Property tests for the algebraic invariants: exact identities of the
//! model nonlinearity, the positive/negative split, scaling laws of the
//! quadrature operations, and rejection of broken exponent chains.

use nehari_kirchhoff::mesh::{DiscreteFunction, Mesh1d};
use nehari_kirchhoff::nonlinearity::NonlinearitySpec;
use nehari_kirchhoff::problem::{validate_config, ProblemConfig};
use nehari_kirchhoff::quadrature;
use proptest::prelude::*;

fn desk() -> nehari_kirchhoff::problem::ValidatedConfig {
    validate_config(ProblemConfig::default()).unwrap()
}

fn conforming(values: Vec<f64>) -> DiscreteFunction {
    let mut values = values;
    let n = values.len();
    values[0] = 0.0;
    values[n - 1] = 0.0;
    DiscreteFunction::new(Mesh1d::new(-1.0, 1.0, n), values)
}

proptest! {
    #[test]
    fn euler_identity(x in -1.0f64..1.0, u in -10.0f64..10.0) {
        let sp = NonlinearitySpec::from_config(&desk());
        let lhs = sp.q * sp.f_primitive(x, u);
        let rhs = u * sp.f_eval(x, u);
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        prop_assert!((lhs - rhs).abs() / scale <= 1e-12);
    }

    #[test]
    fn primitive_homogeneity(x in -1.0f64..1.0, u in -3.0f64..3.0, t in 0.01f64..100.0) {
        let sp = NonlinearitySpec::from_config(&desk());
        let lhs = sp.f_primitive(x, t * u);
        let rhs = t.powf(sp.q) * sp.f_primitive(x, u);
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        prop_assert!((lhs - rhs).abs() / scale <= 1e-11);
    }

    #[test]
    fn split_reassembles(values in proptest::collection::vec(-5.0f64..5.0, 9..33)) {
        let u = conforming(values);
        let plus = u.positive_part();
        let minus = u.negative_part();
        for i in 0..u.values.len() {
            prop_assert_eq!(u.values[i], plus.values[i] - minus.values[i]);
            prop_assert!(plus.values[i] >= 0.0 && minus.values[i] >= 0.0);
        }
    }

    #[test]
    fn split_pairwise_inequalities(values in proptest::collection::vec(-2.0f64..2.0, 9..17)) {
        let u = conforming(values);
        let minus = u.negative_part();
        for i in 0..u.values.len() {
            for j in 0..u.values.len() {
                let du = u.values[i] - u.values[j];
                let dm = minus.values[i] - minus.values[j];
                prop_assert!(du * dm <= -dm * dm + 1e-15);
            }
        }
    }

    #[test]
    fn broken_exponent_chain_rejected(q in 0.1f64..3.0) {
        // anything at or below p theta = 3 must be refused
        let mut cfg = ProblemConfig::default();
        cfg.q = q;
        prop_assert!(validate_config(cfg).is_err());
    }

    #[test]
    fn config_parser_never_panics(text in "[ -~\n]{0,200}") {
        let _ = nehari_kirchhoff::problem::parse_config(&text);
    }

    #[test]
    fn config_parser_accepts_noisy_valid_files(
        lambda in 0.001f64..10.0,
        gauss in 1usize..8,
        comment in "[ a-z#=0-9]{0,30}",
    ) {
        let text = format!(
            "# {comment}\nlambda = {lambda}\nquad.gauss = {gauss}\n  q   =   4.0  # trailing\n"
        );
        let cfg = nehari_kirchhoff::problem::parse_config(&text).unwrap();
        prop_assert!((cfg.lambda - lambda).abs() <= 1e-15 * lambda);
        prop_assert_eq!(cfg.quad.gauss_points_per_cell, gauss);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn seminorm_scaling(values in proptest::collection::vec(-1.0f64..1.0, 17..18), t in 0.1f64..10.0) {
        let cfg = desk();
        let u = conforming(values);
        let base = quadrature::gagliardo_p(&u, &cfg).unwrap();
        let scaled = quadrature::gagliardo_p(&u.scale(t), &cfg).unwrap();
        let expect = t.powf(cfg.p) * base;
        prop_assert!((scaled - expect).abs() <= 1e-10 * expect.abs().max(1e-300));
    }

    #[test]
    fn lp_scaling(values in proptest::collection::vec(-1.0f64..1.0, 17..18), t in 0.1f64..10.0, r in 1.0f64..10.0) {
        let cfg = desk();
        let u = conforming(values);
        let base = quadrature::lp_norm_p(&u, r, &cfg);
        let scaled = quadrature::lp_norm_p(&u.scale(t), r, &cfg);
        let expect = t.powf(r) * base;
        prop_assert!((scaled - expect).abs() <= 1e-10 * expect.abs().max(1e-300));
    }

    #[test]
    fn pairing_is_norm_on_the_diagonal(values in proptest::collection::vec(-1.0f64..1.0, 17..18)) {
        let cfg = desk();
        let u = conforming(values);
        let norm = quadrature::gagliardo_p(&u, &cfg).unwrap();
        let pair = quadrature::weak_pairing(&u, &u, &cfg).unwrap();
        prop_assert_eq!(norm, pair);
    }
}
