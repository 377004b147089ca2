use nctorus_core::geometry::{apply_word, in_fundamental_domain, word_matrix};
use nctorus_core::lll::residue_map_is_bijective;
use nctorus_core::nc_torus::{q_commutation_residual, weyl_cocycle_residual};
use nctorus_core::*;
use proptest::prelude::*;

fn tau_strategy() -> impl Strategy<Value = ModularParameter> {
    (-3.0f64..3.0, 0.05f64..4.0).prop_map(|(re, im)| ModularParameter::new(re, im).unwrap())
}

fn coprime_pair(max_product: u32) -> impl Strategy<Value = (u32, u32)> {
    (1u32..=max_product, 1u32..=max_product)
        .prop_filter("coprime with bounded product", move |&(m, n)| m * n <= max_product && geometry::gcd(m as u64, n as u64) == 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn complex_structure_squares_to_minus_one(t in tau_strategy()) {
        let j = complex_structure_from_tau(&t);
        prop_assert!(j.square_residual() < 1e-9 * (1.0 + t.norm_sqr() / t.im()).powi(2));
        prop_assert!((j.det() - 1.0).abs() < 1e-9 * (1.0 + t.norm_sqr() / t.im()).powi(2));
    }

    #[test]
    fn metric_is_positive_with_unit_determinant(t in tau_strategy()) {
        let g = metric_from_tau(&t);
        let scale = 1.0 + t.norm_sqr() / t.im();
        prop_assert!(g.is_symmetric(0.0));
        prop_assert!((g.det() - 1.0).abs() < 1e-9 * scale * scale);
        let ev = g.eigenvalues();
        prop_assert!(ev[0] > 0.0 && ev[1] > 0.0);
    }

    #[test]
    fn squeeze_roundtrip(t in tau_strategy()) {
        let back = tau_from_squeeze(&squeeze_from_tau(&t));
        prop_assert!((back.as_complex() - t.as_complex()).norm() < 1e-9 * (1.0 + t.norm_sqr()) / t.im().min(1.0));
    }

    #[test]
    fn reduction_lands_in_domain_and_is_idempotent(t in tau_strategy()) {
        let red = reduce_to_fundamental_domain(&t);
        prop_assert!(in_fundamental_domain(&red.tau));
        let m = word_matrix(&red.word);
        prop_assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], 1);
        let back = apply_word(&red.word, &red.tau);
        prop_assert!((back.as_complex() - t.as_complex()).norm() < 1e-8 * (1.0 + t.norm_sqr()));
        let again = reduce_to_fundamental_domain(&red.tau);
        prop_assert!((again.tau.as_complex() - red.tau.as_complex()).norm() < 1e-12);
    }

    #[test]
    fn residue_map_is_a_bijection((m, n) in coprime_pair(36)) {
        prop_assert!(residue_map_is_bijective(m, n));
    }

    #[test]
    fn weyl_cocycle_holds(
        (m, n) in coprime_pair(12),
        a in (-4i64..=4, -4i64..=4),
        b in (-4i64..=4, -4i64..=4),
        alpha in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let angles = VacuumAngles::new(alpha.0, alpha.1);
        let r = weyl_cocycle_residual(WeylWord::new(a.0, a.1), WeylWord::new(b.0, b.1), m, n, &angles);
        prop_assert!(r < 1e-12, "residual {}", r);
        prop_assert!(q_commutation_residual(m, n, &angles) < 1e-12);
    }

    #[test]
    fn weyl_elements_are_unitary((m, n) in coprime_pair(12), a in (-5i64..=5, -5i64..=5)) {
        let w = weyl_element(WeylWord::new(a.0, a.1), m, n, &VacuumAngles::zero());
        prop_assert!(w.unitarity_residual() < 1e-12);
    }

    #[test]
    fn theta_is_periodic_in_one(level in 1u32..=12, x in 0.0f64..1.0, y in 0.0f64..1.0, t in tau_strategy()) {
        let t = reduce_to_fundamental_domain(&t).tau;
        let spec = ThetaSpec::new(level, level / 2).unwrap();
        let z = num_complex::Complex64::new(x, 0.0) + t.as_complex() * y;
        let pol = TruncationPolicy::default();
        let (r1, r2) = theta::quasi_periodicity_residuals(spec, z, &t, &pol).unwrap();
        prop_assert!(r1 < 1e-9 && r2 < 1e-9, "{} {}", r1, r2);
    }
}
