use nctorus_core::lll::{cell_grid, DEFAULT_GRID};
use nctorus_core::nc_torus::{sine_structure_residual, weyl_span_dimension};
use nctorus_core::partition::{convergence_floor, is_monotone_nonincreasing, refinement_sequence};
use nctorus_core::wavefield::{holonomy_residual, smooth_test_field, window_grid};
use nctorus_core::*;

#[test]
fn reference_values() {
    let pol = TruncationPolicy::default();
    let v = theta(ThetaSpec::new(1, 0).unwrap(), C64::new(0.0, 0.0), &ModularParameter::i(), &pol).unwrap();
    assert!((v - C64::new(1.086_434_811_213_308, 0.0)).norm() < 1e-12);
    let eta = dedekind_eta(&ModularParameter::i(), &pol).unwrap();
    assert!((eta.re - 0.768_225_422_326_056_6).abs() < 1e-12);
}

#[test]
fn basis_rank_and_holonomy_agree() {
    let t = ModularParameter::new(0.3, 1.1).unwrap();
    for (m, n) in [(2, 1), (3, 2), (1, 3)] {
        let b = LLLBasis::new(m, n, t, VacuumAngles::zero(), TruncationPolicy::default()).unwrap();
        let grid = cell_grid(&t, DEFAULT_GRID);
        assert_eq!(gram_rank(&b, &grid, 1e-8).unwrap(), (m * n) as usize);
        let flux = Flux::new(n, m).unwrap();
        let f = smooth_test_field(t, b.weight(), 7);
        assert!(holonomy_residual(&flux, &t, &f, &window_grid(1.5, 6)) < 1e-9);
    }
}

#[test]
fn morita_pair() {
    for m in 2..=7u32 {
        for n in 1..m {
            if nctorus_core::geometry::gcd(m as u64, n as u64) != 1 {
                continue;
            }
            let z = VacuumAngles::zero();
            assert_eq!(commutant_dimension(&[clock_matrix(m, n, z.alpha1), shift_matrix(m, z.alpha2)]).unwrap(), 1);
            assert_eq!(weyl_span_dimension(m, n), (m * m) as usize);
        }
    }
    assert!(sine_structure_residual(7, 3, WeylWord::new(2, 5), WeylWord::new(-1, 4)) < 1e-12);
}

#[test]
fn partition_refinement_is_monotone() {
    let pol = TruncationPolicy::default();
    let quad = QuadratureSpec::new(16, QuadratureScheme::GaussLegendre).unwrap();
    let seq = refinement_sequence(Flux::new(2, 3).unwrap(), VacuumAngles::zero(), ModularParameter::new(0.3, 1.1).unwrap(), &quad, &pol, 3).unwrap();
    let t: Vec<f64> = seq.iter().map(|(_, r)| r.t_residual).collect();
    let s: Vec<f64> = seq.iter().map(|(_, r)| r.s_residual).collect();
    assert!(is_monotone_nonincreasing(&t, convergence_floor(&pol)), "{t:?}");
    assert!(is_monotone_nonincreasing(&s, convergence_floor(&pol)), "{s:?}");
    assert!(s[2] < 1e-3);
}
