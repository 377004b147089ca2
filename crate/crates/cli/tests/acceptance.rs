//! Acceptance battery: one line per criterion, nonzero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nctorus_core::geometry::{gcd, in_fundamental_domain};
use nctorus_core::lll::{cell_grid, DEFAULT_GRID, EIGENPHASE_TOL};
use nctorus_core::linalg::{identity, kron, max_abs_diff, nan_max};
use nctorus_core::nc_torus::{
    dual_commutation_residual, q_commutation_residual, sine_structure_residual, weyl_cocycle_residual,
    weyl_span_dimension,
};
use nctorus_core::partition::{convergence_floor, is_monotone_nonincreasing, refinement_sequence};
use nctorus_core::theta::{eta_functional_residuals, orthogonality_residual, quasi_periodicity_residuals};
use nctorus_core::wavefield::{
    commutator_phase, ground_state, group_law_residual, holonomy_residual, lattice_displacement, sine_bracket_residual,
    smooth_test_field, window_grid,
};
use nctorus_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome { passed, summary: summary.into() }
}

fn worst(vals: impl IntoIterator<Item = f64>) -> f64 {
    vals.into_iter().fold(0.0, nan_max)
}

fn coprime_pairs(max_product: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for m in 1..=max_product {
        for n in 1..=max_product / m {
            if gcd(m as u64, n as u64) == 1 {
                out.push((m, n));
            }
        }
    }
    out
}

fn tau(re: f64, im: f64) -> ModularParameter {
    ModularParameter::new(re, im).unwrap()
}

fn theta_quasi_periodicity() -> Outcome {
    let pol = TruncationPolicy::with_epsilon(1e-12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut w: f64 = 0.0;
    for t in [ModularParameter::i(), tau(0.3, 1.1), tau(0.0, 2.0)] {
        let zs: Vec<C64> = (0..100).map(|_| rng.random::<f64>() + t.as_complex() * rng.random::<f64>()).collect();
        for k in [1, 2, 3, 6, 12] {
            for r in 0..k {
                let spec = ThetaSpec::new(k, r).unwrap();
                for &z in &zs {
                    let (a, b) = quasi_periodicity_residuals(spec, z, &t, &pol).unwrap();
                    w = worst([w, a, b]);
                }
            }
        }
    }
    outcome(w < 1e-9, format!("max residual {w:.3e} (tol 1e-9)"))
}

fn eta_functional_equations() -> Outcome {
    let pol = TruncationPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut taus = Vec::new();
    while taus.len() < 20 {
        let t = tau(rng.random_range(-0.5..0.5), rng.random_range(0.85..3.0));
        if in_fundamental_domain(&t) {
            taus.push(t);
        }
    }
    let w = worst(taus.iter().flat_map(|t| {
        let (a, b) = eta_functional_residuals(t, &pol).unwrap();
        [a, b]
    }));
    outcome(w < 1e-10, format!("max residual {w:.3e} over 20 moduli (tol 1e-10)"))
}

fn quantum_torus_relations() -> Outcome {
    let angles = VacuumAngles::new(0.7, -1.2);
    let pairs = [([1i64, 0i64], [0i64, 1i64]), ([2, -1], [1, 3]), ([1, 1], [-1, 2]), ([3, 2], [-2, 1])];
    let t = tau(0.3, 1.1);
    let window = window_grid(2.5, 12);
    let mut matrix: f64 = 0.0;
    let mut operator: f64 = 0.0;
    for (m, n) in coprime_pairs(12) {
        matrix = worst([matrix, q_commutation_residual(m, n, &angles), q_commutation_residual(m, n, &VacuumAngles::zero())]);
        for &(a, b) in &pairs {
            let (wa, wb) = (WeylWord::new(a[0], a[1]), WeylWord::new(b[0], b[1]));
            matrix = worst([matrix, weyl_cocycle_residual(wa, wb, m, n, &angles), sine_structure_residual(m, n, wa, wb)]);
        }
        let flux = Flux::new(n, m).unwrap();
        for f in [ground_state(t, t.im()), smooth_test_field(t, t.im(), (m * 31 + n) as u64)] {
            operator = worst([operator, holonomy_residual(&flux, &t, &f, &window)]);
            for &(a, b) in &pairs {
                operator = worst([operator, group_law_residual(a, b, &flux, &t, &f, &window), sine_bracket_residual(a, b, &flux, &t, &f, &window)]);
            }
        }
    }
    outcome(matrix < 1e-12 && operator < 1e-9, format!("matrix {matrix:.3e} (tol 1e-12), operator {operator:.3e} (tol 1e-9)"))
}

fn holonomy() -> Outcome {
    let t = tau(0.3, 1.1);
    let window = window_grid(2.5, 12);
    let mut op: f64 = 0.0;
    let mut mat: f64 = 0.0;
    for (m, n) in [(2, 1), (3, 2), (5, 3)] {
        let flux = Flux::new(n, m).unwrap();
        let q = flux.q();
        for f in [ground_state(t, t.im()), smooth_test_field(t, t.im(), 5)] {
            let d1 = lattice_displacement([1, 0], &flux, &t, f.weight());
            let d2 = lattice_displacement([0, 1], &flux, &t, f.weight());
            let (phase, _) = commutator_phase(d1, d2, &f, &window);
            op = worst([op, (phase - q).norm()]);
        }
        let c = clock_matrix(m, n, 0.0).into_matrix();
        let s = shift_matrix(m, 0.0).into_matrix();
        let plaquette = &c * &s * c.adjoint() * s.adjoint();
        mat = worst([mat, max_abs_diff(&plaquette, &(identity(m as usize) * q))]);
    }
    outcome(op < 1e-10 && mat < 1e-10, format!("phase error operator {op:.3e}, matrix {mat:.3e} (tol 1e-10)"))
}

fn degeneracy() -> Outcome {
    let t = tau(0.3, 1.1);
    let grid = cell_grid(&t, DEFAULT_GRID);
    let mut bad = Vec::new();
    let pairs = coprime_pairs(12);
    for &(m, n) in &pairs {
        let b = LLLBasis::new(m, n, t, VacuumAngles::zero(), TruncationPolicy::default()).unwrap();
        let rank = gram_rank(&b, &grid, 1e-8).unwrap();
        if rank != (m * n) as usize {
            bad.push(format!("{m}/{n}: rank {rank}"));
        }
    }
    outcome(bad.is_empty(), format!("{} flux pairs, mismatches {bad:?}", pairs.len()))
}

fn module_structure() -> Outcome {
    let t = tau(0.3, 1.1);
    let grid = cell_grid(&t, DEFAULT_GRID);
    let mut notes = Vec::new();
    let mut ok = true;
    for (m, n) in [(3, 2), (2, 5)] {
        for angles in [VacuumAngles::zero(), VacuumAngles::new(0.9, -0.3)] {
            let b = LLLBasis::new(m, n, t, angles, TruncationPolicy::default()).unwrap();
            match eigenphase_table(&b, &grid, EIGENPHASE_TOL) {
                Ok(table) => {
                    let spread = worst(table.entries.iter().flat_map(|e| {
                        [e.left_clock.spread, e.left_shift.spread, e.right_clock.spread, e.right_shift.spread]
                    }));
                    let multiset = table.clock_multiset_residual(&b);
                    let pred = table.prediction_residual(&b);
                    let pass = table.calibration.is_canonical() && spread < 1e-7 && multiset < 1e-7 && pred < 1e-7;
                    ok &= pass;
                    notes.push(format!("{m}/{n}: spread {spread:.1e}, multiset {multiset:.1e}"));
                }
                Err(e) => {
                    ok = false;
                    notes.push(format!("{m}/{n}: {e}"));
                }
            }
        }
    }
    outcome(ok, notes.join("; "))
}

fn morita_commutant() -> Outcome {
    let mut ok = true;
    let mut commute: f64 = 0.0;
    for m in 1..=7u32 {
        for n in 1..=7u32 {
            if gcd(m as u64, n as u64) != 1 {
                continue;
            }
            let dim = commutant_dimension(&[clock_matrix(m, n, 0.0), shift_matrix(m, 0.0)]).unwrap();
            ok &= dim == 1 && weyl_span_dimension(m, n) == (m * m) as usize;
            let a = VacuumAngles::new(0.4, 1.3);
            let (r1, r2) = dual_matrices(m, n, &a);
            let (im, in_) = (identity(m as usize), identity(n as usize));
            for l in [clock_matrix(m, n, a.alpha1), shift_matrix(m, a.alpha2)] {
                for r in [&r1, &r2] {
                    let lo = kron(l.matrix(), &in_);
                    let ro = kron(&im, &r.matrix().transpose());
                    commute = worst([commute, max_abs_diff(&(&lo * &ro), &(&ro * &lo))]);
                }
            }
        }
    }
    let t = tau(0.3, 1.1);
    let mut bimodule: f64 = 0.0;
    for (m, n) in [(2, 1), (3, 2)] {
        let b = LLLBasis::new(m, n, t, VacuumAngles::new(0.5, 0.2), TruncationPolicy::default()).unwrap();
        let r = bimodule_consistency(&b, &cell_grid(&t, DEFAULT_GRID), 1e-6);
        ok &= r.passed();
        bimodule = worst([bimodule, r.worst_action_deviation(), r.function_commutation]);
    }
    ok &= commute == 0.0;
    outcome(ok, format!("commutant 1 and span M^2 for M <= 7: {ok}; left/right commutator {commute:.1e}; bimodule fit {bimodule:.1e}"))
}

fn uq_relations() -> Outcome {
    let mut w: f64 = 0.0;
    let mut notes = Vec::new();
    for (m, n) in [(3, 1), (5, 2)] {
        let r = uq_sl2_generators(m, n).unwrap().residuals();
        w = worst([w, r.worst()]);
        notes.push(format!("{m}/{n}: {:.1e}", r.worst()));
    }
    // the dual copy at q~ = e^{2 pi i M/N} is degenerate for N <= 2, so it is checked on the mirrored fluxes
    for (m, n) in [(1, 3), (2, 5)] {
        let r = uq_sl2_dual_generators(m, n).unwrap().residuals();
        w = worst([w, r.worst()]);
        notes.push(format!("dual {m}/{n}: {:.1e}", r.worst()));
        w = worst([w, dual_commutation_residual(m, n, &VacuumAngles::zero())]);
    }
    outcome(w < 1e-11, format!("{} (tol 1e-11)", notes.join(", ")))
}

fn partition_invariance() -> Outcome {
    let pol = TruncationPolicy::default();
    let coarse = QuadratureSpec::new(8, QuadratureScheme::GaussLegendre).unwrap();
    let floor = convergence_floor(&pol);
    let mut ok = true;
    let (mut tw, mut sw): (f64, f64) = (0.0, 0.0);
    let mut nonmonotone = Vec::new();
    for (m, n) in coprime_pairs(6) {
        for t in [tau(0.3, 1.1), tau(0.0, 2.0)] {
            let seq = refinement_sequence(Flux::new(n, m).unwrap(), VacuumAngles::zero(), t, &coarse, &pol, 4).unwrap();
            let ts: Vec<f64> = seq.iter().map(|(_, r)| r.t_residual).collect();
            let ss: Vec<f64> = seq.iter().map(|(_, r)| r.s_residual).collect();
            if !is_monotone_nonincreasing(&ts, floor) || !is_monotone_nonincreasing(&ss, floor) {
                nonmonotone.push(format!("{m}/{n} at {t}"));
            }
            let last = seq.last().unwrap().1;
            tw = worst([tw, last.t_residual]);
            sw = worst([sw, last.s_residual]);
        }
    }
    ok &= tw < 1e-5 && sw < 1e-3 && nonmonotone.is_empty();
    outcome(ok, format!("t {tw:.3e} (tol 1e-5), s {sw:.3e} (tol 1e-3) at 64 nodes; refinement 8..64 non-monotone above {floor:.0e}: {nonmonotone:?}"))
}

fn squeeze_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut w: f64 = 0.0;
    for _ in 0..50 {
        let t = tau(rng.random_range(-2.0..2.0), rng.random_range(0.2..3.0));
        let (j, leak) = complex_structure_from_squeeze(&squeeze_from_tau(&t));
        w = worst([w, j.max_abs_diff(&complex_structure_from_tau(&t)), leak]);
    }
    outcome(w < 1e-10, format!("max deviation {w:.3e} over 50 moduli (tol 1e-10)"))
}

fn orthogonality() -> Outcome {
    let w = worst((1..=24).map(orthogonality_residual));
    outcome(w < 1e-12, format!("max residual {w:.3e} for K <= 24 (tol 1e-12)"))
}

fn end_to_end() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_nctorus");
    let start = Instant::now();
    let clean = Command::new(bin).arg("verify").output().expect("verify runs");
    let elapsed = start.elapsed();
    let faulty = Command::new(bin).args(["verify", "--inject-fault", "cocycle-sign"]).output().expect("verify runs");
    let ok = clean.status.code() == Some(0) && faulty.status.code() == Some(1) && elapsed < Duration::from_secs(120);
    outcome(
        ok,
        format!("defaults exit {:?} in {:.2} s, injected fault exit {:?}", clean.status.code(), elapsed.as_secs_f64(), faulty.status.code()),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 12] = [
        ("theta quasi-periodicity", theta_quasi_periodicity, Some(Duration::from_secs(5))),
        ("eta functional equations", eta_functional_equations, Some(Duration::from_secs(1))),
        ("quantum-torus relations", quantum_torus_relations, Some(Duration::from_secs(10))),
        ("holonomy", holonomy, None),
        ("degeneracy MN", degeneracy, Some(Duration::from_secs(20))),
        ("module structure", module_structure, None),
        ("Morita/commutant", morita_commutant, None),
        ("U_q(sl2)", uq_relations, None),
        ("partition invariance", partition_invariance, Some(Duration::from_secs(60))),
        ("squeeze roundtrip", squeeze_roundtrip, None),
        ("orthogonality", orthogonality, None),
        ("end-to-end verify", end_to_end, None),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = out.passed && in_time;
        if !passed {
            failures += 1;
        }
        let budget_note = budget.map(|b| format!(", budget {} s", b.as_secs())).unwrap_or_default();
        println!(
            "criterion {:>2} {}: {} [{}; {:.2} s{}]",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            out.summary,
            elapsed.as_secs_f64(),
            budget_note
        );
    }
    println!("acceptance: {} of 12 passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
