use std::time::Instant;

use nctorus_core::geometry::in_fundamental_domain;
use nctorus_core::lll::{center_eigen_residual, cell_grid, EIGENPHASE_TOL};
use nctorus_core::nc_torus::{
    commutation_residual, sine_structure_residual, uq_sl2_dual_generators,
    weyl_cocycle_residual, weyl_span_dimension,
};
use nctorus_core::partition::z_tilde_character_route;
use nctorus_core::theta::{eta_functional_residuals, orthogonality_residual, quasi_periodicity_residuals};
use nctorus_core::wavefield::{
    commutator_phase, dual_holonomy_residual, ground_state, group_law_residual, lattice_displacement,
    sine_bracket_residual, smooth_test_field, window_grid,
};
use nctorus_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;

const SEED: u64 = 0x006e_6374_6f72_7573;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Flip the sign of the expected clock/shift commutation phase.
    CocycleSign,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub config: RunConfig,
    pub injected_fault: Option<String>,
    pub checks: Vec<Check>,
    pub failed: Vec<String>,
    pub passed: bool,
    pub total_wall_time_s: f64,
}

type Outcome = Result<(f64, Option<String>)>;

struct Battery {
    checks: Vec<Check>,
}

impl Battery {
    fn run(&mut self, name: &str, tolerance: f64, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let (residual, detail) = match f() {
            Ok(v) => v,
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        self.checks.push(Check {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual <= tolerance,
            wall_time_s: start.elapsed().as_secs_f64(),
            detail,
        });
    }

    /// A check that does not apply to this configuration.
    fn skip(&mut self, name: &str, tolerance: f64, why: String) {
        self.checks.push(Check { name: name.to_string(), residual: 0.0, tolerance, passed: true, wall_time_s: 0.0, detail: Some(why) });
    }
}

fn worst(vals: impl IntoIterator<Item = f64>) -> f64 {
    vals.into_iter().fold(0.0, nctorus_core::linalg::nan_max)
}

fn random_cell_points(tau: &ModularParameter, count: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..count).map(|_| rng.random::<f64>() + tau.as_complex() * rng.random::<f64>()).collect()
}

fn random_fundamental_taus(count: usize, rng: &mut ChaCha8Rng) -> Vec<ModularParameter> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let re = rng.random_range(-0.5..0.5);
        let im = rng.random_range(0.85..3.0);
        if let Ok(t) = ModularParameter::new(re, im) {
            if in_fundamental_domain(&t) {
                out.push(t);
            }
        }
    }
    out
}

pub fn run(cfg: &RunConfig, fault: Option<Fault>) -> VerificationReport {
    let start = Instant::now();
    let mut b = Battery { checks: Vec::new() };
    let (m, n) = (cfg.m, cfg.n);
    let flux = cfg.flux;
    let tau = cfg.tau_param;
    let angles = cfg.angles();
    let pol = cfg.policy;
    let level = flux.level();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut levels = vec![1, 2, 3, 6, 12, level];
    levels.sort_unstable();
    levels.dedup();
    let zs = random_cell_points(&tau, 100, &mut rng);
    b.run("theta quasi-periodicity", 1e-9, || {
        let mut w: f64 = 0.0;
        for &k in &levels {
            for r in 0..k {
                let spec = ThetaSpec::new(k, r)?;
                for &z in &zs {
                    let (r1, r2) = quasi_periodicity_residuals(spec, z, &tau, &pol)?;
                    w = worst([w, r1, r2]);
                }
            }
        }
        Ok((w, Some(format!("levels {levels:?}, 100 points"))))
    });

    let taus = random_fundamental_taus(20, &mut rng);
    b.run("eta functional equations", 1e-10, || {
        let mut w: f64 = 0.0;
        for t in std::iter::once(tau).chain(taus.iter().copied()) {
            let (rt, rs) = eta_functional_residuals(&t, &pol)?;
            w = worst([w, rt, rs]);
        }
        Ok((w, None))
    });

    b.run("q-commutation (matrix)", 1e-12, || {
        let c = clock_matrix(m, n, angles.alpha1);
        let s = shift_matrix(m, angles.alpha2);
        let sign = if fault == Some(Fault::CocycleSign) { -1.0 } else { 1.0 };
        Ok((commutation_residual(&c, &s, flux.q() * sign), None))
    });

    b.run("weyl cocycle (matrix)", 1e-12, || {
        let mut w: f64 = 0.0;
        for a1 in -2..=2 {
            for a2 in -2..=2 {
                for b1 in -2..=2 {
                    for b2 in -2..=2 {
                        w = worst([w, weyl_cocycle_residual(WeylWord::new(a1, a2), WeylWord::new(b1, b2), m, n, &angles)]);
                    }
                }
            }
        }
        Ok((w, None))
    });

    let pairs = [([1, 0], [0, 1]), ([2, -1], [1, 3]), ([1, 1], [-1, 2])];
    b.run("sine algebra (matrix)", 1e-12, || {
        Ok((worst(pairs.iter().map(|&(x, y)| sine_structure_residual(m, n, WeylWord::new(x[0], x[1]), WeylWord::new(y[0], y[1])))), None))
    });

    let weight = tau.im();
    let fields = [ground_state(tau, weight), smooth_test_field(tau, weight, 11)];
    let window = window_grid(2.5, 15);
    b.run("weyl cocycle (operator)", 1e-9, || {
        Ok((worst(fields.iter().flat_map(|f| pairs.iter().map(|&(x, y)| group_law_residual(x, y, &flux, &tau, f, &window)))), None))
    });
    b.run("sine algebra (operator)", 1e-9, || {
        Ok((worst(fields.iter().flat_map(|f| pairs.iter().map(|&(x, y)| sine_bracket_residual(x, y, &flux, &tau, f, &window)))), None))
    });

    b.run("holonomy phase", 1e-10, || {
        let q = flux.q();
        let c = clock_matrix(m, n, angles.alpha1);
        let s = shift_matrix(m, angles.alpha2);
        let plaquette = c.matrix() * s.matrix() * c.matrix().adjoint() * s.matrix().adjoint();
        let matrix_dev = nctorus_core::linalg::max_abs_diff(&plaquette, &(nctorus_core::linalg::identity(m as usize) * q));
        let mut op_dev: f64 = 0.0;
        for f in &fields {
            let d1 = lattice_displacement([1, 0], &flux, &tau, f.weight());
            let d2 = lattice_displacement([0, 1], &flux, &tau, f.weight());
            let (phase, _) = commutator_phase(d1, d2, f, &window);
            op_dev = worst([op_dev, (phase - q).norm()]);
        }
        Ok((worst([matrix_dev, op_dev]), Some(format!("operator {op_dev:.3e}, matrix {matrix_dev:.3e}"))))
    });
    b.run("dual holonomy (operator)", 1e-9, || {
        Ok((worst(fields.iter().map(|f| dual_holonomy_residual(&flux, &tau, f, &window))), None))
    });

    let basis = match LLLBasis::new(m, n, tau, angles, pol) {
        Ok(v) => Some(v),
        Err(e) => {
            b.run("lll basis", 0.0, || Err(e));
            None
        }
    };
    if let Some(basis) = &basis {
        let grid = cell_grid(&tau, cfg.grid);
        let coarse = cell_grid(&tau, 8);
        b.run("center eigenvalues", 1e-7, || {
            let scale = worst(basis.sample_matrix(&coarse).iter().map(|v| v.norm()));
            Ok((worst(basis.indices().iter().map(|&(j, k)| center_eigen_residual(basis, j, k, &coarse))) / scale, None))
        });
        b.run("gram rank", 0.0, || {
            let rank = gram_rank(basis, &grid, 1e-8)?;
            Ok(((rank as f64 - basis.len() as f64).abs(), Some(format!("rank {rank}, expected {}", basis.len()))))
        });
        b.run("module structure (eigenphases)", EIGENPHASE_TOL, || {
            let table = eigenphase_table(basis, &grid, EIGENPHASE_TOL)?;
            if !table.calibration.is_canonical() {
                return Ok((f64::INFINITY, Some(format!("non-canonical calibration {:?}", table.calibration))));
            }
            Ok((worst([table.prediction_residual(basis), table.clock_multiset_residual(basis)]), None))
        });
        let report = bimodule_consistency(basis, &grid, 1e-6);
        b.run("bimodule actions", 1e-6, || {
            Ok((worst([report.worst_action_deviation(), report.function_commutation]), None))
        });
        b.run("bimodule matrix commutation", 1e-13, || Ok((report.matrix_commutation, None)));
    }

    b.run("commutant dimension", 0.0, || {
        let dim = commutant_dimension(&[clock_matrix(m, n, angles.alpha1), shift_matrix(m, angles.alpha2)])?;
        let span = weyl_span_dimension(m, n);
        let dev = (dim as f64 - 1.0).abs() + (span as f64 - (m * m) as f64).abs();
        Ok((dev, Some(format!("commutant {dim}, weyl span {span} of {}", m * m))))
    });

    for (name, gens) in [("U_q(sl2) relations", uq_sl2_generators(m, n)), ("dual U_q(sl2) relations", uq_sl2_dual_generators(m, n))] {
        match gens {
            Err(Error::DegenerateDeformation { .. }) => b.skip(name, 1e-11, "not applicable: q^2 = 1".into()),
            other => b.run(name, 1e-11, || Ok((other?.residuals().worst(), None))),
        }
    }

    b.run("orthogonality", 1e-12, || Ok((worst((1..=24).map(orthogonality_residual)), Some("levels 1..=24".into()))));

    let zero = VacuumAngles::zero();
    let inv = modular_invariance_report(flux, zero, tau, &cfg.quad_spec, &pol);
    let logged = if angles == zero {
        None
    } else {
        modular_invariance_report(flux, angles, tau, &cfg.quad_spec, &pol)
            .ok()
            .map(|r| format!("at the configured angles (logged only): t {:.3e}, s {:.3e}", r.t_residual, r.s_residual))
    };
    match inv {
        Ok(r) => {
            b.run("partition T-invariance", 1e-5, || Ok((r.t_residual, logged.clone())));
            b.run("partition S-invariance", 1e-3, || Ok((r.s_residual, logged.clone())));
        }
        Err(e) => {
            let msg = e.to_string();
            b.run("partition T-invariance", 1e-5, || Err(Error::Precondition(msg.clone())));
            b.run("partition S-invariance", 1e-3, || Err(Error::Precondition(msg)));
        }
    }
    b.run("partition route agreement", 1e-6, || {
        let basis = LLLBasis::new(m, n, tau, zero, pol)?;
        let a = z_tilde(&basis, &cfg.quad_spec, &pol)?;
        let c = z_tilde_character_route(&basis, &cfg.quad_spec, &pol)?;
        Ok(((a - c).abs() / a, None))
    });

    b.run("squeeze reconstruction", 1e-10, || {
        let (j, leak) = complex_structure_from_squeeze(&squeeze_from_tau(&tau));
        Ok((worst([j.max_abs_diff(&complex_structure_from_tau(&tau)), leak]), None))
    });

    let failed: Vec<String> = b.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    VerificationReport {
        config: cfg.clone(),
        injected_fault: fault.map(|f| format!("{f:?}")),
        passed: failed.is_empty(),
        failed,
        checks: b.checks,
        total_wall_time_s: start.elapsed().as_secs_f64(),
    }
}
