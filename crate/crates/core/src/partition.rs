//! Norms of the Bloch states over the torus cell and the candidate partition
//! function `Z̃(τ) = Σ_{jk} ‖Ψ_jk‖² / |η(τ)|²`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Flux, ModularParameter, VacuumAngles};
use crate::lll::LLLBasis;
use crate::quadrature::QuadratureSpec;
use crate::theta::{dedekind_eta, theta_series, ThetaSpec, TruncationPolicy};
use crate::C64;

/// Roundoff floor below which residuals are treated as converged when
/// checking monotone improvement.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

fn ordered_sum(vals: Vec<f64>) -> f64 {
    vals.into_iter().sum()
}

/// `∫ |Ψ_jk|² dx dy` over the cell `{origin + x + τy : x, y ∈ [0,1)}`.
pub fn state_norm_shifted(basis: &LLLBasis, j: usize, k: usize, quad: &QuadratureSpec, origin: C64) -> f64 {
    let t = basis.tau().as_complex();
    let psi = basis.state(j, k);
    let rule = quad.square_rule();
    ordered_sum(rule.par_iter().map(|&(x, y, w)| w * psi.at(origin + x + t * y).norm_sqr()).collect())
}

/// `∫_cell |Ψ_jk|² dx dy`; at zero vacuum angles the integrand is
/// `exp(−2πK Im τ y²) |θ^K_r(x + τy, τ)|²`.
pub fn state_norm(basis: &LLLBasis, j: usize, k: usize, quad: &QuadratureSpec) -> f64 {
    state_norm_shifted(basis, j, k, quad, C64::new(0.0, 0.0))
}

/// Per-state route: `Σ_{jk} ‖Ψ_jk‖² / |η|²`.
pub fn z_tilde(basis: &LLLBasis, quad: &QuadratureSpec, pol: &TruncationPolicy) -> Result<f64> {
    let eta = dedekind_eta(&basis.tau(), pol)?;
    let total = ordered_sum(basis.indices().iter().map(|&(j, k)| state_norm(basis, j, k, quad)).collect());
    Ok(total / eta.norm_sqr())
}

/// Character route: the cell integral of `Σ_r |χ_r(z + γ, τ)|²` against the
/// Gaussian measure, with all residues summed inside one integrand.
pub fn z_tilde_character_route(basis: &LLLBasis, quad: &QuadratureSpec, pol: &TruncationPolicy) -> Result<f64> {
    let tau = basis.tau();
    let t = tau.as_complex();
    let level = basis.flux().level();
    let c = PI * level as f64 / (2.0 * tau.im());
    let alpha1 = basis.angles().alpha1;
    let gamma = basis.gamma();
    let eta = dedekind_eta(&tau, pol)?;
    let rule = quad.square_rule();
    let vals: Vec<Result<f64>> = rule
        .par_iter()
        .map(|&(x, y, w)| {
            let z = x + t * y;
            let yy = z.im;
            // half the log-weight rides inside the series to keep terms bounded
            let offset = C64::new(-2.0 * c * yy * yy - alpha1 * yy, 0.0);
            let mut acc = 0.0;
            for r in 0..level {
                let spec = ThetaSpec::new(level, r)?;
                let (v, _) = theta_series(spec, z + gamma, &tau, offset, 0, pol)?;
                acc += v[0].norm_sqr();
            }
            Ok(w * acc)
        })
        .collect();
    let mut total = 0.0;
    for v in vals {
        total += v?;
    }
    Ok(total / eta.norm_sqr())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub z_tau: f64,
    pub z_t: f64,
    pub z_s: f64,
    /// `|Z̃(τ+1) − Z̃(τ)| / Z̃(τ)`.
    pub t_residual: f64,
    /// `|Z̃(−1/τ) − Z̃(τ)| / Z̃(τ)`.
    pub s_residual: f64,
}

/// Evaluates `Z̃` at `τ`, `τ+1` and `−1/τ` with identical quadrature and truncation.
pub fn modular_invariance_report(
    flux: Flux,
    angles: VacuumAngles,
    tau: ModularParameter,
    quad: &QuadratureSpec,
    pol: &TruncationPolicy,
) -> Result<InvarianceReport> {
    let eval = |t: ModularParameter| -> Result<f64> {
        let basis = LLLBasis::new(flux.m(), flux.n(), t, angles, *pol)?;
        z_tilde(&basis, quad, pol)
    };
    let z_tau = eval(tau)?;
    let z_t = eval(tau.t())?;
    let z_s = eval(tau.s())?;
    Ok(InvarianceReport {
        z_tau,
        z_t,
        z_s,
        t_residual: (z_t - z_tau).abs() / z_tau,
        s_residual: (z_s - z_tau).abs() / z_tau,
    })
}

/// Invariance reports at `quad`, `2·quad`, `4·quad`, … (`levels` entries).
pub fn refinement_sequence(
    flux: Flux,
    angles: VacuumAngles,
    tau: ModularParameter,
    quad: &QuadratureSpec,
    pol: &TruncationPolicy,
    levels: usize,
) -> Result<Vec<(usize, InvarianceReport)>> {
    let mut q = *quad;
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        out.push((q.nodes_per_axis(), modular_invariance_report(flux, angles, tau, &q, pol)?));
        q = q.refined();
    }
    Ok(out)
}

/// Level below which invariance residuals no longer reflect quadrature error:
/// series truncation at `ε` bounds the relative accuracy of `Z̃` itself.
pub fn convergence_floor(pol: &TruncationPolicy) -> f64 {
    (10.0 * pol.epsilon).max(ROUNDOFF_FLOOR)
}

/// True when each residual is no larger than its predecessor, treating values
/// under `floor` as converged.
pub fn is_monotone_nonincreasing(residuals: &[f64], floor: f64) -> bool {
    residuals.windows(2).all(|w| w[1] <= w[0].max(floor))
}
