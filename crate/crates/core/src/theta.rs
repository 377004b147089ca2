//! Level-K theta functions, Dedekind eta and affine characters.
//!
//! `θ^K_r(z, τ) = Σ_n exp(iπτK a² + 2πiKz a)`, `a = n + r/K`, summed over a
//! symmetric window `|n| ≤ n_max` chosen from a certified Gaussian tail bound.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModularParameter;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThetaSpec {
    level: u32,
    residue: u32,
}

impl ThetaSpec {
    pub fn new(level: u32, residue: u32) -> Result<Self> {
        if level == 0 {
            return Err(Error::Domain("theta level must be positive".into()));
        }
        if residue >= level {
            return Err(Error::Domain(format!("residue {residue} out of range 0..{level}")));
        }
        Ok(Self { level, residue })
    }

    /// Reduces an arbitrary integer residue mod `level`.
    pub fn reduced(level: u32, residue: i64) -> Result<Self> {
        if level == 0 {
            return Err(Error::Domain("theta level must be positive".into()));
        }
        Self::new(level, residue.rem_euclid(level as i64) as u32)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn residue(&self) -> u32 {
        self.residue
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub epsilon: f64,
    pub max_terms: usize,
}

impl TruncationPolicy {
    pub fn new(epsilon: f64, max_terms: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if max_terms == 0 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(Self { epsilon, max_terms })
    }

    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, Self::default().max_terms)
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { epsilon: 1e-12, max_terms: 1_000_000 }
    }
}

/// A theta value with its truncation certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaValue {
    pub value: C64,
    pub n_max: usize,
    pub epsilon: f64,
}

/// Smallest `n_max ≥ 1` such that the two-sided tail beyond `|n| = n_max` of
/// `|a|^order · exp(−πK Im τ a² + 2πK |Im z| |a|)` sums to less than
/// `exp(log_eps)`.
fn tail_terms(level: u32, im_z: f64, im_tau: f64, log_eps: f64, order: usize) -> usize {
    let k = level as f64;
    let b = PI * k * im_tau;
    let c = TAU * k * im_z.abs();
    let p = order as f64;
    let log_g = |t: f64| p * t.ln() - b * t * t + c * t;
    let ok = |n: usize| -> bool {
        let t = n as f64;
        // g must already be decreasing at t so every later term is dominated
        if p / t - 2.0 * b * t + c >= 0.0 {
            return false;
        }
        let log_rho = log_g(t + 1.0) - log_g(t);
        if log_rho >= 0.0 {
            return false;
        }
        let log_tail = std::f64::consts::LN_2 + log_g(t) - (-log_rho.exp_m1()).ln();
        log_tail < log_eps
    };
    let mut lo = ((c / (2.0 * b)).ceil() as usize).max(1);
    if ok(lo) {
        return lo;
    }
    let mut hi = lo.max(1) * 2;
    while !ok(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Number of terms `n_max` (on each side) needed for an absolute tail below `epsilon`.
pub fn truncation_bound(level: u32, z: C64, tau: &ModularParameter, epsilon: f64) -> usize {
    tail_terms(level.max(1), z.im, tau.im(), epsilon.ln(), 0)
}

/// `Σ_a (2πiKa)^k exp(offset + iπτK a² + 2πiKz a)` for `k = 0..=order`.
///
/// The tail of every returned entry is below `pol.epsilon` in absolute value,
/// including the factor `e^{offset}`.
pub fn theta_series(
    spec: ThetaSpec,
    z: C64,
    tau: &ModularParameter,
    offset: C64,
    order: usize,
    pol: &TruncationPolicy,
) -> Result<(Vec<C64>, usize)> {
    let k = spec.level as f64;
    let log_eps = pol.epsilon.ln() - offset.re;
    // the polynomial factor (2πK)^order is absorbed into the bound
    let log_eps = log_eps - order as f64 * (TAU * k).ln().max(0.0);
    let n_max = tail_terms(spec.level, z.im, tau.im(), log_eps, order);
    if n_max > pol.max_terms {
        return Err(Error::Truncation { needed: n_max, cap: pol.max_terms });
    }
    let tau_c = tau.as_complex();
    let quad = I * PI * k * tau_c;
    let lin = I * TAU * k * z;
    let s = spec.residue as f64 / k;
    let mut out = vec![C64::new(0.0, 0.0); order + 1];
    let n = n_max as i64;
    for m in -n..=n {
        let a = m as f64 + s;
        let term = (offset + quad * (a * a) + lin * a).exp();
        let step = I * (TAU * k * a);
        let mut factor = C64::new(1.0, 0.0);
        for slot in out.iter_mut() {
            *slot += factor * term;
            factor *= step;
        }
    }
    Ok((out, n_max))
}

pub fn theta_certified(
    spec: ThetaSpec,
    z: C64,
    tau: &ModularParameter,
    pol: &TruncationPolicy,
) -> Result<ThetaValue> {
    let (v, n_max) = theta_series(spec, z, tau, C64::new(0.0, 0.0), 0, pol)?;
    Ok(ThetaValue { value: v[0], n_max, epsilon: pol.epsilon })
}

pub fn theta(spec: ThetaSpec, z: C64, tau: &ModularParameter, pol: &TruncationPolicy) -> Result<C64> {
    theta_certified(spec, z, tau, pol).map(|v| v.value)
}

/// Term-wise `∂θ/∂z`.
pub fn theta_dz(spec: ThetaSpec, z: C64, tau: &ModularParameter, pol: &TruncationPolicy) -> Result<C64> {
    theta_series(spec, z, tau, C64::new(0.0, 0.0), 1, pol).map(|(v, _)| v[1])
}

/// `θ, ∂θ, …, ∂^order θ` in one pass.
pub fn theta_derivatives(
    spec: ThetaSpec,
    z: C64,
    tau: &ModularParameter,
    order: usize,
    pol: &TruncationPolicy,
) -> Result<Vec<C64>> {
    theta_series(spec, z, tau, C64::new(0.0, 0.0), order, pol).map(|(v, _)| v)
}

/// Growth scale of `|θ^K(z, τ)|`: `exp(πK (Im z)² / Im τ)`, the size of the
/// dominant term.
pub fn theta_envelope(level: u32, z: C64, tau: &ModularParameter) -> f64 {
    (PI * level as f64 * z.im * z.im / tau.im()).exp()
}

/// Residuals of `θ(z+1) = θ(z)` and `θ(z+τ) = e^{−iπKτ} e^{−2πiKz} θ(z)`,
/// each divided by the envelope at the shifted point.
pub fn quasi_periodicity_residuals(
    spec: ThetaSpec,
    z: C64,
    tau: &ModularParameter,
    pol: &TruncationPolicy,
) -> Result<(f64, f64)> {
    let k = spec.level as f64;
    let tau_c = tau.as_complex();
    let base = theta(spec, z, tau, pol)?;
    let shifted_1 = theta(spec, z + 1.0, tau, pol)?;
    let shifted_tau = theta(spec, z + tau_c, tau, pol)?;
    let factor = (-I * PI * k * tau_c - I * TAU * k * z).exp();
    let r1 = (shifted_1 - base).norm() / theta_envelope(spec.level, z + 1.0, tau);
    let r2 = (shifted_tau - factor * base).norm() / theta_envelope(spec.level, z + tau_c, tau);
    Ok((r1, r2))
}

/// Eta with its truncation length.
pub fn dedekind_eta_certified(tau: &ModularParameter, pol: &TruncationPolicy) -> Result<(C64, usize)> {
    let t = tau.as_complex();
    let q = (I * TAU * t).exp();
    let aq = q.norm();
    let mut prod = C64::new(1.0, 0.0);
    let mut qn = q;
    let mut n = 0usize;
    let mut mag = aq;
    // |Π_{m>n}(1−q^m) − 1| ≲ |q|^{n+1}/(1−|q|)
    while mag / (1.0 - aq) >= pol.epsilon {
        n += 1;
        if n > pol.max_terms {
            return Err(Error::Truncation { needed: n, cap: pol.max_terms });
        }
        prod *= C64::new(1.0, 0.0) - qn;
        qn *= q;
        mag *= aq;
    }
    Ok(((I * TAU * t / 24.0).exp() * prod, n))
}

pub fn dedekind_eta(tau: &ModularParameter, pol: &TruncationPolicy) -> Result<C64> {
    dedekind_eta_certified(tau, pol).map(|(v, _)| v)
}

/// `|η(τ+1) − e^{iπ/12} η(τ)|` and `|η(−1/τ) − √(−iτ) η(τ)|`.
pub fn eta_functional_residuals(tau: &ModularParameter, pol: &TruncationPolicy) -> Result<(f64, f64)> {
    let eta = dedekind_eta(tau, pol)?;
    let t_side = dedekind_eta(&tau.t(), pol)?;
    let s_side = dedekind_eta(&tau.s(), pol)?;
    let root = (-I * tau.as_complex()).sqrt();
    let t_res = (t_side - C64::from_polar(1.0, PI / 12.0) * eta).norm();
    let s_res = (s_side - root * eta).norm();
    Ok((t_res, s_res))
}

/// Affine character `χ_r(z, τ) = θ^K_r(z, τ) / η(τ)`.
pub fn character(spec: ThetaSpec, z: C64, tau: &ModularParameter, pol: &TruncationPolicy) -> Result<C64> {
    Ok(theta(spec, z, tau, pol)? / dedekind_eta(tau, pol)?)
}

/// `|χ_r(z, τ+1) − exp(2πi(r²/2K − 1/24)) χ_r(z, τ)|`; even levels only.
pub fn t_transform_residual(
    spec: ThetaSpec,
    z: C64,
    tau: &ModularParameter,
    pol: &TruncationPolicy,
) -> Result<f64> {
    if spec.level % 2 == 1 {
        return Err(Error::UnsupportedConvention(format!(
            "T-transform at odd level {} shifts the residue by K mod 2K",
            spec.level
        )));
    }
    let k = spec.level as f64;
    let r = spec.residue as f64;
    let mu2 = r * r / k;
    let phase = C64::from_polar(1.0, TAU * (mu2 / 2.0 - 1.0 / 24.0));
    let lhs = character(spec, z, &tau.t(), pol)?;
    let rhs = phase * character(spec, z, tau, pol)?;
    Ok((lhs - rhs).norm())
}

/// `|e^{−iπKz²/τ} χ_r(z/τ, −1/τ) − K^{−1/2} Σ_{r'} e^{−2πi rr'/K} χ_{r'}(z, τ)|`.
pub fn s_transform_residual(
    spec: ThetaSpec,
    z: C64,
    tau: &ModularParameter,
    pol: &TruncationPolicy,
) -> Result<f64> {
    let k = spec.level;
    let kf = k as f64;
    let t = tau.as_complex();
    let lhs = (-I * PI * kf * z * z / t).exp() * character(spec, z / t, &tau.s(), pol)?;
    let eta = dedekind_eta(tau, pol)?;
    let mut sum = C64::new(0.0, 0.0);
    for rp in 0..k {
        let phase = C64::from_polar(1.0, -TAU * (spec.residue as f64) * (rp as f64) / kf);
        sum += phase * theta(ThetaSpec { level: k, residue: rp }, z, tau, pol)?;
    }
    let rhs = sum / eta / kf.sqrt();
    Ok((lhs - rhs).norm())
}

/// `max |δ_{μ'μ''} − K^{−1} Σ_μ e^{−2πiμ'μ/K} e^{2πiμμ''/K}|`.
pub fn orthogonality_residual(level: u32) -> f64 {
    let k = level.max(1);
    let kf = k as f64;
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            let mut s = C64::new(0.0, 0.0);
            for m in 0..k {
                // reduce the exponent mod K so the angle stays small and exact
                let e = ((b as u64 * m as u64 + (k - a) as u64 * m as u64) % k as u64) as f64;
                s += C64::from_polar(1.0, TAU * e / kf);
            }
            let delta = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((C64::new(delta, 0.0) - s / kf).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau(re: f64, im: f64) -> ModularParameter {
        ModularParameter::new(re, im).unwrap()
    }

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn spec_validation() {
        assert!(ThetaSpec::new(2, 2).is_err());
        assert!(ThetaSpec::new(0, 0).is_err());
        assert_eq!(ThetaSpec::reduced(6, 8).unwrap(), ThetaSpec::new(6, 2).unwrap());
        assert_eq!(ThetaSpec::reduced(6, -1).unwrap(), ThetaSpec::new(6, 5).unwrap());
        assert!(TruncationPolicy::new(0.0, 10).is_err());
        assert!(TruncationPolicy::new(1e-3, 0).is_err());
    }

    #[test]
    fn theta_at_i() {
        let v = theta(ThetaSpec::new(1, 0).unwrap(), C64::new(0.0, 0.0), &ModularParameter::i(), &pol()).unwrap();
        assert!((v.re - 1.0864348112133080).abs() < 1e-15);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn large_im_tau_limit() {
        let t = tau(0.1, 40.0);
        for k in [1, 3, 6] {
            let spec = ThetaSpec::new(k, 0).unwrap();
            let v = theta(spec, C64::new(0.0, 0.0), &t, &pol()).unwrap();
            assert!((v - 1.0).norm() < 1e-12);
            let d = theta_dz(spec, C64::new(0.3, 0.0), &t, &pol()).unwrap();
            assert!(d.norm() < 1e-12);
            assert_eq!(truncation_bound(k, C64::new(0.0, 0.0), &t, 1e-12), 1);
        }
    }

    #[test]
    fn truncation_bound_examples() {
        let n = truncation_bound(1, C64::new(0.0, 0.0), &ModularParameter::i(), 1e-12);
        assert!((3..=4).contains(&n), "n = {n}");
        let t = tau(0.3, 1.1);
        let mut prev = 0;
        for y in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let n = truncation_bound(6, C64::new(0.2, y), &t, 1e-12);
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn truncation_cap_reports_bound() {
        let p = TruncationPolicy::new(1e-12, 2).unwrap();
        let e = theta(ThetaSpec::new(1, 0).unwrap(), C64::new(0.0, 0.0), &tau(0.0, 0.05), &p).unwrap_err();
        assert!(matches!(e, Error::Truncation { cap: 2, .. }));
    }

    #[test]
    fn doubling_window_is_below_epsilon() {
        let t = tau(0.3, 1.1);
        let spec = ThetaSpec::new(6, 2).unwrap();
        let z = C64::new(0.4, 0.7);
        let p = pol();
        let (v, n) = theta_series(spec, z, &t, C64::new(0.0, 0.0), 0, &p).unwrap();
        let kf = 6.0;
        let mut wide = C64::new(0.0, 0.0);
        for m in -(2 * n as i64)..=(2 * n as i64) {
            let a = m as f64 + 2.0 / kf;
            wide += (I * PI * kf * t.as_complex() * a * a + I * TAU * kf * z * a).exp();
        }
        assert!((wide - v[0]).norm() < p.epsilon);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let spec = ThetaSpec::new(6, 1).unwrap();
        let z = C64::new(0.2, 0.1);
        let t = ModularParameter::i();
        let h = 1e-5;
        let d = theta_dz(spec, z, &t, &pol()).unwrap();
        let fd = (theta(spec, z + h, &t, &pol()).unwrap() - theta(spec, z - h, &t, &pol()).unwrap()) / (2.0 * h);
        assert!((d - fd).norm() / d.norm() < 1e-6);
        let d0 = theta_dz(ThetaSpec::new(1, 0).unwrap(), C64::new(0.0, 0.0), &t, &pol()).unwrap();
        assert!(d0.norm() < 1e-14);
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        let spec = ThetaSpec::new(3, 2).unwrap();
        let t = tau(0.3, 1.1);
        let z = C64::new(0.3, 0.2);
        let h = 1e-4;
        let d = theta_derivatives(spec, z, &t, 2, &pol()).unwrap();
        let fd = (theta(spec, z + h, &t, &pol()).unwrap() - 2.0 * d[0] + theta(spec, z - h, &t, &pol()).unwrap()) / (h * h);
        assert!((d[2] - fd).norm() / d[2].norm() < 1e-5);
    }

    #[test]
    fn offset_is_absorbed() {
        let spec = ThetaSpec::new(2, 1).unwrap();
        let t = tau(0.1, 0.9);
        let z = C64::new(0.2, 0.6);
        let off = C64::new(-3.0, 0.4);
        let (scaled, _) = theta_series(spec, z, &t, off, 1, &pol()).unwrap();
        let plain = theta_derivatives(spec, z, &t, 1, &pol()).unwrap();
        for (a, b) in scaled.iter().zip(&plain) {
            assert!((a - off.exp() * b).norm() < 1e-13);
        }
    }

    #[test]
    fn periodicity_small_level() {
        let spec = ThetaSpec::new(6, 3).unwrap();
        let t = tau(0.3, 1.1);
        let z = C64::new(0.37, 0.21);
        let p = pol();
        let a = theta(spec, z, &t, &p).unwrap();
        let b = theta(spec, z + 1.0, &t, &p).unwrap();
        assert!((a - b).norm() < 2.0 * p.epsilon);
        let (r1, r2) = quasi_periodicity_residuals(spec, z, &t, &p).unwrap();
        assert!(r1 < 1e-12 && r2 < 1e-12);
    }

    #[test]
    fn eta_at_i() {
        let e = dedekind_eta(&ModularParameter::i(), &pol()).unwrap();
        assert!((e.re - 0.7682254223260566).abs() < 1e-12);
        let tight = TruncationPolicy::new(1e-16, 100).unwrap();
        let e = dedekind_eta(&ModularParameter::i(), &tight).unwrap();
        assert!((e.re - 0.7682254223260566).abs() < 1e-15);
        assert!(e.im.abs() < 1e-15);
    }

    #[test]
    fn eta_functional_equations() {
        let (t, s) = eta_functional_residuals(&tau(0.3, 1.1), &pol()).unwrap();
        assert!(t < 1e-10 && s < 1e-10);
    }

    #[test]
    fn character_at_i_is_sqrt_two() {
        let c = character(ThetaSpec::new(1, 0).unwrap(), C64::new(0.0, 0.0), &ModularParameter::i(), &pol()).unwrap();
        assert!((c.re - std::f64::consts::SQRT_2).abs() < 1e-11);
    }

    #[test]
    fn t_transform_examples() {
        let p = pol();
        let r = t_transform_residual(ThetaSpec::new(2, 0).unwrap(), C64::new(0.1, 0.0), &ModularParameter::i(), &p).unwrap();
        assert!(r < 1e-9);
        let r = t_transform_residual(ThetaSpec::new(6, 2).unwrap(), C64::new(0.2, 0.1), &tau(0.3, 1.1), &p).unwrap();
        assert!(r < 1e-9);
        let e = t_transform_residual(ThetaSpec::new(3, 1).unwrap(), C64::new(0.0, 0.0), &ModularParameter::i(), &p);
        assert!(matches!(e, Err(Error::UnsupportedConvention(_))));
    }

    #[test]
    fn s_transform_examples() {
        let p = pol();
        let r = s_transform_residual(ThetaSpec::new(1, 0).unwrap(), C64::new(0.0, 0.0), &ModularParameter::i(), &p).unwrap();
        assert!(r < 1e-9);
        let r = s_transform_residual(ThetaSpec::new(2, 1).unwrap(), C64::new(0.0, 0.0), &tau(0.0, 2.0), &p).unwrap();
        assert!(r < 1e-8);
        for res in 0..6 {
            let r = s_transform_residual(ThetaSpec::new(6, res).unwrap(), C64::new(0.1, 0.0), &tau(0.3, 1.1), &p).unwrap();
            assert!(r < 1e-7, "r = {res}: {r}");
        }
    }

    #[test]
    fn orthogonality() {
        assert_eq!(orthogonality_residual(1), 0.0);
        assert!(orthogonality_residual(6) < 1e-13);
        assert!(orthogonality_residual(12) < 1e-13);
    }
}
