//! Wavefunctions as evaluable fields in `(z, z̄)`, ladder operators and
//! magnetic translations.
//!
//! A [`Field`] is a function of the two independent variables `z`, `z̄`
//! together with the weight `w` entering
//!
//! * `a⁺ = −√(2w)(∂_z − z̄/4w)`, `a⁻ = √(2w)(∂_z̄ + z/4w)`
//! * `b⁺ = −√(2w)(∂_z̄ − z/4w)`, `b⁻ = √(2w)(∂_z + z̄/4w)`
//! * `D(u) f = exp((ū z − u z̄)/4w) f(z − u, z̄ − ū)`.
//!
//! Mixed derivatives `∂_z^a ∂_z̄^b` ("jets") propagate exactly through ladder
//! operators, displacements and linear combinations; only opaque leaves fall
//! back to centered finite differences.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Flux, ModularParameter};
use crate::quadrature::QuadratureSpec;
use crate::C64;

pub type EvalFn = Arc<dyn Fn(C64, C64) -> C64 + Send + Sync>;
/// `(z, z̄, a, b) ↦ ∂_z^a ∂_z̄^b f`.
pub type JetFn = Arc<dyn Fn(C64, C64, u32, u32) -> C64 + Send + Sync>;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LadderOp {
    APlus,
    AMinus,
    BPlus,
    BMinus,
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LadderOp::APlus => "a+",
            LadderOp::AMinus => "a-",
            LadderOp::BPlus => "b+",
            LadderOp::BMinus => "b-",
        };
        f.write_str(s)
    }
}

/// Displacement by `u` (holomorphic) and `ū` (antiholomorphic component).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub u: C64,
    pub ubar: C64,
}

impl Displacement {
    /// A real displacement vector, `ū = conj(u)`.
    pub fn real(u: C64) -> Self {
        Self { u, ubar: u.conj() }
    }

    pub fn zero() -> Self {
        Self::real(C64::new(0.0, 0.0))
    }

    pub fn neg(&self) -> Self {
        Self { u: -self.u, ubar: -self.ubar }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { u: self.u + other.u, ubar: self.ubar + other.ubar }
    }
}

enum Node {
    Leaf { eval: EvalFn, jet: Option<JetFn> },
    Ladder { op: LadderOp, inner: Field },
    Displaced { d: Displacement, inner: Field },
    Combination(Vec<(C64, Field)>),
}

#[derive(Clone)]
pub struct Field {
    node: Arc<Node>,
    tau: ModularParameter,
    weight: f64,
    h: f64,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &*self.node {
            Node::Leaf { jet, .. } if jet.is_some() => "analytic".to_string(),
            Node::Leaf { .. } => "sampled".to_string(),
            Node::Ladder { op, .. } => format!("ladder {op}"),
            Node::Displaced { d, .. } => format!("displaced by {}", d.u),
            Node::Combination(terms) => format!("combination of {}", terms.len()),
        };
        f.debug_struct("Field")
            .field("kind", &kind)
            .field("tau", &self.tau)
            .field("weight", &self.weight)
            .finish()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

impl Field {
    /// A field known only through its values; derivatives use finite differences.
    pub fn from_fn<F>(tau: ModularParameter, weight: f64, f: F) -> Self
    where
        F: Fn(C64, C64) -> C64 + Send + Sync + 'static,
    {
        Self::leaf(tau, weight, Arc::new(f), None)
    }

    /// A field with analytic mixed derivatives.
    pub fn with_jet<F, J>(tau: ModularParameter, weight: f64, f: F, jet: J) -> Self
    where
        F: Fn(C64, C64) -> C64 + Send + Sync + 'static,
        J: Fn(C64, C64, u32, u32) -> C64 + Send + Sync + 'static,
    {
        Self::leaf(tau, weight, Arc::new(f), Some(Arc::new(jet)))
    }

    fn leaf(tau: ModularParameter, weight: f64, eval: EvalFn, jet: Option<JetFn>) -> Self {
        Self { node: Arc::new(Node::Leaf { eval, jet }), tau, weight, h: DEFAULT_FD_STEP }
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn tau(&self) -> ModularParameter {
        self.tau
    }

    /// The constant `w` in the ladder and displacement formulas.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn fd_step(&self) -> f64 {
        self.h
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        match &*self.node {
            Node::Leaf { jet, .. } => jet.is_some(),
            Node::Ladder { inner, .. } | Node::Displaced { inner, .. } => inner.has_analytic_derivatives(),
            Node::Combination(terms) => terms.iter().all(|(_, f)| f.has_analytic_derivatives()),
        }
    }

    pub fn evaluate(&self, z: C64, zbar: C64) -> C64 {
        self.jet(z, zbar, 0, 0)
    }

    /// Value at a physical point, `z̄ = conj(z)`.
    pub fn at(&self, z: C64) -> C64 {
        self.jet(z, z.conj(), 0, 0)
    }

    pub fn d_z(&self, z: C64, zbar: C64) -> C64 {
        self.jet(z, zbar, 1, 0)
    }

    pub fn d_zbar(&self, z: C64, zbar: C64) -> C64 {
        self.jet(z, zbar, 0, 1)
    }

    /// `∂_z^a ∂_z̄^b f` at `(z, z̄)`.
    pub fn jet(&self, z: C64, zb: C64, a: u32, b: u32) -> C64 {
        match &*self.node {
            Node::Leaf { eval, jet } => match jet {
                Some(j) => j(z, zb, a, b),
                None => fd_jet(eval.as_ref(), z, zb, a, b, self.h),
            },
            Node::Ladder { op, inner } => ladder_jet(*op, inner, z, zb, a, b),
            Node::Displaced { d, inner } => displaced_jet(d, inner, z, zb, a, b),
            Node::Combination(terms) => terms.iter().map(|(c, f)| c * f.jet(z, zb, a, b)).sum(),
        }
    }

    /// Finite-difference derivatives of the values, ignoring analytic jets.
    pub fn fd_derivatives(&self, z: C64, zbar: C64) -> (C64, C64) {
        let h = self.h;
        let dz = (self.evaluate(z + h, zbar) - self.evaluate(z - h, zbar)) / (2.0 * h);
        let dzb = (self.evaluate(z, zbar + h) - self.evaluate(z, zbar - h)) / (2.0 * h);
        (dz, dzb)
    }

    /// Worst relative disagreement between `d_z`, `d_z̄` and finite differences.
    pub fn derivative_consistency(&self, points: &[C64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &p in points {
            let (fz, fzb) = self.fd_derivatives(p, p.conj());
            let (az, azb) = (self.d_z(p, p.conj()), self.d_zbar(p, p.conj()));
            let scale = az.norm().max(azb.norm()).max(self.at(p).norm()).max(1e-300);
            worst = worst.max((fz - az).norm() / scale).max((fzb - azb).norm() / scale);
        }
        worst
    }

    pub fn scale(&self, c: C64) -> Field {
        self.combine(vec![(c, self.clone())])
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.combine(vec![(C64::new(1.0, 0.0), self.clone()), (C64::new(-1.0, 0.0), other.clone())])
    }

    pub fn add(&self, other: &Field) -> Field {
        self.combine(vec![(C64::new(1.0, 0.0), self.clone()), (C64::new(1.0, 0.0), other.clone())])
    }

    /// `Σ cᵢ fᵢ`, carrying this field's `τ` and weight.
    pub fn combine(&self, terms: Vec<(C64, Field)>) -> Field {
        Field { node: Arc::new(Node::Combination(terms)), tau: self.tau, weight: self.weight, h: self.h }
    }

    fn wrap(&self, node: Node) -> Field {
        Field { node: Arc::new(node), tau: self.tau, weight: self.weight, h: self.h }
    }

    /// Samples at physical points in parallel, in input order.
    pub fn sample(&self, points: &[C64]) -> Vec<C64> {
        points.par_iter().map(|&p| self.at(p)).collect()
    }

    /// Largest `|f|` over the points.
    pub fn sup_norm(&self, points: &[C64]) -> f64 {
        self.sample(points).iter().map(|v| v.norm()).fold(0.0, crate::linalg::nan_max)
    }
}

fn fd_jet(f: &(dyn Fn(C64, C64) -> C64 + Send + Sync), z: C64, zb: C64, a: u32, b: u32, h: f64) -> C64 {
    if a == 0 && b == 0 {
        return f(z, zb);
    }
    // repeated centered difference (f(x+h) − f(x−h))/2h in each variable
    let scale = (2.0 * h).powi((a + b) as i32);
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..=a {
        let ci = binomial(a, i) * if i % 2 == 0 { 1.0 } else { -1.0 };
        let dz = (a as f64 - 2.0 * i as f64) * h;
        for j in 0..=b {
            let cj = binomial(b, j) * if j % 2 == 0 { 1.0 } else { -1.0 };
            let dzb = (b as f64 - 2.0 * j as f64) * h;
            acc += ci * cj * f(z + dz, zb + dzb);
        }
    }
    acc / scale
}

fn ladder_jet(op: LadderOp, f: &Field, z: C64, zb: C64, a: u32, b: u32) -> C64 {
    let w = f.weight;
    let s = (2.0 * w).sqrt();
    let q = 1.0 / (4.0 * w);
    let g = |i, j| f.jet(z, zb, i, j);
    // Leibniz with the linear factors z, z̄:
    // ∂^a∂̄^b (z̄ f) = z̄ f_{a,b} + b f_{a,b−1},  ∂^a∂̄^b (z f) = z f_{a,b} + a f_{a−1,b}
    let zbar_f = || zb * g(a, b) + if b > 0 { b as f64 * g(a, b - 1) } else { C64::new(0.0, 0.0) };
    let z_f = || z * g(a, b) + if a > 0 { a as f64 * g(a - 1, b) } else { C64::new(0.0, 0.0) };
    match op {
        LadderOp::APlus => -s * (g(a + 1, b) - q * zbar_f()),
        LadderOp::AMinus => s * (g(a, b + 1) + q * z_f()),
        LadderOp::BPlus => -s * (g(a, b + 1) - q * z_f()),
        LadderOp::BMinus => s * (g(a + 1, b) + q * zbar_f()),
    }
}

fn displaced_jet(d: &Displacement, f: &Field, z: C64, zb: C64, a: u32, b: u32) -> C64 {
    let q = 1.0 / (4.0 * f.weight);
    // prefactor exp(αz + βz̄)
    let alpha = d.ubar * q;
    let beta = -d.u * q;
    let pref = (alpha * z + beta * zb).exp();
    let (zs, zbs) = (z - d.u, zb - d.ubar);
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..=a {
        for j in 0..=b {
            let c = binomial(a, i) * binomial(b, j);
            acc += c * alpha.powu(a - i) * beta.powu(b - j) * f.jet(zs, zbs, i, j);
        }
    }
    pref * acc
}

pub fn ladder_apply(op: LadderOp, f: &Field) -> Field {
    f.wrap(Node::Ladder { op, inner: f.clone() })
}

pub fn displacement_apply(d: Displacement, f: &Field) -> Field {
    f.wrap(Node::Displaced { d, inner: f.clone() })
}

/// `P(z − z₀, z̄ − z̄₀) · exp(c (z − z₀)(z̄ − z̄₀))` with `P = Σ p_{mn} zᵐ z̄ⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyGaussian {
    pub coeffs: Vec<(u32, u32, C64)>,
    pub center: C64,
    pub c: f64,
}

impl PolyGaussian {
    pub fn value(&self, z: C64, zb: C64) -> C64 {
        self.jet(z, zb, 0, 0)
    }

    pub fn jet(&self, z: C64, zb: C64, a: u32, b: u32) -> C64 {
        let (x, xb) = (z - self.center, zb - self.center.conj());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..=a {
            for j in 0..=b {
                let p = self.poly_jet(x, xb, i, j);
                if p == C64::new(0.0, 0.0) {
                    continue;
                }
                acc += binomial(a, i) * binomial(b, j) * p * gaussian_jet(self.c, x, xb, a - i, b - j);
            }
        }
        acc
    }

    fn poly_jet(&self, x: C64, xb: C64, a: u32, b: u32) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(m, n, p) in &self.coeffs {
            if m < a || n < b {
                continue;
            }
            acc += p * falling(m, a) * falling(n, b) * x.powu(m - a) * xb.powu(n - b);
        }
        acc
    }

    pub fn into_field(self, tau: ModularParameter, weight: f64) -> Field {
        let s = Arc::new(self);
        let s2 = s.clone();
        Field::with_jet(tau, weight, move |z, zb| s.value(z, zb), move |z, zb, a, b| s2.jet(z, zb, a, b))
    }
}

/// `∂^a ∂̄^b exp(c x x̄) = c^b Σ_i C(a,i) b!/(b−i)! x^{b−i} (c x̄)^{a−i} exp(c x x̄)`.
fn gaussian_jet(c: f64, x: C64, xb: C64, a: u32, b: u32) -> C64 {
    let e = (c * x * xb).exp();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..=a.min(b) {
        acc += binomial(a, i) * falling(b, i) * x.powu(b - i) * (c * xb).powu(a - i);
    }
    C64::new(c, 0.0).powu(b) * acc * e
}

/// Ground state `exp(−z z̄ / 4w)`, annihilated by `a⁻` and `b⁻`.
pub fn ground_state(tau: ModularParameter, weight: f64) -> Field {
    PolyGaussian { coeffs: vec![(0, 0, C64::new(1.0, 0.0))], center: C64::new(0.0, 0.0), c: -0.25 / weight }
        .into_field(tau, weight)
}

/// Number state `z̄ⁿ exp(−z z̄ / 4w)`, proportional to `(a⁺)ⁿ` of the ground state.
pub fn number_state(tau: ModularParameter, weight: f64, n: u32) -> Field {
    PolyGaussian { coeffs: vec![(0, n, C64::new(1.0, 0.0))], center: C64::new(0.0, 0.0), c: -0.25 / weight }
        .into_field(tau, weight)
}

/// Normalized coherent state `(2πw)^{−1/2} exp(−|z − z₀|²/4w)` with `w = Im τ`.
pub fn coherent_state(z0: C64, tau: ModularParameter) -> Field {
    let w = tau.im();
    let norm = 1.0 / (TAU * w).sqrt();
    PolyGaussian { coeffs: vec![(0, 0, C64::new(norm, 0.0))], center: z0, c: -0.25 / w }.into_field(tau, w)
}

/// Eigenvalue of `a⁻` on [`coherent_state`]: `z₀ / (2√(2w))`.
pub fn coherent_eigenvalue(z0: C64, tau: &ModularParameter) -> C64 {
    z0 / (2.0 * (2.0 * tau.im()).sqrt())
}

/// Gaussian times a polynomial with pseudo-random coefficients from `seed`.
pub fn smooth_test_field(tau: ModularParameter, weight: f64, seed: u64) -> Field {
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    let mut next = || {
        // splitmix64
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut x = state;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
        (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let mut coeffs = Vec::new();
    for m in 0..3 {
        for n in 0..3 - m {
            coeffs.push((m, n, C64::new(next(), next())));
        }
    }
    let center = C64::new(0.3 * next(), 0.3 * next());
    PolyGaussian { coeffs, center, c: -0.25 / weight }.into_field(tau, weight)
}

/// `u(m) = l (m¹ + m² τ)` with `l² = 2πκw / Im τ`, so that the cocycle of
/// `D(u(m)) D(u(n))` is `e^{iπκ(m×n)}`.
pub fn lattice_displacement(m: [i64; 2], flux: &Flux, tau: &ModularParameter, weight: f64) -> Displacement {
    let l = lattice_scale(flux, tau, weight);
    Displacement::real(l * (m[0] as f64 + m[1] as f64 * tau.as_complex()))
}

pub fn lattice_scale(flux: &Flux, tau: &ModularParameter, weight: f64) -> f64 {
    (TAU * flux.kappa() * weight / tau.im()).sqrt()
}

/// Dual displacement `v(n*) = (l/κ)(n₁ τ − n₂)`; pairs integrally with the
/// lattice, so `D(v)` commutes with every `D(u(m))`.
pub fn dual_displacement(nstar: [i64; 2], flux: &Flux, tau: &ModularParameter, weight: f64) -> Displacement {
    let l = lattice_scale(flux, tau, weight) / flux.kappa();
    Displacement::real(l * (nstar[0] as f64 * tau.as_complex() - nstar[1] as f64))
}

pub fn cross(m: [i64; 2], n: [i64; 2]) -> i64 {
    m[0] * n[1] - m[1] * n[0]
}

/// Points of a square window `[−L, L]²` in the complex `z` plane, `n × n`.
pub fn window_grid(half_width: f64, n: usize) -> Vec<C64> {
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = -half_width + 2.0 * half_width * (i as f64 + 0.5) / n as f64;
            let y = -half_width + 2.0 * half_width * (j as f64 + 0.5) / n as f64;
            pts.push(C64::new(x, y));
        }
    }
    pts
}

fn sup_diff(a: &Field, b: &Field, points: &[C64]) -> f64 {
    a.sub(b).sup_norm(points)
}

/// `sup |D(m)D(n)f − e^{iπκ(m×n)} D(m+n)f|`.
pub fn group_law_residual(
    m: [i64; 2],
    n: [i64; 2],
    flux: &Flux,
    tau: &ModularParameter,
    f: &Field,
    points: &[C64],
) -> f64 {
    let w = f.weight();
    let (dm, dn) = (lattice_displacement(m, flux, tau, w), lattice_displacement(n, flux, tau, w));
    let lhs = displacement_apply(dm, &displacement_apply(dn, f));
    let phase = C64::from_polar(1.0, PI * flux.kappa() * cross(m, n) as f64);
    let rhs = displacement_apply(dm.add(&dn), f).scale(phase);
    sup_diff(&lhs, &rhs, points)
}

/// Measured plaquette phase `⟨D(a)D(b)D(a)⁻¹D(b)⁻¹ f, f⟩/⟨f, f⟩` on the grid and
/// the worst pointwise deviation from it.
pub fn commutator_phase(da: Displacement, db: Displacement, f: &Field, points: &[C64]) -> (C64, f64) {
    let loop_field =
        displacement_apply(da, &displacement_apply(db, &displacement_apply(da.neg(), &displacement_apply(db.neg(), f))));
    let lv = loop_field.sample(points);
    let fv = f.sample(points);
    let num: C64 = fv.iter().zip(&lv).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = fv.iter().map(|a| a.norm_sqr()).sum();
    let phase = num / den;
    let dev = fv.iter().zip(&lv).map(|(a, b)| (b - phase * a).norm()).fold(0.0, crate::linalg::nan_max);
    (phase, dev)
}

/// Plaquette holonomy residual `sup |D(e₁)D(e₂)D(e₁)⁻¹D(e₂)⁻¹ f − e^{2πiκ} f|`.
pub fn holonomy_residual(flux: &Flux, tau: &ModularParameter, f: &Field, points: &[C64]) -> f64 {
    let w = f.weight();
    let (d1, d2) = (lattice_displacement([1, 0], flux, tau, w), lattice_displacement([0, 1], flux, tau, w));
    plaquette_residual(d1, d2, C64::from_polar(1.0, TAU * flux.kappa()), f, points)
}

/// Dual plaquette residual against `e^{2πi/κ}`.
pub fn dual_holonomy_residual(flux: &Flux, tau: &ModularParameter, f: &Field, points: &[C64]) -> f64 {
    let w = f.weight();
    let (d1, d2) = (dual_displacement([1, 0], flux, tau, w), dual_displacement([0, 1], flux, tau, w));
    plaquette_residual(d1, d2, C64::from_polar(1.0, TAU / flux.kappa()), f, points)
}

fn plaquette_residual(d1: Displacement, d2: Displacement, expected: C64, f: &Field, points: &[C64]) -> f64 {
    let lhs =
        displacement_apply(d1, &displacement_apply(d2, &displacement_apply(d1.neg(), &displacement_apply(d2.neg(), f))));
    sup_diff(&lhs, &f.scale(expected), points)
}

/// `sup |[D(m), D(n)] f − 2i sin(πκ(m×n)) D(m+n) f|`.
pub fn sine_bracket_residual(
    m: [i64; 2],
    n: [i64; 2],
    flux: &Flux,
    tau: &ModularParameter,
    f: &Field,
    points: &[C64],
) -> f64 {
    let w = f.weight();
    let (dm, dn) = (lattice_displacement(m, flux, tau, w), lattice_displacement(n, flux, tau, w));
    let mn = displacement_apply(dm, &displacement_apply(dn, f));
    let nm = displacement_apply(dn, &displacement_apply(dm, f));
    let coeff = C64::new(0.0, 2.0 * (PI * flux.kappa() * cross(m, n) as f64).sin());
    let rhs = displacement_apply(dm.add(&dn), f).scale(coeff);
    sup_diff(&mn.sub(&nm), &rhs, points)
}

/// `sup |[D(m), D̃(n*)] f|`.
pub fn dual_commutation_residual(
    m: [i64; 2],
    nstar: [i64; 2],
    flux: &Flux,
    tau: &ModularParameter,
    f: &Field,
    points: &[C64],
) -> f64 {
    let w = f.weight();
    let (dm, dn) = (lattice_displacement(m, flux, tau, w), dual_displacement(nstar, flux, tau, w));
    let mn = displacement_apply(dm, &displacement_apply(dn, f));
    let nm = displacement_apply(dn, &displacement_apply(dm, f));
    sup_diff(&mn, &nm, points)
}

/// `sup |(XY − YX) f − c f|` for two ladder operators.
pub fn ladder_commutator_residual(x: LadderOp, y: LadderOp, expected: C64, f: &Field, points: &[C64]) -> f64 {
    let xy = ladder_apply(x, &ladder_apply(y, f));
    let yx = ladder_apply(y, &ladder_apply(x, f));
    sup_diff(&xy.sub(&yx), &f.scale(expected), points)
}

/// `⟨f, g⟩ = ∫ conj(f) g` over the square window `[−L, L]²` of the `z` plane.
pub fn plane_inner_product(f: &Field, g: &Field, half_width: f64, quad: &QuadratureSpec) -> C64 {
    let rule = quad.rule();
    let mut pts = Vec::with_capacity(rule.len() * rule.len());
    let mut wts = Vec::with_capacity(rule.len() * rule.len());
    for &(x, wx) in &rule {
        for &(y, wy) in &rule {
            pts.push(C64::new(half_width * (2.0 * x - 1.0), half_width * (2.0 * y - 1.0)));
            wts.push(wx * wy * 4.0 * half_width * half_width);
        }
    }
    let vals: Vec<C64> = pts.par_iter().map(|&p| f.at(p).conj() * g.at(p)).collect();
    vals.iter().zip(&wts).map(|(v, w)| v * w).sum()
}

/// `⟨f, a⁺a⁻ f⟩ / ⟨f, f⟩`.
pub fn number_expectation(f: &Field, half_width: f64, quad: &QuadratureSpec) -> f64 {
    let af = ladder_apply(LadderOp::AMinus, f);
    // ⟨f, a⁺a⁻ f⟩ = ‖a⁻ f‖²
    let num = plane_inner_product(&af, &af, half_width, quad).re;
    let den = plane_inner_product(f, f, half_width, quad).re;
    num / den
}

/// `⟨f, z f⟩ / ⟨f, f⟩`.
pub fn position_expectation(f: &Field, half_width: f64, quad: &QuadratureSpec) -> C64 {
    let g = f.clone();
    let zf = Field::from_fn(f.tau(), f.weight(), move |z, zb| z * g.evaluate(z, zb));
    plane_inner_product(f, &zf, half_width, quad) / plane_inner_product(f, f, half_width, quad).re
}
