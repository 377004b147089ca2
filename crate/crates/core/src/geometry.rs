//! Modular parameters, complex structures and flux geometry.
//!
//! Everything here is expressed in magnetic-length units (`l_B = 1`). The
//! modulus `τ` fixes the holomorphic coordinate `z = x + τ y`; the complex
//! structure `J(τ)` is the real 2×2 matrix whose row action fixes that
//! coordinate, `(1, τ)·J = −i (1, τ)`.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// A point `τ` of the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularParameter {
    re: f64,
    im: f64,
}

impl ModularParameter {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Domain(format!("tau = {re} + {im}i is not finite")));
        }
        if im <= 0.0 {
            return Err(Error::Domain(format!("Im tau must be positive, got {im}")));
        }
        Ok(Self { re, im })
    }

    pub fn from_complex(tau: C64) -> Result<Self> {
        Self::new(tau.re, tau.im)
    }

    /// The square lattice, `τ = i`.
    pub fn i() -> Self {
        Self { re: 0.0, im: 1.0 }
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn as_complex(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    /// `τ + 1`.
    pub fn t(&self) -> Self {
        Self { re: self.re + 1.0, im: self.im }
    }

    /// `−1/τ`.
    pub fn s(&self) -> Self {
        let d = self.norm_sqr();
        Self { re: -self.re / d, im: self.im / d }
    }

    /// Action of an integer Möbius transformation `(aτ + b)/(cτ + d)`.
    pub fn mobius(&self, m: [[i64; 2]; 2]) -> Result<Self> {
        let tau = self.as_complex();
        let num = tau * m[0][0] as f64 + m[0][1] as f64;
        let den = tau * m[1][0] as f64 + m[1][1] as f64;
        Self::from_complex(num / den)
    }
}

impl fmt::Display for ModularParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_sign_negative() {
            write!(f, "{}-{}i", self.re, -self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Rational flux density `κ = N/M` with `gcd(N, M) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flux {
    n: u32,
    m: u32,
}

impl Flux {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Domain(format!("flux N/M needs N, M >= 1, got {n}/{m}")));
        }
        if gcd(n as u64, m as u64) != 1 {
            return Err(Error::Unsupported(format!(
                "flux {n}/{m} is not in lowest terms (gcd(M, N) must be 1)"
            )));
        }
        Ok(Self { n, m })
    }

    /// Numerator `N`.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Denominator `M` (dimension of the clock/shift representation).
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Theta level `K = MN`, the degeneracy of every Landau level.
    pub fn level(&self) -> u32 {
        self.n * self.m
    }

    pub fn kappa(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    /// Commutation phase `q = exp(2πiN/M)`.
    pub fn q(&self) -> C64 {
        C64::from_polar(1.0, TAU * self.n as f64 / self.m as f64)
    }

    /// Dual commutation phase `q̃ = exp(2πiM/N)`.
    pub fn q_dual(&self) -> C64 {
        C64::from_polar(1.0, TAU * self.m as f64 / self.n as f64)
    }
}

/// Eigenphases of the central translations `D(e₁)^M`, `D(e₂)^M`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VacuumAngles {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl VacuumAngles {
    pub fn new(alpha1: f64, alpha2: f64) -> Self {
        Self { alpha1, alpha2 }
    }

    pub fn zero() -> Self {
        Self::default()
    }
}

/// Real 2×2 matrix with `J² = −1`, acting on row vectors of coordinate coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexStructure(pub [[f64; 2]; 2]);

impl ComplexStructure {
    pub fn from_tau(tau: &ModularParameter) -> Self {
        let (re, im) = (tau.re(), tau.im());
        Self([[re / im, tau.norm_sqr() / im], [-1.0 / im, -re / im]])
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    /// Largest entry of `|J² + I|`.
    pub fn square_residual(&self) -> f64 {
        let a = &self.0;
        let sq = mat_mul(a, a);
        let mut worst: f64 = 0.0;
        for (i, row) in sq.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { -1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    /// `J` written in the standard complex basis `(x + iy, x − iy)`.
    pub fn in_standard_basis(&self) -> Matrix2<C64> {
        let q = standard_basis_change();
        let q_inv = q.try_inverse().expect("basis change is invertible");
        q * to_complex(&self.0) * q_inv
    }
}

/// Kähler metric `g = Jᵗ Ω₀` compatible with the canonical symplectic form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KahlerMetric(pub [[f64; 2]; 2]);

impl KahlerMetric {
    pub fn from_tau(tau: &ModularParameter) -> Self {
        let (re, im) = (tau.re(), tau.im());
        Self([[1.0 / im, re / im], [re / im, tau.norm_sqr() / im]])
    }

    /// `Jᵗ Ω₀` with `Ω₀ = [[0, 1], [−1, 0]]`.
    pub fn from_complex_structure(j: &ComplexStructure) -> Self {
        let jt = transpose(&j.0);
        Self(mat_mul(&jt, &[[0.0, 1.0], [-1.0, 0.0]]))
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol
    }

    /// Both eigenvalues of the symmetric matrix, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = &self.0;
        let mean = 0.5 * (a[0][0] + a[1][1]);
        let half_diff = 0.5 * (a[0][0] - a[1][1]);
        let rad = (half_diff * half_diff + a[0][1] * a[1][0]).sqrt();
        [mean - rad, mean + rad]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

pub fn complex_structure_from_tau(tau: &ModularParameter) -> ComplexStructure {
    ComplexStructure::from_tau(tau)
}

pub fn metric_from_tau(tau: &ModularParameter) -> KahlerMetric {
    KahlerMetric::from_tau(tau)
}

/// Squeeze magnitude and phase, `w = r e^{iφ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    r: f64,
    phi: f64,
}

impl SqueezeParams {
    /// `φ` is reduced to `[0, 2π)`; at `r = 0` it is canonicalized to 0.
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !(r.is_finite() && phi.is_finite()) || r < 0.0 {
            return Err(Error::Domain(format!("squeeze magnitude must be finite and >= 0, got r = {r}")));
        }
        let phi = if r == 0.0 { 0.0 } else { phi.rem_euclid(TAU) };
        // rem_euclid can round up to exactly 2π
        let phi = if phi >= TAU { 0.0 } else { phi };
        Ok(Self { r, phi })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// The hyperbolic rotation `[[cosh r, e^{−iφ} sinh r], [e^{iφ} sinh r, cosh r]]`.
    pub fn hyperbolic_rotation(&self) -> Matrix2<C64> {
        let (c, s) = (self.r.cosh(), self.r.sinh());
        let e = C64::from_polar(1.0, self.phi);
        Matrix2::new(C64::new(c, 0.0), e.conj() * s, e * s, C64::new(c, 0.0))
    }
}

/// Solves `cosh 2r = (1+|τ|²)/(2 Im τ)`, `sinh 2r cos φ = (1−|τ|²)/(2 Im τ)`,
/// `sinh 2r sin φ = −Re τ / Im τ`.
pub fn squeeze_from_tau(tau: &ModularParameter) -> SqueezeParams {
    let (re, im) = (tau.re(), tau.im());
    // cosh 2r − 1 = |τ − i|² / (2 Im τ), written without cancellation
    let d = (re * re + (im - 1.0) * (im - 1.0)) / (2.0 * im);
    let sinh2r = (d * (2.0 + d)).sqrt();
    let r = 0.5 * (d + sinh2r).ln_1p();
    if r == 0.0 {
        return SqueezeParams { r: 0.0, phi: 0.0 };
    }
    let cos_part = (1.0 - tau.norm_sqr()) / (2.0 * im);
    let sin_part = -re / im;
    let phi = sin_part.atan2(cos_part).rem_euclid(TAU);
    SqueezeParams { r, phi: if phi >= TAU { 0.0 } else { phi } }
}

pub fn tau_from_squeeze(s: &SqueezeParams) -> ModularParameter {
    let (ch, sh) = ((2.0 * s.r).cosh(), (2.0 * s.r).sinh());
    let (sin_phi, cos_phi) = s.phi.sin_cos();
    // ch + sh cos φ ≥ e^{−2r} > 0
    let im = 1.0 / (ch + sh * cos_phi);
    let re = -sh * sin_phi * im;
    ModularParameter { re, im }
}

/// `Q` with rows `(1, i)` and `(1, −i)`: coefficients of `x ± iy`.
pub fn standard_basis_change() -> Matrix2<C64> {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    Matrix2::new(one, i, one, -i)
}

/// `J(τ)` in the standard complex basis, obtained by squeezing the standard
/// structure: `H⁻¹ diag(−i, i) H` with `H` the hyperbolic rotation of `w`.
pub fn squeezed_structure_standard_basis(s: &SqueezeParams) -> Matrix2<C64> {
    let h = s.hyperbolic_rotation();
    let h_inv = h.try_inverse().expect("det H = 1");
    let j0 = Matrix2::new(C64::new(0.0, -1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    h_inv * j0 * h
}

/// Rebuilds the real `(x, y)`-basis complex structure from squeeze parameters.
/// Returns the structure and the largest imaginary part discarded by the
/// change of basis (zero up to rounding).
pub fn complex_structure_from_squeeze(s: &SqueezeParams) -> (ComplexStructure, f64) {
    let q = standard_basis_change();
    let q_inv = q.try_inverse().expect("basis change is invertible");
    let j = q_inv * squeezed_structure_standard_basis(s) * q;
    let mut out = [[0.0; 2]; 2];
    let mut leak: f64 = 0.0;
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = j[(r, c)].re;
            leak = leak.max(j[(r, c)].im.abs());
        }
    }
    (ComplexStructure(out), leak)
}

/// The conjugate-ordered form `(i / 2 Im τ)·[[1+|τ|², −2i Re τ + 1−|τ|²], [−2i Re τ − (1−|τ|²), −1−|τ|²]]`,
/// which is `J(τ)` in the basis `(x − iy, x + iy)`.
pub fn complex_structure_conjugate_basis(tau: &ModularParameter) -> Matrix2<C64> {
    let (re, im, a) = (tau.re(), tau.im(), tau.norm_sqr());
    let pre = C64::new(0.0, 1.0 / (2.0 * im));
    Matrix2::new(
        pre * (1.0 + a),
        pre * C64::new(1.0 - a, -2.0 * re),
        pre * C64::new(-(1.0 - a), -2.0 * re),
        pre * (-1.0 - a),
    )
}

/// Lattice spacing and commutation phases derived from a flux and a modulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxGeometry {
    /// `l₀ = l / l_B`, from `l₀² = 2πκ / Im τ`.
    pub l0: f64,
    pub q: C64,
    pub q_dual: C64,
}

pub fn flux_geometry(flux: &Flux, tau: &ModularParameter) -> FluxGeometry {
    FluxGeometry {
        l0: (TAU * flux.kappa() / tau.im()).sqrt(),
        q: flux.q(),
        q_dual: flux.q_dual(),
    }
}

/// A generator of the modular group acting on `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModularGenerator {
    /// `τ ↦ −1/τ`
    S,
    /// `τ ↦ τ + k`
    T(i64),
}

impl ModularGenerator {
    pub fn apply(&self, tau: &ModularParameter) -> ModularParameter {
        match *self {
            ModularGenerator::S => tau.s(),
            ModularGenerator::T(k) => ModularParameter { re: tau.re + k as f64, im: tau.im },
        }
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        match *self {
            ModularGenerator::S => [[0, -1], [1, 0]],
            ModularGenerator::T(k) => [[1, k], [0, 1]],
        }
    }

    fn inverse(&self) -> Self {
        match *self {
            ModularGenerator::S => ModularGenerator::S,
            ModularGenerator::T(k) => ModularGenerator::T(-k),
        }
    }
}

/// Applies a word right to left: `[g₁, …, g_k]` maps `τ` to `g₁(…g_k(τ))`.
pub fn apply_word(word: &[ModularGenerator], tau: &ModularParameter) -> ModularParameter {
    word.iter().rev().fold(*tau, |t, g| g.apply(&t))
}

/// Integer matrix of a word (product in the same order as [`apply_word`]).
pub fn word_matrix(word: &[ModularGenerator]) -> [[i64; 2]; 2] {
    let mut acc = [[1, 0], [0, 1]];
    for g in word {
        let m = g.matrix();
        acc = [
            [acc[0][0] * m[0][0] + acc[0][1] * m[1][0], acc[0][0] * m[0][1] + acc[0][1] * m[1][1]],
            [acc[1][0] * m[0][0] + acc[1][1] * m[1][0], acc[1][0] * m[0][1] + acc[1][1] * m[1][1]],
        ];
    }
    acc
}

const DOMAIN_TOL: f64 = 1e-12;

/// Membership in the fundamental domain: `|τ| > 1` for `−1/2 < Re τ < 0`,
/// `|τ| ≥ 1` for `0 ≤ Re τ ≤ 1/2`.
pub fn in_fundamental_domain(tau: &ModularParameter) -> bool {
    let (re, r2) = (tau.re(), tau.norm_sqr());
    if re < 0.0 {
        re > -0.5 + DOMAIN_TOL && r2 > 1.0 + DOMAIN_TOL
    } else {
        re <= 0.5 + DOMAIN_TOL && r2 >= 1.0 - DOMAIN_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub tau: ModularParameter,
    /// `apply_word(&word, &tau)` recovers the input.
    pub word: Vec<ModularGenerator>,
}

pub fn reduce_to_fundamental_domain(tau: &ModularParameter) -> Reduction {
    let mut cur = *tau;
    // generators applied to the input, in order
    let mut applied: Vec<ModularGenerator> = Vec::new();
    let push = |applied: &mut Vec<ModularGenerator>, g: ModularGenerator| {
        if let (Some(ModularGenerator::T(a)), ModularGenerator::T(b)) = (applied.last().copied(), g) {
            applied.pop();
            if a + b != 0 {
                applied.push(ModularGenerator::T(a + b));
            }
        } else if !matches!(g, ModularGenerator::T(0)) {
            applied.push(g);
        }
    };
    // each S step strictly increases Im τ, so this terminates; the cap guards
    // against pathological rounding only
    for _ in 0..10_000 {
        let shift = -(cur.re() - 0.5).ceil() as i64;
        if shift != 0 {
            let g = ModularGenerator::T(shift);
            cur = g.apply(&cur);
            push(&mut applied, g);
        }
        if cur.norm_sqr() < 1.0 - DOMAIN_TOL {
            cur = cur.s();
            push(&mut applied, ModularGenerator::S);
        } else {
            break;
        }
    }
    if cur.re() <= -0.5 + DOMAIN_TOL {
        cur = ModularGenerator::T(1).apply(&cur);
        push(&mut applied, ModularGenerator::T(1));
    }
    if cur.re() < 0.0 && cur.norm_sqr() <= 1.0 + DOMAIN_TOL {
        // on the unit circle −1/τ = −τ̄
        cur = cur.s();
        push(&mut applied, ModularGenerator::S);
    }
    let word = applied.iter().map(ModularGenerator::inverse).collect();
    Reduction { tau: cur, word }
}

pub(crate) fn to_complex(a: &[[f64; 2]; 2]) -> Matrix2<C64> {
    Matrix2::new(
        C64::new(a[0][0], 0.0),
        C64::new(a[0][1], 0.0),
        C64::new(a[1][0], 0.0),
        C64::new(a[1][1], 0.0),
    )
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose(a: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn max_abs_diff(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((a[i][j] - b[i][j]).abs());
        }
    }
    worst
}

/// Largest entry of `|A − B|` for complex 2×2 matrices.
pub fn max_abs_diff_c(a: &Matrix2<C64>, b: &Matrix2<C64>) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}
