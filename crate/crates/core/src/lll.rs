//! The `MN`-fold degenerate lowest Landau level at flux `κ = N/M`.
//!
//! States live in the rescaled coordinate `𝔷` on the cell with periods
//! `(1, τ)`:
//!
//! `Ψ_jk = exp(πK 𝔷(𝔷 − 𝔷̄)/(2 Im τ) + iα₁𝔷) · θ^K_{r_jk}(𝔷 + γ, τ)`,
//! `K = MN`, `r_jk = jN + kM mod K`, `γ = (τα₁ − α₂)/(2πK)`,
//!
//! with field weight `w = Im τ / (2πK)`. In these units the elementary
//! translations are displacements by `−1/M`, `−τ/M` (left, clock/shift on `j`)
//! and `−1/N`, `−τ/N` (right, acting on `k`).

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Flux, ModularParameter, VacuumAngles};
use crate::linalg::{nan_max, numerical_rank, CMatrix};
use crate::quadrature::QuadratureSpec;
use crate::theta::{theta_series, ThetaSpec, TruncationPolicy};
use crate::wavefield::{displacement_apply, ladder_apply, Displacement, Field, LadderOp};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Default sample grid resolution per axis.
pub const DEFAULT_GRID: usize = 24;

/// Tolerance on the constancy of a measured translation eigenphase.
pub const EIGENPHASE_TOL: f64 = 1e-7;

/// `n × n` points `x + τy` with `x, y ∈ {0, 1/n, …, (n−1)/n}`.
pub fn cell_grid(tau: &ModularParameter, n: usize) -> Vec<C64> {
    let t = tau.as_complex();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(i as f64 / n as f64 + t * (j as f64 / n as f64));
        }
    }
    out
}

/// `(jN + kM) mod MN`.
pub fn residue_index(flux: &Flux, j: u32, k: u32) -> u32 {
    let (m, n) = (flux.m() as u64, flux.n() as u64);
    ((j as u64 * n + k as u64 * m) % (m * n)) as u32
}

/// Whether `(j, k) ↦ r_jk` hits every residue mod `MN` exactly once.
pub fn residue_map_is_bijective(m: u32, n: u32) -> bool {
    let k = (m * n) as usize;
    let mut seen = vec![false; k];
    for j in 0..m as u64 {
        for l in 0..n as u64 {
            let r = ((j * n as u64 + l * m as u64) % k as u64) as usize;
            if seen[r] {
                return false;
            }
            seen[r] = true;
        }
    }
    true
}

/// `M² l₀² Im τ / 2π − MN`.
pub fn flux_bookkeeping_residual(flux: &Flux, tau: &ModularParameter) -> f64 {
    let g = crate::geometry::flux_geometry(flux, tau);
    let m = flux.m() as f64;
    (m * m * g.l0 * g.l0 * tau.im() / TAU - flux.level() as f64).abs()
}

struct Params {
    flux: Flux,
    tau: ModularParameter,
    angles: VacuumAngles,
    gamma: C64,
    pol: TruncationPolicy,
}

impl Params {
    fn level(&self) -> f64 {
        self.flux.level() as f64
    }

    /// `πK / (2 Im τ) = 1/(4w)`.
    fn c(&self) -> f64 {
        PI * self.level() / (2.0 * self.tau.im())
    }

    fn exponent(&self, z: C64, zb: C64) -> C64 {
        self.c() * z * (z - zb) + I * self.angles.alpha1 * z
    }

    /// `∂_z^a ∂_z̄^b Ψ` for the state with theta residue `r`.
    fn jet(&self, r: u32, z: C64, zb: C64, a: u32, b: u32) -> C64 {
        let spec = ThetaSpec::new(self.flux.level(), r).expect("residue reduced mod K");
        let e = self.exponent(z, zb);
        let f = match theta_series(spec, z + self.gamma, &self.tau, e, a as usize, &self.pol) {
            Ok((v, _)) => v,
            Err(_) => return C64::new(f64::NAN, f64::NAN),
        };
        if a == 0 && b == 0 {
            return f[0];
        }
        let c = self.c();
        // ∂_z E = c(2z − z̄) + iα₁, constant second derivative 2c
        let l1 = c * (2.0 * z - zb) + I * self.angles.alpha1;
        let p = exp_derivative_polys(a as usize, 2.0 * c);
        let p_vals: Vec<C64> = p.iter().map(|coeffs| poly_eval(coeffs, l1)).collect();
        // ∂̄^b Ψ = (−c z)^b Ψ since the theta factor is holomorphic
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..=a.min(b) {
            let zi = falling(b, i) * z.powu(b - i);
            for j in 0..=(a - i) {
                let l = a - i - j;
                let multi = binomial(a, i) * binomial(a - i, j);
                acc += multi * zi * p_vals[j as usize] * f[l as usize];
            }
        }
        C64::new(-c, 0.0).powu(b) * acc
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k.min(n - k)).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Coefficients (in `L`) of `P_j` with `∂^j e^E = e^E P_j(∂E)` when `∂²E = s`:
/// `P₀ = 1`, `P_{j+1} = L P_j + s P_j'`.
pub(crate) fn exp_derivative_polys(order: usize, s: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    for j in 0..order {
        let prev = &out[j];
        let mut next = vec![0.0; prev.len() + 1];
        for (m, &p) in prev.iter().enumerate() {
            next[m + 1] += p;
            if m > 0 {
                next[m - 1] += s * m as f64 * p;
            }
        }
        out.push(next);
    }
    out
}

pub(crate) fn poly_eval(coeffs: &[f64], x: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Basis `Ψ_jk`, `j ∈ Z_M`, `k ∈ Z_N`, stored in row-major order `s = jN + k`.
#[derive(Clone)]
pub struct LLLBasis {
    params: Arc<Params>,
}

impl std::fmt::Debug for LLLBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LLLBasis")
            .field("flux", &self.params.flux)
            .field("tau", &self.params.tau)
            .field("angles", &self.params.angles)
            .field("gamma", &self.params.gamma)
            .finish()
    }
}

pub fn build_basis(flux: Flux, tau: ModularParameter, angles: VacuumAngles, pol: TruncationPolicy) -> LLLBasis {
    let k = flux.level() as f64;
    let gamma = (tau.as_complex() * angles.alpha1 - angles.alpha2) / (TAU * k);
    // closures cannot report truncation errors, so the cap is lifted and any
    // failure surfaces as NaN
    let pol = TruncationPolicy { max_terms: pol.max_terms.max(1 << 24), ..pol };
    LLLBasis { params: Arc::new(Params { flux, tau, angles, gamma, pol }) }
}

impl LLLBasis {
    /// Checked constructor from raw `(M, N)`.
    pub fn new(m: u32, n: u32, tau: ModularParameter, angles: VacuumAngles, pol: TruncationPolicy) -> Result<Self> {
        Ok(build_basis(Flux::new(n, m)?, tau, angles, pol))
    }

    pub fn flux(&self) -> Flux {
        self.params.flux
    }

    pub fn m(&self) -> usize {
        self.params.flux.m() as usize
    }

    pub fn n(&self) -> usize {
        self.params.flux.n() as usize
    }

    pub fn len(&self) -> usize {
        self.m() * self.n()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self) -> ModularParameter {
        self.params.tau
    }

    pub fn angles(&self) -> VacuumAngles {
        self.params.angles
    }

    pub fn gamma(&self) -> C64 {
        self.params.gamma
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.params.pol
    }

    /// `w = Im τ / (2πMN)`.
    pub fn weight(&self) -> f64 {
        self.params.tau.im() / (TAU * self.params.level())
    }

    pub fn residue(&self, j: usize, k: usize) -> u32 {
        residue_index(&self.params.flux, j as u32, k as u32)
    }

    /// All `(j, k)` in storage order.
    pub fn indices(&self) -> Vec<(usize, usize)> {
        (0..self.m()).flat_map(|j| (0..self.n()).map(move |k| (j, k))).collect()
    }

    pub fn index_of(&self, j: usize, k: usize) -> usize {
        j * self.n() + k
    }

    pub fn state(&self, j: usize, k: usize) -> Field {
        let r = self.residue(j % self.m(), k % self.n());
        let p = self.params.clone();
        let p2 = self.params.clone();
        Field::with_jet(
            self.params.tau,
            self.weight(),
            move |z, zb| p.jet(r, z, zb, 0, 0),
            move |z, zb, a, b| p2.jet(r, z, zb, a, b),
        )
    }

    /// `(a⁺)ⁿ Ψ_jk`.
    pub fn raise_level(&self, j: usize, k: usize, n: u32) -> Field {
        (0..n).fold(self.state(j, k), |f, _| ladder_apply(LadderOp::APlus, &f))
    }

    /// Left translation by `e₁` (`i = 1`) or `e₂` (`i = 2`): `−1/M`, `−τ/M`.
    pub fn left_translation(&self, i: usize) -> Displacement {
        let m = self.m() as f64;
        match i {
            1 => Displacement::real(C64::new(-1.0 / m, 0.0)),
            _ => Displacement::real(-self.params.tau.as_complex() / m),
        }
    }

    /// Right (dual) translation by `e*₁` (`−τ/N`) or `e*₂` (`−1/N`).
    pub fn right_translation(&self, i: usize) -> Displacement {
        let n = self.n() as f64;
        match i {
            1 => Displacement::real(-self.params.tau.as_complex() / n),
            _ => Displacement::real(C64::new(-1.0 / n, 0.0)),
        }
    }

    /// `MN × |grid|` matrix of sampled states.
    pub fn sample_matrix(&self, grid: &[C64]) -> CMatrix {
        let rows: Vec<Vec<C64>> = self.indices().par_iter().map(|&(j, k)| self.state(j, k).sample(grid)).collect();
        CMatrix::from_fn(rows.len(), grid.len(), |r, c| rows[r][c])
    }
}

/// Worst violation of the two displayed quasi-periodicity conditions.
pub fn boundary_residual_field(f: &Field, flux: &Flux, tau: &ModularParameter, angles: &VacuumAngles, grid: &[C64]) -> f64 {
    let k = flux.level() as f64;
    let c = PI * k / (2.0 * tau.im());
    let t = tau.as_complex();
    grid.par_iter()
        .map(|&z| {
            let zb = z.conj();
            let base = f.evaluate(z, zb);
            let p1 = (I * angles.alpha1 + c * (z - zb)).exp();
            let r1 = (f.evaluate(z + 1.0, zb + 1.0) - p1 * base).norm();
            let p2 = (I * angles.alpha2 + c * (t.conj() * z - t * zb)).exp();
            let r2 = (f.evaluate(z + t, zb + t.conj()) - p2 * base).norm();
            nan_max(r1, r2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, nan_max)
}

pub fn boundary_residual(basis: &LLLBasis, j: usize, k: usize, grid: &[C64]) -> f64 {
    boundary_residual_field(&basis.state(j, k), &basis.flux(), &basis.tau(), &basis.angles(), grid)
}

/// `max(sup |D(e₁)^M f − e^{iα₁} f|, sup |D(e₂)^M f − e^{iα₂} f|)`.
pub fn center_eigen_residual_field(basis: &LLLBasis, f: &Field, grid: &[C64]) -> f64 {
    let a = basis.angles();
    let mut worst: f64 = 0.0;
    for (i, alpha) in [(1, a.alpha1), (2, a.alpha2)] {
        let d = basis.left_translation(i);
        let moved = (0..basis.m()).fold(f.clone(), |g, _| displacement_apply(d, &g));
        let r = moved.sub(&f.scale(C64::from_polar(1.0, alpha))).sup_norm(grid);
        worst = nan_max(worst, r);
    }
    worst
}

pub fn center_eigen_residual(basis: &LLLBasis, j: usize, k: usize, grid: &[C64]) -> f64 {
    center_eigen_residual_field(basis, &basis.state(j, k), grid)
}

/// Numerical rank of the sampled basis.
pub fn gram_rank(basis: &LLLBasis, grid: &[C64], threshold: f64) -> Result<usize> {
    if grid.len() < 4 * basis.len() {
        return Err(Error::Precondition(format!(
            "gram rank needs at least {} sample points, got {}",
            4 * basis.len(),
            grid.len()
        )));
    }
    Ok(numerical_rank(&basis.sample_matrix(grid), threshold))
}

/// `sup |D(e₁)(a⁺Ψ) − a⁺(D(e₁)Ψ)|`.
pub fn raising_translation_residual(basis: &LLLBasis, j: usize, k: usize, grid: &[C64]) -> f64 {
    let psi = basis.state(j, k);
    let d = basis.left_translation(1);
    let a = displacement_apply(d, &ladder_apply(LadderOp::APlus, &psi));
    let b = ladder_apply(LadderOp::APlus, &displacement_apply(d, &psi));
    a.sub(&b).sup_norm(grid)
}

/// `∫_cell conj(f) g dx dy` with `z = x + τy`.
pub fn cell_inner_product(f: &Field, g: &Field, tau: &ModularParameter, quad: &QuadratureSpec) -> C64 {
    let t = tau.as_complex();
    let rule = quad.square_rule();
    let vals: Vec<C64> = rule
        .par_iter()
        .map(|&(x, y, w)| {
            let z = x + t * y;
            w * f.at(z).conj() * g.at(z)
        })
        .collect();
    vals.into_iter().sum()
}

/// A translation eigenphase measured on the grid: `λ = ⟨Ψ, TΨ⟩/⟨Ψ, Ψ⟩` with
/// spread `max |TΨ − λΨ| / max |Ψ|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMeasurement {
    pub phase: C64,
    pub spread: f64,
}

/// Image of a translation identified as `phase · Ψ_target`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftMeasurement {
    pub target: (usize, usize),
    pub phase: C64,
    pub spread: f64,
    /// Normalized overlap with the target, 1 for an exact match.
    pub correlation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenphaseEntry {
    pub j: usize,
    pub k: usize,
    pub residue: u32,
    /// `D(e₁)`, diagonal on `j`.
    pub left_clock: PhaseMeasurement,
    /// `D(e₂)`, cycles `j`.
    pub left_shift: ShiftMeasurement,
    /// `D̃(e*₂)`, diagonal on `k`.
    pub right_clock: PhaseMeasurement,
    /// `D̃(e*₁)`, cycles `k`.
    pub right_shift: ShiftMeasurement,
}

/// Measured index conventions of a basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    /// `D(e₂) Ψ_jk ∝ Ψ_{j+left_step, k}`.
    pub left_step: usize,
    /// `D̃(e*₁) Ψ_jk ∝ Ψ_{j, k+right_step}`.
    pub right_step: usize,
    /// For each `j`, the `s` with `D(e₁)`-phase `e^{i(α₁ + 2πsN)/M}`.
    pub clock_labels: Vec<usize>,
    /// For each `k`, the `s` with `D̃(e*₂)`-phase `e^{i(α₁ + 2πsM)/N}`.
    pub dual_clock_labels: Vec<usize>,
}

impl Calibration {
    pub fn is_canonical(&self) -> bool {
        let ident = |v: &[usize]| v.iter().enumerate().all(|(i, &s)| i == s);
        (self.left_step == 1 || self.clock_labels.len() == 1)
            && (self.right_step == 1 || self.dual_clock_labels.len() == 1)
            && ident(&self.clock_labels)
            && ident(&self.dual_clock_labels)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenphaseTable {
    pub entries: Vec<EigenphaseEntry>,
    pub calibration: Calibration,
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn sup(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, nan_max)
}

fn measure_phase(psi: &[C64], image: &[C64]) -> PhaseMeasurement {
    let phase = inner(psi, image) / inner(psi, psi).re;
    let dev = psi.iter().zip(image).map(|(p, t)| (t - phase * p).norm()).fold(0.0, nan_max);
    PhaseMeasurement { phase, spread: dev / sup(psi) }
}

fn measure_shift(samples: &[Vec<C64>], indices: &[(usize, usize)], image: &[C64]) -> ShiftMeasurement {
    let img_norm = inner(image, image).re.sqrt();
    let mut best = (0usize, -1.0f64);
    for (s, row) in samples.iter().enumerate() {
        let corr = inner(row, image).norm() / (inner(row, row).re.sqrt() * img_norm);
        if corr > best.1 {
            best = (s, corr);
        }
    }
    let m = measure_phase(&samples[best.0], image);
    ShiftMeasurement { target: indices[best.0], phase: m.phase, spread: m.spread, correlation: best.1 }
}

fn nearest_label(phase: C64, base: f64, step: f64, count: usize) -> usize {
    (0..count)
        .min_by(|&a, &b| {
            let da = (phase - C64::from_polar(1.0, base + step * a as f64)).norm();
            let db = (phase - C64::from_polar(1.0, base + step * b as f64)).norm();
            da.total_cmp(&db)
        })
        .unwrap_or(0)
}

/// Measures all four elementary translations on every state and calibrates
/// the index conventions.
pub fn eigenphase_table(basis: &LLLBasis, grid: &[C64], tol: f64) -> Result<EigenphaseTable> {
    let idx = basis.indices();
    let samples: Vec<Vec<C64>> = idx.par_iter().map(|&(j, k)| basis.state(j, k).sample(grid)).collect();
    let (m, n) = (basis.m(), basis.n());
    let a = basis.angles();
    let entries: Vec<EigenphaseEntry> = idx
        .par_iter()
        .enumerate()
        .map(|(s, &(j, k))| {
            let psi = basis.state(j, k);
            let image = |d: Displacement| displacement_apply(d, &psi).sample(grid);
            EigenphaseEntry {
                j,
                k,
                residue: basis.residue(j, k),
                left_clock: measure_phase(&samples[s], &image(basis.left_translation(1))),
                left_shift: measure_shift(&samples, &idx, &image(basis.left_translation(2))),
                right_clock: measure_phase(&samples[s], &image(basis.right_translation(2))),
                right_shift: measure_shift(&samples, &idx, &image(basis.right_translation(1))),
            }
        })
        .collect();

    for e in &entries {
        let spreads = [e.left_clock.spread, e.left_shift.spread, e.right_clock.spread, e.right_shift.spread];
        let worst = spreads.iter().copied().fold(0.0, nan_max);
        if worst.is_nan() || worst > tol {
            return Err(Error::ConventionMismatch {
                j: e.j,
                k: e.k,
                detail: format!("translation image is not a phase times a basis state (spread {worst:.3e} > {tol:.1e})"),
            });
        }
    }

    let step_of = |e: &EigenphaseEntry, left: bool| -> (usize, bool) {
        if left {
            let (tj, tk) = e.left_shift.target;
            ((tj + m - e.j) % m, tk == e.k)
        } else {
            let (tj, tk) = e.right_shift.target;
            ((tk + n - e.k) % n, tj == e.j)
        }
    };
    let mut steps = [None, None];
    for e in &entries {
        for (slot, left) in [(0, true), (1, false)] {
            let (st, ok) = step_of(e, left);
            if !ok || steps[slot].is_some_and(|s| s != st) {
                return Err(Error::ConventionMismatch {
                    j: e.j,
                    k: e.k,
                    detail: format!(
                        "{} translation does not act as a uniform cycle (target {:?})",
                        if left { "left" } else { "right" },
                        if left { e.left_shift.target } else { e.right_shift.target }
                    ),
                });
            }
            steps[slot] = Some(st);
        }
    }

    let mf = m as f64;
    let nf = n as f64;
    let (nn, mm) = (basis.flux().n() as f64, basis.flux().m() as f64);
    let mut clock_labels = vec![0; m];
    let mut dual_clock_labels = vec![0; n];
    for e in &entries {
        clock_labels[e.j] = nearest_label(e.left_clock.phase, a.alpha1 / mf, TAU * nn / mf, m);
        dual_clock_labels[e.k] = nearest_label(e.right_clock.phase, a.alpha1 / nf, TAU * mm / nf, n);
    }

    Ok(EigenphaseTable {
        entries,
        calibration: Calibration {
            left_step: steps[0].unwrap_or(0),
            right_step: steps[1].unwrap_or(0),
            clock_labels,
            dual_clock_labels,
        },
    })
}

impl EigenphaseTable {
    /// Distance between the measured `D(e₁)` phases and the multiset
    /// `{e^{i(α₁ + 2πsN)/M}}` with each value repeated `N` times.
    pub fn clock_multiset_residual(&self, basis: &LLLBasis) -> f64 {
        let (m, n) = (basis.m(), basis.n());
        let a1 = basis.angles().alpha1;
        let nn = basis.flux().n() as f64;
        let mut expected: Vec<C64> = (0..m)
            .flat_map(|s| std::iter::repeat_n(C64::from_polar(1.0, (a1 + TAU * s as f64 * nn) / m as f64), n))
            .collect();
        let mut worst: f64 = 0.0;
        for e in &self.entries {
            let (pos, d) = expected
                .iter()
                .enumerate()
                .map(|(i, v)| (i, (v - e.left_clock.phase).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((0, f64::INFINITY));
            worst = nan_max(worst, d);
            if !expected.is_empty() {
                expected.swap_remove(pos);
            }
        }
        worst
    }

    /// Worst deviation of the measured phases from the clock/shift prediction
    /// (`e^{i(α₁+2πjN)/M}`, `e^{iα₂/M}`, `e^{i(α₁+2πkM)/N}`, `e^{iα₂/N}`).
    pub fn prediction_residual(&self, basis: &LLLBasis) -> f64 {
        let (mf, nf) = (basis.m() as f64, basis.n() as f64);
        let (nn, mm) = (basis.flux().n() as f64, basis.flux().m() as f64);
        let a = basis.angles();
        self.entries
            .iter()
            .map(|e| {
                let c1 = C64::from_polar(1.0, (a.alpha1 + TAU * e.j as f64 * nn) / mf);
                let s1 = C64::from_polar(1.0, a.alpha2 / mf);
                let c2 = C64::from_polar(1.0, (a.alpha1 + TAU * e.k as f64 * mm) / nf);
                let s2 = C64::from_polar(1.0, a.alpha2 / nf);
                [(e.left_clock.phase - c1).norm(), (e.left_shift.phase - s1).norm(), (e.right_clock.phase - c2).norm(), (e.right_shift.phase - s2).norm()]
                    .into_iter()
                    .fold(0.0, nan_max)
            })
            .fold(0.0, nan_max)
    }
}
