//! Clock/shift representations of the noncommutative tori `𝕋_κ` and `𝕋_{1/κ}`.
//!
//! `C = e^{iα₁/M} diag(e^{2πijN/M})`, `S = e^{iα₂/M} (cyclic subdiagonal)`,
//! so that `CS = qSC` with `q = e^{2πiN/M}`. Weyl words are
//! `W(m) = q^{−m¹m²/2} C^{m¹} S^{m²}` with `q^{1/2} = e^{iπN/M}`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, kron, least_squares, max_abs_diff, nan_max, nullity, numerical_rank, unitarity_residual, unitary_pow, CMatrix};
use crate::lll::LLLBasis;
use crate::wavefield::{cross, displacement_apply};
use crate::C64;

/// Relative singular-value cutoff for commutant and span computations.
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct CSMatrix {
    mat: CMatrix,
}

impl CSMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::Domain(format!("expected a non-empty square matrix, got {:?}", mat.shape())));
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.mat)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn pow(&self, e: i64) -> CSMatrix {
        CSMatrix { mat: unitary_pow(&self.mat, e) }
    }

    pub fn mul(&self, other: &CSMatrix) -> CSMatrix {
        CSMatrix { mat: &self.mat * &other.mat }
    }

    /// Rows of `(re, im)` pairs, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| [self.mat[(i, j)].re, self.mat[(i, j)].im]).collect()).collect()
    }
}

/// Winding numbers `(m¹, m²)` of a Weyl word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeylWord {
    pub m1: i64,
    pub m2: i64,
}

impl WeylWord {
    pub fn new(m1: i64, m2: i64) -> Self {
        Self { m1, m2 }
    }

    pub fn as_array(&self) -> [i64; 2] {
        [self.m1, self.m2]
    }
}

fn diag(phases: impl Iterator<Item = f64>) -> CMatrix {
    let v: Vec<C64> = phases.map(|p| C64::from_polar(1.0, p)).collect();
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(v))
}

/// Cyclic shift with ones on the subdiagonal and the top-right corner.
fn cyclic_sub(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn clock_matrix(m: u32, n: u32, alpha1: f64) -> CSMatrix {
    let mf = m.max(1) as f64;
    let mat = diag((0..m.max(1) as u64).map(|j| (alpha1 + TAU * ((j * n as u64) % m.max(1) as u64) as f64) / mf));
    CSMatrix { mat }
}

pub fn shift_matrix(m: u32, alpha2: f64) -> CSMatrix {
    let d = m.max(1) as usize;
    CSMatrix { mat: cyclic_sub(d) * C64::from_polar(1.0, alpha2 / d as f64) }
}

/// `e^{iπ (N/M) e}`: integer powers of the fixed root `q^{1/2} = e^{iπN/M}`.
fn half_power(n: u32, m: u32, e: i64) -> C64 {
    let m = m.max(1) as i64;
    // reduce mod 2M so the angle stays small
    let k = (e * n as i64).rem_euclid(2 * m);
    C64::from_polar(1.0, PI * k as f64 / m as f64)
}

pub fn weyl_element(word: WeylWord, m: u32, n: u32, angles: &crate::geometry::VacuumAngles) -> CSMatrix {
    let c = clock_matrix(m, n, angles.alpha1);
    let s = shift_matrix(m, angles.alpha2);
    let mat = (c.pow(word.m1).mat * s.pow(word.m2).mat) * half_power(n, m, -word.m1 * word.m2);
    CSMatrix { mat }
}

/// `‖C S − expected · S C‖_max`.
pub fn commutation_residual(a: &CSMatrix, b: &CSMatrix, expected: C64) -> f64 {
    max_abs_diff(&(&a.mat * &b.mat), &((&b.mat * &a.mat) * expected))
}

/// `‖D(e₁)D(e₂) − e^{2πiN/M} D(e₂)D(e₁)‖_max` for the clock/shift pair.
pub fn q_commutation_residual(m: u32, n: u32, angles: &crate::geometry::VacuumAngles) -> f64 {
    let q = half_power(n, m, 2);
    commutation_residual(&clock_matrix(m, n, angles.alpha1), &shift_matrix(m, angles.alpha2), q)
}

/// `‖W(a)W(b) − e^{iπκ(a×b)} W(a+b)‖_max`.
pub fn weyl_cocycle_residual(a: WeylWord, b: WeylWord, m: u32, n: u32, angles: &crate::geometry::VacuumAngles) -> f64 {
    let wa = weyl_element(a, m, n, angles);
    let wb = weyl_element(b, m, n, angles);
    let wab = weyl_element(WeylWord::new(a.m1 + b.m1, a.m2 + b.m2), m, n, angles);
    let phase = half_power(n, m, cross(a.as_array(), b.as_array()));
    max_abs_diff(&(&wa.mat * &wb.mat), &(wab.mat * phase))
}

/// `‖[W(a), W(b)] − 2i sin(πκ(a×b)) W(a+b)‖_max` at zero vacuum angles.
pub fn sine_structure_residual(m: u32, n: u32, a: WeylWord, b: WeylWord) -> f64 {
    let z = crate::geometry::VacuumAngles::zero();
    let wa = weyl_element(a, m, n, &z);
    let wb = weyl_element(b, m, n, &z);
    let wab = weyl_element(WeylWord::new(a.m1 + b.m1, a.m2 + b.m2), m, n, &z);
    let x = cross(a.as_array(), b.as_array());
    let coeff = C64::new(0.0, 2.0 * (PI * n as f64 * x as f64 / m.max(1) as f64).sin());
    max_abs_diff(&(&wa.mat * &wb.mat - &wb.mat * &wa.mat), &(wab.mat * coeff))
}

/// The dual pair `(D̃(e*₁), D̃(e*₂))` of dimension `N`: a cyclic superdiagonal
/// shift `e^{iα₂/N}·Subᵀ` and the clock `e^{iα₁/N} diag(e^{2πikM/N})`, with
/// `D̃(e*₁)D̃(e*₂) = q̃ D̃(e*₂)D̃(e*₁)`.
pub fn dual_matrices(m: u32, n: u32, angles: &crate::geometry::VacuumAngles) -> (CSMatrix, CSMatrix) {
    let d = n.max(1) as usize;
    let r1 = cyclic_sub(d).transpose() * C64::from_polar(1.0, angles.alpha2 / d as f64);
    let r2 = clock_matrix(n, m, angles.alpha1).mat;
    (CSMatrix { mat: r1 }, CSMatrix { mat: r2 })
}

pub fn dual_commutation_residual(m: u32, n: u32, angles: &crate::geometry::VacuumAngles) -> f64 {
    let (r1, r2) = dual_matrices(m, n, angles);
    commutation_residual(&r1, &r2, half_power(m, n, 2))
}

/// Dimension of `{X : XG = GX for all G}`.
pub fn commutant_dimension(generators: &[CSMatrix]) -> Result<usize> {
    let d = match generators.first() {
        Some(g) => g.dim(),
        None => return Err(Error::Precondition("commutant needs at least one generator".into())),
    };
    if generators.iter().any(|g| g.dim() != d) {
        return Err(Error::Precondition("generators must share one dimension".into()));
    }
    let id = identity(d);
    // column-major vec: vec(GX − XG) = (I ⊗ G − Gᵀ ⊗ I) vec(X)
    let blocks: Vec<CMatrix> = generators.iter().map(|g| kron(&id, &g.mat) - kron(&g.mat.transpose(), &id)).collect();
    let mut stacked = CMatrix::zeros(blocks.len() * d * d, d * d);
    for (b, blk) in blocks.iter().enumerate() {
        stacked.view_mut((b * d * d, 0), (d * d, d * d)).copy_from(blk);
    }
    Ok(nullity(&stacked, RANK_THRESHOLD))
}

/// Dimension of the linear span of `{W(m) : m ∈ Z_M²}`.
pub fn weyl_span_dimension(m: u32, n: u32) -> usize {
    let d = m.max(1) as usize;
    let z = crate::geometry::VacuumAngles::zero();
    let mut cols = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            let w = weyl_element(WeylWord::new(a as i64, b as i64), m, n, &z);
            for (i, v) in w.mat.iter().enumerate() {
                cols[(i, a * d + b)] = *v;
            }
        }
    }
    numerical_rank(&cols, RANK_THRESHOLD)
}

/// One comparison between a measured action and its matrix prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionCheck {
    pub name: String,
    pub max_deviation: f64,
    /// Output and input `(j, k)` of the worst entry.
    pub worst_entry: ((usize, usize), (usize, usize)),
    pub measured: C64,
    pub predicted: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BimoduleReport {
    pub checks: Vec<ActionCheck>,
    /// `‖(CX)R − C(XR)‖` over the four left/right generator pairs and a test array.
    pub matrix_commutation: f64,
    /// `sup |T T̃ Ψ − T̃ T Ψ|` over states and generator pairs, relative to `sup |Ψ|`.
    pub function_commutation: f64,
    pub tolerance: f64,
}

impl BimoduleReport {
    pub fn worst_action_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_deviation).fold(0.0, nan_max)
    }

    pub fn passed(&self) -> bool {
        self.worst_action_deviation() <= self.tolerance
            && self.function_commutation <= self.tolerance
            && self.matrix_commutation <= 1e-13
    }
}

fn compare_action(name: &str, measured: &CMatrix, predicted: &CMatrix, basis: &LLLBasis) -> ActionCheck {
    let idx = basis.indices();
    let mut worst = (0.0f64, 0usize, 0usize);
    for r in 0..measured.nrows() {
        for c in 0..measured.ncols() {
            let d = (measured[(r, c)] - predicted[(r, c)]).norm();
            if d.is_nan() || d > worst.0 {
                worst = (d, r, c);
            }
        }
    }
    ActionCheck {
        name: name.to_string(),
        max_deviation: worst.0,
        worst_entry: (idx[worst.1], idx[worst.2]),
        measured: measured[(worst.1, worst.2)],
        predicted: predicted[(worst.1, worst.2)],
    }
}

/// Compares the function-level translations on the sampled basis with the
/// clock/shift matrices acting on the `M × N` coefficient array: left
/// translations as `X ↦ CX`, `X ↦ SX`; dual translations as `X ↦ X D̃`.
pub fn bimodule_consistency(basis: &LLLBasis, grid: &[C64], tol: f64) -> BimoduleReport {
    let (m, n) = (basis.flux().m(), basis.flux().n());
    let a = basis.angles();
    let idx = basis.indices();
    let samples = basis.sample_matrix(grid).transpose();
    let measure = |d| -> CMatrix {
        let cols: Vec<Vec<C64>> = idx.par_iter().map(|&(j, k)| displacement_apply(d, &basis.state(j, k)).sample(grid)).collect();
        let images = CMatrix::from_fn(grid.len(), idx.len(), |r, c| cols[c][r]);
        least_squares(&samples, &images)
    };
    let clock = clock_matrix(m, n, a.alpha1).mat;
    let shift = shift_matrix(m, a.alpha2).mat;
    let (r1, r2) = dual_matrices(m, n, &a);
    let (r1, r2) = (r1.mat, r2.mat);
    let id_m = identity(m as usize);
    let id_n = identity(n as usize);
    // coefficient arrays are flattened row-major, s = jN + k
    let left = |g: &CMatrix| kron(g, &id_n);
    let right = |g: &CMatrix| kron(&id_m, &g.transpose());
    let checks = vec![
        compare_action("left D(e1) = clock", &measure(basis.left_translation(1)), &left(&clock), basis),
        compare_action("left D(e2) = shift", &measure(basis.left_translation(2)), &left(&shift), basis),
        compare_action("right D~(e1*) = dual shift", &measure(basis.right_translation(1)), &right(&r1), basis),
        compare_action("right D~(e2*) = dual clock", &measure(basis.right_translation(2)), &right(&r2), basis),
    ];

    let x = CMatrix::from_fn(m as usize, n as usize, |i, j| C64::new((1.0 + i as f64).sin() + j as f64, (2.0 + j as f64).cos() - i as f64));
    let mut matrix_commutation: f64 = 0.0;
    for l in [&clock, &shift] {
        for r in [&r1, &r2] {
            let lhs = (l * &x) * r;
            let rhs = l * (&x * r);
            matrix_commutation = nan_max(matrix_commutation, max_abs_diff(&lhs, &rhs));
        }
    }

    let scale = samples.iter().map(|v| v.norm()).fold(0.0, nan_max);
    let mut function_commutation: f64 = 0.0;
    for li in [1, 2] {
        for ri in [1, 2] {
            let (dl, dr) = (basis.left_translation(li), basis.right_translation(ri));
            let worst = idx
                .par_iter()
                .map(|&(j, k)| {
                    let psi = basis.state(j, k);
                    let lr = displacement_apply(dl, &displacement_apply(dr, &psi));
                    let rl = displacement_apply(dr, &displacement_apply(dl, &psi));
                    lr.sub(&rl).sup_norm(grid)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(0.0, nan_max);
            function_commutation = nan_max(function_commutation, worst / scale);
        }
    }

    BimoduleReport { checks, matrix_commutation, function_commutation, tolerance: tol }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UqGenerators {
    pub j_plus: CSMatrix,
    pub j_minus: CSMatrix,
    /// `q^{J₃}`.
    pub q_j3: CSMatrix,
    pub q: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UqResiduals {
    /// `‖q^{J₃} J± q^{−J₃} − q^{±1} J±‖_max`, worst of the two signs.
    pub conjugation: f64,
    /// `‖[J₊, J₋] − (q^{2J₃} − q^{−2J₃})/(q − q⁻¹)‖_max`.
    pub commutator: f64,
}

impl UqResiduals {
    pub fn worst(&self) -> f64 {
        nan_max(self.conjugation, self.commutator)
    }
}

/// Builds `J± = (W(±1, ±1) − W(∓1, ±1))/(q − q⁻¹)` and `q^{J₃} = W(1, 0)` from a
/// pair with `AB = qBA`, where `q = e^{2πi p/d}` and `W(m) = q^{−m¹m²/2} A^{m¹} B^{m²}`.
fn uq_from_pair(a: &CSMatrix, b: &CSMatrix, p: u32, d: u32) -> Result<UqGenerators> {
    let q = half_power(p, d, 2);
    let diff = q - q.inv();
    if diff.norm() < 1e-12 {
        return Err(Error::DegenerateDeformation { m: d, n: p });
    }
    let w = |m1: i64, m2: i64| -> CMatrix { (a.pow(m1).mat * b.pow(m2).mat) * half_power(p, d, -m1 * m2) };
    let j_plus = (w(1, 1) - w(-1, 1)) / diff;
    let j_minus = (w(-1, -1) - w(1, -1)) / diff;
    Ok(UqGenerators { j_plus: CSMatrix { mat: j_plus }, j_minus: CSMatrix { mat: j_minus }, q_j3: a.clone(), q })
}

impl UqGenerators {
    pub fn residuals(&self) -> UqResiduals {
        let k = &self.q_j3.mat;
        let k_inv = k.adjoint();
        let jp = &self.j_plus.mat;
        let jm = &self.j_minus.mat;
        let conj_p = max_abs_diff(&(k * jp * &k_inv), &(jp * self.q));
        let conj_m = max_abs_diff(&(k * jm * &k_inv), &(jm * self.q.inv()));
        let k2 = k * k;
        let k2_inv = &k_inv * &k_inv;
        let rhs = (k2 - k2_inv) / (self.q - self.q.inv());
        let comm = max_abs_diff(&(jp * jm - jm * jp), &rhs);
        UqResiduals { conjugation: nan_max(conj_p, conj_m), commutator: comm }
    }
}

/// `U_q(sl₂)` at `q = e^{2πiN/M}` from the clock/shift pair.
pub fn uq_sl2_generators(m: u32, n: u32) -> Result<UqGenerators> {
    uq_from_pair(&clock_matrix(m, n, 0.0), &shift_matrix(m, 0.0), n, m)
}

/// The dual copy at `q̃ = e^{2πiM/N}` from the dual pair.
pub fn uq_sl2_dual_generators(m: u32, n: u32) -> Result<UqGenerators> {
    let (r1, r2) = dual_matrices(m, n, &crate::geometry::VacuumAngles::zero());
    uq_from_pair(&r1, &r2, m, n)
}
