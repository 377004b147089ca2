//! Numerics for the Landau problem on a torus at rational flux.
//!
//! Theta-function Bloch waves, magnetic translations, clock/shift
//! representations of the noncommutative torus, and modular invariance of the
//! partition sum. Lengths are in units of the magnetic length.

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lll;
pub mod nc_torus;
pub mod partition;
pub mod quadrature;
pub mod theta;
pub mod wavefield;

pub use num_complex;

/// Double-precision complex number used throughout.
pub type C64 = num_complex::Complex64;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use wavefield::{Displacement, Field, LadderOp};
pub use geometry::{
    complex_structure_from_squeeze, complex_structure_from_tau, flux_geometry, metric_from_tau,
    reduce_to_fundamental_domain, squeeze_from_tau, tau_from_squeeze, ComplexStructure, Flux,
    FluxGeometry, KahlerMetric, ModularGenerator, ModularParameter, Reduction, SqueezeParams,
    VacuumAngles,
};
pub use lll::{eigenphase_table, gram_rank, EigenphaseTable, LLLBasis};
pub use nc_torus::{
    bimodule_consistency, clock_matrix, commutant_dimension, dual_matrices, shift_matrix,
    uq_sl2_dual_generators, uq_sl2_generators, weyl_element, BimoduleReport, CSMatrix, WeylWord,
};
pub use partition::{modular_invariance_report, state_norm, z_tilde, InvarianceReport};
pub use quadrature::{QuadratureScheme, QuadratureSpec};
pub use theta::{
    character, dedekind_eta, theta, theta_dz, truncation_bound, ThetaSpec, TruncationPolicy,
};
