//! Spectral analysis of lattice Schrödinger-type operators whose kinetic
//! term is a strictly increasing function of the discrete Laplacian,
//! perturbed by a single point impurity of strength `v` at the origin.
//!
//! On the Fourier side the operator acts as multiplication by a symbol
//! `g(theta)` on the d-torus plus a rank-one term. The crate provides:
//!
//! * [`multiplier`]: the catalogue of admissible kinetic multipliers, their
//!   spectral windows and edge exponents;
//! * [`quadrature`]: the torus quadrature of the two criterion integrals
//!   J(E) and I(E), including improper edge integrals and the analytic
//!   finiteness criteria;
//! * [`spectral`]: eigenvalue verdicts, the coupling/energy maps, the
//!   threshold couplings, and edge classification (unconditional eigenvalue
//!   versus resonance versus embedded mode);
//! * [`oracle`]: an independent finite Fourier-grid discretization checked
//!   by a rank-one secular equation and a dense eigensolver.
//!
//! The probabilistic reading of these operators (continuous-time walks with
//! long jumps, killed at the impurity) is not modeled here; only the
//! spectral data is.

pub mod error;
mod gauss;
pub mod multiplier;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
mod sum;

mod eigen;

pub use error::Error;
pub use multiplier::{BernsteinAtom, EdgeExponents, MultiplierSpec, SpectralWindow};
pub use oracle::{
    build_grid_operator, convergence_study, dense_check, secular_eigenvalue, ConvergenceRow,
    ConvergenceStudy, GridOperator, SecularSolution,
};
pub use quadrature::{
    divergence_trace, edge_finiteness, integral_i, integral_j, symbol, FinitenessVerdict,
    IntegralEstimate, IntegralKind, QuadSettings, TorusDomain,
};
pub use spectral::{
    behavior_table, classify_edge, coupling_for_energy, eigenvector_profile, energy_for_coupling,
    is_eigenvalue, thresholds, Behavior, BehaviorRow, BranchLocation, BranchPoint, CouplingSign,
    Edge, EdgeBehavior, EigencurvePoint, EigenvalueVerdict, ThresholdReport, VerdictReason,
};
