//! Effective 3x3 polarization density matrices for single-photon states.
//!
//! A photon with a spread of momenta cannot be described by a 2x2 polarization
//! qubit in a rotation-covariant way. This crate computes the effective 3x3
//! polarization density matrix from the classical mode function of the photon,
//! models a focusing thin lens by ray tracing, and quantifies the resulting
//! loss of distinguishability between helicity states, the statistics of the
//! direction POVM, and the predictions of a planar photodetector.
//!
//! Module map:
//!
//! * [`polmat3`]: 3x3 density matrices, rotations, eigensystems, trace distance.
//! * [`modes`]: helicity basis, Gaussian wave packets, plane waves.
//! * [`quad`]: deterministic adaptive Gauss-Kronrod quadrature.
//! * [`reduce`]: density matrices from modes, the naive 2x2 reduction, series forms.
//! * [`lens`]: ray-traced thin lens and the converging spherical wave it produces.
//! * [`povm`]: direction POVM built from transversal projections.
//! * [`detector`]: planar-detector photocurrents versus energy fractions.

pub mod detector;
pub mod error;
pub mod lens;
pub mod modes;
pub mod polmat3;
pub mod povm;
pub mod quad;
pub mod reduce;

pub use error::{Error, Result};
pub use modes::{PhotonMode, Support, WaveVector};
pub use polmat3::{Complex3Vector, DensityMatrix3, Rotation3};
pub use quad::{QuadratureResult, QuadratureSpec};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
