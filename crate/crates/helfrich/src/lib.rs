//! Simulation and analysis of the area- and volume-preserving Helfrich flow
//! on closed triangulated surfaces.
//!
//! The crate is organised along the pipeline of a flow experiment:
//!
//! * [`surface`] — triangle mesh data structure, validation and all discrete
//!   geometric measurements (area, volume, curvatures, diameter),
//! * [`energy`] — scalar functionals: Willmore and Helfrich bending energies,
//!   CMC-deficit, isoperimetric ratio,
//! * [`multiplier`] — the L² gradient of the Helfrich energy and the two
//!   nonlocal Lagrange multipliers enforcing area and volume conservation,
//! * [`flow`] — time integration with per-step constraint restoration and
//!   energy-decay safeguards,
//! * [`axisym`] — generators for axisymmetric initial data, profile curves
//!   and hyperbolic length,
//! * [`diagnostics`] — admissibility thresholds, Li–Yau functional, curvature
//!   concentration and monotonicity quantities.

// Index loops over several parallel per-vertex/per-corner arrays are the
// clearer idiom in the assembly kernels.
#![allow(clippy::needless_range_loop)]

pub mod axisym;
pub mod diagnostics;
pub mod energy;
pub mod flow;
pub mod multiplier;
pub mod surface;

pub use surface::{Geometry, ScalarField, SurfaceError, TriMesh, VectorField};
