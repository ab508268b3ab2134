//! Traveling-wave analysis for the advection-diffusion equation
//!
//! ```text
//! rho_t + f(rho)_x = (D(rho) rho_x)_x
//! ```
//!
//! when the diffusivity `D` changes sign over the density range, as it does
//! in vehicular-traffic and crowd models where negative diffusivity encodes
//! aggregation. The crate verifies the geometric existence conditions for
//! wavefront profiles crossing a sign change of `D`, solves for admissible
//! end states, computes the profiles themselves with singular-point
//! handling, and runs vanishing-viscosity diagnostics.
//!
//! The narrative guide lives in `book/`; every code snippet there runs as a
//! doc-test (see [`guide`]).

pub mod cli;
pub mod existence;
pub mod fluxgeom;
pub mod guide;
pub mod models;
pub mod numerics;
pub mod profile;
pub mod viscosity;

pub use existence::WaveSpec;
pub use fluxgeom::{PatternClass, SignPattern};
pub use models::{DiffusivityModel, DimensionalFrame, FluxModel, VelocityLaw};
pub use profile::Profile;
