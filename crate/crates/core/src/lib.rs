//! Two-dimensional simulator for dissolution and bulk recrystallization of
//! polydisperse, arbitrarily shaped drug particles.
//!
//! Particle boundaries are tracked as the zero level set of a signed distance
//! field and advanced with a first-order upwind scheme. The local interface
//! speed comes from a curvature-dependent mass-transfer coefficient, and the
//! bulk liquid concentration is coupled back through a mass balance. Once the
//! bulk becomes supersaturated with respect to the decaying solubility of the
//! metastable solid form, dissolution halts and bulk recrystallization drains
//! the excess concentration into a crystallized-mass account.
//!
//! Module map:
//! - [`physchem`]: drug/fluid parameter sets, solubility decay, mass-transfer
//!   coefficients and their curvature dependence.
//! - [`levelset`]: grid, signed-distance field, upwind transport, curvature.
//! - [`geometry`]: shape seeding, contour extraction, boundary measures.
//! - [`dynamics`]: the coupled particle/bulk time stepper.
//! - [`oracle`]: independent reference solutions (circular-particle ODE,
//!   closed-form recrystallization) used for verification.
//! - [`sampling`]: seeded Weibull size sampling for particle populations.
//! - [`scenario`]: run configuration, presets, grid auto-sizing.
//! - [`output`]: CSV/JSON/manifest writers.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod levelset;
pub mod oracle;
pub mod output;
pub mod physchem;
pub mod sampling;
pub mod scenario;

pub use error::{Result, SimError};
