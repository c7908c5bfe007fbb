//! Two-scale Landau-Lifshitz magnetization dynamics.
//!
//! The crate integrates
//!
//! ```text
//! eps dm/dt = m x h_T - alpha m x (m x h_T),     h_T = Lap m + h_d(m) + h_ext(t)
//! ```
//!
//! on a rectangular cell grid (or a single macrospin cell), and provides the
//! tools needed to study its small-`eps` behaviour: the demagnetizing field
//! operator, frozen-time equilibria, the linearized operator around an
//! equilibrium and its H2 dissipation form, the Neumann-cosine Galerkin
//! projector, and orchestrated asymptotics and hysteresis experiments.
//!
//! Everything here is pure computation and `no_std` (with `alloc`); file
//! formats and the command-line front-end live in `twoscale-cli`.

#![no_std]
// `!(x > 0.0)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod demag;
pub mod dynamics;
mod error;
pub mod experiments;
mod fft;
pub mod grid;
pub mod linearization;
pub mod schedule;
pub mod spectral;

pub use error::{Error, Result};

/// Three-component real vector.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Real 3x3 matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use demag::{demag_field, demag_tensor_estimate, DemagModel};
pub use dynamics::{
    integrate, relax_to_equilibrium, step, DtPolicy, Integrator, Problem, Relaxation, Run,
    RunRecord, SolverConfig,
};
pub use grid::{DomainMask, EllipsoidSpec, Grid3, VectorField};
pub use schedule::{DirectionPath, Envelope, FieldSchedule};
