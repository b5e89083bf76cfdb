//! Simulation and verification laboratory for a thermal stochastic lattice
//! gas with discrete velocities.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: velocity sets with exact arithmetic in ℤ[ϖ], the collision
//!   table and the per-site conserved quantities;
//! * [`equilibrium`]: grand canonical product measures, moment brackets,
//!   the compressibility matrix and the transport coefficients;
//! * [`dynamics`]: exact continuous-time simulation of exclusion jumps and
//!   on-site collisions on a periodic lattice;
//! * [`observables`]: currents, centered currents, Fourier fluctuation
//!   fields and covariance estimators;
//! * [`spectral`]: Fourier symbols, eigen-partitions, commutant projection,
//!   projected diffusion and the noise factor;
//! * [`oulimit`]: exact per-mode simulation of the limiting
//!   Ornstein–Uhlenbeck field;
//! * [`exactlab`]: exact-enumeration oracles on small systems.

// Index loops mirror the component formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod exactlab;
pub mod model;
pub mod observables;
pub mod oulimit;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

/// Number of conserved quantities: mass, three momentum components, energy.
pub const NCONS: usize = 5;

/// Default irrational velocity parameter.
pub const DEFAULT_VARPI: f64 = std::f64::consts::SQRT_2;

/// Seeded ChaCha8 generator on an independent stream, used for replica and
/// per-mode parallelism.
pub fn rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
