//! Bond currents, centered currents, Fourier fluctuation fields and
//! covariance estimators.

mod covariance;
mod currents;
mod fourier;

pub use covariance::{max_z_real, write_covariance_csv, CovarianceRow, ModeCovariance};
pub use currents::{bond_factor, centered_current_g, currents, expected_centered_current, CurrentPair};
pub use fourier::{fourier_fluctuation, transported_field, FluctuationSample, ModeGrid, PhaseTable, TRANSPORT_SIGN};
