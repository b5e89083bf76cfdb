//! Exact-enumeration oracles on small systems: generator identities, the
//! carré du champ, canonical ensembles, Laplace sums and the finite-volume
//! variance.

mod canonical;
mod generator;
mod laplace;
mod report;

pub use canonical::{
    canonical_expectation, centered_observable, conditional_square_mean, ensemble_gap, ensemble_scan,
    grand_canonical_expectation, mean_and_gradient, EnsemblePoint, EnsembleScan, LocalObservable, SectorCounter,
};
pub use generator::{
    carre_du_champ, carre_du_champ_residual, collision_symmetry_residual, conservation_residual,
    current_decomposition_residual, dirichlet_form, finite_volume_variance, invariance_residual, EnumeratedSystem,
    Part, SparseGenerator, VarianceReport, DEFAULT_STATE_CAP,
};
pub use laplace::{laplace_sum, standard_pairs, LaplaceResult, LAPLACE_ALPHA};
pub use report::{default_suite, run_oracles, OracleReport, ToySystemSpec, ORACLE_TOLERANCE};
