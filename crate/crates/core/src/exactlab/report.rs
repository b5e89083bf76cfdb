use super::generator::{
    carre_du_champ_residual, collision_symmetry_residual, conservation_residual, current_decomposition_residual,
    invariance_residual, EnumeratedSystem, Part, DEFAULT_STATE_CAP,
};
use crate::dynamics::Lattice;
use crate::equilibrium::{ChemicalPotential, EquilibriumParams};
use crate::model::{Model, ToySpec};
use crate::Result;
use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// Residual tolerance of the exact identities.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub identity: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub system_hash: String,
}

/// One enumerated system of the oracle suite.
#[derive(Debug, Clone, Serialize)]
pub struct ToySystemSpec {
    pub name: String,
    pub toy: ToySpec,
    pub varpi: f64,
    pub half_width: usize,
    pub lattice_dim: usize,
    pub chi: f64,
    pub collision_rate_scale: f64,
    pub n: [f64; 5],
}

impl ToySystemSpec {
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build(&self) -> Result<EnumeratedSystem> {
        let model = Arc::new(Model::toy(self.varpi, &self.toy)?);
        let lattice = Arc::new(Lattice::new(self.half_width, self.lattice_dim)?);
        EnumeratedSystem::build(model, lattice, self.chi, self.collision_rate_scale, DEFAULT_STATE_CAP)
    }
}

/// Default suite: the one-dimensional pair on 3 and 7 sites, and the
/// two-dimensional diagonal toy (which has collisions) on a 3-site ring.
pub fn default_suite(varpi: f64) -> Vec<ToySystemSpec> {
    let n = [0.3, 0.2, -0.1, 0.0, -0.4];
    vec![
        ToySystemSpec {
            name: "pair-3".into(),
            toy: ToySpec::one_d_pair(),
            varpi,
            half_width: 1,
            lattice_dim: 1,
            chi: 1.0,
            collision_rate_scale: 1.0,
            n,
        },
        ToySystemSpec {
            name: "pair-7".into(),
            toy: ToySpec::one_d_pair(),
            varpi,
            half_width: 3,
            lattice_dim: 1,
            chi: 0.75,
            collision_rate_scale: 1.0,
            n,
        },
        ToySystemSpec {
            name: "diagonal-3".into(),
            toy: ToySpec::two_d_diagonal(),
            varpi,
            half_width: 1,
            lattice_dim: 1,
            chi: 0.9,
            collision_rate_scale: 1.3,
            n,
        },
    ]
}

/// Runs every exact identity on one system.
pub fn run_oracles(spec: &ToySystemSpec, seed: u64) -> Result<Vec<OracleReport>> {
    let sys = spec.build()?;
    let hash = spec.hash();
    let p = EquilibriumParams::new(ChemicalPotential::new(spec.n)?, &sys.model.velocities);
    let mu = sys.product_measure(&p);
    let mut rng = crate::rng(seed, 0);
    let f: Vec<f64> = (0..sys.nstates()).map(|_| rng.random::<f64>() - 0.5).collect();
    let g: Vec<f64> = (0..sys.nstates()).map(|_| rng.random::<f64>() - 0.5).collect();
    let row_sum = (0..sys.nstates())
        .map(|i| {
            let off: f64 = sys.exchange.row(i).chain(sys.collision.row(i)).map(|(_, r)| r).sum();
            (off - sys.exchange.exit_rate(i) - sys.collision.exit_rate(i)).abs()
        })
        .fold(0.0, f64::max);
    let min_rate = (0..sys.nstates())
        .flat_map(|i| sys.exchange.row(i).chain(sys.collision.row(i)))
        .map(|(_, r)| r)
        .fold(f64::INFINITY, f64::min);
    let checks = [
        ("generator row sums", row_sum),
        ("nonnegative rates", (-min_rate).max(0.0)),
        ("product measure invariance", invariance_residual(&sys, &mu)),
        ("conserved totals", conservation_residual(&sys)),
        ("current decomposition", current_decomposition_residual(&sys)),
        ("carre du champ (exchange)", carre_du_champ_residual(&sys, Part::Exchange, &f, &g)),
        ("carre du champ (collision)", carre_du_champ_residual(&sys, Part::Collision, &f, &g)),
        ("collision kernel symmetry", collision_symmetry_residual(&sys)),
    ];
    Ok(checks
        .iter()
        .map(|&(name, r)| OracleReport {
            identity: format!("{}: {name}", spec.name),
            max_residual: r,
            tolerance: ORACLE_TOLERANCE,
            pass: r < ORACLE_TOLERANCE,
            system_hash: hash.clone(),
        })
        .collect())
}
