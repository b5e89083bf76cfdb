use lgas_core::equilibrium::{ChemicalPotential, EquilibriumParams};
use lgas_core::model::{Model, ToySpec};
use lgas_core::observables::ModeGrid;
use lgas_core::spectral::DiffusionTensor;
use lgas_core::{DEFAULT_VARPI, NCONS};
use nalgebra::Matrix5;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: ModelConfig,
    pub equilibrium: EquilibriumConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub ou: OuConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_varpi")]
    pub varpi: f64,
    pub toy: Option<ToySpec>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { varpi: DEFAULT_VARPI, toy: None }
    }
}

fn default_varpi() -> f64 {
    DEFAULT_VARPI
}

/// Either the reference form `(r, theta)` or a full chemical potential `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub r: Option<f64>,
    pub theta: Option<f64>,
    pub n: Option<[f64; NCONS]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub chi: f64,
    pub half_width: usize,
    pub collision_rate_scale: f64,
    /// Macroscopic time of `simulate`.
    pub horizon: f64,
    pub checkpoints: usize,
    /// Product-measure samples of `static-cov`.
    pub replicas: usize,
    pub chunks: usize,
    pub modes: Vec<[i64; 3]>,
    pub snapshot: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            chi: 1.5,
            half_width: 4,
            collision_rate_scale: 1.0,
            horizon: 0.01,
            checkpoints: 10,
            replicas: 2000,
            chunks: 16,
            modes: vec![[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, -1, 2]],
            snapshot: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbarSpec {
    /// `D = χ𝕀`.
    Zero,
    /// `D̄_{αγ} = δ_{αγ} S C⁻¹` for a symmetric positive definite `S`.
    Dissipative(Vec<Vec<f64>>),
    /// One `5×5` block per axis pair, row-major `α·3 + γ`.
    Blocks(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    pub dbar: DbarSpec,
    pub tau_eig: Option<f64>,
    /// Macroscopic wavevectors of the symbol dump.
    pub k: Vec<[f64; 3]>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            dbar: DbarSpec::Zero,
            tau_eig: None,
            k: vec![[1.0, 0.0, 0.0], [0.4, 0.3, -1.2], [0.3, -0.7, 0.5]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OuConfig {
    /// Step; defaults per mode to `min(0.05, 0.25/|abscissa|)`.
    pub delta: Option<f64>,
    pub lag_steps: usize,
    pub nlags: usize,
    pub replicas: usize,
    pub half_width: usize,
    pub modes: Vec<[i64; 3]>,
}

impl Default for OuConfig {
    fn default() -> Self {
        Self {
            delta: None,
            lag_steps: 2,
            nlags: 3,
            replicas: 10_000,
            half_width: 8,
            modes: vec![[1, 0, 0], [0, 1, 1], [1, -1, 0], [0, 0, 2]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub z: f64,
    pub oracle: f64,
    pub lyapunov: f64,
    pub ec: f64,
    pub hermiticity: f64,
    pub composition: f64,
    pub conservation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            z: 4.0,
            oracle: lgas_core::exactlab::ORACLE_TOLERANCE,
            lyapunov: 1e-10,
            ec: 1e-12,
            hermiticity: 1e-8,
            composition: 1e-12,
            conservation: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

impl RunConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, seed_override)
    }

    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if seed_override.is_some() {
            cfg.seed = seed_override;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.seed.is_none() {
            return bad("missing required field `seed`".into());
        }
        let e = &self.equilibrium;
        match (e.r, e.theta, e.n) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            _ => return bad("equilibrium needs either `r` and `theta` or `n`".into()),
        }
        let d = &self.dynamics;
        if d.half_width == 0 || d.checkpoints == 0 || d.chunks == 0 {
            return bad("dynamics.half_width, checkpoints and chunks must be positive".into());
        }
        if !(d.horizon.is_finite() && d.horizon >= 0.0) {
            return bad(format!("dynamics.horizon = {} must be non-negative", d.horizon));
        }
        if let Some(delta) = self.ou.delta {
            if !(delta.is_finite() && delta > 0.0) {
                return bad(format!("ou.delta = {delta} must be positive"));
            }
        }
        let o = &self.ou;
        if o.half_width == 0 || o.lag_steps == 0 || o.replicas == 0 || o.nlags < 2 {
            return bad("ou needs half_width, lag_steps, replicas >= 1 and nlags >= 2".into());
        }
        let model = self.model().map_err(|e| CliError::Config(e.to_string()))?;
        lgas_core::dynamics::DynamicsParams::for_lattice(d.chi, d.half_width, model.varpi())
            .validate(&model)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let grids = [("dynamics", &d.modes, d.half_width), ("ou", &self.ou.modes, self.ou.half_width)];
        for (section, modes, half_width) in grids {
            let grid = ModeGrid::new(half_width, model.dim());
            for &z in modes {
                grid.validate(z).map_err(|e| CliError::Config(format!("{section}.modes: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn model(&self) -> lgas_core::Result<Model> {
        match &self.model.toy {
            Some(t) => Model::toy(self.model.varpi, t),
            None => Model::canonical(self.model.varpi),
        }
    }

    pub fn chemical_potential(&self) -> lgas_core::Result<ChemicalPotential> {
        let e = &self.equilibrium;
        match e.n {
            Some(n) => ChemicalPotential::new(n),
            None => ChemicalPotential::reference(e.r.expect("validated"), e.theta.expect("validated")),
        }
    }

    pub fn equilibrium_params(&self, model: &Model) -> lgas_core::Result<EquilibriumParams> {
        Ok(EquilibriumParams::new(self.chemical_potential()?, &model.velocities))
    }

    pub fn diffusion_tensor(&self, compressibility: &Matrix5<f64>) -> Result<DiffusionTensor, CliError> {
        let chi = self.dynamics.chi;
        let square = |rows: &Vec<Vec<f64>>, what: &str| -> Result<[[f64; NCONS]; NCONS], CliError> {
            if rows.len() != NCONS || rows.iter().any(|r| r.len() != NCONS) {
                return Err(CliError::Config(format!("{what} must be {NCONS}x{NCONS}")));
            }
            Ok(std::array::from_fn(|i| std::array::from_fn(|j| rows[i][j])))
        };
        let tensor = match &self.spectral.dbar {
            DbarSpec::Zero => Ok(DiffusionTensor::isotropic(chi)),
            DbarSpec::Dissipative(s) => {
                let s = square(s, "spectral.dbar.dissipative")?;
                DiffusionTensor::dissipative(&Matrix5::from_fn(|i, j| s[i][j]), compressibility, chi)
            }
            DbarSpec::Blocks(b) => {
                if b.len() != 9 {
                    return Err(CliError::Config("spectral.dbar.blocks needs 9 blocks".into()));
                }
                let blocks = b.iter().map(|m| square(m, "spectral.dbar.blocks")).collect::<Result<Vec<_>, _>>()?;
                DiffusionTensor::from_blocks(blocks, chi)
            }
        };
        let tensor = tensor.map_err(|e| CliError::Config(e.to_string()))?;
        tensor.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(tensor)
    }

    /// Hex SHA-256 of the canonical JSON form (defaults filled, seed applied).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
