//! Exact per-mode simulation of the limiting Ornstein–Uhlenbeck field
//! `dξ = N̂ξ dt + B̂ dW` and its stationary space-time covariance.

use crate::spectral::{expm, psd_sqrt, CMat};
use crate::stats::CrossMoment;
use crate::{Error, Result, NCONS};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Default macroscopic time step.
pub const DEFAULT_DELTA: f64 = 0.05;

/// Floor on eigenvalues of the transition covariance before clipping,
/// relative to `max(1, ‖Ĉ‖_max)`.
pub const SIGMA_FLOOR: f64 = 1e-12;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Exact transition over a step `Δ`: `ξ ← Fξ + η`, `η ~ CN(0, Σ_Δ)`.
#[derive(Debug, Clone)]
pub struct OUTransition {
    pub delta: f64,
    /// `F = exp(N̂Δ)`.
    pub f: CMat,
    /// `Σ_Δ = Ĉ − FĈF*`, hermitian and clipped to PSD.
    pub sigma: CMat,
    factor: CMat,
}

impl OUTransition {
    pub fn new(n_hat: &CMat, c_hat: &CMat, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("step {delta} must be positive")));
        }
        let f = expm(&(n_hat * real(delta)));
        let raw = c_hat - &f * c_hat * f.adjoint();
        let sigma = (&raw + raw.adjoint()) * real(0.5);
        let scale = c_hat.camax().max(1.0);
        let (factor, _) = psd_sqrt(&sigma, SIGMA_FLOOR * scale)?;
        Ok(Self { delta, f, sigma, factor })
    }
}

/// Circular complex Gaussian with covariance `LL*`: `L(z₁ + iz₂)/√2`.
fn complex_gaussian<R: Rng + ?Sized>(l: &CMat, rng: &mut R) -> [Complex64; NCONS] {
    let z: [Complex64; NCONS] = std::array::from_fn(|_| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    });
    matvec(l, &z)
}

fn matvec(m: &CMat, x: &[Complex64; NCONS]) -> [Complex64; NCONS] {
    std::array::from_fn(|i| (0..NCONS).map(|j| m[(i, j)] * x[j]).sum())
}

/// Amplitude of one Fourier mode of the limiting field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OUModeState {
    pub k: [i64; 3],
    pub xi: [Complex64; NCONS],
    pub t: f64,
}

/// Draws `ξ ~ CN(0, Ĉ)`.
pub fn init_stationary<R: Rng + ?Sized>(k: [i64; 3], c_hat: &CMat, rng: &mut R) -> Result<OUModeState> {
    let (l, _) = psd_sqrt(c_hat, SIGMA_FLOOR)?;
    Ok(OUModeState { k, xi: complex_gaussian(&l, rng), t: 0.0 })
}

/// One exact transition.
pub fn step<R: Rng + ?Sized>(state: &mut OUModeState, tr: &OUTransition, rng: &mut R) {
    let noise = complex_gaussian(&tr.factor, rng);
    let drift = matvec(&tr.f, &state.xi);
    state.xi = std::array::from_fn(|i| drift[i] + noise[i]);
    state.t += tr.delta;
}

/// `max(‖F_{2Δ} − F_Δ²‖, ‖Σ_{2Δ} − (F_ΔΣ_ΔF_Δ* + Σ_Δ)‖)`.
pub fn composition_residual(n_hat: &CMat, c_hat: &CMat, delta: f64) -> Result<f64> {
    let one = OUTransition::new(n_hat, c_hat, delta)?;
    let two = OUTransition::new(n_hat, c_hat, 2.0 * delta)?;
    let df = (&two.f - &one.f * &one.f).camax();
    let ds = (&two.sigma - (&one.f * &one.sigma * one.f.adjoint() + &one.sigma)).camax();
    Ok(df.max(ds))
}

/// `E[ξ(t+τ)ξ(t)*] = e^{N̂τ}Ĉ`.
pub fn lag_covariance(n_hat: &CMat, c_hat: &CMat, tau: f64) -> CMat {
    expm(&(n_hat * real(tau))) * c_hat
}

/// Per-mode ensemble configuration.
#[derive(Debug, Clone)]
pub struct ModeProblem {
    pub k: [i64; 3],
    pub n_hat: CMat,
    pub c_hat: CMat,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnsembleConfig {
    pub delta: f64,
    /// Lags in steps; must include 0.
    pub lag_steps: usize,
    pub nlags: usize,
    pub replicas: usize,
    pub seed: u64,
}

/// One entry of a lag-covariance table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LagCovarianceRow {
    pub k: [i64; 3],
    pub tau: f64,
    pub beta: usize,
    pub nu: usize,
    pub empirical: [f64; 2],
    pub predicted: [f64; 2],
    pub stderr: f64,
    pub z: f64,
    pub nsamples: u64,
}

/// Lag covariances of one mode with closed-form predictions.
#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub k: [i64; 3],
    pub lags: Vec<f64>,
    pub rows: Vec<LagCovarianceRow>,
    pub max_z_lag0: f64,
    pub max_z: f64,
    pub composition_residual: f64,
}

/// Simulates `replicas` independent stationary trajectories of one mode,
/// recording `ξ(τ_j)ξ(0)*` at lags `τ_j = j·lag_steps·Δ`.
pub fn ou_covariance_report(problem: &ModeProblem, cfg: &EnsembleConfig, stream: u64) -> Result<ModeReport> {
    if cfg.nlags < 2 {
        return Err(Error::InvalidParameter("need at least two lags including 0".into()));
    }
    let tr = OUTransition::new(&problem.n_hat, &problem.c_hat, cfg.delta)?;
    let (l, _) = psd_sqrt(&problem.c_hat, SIGMA_FLOOR)?;
    let mut rng = crate::rng(cfg.seed, stream);
    let mut moments = vec![CrossMoment::new(NCONS); cfg.nlags];
    for _ in 0..cfg.replicas {
        let start = complex_gaussian(&l, &mut rng);
        let mut st = OUModeState { k: problem.k, xi: start, t: 0.0 };
        moments[0].push(&st.xi, &start);
        for m in moments.iter_mut().skip(1) {
            for _ in 0..cfg.lag_steps {
                step(&mut st, &tr, &mut rng);
            }
            m.push(&st.xi, &start);
        }
    }
    let lags: Vec<f64> = (0..cfg.nlags).map(|j| (j * cfg.lag_steps) as f64 * cfg.delta).collect();
    let mut rows = Vec::new();
    let (mut max_z_lag0, mut max_z) = (0.0_f64, 0.0_f64);
    for (j, &tau) in lags.iter().enumerate() {
        let pred = lag_covariance(&problem.n_hat, &problem.c_hat, tau);
        for beta in 0..NCONS {
            for nu in 0..NCONS {
                let e = moments[j].entry(beta, nu);
                let z = e.z_score(pred[(beta, nu)]);
                if j == 0 {
                    max_z_lag0 = max_z_lag0.max(z);
                }
                max_z = max_z.max(z);
                rows.push(LagCovarianceRow {
                    k: problem.k,
                    tau,
                    beta,
                    nu,
                    empirical: [e.value.re, e.value.im],
                    predicted: [pred[(beta, nu)].re, pred[(beta, nu)].im],
                    stderr: e.stderr(),
                    z,
                    nsamples: e.nsamples,
                });
            }
        }
    }
    Ok(ModeReport {
        k: problem.k,
        lags,
        rows,
        max_z_lag0,
        max_z,
        composition_residual: composition_residual(&problem.n_hat, &problem.c_hat, cfg.delta)?,
    })
}

/// Runs every mode on its own RNG stream; output order follows the input.
pub fn ou_ensemble(problems: &[ModeProblem], cfg: &EnsembleConfig) -> Result<Vec<ModeReport>> {
    problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| ou_covariance_report(p, cfg, i as u64))
        .collect()
}

/// Real-space field `u(x) = Σ_k e^{−ik·x} ξ̂(k)` from half-grid amplitudes,
/// mirrored by `ξ̂(−k) = conj(ξ̂(k))`; returns the field at `points` (lattice
/// coordinates) and the largest imaginary part.
pub fn field_from_modes(
    grid: &crate::observables::ModeGrid,
    modes: &[OUModeState],
    points: &[[i64; 3]],
) -> (Vec<[f64; NCONS]>, f64) {
    let mut worst = 0.0_f64;
    let values = points
        .iter()
        .map(|x| {
            let mut acc = [Complex64::new(0.0, 0.0); NCONS];
            for m in modes {
                let k = grid.lattice_wavevector(m.k);
                let arg = -(0..3).map(|a| k[a] * x[a] as f64).sum::<f64>();
                let ph = Complex64::from_polar(1.0, arg);
                for b in 0..NCONS {
                    acc[b] += ph * m.xi[b] + ph.conj() * m.xi[b].conj();
                }
            }
            for z in &acc {
                worst = worst.max(z.im.abs());
            }
            acc.map(|z| z.re)
        })
        .collect();
    (values, worst)
}
