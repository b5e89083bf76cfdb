use super::FluctuationSample;
use crate::stats::{CrossMoment, MomentEntry};
use crate::{Error, Result, NCONS};
use nalgebra::Matrix5;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One entry of an estimated mode covariance, as written to CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRow {
    pub k1: i64,
    pub k2: i64,
    pub k3: i64,
    pub beta: usize,
    pub nu: usize,
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
    pub nsamples: u64,
}

/// Per-mode estimates of `E[ẑ_β(k) conj(ẑ_ν(k))]`.
#[derive(Debug, Clone)]
pub struct ModeCovariance {
    pub modes: Vec<[i64; 3]>,
    moments: Vec<CrossMoment>,
}

impl ModeCovariance {
    pub fn new(modes: &[[i64; 3]]) -> Self {
        Self { modes: modes.to_vec(), moments: vec![CrossMoment::new(NCONS); modes.len()] }
    }

    /// Adds one snapshot; samples must follow the mode order.
    pub fn push(&mut self, samples: &[FluctuationSample]) -> Result<()> {
        if samples.len() != self.modes.len() || samples.iter().zip(&self.modes).any(|(s, k)| s.k != *k) {
            return Err(Error::InvalidParameter("samples do not match the estimator's modes".into()));
        }
        for (m, s) in self.moments.iter_mut().zip(samples) {
            m.push(&s.zhat, &s.zhat);
        }
        Ok(())
    }

    /// Adds a pair `(a, b)` estimating `E[a conj(b)]` for mode `m`.
    pub fn push_pair(&mut self, m: usize, a: &[Complex64; NCONS], b: &[Complex64; NCONS]) {
        self.moments[m].push(a, b);
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.modes, other.modes);
        for (a, b) in self.moments.iter_mut().zip(&other.moments) {
            a.merge(b);
        }
    }

    pub fn count(&self) -> u64 {
        self.moments.first().map_or(0, CrossMoment::count)
    }

    /// Entry `(β, ν)` of mode `m`, divided by `normalization`.
    pub fn entry(&self, m: usize, beta: usize, nu: usize, normalization: f64) -> MomentEntry {
        let mut e = self.moments[m].entry(beta, nu);
        e.value /= normalization;
        e.stderr_re /= normalization;
        e.stderr_im /= normalization;
        e
    }

    /// Largest entrywise z-score of mode `m` against `target`.
    pub fn max_z(&self, m: usize, target: &nalgebra::DMatrix<Complex64>, normalization: f64) -> f64 {
        let mut worst = 0.0_f64;
        for b in 0..NCONS {
            for n in 0..NCONS {
                worst = worst.max(self.entry(m, b, n, normalization).z_score(target[(b, n)]));
            }
        }
        worst
    }

    pub fn rows(&self, normalization: f64) -> Vec<CovarianceRow> {
        let mut out = Vec::with_capacity(self.modes.len() * NCONS * NCONS);
        for (m, k) in self.modes.iter().enumerate() {
            for beta in 0..NCONS {
                for nu in 0..NCONS {
                    let e = self.entry(m, beta, nu, normalization);
                    out.push(CovarianceRow {
                        k1: k[0],
                        k2: k[1],
                        k3: k[2],
                        beta,
                        nu,
                        re: e.value.re,
                        im: e.value.im,
                        stderr: e.stderr(),
                        nsamples: e.nsamples,
                    });
                }
            }
        }
        out
    }
}

/// Writes rows with header `k1,k2,k3,beta,nu,re,im,stderr,nsamples`.
pub fn write_covariance_csv<W: std::io::Write>(w: W, rows: &[CovarianceRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

/// Largest z-score of a real 5×5 target against a covariance estimate.
pub fn max_z_real(cov: &ModeCovariance, m: usize, target: &Matrix5<f64>, normalization: f64) -> f64 {
    let t = crate::spectral::to_cmat(target);
    cov.max_z(m, &t, normalization)
}
