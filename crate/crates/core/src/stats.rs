//! Small estimators shared by the statistical checks.

use num_complex::Complex64;
use serde::Serialize;

/// Running estimate of `E[a_β · conj(b_ν)]` for zero-mean complex vectors,
/// with standard errors of the real and imaginary parts.
#[derive(Debug, Clone)]
pub struct CrossMoment {
    dim: usize,
    n: u64,
    sum: Vec<Complex64>,
    sumsq_re: Vec<f64>,
    sumsq_im: Vec<f64>,
}

/// One entry of an estimated second-moment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEntry {
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub nsamples: u64,
}

impl MomentEntry {
    /// Larger of the real and imaginary z-scores against `target`.
    ///
    /// Components whose standard error is zero count as matching only when
    /// they agree to `1e-12` in absolute value.
    pub fn z_score(&self, target: Complex64) -> f64 {
        let z = |d: f64, se: f64| {
            if se > 0.0 {
                d.abs() / se
            } else if d.abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        z(self.value.re - target.re, self.stderr_re).max(z(self.value.im - target.im, self.stderr_im))
    }

    /// Combined standard error `√(se_re² + se_im²)`.
    pub fn stderr(&self) -> f64 {
        self.stderr_re.hypot(self.stderr_im)
    }
}

impl CrossMoment {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            n: 0,
            sum: vec![Complex64::new(0.0, 0.0); dim * dim],
            sumsq_re: vec![0.0; dim * dim],
            sumsq_im: vec![0.0; dim * dim],
        }
    }

    pub fn push(&mut self, a: &[Complex64], b: &[Complex64]) {
        debug_assert_eq!(a.len(), self.dim);
        debug_assert_eq!(b.len(), self.dim);
        self.n += 1;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let p = a[i] * b[j].conj();
                let k = i * self.dim + j;
                self.sum[k] += p;
                self.sumsq_re[k] += p.re * p.re;
                self.sumsq_im[k] += p.im * p.im;
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim);
        self.n += other.n;
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sumsq_re[k] += other.sumsq_re[k];
            self.sumsq_im[k] += other.sumsq_im[k];
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> MomentEntry {
        let k = i * self.dim + j;
        let n = self.n as f64;
        let mean = self.sum[k] / n;
        let se = |sq: f64, m: f64| {
            if self.n < 2 {
                f64::INFINITY
            } else {
                ((sq / n - m * m).max(0.0) / (n - 1.0)).sqrt()
            }
        };
        MomentEntry {
            value: mean,
            stderr_re: se(self.sumsq_re[k], mean.re),
            stderr_im: se(self.sumsq_im[k], mean.im),
            nsamples: self.n,
        }
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
