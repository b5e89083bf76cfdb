use crate::{Error, Result};
use serde::Serialize;

/// Window exponent `α ∈ (0, ½)` of the Gaussian sum.
pub const LAPLACE_ALPHA: f64 = 0.25;

/// Exact Laplace-type sum against its leading Gaussian expression.
///
/// `value` and `leading` carry the common factor `e^{Nψ(θ)}` and may
/// underflow; `ratio` is computed with that factor removed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaplaceResult {
    pub n: usize,
    pub theta: f64,
    pub psi2: f64,
    pub value: f64,
    pub leading: f64,
    pub ratio: f64,
}

fn golden_max(f: &impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mut x = 0.5 * (a + b);
    // Newton on finite-difference derivatives past the flatness limit of
    // the bracketing.
    for _ in 0..3 {
        let h = 1e-5 * x.min(1.0 - x);
        let (fp, f0, fm) = (f(x + h), f(x), f(x - h));
        let d1 = (fp - fm) / (2.0 * h);
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        if !(d2 < 0.0) {
            break;
        }
        x -= d1 / d2;
    }
    x
}

/// `Σ_{i=0}^N φ(i/N)e^{Nψ(i/N)}` against `S_N(α, ψ″(θ)/2)·φ(θ)·e^{Nψ(θ)}` with
/// `S_N(α, a) = Σ_{|i−Nθ| ≤ N^{1−α}} exp(a(i − Nθ)²/N)`.
pub fn laplace_sum(psi: impl Fn(f64) -> f64, phi: impl Fn(f64) -> f64, n: usize, alpha: f64) -> Result<LaplaceResult> {
    if n == 0 || !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("need N ≥ 1 and 0 < α < ½, got N = {n}, α = {alpha}")));
    }
    let theta = golden_max(&psi);
    if !(theta > 1e-6 && theta < 1.0 - 1e-6) {
        return Err(Error::BoundaryMaximizer { theta });
    }
    let h = 1e-4 * theta.min(1.0 - theta);
    let top = psi(theta);
    let psi2 = (psi(theta + h) - 2.0 * top + psi(theta - h)) / (h * h);
    let nf = n as f64;
    let scaled: f64 = (0..=n)
        .map(|i| {
            let x = i as f64 / nf;
            let w = phi(x);
            if w == 0.0 {
                0.0
            } else {
                w * (nf * (psi(x) - top)).exp()
            }
        })
        .sum();
    let half_width = nf.powf(1.0 - alpha);
    let center = nf * theta;
    let lo = (center - half_width).ceil().max(0.0) as i64;
    let hi = (center + half_width).floor() as i64;
    let s_n: f64 = (lo..=hi)
        .map(|i| {
            let j = i as f64 - center;
            (0.5 * psi2 * j * j / nf).exp()
        })
        .sum();
    let lead_scaled = s_n * phi(theta);
    let factor = (nf * top).exp();
    let ratio = if lead_scaled == 0.0 { f64::NAN } else { scaled / lead_scaled };
    Ok(LaplaceResult { n, theta, psi2, value: scaled * factor, leading: lead_scaled * factor, ratio })
}

/// The three smooth test pairs `(ψ, φ)` with interior maximizers.
pub fn standard_pairs() -> Vec<(&'static str, fn(f64) -> f64, fn(f64) -> f64)> {
    fn psi_a(x: f64) -> f64 {
        -(x - 0.5).powi(2)
    }
    fn phi_a(x: f64) -> f64 {
        1.0 + x * x
    }
    fn psi_b(x: f64) -> f64 {
        -(x - 0.3).powi(2) - (x - 0.3).powi(4)
    }
    fn phi_b(x: f64) -> f64 {
        x.exp()
    }
    fn psi_c(x: f64) -> f64 {
        x.ln() + 2.0 * (1.0 - x).ln()
    }
    fn phi_c(x: f64) -> f64 {
        1.0 + x
    }
    vec![
        ("quadratic", psi_a as fn(f64) -> f64, phi_a as fn(f64) -> f64),
        ("quartic", psi_b, phi_b),
        ("entropy", psi_c, phi_c),
    ]
}
