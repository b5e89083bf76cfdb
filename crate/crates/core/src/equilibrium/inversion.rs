use super::{sym_pinv, ChemicalPotential, EquilibriumParams};
use crate::model::VelocitySet;
use crate::{Error, Result, NCONS};
use nalgebra::Vector5;

const TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct InversionReport {
    pub n: ChemicalPotential,
    pub iterations: usize,
    pub residual: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Convex dual objective `p(n) − n·M` with `p(n) = Σ_v log(1 + e^{λ_v})`.
fn objective(n: &ChemicalPotential, phi: &[[f64; NCONS]], target: &[f64; NCONS]) -> f64 {
    let p: f64 = phi.iter().map(|ph| softplus(n.lambda(ph))).sum();
    p - n.n.iter().zip(target).map(|(a, b)| a * b).sum::<f64>()
}

/// Chemical potential `n(M)` whose product measure has `E[I_β(η₀)] = M_β`.
///
/// Damped Newton on the strictly convex pressure; the Hessian is the
/// single-site covariance, pseudo-inverted so that toy sets with linearly
/// dependent weights are handled on the identifiable subspace.
pub fn chemical_potential_for(
    target: [f64; NCONS],
    vs: &VelocitySet,
    start: Option<ChemicalPotential>,
) -> Result<InversionReport> {
    let phi: Vec<[f64; NCONS]> = (0..vs.len()).map(|v| vs.phi(v)).collect();
    let scale = target.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    let mut n = start.unwrap_or_else(ChemicalPotential::zero);
    let mut residual = f64::INFINITY;
    for it in 0..MAX_ITER {
        let p = EquilibriumParams::new(n, vs);
        let m = p.mean_conserved();
        let g = Vector5::from_fn(|b, _| m[b] - target[b]);
        residual = g.amax();
        if residual <= TOL * scale {
            return Ok(InversionReport { n, iterations: it, residual });
        }
        let step = -(sym_pinv(&p.single_site_covariance(), 1e-12) * g);
        // Armijo on the convex objective far from the root; near it the
        // objective is flat to rounding, so a decrease of the residual is
        // accepted instead.
        let f0 = objective(&n, &phi, &target);
        let slope = g.dot(&step);
        let mut t = 1.0;
        let next = loop {
            let cand = ChemicalPotential { n: std::array::from_fn(|b| n.n[b] + t * step[b]) };
            let f1 = objective(&cand, &phi, &target);
            let m1 = EquilibriumParams::new(cand, vs).mean_conserved();
            let r1 = (0..NCONS).fold(0.0_f64, |a, b| a.max((m1[b] - target[b]).abs()));
            if f1 <= f0 + 1e-4 * t * slope || r1 < (1.0 - 1e-4 * t) * residual || t < 1e-10 {
                break cand;
            }
            t *= 0.5;
        };
        if next.n == n.n {
            break;
        }
        n = next;
    }
    Err(Error::InversionFailed { iterations: MAX_ITER, residual })
}
