use crate::dynamics::LatticeState;
use crate::equilibrium::CoefficientSet;
use crate::model::{conserved_at_site, iter_bits, VelocitySet};
use crate::NCONS;

/// Symmetric and antisymmetric parts of the bond current `w_{x,α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentPair {
    /// `χ∇_α I_β = χ(I_β(η(x+e_α)) − I_β(η(x)))`.
    pub symmetric: [f64; NCONS],
    /// `w^{(a),β}_{x,α} = Σ_v v_α φ_β(v) b_{x,α}(v)`.
    pub antisymmetric: [f64; NCONS],
}

impl CurrentPair {
    pub fn total(&self) -> [f64; NCONS] {
        std::array::from_fn(|b| self.symmetric[b] + self.antisymmetric[b])
    }
}

/// `b_{x,α}(v) = η(x+e_α,v)η(x,v) − ½(η(x+e_α,v) + η(x,v))`.
pub fn bond_factor(state: &LatticeState, x: usize, alpha: usize, v: usize) -> f64 {
    let y = state.lattice().forward(x, alpha);
    let (a, b) = (state.get(x, v) as u8 as f64, state.get(y, v) as u8 as f64);
    a * b - 0.5 * (a + b)
}

/// Currents across the bond `(x, x+e_α)`.
///
/// `b` equals `−½` exactly where one end of the bond is occupied, so the
/// antisymmetric part only visits the symmetric difference of the two sites.
pub fn currents(state: &LatticeState, vs: &VelocitySet, chi: f64, x: usize, alpha: usize) -> CurrentPair {
    let y = state.lattice().forward(x, alpha);
    let (ox, oy) = (state.site(x), state.site(y));
    let ix = conserved_at_site(ox, vs);
    let iy = conserved_at_site(oy, vs);
    let mut antisymmetric = [0.0; NCONS];
    for v in iter_bits(ox ^ oy) {
        let phi = vs.phi(v);
        let va = phi[alpha + 1];
        for b in 0..NCONS {
            antisymmetric[b] -= 0.5 * va * phi[b];
        }
    }
    CurrentPair { symmetric: std::array::from_fn(|b| chi * (iy[b] - ix[b])), antisymmetric }
}

/// `g^β_α = w^{(a),β}_{x,α} − c^β_α − ½Σ_ν d^{β,ν}_α (Ĩ_ν(η(x)) + Ĩ_ν(η(x+e_α)))`
/// with `Ĩ = I − m`.
pub fn centered_current_g(
    state: &LatticeState,
    vs: &VelocitySet,
    x: usize,
    alpha: usize,
    coeffs: &CoefficientSet,
    mean: &[f64; NCONS],
) -> [f64; NCONS] {
    let w = currents(state, vs, 0.0, x, alpha).antisymmetric;
    let y = state.lattice().forward(x, alpha);
    let ix = conserved_at_site(state.site(x), vs);
    let iy = conserved_at_site(state.site(y), vs);
    let tilde: [f64; NCONS] = std::array::from_fn(|n| ix[n] + iy[n] - 2.0 * mean[n]);
    std::array::from_fn(|b| {
        let lin: f64 = (0..NCONS).map(|n| coeffs.d[alpha][b][n] * tilde[n]).sum();
        w[b] - coeffs.c[alpha][b] - 0.5 * lin
    })
}

/// Closed-form `E^μ[g^β_α]` under the product measure `p`, with `g` built
/// from coefficients and mean taken at a possibly different reference point.
pub fn expected_centered_current(
    p: &crate::equilibrium::EquilibriumParams,
    coeffs: &CoefficientSet,
    mean: &[f64; NCONS],
) -> [[f64; NCONS]; 3] {
    let c_here = crate::equilibrium::current_means(p);
    let m_here = p.mean_conserved();
    std::array::from_fn(|al| {
        std::array::from_fn(|b| {
            let lin: f64 = (0..NCONS).map(|n| coeffs.d[al][b][n] * 2.0 * (m_here[n] - mean[n])).sum();
            c_here[al][b] - coeffs.c[al][b] - 0.5 * lin
        })
    })
}
