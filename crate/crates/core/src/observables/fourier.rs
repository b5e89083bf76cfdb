use crate::dynamics::{Lattice, LatticeState};
use crate::model::{conserved_at_site, VelocitySet};
use crate::spectral::{expm, CMat};
use crate::{Error, Result, NCONS};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Sign of the Euler exponent that undoes fast transport on mode amplitudes:
/// `ξ̂(k,t) = exp(TRANSPORT_SIGN·(t/ε)·Ê(K)) ẑ(k,t)`.
///
/// With `ẑ(k) = Σ_x e^{+ik·x}(I − m)`, a field `∂_t u = ε⁻¹Eu` moves mode
/// amplitudes by `exp(−(t/ε)Ê(K))`, so the transported amplitude uses `+`.
/// The OU module simulates exactly this transported amplitude.
pub const TRANSPORT_SIGN: f64 = 1.0;

/// Integer Fourier modes of the periodic box `{−L, …, L}^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeGrid {
    pub half_width: usize,
    pub dim: usize,
}

impl ModeGrid {
    pub fn new(half_width: usize, dim: usize) -> Self {
        Self { half_width, dim }
    }

    pub fn for_lattice(lat: &Lattice) -> Self {
        Self::new(lat.half_width(), lat.dim())
    }

    /// `ε = 1/L`.
    pub fn epsilon(&self) -> f64 {
        1.0 / self.half_width as f64
    }

    /// Checks `|z_α| ≤ L`, zero on inactive axes, and `z ≠ 0`.
    pub fn validate(&self, z: [i64; 3]) -> Result<()> {
        let l = self.half_width as i64;
        let inside = (0..3).all(|a| if a < self.dim { z[a].abs() <= l } else { z[a] == 0 });
        if !inside || z == [0; 3] {
            return Err(Error::InvalidMode(z));
        }
        Ok(())
    }

    /// Lattice wavevector `2πz/(2L+1)`.
    pub fn lattice_wavevector(&self, z: [i64; 3]) -> [f64; 3] {
        let s = 2.0 * PI / (2 * self.half_width + 1) as f64;
        z.map(|c| s * c as f64)
    }

    /// Macroscopic wavevector `K = k/ε` at which symbols are evaluated.
    pub fn wavevector(&self, z: [i64; 3]) -> [f64; 3] {
        self.lattice_wavevector(z).map(|k| k / self.epsilon())
    }

    /// `(2L+1)^d ε^d`, the factor relating `E|ẑ|²` to a single-site covariance.
    pub fn covariance_normalization(&self) -> f64 {
        ((2 * self.half_width + 1) as f64 * self.epsilon()).powi(self.dim as i32)
    }
}

/// Precomputed plane waves `e^{ik·x}` on every site for a fixed mode list.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    pub grid: ModeGrid,
    pub modes: Vec<[i64; 3]>,
    nsites: usize,
    phases: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(lat: &Lattice, modes: &[[i64; 3]]) -> Result<Self> {
        let grid = ModeGrid::for_lattice(lat);
        let side = 2 * lat.half_width() + 1;
        let mut phases = Vec::with_capacity(modes.len() * lat.nsites());
        for &z in modes {
            grid.validate(z)?;
            let axis: Vec<Vec<Complex64>> = (0..3)
                .map(|a| {
                    (0..side)
                        .map(|o| {
                            let c = o as i64 - lat.half_width() as i64;
                            let arg = 2.0 * PI * ((z[a] * c).rem_euclid(side as i64)) as f64 / side as f64;
                            Complex64::from_polar(1.0, arg)
                        })
                        .collect()
                })
                .collect();
            for x in 0..lat.nsites() {
                let c = lat.coords(x);
                let mut p = Complex64::new(1.0, 0.0);
                for a in 0..lat.dim() {
                    p *= axis[a][(c[a] + lat.half_width() as i64) as usize];
                }
                phases.push(p);
            }
        }
        Ok(Self { grid, modes: modes.to_vec(), nsites: lat.nsites(), phases })
    }

    fn row(&self, m: usize) -> &[Complex64] {
        &self.phases[m * self.nsites..(m + 1) * self.nsites]
    }
}

/// One Fourier amplitude of the fluctuation field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluctuationSample {
    pub k: [i64; 3],
    pub zhat: [Complex64; NCONS],
    pub t: f64,
}

/// `ẑ(k) = ε^{d/2} Σ_x e^{ik·x}(I(η(x)) − m)` for every mode of the table.
pub fn fourier_fluctuation(
    state: &LatticeState,
    vs: &VelocitySet,
    mean: &[f64; NCONS],
    table: &PhaseTable,
) -> Result<Vec<FluctuationSample>> {
    let lat = state.lattice();
    if ModeGrid::for_lattice(lat) != table.grid || lat.nsites() != table.nsites {
        return Err(Error::InvalidParameter("phase table was built for another lattice".into()));
    }
    let fields: Vec<[f64; NCONS]> = state
        .occupancy()
        .iter()
        .map(|&o| {
            let i = conserved_at_site(o, vs);
            std::array::from_fn(|b| i[b] - mean[b])
        })
        .collect();
    let scale = table.grid.epsilon().powf(0.5 * table.grid.dim as f64);
    Ok(table
        .modes
        .iter()
        .enumerate()
        .map(|(m, &k)| {
            let mut acc = [Complex64::new(0.0, 0.0); NCONS];
            for (p, f) in table.row(m).iter().zip(&fields) {
                for b in 0..NCONS {
                    acc[b] += p * f[b];
                }
            }
            FluctuationSample { k, zhat: acc.map(|z| z * scale), t: state.time }
        })
        .collect())
}

/// Transports a mode amplitude back along the Euler flow:
/// `exp(TRANSPORT_SIGN·(t/ε)·Ê) ẑ`, with `Ê` the symbol at `K`.
pub fn transported_field(sample: &FluctuationSample, euler: &CMat, epsilon: f64) -> [Complex64; NCONS] {
    if sample.t == 0.0 {
        return sample.zhat;
    }
    let u = expm(&(euler * Complex64::new(TRANSPORT_SIGN * sample.t / epsilon, 0.0)));
    std::array::from_fn(|i| (0..NCONS).map(|j| u[(i, j)] * sample.zhat[j]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{sample_product_measure, ChemicalPotential, EquilibriumParams};
    use crate::DEFAULT_VARPI;
    use std::sync::Arc;

    #[test]
    fn zero_and_out_of_grid_modes_are_rejected() {
        let lat = Lattice::new(3, 3).unwrap();
        assert!(PhaseTable::new(&lat, &[[0, 0, 0]]).is_err());
        assert!(PhaseTable::new(&lat, &[[4, 0, 0]]).is_err());
        let lat2 = Lattice::new(3, 2).unwrap();
        assert!(PhaseTable::new(&lat2, &[[1, 0, 1]]).is_err());
        assert!(PhaseTable::new(&lat2, &[[1, -3, 0]]).is_ok());
    }

    #[test]
    fn conjugate_symmetry_and_mean_shift() {
        let vs = VelocitySet::canonical(DEFAULT_VARPI).unwrap();
        let p = EquilibriumParams::new(ChemicalPotential::reference(0.3, -0.1).unwrap(), &vs);
        let lat = Arc::new(Lattice::new(3, 3).unwrap());
        let st = sample_product_measure(&p, &vs, lat.clone(), &mut crate::rng(5, 0)).unwrap();
        let modes = [[1, 2, -1], [-1, -2, 1]];
        let table = PhaseTable::new(&lat, &modes).unwrap();
        let m = p.mean_conserved();
        let s = fourier_fluctuation(&st, &vs, &m, &table).unwrap();
        for b in 0..NCONS {
            assert!((s[0].zhat[b] - s[1].zhat[b].conj()).norm() < 1e-12);
        }
        let shifted = fourier_fluctuation(&st, &vs, &[0.0; NCONS], &table).unwrap();
        for b in 0..NCONS {
            assert!((s[0].zhat[b] - shifted[0].zhat[b]).norm() < 1e-10);
        }
    }

    #[test]
    fn transport_is_identity_at_zero_time_or_zero_symbol() {
        let sample = FluctuationSample {
            k: [1, 0, 0],
            zhat: std::array::from_fn(|b| Complex64::new(b as f64, 1.0)),
            t: 0.0,
        };
        let e = CMat::from_fn(5, 5, |i, j| Complex64::new(0.0, (i + j) as f64));
        assert_eq!(transported_field(&sample, &e, 0.1), sample.zhat);
        let later = FluctuationSample { t: 3.0, ..sample };
        assert_eq!(transported_field(&later, &CMat::zeros(5, 5), 0.1), sample.zhat);
    }

    #[test]
    fn wavevector_scaling() {
        let g = ModeGrid::new(4, 3);
        let k = g.wavevector([1, 0, -2]);
        let s = 2.0 * PI / 9.0 * 4.0;
        assert!((k[0] - s).abs() < 1e-14 && k[1] == 0.0 && (k[2] + 2.0 * s).abs() < 1e-14);
        assert!((g.covariance_normalization() - (9.0f64 / 4.0).powi(3)).abs() < 1e-12);
    }
}
