//! Grand canonical product measures, moment brackets, coefficients and the
//! compressibility matrix.

mod coefficients;
mod inversion;
mod sampling;

pub use coefficients::{current_means, d_tensor, CoefficientReport, CoefficientSet};
pub use inversion::{chemical_potential_for, InversionReport};
pub use sampling::{sample_product_measure, SiteSampler};

use crate::model::VelocitySet;
use crate::{Error, Result, NCONS};
use nalgebra::{Matrix5, SymmetricEigen, Vector5};
use serde::{Deserialize, Serialize};

/// Chemical potentials `n = (n₀, …, n₄)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChemicalPotential {
    pub n: [f64; NCONS],
}

impl ChemicalPotential {
    pub fn new(n: [f64; NCONS]) -> Result<Self> {
        if n.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite chemical potential {n:?}")));
        }
        Ok(Self { n })
    }

    /// The reference form `(r, 0, 0, 0, θ)`.
    pub fn reference(r: f64, theta: f64) -> Result<Self> {
        Self::new([r, 0.0, 0.0, 0.0, theta])
    }

    pub fn zero() -> Self {
        Self { n: [0.0; NCONS] }
    }

    pub fn is_reference_form(&self) -> bool {
        self.n[1] == 0.0 && self.n[2] == 0.0 && self.n[3] == 0.0
    }

    /// `λ_v = Σ_β n_β φ_β(v)`.
    pub fn lambda(&self, phi: &[f64; NCONS]) -> f64 {
        self.n.iter().zip(phi).map(|(a, b)| a * b).sum()
    }
}

/// Sums `⟨h|v|^{2p}⟩` over the velocity set, `p = 0..=3`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub h0: [f64; 4],
    pub h1: [f64; 4],
    pub h2: [f64; 4],
}

/// Cached brackets of the reference-form formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Brackets {
    pub moments: Moments,
    /// `⟨|v|⁴h₀⟩⟨h₀⟩ − ⟨|v|²h₀⟩²`
    pub phi: f64,
    /// `⟨h₁|v|⁴⟩⟨h₀⟩ − ⟨h₁|v|²⟩⟨h₀|v|²⟩`
    pub phi1: f64,
    /// `⟨h₀|v|⁴⟩⟨h₁|v|²⟩ − ⟨h₁|v|⁴⟩⟨h₀|v|²⟩`
    pub phi2: f64,
    /// `⟨h₂|v|⁶⟩⟨h₁|v|²⟩ − ⟨h₂|v|⁴⟩⟨h₁|v|⁴⟩`
    pub psi1: f64,
    /// `⟨h₂|v|⁴⟩⟨h₁|v|²⟩ − ⟨h₂|v|²⟩⟨h₁|v|⁴⟩`
    pub psi2: f64,
    /// `⟨v₁²v₂²h₂⟩`
    pub v1v2_h2: f64,
}

/// Product measure at chemical potential `n` with its single-velocity
/// densities and cached brackets.
#[derive(Debug, Clone)]
pub struct EquilibriumParams {
    pub n: ChemicalPotential,
    pub varpi: f64,
    pub f: Vec<f64>,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub phi: Vec<[f64; NCONS]>,
    pub speed_sq: Vec<f64>,
    pub brackets: Brackets,
    dim: usize,
}

/// Logistic map, stable for large `|λ|`.
pub fn logistic(lambda: f64) -> f64 {
    if lambda >= 0.0 {
        1.0 / (1.0 + (-lambda).exp())
    } else {
        let e = lambda.exp();
        e / (1.0 + e)
    }
}

impl EquilibriumParams {
    pub fn new(n: ChemicalPotential, vs: &VelocitySet) -> Self {
        let nv = vs.len();
        let phi: Vec<_> = (0..nv).map(|v| vs.phi(v)).collect();
        let speed_sq: Vec<_> = (0..nv).map(|v| vs.speed_sq(v)).collect();
        let f: Vec<f64> = phi.iter().map(|p| logistic(n.lambda(p))).collect();
        let h0: Vec<f64> = f.iter().map(|&f| f * (1.0 - f)).collect();
        let h1: Vec<f64> = f.iter().zip(&h0).map(|(&f, &h)| h * (1.0 - 2.0 * f)).collect();
        let h2: Vec<f64> = f
            .iter()
            .zip(&h1)
            .map(|(&f, &h)| 0.5 * h * (1.0 - 6.0 * f * (1.0 - f)))
            .collect();

        let mut m = Moments::default();
        let mut v1v2_h2 = 0.0;
        for v in 0..nv {
            let s = speed_sq[v];
            let mut pw = 1.0;
            for p in 0..4 {
                m.h0[p] += h0[v] * pw;
                m.h1[p] += h1[v] * pw;
                m.h2[p] += h2[v] * pw;
                pw *= s;
            }
            v1v2_h2 += phi[v][1].powi(2) * phi[v][2].powi(2) * h2[v];
        }
        let brackets = Brackets {
            moments: m,
            phi: m.h0[2] * m.h0[0] - m.h0[1] * m.h0[1],
            phi1: m.h1[2] * m.h0[0] - m.h1[1] * m.h0[1],
            phi2: m.h0[2] * m.h1[1] - m.h1[2] * m.h0[1],
            psi1: m.h2[3] * m.h1[1] - m.h2[2] * m.h1[2],
            psi2: m.h2[2] * m.h1[1] - m.h2[1] * m.h1[2],
            v1v2_h2,
        };
        Self { n, varpi: vs.varpi(), f, h0, h1, h2, phi, speed_sq, brackets, dim: vs.dim() }
    }

    pub fn nvel(&self) -> usize {
        self.f.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `m_β = E[I_β(η₀)] = Σ_v φ_β(v) f(v)`.
    pub fn mean_conserved(&self) -> [f64; NCONS] {
        let mut m = [0.0; NCONS];
        for (p, &f) in self.phi.iter().zip(&self.f) {
            for b in 0..NCONS {
                m[b] += p[b] * f;
            }
        }
        m
    }

    /// Exact covariance of `I_β(η₀)` under the product law: `Σ_v φ_βφ_ν h₀(v)`.
    pub fn single_site_covariance(&self) -> Matrix5<f64> {
        let mut c = Matrix5::zeros();
        for (p, &h) in self.phi.iter().zip(&self.h0) {
            let pv = Vector5::from_column_slice(p);
            c += pv * pv.transpose() * h;
        }
        c
    }

    /// Block form of the compressibility matrix at a reference-form `n` on a
    /// three-dimensional isotropic velocity set.
    pub fn compressibility_matrix(&self) -> Result<Matrix5<f64>> {
        if !self.n.is_reference_form() {
            return Err(Error::InvalidParameter(
                "compressibility matrix needs n of the form (r,0,0,0,θ)".into(),
            ));
        }
        if self.dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "compressibility block form needs a 3-D velocity set, got dim {}",
                self.dim
            )));
        }
        let m = &self.brackets.moments;
        let mut c = Matrix5::zeros();
        c[(0, 0)] = m.h0[0];
        c[(0, 4)] = m.h0[1] / 2.0;
        c[(4, 0)] = m.h0[1] / 2.0;
        c[(4, 4)] = m.h0[2] / 4.0;
        for a in 1..4 {
            c[(a, a)] = m.h0[1] / 3.0;
        }
        let min = SymmetricEigen::new(c).eigenvalues.min();
        if min <= 1e-12 * c.norm() {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(c)
    }

    /// Serializable dump of densities and brackets.
    pub fn report(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n.n,
            "varpi": self.varpi,
            "f": self.f,
            "brackets": self.brackets,
        })
    }
}

/// Moore–Penrose inverse of a symmetric PSD matrix, dropping eigenvalues
/// below `tol·λ_max`.
pub(crate) fn sym_pinv(m: &Matrix5<f64>, tol: f64) -> Matrix5<f64> {
    let eig = SymmetricEigen::new(*m);
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut out = Matrix5::zeros();
    for i in 0..NCONS {
        let l = eig.eigenvalues[i];
        if l.abs() > tol * lmax.max(f64::MIN_POSITIVE) {
            let u = eig.eigenvectors.column(i);
            out += u * u.transpose() / l;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{iter_bits, ToySpec};
    use crate::DEFAULT_VARPI;

    fn canonical() -> VelocitySet {
        VelocitySet::canonical(DEFAULT_VARPI).unwrap()
    }

    #[test]
    fn half_filling() {
        let p = EquilibriumParams::new(ChemicalPotential::zero(), &canonical());
        assert!(p.f.iter().all(|&f| f == 0.5));
        assert!(p.h0.iter().all(|&h| h == 0.25));
        assert!(p.h1.iter().all(|&h| h == 0.0));
        assert!((p.brackets.moments.h0[1] - 30.0).abs() < 1e-12);
    }

    #[test]
    fn compressibility_at_half_filling() {
        let p = EquilibriumParams::new(ChemicalPotential::zero(), &canonical());
        let c = p.compressibility_matrix().unwrap();
        assert!((c[(0, 0)] - 8.0).abs() < 1e-12);
        assert!((c[(1, 1)] - 10.0).abs() < 1e-12);
        // <h0|v|²/2> = 30/2
        assert!((c[(0, 4)] - 15.0).abs() < 1e-12);
        for a in 1..4 {
            assert_eq!(c[(0, a)], 0.0);
            assert_eq!(c[(a, 4)], 0.0);
        }
    }

    #[test]
    fn reference_form_depends_only_on_speed() {
        let vs = canonical();
        let p = EquilibriumParams::new(ChemicalPotential::reference(0.3, -0.1).unwrap(), &vs);
        assert!(p.f[..8].windows(2).all(|w| w[0] == w[1]));
        assert!(p.f[8..].windows(2).all(|w| w[0] == w[1]));
        assert!(p.brackets.phi > 0.0);
    }

    #[test]
    fn block_form_equals_single_site_covariance() {
        for (r, th) in [(0.3, -0.1), (-1.0, 0.4), (0.0, 0.0)] {
            let p = EquilibriumParams::new(ChemicalPotential::reference(r, th).unwrap(), &canonical());
            let diff = p.compressibility_matrix().unwrap() - p.single_site_covariance();
            assert!(diff.abs().max() < 1e-12, "{diff}");
        }
    }

    #[test]
    fn single_site_covariance_matches_enumeration() {
        // Exhaustive product law over all 2^|V| single-site states of a toy set.
        let toy = ToySpec::from_ints(2, &[&[1, 0], &[-1, 0], &[0, 1], &[0, -1], &[1, 1], &[-1, -1]]);
        let vs = VelocitySet::build(DEFAULT_VARPI, Some(&toy)).unwrap();
        let n = ChemicalPotential::new([0.2, 0.3, -0.5, 0.0, -0.4]).unwrap();
        let p = EquilibriumParams::new(n, &vs);
        let mut mean = [0.0; NCONS];
        let mut second = Matrix5::<f64>::zeros();
        for s in 0u64..(1 << vs.len()) {
            let w: f64 = (0..vs.len()).map(|v| if s >> v & 1 == 1 { p.f[v] } else { 1.0 - p.f[v] }).product();
            let mut i = [0.0; NCONS];
            for v in iter_bits(s) {
                for b in 0..NCONS {
                    i[b] += p.phi[v][b];
                }
            }
            let iv = Vector5::from_column_slice(&i);
            second += iv * iv.transpose() * w;
            for b in 0..NCONS {
                mean[b] += w * i[b];
            }
        }
        let mv = Vector5::from_column_slice(&mean);
        let cov = second - mv * mv.transpose();
        assert!((cov - p.single_site_covariance()).abs().max() < 1e-12);
        let m = p.mean_conserved();
        for b in 0..NCONS {
            assert!((m[b] - mean[b]).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_derivative_is_covariance() {
        let vs = canonical();
        let n0 = [0.3, 0.05, -0.02, 0.01, -0.1];
        let p = EquilibriumParams::new(ChemicalPotential::new(n0).unwrap(), &vs);
        let c = p.single_site_covariance();
        let h = 1e-5;
        for b in 0..NCONS {
            let mut np = n0;
            let mut nm = n0;
            np[b] += h;
            nm[b] -= h;
            let mp = EquilibriumParams::new(ChemicalPotential::new(np).unwrap(), &vs).mean_conserved();
            let mm = EquilibriumParams::new(ChemicalPotential::new(nm).unwrap(), &vs).mean_conserved();
            for nu in 0..NCONS {
                let fd = (mp[nu] - mm[nu]) / (2.0 * h);
                let exact = c[(nu, b)];
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{b} {nu}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn pinv_of_degenerate_toy_covariance() {
        let vs = VelocitySet::build(DEFAULT_VARPI, Some(&ToySpec::one_d_pair())).unwrap();
        let p = EquilibriumParams::new(ChemicalPotential::reference(0.1, 0.2).unwrap(), &vs);
        let c = p.single_site_covariance();
        let pi = sym_pinv(&c, 1e-12);
        assert!((c * pi * c - c).abs().max() < 1e-12);
    }

    #[test]
    fn non_reference_compressibility_is_rejected() {
        let p = EquilibriumParams::new(ChemicalPotential::new([0.0, 0.1, 0.0, 0.0, 0.0]).unwrap(), &canonical());
        assert!(p.compressibility_matrix().is_err());
    }
}
