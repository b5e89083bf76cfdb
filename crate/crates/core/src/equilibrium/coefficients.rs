use super::{sym_pinv, EquilibriumParams};
use crate::{Error, Result, NCONS};
use serde::{Deserialize, Serialize};

/// Euler and Navier–Stokes coefficient blocks at a reference-form measure.
///
/// `d[α][β][ν] = ∂E[w^{(a),β}_{0,α}]/∂m_ν` and `c[α][β] = E[w^{(a),β}_{0,α}]`,
/// with `α` a 0-based direction index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a0: f64,
    pub a4: f64,
    pub b0: f64,
    pub b4: f64,
    pub d: [[[f64; NCONS]; NCONS]; 3],
    pub c: [[f64; NCONS]; 3],
    pub k: f64,
    /// Absent when `⟨h₁|v|²⟩` vanishes (half filling).
    pub h: Option<f64>,
    /// `½⟨h₁|v|⁴⟩/⟨h₁|v|²⟩`, absent under the same condition as `h`.
    pub c_const: Option<f64>,
}

impl CoefficientSet {
    pub fn new(p: &EquilibriumParams) -> Result<Self> {
        if p.dim() != 3 || !p.n.is_reference_form() {
            return Err(Error::InvalidParameter(
                "coefficients need a 3-D set and n of the form (r,0,0,0,θ)".into(),
            ));
        }
        let b = &p.brackets;
        let m = &b.moments;
        if m.h0[1] <= 0.0 {
            return Err(Error::Degenerate("<|v|²h0> vanishes".into()));
        }
        if b.phi <= 1e-14 * m.h0[2] * m.h0[0] {
            return Err(Error::Degenerate(format!("Φ = {} is not positive", b.phi)));
        }
        let a0 = m.h1[1] / m.h0[1];
        let a4 = m.h1[2] / (2.0 * m.h0[1]);
        let b0 = b.phi2 / (3.0 * b.phi);
        let b4 = 2.0 * b.phi1 / (3.0 * b.phi);
        let k = 18.0 * b.v1v2_h2 / (m.h0[1] * m.h0[1]);

        let scale = m.h1.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(m.h0[1]);
        let (h, c_const) = if m.h1[1].abs() <= 1e-13 * scale {
            (None, None)
        } else {
            let cc = 0.5 * m.h1[2] / m.h1[1];
            let den = (b.phi2 + cc * b.phi1) * m.h0[1];
            let h = if den.abs() <= f64::EPSILON * (b.phi2.abs() + (cc * b.phi1).abs()) * m.h0[1] {
                None
            } else {
                Some((b.psi1 - 2.0 * cc * b.psi2) / den)
            };
            (h, Some(cc))
        };
        Ok(Self {
            a0,
            a4,
            b0,
            b4,
            d: d_tensor(p),
            c: current_means(p),
            k,
            h,
            c_const,
        })
    }

    /// Closed form of `d` in terms of `a₀, a₄, b₀, b₄`.
    pub fn d_closed_form(&self) -> [[[f64; NCONS]; NCONS]; 3] {
        let mut d = [[[0.0; NCONS]; NCONS]; 3];
        for al in 0..3 {
            let a = al + 1;
            d[al][0][a] = -self.a0;
            d[al][4][a] = -self.a4;
            d[al][a][0] = -self.b0;
            d[al][a][4] = -self.b4;
        }
        d
    }

    /// `a₀b₀ + a₄b₄`, the squared sound speed of the Euler symbol.
    pub fn sound_speed_sq(&self) -> f64 {
        self.a0 * self.b0 + self.a4 * self.b4
    }
}

/// `E[w^{(a),β}_{0,α}] = Σ_v v_α φ_β(v)(f² − f)` at any `n`.
pub fn current_means(p: &EquilibriumParams) -> [[f64; NCONS]; 3] {
    let mut c = [[0.0; NCONS]; 3];
    for v in 0..p.nvel() {
        let e = p.f[v] * p.f[v] - p.f[v];
        for al in 0..3 {
            for b in 0..NCONS {
                c[al][b] += p.phi[v][al + 1] * p.phi[v][b] * e;
            }
        }
    }
    c
}

/// `∂E[w^{(a),β}_{0,α}]/∂m_ν` at any `n`, as `J·C⁺` with `J` the derivative
/// in `n` and `C` the single-site covariance.
pub fn d_tensor(p: &EquilibriumParams) -> [[[f64; NCONS]; NCONS]; 3] {
    let cinv = sym_pinv(&p.single_site_covariance(), 1e-12);
    let mut d = [[[0.0; NCONS]; NCONS]; 3];
    for al in 0..3 {
        let mut j = nalgebra::Matrix5::<f64>::zeros();
        for v in 0..p.nvel() {
            // d(f² − f)/dλ = −h₁
            let w = -p.h1[v] * p.phi[v][al + 1];
            for b in 0..NCONS {
                for g in 0..NCONS {
                    j[(b, g)] += w * p.phi[v][b] * p.phi[v][g];
                }
            }
        }
        let dm = j * cinv;
        for b in 0..NCONS {
            for nu in 0..NCONS {
                d[al][b][nu] = dm[(b, nu)];
            }
        }
    }
    d
}

/// JSON document of the `coefficients` report.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientReport {
    pub n: [f64; NCONS],
    pub varpi: f64,
    pub brackets: super::Brackets,
    pub a0: f64,
    pub a4: f64,
    pub b0: f64,
    pub b4: f64,
    pub sound_speed_sq: f64,
    pub compressibility: [[f64; NCONS]; NCONS],
    pub c: [[f64; NCONS]; 3],
    pub d: [[[f64; NCONS]; NCONS]; 3],
    pub k: f64,
    pub h: Option<f64>,
    pub c_const: Option<f64>,
}

impl CoefficientReport {
    pub fn new(p: &EquilibriumParams) -> Result<Self> {
        let cs = CoefficientSet::new(p)?;
        let c = p.compressibility_matrix()?;
        Ok(Self {
            n: p.n.n,
            varpi: p.varpi,
            brackets: p.brackets,
            a0: cs.a0,
            a4: cs.a4,
            b0: cs.b0,
            b4: cs.b4,
            sound_speed_sq: cs.sound_speed_sq(),
            compressibility: std::array::from_fn(|i| std::array::from_fn(|j| c[(i, j)])),
            c: cs.c,
            d: cs.d,
            k: cs.k,
            h: cs.h,
            c_const: cs.c_const,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{chemical_potential_for, ChemicalPotential};
    use crate::model::VelocitySet;
    use crate::DEFAULT_VARPI;

    fn params(r: f64, th: f64) -> EquilibriumParams {
        let vs = VelocitySet::canonical(DEFAULT_VARPI).unwrap();
        EquilibriumParams::new(ChemicalPotential::reference(r, th).unwrap(), &vs)
    }

    #[test]
    fn half_filling_kills_euler_coefficients() {
        let cs = CoefficientSet::new(&params(0.0, 0.0)).unwrap();
        assert_eq!([cs.a0, cs.a4, cs.b0, cs.b4], [0.0; 4]);
        assert!(cs.h.is_none() && cs.c_const.is_none());
        for al in 0..3 {
            for b in 0..NCONS {
                // The diagonal momentum current keeps its pressure part
                // -<v_α²>/4 = -10.
                let expected = if b == al + 1 { -10.0 } else { 0.0 };
                assert!((cs.c[al][b] - expected).abs() < 1e-12, "{al} {b}");
                for nu in 0..NCONS {
                    assert!(cs.d[al][b][nu].abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn reference_values() {
        // Frozen from an independent dense evaluation of the bracket sums.
        let cs = CoefficientSet::new(&params(0.3, -0.1)).unwrap();
        assert!((cs.a0 - -0.054_93).abs() < 1e-5, "{}", cs.a0);
        assert!((cs.a4 - -0.102_39).abs() < 1e-5, "{}", cs.a4);
        assert!((cs.b0 - -0.099_61).abs() < 1e-5, "{}", cs.b0);
        assert!((cs.b4 - 0.016_50).abs() < 1e-5, "{}", cs.b4);
        assert!((cs.sound_speed_sq() - 0.003_782).abs() < 1e-6);
        assert!(cs.h.is_some() && cs.c_const.is_some());
    }

    #[test]
    fn d_matches_closed_form() {
        for (r, th) in [(0.3, -0.1), (-0.7, 0.25), (1.2, -0.4)] {
            let cs = CoefficientSet::new(&params(r, th)).unwrap();
            let cf = cs.d_closed_form();
            for al in 0..3 {
                for b in 0..NCONS {
                    for nu in 0..NCONS {
                        assert!((cs.d[al][b][nu] - cf[al][b][nu]).abs() < 1e-12, "{al} {b} {nu}");
                    }
                }
            }
        }
    }

    #[test]
    fn d_matches_finite_differences_through_moment_inversion() {
        let vs = VelocitySet::canonical(DEFAULT_VARPI).unwrap();
        let p = params(0.3, -0.1);
        let cs = CoefficientSet::new(&p).unwrap();
        let m0 = p.mean_conserved();
        let h = 1e-5;
        for nu in 0..NCONS {
            let at = |s: f64| {
                let mut m = m0;
                m[nu] += s;
                let n = chemical_potential_for(m, &vs, None).unwrap().n;
                current_means(&EquilibriumParams::new(n, &vs))
            };
            let (cp, cm) = (at(h), at(-h));
            for al in 0..3 {
                for b in 0..NCONS {
                    let fd = (cp[al][b] - cm[al][b]) / (2.0 * h);
                    let exact = cs.d[al][b][nu];
                    let scale = exact.abs().max(1e-3);
                    assert!((fd - exact).abs() < 1e-4 * scale, "{al} {b} {nu}: {fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn c_at_half_filling_vanishes_by_symmetry() {
        let p = params(0.0, 0.0);
        let c = current_means(&p);
        for al in 0..3 {
            assert!(c[al][0].abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_single_speed_set_is_rejected() {
        let vs = VelocitySet::build(DEFAULT_VARPI, Some(&crate::model::ToySpec::cube_corners())).unwrap();
        let p = EquilibriumParams::new(ChemicalPotential::reference(0.1, 0.1).unwrap(), &vs);
        assert!(matches!(CoefficientSet::new(&p), Err(Error::Degenerate(_))));
    }
}
