use super::{commutant_project, eigen_decompose, psd_sqrt, to_cmat, CMat, EigenSummary, EigenSystem};
use crate::equilibrium::CoefficientSet;
use crate::{Error, Result, NCONS};
use nalgebra::{Matrix5, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn norm3(k: &[f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// `Ê(k) = −i·[[0, a₀kᵀ, 0], [b₀k, 0, b₄k], [0, a₄kᵀ, 0]]`.
pub fn euler_symbol(k: &[f64; 3], cs: &CoefficientSet) -> CMat {
    let mut e = CMat::zeros(NCONS, NCONS);
    for a in 0..3 {
        e[(0, a + 1)] = c(0.0, -cs.a0 * k[a]);
        e[(a + 1, 0)] = c(0.0, -cs.b0 * k[a]);
        e[(a + 1, 4)] = c(0.0, -cs.b4 * k[a]);
        e[(4, a + 1)] = c(0.0, -cs.a4 * k[a]);
    }
    e
}

/// Unit vectors `t₁, t₂` completing `k̂` to an orthonormal basis.
fn transverse_basis(khat: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let axis = (0..3).min_by(|&i, &j| khat[i].abs().total_cmp(&khat[j].abs())).unwrap();
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let cross = |a: &[f64; 3], b: &[f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let t1 = cross(khat, &e);
    let n1 = norm3(&t1);
    let t1 = t1.map(|x| x / n1);
    let t2 = cross(khat, &t1);
    (t1, t2)
}

/// Eigensystem of `Ê(k)`: analytic acoustic, transverse and density–energy
/// modes when `a₀b₀ + a₄b₄ > 0` and `k ≠ 0`, the dense solver otherwise.
pub fn euler_eigen(k: &[f64; 3], cs: &CoefficientSet, tau_eig: Option<f64>) -> Result<EigenSystem> {
    let e = euler_symbol(k, cs);
    let knorm = norm3(k);
    let c2 = cs.sound_speed_sq();
    if !(c2 > 0.0 && knorm > 0.0) {
        return eigen_decompose(&e, tau_eig);
    }
    let cs_speed = c2.sqrt();
    let khat = k.map(|x| x / knorm);
    let (t1, t2) = transverse_basis(&khat);
    let mut cols: Vec<[f64; NCONS]> = Vec::with_capacity(NCONS);
    for s in [1.0, -1.0] {
        cols.push([cs.a0, s * cs_speed * khat[0], s * cs_speed * khat[1], s * cs_speed * khat[2], cs.a4]);
    }
    cols.push([0.0, t1[0], t1[1], t1[2], 0.0]);
    cols.push([0.0, t2[0], t2[1], t2[2], 0.0]);
    cols.push([cs.b4, 0.0, 0.0, 0.0, -cs.b0]);
    let mut v = CMat::zeros(NCONS, NCONS);
    for (j, col) in cols.iter().enumerate() {
        let n = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..NCONS {
            v[(i, j)] = c(col[i] / n, 0.0);
        }
    }
    let w = cs_speed * knorm;
    let vals = vec![c(0.0, -w), c(0.0, w), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    EigenSystem::from_parts(&e, vals, v, tau_eig)
}

/// `D = D̄ + χ·δ_{αγ}·Id₅`, blocks indexed by direction pairs `(α, γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionTensor {
    /// `dbar[3α + γ]` is the 5×5 block `D̄_{αγ}` in row-major order.
    pub dbar: Vec<[[f64; NCONS]; NCONS]>,
    pub chi: f64,
}

impl DiffusionTensor {
    /// `D̄ = 0`, so `D = χ𝕀`.
    pub fn isotropic(chi: f64) -> Self {
        Self { dbar: vec![[[0.0; NCONS]; NCONS]; 9], chi }
    }

    pub fn from_blocks(dbar: Vec<[[f64; NCONS]; NCONS]>, chi: f64) -> Result<Self> {
        if dbar.len() != 9 {
            return Err(Error::InvalidParameter(format!("expected 9 D̄ blocks, got {}", dbar.len())));
        }
        if dbar.iter().flatten().flatten().any(|x| !x.is_finite()) || !chi.is_finite() {
            return Err(Error::InvalidParameter("non-finite diffusion tensor".into()));
        }
        Ok(Self { dbar, chi })
    }

    /// `D̄_{αγ} = δ_{αγ}·S·C⁻¹` with `S` symmetric positive definite, so that
    /// `D̄C` is symmetric.
    pub fn dissipative(s: &Matrix5<f64>, compressibility: &Matrix5<f64>, chi: f64) -> Result<Self> {
        let cinv = compressibility
            .try_inverse()
            .ok_or(Error::SingularSolve(0.0))?;
        let block = s * cinv;
        let arr: [[f64; NCONS]; NCONS] = std::array::from_fn(|i| std::array::from_fn(|j| block[(i, j)]));
        let mut dbar = vec![[[0.0; NCONS]; NCONS]; 9];
        for a in 0..3 {
            dbar[4 * a] = arr;
        }
        Self::from_blocks(dbar, chi)
    }

    fn block(&self, a: usize, g: usize) -> Matrix5<f64> {
        let b = &self.dbar[3 * a + g];
        Matrix5::from_fn(|i, j| b[i][j])
    }

    /// `Σ_{αγ} D_{αγ}k_αk_γ`.
    pub fn contracted(&self, k: &[f64; 3]) -> Matrix5<f64> {
        let mut m = Matrix5::identity() * (self.chi * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
        for a in 0..3 {
            for g in 0..3 {
                m += self.block(a, g) * (k[a] * k[g]);
            }
        }
        m
    }

    /// `D̂(k) = −Σ_{αγ} D_{αγ}k_αk_γ`.
    pub fn symbol(&self, k: &[f64; 3]) -> CMat {
        -to_cmat(&self.contracted(k))
    }

    /// Smallest real part of the spectrum of `Σ D_{αγ}k_αk_γ` over a
    /// deterministic sample of unit vectors; positive for a valid tensor.
    pub fn min_symbol_eigenvalue(&self, samples: usize) -> f64 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..samples.max(1))
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / samples.max(1) as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                let k = [r * phi.cos(), r * phi.sin(), z];
                self.contracted(&k)
                    .complex_eigenvalues()
                    .iter()
                    .fold(f64::INFINITY, |m, l| m.min(l.re))
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let min = self.min_symbol_eigenvalue(200);
        if !(min > 0.0) {
            return Err(Error::Positivity(format!(
                "diffusion symbol has eigenvalue with real part {min} on the unit sphere"
            )));
        }
        Ok(())
    }

    /// `max_{αγ} ‖D̄_{αγ}C − C·D̄_{αγ}ᵀ‖_max`, zero for the compatible class.
    pub fn dc_defect(&self, compressibility: &Matrix5<f64>) -> f64 {
        (0..3)
            .flat_map(|a| (0..3).map(move |g| (a, g)))
            .map(|(a, g)| {
                let b = self.block(a, g);
                (b * compressibility - compressibility * b.transpose()).camax()
            })
            .fold(0.0, f64::max)
    }
}

/// `N̂(k) = Π_{Ê(k)}(D̂(k))` with diagnostics.
#[derive(Debug, Clone)]
pub struct ProjectedDiffusion {
    pub k: [f64; 3],
    pub euler: CMat,
    pub eigen: EigenSystem,
    pub diffusion: CMat,
    pub projected: CMat,
    /// `max Re λ(N̂)`.
    pub abscissa: f64,
    /// Largest eigenvalue of `(N̂ + N̂*)/2`, reported only.
    pub hermitian_part_max: f64,
}

pub fn projected_diffusion(
    k: &[f64; 3],
    cs: &CoefficientSet,
    d: &DiffusionTensor,
    tau_eig: Option<f64>,
) -> Result<ProjectedDiffusion> {
    let eigen = euler_eigen(k, cs, tau_eig)?;
    let euler = euler_symbol(k, cs);
    let diffusion = d.symbol(k);
    let projected = commutant_project(&eigen, &diffusion);
    let abscissa = super::schur_eigenvalues(&projected)
        .map(|v| v.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re)))
        .unwrap_or(f64::NAN);
    let herm = (&projected + projected.adjoint()) * c(0.5, 0.0);
    let hermitian_part_max = SymmetricEigen::new(herm).eigenvalues.max();
    if norm3(k) > 0.0 && !(abscissa < 0.0) {
        return Err(Error::Positivity(format!("projected diffusion at k = {k:?} has abscissa {abscissa}")));
    }
    Ok(ProjectedDiffusion { k: *k, euler, eigen, diffusion, projected, abscissa, hermitian_part_max })
}

/// Noise factor `B̂` with `B̂B̂* = S = −(N̂Ĉ + ĈN̂*)`.
#[derive(Debug, Clone)]
pub struct NoiseFactor {
    pub b: CMat,
    pub s: CMat,
    /// `‖N̂Ĉ − (N̂Ĉ)*‖_max`; zero makes `S = −2N̂Ĉ`.
    pub hermiticity_defect: f64,
    /// `‖N̂Ĉ + ĈN̂* + B̂B̂*‖_max`.
    pub lyapunov_residual: f64,
    pub min_eigenvalue: f64,
}

pub fn noise_factor(n: &CMat, chat: &CMat) -> Result<NoiseFactor> {
    let nc = n * chat;
    let hermiticity_defect = (&nc - nc.adjoint()).camax();
    let raw = -(&nc + chat * n.adjoint());
    let s = (&raw + raw.adjoint()) * c(0.5, 0.0);
    let (b, min_eigenvalue) = psd_sqrt(&s, 1e-10)?;
    let lyapunov_residual = (&nc + chat * n.adjoint() + &b * b.adjoint()).camax();
    Ok(NoiseFactor { b, s, hermiticity_defect, lyapunov_residual, min_eigenvalue })
}

/// `[[re, im], ...]` rows of a complex matrix.
pub fn matrix_json(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// One record of the symbol dump.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolRecord {
    pub k: [f64; 3],
    pub euler: Vec<Vec<[f64; 2]>>,
    pub compressibility: Vec<Vec<[f64; 2]>>,
    pub diffusion: Vec<Vec<[f64; 2]>>,
    pub projected: Vec<Vec<[f64; 2]>>,
    pub noise: Vec<Vec<[f64; 2]>>,
    pub spectrum: EigenSummary,
    pub sound_speed_sq: f64,
    pub euler_real_part_ratio: f64,
    pub ec_defect: f64,
    pub abscissa: f64,
    pub hermitian_part_max: f64,
    pub hermiticity_defect: f64,
    pub lyapunov_residual: f64,
}

pub fn symbol_record(
    k: &[f64; 3],
    cs: &CoefficientSet,
    compressibility: &Matrix5<f64>,
    d: &DiffusionTensor,
    tau_eig: Option<f64>,
) -> Result<SymbolRecord> {
    let pd = projected_diffusion(k, cs, d, tau_eig)?;
    let chat = to_cmat(compressibility);
    let nf = noise_factor(&pd.projected, &chat)?;
    let ec = &pd.euler * &chat + &chat * pd.euler.adjoint();
    let enorm = pd.euler.norm();
    Ok(SymbolRecord {
        k: *k,
        euler: matrix_json(&pd.euler),
        compressibility: matrix_json(&chat),
        diffusion: matrix_json(&pd.diffusion),
        projected: matrix_json(&pd.projected),
        noise: matrix_json(&nf.b),
        spectrum: pd.eigen.summary(),
        sound_speed_sq: cs.sound_speed_sq(),
        euler_real_part_ratio: if enorm > 0.0 { pd.eigen.max_abs_real_part() / enorm } else { 0.0 },
        ec_defect: ec.camax(),
        abscissa: pd.abscissa,
        hermitian_part_max: pd.hermitian_part_max,
        hermiticity_defect: nf.hermiticity_defect,
        lyapunov_residual: nf.lyapunov_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{ChemicalPotential, EquilibriumParams};
    use crate::model::VelocitySet;
    use crate::spectral::commutator;
    use crate::DEFAULT_VARPI;

    fn setup(r: f64, th: f64) -> (CoefficientSet, Matrix5<f64>) {
        let vs = VelocitySet::canonical(DEFAULT_VARPI).unwrap();
        let p = EquilibriumParams::new(ChemicalPotential::reference(r, th).unwrap(), &vs);
        (CoefficientSet::new(&p).unwrap(), p.compressibility_matrix().unwrap())
    }

    #[test]
    fn zero_wavevector_gives_zero_symbol() {
        let (cs, _) = setup(0.3, -0.1);
        assert_eq!(euler_symbol(&[0.0; 3], &cs).camax(), 0.0);
        let e = euler_eigen(&[0.0; 3], &cs, None).unwrap();
        assert_eq!(e.partition.len(), 1);
    }

    #[test]
    fn analytic_eigensystem_matches_dense_solver() {
        let (cs, _) = setup(0.3, -0.1);
        let k = [0.4, -1.1, 0.7];
        let a = euler_eigen(&k, &cs, None).unwrap();
        let g = eigen_decompose(&euler_symbol(&k, &cs), None).unwrap();
        assert_eq!(a.partition.len(), 3);
        assert_eq!(g.partition.len(), 3);
        let m = CMat::from_fn(5, 5, |i, j| c((i * 5 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let pa = commutant_project(&a, &m);
        let pg = commutant_project(&g, &m);
        assert!((pa - pg).camax() < 1e-8);
    }

    #[test]
    fn isotropic_tensor_projects_to_itself() {
        let (cs, comp) = setup(0.3, -0.1);
        let d = DiffusionTensor::isotropic(1.3);
        let k = [0.2, 0.5, -0.3];
        let pd = projected_diffusion(&k, &cs, &d, None).unwrap();
        let k2 = 0.04 + 0.25 + 0.09;
        let want = CMat::identity(5, 5) * c(-1.3 * k2, 0.0);
        assert!((pd.projected - &want).camax() < 1e-12);
        let nf = noise_factor(&want, &to_cmat(&comp)).unwrap();
        let bb = &nf.b * nf.b.adjoint();
        assert!((bb - to_cmat(&comp) * c(2.0 * 1.3 * k2, 0.0)).camax() < 1e-10);
        assert!(nf.hermiticity_defect < 1e-12);
    }

    #[test]
    fn half_filling_projection_is_identity() {
        let (cs, comp) = setup(0.0, 0.0);
        let s = Matrix5::from_fn(|i, j| if i == j { 2.0 } else { 0.1 });
        let d = DiffusionTensor::dissipative(&s, &comp, 0.8).unwrap();
        let k = [0.3, 0.1, -0.2];
        let pd = projected_diffusion(&k, &cs, &d, None).unwrap();
        assert!((pd.projected - pd.diffusion).camax() < 1e-14);
    }

    #[test]
    fn dissipative_tensor_gives_hermitian_nc() {
        let (cs, comp) = setup(0.3, -0.1);
        let s = Matrix5::from_fn(|i, j| if i == j { 3.0 + i as f64 } else { 0.4 });
        let d = DiffusionTensor::dissipative(&s, &comp, 1.0).unwrap();
        d.validate().unwrap();
        assert!(d.dc_defect(&comp) < 1e-12);
        let k = [0.6, -0.2, 0.9];
        let pd = projected_diffusion(&k, &cs, &d, None).unwrap();
        assert!(commutator(&pd.projected, &pd.euler).camax() < 1e-10);
        let nf = noise_factor(&pd.projected, &to_cmat(&comp)).unwrap();
        assert!(nf.hermiticity_defect < 1e-8, "{}", nf.hermiticity_defect);
        assert!(nf.lyapunov_residual < 1e-10);
    }

    #[test]
    fn projected_symbol_scales_quadratically() {
        let (cs, comp) = setup(0.3, -0.1);
        let s = Matrix5::from_fn(|i, j| if i == j { 2.0 } else { 0.3 });
        let d = DiffusionTensor::dissipative(&s, &comp, 1.0).unwrap();
        let k = [0.2, 0.3, -0.4];
        let base = projected_diffusion(&k, &cs, &d, None).unwrap().projected;
        for lam in [0.5, 2.0, 7.0] {
            let kl = k.map(|x| x * lam);
            let scaled = projected_diffusion(&kl, &cs, &d, None).unwrap().projected;
            assert!((scaled - &base * c(lam * lam, 0.0)).camax() < 1e-9 * lam * lam * base.camax());
        }
    }

    #[test]
    fn indefinite_noise_is_rejected() {
        let n = CMat::identity(5, 5);
        assert!(matches!(noise_factor(&n, &CMat::identity(5, 5)), Err(Error::NotPsd { .. })));
    }
}
