//! Fourier symbols of the Euler, compressibility and diffusion operators,
//! eigen-partitions, the commutant projection and the noise factor.

mod eigen;
mod expm;
mod project;
mod symbols;

pub use eigen::{condition_number, eigen_decompose, partition_by, EigenSummary, EigenSystem, CONDITION_CAP, TAU_EIG};
pub use expm::expm;
pub use project::{commutant_project, commutator, spectral_radius, time_average_conjugation, time_average_exact};
pub use symbols::{
    euler_eigen, euler_symbol, matrix_json, noise_factor, projected_diffusion, symbol_record, DiffusionTensor,
    NoiseFactor, ProjectedDiffusion, SymbolRecord,
};

use nalgebra::{DMatrix, Matrix5};
use num_complex::Complex64;

/// Dense complex matrix used for mode symbols.
pub type CMat = DMatrix<Complex64>;

/// Real 5×5 matrix as a complex dense matrix.
pub fn to_cmat(m: &Matrix5<f64>) -> CMat {
    CMat::from_fn(5, 5, |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// Hermitian square root `U diag(√λ⁺) U*` of a hermitian matrix, with its
/// smallest eigenvalue. Eigenvalues below `−rel_tol·max(1, ‖S‖_max)` are an
/// error; the rest are clipped at zero.
pub fn psd_sqrt(s: &CMat, rel_tol: f64) -> crate::Result<(CMat, f64)> {
    let eig = nalgebra::SymmetricEigen::new(s.clone());
    let min = eig.eigenvalues.min();
    if min < -rel_tol * s.camax().max(1.0) {
        return Err(crate::Error::NotPsd { min_eigenvalue: min });
    }
    let roots = nalgebra::DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let u = &eig.eigenvectors;
    Ok((u * CMat::from_diagonal(&roots) * u.adjoint(), min))
}

/// Eigenvalues from a complex Schur decomposition with a bounded iteration
/// count; `None` when the QR sweep does not converge.
///
/// The matrix is shifted by its mean eigenvalue and rescaled first: the
/// unshifted sweep can stall on matrices that are scalar up to roundoff.
pub(crate) fn schur_eigenvalues(a: &CMat) -> Option<Vec<Complex64>> {
    let n = a.nrows();
    let mu = a.trace() / Complex64::new(n as f64, 0.0);
    let centered = a - CMat::identity(n, n) * mu;
    let s = centered.camax();
    if s <= 1e-14 * a.camax() {
        return Some(vec![mu; n]);
    }
    let scaled = centered / Complex64::new(s, 0.0);
    // Tight deflation can stall on clustered spectra; loosen before giving up.
    [f64::EPSILON, 1e-14, 1e-13]
        .into_iter()
        .find_map(|eps| nalgebra::Schur::try_new(scaled.clone(), eps, 10_000).and_then(|sch| sch.eigenvalues()))
        .map(|v| v.iter().map(|z| z * s + mu).collect())
}
