use super::CMat;
use crate::{Error, Result};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

/// Cap on the condition number of the eigenvector matrix.
pub const CONDITION_CAP: f64 = 1e8;
/// Relative eigenvalue-equality tolerance; the absolute threshold is
/// `TAU_EIG·(1 + spectral radius)`.
pub const TAU_EIG: f64 = 1e-9;

/// Diagonalization `A = V diag(λ) V⁻¹` with the eigenvalue partition.
///
/// Columns of `vecs` are right eigenvectors; `inv = V⁻¹` has the left
/// eigenvectors as rows.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<Complex64>,
    pub vecs: CMat,
    pub inv: CMat,
    /// Index classes of (numerically) equal eigenvalues, ordered by first index.
    pub partition: Vec<Vec<usize>>,
    pub condition: f64,
    pub threshold: f64,
}

/// Serializable summary of an [`EigenSystem`].
#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub eigenvalues: Vec<[f64; 2]>,
    pub partition: Vec<Vec<usize>>,
    pub condition: f64,
}

impl EigenSystem {
    /// Builds the system from eigenvalues and right eigenvectors, checking
    /// conditioning and the reconstruction of `a`.
    pub fn from_parts(a: &CMat, eigenvalues: Vec<Complex64>, vecs: CMat, tau_eig: Option<f64>) -> Result<Self> {
        let n = a.nrows();
        let condition = condition_number(&vecs);
        if !(condition <= CONDITION_CAP) {
            return Err(Error::NotDiagonalizable { condition });
        }
        let inv = vecs
            .clone()
            .try_inverse()
            .ok_or(Error::NotDiagonalizable { condition: f64::INFINITY })?;
        let rho = eigenvalues.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let threshold = tau_eig.unwrap_or(TAU_EIG) * (1.0 + rho);
        let partition = partition_by(&eigenvalues, threshold);
        let recon = &vecs * CMat::from_diagonal(&DVector::from_vec(eigenvalues.clone())) * &inv;
        let scale = a.camax().max(f64::MIN_POSITIVE);
        let resid = (recon - a).camax();
        if resid > 1e-10 * scale.max(1e-300) && resid > 1e-14 {
            return Err(Error::NotDiagonalizable { condition });
        }
        debug_assert_eq!(eigenvalues.len(), n);
        Ok(Self { eigenvalues, vecs, inv, partition, condition, threshold })
    }

    /// Block mask `K_{ij} = 1` iff `i, j` share a partition class.
    pub fn mask(&self) -> Vec<Vec<bool>> {
        let n = self.eigenvalues.len();
        let mut class = vec![0; n];
        for (c, block) in self.partition.iter().enumerate() {
            for &i in block {
                class[i] = c;
            }
        }
        (0..n).map(|i| (0..n).map(|j| class[i] == class[j]).collect()).collect()
    }

    pub fn max_abs_real_part(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, z| m.max(z.re.abs()))
    }

    pub fn summary(&self) -> EigenSummary {
        EigenSummary {
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            partition: self.partition.clone(),
            condition: self.condition,
        }
    }
}

/// General dense diagonalization: Schur eigenvalues, then an SVD null space
/// for each eigenvalue cluster.
pub fn eigen_decompose(a: &CMat, tau_eig: Option<f64>) -> Result<EigenSystem> {
    assert!(a.is_square());
    let n = a.nrows();
    let vals = super::schur_eigenvalues(a).ok_or(Error::NotDiagonalizable { condition: f64::INFINITY })?;
    let rho = vals.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let threshold = tau_eig.unwrap_or(TAU_EIG) * (1.0 + rho);
    let clusters = partition_by(&vals, threshold);

    let mut vecs = CMat::zeros(n, n);
    let mut col = 0;
    let anorm = a.camax().max(1.0);
    for block in &clusters {
        let m = block.len();
        let mu = block.iter().map(|&i| vals[i]).sum::<Complex64>() / m as f64;
        let shifted = a - CMat::identity(n, n) * mu;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("requested right singular vectors");
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        if svd.singular_values[idx[m - 1]] > 1e-6 * anorm {
            return Err(Error::NotDiagonalizable { condition: f64::INFINITY });
        }
        for &i in idx.iter().take(m) {
            let v = vt.row(i).adjoint();
            vecs.set_column(col, &v);
            col += 1;
        }
    }
    let inv = vecs
        .clone()
        .try_inverse()
        .ok_or(Error::NotDiagonalizable { condition: f64::INFINITY })?;
    // Rayleigh-type refinement on the diagonal of V⁻¹AV.
    let diag = &inv * a * &vecs;
    let eigenvalues: Vec<Complex64> = (0..n).map(|i| diag[(i, i)]).collect();
    EigenSystem::from_parts(a, eigenvalues, vecs, tau_eig)
}

/// Equivalence classes of the relation `|λ_i − λ_j| ≤ threshold`, closed
/// transitively.
pub fn partition_by(vals: &[Complex64], threshold: f64) -> Vec<Vec<usize>> {
    let n = vals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let next = p[i];
            p[i] = r;
            i = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() <= threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_block = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_block[r] == usize::MAX {
            root_block[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[root_block[r]].push(i);
    }
    blocks
}

/// 2-norm condition number `σ_max/σ_min`.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
