use super::{expm, CMat, EigenSystem};
use crate::{Error, Result};
use num_complex::Complex64;

/// `Π_A(M) = V (K ∘ (V⁻¹ M V)) V⁻¹`: projection onto the commutant of `A`.
pub fn commutant_project(eig: &EigenSystem, m: &CMat) -> CMat {
    let mask = eig.mask();
    let mut x = &eig.inv * m * &eig.vecs;
    for (i, row) in mask.iter().enumerate() {
        for (j, &keep) in row.iter().enumerate() {
            if !keep {
                x[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    &eig.vecs * x * &eig.inv
}

/// `[X, A]`.
pub fn commutator(x: &CMat, a: &CMat) -> CMat {
    x * a - a * x
}

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `(1/T)∫₀^T e^{sA} M e^{−sA} ds` by composite 8-point Gauss–Legendre.
///
/// Panels have width at most `step`; conjugation by the exponential of the
/// panel width carries the first-panel integral to every later panel. The
/// step must resolve the fastest phase: `step ≤ π/(4·max|λ(A)|)`.
pub fn time_average_conjugation(a: &CMat, m: &CMat, t: f64, step: f64) -> Result<CMat> {
    let spectral_radius = spectral_radius(a);
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("averaging horizon {t} must be positive")));
    }
    let limit = if spectral_radius > 0.0 {
        std::f64::consts::PI / (4.0 * spectral_radius)
    } else {
        f64::INFINITY
    };
    if !(step > 0.0) || step > limit {
        return Err(Error::StepTooLarge { step, limit });
    }
    let panels = (t / step).ceil().max(1.0) as usize;
    let h = t / panels as f64;
    let c = |x: f64| Complex64::new(x, 0.0);

    let mut q = CMat::zeros(m.nrows(), m.ncols());
    for (i, &x) in GL8_NODES.iter().enumerate() {
        for s in [0.5 * h * (1.0 - x), 0.5 * h * (1.0 + x)] {
            let ep = expm(&(a * c(s)));
            let em = expm(&(a * c(-s)));
            q += ep * m * em * c(0.5 * h * GL8_WEIGHTS[i]);
        }
    }
    let shift = expm(&(a * c(h)));
    let shift_inv = expm(&(a * c(-h)));
    let mut u = CMat::identity(a.nrows(), a.ncols());
    let mut u_inv = u.clone();
    let mut total = CMat::zeros(m.nrows(), m.ncols());
    for _ in 0..panels {
        total += &u * &q * &u_inv;
        u = &u * &shift;
        u_inv = &shift_inv * &u_inv;
    }
    Ok(total * c(1.0 / t))
}

/// `max|λ(A)|` from the Schur form.
pub fn spectral_radius(a: &CMat) -> f64 {
    super::schur_eigenvalues(a)
        .map(|v| v.iter().fold(0.0_f64, |m, z| m.max(z.norm())))
        .unwrap_or(f64::INFINITY)
}

/// Closed form of the same average through a diagonalization:
/// entries of `V⁻¹MV` are weighted by `(e^{dT} − 1)/(dT)`, `d = λ_i − λ_j`.
pub fn time_average_exact(eig: &EigenSystem, m: &CMat, t: f64) -> CMat {
    let mut x = &eig.inv * m * &eig.vecs;
    let n = eig.eigenvalues.len();
    for i in 0..n {
        for j in 0..n {
            let d = (eig.eigenvalues[i] - eig.eigenvalues[j]) * t;
            if d.norm() > 1e-12 {
                x[(i, j)] *= (d.exp() - 1.0) / d;
            }
        }
    }
    &eig.vecs * x * &eig.inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigen_decompose;
    use nalgebra::DVector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_matrix_projects_to_identity_map() {
        let a = CMat::zeros(3, 3);
        let e = eigen_decompose(&a, None).unwrap();
        let m = CMat::from_fn(3, 3, |i, j| c(i as f64, j as f64 - 1.0));
        assert!((commutant_project(&e, &m) - &m).camax() < 1e-15);
        let avg = time_average_conjugation(&a, &m, 3.0, 0.5).unwrap();
        assert!((avg - &m).camax() < 1e-14);
    }

    #[test]
    fn rotation_pair_keeps_diagonal() {
        let a = CMat::from_diagonal(&DVector::from_vec(vec![c(0.0, 1.0), c(0.0, -1.0)]));
        let e = eigen_decompose(&a, None).unwrap();
        let ones = CMat::from_element(2, 2, c(1.0, 0.0));
        let p = commutant_project(&e, &ones);
        assert!((p - CMat::identity(2, 2)).camax() < 1e-14);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let a = CMat::from_diagonal(&DVector::from_vec(vec![c(0.0, 1.3), c(0.0, -1.3), c(0.0, 0.0)]));
        let e = eigen_decompose(&a, None).unwrap();
        let m = CMat::from_fn(3, 3, |i, j| c(1.0 + i as f64, 0.5 * j as f64));
        for t in [0.7, 10.0, 55.5] {
            let q = time_average_conjugation(&a, &m, t, 0.1).unwrap();
            let x = time_average_exact(&e, &m, t);
            assert!((q - x).camax() < 1e-12, "T = {t}");
        }
    }

    #[test]
    fn underresolved_step_is_rejected() {
        let a = CMat::from_diagonal(&DVector::from_vec(vec![c(0.0, 10.0), c(0.0, -10.0)]));
        let m = CMat::identity(2, 2);
        assert!(matches!(
            time_average_conjugation(&a, &m, 1.0, 0.1),
            Err(Error::StepTooLarge { .. })
        ));
    }
}
