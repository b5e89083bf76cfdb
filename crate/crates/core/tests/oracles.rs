//! Reference values computed independently of the library and frozen here.

use lgas_core::dynamics::Lattice;
use lgas_core::equilibrium::{ChemicalPotential, CoefficientSet, EquilibriumParams};
use lgas_core::exactlab::{carre_du_champ, EnumeratedSystem, Part, DEFAULT_STATE_CAP};
use lgas_core::model::{conserved_at_site, CollisionTable, Model, SymbolicScalar, ToySpec, VelocitySet};
use lgas_core::oulimit::lag_covariance;
use lgas_core::spectral::{
    commutant_project, eigen_decompose, euler_symbol, noise_factor, projected_diffusion, to_cmat, CMat,
    DiffusionTensor,
};
use lgas_core::{rng, DEFAULT_VARPI};
use nalgebra::{DVector, Matrix5};
use num_complex::Complex64;
use rand::Rng;
use std::sync::Arc;

const W: f64 = std::f64::consts::SQRT_2;

/// The 32 canonical velocities written out by hand.
fn hand_velocities() -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for s in 0..8 {
        let sg = |b: usize| if s >> b & 1 == 1 { -1.0 } else { 1.0 };
        out.push([sg(0), sg(1), sg(2)]);
        for pos in 0..3 {
            let mut v = [sg(0), sg(1), sg(2)];
            v[pos] *= W;
            out.push(v);
        }
    }
    out
}

fn hand_covariance(r: f64, th: f64) -> Matrix5<f64> {
    let mut c = Matrix5::zeros();
    for v in hand_velocities() {
        let e = 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        let f = 1.0 / (1.0 + (-(r + th * e)).exp());
        let phi = nalgebra::Vector5::new(1.0, v[0], v[1], v[2], e);
        c += phi * phi.transpose() * (f * (1.0 - f));
    }
    c
}

#[test]
fn canonical_set_membership() {
    let vs = VelocitySet::canonical(W).unwrap();
    assert_eq!(vs.len(), 32);
    let one = SymbolicScalar::int(1);
    assert!(vs.id_of(&[one; 3]).is_some());
    assert!(vs.id_of(&[SymbolicScalar::of_varpi(1), one, one]).is_some());
    let mut got: Vec<[f64; 3]> = (0..32).map(|v| vs.get(v).eval(W)).collect();
    let mut want = hand_velocities();
    for l in [&mut got, &mut want] {
        l.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    assert_eq!(got, want);
}

#[test]
fn corner_collision_and_empty_toy_table() {
    let vs = VelocitySet::canonical(W).unwrap();
    let id = |a: i64, b: i64, c: i64| vs.id_of(&[a, b, c].map(SymbolicScalar::int)).unwrap();
    let table = CollisionTable::build(&vs);
    assert!(table.contains(&[id(1, 1, 1), id(-1, -1, 1), id(1, -1, 1), id(-1, 1, 1)]));
    let pair = VelocitySet::build(W, Some(&ToySpec::one_d_pair())).unwrap();
    assert!(CollisionTable::build(&pair).is_empty());
}

#[test]
fn single_particle_site_quantities() {
    let vs = VelocitySet::canonical(W).unwrap();
    let v = vs.id_of(&[SymbolicScalar::int(1); 3]).unwrap();
    assert_eq!(conserved_at_site(1 << v, &vs), [1.0, 1.0, 1.0, 1.0, 1.5]);
    assert_eq!(conserved_at_site(0, &vs), [0.0; 5]);
}

#[test]
fn half_filling_brackets() {
    let p = EquilibriumParams::new(ChemicalPotential::zero(), &VelocitySet::canonical(W).unwrap());
    // ¼(8·3 + 24·4) and ¼(8·9 + 24·16).
    assert!((p.brackets.moments.h0[1] - 30.0).abs() < 1e-12);
    assert!((p.brackets.moments.h0[2] - 114.0).abs() < 1e-12);
    let c = p.compressibility_matrix().unwrap();
    let want = [(0, 0, 8.0), (1, 1, 10.0), (0, 4, 15.0), (4, 4, 28.5), (0, 1, 0.0)];
    for (i, j, x) in want {
        assert!((c[(i, j)] - x).abs() < 1e-12, "C[{i}{j}] = {}", c[(i, j)]);
    }
    let cs = CoefficientSet::new(&p).unwrap();
    assert_eq!([cs.a0, cs.a4, cs.b0, cs.b4].map(|x| (x.abs() < 1e-14) as u8), [1; 4]);
}

#[test]
fn compressibility_matches_hand_sum() {
    for (r, th) in [(0.3, -0.1), (-0.8, -0.45), (1.2, 0.05)] {
        let p = EquilibriumParams::new(ChemicalPotential::reference(r, th).unwrap(), &VelocitySet::canonical(W).unwrap());
        let lib = p.compressibility_matrix().unwrap();
        let hand = hand_covariance(r, th);
        assert!((lib - hand).amax() < 1e-12 * hand.amax(), "({r}, {th})");
        assert!((p.single_site_covariance() - hand).amax() < 1e-12 * hand.amax());
    }
}

#[test]
fn euler_spectrum_from_characteristic_polynomial() {
    let p = EquilibriumParams::new(ChemicalPotential::reference(0.3, -0.1).unwrap(), &VelocitySet::canonical(W).unwrap());
    let cs = CoefficientSet::new(&p).unwrap();
    let k = [0.7, -0.2, 1.1];
    let e = euler_symbol(&k, &cs);
    let c2 = cs.a0 * cs.b0 + cs.a4 * cs.b4;
    assert!(c2 > 0.0);
    let w = (c2 * (0.49 + 0.04 + 1.21_f64)).sqrt();
    let eig = eigen_decompose(&e, None).unwrap();
    let mut im: Vec<f64> = eig.eigenvalues.iter().map(|z| z.im).collect();
    im.sort_by(f64::total_cmp);
    let want = [-w, 0.0, 0.0, 0.0, w];
    for (a, b) in im.iter().zip(want) {
        assert!((a - b).abs() < 1e-10 * w);
    }
    assert_eq!(eig.partition.len(), 3);
}

#[test]
fn averaging_kills_counter_rotating_entries() {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let a = CMat::from_diagonal(&DVector::from_vec(vec![c(0.0, 1.0), c(0.0, -1.0)]));
    let m = CMat::from_element(2, 2, c(1.0, 0.0));
    let p = commutant_project(&eigen_decompose(&a, None).unwrap(), &m);
    assert!((p - CMat::identity(2, 2)).camax() < 1e-15);
}

#[test]
fn isotropic_noise_and_lag_covariance() {
    let p = EquilibriumParams::new(ChemicalPotential::reference(0.3, -0.1).unwrap(), &VelocitySet::canonical(W).unwrap());
    let cs = CoefficientSet::new(&p).unwrap();
    let chat = to_cmat(&p.compressibility_matrix().unwrap());
    let chi = 0.9;
    let k = [0.4, 0.3, -1.2];
    let k2 = 0.16 + 0.09 + 1.44;
    let pd = projected_diffusion(&k, &cs, &DiffusionTensor::isotropic(chi), None).unwrap();
    let nf = noise_factor(&pd.projected, &chat).unwrap();
    let bb = &nf.b * nf.b.adjoint();
    assert!((bb - &chat * Complex64::new(2.0 * chi * k2, 0.0)).camax() < 1e-10);
    for tau in [0.0, 0.3, 2.0] {
        let lag = lag_covariance(&pd.projected, &chat, tau);
        let want = &chat * Complex64::new((-chi * k2 * tau).exp(), 0.0);
        assert!((lag - want).camax() < 1e-12);
    }
    assert!(lag_covariance(&pd.projected, &chat, 60.0).camax() < 1e-20);
}

#[test]
fn three_site_pair_toy_generator() {
    let model = Arc::new(Model::toy(DEFAULT_VARPI, &ToySpec::one_d_pair()).unwrap());
    let lat = Arc::new(Lattice::new(1, 1).unwrap());
    let sys = EnumeratedSystem::build(model, lat, 0.8, 1.0, DEFAULT_STATE_CAP).unwrap();
    assert_eq!(sys.nstates(), 64);
    let p = EquilibriumParams::new(ChemicalPotential::new([0.2, -0.6, 0.0, 0.0, 0.0]).unwrap(), &sys.model.velocities);
    let mu = sys.product_measure(&p);
    assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    let mut g = rng(3, 0);
    for _ in 0..100 {
        let f: Vec<f64> = (0..64).map(|_| g.random::<f64>()).collect();
        let lf = sys.apply(&f);
        let s: f64 = mu.iter().zip(&lf).map(|(m, l)| m * l).sum();
        assert!(s.abs() < 1e-13);
    }
}

#[test]
fn carre_du_champ_of_an_indicator() {
    let model = Arc::new(Model::toy(DEFAULT_VARPI, &ToySpec::two_d_diagonal()).unwrap());
    let lat = Arc::new(Lattice::new(1, 1).unwrap());
    let sys = EnumeratedSystem::build(model, lat, 0.9, 1.3, DEFAULT_STATE_CAP).unwrap();
    let eta = 0b0101_0011_0110u64 as usize;
    let mut f = vec![0.0; sys.nstates()];
    f[eta] = 1.0;
    for part in [Part::Exchange, Part::Collision] {
        let (via_generator, direct) = carre_du_champ(&sys, part, &f, &f);
        assert!(via_generator.iter().all(|&x| x >= -1e-14));
        let mut exit = 0.0;
        let mut neighbors = Vec::new();
        sys.moves(eta as u64, part, |to, r| {
            exit += r;
            neighbors.push(to);
        });
        assert!(!neighbors.is_empty());
        assert!((via_generator[eta] - exit).abs() < 1e-12);
        for to in neighbors {
            let mut back = 0.0;
            sys.moves(to, part, |dest, r| {
                if dest == eta as u64 {
                    back += r;
                }
            });
            assert!(back > 0.0);
            assert!((via_generator[to as usize] - back).abs() < 1e-12);
        }
        assert!((direct[eta] - via_generator[eta]).abs() < 1e-12);
    }
}
