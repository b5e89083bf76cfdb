use lgas_core::dynamics::{DynamicsParams, Lattice, Simulator};
use lgas_core::equilibrium::{chemical_potential_for, sample_product_measure, ChemicalPotential, CoefficientSet, EquilibriumParams};
use lgas_core::exactlab::{carre_du_champ_residual, invariance_residual, EnumeratedSystem, Part, DEFAULT_STATE_CAP};
use lgas_core::model::{Model, ToySpec, VelocitySet};
use lgas_core::observables::{fourier_fluctuation, PhaseTable};
use lgas_core::oulimit::composition_residual;
use lgas_core::spectral::{
    commutant_project, commutator, eigen_decompose, euler_symbol, expm, projected_diffusion, to_cmat, CMat,
    DiffusionTensor,
};
use lgas_core::{rng, DEFAULT_VARPI, NCONS};
use nalgebra::{DVector, Matrix5};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use std::sync::Arc;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cmat(n: usize, vals: &[(f64, f64)]) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        let (a, b) = vals[i * n + j];
        cx(a, b)
    })
}

fn reference(r: f64, th: f64) -> EquilibriumParams {
    EquilibriumParams::new(ChemicalPotential::reference(r, th).unwrap(), &VelocitySet::canonical(DEFAULT_VARPI).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commutant_projection_identities(
        levels in prop::collection::vec(0usize..3, 5),
        freqs in prop::array::uniform3(-2.0f64..2.0),
        mix in prop::collection::vec((-0.3f64..0.3, -0.3f64..0.3), 25),
        m in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 25),
        coef in prop::array::uniform3(-1.0f64..1.0),
    ) {
        // Well-separated imaginary levels with random multiplicities.
        let lam: Vec<Complex64> = levels.iter().map(|&l| cx(0.0, 3.0 * l as f64 + 0.1 * freqs[l])).collect();
        let v = CMat::identity(5, 5) + cmat(5, &mix);
        let vinv = v.clone().try_inverse().unwrap();
        let a = &v * CMat::from_diagonal(&DVector::from_vec(lam)) * &vinv;
        let eig = eigen_decompose(&a, None).unwrap();
        let m = cmat(5, &m);
        let p = commutant_project(&eig, &m);
        prop_assert!((commutant_project(&eig, &p) - &p).camax() < 1e-10);
        prop_assert!(commutator(&p, &a).camax() < 1e-10);
        let x = CMat::identity(5, 5) * cx(coef[0], 0.0) + &a * cx(coef[1], 0.0) + &a * &a * cx(coef[2], 0.0);
        prop_assert!((commutant_project(&eig, &x) - &x).camax() < 1e-10);
    }

    #[test]
    fn euler_symbol_is_compressibility_skew(
        r in -1.5f64..1.5,
        th in -0.8f64..-0.02,
        k in prop::array::uniform3(-4.0f64..4.0),
    ) {
        let p = reference(r, th);
        let cs = CoefficientSet::new(&p).unwrap();
        let c = to_cmat(&p.compressibility_matrix().unwrap());
        let e = euler_symbol(&k, &cs);
        let scale = e.camax() * c.camax();
        prop_assert!((&e * &c + &c * e.adjoint()).camax() <= 1e-14 * scale.max(1.0));
    }

    #[test]
    fn expm_group_property(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 25), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let a = cmat(5, &vals);
        let lhs = expm(&(&a * cx(s + t, 0.0)));
        let rhs = expm(&(&a * cx(s, 0.0))) * expm(&(&a * cx(t, 0.0)));
        prop_assert!((&lhs - rhs).camax() < 1e-11 * lhs.camax().max(1.0));
    }

    #[test]
    fn ou_transition_composes(
        diag in prop::array::uniform5(1.0f64..4.0),
        off in -0.3f64..0.3,
        k in prop::array::uniform3(-2.0f64..2.0),
        delta in 0.001f64..0.2,
    ) {
        prop_assume!(k.iter().map(|x| x * x).sum::<f64>() > 0.05);
        let p = reference(0.3, -0.1);
        let cs = CoefficientSet::new(&p).unwrap();
        let comp = p.compressibility_matrix().unwrap();
        let s = Matrix5::from_fn(|i, j| if i == j { diag[i] } else { off });
        let d = DiffusionTensor::dissipative(&s, &comp, 1.0).unwrap();
        let pd = projected_diffusion(&k, &cs, &d, None).unwrap();
        let c = to_cmat(&comp);
        prop_assert!(composition_residual(&pd.projected, &c, delta).unwrap() < 1e-11 * c.camax());
    }

    #[test]
    fn inversion_recovers_reference_potential(r in -1.0f64..1.0, th in -0.5f64..-0.02) {
        let vs = VelocitySet::canonical(DEFAULT_VARPI).unwrap();
        let p = EquilibriumParams::new(ChemicalPotential::reference(r, th).unwrap(), &vs);
        let back = chemical_potential_for(p.mean_conserved(), &vs, None).unwrap();
        for (a, b) in back.n.n.iter().zip([r, 0.0, 0.0, 0.0, th]) {
            prop_assert!((a - b).abs() < 1e-7, "{:?}", back.n.n);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trajectories_conserve_totals(seed in any::<u64>(), chi in 1.3f64..3.0, scale in 0.0f64..3.0) {
        let vs = VelocitySet::canonical(DEFAULT_VARPI).unwrap();
        let model = Arc::new(Model::canonical(DEFAULT_VARPI).unwrap());
        let lattice = Arc::new(Lattice::new(2, 3).unwrap());
        let mut params = DynamicsParams::for_lattice(chi, 2, DEFAULT_VARPI);
        params.collision_rate_scale = scale;
        let sim = Simulator::new(model, params, 3).unwrap();
        let mut g = rng(seed, 0);
        let mut state = sample_product_measure(&reference(0.1, -0.2), &vs, lattice, &mut g).unwrap();
        let start = state.totals();
        sim.run_events(&mut state, 5_000, &mut g).unwrap();
        prop_assert_eq!(state.totals(), start);
        prop_assert!(state.check_totals(&vs).is_ok());
    }

    #[test]
    fn toy_generator_identities(n in prop::array::uniform2(-1.5f64..1.5), chi in 0.6f64..2.0, scale in 0.0f64..2.0, seed in any::<u64>()) {
        let model = Arc::new(Model::toy(DEFAULT_VARPI, &ToySpec::two_d_diagonal()).unwrap());
        let sys = EnumeratedSystem::build(model, Arc::new(Lattice::new(1, 1).unwrap()), chi, scale, DEFAULT_STATE_CAP).unwrap();
        let p = EquilibriumParams::new(ChemicalPotential::new([n[0], n[1], 0.3, 0.0, -0.2]).unwrap(), &sys.model.velocities);
        prop_assert!(invariance_residual(&sys, &sys.product_measure(&p)) < 1e-12);
        let mut g = rng(seed, 0);
        let f: Vec<f64> = (0..sys.nstates()).map(|_| g.random::<f64>() - 0.5).collect();
        let h: Vec<f64> = (0..sys.nstates()).map(|_| g.random::<f64>() - 0.5).collect();
        for part in [Part::Exchange, Part::Collision] {
            prop_assert!(carre_du_champ_residual(&sys, part, &f, &h) < 1e-10);
        }
    }

    #[test]
    fn fourier_amplitudes_are_conjugate_symmetric(seed in any::<u64>(), z in prop::array::uniform3(-3i64..=3)) {
        prop_assume!(z != [0, 0, 0]);
        let vs = VelocitySet::canonical(DEFAULT_VARPI).unwrap();
        let lattice = Arc::new(Lattice::new(3, 3).unwrap());
        let p = reference(0.3, -0.1);
        let mut g = rng(seed, 0);
        let state = sample_product_measure(&p, &vs, lattice.clone(), &mut g).unwrap();
        let table = PhaseTable::new(&lattice, &[z, z.map(|x| -x)]).unwrap();
        let s = fourier_fluctuation(&state, &vs, &p.mean_conserved(), &table).unwrap();
        for b in 0..NCONS {
            prop_assert!((s[0].zhat[b] - s[1].zhat[b].conj()).norm() < 1e-10);
        }
    }
}
