//! Python module `lgas`: velocity sets, equilibrium coefficients, the
//! microscopic simulator, Fourier symbols, the per-mode OU ensemble and the
//! exact toy oracles.

use lgas_core::dynamics::{DynamicsParams, Lattice, LatticeState, Simulator};
use lgas_core::equilibrium::{
    sample_product_measure, ChemicalPotential, CoefficientReport, CoefficientSet, EquilibriumParams,
};
use lgas_core::exactlab::{default_suite, run_oracles as core_oracles};
use lgas_core::model::{CollisionTable, Model};
use lgas_core::observables::{fourier_fluctuation, ModeGrid, PhaseTable};
use lgas_core::oulimit::{lag_covariance, ou_covariance_report, EnsembleConfig, ModeProblem};
use lgas_core::spectral::{
    commutant_project as core_project, eigen_decompose, euler_symbol, noise_factor, projected_diffusion, to_cmat,
    CMat, DiffusionTensor,
};
use lgas_core::{DEFAULT_VARPI, NCONS};
use nalgebra::Matrix5;
use rand_chacha::ChaCha8Rng;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;
use std::sync::Arc;

create_exception!(lgas, LgasError, PyException);

fn err(e: lgas_core::Error) -> PyErr {
    LgasError::new_err(e.to_string())
}

/// Round-trips a serializable value through the stdlib `json` module.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| LgasError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(r: &[Vec<Complex64>]) -> PyResult<CMat> {
    let n = r.len();
    if r.iter().any(|row| row.len() != n) {
        return Err(LgasError::new_err("expected a square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| r[i][j]))
}

#[pyclass(name = "VelocitySet", module = "lgas", frozen)]
struct PyVelocitySet {
    inner: lgas_core::model::VelocitySet,
}

#[pymethods]
impl PyVelocitySet {
    #[new]
    #[pyo3(signature = (varpi = DEFAULT_VARPI))]
    fn new(varpi: f64) -> PyResult<Self> {
        Ok(Self { inner: lgas_core::model::VelocitySet::canonical(varpi).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn varpi(&self) -> f64 {
        self.inner.varpi()
    }

    fn velocity(&self, id: usize) -> PyResult<[f64; 3]> {
        self.check(id)?;
        Ok(self.inner.get(id).eval(self.inner.varpi()))
    }

    /// `(1, v₁, v₂, v₃, |v|²/2)`.
    fn phi(&self, id: usize) -> PyResult<[f64; NCONS]> {
        self.check(id)?;
        Ok(self.inner.phi(id))
    }

    /// Ordered collision quadruples `(v, w, v', w')`.
    fn collisions(&self) -> Vec<[usize; 4]> {
        CollisionTable::build(&self.inner).quadruples().to_vec()
    }
}

impl PyVelocitySet {
    fn check(&self, id: usize) -> PyResult<()> {
        if id >= self.inner.len() {
            return Err(LgasError::new_err(format!("velocity id {id} out of range")));
        }
        Ok(())
    }
}

/// Grand canonical product measure with its transport coefficients.
#[pyclass(name = "Equilibrium", module = "lgas", frozen)]
struct PyEquilibrium {
    params: EquilibriumParams,
    coefficients: CoefficientSet,
}

#[pymethods]
impl PyEquilibrium {
    #[new]
    #[pyo3(signature = (r = None, theta = None, n = None, varpi = DEFAULT_VARPI))]
    fn new(r: Option<f64>, theta: Option<f64>, n: Option<[f64; NCONS]>, varpi: f64) -> PyResult<Self> {
        let cp = match (r, theta, n) {
            (Some(r), Some(t), None) => ChemicalPotential::reference(r, t),
            (None, None, Some(n)) => ChemicalPotential::new(n),
            _ => return Err(LgasError::new_err("give either r and theta, or n")),
        }
        .map_err(err)?;
        let vs = lgas_core::model::VelocitySet::canonical(varpi).map_err(err)?;
        let params = EquilibriumParams::new(cp, &vs);
        let coefficients = CoefficientSet::new(&params).map_err(err)?;
        Ok(Self { params, coefficients })
    }

    #[getter]
    fn n(&self) -> [f64; NCONS] {
        self.params.n.n
    }

    fn mean_conserved(&self) -> [f64; NCONS] {
        self.params.mean_conserved()
    }

    fn compressibility(&self) -> PyResult<Vec<Vec<f64>>> {
        let c = self.params.compressibility_matrix().map_err(err)?;
        Ok((0..NCONS).map(|i| (0..NCONS).map(|j| c[(i, j)]).collect()).collect())
    }

    /// Full coefficient report as a dict.
    fn coefficients<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &CoefficientReport::new(&self.params).map_err(err)?)
    }

    fn sound_speed_sq(&self) -> f64 {
        self.coefficients.sound_speed_sq()
    }

    fn euler_symbol(&self, k: [f64; 3]) -> Vec<Vec<Complex64>> {
        rows(&euler_symbol(&k, &self.coefficients))
    }

    /// Projected diffusion `N̂(k)` and noise factor `B̂(k)` for `D = χ𝕀`, or
    /// `D̄ = S C⁻¹` when `s` is given.
    #[pyo3(signature = (k, chi, s = None))]
    fn projected_diffusion<'py>(
        &self,
        py: Python<'py>,
        k: [f64; 3],
        chi: f64,
        s: Option<[[f64; NCONS]; NCONS]>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let pd = projected_diffusion(&k, &self.coefficients, &self.tensor(chi, s)?, None).map_err(err)?;
        let chat = to_cmat(&self.params.compressibility_matrix().map_err(err)?);
        let nf = noise_factor(&pd.projected, &chat).map_err(err)?;
        let d = pyo3::types::PyDict::new(py);
        d.set_item("euler", rows(&pd.euler))?;
        d.set_item("diffusion", rows(&pd.diffusion))?;
        d.set_item("projected", rows(&pd.projected))?;
        d.set_item("noise", rows(&nf.b))?;
        d.set_item("abscissa", pd.abscissa)?;
        d.set_item("hermiticity_defect", nf.hermiticity_defect)?;
        d.set_item("lyapunov_residual", nf.lyapunov_residual)?;
        Ok(d.into_any())
    }

    /// Closed-form stationary lag covariance `e^{N̂τ}Ĉ`.
    #[pyo3(signature = (k, chi, tau, s = None))]
    fn lag_covariance(&self, k: [f64; 3], chi: f64, tau: f64, s: Option<[[f64; NCONS]; NCONS]>) -> PyResult<Vec<Vec<Complex64>>> {
        let (n, chat) = self.projected(k, chi, s)?;
        Ok(rows(&lag_covariance(&n, &chat, tau)))
    }

    /// Per-mode OU ensemble on the grid of half-width `half_width`.
    #[pyo3(signature = (mode, half_width, chi, replicas, seed, delta = 0.05, lag_steps = 2, nlags = 3, s = None))]
    #[allow(clippy::too_many_arguments)]
    fn ou_covariance<'py>(
        &self,
        py: Python<'py>,
        mode: [i64; 3],
        half_width: usize,
        chi: f64,
        replicas: usize,
        seed: u64,
        delta: f64,
        lag_steps: usize,
        nlags: usize,
        s: Option<[[f64; NCONS]; NCONS]>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let grid = ModeGrid::new(half_width, 3);
        grid.validate(mode).map_err(err)?;
        let (n_hat, c_hat) = self.projected(grid.wavevector(mode), chi, s)?;
        let cfg = EnsembleConfig { delta, lag_steps, nlags, replicas, seed };
        let report = py
            .detach(|| ou_covariance_report(&ModeProblem { k: mode, n_hat, c_hat }, &cfg, 0))
            .map_err(err)?;
        to_py(py, &report)
    }
}

impl PyEquilibrium {
    fn tensor(&self, chi: f64, s: Option<[[f64; NCONS]; NCONS]>) -> PyResult<DiffusionTensor> {
        match s {
            None => Ok(DiffusionTensor::isotropic(chi)),
            Some(s) => {
                let c = self.params.compressibility_matrix().map_err(err)?;
                DiffusionTensor::dissipative(&Matrix5::from_fn(|i, j| s[i][j]), &c, chi).map_err(err)
            }
        }
    }

    fn projected(&self, k: [f64; 3], chi: f64, s: Option<[[f64; NCONS]; NCONS]>) -> PyResult<(CMat, CMat)> {
        let pd = projected_diffusion(&k, &self.coefficients, &self.tensor(chi, s)?, None).map_err(err)?;
        let chat = to_cmat(&self.params.compressibility_matrix().map_err(err)?);
        Ok((pd.projected, chat))
    }
}

/// Exact microscopic dynamics on `{−L, …, L}³` started from the product
/// measure.
#[pyclass(name = "Simulation", module = "lgas")]
struct PySimulation {
    sim: Simulator,
    state: LatticeState,
    rng: ChaCha8Rng,
    vs: lgas_core::model::VelocitySet,
    mean: [f64; NCONS],
}

#[pymethods]
impl PySimulation {
    #[new]
    #[pyo3(signature = (equilibrium, half_width, chi, seed, collision_rate_scale = 1.0))]
    fn new(equilibrium: &PyEquilibrium, half_width: usize, chi: f64, seed: u64, collision_rate_scale: f64) -> PyResult<Self> {
        let model = Arc::new(Model::canonical(equilibrium.params.varpi).map_err(err)?);
        let lattice = Arc::new(Lattice::new(half_width, 3).map_err(err)?);
        let mut params = DynamicsParams::for_lattice(chi, half_width, model.varpi());
        params.collision_rate_scale = collision_rate_scale;
        let sim = Simulator::new(model.clone(), params, 3).map_err(err)?;
        let vs = model.velocities.clone();
        let mut rng = lgas_core::rng(seed, 0);
        let state = sample_product_measure(&equilibrium.params, &vs, lattice, &mut rng).map_err(err)?;
        Ok(Self { sim, state, rng, vs, mean: equilibrium.params.mean_conserved() })
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.time
    }

    #[getter]
    fn nsites(&self) -> usize {
        self.state.lattice().nsites()
    }

    /// Advances to macroscopic time `t`; returns event counts.
    fn step_to<'py>(&mut self, py: Python<'py>, t: f64) -> PyResult<Bound<'py, PyAny>> {
        let counts = self.sim.step_to(&mut self.state, t, &mut self.rng).map_err(err)?;
        to_py(py, &counts)
    }

    fn run_events<'py>(&mut self, py: Python<'py>, accepted: u64) -> PyResult<Bound<'py, PyAny>> {
        let counts = self.sim.run_events(&mut self.state, accepted, &mut self.rng).map_err(err)?;
        to_py(py, &counts)
    }

    /// Cached conserved totals.
    fn totals(&self) -> [f64; NCONS] {
        self.state.totals_numeric(self.vs.varpi())
    }

    /// Totals recomputed from the occupancy field.
    fn recompute_totals(&self) -> [f64; NCONS] {
        self.state.recompute_totals_numeric(&self.vs)
    }

    fn conserves_exactly(&self) -> bool {
        self.state.check_totals(&self.vs).is_ok()
    }

    fn occupancy(&self) -> Vec<u64> {
        self.state.occupancy().to_vec()
    }

    /// Fourier fluctuation amplitudes `ẑ(k)` for integer modes.
    fn fourier(&self, modes: Vec<[i64; 3]>) -> PyResult<Vec<[Complex64; NCONS]>> {
        let table = PhaseTable::new(self.state.lattice(), &modes).map_err(err)?;
        let s = fourier_fluctuation(&self.state, &self.vs, &self.mean, &table).map_err(err)?;
        Ok(s.into_iter().map(|x| x.zhat).collect())
    }
}

/// `Π_A(M)`: average of `M` over the flow of `A`.
#[pyfunction]
fn commutant_project(a: Vec<Vec<Complex64>>, m: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
    let a = from_rows(&a)?;
    let m = from_rows(&m)?;
    if a.nrows() != m.nrows() {
        return Err(LgasError::new_err("matrix sizes differ"));
    }
    let eig = eigen_decompose(&a, None).map_err(err)?;
    Ok(rows(&core_project(&eig, &m)))
}

#[pyfunction]
fn expm(a: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(rows(&lgas_core::spectral::expm(&from_rows(&a)?)))
}

/// Exact generator identities on the default toy suite.
#[pyfunction]
#[pyo3(signature = (seed, varpi = DEFAULT_VARPI))]
fn run_oracles<'py>(py: Python<'py>, seed: u64, varpi: f64) -> PyResult<Bound<'py, PyAny>> {
    let reports = py
        .detach(|| {
            default_suite(varpi)
                .iter()
                .map(|spec| Ok((spec.name.clone(), core_oracles(spec, seed)?)))
                .collect::<lgas_core::Result<Vec<_>>>()
        })
        .map_err(err)?;
    to_py(py, &reports)
}

#[pymodule]
fn lgas(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LgasError", m.py().get_type::<LgasError>())?;
    m.add("NCONS", NCONS)?;
    m.add("DEFAULT_VARPI", DEFAULT_VARPI)?;
    m.add_class::<PyVelocitySet>()?;
    m.add_class::<PyEquilibrium>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(commutant_project, m)?)?;
    m.add_function(wrap_pyfunction!(expm, m)?)?;
    m.add_function(wrap_pyfunction!(run_oracles, m)?)?;
    Ok(())
}
