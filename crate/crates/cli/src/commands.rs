use lgas_core::dynamics::{write_snapshot, DynamicsParams, EventCounts, Lattice, SnapshotHeader, Simulator};
use lgas_core::equilibrium::{sample_product_measure, CoefficientReport, CoefficientSet};
use lgas_core::exactlab::{default_suite, run_oracles};
use lgas_core::observables::{
    fourier_fluctuation, max_z_real, write_covariance_csv, ModeCovariance, ModeGrid, PhaseTable,
};
use lgas_core::oulimit::{ou_covariance_report, EnsembleConfig, ModeProblem};
use lgas_core::spectral::{noise_factor, projected_diffusion, symbol_record, to_cmat};
use lgas_core::{rng, NCONS};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::config::{DbarSpec, RunConfig};
use crate::output::Artifacts;
use crate::CliError;

fn cfg_err(e: lgas_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// One named pass/fail check of a summary.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value < tolerance }
    }

    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

fn summarize(out: &mut Artifacts, checks: Vec<Check>, extra: serde_json::Value) -> Result<bool, CliError> {
    let pass = checks.iter().all(|c| c.pass);
    out.write_json("summary.json", &json!({ "pass": pass, "checks": checks, "details": extra }))?;
    Ok(pass)
}

pub fn coefficients(cfg: &RunConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let model = cfg.model().map_err(cfg_err)?;
    let p = cfg.equilibrium_params(&model).map_err(cfg_err)?;
    let report = CoefficientReport::new(&p).map_err(cfg_err)?;
    out.write_json("coefficients.json", &report)?;
    Ok(true)
}

pub fn simulate(cfg: &RunConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let d = &cfg.dynamics;
    let model = Arc::new(cfg.model().map_err(cfg_err)?);
    let vs = &model.velocities;
    let p = cfg.equilibrium_params(&model).map_err(cfg_err)?;
    let lattice = Arc::new(Lattice::new(d.half_width, model.dim()).map_err(cfg_err)?);
    let mut params = DynamicsParams::for_lattice(d.chi, d.half_width, model.varpi());
    params.collision_rate_scale = d.collision_rate_scale;
    let sim = Simulator::new(model.clone(), params, model.dim()).map_err(cfg_err)?;
    let table = PhaseTable::new(&lattice, &d.modes).map_err(cfg_err)?;
    let mean = p.mean_conserved();

    let mut g = rng(cfg.seed(), 0);
    let mut state = sample_product_measure(&p, vs, lattice.clone(), &mut g)?;
    let start = state.totals();
    let start_num = state.recompute_totals_numeric(vs);
    let mut totals_csv = String::from("t,proposals,exchanges,collisions,mass,momentum1,momentum2,momentum3,energy,exact\n");
    let mut modes_csv = String::from("t,k1,k2,k3,beta,re,im\n");
    let (mut exact_ok, mut drift, mut all) = (true, 0.0_f64, EventCounts::default());
    for j in 0..=d.checkpoints {
        let t = d.horizon * j as f64 / d.checkpoints as f64;
        let c = sim.step_to(&mut state, t, &mut g)?;
        all.proposals += c.proposals;
        all.exchanges += c.exchanges;
        all.collisions += c.collisions;
        let exact = state.recompute_totals(vs) == state.totals() && state.totals() == start;
        exact_ok &= exact;
        let now = state.recompute_totals_numeric(vs);
        for b in 0..NCONS {
            drift = drift.max((now[b] - start_num[b]).abs());
        }
        let _ = write!(totals_csv, "{t},{},{},{}", all.proposals, all.exchanges, all.collisions);
        for x in now {
            let _ = write!(totals_csv, ",{x}");
        }
        let _ = writeln!(totals_csv, ",{exact}");
        for s in fourier_fluctuation(&state, vs, &mean, &table)? {
            for (b, z) in s.zhat.iter().enumerate() {
                let _ = writeln!(modes_csv, "{t},{},{},{},{b},{},{}", s.k[0], s.k[1], s.k[2], z.re, z.im);
            }
        }
    }
    out.write_csv("totals.csv", totals_csv.as_bytes())?;
    out.write_csv("modes.csv", modes_csv.as_bytes())?;
    if d.snapshot {
        let header = SnapshotHeader {
            half_width: d.half_width,
            dim: model.dim(),
            nvel: vs.len(),
            varpi: model.varpi(),
            time: state.time,
            seed: cfg.seed,
            meta: out.meta.json(),
        };
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &state, &header)?;
        out.write_bytes("final.snap", &bytes)?;
    }
    let checks = vec![
        Check { name: "exact_totals".into(), value: f64::from(u8::from(!exact_ok)), tolerance: 0.0, pass: exact_ok },
        Check::at_most("float_drift", drift, cfg.tolerances.conservation),
    ];
    summarize(out, checks, json!({ "sites": lattice.nsites(), "events": all, "time": state.time }))
}

pub fn static_cov(cfg: &RunConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let d = &cfg.dynamics;
    let model = cfg.model().map_err(cfg_err)?;
    let vs = &model.velocities;
    let p = cfg.equilibrium_params(&model).map_err(cfg_err)?;
    let comp = p.compressibility_matrix().map_err(cfg_err)?;
    let lattice = Arc::new(Lattice::new(d.half_width, model.dim()).map_err(cfg_err)?);
    let table = PhaseTable::new(&lattice, &d.modes).map_err(cfg_err)?;
    let mean = p.mean_conserved();
    let chunks = d.chunks as u64;
    // Chunk sizes and streams are fixed by the config, so the merged
    // estimate does not depend on the thread count.
    let parts: Vec<ModeCovariance> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = d.replicas as u64 / chunks + u64::from(c < d.replicas as u64 % chunks);
            let mut g = rng(cfg.seed(), 100 + c);
            let mut cov = ModeCovariance::new(&d.modes);
            for _ in 0..n {
                let state = sample_product_measure(&p, vs, lattice.clone(), &mut g)?;
                cov.push(&fourier_fluctuation(&state, vs, &mean, &table)?)?;
            }
            Ok(cov)
        })
        .collect::<lgas_core::Result<_>>()?;
    let mut cov = ModeCovariance::new(&d.modes);
    for part in &parts {
        cov.merge(part);
    }
    let norm = ModeGrid::for_lattice(&lattice).covariance_normalization();
    let mut body = Vec::new();
    write_covariance_csv(&mut body, &cov.rows(norm))?;
    out.write_csv("covariance.csv", &body)?;
    let per_mode: Vec<f64> = (0..d.modes.len()).map(|m| max_z_real(&cov, m, &comp, norm)).collect();
    let max_z = per_mode.iter().copied().fold(0.0, f64::max);
    let target: Vec<Vec<f64>> = (0..NCONS).map(|i| (0..NCONS).map(|j| comp[(i, j)]).collect()).collect();
    summarize(
        out,
        vec![Check::below("max_abs_z", max_z, cfg.tolerances.z)],
        json!({ "samples": cov.count(), "modes": d.modes, "max_z_per_mode": per_mode, "compressibility": target }),
    )
}

pub fn project(cfg: &RunConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let model = cfg.model().map_err(cfg_err)?;
    let p = cfg.equilibrium_params(&model).map_err(cfg_err)?;
    let cs = CoefficientSet::new(&p).map_err(cfg_err)?;
    let comp = p.compressibility_matrix().map_err(cfg_err)?;
    let chat = to_cmat(&comp);
    let d = cfg.diffusion_tensor(&comp)?;
    let tol = &cfg.tolerances;
    let mut records = Vec::new();
    let (mut ec, mut lyap, mut herm, mut real_part) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for k in &cfg.spectral.k {
        let rec = symbol_record(k, &cs, &comp, &d, cfg.spectral.tau_eig).map_err(cfg_err)?;
        let pd = projected_diffusion(k, &cs, &d, cfg.spectral.tau_eig).map_err(cfg_err)?;
        let nf = noise_factor(&pd.projected, &chat)?;
        let scale = (&pd.projected * &chat).camax().max(1.0);
        ec = ec.max(rec.ec_defect);
        lyap = lyap.max(nf.lyapunov_residual / scale);
        herm = herm.max(rec.hermiticity_defect);
        real_part = real_part.max(rec.euler_real_part_ratio);
        records.push(rec);
    }
    out.write_json("symbols.json", &records)?;
    let mut checks = vec![Check::below("ec_defect", ec, tol.ec), Check::below("lyapunov_relative", lyap, tol.lyapunov)];
    if cs.sound_speed_sq() >= 0.0 {
        checks.push(Check::below("euler_real_part_ratio", real_part, 1e-10));
    }
    let herm_check = Check::below("hermiticity_defect", herm, tol.hermiticity);
    if cfg.spectral.dbar == DbarSpec::Zero {
        checks.push(herm_check);
    }
    summarize(
        out,
        checks,
        json!({ "wavevectors": cfg.spectral.k, "hermiticity_defect": herm, "dc_defect": d.dc_defect(&comp) }),
    )
}

pub fn ou_sim(cfg: &RunConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let o = &cfg.ou;
    let model = cfg.model().map_err(cfg_err)?;
    let p = cfg.equilibrium_params(&model).map_err(cfg_err)?;
    let cs = CoefficientSet::new(&p).map_err(cfg_err)?;
    let comp = p.compressibility_matrix().map_err(cfg_err)?;
    let chat = to_cmat(&comp);
    let d = cfg.diffusion_tensor(&comp)?;
    let grid = ModeGrid::new(o.half_width, model.dim());
    let mut jobs = Vec::new();
    for &z in &o.modes {
        let pd = projected_diffusion(&grid.wavevector(z), &cs, &d, cfg.spectral.tau_eig).map_err(cfg_err)?;
        let delta = o.delta.unwrap_or_else(|| 0.05_f64.min(0.25 / pd.abscissa.abs()));
        let ens = EnsembleConfig { delta, lag_steps: o.lag_steps, nlags: o.nlags, replicas: o.replicas, seed: cfg.seed() };
        jobs.push((ModeProblem { k: z, n_hat: pd.projected, c_hat: chat.clone() }, ens));
    }
    let reports = jobs
        .par_iter()
        .enumerate()
        .map(|(i, (prob, ens))| ou_covariance_report(prob, ens, i as u64))
        .collect::<lgas_core::Result<Vec<_>>>()?;
    let mut body = String::from("k1,k2,k3,tau,beta,nu,re,im,predicted_re,predicted_im,stderr,z,nsamples\n");
    for r in reports.iter().flat_map(|m| &m.rows) {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k[0], r.k[1], r.k[2], r.tau, r.beta, r.nu, r.empirical[0], r.empirical[1], r.predicted[0], r.predicted[1], r.stderr, r.z, r.nsamples
        );
    }
    out.write_csv("ou_lag_covariance.csv", body.as_bytes())?;
    let max_z = reports.iter().map(|r| r.max_z).fold(0.0, f64::max);
    let comp_res = reports.iter().map(|r| r.composition_residual).fold(0.0, f64::max);
    let per_mode: Vec<_> = reports
        .iter()
        .zip(&jobs)
        .map(|(r, (_, e))| json!({ "k": r.k, "delta": e.delta, "lags": r.lags, "max_z_lag0": r.max_z_lag0, "max_z": r.max_z, "composition_residual": r.composition_residual }))
        .collect();
    summarize(
        out,
        vec![Check::below("max_abs_z", max_z, cfg.tolerances.z), Check::below("composition_residual", comp_res, cfg.tolerances.composition)],
        json!({ "replicas": o.replicas, "modes": per_mode }),
    )
}

pub fn oracles(cfg: &RunConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let mut reports = Vec::new();
    let mut worst = 0.0_f64;
    let mut all_pass = true;
    for spec in default_suite(cfg.model.varpi) {
        let rs = run_oracles(&spec, cfg.seed())?;
        for r in &rs {
            worst = worst.max(r.max_residual);
            all_pass &= r.pass;
        }
        reports.push(json!({ "system": spec, "hash": spec.hash(), "identities": rs }));
    }
    out.write_json("oracles.json", &reports)?;
    let mut check = Check::below("max_residual", worst, cfg.tolerances.oracle);
    check.pass &= all_pass;
    summarize(out, vec![check], json!({ "systems": reports.len() }))
}
