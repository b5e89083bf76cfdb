use crate::equilibrium::{chemical_potential_for, sym_pinv, EquilibriumParams};
use crate::model::{conserved_at_site, exact_at_site, ExactConserved, SiteOccupancy, ToySpec, VelocitySet};
use crate::stats::fit_slope;
use crate::{Error, Result, NCONS};
use nalgebra::Matrix5;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

type LocalFn = dyn Fn(&[SiteOccupancy]) -> f64 + Send + Sync;

/// A function of the occupancies of `support` consecutive sites.
#[derive(Clone)]
pub struct LocalObservable {
    pub support: usize,
    f: Arc<LocalFn>,
}

impl std::fmt::Debug for LocalObservable {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("LocalObservable").field("support", &self.support).finish()
    }
}

impl LocalObservable {
    pub fn new(support: usize, f: impl Fn(&[SiteOccupancy]) -> f64 + Send + Sync + 'static) -> Self {
        assert!(support >= 1);
        Self { support, f: Arc::new(f) }
    }

    pub fn eval(&self, occ: &[SiteOccupancy]) -> f64 {
        (self.f)(occ)
    }
}

/// Calls `visit` on every occupancy tuple of `k` sites.
fn for_each_local(nvel: usize, k: usize, mut visit: impl FnMut(&[SiteOccupancy])) {
    let per = 1u64 << nvel;
    let mut occ = vec![0; k];
    let total = per.pow(k as u32);
    for idx in 0..total {
        let mut r = idx;
        for o in occ.iter_mut() {
            *o = r % per;
            r /= per;
        }
        visit(&occ);
    }
}

/// Number of configurations of `n` sites with each exact conserved total,
/// by repeated convolution of the single-site distribution.
///
/// Counts are `f64` and exact while the total number of configurations
/// stays below `2⁵³`.
#[derive(Debug, Clone)]
pub struct SectorCounter {
    vs: VelocitySet,
    site: BTreeMap<ExactConserved, f64>,
    cache: Vec<BTreeMap<ExactConserved, f64>>,
}

impl SectorCounter {
    pub fn new(vs: &VelocitySet) -> Self {
        let mut site = BTreeMap::new();
        for occ in 0..(1u64 << vs.len()) {
            *site.entry(exact_at_site(occ, vs)).or_insert(0.0) += 1.0;
        }
        let mut zero = BTreeMap::new();
        zero.insert(ExactConserved::ZERO, 1.0);
        Self { vs: vs.clone(), site, cache: vec![zero] }
    }

    pub fn velocities(&self) -> &VelocitySet {
        &self.vs
    }

    pub fn counts(&mut self, n: usize) -> &BTreeMap<ExactConserved, f64> {
        while self.cache.len() <= n {
            let last = self.cache.last().unwrap();
            let mut next = BTreeMap::new();
            for (k, c) in last {
                for (s, d) in &self.site {
                    *next.entry(*k + *s).or_insert(0.0) += c * d;
                }
            }
            self.cache.push(next);
        }
        &self.cache[n]
    }

    pub fn count(&mut self, n: usize, key: &ExactConserved) -> f64 {
        self.counts(n).get(key).copied().unwrap_or(0.0)
    }
}

/// `E[h | Ī = key]` under the uniform measure on the sector of `sites`
/// sites, by counting completions of each local pattern of the support.
pub fn canonical_expectation(
    counter: &mut SectorCounter,
    sites: usize,
    h: &LocalObservable,
    key: &ExactConserved,
) -> Result<f64> {
    if h.support > sites {
        return Err(Error::InvalidParameter("support larger than the block".into()));
    }
    let total = counter.count(sites, key);
    if total == 0.0 {
        return Err(Error::EmptySector);
    }
    let vs = counter.velocities().clone();
    let rest = counter.counts(sites - h.support).clone();
    let mut acc = 0.0;
    for_each_local(vs.len(), h.support, |occ| {
        let local = occ.iter().fold(ExactConserved::ZERO, |a, &o| a + exact_at_site(o, &vs));
        let c = rest.get(&(*key - local)).copied().unwrap_or(0.0);
        if c > 0.0 {
            acc += c * h.eval(occ);
        }
    });
    Ok(acc / total)
}

/// `E^μ[h]` under the product measure `p`.
pub fn grand_canonical_expectation(p: &EquilibriumParams, h: &LocalObservable) -> f64 {
    let nvel = p.nvel();
    let mut acc = 0.0;
    for_each_local(nvel, h.support, |occ| {
        let w: f64 = occ
            .iter()
            .map(|&o| (0..nvel).map(|v| if o >> v & 1 == 1 { p.f[v] } else { 1.0 - p.f[v] }).product::<f64>())
            .product();
        acc += w * h.eval(occ);
    });
    acc
}

/// `(E^μ[h], ∂E^μ[h]/∂m)` at the product measure `p`; the derivative is
/// `Cov(h, Σ_x I(η_x))·C⁺`.
pub fn mean_and_gradient(p: &EquilibriumParams, vs: &VelocitySet, h: &LocalObservable) -> (f64, [f64; NCONS]) {
    let mean = grand_canonical_expectation(p, h);
    let m = p.mean_conserved();
    let nvel = p.nvel();
    let mut cov = [0.0; NCONS];
    for_each_local(nvel, h.support, |occ| {
        let w: f64 = occ
            .iter()
            .map(|&o| (0..nvel).map(|v| if o >> v & 1 == 1 { p.f[v] } else { 1.0 - p.f[v] }).product::<f64>())
            .product();
        let hv = h.eval(occ) - mean;
        for &o in occ {
            let i = conserved_at_site(o, vs);
            for b in 0..NCONS {
                cov[b] += w * hv * (i[b] - m[b]);
            }
        }
    });
    let cinv: Matrix5<f64> = sym_pinv(&p.single_site_covariance(), 1e-12);
    let grad = std::array::from_fn(|n| (0..NCONS).map(|b| cov[b] * cinv[(b, n)]).sum());
    (mean, grad)
}

/// `h − E^μ[h] − Σ_ν ∂_νE^μ[h]·|S|⁻¹Σ_{x∈S}(I_ν(η_x) − m_ν)`: mean zero with
/// vanishing first derivatives in `m` at `p`.
pub fn centered_observable(p: &EquilibriumParams, vs: &VelocitySet, h: &LocalObservable) -> LocalObservable {
    let (mean, grad) = mean_and_gradient(p, vs, h);
    let m = p.mean_conserved();
    let k = h.support as f64;
    let inner = h.clone();
    let vs = vs.clone();
    LocalObservable::new(h.support, move |occ| {
        let mut lin = 0.0;
        for &o in occ {
            let i = conserved_at_site(o, &vs);
            lin += (0..NCONS).map(|n| grad[n] * (i[n] - m[n])).sum::<f64>();
        }
        inner.eval(occ) - mean - lin / k
    })
}

/// Largest `|E[h | Ī = M] − E^{μ_{n(M)}}[h]|` over sectors whose matched
/// densities `f_v` all lie in `window`.
pub fn ensemble_gap(
    counter: &mut SectorCounter,
    sites: usize,
    h: &LocalObservable,
    window: (f64, f64),
) -> Result<f64> {
    let vs = counter.velocities().clone();
    let keys: Vec<ExactConserved> = counter.counts(sites).keys().copied().collect();
    let mut worst: Option<f64> = None;
    for key in keys {
        let total = key.eval(vs.varpi());
        let target = total.map(|x| x / sites as f64);
        let Ok(inv) = chemical_potential_for(target, &vs, None) else { continue };
        let p = EquilibriumParams::new(inv.n, &vs);
        if !p.f.iter().all(|&f| f >= window.0 && f <= window.1) {
            continue;
        }
        let can = canonical_expectation(counter, sites, h, &key)?;
        let gc = grand_canonical_expectation(&p, h);
        worst = Some(worst.unwrap_or(0.0).max((can - gc).abs()));
    }
    worst.ok_or(Error::EmptySector)
}

/// `E^μ[(E^μ[h | Ī])²]` on `sites` sites under the product measure `p`.
pub fn conditional_square_mean(
    counter: &mut SectorCounter,
    sites: usize,
    p: &EquilibriumParams,
    h: &LocalObservable,
) -> Result<f64> {
    let vs = counter.velocities().clone();
    let log_empty: f64 = p.f.iter().map(|f| (1.0 - f).ln()).sum::<f64>() * sites as f64;
    let sectors: Vec<(ExactConserved, f64)> = counter.counts(sites).iter().map(|(k, c)| (*k, *c)).collect();
    let mut acc = 0.0;
    for (key, count) in sectors {
        let tot = key.eval(vs.varpi());
        let lw: f64 = (0..NCONS).map(|b| p.n.n[b] * tot[b]).sum::<f64>() + log_empty;
        let prob = count * lw.exp();
        if prob == 0.0 {
            continue;
        }
        let e = canonical_expectation(counter, sites, h, &key)?;
        acc += prob * e * e;
    }
    Ok(acc)
}

/// One block size of the ensemble scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnsemblePoint {
    pub ell: usize,
    pub sites: usize,
    /// `S^{−1/3}`, the three-dimensional `ε` of a block with `S` sites.
    pub eps_eff: f64,
    pub gap: f64,
    pub conditional_square: f64,
}

/// Log-log decay of the ensemble gap and the conditional square, as slopes
/// against `ln(1/ε_eff)`.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleScan {
    pub points: Vec<EnsemblePoint>,
    pub gap_slope: f64,
    pub conditional_square_slope: f64,
}

/// Scan over one-dimensional blocks of `2ℓ+1` sites of the toy `{±1}` with
/// `h = η(0,+)η(1,+)`; the conditional square uses `h` centered at `n`.
pub fn ensemble_scan(varpi: f64, n: crate::equilibrium::ChemicalPotential, ells: &[usize], window: (f64, f64)) -> Result<EnsembleScan> {
    let vs = VelocitySet::build(varpi, Some(&ToySpec::one_d_pair()))?;
    let plus = (0..vs.len()).find(|&v| vs.phi(v)[1] > 0.0).expect("toy has a positive velocity");
    let h = LocalObservable::new(2, move |o| ((o[0] >> plus) & (o[1] >> plus) & 1) as f64);
    let p = EquilibriumParams::new(n, &vs);
    let hc = centered_observable(&p, &vs, &h);
    let mut counter = SectorCounter::new(&vs);
    let mut points = Vec::new();
    for &ell in ells {
        let sites = 2 * ell + 1;
        points.push(EnsemblePoint {
            ell,
            sites,
            eps_eff: (sites as f64).powf(-1.0 / 3.0),
            gap: ensemble_gap(&mut counter, sites, &h, window)?,
            conditional_square: conditional_square_mean(&mut counter, sites, &p, &hc)?,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| -p.eps_eff.ln()).collect();
    let g: Vec<f64> = points.iter().map(|p| p.gap.ln()).collect();
    let c: Vec<f64> = points.iter().map(|p| p.conditional_square.ln()).collect();
    Ok(EnsembleScan { gap_slope: fit_slope(&x, &g), conditional_square_slope: fit_slope(&x, &c), points })
}
