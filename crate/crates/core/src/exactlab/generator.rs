use crate::dynamics::{Lattice, LatticeState};
use crate::equilibrium::EquilibriumParams;
use crate::model::{conserved_at_site, exact_at_site, iter_bits, ExactConserved, Model, SiteOccupancy};
use crate::observables::currents;
use crate::{Error, Result, NCONS};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_CAP: u64 = 1 << 20;

/// Which part of the generator a move belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Exchange,
    Collision,
}

/// Off-diagonal jump rates in compressed-row form, with exit rates.
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    exit: Vec<f64>,
}

impl SparseGenerator {
    pub fn nstates(&self) -> usize {
        self.exit.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.rates[r].iter().copied())
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit[i]
    }

    /// `(ℒf)(η) = Σ_{η′} q(η,η′)(f(η′) − f(η))`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.nstates())
            .map(|i| self.row(i).map(|(j, r)| r * (f[j] - f[i])).sum())
            .collect()
    }

    /// `(μᵀℒ)(η′) = Σ_η μ(η)q(η,η′) − μ(η′)·exit(η′)`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.nstates()).map(|i| -mu[i] * self.exit[i]).collect();
        for i in 0..self.nstates() {
            for (j, r) in self.row(i) {
                out[j] += mu[i] * r;
            }
        }
        out
    }
}

/// Every configuration of a small periodic system with its exact generator
/// `ℒ = ℒᵉˣ + ℒᶜ`.
///
/// A state index packs the occupancy of site `x` into bits
/// `[x·|V|, (x+1)·|V|)`. The lattice may have fewer dimensions than the
/// velocity set; velocity components along missing axes are carried but
/// never transported.
#[derive(Debug, Clone)]
pub struct EnumeratedSystem {
    pub model: Arc<Model>,
    pub lattice: Arc<Lattice>,
    pub chi: f64,
    pub collision_rate_scale: f64,
    nvel: usize,
    nstates: usize,
    pub exchange: SparseGenerator,
    pub collision: SparseGenerator,
}

impl EnumeratedSystem {
    pub fn build(model: Arc<Model>, lattice: Arc<Lattice>, chi: f64, collision_rate_scale: f64, cap: u64) -> Result<Self> {
        let nvel = model.nvel();
        if lattice.dim() > model.dim() {
            return Err(Error::InvalidParameter(format!(
                "lattice dimension {} exceeds velocity dimension {}",
                lattice.dim(),
                model.dim()
            )));
        }
        let vmax = model.velocities.max_component();
        if !(chi > 0.5 * vmax) || !(collision_rate_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need χ > {} and a nonnegative collision scale",
                0.5 * vmax
            )));
        }
        let bits = (lattice.nsites() * nvel) as u32;
        let states: u128 = 1u128 << bits.min(127);
        if bits >= 64 || states > cap as u128 {
            return Err(Error::CapExceeded { states, cap: cap as u128 });
        }
        let mut sys = Self {
            model,
            lattice,
            chi,
            collision_rate_scale,
            nvel,
            nstates: states as usize,
            exchange: SparseGenerator { row_ptr: vec![0], cols: vec![], rates: vec![], exit: vec![] },
            collision: SparseGenerator { row_ptr: vec![0], cols: vec![], rates: vec![], exit: vec![] },
        };
        sys.exchange = sys.assemble(Part::Exchange);
        sys.collision = sys.assemble(Part::Collision);
        Ok(sys)
    }

    fn assemble(&self, part: Part) -> SparseGenerator {
        let mut g = SparseGenerator {
            row_ptr: Vec::with_capacity(self.nstates + 1),
            cols: Vec::new(),
            rates: Vec::new(),
            exit: Vec::with_capacity(self.nstates),
        };
        g.row_ptr.push(0);
        for eta in 0..self.nstates as u64 {
            let mut exit = 0.0;
            self.moves(eta, part, |to, r| {
                g.cols.push(to as u32);
                g.rates.push(r);
                exit += r;
            });
            g.exit.push(exit);
            g.row_ptr.push(g.cols.len());
        }
        g
    }

    pub fn nstates(&self) -> usize {
        self.nstates
    }

    pub fn nsites(&self) -> usize {
        self.lattice.nsites()
    }

    fn site_mask(&self) -> u64 {
        (1u64 << self.nvel) - 1
    }

    /// Occupancy of site `x` in state `eta`.
    pub fn site(&self, eta: u64, x: usize) -> SiteOccupancy {
        (eta >> (x * self.nvel)) & self.site_mask()
    }

    /// Calls `emit(η′, rate)` for every transition out of `eta`.
    pub fn moves(&self, eta: u64, part: Part, mut emit: impl FnMut(u64, f64)) {
        let vs = &self.model.velocities;
        let lat = &self.lattice;
        match part {
            Part::Exchange => {
                for x in 0..lat.nsites() {
                    let sx = self.site(eta, x);
                    for dir in 0..2 * lat.dim() {
                        let (axis, sign) = lat.direction(dir);
                        let y = lat.neighbor(x, dir);
                        for v in iter_bits(sx & !self.site(eta, y)) {
                            let rate = self.chi + 0.5 * sign as f64 * vs.phi(v)[axis + 1];
                            emit(eta ^ (1 << (x * self.nvel + v)) ^ (1 << (y * self.nvel + v)), rate);
                        }
                    }
                }
            }
            Part::Collision => {
                if self.collision_rate_scale == 0.0 {
                    return;
                }
                for x in 0..lat.nsites() {
                    let s = self.site(eta, x);
                    for q in self.model.collisions.transitions() {
                        let incoming = 1u64 << q[0] | 1u64 << q[1];
                        let outgoing = 1u64 << q[2] | 1u64 << q[3];
                        if s & incoming == incoming && s & outgoing == 0 {
                            let shift = x * self.nvel;
                            emit(eta ^ (incoming << shift) ^ (outgoing << shift), self.collision_rate_scale);
                        }
                    }
                }
            }
        }
    }

    /// `ℒf` for the full generator.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let a = self.exchange.apply(f);
        let b = self.collision.apply(f);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }

    pub fn apply_part(&self, part: Part, f: &[f64]) -> Vec<f64> {
        match part {
            Part::Exchange => self.exchange.apply(f),
            Part::Collision => self.collision.apply(f),
        }
    }

    /// `μᵀℒ`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let a = self.exchange.apply_left(mu);
        let b = self.collision.apply_left(mu);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }

    /// `ℒ_s f = ½(ℒ + ℒ†_μ)f` with `ℒ†_μ = M⁻¹ℒᵀM`.
    pub fn apply_symmetric(&self, mu: &[f64], f: &[f64]) -> Vec<f64> {
        let lf = self.apply(f);
        let weighted: Vec<f64> = mu.iter().zip(f).map(|(m, x)| m * x).collect();
        let adj = self.apply_left(&weighted);
        (0..self.nstates).map(|i| 0.5 * lf[i] + 0.5 * adj[i] / mu[i]).collect()
    }

    pub fn state(&self, eta: u64) -> LatticeState {
        let occ = (0..self.nsites()).map(|x| self.site(eta, x)).collect();
        LatticeState::from_occupancy(self.lattice.clone(), occ, &self.model.velocities)
            .expect("enumerated occupancies use valid velocity ids")
    }

    /// Exact conserved totals of a state.
    pub fn totals(&self, eta: u64) -> ExactConserved {
        (0..self.nsites()).fold(ExactConserved::ZERO, |acc, x| {
            acc + exact_at_site(self.site(eta, x), &self.model.velocities)
        })
    }

    /// `I_β(η(x))` as a state vector.
    pub fn site_quantity(&self, x: usize, beta: usize) -> Vec<f64> {
        let vs = &self.model.velocities;
        (0..self.nstates as u64).map(|e| conserved_at_site(self.site(e, x), vs)[beta]).collect()
    }

    /// `Σ_x I_β(η(x))` as a state vector.
    pub fn total_quantity(&self, beta: usize) -> Vec<f64> {
        let vs = &self.model.velocities;
        (0..self.nstates as u64)
            .map(|e| (0..self.nsites()).map(|x| conserved_at_site(self.site(e, x), vs)[beta]).sum())
            .collect()
    }

    /// Product measure with per-velocity densities `p.f`.
    pub fn product_measure(&self, p: &EquilibriumParams) -> Vec<f64> {
        let lf: Vec<f64> = p.f.iter().map(|f| f.ln()).collect();
        let lg: Vec<f64> = p.f.iter().map(|f| (1.0 - f).ln()).collect();
        (0..self.nstates as u64)
            .map(|e| {
                (0..self.nsites())
                    .map(|x| {
                        let s = self.site(e, x);
                        (0..self.nvel).map(|v| if s >> v & 1 == 1 { lf[v] } else { lg[v] }).sum::<f64>()
                    })
                    .sum::<f64>()
                    .exp()
            })
            .collect()
    }

    /// States grouped by exact conserved totals.
    pub fn sectors(&self) -> BTreeMap<ExactConserved, Vec<u64>> {
        let mut out: BTreeMap<ExactConserved, Vec<u64>> = BTreeMap::new();
        for e in 0..self.nstates as u64 {
            out.entry(self.totals(e)).or_default().push(e);
        }
        out
    }

    /// Local function summed over all translates: `Σ_x g(η, x)`.
    pub fn translation_sum(&self, g: impl Fn(&LatticeState, usize) -> f64) -> Vec<f64> {
        (0..self.nstates as u64)
            .map(|e| {
                let st = self.state(e);
                (0..self.nsites()).map(|x| g(&st, x)).sum()
            })
            .collect()
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max |μᵀℒ|`.
pub fn invariance_residual(sys: &EnumeratedSystem, mu: &[f64]) -> f64 {
    max_abs(sys.apply_left(mu))
}

/// `max_β |ℒN_β|` with `N_β` the total of `I_β`.
pub fn conservation_residual(sys: &EnumeratedSystem) -> f64 {
    (0..NCONS).map(|b| max_abs(sys.apply(&sys.total_quantity(b)))).fold(0.0, f64::max)
}

/// `max |ℒI_β(η_x) − Σ_α ∇⁻_α w^β_{x,α}|` over states, sites and `β`.
pub fn current_decomposition_residual(sys: &EnumeratedSystem) -> f64 {
    let vs = &sys.model.velocities;
    let lat = &sys.lattice;
    let lhs: Vec<Vec<Vec<f64>>> = (0..sys.nsites())
        .map(|x| (0..NCONS).map(|b| sys.apply(&sys.site_quantity(x, b))).collect())
        .collect();
    let mut worst = 0.0_f64;
    for e in 0..sys.nstates() as u64 {
        let st = sys.state(e);
        let w: Vec<Vec<[f64; NCONS]>> = (0..sys.nsites())
            .map(|x| (0..lat.dim()).map(|a| currents(&st, vs, sys.chi, x, a).total()).collect())
            .collect();
        for x in 0..sys.nsites() {
            for b in 0..NCONS {
                let div: f64 = (0..lat.dim()).map(|a| w[x][a][b] - w[lat.backward(x, a)][a][b]).sum();
                worst = worst.max((lhs[x][b][e as usize] - div).abs());
            }
        }
    }
    worst
}

/// `max |q_c(η,η′) − q_c(η′,η)|`: the collision kernel is symmetric.
pub fn collision_symmetry_residual(sys: &EnumeratedSystem) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..sys.nstates() {
        for (j, r) in sys.collision.row(i) {
            let back = sys.collision.row(j).find(|&(k, _)| k == i).map_or(0.0, |(_, r)| r);
            worst = worst.max((r - back).abs());
        }
    }
    worst
}

/// Carré du champ of one part, computed as `ℒ(fg) − fℒg − gℒf` and as
/// `Σ_{η′} q(η,η′)(f(η′) − f(η))(g(η′) − g(η))` from the move list.
pub fn carre_du_champ(sys: &EnumeratedSystem, part: Part, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
    let lfg = sys.apply_part(part, &fg);
    let lf = sys.apply_part(part, f);
    let lg = sys.apply_part(part, g);
    let via_generator = (0..sys.nstates()).map(|i| lfg[i] - f[i] * lg[i] - g[i] * lf[i]).collect();
    let direct = (0..sys.nstates() as u64)
        .map(|e| {
            let i = e as usize;
            let mut acc = 0.0;
            sys.moves(e, part, |to, r| {
                let j = to as usize;
                acc += r * (f[j] - f[i]) * (g[j] - g[i]);
            });
            acc
        })
        .collect();
    (via_generator, direct)
}

/// Largest discrepancy between the two carré-du-champ computations.
pub fn carre_du_champ_residual(sys: &EnumeratedSystem, part: Part, f: &[f64], g: &[f64]) -> f64 {
    let (a, b) = carre_du_champ(sys, part, f, g);
    max_abs(a.iter().zip(&b).map(|(x, y)| x - y))
}

/// Result of the finite-volume variance computation.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct VarianceReport {
    pub value: f64,
    pub sectors: usize,
    /// Largest relative component of a centered right-hand side in the
    /// kernel of `ℒ_s` on its sector.
    pub kernel_component: f64,
    /// Block half-width entering the sum; equal to the system half-width.
    pub block_half_width: usize,
}

/// `V_ℓ = |Λ|⁻¹ E^μ[G̃ (−ℒ_s)⁻¹ G̃]`, with `G` the translation sum of a local
/// function, `G̃ = G − α_ℓ(G)` centered per canonical sector, and the
/// inverse taken per sector on the mean-zero subspace.
pub fn finite_volume_variance(sys: &EnumeratedSystem, mu: &[f64], gsum: &[f64]) -> Result<VarianceReport> {
    let mut total = 0.0;
    let mut kernel_component = 0.0_f64;
    let sectors = sys.sectors();
    for states in sectors.values() {
        let n = states.len();
        let index: std::collections::HashMap<u64, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let w: Vec<f64> = states.iter().map(|&s| mu[s as usize]).collect();
        let wsum: f64 = w.iter().sum();
        let alpha = states.iter().zip(&w).map(|(&s, wi)| wi * gsum[s as usize]).sum::<f64>() / wsum;
        let rhs: Vec<f64> = states.iter().map(|&s| gsum[s as usize] - alpha).collect();
        let scale = states.iter().zip(&w).map(|(&s, wi)| wi * gsum[s as usize].powi(2)).sum::<f64>().sqrt();
        if n == 1 || scale == 0.0 {
            continue;
        }
        // D^{1/2} ℒ_s D^{-1/2} is symmetric for ℒ_s symmetric in L²(μ).
        let sq: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, &s) in states.iter().enumerate() {
            m[(i, i)] -= sys.exchange.exit_rate(s as usize) + sys.collision.exit_rate(s as usize);
            let mut add = |to: u64, r: f64| {
                let j = index[&to];
                // forward half and μ-adjoint half of the pair (i, j)
                m[(i, j)] += 0.5 * r * sq[i] / sq[j];
                m[(j, i)] += 0.5 * r * sq[i] / sq[j];
            };
            sys.moves(s, Part::Exchange, &mut add);
            sys.moves(s, Part::Collision, &mut add);
        }
        let eig = SymmetricEigen::new(m);
        let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let b = DVector::from_iterator(n, rhs.iter().zip(&sq).map(|(r, s)| r * s));
        let coef = eig.eigenvectors.transpose() * &b;
        let bn = scale.max(b.norm());
        let mut quad = 0.0;
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() <= 1e-10 * lmax.max(1.0) {
                kernel_component = kernel_component.max(coef[k].abs() / bn);
            } else {
                quad += coef[k] * coef[k] / -lam;
            }
        }
        total += quad;
    }
    if kernel_component > 1e-8 {
        return Err(Error::SingularSolve(kernel_component));
    }
    Ok(VarianceReport {
        value: total / sys.nsites() as f64,
        sectors: sectors.len(),
        kernel_component,
        block_half_width: sys.lattice.half_width(),
    })
}

/// `½E^μ[Σ_{η′} q(η,η′)(F(η′) − F(η))²]`, the Dirichlet form of `ℒ` (equal to
/// that of its symmetric part).
pub fn dirichlet_form(sys: &EnumeratedSystem, mu: &[f64], f: &[f64]) -> f64 {
    let mut acc = 0.0;
    for part in [Part::Exchange, Part::Collision] {
        let (_, gamma) = carre_du_champ(sys, part, f, f);
        acc += gamma.iter().zip(mu).map(|(g, m)| g * m).sum::<f64>();
    }
    0.5 * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::ChemicalPotential;
    use crate::model::ToySpec;
    use crate::DEFAULT_VARPI;
    use rand::Rng;

    fn pair_system(l: usize) -> EnumeratedSystem {
        let m = Arc::new(Model::toy(DEFAULT_VARPI, &ToySpec::one_d_pair()).unwrap());
        EnumeratedSystem::build(m, Arc::new(Lattice::new(l, 1).unwrap()), 1.0, 1.0, DEFAULT_STATE_CAP).unwrap()
    }

    fn diagonal_system() -> EnumeratedSystem {
        let m = Arc::new(Model::toy(DEFAULT_VARPI, &ToySpec::two_d_diagonal()).unwrap());
        EnumeratedSystem::build(m, Arc::new(Lattice::new(1, 1).unwrap()), 0.9, 1.3, DEFAULT_STATE_CAP).unwrap()
    }

    fn generic_mu(sys: &EnumeratedSystem) -> Vec<f64> {
        let n = ChemicalPotential::new([0.3, 0.2, -0.1, 0.0, -0.4]).unwrap();
        sys.product_measure(&EquilibriumParams::new(n, &sys.model.velocities))
    }

    #[test]
    fn state_count_and_cap() {
        assert_eq!(pair_system(1).nstates(), 64);
        let m = Arc::new(Model::toy(DEFAULT_VARPI, &ToySpec::cube_corners()).unwrap());
        let r = EnumeratedSystem::build(m, Arc::new(Lattice::new(1, 1).unwrap()), 1.0, 1.0, DEFAULT_STATE_CAP);
        assert!(matches!(r, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn product_measure_is_invariant() {
        for sys in [pair_system(1), pair_system(2), diagonal_system()] {
            let mu = generic_mu(&sys);
            assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(invariance_residual(&sys, &mu) < 1e-12);
            let mut r = crate::rng(3, 0);
            for _ in 0..100 {
                let f: Vec<f64> = (0..sys.nstates()).map(|_| r.random::<f64>() - 0.5).collect();
                let lf = sys.apply(&f);
                assert!(lf.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conservation_and_currents() {
        for sys in [pair_system(1), pair_system(2), diagonal_system()] {
            assert!(conservation_residual(&sys) < 1e-12);
            assert!(current_decomposition_residual(&sys) < 1e-12);
        }
    }

    #[test]
    fn collision_kernel_is_symmetric() {
        let sys = diagonal_system();
        assert!(sys.collision.nnz() > 0);
        assert_eq!(collision_symmetry_residual(&sys), 0.0);
    }

    #[test]
    fn carre_du_champ_identity_and_positivity() {
        let sys = diagonal_system();
        let mut r = crate::rng(4, 0);
        let f: Vec<f64> = (0..sys.nstates()).map(|_| r.random::<f64>()).collect();
        let g: Vec<f64> = (0..sys.nstates()).map(|_| r.random::<f64>()).collect();
        for part in [Part::Exchange, Part::Collision] {
            assert!(carre_du_champ_residual(&sys, part, &f, &g) < 1e-12);
            let c = vec![2.5; sys.nstates()];
            let (a, b) = carre_du_champ(&sys, part, &c, &g);
            assert!(a.iter().chain(&b).all(|x| x.abs() < 1e-12));
        }
        let mut ind = vec![0.0; sys.nstates()];
        ind[77] = 1.0;
        let (gamma, _) = carre_du_champ(&sys, Part::Exchange, &ind, &ind);
        assert!(gamma.iter().all(|&x| x >= -1e-15));
    }

    #[test]
    fn variance_of_zero_and_of_a_symmetric_image() {
        let sys = pair_system(2);
        let mu = generic_mu(&sys);
        let zero = vec![0.0; sys.nstates()];
        assert_eq!(finite_volume_variance(&sys, &mu, &zero).unwrap().value, 0.0);

        let vs = sys.model.velocities.clone();
        let plus = (0..2).find(|&v| vs.phi(v)[1] > 0.0).unwrap();
        let f = sys.translation_sum(|st, x| {
            let y = st.lattice().forward(x, 0);
            (st.get(x, plus) as u8 as f64) * (1.0 - st.get(y, 1 - plus) as u8 as f64)
        });
        let g = sys.apply_symmetric(&mu, &f);
        let v = finite_volume_variance(&sys, &mu, &g).unwrap();
        let want = dirichlet_form(&sys, &mu, &f) / sys.nsites() as f64;
        assert!(v.value > 0.0);
        assert!((v.value - want).abs() < 1e-10 * want.max(1.0), "{} vs {want}", v.value);
    }

    #[test]
    fn variance_is_nonnegative() {
        let sys = pair_system(1);
        let mu = generic_mu(&sys);
        let mut r = crate::rng(6, 0);
        for _ in 0..10 {
            let g: Vec<f64> = (0..sys.nstates()).map(|_| r.random::<f64>() - 0.5).collect();
            assert!(finite_volume_variance(&sys, &mu, &g).unwrap().value >= -1e-14);
        }
    }
}
