use super::LatticeState;
use crate::model::Model;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub chi: f64,
    pub epsilon: f64,
    pub varpi: f64,
    #[serde(default = "default_scale")]
    pub collision_rate_scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl DynamicsParams {
    /// Parameters with `ε = 1/L`.
    pub fn for_lattice(chi: f64, half_width: usize, varpi: f64) -> Self {
        Self { chi, epsilon: 1.0 / half_width as f64, varpi, collision_rate_scale: 1.0 }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        let bound = 0.5 * model.velocities.max_component();
        if !(self.chi.is_finite() && self.chi > bound) {
            return Err(Error::InvalidParameter(format!(
                "chi = {} must exceed max|v_α|/2 = {bound}",
                self.chi
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if !(self.collision_rate_scale.is_finite() && self.collision_rate_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "collision_rate_scale = {} must be non-negative",
                self.collision_rate_scale
            )));
        }
        if self.varpi != model.varpi() {
            return Err(Error::InvalidParameter(format!(
                "dynamics varpi {} differs from the velocity set's {}",
                self.varpi,
                model.varpi()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub proposals: u64,
    pub exchanges: u64,
    pub collisions: u64,
}

impl EventCounts {
    pub fn accepted(&self) -> u64 {
        self.exchanges + self.collisions
    }
}

/// Uniformized simulator of the process with generator `ε⁻²(ℒᵉˣ + ℒᶜ)`.
///
/// Proposals arrive at the constant rate `ε⁻²Λ` with
/// `Λ = |Λ_L|(2d·|V|·R + |transitions|·s)`, `R = χ + ½max|v_α|`.
/// An exchange proposal `(x, e, v)` is accepted with probability
/// `(χ + ½e·v)η(x,v)(1 − η(x+e,v))/R`; a collision proposal fires when the
/// site is compatible.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: Arc<Model>,
    params: DynamicsParams,
    accept: Vec<f64>,
    exchange_share: f64,
    clock_rate: f64,
    nvel: usize,
    ndirs: usize,
}

impl Simulator {
    pub fn new(model: Arc<Model>, params: DynamicsParams, dim: usize) -> Result<Self> {
        params.validate(&model)?;
        if dim != model.dim() {
            return Err(Error::InvalidParameter(format!(
                "lattice dimension {dim} differs from velocity set dimension {}",
                model.dim()
            )));
        }
        let vs = &model.velocities;
        let nvel = vs.len();
        let ndirs = 2 * dim;
        let bound = params.chi + 0.5 * vs.max_component();
        let mut accept = vec![0.0; ndirs * nvel];
        for dir in 0..ndirs {
            let (axis, sign) = (dir / 2, if dir % 2 == 0 { 1.0 } else { -1.0 });
            for v in 0..nvel {
                let rate = params.chi + 0.5 * sign * vs.phi(v)[axis + 1];
                accept[dir * nvel + v] = rate / bound;
            }
        }
        let ex = (ndirs * nvel) as f64 * bound;
        let col = model.collisions.transitions().len() as f64 * params.collision_rate_scale;
        let per_site = ex + col;
        Ok(Self {
            accept,
            exchange_share: ex / per_site,
            clock_rate: per_site / (params.epsilon * params.epsilon),
            nvel,
            ndirs,
            model,
            params,
        })
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn params(&self) -> &DynamicsParams {
        &self.params
    }

    /// Proposal rate per site in macroscopic time.
    pub fn clock_rate_per_site(&self) -> f64 {
        self.clock_rate
    }

    fn check_state(&self, state: &LatticeState) -> Result<()> {
        if state.lattice().dim() != self.ndirs / 2 {
            return Err(Error::InvalidParameter("state lattice dimension mismatch".into()));
        }
        Ok(())
    }

    /// One proposal; returns 1 for an exchange, 2 for a collision, 0 if rejected.
    #[inline]
    fn propose<R: Rng + ?Sized>(&self, state: &mut LatticeState, rng: &mut R) -> Result<u8> {
        let nsites = state.lattice().nsites();
        let x = rng.random_range(0..nsites);
        if rng.random::<f64>() < self.exchange_share {
            let dir = rng.random_range(0..self.ndirs);
            let v = rng.random_range(0..self.nvel);
            let y = state.lattice().neighbor(x, dir);
            if !state.get(x, v) || state.get(y, v) {
                return Ok(0);
            }
            if rng.random::<f64>() >= self.accept[dir * self.nvel + v] {
                return Ok(0);
            }
            if !state.apply_exchange(x, dir, v) {
                return Err(Error::InvariantViolation(format!("exchange ({x},{dir},{v}) on incompatible state")));
            }
            Ok(1)
        } else {
            let table = self.model.collisions.transitions();
            let q = &table[rng.random_range(0..table.len())];
            let s = state.site(x);
            let incoming = 1u64 << q[0] | 1u64 << q[1];
            let outgoing = 1u64 << q[2] | 1u64 << q[3];
            if s & incoming != incoming || s & outgoing != 0 {
                return Ok(0);
            }
            if !state.apply_collision(x, q) {
                return Err(Error::InvariantViolation(format!("collision {q:?} at {x} on incompatible state")));
            }
            Ok(2)
        }
    }

    fn total_rate(&self, state: &LatticeState) -> f64 {
        self.clock_rate * state.lattice().nsites() as f64
    }

    /// Advances `state` to macroscopic time `t_end`.
    pub fn step_to<R: Rng + ?Sized>(&self, state: &mut LatticeState, t_end: f64, rng: &mut R) -> Result<EventCounts> {
        self.check_state(state)?;
        if !(t_end >= state.time) {
            return Err(Error::InvalidParameter(format!("t_end {t_end} precedes state time {}", state.time)));
        }
        let rate = self.total_rate(state);
        let mut counts = EventCounts::default();
        if rate == 0.0 {
            state.time = t_end;
            return Ok(counts);
        }
        loop {
            let dt: f64 = rng.sample::<f64, _>(Exp1) / rate;
            if state.time + dt > t_end {
                state.time = t_end;
                return Ok(counts);
            }
            state.time += dt;
            counts.proposals += 1;
            match self.propose(state, rng)? {
                1 => counts.exchanges += 1,
                2 => counts.collisions += 1,
                _ => {}
            }
        }
    }

    /// Runs until `accepted` state-changing events have occurred.
    pub fn run_events<R: Rng + ?Sized>(&self, state: &mut LatticeState, accepted: u64, rng: &mut R) -> Result<EventCounts> {
        self.check_state(state)?;
        let rate = self.total_rate(state);
        let mut counts = EventCounts::default();
        if accepted > 0 && state.particle_count() == 0 {
            return Err(Error::InvalidParameter("no events possible on an empty lattice".into()));
        }
        while counts.accepted() < accepted {
            state.time += rng.sample::<f64, _>(Exp1) / rate;
            counts.proposals += 1;
            match self.propose(state, rng)? {
                1 => counts.exchanges += 1,
                2 => counts.collisions += 1,
                _ => {}
            }
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Lattice;
    use crate::model::ToySpec;
    use crate::{rng, DEFAULT_VARPI};

    #[test]
    fn chi_bound_is_enforced() {
        let m = Model::canonical(DEFAULT_VARPI).unwrap();
        let bound = 0.5 * DEFAULT_VARPI;
        assert!(DynamicsParams::for_lattice(bound, 4, DEFAULT_VARPI).validate(&m).is_err());
        assert!(DynamicsParams::for_lattice(bound + 1e-9, 4, DEFAULT_VARPI).validate(&m).is_ok());
    }

    #[test]
    fn zero_horizon_is_identity() {
        let m = Arc::new(Model::canonical(DEFAULT_VARPI).unwrap());
        let lat = Arc::new(Lattice::new(2, 3).unwrap());
        let mut s = LatticeState::empty(lat);
        s.set_site(0, 0b1011, &m.velocities);
        let sim = Simulator::new(m, DynamicsParams::for_lattice(1.0, 2, DEFAULT_VARPI), 3).unwrap();
        let before = s.clone();
        let c = sim.step_to(&mut s, 0.0, &mut rng(1, 0)).unwrap();
        assert_eq!(c.proposals, 0);
        assert_eq!(s, before);
        assert!(sim.step_to(&mut s, -1.0, &mut rng(1, 0)).is_err());
    }

    #[test]
    fn single_particle_drift() {
        // One particle with velocity +1 on a ring: jumps right at χ+½, left
        // at χ−½, so the mean displacement over microscopic time T is T.
        let toy = ToySpec::from_ints(1, &[&[1]]);
        let m = Arc::new(Model::toy(DEFAULT_VARPI, &toy).unwrap());
        let lat = Arc::new(Lattice::new(50, 1).unwrap());
        let params = DynamicsParams { chi: 1.0, epsilon: 1.0, varpi: DEFAULT_VARPI, collision_rate_scale: 1.0 };
        let sim = Simulator::new(m.clone(), params, 1).unwrap();
        let t = 10.0;
        let reps = 2000;
        let mut r = rng(7, 0);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..reps {
            let mut s = LatticeState::empty(lat.clone());
            let origin = lat.site([0, 0, 0]);
            s.set_site(origin, 1, &m.velocities);
            sim.step_to(&mut s, t, &mut r).unwrap();
            let x = (0..lat.nsites()).find(|&x| s.site(x) != 0).unwrap();
            let d = lat.coords(x)[0] as f64;
            sum += d;
            sumsq += d * d;
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        // Skellam variance (χ+½ + χ−½)T = 2χT.
        assert!((var - 2.0 * t).abs() < 0.2 * 2.0 * t, "var {var}");
        let se = (2.0 * t / reps as f64).sqrt();
        assert!((mean - t).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn trajectories_conserve_totals_and_are_reproducible() {
        let m = Arc::new(Model::canonical(DEFAULT_VARPI).unwrap());
        let lat = Arc::new(Lattice::new(2, 3).unwrap());
        let mut r = rng(3, 0);
        let mut s = LatticeState::empty(lat.clone());
        for x in 0..lat.nsites() {
            let bits = r.random::<u64>() & 0xFFFF_FFFF;
            s.set_site(x, bits, &m.velocities);
        }
        let start = s.clone();
        let sim = Simulator::new(m.clone(), DynamicsParams::for_lattice(1.0, 2, DEFAULT_VARPI), 3).unwrap();
        let mut total = EventCounts::default();
        for _ in 0..20 {
            let c = sim.run_events(&mut s, 500, &mut r).unwrap();
            total.collisions += c.collisions;
            s.check_totals(&m.velocities).unwrap();
        }
        assert!(total.collisions > 0);
        assert_eq!(s.totals(), start.totals());

        let mut a = start.clone();
        let mut b = start;
        sim.step_to(&mut a, 0.01, &mut rng(11, 2)).unwrap();
        sim.step_to(&mut b, 0.01, &mut rng(11, 2)).unwrap();
        assert_eq!(a, b);
    }
}
