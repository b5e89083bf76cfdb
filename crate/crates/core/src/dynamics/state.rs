use super::Lattice;
use crate::model::{exact_at_site, iter_bits, ExactConserved, Quadruple, SiteOccupancy, VelocitySet};
use crate::{Error, Result, NCONS};
use std::sync::Arc;

/// Occupancy field `η(x, v)` on a periodic lattice with cached exact
/// conserved totals and macroscopic time.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    lattice: Arc<Lattice>,
    occ: Vec<SiteOccupancy>,
    totals: ExactConserved,
    pub time: f64,
}

impl LatticeState {
    pub fn empty(lattice: Arc<Lattice>) -> Self {
        let occ = vec![0; lattice.nsites()];
        Self { lattice, occ, totals: ExactConserved::ZERO, time: 0.0 }
    }

    /// State from explicit per-site bitsets; totals are computed here.
    pub fn from_occupancy(lattice: Arc<Lattice>, occ: Vec<SiteOccupancy>, vs: &VelocitySet) -> Result<Self> {
        if occ.len() != lattice.nsites() {
            return Err(Error::InvalidParameter(format!(
                "{} site words for a lattice of {} sites",
                occ.len(),
                lattice.nsites()
            )));
        }
        let mask = velocity_mask(vs);
        if let Some(bad) = occ.iter().position(|&o| o & !mask != 0) {
            return Err(Error::InvalidParameter(format!("site {bad} occupies a velocity id outside the set")));
        }
        let mut s = Self { lattice, occ, totals: ExactConserved::ZERO, time: 0.0 };
        s.totals = s.recompute_totals(vs);
        Ok(s)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn occupancy(&self) -> &[SiteOccupancy] {
        &self.occ
    }

    #[inline]
    pub fn site(&self, x: usize) -> SiteOccupancy {
        self.occ[x]
    }

    #[inline]
    pub fn get(&self, x: usize, v: usize) -> bool {
        self.occ[x] >> v & 1 == 1
    }

    /// Cached totals `N_β`.
    pub fn totals(&self) -> ExactConserved {
        self.totals
    }

    pub fn totals_numeric(&self, varpi: f64) -> [f64; NCONS] {
        self.totals.eval(varpi)
    }

    /// `Σ_x I_β(η_x)` from scratch, exactly.
    pub fn recompute_totals(&self, vs: &VelocitySet) -> ExactConserved {
        let mut counts = vec![0i64; vs.len()];
        for &s in &self.occ {
            for v in iter_bits(s) {
                counts[v] += 1;
            }
        }
        counts
            .iter()
            .enumerate()
            .fold(ExactConserved::ZERO, |acc, (v, &n)| acc + vs.get(v).conserved().times(n))
    }

    /// `Σ_x I_β(η_x)` from scratch by floating-point accumulation.
    pub fn recompute_totals_numeric(&self, vs: &VelocitySet) -> [f64; NCONS] {
        let mut out = [0.0; NCONS];
        for &s in &self.occ {
            let c = crate::model::conserved_at_site(s, vs);
            for b in 0..NCONS {
                out[b] += c[b];
            }
        }
        out
    }

    pub fn check_totals(&self, vs: &VelocitySet) -> Result<()> {
        let fresh = self.recompute_totals(vs);
        if fresh != self.totals {
            return Err(Error::InvariantViolation(format!(
                "cached totals {:?} differ from recomputed {:?}",
                self.totals, fresh
            )));
        }
        Ok(())
    }

    pub fn particle_count(&self) -> u64 {
        self.occ.iter().map(|s| s.count_ones() as u64).sum()
    }

    /// Swaps `η(x, v)` and `η(x+e, v)`; returns whether the state changed.
    #[inline]
    pub fn apply_exchange(&mut self, x: usize, dir: usize, v: usize) -> bool {
        let y = self.lattice.neighbor(x, dir);
        let bit = 1u64 << v;
        if (self.occ[x] ^ self.occ[y]) & bit == 0 {
            return false;
        }
        self.occ[x] ^= bit;
        self.occ[y] ^= bit;
        true
    }

    /// Applies `(v,w) → (v′,w′)` at `x` when `η(x,v)=η(x,w)=1` and
    /// `η(x,v′)=η(x,w′)=0`; returns whether the state changed.
    #[inline]
    pub fn apply_collision(&mut self, x: usize, q: &Quadruple) -> bool {
        let incoming = 1u64 << q[0] | 1u64 << q[1];
        let outgoing = 1u64 << q[2] | 1u64 << q[3];
        let s = self.occ[x];
        if s & incoming != incoming || s & outgoing != 0 {
            return false;
        }
        self.occ[x] = s ^ incoming ^ outgoing;
        true
    }

    /// Overwrites one site, keeping the cached totals consistent.
    pub fn set_site(&mut self, x: usize, occ: SiteOccupancy, vs: &VelocitySet) {
        self.totals -= exact_at_site(self.occ[x], vs);
        self.totals += exact_at_site(occ, vs);
        self.occ[x] = occ;
    }
}

pub(crate) fn velocity_mask(vs: &VelocitySet) -> u64 {
    if vs.len() == 64 {
        u64::MAX
    } else {
        (1u64 << vs.len()) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Model, SymbolicScalar};
    use crate::DEFAULT_VARPI;

    fn setup() -> (Model, Arc<Lattice>) {
        (Model::canonical(DEFAULT_VARPI).unwrap(), Arc::new(Lattice::new(2, 3).unwrap()))
    }

    #[test]
    fn exchange_between_equal_slots_is_identity() {
        let (m, lat) = setup();
        let mut s = LatticeState::empty(lat.clone());
        s.set_site(0, 0b101, &m.velocities);
        let y = lat.neighbor(0, 0);
        s.set_site(y, 0b001, &m.velocities);
        let before = s.clone();
        assert!(!s.apply_exchange(0, 0, 0));
        assert_eq!(s, before);
        assert!(s.apply_exchange(0, 0, 2));
        assert!(s.get(y, 2) && !s.get(0, 2));
        s.check_totals(&m.velocities).unwrap();
    }

    #[test]
    fn collision_flips_exactly_four_slots() {
        let (m, lat) = setup();
        let vs = &m.velocities;
        let id = |c: [i64; 3]| vs.id_of(&c.map(SymbolicScalar::int)).unwrap();
        let q = [id([1, 1, 1]), id([-1, -1, 1]), id([1, -1, 1]), id([-1, 1, 1])];
        let mut s = LatticeState::empty(lat);
        s.set_site(3, 1 << q[0] | 1 << q[1] | 1 << 20, vs);
        let before = s.site(3);
        assert!(s.apply_collision(3, &q));
        assert_eq!((before ^ s.site(3)).count_ones(), 4);
        s.check_totals(vs).unwrap();

        // Blocked outgoing slot.
        s.set_site(4, 1 << q[0] | 1 << q[1] | 1 << q[2], vs);
        let blocked = s.clone();
        assert!(!s.apply_collision(4, &q));
        assert_eq!(s, blocked);
    }

    #[test]
    fn rejects_foreign_velocity_bits() {
        let (m, lat) = setup();
        let mut occ = vec![0; lat.nsites()];
        occ[0] = 1 << 40;
        assert!(LatticeState::from_occupancy(lat, occ, &m.velocities).is_err());
    }
}
