//! Velocity sets, exact conservation arithmetic, the collision table and the
//! per-site conserved quantities.

mod collision;
mod symbolic;
mod velocity;

pub use collision::{is_noop, CollisionTable, Quadruple};
pub use symbolic::{ExactConserved, Quadratic, SymbolicScalar};
pub use velocity::{ComponentSpec, ToySpec, Velocity, VelocitySet, MAX_VELOCITIES};

use crate::{Result, NCONS};
use nalgebra::DMatrix;

/// Occupancy of one site as a bitset over velocity ids.
pub type SiteOccupancy = u64;

/// Index `β` of a conserved quantity with weight `φ_β`:
/// `φ₀ = 1`, `φ_α = v_α`, `φ₄ = |v|²/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConservedFunctional {
    pub beta: usize,
}

impl ConservedFunctional {
    pub fn all() -> [Self; NCONS] {
        std::array::from_fn(|beta| Self { beta })
    }

    pub fn weight(&self, vs: &VelocitySet, v: usize) -> f64 {
        vs.phi(v)[self.beta]
    }

    /// `I_β(η_x)` at the set's ϖ.
    pub fn at_site(&self, vs: &VelocitySet, site: SiteOccupancy) -> f64 {
        iter_bits(site).map(|v| self.weight(vs, v)).sum()
    }
}

/// Velocity set plus collision table: everything the dynamics needs to know
/// about the particle species.
#[derive(Debug, Clone)]
pub struct Model {
    pub velocities: VelocitySet,
    pub collisions: CollisionTable,
}

impl Model {
    pub fn new(velocities: VelocitySet) -> Self {
        let collisions = CollisionTable::build(&velocities);
        Self { velocities, collisions }
    }

    pub fn canonical(varpi: f64) -> Result<Self> {
        Ok(Self::new(VelocitySet::canonical(varpi)?))
    }

    pub fn toy(varpi: f64, toy: &ToySpec) -> Result<Self> {
        Ok(Self::new(VelocitySet::build(varpi, Some(toy))?))
    }

    pub fn varpi(&self) -> f64 {
        self.velocities.varpi()
    }

    pub fn nvel(&self) -> usize {
        self.velocities.len()
    }

    pub fn dim(&self) -> usize {
        self.velocities.dim()
    }
}

/// Iterates over the set bits of an occupancy word.
pub fn iter_bits(mut bits: SiteOccupancy) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if bits == 0 {
            None
        } else {
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(b)
        }
    })
}

/// `(I₀, …, I₄)` of one site, evaluated at the set's ϖ.
pub fn conserved_at_site(site: SiteOccupancy, vs: &VelocitySet) -> [f64; NCONS] {
    let mut out = [0.0; NCONS];
    for v in iter_bits(site) {
        let phi = vs.phi(v);
        for b in 0..NCONS {
            out[b] += phi[b];
        }
    }
    out
}

/// Exact conserved totals of one site.
pub fn exact_at_site(site: SiteOccupancy, vs: &VelocitySet) -> ExactConserved {
    iter_bits(site).fold(ExactConserved::ZERO, |acc, v| acc + vs.get(v).conserved())
}

/// Local-ergodicity diagnostic for small velocity sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct InvariantRank {
    /// Dimension of `{ψ : ψ(v)+ψ(w) = ψ(v′)+ψ(w′) ∀q}`.
    pub collision_invariants: usize,
    /// Rank of the span of `φ₀, …, φ₄` restricted to the set.
    pub conserved_span: usize,
}

impl InvariantRank {
    /// No collision invariant beyond the span of the conserved weights.
    pub fn is_ergodic(&self) -> bool {
        self.collision_invariants == self.conserved_span
    }
}

/// Counts collision invariants and compares with the conserved weights.
pub fn collision_invariant_rank(model: &Model) -> InvariantRank {
    let vs = &model.velocities;
    let n = vs.len();
    let rows = model.collisions.transitions();
    let rank_tol = 1e-9;
    let invariants = if rows.is_empty() {
        n
    } else {
        let m = DMatrix::from_fn(rows.len(), n, |r, c| {
            let q = rows[r];
            let mut x = 0.0;
            if q[0] == c || q[1] == c {
                x += 1.0;
            }
            if q[2] == c || q[3] == c {
                x -= 1.0;
            }
            x
        });
        n - numeric_rank(m, rank_tol)
    };
    let phi = DMatrix::from_fn(n, NCONS, |v, b| vs.phi(v)[b]);
    InvariantRank {
        collision_invariants: invariants,
        conserved_span: numeric_rank(phi, rank_tol),
    }
}

fn numeric_rank(m: DMatrix<f64>, tol: f64) -> usize {
    let sv = m.svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * smax.max(1.0)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_VARPI;

    #[test]
    fn site_conserved_quantities() {
        let vs = VelocitySet::canonical(DEFAULT_VARPI).unwrap();
        assert_eq!(conserved_at_site(0, &vs), [0.0; 5]);
        let full: SiteOccupancy = (1u64 << 32) - 1;
        let c = conserved_at_site(full, &vs);
        assert_eq!(c[0], 32.0);
        for a in 1..4 {
            assert!(c[a].abs() < 1e-12);
        }
        let id = vs.id_of(&[SymbolicScalar::int(1); 3]).unwrap();
        let single = conserved_at_site(1 << id, &vs);
        assert_eq!(single, [1.0, 1.0, 1.0, 1.0, 1.5]);
        assert_eq!(ConservedFunctional { beta: 4 }.at_site(&vs, 1 << id), 1.5);
    }

    #[test]
    fn collisions_conserve_site_totals_numerically() {
        let model = Model::canonical(DEFAULT_VARPI).unwrap();
        for varpi in [DEFAULT_VARPI, 1.7, 0.3] {
            let vs = VelocitySet::canonical(varpi).unwrap();
            for q in model.collisions.quadruples() {
                let before = conserved_at_site(1 << q[0] | 1 << q[1], &vs);
                let after = conserved_at_site(1 << q[2] | 1 << q[3], &vs);
                for b in 0..NCONS {
                    assert!((before[b] - after[b]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ergodicity_diagnostic_on_toys() {
        let one_d = Model::toy(DEFAULT_VARPI, &ToySpec::one_d_pair()).unwrap();
        let r = collision_invariant_rank(&one_d);
        // No collisions: each velocity count is separately conserved.
        assert_eq!(r.collision_invariants, 2);
        assert_eq!(r.conserved_span, 2);

        let two_d = Model::toy(DEFAULT_VARPI, &ToySpec::two_d_diagonal()).unwrap();
        let r = collision_invariant_rank(&two_d);
        assert_eq!(r.collision_invariants, 3);
        assert_eq!(r.conserved_span, 3);
        assert!(r.is_ergodic());
    }
}
