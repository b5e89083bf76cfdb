use super::EquilibriumParams;
use crate::dynamics::{Lattice, LatticeState};
use crate::model::{SiteOccupancy, VelocitySet};
use crate::Result;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use std::sync::Arc;

const GROUP: usize = 8;

/// Exact sampler of one site's occupancy under the product law.
///
/// Velocities are split into bytes; each byte is drawn from an alias table
/// over its 256 joint outcomes, so a 32-velocity site costs four draws.
#[derive(Debug, Clone)]
pub struct SiteSampler {
    groups: Vec<WeightedAliasIndex<f64>>,
}

impl SiteSampler {
    pub fn new(p: &EquilibriumParams) -> Self {
        let nv = p.nvel();
        let groups = (0..nv)
            .step_by(GROUP)
            .map(|start| {
                let len = GROUP.min(nv - start);
                let weights: Vec<f64> = (0..1usize << len)
                    .map(|pattern| {
                        (0..len)
                            .map(|j| {
                                let f = p.f[start + j];
                                if pattern >> j & 1 == 1 {
                                    f
                                } else {
                                    1.0 - f
                                }
                            })
                            .product()
                    })
                    .collect();
                WeightedAliasIndex::new(weights).expect("product weights sum to one")
            })
            .collect();
        Self { groups }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SiteOccupancy {
        let mut occ = 0u64;
        for (g, table) in self.groups.iter().enumerate() {
            occ |= (table.sample(rng) as u64) << (g * GROUP);
        }
        occ
    }
}

/// I.i.d. product-measure configuration on `lattice` with marginals `f(v)`.
pub fn sample_product_measure<R: Rng + ?Sized>(
    p: &EquilibriumParams,
    vs: &VelocitySet,
    lattice: Arc<Lattice>,
    rng: &mut R,
) -> Result<LatticeState> {
    let sampler = SiteSampler::new(p);
    let occ = (0..lattice.nsites()).map(|_| sampler.sample(rng)).collect();
    LatticeState::from_occupancy(lattice, occ, vs)
}
