use super::velocity::VelocitySet;
use serde::Serialize;

/// One admissible collision `(v, w) → (v′, w′)` by velocity ids.
pub type Quadruple = [usize; 4];

/// All admissible, non-trivial collision quadruples of a velocity set.
///
/// The table holds ordered quadruples, so it is invariant under swapping the
/// incoming pair, swapping the outgoing pair and time reversal. The dynamics
/// fires each unordered transition `{v,w} → {v′,w′}` once; see
/// [`CollisionTable::transitions`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionTable {
    quadruples: Vec<Quadruple>,
    transitions: Vec<Quadruple>,
}

impl CollisionTable {
    /// Enumerates admissible quadruples with exact conservation checks.
    ///
    /// Pairs are bucketed by their exact total momentum and energy, so the
    /// cost is quadratic in the number of velocities rather than quartic.
    pub fn build(vs: &VelocitySet) -> Self {
        use std::collections::BTreeMap;
        let n = vs.len();
        let mut buckets: BTreeMap<_, Vec<(usize, usize)>> = BTreeMap::new();
        for v in 0..n {
            for w in 0..n {
                if v == w {
                    continue;
                }
                let key = vs.get(v).conserved() + vs.get(w).conserved();
                buckets.entry(key).or_default().push((v, w));
            }
        }
        let mut quadruples = Vec::new();
        for pairs in buckets.values() {
            for &(v, w) in pairs {
                for &(vp, wp) in pairs {
                    if is_noop(v, w, vp, wp) {
                        continue;
                    }
                    quadruples.push([v, w, vp, wp]);
                }
            }
        }
        quadruples.sort_unstable();
        let transitions = quadruples
            .iter()
            .copied()
            .filter(|q| q[0] < q[1] && q[2] < q[3])
            .collect();
        Self { quadruples, transitions }
    }

    /// Ordered quadruples in lexicographic id order.
    pub fn quadruples(&self) -> &[Quadruple] {
        &self.quadruples
    }

    /// One representative `v < w`, `v′ < w′` per unordered transition.
    pub fn transitions(&self) -> &[Quadruple] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.quadruples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quadruples.is_empty()
    }

    pub fn contains(&self, q: &Quadruple) -> bool {
        self.quadruples.binary_search(q).is_ok()
    }

    /// Export as an array of quadruples of component triples, in table order.
    pub fn to_json(&self, vs: &VelocitySet) -> serde_json::Value {
        #[derive(Serialize)]
        struct Entry {
            v: [[i64; 2]; 3],
            w: [[i64; 2]; 3],
            v_out: [[i64; 2]; 3],
            w_out: [[i64; 2]; 3],
        }
        let comps = |id: usize| vs.get(id).components.map(|c| [c.unit, c.varpi]);
        let entries: Vec<Entry> = self
            .quadruples
            .iter()
            .map(|q| Entry { v: comps(q[0]), w: comps(q[1]), v_out: comps(q[2]), w_out: comps(q[3]) })
            .collect();
        serde_json::to_value(entries).expect("plain data serializes")
    }
}

/// `{v′, w′} = {v, w}` as unordered pairs.
pub fn is_noop(v: usize, w: usize, vp: usize, wp: usize) -> bool {
    (v == vp && w == wp) || (v == wp && w == vp)
}
