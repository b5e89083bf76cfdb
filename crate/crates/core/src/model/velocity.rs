use super::symbolic::{ExactConserved, Quadratic, SymbolicScalar};
use crate::{Error, Result, NCONS};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Largest velocity set representable by the per-site `u64` bitsets.
pub const MAX_VELOCITIES: usize = 64;

/// A discrete velocity with exact components.
///
/// Toy velocities of dimension `d < 3` are padded with zero components, so
/// the conserved quantities of a toy model are still indexed `0..5` with the
/// unused momentum components identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Velocity {
    pub components: [SymbolicScalar; 3],
    pub speed_sq: Quadratic,
}

impl Velocity {
    pub fn new(components: [SymbolicScalar; 3]) -> Self {
        let speed_sq = components
            .iter()
            .fold(Quadratic::ZERO, |acc, c| acc + c.square());
        Self { components, speed_sq }
    }

    pub fn from_ints(c: [i64; 3]) -> Self {
        Self::new(c.map(SymbolicScalar::int))
    }

    /// Numeric components at the given ϖ.
    pub fn eval(&self, varpi: f64) -> [f64; 3] {
        self.components.map(|c| c.eval(varpi))
    }

    /// Exact contribution of one particle with this velocity to the
    /// conserved totals.
    pub fn conserved(&self) -> ExactConserved {
        ExactConserved {
            mass: 1,
            momentum: self.components,
            energy2: self.speed_sq,
        }
    }
}

/// One velocity component in a toy specification: either an integer or a
/// `[unit, varpi]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentSpec {
    Int(i64),
    Pair([i64; 2]),
}

impl From<ComponentSpec> for SymbolicScalar {
    fn from(c: ComponentSpec) -> Self {
        match c {
            ComponentSpec::Int(u) => SymbolicScalar::int(u),
            ComponentSpec::Pair([u, w]) => SymbolicScalar::new(u, w),
        }
    }
}

/// Explicit velocity list of dimension `dim` (1, 2 or 3) for exact oracles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub dim: usize,
    pub velocities: Vec<Vec<ComponentSpec>>,
}

impl ToySpec {
    pub fn from_ints(dim: usize, velocities: &[&[i64]]) -> Self {
        Self {
            dim,
            velocities: velocities
                .iter()
                .map(|v| v.iter().map(|&c| ComponentSpec::Int(c)).collect())
                .collect(),
        }
    }

    /// `{(+1), (−1)}` in one dimension.
    pub fn one_d_pair() -> Self {
        Self::from_ints(1, &[&[1], &[-1]])
    }

    /// The four diagonal velocities `(±1, ±1)` in two dimensions; the
    /// smallest toy with a non-trivial collision.
    pub fn two_d_diagonal() -> Self {
        Self::from_ints(2, &[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1]])
    }

    /// The eight velocities `(±1, ±1, ±1)`.
    pub fn cube_corners() -> Self {
        let mut v = Vec::new();
        for s0 in [1, -1] {
            for s1 in [1, -1] {
                for s2 in [1, -1] {
                    v.push(vec![ComponentSpec::Int(s0), ComponentSpec::Int(s1), ComponentSpec::Int(s2)]);
                }
            }
        }
        Self { dim: 3, velocities: v }
    }
}

/// Ordered velocity table with a reverse index from components to id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VelocitySet {
    velocities: Vec<Velocity>,
    #[serde(skip)]
    index: HashMap<[SymbolicScalar; 3], usize>,
    #[serde(skip)]
    weights: Vec<[f64; NCONS]>,
    dim: usize,
    varpi: f64,
    canonical: bool,
}

impl VelocitySet {
    /// The canonical 32-velocity set: `(±1, ±1, ±1)` followed by all
    /// permutations of `(±ϖ, ±1, ±1)`.
    pub fn canonical(varpi: f64) -> Result<Self> {
        Self::build(varpi, None)
    }

    /// Canonical set when `toy` is `None`, otherwise the explicit toy list.
    pub fn build(varpi: f64, toy: Option<&ToySpec>) -> Result<Self> {
        if !(varpi.is_finite() && varpi > 0.0 && varpi != 1.0) {
            return Err(Error::InvalidVarpi(varpi));
        }
        let (velocities, dim, canonical) = match toy {
            None => (canonical_velocities(), 3, true),
            Some(spec) => (toy_velocities(spec)?, spec.dim, false),
        };
        if velocities.len() > MAX_VELOCITIES {
            return Err(Error::InvalidToy(format!(
                "{} velocities exceed the limit of {MAX_VELOCITIES}",
                velocities.len()
            )));
        }
        let mut index = HashMap::with_capacity(velocities.len());
        for (id, v) in velocities.iter().enumerate() {
            if index.insert(v.components, id).is_some() {
                return Err(Error::DuplicateVelocity(format!("{:?}", v.components)));
            }
        }
        let mut vs = Self { velocities, index, weights: Vec::new(), dim, varpi, canonical };
        vs.weights = vs.eval_weights();
        Ok(vs)
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    /// Number of active lattice axes.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn varpi(&self) -> f64 {
        self.varpi
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn velocities(&self) -> &[Velocity] {
        &self.velocities
    }

    pub fn get(&self, id: usize) -> &Velocity {
        &self.velocities[id]
    }

    pub fn id_of(&self, components: &[SymbolicScalar; 3]) -> Option<usize> {
        self.index.get(components).copied()
    }

    /// Weights `φ_β(v)`: `1, v₁, v₂, v₃, |v|²/2` at the configured ϖ.
    #[inline]
    pub fn phi(&self, id: usize) -> [f64; NCONS] {
        self.weights[id]
    }

    fn eval_weights(&self) -> Vec<[f64; NCONS]> {
        self.velocities
            .iter()
            .map(|v| {
                let c = v.eval(self.varpi);
                [1.0, c[0], c[1], c[2], 0.5 * v.speed_sq.eval(self.varpi)]
            })
            .collect()
    }

    /// `|v|²` at the configured ϖ.
    pub fn speed_sq(&self, id: usize) -> f64 {
        self.velocities[id].speed_sq.eval(self.varpi)
    }

    /// Largest `|v_α|` over velocities and active axes.
    pub fn max_component(&self) -> f64 {
        self.velocities
            .iter()
            .flat_map(|v| v.eval(self.varpi)[..self.dim].to_vec())
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Exact sum of all velocities.
    pub fn momentum_sum(&self) -> [SymbolicScalar; 3] {
        let mut s = [SymbolicScalar::ZERO; 3];
        for v in &self.velocities {
            for a in 0..3 {
                s[a] += v.components[a];
            }
        }
        s
    }

    /// Whether the set is mapped onto itself by every sign flip and
    /// permutation of the active axes.
    pub fn is_symmetric(&self) -> bool {
        let d = self.dim;
        let perms: Vec<Vec<usize>> = permutations(d);
        self.velocities.iter().all(|v| {
            perms.iter().all(|p| {
                (0..(1u32 << d)).all(|signs| {
                    let mut c = [SymbolicScalar::ZERO; 3];
                    for a in 0..d {
                        let x = v.components[p[a]];
                        c[a] = if signs >> a & 1 == 1 { -x } else { x };
                    }
                    self.index.contains_key(&c)
                })
            })
        })
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .velocities
            .iter()
            .enumerate()
            .map(|(i, v)| (v.components, i))
            .collect();
        self.weights = self.eval_weights();
    }
}

impl VelocitySet {
    /// Deserialize and restore the reverse index.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut v: Self = serde_json::from_str(s)?;
        v.rebuild_index();
        Ok(v)
    }
}

fn canonical_velocities() -> Vec<Velocity> {
    let signs = [1i64, -1];
    let mut out = Vec::with_capacity(32);
    for &s0 in &signs {
        for &s1 in &signs {
            for &s2 in &signs {
                out.push(Velocity::from_ints([s0, s1, s2]));
            }
        }
    }
    // ϖ in each position in turn.
    for pos in 0..3 {
        for &s0 in &signs {
            for &s1 in &signs {
                for &s2 in &signs {
                    let s = [s0, s1, s2];
                    let comps = std::array::from_fn(|a| {
                        if a == pos {
                            SymbolicScalar::of_varpi(s[a])
                        } else {
                            SymbolicScalar::int(s[a])
                        }
                    });
                    out.push(Velocity::new(comps));
                }
            }
        }
    }
    out
}

fn toy_velocities(spec: &ToySpec) -> Result<Vec<Velocity>> {
    if !(1..=3).contains(&spec.dim) {
        return Err(Error::InvalidToy(format!("dimension {} not in 1..=3", spec.dim)));
    }
    if spec.velocities.is_empty() {
        return Err(Error::InvalidToy("empty velocity list".into()));
    }
    spec.velocities
        .iter()
        .map(|v| {
            if v.len() != spec.dim {
                return Err(Error::InvalidToy(format!(
                    "velocity {v:?} has {} components, expected {}",
                    v.len(),
                    spec.dim
                )));
            }
            let mut c = [SymbolicScalar::ZERO; 3];
            for (a, comp) in v.iter().enumerate() {
                c[a] = (*comp).into();
            }
            Ok(Velocity::new(c))
        })
        .collect()
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..d).collect(), &mut out);
    out
}
