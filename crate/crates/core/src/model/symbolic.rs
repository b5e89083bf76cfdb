//! Exact arithmetic in ℤ[ϖ] for velocity components and conserved totals.
//!
//! ϖ and ϖ² are treated as independent transcendentals: two quantities are
//! equal only if all their integer coefficients agree. Numeric values are
//! obtained by [`SymbolicScalar::eval`] with an explicit ϖ.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// `unit + varpi·ϖ` with integer coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct SymbolicScalar {
    pub unit: i64,
    pub varpi: i64,
}

impl SymbolicScalar {
    pub const ZERO: Self = Self { unit: 0, varpi: 0 };

    pub const fn new(unit: i64, varpi: i64) -> Self {
        Self { unit, varpi }
    }

    pub const fn int(unit: i64) -> Self {
        Self { unit, varpi: 0 }
    }

    pub const fn of_varpi(varpi: i64) -> Self {
        Self { unit: 0, varpi }
    }

    pub fn is_zero(self) -> bool {
        self.unit == 0 && self.varpi == 0
    }

    pub fn eval(self, varpi: f64) -> f64 {
        self.unit as f64 + self.varpi as f64 * varpi
    }

    pub fn square(self) -> Quadratic {
        self * self
    }
}

impl Add for SymbolicScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.unit + rhs.unit, self.varpi + rhs.varpi)
    }
}

impl AddAssign for SymbolicScalar {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for SymbolicScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.unit - rhs.unit, self.varpi - rhs.varpi)
    }
}

impl SubAssign for SymbolicScalar {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Neg for SymbolicScalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.unit, -self.varpi)
    }
}

impl Mul for SymbolicScalar {
    type Output = Quadratic;
    fn mul(self, rhs: Self) -> Quadratic {
        Quadratic {
            unit: self.unit * rhs.unit,
            varpi: self.unit * rhs.varpi + self.varpi * rhs.unit,
            varpi_sq: self.varpi * rhs.varpi,
        }
    }
}

impl fmt::Display for SymbolicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.unit, self.varpi) {
            (u, 0) => write!(f, "{u}"),
            (0, w) => write!(f, "{w}ϖ"),
            (u, w) => write!(f, "{u}{w:+}ϖ"),
        }
    }
}

/// `unit + varpi·ϖ + varpi_sq·ϖ²`, the ring in which squared speeds live.
///
/// For components that are pure integers or pure multiples of ϖ the middle
/// coefficient is always zero, so `(unit, varpi_sq)` is the familiar
/// (rational part, ϖ² part) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Quadratic {
    pub unit: i64,
    pub varpi: i64,
    pub varpi_sq: i64,
}

impl Quadratic {
    pub const ZERO: Self = Self { unit: 0, varpi: 0, varpi_sq: 0 };

    pub fn eval(self, varpi: f64) -> f64 {
        self.unit as f64 + self.varpi as f64 * varpi + self.varpi_sq as f64 * varpi * varpi
    }
}

impl Add for Quadratic {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            unit: self.unit + rhs.unit,
            varpi: self.varpi + rhs.varpi,
            varpi_sq: self.varpi_sq + rhs.varpi_sq,
        }
    }
}

impl AddAssign for Quadratic {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Quadratic {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            unit: self.unit - rhs.unit,
            varpi: self.varpi - rhs.varpi,
            varpi_sq: self.varpi_sq - rhs.varpi_sq,
        }
    }
}

impl SubAssign for Quadratic {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

/// Exact conserved totals of a configuration: particle number, momentum and
/// twice the kinetic energy (`Σ|v|²`, so that all coefficients are integers).
///
/// Used both as the cached totals of a lattice state and as the key of a
/// canonical sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ExactConserved {
    pub mass: i64,
    pub momentum: [SymbolicScalar; 3],
    pub energy2: Quadratic,
}

impl ExactConserved {
    pub const ZERO: Self = Self {
        mass: 0,
        momentum: [SymbolicScalar::ZERO; 3],
        energy2: Quadratic::ZERO,
    };

    /// `n` copies of the same contribution.
    pub fn times(self, n: i64) -> Self {
        let m = |x: SymbolicScalar| SymbolicScalar::new(n * x.unit, n * x.varpi);
        Self {
            mass: n * self.mass,
            momentum: self.momentum.map(m),
            energy2: Quadratic {
                unit: n * self.energy2.unit,
                varpi: n * self.energy2.varpi,
                varpi_sq: n * self.energy2.varpi_sq,
            },
        }
    }

    /// Numeric `(I₀, I₁, I₂, I₃, I₄)` with `I₄ = ½Σ|v|²`.
    pub fn eval(&self, varpi: f64) -> [f64; 5] {
        [
            self.mass as f64,
            self.momentum[0].eval(varpi),
            self.momentum[1].eval(varpi),
            self.momentum[2].eval(varpi),
            0.5 * self.energy2.eval(varpi),
        ]
    }
}

impl Add for ExactConserved {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            mass: self.mass + rhs.mass,
            momentum: [
                self.momentum[0] + rhs.momentum[0],
                self.momentum[1] + rhs.momentum[1],
                self.momentum[2] + rhs.momentum[2],
            ],
            energy2: self.energy2 + rhs.energy2,
        }
    }
}

impl AddAssign for ExactConserved {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for ExactConserved {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            mass: self.mass - rhs.mass,
            momentum: [
                self.momentum[0] - rhs.momentum[0],
                self.momentum[1] - rhs.momentum[1],
                self.momentum[2] - rhs.momentum[2],
            ],
            energy2: self.energy2 - rhs.energy2,
        }
    }
}

impl SubAssign for ExactConserved {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equality_is_componentwise() {
        // 2 and 2ϖ/√2 coincide numerically at ϖ = √2 but are distinct symbols.
        let a = SymbolicScalar::int(2);
        let b = SymbolicScalar::of_varpi(1);
        assert_ne!(a, b);
        assert!((b.eval(2.0) - a.eval(2.0)).abs() < 1e-15);
    }

    #[test]
    fn square_of_pure_components() {
        assert_eq!(SymbolicScalar::int(-1).square(), Quadratic { unit: 1, varpi: 0, varpi_sq: 0 });
        assert_eq!(SymbolicScalar::of_varpi(1).square(), Quadratic { unit: 0, varpi: 0, varpi_sq: 1 });
        let mixed = SymbolicScalar::new(1, 1).square();
        assert_eq!(mixed, Quadratic { unit: 1, varpi: 2, varpi_sq: 1 });
    }

    proptest! {
        #[test]
        fn eval_is_a_ring_homomorphism(a in -50i64..50, b in -50i64..50, c in -50i64..50, d in -50i64..50, w in 0.1f64..5.0) {
            let x = SymbolicScalar::new(a, b);
            let y = SymbolicScalar::new(c, d);
            prop_assert!(((x + y).eval(w) - (x.eval(w) + y.eval(w))).abs() < 1e-9);
            prop_assert!(((x * y).eval(w) - x.eval(w) * y.eval(w)).abs() < 1e-9 * (1.0 + (x.eval(w) * y.eval(w)).abs()));
            prop_assert_eq!(x + (-x), SymbolicScalar::ZERO);
        }
    }
}
