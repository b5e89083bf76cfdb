use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Periodic box `Λ_L = {−L, …, L}^d` with flat row-major site indexing and
/// precomputed neighbor tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    half_width: usize,
    dim: usize,
    side: usize,
    nsites: usize,
    #[serde(skip)]
    neighbors: Vec<[u32; 6]>,
}

impl Lattice {
    pub fn new(half_width: usize, dim: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::InvalidParameter("lattice half-width must be at least 1".into()));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("lattice dimension {dim} not in 1..=3")));
        }
        let side = 2 * half_width + 1;
        let nsites = side.pow(dim as u32);
        if nsites > u32::MAX as usize {
            return Err(Error::InvalidParameter("lattice too large".into()));
        }
        let mut lat = Self { half_width, dim, side, nsites, neighbors: Vec::new() };
        lat.build_neighbors();
        Ok(lat)
    }

    fn build_neighbors(&mut self) {
        let mut nb = vec![[0u32; 6]; self.nsites];
        for (x, row) in nb.iter_mut().enumerate() {
            let c = self.offsets(x);
            for a in 0..self.dim {
                let mut up = c;
                up[a] = (c[a] + 1) % self.side;
                let mut down = c;
                down[a] = (c[a] + self.side - 1) % self.side;
                row[2 * a] = self.index_of_offsets(up) as u32;
                row[2 * a + 1] = self.index_of_offsets(down) as u32;
            }
        }
        self.neighbors = nb;
    }

    /// Restores neighbor tables after deserialization.
    pub fn rebuilt(mut self) -> Self {
        self.build_neighbors();
        self
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn nsites(&self) -> usize {
        self.nsites
    }

    /// Number of directed unit vectors `e`, `2d`.
    pub fn ndirs(&self) -> usize {
        2 * self.dim
    }

    /// Unit vector of direction `dir`: `2α ↦ +e_α`, `2α+1 ↦ −e_α`.
    pub fn direction(&self, dir: usize) -> (usize, i32) {
        (dir / 2, if dir % 2 == 0 { 1 } else { -1 })
    }

    #[inline]
    pub fn neighbor(&self, x: usize, dir: usize) -> usize {
        self.neighbors[x][dir] as usize
    }

    /// `x + e_α` for the positive direction along axis `axis`.
    #[inline]
    pub fn forward(&self, x: usize, axis: usize) -> usize {
        self.neighbor(x, 2 * axis)
    }

    /// `x − e_α`.
    #[inline]
    pub fn backward(&self, x: usize, axis: usize) -> usize {
        self.neighbor(x, 2 * axis + 1)
    }

    fn offsets(&self, mut x: usize) -> [usize; 3] {
        let mut c = [0; 3];
        for a in (0..self.dim).rev() {
            c[a] = x % self.side;
            x /= self.side;
        }
        c
    }

    fn index_of_offsets(&self, c: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, a| acc * self.side + c[a])
    }

    /// Centered coordinates in `{−L, …, L}`; inactive axes are 0.
    pub fn coords(&self, x: usize) -> [i64; 3] {
        let c = self.offsets(x);
        let mut out = [0; 3];
        for a in 0..self.dim {
            out[a] = c[a] as i64 - self.half_width as i64;
        }
        out
    }

    /// Site index of centered coordinates, wrapping periodically.
    pub fn site(&self, coords: [i64; 3]) -> usize {
        let s = self.side as i64;
        let mut c = [0usize; 3];
        for a in 0..self.dim {
            c[a] = (coords[a] + self.half_width as i64).rem_euclid(s) as usize;
        }
        self.index_of_offsets(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbors_wrap_and_invert() {
        for dim in 1..=3 {
            let lat = Lattice::new(2, dim).unwrap();
            assert_eq!(lat.nsites(), 5usize.pow(dim as u32));
            for x in 0..lat.nsites() {
                for a in 0..dim {
                    assert_eq!(lat.backward(lat.forward(x, a), a), x);
                    let mut c = lat.coords(x);
                    c[a] += 1;
                    assert_eq!(lat.site(c), lat.forward(x, a));
                }
                assert_eq!(lat.site(lat.coords(x)), x);
            }
        }
    }

    #[test]
    fn coordinates_are_centered() {
        let lat = Lattice::new(3, 3).unwrap();
        assert_eq!(lat.coords(0), [-3, -3, -3]);
        assert_eq!(lat.coords(lat.nsites() - 1), [3, 3, 3]);
        assert_eq!(lat.site([0, 0, 0]), lat.nsites() / 2);
        assert_eq!(lat.site([4, 0, 0]), lat.site([-3, 0, 0]));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Lattice::new(0, 3).is_err());
        assert!(Lattice::new(2, 4).is_err());
    }
}
