//! Uniform space-time grids and the fields sampled on them.
//!
//! Storage order for [`Field`] values is component fastest, then `x`, then `y`,
//! then `t`: the value of component `c` at node `(i, j, k)` lives at
//! `((k * ny + j) * nx + i) * ncomp + c`.

use crate::equation::StateZ;
use crate::error::{Error, Result};

/// Coordinate axis of the `(x, y, t)` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub t0: f64,
    pub dx: f64,
    pub dy: f64,
    pub dt: f64,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
}

impl GridSpec {
    /// Builds a grid after checking that steps are positive and counts nonzero.
    ///
    /// Stencil-specific minimum sizes are enforced by the operations that need
    /// them (see [`GridSpec::require`]).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x0: f64,
        y0: f64,
        t0: f64,
        dx: f64,
        dy: f64,
        dt: f64,
        nx: usize,
        ny: usize,
        nt: usize,
    ) -> Result<Self> {
        for (name, v) in [("dx", dx), ("dy", dy), ("dt", dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("step must be positive and finite, got {v}"),
                });
            }
        }
        for (name, v) in [("x0", x0), ("y0", y0), ("t0", t0)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "origin must be finite".into(),
                });
            }
        }
        for (name, n) in [("nx", nx), ("ny", ny), ("nt", nt)] {
            if n == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "count must be positive".into(),
                });
            }
        }
        Ok(Self {
            x0,
            y0,
            t0,
            dx,
            dy,
            dt,
            nx,
            ny,
            nt,
        })
    }

    /// Fails with [`Error::GridTooSmall`] unless the grid has at least the given counts.
    pub fn require(&self, nx: usize, ny: usize, nt: usize, what: &str) -> Result<()> {
        if self.nx < nx || self.ny < ny || self.nt < nt {
            return Err(Error::GridTooSmall(format!(
                "{what} needs at least {nx}x{ny}x{nt} nodes, grid is {}x{}x{}",
                self.nx, self.ny, self.nt
            )));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn nodes_per_level(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny * self.nt
    }

    /// Grid of half-index points obtained by averaging along `axes`.
    pub fn staggered(&self, axes: &[Axis]) -> Result<Self> {
        let mut g = *self;
        for axis in axes {
            let (origin, step, n, name) = match axis {
                Axis::X => (&mut g.x0, self.dx, &mut g.nx, "x"),
                Axis::Y => (&mut g.y0, self.dy, &mut g.ny, "y"),
                Axis::T => (&mut g.t0, self.dt, &mut g.nt, "t"),
            };
            if *n < 2 {
                return Err(Error::GridTooSmall(format!(
                    "averaging along {name} needs at least 2 points"
                )));
            }
            *origin += 0.5 * step;
            *n -= 1;
        }
        Ok(g)
    }

    /// Same spatial lattice, restricted to a single time level.
    pub fn level(&self, k: usize) -> Self {
        Self {
            t0: self.t(k),
            nt: 1,
            ..*self
        }
    }

    /// Spatial rectangle `[x_first, x_last] x [y_first, y_last]` covered by the nodes.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.x0,
            self.x(self.nx - 1),
            self.y0,
            self.y(self.ny - 1),
        )
    }
}

/// Scalar (`ncomp == 1`) or state-valued (`ncomp == 10`) samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    ncomp: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec, ncomp: usize) -> Self {
        Self {
            grid,
            ncomp,
            values: vec![0.0; grid.node_count() * ncomp],
        }
    }

    pub fn from_values(grid: GridSpec, ncomp: usize, values: Vec<f64>) -> Result<Self> {
        if ncomp == 0 {
            return Err(Error::InvalidParameter {
                name: "ncomp",
                reason: "component count must be positive".into(),
            });
        }
        if values.len() != grid.node_count() * ncomp {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.node_count() * ncomp,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self {
            grid,
            ncomp,
            values,
        })
    }

    /// Samples a scalar function at every node.
    pub fn scalar_from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid, 1);
        for k in 0..grid.nt {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    out.set(i, j, k, 0, f(grid.x(i), grid.y(j), grid.t(k)));
                }
            }
        }
        out
    }

    /// Samples a state-valued function at every node.
    pub fn state_from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> StateZ) -> Self {
        let mut out = Self::zeros(grid, StateZ::LEN);
        for k in 0..grid.nt {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    out.set_state(i, j, k, f(grid.x(i), grid.y(j), grid.t(k)));
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        ((k * self.grid.ny + j) * self.grid.nx + i) * self.ncomp
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, c: usize) -> f64 {
        self.values[self.offset(i, j, k) + c]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, c: usize, v: f64) {
        let o = self.offset(i, j, k) + c;
        self.values[o] = v;
    }

    /// Components at node `(i, j, k)` as a slice of length `ncomp`.
    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> &[f64] {
        let o = self.offset(i, j, k);
        &self.values[o..o + self.ncomp]
    }

    #[inline]
    pub fn state(&self, i: usize, j: usize, k: usize) -> StateZ {
        debug_assert_eq!(self.ncomp, StateZ::LEN);
        StateZ::from_slice(self.node(i, j, k))
    }

    #[inline]
    pub fn set_state(&mut self, i: usize, j: usize, k: usize, z: StateZ) {
        debug_assert_eq!(self.ncomp, StateZ::LEN);
        let o = self.offset(i, j, k);
        self.values[o..o + StateZ::LEN].copy_from_slice(z.as_array());
    }

    /// One component at one time level as a plane.
    pub fn plane(&self, k: usize, c: usize) -> Plane {
        let g = &self.grid;
        Plane::from_fn(g.nx, g.ny, |i, j| self.get(i, j, k, c))
    }

    /// Largest absolute value over all nodes and components.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Component-wise difference `self - other`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Field {
            grid: self.grid,
            ncomp: self.ncomp,
            values,
        })
    }

    pub fn check_same_shape(&self, other: &Field) -> Result<()> {
        let (a, b) = (&self.grid, &other.grid);
        if a.nx != b.nx || a.ny != b.ny || a.nt != b.nt || self.ncomp != other.ncomp {
            return Err(Error::GridMismatch(format!(
                "{}x{}x{}x{} vs {}x{}x{}x{}",
                a.nx, a.ny, a.nt, self.ncomp, b.nx, b.ny, b.nt, other.ncomp
            )));
        }
        Ok(())
    }
}

/// A scalar plane indexed `(i, j)` with `i` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(i, j));
            }
        }
        Self { nx, ny, data }
    }

    /// Samples `f(x, y)` on the spatial lattice of `grid`.
    pub fn sample(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid.nx, grid.ny, |i, j| f(grid.x(i), grid.y(j)))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] = v;
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn max_abs_diff(&self, other: &Plane) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_steps() {
        assert!(GridSpec::new(0.0, 0.0, 0.0, -1.0, 1.0, 1.0, 5, 3, 3).is_err());
        assert!(GridSpec::new(0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 5, 3, 3).is_err());
        assert!(GridSpec::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0, 3, 3).is_err());
    }

    #[test]
    fn layout_is_component_then_x_then_y_then_t() {
        let g = GridSpec::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 3, 2, 2).unwrap();
        let f = Field::zeros(g, 10);
        assert_eq!(f.offset(1, 0, 0), 10);
        assert_eq!(f.offset(0, 1, 0), 30);
        assert_eq!(f.offset(0, 0, 1), 60);
    }

    #[test]
    fn staggered_grid_shifts_origin_and_drops_a_node() {
        let g = GridSpec::new(1.0, 2.0, 3.0, 0.5, 0.25, 0.1, 4, 3, 2).unwrap();
        let s = g.staggered(&[Axis::X, Axis::T]).unwrap();
        assert_eq!((s.nx, s.ny, s.nt), (3, 3, 1));
        assert_eq!(s.x0, 1.25);
        assert_eq!(s.y0, 2.0);
        assert!((s.t0 - 3.05).abs() < 1e-15);
        let one = GridSpec::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1, 3, 3).unwrap();
        assert!(one.staggered(&[Axis::X]).is_err());
    }

    #[test]
    fn from_values_checks_length_and_finiteness() {
        let g = GridSpec::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2, 2, 1).unwrap();
        assert!(Field::from_values(g, 1, vec![0.0; 3]).is_err());
        assert!(Field::from_values(g, 1, vec![0.0, 1.0, f64::NAN, 2.0]).is_err());
        assert!(Field::from_values(g, 1, vec![0.0; 4]).is_ok());
    }
}
