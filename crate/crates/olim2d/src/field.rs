//! Node-centered scalar and vector fields on a [`Grid`], with the sampling
//! conventions used throughout: `+inf` marks a node the solver never
//! computed, `NaN` marks a node where a derived quantity could not be
//! evaluated.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::math::Vec2;

/// A scalar sample per grid node, row-major like the grid itself.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn filled(grid: Grid, value: f64) -> Self {
        Self { data: vec![value; grid.n_nodes()], grid }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Vec2) -> f64) -> Self {
        let data = (0..grid.n_nodes()).map(|n| f(grid.position(n))).collect();
        Self { grid, data }
    }

    pub fn from_data(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.n_nodes() {
            return Err(Error::InvalidConfig(format!(
                "field length {} does not match the {}x{} grid",
                data.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, data })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.index(i, j)]
    }

    /// Bilinear interpolation; `None` outside the domain or when a corner of
    /// the containing cell is not finite.
    pub fn interpolate(&self, p: Vec2) -> Option<f64> {
        let (i, j, s, t) = self.grid.cell_of(p)?;
        let corners = [
            self.at(i, j),
            self.at(i + 1, j),
            self.at(i, j + 1),
            self.at(i + 1, j + 1),
        ];
        if corners.iter().any(|c| !c.is_finite()) {
            return None;
        }
        Some(
            corners[0] * (1.0 - s) * (1.0 - t)
                + corners[1] * s * (1.0 - t)
                + corners[2] * (1.0 - s) * t
                + corners[3] * s * t,
        )
    }
}

/// A 2-vector sample per grid node.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid,
    pub data: Vec<Vec2>,
}

impl VectorField {
    pub fn filled(grid: Grid, value: Vec2) -> Self {
        Self { data: vec![value; grid.n_nodes()], grid }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Vec2 {
        self.data[self.grid.index(i, j)]
    }

    /// Bilinear interpolation; `None` outside the domain or when a corner of
    /// the containing cell is invalid.
    pub fn interpolate(&self, p: Vec2) -> Option<Vec2> {
        let (i, j, s, t) = self.grid.cell_of(p)?;
        let corners = [
            self.at(i, j),
            self.at(i + 1, j),
            self.at(i, j + 1),
            self.at(i + 1, j + 1),
        ];
        if corners.iter().any(|c| !c.x.is_finite() || !c.y.is_finite()) {
            return None;
        }
        Some(
            corners[0] * (1.0 - s) * (1.0 - t)
                + corners[1] * s * (1.0 - t)
                + corners[2] * (1.0 - s) * t
                + corners[3] * s * t,
        )
    }
}
