//! Rectangular mesh geometry and per-node solver state.
//!
//! Nodes are stored row-major: node `(i, j)` has flat index `i + j * nx` and
//! sits at `(xmin + i*h1, ymin + j*h2)`.

use crate::error::{Error, Result};
use crate::math::Vec2;

/// Rectangular computational domain `[xmin, xmax] x [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Domain {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmax > xmin && ymax > ymin) {
            return Err(Error::InvalidDomain { xmin, xmax, ymin, ymax });
        }
        Ok(Self { xmin, xmax, ymin, ymax })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Square domain `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, lo, hi)
    }
}

/// Regular rectangular mesh with `nx * ny` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub domain: Domain,
    /// Mesh step in x: `(xmax - xmin) / (nx - 1)`.
    pub h1: f64,
    /// Mesh step in y: `(ymax - ymin) / (ny - 1)`.
    pub h2: f64,
    /// `max(h1, h2)`; the update radius is `K * h`.
    pub h: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, domain: Domain) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid { nx, ny });
        }
        let h1 = (domain.xmax - domain.xmin) / (nx - 1) as f64;
        let h2 = (domain.ymax - domain.ymin) / (ny - 1) as f64;
        Ok(Self { nx, ny, domain, h1, h2, h: h1.max(h2) })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        i + j * self.nx
    }

    #[inline]
    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    #[inline]
    pub fn position(&self, node: usize) -> Vec2 {
        let (i, j) = self.ij(node);
        Vec2::new(
            self.domain.xmin + i as f64 * self.h1,
            self.domain.ymin + j as f64 * self.h2,
        )
    }

    #[inline]
    pub fn is_boundary(&self, node: usize) -> bool {
        let (i, j) = self.ij(node);
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// The in-bounds 8-neighborhood of `node`, in row-major order.
    pub fn neighbors8(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.ij(node);
        let (i, j) = (i as isize, j as isize);
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        (-1..=1).flat_map(move |dj| {
            (-1..=1).filter_map(move |di| {
                if di == 0 && dj == 0 {
                    return None;
                }
                let (k, l) = (i + di, j + dj);
                if k < 0 || l < 0 || k >= nx || l >= ny {
                    return None;
                }
                Some((k + l * nx) as usize)
            })
        })
    }

    /// The cell containing `p` and the local coordinates of `p` inside it:
    /// `(i, j, s, t)` with `s, t` in `[0, 1]`. `None` outside the domain.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize, f64, f64)> {
        if !self.domain.contains(p) {
            return None;
        }
        let fi = (p.x - self.domain.xmin) / self.h1;
        let fj = (p.y - self.domain.ymin) / self.h2;
        let i = (fi.floor() as usize).min(self.nx - 2);
        let j = (fj.floor() as usize).min(self.ny - 2);
        Some((i, j, fi - i as f64, fj - j as f64))
    }

    /// The node nearest to `p`; `None` outside the domain.
    pub fn nearest_node(&self, p: Vec2) -> Option<usize> {
        if !self.domain.contains(p) {
            return None;
        }
        let i = (((p.x - self.domain.xmin) / self.h1).round() as usize).min(self.nx - 1);
        let j = (((p.y - self.domain.ymin) / self.h2).round() as usize).min(self.ny - 1);
        Some(self.index(i, j))
    }

    /// Index offsets `(di, dj)` whose physical displacement has Euclidean
    /// length at most `K * h`, excluding the origin. Shared by all nodes;
    /// clip against the grid bounds per node.
    pub fn far_offsets(&self, k: usize) -> Vec<(isize, isize)> {
        let radius = k as f64 * self.h;
        let r2 = radius * radius * (1.0 + 1e-12);
        let mi = (radius / self.h1).floor() as isize;
        let mj = (radius / self.h2).floor() as isize;
        let mut out = Vec::new();
        for dj in -mj..=mj {
            for di in -mi..=mi {
                if di == 0 && dj == 0 {
                    continue;
                }
                let dx = di as f64 * self.h1;
                let dy = dj as f64 * self.h2;
                if dx * dx + dy * dy <= r2 {
                    out.push((di, dj));
                }
            }
        }
        out
    }

    /// All in-bounds nodes within physical distance `K * h` of `node`,
    /// excluding `node` itself.
    pub fn far_neighborhood(&self, node: usize, k: usize) -> Vec<usize> {
        let (i, j) = self.ij(node);
        let (i, j) = (i as isize, j as isize);
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        self.far_offsets(k)
            .into_iter()
            .filter_map(|(di, dj)| {
                let (p, q) = (i + di, j + dj);
                if p < 0 || q < 0 || p >= nx || q >= ny {
                    None
                } else {
                    Some((p + q * nx) as usize)
                }
            })
            .collect()
    }
}

/// Node status in the label-setting sweep. Transitions only move forward:
/// `Unknown -> Considered -> AcceptedFront -> Accepted`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum Label {
    Unknown = 0,
    Considered = 1,
    AcceptedFront = 2,
    Accepted = 3,
}
