//! The label-setting main loop with the hierarchical update, plus the
//! initialization procedures near the attractor.
//!
//! Nodes are swept in increasing order of their tentative quasi-potential.
//! When a node is accepted it triggers one-point and triangle updates of the
//! Considered nodes within the update radius `K * h`; newly Considered nodes
//! receive a reduced "hierarchical" update: a full one-point scan followed by
//! triangle updates only around the one-point minimizer.

use std::time::{Duration, Instant};

use crate::action::{a_norm, TriangleUpdateProblem};
use crate::error::{Error, Result};
use crate::grid::{Domain, Grid, Label};
use crate::heap::IndexedMinHeap;
use crate::math::{Mat2, Vec2};
use crate::model::{covariance_inverse_of, require_stable, AttractorSpec, Model};

/// What to do when the sweep reaches the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Terminate as soon as a boundary node is accepted. The safe choice when
    /// the drift has a strong rotational component.
    StopOnBoundary,
    /// Keep sweeping until the Considered set empties.
    ComputeWholeDomain,
}

/// Solver parameters.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub nx: usize,
    pub ny: usize,
    /// Update factor: the update radius is `K * h`.
    pub k: usize,
    pub domain: Domain,
    pub boundary_policy: BoundaryPolicy,
}

impl SolverConfig {
    /// Square mesh shorthand.
    pub fn square(n: usize, k: usize, domain: Domain, boundary_policy: BoundaryPolicy) -> Self {
        Self { nx: n, ny: n, k, domain, boundary_policy }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("update factor K must be >= 1".into()));
        }
        if self.nx < 16 || self.ny < 16 {
            return Err(Error::InvalidConfig(format!(
                "mesh {}x{} too small; need at least 16 nodes per side",
                self.nx, self.ny
            )));
        }
        Ok(())
    }
}

/// `K = 10 + 4 (log2 N - 7)`, rounded for non-power-of-two `N`.
pub fn rule_of_thumb_k(n: usize) -> usize {
    let p = (n as f64).log2();
    (10.0 + 4.0 * (p - 7.0)).round().max(1.0) as usize
}

/// Symmetric matrix `M` of the quadratic quasi-potential
/// `U(x) = (x - x0)' M (x - x0)` of the linearized SDE near a stable
/// equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiPotentialMatrix {
    pub m: Mat2,
}

impl QuasiPotentialMatrix {
    pub fn evaluate(&self, x0: Vec2, x: Vec2) -> f64 {
        let d = x - x0;
        (self.m * d).dot(&d)
    }
}

/// Quasi-potential matrix of the linear SDE `dx = J x dt + Sigma sqrt(eps) dW`
/// with stable `J` and constant invertible `Sigma`.
///
/// The construction goes through `g = Sigma^{-1} J Sigma`, the closed-form
/// quadratic quasi-potential for unit diffusion in the transformed variable,
/// and back-substitution. Before returning, the result is verified against
/// the stationary Hamilton-Jacobi identity
/// `M (Sigma Sigma') M + (J' M + M J) / 2 = 0`.
pub fn linear_quasipotential_matrix(j: &Mat2, sigma: &Mat2) -> Result<QuasiPotentialMatrix> {
    let sigma_inv = sigma
        .try_inverse()
        .ok_or(Error::InvalidParameter("Sigma is singular".into()))?;
    let (r0, r1) = crate::math::eigenvalue_real_parts(j);
    if !(r0 < 0.0 && r1 < 0.0) {
        return Err(Error::UnstableEquilibrium { at: Vec2::zeros() });
    }
    let g = sigma_inv * j * sigma;
    let (g11, g12, g21, g22) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let tr = g11 + g22;
    let skew = g21 - g12;
    let denom = tr * tr + skew * skew;
    let alpha = tr * tr / denom;
    let beta = skew * tr / denom;
    let inner = Mat2::new(
        -(alpha * g11 + beta * g21),
        -(alpha * g12 + beta * g22),
        -(alpha * g12 + beta * g22),
        -(alpha * g22 - beta * g12),
    );
    let m = crate::model::symmetrize(&(sigma_inv.transpose() * inner * sigma_inv));

    // U = x'Mx must satisfy the Hamilton-Jacobi equation identically.
    let a_inv = sigma * sigma.transpose();
    let residual = (m * a_inv * m + 0.5 * (j.transpose() * m + m * j)).norm();
    if residual > 1e-10 {
        return Err(Error::QpMatrixIdentity { residual });
    }
    Ok(QuasiPotentialMatrix { m })
}

/// Counters gathered during a sweep.
#[derive(Debug, Clone, Default)]
pub struct SolverStats {
    pub heap_inserts: u64,
    pub heap_decreases: u64,
    pub heap_extracts: u64,
    pub one_point_updates: u64,
    pub triangle_solves: u64,
    pub degenerate_triangles: u64,
    pub root_failures: u64,
    pub wall_time: Duration,
}

/// The outcome of a sweep: the quasi-potential samples, final labels, the
/// acceptance order, and counters.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub grid: Grid,
    /// Quasi-potential per node; `+inf` where never computed.
    pub u: Vec<f64>,
    pub label: Vec<Label>,
    pub accept_order: Vec<usize>,
    pub stats: SolverStats,
    /// The (possibly Newton-refined) attractor point, when the attractor is
    /// a stable equilibrium.
    pub attractor_point: Option<Vec2>,
}

impl SolveResult {
    /// Nodes whose value is final (`AcceptedFront` or `Accepted`).
    pub fn is_computed(&self, node: usize) -> bool {
        self.label[node] >= Label::AcceptedFront
    }

    /// The computed quasi-potential as a field: `+inf` at nodes whose value
    /// never became final (tentative Considered values are masked out).
    pub fn u_field(&self) -> crate::field::ScalarField {
        let data = self
            .u
            .iter()
            .zip(&self.label)
            .map(|(&u, &l)| if l >= Label::AcceptedFront { u } else { f64::INFINITY })
            .collect();
        crate::field::ScalarField { grid: self.grid, data }
    }

    /// Maximum quasi-potential over computed nodes.
    pub fn max_u(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.label)
            .filter(|(_, &l)| l >= Label::AcceptedFront)
            .map(|(&u, _)| u)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-row extents of the update disc: row offset `dj` covers columns
/// `-di_max ..= di_max`.
struct UpdateStencil {
    rows: Vec<(isize, isize)>,
}

impl UpdateStencil {
    fn new(grid: &Grid, k: usize) -> Self {
        let radius = k as f64 * grid.h;
        let r2 = radius * radius * (1.0 + 1e-12);
        let mj = (radius / grid.h2).floor() as isize;
        let rows = (-mj..=mj)
            .map(|dj| {
                let dy = dj as f64 * grid.h2;
                let di_max = ((r2 - dy * dy).max(0.0).sqrt() / grid.h1).floor() as isize;
                (dj, di_max)
            })
            .collect();
        Self { rows }
    }
}

/// Lazy cache of midpoint model data. Every update segment joins two mesh
/// nodes, so its midpoint lies on the half-step lattice of size
/// `(2 nx - 1) x (2 ny - 1)`; entries hold `[b_x, b_y, a11, a12, a22]` with
/// `a11 = NaN` marking an unfilled slot. Enabled only while the lattice fits
/// in a modest memory budget.
struct MidpointCache {
    ncols: usize,
    data: Vec<[f64; 5]>,
}

impl MidpointCache {
    const MAX_ENTRIES: usize = 12_000_000;

    fn new(grid: &Grid) -> Option<Self> {
        let ncols = 2 * grid.nx - 1;
        let nrows = 2 * grid.ny - 1;
        let n = ncols.checked_mul(nrows)?;
        (n <= Self::MAX_ENTRIES).then(|| Self { ncols, data: vec![[0.0, 0.0, f64::NAN, 0.0, 0.0]; n] })
    }
}

/// Sorted column lists per mesh row; lets the disc sweeps enumerate only the
/// nodes of one label class instead of scanning every node in the disc.
struct RowIndex {
    rows: Vec<Vec<u32>>,
}

impl RowIndex {
    fn new(ny: usize) -> Self {
        Self { rows: vec![Vec::new(); ny] }
    }

    fn insert(&mut self, i: usize, j: usize) {
        let row = &mut self.rows[j];
        let pos = row.partition_point(|&c| c < i as u32);
        row.insert(pos, i as u32);
    }

    fn remove(&mut self, i: usize, j: usize) {
        let row = &mut self.rows[j];
        let pos = row.partition_point(|&c| c < i as u32);
        debug_assert_eq!(row.get(pos), Some(&(i as u32)));
        row.remove(pos);
    }

    /// Columns within `[ilo, ihi]` of row `j`, ascending.
    fn range(&self, j: usize, ilo: isize, ihi: isize) -> &[u32] {
        let row = &self.rows[j];
        let lo = row.partition_point(|&c| (c as isize) < ilo);
        let hi = row.partition_point(|&c| c as isize <= ihi);
        &row[lo..hi]
    }
}

struct Sweep<'m, M: Model + ?Sized> {
    model: &'m M,
    grid: Grid,
    k: usize,
    u: Vec<f64>,
    label: Vec<Label>,
    heap: IndexedMinHeap,
    stencil: UpdateStencil,
    stats: SolverStats,
    degenerate_area: f64,
    cache: Option<MidpointCache>,
    considered_idx: RowIndex,
    front_idx: RowIndex,
}

impl<'m, M: Model + ?Sized> Sweep<'m, M> {
    fn new(model: &'m M, grid: Grid, k: usize) -> Self {
        let n = grid.n_nodes();
        Self {
            model,
            grid,
            k,
            u: vec![f64::INFINITY; n],
            label: vec![Label::Unknown; n],
            heap: IndexedMinHeap::new(n),
            stencil: UpdateStencil::new(&grid, k),
            stats: SolverStats::default(),
            degenerate_area: 1e-12 * grid.h * grid.h,
            cache: MidpointCache::new(&grid),
            considered_idx: RowIndex::new(grid.ny),
            front_idx: RowIndex::new(grid.ny),
        }
    }

    fn set_considered(&mut self, node: usize, value: f64) {
        debug_assert_eq!(self.label[node], Label::Unknown);
        self.label[node] = Label::Considered;
        self.u[node] = value;
        let (i, j) = self.grid.ij(node);
        self.considered_idx.insert(i, j);
        self.heap.insert(node, value);
        self.stats.heap_inserts += 1;
    }

    fn init_near_equilibrium(&mut self, x0: Vec2) -> Result<()> {
        if !self.grid.domain.contains(x0) {
            return Err(Error::AttractorOutsideDomain { at: x0 });
        }
        require_stable(self.model, x0)?;
        let qp = linear_quasipotential_matrix(&self.model.jacobian(x0), &self.model.sigma(x0))?;

        let g = &self.grid;
        let fi = (x0.x - g.domain.xmin) / g.h1;
        let fj = (x0.y - g.domain.ymin) / g.h2;
        let on_node =
            (fi - fi.round()).abs() < 1e-9 && (fj - fj.round()).abs() < 1e-9;
        let nodes: Vec<usize> = if on_node {
            // x0 sits on a mesh node: its eight nearest neighbors.
            let node = g.index(fi.round() as usize, fj.round() as usize);
            g.neighbors8(node).collect()
        } else {
            // The four corners of the cell containing x0.
            let i0 = (fi.floor() as usize).min(g.nx - 2);
            let j0 = (fj.floor() as usize).min(g.ny - 2);
            vec![
                g.index(i0, j0),
                g.index(i0 + 1, j0),
                g.index(i0, j0 + 1),
                g.index(i0 + 1, j0 + 1),
            ]
        };
        for node in nodes {
            let value = qp.evaluate(x0, self.grid.position(node));
            self.set_considered(node, value);
        }
        Ok(())
    }

    fn init_from_point_set(&mut self, points: &[Vec2]) -> Result<()> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(
                "point-set attractor needs at least 2 samples".into(),
            ));
        }
        let g = self.grid;
        let radius = self.k as f64 * g.h;
        let mut best: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        for &y in points {
            let ilo = (((y.x - radius) - g.domain.xmin) / g.h1).ceil().max(0.0) as usize;
            let ihi = ((((y.x + radius) - g.domain.xmin) / g.h1).floor() as isize)
                .clamp(-1, g.nx as isize - 1);
            let jlo = (((y.y - radius) - g.domain.ymin) / g.h2).ceil().max(0.0) as usize;
            let jhi = ((((y.y + radius) - g.domain.ymin) / g.h2).floor() as isize)
                .clamp(-1, g.ny as isize - 1);
            if ihi < 0 || jhi < 0 {
                continue;
            }
            for j in jlo..=jhi as usize {
                for i in ilo..=ihi as usize {
                    let node = g.index(i, j);
                    let p = g.position(node);
                    if (p - y).norm() > radius {
                        continue;
                    }
                    let action = crate::action::geometric_action_segment(y, p, self.model)?;
                    best.entry(node)
                        .and_modify(|v| *v = v.min(action))
                        .or_insert(action);
                }
            }
        }
        if best.is_empty() {
            return Err(Error::EmptyInitialization);
        }
        let mut nodes: Vec<_> = best.into_iter().collect();
        nodes.sort_by_key(|&(n, _)| n);
        for (node, value) in nodes {
            self.set_considered(node, value);
        }
        Ok(())
    }

    /// Midpoint data `(b, A)` for the segment `[y, x]`.
    #[inline]
    fn midpoint_data(&self, y: Vec2, x: Vec2) -> Result<(Vec2, Mat2)> {
        let m = 0.5 * (y + x);
        let (b, sigma) = self.model.drift_sigma(m);
        Ok((b, covariance_inverse_of(&sigma, m)?))
    }

    /// Midpoint data for the segment joining two mesh nodes, via the
    /// half-lattice cache when enabled.
    #[inline]
    fn midpoint_nodes(&mut self, y: usize, x: usize) -> Result<(Vec2, Mat2)> {
        let Some(cache) = self.cache.as_mut() else {
            return self.midpoint_data(self.grid.position(y), self.grid.position(x));
        };
        let (iy, jy) = self.grid.ij(y);
        let (ix, jx) = self.grid.ij(x);
        let slot = (jy + jx) * cache.ncols + iy + ix;
        let e = &mut cache.data[slot];
        if e[2].is_nan() {
            let m = 0.5 * (self.grid.position(y) + self.grid.position(x));
            let (b, sigma) = self.model.drift_sigma(m);
            let a = covariance_inverse_of(&sigma, m)?;
            *e = [b.x, b.y, a[(0, 0)], a[(0, 1)], a[(1, 1)]];
        }
        Ok((Vec2::new(e[0], e[1]), Mat2::new(e[2], e[3], e[3], e[4])))
    }

    /// One-point update value from precomputed midpoint data.
    #[inline]
    fn one_point_from(&self, y: Vec2, x: Vec2, u0: f64, bm: Vec2, am: &Mat2) -> Result<f64> {
        let d = x - y;
        Ok(u0 + a_norm(d, am)? * a_norm(bm, am)? - crate::action::a_inner(d, bm, am))
    }

    /// Triangle update from the accepted pair `(x0, x1)` at `x`, reusing the
    /// `[x0, x]` midpoint data. `None` for degenerate triangles or when no
    /// interior minimizer exists.
    #[allow(clippy::too_many_arguments)]
    fn triangle_from(
        &mut self,
        x0: Vec2,
        x1: Vec2,
        x: Vec2,
        u0: f64,
        u1: f64,
        b_m0: Vec2,
        a_m0: Mat2,
        y1: usize,
        node: usize,
    ) -> Result<Option<f64>> {
        let e0 = x1 - x0;
        let e1 = x - x0;
        if (e0.x * e1.y - e0.y * e1.x).abs() < self.degenerate_area {
            self.stats.degenerate_triangles += 1;
            return Ok(None);
        }
        let (b_m1, a_m1) = self.midpoint_nodes(y1, node)?;
        let problem = TriangleUpdateProblem { x0, x1, x, u0, u1, b_m0, b_m1, a_m0, a_m1 };
        self.stats.triangle_solves += 1;
        match problem.solve() {
            Ok(v) => Ok(v),
            Err(e) => {
                self.stats.root_failures += 1;
                Err(e)
            }
        }
    }

    /// Lower the tentative value of a Considered node.
    fn improve(&mut self, node: usize, value: f64) {
        if value < self.u[node] {
            self.u[node] = value;
            self.heap.decrease_key(node, value);
            self.stats.heap_decreases += 1;
        }
    }

    /// Collect the AcceptedFront members of the 8-neighborhood of `node`.
    fn accepted_front_neighbors(&self, node: usize) -> Vec<(usize, Vec2, f64)> {
        self.grid
            .neighbors8(node)
            .filter(|&n| self.label[n] == Label::AcceptedFront)
            .map(|n| (n, self.grid.position(n), self.u[n]))
            .collect()
    }

    /// Algorithm step 2: retire AcceptedFront nodes around (and including)
    /// `x0` that no longer touch Considered or Unknown nodes.
    fn retire_around(&mut self, x0: usize) {
        let candidates: Vec<usize> = std::iter::once(x0)
            .chain(self.grid.neighbors8(x0))
            .filter(|&n| self.label[n] == Label::AcceptedFront)
            .collect();
        for cand in candidates {
            let done = self
                .grid
                .neighbors8(cand)
                .all(|n| self.label[n] >= Label::AcceptedFront);
            if done {
                self.label[cand] = Label::Accepted;
                let (i, j) = self.grid.ij(cand);
                self.front_idx.remove(i, j);
            }
        }
    }

    /// Algorithm step 3: update every Considered node within the update
    /// radius of the newly accepted `x0`.
    fn update_considered_around(&mut self, x0: usize) -> Result<()> {
        let (i0, j0) = self.grid.ij(x0);
        let (i0, j0) = (i0 as isize, j0 as isize);
        let p0 = self.grid.position(x0);
        let u0 = self.u[x0];
        let af = self.accepted_front_neighbors(x0);
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        for ri in 0..self.stencil.rows.len() {
            let (dj, di_max) = self.stencil.rows[ri];
            let j = j0 + dj;
            if j < 0 || j >= ny {
                continue;
            }
            let ilo = (i0 - di_max).max(0);
            let ihi = (i0 + di_max).min(nx - 1);
            let row = (j * nx) as usize;
            let cols: smallvec::SmallVec<[u32; 32]> =
                self.considered_idx.range(j as usize, ilo, ihi).iter().copied().collect();
            for i in cols {
                let node = row + i as usize;
                debug_assert_eq!(self.label[node], Label::Considered);
                let x = self.grid.position(node);
                let (b_m0, a_m0) = self.midpoint_nodes(x0, node)?;
                self.stats.one_point_updates += 1;
                let mut best = self.one_point_from(p0, x, u0, b_m0, &a_m0)?;
                for &(n1, p1, u1) in &af {
                    if let Some(q) = self.triangle_from(p0, p1, x, u0, u1, b_m0, a_m0, n1, node)? {
                        best = best.min(q);
                    }
                }
                self.improve(node, best);
            }
        }
        Ok(())
    }

    /// Hierarchical update for a node freshly promoted to Considered: scan
    /// all AcceptedFront nodes within the radius by one-point updates, then
    /// run triangle updates only around the one-point minimizer.
    fn hierarchical_value(&mut self, node: usize) -> Result<f64> {
        let (ic, jc) = self.grid.ij(node);
        let (ic, jc) = (ic as isize, jc as isize);
        let x = self.grid.position(node);
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);

        let mut best = f64::INFINITY;
        let mut minimizer: Option<usize> = None;
        for ri in 0..self.stencil.rows.len() {
            let (dj, di_max) = self.stencil.rows[ri];
            let j = jc + dj;
            if j < 0 || j >= ny {
                continue;
            }
            let ilo = (ic - di_max).max(0);
            let ihi = (ic + di_max).min(nx - 1);
            let row = (j * nx) as usize;
            let cols: smallvec::SmallVec<[u32; 32]> =
                self.front_idx.range(j as usize, ilo, ihi).iter().copied().collect();
            for i in cols {
                let y = row + i as usize;
                debug_assert_eq!(self.label[y], Label::AcceptedFront);
                self.stats.one_point_updates += 1;
                let (bm, am) = self.midpoint_nodes(y, node)?;
                let q = self.one_point_from(self.grid.position(y), x, self.u[y], bm, &am)?;
                if q < best {
                    best = q;
                    minimizer = Some(y);
                }
            }
        }
        if let Some(y0) = minimizer {
            let p0 = self.grid.position(y0);
            let u0 = self.u[y0];
            let (b_m0, a_m0) = self.midpoint_nodes(y0, node)?;
            for (n1, p1, u1) in self.accepted_front_neighbors(y0) {
                if let Some(q) = self.triangle_from(p0, p1, x, u0, u1, b_m0, a_m0, n1, node)? {
                    best = best.min(q);
                }
            }
        }
        Ok(best)
    }

    fn run(&mut self, policy: BoundaryPolicy) -> Result<Vec<usize>> {
        if self.heap.is_empty() {
            return Err(Error::EmptyInitialization);
        }
        let mut accept_order = Vec::new();
        while let Some((x0, _)) = self.heap.extract_min() {
            self.stats.heap_extracts += 1;
            self.label[x0] = Label::AcceptedFront;
            let (i, j) = self.grid.ij(x0);
            self.considered_idx.remove(i, j);
            self.front_idx.insert(i, j);
            accept_order.push(x0);
            if policy == BoundaryPolicy::StopOnBoundary && self.grid.is_boundary(x0) {
                break;
            }
            self.retire_around(x0);
            self.update_considered_around(x0)?;
            let unknown: Vec<usize> = self
                .grid
                .neighbors8(x0)
                .filter(|&n| self.label[n] == Label::Unknown)
                .collect();
            for node in unknown {
                self.label[node] = Label::Considered;
                let (i, j) = self.grid.ij(node);
                self.considered_idx.insert(i, j);
                let value = self.hierarchical_value(node)?;
                self.u[node] = value;
                self.heap.insert(node, value);
                self.stats.heap_inserts += 1;
            }
        }
        Ok(accept_order)
    }
}

/// Run the sweep for `model` under `config`.
pub fn solve<M: Model + ?Sized>(model: &M, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let start = Instant::now();
    let grid = Grid::new(config.nx, config.ny, config.domain)?;
    let mut sweep = Sweep::new(model, grid, config.k);
    let attractor_point = match model.attractor().clone() {
        AttractorSpec::StablePoint(x0) => {
            sweep.init_near_equilibrium(x0)?;
            Some(x0)
        }
        AttractorSpec::PointSet(points) => {
            sweep.init_from_point_set(&points)?;
            None
        }
    };
    let accept_order = sweep.run(config.boundary_policy)?;
    let mut stats = std::mem::take(&mut sweep.stats);
    stats.wall_time = start.elapsed();
    Ok(SolveResult {
        grid,
        u: sweep.u,
        label: sweep.label,
        accept_order,
        stats,
        attractor_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rotation_scaled_sigma;

    #[test]
    fn rule_of_thumb_values() {
        assert_eq!(rule_of_thumb_k(128), 10);
        assert_eq!(rule_of_thumb_k(2048), 26);
        assert_eq!(rule_of_thumb_k(4096), 30);
        assert_eq!(rule_of_thumb_k(512), 18);
    }

    #[test]
    fn qp_matrix_gradient_system() {
        let qp = linear_quasipotential_matrix(&(-Mat2::identity()), &Mat2::identity()).unwrap();
        assert!((qp.m - Mat2::identity()).norm() < 1e-14);
    }

    #[test]
    fn qp_matrix_passes_identity_for_rotational_field() {
        let j = Mat2::new(-2.0, -10.0, 20.0, -1.0);
        // Success implies the internal Hamilton-Jacobi identity held to 1e-10.
        let qp = linear_quasipotential_matrix(&j, &Mat2::identity()).unwrap();
        assert!(qp.m.determinant() > 0.0 && qp.m[(0, 0)] > 0.0, "M must be positive definite");
    }

    #[test]
    fn qp_matrix_differs_from_naive_rescaling() {
        // With a non-orthogonal Sigma, M != (Sigma Sigma')^{-1} M_iso.
        let j = Mat2::new(-2.0, -10.0, 20.0, -1.0);
        let sigma = rotation_scaled_sigma(0.4, 2.0, false).unwrap();
        let m = linear_quasipotential_matrix(&j, &sigma).unwrap().m;
        let m_iso = linear_quasipotential_matrix(&j, &Mat2::identity()).unwrap().m;
        let naive = (sigma * sigma.transpose()).try_inverse().unwrap() * m_iso;
        assert!((m - naive).norm() > 1e-3 * m.norm());
    }

    #[test]
    fn qp_matrix_rejects_unstable_jacobian() {
        let j = Mat2::new(1.0, 0.0, 0.0, -1.0);
        assert!(linear_quasipotential_matrix(&j, &Mat2::identity()).is_err());
    }
}
