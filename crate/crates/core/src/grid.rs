//! Discretized state space, time mesh, and measure-weighted inner products.
//!
//! The spatial grid carries per-node cell measures `m_j`; the time mesh
//! `0 = t_0 < ... < t_M = T` carries trapezoid quadrature weights. All
//! space and space-time inner products used by the solvers live here.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Spatial nodes with cell measures plus a time mesh on `[0, T]`.
///
/// Nodes flagged in `boundary_mask` are killing states: they take no part
/// in the dynamics and fields are held at zero there.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    positions: Vec<[f64; 2]>,
    dim: usize,
    cell_measure: Vec<f64>,
    boundary_mask: Vec<bool>,
    times: Vec<f64>,
}

impl SpaceTimeGrid {
    /// Grid from explicit parts. Positions are 1D or 2D points (second
    /// coordinate zero in 1D).
    pub fn custom(
        positions: Vec<[f64; 2]>,
        dim: usize,
        cell_measure: Vec<f64>,
        boundary_mask: Vec<bool>,
        times: Vec<f64>,
    ) -> Result<Arc<Self>> {
        if positions.len() != cell_measure.len() || positions.len() != boundary_mask.len() {
            return Err(Error::Shape("positions/measures/mask lengths differ".into()));
        }
        if cell_measure.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::Validation("cell measures must be positive and finite".into()));
        }
        if times.len() < 2 {
            return Err(Error::Validation("time mesh needs at least two points".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Validation("time mesh must start at 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("time mesh must be strictly increasing".into()));
        }
        if boundary_mask.iter().filter(|&&b| !b).count() == 0 {
            return Err(Error::Validation("need at least one interior node".into()));
        }
        Ok(Arc::new(Self { positions, dim, cell_measure, boundary_mask, times }))
    }

    /// Interior nodes of an interval `(xmin, xmax)` with `n` equispaced
    /// nodes, Dirichlet killing at both ends, uniform time mesh.
    pub fn interval(xmin: f64, xmax: f64, n: usize, horizon: f64, steps: usize) -> Result<Arc<Self>> {
        if !(xmax > xmin) || n == 0 {
            return Err(Error::Validation("interval grid needs xmax > xmin and n >= 1".into()));
        }
        let h = (xmax - xmin) / (n as f64 + 1.0);
        let positions = (0..n).map(|j| [xmin + h * (j as f64 + 1.0), 0.0]).collect();
        Self::custom(positions, 1, vec![h; n], vec![false; n], uniform_mesh(horizon, steps)?)
    }

    /// Interior nodes of a 2D box, row-major over `(nx, ny)`, Dirichlet
    /// killing on all sides.
    pub fn box2(
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
        nx: usize,
        ny: usize,
        horizon: f64,
        steps: usize,
    ) -> Result<Arc<Self>> {
        if !(xmax > xmin && ymax > ymin) || nx == 0 || ny == 0 {
            return Err(Error::Validation("box grid needs positive extents and node counts".into()));
        }
        let hx = (xmax - xmin) / (nx as f64 + 1.0);
        let hy = (ymax - ymin) / (ny as f64 + 1.0);
        let mut positions = Vec::with_capacity(nx * ny);
        // row-major: index = iy * nx + ix
        for iy in 0..ny {
            for ix in 0..nx {
                positions.push([xmin + hx * (ix as f64 + 1.0), ymin + hy * (iy as f64 + 1.0)]);
            }
        }
        let n = nx * ny;
        Self::custom(positions, 2, vec![hx * hy; n], vec![false; n], uniform_mesh(horizon, steps)?)
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    /// Number of time steps `M` (mesh has `M + 1` points).
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn dt(&self, step: usize) -> f64 {
        self.times[step + 1] - self.times[step]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, j: usize) -> [f64; 2] {
        self.positions[j]
    }

    pub fn cell_measure(&self) -> &[f64] {
        &self.cell_measure
    }

    pub fn is_boundary(&self, j: usize) -> bool {
        self.boundary_mask[j]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn distance(&self, j: usize, k: usize) -> f64 {
        let a = self.positions[j];
        let b = self.positions[k];
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// Largest pairwise node distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..self.n_nodes() {
            for k in (j + 1)..self.n_nodes() {
                d = d.max(self.distance(j, k));
            }
        }
        d
    }

    /// Smallest node spacing, used as the inner truncation radius of jump
    /// kernels.
    pub fn min_spacing(&self) -> f64 {
        let mut d = f64::INFINITY;
        for j in 0..self.n_nodes() {
            for k in (j + 1)..self.n_nodes() {
                d = d.min(self.distance(j, k));
            }
        }
        d
    }

    /// Trapezoid weights of the time mesh: `w_0 = dt_0/2`, interior
    /// `w_i = (dt_{i-1} + dt_i)/2`, `w_M = dt_{M-1}/2`.
    pub fn time_weights(&self) -> Vec<f64> {
        let m = self.n_steps();
        let mut w = vec![0.0; m + 1];
        for i in 0..m {
            let dt = self.dt(i);
            w[i] += 0.5 * dt;
            w[i + 1] += 0.5 * dt;
        }
        w
    }

    /// Index of the time step whose cell `[t_i, t_{i+1})` contains `t`
    /// (clamped to the last step for `t >= T`).
    pub fn step_of(&self, t: f64) -> usize {
        let m = self.n_steps();
        for i in 0..m {
            if t < self.times[i + 1] {
                return i;
            }
        }
        m - 1
    }

    pub fn total_mass(&self) -> f64 {
        self.cell_measure.iter().sum()
    }
}

/// Uniform time mesh with `steps` steps on `[0, horizon]`.
pub fn uniform_mesh(horizon: f64, steps: usize) -> Result<Vec<f64>> {
    if !(horizon > 0.0) || steps == 0 {
        return Err(Error::Validation("horizon must be positive, steps >= 1".into()));
    }
    let mut t: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
    t[steps] = horizon;
    Ok(t)
}

/// `m`-weighted inner product `sum_j u_j v_j m_j`.
pub fn m_inner(u: &[f64], v: &[f64], grid: &SpaceTimeGrid) -> Result<f64> {
    if u.len() != v.len() || u.len() != grid.n_nodes() {
        return Err(Error::Shape(format!(
            "m_inner: lengths {} / {} vs {} nodes",
            u.len(),
            v.len(),
            grid.n_nodes()
        )));
    }
    Ok(u.iter().zip(v).zip(grid.cell_measure()).map(|((a, b), m)| a * b * m).sum())
}

/// Function on the space-time mesh, stored row-major by time index.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    grid: Arc<SpaceTimeGrid>,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &Arc<SpaceTimeGrid>) -> Self {
        let n = grid.n_nodes() * (grid.n_steps() + 1);
        Self { grid: Arc::clone(grid), values: vec![0.0; n] }
    }

    pub fn constant(grid: &Arc<SpaceTimeGrid>, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.values.fill(c);
        f
    }

    /// Field from a function of `(t, position)`.
    pub fn from_fn(grid: &Arc<SpaceTimeGrid>, mut f: impl FnMut(f64, [f64; 2]) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for i in 0..=grid.n_steps() {
            let t = grid.time(i);
            for j in 0..grid.n_nodes() {
                field.set(i, j, f(t, grid.position(j)));
            }
        }
        field
    }

    pub fn from_slices(grid: &Arc<SpaceTimeGrid>, slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.len() != grid.n_steps() + 1 || slices.iter().any(|s| s.len() != grid.n_nodes()) {
            return Err(Error::Shape("from_slices: wrong shape".into()));
        }
        Ok(Self { grid: Arc::clone(grid), values: slices.concat() })
    }

    pub fn grid(&self) -> &Arc<SpaceTimeGrid> {
        &self.grid
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_nodes() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.grid.n_nodes() + j] = v;
    }

    pub fn time_slice(&self, i: usize) -> &[f64] {
        let n = self.grid.n_nodes();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn time_slice_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.grid.n_nodes();
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn set_time_slice(&mut self, i: usize, v: &[f64]) {
        self.time_slice_mut(i).copy_from_slice(v);
    }

    /// Linear interpolation in time at `(t, node)`.
    pub fn interp(&self, t: f64, j: usize) -> f64 {
        let times = self.grid.times();
        if t <= times[0] {
            return self.at(0, j);
        }
        if t >= *times.last().unwrap() {
            return self.at(self.grid.n_steps(), j);
        }
        let i = self.grid.step_of(t);
        let theta = (t - times[i]) / (times[i + 1] - times[i]);
        self.at(i, j) * (1.0 - theta) + self.at(i + 1, j) * theta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `L^1(m_1)` norm by the space-time trapezoid quadrature.
    pub fn l1_norm(&self) -> f64 {
        let w = self.grid.time_weights();
        let m = self.grid.cell_measure();
        let mut s = 0.0;
        for i in 0..=self.grid.n_steps() {
            let slice = self.time_slice(i);
            s += w[i] * slice.iter().zip(m).map(|(v, mm)| v.abs() * mm).sum::<f64>();
        }
        s
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn add(&mut self, other: &SpaceTimeField) -> Result<()> {
        same_grid(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub(&mut self, other: &SpaceTimeField) -> Result<()> {
        same_grid(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &SpaceTimeField) -> Result<f64> {
        same_grid(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs())))
    }
}

fn same_grid(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<()> {
    if !Arc::ptr_eq(&u.grid, &v.grid) && *u.grid != *v.grid {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    Ok(())
}

/// `L^2(m_1)` pairing of two fields: trapezoid in time of `m_inner` of the
/// time slices.
pub fn spacetime_inner(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<f64> {
    same_grid(u, v)?;
    let w = u.grid.time_weights();
    let mut s = 0.0;
    for i in 0..=u.grid.n_steps() {
        s += w[i] * m_inner(u.time_slice(i), v.time_slice(i), &u.grid)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_node_grid(m: Vec<f64>, times: Vec<f64>) -> Arc<SpaceTimeGrid> {
        SpaceTimeGrid::custom(
            vec![[0.0, 0.0], [1.0, 0.0]],
            1,
            m,
            vec![false, false],
            times,
        )
        .unwrap()
    }

    #[test]
    fn m_inner_unit_functions() {
        let g = two_node_grid(vec![0.5, 0.5], vec![0.0, 1.0]);
        assert_relative_eq!(m_inner(&[1.0, 1.0], &[1.0, 1.0], &g).unwrap(), 1.0);
    }

    #[test]
    fn m_inner_disjoint_supports() {
        let g = two_node_grid(vec![0.3, 1.7], vec![0.0, 1.0]);
        assert_relative_eq!(m_inner(&[1.0, 0.0], &[0.0, 1.0], &g).unwrap(), 0.0);
    }

    #[test]
    fn m_inner_hand_arithmetic() {
        let g = two_node_grid(vec![1.0, 2.0], vec![0.0, 1.0]);
        // 2*1*1 + (-1)*3*2 = -4
        assert_relative_eq!(m_inner(&[2.0, -1.0], &[1.0, 3.0], &g).unwrap(), -4.0);
    }

    #[test]
    fn m_inner_length_mismatch_errors() {
        let g = two_node_grid(vec![1.0, 1.0], vec![0.0, 1.0]);
        assert!(m_inner(&[1.0], &[1.0, 2.0], &g).is_err());
    }

    #[test]
    fn spacetime_inner_unit_mass() {
        let g = two_node_grid(vec![0.5, 0.5], vec![0.0, 0.5, 1.0]);
        let one = SpaceTimeField::constant(&g, 1.0);
        assert_relative_eq!(spacetime_inner(&one, &one).unwrap(), 1.0);
        let zero = SpaceTimeField::zeros(&g);
        assert_relative_eq!(spacetime_inner(&one, &zero).unwrap(), 0.0);
    }

    #[test]
    fn spacetime_inner_linear_in_time_is_exact() {
        // u(t) = t, v = 1, T = 1, unit mass, M = 2 -> 0.5 exactly.
        let g = two_node_grid(vec![0.5, 0.5], vec![0.0, 0.5, 1.0]);
        let u = SpaceTimeField::from_fn(&g, |t, _| t);
        let v = SpaceTimeField::constant(&g, 1.0);
        assert_relative_eq!(spacetime_inner(&u, &v).unwrap(), 0.5);
        // Refining the mesh leaves degree <= 1 time-polynomials unchanged.
        let g4 = two_node_grid(vec![0.5, 0.5], vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let u4 = SpaceTimeField::from_fn(&g4, |t, _| t);
        let v4 = SpaceTimeField::constant(&g4, 1.0);
        assert_relative_eq!(spacetime_inner(&u4, &v4).unwrap(), 0.5);
    }

    #[test]
    fn grid_invariants_rejected() {
        assert!(SpaceTimeGrid::custom(
            vec![[0.0, 0.0]],
            1,
            vec![0.0],
            vec![false],
            vec![0.0, 1.0]
        )
        .is_err());
        assert!(SpaceTimeGrid::custom(
            vec![[0.0, 0.0]],
            1,
            vec![1.0],
            vec![false],
            vec![0.0, 1.0, 0.5]
        )
        .is_err());
        assert!(SpaceTimeGrid::custom(vec![[0.0, 0.0]], 1, vec![1.0], vec![true], vec![0.0, 1.0])
            .is_err());
    }

    #[test]
    fn m_inner_bilinear_symmetric_positive() {
        let g = two_node_grid(vec![0.4, 1.1], vec![0.0, 1.0]);
        let u = [1.3, -0.7];
        let v = [0.2, 2.5];
        let uv = m_inner(&u, &v, &g).unwrap();
        let vu = m_inner(&v, &u, &g).unwrap();
        assert_relative_eq!(uv, vu);
        assert!(m_inner(&u, &u, &g).unwrap() > 0.0);
        assert_relative_eq!(m_inner(&[0.0, 0.0], &[0.0, 0.0], &g).unwrap(), 0.0);
    }
}
