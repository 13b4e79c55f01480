//! Signed measures on the space-time cylinder, stored by components:
//! a density with respect to the reference measure, time slices
//! `delta_s (x) g.m`, and per-cell atoms. The rate form is the discrete
//! occupation-density correspondence: paths accumulate density values in
//! path time, an atom of mass `w` in cell `(i, j)` accumulates at rate
//! `w / (m_j dt_i)` while the chain sits at `j` during that cell, and a
//! slice fires as a jump when the path is alive at the slice time.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpaceTimeGrid};

/// Point mass on one space-time cell `[t_step, t_{step+1}) x {node}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub step: usize,
    pub node: usize,
    pub mass: f64,
}

/// Signed measure on `[0, T] x nodes` by non-overlapping components.
#[derive(Debug, Clone)]
pub struct MeasureData {
    grid: Arc<SpaceTimeGrid>,
    density: Option<SpaceTimeField>,
    time_slices: Vec<(f64, Vec<f64>)>,
    atoms: Vec<Atom>,
}

impl MeasureData {
    pub fn zero(grid: &Arc<SpaceTimeGrid>) -> Self {
        Self { grid: Arc::clone(grid), density: None, time_slices: Vec::new(), atoms: Vec::new() }
    }

    pub fn from_density(density: SpaceTimeField) -> Self {
        let grid = Arc::clone(density.grid());
        Self { grid, density: Some(density), time_slices: Vec::new(), atoms: Vec::new() }
    }

    /// Add the slice `delta_s (x) g.m`; `s` must lie in `(0, T]`.
    pub fn add_slice(&mut self, s: f64, g: Vec<f64>) -> Result<()> {
        if !(s > 0.0 && s <= self.grid.horizon()) {
            return Err(Error::Validation(format!("slice time {s} outside (0, T]")));
        }
        if g.len() != self.grid.n_nodes() {
            return Err(Error::Shape("slice vector length != node count".into()));
        }
        self.time_slices.push((s, g));
        Ok(())
    }

    pub fn add_atom(&mut self, step: usize, node: usize, mass: f64) -> Result<()> {
        if step >= self.grid.n_steps() || node >= self.grid.n_nodes() {
            return Err(Error::Validation(format!("atom cell ({step}, {node}) out of range")));
        }
        if !mass.is_finite() {
            return Err(Error::Validation("atom mass must be finite".into()));
        }
        self.atoms.push(Atom { step, node, mass });
        Ok(())
    }

    pub fn grid(&self) -> &Arc<SpaceTimeGrid> {
        &self.grid
    }

    pub fn density(&self) -> Option<&SpaceTimeField> {
        self.density.as_ref()
    }

    pub fn time_slices(&self) -> &[(f64, Vec<f64>)] {
        &self.time_slices
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.density.is_none() && self.time_slices.is_empty() && self.atoms.is_empty()
    }

    /// Componentwise sum of variations: density by space-time quadrature,
    /// slices by their spatial mass, atoms by |mass|.
    pub fn total_variation(&self) -> f64 {
        let mut tv = self.density.as_ref().map_or(0.0, |d| d.l1_norm());
        let m = self.grid.cell_measure();
        for (_, g) in &self.time_slices {
            tv += g.iter().zip(m).map(|(v, mm)| v.abs() * mm).sum::<f64>();
        }
        tv += self.atoms.iter().map(|a| a.mass.abs()).sum::<f64>();
        tv
    }

    /// Componentwise absolute value `|mu|`.
    pub fn abs(&self) -> Self {
        let mut out = self.clone();
        if let Some(d) = &mut out.density {
            for i in 0..=self.grid.n_steps() {
                for j in 0..self.grid.n_nodes() {
                    let v = d.at(i, j);
                    d.set(i, j, v.abs());
                }
            }
        }
        for (_, g) in &mut out.time_slices {
            for v in g.iter_mut() {
                *v = v.abs();
            }
        }
        for a in &mut out.atoms {
            a.mass = a.mass.abs();
        }
        out
    }

    pub fn is_nonnegative(&self) -> bool {
        self.density.as_ref().map_or(true, |d| d.values().iter().all(|&v| v >= 0.0))
            && self.time_slices.iter().all(|(_, g)| g.iter().all(|&v| v >= 0.0))
            && self.atoms.iter().all(|a| a.mass >= 0.0)
    }

    pub fn scale(&mut self, c: f64) {
        if let Some(d) = &mut self.density {
            d.scale(c);
        }
        for (_, g) in &mut self.time_slices {
            for v in g.iter_mut() {
                *v *= c;
            }
        }
        for a in &mut self.atoms {
            a.mass *= c;
        }
    }

    /// Componentwise sum; the components stay separate (no cancellation
    /// across kinds).
    pub fn add(&mut self, other: &MeasureData) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch("measures live on different grids".into()));
        }
        match (&mut self.density, &other.density) {
            (Some(a), Some(b)) => a.add(b)?,
            (None, Some(b)) => self.density = Some(b.clone()),
            _ => {}
        }
        self.time_slices.extend(other.time_slices.iter().cloned());
        self.atoms.extend(other.atoms.iter().copied());
        Ok(())
    }

    /// Pointwise ordering `self <= other`, checked per component kind.
    /// Requires matching slice times and atom cells; unmatched pieces are
    /// compared against zero.
    pub fn le(&self, other: &MeasureData) -> bool {
        let m = self.grid.n_steps();
        let n = self.grid.n_nodes();
        for i in 0..=m {
            for j in 0..n {
                let a = self.density.as_ref().map_or(0.0, |d| d.at(i, j));
                let b = other.density.as_ref().map_or(0.0, |d| d.at(i, j));
                if a > b + 1e-14 {
                    return false;
                }
            }
        }
        let slice_at = |mu: &MeasureData, s: f64, j: usize| -> f64 {
            mu.time_slices
                .iter()
                .filter(|(t, _)| (*t - s).abs() < 1e-12)
                .map(|(_, g)| g[j])
                .sum()
        };
        let mut slice_times: Vec<f64> =
            self.time_slices.iter().chain(&other.time_slices).map(|(s, _)| *s).collect();
        slice_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        slice_times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for s in slice_times {
            for j in 0..n {
                if slice_at(self, s, j) > slice_at(other, s, j) + 1e-14 {
                    return false;
                }
            }
        }
        let atom_at = |mu: &MeasureData, step: usize, node: usize| -> f64 {
            mu.atoms.iter().filter(|a| a.step == step && a.node == node).map(|a| a.mass).sum()
        };
        for a in self.atoms.iter().chain(&other.atoms) {
            if atom_at(self, a.step, a.node) > atom_at(other, a.step, a.node) + 1e-14 {
                return false;
            }
        }
        true
    }
}

/// Occupation-rate form of a measure: what a path accumulates per unit of
/// time spent at a node, plus the jump events from slices.
#[derive(Debug, Clone)]
pub struct RevuzRates {
    grid: Arc<SpaceTimeGrid>,
    /// Piecewise-linear-in-time rate from the density component.
    density: Option<SpaceTimeField>,
    /// Constant per-cell rate from atoms, `step * n_nodes + node`.
    cell_rate: Vec<f64>,
    slices: Vec<(f64, Vec<f64>)>,
}

pub fn to_revuz_rates(mu: &MeasureData) -> RevuzRates {
    let grid = Arc::clone(mu.grid());
    let n = grid.n_nodes();
    let mut cell_rate = vec![0.0; grid.n_steps() * n];
    for a in mu.atoms() {
        cell_rate[a.step * n + a.node] += a.mass / (grid.cell_measure()[a.node] * grid.dt(a.step));
    }
    RevuzRates {
        grid,
        density: mu.density().cloned(),
        cell_rate,
        slices: mu.time_slices().to_vec(),
    }
}

impl RevuzRates {
    pub fn zero(grid: &Arc<SpaceTimeGrid>) -> Self {
        to_revuz_rates(&MeasureData::zero(grid))
    }

    pub fn grid(&self) -> &Arc<SpaceTimeGrid> {
        &self.grid
    }

    pub fn slices(&self) -> &[(f64, Vec<f64>)] {
        &self.slices
    }

    pub fn cell_rate(&self, step: usize, node: usize) -> f64 {
        self.cell_rate[step * self.grid.n_nodes() + node]
    }

    pub fn is_zero(&self) -> bool {
        self.density.is_none()
            && self.cell_rate.iter().all(|&r| r == 0.0)
            && self.slices.is_empty()
    }

    /// Exact integral of the accumulation rate at `node` over the absolute
    /// time window `[t0, t1]` (density interpolated linearly, atoms
    /// constant per cell).
    pub fn occupation_integral(&self, node: usize, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let mut total = 0.0;
        let m = self.grid.n_steps();
        for i in 0..m {
            let a = t0.max(self.grid.time(i));
            let b = t1.min(self.grid.time(i + 1));
            if b <= a {
                continue;
            }
            if let Some(d) = &self.density {
                // linear in t on the step: trapezoid of the interpolated
                // endpoint values is exact
                total += 0.5 * (d.interp(a, node) + d.interp(b, node)) * (b - a);
            }
            total += self.cell_rate[i * self.grid.n_nodes() + node] * (b - a);
        }
        total
    }

    /// Exact inverse of the rate construction.
    pub fn to_measure(&self) -> Result<MeasureData> {
        let mut mu = match &self.density {
            Some(d) => MeasureData::from_density(d.clone()),
            None => MeasureData::zero(&self.grid),
        };
        let n = self.grid.n_nodes();
        for step in 0..self.grid.n_steps() {
            for node in 0..n {
                let r = self.cell_rate[step * n + node];
                if r != 0.0 {
                    mu.add_atom(step, node, r * self.grid.cell_measure()[node] * self.grid.dt(step))?;
                }
            }
        }
        for (s, g) in &self.slices {
            mu.add_slice(*s, g.clone())?;
        }
        Ok(mu)
    }
}

/// Membership report for the bounded / path-integrable / quasi-integrable
/// measure classes, with the potential profile that makes refinement
/// divergence observable.
#[derive(Debug, Clone)]
pub struct Classification {
    pub in_m0b: bool,
    pub in_r: bool,
    pub in_ql1: bool,
    /// Sup over the grid of the potential of `|mu|`.
    pub potential_sup: f64,
    /// Capacities of the excised tubes of the nest, outermost first.
    pub nest_capacities: Vec<f64>,
}

/// Classify a measure against a generator family: bounded variation,
/// finite potential everywhere, and the shrinking-nest quasi-integrability
/// construction (excise neighborhoods of the worst-density node, check the
/// restricted measure is integrable while the excised tube's capacity
/// decreases).
pub fn classify(mu: &MeasureData, gen: &crate::operators::GeneratorFamily) -> Result<Classification> {
    let grid = mu.grid();
    let tv = mu.total_variation();
    let in_m0b = tv.is_finite();

    let abs_mu = mu.abs();
    let potential = crate::linear::potential(gen, &abs_mu)?;
    let in_r = potential.is_finite();
    let potential_sup = potential.sup_norm();

    // Nest: excise balls around the node with the largest density peak.
    let mut nest_capacities = Vec::new();
    let mut in_ql1 = true;
    if let Some(d) = mu.density() {
        let n = grid.n_nodes();
        let peak = (0..n)
            .max_by(|&a, &b| {
                let sa = (0..=grid.n_steps()).map(|i| d.at(i, a).abs()).fold(0.0f64, f64::max);
                let sb = (0..=grid.n_steps()).map(|i| d.at(i, b).abs()).fold(0.0f64, f64::max);
                sa.partial_cmp(&sb).unwrap()
            })
            .unwrap();
        let diam = grid.diameter();
        for level in 1..=4 {
            let radius = 0.5 * diam * 0.5f64.powi(level);
            let excised: Vec<usize> =
                (0..n).filter(|&j| grid.distance(peak, j) < radius).collect();
            // restricted measure is a bounded density on finitely many
            // nodes, hence integrable; the content is the capacity decay
            let cells: Vec<(usize, usize)> = (0..grid.n_steps())
                .flat_map(|i| excised.iter().map(move |&j| (i, j)))
                .collect();
            let cap = crate::process::capacity_exact(gen, &cells, &vec![1.0; n])?;
            nest_capacities.push(cap);
        }
        for w in nest_capacities.windows(2) {
            if w[1] > w[0] + 1e-12 {
                in_ql1 = false;
            }
        }
    }

    Ok(Classification { in_m0b, in_r, in_ql1, potential_sup, nest_capacities })
}
