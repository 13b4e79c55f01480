//! Exact simulation of the time-inhomogeneous sub-Markov chain, additive
//! accumulation along paths, and hitting-functional (capacity) estimation.
//!
//! The sampler is bias-free: holding times are exponential clocks per
//! stage, restarted at stage boundaries by memorylessness, so any gap
//! between Monte Carlo and the direct solves is pure variance.

use std::fmt::Write as _;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;
use crate::measures::RevuzRates;
use crate::operators::{GeneratorFamily, RateMatrix};
use crate::propagate;

/// One trajectory of the space-time chain started at `(start_time, node)`.
///
/// Event times are elapsed (path) times, strictly increasing and at most
/// `horizon_clip`; after killing there are no events.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub start_time: f64,
    pub start_node: usize,
    /// `(elapsed time, destination node)` per jump.
    pub events: Vec<(f64, usize)>,
    /// Elapsed lifetime if killed before the horizon; `None` means the
    /// path was alive at the clipped horizon.
    pub killed_at: Option<f64>,
    /// `T - start_time`.
    pub horizon_clip: f64,
}

impl PathSample {
    /// Elapsed time the path actually ran: lifetime clipped at the
    /// remaining horizon.
    pub fn clipped_lifetime(&self) -> f64 {
        self.killed_at.map_or(self.horizon_clip, |z| z.min(self.horizon_clip))
    }

    pub fn survived(&self) -> bool {
        self.killed_at.is_none()
    }

    /// Node occupied at elapsed time `e` (right-continuous at jumps).
    pub fn node_at(&self, e: f64) -> usize {
        let mut node = self.start_node;
        for &(t, k) in &self.events {
            if t <= e {
                node = k;
            } else {
                break;
            }
        }
        node
    }

    /// Holding intervals `(node, from, to)` in elapsed time, up to the
    /// clipped lifetime.
    pub fn sojourns(&self) -> Vec<(usize, f64, f64)> {
        let end = self.clipped_lifetime();
        let mut out = Vec::with_capacity(self.events.len() + 1);
        let mut node = self.start_node;
        let mut from = 0.0;
        for &(t, k) in &self.events {
            if t >= end {
                break;
            }
            if t > from {
                out.push((node, from, t));
            }
            node = k;
            from = t;
        }
        if end > from {
            out.push((node, from, end));
        }
        out
    }

    /// Line-oriented dump for debugging.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "start {} {}", self.start_time, self.start_node);
        for (t, k) in &self.events {
            let _ = writeln!(s, "jump {t} {k}");
        }
        match self.killed_at {
            Some(z) => {
                let _ = writeln!(s, "killed {z}");
            }
            None => {
                let _ = writeln!(s, "survived {}", self.horizon_clip);
            }
        }
        s
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Counter-based stream: reproducible and order-independent under
/// parallelism.
pub fn path_rng(seed: u64, cell: u64, path: u64) -> ChaCha8Rng {
    let s = splitmix64(seed ^ splitmix64(cell ^ splitmix64(path.wrapping_add(1))));
    ChaCha8Rng::seed_from_u64(s)
}

/// Simulate one path from `(start_time, start_node)` until killing or the
/// horizon.
pub fn sample_path(
    gen: &GeneratorFamily,
    start_time: f64,
    start_node: usize,
    rng: &mut impl Rng,
) -> Result<PathSample> {
    let grid = gen.grid();
    let horizon = grid.horizon();
    if !(0.0..horizon).contains(&start_time) {
        return Err(Error::Validation(format!("start time {start_time} outside [0, T)")));
    }
    if start_node >= grid.n_nodes() || grid.is_boundary(start_node) {
        return Err(Error::Validation(format!("invalid start node {start_node}")));
    }
    let clip = horizon - start_time;
    let mut path = PathSample {
        start_time,
        start_node,
        events: Vec::new(),
        killed_at: None,
        horizon_clip: clip,
    };
    let mut node = start_node;
    let mut abs = start_time;
    loop {
        // stage owning the current instant (stage s covers times up to its
        // end; a fresh clock starts at each stage boundary)
        let mut stage = 0;
        while gen.stage_end(stage) <= abs + 1e-15 * horizon.max(1.0) && stage + 1 < gen.n_stages()
        {
            stage += 1;
        }
        let q = gen.stage(stage);
        let stage_end = gen.stage_end(stage).min(horizon);
        let rate = q.exit_rate(node);
        let hold = if rate > 0.0 {
            -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / rate
        } else {
            f64::INFINITY
        };
        if abs + hold >= stage_end {
            // clock survives the stage (or the horizon); restart there
            if stage_end >= horizon {
                return Ok(path);
            }
            abs = stage_end;
            continue;
        }
        abs += hold;
        let elapsed = abs - start_time;
        // jump or kill, proportional to rates
        let mut u = rng.gen::<f64>() * rate;
        let mut target = None;
        for &(k, r) in q.off_row(node) {
            if u < r {
                target = Some(k);
                break;
            }
            u -= r;
        }
        match target {
            Some(k) => {
                path.events.push((elapsed, k));
                node = k;
            }
            None => {
                path.killed_at = Some(elapsed);
                return Ok(path);
            }
        }
    }
}

/// Additive-functional value `A` of `rates` over the elapsed window
/// `(e0, e1]`, clipped at the path's clipped lifetime. Occupation terms
/// integrate exactly; slice jumps fire at elapsed time `s - start` when
/// the path is alive there and the slice lies strictly after the start.
pub fn accumulate_window(path: &PathSample, rates: &RevuzRates, e0: f64, e1: f64) -> f64 {
    let end = path.clipped_lifetime();
    let (e0, e1) = (e0.max(0.0), e1.min(end));
    if e1 <= e0 {
        return accumulate_slices(path, rates, e0, e1);
    }
    let s0 = path.start_time;
    let mut total = 0.0;
    for (node, a, b) in path.sojourns() {
        let (a, b) = (a.max(e0), b.min(e1));
        if b > a {
            total += rates.occupation_integral(node, s0 + a, s0 + b);
        }
    }
    total + accumulate_slices(path, rates, e0, e1)
}

fn accumulate_slices(path: &PathSample, rates: &RevuzRates, e0: f64, e1: f64) -> f64 {
    let s0 = path.start_time;
    let tol = 1e-12 * path.horizon_clip.max(1.0);
    let mut total = 0.0;
    for (s, g) in rates.slices() {
        let e = s - s0;
        // strictly after the start, within the window
        if e <= tol || e <= e0 + tol || e > e1 + tol {
            continue;
        }
        // alive at elapsed e: not yet killed, horizon not passed
        if let Some(z) = path.killed_at {
            if z <= e + tol {
                continue;
            }
        }
        if e > path.horizon_clip + tol {
            continue;
        }
        total += g[path.node_at(e)];
    }
    total
}

/// `A` over the whole clipped lifetime.
pub fn accumulate(path: &PathSample, rates: &RevuzRates) -> f64 {
    accumulate_window(path, rates, 0.0, path.clipped_lifetime())
}

/// Exact hitting functional `E_{(t_i, j)} e^{-S_B}` for every start cell,
/// by backward propagation: within each time step the target rows are
/// frozen at 1 and the free rows evolve under `Q - I` (unit discount in
/// elapsed time).
pub fn hitting_values(gen: &GeneratorFamily, cells: &[(usize, usize)]) -> Result<Vec<Vec<f64>>> {
    let grid = gen.grid();
    let n = grid.n_nodes();
    let m = grid.n_steps();
    let mut in_b = vec![vec![false; n]; m];
    for &(i, j) in cells {
        if i >= m || j >= n {
            return Err(Error::Validation(format!("cell ({i}, {j}) out of range")));
        }
        in_b[i][j] = true;
    }
    let mut values = vec![vec![0.0; n]; m + 1];
    // v(T, .) = 0: the horizon arrives before any hit
    for i in (0..m).rev() {
        let q = gen.at_step(i);
        let mut off = vec![Vec::new(); n];
        let mut diag = vec![0.0; n];
        for j in 0..n {
            if in_b[i][j] {
                continue; // frozen row
            }
            off[j] = q.off_row(j).to_vec();
            diag[j] = q.diag(j) - 1.0;
        }
        let a = RateMatrix::from_rows(off, diag, true)?;
        let mut v = values[i + 1].clone();
        for j in 0..n {
            if in_b[i][j] {
                v[j] = 1.0;
            }
        }
        values[i] = propagate::expmv(&a, grid.dt(i), &v);
        for j in 0..n {
            if in_b[i][j] {
                values[i][j] = 1.0;
            }
        }
    }
    Ok(values)
}

/// Capacity estimate of a space-time cell set.
#[derive(Debug, Clone)]
pub struct CapacityEstimate {
    /// Monte Carlo value of the start-measure-weighted hitting functional.
    pub estimate: f64,
    pub stderr: f64,
    /// Same functional by the backward linear solve.
    pub exact: f64,
    /// Informational variant with start weights `G_1 psi` instead of
    /// `psi`.
    pub exact_h_weighted: f64,
}

/// Start-cell weights `psi_j m_j dt_i` (left-endpoint rule over time
/// cells, boundary nodes excluded).
fn start_weights(grid: &SpaceTimeGrid, psi: &[f64]) -> Vec<((usize, usize), f64)> {
    let mut out = Vec::new();
    for i in 0..grid.n_steps() {
        for j in 0..grid.n_nodes() {
            if grid.is_boundary(j) || psi[j] == 0.0 {
                continue;
            }
            out.push(((i, j), psi[j] * grid.cell_measure()[j] * grid.dt(i)));
        }
    }
    out
}

/// Weighted exact hitting functional against the start measure.
pub fn capacity_exact(
    gen: &GeneratorFamily,
    cells: &[(usize, usize)],
    psi: &[f64],
) -> Result<f64> {
    let grid = gen.grid();
    if psi.len() != grid.n_nodes() {
        return Err(Error::Shape("psi length != node count".into()));
    }
    let v = hitting_values(gen, cells)?;
    Ok(start_weights(grid, psi).iter().map(|&((i, j), w)| w * v[i][j]).sum())
}

/// Monte Carlo capacity with its exact cross-checks. The raw variant
/// weights starts by `psi . m`; the `h`-weighted variant reported
/// alongside uses `G_1 psi`.
pub fn estimate_capacity(
    gen: &GeneratorFamily,
    cells: &[(usize, usize)],
    psi: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    let grid = gen.grid();
    if psi.len() != grid.n_nodes() {
        return Err(Error::Shape("psi length != node count".into()));
    }
    if psi.iter().any(|&p| p < 0.0) {
        return Err(Error::Validation("psi must be nonnegative".into()));
    }
    let n = grid.n_nodes();
    let m = grid.n_steps();
    let mut in_b = vec![vec![false; n]; m];
    for &(i, j) in cells {
        if i >= m || j >= n {
            return Err(Error::Validation(format!("cell ({i}, {j}) out of range")));
        }
        in_b[i][j] = true;
    }
    let exact = capacity_exact(gen, cells, psi)?;
    // h-weighted start measure: G_1 psi with psi constant in time
    let psi_field = crate::grid::SpaceTimeField::from_slices(
        grid,
        vec![psi.to_vec(); m + 1],
    )?;
    let g1psi = crate::linear::resolvent(gen, 1.0, &psi_field)?;
    let v = hitting_values(gen, cells)?;
    let mut exact_h_weighted = 0.0;
    for i in 0..m {
        for j in 0..n {
            if grid.is_boundary(j) {
                continue;
            }
            exact_h_weighted += g1psi.at(i, j) * grid.cell_measure()[j] * grid.dt(i) * v[i][j];
        }
    }

    if cells.is_empty() {
        return Ok(CapacityEstimate { estimate: 0.0, stderr: 0.0, exact, exact_h_weighted });
    }

    let starts = start_weights(grid, psi);
    let per_cell: Vec<(f64, f64)> = starts
        .par_iter()
        .map(|&((i, j), _)| {
            let cell_id = (i * n + j) as u64;
            let t0 = grid.time(i);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for p in 0..n_paths {
                let mut rng = path_rng(seed, cell_id, p as u64);
                let path = sample_path(gen, t0, j, &mut rng).expect("valid start");
                let x = match first_hit(&path, &in_b, grid) {
                    Some(s) => (-s).exp(),
                    None => 0.0,
                };
                sum += x;
                sumsq += x * x;
            }
            let mean = sum / n_paths as f64;
            let var = (sumsq / n_paths as f64 - mean * mean).max(0.0);
            (mean, var / n_paths as f64)
        })
        .collect();
    let mut estimate = 0.0;
    let mut var = 0.0;
    for (k, &((_, _), w)) in starts.iter().enumerate() {
        estimate += w * per_cell[k].0;
        var += w * w * per_cell[k].1;
    }
    Ok(CapacityEstimate { estimate, stderr: var.sqrt(), exact, exact_h_weighted })
}

/// Elapsed time of the first visit to the cell set, if any.
fn first_hit(path: &PathSample, in_b: &[Vec<bool>], grid: &SpaceTimeGrid) -> Option<f64> {
    let s0 = path.start_time;
    let end = path.clipped_lifetime();
    for (node, a, b) in path.sojourns() {
        let (abs_a, abs_b) = (s0 + a, s0 + (b.min(end)));
        let mut i = grid.step_of(abs_a);
        while i < grid.n_steps() && grid.time(i) < abs_b {
            let overlap_start = abs_a.max(grid.time(i));
            if overlap_start < abs_b.min(grid.time(i + 1)) && in_b[i][node] {
                return Some(overlap_start - s0);
            }
            i += 1;
        }
    }
    None
}
