//! The three routes to the linear terminal-value problem
//! `-du/dt - Q u = mu, u(T) = phi`: deterministic backward evolution,
//! Monte Carlo over chain paths, and the adjoint (duality) route. The
//! backward and adjoint discretizations are exact transposes of each other
//! under the space-time inner product, so the duality identity is a
//! machine-precision check rather than an asymptotic one.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{m_inner, spacetime_inner, SpaceTimeField, SpaceTimeGrid};
use crate::measures::{to_revuz_rates, MeasureData};
use crate::operators::{bilinear_form_step, GeneratorFamily};
use crate::process;
use crate::propagate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    MonteCarlo,
}

#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub gen: GeneratorFamily,
    pub phi: Vec<f64>,
    pub mu: MeasureData,
}

impl LinearProblem {
    pub fn new(gen: GeneratorFamily, phi: Vec<f64>, mu: MeasureData) -> Result<Self> {
        if phi.len() != gen.grid().n_nodes() {
            return Err(Error::Shape("terminal data length != node count".into()));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("terminal data must be finite".into()));
        }
        if *mu.grid().as_ref() != *gen.grid().as_ref() {
            return Err(Error::GridMismatch("measure grid != generator grid".into()));
        }
        Ok(Self { gen, phi, mu })
    }

    pub fn grid(&self) -> &Arc<SpaceTimeGrid> {
        self.gen.grid()
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: SpaceTimeField,
    /// Present exactly for the Monte Carlo route.
    pub stderr: Option<SpaceTimeField>,
    pub method: Method,
}

fn zero_boundary(grid: &SpaceTimeGrid, v: &mut [f64]) {
    for j in 0..grid.n_nodes() {
        if grid.is_boundary(j) {
            v[j] = 0.0;
        }
    }
}

/// Mesh index of time `s`, or an error if `s` falls between mesh points
/// (slice sources must be resolvable without smearing).
fn mesh_index(grid: &SpaceTimeGrid, s: f64) -> Result<usize> {
    let tol = 1e-10 * grid.horizon().max(1.0);
    grid.times()
        .iter()
        .position(|t| (t - s).abs() <= tol)
        .ok_or_else(|| Error::Validation(format!("slice time {s} not on the time mesh")))
}

/// Per-step source bookkeeping of a measure: constant atom rates per
/// cell, slice vectors summed at each mesh index, and the density pair
/// feeding the exact Duhamel integral of one backward step.
pub struct StepSources {
    atom_rate: Vec<f64>,
    slice_sum: Vec<Vec<f64>>,
}

impl StepSources {
    pub fn build(grid: &SpaceTimeGrid, mu: &MeasureData) -> Result<Self> {
        let n = grid.n_nodes();
        let m = grid.n_steps();
        let mut atom_rate = vec![0.0; m * n];
        for a in mu.atoms() {
            atom_rate[a.step * n + a.node] +=
                a.mass / (grid.cell_measure()[a.node] * grid.dt(a.step));
        }
        let mut slice_sum = vec![vec![0.0; n]; m + 1];
        for (s, g) in mu.time_slices() {
            let k = mesh_index(grid, *s)?;
            for j in 0..n {
                slice_sum[k][j] += g[j];
            }
        }
        for v in &mut slice_sum {
            zero_boundary(grid, v);
        }
        Ok(Self { atom_rate, slice_sum })
    }

    /// Aggregated slice jump at mesh index `k`.
    pub fn slice_jump(&self, k: usize) -> &[f64] {
        &self.slice_sum[k]
    }

    /// Source samples `(g(t_i), g(t_{i+1}))` for step `i`: density plus
    /// the cell's constant atom rate, zero on boundary nodes.
    pub fn density_pair(
        &self,
        mu: &MeasureData,
        grid: &SpaceTimeGrid,
        i: usize,
    ) -> (Vec<f64>, Vec<f64>) {
        let n = grid.n_nodes();
        let slice = |k: usize| -> Vec<f64> {
            match mu.density() {
                Some(d) => d.time_slice(k).to_vec(),
                None => vec![0.0; n],
            }
        };
        let mut g_left = slice(i);
        let mut g_right = slice(i + 1);
        for j in 0..n {
            g_left[j] += self.atom_rate[i * n + j];
            g_right[j] += self.atom_rate[i * n + j];
        }
        zero_boundary(grid, &mut g_left);
        zero_boundary(grid, &mut g_right);
        (g_left, g_right)
    }
}

/// Deterministic backward solve. Density sources use the exact
/// piecewise-linear Duhamel integral, atoms enter as constant per-cell
/// rates, slices are added atomically at their mesh time.
pub fn solve_backward(problem: &LinearProblem) -> Result<SolveResult> {
    let grid = problem.grid();
    let n = grid.n_nodes();
    let m = grid.n_steps();
    let sources = StepSources::build(grid, &problem.mu)?;

    let mut u = SpaceTimeField::zeros(grid);
    let mut terminal = problem.phi.clone();
    zero_boundary(grid, &mut terminal);
    u.set_time_slice(m, &terminal);

    let mut right = terminal;
    for i in (0..m).rev() {
        // slice jumps sit at the right end of this step
        let jump = sources.slice_jump(i + 1);
        for j in 0..n {
            right[j] += jump[j];
        }
        zero_boundary(grid, &mut right);
        let (g_left, g_right) = sources.density_pair(&problem.mu, grid, i);
        let mut left =
            propagate::duhamel_step(problem.gen.at_step(i), grid.dt(i), &right, &g_left, &g_right);
        zero_boundary(grid, &mut left);
        u.set_time_slice(i, &left);
        right = left;
    }
    if !u.is_finite() {
        return Err(Error::Numeric("backward solve".into()));
    }
    Ok(SolveResult { u, stderr: None, method: Method::Direct })
}

/// Potential of a measure: the backward solve with zero terminal data.
pub fn potential(gen: &GeneratorFamily, mu: &MeasureData) -> Result<SpaceTimeField> {
    let n = gen.grid().n_nodes();
    let problem = LinearProblem::new(gen.clone(), vec![0.0; n], mu.clone())?;
    Ok(solve_backward(&problem)?.u)
}

/// Monte Carlo Feynman-Kac solve: per start cell, sample mean of the
/// terminal payoff plus the accumulated measure functional.
pub fn solve_fk_mc(problem: &LinearProblem, n_paths: usize, seed: u64) -> Result<SolveResult> {
    if n_paths == 0 {
        return Err(Error::Validation("need at least one path".into()));
    }
    let grid = problem.grid();
    let n = grid.n_nodes();
    let m = grid.n_steps();
    let rates = to_revuz_rates(&problem.mu);

    let cells: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(_, j)| !grid.is_boundary(j))
        .collect();
    let stats: Vec<((usize, usize), f64, f64)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let cell_id = (i * n + j) as u64;
            let t0 = grid.time(i);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for p in 0..n_paths {
                let mut rng = process::path_rng(seed, cell_id, p as u64);
                let path = process::sample_path(&problem.gen, t0, j, &mut rng).expect("valid start");
                let mut x = process::accumulate(&path, &rates);
                if path.survived() {
                    x += problem.phi[path.node_at(path.horizon_clip)];
                }
                sum += x;
                sumsq += x * x;
            }
            let mean = sum / n_paths as f64;
            let var = (sumsq / n_paths as f64 - mean * mean).max(0.0);
            ((i, j), mean, (var / n_paths as f64).sqrt())
        })
        .collect();

    let mut u = SpaceTimeField::zeros(grid);
    let mut stderr = SpaceTimeField::zeros(grid);
    for ((i, j), mean, se) in stats {
        u.set(i, j, mean);
        stderr.set(i, j, se);
    }
    // terminal slice is known exactly
    let mut terminal = problem.phi.clone();
    zero_boundary(grid, &mut terminal);
    u.set_time_slice(m, &terminal);
    Ok(SolveResult { u, stderr: Some(stderr), method: Method::MonteCarlo })
}

/// `G_alpha f`: backward solve with density source `f` and killing
/// increased by `alpha`.
pub fn resolvent(gen: &GeneratorFamily, alpha: f64, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    if alpha < 0.0 {
        return Err(Error::Validation(format!("resolvent order {alpha} < 0")));
    }
    let shifted = gen.with_extra_killing(alpha);
    Ok(potential(&shifted, &MeasureData::from_density(f.clone()))?)
}

/// The adjoint potential `Ghat_alpha eta` together with the transfer
/// weights that make the duality pairing exact: `r_k` accumulates the
/// time-weighted test field forward under the adjoint propagators, and
/// the field `v` is the exact transpose of the backward Duhamel scheme.
#[derive(Debug, Clone)]
pub struct AdjointPotential {
    grid: Arc<SpaceTimeGrid>,
    gen_hat: GeneratorFamily,
    eta: SpaceTimeField,
    r: Vec<Vec<f64>>,
    v: SpaceTimeField,
}

pub fn adjoint_resolvent(
    gen: &GeneratorFamily,
    alpha: f64,
    eta: &SpaceTimeField,
) -> Result<AdjointPotential> {
    if alpha < 0.0 {
        return Err(Error::Validation(format!("resolvent order {alpha} < 0")));
    }
    let grid = gen.grid();
    if *eta.grid().as_ref() != *grid.as_ref() {
        return Err(Error::GridMismatch("test field grid != generator grid".into()));
    }
    let n = grid.n_nodes();
    let m = grid.n_steps();
    let w = grid.time_weights();
    let gen_hat = gen.with_extra_killing(alpha).adjoint();

    let eta_slice = |i: usize| -> Vec<f64> {
        let mut g = eta.time_slice(i).to_vec();
        zero_boundary(grid, &mut g);
        g
    };

    // r_0 = w_0 eta_0, r_{k+1} = Ehat_k r_k + w_{k+1} eta_{k+1}
    let mut r = Vec::with_capacity(m + 1);
    let mut cur: Vec<f64> = eta_slice(0).iter().map(|x| x * w[0]).collect();
    r.push(cur.clone());
    for k in 0..m {
        let mut next = propagate::expmv(gen_hat.at_step(k), grid.dt(k), &cur);
        let e = eta_slice(k + 1);
        for j in 0..n {
            next[j] += w[k + 1] * e[j];
        }
        zero_boundary(grid, &mut next);
        r.push(next.clone());
        cur = next;
    }

    // v_i = (1/w_i) [ D0hat_i r_i + D1hat_{i-1} r_{i-1} ] where
    // D0hat r = int_0^dt e^{s Qhat} (1 - s/dt) ds r  and
    // D1hat r = int_0^dt e^{s Qhat} (s/dt) ds r
    let zero = vec![0.0; n];
    let mut v = SpaceTimeField::zeros(grid);
    for i in 0..=m {
        let mut val = vec![0.0; n];
        if i < m {
            let d0 = propagate::integ_exp(gen_hat.at_step(i), grid.dt(i), &r[i], &zero);
            for j in 0..n {
                val[j] += d0[j];
            }
        }
        if i > 0 {
            let d1 = propagate::integ_exp(gen_hat.at_step(i - 1), grid.dt(i - 1), &zero, &r[i - 1]);
            for j in 0..n {
                val[j] += d1[j];
            }
        }
        for j in 0..n {
            val[j] /= w[i];
        }
        zero_boundary(grid, &mut val);
        v.set_time_slice(i, &val);
    }

    Ok(AdjointPotential { grid: Arc::clone(grid), gen_hat, eta: eta.clone(), r, v })
}

impl AdjointPotential {
    /// The adjoint potential as a field; satisfies
    /// `spacetime_inner(G_alpha f, eta) = spacetime_inner(f, field)`
    /// exactly.
    pub fn field(&self) -> &SpaceTimeField {
        &self.v
    }

    /// Transfer weight pairing the terminal data:
    /// `spacetime_inner(u_phi, eta) = m_inner(phi, terminal_weight)`.
    pub fn terminal_weight(&self) -> &[f64] {
        self.r.last().unwrap()
    }

    /// Transfer weight for a slice at mesh time `t_k`:
    /// the `r`-state propagated across step `k-1` without the step-`k`
    /// deposit.
    pub fn slice_weight(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.grid.n_steps() {
            return Err(Error::Validation(format!("slice index {k} out of range")));
        }
        let w = self.grid.time_weights();
        let n = self.grid.n_nodes();
        let mut out = self.r[k].clone();
        for j in 0..n {
            let e = if self.grid.is_boundary(j) { 0.0 } else { self.eta.at(k, j) };
            out[j] -= w[k] * e;
        }
        Ok(out)
    }

    /// Transfer weight for an atom in time cell `step`: the phi1-average
    /// of `r_step` across the cell; the atom term of the duality pairing
    /// is `mass * atom_weight(step)[node]`.
    pub fn atom_weight(&self, step: usize) -> Result<Vec<f64>> {
        if step >= self.grid.n_steps() {
            return Err(Error::Validation(format!("atom step {step} out of range")));
        }
        Ok(propagate::phi1v(self.gen_hat.at_step(step), self.grid.dt(step), &self.r[step]))
    }

    /// `int (Ghat eta) d mu`, evaluated by measure component with the
    /// component-appropriate transfer weight (this is what makes the
    /// duality identity exact rather than quadrature-limited).
    pub fn measure_integral(&self, mu: &MeasureData) -> Result<f64> {
        let mut total = 0.0;
        if let Some(d) = mu.density() {
            total += spacetime_inner(d, &self.v)?;
        }
        for (s, g) in mu.time_slices() {
            let k = mesh_index(&self.grid, *s)?;
            total += m_inner(g, &self.slice_weight(k)?, &self.grid)?;
        }
        for a in mu.atoms() {
            total += a.mass * self.atom_weight(a.step)?[a.node];
        }
        Ok(total)
    }

    /// Largest transfer weight over all component kinds; bounds
    /// `|spacetime_inner(u_mu, eta)| <= total_variation(mu) * sup_bound`
    /// when `eta >= 0` (the terminal weight enters per unit of `m`-mass).
    pub fn sup_bound(&self) -> Result<f64> {
        let mut b = self.v.sup_norm();
        let m = self.grid.cell_measure();
        for (j, &rm) in self.terminal_weight().iter().enumerate() {
            if !self.grid.is_boundary(j) {
                b = b.max((rm / m[j]).abs());
            }
        }
        for k in 1..=self.grid.n_steps() {
            for (j, &x) in self.slice_weight(k)?.iter().enumerate() {
                if !self.grid.is_boundary(j) {
                    b = b.max((x / m[j]).abs());
                }
            }
        }
        for step in 0..self.grid.n_steps() {
            for (j, &x) in self.atom_weight(step)?.iter().enumerate() {
                if !self.grid.is_boundary(j) {
                    b = b.max(x.abs());
                }
            }
        }
        Ok(b)
    }
}

/// Report of the positive-weight admissibility check.
#[derive(Debug, Clone)]
pub struct DeltaReport {
    pub holds: bool,
    /// The positive witness field (constant 1 on finite grids).
    pub eta: Vec<f64>,
    /// `sup` of the adjoint potential of the witness.
    pub bound: f64,
}

/// Try the constant witness: on a finite grid with finite horizon its
/// adjoint potential is always bounded, and the bound quantifies how much
/// measure data costs in the duality pairing.
pub fn check_delta_condition(gen: &GeneratorFamily) -> Result<DeltaReport> {
    let grid = gen.grid();
    let ones = SpaceTimeField::constant(grid, 1.0);
    let pot = adjoint_resolvent(gen, 0.0, &ones)?;
    let bound = pot.sup_bound()?;
    Ok(DeltaReport { holds: bound.is_finite(), eta: vec![1.0; grid.n_nodes()], bound })
}

/// Absolute residual of the duality identity
/// `spacetime_inner(u, eta) = m_inner(phi, terminal weight)
///  + int (Ghat eta) d mu` for `eta >= 0`.
pub fn check_duality(
    u: &SpaceTimeField,
    problem: &LinearProblem,
    eta: &SpaceTimeField,
) -> Result<f64> {
    if eta.values().iter().any(|&x| x < 0.0) {
        return Err(Error::Validation("duality test field must be nonnegative".into()));
    }
    let pot = adjoint_resolvent(&problem.gen, 0.0, eta)?;
    let lhs = spacetime_inner(u, eta)?;
    let mut phi = problem.phi.clone();
    zero_boundary(problem.grid(), &mut phi);
    let rhs = m_inner(&phi, pot.terminal_weight(), problem.grid())?
        + pot.measure_integral(&problem.mu)?;
    Ok((lhs - rhs).abs())
}

/// Max over mesh times `t` of the residual of the weak formulation
/// `(u(t), eta(t)) + int_t^T (u, d eta/ds) + int_t^T B(u, eta)
///  = (phi, eta(T)) + int_t^T eta d mu`,
/// with trapezoid time quadrature (`O(dt^2)` for smooth data).
pub fn check_weak_form(
    u: &SpaceTimeField,
    problem: &LinearProblem,
    eta: &SpaceTimeField,
) -> Result<f64> {
    let grid = problem.grid();
    let n = grid.n_nodes();
    let m = grid.n_steps();
    let gen = &problem.gen;

    // per-step contributions, accumulated from the right
    let mut worst = 0.0f64;
    let mut dut = 0.0; // int_t^T (u, d eta/ds)
    let mut bil = 0.0; // int_t^T B(u, eta)
    let mut mu_int = 0.0; // int_t^T eta d mu
    let mut phi = problem.phi.clone();
    zero_boundary(grid, &mut phi);
    let terminal = m_inner(&phi, eta.time_slice(m), grid)?;

    let atom_sum = |i: usize| -> f64 {
        problem
            .mu
            .atoms()
            .iter()
            .filter(|a| a.step == i)
            .map(|a| a.mass * 0.5 * (eta.at(i, a.node) + eta.at(i + 1, a.node)))
            .sum()
    };
    let slice_sum = |k: usize| -> Result<f64> {
        let mut s = 0.0;
        for (t, g) in problem.mu.time_slices() {
            if mesh_index(grid, *t)? == k {
                s += m_inner(g, eta.time_slice(k), grid)?;
            }
        }
        Ok(s)
    };

    for i in (0..=m).rev() {
        if i < m {
            let dt = grid.dt(i);
            let deta: Vec<f64> =
                (0..n).map(|j| (eta.at(i + 1, j) - eta.at(i, j)) / dt).collect();
            dut += 0.5
                * dt
                * (m_inner(u.time_slice(i), &deta, grid)?
                    + m_inner(u.time_slice(i + 1), &deta, grid)?);
            bil += 0.5
                * dt
                * (bilinear_form_step(gen, i, u.time_slice(i), eta.time_slice(i))?
                    + bilinear_form_step(gen, i, u.time_slice(i + 1), eta.time_slice(i + 1))?);
            if let Some(d) = problem.mu.density() {
                mu_int += 0.5
                    * dt
                    * (m_inner(d.time_slice(i), eta.time_slice(i), grid)?
                        + m_inner(d.time_slice(i + 1), eta.time_slice(i + 1), grid)?);
            }
            mu_int += atom_sum(i);
            mu_int += slice_sum(i + 1)?;
        }
        let lhs = m_inner(u.time_slice(i), eta.time_slice(i), grid)? + dut + bil;
        let rhs = terminal + mu_int;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `beta * <h, U^beta f>` where `U^beta f` is the potential of the
/// measure `f . mu` under `beta`-extra killing; converges to
/// `int f h d mu` as `beta` grows. Start times are integrated by the
/// left-endpoint rule so that per-cell atoms are represented without bias.
pub fn resolvent_limit_af(
    gen: &GeneratorFamily,
    mu: &MeasureData,
    f: &[f64],
    h: &[f64],
    beta: f64,
) -> Result<f64> {
    let grid = gen.grid();
    let n = grid.n_nodes();
    if f.len() != n || h.len() != n {
        return Err(Error::Shape("f/h length != node count".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::Validation("beta must be positive".into()));
    }
    if f.iter().chain(h).any(|&x| x < 0.0) {
        return Err(Error::Validation("f and h must be nonnegative".into()));
    }
    // f-weighted measure, componentwise
    let mut fmu = MeasureData::zero(grid);
    if let Some(d) = mu.density() {
        let mut fd = d.clone();
        for i in 0..=grid.n_steps() {
            for j in 0..n {
                let x = fd.at(i, j);
                fd.set(i, j, x * f[j]);
            }
        }
        fmu.add(&MeasureData::from_density(fd))?;
    }
    for (s, g) in mu.time_slices() {
        fmu.add_slice(*s, g.iter().zip(f).map(|(a, b)| a * b).collect())?;
    }
    for a in mu.atoms() {
        fmu.add_atom(a.step, a.node, a.mass * f[a.node])?;
    }
    let shifted = gen.with_extra_killing(beta);
    let pot = potential(&shifted, &fmu)?;
    let mut total = 0.0;
    for i in 0..grid.n_steps() {
        total += grid.dt(i) * m_inner(h, pot.time_slice(i), grid)?;
    }
    Ok(beta * total)
}
