//! Time-indexed sub-Markov rate matrices, their bilinear forms, adjoints,
//! and the structural report (shift, sector constant, stage equivalence,
//! Markov and dual-Markov checks).

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{m_inner, SpaceTimeGrid};

/// Sparse rate matrix. Off-diagonal entries are jump rates (>= 0); the
/// diagonal satisfies `Q_jj <= -sum_k Q_jk`, the deficit being the killing
/// rate.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    n: usize,
    off: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl RateMatrix {
    pub fn zero(n: usize) -> Self {
        Self { n, off: vec![Vec::new(); n], diag: vec![0.0; n] }
    }

    /// Build from explicit rows; validates the sub-Markov structure unless
    /// `allow_supermarkov` (used for adjoints, whose row sums may be
    /// positive).
    pub fn from_rows(
        off: Vec<Vec<(usize, f64)>>,
        diag: Vec<f64>,
        allow_supermarkov: bool,
    ) -> Result<Self> {
        let n = diag.len();
        if off.len() != n {
            return Err(Error::Shape("rate matrix rows/diag length mismatch".into()));
        }
        for (j, row) in off.iter().enumerate() {
            let mut out = 0.0;
            for &(k, r) in row {
                if k >= n || k == j {
                    return Err(Error::Validation(format!("bad column {k} in row {j}")));
                }
                if r < 0.0 {
                    return Err(Error::Validation(format!(
                        "negative off-diagonal rate {r} at ({j},{k})"
                    )));
                }
                out += r;
            }
            if !allow_supermarkov && diag[j] + out > 1e-12 * (1.0 + out) {
                return Err(Error::Validation(format!(
                    "row {j} sum {} > 0 (not sub-Markov)",
                    diag[j] + out
                )));
            }
        }
        Ok(Self { n, off, diag })
    }

    /// Dense constructor for small hand-written chains.
    pub fn from_dense(q: &[Vec<f64>]) -> Result<Self> {
        let n = q.len();
        let mut off = vec![Vec::new(); n];
        let mut diag = vec![0.0; n];
        for (j, row) in q.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape("dense rate matrix not square".into()));
            }
            for (k, &r) in row.iter().enumerate() {
                if k == j {
                    diag[j] = r;
                } else if r != 0.0 {
                    off[j].push((k, r));
                }
            }
        }
        Self::from_rows(off, diag, false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.diag[j]
    }

    pub fn off_row(&self, j: usize) -> &[(usize, f64)] {
        &self.off[j]
    }

    /// Total jump-out rate of node `j` (including killing): `-Q_jj`.
    pub fn exit_rate(&self, j: usize) -> f64 {
        -self.diag[j]
    }

    /// Killing rate of node `j`: `-Q_jj - sum_k Q_jk`.
    pub fn deficit(&self, j: usize) -> f64 {
        (-self.diag[j] - self.off[j].iter().map(|&(_, r)| r).sum::<f64>()).max(0.0)
    }

    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        for j in 0..self.n {
            let mut s = self.diag[j] * v[j];
            for &(k, r) in &self.off[j] {
                s += r * v[k];
            }
            out[j] = s;
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.matvec(v, &mut out);
        out
    }

    /// Inf-norm, used to pick substep counts for exponential propagation.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|j| self.diag[j].abs() + self.off[j].iter().map(|&(_, r)| r).sum::<f64>())
            .fold(0.0f64, f64::max)
    }

    /// Largest exit rate over nodes, the natural rate scale of the chain.
    pub fn max_rate(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |a, d| a.max(-d))
    }

    /// Same chain with killing rate increased by `alpha` at every node.
    pub fn with_extra_killing(&self, alpha: f64) -> Self {
        let diag = self.diag.iter().map(|d| d - alpha).collect();
        Self { n: self.n, off: self.off.clone(), diag }
    }

    /// `m`-adjoint: `Qhat_kj = Q_jk m_j / m_k`.
    pub fn m_adjoint(&self, grid: &SpaceTimeGrid) -> Self {
        let m = grid.cell_measure();
        let mut off = vec![Vec::new(); self.n];
        for j in 0..self.n {
            for &(k, r) in &self.off[j] {
                off[k].push((j, r * m[j] / m[k]));
            }
        }
        for row in &mut off {
            row.sort_by_key(|&(k, _)| k);
        }
        Self { n: self.n, off, diag: self.diag.clone(), }
    }

    /// Row sums (0 for conservative rows, `-deficit` for killing rows,
    /// possibly positive for adjoints).
    pub fn row_sum(&self, j: usize) -> f64 {
        self.diag[j] + self.off[j].iter().map(|&(_, r)| r).sum::<f64>()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            d[(j, j)] = self.diag[j];
            for &(k, r) in &self.off[j] {
                d[(j, k)] = r;
            }
        }
        d
    }

    /// Coordinate-format text (`row col value` per line) for external
    /// inspection.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for j in 0..self.n {
            let _ = writeln!(s, "{} {} {:.17e}", j, j, self.diag[j]);
            for &(k, r) in &self.off[j] {
                let _ = writeln!(s, "{} {} {:.17e}", j, k, r);
            }
        }
        s
    }
}

/// Piecewise-constant-in-time family of rate matrices. Stage intervals
/// partition `[0, T]`; every stage end must lie on the grid's time mesh so
/// that per-step propagation sees a single stage.
#[derive(Debug, Clone)]
pub struct GeneratorFamily {
    grid: Arc<SpaceTimeGrid>,
    /// `(stage end time, Q)`, ends strictly increasing, last end = T.
    stages: Vec<(f64, RateMatrix)>,
}

impl GeneratorFamily {
    pub fn new(grid: &Arc<SpaceTimeGrid>, stages: Vec<(f64, RateMatrix)>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Validation("generator family needs at least one stage".into()));
        }
        let horizon = grid.horizon();
        let mut prev = 0.0;
        for (end, q) in &stages {
            if q.n() != grid.n_nodes() {
                return Err(Error::Shape("stage matrix size does not match grid".into()));
            }
            if *end <= prev {
                return Err(Error::Validation("stage ends must be strictly increasing".into()));
            }
            if !grid.times().iter().any(|t| (t - end).abs() <= 1e-12 * horizon.max(1.0)) {
                return Err(Error::Validation(format!(
                    "stage end {end} does not lie on the time mesh"
                )));
            }
            prev = *end;
        }
        if (prev - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return Err(Error::Validation("stages must partition [0, T]".into()));
        }
        Ok(Self { grid: Arc::clone(grid), stages })
    }

    pub fn single(grid: &Arc<SpaceTimeGrid>, q: RateMatrix) -> Result<Self> {
        let horizon = grid.horizon();
        Self::new(grid, vec![(horizon, q)])
    }

    pub fn grid(&self) -> &Arc<SpaceTimeGrid> {
        &self.grid
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, s: usize) -> &RateMatrix {
        &self.stages[s].1
    }

    pub fn stage_end(&self, s: usize) -> f64 {
        self.stages[s].0
    }

    /// Rate matrix governing time `t` (stages own their half-open interval
    /// `(prev_end, end]`, with stage 0 also covering `t = 0`).
    pub fn at(&self, t: f64) -> &RateMatrix {
        for (end, q) in &self.stages {
            if t <= *end + 1e-12 * self.grid.horizon().max(1.0) {
                return q;
            }
        }
        &self.stages.last().unwrap().1
    }

    /// Rate matrix governing mesh step `i`, i.e. the interval
    /// `(t_i, t_{i+1}]`.
    pub fn at_step(&self, i: usize) -> &RateMatrix {
        let mid = 0.5 * (self.grid.time(i) + self.grid.time(i + 1));
        self.at(mid)
    }

    pub fn max_rate(&self) -> f64 {
        self.stages.iter().map(|(_, q)| q.max_rate()).fold(0.0, f64::max)
    }

    /// Family with killing increased by `alpha` in every stage.
    pub fn with_extra_killing(&self, alpha: f64) -> Self {
        let stages = self
            .stages
            .iter()
            .map(|(end, q)| (*end, q.with_extra_killing(alpha)))
            .collect();
        Self { grid: Arc::clone(&self.grid), stages }
    }

    /// Family of `m`-adjoint matrices, stage by stage.
    pub fn adjoint(&self) -> Self {
        let stages = self
            .stages
            .iter()
            .map(|(end, q)| (*end, q.m_adjoint(&self.grid)))
            .collect();
        Self { grid: Arc::clone(&self.grid), stages }
    }
}

/// Divergence-form diffusion with drift on a 1D interval or 2D box grid,
/// finite-volume rates for the symmetric part and upwind rates for the
/// drift. Positive drift moves the chain toward larger coordinates.
///
/// `a` is evaluated at edge midpoints, `b` at nodes; both may vary over
/// stages via the `stage_ends`/`coeff(t, x)` closure pair.
pub fn divergence_form_generator(
    grid: &Arc<SpaceTimeGrid>,
    stage_ends: &[f64],
    a: impl Fn(f64, [f64; 2]) -> f64,
    b: impl Fn(f64, [f64; 2]) -> [f64; 2],
) -> Result<GeneratorFamily> {
    let mut stages = Vec::new();
    let mut prev = 0.0;
    for &end in stage_ends {
        let t_mid = 0.5 * (prev + end);
        stages.push((end, divergence_stage(grid, t_mid, &a, &b)?));
        prev = end;
    }
    GeneratorFamily::new(grid, stages)
}

fn divergence_stage(
    grid: &Arc<SpaceTimeGrid>,
    t: f64,
    a: &impl Fn(f64, [f64; 2]) -> f64,
    b: &impl Fn(f64, [f64; 2]) -> [f64; 2],
) -> Result<RateMatrix> {
    let n = grid.n_nodes();
    let mut off = vec![Vec::new(); n];
    let mut diag = vec![0.0; n];

    // Pair up axis neighbors by position; assumes equispaced nodes per axis
    // (the constructors guarantee this).
    let spacing = grid.min_spacing();
    let axes = grid.dim();
    for j in 0..n {
        if grid.is_boundary(j) {
            continue;
        }
        let pj = grid.position(j);
        let bj = b(t, pj);
        for axis in 0..axes {
            for dir in [-1.0f64, 1.0] {
                let mut target = pj;
                target[axis] += dir * spacing;
                let neighbor = (0..n).find(|&k| {
                    (grid.position(k)[0] - target[0]).abs() < 1e-9 * spacing
                        && (grid.position(k)[1] - target[1]).abs() < 1e-9 * spacing
                });
                let mut edge_mid = pj;
                edge_mid[axis] += dir * 0.5 * spacing;
                let a_edge = a(t, edge_mid);
                if !(a_edge > 0.0) {
                    return Err(Error::Validation(format!(
                        "diffusion coefficient must be positive, got {a_edge}"
                    )));
                }
                let mut rate = a_edge / (spacing * spacing);
                // Upwind drift: positive component feeds the forward edge.
                let bc = bj[axis];
                if bc > 0.0 && dir > 0.0 {
                    rate += bc / spacing;
                } else if bc < 0.0 && dir < 0.0 {
                    rate += -bc / spacing;
                }
                diag[j] -= rate;
                match neighbor {
                    Some(k) if !grid.is_boundary(k) => off[j].push((k, rate)),
                    // Flux into the boundary (or off the grid) kills.
                    _ => {}
                }
            }
        }
        off[j].sort_by_key(|&(k, _)| k);
    }
    RateMatrix::from_rows(off, diag, false)
}

/// Kernel weight of the variable-exponent jump operator in `d` dimensions:
/// `w(x) = alpha(x) 2^{alpha(x)-1} Gamma((alpha(x)+d)/2) /
/// (pi^{d/2} Gamma(1 - alpha(x)/2))`.
pub fn jump_kernel_weight(alpha: f64, d: usize) -> f64 {
    use statrs::function::gamma::gamma;
    let d = d as f64;
    alpha * 2.0f64.powf(alpha - 1.0) * gamma(0.5 * alpha + 0.5 * d)
        / (std::f64::consts::PI.powf(0.5 * d) * gamma(1.0 - 0.5 * alpha))
}

/// Jump generator with node-dependent stability exponent. Rates are the
/// kernel `w(x_j) |y - x_j|^{-d-alpha(x_j)}` integrated over target cells
/// by the midpoint rule; jumps shorter than half the node spacing are
/// censored, jumps beyond `cutoff` (or off the grid) go to killing.
pub fn fractional_generator(
    grid: &Arc<SpaceTimeGrid>,
    alpha_fn: impl Fn([f64; 2]) -> f64,
    cutoff: Option<f64>,
) -> Result<GeneratorFamily> {
    let n = grid.n_nodes();
    let d = grid.dim();
    let cutoff = cutoff.unwrap_or_else(|| grid.diameter() * 2.0);
    let r_min = 0.5 * grid.min_spacing();
    let mut off = vec![Vec::new(); n];
    let mut diag = vec![0.0; n];
    for j in 0..n {
        if grid.is_boundary(j) {
            continue;
        }
        let alpha = alpha_fn(grid.position(j));
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Validation(format!("exponent {alpha} outside (0, 2)")));
        }
        let w = jump_kernel_weight(alpha, d);
        // Total activity of jumps with radius in (r_min, infinity):
        // w * S_d * r_min^{-alpha} / alpha, with S_1 = 2, S_2 = 2 pi.
        let sphere = if d == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
        let total = w * sphere * r_min.powf(-alpha) / alpha;
        let mut captured = 0.0;
        for k in 0..n {
            if k == j || grid.is_boundary(k) {
                continue;
            }
            let r = grid.distance(j, k);
            if r <= r_min || r > cutoff {
                continue;
            }
            let rate = w * r.powf(-(d as f64) - alpha) * grid.cell_measure()[k];
            off[j].push((k, rate));
            captured += rate;
        }
        // Midpoint quadrature can overshoot the tail integral on coarse
        // grids; keep the deficit non-negative by expanding the activity.
        let activity = total.max(captured);
        diag[j] = -activity;
        off[j].sort_by_key(|&(k, _)| k);
    }
    GeneratorFamily::single(grid, RateMatrix::from_rows(off, diag, false)?)
}

/// `B^(t)(u, v) = -m_inner(Q(t) u, v)`.
pub fn bilinear_form(gen: &GeneratorFamily, t: f64, u: &[f64], v: &[f64]) -> Result<f64> {
    let qu = gen.at(t).apply(u);
    Ok(-m_inner(&qu, v, gen.grid())?)
}

/// Same form evaluated on the matrix owning mesh step `i`.
pub fn bilinear_form_step(gen: &GeneratorFamily, step: usize, u: &[f64], v: &[f64]) -> Result<f64> {
    let qu = gen.at_step(step).apply(u);
    Ok(-m_inner(&qu, v, gen.grid())?)
}

/// Structural constants of a generator family.
#[derive(Debug, Clone)]
pub struct FormReport {
    /// Shift making every stage form non-negative.
    pub alpha0: f64,
    /// Sector constant bounding `|B(u,v)|` by the shifted energy norms.
    pub sector_k: f64,
    /// Uniform equivalence constant of the stage forms against stage 0.
    pub lambda: f64,
    /// All rows sub-Markov.
    pub markov: bool,
    /// Smallest `gamma >= 0` such that the `m`-adjoint rows sum to at most
    /// `gamma`.
    pub dual_markov_gamma: Option<f64>,
}

/// Compute the structural report by dense symmetric eigenproblems. Small
/// grids only; the constants are reported, never assumed.
pub fn structural_report(gen: &GeneratorFamily) -> Result<FormReport> {
    let grid = gen.grid();
    let n = grid.n_nodes();
    let m = grid.cell_measure();
    let sqrt_m: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();

    // Form matrix C with B(u, v) = u^T C v, i.e. C = -Q^T M.
    let form_matrix = |q: &RateMatrix| -> DMatrix<f64> {
        let dense = q.to_dense();
        let mm = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(m));
        -(dense.transpose() * mm)
    };
    // Symmetrized, measure-normalized: G~ = M^{-1/2} sym(C) M^{-1/2}.
    let normalized_sym = |c: &DMatrix<f64>| -> DMatrix<f64> {
        let s = (c + c.transpose()) * 0.5;
        let mut out = s;
        for j in 0..n {
            for k in 0..n {
                out[(j, k)] /= sqrt_m[j] * sqrt_m[k];
            }
        }
        out
    };

    let mut alpha0 = 0.0f64;
    let mut stage_syms = Vec::new();
    let mut stage_forms = Vec::new();
    for s in 0..gen.n_stages() {
        let c = form_matrix(gen.stage(s));
        let sym = normalized_sym(&c);
        let eig = sym.clone().symmetric_eigen();
        let min_ev = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        alpha0 = alpha0.max(-min_ev);
        stage_syms.push(sym);
        stage_forms.push(c);
    }
    alpha0 = alpha0.max(0.0);
    // Tiny negative eigenvalues from roundoff do not warrant a shift.
    if alpha0 < 1e-10 * gen.max_rate().max(1.0) {
        alpha0 = 0.0;
    }

    // Sector constant: K = max over stages of || G^{-1/2} C~ G^{-1/2} ||_2
    // with G the alpha0-shifted symmetric part and C~ the normalized form.
    let mut sector_k = 1.0f64;
    let reg = 1e-12 * gen.max_rate().max(1.0);
    for (s, sym) in stage_syms.iter().enumerate() {
        let mut g = sym.clone();
        for j in 0..n {
            g[(j, j)] += alpha0 + reg;
        }
        let eig = g.symmetric_eigen();
        // G^{-1/2} via eigendecomposition; eigenvalues >= reg by shift.
        let mut inv_sqrt: DMatrix<f64> = DMatrix::zeros(n, n);
        for (i, ev) in eig.eigenvalues.iter().enumerate() {
            let lam = ev.max(reg);
            let col = eig.eigenvectors.column(i);
            let scale = 1.0 / lam.sqrt();
            for j in 0..n {
                for k in 0..n {
                    inv_sqrt[(j, k)] += col[j] * col[k] * scale;
                }
            }
        }
        let mut c_norm = stage_forms[s].clone();
        for j in 0..n {
            for k in 0..n {
                c_norm[(j, k)] /= sqrt_m[j] * sqrt_m[k];
            }
        }
        for j in 0..n {
            c_norm[(j, j)] += alpha0;
        }
        let middle: DMatrix<f64> = &inv_sqrt * c_norm * &inv_sqrt;
        let svd = middle.svd(false, false);
        let norm = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        sector_k = sector_k.max(norm);
    }

    // Stage equivalence against stage 0 via generalized Rayleigh quotients.
    let mut lambda = 1.0f64;
    if gen.n_stages() > 1 {
        let mut g0 = stage_syms[0].clone();
        for j in 0..n {
            g0[(j, j)] += alpha0 + reg;
        }
        let chol = g0
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("stage-0 energy form not positive definite".into()))?;
        for sym in stage_syms.iter().skip(1) {
            let mut gt = sym.clone();
            for j in 0..n {
                gt[(j, j)] += alpha0 + reg;
            }
            // Eigenvalues of G0^{-1} Gt via L^{-1} Gt L^{-T}.
            let l_inv = chol.l().try_inverse().ok_or_else(|| {
                Error::Numeric("stage-0 Cholesky factor not invertible".into())
            })?;
            let w = &l_inv * gt * l_inv.transpose();
            let eig = w.symmetric_eigen();
            for ev in eig.eigenvalues.iter() {
                if *ev > 0.0 {
                    lambda = lambda.max(*ev).max(1.0 / ev);
                }
            }
        }
    }

    // Sub-Markov rows hold by construction; assert anyway.
    let markov = (0..gen.n_stages()).all(|s| {
        let q = gen.stage(s);
        (0..n).all(|j| q.row_sum(j) <= 1e-10 * (1.0 + q.exit_rate(j)))
    });

    // Adjoint row sums; off-diagonals of the m-adjoint are nonnegative by
    // construction, so gamma always exists.
    let mut gamma = 0.0f64;
    for s in 0..gen.n_stages() {
        let qhat = gen.stage(s).m_adjoint(grid);
        for j in 0..n {
            gamma = gamma.max(qhat.row_sum(j));
        }
    }
    let dual_markov_gamma = Some(gamma.max(0.0));

    Ok(FormReport { alpha0, sector_k, lambda, markov, dual_markov_gamma })
}
