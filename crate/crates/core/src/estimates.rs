//! A priori bounds on solutions, each returned as a checked inequality
//! with both sides evaluated numerically.

use crate::error::{Error, Result};
use crate::grid::{m_inner, SpaceTimeField};
use crate::measures::MeasureData;
use crate::operators::{bilinear_form_step, GeneratorFamily};

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs - lhs`; how much room the bound leaves.
    pub margin: f64,
}

impl EstimateReport {
    fn checked(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let slack = 1e-10 * (1.0 + lhs.abs().max(rhs.abs()));
        Self { name: name.into(), lhs, rhs, holds: lhs <= rhs + slack, margin: rhs - lhs }
    }
}

/// Pointwise clamp to `[-level, level]`, the test function family behind
/// the energy bound.
pub fn truncate(u: &SpaceTimeField, level: f64) -> Result<SpaceTimeField> {
    if !(level >= 0.0) {
        return Err(Error::Validation("truncation level must be >= 0".into()));
    }
    let mut out = u.clone();
    let grid = u.grid().clone();
    for i in 0..=grid.n_steps() {
        for j in 0..grid.n_nodes() {
            out.set(i, j, u.at(i, j).clamp(-level, level));
        }
    }
    Ok(out)
}

/// Causal exponential average in time,
/// `[w]_m(t) = m int_0^t e^{-m (t - s)} w(s) ds` with `w` extended by
/// zero below `t = 0`. Exact for the piecewise-linear-in-time fields the
/// grid stores, via a per-step closed-form recursion.
pub fn mollify(w: &SpaceTimeField, m: f64) -> Result<SpaceTimeField> {
    if !(m >= 0.0) {
        return Err(Error::Validation("mollifier rate must be >= 0".into()));
    }
    let grid = w.grid().clone();
    let n = grid.n_nodes();
    let mut out = SpaceTimeField::zeros(&grid);
    if m == 0.0 {
        return Ok(out);
    }
    let mut cur = vec![0.0; n];
    for i in 0..grid.n_steps() {
        let dt = grid.dt(i);
        // exp(-m dt) and (1 - exp(-m dt)) without cancellation
        let one_minus_e = -(-m * dt).exp_m1();
        let e = 1.0 - one_minus_e;
        for j in 0..n {
            let a = w.at(i, j);
            let b = (w.at(i + 1, j) - a) / dt;
            // m int_0^dt e^{-m(dt-s)} (a + b s) ds, closed form
            cur[j] = e * cur[j] + a * one_minus_e + b * (dt - one_minus_e / m);
        }
        out.set_time_slice(i + 1, &cur);
    }
    Ok(out)
}

/// Truncated-energy bound: for a potential `u` of data `(phi, mu)` on a
/// generator whose adjoint is sub-Markov up to rate `gamma`,
/// `sum_i dt_i B_gamma(T_k u(t_i), T_k u(t_i))
///  <= k (||mu||_TV + ||phi||_{L^1} + gamma ||u||_{L^1})`.
pub fn energy_estimate(
    u: &SpaceTimeField,
    gen: &GeneratorFamily,
    mu: &MeasureData,
    phi: &[f64],
    level: f64,
    gamma: Option<f64>,
) -> Result<EstimateReport> {
    let gamma = gamma.ok_or_else(|| {
        Error::Precondition(
            "energy bound needs the adjoint sub-Markov rate; the generator's \
             adjoint must have controlled row sums"
                .into(),
        )
    })?;
    if gamma < 0.0 {
        return Err(Error::Validation("adjoint rate must be >= 0".into()));
    }
    let grid = gen.grid();
    if phi.len() != grid.n_nodes() {
        return Err(Error::Shape(format!(
            "terminal data has {} entries, grid has {} nodes",
            phi.len(),
            grid.n_nodes()
        )));
    }
    let tu = truncate(u, level)?;
    let mut lhs = 0.0;
    for i in 0..grid.n_steps() {
        let v = tu.time_slice(i);
        let b = bilinear_form_step(gen, i, v, v)?;
        lhs += grid.dt(i) * (b + gamma * m_inner(v, v, grid)?);
    }
    let phi_l1: f64 = phi
        .iter()
        .zip(grid.cell_measure())
        .map(|(p, m)| p.abs() * m)
        .sum();
    let rhs = level * (mu.total_variation() + phi_l1 + gamma * u.l1_norm());
    Ok(EstimateReport::checked("truncated energy", lhs, rhs))
}

/// Space-time `L^1` bound with the free parameter optimized:
/// `||u||_{L^1} <= a^{-1} e^{T (a + gamma)} (||phi||_{L^1} + ||mu||_TV)`
/// is minimized at `a = 1/T`.
pub fn l1_estimate(
    u: &SpaceTimeField,
    mu: &MeasureData,
    phi: &[f64],
    gamma: f64,
) -> Result<EstimateReport> {
    if gamma < 0.0 {
        return Err(Error::Validation("adjoint rate must be >= 0".into()));
    }
    let grid = u.grid();
    if phi.len() != grid.n_nodes() {
        return Err(Error::Shape(format!(
            "terminal data has {} entries, grid has {} nodes",
            phi.len(),
            grid.n_nodes()
        )));
    }
    let t = grid.horizon();
    let a = 1.0 / t;
    let phi_l1: f64 = phi
        .iter()
        .zip(grid.cell_measure())
        .map(|(p, m)| p.abs() * m)
        .sum();
    let rhs = (t * (a + gamma)).exp() / a * (phi_l1 + mu.total_variation());
    let mut report = EstimateReport::checked("space-time L1", u.l1_norm(), rhs);
    report.name = format!("space-time L1 (a = {a:.6})");
    Ok(report)
}

/// Total-variation comparison: if the potentials satisfy
/// `R mu <= R nu` pointwise, then `||mu||_TV <= ||nu||_TV`. The
/// hypothesis is checked by two direct solves; a positive adjoint rate
/// leaves the conclusion outside the proved range, so the report is
/// labelled exploratory there.
pub fn tv_domination(
    gen: &GeneratorFamily,
    mu: &MeasureData,
    nu: &MeasureData,
    gamma: f64,
) -> Result<EstimateReport> {
    if !mu.is_nonnegative() || !nu.is_nonnegative() {
        return Err(Error::Precondition(
            "potential comparison needs nonnegative measures".into(),
        ));
    }
    let r_mu = crate::linear::potential(gen, mu)?;
    let r_nu = crate::linear::potential(gen, nu)?;
    let grid = gen.grid();
    let scale = 1.0 + r_nu.sup_norm();
    for i in 0..=grid.n_steps() {
        for j in 0..grid.n_nodes() {
            if r_mu.at(i, j) > r_nu.at(i, j) + 1e-10 * scale {
                return Err(Error::Precondition(format!(
                    "potential ordering fails at step {i}, node {j}: {} > {}",
                    r_mu.at(i, j),
                    r_nu.at(i, j)
                )));
            }
        }
    }
    let mut report =
        EstimateReport::checked("tv domination", mu.total_variation(), nu.total_variation());
    if gamma > 0.0 {
        report.name = "tv domination (exploratory)".into();
    }
    Ok(report)
}

/// Weighted-pairing bound: `int eta d mu <= ||mu||_TV * sup_bound` where
/// the supremum comes from the adjoint potential of `eta`.
pub fn pairing_estimate(
    mu: &MeasureData,
    adjoint: &crate::linear::AdjointPotential,
) -> Result<EstimateReport> {
    let lhs = adjoint.measure_integral(mu)?.abs();
    let rhs = mu.total_variation() * adjoint.sup_bound()?;
    Ok(EstimateReport::checked("adjoint pairing", lhs, rhs))
}
