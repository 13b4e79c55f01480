//! Matrix-exponential actions for rate matrices.
//!
//! Everything is computed by Taylor series on substeps short enough that
//! `||dt Q|| <= 1`, so the series converge to machine precision in a few
//! dozen terms. The Duhamel integrals use the exact phi-function weights
//! for piecewise-linear sources; trapezoid-in-time quadrature would lose
//! accuracy badly for strongly killed chains.

use crate::operators::RateMatrix;

/// Series tolerance, relative to the accumulated result.
const SERIES_TOL: f64 = 1e-15;
const MAX_TERMS: usize = 200;

fn substeps(q: &RateMatrix, dt: f64) -> (usize, f64) {
    let n = (dt * q.inf_norm()).ceil().max(1.0) as usize;
    (n, dt / n as f64)
}

/// Simultaneously apply `e^{dQ}`, `d phi1(dQ)` and `d^2 phi2(dQ)` to `v`
/// by one Taylor series; requires `d ||Q|| <= 1` for fast convergence.
/// `d phi1(dQ) v = int_0^d e^{sQ} v ds`,
/// `d^2 phi2(dQ) v = int_0^d (d - s) e^{sQ} v ds`.
fn taylor_triple(q: &RateMatrix, d: f64, v: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut e = v.to_vec();
    let mut p1: Vec<f64> = v.iter().map(|x| x * d).collect();
    let mut p2: Vec<f64> = v.iter().map(|x| x * d * d * 0.5).collect();
    let mut term = v.to_vec();
    let mut scratch = vec![0.0; n];
    for k in 1..MAX_TERMS {
        q.matvec(&term, &mut scratch);
        let kf = k as f64;
        for j in 0..n {
            term[j] = scratch[j] * d / kf;
        }
        let w1 = d / (kf + 1.0);
        let w2 = d * d / ((kf + 1.0) * (kf + 2.0));
        let mut max_rel = 0.0f64;
        for j in 0..n {
            e[j] += term[j];
            p1[j] += term[j] * w1;
            p2[j] += term[j] * w2;
            let scale = e[j].abs().max(1.0);
            max_rel = max_rel.max(term[j].abs() / scale);
        }
        if max_rel < SERIES_TOL {
            break;
        }
    }
    (e, p1, p2)
}

/// `e^{dt Q} v`.
pub fn expmv(q: &RateMatrix, dt: f64, v: &[f64]) -> Vec<f64> {
    if dt == 0.0 {
        return v.to_vec();
    }
    let (n, d) = substeps(q, dt);
    let mut out = v.to_vec();
    for _ in 0..n {
        out = taylor_triple(q, d, &out).0;
    }
    out
}

/// `int_0^dt e^{s Q} g(s) ds` for `g` linear in `s` between `g0 = g(0)`
/// and `g1 = g(dt)`.
pub fn integ_exp(q: &RateMatrix, dt: f64, g0: &[f64], g1: &[f64]) -> Vec<f64> {
    let dim = g0.len();
    if dt == 0.0 {
        return vec![0.0; dim];
    }
    let (n, d) = substeps(q, dt);
    // Sum_k e^{k d Q} I_k by Horner, where I_k is the exact integral over
    // substep k against the restriction of g:
    // I_k = P1 g((k+1)d) - (1/d) P2 (g((k+1)d) - g(kd)).
    let sample = |s: f64| -> Vec<f64> {
        let theta = s / dt;
        (0..dim).map(|j| g0[j] * (1.0 - theta) + g1[j] * theta).collect()
    };
    let mut acc = vec![0.0; dim];
    for k in (0..n).rev() {
        let gk0 = sample(k as f64 * d);
        let gk1 = sample((k + 1) as f64 * d);
        let dg: Vec<f64> = gk1.iter().zip(&gk0).map(|(a, b)| a - b).collect();
        let (_, p1, _) = taylor_triple(q, d, &gk1);
        let (_, _, p2) = taylor_triple(q, d, &dg);
        if k + 1 < n {
            acc = taylor_triple(q, d, &acc).0;
        }
        for j in 0..dim {
            acc[j] += p1[j] - p2[j] / d;
        }
    }
    acc
}

/// `phi1(dt Q) v = (1/dt) int_0^dt e^{s Q} v ds`.
pub fn phi1v(q: &RateMatrix, dt: f64, v: &[f64]) -> Vec<f64> {
    if dt == 0.0 {
        return v.to_vec();
    }
    let mut out = integ_exp(q, dt, v, v);
    for x in &mut out {
        *x /= dt;
    }
    out
}

/// One exact backward step of `-du/ds = Q u + g` over a step of length
/// `dt`, with `g` linear in time: given the value at the step's right end
/// and the source samples there, return the value at the left end.
pub fn duhamel_step(
    q: &RateMatrix,
    dt: f64,
    u_right: &[f64],
    g_left: &[f64],
    g_right: &[f64],
) -> Vec<f64> {
    // u_left = e^{dt Q} u_right + int_0^dt e^{s Q} g(t_left + s) ds, and
    // the integrand sees g_left at s = 0.
    let mut out = expmv(q, dt, u_right);
    let src = integ_exp(q, dt, g_left, g_right);
    for j in 0..out.len() {
        out[j] += src[j];
    }
    out
}
