//! Pathwise verification of a semilinear solution: along each sampled
//! path the value process telescopes exactly into driver, measure, and
//! martingale increments, and the martingale part averages to zero.

use parakac::grid::SpaceTimeGrid;
use parakac::measures::MeasureData;
use parakac::operators::divergence_form_generator;
use parakac::process::{path_rng, sample_path};
use parakac::semilinear::{
    martingale_residual, reconstruct_bsde, solve_semilinear, Driver, Route, SemilinearProblem,
};
use parakac::Result;

fn main() -> Result<()> {
    let grid = SpaceTimeGrid::interval(-1.0, 1.0, 9, 1.0, 16)?;
    let gen = divergence_form_generator(&grid, &[1.0], |_, _| 0.12, |_, _| [0.0, 0.0])?;
    let phi: Vec<f64> = (0..9).map(|j| 1.5 * (-grid.position(j)[0].powi(2) / 0.3).exp()).collect();
    let mut mu = MeasureData::zero(&grid);
    mu.add_atom(6, 4, 0.3)?;
    let p = SemilinearProblem::new(gen, phi, mu, Driver::saturating(0.6)?)?;
    let sol = solve_semilinear(&p, 1e-10, 300, Route::Auto)?;

    // one path in detail
    let mut rng = path_rng(11, 0, 0);
    let path = sample_path(&p.gen, 0.0, 4, &mut rng)?;
    let b = reconstruct_bsde(&sol.u, &path, &p)?;
    println!("checkpoints (elapsed): {:?}", b.times.iter().map(|t| (t * 1e3).round() / 1e3).collect::<Vec<_>>());
    println!("value process Y:       {:?}", b.y.iter().map(|y| (y * 1e4).round() / 1e4).collect::<Vec<_>>());
    println!("telescoping defect:    {:.2e}", b.residual);
    assert!(b.residual < 1e-12);

    // the compensated increments have mean zero over many paths
    let n = 30_000;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for k in 0..n {
        let mut rng = path_rng(11, 1, k);
        let path = sample_path(&p.gen, 0.0, 4, &mut rng)?;
        let m = reconstruct_bsde(&sol.u, &path, &p)?.terminal_martingale();
        sum += m;
        sumsq += m * m;
    }
    let mean = sum / n as f64;
    let se = ((sumsq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
    println!("martingale mean over {n} paths: {mean:.5} +- {se:.5}");
    assert!(mean.abs() <= 3.0 * se + 5e-3);

    // per-cell agreement between the field and the path functional
    let report = martingale_residual(&sol.u, &p, 2000, 23)?;
    let worst = (0..16)
        .flat_map(|i| (0..9).map(move |j| (i, j)))
        .map(|(i, j)| report.residual.at(i, j) - 3.0 * report.stderr.at(i, j))
        .fold(f64::NEG_INFINITY, f64::max);
    println!("worst residual excess over 3 stderr: {worst:.2e}");
    Ok(())
}
