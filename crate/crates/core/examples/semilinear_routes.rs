//! Semilinear solves three ways: fixed-point iteration, a shifted
//! iteration that forces contraction, and the semi-implicit sweep that
//! handles drivers without a Lipschitz bound. Includes the closed-form
//! cubic absorption check.

use parakac::grid::SpaceTimeGrid;
use parakac::measures::MeasureData;
use parakac::operators::divergence_form_generator;
use parakac::semilinear::{solve_semilinear, Driver, Route, SemilinearProblem};
use parakac::Result;

fn main() -> Result<()> {
    // pure-reaction sanity check: with no spatial motion the cubic
    // driver has the closed form u(t) = (1/4 + 2 (T - t))^{-1/2}
    let grid0 = SpaceTimeGrid::custom(
        vec![[0.0, 0.0]],
        1,
        vec![1.0],
        vec![false],
        parakac::grid::uniform_mesh(1.0, 200)?,
    )?;
    let zero =
        parakac::operators::GeneratorFamily::single(&grid0, parakac::operators::RateMatrix::zero(1))?;
    let p0 = SemilinearProblem::new(zero, vec![2.0], MeasureData::zero(&grid0), Driver::cubic(1.0)?)?;
    let sol0 = solve_semilinear(&p0, 1e-12, 1, Route::SemiImplicit)?;
    let worst = (0..=200)
        .map(|i| {
            let want = (0.25 + 2.0 * (1.0 - grid0.time(i))).powf(-0.5);
            (sol0.u.at(i, 0) - want).abs()
        })
        .fold(0.0f64, f64::max);
    println!("cubic closed-form error (200 steps): {worst:.2e}");
    assert!(worst < 2e-4);

    // diffusion + saturating absorption, all three routes
    let grid = SpaceTimeGrid::interval(-1.0, 1.0, 13, 1.0, 40)?;
    let gen = divergence_form_generator(&grid, &[1.0], |_, _| 0.1, |_, _| [0.0, 0.0])?;
    let phi: Vec<f64> = (0..13).map(|j| (1.0 - grid.position(j)[0].powi(2)).max(0.0)).collect();
    let p = SemilinearProblem::new(gen, phi, MeasureData::zero(&grid), Driver::saturating(0.8)?)?;

    let a = solve_semilinear(&p, 1e-10, 300, Route::Picard)?;
    let b = solve_semilinear(&p, 1e-10, 300, Route::PicardShifted(0.5))?;
    let c = solve_semilinear(&p, 1e-10, 300, Route::SemiImplicit)?;
    println!("fixed-point iterations: {}", a.iterations);
    println!("gap plain vs shifted      : {:.2e}", a.u.max_abs_diff(&b.u)?);
    println!("gap plain vs semi-implicit: {:.2e}", a.u.max_abs_diff(&c.u)?);
    assert!(a.u.max_abs_diff(&b.u)? < 1e-3);
    assert!(a.u.max_abs_diff(&c.u)? < 1e-3);

    let auto = solve_semilinear(&p, 1e-10, 300, Route::Auto)?;
    println!("auto route picked: {}", auto.route);
    Ok(())
}
