//! The a priori inequalities as checkable reports: truncated energy,
//! space-time L1, total-variation domination, and causal mollification.

use parakac::estimates::{energy_estimate, l1_estimate, mollify, truncate, tv_domination};
use parakac::grid::{SpaceTimeField, SpaceTimeGrid};
use parakac::linear::{solve_backward, LinearProblem};
use parakac::measures::MeasureData;
use parakac::operators::{divergence_form_generator, structural_report};
use parakac::Result;

fn main() -> Result<()> {
    let grid = SpaceTimeGrid::interval(-1.0, 1.0, 13, 1.0, 16)?;
    let gen = divergence_form_generator(&grid, &[1.0], |_, _| 0.12, |_, _| [0.0, 0.0])?;
    let gamma = structural_report(&gen)?.dual_markov_gamma;

    let mut mu = MeasureData::from_density(SpaceTimeField::constant(&grid, 0.25));
    mu.add_atom(8, 6, 0.6)?;
    let phi: Vec<f64> = (0..13).map(|j| 1.0 - grid.position(j)[0].abs()).collect();
    let u = solve_backward(&LinearProblem::new(gen.clone(), phi.clone(), mu.clone())?)?.u;

    for level in [0.2, 0.5, 1.0] {
        let r = energy_estimate(&u, &gen, &mu, &phi, level, gamma)?;
        println!(
            "{}  level {level}: lhs {:.4}  rhs {:.4}  margin {:.4}  holds {}",
            r.name, r.lhs, r.rhs, r.margin, r.holds
        );
        assert!(r.holds);
    }

    let r = l1_estimate(&u, &mu, &phi, gamma.unwrap_or(0.0))?;
    println!("{}: lhs {:.4}  rhs {:.4}  holds {}", r.name, r.lhs, r.rhs, r.holds);
    assert!(r.holds);

    // domination: half the data is dominated by all of it
    let mut half = mu.clone();
    half.scale(0.5);
    let r = tv_domination(&gen, &half, &mu, gamma.unwrap_or(0.0))?;
    println!("{}: {:.4} <= {:.4}", r.name, r.lhs, r.rhs);
    assert!(r.holds);

    // truncation and mollification behave like their definitions
    let t = truncate(&u, 0.3)?;
    println!("sup before/after truncation at 0.3: {:.4} -> {:.4}", u.sup_norm(), t.sup_norm());
    let ramp = SpaceTimeField::from_fn(&grid, |s, _| s);
    let m = 5.0;
    let mol = mollify(&ramp, m)?;
    let t1 = grid.horizon();
    println!(
        "mollified ramp at T: {:.6} (closed form {:.6})",
        mol.at(16, 0),
        t1 - (1.0 - (-m * t1).exp()) / m
    );
    Ok(())
}
