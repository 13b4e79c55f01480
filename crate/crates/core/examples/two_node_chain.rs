//! Smallest nontrivial system: a symmetric two-node chain with terminal
//! data (1, 0). The backward solve must reproduce the matrix exponential
//! `u(0) = (1/2 (1 + e^{-2}), 1/2 (1 - e^{-2}))`, and the sampled solve
//! must agree within its error bars.

use parakac::grid::SpaceTimeGrid;
use parakac::linear::{solve_backward, solve_fk_mc, LinearProblem};
use parakac::measures::MeasureData;
use parakac::operators::{GeneratorFamily, RateMatrix};
use parakac::Result;

fn main() -> Result<()> {
    let grid = SpaceTimeGrid::custom(
        vec![[0.0, 0.0], [1.0, 0.0]],
        1,
        vec![1.0, 1.0],
        vec![false, false],
        parakac::grid::uniform_mesh(1.0, 20)?,
    )?;
    let q = RateMatrix::from_dense(&[vec![-1.0, 1.0], vec![1.0, -1.0]])?;
    let gen = GeneratorFamily::single(&grid, q)?;
    let problem = LinearProblem::new(gen, vec![1.0, 0.0], MeasureData::zero(&grid))?;

    let direct = solve_backward(&problem)?;
    let want = [0.5 * (1.0 + (-2.0f64).exp()), 0.5 * (1.0 - (-2.0f64).exp())];
    println!("direct  u(0) = ({:.9}, {:.9})", direct.u.at(0, 0), direct.u.at(0, 1));
    println!("exact   u(0) = ({want:.9?})");
    for j in 0..2 {
        assert!((direct.u.at(0, j) - want[j]).abs() < 1e-9);
    }

    let mc = solve_fk_mc(&problem, 20_000, 7)?;
    let se = mc.stderr.expect("sampling solve reports stderr");
    println!(
        "sampled u(0) = ({:.4} +- {:.4}, {:.4} +- {:.4})",
        mc.u.at(0, 0),
        se.at(0, 0),
        mc.u.at(0, 1),
        se.at(0, 1)
    );
    for j in 0..2 {
        assert!((mc.u.at(0, j) - want[j]).abs() <= 3.0 * se.at(0, j));
    }
    println!("sampled solve within 3 standard errors of the oracle");
    Ok(())
}
