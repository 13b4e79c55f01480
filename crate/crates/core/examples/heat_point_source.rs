//! Diffusion on an interval forced by a single point mass: the potential
//! of a Dirac-type source. Prints the solution profile at a few times and
//! verifies the weighted duality identity against three test fields.

use parakac::grid::{SpaceTimeField, SpaceTimeGrid};
use parakac::linear::{check_duality, check_weak_form, solve_backward, LinearProblem};
use parakac::measures::MeasureData;
use parakac::operators::divergence_form_generator;
use parakac::Result;

fn main() -> Result<()> {
    let grid = SpaceTimeGrid::interval(-1.0, 1.0, 21, 1.0, 32)?;
    let gen = divergence_form_generator(&grid, &[1.0], |_, _| 0.1, |_, _| [0.0, 0.0])?;

    // unit mass dropped on the center node halfway through the horizon
    let mut mu = MeasureData::zero(&grid);
    mu.add_atom(16, 10, 1.0)?;
    let problem = LinearProblem::new(gen, vec![0.0; 21], mu)?;
    let u = solve_backward(&problem)?.u;

    for i in [0, 8, 15, 16, 24] {
        let t = grid.time(i);
        let row: Vec<String> =
            (0..21).step_by(4).map(|j| format!("{:.4}", u.at(i, j))).collect();
        println!("t = {t:.3}  u = [{}]", row.join(", "));
    }

    // the duality pairing is exact for the direct solve
    for (k, eta) in [
        SpaceTimeField::constant(&grid, 1.0),
        SpaceTimeField::from_fn(&grid, |t, x| 1.0 + t + x[0] * x[0]),
        SpaceTimeField::from_fn(&grid, |t, _| (2.0 - t).sqrt()),
    ]
    .iter()
    .enumerate()
    {
        let res = check_duality(&u, &problem, eta)?;
        println!("duality residual, test field {}: {res:.3e}", k + 1);
        assert!(res < 1e-9);
    }

    // weak-form residual decays with the time step
    let eta = SpaceTimeField::from_fn(&grid, |t, x| 1.0 + 0.5 * t + 0.2 * x[0]);
    let res = check_weak_form(&u, &problem, &eta)?;
    println!("weak-form residual: {res:.3e}");
    Ok(())
}
