//! The adjoint machinery behind measure data: the adjoint potential of a
//! test field supplies exact integration weights for terminal data,
//! densities, slices, and atoms, and its supremum bounds how much any
//! measure can contribute.

use parakac::grid::{m_inner, spacetime_inner, SpaceTimeField, SpaceTimeGrid};
use parakac::linear::{
    adjoint_resolvent, check_delta_condition, potential, solve_backward, LinearProblem,
};
use parakac::measures::MeasureData;
use parakac::operators::divergence_form_generator;
use parakac::Result;

fn main() -> Result<()> {
    let grid = SpaceTimeGrid::interval(-1.0, 1.0, 15, 1.0, 20)?;
    let gen = divergence_form_generator(&grid, &[0.5, 1.0], |_, x| 0.1 + 0.05 * x[0].abs(), |t, _| {
        [0.3 * t, 0.0]
    })?;

    let eta = SpaceTimeField::from_fn(&grid, |t, x| 1.0 + 0.4 * t + 0.2 * x[0] * x[0]);
    let adj = adjoint_resolvent(&gen, 0.0, &eta)?;

    // mixed measure: density + a slice + two atoms
    let mut mu = MeasureData::from_density(SpaceTimeField::from_fn(&grid, |_, x| {
        0.3 * (-x[0] * x[0] / 0.2).exp()
    }));
    let mut g = vec![0.0; 15];
    g[7] = 0.5;
    mu.add_slice(0.5, g)?;
    mu.add_atom(3, 2, 0.2)?;
    mu.add_atom(15, 12, 0.4)?;

    let phi: Vec<f64> = (0..15).map(|j| 1.0 - grid.position(j)[0].abs()).collect();
    let problem = LinearProblem::new(gen.clone(), phi.clone(), mu.clone())?;
    let u = solve_backward(&problem)?.u;

    // (u, eta) = (phi, terminal weight) + integral of the adjoint
    // potential against the measure, to machine precision
    let lhs = spacetime_inner(&u, &eta)?;
    let rhs = m_inner(&phi, adj.terminal_weight(), &grid)? + adj.measure_integral(&mu)?;
    println!("pairing (u, eta)        = {lhs:.12}");
    println!("terminal + measure side = {rhs:.12}");
    assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));

    // the same weights bound any measure by its total variation
    let bound = adj.sup_bound()?;
    println!("measure integral {:.6} <= TV {:.6} x sup {:.6}", adj.measure_integral(&mu)?, mu.total_variation(), bound);
    assert!(adj.measure_integral(&mu)?.abs() <= mu.total_variation() * bound + 1e-12);

    // admissibility witness: the constant field has a bounded potential
    let delta = check_delta_condition(&gen)?;
    println!("unit-witness potential bound: {:.6} (holds: {})", delta.bound, delta.holds);

    // potentials respond linearly to the data
    let mut mu2 = mu.clone();
    mu2.scale(2.0);
    let (p1, p2) = (potential(&gen, &mu)?, potential(&gen, &mu2)?);
    assert!((2.0 * p1.at(0, 7) - p2.at(0, 7)).abs() < 1e-12);
    println!("potential scales linearly with the measure");
    Ok(())
}
