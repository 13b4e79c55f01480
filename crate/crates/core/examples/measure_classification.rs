//! Measures as first-class data: total variation, occupation rates along
//! paths, the round trip between the two representations, and the
//! admissibility classification.

use parakac::grid::{SpaceTimeField, SpaceTimeGrid};
use parakac::measures::{classify, to_revuz_rates, MeasureData};
use parakac::operators::divergence_form_generator;
use parakac::process::{accumulate, path_rng, sample_path};
use parakac::Result;

fn main() -> Result<()> {
    let grid = SpaceTimeGrid::interval(-1.0, 1.0, 11, 1.0, 10)?;
    let gen = divergence_form_generator(&grid, &[1.0], |_, _| 0.15, |_, _| [0.0, 0.0])?;

    let mut mu = MeasureData::from_density(SpaceTimeField::from_fn(&grid, |_, x| {
        (-x[0] * x[0] / 0.1).exp()
    }));
    mu.add_atom(5, 5, 0.8)?;
    let mut g = vec![0.0; 11];
    g[2] = 0.3;
    mu.add_slice(0.7, g)?;

    println!("total variation: {:.4}", mu.total_variation());

    // rates and back: the occupation representation is exact
    let rates = to_revuz_rates(&mu);
    let back = rates.to_measure()?;
    println!("round-trip TV drift: {:.2e}", (back.total_variation() - mu.total_variation()).abs());

    // a path accumulates the measure through its occupation integral
    let mut rng = path_rng(3, 0, 0);
    let path = sample_path(&gen, 0.0, 5, &mut rng)?;
    println!("one path accumulates A = {:.4}", accumulate(&path, &rates));

    let c = classify(&mu, &gen)?;
    println!("bounded TV: {}", c.in_m0b);
    println!("finite potential everywhere: {} (sup {:.4})", c.in_r, c.potential_sup);
    println!("path-integrable via shrinking nests: {}", c.in_ql1);
    println!("nest capacities: {:?}", c.nest_capacities.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>());
    assert!(c.in_m0b && c.in_r && c.in_ql1);
    Ok(())
}
