//! Jump operators built from a power-law kernel, with constant and
//! space-varying exponents. Long jumps past the truncation radius become
//! killing, visible as a row-sum deficit.

use parakac::grid::SpaceTimeGrid;
use parakac::operators::{fractional_generator, jump_kernel_weight, structural_report};
use parakac::Result;

fn main() -> Result<()> {
    // d = 1, exponent 1: the kernel weight is 1/pi
    let w = jump_kernel_weight(1.0, 1);
    println!("kernel weight (exponent 1, 1d) = {w:.10}  (1/pi = {:.10})", 1.0 / std::f64::consts::PI);
    assert!((w - 1.0 / std::f64::consts::PI).abs() < 1e-12);

    let grid = SpaceTimeGrid::interval(-1.0, 1.0, 25, 0.5, 10)?;
    let gen = fractional_generator(&grid, |_| 1.0, None)?;
    let q = gen.stage(0);

    // rates decay monotonically with distance from the center node
    let center = 12;
    let mut pairs: Vec<(f64, f64)> = q
        .off_row(center)
        .iter()
        .map(|&(k, r)| (grid.distance(center, k), r))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (d, r) in pairs.iter().take(5) {
        println!("distance {d:.3}  rate {r:.4}");
    }
    for win in pairs.windows(2) {
        assert!(win[0].1 >= win[1].1 - 1e-12);
    }
    println!("killing deficit at center node: {:.4}", q.deficit(center));
    assert!(q.deficit(center) > 0.0);

    // space-varying exponent: heavier tails on the right half
    let gen_v = fractional_generator(&grid, |x| 0.6 + 0.4 * (x[0] + 1.0), None)?;
    let report = structural_report(&gen_v)?;
    println!(
        "variable exponent: shift {:.4}  sector {:.3}  markov {}",
        report.alpha0, report.sector_k, report.markov
    );
    Ok(())
}
