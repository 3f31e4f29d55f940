//! Orbits at nearby energies driven by the same word settle at a distance set by the energy gap.

use cocycle_lab::family::{make_schrodinger_family, Interval, Potential};
use cocycle_lab::regularity::sync_distance;

fn main() -> cocycle_lab::Result<()> {
    let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(-1.5, 1.5)?)?;
    for d in [1e-2, 1e-3, 1e-4, 1e-5] {
        let rows = sync_distance(&f, 0.5, 0.5 + d, 4000, 500, 2)?;
        let last = rows.last().unwrap();
        println!("gap {d:.0e}: median distance at m = {} is {:.2e} (10%: {:.1e}, 90%: {:.1e})", last.m, last.q50, last.q10, last.q90);
    }
    Ok(())
}
