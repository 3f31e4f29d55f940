//! Potential values {0, 5} open a gap in (2, 3): flat rotation number there and
//! uniform hyperbolicity coincide.

use cocycle_lab::family::{make_schrodinger_family, Interval, Potential};
use cocycle_lab::rotation::{johnson_scan, uh_test, JohnsonOptions};

fn main() -> cocycle_lab::Result<()> {
    let f = make_schrodinger_family(Potential::bernoulli(0.0, 5.0, 0.5), Interval::new(1.5, 3.5)?)?;
    let eta = 1e-3f64.exp();
    for e in [1.0, 2.5] {
        let r = uh_test(&f, e, 10_000, 20, eta, 1)?;
        println!("E = {e}: uh = {}, min rate = {:.4}, image diameter = {:.2e}", r.is_uh, r.min_rate, r.max_image_diameter);
    }
    let r = johnson_scan(&f, &f.j.grid(20), 10_000, 1, &JohnsonOptions { reps: 4, words: 20, eta_floor: eta })?;
    for c in &r.cells {
        println!("[{:.2}, {:.2}] flat = {:5} uh = {:5}", c.lo, c.hi, c.flat, c.uh);
    }
    println!("disagreement fraction {:.3}", r.disagreement_fraction);
    Ok(())
}
