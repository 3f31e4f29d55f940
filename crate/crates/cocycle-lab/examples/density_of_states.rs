//! Rotation number as the integrated density of states, checked against
//! eigenvalue counts of a large box.

use cocycle_lab::anderson::{build_box, sturm_count};
use cocycle_lab::family::{make_schrodinger_family, Interval, Potential};
use cocycle_lab::rotation::rotation_curve;

fn main() -> cocycle_lab::Result<()> {
    let mu = Potential::bernoulli(0.0, 1.0, 0.5);
    let f = make_schrodinger_family(mu.clone(), Interval::new(-2.0, 3.0)?)?;
    let grid = f.j.grid(10);
    let curve = rotation_curve(&f, &grid, 10_000, 0.0, 1, 4)?;
    let b = build_box(&mu, 5000, 2)?;
    let base = sturm_count(&b.potential, grid[0]);
    println!("{:>6} {:>12} {:>12}", "E", "rho/2", "box count");
    for (e, rho) in grid.iter().zip(&curve.rho_hat) {
        // Two sites per block.
        let counted = (sturm_count(&b.potential, *e) - base) as f64 / 5000.0;
        println!("{e:6.2} {:12.5} {counted:12.5}", (rho - curve.rho_hat[0]) / 2.0);
    }
    Ok(())
}
