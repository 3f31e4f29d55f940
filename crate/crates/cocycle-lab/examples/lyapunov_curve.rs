//! Lyapunov exponent of the Anderson-Bernoulli model across an energy window.

use cocycle_lab::family::{make_schrodinger_family, Interval, Potential};
use cocycle_lab::lyapunov::le_curve;

fn main() -> cocycle_lab::Result<()> {
    let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(-1.5, 2.5)?)?;
    let curve = le_curve(&f, &f.j.grid(16), 10_000, 8, 1)?;
    println!("{:>8} {:>10} {:>10}", "E", "lambda", "stderr");
    for e in &curve {
        println!("{:8.3} {:10.5} {:10.2e}", e.a, e.lambda_hat, e.stderr);
    }
    Ok(())
}
