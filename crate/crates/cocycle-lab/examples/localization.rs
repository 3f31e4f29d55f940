//! Exponential decay of eigenvectors in a finite Anderson-Bernoulli box.

use cocycle_lab::anderson::localization_report;
use cocycle_lab::family::{Interval, Potential, SchrodingerFamily};
use cocycle_lab::lyapunov::le_curve;

fn main() -> cocycle_lab::Result<()> {
    let mu = Potential::bernoulli(0.0, 1.0, 0.5);
    let window = (0.3, 0.7);
    let fam = SchrodingerFamily { potential: mu.clone(), j: Interval::new(window.0, window.1)? };
    let lam: Vec<(f64, f64)> = le_curve(&fam, &fam.j.grid(10), 10_000, 4, 1)?.iter().map(|e| (e.a, e.lambda_hat)).collect();
    let r = localization_report(&mu, 2000, window, 11, Some(&lam))?;
    for s in r.states.iter().step_by(10) {
        println!(
            "E = {:.4}  center = {:4}  rate = {:.4}  expected = {:.4}  r2 = {:.3}",
            s.e,
            s.center,
            s.rate,
            s.expected_rate.unwrap_or(f64::NAN),
            s.r_squared
        );
    }
    println!("{} states, pass fraction {:.3}", r.states.len(), r.pass_fraction);
    Ok(())
}
