//! Decay of the probability that (1/n) log |T_n e1| leaves an epsilon band.

use cocycle_lab::family::{make_schrodinger_family, Interval, Potential};
use cocycle_lab::lyapunov::{estimate_le, ld_rate};

fn main() -> cocycle_lab::Result<()> {
    let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(-1.5, 1.5)?)?;
    let lam = estimate_le(&f, 0.5, 10_000, 20, 3)?.lambda_hat;
    let r = ld_rate(&f, 0.5, 0.1 * lam, &[200, 400, 800, 1600], 2000, 4)?;
    for (n, p) in r.n_list.iter().zip(&r.p_hat) {
        println!("n = {n:5}  p = {p:.4}");
    }
    println!("zeta = {:.3e} per block, R^2 = {:.3}", r.zeta_hat, r.r_squared);
    Ok(())
}
