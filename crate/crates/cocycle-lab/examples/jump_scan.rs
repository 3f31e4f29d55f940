//! Classify grid cells by how the lifted orbit turns and locate the
//! cancellation parameter inside each jump cell.

use cocycle_lab::family::{make_schrodinger_family, sample_word, Interval, Potential};
use cocycle_lab::jumpscan::scan_word_streaming;
use cocycle_lab::lyapunov::le_curve;

fn main() -> cocycle_lab::Result<()> {
    let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(0.5, 0.6)?)?;
    let n = 2000;
    let lam: Vec<(f64, f64)> = le_curve(&f, &f.j.grid(2), 10_000, 4, 1)?.iter().map(|e| (e.a, e.lambda_hat)).collect();
    let word = sample_word(&f, 4, n);
    let r = scan_word_streaming(&f, &word, &f.j.grid(4000), 0.0, 0.05, &lam)?;
    println!("{:?}", r.counts);
    for rec in r.records.iter().take(10) {
        println!(
            "cell {:4}  jump at m = {:4}  a = {:.8}  residual = {:.1e}  psi deviation = {:.3}",
            rec.cell, rec.m_k, rec.a_k, rec.residual, rec.psi_dev
        );
    }
    Ok(())
}
