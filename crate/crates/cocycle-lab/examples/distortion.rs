//! Regularity constants of the circle maps and a check of the distortion inequality.

use cocycle_lab::family::{make_schrodinger_family, sample_word, Interval, Potential};
use cocycle_lab::regularity::{check_distortion_bound, distortion_constants, SAFETY_FACTOR};

fn main() -> cocycle_lab::Result<()> {
    let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(-1.5, 1.5)?)?;
    let c = distortion_constants(&f, 200)?;
    println!("{c:#?}");
    let word = sample_word(&f, 1, 500);
    let r = check_distortion_bound(&f, &word, &c.inflated(SAFETY_FACTOR), (0.4, 0.401), (0.2, 0.21), 1000, 1)?;
    println!("worst lhs {:.4}, rhs {:.4}, slack {:.4}", r.worst_lhs, r.rhs, r.worst_slack);
    Ok(())
}
