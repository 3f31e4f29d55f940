//! Standing assumptions of a family: positive exponent, monotone turning in the parameter.

use cocycle_lab::family::{assess_assumptions, make_constant_family, make_schrodinger_family, Interval, Potential};
use cocycle_lab::mat2::Mat2;

fn main() -> cocycle_lab::Result<()> {
    let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(-1.5, 1.5)?)?;
    println!("{:#?}", assess_assumptions(&f, 200, 50)?);
    let h = make_constant_family(Mat2::new(2.0, 0.0, 0.0, 0.5)?);
    println!("{:#?}", assess_assumptions(&h, 200, 50)?);
    Ok(())
}
