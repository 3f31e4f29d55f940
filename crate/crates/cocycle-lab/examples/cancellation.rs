//! Norm cancellation when the expanded direction of one matrix meets the
//! contracted direction of the next.

use std::f64::consts::PI;

use cocycle_lab::mat2::{cancellation_norm, operator_norm, singular_directions, Mat2};

fn main() -> cocycle_lab::Result<()> {
    // A expands along the x axis by 4; B contracts that axis and expands at 0.3 rad.
    let a = Mat2::diag(4.0);
    let b = Mat2::rotation(0.3).mul_raw(&Mat2::diag(3.0)).mul_raw(&Mat2::rotation(PI / 2.0).inverse());
    let sa = singular_directions(&a)?;
    let sb = singular_directions(&b)?;
    println!("x+(A) = {:.6}, x-(B) = {:.6}", sa.x_plus, sb.x_minus);
    println!("|A| = {}, |B| = {}", operator_norm(&a), operator_norm(&b));
    println!("|BA| = {:.12} (|A|/|B| = {:.12})", cancellation_norm(&a, &b)?, 4.0 / 3.0);
    Ok(())
}
