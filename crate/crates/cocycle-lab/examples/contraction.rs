//! Search for a power of the random projective action that contracts dist^s on average.

use cocycle_lab::family::{make_schrodinger_family, Interval, Potential};
use cocycle_lab::regularity::{contraction_table, select_contraction};

fn main() -> cocycle_lab::Result<()> {
    let f = make_schrodinger_family(Potential::bernoulli(0.0, 1.0, 0.5), Interval::new(0.3, 0.9)?)?;
    let s_grid = [1.0, 0.8, 0.6, 0.4, 0.2];
    let t = contraction_table(&f, 0.5, &s_grid, &[4, 8, 16, 32, 64], 2000, 1)?;
    print!("{:>4}", "K");
    for s in &s_grid {
        print!("  s={s:<4}");
    }
    println!();
    for (k, row) in t.k_grid.iter().zip(&t.ratio) {
        print!("{k:4}");
        for r in row {
            print!("  {r:6.3}");
        }
        println!();
    }
    println!("{:?}", select_contraction(&t));
    Ok(())
}
