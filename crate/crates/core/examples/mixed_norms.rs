//! Mixed quasi-norms, their constants and best-term errors of a small array.

use gelfand::norms::{self, ExponentPair, MixedArray};

fn main() -> gelfand::Result<()> {
    let x = MixedArray::from_rows(&[
        vec![3.0, -4.0, 0.0, 0.0],
        vec![0.5, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 2.0],
    ])?;
    for (p, q) in [(1.0, 2.0), (0.5, 1.0), (2.0, f64::INFINITY)] {
        let e = ExponentPair::new(p, q)?;
        println!(
            "{e}: norm {:.4}, quasi-triangle constant {}, split constant {:.4}",
            norms::mixed_norm(&x, e),
            norms::quasi_norm_constant(e),
            norms::split_constant(e)
        );
    }

    // Stechkin: the s-row error in l_2(l_2) is at most s^-(1/p - 1/2) ||x||_{l_p(l_2)}
    let strong = norms::mixed_norm(&x, ExponentPair::new(1.0, 2.0)?);
    let weak = ExponentPair::new(2.0, 2.0)?;
    for s in 1..=3 {
        let sigma = norms::sigma_outer(&x, s, weak)?;
        println!(
            "s = {s}: sigma_outer {sigma:.4} <= {:.4}",
            strong / (s as f64).sqrt()
        );
    }
    let t = norms::sigma_inner(&x, 1, weak)?;
    println!("best one-entry-per-row error: {t:.4}");
    Ok(())
}
