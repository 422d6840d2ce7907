//! Upper and lower Gelfand-number bounds for l_1(l_2) -> l_2(l_2) across m,
//! plus the regime of a genuinely mixed embedding.

use gelfand::bounds::{self, BoundParams};
use gelfand::MixedShape;

fn main() -> gelfand::Result<()> {
    let (b, d) = (256, 16);
    let shape = MixedShape::new(b, d)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "m", "upper", "lower", "flat");
    for m in [4, 16, 64, 256, 1024, 4096] {
        let upper = bounds::bound_outer(&BoundParams::outer(shape, m, 1.0, 2.0, 1.0)?)?;
        let lower = bounds::lower_bound_outer(m, b, d, 1.0, 2.0, 1.0, 1.0)?;
        // the same budget spent on an unstructured vector of length b d
        let flat = bounds::bound_flat(m, b * d, 1.0, 2.0, 1.0)?;
        println!("{m:>6} {upper:>10.5} {lower:>10.5} {flat:>10.5}");
    }

    let (regime, value) = bounds::bound_mixed(&BoundParams::mixed(
        MixedShape::new(64, 64)?,
        2048,
        1.0,
        0.5,
        1.0,
    )?)?;
    println!("l_1(l_1/2) at m = 2048: {regime}, {value:.3e}");

    if let Some(m) = bounds::implied_m_outer(8, b, d, 1.0, 1.0, 1.0)? {
        println!("stable recovery of 8 active rows forces m >= {m:.1}");
    }
    Ok(())
}
