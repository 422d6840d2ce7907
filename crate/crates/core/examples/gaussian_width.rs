//! Monte Carlo Gaussian widths of block-sparse sets against the closed-form
//! upper bound, and the escape-through-the-mesh margin they imply.

use gelfand::widths;

fn main() -> gelfand::Result<()> {
    let (d, trials) = (8, 4000);
    for b in [16, 64, 256] {
        for s in [1, 4] {
            let w = widths::width_d(b, d, s, trials, 7)?;
            let direct = widths::width_d_direct(b, d, s, trials, 8)?;
            let formula = widths::width_upper_formula(b, d, s, 1.0);
            // escape with probability >= 1 - e^-2 once E_m > w(D) + 2
            let mut m = 1;
            while widths::escape_margin(m, direct.mean, 2.0)? <= 0.0 {
                m += 1;
            }
            println!(
                "b={b:<3} s={s}: w(L) {:.3} +- {:.3}, w(D) {:.3}, formula {formula:.3}, escape at m = {m}",
                w.mean,
                w.std_error.unwrap_or(0.0),
                direct.mean
            );
        }
    }
    Ok(())
}
