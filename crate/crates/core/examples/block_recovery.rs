//! Recover one block-sparse signal with each decoder. Only the decoders that
//! use the row structure succeed at this budget; plain basis pursuit needs
//! roughly twice as many measurements.

use gelfand::recovery::{self, DecoderKind, SolverConfig, SparsityMode};
use gelfand::{rng, MixedShape};

fn main() -> gelfand::Result<()> {
    let shape = MixedShape::new(64, 8)?;
    let (s, m) = (3, 90);
    let x = recovery::random_signal(shape, SparsityMode::Outer, s, &mut rng::stream(3, &[]))?;
    let model = recovery::gaussian_model(m, shape.b, shape.d, 4)?;
    let y = model.measure(x.values())?;
    let config = SolverConfig::default();
    for kind in [
        DecoderKind::GroupBp,
        DecoderKind::Bp,
        DecoderKind::L2l1Bp,
        DecoderKind::BlockGreedy,
    ] {
        let out = recovery::decode(kind, &model, &y, shape, s, &config)?;
        println!(
            "{kind:<12} relative error {:.2e} after {} iterations (converged: {})",
            recovery::relative_error(&x, &out.estimate)?,
            out.iterations,
            out.converged
        );
    }
    Ok(())
}
