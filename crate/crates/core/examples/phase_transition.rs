//! Success rates of group basis pursuit over a grid of measurement counts,
//! and the median threshold for inner versus outer sparsity.

use gelfand::recovery::{self, DecoderKind, PhaseConfig, SolverConfig, SparsityMode};
use gelfand::MixedShape;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config: PhaseConfig = serde_json::from_str(
        r#"{"b": 32, "d": 8, "mode": "outer", "sparsity": [1, 2, 4], "m": [10, 20, 40, 80, 120], "trials": 20, "decoder": "group_bp"}"#,
    )?;
    for cell in recovery::phase_transition(&config, 11)? {
        println!(
            "s={} m={:<4} success {:.2}",
            cell.s_or_t, cell.m, cell.success_rate
        );
    }

    let shape = MixedShape::new(32, 16)?;
    let solver = SolverConfig::default();
    let outer = recovery::success_threshold(
        shape,
        SparsityMode::Outer,
        2,
        DecoderKind::GroupBp,
        &solver,
        9,
        1,
    )?;
    let inner = recovery::success_threshold(
        shape,
        SparsityMode::Inner,
        2,
        DecoderKind::Bp,
        &solver,
        9,
        2,
    )?;
    println!(
        "50% point, b=32 d=16: two active rows {}, two entries per row {}",
        outer.median, inner.median
    );
    Ok(())
}
