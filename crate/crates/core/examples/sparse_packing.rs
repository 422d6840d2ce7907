//! Build the structured packing behind the lower bounds and check its
//! certificate.

use gelfand::packing::{self, ScanOrder};
use gelfand::ExponentPair;

fn main() -> gelfand::Result<()> {
    let radius = ExponentPair::new(1.0, 2.0)?;
    let measured = ExponentPair::new(2.0, 2.0)?;
    let w = packing::build_sparse_packing(64, 64, 2, 2, radius, measured, 1)?;
    println!(
        "{} vectors (floor {}), verification {:?}",
        w.len(),
        w.cardinality_floor(),
        w.verification
    );
    println!(
        "min distance {:.4} >= {:.4}, max radius {:.4} <= {:.4}",
        w.observed_min_distance, w.distance_floor, w.observed_max_radius, w.radius_cap
    );

    // the ingredients: a greedy code and the volumetric cap
    let code = packing::gv_code(4, 6, 3, ScanOrder::Lexicographic)?;
    println!(
        "greedy code over 4 letters, length 6, distance 3: {} words (GV bound {:.1})",
        code.len(),
        packing::gv_bound(4, 6, 3)
    );
    println!(
        "volume cap on 0.5-packings of the unit l_1 ball in R^8: {:.3e}",
        packing::volume_packing_cap(8, 1.0, 0.5)?
    );
    Ok(())
}
