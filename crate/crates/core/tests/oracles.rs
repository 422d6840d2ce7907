//! Reference values computed outside this crate.
//!
//! Floating-point constants come from `oracles/closed_forms.py` (mpmath, 50
//! digits). Code sizes are classical lexicode results.
#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use gelfand::besov::{self, BesovParams, BlockVariant};
use gelfand::bounds::{self, BoundParams};
use gelfand::norms::{self, ExponentPair, MixedArray, MixedShape};
use gelfand::packing::{self, ScanOrder};
use gelfand::widths;
use rand::Rng;

fn draw_seed7() -> MixedArray {
    // numpy default_rng(7).standard_normal((4, 4))
    MixedArray::from_rows(&[
        vec![
            0.0012301533574825742,
            0.2987455375084699,
            -0.2741378553622176,
            -0.8905918387572742,
        ],
        vec![
            -0.45467078517172255,
            -0.9916465549964624,
            0.060143602597438485,
            1.3402152455545335,
        ],
        vec![
            -0.49220651855132963,
            -0.6204748998199404,
            0.4898420501851982,
            0.35688700816006075,
        ],
        vec![
            0.10541424899789856,
            -0.9304680447082047,
            -0.02925182246327349,
            0.6953031944582878,
        ],
    ])
    .unwrap()
}

#[test]
fn mixed_norm_of_fixed_draw() {
    let e = ExponentPair::new(0.5, 1.5).unwrap();
    assert_relative_eq!(
        norms::mixed_norm(&draw_seed7(), e),
        22.385653093677707313,
        max_relative = 1e-12
    );
}

#[test]
fn bound_values() {
    let shape = MixedShape::new(8, 4).unwrap();
    let v = bounds::bound_outer(&BoundParams::outer(shape, 16, 1.0, 2.0, 1.0).unwrap()).unwrap();
    assert_relative_eq!(v, 0.51882395975417655933, max_relative = 1e-13);

    let v = bounds::bound_flat(64, 1024, 1.0, 2.0, 1.0).unwrap();
    assert_relative_eq!(v, 0.24278941242359927471, max_relative = 1e-13);

    let shape = MixedShape::new(64, 64).unwrap();
    let (_, v) =
        bounds::bound_mixed(&BoundParams::mixed(shape, 2048, 1.0, 0.5, 1.0).unwrap()).unwrap();
    assert_relative_eq!(v, 0.0015213429040403395449, max_relative = 1e-12);

    assert_eq!(
        bounds::lower_bound_outer(1, 8, 8, 1.0, 2.0, 1.0, 1.0).unwrap(),
        1.0
    );
    let v = bounds::lower_bound_outer(64, 64, 16, 1.0, 2.0, 1.0, 1.0).unwrap();
    assert_relative_eq!(v, 0.07581633246407917795, max_relative = 1e-13);

    let v = bounds::implied_m_outer(2, 8, 2, 1.0, 1.0, 1.0)
        .unwrap()
        .unwrap();
    assert_relative_eq!(v, 11.923184256104575926, max_relative = 1e-13);
}

#[test]
fn width_values() {
    assert_relative_eq!(
        widths::width_upper_formula(2, 100, 1, 1.0),
        11.301209891047537845,
        max_relative = 1e-13
    );
    let means = [
        (1, 0.79788456080286535588),
        (2, 1.2533141373155002512),
        (3, 1.5957691216057307118),
        (10, 3.0843277597998638995),
        (100, 9.9750316395510508721),
    ];
    for (m, want) in means {
        assert_relative_eq!(
            widths::gaussian_norm_mean(m).unwrap(),
            want,
            max_relative = 1e-12
        );
    }
}

#[test]
fn besov_block_values() {
    assert_eq!(besov::block_dimension(10, 2).unwrap(), 23645);
    let params = BesovParams::sharp(2, 0.3, 1.0, 2.0);
    let v = besov::block_bound(10, 1024, &params, BlockVariant::Impr).unwrap();
    assert_relative_eq!(v, 0.125, max_relative = 1e-13);
}

#[test]
fn binary_lexicodes() {
    // greedy lexicographic codes are linear: Hamming [7,4,3], [15,11,3] and [8,4,4]
    for (len, k, size) in [(7, 3, 16), (15, 3, 2048), (8, 4, 16), (5, 3, 4)] {
        let code = packing::gv_code(2, len, k, ScanOrder::Lexicographic).unwrap();
        assert_eq!(code.len(), size, "len {len}, k {k}");
    }
}

#[test]
fn ternary_tetracode() {
    let code = packing::gv_code(3, 4, 3, ScanOrder::Lexicographic).unwrap();
    assert_eq!(code.len(), 9);
}

/// Naive greedy over all words, pairwise distances only.
fn naive_greedy(theta: usize, len: usize, k: usize) -> Vec<Vec<u32>> {
    let total = theta.pow(len as u32);
    let mut kept: Vec<Vec<u32>> = Vec::new();
    for mut idx in 0..total {
        let mut w = vec![0u32; len];
        for pos in (0..len).rev() {
            w[pos] = (idx % theta) as u32;
            idx /= theta;
        }
        if kept
            .iter()
            .all(|c| c.iter().zip(&w).filter(|(a, b)| a != b).count() >= k)
        {
            kept.push(w);
        }
    }
    kept
}

#[test]
fn gv_code_matches_naive_greedy() {
    for (theta, len, k) in [(2, 6, 2), (3, 5, 3), (4, 4, 2), (5, 3, 2), (7, 3, 3)] {
        let want = naive_greedy(theta, len, k);
        let code = packing::gv_code(theta, len, k, ScanOrder::Lexicographic).unwrap();
        let got: Vec<Vec<u32>> = code.words().map(<[u32]>::to_vec).collect();
        assert_eq!(got, want, "theta {theta}, len {len}, k {k}");
        assert!(code.len() as f64 >= packing::gv_bound(theta, len, k) * (1.0 - 1e-12));
    }
}

#[test]
fn greedy_l1_packings_stay_under_volume_cap() {
    // eps-separated points of the unit l_1 ball in the plane, kept greedily
    let mut rng = gelfand::rng::stream(11, &[]);
    for eps in [0.5, 0.25, 0.1] {
        let mut kept: Vec<[f64; 2]> = Vec::new();
        for _ in 0..200_000 {
            let p: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            if p[0].abs() + p[1].abs() > 1.0 {
                continue;
            }
            if kept
                .iter()
                .all(|q: &[f64; 2]| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() >= eps)
            {
                kept.push(p);
            }
        }
        let cap = packing::volume_packing_cap(2, 1.0, eps).unwrap();
        assert!(
            (kept.len() as f64) <= cap,
            "eps {eps}: {} > {cap}",
            kept.len()
        );
    }
}
