mod common;

use proptest::prelude::*;
use statbench::em::{run_em, CountVector, EmConfig, EmInit};
use statbench::pet::{
    build_system_matrix, make_phantom, normalized_rmse, ray_weights, shepp_logan,
    simulate_sinogram, DetectorGeometry, GridSpec, Weighting,
};

fn per_pixel_chords(theta: f64, offset: f64, g: &GridSpec) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    let p = (-s * offset, c * offset);
    let x0 = -(g.width as f64) * g.pixel_size / 2.0;
    let y0 = -(g.height as f64) * g.pixel_size / 2.0;
    let mut out = vec![0.0; g.width * g.height];
    for row in 0..g.height {
        for col in 0..g.width {
            let xl = x0 + col as f64 * g.pixel_size;
            let yl = y0 + row as f64 * g.pixel_size;
            out[row * g.width + col] =
                common::clip_length(p, (c, s), xl, xl + g.pixel_size, yl, yl + g.pixel_size);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn traversal_matches_pixelwise_clipping(
        theta in 0.0f64..std::f64::consts::PI,
        frac in -1.0f64..1.0,
        width in 1usize..9,
        height in 1usize..9,
        size in 0.25f64..3.0,
    ) {
        let g = GridSpec { width, height, pixel_size: size };
        let offset = frac * g.fov_radius();
        let oracle = per_pixel_chords(theta, offset, &g);
        let mut got = vec![0.0; oracle.len()];
        for (b, w) in ray_weights(theta, offset, &g) {
            got[b] += w;
        }
        for (b, (x, y)) in got.iter().zip(&oracle).enumerate() {
            prop_assert!((x - y).abs() <= 1e-9 * size, "pixel {}: {} vs {}", b, x, y);
        }
    }
}

#[test]
fn strip_and_line_weights_agree_on_totals() {
    // summed over the bins of one angle, both schemes integrate pixel area
    // divided by bin width
    let g = (12, 10, 1.0);
    let geom = DetectorGeometry::new(9, 64);
    let line = build_system_matrix(&geom, g.0, g.1, g.2).unwrap();
    let strip =
        build_system_matrix(&geom.with_weighting(Weighting::StripArea), g.0, g.1, g.2).unwrap();
    for (a, b) in line.col_sums().iter().zip(strip.col_sums()) {
        assert!((a - b).abs() <= 0.05 * b, "{a} vs {b}");
    }
}

#[test]
fn noiseless_identifiable_reconstruction() {
    let geom = DetectorGeometry::new(16, 12);
    let a = build_system_matrix(&geom, 8, 8, 1.0).unwrap();
    assert_eq!(common::rank(&a.to_dense_rows(), 1e-10), 64);
    let phantom = make_phantom(&shepp_logan(), 8, 8).unwrap().scaled(100.0);
    let expected = a.forward(&phantom.grid).unwrap();
    let n = CountVector::relaxed(expected).unwrap();
    let cfg = EmConfig {
        max_iters: 500,
        rel_ll_tol: 0.0,
        init: EmInit::Uniform,
    };
    let out = run_em(&a, &n, &cfg).unwrap();
    let err = normalized_rmse(out.estimate.as_slice(), &phantom.grid);
    assert!(err <= 0.05, "nrmse {err}");
}

#[test]
fn simulation_is_seeded_and_conserves_counts() {
    let geom = DetectorGeometry::new(12, 16);
    let a = build_system_matrix(&geom, 10, 10, 1.0).unwrap();
    let phantom = make_phantom(&shepp_logan(), 10, 10).unwrap().scaled(50.0);
    let s1 = simulate_sinogram(&phantom, &geom, &a, 11).unwrap();
    assert_eq!(s1, simulate_sinogram(&phantom, &geom, &a, 11).unwrap());
    assert_ne!(
        s1.counts,
        simulate_sinogram(&phantom, &geom, &a, 12).unwrap().counts
    );
    let expected: f64 = s1.expected.as_ref().unwrap().iter().sum();
    let total = s1.total() as f64;
    assert!(
        (total - expected).abs() <= 5.0 * expected.sqrt(),
        "{total} vs {expected}"
    );

    let out = run_em(
        &a,
        &CountVector::from_counts(&s1.counts),
        &EmConfig::default(),
    )
    .unwrap();
    let fitted: f64 = a.forward(out.estimate.as_slice()).unwrap().iter().sum();
    assert!((fitted - total).abs() <= 1e-9 * total);
}
