mod common;

use statbench::ocr::{
    apply_transform, build_tangent_subspace, classify_tangent, classify_tangent_naive,
    distance_to_subspace, gen_synthetic_glyphs, naive_distance, run_benchmark, synthetic_split,
    template_image, Jitter, Method, ProjectionQuery, TangentBasis, TangentConfig, TransformId,
};
use statbench::rng::{Stream, DEFAULT_SEED};

/// Frozen when the glyph generator was written; any change to templates,
/// jitter sampling or the random streams moves it.
const CLASS_MEAN_GOLDEN: f64 = 1.042140651084;

#[test]
fn class_means_golden() {
    let corpus = gen_synthetic_glyphs(500, &Jitter::default(), DEFAULT_SEED).unwrap();
    let means = corpus.class_means();
    assert_eq!(means.len(), 10);
    let mut min = f64::INFINITY;
    for i in 0..10 {
        for j in i + 1..10 {
            let d: f64 = means[i]
                .1
                .iter()
                .zip(&means[j].1)
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            min = min.min(d.sqrt());
        }
    }
    assert!(min > 0.5);
    assert!((min - CLASS_MEAN_GOLDEN).abs() < 1e-9, "{min:.12}");
}

#[test]
fn projection_matches_dense_least_squares() {
    let mut rng = Stream::new(77);
    for case in 0..100 {
        let dim = 5 + (rng.uniform() * 40.0) as usize;
        let k = 1 + (rng.uniform() * 7.0) as usize;
        let origin: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let mut dirs: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        if case % 4 == 0 {
            // a dependent direction
            let combo = dirs[0].iter().map(|v| 2.0 * v).collect();
            dirs.push(combo);
        }
        let x: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let basis = TangentBasis::from_directions(origin.clone(), dirs.clone()).unwrap();
        let oracle = common::dense_lstsq_residual(&x, &origin, &dirs);
        let got = distance_to_subspace(&x, &basis).unwrap();
        assert!(
            (got - oracle).abs() <= 1e-9,
            "case {case}: {got} vs {oracle}"
        );
        let naive = naive_distance(&x, &basis);
        assert!(
            (naive - oracle).abs() <= 1e-9,
            "case {case}: naive {naive} vs {oracle}"
        );
        let q = ProjectionQuery::new(basis);
        let fast = q.distance(&x, x.iter().map(|v| v * v).sum());
        assert!(
            (fast - oracle).abs() <= 1e-9,
            "case {case}: fast {fast} vs {oracle}"
        );
    }
}

#[test]
fn glyph_tangent_set_matches_dense_least_squares() {
    let corpus = gen_synthetic_glyphs(2, &Jitter::default(), 3).unwrap();
    let cfg = TangentConfig::default();
    let basis = build_tangent_subspace(corpus.image(0), &cfg).unwrap();
    let raw: Vec<Vec<f64>> = cfg
        .order
        .iter()
        .map(|&t| {
            let eps = if t.is_translation() {
                cfg.translate_px
            } else {
                cfg.epsilon
            };
            let moved = apply_transform(corpus.image(0), t, eps).unwrap();
            moved
                .pixels()
                .iter()
                .zip(corpus.image(0).pixels())
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    for i in 1..corpus.len() {
        let x = corpus.image(i).pixels();
        let oracle = common::dense_lstsq_residual(x, corpus.image(0).pixels(), &raw);
        assert!((distance_to_subspace(x, &basis).unwrap() - oracle).abs() <= 1e-9);
    }
}

#[test]
fn small_rotation_is_nearly_free_for_tangent_distance() {
    let base = template_image(4);
    let rotated = apply_transform(&base, TransformId::Rotate, 0.05).unwrap();
    let basis = build_tangent_subspace(&rotated, &TangentConfig::default()).unwrap();
    let tangent = distance_to_subspace(base.pixels(), &basis).unwrap();
    let l2 = base.l2_distance(&rotated);
    assert!(tangent < 0.3 * l2, "tangent {tangent}, l2 {l2}");
}

#[test]
fn naive_and_cached_paths_agree() {
    let (train, test) = synthetic_split(400, 40, &Jitter::default(), 5).unwrap();
    let cfg = TangentConfig::default();
    for i in 0..test.len() {
        let a = classify_tangent(test.image(i), &train, &cfg).unwrap();
        let b = classify_tangent_naive(test.image(i), &train, &cfg).unwrap();
        assert_eq!(a.index, b.index);
        assert!((a.distance - b.distance).abs() <= 1e-9);
    }
}

#[test]
fn tangent_beats_l2_on_a_small_benchmark() {
    let (train, test) = synthetic_split(1000, 200, &Jitter::default(), DEFAULT_SEED).unwrap();
    let rows = run_benchmark(&train, &test, &TangentConfig::default()).unwrap();
    let by = |m: Method| rows.iter().find(|r| r.method == m).unwrap();
    assert!(by(Method::Tangent).errors <= by(Method::L2).errors);
}
