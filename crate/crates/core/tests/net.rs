mod common;

use statbench::em::{EmConfig, EmInit};
use statbench::net::{
    build_route_matrix, estimate_rates, four_node_fixture, rates, simulate_traffic, Edge, Graph,
    LinkCounts,
};

fn cfg() -> EmConfig {
    EmConfig {
        max_iters: 20_000,
        rel_ll_tol: 1e-14,
        init: EmInit::Uniform,
    }
}

fn max_rel_err(est: &[f64], truth: &[f64]) -> f64 {
    est.iter()
        .zip(truth)
        .map(|(e, t)| (e - t).abs() / t)
        .fold(0.0, f64::max)
}

#[test]
fn equal_cycle_tie_goes_to_smaller_sequence() {
    let raw = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)];
    let edges = raw
        .iter()
        .map(|&(u, v, weight)| Edge { u, v, weight })
        .collect();
    let g = Graph::connected(4, edges).unwrap();
    let routes = build_route_matrix(&g, &[(0, 2)]).unwrap();
    let mut paths = common::all_paths(4, &raw, 0, 2);
    let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    paths.retain(|p| p.0 == best);
    assert_eq!(paths.len(), 2);
    let least = paths.iter().map(|p| p.1.clone()).min().unwrap();
    assert_eq!(routes.routes[0].nodes, least);
    assert_eq!(least, vec![0, 1, 2]);
}

#[test]
fn routes_are_shortest_paths_on_a_weighted_graph() {
    let raw = [
        (0, 1, 2.0),
        (0, 2, 1.0),
        (1, 2, 0.5),
        (1, 3, 3.0),
        (2, 4, 4.0),
        (3, 4, 1.0),
        (3, 5, 1.5),
        (4, 5, 0.5),
    ];
    let edges = raw
        .iter()
        .map(|&(u, v, weight)| Edge { u, v, weight })
        .collect();
    let g = Graph::connected(6, edges).unwrap();
    let od: Vec<(usize, usize)> = (0..6)
        .flat_map(|o| (0..6).filter(move |d| *d != o).map(move |d| (o, d)))
        .collect();
    let routes = build_route_matrix(&g, &od).unwrap();
    for r in &routes.routes {
        let paths = common::all_paths(6, &raw, r.origin, r.destination);
        let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let len: f64 = r.links.iter().map(|&l| raw[l].2).sum();
        assert!(
            (len - best).abs() < 1e-12,
            "{}->{}",
            r.origin,
            r.destination
        );
        let least = paths
            .iter()
            .filter(|p| (p.0 - best).abs() < 1e-12)
            .map(|p| &p.1)
            .min()
            .unwrap();
        assert_eq!(&r.nodes, least);
    }
}

#[test]
fn single_route_over_two_links_matches_scan() {
    let g = Graph::connected(
        3,
        vec![
            Edge {
                u: 0,
                v: 1,
                weight: 1.0,
            },
            Edge {
                u: 1,
                v: 2,
                weight: 1.0,
            },
        ],
    )
    .unwrap();
    let routes = build_route_matrix(&g, &[(0, 2)]).unwrap();
    let counts = LinkCounts::new(2, vec![vec![3, 5]]).unwrap();
    let est = estimate_rates(&routes, &counts, &cfg()).unwrap();
    // 1-d pseudo-likelihood scan: 3 ln λ − λ + 5 ln λ − λ
    let best = (1..=100_000)
        .map(|i| i as f64 * 1e-4)
        .max_by(|a, b| {
            let f = |l: f64| 8.0 * l.ln() - 2.0 * l;
            f(*a).total_cmp(&f(*b))
        })
        .unwrap();
    assert!((est.rates[0] - best).abs() < 1e-4);
    assert!((est.rates[0] - 4.0).abs() < 1e-9);
}

#[test]
fn identity_routing_is_exact() {
    let g = Graph::connected(
        3,
        vec![
            Edge {
                u: 0,
                v: 1,
                weight: 1.0,
            },
            Edge {
                u: 1,
                v: 2,
                weight: 1.0,
            },
        ],
    )
    .unwrap();
    let routes = build_route_matrix(&g, &[(0, 1), (1, 2)]).unwrap();
    let counts = simulate_traffic(&routes, &rates(vec![3.0, 7.0]).unwrap(), 500, 4).unwrap();
    let means: Vec<f64> = counts.totals().iter().map(|&t| t as f64 / 500.0).collect();
    let est = estimate_rates(&routes, &counts, &cfg()).unwrap();
    for (e, m) in est.rates.iter().zip(&means) {
        assert!((e - m).abs() <= 1e-12 * m);
    }
}

#[test]
fn two_link_route_loads_are_perfectly_correlated() {
    let g = Graph::connected(
        3,
        vec![
            Edge {
                u: 0,
                v: 1,
                weight: 1.0,
            },
            Edge {
                u: 1,
                v: 2,
                weight: 1.0,
            },
        ],
    )
    .unwrap();
    let routes = build_route_matrix(&g, &[(0, 2)]).unwrap();
    let counts = simulate_traffic(&routes, &rates(vec![5.0]).unwrap(), 10_000, 8).unwrap();
    assert!(counts.epochs.iter().all(|e| e[0] == e[1]));
    let mean = counts.totals()[0] as f64 / 1e4;
    assert!((4.8..=5.2).contains(&mean), "{mean}");
}

#[test]
fn fixture_consistency_and_scale() {
    let (g, od) = four_node_fixture();
    let routes = build_route_matrix(&g, &od).unwrap();
    let inc: Vec<Vec<f64>> = (0..routes.n_links)
        .map(|l| {
            (0..routes.n_routes())
                .map(|r| routes.traverses(r, l) as u8 as f64)
                .collect()
        })
        .collect();
    assert_eq!(common::rank(&inc, 1e-12), 3);
    let truth = [2.0, 5.0, 9.0];
    let estimate = |epochs: usize, scale: f64, seed: u64| {
        let t: Vec<f64> = truth.iter().map(|v| v * scale).collect();
        let counts = simulate_traffic(&routes, &rates(t).unwrap(), epochs, seed).unwrap();
        estimate_rates(&routes, &counts, &cfg()).unwrap().rates
    };
    let small = estimate(1000, 1.0, 1);
    assert!(max_rel_err(&small, &truth) <= 0.10);
    let doubled = estimate(1000, 2.0, 1);
    for (d, s) in doubled.iter().zip(&small) {
        assert!((1.8..=2.2).contains(&(d / s)), "{d} / {s}");
    }
}
