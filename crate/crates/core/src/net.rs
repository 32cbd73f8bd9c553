//! Network tomography: per-route Poisson rates from aggregate link counts.
//!
//! Link counts are observed and origin–destination route rates are
//! estimated, the usual direction of inference for this problem.
//!
//! Link counts are dependent (one route loads several links). Estimation
//! nevertheless treats them as independent Poisson variables with means
//! `epochs · Σ_r R_rl λ_r`, a pseudo-likelihood that plugs straight into the
//! EM solver. The simulator keeps the true dependence, so the cost of the
//! approximation can be measured.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use thiserror::Error;

use crate::em::{run_em, CountVector, EmConfig, EmError, EmOutcome, IntensityVector, SystemMatrix};
use crate::poisson;
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("UnknownNode: node {node} not in a graph of {n_nodes} nodes")]
    UnknownNode { node: usize, n_nodes: usize },
    #[error("DisconnectedPair: no path from {origin} to {destination}")]
    DisconnectedPair { origin: usize, destination: usize },
    #[error("graph is not connected: node {0} is unreachable from node 0")]
    Disconnected(usize),
    #[error("edge {edge} is a self-loop on node {node}")]
    SelfLoop { edge: usize, node: usize },
    #[error("edge {edge} duplicates edge {first} between {u} and {v}")]
    DuplicateEdge {
        edge: usize,
        first: usize,
        u: usize,
        v: usize,
    },
    #[error("edge {edge} has invalid weight {weight}")]
    InvalidWeight { edge: usize, weight: f64 },
    #[error("route {origin}->{destination} traverses no link")]
    TrivialRoute { origin: usize, destination: usize },
    #[error("NegativeRate: rate {value} for route {index}")]
    NegativeRate { index: usize, value: f64 },
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("link counts contain no epochs")]
    NoEpochs,
    #[error(transparent)]
    Em(#[from] EmError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted graph. Edge index doubles as link index.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<Edge>,
    // (neighbour, edge index), sorted by neighbour
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Rejects self-loops, duplicate edges, unknown endpoints and
    /// non-positive weights. Connectivity is checked separately.
    pub fn new(n_nodes: usize, edges: Vec<Edge>) -> Result<Self, NetError> {
        let mut adjacency = vec![Vec::new(); n_nodes];
        for (i, e) in edges.iter().enumerate() {
            for node in [e.u, e.v] {
                if node >= n_nodes {
                    return Err(NetError::UnknownNode { node, n_nodes });
                }
            }
            if e.u == e.v {
                return Err(NetError::SelfLoop { edge: i, node: e.u });
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(NetError::InvalidWeight {
                    edge: i,
                    weight: e.weight,
                });
            }
            if let Some(&(_, first)) = adjacency[e.u].iter().find(|(n, _)| *n == e.v) {
                return Err(NetError::DuplicateEdge {
                    edge: i,
                    first,
                    u: e.u,
                    v: e.v,
                });
            }
            adjacency[e.u].push((e.v, i));
            adjacency[e.v].push((e.u, i));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            n_nodes,
            edges,
            adjacency,
        })
    }

    /// Like [`Graph::new`] but also requires the graph to be connected.
    pub fn connected(n_nodes: usize, edges: Vec<Edge>) -> Result<Self, NetError> {
        let g = Self::new(n_nodes, edges)?;
        g.check_connected()?;
        Ok(g)
    }

    pub fn check_connected(&self) -> Result<(), NetError> {
        if self.n_nodes == 0 {
            return Ok(());
        }
        let mut seen = vec![false; self.n_nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(node) => Err(NetError::Disconnected(node)),
            None => Ok(()),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_links(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbour, edge index)` pairs in ascending neighbour order.
    pub fn neighbours(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    fn distances_from(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.n_nodes];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Frontier(0.0, source));
        while let Some(Frontier(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, e) in &self.adjacency[u] {
                let nd = d + self.edges[e].weight;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Frontier(nd, v));
                }
            }
        }
        dist
    }
}

/// Min-heap entry ordered by distance, then node.
#[derive(Debug, PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub origin: usize,
    pub destination: usize,
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
}

/// Routes and their 0/1 incidence with links.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteMatrix {
    pub routes: Vec<Route>,
    pub n_links: usize,
}

impl RouteMatrix {
    pub fn n_routes(&self) -> usize {
        self.routes.len()
    }

    pub fn traverses(&self, route: usize, link: usize) -> bool {
        self.routes[route].links.contains(&link)
    }

    /// Dense `routes × links` incidence.
    pub fn incidence(&self) -> Vec<Vec<u8>> {
        self.routes
            .iter()
            .map(|r| {
                let mut row = vec![0u8; self.n_links];
                for &l in &r.links {
                    row[l] = 1;
                }
                row
            })
            .collect()
    }

    /// Routes as EM sources, links as detectors, unit weights.
    pub fn system_matrix(&self) -> Result<SystemMatrix, NetError> {
        let triplets = self
            .routes
            .iter()
            .enumerate()
            .flat_map(|(r, route)| route.links.iter().map(move |&l| (r, l, 1.0)));
        Ok(SystemMatrix::from_triplets(
            self.n_routes(),
            self.n_links,
            triplets,
        )?)
    }
}

/// Weighted shortest path for every OD pair. Among equally short paths the
/// lexicographically smallest node sequence wins.
pub fn build_route_matrix(g: &Graph, od_pairs: &[(usize, usize)]) -> Result<RouteMatrix, NetError> {
    let mut routes = Vec::with_capacity(od_pairs.len());
    for &(origin, destination) in od_pairs {
        for node in [origin, destination] {
            if node >= g.n_nodes() {
                return Err(NetError::UnknownNode {
                    node,
                    n_nodes: g.n_nodes(),
                });
            }
        }
        if origin == destination {
            return Err(NetError::TrivialRoute {
                origin,
                destination,
            });
        }
        let from_origin = g.distances_from(origin);
        let total = from_origin[destination];
        if !total.is_finite() {
            return Err(NetError::DisconnectedPair {
                origin,
                destination,
            });
        }
        let to_dest = g.distances_from(destination);
        let tol = 1e-9 * total;

        let mut nodes = vec![origin];
        let mut links = Vec::new();
        let mut u = origin;
        let mut walked = 0.0;
        while u != destination {
            // neighbours are sorted, so the first one on a shortest path is
            // the lexicographically smallest continuation
            let &(v, e) = g
                .neighbours(u)
                .iter()
                .find(|&&(v, e)| (walked + g.edges[e].weight + to_dest[v] - total).abs() <= tol)
                .expect("a shortest-path continuation exists from every node on one");
            walked += g.edges[e].weight;
            nodes.push(v);
            links.push(e);
            u = v;
        }
        routes.push(Route {
            origin,
            destination,
            nodes,
            links,
        });
    }
    Ok(RouteMatrix {
        routes,
        n_links: g.n_links(),
    })
}

/// Per-link counts, one row per measurement epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCounts {
    pub n_links: usize,
    pub epochs: Vec<Vec<u64>>,
}

impl LinkCounts {
    pub fn new(n_links: usize, epochs: Vec<Vec<u64>>) -> Result<Self, NetError> {
        for row in &epochs {
            if row.len() != n_links {
                return Err(NetError::DimensionMismatch {
                    what: "epoch row",
                    expected: n_links,
                    got: row.len(),
                });
            }
        }
        Ok(Self { n_links, epochs })
    }

    pub fn n_epochs(&self) -> usize {
        self.epochs.len()
    }

    /// Sum over epochs.
    pub fn totals(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.n_links];
        for row in &self.epochs {
            for (t, &c) in out.iter_mut().zip(row) {
                *t += c;
            }
        }
        out
    }
}

/// Draws route volumes `X_r ~ Poisson(λ_r)` per epoch and loads every link
/// on each route. Epoch `e`, route `r` uses substream `(seed, e, r)`.
pub fn simulate_traffic(
    routes: &RouteMatrix,
    rates: &IntensityVector,
    epochs: usize,
    seed: u64,
) -> Result<LinkCounts, NetError> {
    if rates.len() != routes.n_routes() {
        return Err(NetError::DimensionMismatch {
            what: "rate vector",
            expected: routes.n_routes(),
            got: rates.len(),
        });
    }
    let rows = (0..epochs)
        .into_par_iter()
        .map(|e| {
            let mut row = vec![0u64; routes.n_links];
            for (r, (route, &rate)) in routes.routes.iter().zip(rates.as_slice()).enumerate() {
                let mut rng = Stream::substream2(seed, e as u64, r as u64);
                let volume = poisson::sample(rate, &mut rng);
                for &l in &route.links {
                    row[l] += volume;
                }
            }
            row
        })
        .collect();
    Ok(LinkCounts {
        n_links: routes.n_links,
        epochs: rows,
    })
}

/// Checked constructor for simulation rates.
pub fn rates(values: Vec<f64>) -> Result<IntensityVector, NetError> {
    IntensityVector::new(values).map_err(|e| match e {
        EmError::InvalidIntensity { index, value } => NetError::NegativeRate { index, value },
        other => NetError::Em(other),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// Traffic per epoch, one value per route.
    pub rates: Vec<f64>,
    /// Raw EM run on the epoch-summed counts.
    pub outcome: EmOutcome,
}

/// Pseudo-likelihood rate estimates from epoch-summed link counts.
pub fn estimate_rates(
    routes: &RouteMatrix,
    counts: &LinkCounts,
    cfg: &EmConfig,
) -> Result<RateEstimate, NetError> {
    if counts.n_epochs() == 0 {
        return Err(NetError::NoEpochs);
    }
    if counts.n_links != routes.n_links {
        return Err(NetError::DimensionMismatch {
            what: "link counts",
            expected: routes.n_links,
            got: counts.n_links,
        });
    }
    let a = routes.system_matrix()?;
    let outcome = run_em(&a, &CountVector::from_counts(&counts.totals()), cfg)?;
    let epochs = counts.n_epochs() as f64;
    let rates = outcome
        .estimate
        .as_slice()
        .iter()
        .map(|v| v / epochs)
        .collect();
    Ok(RateEstimate { rates, outcome })
}

/// Path graph 0–1–2–3 with unit weights and routes (0,1), (0,2), (1,3).
/// The incidence has full column rank, so all three rates are identifiable.
pub fn four_node_fixture() -> (Graph, Vec<(usize, usize)>) {
    let edges = (0..3)
        .map(|i| Edge {
            u: i,
            v: i + 1,
            weight: 1.0,
        })
        .collect();
    let g = Graph::connected(4, edges).expect("fixture graph is valid");
    (g, vec![(0, 1), (0, 2), (1, 3)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(u: usize, v: usize, weight: f64) -> Edge {
        Edge { u, v, weight }
    }

    #[test]
    fn single_edge_route() {
        let g = Graph::connected(2, vec![edge(0, 1, 1.0)]).unwrap();
        let r = build_route_matrix(&g, &[(0, 1)]).unwrap();
        assert_eq!(r.incidence(), vec![vec![1]]);
    }

    #[test]
    fn path_graph_route_uses_both_links() {
        let g = Graph::connected(3, vec![edge(0, 1, 1.0), edge(1, 2, 1.0)]).unwrap();
        let r = build_route_matrix(&g, &[(0, 2)]).unwrap();
        assert_eq!(r.routes[0].nodes, vec![0, 1, 2]);
        assert_eq!(r.incidence(), vec![vec![1, 1]]);
    }

    #[test]
    fn weights_steer_routing() {
        let g =
            Graph::connected(3, vec![edge(0, 1, 1.0), edge(1, 2, 1.0), edge(0, 2, 3.0)]).unwrap();
        let r = build_route_matrix(&g, &[(0, 2), (2, 0)]).unwrap();
        assert_eq!(r.routes[0].nodes, vec![0, 1, 2]);
        assert_eq!(r.routes[1].nodes, vec![2, 1, 0]);
    }

    #[test]
    fn graph_validation() {
        assert_eq!(
            Graph::new(2, vec![edge(1, 1, 1.0)]).unwrap_err(),
            NetError::SelfLoop { edge: 0, node: 1 }
        );
        assert!(matches!(
            Graph::new(2, vec![edge(0, 1, 1.0), edge(1, 0, 2.0)]),
            Err(NetError::DuplicateEdge {
                edge: 1,
                first: 0,
                ..
            })
        ));
        assert!(matches!(
            Graph::new(2, vec![edge(0, 5, 1.0)]),
            Err(NetError::UnknownNode { node: 5, .. })
        ));
        assert!(matches!(
            Graph::new(2, vec![edge(0, 1, 0.0)]),
            Err(NetError::InvalidWeight { .. })
        ));
        assert_eq!(
            Graph::connected(3, vec![edge(0, 1, 1.0)]).unwrap_err(),
            NetError::Disconnected(2)
        );
    }

    #[test]
    fn routing_errors() {
        let g = Graph::new(4, vec![edge(0, 1, 1.0), edge(2, 3, 1.0)]).unwrap();
        assert_eq!(
            build_route_matrix(&g, &[(0, 3)]).unwrap_err(),
            NetError::DisconnectedPair {
                origin: 0,
                destination: 3
            }
        );
        assert!(matches!(
            build_route_matrix(&g, &[(0, 9)]),
            Err(NetError::UnknownNode { node: 9, .. })
        ));
        assert!(matches!(
            build_route_matrix(&g, &[(1, 1)]),
            Err(NetError::TrivialRoute { .. })
        ));
    }

    #[test]
    fn negative_rate_rejected() {
        assert_eq!(
            rates(vec![1.0, -2.0]).unwrap_err(),
            NetError::NegativeRate {
                index: 1,
                value: -2.0
            }
        );
    }

    #[test]
    fn zero_rates_zero_counts() {
        let g = Graph::connected(3, vec![edge(0, 1, 1.0), edge(1, 2, 1.0)]).unwrap();
        let r = build_route_matrix(&g, &[(0, 2), (0, 1)]).unwrap();
        let y = simulate_traffic(&r, &rates(vec![0.0, 0.0]).unwrap(), 20, 3).unwrap();
        assert!(y.epochs.iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn estimate_requires_epochs() {
        let g = Graph::connected(2, vec![edge(0, 1, 1.0)]).unwrap();
        let r = build_route_matrix(&g, &[(0, 1)]).unwrap();
        let y = LinkCounts::new(1, vec![]).unwrap();
        assert_eq!(
            estimate_rates(&r, &y, &EmConfig::default()).unwrap_err(),
            NetError::NoEpochs
        );
    }
}
