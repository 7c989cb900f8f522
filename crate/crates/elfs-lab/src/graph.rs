//! Weighted undirected graphs with a designated source and sink set,
//! the source-stub modification, and seeded random generators.

use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// A connected weighted undirected graph with source `s` and nonempty sink
/// set `sinks` (s not a sink). Edges are stored once with `u < v`; both arc
/// orientations are materialized downstream by the arc basis.
#[derive(Debug, Clone)]
pub struct Graph {
    pub n: usize,
    /// Undirected edges (u, v, w) with u < v, sorted by (u, v).
    pub edges: Vec<(usize, usize, f64)>,
    pub s: usize,
    /// Sorted sink vertices.
    pub sinks: Vec<usize>,
    /// Weighted degree d_x = sum_y w_xy.
    pub degrees: Vec<f64>,
    /// Total weight W = sum_x d_x.
    pub total_weight: f64,
    /// Adjacency lists (neighbor, weight).
    pub adj: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Build and validate a graph from raw parts.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>, s: usize, sinks: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::validation("graph needs at least two vertices"));
        }
        if s >= n {
            return Err(Error::validation(format!("source index {s} >= n = {n}")));
        }
        let sink_set: BTreeSet<usize> = sinks.iter().copied().collect();
        if sink_set.is_empty() {
            return Err(Error::validation("sink set must be nonempty"));
        }
        if sink_set.contains(&s) {
            return Err(Error::validation(format!("source {s} must not be a sink")));
        }
        if let Some(&m) = sink_set.iter().max() {
            if m >= n {
                return Err(Error::validation(format!("sink index {m} >= n = {n}")));
            }
        }
        let mut seen = BTreeSet::new();
        let mut canon: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
        for &(u, v, w) in &edges {
            if u >= n || v >= n {
                return Err(Error::validation(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::validation(format!("self-loop at vertex {u} rejected")));
            }
            if !(w > 0.0) {
                return Err(Error::validation(format!(
                    "edge ({u},{v}) has nonpositive weight {w}"
                )));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::validation(format!(
                    "duplicate edge ({},{}) rejected",
                    key.0, key.1
                )));
            }
            canon.push((key.0, key.1, w));
        }
        canon.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut adj = vec![Vec::new(); n];
        let mut degrees = vec![0.0; n];
        for &(u, v, w) in &canon {
            adj[u].push((v, w));
            adj[v].push((u, w));
            degrees[u] += w;
            degrees[v] += w;
        }
        let total_weight: f64 = degrees.iter().sum();

        let g = Graph { n, edges: canon, s, sinks: sink_set.into_iter().collect(), degrees, total_weight, adj };
        g.check_connectivity()?;
        Ok(g)
    }

    /// Every vertex must reach the sink set (so the Dirichlet problem is
    /// well-posed for any source choice).
    fn check_connectivity(&self) -> Result<()> {
        let mut reached = vec![false; self.n];
        let mut stack: Vec<usize> = self.sinks.clone();
        for &m in &self.sinks {
            reached[m] = true;
        }
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.adj[x] {
                if !reached[y] {
                    reached[y] = true;
                    stack.push(y);
                }
            }
        }
        if let Some(x) = (0..self.n).find(|&x| !reached[x]) {
            return Err(Error::validation(format!(
                "vertex {x} has no path to the sink set; stranded component rejected"
            )));
        }
        Ok(())
    }

    pub fn is_sink(&self, x: usize) -> bool {
        self.sinks.binary_search(&x).is_ok()
    }

    /// Interior vertices: everything outside {s} and the sink set.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.n).filter(|&x| x != self.s && !self.is_sink(x)).collect()
    }

    /// Free vertices (not absorbed): V minus the sink set.
    pub fn free_vertices(&self) -> Vec<usize> {
        (0..self.n).filter(|&x| !self.is_sink(x)).collect()
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.adj[u]
            .iter()
            .find(|&&(y, _)| y == v)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    }

    /// True if every vertex has the same weighted degree.
    pub fn is_regular(&self) -> bool {
        let d0 = self.degrees[0];
        self.degrees.iter().all(|&d| (d - d0).abs() < 1e-12 * d0.max(1.0))
    }

    /// Parse the edge-list text format: header "n s M-list", then one line
    /// "u v w" per undirected edge.
    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::validation("empty graph document"))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::validation(format!("bad header token '{t}'")))
            })
            .collect::<Result<_>>()?;
        if head.len() < 3 {
            return Err(Error::validation("header needs 'n s M-list'"));
        }
        let (n, s) = (head[0], head[1]);
        let sinks = head[2..].to_vec();
        let mut edges = Vec::new();
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::validation(format!("bad edge line '{line}'")));
            }
            let u: usize = toks[0]
                .parse()
                .map_err(|_| Error::validation(format!("bad vertex '{}'", toks[0])))?;
            let v: usize = toks[1]
                .parse()
                .map_err(|_| Error::validation(format!("bad vertex '{}'", toks[1])))?;
            let w: f64 = toks[2]
                .parse()
                .map_err(|_| Error::validation(format!("bad weight '{}'", toks[2])))?;
            edges.push((u, v, w));
        }
        Graph::new(n, edges, s, sinks)
    }

    /// Serialize back to the canonical edge-list form (edges sorted by
    /// (min endpoint, max endpoint)); parse(serialize(g)) == g.
    pub fn serialize(&self) -> String {
        let mut out = format!("{} {}", self.n, self.s);
        for m in &self.sinks {
            out.push_str(&format!(" {m}"));
        }
        out.push('\n');
        for &(u, v, w) in &self.edges {
            out.push_str(&format!("{u} {v} {w}\n"));
        }
        out
    }
}

/// The source-stub modification: a new vertex sigma attached to the old
/// source s by an edge of weight eta * d_s; sigma becomes the source.
#[derive(Debug, Clone)]
pub struct ModifiedGraph {
    pub graph: Graph,
    pub eta: f64,
    /// Index of the new source vertex (appended as index n of the base graph).
    pub sigma: usize,
    /// The unmodified base graph.
    pub base: Graph,
}

/// Attach the stub vertex. Requires eta >= 1 (the escape-time bound on the
/// modified graph needs it).
pub fn attach_source_stub(g: &Graph, eta: f64) -> Result<ModifiedGraph> {
    if !(eta >= 1.0) {
        return Err(Error::validation(format!("eta = {eta} < 1 rejected")));
    }
    let sigma = g.n;
    let mut edges = g.edges.clone();
    edges.push((g.s, sigma, eta * g.degrees[g.s]));
    let graph = Graph::new(g.n + 1, edges, sigma, g.sinks.clone())?;
    Ok(ModifiedGraph { graph, eta, sigma, base: g.clone() })
}

impl ModifiedGraph {
    /// Delete sigma and recover the base graph (used as an invariant check).
    pub fn strip_stub(&self) -> Result<Graph> {
        let edges: Vec<(usize, usize, f64)> = self
            .graph
            .edges
            .iter()
            .copied()
            .filter(|&(u, v, _)| u != self.sigma && v != self.sigma)
            .collect();
        Graph::new(self.graph.n - 1, edges, self.base.s, self.graph.sinks.clone())
    }
}

/// Connected simple d-regular unit-weight graph via the pairing model with
/// rejection; m sinks chosen uniformly, source uniform outside the sinks.
/// Deterministic given the seed.
pub fn random_regular_graph(n: usize, d: usize, m: usize, seed: u64) -> Result<Graph> {
    if n * d % 2 != 0 {
        return Err(Error::validation("n*d must be even for a d-regular graph"));
    }
    if d < 3 || d >= n {
        return Err(Error::validation("need 3 <= d < n"));
    }
    if m == 0 || m >= n {
        return Err(Error::validation("need 1 <= m < n sinks"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = 5000;
    for _attempt in 0..budget {
        let mut points: Vec<usize> = (0..n * d).collect();
        points.shuffle(&mut rng);
        let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut ok = true;
        for pair in points.chunks(2) {
            let (u, v) = (pair[0] / d, pair[1] / d);
            if u == v {
                ok = false;
                break;
            }
            if !edge_set.insert((u.min(v), u.max(v))) {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let edges: Vec<(usize, usize, f64)> =
            edge_set.into_iter().map(|(u, v)| (u, v, 1.0)).collect();
        // Choose sinks and source from the same deterministic stream.
        let mut verts: Vec<usize> = (0..n).collect();
        verts.shuffle(&mut rng);
        let sinks: Vec<usize> = verts[..m].to_vec();
        let s = verts[m];
        match Graph::new(n, edges, s, sinks) {
            Ok(g) => return Ok(g),
            Err(_) => continue, // disconnected draw; retry
        }
    }
    Err(Error::budget(format!(
        "pairing model failed to produce a simple connected graph in {budget} attempts"
    )))
}

/// Random connected weighted graph for property tests: a random spanning
/// tree plus `extra` random chords, weights uniform in [0.5, 2.0].
/// Deterministic given the seed.
pub fn random_connected_weighted(n: usize, extra: usize, m: usize, seed: u64) -> Result<Graph> {
    if n < 2 || m == 0 || m >= n {
        return Err(Error::validation("need n >= 2 and 1 <= m < n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut verts: Vec<usize> = (0..n).collect();
    verts.shuffle(&mut rng);
    let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    // Random tree: attach each new vertex to a uniformly chosen earlier one.
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (u, v) = (verts[i].min(verts[j]), verts[i].max(verts[j]));
        edge_set.insert((u, v));
    }
    let max_extra = n * (n - 1) / 2 - (n - 1);
    let extra = extra.min(max_extra);
    let mut guard = 0;
    while edge_set.len() < n - 1 + extra && guard < 10_000 {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            edge_set.insert((u.min(v), u.max(v)));
        }
        guard += 1;
    }
    let edges: Vec<(usize, usize, f64)> = edge_set
        .into_iter()
        .map(|(u, v)| (u, v, rng.gen_range(0.5..2.0)))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let sinks: Vec<usize> = order[..m].to_vec();
    let s = order[m];
    Graph::new(n, edges, s, sinks)
}

/// Built-in fixtures used across the test and example suites.
pub mod fixtures {
    use super::Graph;

    /// Single unit edge, source 0, sink 1.
    pub fn single_edge() -> Graph {
        Graph::parse("2 0 1\n0 1 1.0").unwrap()
    }
    /// Unit path 0-1-2, source 0, sink 2.
    pub fn path3() -> Graph {
        Graph::parse("3 0 2\n0 1 1\n1 2 1").unwrap()
    }
    /// Weighted path with weights 1/2+delta, 1/2-delta (delta = 0.1).
    pub fn skew_path(delta: f64) -> Graph {
        Graph::parse(&format!("3 0 2\n0 1 {}\n1 2 {}", 0.5 + delta, 0.5 - delta)).unwrap()
    }
    /// Unit path 0-1-2-3 with source 1 and sinks {0, 3}.
    pub fn path4_mid() -> Graph {
        Graph::parse("4 1 0 3\n0 1 1\n1 2 1\n2 3 1").unwrap()
    }
    /// Six-cycle with source 0 and sinks {2, 4}.
    pub fn cycle6() -> Graph {
        Graph::parse("6 0 2 4\n0 1 1\n1 2 1\n2 3 1\n3 4 1\n4 5 1\n0 5 1").unwrap()
    }
    /// Unit path on n vertices, source at one end, sink at the other.
    pub fn path_end_to_end(n: usize) -> Graph {
        let mut text = format!("{} 0 {}\n", n, n - 1);
        for i in 0..n - 1 {
            text.push_str(&format!("{} {} 1\n", i, i + 1));
        }
        Graph::parse(&text).unwrap()
    }

    /// The standard small fixtures with stable names.
    pub fn all_named() -> Vec<(&'static str, Graph)> {
        vec![
            ("single-edge", single_edge()),
            ("path3", path3()),
            ("skew-path", skew_path(0.1)),
            ("path4-mid", path4_mid()),
            ("cycle6", cycle6()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip_and_invariants() {
        for (_, g) in fixtures::all_named() {
            let text = g.serialize();
            let g2 = Graph::parse(&text).unwrap();
            assert_eq!(g2.serialize(), text);
            let edge_sum: f64 = g.edges.iter().map(|&(_, _, w)| w).sum();
            assert!((g.total_weight - 2.0 * edge_sum).abs() <= 1e-12 * g.total_weight);
        }
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(Graph::parse("2 0 1\n0 1 1\n0 1 2").is_err(), "duplicate edge");
        assert!(Graph::parse("2 0 1\n0 1 -1").is_err(), "nonpositive weight");
        assert!(Graph::parse("2 0 0\n0 1 1").is_err(), "source in sinks");
        assert!(Graph::parse("2 0 1\n0 5 1").is_err(), "vertex out of range");
        assert!(Graph::parse("4 0 1\n0 1 1\n2 3 1").is_err(), "stranded component");
    }

    #[test]
    fn stub_attach_and_strip() {
        let g = fixtures::path3();
        let mg = attach_source_stub(&g, 2.0).unwrap();
        assert_eq!(mg.graph.degrees[mg.sigma], 2.0);
        assert_eq!(mg.graph.degrees[g.s], 3.0);
        assert_eq!(mg.graph.s, mg.sigma);
        let back = mg.strip_stub().unwrap();
        assert_eq!(back.serialize(), g.serialize());
        assert!(attach_source_stub(&g, 0.5).is_err());
    }

    #[test]
    fn regular_generator_is_deterministic_and_regular() {
        let g1 = random_regular_graph(8, 3, 1, 1).unwrap();
        for x in 0..8 {
            assert_eq!(g1.adj[x].len(), 3, "vertex {x} degree");
        }
        let g2 = random_regular_graph(6, 3, 2, 3).unwrap();
        let g3 = random_regular_graph(6, 3, 2, 3).unwrap();
        assert_eq!(g2.serialize(), g3.serialize());
    }
}
