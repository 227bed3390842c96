//! Undirected graph generation, edge-list ingestion and Laplacian weighting.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::seeds;

/// Simple undirected graph on nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    node_count: usize,
    adjacency: Vec<bool>,
}

impl Graph {
    pub fn empty(node_count: usize) -> Self {
        Graph {
            node_count,
            adjacency: vec![false; node_count * node_count],
        }
    }

    pub fn complete(node_count: usize) -> Self {
        let mut g = Graph::empty(node_count);
        for i in 0..node_count {
            for j in (i + 1)..node_count {
                g.add_edge(i, j);
            }
        }
        g
    }

    /// Build from an edge iterator; self-loops are ignored, duplicates collapse.
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut g = Graph::empty(node_count);
        for (i, j) in edges {
            if i >= node_count || j >= node_count {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) outside {node_count} nodes"
                )));
            }
            if i != j {
                g.add_edge(i, j);
            }
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.node_count + j]
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        debug_assert!(i != j);
        let n = self.node_count;
        self.adjacency[i * n + j] = true;
        self.adjacency[j * n + i] = true;
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        let n = self.node_count;
        self.adjacency[i * n + j] = false;
        self.adjacency[j * n + i] = false;
    }

    pub fn degree(&self, i: usize) -> usize {
        let n = self.node_count;
        self.adjacency[i * n..(i + 1) * n]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count)
            .map(|i| self.degree(i))
            .max()
            .unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Edges `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.node_count;
        (0..n).flat_map(move |i| {
            ((i + 1)..n)
                .filter(move |&j| self.has_edge(i, j))
                .map(move |j| (i, j))
        })
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count).filter(move |&j| self.has_edge(i, j))
    }

    /// Fraction of unordered node pairs that are connected.
    pub fn density(&self) -> f64 {
        let n = self.node_count;
        if n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (n * (n - 1) / 2) as f64
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count;
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Whitespace-separated edge list, one `i j` line per edge with `i < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes {}\n", self.node_count);
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }
}

/// G(n, p): every unordered pair is an edge independently with probability `p`.
pub fn erdos_renyi(n_nodes: usize, p: f64, seed: u64) -> Result<Graph> {
    if n_nodes < 2 {
        return Err(Error::invalid("erdos_renyi needs at least 2 nodes"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!(
            "connection probability {p} outside [0, 1]"
        )));
    }
    let mut rng = seeds::rng(seed);
    let mut g = Graph::empty(n_nodes);
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            if rng.random::<f64>() < p {
                g.add_edge(i, j);
            }
        }
    }
    Ok(g)
}

/// Ring lattice where each node links to its `ring_degree / 2` nearest
/// neighbours on either side, followed by rewiring of each lattice edge with
/// probability `rewire_p`. A rewired edge keeps its first endpoint and moves
/// its second endpoint to a uniformly drawn node that is neither the first
/// endpoint nor already adjacent to it, so the edge count is preserved.
pub fn watts_strogatz(
    n_nodes: usize,
    ring_degree: usize,
    rewire_p: f64,
    seed: u64,
) -> Result<Graph> {
    if ring_degree == 0 || !ring_degree.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "ring degree {ring_degree} must be even and positive"
        )));
    }
    if ring_degree >= n_nodes {
        return Err(Error::invalid(format!(
            "ring degree {ring_degree} must be below the node count {n_nodes}"
        )));
    }
    if !(0.0..=1.0).contains(&rewire_p) {
        return Err(Error::invalid(format!(
            "rewiring probability {rewire_p} outside [0, 1]"
        )));
    }
    let mut g = Graph::empty(n_nodes);
    for i in 0..n_nodes {
        for offset in 1..=ring_degree / 2 {
            g.add_edge(i, (i + offset) % n_nodes);
        }
    }
    let mut rng = seeds::rng(seed);
    for offset in 1..=ring_degree / 2 {
        for i in 0..n_nodes {
            let j = (i + offset) % n_nodes;
            if rng.random::<f64>() >= rewire_p || !g.has_edge(i, j) {
                continue;
            }
            let candidates: Vec<usize> = (0..n_nodes)
                .filter(|&w| w != i && !g.has_edge(i, w))
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let w = candidates[rng.random_range(0..candidates.len())];
            g.remove_edge(i, j);
            g.add_edge(i, w);
        }
    }
    Ok(g)
}

/// Parse a whitespace-separated, 0-based edge list. Blank lines and lines
/// starting with `#` are skipped, except a `# nodes N` header, which sets the
/// node count when it exceeds one past the largest id (so isolated nodes
/// survive a round trip).
pub fn load_edge_list<R: Read>(source: R) -> Result<Graph> {
    let reader = BufReader::new(source);
    let mut edges = Vec::new();
    let mut max_id = 0usize;
    let mut declared = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(n) = comment
                .trim()
                .strip_prefix("nodes")
                .and_then(|r| r.trim().parse().ok())
            {
                declared = n;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two node ids, found {:?}", trimmed),
            });
        }
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(&tokens) {
            let value: i64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("malformed node id {tok:?}"),
            })?;
            if value < 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("negative node id {value}"),
                });
            }
            *slot = value as usize;
        }
        if ids[0] == ids[1] {
            return Err(Error::Parse {
                line: line_no,
                message: format!("self-loop on node {}", ids[0]),
            });
        }
        max_id = max_id.max(ids[0]).max(ids[1]);
        edges.push((ids[0], ids[1]));
    }
    if edges.is_empty() {
        return Err(Error::NoEdges);
    }
    Graph::from_edges(declared.max(max_id + 1), edges)
}

/// Symmetric nonnegative coupling matrix `rho * Ā` with `Ā` stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    entries: DMatrix<f64>,
    rho: f64,
    a_plus_min: Option<f64>,
    support: Graph,
}

impl InteractionMatrix {
    /// The all-zero coupling on `n` nodes (no dynamics, `rho = 0`).
    pub fn zero(n: usize) -> Self {
        InteractionMatrix {
            entries: DMatrix::zeros(n, n),
            rho: 0.0,
            a_plus_min: None,
            support: Graph::empty(n),
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Smallest nonzero off-diagonal entry; `None` for an edgeless support.
    pub fn a_plus_min(&self) -> Option<f64> {
        self.a_plus_min
    }

    /// Smallest nonzero off-diagonal of the principal submatrix on `s`,
    /// falling back to the global value when `s` induces no edges.
    pub fn a_plus_min_on(&self, s: &[usize]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (a, &i) in s.iter().enumerate() {
            for &j in &s[a + 1..] {
                let v = self.entries[(i, j)];
                if v != 0.0 {
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        best.or(self.a_plus_min)
    }

    pub fn support(&self) -> &Graph {
        &self.support
    }

    /// Check every structural invariant; returns a description of the first
    /// violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.dim();
        let a = &self.entries;
        if !linalg::is_symmetric(a, 0.0) {
            return Err("entries are not symmetric".into());
        }
        if a.iter().any(|&v| v < 0.0) {
            return Err("negative entry".into());
        }
        for i in 0..n {
            let sum: f64 = a.row(i).iter().sum();
            if (sum - self.rho).abs() > 1e-12 {
                return Err(format!("row {i} sums to {sum}, expected {}", self.rho));
            }
            for j in 0..n {
                if i != j && (a[(i, j)] != 0.0) != self.support.has_edge(i, j) {
                    return Err(format!("entry ({i}, {j}) disagrees with the support"));
                }
            }
        }
        if n > 0 {
            let radius = linalg::spectral_radius(a, 1e-14, 200_000);
            if (radius - self.rho).abs() > 1e-10 {
                return Err(format!(
                    "spectral radius {radius} differs from rho {}",
                    self.rho
                ));
            }
        }
        let expected_min = linalg::off_diagonals(a)
            .into_iter()
            .filter(|&v| v != 0.0)
            .reduce(f64::min);
        if expected_min != self.a_plus_min {
            return Err("a_plus_min is not the smallest nonzero off-diagonal".into());
        }
        Ok(())
    }
}

/// Weight `g` by the Laplacian rule `Ā = I − L/(d_max + 1)` and scale by `rho`.
pub fn laplacian_weights(g: &Graph, rho: f64) -> Result<InteractionMatrix> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(format!("rho = {rho} must lie in (0, 1)")));
    }
    let n = g.node_count();
    let scale = 1.0 / (g.max_degree() as f64 + 1.0);
    let degrees: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            rho * (1.0 - degrees[i] as f64 * scale)
        } else if g.has_edge(i, j) {
            rho * scale
        } else {
            0.0
        }
    });
    let a_plus_min = if g.edge_count() > 0 {
        Some(rho * scale)
    } else {
        None
    };
    Ok(InteractionMatrix {
        entries,
        rho,
        a_plus_min,
        support: g.clone(),
    })
}
