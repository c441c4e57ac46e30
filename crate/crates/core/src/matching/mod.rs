//! Exact minimum-weight perfect matching.

mod blossom;

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

pub const BRUTE_FORCE_MAX_NODES: usize = 14;

/// Undirected weighted graph with an arbitrary payload per node.
#[derive(Clone, Debug)]
pub struct MatchGraph<N = ()> {
    nodes: Vec<N>,
    edges: Vec<(usize, usize, f64)>,
}

impl MatchGraph<()> {
    pub fn with_nodes(n: usize) -> Self {
        MatchGraph { nodes: vec![(); n], edges: Vec::new() }
    }
}

impl<N> Default for MatchGraph<N> {
    fn default() -> Self {
        MatchGraph { nodes: Vec::new(), edges: Vec::new() }
    }
}

impl<N> MatchGraph<N> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, payload: N) -> usize {
        self.nodes.push(payload);
        self.nodes.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        self.edges.push((a, b, w));
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[N] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for &(a, b, w) in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(invalid(format!("bad edge ({a}, {b}) in a graph of {n} nodes")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid(format!("edge ({a}, {b}) has weight {w}")));
            }
        }
        if n % 2 == 1 {
            return Err(Error::Infeasible(format!("odd node count {n}")));
        }
        Ok(())
    }

    /// Summed weight of the cheapest edge joining each matched pair.
    pub fn weight_of(&self, m: &Matching) -> Option<f64> {
        let mut total = 0.0;
        for &(a, b) in &m.pairs {
            let w = self
                .edges
                .iter()
                .filter(|e| (e.0 == a && e.1 == b) || (e.0 == b && e.1 == a))
                .map(|e| e.2)
                .fold(f64::INFINITY, f64::min);
            if !w.is_finite() {
                return None;
            }
            total += w;
        }
        Some(total)
    }

    /// DIMACS-style text dump for debugging.
    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p edge {} {}\n", self.nodes.len(), self.edges.len());
        for &(a, b, w) in &self.edges {
            let _ = writeln!(s, "e {} {} {}", a + 1, b + 1, w);
        }
        s
    }
}

/// A perfect matching as sorted pairs `(a, b)` with `a < b`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    fn from_mate(mate: &[usize]) -> Option<Self> {
        let mut pairs = Vec::with_capacity(mate.len() / 2);
        for (a, &b) in mate.iter().enumerate() {
            if b == usize::MAX {
                return None;
            }
            if a < b {
                pairs.push((a, b));
            }
        }
        Some(Matching { pairs })
    }

    /// `partner[v]` for every node.
    pub fn partners(&self, n: usize) -> Vec<usize> {
        let mut p = vec![usize::MAX; n];
        for &(a, b) in &self.pairs {
            p[a] = b;
            p[b] = a;
        }
        p
    }
}

/// Minimum-weight perfect matching via the blossom algorithm.
///
/// Ties among minima are broken deterministically as a function of the node
/// and edge order; this is not necessarily the lexicographically smallest
/// pair set that `brute_force_matching` returns.
pub fn mwpm<N>(g: &MatchGraph<N>) -> Result<Matching> {
    g.validate()?;
    let n = g.num_nodes();
    if n == 0 {
        return Ok(Matching::default());
    }
    let top = g.edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let flipped: Vec<(usize, usize, f64)> = g.edges.iter().map(|&(a, b, w)| (a, b, top - w)).collect();
    let mate = blossom::max_weight_matching(n, &flipped, true);
    Matching::from_mate(&mate).ok_or_else(|| Error::Infeasible(format!("graph of {n} nodes has no perfect matching")))
}

/// Exhaustive minimum over all perfect matchings; ties go to the
/// lexicographically smallest partner vector.
pub fn brute_force_matching<N>(g: &MatchGraph<N>) -> Result<Matching> {
    g.validate()?;
    let n = g.num_nodes();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(invalid(format!("brute force is limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")));
    }
    let mut w = vec![vec![f64::INFINITY; n]; n];
    for &(a, b, x) in &g.edges {
        if x < w[a][b] {
            w[a][b] = x;
            w[b][a] = x;
        }
    }
    let mut partner = vec![usize::MAX; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    search(&w, &mut partner, 0.0, &mut best);
    let (_, p) = best.ok_or_else(|| Error::Infeasible(format!("graph of {n} nodes has no perfect matching")))?;
    Ok(Matching::from_mate(&p).expect("perfect"))
}

// Partners are tried in increasing order, so the first minimum found is the
// lexicographically smallest; later candidates must be strictly better.
fn search(w: &[Vec<f64>], partner: &mut [usize], acc: f64, best: &mut Option<(f64, Vec<usize>)>) {
    let Some(i) = partner.iter().position(|&p| p == usize::MAX) else {
        if best.as_ref().map_or(true, |(b, _)| acc < *b) {
            *best = Some((acc, partner.to_vec()));
        }
        return;
    };
    for j in i + 1..partner.len() {
        if partner[j] == usize::MAX && w[i][j].is_finite() {
            partner[i] = j;
            partner[j] = i;
            search(w, partner, acc + w[i][j], best);
            partner[i] = usize::MAX;
            partner[j] = usize::MAX;
        }
    }
}
