//! Enumeration of connected induced subgraphs grouped by isomorphism class.
//!
//! Subsets are generated with the ESU scheme (each connected set exactly once).
//! Canonical labels come from color refinement followed by an exhaustive search
//! over permutations within color cells, which is cheap for at most 8 vertices.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::graph::CouplingGraph;
use crate::error::{Error, Result};

pub const MAX_SUBGRAPH_VERTICES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgraphClass {
    /// Canonical representative on vertices `0..n`.
    pub canonical: CouplingGraph,
    /// Vertex maps into the host: canonical vertex `i` sits on `embedding[i]`.
    /// One map per host vertex subset.
    pub embeddings: Vec<Vec<usize>>,
}

impl SubgraphClass {
    pub fn n(&self) -> usize {
        self.canonical.len()
    }
}

/// Adjacency code of `order` (bit per pair `i < j`, row-major).
fn adjacency_code(g: &CouplingGraph, order: &[usize]) -> u64 {
    let mut code = 0u64;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            code <<= 1;
            if g.has_edge(order[i], order[j]) {
                code |= 1;
            }
        }
    }
    code
}

/// Isomorphism-invariant vertex colors by iterated neighborhood refinement.
fn refine_colors(g: &CouplingGraph) -> BTreeMap<usize, usize> {
    let mut colors: BTreeMap<usize, usize> = g.vertices().iter().map(|&v| (v, g.degree(v))).collect();
    let mut classes = usize::MAX;
    loop {
        let sigs: BTreeMap<usize, (usize, Vec<usize>)> = g
            .vertices()
            .iter()
            .map(|&v| {
                let mut nb: Vec<usize> = g.neighbors(v).map(|w| colors[&w]).collect();
                nb.sort_unstable();
                (v, (colors[&v], nb))
            })
            .collect();
        let distinct: BTreeSet<&(usize, Vec<usize>)> = sigs.values().collect();
        let rank: BTreeMap<&(usize, Vec<usize>), usize> =
            distinct.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let next: BTreeMap<usize, usize> = sigs.iter().map(|(&v, s)| (v, rank[s])).collect();
        let count = distinct.len();
        colors = next;
        if count == classes {
            return colors;
        }
        classes = count;
    }
}

fn permutations_into(cells: &[Vec<usize>], prefix: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    fn permute(
        cell: &mut Vec<usize>,
        k: usize,
        rest: &[Vec<usize>],
        prefix: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if k == cell.len() {
            let len = prefix.len();
            prefix.extend_from_slice(cell);
            permutations_into(rest, prefix, visit);
            prefix.truncate(len);
            return;
        }
        for i in k..cell.len() {
            cell.swap(k, i);
            permute(cell, k + 1, rest, prefix, visit);
            cell.swap(k, i);
        }
    }
    match cells.split_first() {
        None => visit(prefix),
        Some((first, rest)) => {
            let mut cell = first.clone();
            permute(&mut cell, 0, rest, prefix, visit);
        }
    }
}

/// Canonical adjacency code and the vertex order realizing it (smallest such
/// order when several do).
pub fn canonical_form(g: &CouplingGraph) -> (u64, Vec<usize>) {
    let colors = refine_colors(g);
    let mut by_color: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&v, &col) in &colors {
        by_color.entry(col).or_default().push(v);
    }
    let cells: Vec<Vec<usize>> = by_color.into_values().collect();
    let mut best: Option<(u64, Vec<usize>)> = None;
    permutations_into(&cells, &mut Vec::with_capacity(g.len()), &mut |order| {
        let code = adjacency_code(g, order);
        let better = match &best {
            None => true,
            Some((bc, bo)) => code > *bc || (code == *bc && order < bo.as_slice()),
        };
        if better {
            best = Some((code, order.to_vec()));
        }
    });
    best.unwrap_or((0, Vec::new()))
}

fn graph_from_code(n: usize, code: u64) -> CouplingGraph {
    let pairs: Vec<[usize; 2]> = (0..n).flat_map(|i| (i + 1..n).map(move |j| [i, j])).collect();
    let total = pairs.len();
    let edges = pairs
        .into_iter()
        .enumerate()
        .filter(|(k, _)| (code >> (total - 1 - k)) & 1 == 1)
        .map(|(_, p)| p)
        .collect();
    CouplingGraph::new((0..n).collect(), edges).expect("code yields a simple graph")
}

/// Every connected induced `n`-vertex subset of `g`, each exactly once.
pub fn connected_subsets(g: &CouplingGraph, n: usize) -> Vec<Vec<usize>> {
    fn extend(
        g: &CouplingGraph,
        n: usize,
        root: usize,
        sub: &mut Vec<usize>,
        ext: BTreeSet<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if sub.len() == n {
            let mut s = sub.clone();
            s.sort_unstable();
            out.push(s);
            return;
        }
        let mut ext = ext;
        while let Some(w) = ext.pop_first() {
            let mut next = ext.clone();
            for u in g.neighbors(w) {
                if u > root && !sub.contains(&u) && u != w && !sub.iter().any(|&s| g.has_edge(s, u)) {
                    next.insert(u);
                }
            }
            sub.push(w);
            extend(g, n, root, sub, next, out);
            sub.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for &v in g.vertices() {
        let ext = g.neighbors(v).filter(|&u| u > v).collect();
        extend(g, n, v, &mut vec![v], ext, &mut out);
    }
    out.sort();
    out
}

/// Non-isomorphic connected `n`-vertex induced subgraphs of `g` with all
/// their embeddings, ordered by canonical code.
pub fn enumerate_subgraph_classes(g: &CouplingGraph, n: usize) -> Result<Vec<SubgraphClass>> {
    if n == 0 || n > MAX_SUBGRAPH_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "subgraph size {n} outside [1, {MAX_SUBGRAPH_VERTICES}]"
        )));
    }
    let mut classes: BTreeMap<u64, Vec<Vec<usize>>> = BTreeMap::new();
    for subset in connected_subsets(g, n) {
        let induced = g.induced(&subset)?;
        let (code, order) = canonical_form(&induced);
        classes.entry(code).or_default().push(order);
    }
    Ok(classes
        .into_iter()
        .map(|(code, embeddings)| SubgraphClass {
            canonical: graph_from_code(n, code),
            embeddings,
        })
        .collect())
}
