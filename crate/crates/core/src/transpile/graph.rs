//! Undirected device connectivity.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HEAVY_HEX_27: &str = include_str!("../../data/heavy_hex_27.json");

#[derive(Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<usize>,
    edges: Vec<[usize; 2]>,
}

/// Simple undirected graph on arbitrary vertex ids. Vertices and edges are
/// kept sorted; each edge is stored as `[low, high]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct CouplingGraph {
    vertices: Vec<usize>,
    edges: Vec<[usize; 2]>,
    #[serde(skip)]
    adjacency: BTreeMap<usize, BTreeSet<usize>>,
}

impl TryFrom<GraphFile> for CouplingGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        CouplingGraph::new(f.vertices, f.edges)
    }
}

impl From<CouplingGraph> for GraphFile {
    fn from(g: CouplingGraph) -> Self {
        GraphFile {
            vertices: g.vertices,
            edges: g.edges,
        }
    }
}

impl CouplingGraph {
    pub fn new(vertices: Vec<usize>, edges: Vec<[usize; 2]>) -> Result<Self> {
        let vset: BTreeSet<usize> = vertices.iter().copied().collect();
        if vset.len() != vertices.len() {
            return Err(Error::InvalidGraph("duplicate vertex id".into()));
        }
        let mut adjacency: BTreeMap<usize, BTreeSet<usize>> =
            vset.iter().map(|&v| (v, BTreeSet::new())).collect();
        let mut eset = BTreeSet::new();
        for [a, b] in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            if !vset.contains(&a) || !vset.contains(&b) {
                return Err(Error::InvalidGraph(format!("edge [{a}, {b}] uses an unknown vertex")));
            }
            eset.insert([a.min(b), a.max(b)]);
            adjacency.get_mut(&a).unwrap().insert(b);
            adjacency.get_mut(&b).unwrap().insert(a);
        }
        Ok(CouplingGraph {
            vertices: vset.into_iter().collect(),
            edges: eset.into_iter().collect(),
            adjacency,
        })
    }

    /// Path `0 - 1 - … - (n-1)`.
    pub fn line(n: usize) -> Self {
        let edges = (1..n).map(|i| [i - 1, i]).collect();
        CouplingGraph::new((0..n).collect(), edges).expect("valid line graph")
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| [a, b]))
            .collect();
        CouplingGraph::new((0..n).collect(), edges).expect("valid complete graph")
    }

    /// The 27-qubit heavy-hex (Falcon) coupling map.
    pub fn heavy_hex_27() -> Self {
        CouplingGraph::from_json(HEAVY_HEX_27).expect("bundled heavy-hex fixture is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("coupling graph", e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.adjacency.contains_key(&v)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(&a).is_some_and(|s| s.contains(&b))
    }

    /// Neighbors in ascending order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.get(&v).into_iter().flatten().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.get(&v).map_or(0, BTreeSet::len)
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.vertices.first() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// BFS shortest path from `a` to `b` inclusive. Neighbors are explored in
    /// ascending order, so ties go to the lowest-index route.
    pub fn shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        if !self.contains(a) || !self.contains(b) {
            return None;
        }
        let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([a]);
        parent.insert(a, a);
        while let Some(v) = queue.pop_front() {
            if v == b {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for w in self.neighbors(v) {
                if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(w) {
                    e.insert(v);
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Induced subgraph on `subset` (ids kept).
    pub fn induced(&self, subset: &[usize]) -> Result<Self> {
        let set: BTreeSet<usize> = subset.iter().copied().collect();
        if let Some(v) = set.iter().find(|v| !self.contains(**v)) {
            return Err(Error::InvalidGraph(format!("vertex {v} not in graph")));
        }
        let edges = self
            .edges
            .iter()
            .filter(|[a, b]| set.contains(a) && set.contains(b))
            .copied()
            .collect();
        CouplingGraph::new(set.into_iter().collect(), edges)
    }

    /// Position of `v` within the sorted vertex list.
    pub fn index_of(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }
}
