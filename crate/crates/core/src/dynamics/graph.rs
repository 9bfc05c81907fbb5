use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("edge ({0}, {0}) is a self-loop; use the self_loops flag instead")]
    SelfLoopEdge(usize),
    #[error("graph must have at least one node")]
    Empty,
}

/// Undirected interaction graph. Edges are stored as unordered pairs `i < j`;
/// self-loops are a global switch that adds the `i = j` terms for every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTopology {
    n: usize,
    complete: bool,
    self_loops: bool,
    edges: Vec<(usize, usize)>,
    #[serde(skip)]
    adjacency: Vec<Vec<usize>>,
}

impl GraphTopology {
    /// The complete graph on `n` nodes.
    pub fn complete(n: usize, self_loops: bool) -> Self {
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        Self::build(n, edges, self_loops)
    }

    /// Builds a graph from arbitrary pairs. Orientation and duplicates are
    /// collapsed; a pair `(i, i)` is rejected.
    pub fn from_edges(
        n: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
        self_loops: bool,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for (i, j) in pairs {
            if i >= n || j >= n {
                return Err(GraphError::NodeOutOfRange(i, j, n));
            }
            if i == j {
                return Err(GraphError::SelfLoopEdge(i));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self::build(n, set.into_iter().collect(), self_loops))
    }

    fn build(n: usize, edges: Vec<(usize, usize)>, self_loops: bool) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        adjacency.iter_mut().for_each(|a| a.sort_unstable());
        let complete = n >= 1 && edges.len() == n * (n - 1) / 2;
        Self {
            n,
            complete,
            self_loops,
            edges,
            adjacency,
        }
    }

    /// Rebuilds the adjacency lists after deserialization.
    pub fn reindex(self) -> Self {
        Self::build(self.n, self.edges, self.self_loops)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn with_self_loops(mut self, on: bool) -> Self {
        self.self_loops = on;
        self
    }

    /// Unordered edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Whether the pair couples in the dynamics; `i == j` follows the
    /// self-loop switch.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return self.self_loops;
        }
        self.complete || self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Calls `f(i, j, k)` once per triangle, with `i < j < k`.
    pub fn for_each_triangle(&self, mut f: impl FnMut(usize, usize, usize)) {
        if self.complete {
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    for k in (j + 1)..self.n {
                        f(i, j, k);
                    }
                }
            }
            return;
        }
        for &(i, j) in &self.edges {
            let (a, b) = (&self.adjacency[i], &self.adjacency[j]);
            let (mut x, mut y) = (0, 0);
            while x < a.len() && y < b.len() {
                match a[x].cmp(&b[y]) {
                    std::cmp::Ordering::Less => x += 1,
                    std::cmp::Ordering::Greater => y += 1,
                    std::cmp::Ordering::Equal => {
                        if a[x] > j {
                            f(i, j, a[x]);
                        }
                        x += 1;
                        y += 1;
                    }
                }
            }
        }
    }

    pub fn triangle_count(&self) -> usize {
        let mut count = 0;
        self.for_each_triangle(|_, _, _| count += 1);
        count
    }
}
