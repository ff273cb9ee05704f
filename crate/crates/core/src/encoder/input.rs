use ndarray::{Array2, ArrayView1};

use crate::graph::CollectiveGraph;
use crate::{Error, Result};

/// Node features plus undirected neighbour lists (sorted, no self entries).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub features: Array2<f64>,
    pub neighbors: Vec<Vec<usize>>,
}

impl GraphInput {
    pub fn new(features: Array2<f64>, mut neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = features.nrows();
        if neighbors.len() != n {
            return Err(Error::Shape(format!(
                "{} neighbour lists for {n} feature rows",
                neighbors.len()
            )));
        }
        for list in neighbors.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        for (v, list) in neighbors.iter().enumerate() {
            for &u in list {
                if u >= n || u == v {
                    return Err(Error::Shape(format!("bad neighbour {u} of node {v}")));
                }
                if neighbors[u].binary_search(&v).is_err() {
                    return Err(Error::Shape(format!("edge {v}-{u} is not symmetric")));
                }
            }
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Shape("features contain non-finite values".into()));
        }
        Ok(GraphInput { features, neighbors })
    }

    /// From a dense 0/1 adjacency matrix, which must be symmetric with a zero
    /// diagonal.
    pub fn from_dense(features: Array2<f64>, adjacency: &Array2<f64>) -> Result<Self> {
        let n = features.nrows();
        if adjacency.dim() != (n, n) {
            return Err(Error::Shape(format!(
                "adjacency {:?} does not match {n} nodes",
                adjacency.dim()
            )));
        }
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                let a = adjacency[[i, j]];
                if a != 0.0 && a != 1.0 {
                    return Err(Error::Shape(format!("adjacency entry {a} is not 0/1")));
                }
                if a != adjacency[[j, i]] {
                    return Err(Error::Shape("adjacency is not symmetric".into()));
                }
                if a == 1.0 {
                    if i == j {
                        return Err(Error::Shape("adjacency has a non-zero diagonal".into()));
                    }
                    neighbors[i].push(j);
                }
            }
        }
        GraphInput::new(features, neighbors)
    }

    /// Features and neighbourhoods of a graph, rows in ascending key order.
    pub fn from_graph(graph: &CollectiveGraph) -> Result<(Vec<String>, Self)> {
        let order = graph.node_order();
        let width = graph
            .nodes()
            .values()
            .next()
            .map_or(super::INPUT_DIM, |n| n.tensor.len());
        let mut features = Array2::zeros((order.len(), width));
        for (i, key) in order.iter().enumerate() {
            let t = &graph.node(key).expect("ordered key").tensor;
            if t.len() != width {
                return Err(Error::Shape(format!("node tensors mix widths {width} and {}", t.len())));
            }
            features.row_mut(i).assign(&ArrayView1::from(&t.values));
        }
        let neighbors = graph.undirected_neighbors(&order)?;
        Ok((order, GraphInput::new(features, neighbors)?))
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Row `v` is the mean of `h` over the neighbours of `v`, zero when `v` has
    /// none.
    pub fn mean_aggregate(&self, h: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(h.raw_dim());
        for (v, list) in self.neighbors.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let w = 1.0 / list.len() as f64;
            let mut row = out.row_mut(v);
            for &u in list {
                row.scaled_add(w, &h.row(u));
            }
        }
        out
    }

    /// Transpose of [`mean_aggregate`](Self::mean_aggregate): row `u` collects
    /// `g[v] / deg(v)` from every `v` that counts `u` as a neighbour.
    pub fn mean_aggregate_transpose(&self, g: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(g.raw_dim());
        for (v, list) in self.neighbors.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let w = 1.0 / list.len() as f64;
            for &u in list {
                out.row_mut(u).scaled_add(w, &g.row(v));
            }
        }
        out
    }
}
