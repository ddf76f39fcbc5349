use rand::Rng;

use crate::error::{Error, Result};

/// Simple undirected graph on nodes `0..m`; edges stored as sorted `(i, j)`, `i < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::Graph(format!("edge ({a}, {b}) out of range for m = {m}")));
            }
            if a == b {
                return Err(Error::Graph(format!("self-loop at node {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Graph(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        Ok(Graph { m, edges: norm })
    }

    pub fn complete(m: usize) -> Self {
        let edges = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
        Graph { m, edges }
    }

    pub fn path(m: usize) -> Self {
        let edges = (1..m).map(|i| (i - 1, i)).collect();
        Graph { m, edges }
    }

    pub fn ring(m: usize) -> Self {
        let mut edges: Vec<_> = (1..m).map(|i| (i - 1, i)).collect();
        if m >= 3 {
            edges.push((0, m - 1));
        }
        edges.sort_unstable();
        Graph { m, edges }
    }

    /// Ring plus up to `chords` distinct random non-ring edges.
    pub fn ring_with_chords<R: Rng>(m: usize, chords: usize, rng: &mut R) -> Self {
        let ring = Graph::ring(m);
        let mut candidates: Vec<(usize, usize)> = Graph::complete(m)
            .edges
            .into_iter()
            .filter(|e| ring.edges.binary_search(e).is_err())
            .collect();
        let mut edges = ring.edges;
        for _ in 0..chords.min(candidates.len()) {
            let k = rng.random_range(0..candidates.len());
            edges.push(candidates.swap_remove(k));
        }
        edges.sort_unstable();
        Graph { m, edges }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.m];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.m);
        self.edges.iter().for_each(|&(a, b)| {
            uf.union(a, b);
        });
        uf.components == 1
    }

    /// Keeps each edge with probability `1 − p_drop`, then re-adds edges of
    /// `self` (in order) that join distinct components until connected.
    pub fn drop_edges<R: Rng>(&self, p_drop: f64, rng: &mut R) -> Graph {
        let mut uf = UnionFind::new(self.m);
        let mut kept = vec![false; self.edges.len()];
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            if rng.random::<f64>() >= p_drop {
                kept[k] = true;
                uf.union(a, b);
            }
        }
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            if uf.components == 1 {
                break;
            }
            if !kept[k] && uf.union(a, b) {
                kept[k] = true;
            }
        }
        let edges = self
            .edges
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(e, _)| *e)
            .collect();
        Graph { m: self.m, edges }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    components: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            components: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.components -= 1;
        true
    }
}
