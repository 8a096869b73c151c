use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::treebank::SyntaxTree;

/// Array form of a validated tree with an ancestor table for LCA queries.
///
/// Nodes are addressed by position (`0..nodes`), tokens by 0-based index.
#[derive(Debug, Clone)]
pub struct TreeIndex {
    depth: Vec<usize>,
    /// `up[k][v]` is the 2^k-th ancestor of `v` (the root maps to itself).
    up: Vec<Vec<usize>>,
    token_node: Vec<usize>,
}

impl TreeIndex {
    pub fn new(tree: &SyntaxTree) -> Result<Self> {
        tree.check()?;
        let pos: HashMap<usize, usize> = tree.nodes.iter().enumerate().map(|(p, n)| (n.id, p)).collect();
        let size = tree.nodes.len();
        let root = pos[&tree.root];
        let parent: Vec<usize> = tree
            .nodes
            .iter()
            .enumerate()
            .map(|(p, n)| n.parent.map_or(p, |id| pos[&id]))
            .collect();

        let mut depth = vec![usize::MAX; size];
        depth[root] = 0;
        let mut path = Vec::new();
        for start in 0..size {
            let mut v = start;
            while depth[v] == usize::MAX {
                path.push(v);
                v = parent[v];
            }
            let mut d = depth[v];
            while let Some(u) = path.pop() {
                d += 1;
                depth[u] = d;
            }
        }

        let levels = usize::BITS as usize - size.leading_zeros() as usize;
        let mut up = vec![parent];
        for k in 1..levels.max(1) {
            let prev = &up[k - 1];
            let next = (0..size).map(|v| prev[prev[v]]).collect();
            up.push(next);
        }

        let mut token_node = vec![0; tree.len()];
        for (p, n) in tree.nodes.iter().enumerate() {
            if let Some(t) = n.token {
                token_node[t - 1] = p;
            }
        }
        Ok(TreeIndex { depth, up, token_node })
    }

    pub fn token_count(&self) -> usize {
        self.token_node.len()
    }

    pub fn node_of_token(&self, token: usize) -> usize {
        self.token_node[token]
    }

    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    fn lift(&self, mut v: usize, mut by: usize) -> usize {
        let mut k = 0;
        while by > 0 {
            if by & 1 == 1 {
                v = self.up[k][v];
            }
            by >>= 1;
            k += 1;
        }
        v
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = if self.depth[a] >= self.depth[b] { (a, b) } else { (b, a) };
        a = self.lift(a, self.depth[a] - self.depth[b]);
        if a == b {
            return a;
        }
        for k in (0..self.up.len()).rev() {
            if self.up[k][a] != self.up[k][b] {
                a = self.up[k][a];
                b = self.up[k][b];
            }
        }
        self.up[0][a]
    }

    /// Edge count between the nodes bearing tokens `i` and `j` (0-based).
    pub fn token_distance(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.token_node[i], self.token_node[j]);
        let l = self.lca(a, b);
        self.depth[a] + self.depth[b] - 2 * self.depth[l]
    }

    /// Hops from token `j` up to token `i`, if `i` is a proper ancestor of `j`.
    pub fn token_ancestor_distance(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.token_node[i], self.token_node[j]);
        if a == b || self.depth[a] >= self.depth[b] {
            return None;
        }
        let hops = self.depth[b] - self.depth[a];
        (self.lift(b, hops) == a).then_some(hops)
    }
}

/// Pairwise token distances, 0-based: entry `[i][j]` is the distance
/// between tokens `i + 1` and `j + 1`. Constituency distances run through
/// the internal nodes.
pub fn token_distance_matrix(tree: &SyntaxTree) -> Result<Vec<Vec<usize>>> {
    let index = TreeIndex::new(tree)?;
    let n = index.token_count();
    Ok((0..n)
        .map(|i| (0..n).map(|j| index.token_distance(i, j)).collect())
        .collect())
}

/// `Some(d)` if token `i` (1-based) bears a proper ancestor of token `j`'s
/// node, `d` parent hops above it.
pub fn ancestor_distance(tree: &SyntaxTree, i: usize, j: usize) -> Result<Option<usize>> {
    let index = TreeIndex::new(tree)?;
    let n = index.token_count();
    for k in [i, j] {
        if k == 0 || k > n {
            return Err(Error::IndexOutOfRange { index: k, len: n });
        }
    }
    Ok(index.token_ancestor_distance(i - 1, j - 1))
}
