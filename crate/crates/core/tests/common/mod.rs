//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use synattn::maskgen::{Category, MaskConfig, MaskSpec};
use synattn::{SyntaxTree, TreeKind};

fn token_nodes(tree: &SyntaxTree) -> Vec<usize> {
    let mut out = vec![0; tree.tokens.len()];
    for n in &tree.nodes {
        if let Some(t) = n.token {
            out[t - 1] = n.id;
        }
    }
    out
}

/// Breadth-first shortest paths between token-bearing nodes over the
/// undirected parent edges.
pub fn bfs_distances(tree: &SyntaxTree) -> Vec<Vec<usize>> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for n in &tree.nodes {
        adj.entry(n.id).or_default();
        if let Some(p) = n.parent {
            adj.entry(n.id).or_default().push(p);
            adj.entry(p).or_default().push(n.id);
        }
    }
    let nodes = token_nodes(tree);
    nodes
        .iter()
        .map(|&src| {
            let mut dist = HashMap::from([(src, 0usize)]);
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[&u] {
                    if !dist.contains_key(&v) {
                        dist.insert(v, dist[&u] + 1);
                        queue.push_back(v);
                    }
                }
            }
            nodes.iter().map(|t| dist[t]).collect()
        })
        .collect()
}

/// Hops from token `j` up to token `i` (0-based) when `i` is a proper
/// ancestor of `j`.
pub fn ancestor_hops(tree: &SyntaxTree, i: usize, j: usize) -> Option<usize> {
    let parent: HashMap<usize, Option<usize>> = tree.nodes.iter().map(|n| (n.id, n.parent)).collect();
    let nodes = token_nodes(tree);
    let (target, mut cur) = (nodes[i], nodes[j]);
    let mut hops = 0;
    while let Some(p) = parent[&cur] {
        hops += 1;
        if p == target {
            return Some(hops);
        }
        cur = p;
    }
    None
}

/// Mask entries straight from the definitions, for one sentence or a pair.
pub fn oracle_mask(sentences: &[&SyntaxTree], spec: MaskSpec, config: &MaskConfig) -> Vec<Vec<bool>> {
    let n: usize = sentences.iter().map(|t| t.tokens.len()).sum();
    let mut owner = Vec::new();
    for (s, t) in sentences.iter().enumerate() {
        owner.extend((0..t.tokens.len()).map(|k| (s, k)));
    }
    let dists: Vec<Vec<Vec<usize>>> = sentences.iter().map(|t| bfs_distances(t)).collect();
    let mut out = vec![vec![false; n]; n];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let ((si, a), (sj, b)) = (owner[i], owner[j]);
            let same = si == sj;
            let tree = sentences[si];
            *cell = match (spec.category, spec.distance) {
                (Category::Parent, Some(d)) => same && ancestor_hops(tree, a, b) == Some(d),
                (Category::Child, Some(d)) => same && ancestor_hops(tree, b, a) == Some(d),
                (Category::Sibling, Some(d)) => {
                    same && a != b && dists[si][a][b] == d && {
                        let related = ancestor_hops(tree, a, b).is_some() || ancestor_hops(tree, b, a).is_some();
                        config.literal_sibling || !related
                    }
                }
                (Category::Pairwise, _) => !same,
                (Category::Full, _) => true,
                _ => unreachable!("distance categories always carry a distance"),
            };
            if config.self_loops && i == j {
                *cell = true;
            }
        }
    }
    out
}

/// Bracketed rendering of a constituency tree.
pub fn to_ptb(tree: &SyntaxTree) -> String {
    fn go(tree: &SyntaxTree, id: usize, out: &mut String) {
        let node = tree.node(id).unwrap();
        if let Some(t) = node.token {
            out.push_str(&tree.tokens[t - 1].form);
            return;
        }
        out.push('(');
        out.push_str(&node.label);
        for c in tree.nodes.iter().filter(|c| c.parent == Some(id)) {
            out.push(' ');
            go(tree, c.id, out);
        }
        out.push(')');
    }
    assert_eq!(tree.kind, TreeKind::Constituency);
    let mut out = String::new();
    go(tree, tree.root, &mut out);
    out
}

/// CoNLL-U rendering of a dependency tree.
pub fn to_conllu(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    for n in &tree.nodes {
        let t = n.token.unwrap();
        let head = n.parent.map_or(0, |p| tree.node(p).unwrap().token.unwrap());
        let form = &tree.tokens[t - 1].form;
        out.push_str(&format!("{t}\t{form}\t_\t_\t_\t_\t{head}\t{}\t_\t_\n", n.label));
    }
    out
}
