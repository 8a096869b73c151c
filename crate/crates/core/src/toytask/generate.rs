use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::treebank::{Node, SyntaxTree, Token, TreeKind};

fn tokens(n: usize) -> Vec<Token> {
    (1..=n)
        .map(|i| Token {
            index: i,
            form: format!("t{i}"),
        })
        .collect()
}

/// Edges (0-based) of the labeled tree encoded by a Prüfer sequence over
/// `0..n`. `seq.len()` must be `n − 2`.
pub fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    debug_assert!(n >= 2 && seq.len() == n - 2);
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&i| degree[i] == 1).expect("a leaf always exists");
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let mut rest = (0..n).filter(|&i| degree[i] == 1);
    let (u, v) = (rest.next().unwrap(), rest.next().unwrap());
    edges.push((u, v));
    edges
}

/// Dependency tree over tokens `t1..tn` from undirected edges, oriented
/// away from `root` (0-based).
pub fn tree_from_edges(n: usize, edges: &[(usize, usize)], root: usize) -> Result<SyntaxTree> {
    if n == 0 || root >= n || edges.len() + 1 != n {
        return Err(Error::Structure(format!(
            "{} edges and root {root} do not form a tree on {n} tokens",
            edges.len()
        )));
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    let nodes = (0..n)
        .map(|i| Node {
            id: i + 1,
            label: if i == root { "root" } else { "dep" }.to_string(),
            parent: parent[i].map(|p| p + 1),
            token: Some(i + 1),
        })
        .collect();
    let tree = SyntaxTree {
        kind: TreeKind::Dependency,
        tokens: tokens(n),
        nodes,
        root: root + 1,
    };
    tree.check()?;
    Ok(tree)
}

/// Decodes one point of the generator's sequence space: a Prüfer sequence
/// plus a root.
pub fn decode_tree(n: usize, seq: &[usize], root: usize) -> Result<SyntaxTree> {
    let edges = match n {
        0 => Vec::new(),
        1 => Vec::new(),
        _ => {
            if seq.len() != n - 2 || seq.iter().any(|&x| x >= n) {
                return Err(Error::Config(format!("invalid Prüfer sequence for n = {n}")));
            }
            prufer_edges(seq, n)
        }
    };
    tree_from_edges(n, &edges, root)
}

/// Uniformly random rooted labeled dependency tree on `n` tokens.
pub fn gen_random_tree(n: usize, seed: u64) -> Result<SyntaxTree> {
    if n == 0 {
        return Err(Error::Config("trees need at least one token".into()));
    }
    let mut rng = rng::stream(seed, streams::TREE);
    let seq: Vec<usize> = (0..n.saturating_sub(2)).map(|_| rng.random_range(0..n)).collect();
    let root = rng.random_range(0..n);
    decode_tree(n, &seq, root)
}

/// Random constituency tree over `t1..tn`: spans split into two or three
/// parts, occasional unary constituents, a preterminal above every word.
pub fn gen_random_constituency(n: usize, seed: u64) -> Result<SyntaxTree> {
    if n == 0 {
        return Err(Error::Config("trees need at least one token".into()));
    }
    let mut rng = rng::stream(seed, streams::TREE);
    let mut nodes = Vec::new();
    build_span(0, n, None, "S", &mut nodes, &mut rng);
    let tree = SyntaxTree {
        kind: TreeKind::Constituency,
        tokens: tokens(n),
        nodes,
        root: 1,
    };
    tree.check()?;
    Ok(tree)
}

fn build_span(a: usize, b: usize, parent: Option<usize>, label: &str, nodes: &mut Vec<Node>, rng: &mut rng::SeededRng) {
    let id = nodes.len() + 1;
    nodes.push(Node {
        id,
        label: label.to_string(),
        parent,
        token: None,
    });
    if b - a == 1 {
        if rng.random_bool(0.2) {
            build_span(a, b, Some(id), "T", nodes, rng);
        } else {
            nodes.push(Node {
                id: id + 1,
                label: format!("t{}", a + 1),
                parent: Some(id),
                token: Some(a + 1),
            });
        }
        return;
    }
    if rng.random_bool(0.1) {
        build_span(a, b, Some(id), "X", nodes, rng);
        return;
    }
    let parts = rng.random_range(2..=3.min(b - a));
    let mut cuts = rand::seq::index::sample(rng, b - a - 1, parts - 1).into_vec();
    cuts.sort_unstable();
    let mut start = a;
    for c in cuts.into_iter().map(|c| a + c + 1).chain(std::iter::once(b)) {
        build_span(start, c, Some(id), "X", nodes, rng);
        start = c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::validate;

    #[test]
    fn singleton_and_pair() {
        let t = gen_random_tree(1, 0).unwrap();
        assert_eq!(t.root, 1);
        assert_eq!(t.nodes[0].parent, None);
        let roots: std::collections::BTreeSet<usize> = (0..32).map(|s| gen_random_tree(2, s).unwrap().root).collect();
        assert_eq!(roots.len(), 2);
    }

    #[test]
    fn prufer_known_case() {
        // sequence (3, 3, 3) on 5 nodes is the star around 3
        let mut e = prufer_edges(&[3, 3, 3], 5);
        e.iter_mut().for_each(|p| *p = (p.0.min(p.1), p.0.max(p.1)));
        e.sort_unstable();
        assert_eq!(e, vec![(0, 3), (1, 3), (2, 3), (3, 4)]);
    }

    #[test]
    fn generated_trees_are_valid() {
        for seed in 0..200 {
            let n = 1 + (seed as usize % 15);
            assert!(validate(&gen_random_tree(n, seed).unwrap()).is_empty());
            assert!(validate(&gen_random_constituency(n, seed).unwrap()).is_empty());
        }
    }

    #[test]
    fn constituency_tokens_are_leaves_in_order() {
        let t = gen_random_constituency(9, 4).unwrap();
        let leaves: Vec<usize> = t.nodes.iter().filter_map(|n| n.token).collect();
        assert_eq!(leaves, (1..=9).collect::<Vec<_>>());
    }
}
