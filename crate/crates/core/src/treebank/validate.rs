use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{SyntaxTree, TreeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    DuplicateId,
    DanglingParent,
    NoRoot,
    MultipleRoots,
    RootMismatch,
    Cycle,
    TokenIndices,
    NodeWithoutToken,
    TokenShared,
    TokenUnbound,
    LeafWithoutToken,
    InternalWithToken,
    LeafOrder,
}

impl ViolationKind {
    fn describe(self) -> &'static str {
        match self {
            ViolationKind::DuplicateId => "duplicate node id",
            ViolationKind::DanglingParent => "parent refers to a missing node",
            ViolationKind::NoRoot => "no root",
            ViolationKind::MultipleRoots => "multiple roots",
            ViolationKind::RootMismatch => "declared root is not the parentless node",
            ViolationKind::Cycle => "cycle or unreachable from root",
            ViolationKind::TokenIndices => "token indices are not 1..n in order",
            ViolationKind::NodeWithoutToken => "dependency node without token",
            ViolationKind::TokenShared => "token borne by more than one node",
            ViolationKind::TokenUnbound => "token borne by no node",
            ViolationKind::LeafWithoutToken => "leaf without token",
            ViolationKind::InternalWithToken => "internal node carries a token",
            ViolationKind::LeafOrder => "leaf order differs from token order",
        }
    }
}

/// One broken invariant together with the offending node ids (token indices
/// for the token-centric checks).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub ids: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.describe())?;
        if !self.ids.is_empty() {
            let noun = match self.kind {
                ViolationKind::TokenIndices | ViolationKind::TokenUnbound => "tokens",
                _ => "ids",
            };
            let ids: Vec<String> = self.ids.iter().map(ToString::to_string).collect();
            write!(f, ": {noun} {}", ids.join(", "))?;
        }
        Ok(())
    }
}

/// Reports every violated tree invariant; empty iff the tree is well formed.
pub fn validate(tree: &SyntaxTree) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, ids: Vec<usize>| out.push(Violation { kind, ids });

    let mut parent_of: BTreeMap<usize, Option<usize>> = BTreeMap::new();
    let mut dups = BTreeSet::new();
    for n in &tree.nodes {
        if parent_of.insert(n.id, n.parent).is_some() {
            dups.insert(n.id);
        }
    }
    if !dups.is_empty() {
        push(ViolationKind::DuplicateId, dups.into_iter().collect());
    }

    let dangling: Vec<usize> = tree
        .nodes
        .iter()
        .filter(|n| n.parent.is_some_and(|p| !parent_of.contains_key(&p)))
        .map(|n| n.id)
        .collect();
    if !dangling.is_empty() {
        push(ViolationKind::DanglingParent, dangling);
    }

    let roots: Vec<usize> = parent_of
        .iter()
        .filter(|(_, p)| p.is_none())
        .map(|(&id, _)| id)
        .collect();
    match roots.len() {
        0 => push(ViolationKind::NoRoot, vec![]),
        1 if roots[0] != tree.root => push(ViolationKind::RootMismatch, vec![roots[0], tree.root]),
        1 => {}
        _ => push(ViolationKind::MultipleRoots, roots.clone()),
    }

    // A node is fine if following parents reaches some parentless node
    // within |nodes| steps.
    let limit = parent_of.len();
    let stuck: Vec<usize> = parent_of
        .keys()
        .copied()
        .filter(|&start| {
            let mut cur = start;
            for _ in 0..=limit {
                match parent_of.get(&cur) {
                    Some(Some(p)) => cur = *p,
                    Some(None) => return false,
                    None => return false, // dangling, reported above
                }
            }
            true
        })
        .collect();
    if !stuck.is_empty() {
        push(ViolationKind::Cycle, stuck);
    }

    let bad_tokens: Vec<usize> = tree
        .tokens
        .iter()
        .enumerate()
        .filter(|(pos, t)| t.index != pos + 1)
        .map(|(_, t)| t.index)
        .collect();
    if !bad_tokens.is_empty() {
        push(ViolationKind::TokenIndices, bad_tokens);
    }

    let n_tokens = tree.tokens.len();
    let mut bearers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for n in &tree.nodes {
        if let Some(t) = n.token {
            bearers.entry(t).or_default().push(n.id);
        }
    }
    let shared: Vec<usize> = bearers
        .values()
        .filter(|ids| ids.len() > 1)
        .flatten()
        .copied()
        .collect();
    if !shared.is_empty() {
        push(ViolationKind::TokenShared, shared);
    }
    let unbound: Vec<usize> = (1..=n_tokens).filter(|t| !bearers.contains_key(t)).collect();
    if !unbound.is_empty() {
        push(ViolationKind::TokenUnbound, unbound);
    }
    // Node tokens outside 1..=n are also unbound in the bijection sense.
    let out_of_range: Vec<usize> = tree
        .nodes
        .iter()
        .filter(|n| n.token.is_some_and(|t| t == 0 || t > n_tokens))
        .map(|n| n.id)
        .collect();
    if !out_of_range.is_empty() {
        push(ViolationKind::TokenIndices, out_of_range);
    }

    match tree.kind {
        TreeKind::Dependency => {
            let missing: Vec<usize> = tree.nodes.iter().filter(|n| n.token.is_none()).map(|n| n.id).collect();
            if !missing.is_empty() {
                push(ViolationKind::NodeWithoutToken, missing);
            }
        }
        TreeKind::Constituency => {
            let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for n in &tree.nodes {
                if let Some(p) = n.parent {
                    children.entry(p).or_default().push(n.id);
                }
            }
            let leaf_missing: Vec<usize> = tree
                .nodes
                .iter()
                .filter(|n| !children.contains_key(&n.id) && n.token.is_none())
                .map(|n| n.id)
                .collect();
            if !leaf_missing.is_empty() {
                push(ViolationKind::LeafWithoutToken, leaf_missing);
            }
            let internal_tok: Vec<usize> = tree
                .nodes
                .iter()
                .filter(|n| children.contains_key(&n.id) && n.token.is_some())
                .map(|n| n.id)
                .collect();
            if !internal_tok.is_empty() {
                push(ViolationKind::InternalWithToken, internal_tok);
            }

            // Leaf order only makes sense on an otherwise sound tree.
            if out.is_empty() {
                let token_of: BTreeMap<usize, Option<usize>> = tree.nodes.iter().map(|n| (n.id, n.token)).collect();
                let mut leaves = Vec::new();
                let mut stack = vec![tree.root];
                while let Some(id) = stack.pop() {
                    match children.get(&id) {
                        Some(kids) => stack.extend(kids.iter().rev()),
                        None => leaves.push(id),
                    }
                }
                let misplaced: Vec<usize> = leaves
                    .iter()
                    .enumerate()
                    .filter(|(pos, id)| token_of[id] != Some(pos + 1))
                    .map(|(_, &id)| id)
                    .collect();
                if !misplaced.is_empty() {
                    out.push(Violation {
                        kind: ViolationKind::LeafOrder,
                        ids: misplaced,
                    });
                }
            }
        }
    }
    out
}
