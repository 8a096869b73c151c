//! Syntax trees: parsing, validation, and canonical JSON.
//!
//! Two input formats are supported: CoNLL-U for dependency trees and Penn
//! Treebank style bracketed text for constituency trees. Both produce the
//! same [`SyntaxTree`] type, which is what the mask generator consumes.

mod conllu;
mod ptb;
mod validate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use conllu::parse_conllu;
pub use ptb::parse_ptb;
pub use validate::{validate, Violation, ViolationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Dependency,
    Constituency,
}

impl TreeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TreeKind::Dependency => "dependency",
            TreeKind::Constituency => "constituency",
        }
    }
}

impl std::str::FromStr for TreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dependency" | "dep" => Ok(TreeKind::Dependency),
            "constituency" | "const" => Ok(TreeKind::Constituency),
            other => Err(Error::Config(format!("unknown tree kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: usize,
    pub label: String,
    pub parent: Option<usize>,
    /// 1-based index of the token this node bears, if any.
    pub token: Option<usize>,
}

/// A rooted, ordered syntax tree over a tokenized sentence.
///
/// Fields are public so that arbitrary (possibly broken) trees can be built
/// and checked with [`validate`]. Every algorithm downstream validates first.
/// Children are ordered by ascending node id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntaxTree {
    pub kind: TreeKind,
    pub tokens: Vec<Token>,
    pub nodes: Vec<Node>,
    pub root: usize,
}

impl SyntaxTree {
    /// Number of tokens.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Fails with a structure error listing every violated invariant.
    pub fn check(&self) -> Result<()> {
        let violations = validate(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Structure(join_violations(&violations)))
        }
    }

    /// Copy with nodes sorted by id and tokens sorted by index.
    pub fn canonical(&self) -> SyntaxTree {
        let mut t = self.clone();
        t.nodes.sort_by_key(|n| n.id);
        t.tokens.sort_by_key(|tok| tok.index);
        t
    }

    /// Canonical tree JSON: keys `kind`, `tokens`, `nodes`, `root` in that
    /// order, arrays sorted by id/index.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("tree serialization is infallible")
    }

    /// Loads one tree from canonical JSON and validates it.
    pub fn from_json(text: &str) -> Result<SyntaxTree> {
        let tree: SyntaxTree = serde_json::from_str(text)?;
        tree.check()?;
        Ok(tree)
    }
}

/// Serializes a list of trees as a JSON array of canonical trees.
pub fn trees_to_json(trees: &[SyntaxTree]) -> String {
    let canon: Vec<SyntaxTree> = trees.iter().map(SyntaxTree::canonical).collect();
    serde_json::to_string(&canon).expect("tree serialization is infallible")
}

/// Loads a JSON array of trees (or a single tree object) and validates each.
pub fn trees_from_json(text: &str) -> Result<Vec<SyntaxTree>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let trees: Vec<SyntaxTree> = match value {
        serde_json::Value::Array(_) => serde_json::from_value(value)?,
        _ => vec![serde_json::from_value(value)?],
    };
    for (i, t) in trees.iter().enumerate() {
        t.check()
            .map_err(|e| Error::Structure(format!("tree {}: {e}", i + 1)))?;
    }
    Ok(trees)
}

pub(crate) fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Two sentences analysed with the same set of tree kinds. The second
/// sentence's tokens follow the first's in the combined index space.
#[derive(Debug, Clone, PartialEq)]
pub struct SentencePair {
    first: Vec<SyntaxTree>,
    second: Vec<SyntaxTree>,
}

impl SentencePair {
    pub fn new(first: Vec<SyntaxTree>, second: Vec<SyntaxTree>) -> Result<Self> {
        let kinds = |side: &[SyntaxTree]| {
            let mut k: Vec<TreeKind> = side.iter().map(|t| t.kind).collect();
            k.sort();
            k
        };
        if first.is_empty() {
            return Err(Error::Structure(
                "sentence pair needs at least one tree per side".into(),
            ));
        }
        let kf = kinds(&first);
        if kf != kinds(&second) {
            return Err(Error::Structure(
                "both sentences of a pair must be parsed with the same tree kinds".into(),
            ));
        }
        if kf.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Structure("duplicate tree kind within a sentence".into()));
        }
        for side in [&first, &second] {
            for t in side.iter() {
                t.check()?;
            }
            consistent_lengths(side)?;
        }
        Ok(SentencePair { first, second })
    }

    pub fn first(&self) -> &[SyntaxTree] {
        &self.first
    }

    pub fn second(&self) -> &[SyntaxTree] {
        &self.second
    }

    pub fn first_len(&self) -> usize {
        self.first[0].len()
    }

    pub fn second_len(&self) -> usize {
        self.second[0].len()
    }

    /// Combined token count.
    pub fn len(&self) -> usize {
        self.first_len() + self.second_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tree(&self, kind: TreeKind) -> Option<(&SyntaxTree, &SyntaxTree)> {
        let a = self.first.iter().find(|t| t.kind == kind)?;
        let b = self.second.iter().find(|t| t.kind == kind)?;
        Some((a, b))
    }
}

/// All analyses of one sentence must cover the same tokens.
pub(crate) fn consistent_lengths(trees: &[SyntaxTree]) -> Result<()> {
    if let Some(first) = trees.first() {
        if let Some(bad) = trees.iter().find(|t| t.len() != first.len()) {
            return Err(Error::Structure(format!(
                "{} tree has {} tokens but {} tree has {}",
                first.kind.as_str(),
                first.len(),
                bad.kind.as_str(),
                bad.len()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHE_EATS_FISH: &str = "1\tShe\t_\t_\t_\t_\t2\tnsubj\t_\t_\n\
                                 2\teats\t_\t_\t_\t_\t0\troot\t_\t_\n\
                                 3\tfish\t_\t_\t_\t_\t2\tobj\t_\t_\n";

    #[test]
    fn json_key_order_is_fixed() {
        let t = &parse_conllu(SHE_EATS_FISH).unwrap()[0];
        let json = t.to_json();
        assert!(json.starts_with(r#"{"kind":"dependency","tokens":[{"index":1,"form":"She"}"#));
        assert!(json.contains(r#""nodes":[{"id":1,"label":"nsubj","parent":2,"token":1}"#));
        assert!(json.ends_with(r#""root":2}"#));
    }

    #[test]
    fn json_rejects_invalid_tree() {
        let mut t = parse_conllu(SHE_EATS_FISH).unwrap().remove(0);
        t.nodes[0].parent = None;
        let err = SyntaxTree::from_json(&serde_json::to_string(&t).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Structure(_)), "{err}");
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let text = r#"{"kind":"dependency","tokens":[],"nodes":[],"root":1,"extra":0}"#;
        assert!(matches!(SyntaxTree::from_json(text), Err(Error::Json(_))));
    }

    #[test]
    fn pair_requires_matching_kinds() {
        let dep = parse_conllu(SHE_EATS_FISH).unwrap();
        let con = parse_ptb("(S (NP she) (VP eats))").unwrap();
        assert!(SentencePair::new(dep.clone(), con).is_err());
        let pair = SentencePair::new(dep.clone(), dep).unwrap();
        assert_eq!(pair.len(), 6);
        assert_eq!(pair.first_len(), 3);
    }
}
