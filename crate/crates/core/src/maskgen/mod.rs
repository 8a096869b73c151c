//! Token-by-token attention masks induced by syntax trees.
//!
//! A mask selects the (query, key) pairs one sub-network may attend over.
//! Parent and child masks follow ancestry at an exact hop count, sibling
//! masks select same-sentence pairs at an exact tree distance, and the
//! pairwise mask connects tokens of the two sentences of a pair.

mod distance;
mod json;
mod subword;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::treebank::{consistent_lengths, SentencePair, SyntaxTree, TreeKind};

pub use distance::{ancestor_distance, token_distance_matrix, TreeIndex};
pub use json::{MaskJson, MaskSetJson};
pub use subword::{expand_to_subwords, Alignment};

pub const DEFAULT_MAX_DIST: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Parent,
    Child,
    Sibling,
    Pairwise,
    /// Every pair allowed; the vanilla-attention baseline.
    Full,
}

impl Category {
    pub fn has_distance(self) -> bool {
        matches!(self, Category::Parent | Category::Child | Category::Sibling)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Parent => "parent",
            Category::Child => "child",
            Category::Sibling => "sibling",
            Category::Pairwise => "pairwise",
            Category::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSpec {
    pub category: Category,
    pub distance: Option<usize>,
    pub tree_kind: TreeKind,
}

impl MaskSpec {
    pub fn parent(kind: TreeKind, d: usize) -> Self {
        Self::with_distance(Category::Parent, kind, d)
    }

    pub fn child(kind: TreeKind, d: usize) -> Self {
        Self::with_distance(Category::Child, kind, d)
    }

    pub fn sibling(kind: TreeKind, d: usize) -> Self {
        Self::with_distance(Category::Sibling, kind, d)
    }

    pub fn pairwise(kind: TreeKind) -> Self {
        MaskSpec {
            category: Category::Pairwise,
            distance: None,
            tree_kind: kind,
        }
    }

    pub fn full(kind: TreeKind) -> Self {
        MaskSpec {
            category: Category::Full,
            distance: None,
            tree_kind: kind,
        }
    }

    fn with_distance(category: Category, tree_kind: TreeKind, d: usize) -> Self {
        MaskSpec {
            category,
            distance: Some(d),
            tree_kind,
        }
    }

    pub fn check(&self, max_dist: usize) -> Result<()> {
        match (self.category.has_distance(), self.distance) {
            (true, None) => Err(Error::Config(format!("{self} needs a distance"))),
            (false, Some(_)) => Err(Error::Config(format!("{self} takes no distance"))),
            (true, Some(0)) => Err(Error::Config(format!("{self}: distance must be positive"))),
            (true, Some(d)) if d > max_dist => {
                Err(Error::Config(format!("{self}: distance exceeds max_dist {max_dist}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.tree_kind.as_str(), self.category.as_str())?;
        if let Some(d) = self.distance {
            write!(f, "/{d}")?;
        }
        Ok(())
    }
}

/// A boolean n×n connectivity matrix held both densely and as sorted
/// per-row column lists. Positions are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    n: usize,
    spec: MaskSpec,
    dense: Vec<bool>,
    rows: Vec<Vec<usize>>,
}

impl Mask {
    pub fn from_fn(n: usize, spec: MaskSpec, mut allowed: impl FnMut(usize, usize) -> bool) -> Mask {
        let mut dense = vec![false; n * n];
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if allowed(i, j) {
                    dense[i * n + j] = true;
                    rows[i].push(j);
                }
            }
        }
        Mask { n, spec, dense, rows }
    }

    /// Builds from per-row column lists; rows are sorted and deduplicated.
    pub fn from_rows(n: usize, spec: MaskSpec, mut rows: Vec<Vec<usize>>) -> Result<Mask> {
        if rows.len() != n {
            return Err(Error::dim(format!("mask has {} rows, expected {n}", rows.len())));
        }
        let mut dense = vec![false; n * n];
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            if let Some(&j) = row.iter().find(|&&j| j >= n) {
                return Err(Error::dim(format!("mask row {i} has column {j} >= {n}")));
            }
            for &j in row.iter() {
                dense[i * n + j] = true;
            }
        }
        Ok(Mask { n, spec, dense, rows })
    }

    pub fn all_ones(n: usize, spec: MaskSpec) -> Mask {
        Mask::from_fn(n, spec, |_, _| true)
    }

    pub fn identity(n: usize, spec: MaskSpec) -> Mask {
        Mask::from_fn(n, spec, |i, j| i == j)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &MaskSpec {
        &self.spec
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.dense[i * self.n + j]
    }

    /// Allowed key positions for query `i`, ascending.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn dense(&self) -> &[bool] {
        &self.dense
    }

    /// Number of allowed pairs.
    pub fn ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn off_diagonal_ones(&self) -> usize {
        (0..self.n)
            .map(|i| self.rows[i].iter().filter(|&&j| j != i).count())
            .sum()
    }

    pub fn is_empty_off_diagonal(&self) -> bool {
        self.off_diagonal_ones() == 0
    }

    pub fn transpose(&self) -> Mask {
        Mask::from_fn(self.n, self.spec, |i, j| self.get(j, i))
    }

    pub fn with_self_loops(&self) -> Mask {
        Mask::from_fn(self.n, self.spec, |i, j| i == j || self.get(i, j))
    }

    pub fn with_spec(mut self, spec: MaskSpec) -> Mask {
        self.spec = spec;
        self
    }

    /// Mask with rows and columns reordered: entry `(i, j)` of the result is
    /// entry `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Mask {
        Mask::from_fn(self.n, self.spec, |i, j| self.get(perm[i], perm[j]))
    }

    /// Dense and sparse views agree and rows are strictly increasing.
    pub fn is_consistent(&self) -> bool {
        self.rows.len() == self.n
            && self.rows.iter().enumerate().all(|(i, row)| {
                row.windows(2).all(|w| w[0] < w[1])
                    && (0..self.n).all(|j| self.get(i, j) == row.binary_search(&j).is_ok())
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskConfig {
    pub max_dist: usize,
    pub tree_kinds: Vec<TreeKind>,
    pub self_loops: bool,
    /// Sibling masks include ancestor/descendant pairs when set.
    pub literal_sibling: bool,
    pub prune_empty: bool,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            max_dist: DEFAULT_MAX_DIST,
            tree_kinds: vec![TreeKind::Dependency, TreeKind::Constituency],
            self_loops: true,
            literal_sibling: true,
            prune_empty: false,
        }
    }
}

impl MaskConfig {
    pub fn check(&self) -> Result<()> {
        if self.max_dist == 0 {
            return Err(Error::Config("max_dist must be at least 1".into()));
        }
        if self.tree_kinds.is_empty() {
            return Err(Error::Config("at least one tree kind is required".into()));
        }
        let mut kinds = self.tree_kinds.clone();
        kinds.sort();
        kinds.dedup();
        if kinds.len() != self.tree_kinds.len() {
            return Err(Error::Config("tree kinds must not repeat".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum MaskInput<'a> {
    Single(&'a SyntaxTree),
    Pair(&'a SyntaxTree, &'a SyntaxTree),
}

impl MaskInput<'_> {
    pub fn len(&self) -> usize {
        match self {
            MaskInput::Single(t) => t.len(),
            MaskInput::Pair(a, b) => a.len() + b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputed distances and ancestry for one tree, shared by every mask
/// built from it.
struct Relations {
    n: usize,
    dist: Vec<usize>,
    /// `anc[i * n + j]`: hops from `j` up to `i` when `i` is a proper ancestor.
    anc: Vec<Option<usize>>,
}

impl Relations {
    fn new(tree: &SyntaxTree) -> Result<Self> {
        let index = TreeIndex::new(tree)?;
        let n = index.token_count();
        let mut dist = Vec::with_capacity(n * n);
        let mut anc = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                dist.push(index.token_distance(i, j));
                anc.push(index.token_ancestor_distance(i, j));
            }
        }
        Ok(Relations { n, dist, anc })
    }

    fn allows(&self, spec: &MaskSpec, literal_sibling: bool, i: usize, j: usize) -> bool {
        let at = i * self.n + j;
        let d = spec.distance;
        match spec.category {
            Category::Parent => self.anc[at].is_some() && self.anc[at] == d,
            Category::Child => {
                let back = j * self.n + i;
                self.anc[back].is_some() && self.anc[back] == d
            }
            Category::Sibling => {
                i != j
                    && Some(self.dist[at]) == d
                    && (literal_sibling || (self.anc[at].is_none() && self.anc[j * self.n + i].is_none()))
            }
            Category::Pairwise | Category::Full => unreachable!("handled by caller"),
        }
    }
}

enum Source {
    Single(Relations),
    Pair(Relations, Relations),
}

impl Source {
    fn new(input: MaskInput<'_>) -> Result<Self> {
        Ok(match input {
            MaskInput::Single(t) => Source::Single(Relations::new(t)?),
            MaskInput::Pair(a, b) => Source::Pair(Relations::new(a)?, Relations::new(b)?),
        })
    }

    fn build(&self, spec: MaskSpec, config: &MaskConfig) -> Result<Mask> {
        spec.check(config.max_dist)?;
        let lit = config.literal_sibling;
        let mask = match (self, spec.category) {
            (Source::Single(_), Category::Pairwise) => {
                return Err(Error::Config("pairwise mask needs a sentence pair".into()));
            }
            (Source::Single(r), Category::Full) => Mask::all_ones(r.n, spec),
            (Source::Pair(a, b), Category::Full) => Mask::all_ones(a.n + b.n, spec),
            (Source::Single(r), _) => Mask::from_fn(r.n, spec, |i, j| r.allows(&spec, lit, i, j)),
            (Source::Pair(a, b), Category::Pairwise) => {
                let n1 = a.n;
                Mask::from_fn(n1 + b.n, spec, |i, j| (i < n1) != (j < n1))
            }
            (Source::Pair(a, b), _) => {
                let n1 = a.n;
                Mask::from_fn(n1 + b.n, spec, |i, j| match (i < n1, j < n1) {
                    (true, true) => a.allows(&spec, lit, i, j),
                    (false, false) => b.allows(&spec, lit, i - n1, j - n1),
                    _ => false,
                })
            }
        };
        Ok(if config.self_loops {
            mask.with_self_loops()
        } else {
            mask
        })
    }
}

fn check_kind(input: MaskInput<'_>, kind: TreeKind) -> Result<()> {
    let ok = match input {
        MaskInput::Single(t) => t.kind == kind,
        MaskInput::Pair(a, b) => a.kind == kind && b.kind == kind,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "mask spec asks for a {} tree but the input is not one",
            kind.as_str()
        )))
    }
}

/// Builds one mask from a sentence or sentence pair.
pub fn build_mask(input: MaskInput<'_>, spec: MaskSpec, config: &MaskConfig) -> Result<Mask> {
    check_kind(input, spec.tree_kind)?;
    Source::new(input)?.build(spec, config)
}

#[derive(Debug, Clone, Copy)]
pub enum MaskGroup<'a> {
    /// All analyses of a single sentence, at most one per tree kind.
    Single(&'a [SyntaxTree]),
    Pair(&'a SentencePair),
}

/// The ordered family of sub-network masks for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    n: usize,
    masks: Vec<Mask>,
    config: MaskConfig,
    pruned: Vec<MaskSpec>,
}

impl MaskSet {
    /// Assembles a set from already-built masks (random or full masks, or
    /// masks loaded from JSON). All masks must share `n`.
    pub fn from_masks(n: usize, masks: Vec<Mask>, config: MaskConfig) -> Result<MaskSet> {
        if let Some(m) = masks.iter().find(|m| m.n() != n) {
            return Err(Error::dim(format!("mask {} has n = {}, expected {n}", m.spec(), m.n())));
        }
        Ok(MaskSet {
            n,
            masks,
            config,
            pruned: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn masks(&self) -> &[Mask] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn config(&self) -> &MaskConfig {
        &self.config
    }

    /// Specs removed by `prune_empty`, in enumeration order.
    pub fn pruned(&self) -> &[MaskSpec] {
        &self.pruned
    }

    pub fn specs(&self) -> Vec<MaskSpec> {
        self.masks.iter().map(|m| *m.spec()).collect()
    }

    /// Reordered copy: mask `k` of the result is mask `order[k]` of `self`.
    pub fn reordered(&self, order: &[usize]) -> MaskSet {
        MaskSet {
            masks: order.iter().map(|&k| self.masks[k].clone()).collect(),
            ..self.clone()
        }
    }

    /// Applies the same token permutation to every mask.
    pub fn permuted_tokens(&self, perm: &[usize]) -> MaskSet {
        MaskSet {
            masks: self.masks.iter().map(|m| m.permuted(perm)).collect(),
            ..self.clone()
        }
    }
}

/// The enumeration order for one tree kind: parent, child, sibling at
/// distances 1..=max_dist, then pairwise when `pair` is set.
pub fn enumerate_specs(kind: TreeKind, max_dist: usize, pair: bool) -> Vec<MaskSpec> {
    let mut specs = Vec::with_capacity(3 * max_dist + 1);
    for category in [Category::Parent, Category::Child, Category::Sibling] {
        specs.extend((1..=max_dist).map(|d| MaskSpec::with_distance(category, kind, d)));
    }
    if pair {
        specs.push(MaskSpec::pairwise(kind));
    }
    specs
}

/// Builds every sub-network mask for a sentence or pair.
///
/// Tree kinds come in configuration order. A pair gets one pairwise mask
/// per tree kind; the copies are identical.
pub fn build_mask_set(group: MaskGroup<'_>, config: &MaskConfig) -> Result<MaskSet> {
    config.check()?;
    let pair = matches!(group, MaskGroup::Pair(_));
    if let MaskGroup::Single(trees) = group {
        consistent_lengths(trees)?;
    }

    let mut masks = Vec::new();
    let mut pruned = Vec::new();
    let mut n = 0;
    for &kind in &config.tree_kinds {
        let input = match group {
            MaskGroup::Single(trees) => {
                let mut of_kind = trees.iter().filter(|t| t.kind == kind);
                let tree = of_kind.next().ok_or_else(|| missing(kind))?;
                if of_kind.next().is_some() {
                    return Err(Error::Structure(format!(
                        "more than one {} tree for the sentence",
                        kind.as_str()
                    )));
                }
                MaskInput::Single(tree)
            }
            MaskGroup::Pair(p) => {
                let (a, b) = p.tree(kind).ok_or_else(|| missing(kind))?;
                MaskInput::Pair(a, b)
            }
        };
        n = input.len();
        let source = Source::new(input)?;
        for spec in enumerate_specs(kind, config.max_dist, pair) {
            let mask = source.build(spec, config)?;
            if config.prune_empty && mask.is_empty_off_diagonal() {
                pruned.push(spec);
            } else {
                masks.push(mask);
            }
        }
    }
    Ok(MaskSet {
        n,
        masks,
        config: config.clone(),
        pruned,
    })
}

fn missing(kind: TreeKind) -> Error {
    Error::Structure(format!("no {} tree supplied for the sentence", kind.as_str()))
}
