//! Structural distance probe.
//!
//! A rank-k linear map `B` is trained so that `‖B(h_i − h_j)‖²` matches the
//! tree distance between tokens `i` and `j`. The fitted probe is scored by
//! the unlabeled attachment of its minimum spanning tree (UUAS) and by the
//! Spearman correlation of predicted and gold distances.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::attention::init_uniform;
use crate::error::{Error, Result};
use crate::maskgen::{token_distance_matrix, TreeIndex};
use crate::rng::{self, streams};
use crate::tensor::{Axis, Matrix};
use crate::treebank::{SyntaxTree, TreeKind};

/// `B`, rank × d_model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeMatrix {
    b: Matrix,
}

impl ProbeMatrix {
    pub fn new(b: Matrix) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::NonFinite("probe matrix".into()));
        }
        if b.rows() == 0 || b.cols() == 0 {
            return Err(Error::dim("probe matrix must be non-empty"));
        }
        Ok(ProbeMatrix { b })
    }

    pub fn identity(d_model: usize) -> Self {
        ProbeMatrix {
            b: Matrix::identity(d_model),
        }
    }

    pub fn zeros(rank: usize, d_model: usize) -> Self {
        ProbeMatrix {
            b: Matrix::zeros(rank, d_model),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.b
    }

    pub fn rank(&self) -> usize {
        self.b.rows()
    }

    pub fn d_model(&self) -> usize {
        self.b.cols()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeInit {
    #[default]
    Random,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Defaults to d_model when absent.
    pub rank: Option<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init: ProbeInit,
    /// Token forms left out of the loss and of evaluation.
    pub exclude: Vec<String>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            rank: None,
            learning_rate: 0.05,
            epochs: 300,
            batch_size: 10,
            seed: 0,
            init: ProbeInit::Random,
            exclude: Vec::new(),
        }
    }
}

impl ProbeConfig {
    pub fn check(&self, d_model: usize) -> Result<()> {
        let rank = self.rank.unwrap_or(d_model);
        if rank == 0 || rank > d_model {
            return Err(Error::Config(format!("probe rank {rank} must be in 1..={d_model}")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if self.init == ProbeInit::Identity && rank != d_model {
            return Err(Error::Config("identity init needs rank = d_model".into()));
        }
        Ok(())
    }
}

/// One training or evaluation example.
#[derive(Debug, Clone)]
pub struct ProbeSentence {
    /// n × d_model.
    pub embeddings: Matrix,
    pub tree: SyntaxTree,
}

impl ProbeSentence {
    pub fn new(embeddings: Matrix, tree: SyntaxTree) -> Result<Self> {
        tree.check()?;
        if embeddings.rows() != tree.len() {
            return Err(Error::dim(format!(
                "{} embedding rows for a {}-token tree",
                embeddings.rows(),
                tree.len()
            )));
        }
        if !embeddings.is_finite() {
            return Err(Error::NonFinite("embeddings".into()));
        }
        Ok(ProbeSentence { embeddings, tree })
    }

    fn kept(&self, exclude: &[String]) -> Vec<usize> {
        (0..self.tree.len())
            .filter(|&i| !exclude.contains(&self.tree.tokens[i].form))
            .collect()
    }
}

/// `‖B(h_i − h_j)‖²` for every token pair.
pub fn probe_distances(b: &ProbeMatrix, embeddings: &Matrix) -> Result<Matrix> {
    if embeddings.cols() != b.d_model() {
        return Err(Error::dim(format!(
            "embeddings have {} features, probe expects {}",
            embeddings.cols(),
            b.d_model()
        )));
    }
    let p = embeddings.matmul_t(&b.b);
    Ok(squared_distances(&p))
}

fn squared_distances(p: &Matrix) -> Matrix {
    let n = p.rows();
    let mut out = Matrix::zeros(n, n).with_axes(Axis::Tokens, Axis::Tokens);
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = p.row(i).iter().zip(p.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    out
}

fn take(m: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), m.cols(), |r, c| m[(idx[r], c)])
}

/// Loss and `dL/dB` for one sentence restricted to `kept` tokens.
fn sentence_loss(b: &Matrix, h: &Matrix, gold: &[Vec<usize>], kept: &[usize]) -> (f64, Matrix) {
    let n = kept.len();
    let mut grad = Matrix::zeros(b.rows(), b.cols());
    if n == 0 {
        return (0.0, grad);
    }
    let h = take(h, kept);
    let p = h.matmul_t(b);
    let pred = squared_distances(&p);
    // With S the sign matrix and L = diag(S·1) − S, the gradient of
    // Σ_ij |pred_ij − gold_ij| is 4·Pᵀ·L·H.
    let mut lap = Matrix::zeros(n, n);
    let mut loss = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let diff = pred[(i, j)] - gold[kept[i]][kept[j]] as f64;
            loss += diff.abs();
            let s = if diff > 0.0 {
                1.0
            } else if diff < 0.0 {
                -1.0
            } else {
                0.0
            };
            lap[(i, j)] -= s;
            lap[(i, i)] += s;
        }
    }
    let scale = 1.0 / (n * n) as f64;
    let g = p.t_matmul(&lap.matmul(&h)).scale(4.0 * scale);
    grad.add_assign(&g);
    (loss * scale, grad)
}

/// Mean per-sentence loss `(1/n²) Σ_ij |dist_T(i,j) − ‖B(h_i − h_j)‖²|`.
pub fn probe_loss(b: &ProbeMatrix, sentences: &[ProbeSentence], exclude: &[String]) -> Result<f64> {
    if sentences.is_empty() {
        return Err(Error::Config("no sentences".into()));
    }
    let mut total = 0.0;
    for s in sentences {
        check_sentence(s, b.d_model())?;
        let gold = token_distance_matrix(&s.tree)?;
        total += sentence_loss(&b.b, &s.embeddings, &gold, &s.kept(exclude)).0;
    }
    Ok(total / sentences.len() as f64)
}

fn check_sentence(s: &ProbeSentence, d_model: usize) -> Result<()> {
    if s.embeddings.cols() != d_model {
        return Err(Error::dim(format!(
            "embeddings have {} features, expected {d_model}",
            s.embeddings.cols()
        )));
    }
    if s.embeddings.rows() != s.tree.len() {
        return Err(Error::dim("embedding rows do not match the tree".to_string()));
    }
    Ok(())
}

/// Mini-batch gradient descent on the probe loss. Returns `B` after the
/// last epoch.
pub fn train_probe(sentences: &[ProbeSentence], config: &ProbeConfig) -> Result<ProbeMatrix> {
    let first = sentences
        .first()
        .ok_or_else(|| Error::Config("probe training needs at least one sentence".into()))?;
    let d_model = first.embeddings.cols();
    config.check(d_model)?;
    for s in sentences {
        check_sentence(s, d_model)?;
        if s.tree.kind != TreeKind::Dependency {
            return Err(Error::Config("the probe is trained on dependency trees".into()));
        }
    }
    let rank = config.rank.unwrap_or(d_model);
    let mut b = match config.init {
        ProbeInit::Identity => Matrix::identity(d_model),
        ProbeInit::Random => {
            let mut rng = rng::stream(config.seed, streams::PROBE_INIT);
            init_uniform(rank, d_model, d_model, &mut rng)
        }
    };
    let gold: Vec<Vec<Vec<usize>>> = sentences
        .iter()
        .map(|s| token_distance_matrix(&s.tree))
        .collect::<Result<_>>()?;
    let kept: Vec<Vec<usize>> = sentences.iter().map(|s| s.kept(&config.exclude)).collect();

    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut shuffle = rng::stream(config.seed, streams::SHUFFLE);
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle);
        for batch in order.chunks(config.batch_size) {
            let mut grad = Matrix::zeros(b.rows(), b.cols());
            let mut loss = 0.0;
            for &s in batch {
                let (l, g) = sentence_loss(&b, &sentences[s].embeddings, &gold[s], &kept[s]);
                loss += l;
                grad.add_assign(&g);
            }
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("probe loss at epoch {epoch}")));
            }
            b.axpy(-config.learning_rate / batch.len() as f64, &grad);
        }
    }
    ProbeMatrix::new(b)
}

/// Undirected unlabeled attachment score of the minimum spanning tree over
/// `predicted` against the gold tree's edges.
pub fn uuas(predicted: &Matrix, gold: &SyntaxTree) -> Result<f64> {
    let all: Vec<usize> = (0..gold.len()).collect();
    uuas_over(predicted, gold, &all)
}

fn uuas_over(predicted: &Matrix, gold: &SyntaxTree, kept: &[usize]) -> Result<f64> {
    gold.check()?;
    if gold.kind != TreeKind::Dependency {
        return Err(Error::Config("UUAS is defined against dependency trees".into()));
    }
    let n = gold.len();
    if predicted.shape() != (n, n) {
        return Err(Error::dim(format!(
            "predicted distances are {:?} for {n} tokens",
            predicted.shape()
        )));
    }
    if kept.len() < 2 {
        return Err(Error::Config("UUAS needs at least two tokens".into()));
    }
    let sub = Matrix::from_fn(kept.len(), kept.len(), |i, j| predicted[(kept[i], kept[j])]);
    let mst: Vec<(usize, usize)> = minimum_spanning_tree(&sub)
        .into_iter()
        .map(|(i, j)| ordered(kept[i], kept[j]))
        .collect();
    let gold_edges = dependency_edges(gold);
    let gold_kept: Vec<(usize, usize)> = gold_edges
        .into_iter()
        .filter(|(i, j)| kept.contains(i) && kept.contains(j))
        .collect();
    if gold_kept.is_empty() {
        return Err(Error::Config("no gold edges among the evaluated tokens".into()));
    }
    let hits = mst.iter().filter(|e| gold_kept.contains(e)).count();
    Ok(hits as f64 / gold_kept.len() as f64)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Undirected gold edges as 0-based token pairs `(min, max)`.
pub fn dependency_edges(tree: &SyntaxTree) -> Vec<(usize, usize)> {
    let token_of: HashMap<usize, usize> = tree
        .nodes
        .iter()
        .filter_map(|n| n.token.map(|t| (n.id, t - 1)))
        .collect();
    let mut edges: Vec<(usize, usize)> = tree
        .nodes
        .iter()
        .filter_map(|n| {
            let p = n.parent?;
            Some(ordered(token_of[&n.id], token_of[&p]))
        })
        .collect();
    edges.sort_unstable();
    edges
}

/// Kruskal over the complete graph. Equal weights are taken in
/// lexicographic `(i, j)` order.
pub fn minimum_spanning_tree(weights: &Matrix) -> Vec<(usize, usize)> {
    let n = weights.rows();
    let mut edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    edges.sort_by(|&(a, b), &(c, d)| weights[(a, b)].total_cmp(&weights[(c, d)]).then((a, b).cmp(&(c, d))));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for (i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
            tree.push((i, j));
            if tree.len() + 1 == n {
                break;
            }
        }
    }
    tree
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]].total_cmp(&values[idx[start]]) == Ordering::Equal {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation over the strict upper triangles. `Ok(None)` when
/// either side has no variance.
pub fn spearman(predicted: &Matrix, gold: &Matrix) -> Result<Option<f64>> {
    let n = predicted.rows();
    if predicted.shape() != (n, n) || gold.shape() != (n, n) {
        return Err(Error::dim("spearman needs two square matrices of equal size"));
    }
    if n < 3 {
        return Err(Error::Config(format!("spearman needs n >= 3, got {n}")));
    }
    let upper = |m: &Matrix| -> Vec<f64> {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect()
    };
    Ok(pearson(&average_ranks(&upper(predicted)), &average_ranks(&upper(gold))))
}

/// Embeddings whose squared distances are exactly the tree distances:
/// coordinate `c` of token `i` is 1 iff node `c` lies on the path from the
/// root to `i` and is not the root. `dim` must be at least the node count.
pub fn path_indicator_embeddings(tree: &SyntaxTree, dim: usize) -> Result<Matrix> {
    let index = TreeIndex::new(tree)?;
    if dim < tree.nodes.len() {
        return Err(Error::dim(format!(
            "dimension {dim} is smaller than the {} tree nodes",
            tree.nodes.len()
        )));
    }
    let pos: HashMap<usize, usize> = tree.nodes.iter().enumerate().map(|(k, n)| (n.id, k)).collect();
    let mut out = Matrix::zeros(tree.len(), dim).with_axes(Axis::Tokens, Axis::Features);
    for t in 0..tree.len() {
        let mut id = tree.nodes[index.node_of_token(t)].id;
        while id != tree.root {
            out[(t, pos[&id])] = 1.0;
            id = tree.node(id).and_then(|n| n.parent).expect("validated tree");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceScore {
    pub sentence_id: usize,
    pub n: usize,
    pub uuas: f64,
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub sentences: Vec<SentenceScore>,
}

impl ProbeReport {
    pub fn mean_uuas(&self) -> f64 {
        let n = self.sentences.len().max(1) as f64;
        self.sentences.iter().map(|s| s.uuas).sum::<f64>() / n
    }

    /// Mean over sentences with a defined correlation.
    pub fn mean_spearman(&self) -> Option<f64> {
        let defined: Vec<f64> = self.sentences.iter().filter_map(|s| s.spearman).collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sentence_id\tn\tuuas\tspearman\n");
        let fmt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
        for s in &self.sentences {
            let _ = writeln!(out, "{}\t{}\t{:.6}\t{}", s.sentence_id, s.n, s.uuas, fmt(s.spearman));
        }
        let _ = writeln!(
            out,
            "mean\t{}\t{:.6}\t{}",
            self.sentences.len(),
            self.mean_uuas(),
            fmt(self.mean_spearman())
        );
        out
    }
}

/// Scores every sentence. Sentences with fewer than three evaluated tokens
/// get an undefined Spearman; fewer than two is an error.
pub fn evaluate_probe(b: &ProbeMatrix, sentences: &[ProbeSentence], exclude: &[String]) -> Result<ProbeReport> {
    let mut scores = Vec::with_capacity(sentences.len());
    for (id, s) in sentences.iter().enumerate() {
        check_sentence(s, b.d_model())?;
        let kept = s.kept(exclude);
        let pred = probe_distances(b, &s.embeddings)?;
        let gold = token_distance_matrix(&s.tree)?;
        let u = uuas_over(&pred, &s.tree, &kept)?;
        let rho = if kept.len() >= 3 {
            let sub_pred = Matrix::from_fn(kept.len(), kept.len(), |i, j| pred[(kept[i], kept[j])]);
            let sub_gold = Matrix::from_fn(kept.len(), kept.len(), |i, j| gold[kept[i]][kept[j]] as f64);
            spearman(&sub_pred, &sub_gold)?
        } else {
            None
        };
        scores.push(SentenceScore {
            sentence_id: id + 1,
            n: s.tree.len(),
            uuas: u,
            spearman: rho,
        });
    }
    Ok(ProbeReport { sentences: scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_conllu;

    fn she_eats_fish() -> SyntaxTree {
        let text = "1\tShe\t_\t_\t_\t_\t2\tnsubj\t_\t_\n2\teats\t_\t_\t_\t_\t0\troot\t_\t_\n3\tfish\t_\t_\t_\t_\t2\tobj\t_\t_\n";
        parse_conllu(text).unwrap().remove(0)
    }

    fn chain3() -> SyntaxTree {
        let text = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n3\tc\t_\t_\t_\t_\t2\tdep\t_\t_\n";
        parse_conllu(text).unwrap().remove(0)
    }

    #[test]
    fn distances_of_zero_probe() {
        let h = Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64);
        let d = probe_distances(&ProbeMatrix::zeros(2, 3), &h).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn distances_two_points() {
        let h = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let d = probe_distances(&ProbeMatrix::identity(2), &h).unwrap();
        assert_eq!(d.data(), &[0.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn path_indicator_reproduces_distances() {
        let t = she_eats_fish();
        let h = path_indicator_embeddings(&t, 5).unwrap();
        let d = probe_distances(&ProbeMatrix::identity(5), &h).unwrap();
        assert_eq!(d.data(), &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]);
        assert!(path_indicator_embeddings(&t, 2).is_err());
    }

    #[test]
    fn identity_init_at_global_minimum_stays_put() {
        let t = she_eats_fish();
        let s = ProbeSentence::new(path_indicator_embeddings(&t, 3).unwrap(), t).unwrap();
        let config = ProbeConfig {
            init: ProbeInit::Identity,
            epochs: 5,
            ..ProbeConfig::default()
        };
        let b0 = ProbeMatrix::identity(3);
        assert_eq!(probe_loss(&b0, std::slice::from_ref(&s), &[]).unwrap(), 0.0);
        assert_eq!(train_probe(&[s], &config).unwrap(), b0);
    }

    #[test]
    fn identical_embeddings_have_zero_gradient() {
        let t = chain3();
        let h = Matrix::from_fn(3, 4, |_, j| j as f64);
        let gold = token_distance_matrix(&t).unwrap();
        let b = Matrix::from_fn(4, 4, |i, j| (i + 2 * j) as f64 * 0.1);
        let (loss, grad) = sentence_loss(&b, &h, &gold, &[0, 1, 2]);
        // mean tree distance over all 9 ordered pairs: (1+2+1)·2 / 9
        assert!((loss - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(grad.max_abs(), 0.0);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let t = chain3();
        let mut rng = rng::stream(3, 0);
        let h = init_uniform(3, 4, 1, &mut rng);
        let b = init_uniform(2, 4, 1, &mut rng);
        let gold = token_distance_matrix(&t).unwrap();
        let (_, grad) = sentence_loss(&b, &h, &gold, &[0, 1, 2]);
        let f = |x: &[f64]| {
            let m = Matrix::from_vec(2, 4, x.to_vec()).unwrap();
            sentence_loss(&m, &h, &gold, &[0, 1, 2]).0
        };
        let report = crate::attention::grad_check(f, b.data(), grad.data(), 1e-6).unwrap();
        assert!(report.max_rel_error < 1e-6, "{}", report.max_rel_error);
    }

    #[test]
    fn uuas_examples() {
        let t = chain3();
        let gold = Matrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        assert_eq!(uuas(&gold, &t).unwrap(), 1.0);
        // MST {1–2, 1–3}
        let pred = Matrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 5.0], vec![1.0, 5.0, 0.0]]).unwrap();
        assert_eq!(uuas(&pred, &t).unwrap(), 0.5);
    }

    #[test]
    fn mst_tie_break_is_lexicographic() {
        let w = Matrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(minimum_spanning_tree(&w), vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn spearman_examples() {
        let gold = Matrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]]).unwrap();
        assert_eq!(spearman(&gold, &gold).unwrap(), Some(1.0));
        let rev = Matrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 3.0 - gold[(i, j)] });
        assert!((spearman(&rev, &gold).unwrap().unwrap() + 1.0).abs() < 1e-15);
        let flat = Matrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(spearman(&flat, &gold).unwrap(), None);
        assert!(spearman(&Matrix::zeros(2, 2), &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn report_tsv() {
        let r = ProbeReport {
            sentences: vec![
                SentenceScore {
                    sentence_id: 1,
                    n: 3,
                    uuas: 1.0,
                    spearman: Some(0.5),
                },
                SentenceScore {
                    sentence_id: 2,
                    n: 2,
                    uuas: 0.0,
                    spearman: None,
                },
            ],
        };
        assert_eq!(
            r.to_tsv(),
            "sentence_id\tn\tuuas\tspearman\n1\t3\t1.000000\t0.500000\n2\t2\t0.000000\tNA\nmean\t2\t0.500000\t0.500000\n"
        );
    }

    #[test]
    fn exclusion_drops_tokens() {
        let t = she_eats_fish();
        let s = ProbeSentence::new(path_indicator_embeddings(&t, 3).unwrap(), t).unwrap();
        let report = evaluate_probe(&ProbeMatrix::identity(3), &[s], &["fish".to_string()]).unwrap();
        assert_eq!(report.sentences[0].uuas, 1.0);
        assert_eq!(report.sentences[0].spearman, None);
    }
}
