mod common;

use rand::Rng;
use synattn::probe::{
    average_ranks, evaluate_probe, minimum_spanning_tree, path_indicator_embeddings, probe_distances, probe_loss,
    spearman, train_probe, uuas, ProbeConfig, ProbeMatrix, ProbeSentence,
};
use synattn::rng;
use synattn::toytask::{decode_tree, gen_random_tree, prufer_edges};
use synattn::Matrix;

use common::bfs_distances;

fn rand_matrix(rows: usize, cols: usize, r: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

#[test]
fn distances_match_explicit_projection() {
    let mut r = rng::stream(1, 0);
    for _ in 0..20 {
        let (n, d, k) = (r.random_range(1..8), r.random_range(1..6), r.random_range(1..6));
        let b = rand_matrix(k, d, &mut r);
        let h = rand_matrix(n, d, &mut r);
        let got = probe_distances(&ProbeMatrix::new(b.clone()).unwrap(), &h).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut want = 0.0;
                for row in 0..k {
                    let proj: f64 = (0..d).map(|c| b[(row, c)] * (h[(i, c)] - h[(j, c)])).sum();
                    want += proj * proj;
                }
                assert!((got[(i, j)] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn loss_matches_definition() {
    let mut r = rng::stream(2, 0);
    let sentences: Vec<ProbeSentence> = (0..6)
        .map(|s| {
            let t = gen_random_tree(2 + s, s as u64).unwrap();
            ProbeSentence::new(rand_matrix(t.len(), 4, &mut r), t).unwrap()
        })
        .collect();
    let b = ProbeMatrix::new(rand_matrix(3, 4, &mut r)).unwrap();
    let mut want = 0.0;
    for s in &sentences {
        let pred = probe_distances(&b, &s.embeddings).unwrap();
        let gold = bfs_distances(&s.tree);
        let n = s.tree.len();
        let mut l = 0.0;
        for i in 0..n {
            for j in 0..n {
                l += (gold[i][j] as f64 - pred[(i, j)]).abs();
            }
        }
        want += l / (n * n) as f64;
    }
    want /= sentences.len() as f64;
    assert!((probe_loss(&b, &sentences, &[]).unwrap() - want).abs() < 1e-12);
}

#[test]
fn path_indicators_reproduce_tree_distance() {
    for seed in 0..100 {
        let t = gen_random_tree(1 + seed as usize % 12, seed).unwrap();
        let h = path_indicator_embeddings(&t, 12).unwrap();
        let d = probe_distances(&ProbeMatrix::identity(12), &h).unwrap();
        let gold = bfs_distances(&t);
        for (i, row) in gold.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                assert_eq!(d[(i, j)], g as f64);
            }
        }
    }
}

#[test]
fn uuas_survives_small_noise() {
    let mut r = rng::stream(3, 0);
    for seed in 0..200 {
        let t = gen_random_tree(2 + seed as usize % 11, seed).unwrap();
        let h = path_indicator_embeddings(&t, 12).unwrap();
        let d = probe_distances(&ProbeMatrix::identity(12), &h).unwrap();
        let noisy = Matrix::from_fn(t.len(), t.len(), |i, j| {
            if i < j {
                d[(i, j)] + r.random_range(-0.01..0.01)
            } else {
                0.0
            }
        });
        let sym = Matrix::from_fn(t.len(), t.len(), |i, j| noisy[(i.min(j), i.max(j))]);
        assert_eq!(uuas(&sym, &t).unwrap(), 1.0, "seed {seed}");
    }
}

fn spanning_weight(w: &Matrix, edges: &[(usize, usize)]) -> f64 {
    edges.iter().map(|&(i, j)| w[(i, j)]).sum()
}

#[test]
fn kruskal_is_minimal_over_all_spanning_trees() {
    let mut r = rng::stream(4, 0);
    for n in 2..=6usize {
        let w = rand_matrix(n, n, &mut r);
        let w = Matrix::from_fn(n, n, |i, j| w[(i.min(j), i.max(j))].abs());
        let mst = minimum_spanning_tree(&w);
        assert_eq!(mst.len(), n - 1);
        let mut best = f64::INFINITY;
        let seqs = n.pow(n.saturating_sub(2) as u32);
        for mut code in 0..seqs {
            let seq: Vec<usize> = (0..n - 2)
                .map(|_| {
                    let d = code % n;
                    code /= n;
                    d
                })
                .collect();
            let edges = if n == 2 { vec![(0, 1)] } else { prufer_edges(&seq, n) };
            best = best.min(spanning_weight(&w, &edges));
        }
        assert!((spanning_weight(&w, &mst) - best).abs() < 1e-12);
    }
}

#[test]
fn kruskal_tie_break() {
    let w = Matrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 });
    assert_eq!(minimum_spanning_tree(&w), vec![(0, 1), (0, 2), (0, 3)]);
}

fn distances_from(upper: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(3, 3);
    for (k, &(i, j)) in [(0, 1), (0, 2), (1, 2)].iter().enumerate() {
        m[(i, j)] = upper[k];
        m[(j, i)] = upper[k];
    }
    m
}

#[test]
fn spearman_with_ties() {
    let gold = distances_from(&[1.0, 2.0, 2.0]);
    let pred = distances_from(&[3.0, 1.0, 2.0]);
    let rho = spearman(&pred, &gold).unwrap().unwrap();
    assert!((rho + 3f64.sqrt() / 2.0).abs() < 1e-12);
    assert_eq!(average_ranks(&[1.0, 2.0, 2.0]), vec![1.0, 2.5, 2.5]);
    assert_eq!(spearman(&distances_from(&[1.0, 1.0, 1.0]), &gold).unwrap(), None);
}

#[test]
fn spearman_ignores_monotone_transforms() {
    let mut r = rng::stream(5, 0);
    for _ in 0..20 {
        let n = r.random_range(3..9);
        let a = rand_matrix(n, n, &mut r);
        let a = Matrix::from_fn(n, n, |i, j| a[(i.min(j), i.max(j))]);
        let g = rand_matrix(n, n, &mut r);
        let g = Matrix::from_fn(n, n, |i, j| g[(i.min(j), i.max(j))]);
        let base = spearman(&a, &g).unwrap().unwrap();
        let warped = spearman(&a.map(|x| (3.0 * x).exp() + 7.0), &g).unwrap().unwrap();
        assert!((base - warped).abs() < 1e-12);
        assert!((spearman(&g, &g).unwrap().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn probe_learns_path_indicators() {
    let dim = 10;
    let make = |seeds: std::ops::Range<u64>| -> Vec<ProbeSentence> {
        seeds
            .map(|s| {
                let t = gen_random_tree(3 + s as usize % 8, s).unwrap();
                ProbeSentence::new(path_indicator_embeddings(&t, dim).unwrap(), t).unwrap()
            })
            .collect()
    };
    let train = make(0..50);
    let dev = make(1000..1020);
    let b = train_probe(&train, &ProbeConfig::default()).unwrap();
    let loss = probe_loss(&b, &dev, &[]).unwrap();
    assert!(loss < 0.05, "dev loss {loss}");
    let report = evaluate_probe(&b, &dev, &[]).unwrap();
    assert_eq!(report.mean_uuas(), 1.0);
}

#[test]
fn excluded_tokens_leave_evaluation() {
    let t = decode_tree(4, &[1, 1], 1).unwrap();
    let h = path_indicator_embeddings(&t, 4).unwrap();
    let s = ProbeSentence::new(h, t).unwrap();
    let report = evaluate_probe(&ProbeMatrix::identity(4), std::slice::from_ref(&s), &["t4".to_string()]).unwrap();
    assert_eq!(report.sentences[0].uuas, 1.0);
    assert!(report
        .to_tsv()
        .starts_with("sentence_id\tn\tuuas\tspearman\n1\t4\t1.000000\t"));
    assert_eq!(
        probe_loss(&ProbeMatrix::identity(4), &[s], &["t4".to_string()]).unwrap(),
        0.0
    );
}
