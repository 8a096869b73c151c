mod common;

use proptest::prelude::*;
use synattn::maskgen::{ancestor_distance, enumerate_specs, expand_to_subwords, token_distance_matrix, Alignment};
use synattn::toytask::{gen_random_constituency, gen_random_tree};
use synattn::{
    build_mask, build_mask_set, parse_conllu, parse_ptb, Category, Mask, MaskConfig, MaskGroup, MaskInput, MaskSpec,
    SentencePair, SyntaxTree, TreeKind,
};

use common::{bfs_distances, oracle_mask};

fn no_loops() -> MaskConfig {
    MaskConfig {
        self_loops: false,
        ..MaskConfig::default()
    }
}

fn dense(mask: &Mask) -> Vec<Vec<bool>> {
    (0..mask.n())
        .map(|i| (0..mask.n()).map(|j| mask.get(i, j)).collect())
        .collect()
}

fn all_specs(kind: TreeKind, max_dist: usize) -> Vec<MaskSpec> {
    enumerate_specs(kind, max_dist, false)
}

fn she_eats_fish() -> SyntaxTree {
    parse_conllu(
        "1\tShe\t_\t_\t_\t_\t2\tnsubj\t_\t_\n2\teats\t_\t_\t_\t_\t0\troot\t_\t_\n3\tfish\t_\t_\t_\t_\t2\tobj\t_\t_\n",
    )
    .unwrap()
    .remove(0)
}

fn ones(mask: &Mask) -> Vec<(usize, usize)> {
    (0..mask.n())
        .flat_map(|i| mask.row(i).iter().map(move |&j| (i + 1, j + 1)))
        .collect()
}

#[test]
fn small_hand_cases() {
    let t = she_eats_fish();
    let cfg = no_loops();
    let dep = TreeKind::Dependency;
    assert_eq!(
        token_distance_matrix(&t).unwrap(),
        vec![vec![0, 1, 2], vec![1, 0, 1], vec![2, 1, 0]]
    );
    assert_eq!(ancestor_distance(&t, 2, 1).unwrap(), Some(1));
    assert_eq!(ancestor_distance(&t, 1, 2).unwrap(), None);
    let p1 = build_mask(MaskInput::Single(&t), MaskSpec::parent(dep, 1), &cfg).unwrap();
    assert_eq!(ones(&p1), vec![(2, 1), (2, 3)]);
    let s2 = build_mask(MaskInput::Single(&t), MaskSpec::sibling(dep, 2), &cfg).unwrap();
    assert_eq!(ones(&s2), vec![(1, 3), (3, 1)]);

    let c = parse_ptb("(S (NP she) (VP eats))").unwrap().remove(0);
    assert_eq!(token_distance_matrix(&c).unwrap()[0][1], 4);
}

#[test]
fn chain_ancestor_distance() {
    let t = parse_conllu(
        "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n3\tc\t_\t_\t_\t_\t2\tdep\t_\t_\n",
    )
    .unwrap()
    .remove(0);
    assert_eq!(ancestor_distance(&t, 1, 3).unwrap(), Some(2));
    for i in 1..=3 {
        assert_eq!(ancestor_distance(&t, i, i).unwrap(), None);
    }
    assert!(ancestor_distance(&t, 4, 1).is_err());
}

#[test]
fn pairwise_blocks() {
    let a = she_eats_fish();
    let b = she_eats_fish();
    let m = build_mask(
        MaskInput::Pair(&a, &b),
        MaskSpec::pairwise(TreeKind::Dependency),
        &no_loops(),
    )
    .unwrap();
    assert_eq!(m.ones(), 18);
    for i in 0..6 {
        for j in 0..6 {
            assert_eq!(m.get(i, j), (i < 3) != (j < 3));
        }
    }
}

#[test]
fn distances_match_bfs() {
    for seed in 0..1000u64 {
        let n = 1 + (seed as usize % 12);
        let t = gen_random_tree(n, seed).unwrap();
        assert_eq!(
            token_distance_matrix(&t).unwrap(),
            bfs_distances(&t),
            "dependency seed {seed}"
        );
    }
    for seed in 0..200u64 {
        let t = gen_random_constituency(1 + (seed as usize % 12), seed).unwrap();
        assert_eq!(
            token_distance_matrix(&t).unwrap(),
            bfs_distances(&t),
            "constituency seed {seed}"
        );
    }
}

#[test]
fn masks_match_definition_oracle() {
    for literal_sibling in [true, false] {
        for self_loops in [true, false] {
            let cfg = MaskConfig {
                literal_sibling,
                self_loops,
                ..MaskConfig::default()
            };
            for seed in 0..150u64 {
                let n = 1 + (seed as usize % 12);
                for t in [
                    gen_random_tree(n, seed).unwrap(),
                    gen_random_constituency(n, seed).unwrap(),
                ] {
                    for spec in all_specs(t.kind, 15) {
                        let got = build_mask(MaskInput::Single(&t), spec, &cfg).unwrap();
                        assert_eq!(dense(&got), oracle_mask(&[&t], spec, &cfg), "{spec} seed {seed}");
                    }
                }
            }
        }
    }
}

#[test]
fn pair_masks_are_block_diagonal() {
    let cfg = MaskConfig::default();
    for seed in 0..40u64 {
        let (n1, n2) = (2 + seed as usize % 5, 1 + seed as usize % 7);
        let a = gen_random_tree(n1, seed).unwrap();
        let b = gen_random_tree(n2, seed + 1000).unwrap();
        for spec in enumerate_specs(TreeKind::Dependency, 6, true) {
            let got = build_mask(MaskInput::Pair(&a, &b), spec, &cfg).unwrap();
            assert_eq!(dense(&got), oracle_mask(&[&a, &b], spec, &cfg), "{spec} seed {seed}");
        }
    }
}

#[test]
fn set_counts() {
    let dep = gen_random_tree(7, 3).unwrap();
    let con = gen_random_constituency(7, 3).unwrap();
    let cfg = MaskConfig::default();
    let single = [dep.clone(), con.clone()];
    assert_eq!(build_mask_set(MaskGroup::Single(&single), &cfg).unwrap().len(), 90);
    let pair = SentencePair::new(
        vec![dep, con],
        vec![gen_random_tree(4, 5).unwrap(), gen_random_constituency(4, 5).unwrap()],
    )
    .unwrap();
    let set = build_mask_set(MaskGroup::Pair(&pair), &cfg).unwrap();
    assert_eq!(set.len(), 92);
    let pairwise: Vec<&Mask> = set
        .masks()
        .iter()
        .filter(|m| m.spec().category == Category::Pairwise)
        .collect();
    assert_eq!(pairwise.len(), 2);
    assert_eq!(pairwise[0].dense(), pairwise[1].dense());
}

#[test]
fn small_set_order() {
    let t = [gen_random_tree(5, 1).unwrap()];
    let cfg = MaskConfig {
        max_dist: 2,
        tree_kinds: vec![TreeKind::Dependency],
        ..MaskConfig::default()
    };
    let names: Vec<String> = build_mask_set(MaskGroup::Single(&t), &cfg)
        .unwrap()
        .specs()
        .iter()
        .map(ToString::to_string)
        .collect();
    assert_eq!(
        names,
        [
            "dependency/parent/1",
            "dependency/parent/2",
            "dependency/child/1",
            "dependency/child/2",
            "dependency/sibling/1",
            "dependency/sibling/2"
        ]
    );
}

#[test]
fn pruning_records_constituency_parent_child() {
    let t = [gen_random_constituency(6, 2).unwrap()];
    let cfg = MaskConfig {
        max_dist: 3,
        tree_kinds: vec![TreeKind::Constituency],
        prune_empty: true,
        ..MaskConfig::default()
    };
    let set = build_mask_set(MaskGroup::Single(&t), &cfg).unwrap();
    let pruned = set.pruned();
    for d in 1..=3 {
        assert!(pruned.contains(&MaskSpec::parent(TreeKind::Constituency, d)));
        assert!(pruned.contains(&MaskSpec::child(TreeKind::Constituency, d)));
    }
    assert_eq!(set.len() + pruned.len(), 9);
}

#[test]
fn kind_mismatch_and_distance_bound() {
    let t = she_eats_fish();
    let cfg = MaskConfig {
        max_dist: 3,
        ..MaskConfig::default()
    };
    assert!(build_mask(MaskInput::Single(&t), MaskSpec::parent(TreeKind::Constituency, 1), &cfg).is_err());
    assert!(build_mask(MaskInput::Single(&t), MaskSpec::parent(TreeKind::Dependency, 4), &cfg).is_err());
    assert!(build_mask(MaskInput::Single(&t), MaskSpec::pairwise(TreeKind::Dependency), &cfg).is_err());
}

fn subword_oracle(mask: &Mask, counts: &[usize], self_loops: bool) -> Vec<Vec<bool>> {
    let word: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(w, &c)| std::iter::repeat_n(w, c))
        .collect();
    let n = word.len();
    (0..n)
        .map(|p| {
            (0..n)
                .map(|q| mask.get(word[p], word[q]) || (self_loops && p == q))
                .collect()
        })
        .collect()
}

#[test]
fn subword_hand_case() {
    let spec = MaskSpec::full(TreeKind::Dependency);
    let mask = Mask::from_fn(3, spec, |i, j| (i, j) == (0, 1));
    let out = expand_to_subwords(&mask, &Alignment::from_counts(&[1, 2, 1]).unwrap(), false).unwrap();
    assert_eq!(ones(&out), vec![(1, 2), (1, 3)]);
    let same = expand_to_subwords(&mask, &Alignment::identity(3), false).unwrap();
    assert_eq!(same, mask);
}

fn arb_tree() -> impl Strategy<Value = SyntaxTree> {
    (1usize..=12, any::<u64>()).prop_map(|(n, s)| gen_random_tree(n, s).unwrap())
}

proptest! {
    #[test]
    fn distance_metric(t in arb_tree()) {
        let d = token_distance_matrix(&t).unwrap();
        let n = t.len();
        for i in 0..n {
            prop_assert_eq!(d[i][i], 0);
            for j in 0..n {
                prop_assert_eq!(d[i][j], d[j][i]);
                for k in 0..n {
                    prop_assert!(d[i][j] <= d[i][k] + d[k][j]);
                }
            }
        }
    }

    #[test]
    fn parent_child_duality_and_sibling_symmetry(t in arb_tree(), d in 1usize..=15) {
        let cfg = no_loops();
        let kind = TreeKind::Dependency;
        let p = build_mask(MaskInput::Single(&t), MaskSpec::parent(kind, d), &cfg).unwrap();
        let c = build_mask(MaskInput::Single(&t), MaskSpec::child(kind, d), &cfg).unwrap();
        prop_assert_eq!(dense(&p.transpose()), dense(&c));
        for literal_sibling in [true, false] {
            let cfg = MaskConfig { literal_sibling, ..no_loops() };
            let s = build_mask(MaskInput::Single(&t), MaskSpec::sibling(kind, d), &cfg).unwrap();
            prop_assert_eq!(dense(&s.transpose()), dense(&s));
        }
    }

    #[test]
    fn siblings_partition_pairs(t in arb_tree()) {
        let cfg = no_loops();
        let n = t.len();
        let mut cover = vec![0usize; n * n];
        for d in 1..n.max(2) {
            let kind = TreeKind::Dependency;
            let s = build_mask(MaskInput::Single(&t), MaskSpec::sibling(kind, d), &cfg).unwrap();
            let p = build_mask(MaskInput::Single(&t), MaskSpec::parent(kind, d), &cfg).unwrap();
            let c = build_mask(MaskInput::Single(&t), MaskSpec::child(kind, d), &cfg).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert!(!(p.get(i, j) || c.get(i, j)) || s.get(i, j));
                    cover[i * n + j] += usize::from(s.get(i, j));
                }
            }
        }
        for (ij, &count) in cover.iter().enumerate() {
            prop_assert_eq!(count, usize::from(ij / n != ij % n));
        }
    }

    #[test]
    fn constituency_parent_child_empty(n in 1usize..=12, seed in any::<u64>(), d in 1usize..=15) {
        let t = gen_random_constituency(n, seed).unwrap();
        let kind = TreeKind::Constituency;
        for spec in [MaskSpec::parent(kind, d), MaskSpec::child(kind, d)] {
            prop_assert!(build_mask(MaskInput::Single(&t), spec, &no_loops()).unwrap().is_empty_off_diagonal());
        }
    }

    #[test]
    fn every_mask_is_consistent(t in arb_tree(), self_loops in any::<bool>()) {
        let cfg = MaskConfig { self_loops, tree_kinds: vec![TreeKind::Dependency], ..MaskConfig::default() };
        let set = build_mask_set(MaskGroup::Single(std::slice::from_ref(&t)), &cfg).unwrap();
        prop_assert!(set.masks().iter().all(Mask::is_consistent));
    }

    #[test]
    fn subword_expansion_matches_oracle(
        cells in prop::collection::vec(any::<bool>(), 64),
        counts in prop::collection::vec(1usize..=3, 1..=8),
        self_loops in any::<bool>(),
    ) {
        let n = counts.len();
        let mask = Mask::from_fn(n, MaskSpec::full(TreeKind::Dependency), |i, j| cells[i * 8 + j]);
        let out = expand_to_subwords(&mask, &Alignment::from_counts(&counts).unwrap(), self_loops).unwrap();
        prop_assert!(out.is_consistent());
        prop_assert_eq!(dense(&out), subword_oracle(&mask, &counts, self_loops));
    }
}
