use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::generate::gen_random_tree;
use crate::error::{Error, Result};
use crate::maskgen::TreeIndex;
use crate::rng::{self, streams};
use crate::treebank::{SyntaxTree, TreeKind};

/// Per-token labels computed from tree structure alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ToyTask {
    /// `dist(t, root) mod 2`.
    RootDistanceParity,
    /// 1 iff `dist(t, root) ≤ k`.
    WithinKOfRoot { k: usize },
}

impl ToyTask {
    pub fn classes(self) -> usize {
        2
    }

    pub fn labels(self, tree: &SyntaxTree) -> Result<Vec<usize>> {
        if tree.kind != TreeKind::Dependency {
            return Err(Error::Config("toy tasks are defined on dependency trees".into()));
        }
        let index = TreeIndex::new(tree)?;
        Ok((0..tree.len())
            .map(|t| {
                let depth = index.depth(index.node_of_token(t));
                match self {
                    ToyTask::RootDistanceParity => depth % 2,
                    ToyTask::WithinKOfRoot { k } => usize::from(depth <= k),
                }
            })
            .collect())
    }
}

impl fmt::Display for ToyTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToyTask::RootDistanceParity => f.write_str("root_distance_parity"),
            ToyTask::WithinKOfRoot { k } => write!(f, "within_k_of_root:{k}"),
        }
    }
}

/// `root_distance_parity` or `within_k_of_root:K`.
impl FromStr for ToyTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "root_distance_parity" => Ok(ToyTask::RootDistanceParity),
            Some(("within_k_of_root", k)) => k
                .parse()
                .map(|k| ToyTask::WithinKOfRoot { k })
                .map_err(|_| Error::Config(format!("bad k in task {s:?}"))),
            _ => Err(Error::Config(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for DatasetSizes {
    fn default() -> Self {
        DatasetSizes {
            train: 2000,
            dev: 200,
            test: 500,
            min_len: 5,
            max_len: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyExample {
    pub tree: SyntaxTree,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    pub task: ToyTask,
    pub seed: u64,
    pub train: Vec<ToyExample>,
    pub dev: Vec<ToyExample>,
    pub test: Vec<ToyExample>,
}

impl ToyDataset {
    pub fn max_len(&self) -> usize {
        self.examples().map(|e| e.tree.len()).max().unwrap_or(0)
    }

    /// Train, then dev, then test.
    pub fn examples(&self) -> impl Iterator<Item = &ToyExample> {
        self.train.iter().chain(&self.dev).chain(&self.test)
    }
}

fn parent_key(tree: &SyntaxTree) -> Vec<usize> {
    tree.nodes.iter().map(|n| n.parent.unwrap_or(0)).collect()
}

/// Random trees with lengths uniform in `min_len..=max_len`, split
/// train/dev/test with no tree appearing twice anywhere.
pub fn make_dataset(task: ToyTask, sizes: DatasetSizes, seed: u64) -> Result<ToyDataset> {
    if sizes.min_len == 0 || sizes.min_len > sizes.max_len {
        return Err(Error::Config(format!(
            "sentence lengths {}..={} are invalid",
            sizes.min_len, sizes.max_len
        )));
    }
    let total = sizes.train + sizes.dev + sizes.test;
    let budget = 100 * total + 1000;
    let mut lengths = rng::stream(seed, streams::DATASET);
    let mut seen = HashSet::new();
    let mut examples = Vec::with_capacity(total);
    for k in 0..budget {
        if examples.len() == total {
            break;
        }
        let n = lengths.random_range(sizes.min_len..=sizes.max_len);
        let tree = gen_random_tree(n, rng::derive_seed(seed, streams::TREE, k as u64))?;
        if seen.insert(parent_key(&tree)) {
            let labels = task.labels(&tree)?;
            examples.push(ToyExample { tree, labels });
        }
    }
    if examples.len() < total {
        return Err(Error::Config(format!(
            "only {} distinct trees found for {total} requested",
            examples.len()
        )));
    }
    let test = examples.split_off(sizes.train + sizes.dev);
    let dev = examples.split_off(sizes.train);
    Ok(ToyDataset {
        task,
        seed,
        train: examples,
        dev,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_conllu;

    fn conllu(heads: &[usize]) -> SyntaxTree {
        let text: String = heads
            .iter()
            .enumerate()
            .map(|(i, h)| format!("{}\tw\t_\t_\t_\t_\t{h}\tdep\t_\t_\n", i + 1))
            .collect();
        parse_conllu(&text).unwrap().remove(0)
    }

    #[test]
    fn parity_star() {
        assert_eq!(
            ToyTask::RootDistanceParity.labels(&conllu(&[2, 0, 2])).unwrap(),
            vec![1, 0, 1]
        );
    }

    #[test]
    fn within_k_chain() {
        let t = conllu(&[0, 1, 2, 3]);
        assert_eq!(ToyTask::WithinKOfRoot { k: 1 }.labels(&t).unwrap(), vec![1, 1, 0, 0]);
    }

    #[test]
    fn task_names_round_trip() {
        for t in [ToyTask::RootDistanceParity, ToyTask::WithinKOfRoot { k: 3 }] {
            assert_eq!(t.to_string().parse::<ToyTask>().unwrap(), t);
        }
        assert!("depth".parse::<ToyTask>().is_err());
        assert!(serde_json::from_str::<ToyTask>(r#"{"name":"depth"}"#).is_err());
    }

    #[test]
    fn splits_are_disjoint_and_deterministic() {
        let sizes = DatasetSizes {
            train: 60,
            dev: 20,
            test: 20,
            min_len: 3,
            max_len: 6,
        };
        let a = make_dataset(ToyTask::RootDistanceParity, sizes, 9).unwrap();
        assert_eq!(a, make_dataset(ToyTask::RootDistanceParity, sizes, 9).unwrap());
        let keys: HashSet<Vec<usize>> = a.examples().map(|e| parent_key(&e.tree)).collect();
        assert_eq!(keys.len(), 100);
        assert!(a.examples().all(|e| (3..=6).contains(&e.tree.len())));
    }

    #[test]
    fn too_few_distinct_trees() {
        let sizes = DatasetSizes {
            train: 10,
            dev: 0,
            test: 0,
            min_len: 1,
            max_len: 2,
        };
        // only three trees exist on at most two tokens
        assert!(make_dataset(ToyTask::RootDistanceParity, sizes, 0).is_err());
    }
}
