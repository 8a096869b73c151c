use serde::{Deserialize, Serialize};

use super::{Category, Mask, MaskConfig, MaskSet, MaskSpec};
use crate::error::{Error, Result};
use crate::treebank::TreeKind;

/// One mask in the interchange format. Rows hold 1-based column indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskJson {
    pub category: Category,
    pub distance: Option<usize>,
    pub tree_kind: TreeKind,
    pub rows: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(flatten)]
    pub config: MaskConfig,
    #[serde(default)]
    pub pruned: Vec<MaskSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSetJson {
    pub n: usize,
    pub config: ConfigEcho,
    pub masks: Vec<MaskJson>,
}

impl From<&Mask> for MaskJson {
    fn from(m: &Mask) -> Self {
        MaskJson {
            category: m.spec().category,
            distance: m.spec().distance,
            tree_kind: m.spec().tree_kind,
            rows: m.rows().iter().map(|r| r.iter().map(|j| j + 1).collect()).collect(),
        }
    }
}

impl MaskJson {
    pub fn to_mask(&self, n: usize) -> Result<Mask> {
        let spec = MaskSpec {
            category: self.category,
            distance: self.distance,
            tree_kind: self.tree_kind,
        };
        let rows = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&j| {
                        j.checked_sub(1)
                            .ok_or_else(|| Error::Structure("mask column index 0; rows are 1-based".into()))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Mask::from_rows(n, spec, rows)
    }
}

impl MaskSet {
    pub fn to_json_value(&self) -> MaskSetJson {
        MaskSetJson {
            n: self.n,
            config: ConfigEcho {
                config: self.config.clone(),
                pruned: self.pruned.clone(),
            },
            masks: self.masks.iter().map(MaskJson::from).collect(),
        }
    }

    /// Mask JSON with fixed key order and 1-based rows.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("mask serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<MaskSet> {
        let doc: MaskSetJson = serde_json::from_str(text)?;
        let masks = doc.masks.iter().map(|m| m.to_mask(doc.n)).collect::<Result<Vec<_>>>()?;
        let mut set = MaskSet::from_masks(doc.n, masks, doc.config.config)?;
        set.pruned = doc.config.pruned;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskgen::{build_mask_set, MaskGroup};
    use crate::treebank::parse_ptb;

    #[test]
    fn round_trip_and_key_order() {
        let trees = parse_ptb("(S (NP she) (VP (V eats) (NP fish)))").unwrap();
        let cfg = MaskConfig {
            max_dist: 4,
            tree_kinds: vec![TreeKind::Constituency],
            prune_empty: true,
            ..MaskConfig::default()
        };
        let set = build_mask_set(MaskGroup::Single(&trees), &cfg).unwrap();
        let json = set.to_json();
        assert!(json.starts_with(r#"{"n":3,"config":{"max_dist":4,"tree_kinds":["constituency"],"self_loops":true,"literal_sibling":true,"prune_empty":true,"pruned":["#));
        assert!(
            json.contains(
                r#""masks":[{"category":"sibling","distance":4,"tree_kind":"constituency","rows":[[1],[2,3],[2,3]]}"#
            ),
            "{json}"
        );
        assert_eq!(MaskSet::from_json(&json).unwrap(), set);
    }
}
