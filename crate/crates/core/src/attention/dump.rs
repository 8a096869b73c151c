use serde::Serialize;

use super::BlockCache;
use crate::maskgen::MaskSpec;
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubnetworkMap {
    pub spec: MaskSpec,
    pub weights: Vec<Vec<f64>>,
}

/// Attention maps of one forward pass, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttentionDump {
    pub subnetworks: Vec<SubnetworkMap>,
    pub topical_weights: Vec<Vec<f64>>,
}

/// Collects per-sub-network weights, either for one head or averaged over
/// heads.
pub fn attention_dump(cache: &BlockCache, head: Option<usize>) -> AttentionDump {
    let subnetworks = cache
        .masks()
        .masks()
        .iter()
        .enumerate()
        .map(|(j, mask)| {
            let heads = cache.attention_weights(j);
            let weights = match head {
                Some(h) => heads[h].clone(),
                None => {
                    let mut acc = Matrix::zeros(mask.n(), mask.n());
                    for w in heads {
                        acc.add_assign(w);
                    }
                    acc.scale(1.0 / heads.len() as f64)
                }
            };
            SubnetworkMap {
                spec: *mask.spec(),
                weights: weights.to_rows(),
            }
        })
        .collect();
    AttentionDump {
        subnetworks,
        topical_weights: cache.topical_weights().to_rows(),
    }
}

impl AttentionDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dump serialization is infallible")
    }
}
