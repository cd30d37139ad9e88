//! Topic-weight tables and linear topic projection.

use std::collections::HashMap;
use std::io::BufRead;

use log::warn;
use ndarray::Array2;

use crate::aggregate::CountyFeatureMatrix;

use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicNormalization {
    /// Weights used exactly as loaded.
    Raw,
    /// Each topic's weights rescaled to sum to 1.
    SumToOne,
}

impl TopicNormalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            TopicNormalization::Raw => "raw",
            TopicNormalization::SumToOne => "sum_to_one",
        }
    }
}

/// Non-negative token weights per topic. Token lists are sorted so
/// loadings sum in a reproducible order.
#[derive(Debug, Clone)]
pub struct TopicModel {
    topic_ids: Vec<u32>,
    weights: Vec<Vec<(String, f64)>>,
    normalization: TopicNormalization,
}

impl TopicModel {
    pub fn n_topics(&self) -> usize {
        self.topic_ids.len()
    }

    pub fn topic_ids(&self) -> &[u32] {
        &self.topic_ids
    }

    pub fn normalization(&self) -> TopicNormalization {
        self.normalization
    }

    pub fn topic_weights(&self, topic_id: u32) -> Option<&[(String, f64)]> {
        let idx = self.topic_ids.binary_search(&topic_id).ok()?;
        Some(&self.weights[idx])
    }

    /// Column names for projected matrices, in topic order.
    pub fn feature_names(&self) -> Vec<String> {
        self.topic_ids.iter().map(|id| format!("topic_{id}")).collect()
    }
}

/// Parses `topic_id \t token \t weight` rows. Duplicate (topic,
/// token) pairs keep the last row; negative weights are refused.
pub fn load_topic_model<R: BufRead>(
    reader: R,
    normalization: TopicNormalization,
) -> Result<TopicModel, FeatureError> {
    let mut table: HashMap<u32, HashMap<String, f64>> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (topic, token, weight) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(FeatureError::SchemaError {
                    line: lineno,
                    reason: "expected `topic_id\\ttoken\\tweight`".to_string(),
                })
            }
        };
        let topic: u32 = topic.parse().map_err(|_| FeatureError::SchemaError {
            line: lineno,
            reason: "bad topic id".to_string(),
        })?;
        let weight: f64 = weight.parse().map_err(|_| FeatureError::SchemaError {
            line: lineno,
            reason: "bad weight".to_string(),
        })?;
        if weight < 0.0 || !weight.is_finite() {
            return Err(FeatureError::NegativeWeight {
                line: lineno,
                topic,
                token: token.to_string(),
                weight,
            });
        }
        let slot = table.entry(topic).or_default();
        if slot.insert(token.to_string(), weight).is_some() {
            warn!("duplicate weight for topic {topic} token `{token}`, keeping line {lineno}");
        }
    }

    let mut topic_ids: Vec<u32> = table.keys().copied().collect();
    topic_ids.sort_unstable();
    let mut weights = Vec::with_capacity(topic_ids.len());
    for id in &topic_ids {
        let mut entries: Vec<(String, f64)> = table.remove(id).unwrap().into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if normalization == TopicNormalization::SumToOne {
            let total: f64 = entries.iter().map(|(_, w)| w).sum();
            if total > 0.0 {
                for (_, w) in &mut entries {
                    *w /= total;
                }
            } else {
                warn!("topic {id} has zero total weight, left unnormalized");
            }
        }
        weights.push(entries);
    }
    Ok(TopicModel {
        topic_ids,
        weights,
        normalization,
    })
}

/// loading(t) = Σ_token weight_t(token) · v(token). Tokens absent
/// from the vector contribute zero.
pub fn topic_loadings(unigram_vector: &HashMap<String, f64>, tm: &TopicModel) -> Vec<f64> {
    tm.weights
        .iter()
        .map(|entries| {
            entries
                .iter()
                .map(|(token, w)| w * unigram_vector.get(token).copied().unwrap_or(0.0))
                .sum()
        })
        .collect()
}

/// Projects a counties × tokens matrix to counties × topics. Linear,
/// so projecting averaged user vectors equals averaging projected
/// user vectors.
pub fn project_matrix(m: &CountyFeatureMatrix, tm: &TopicModel) -> CountyFeatureMatrix {
    let col_of: HashMap<&str, usize> = m
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (f.as_str(), i))
        .collect();
    let mut w = Array2::<f64>::zeros((m.features.len(), tm.n_topics()));
    for (t, entries) in tm.weights.iter().enumerate() {
        for (token, weight) in entries {
            if let Some(&col) = col_of.get(token.as_str()) {
                w[[col, t]] = *weight;
            }
        }
    }
    CountyFeatureMatrix {
        counties: m.counties.clone(),
        features: tm.feature_names(),
        values: m.values.dot(&w),
        scheme: m.scheme,
        provenance: m.provenance.clone(),
    }
}
