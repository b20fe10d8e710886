use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::features::{encode_features, feature_dim};
use crate::gamble::{Problem, Schema};
use crate::io::TargetRecord;
use crate::net::{NetError, Samples};
use crate::seed::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Encoded (problem, block) rows with their observed choice rates, stored
/// column-wise so the feature matrix can be handed to the network directly.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    split: Option<Split>,
    ids: Vec<String>,
    features: Vec<f64>,
    blocks: Vec<u32>,
    feedback: Vec<bool>,
    n: Vec<u32>,
    a_rate: Vec<f64>,
}

impl Dataset {
    pub fn empty(schema: Schema) -> Self {
        Dataset {
            schema,
            split: None,
            ids: Vec::new(),
            features: Vec::new(),
            blocks: Vec::new(),
            feedback: Vec::new(),
            n: Vec::new(),
            a_rate: Vec::new(),
        }
    }

    /// Joins target records with their problems and encodes features.
    pub fn from_targets(
        problems: &[Problem],
        targets: &[TargetRecord],
        schema: Schema,
    ) -> Result<Self, PipelineError> {
        let by_id: HashMap<&str, &Problem> = problems.iter().map(|p| (p.id(), p)).collect();
        let mut ds = Dataset::empty(schema);
        for t in targets {
            let p = by_id
                .get(t.problem_id.as_str())
                .ok_or_else(|| PipelineError::UnknownProblem(t.problem_id.clone()))?;
            if p.schema() != schema {
                return Err(PipelineError::Invalid(format!(
                    "problem {} has schema {:?}, expected {schema:?}",
                    t.problem_id,
                    p.schema()
                )));
            }
            if !(0.0..=1.0).contains(&t.a_rate) {
                return Err(PipelineError::Invalid(format!(
                    "a_rate {} for problem {} is outside [0, 1]",
                    t.a_rate, t.problem_id
                )));
            }
            ds.push(
                &t.problem_id,
                &encode_features(p, t.block, t.feedback),
                t.block,
                t.feedback,
                t.n,
                t.a_rate,
            );
        }
        Ok(ds)
    }

    fn push(&mut self, id: &str, x: &[f64], block: u32, feedback: bool, n: u32, rate: f64) {
        self.ids.push(id.to_string());
        self.features.extend_from_slice(x);
        self.blocks.push(block);
        self.feedback.push(feedback);
        self.n.push(n);
        self.a_rate.push(rate);
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn dim(&self) -> usize {
        feature_dim(self.schema)
    }

    pub fn split(&self) -> Option<Split> {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn targets(&self) -> &[f64] {
        &self.a_rate
    }

    pub fn samples(&self) -> Result<Samples<'_>, NetError> {
        Samples::new(&self.features, &self.a_rate, self.dim())
    }

    /// Distinct problem ids in first-appearance order.
    pub fn problem_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.ids
            .iter()
            .map(String::as_str)
            .filter(|id| seen.insert(*id))
            .collect()
    }

    /// Row indices grouped by problem, in first-appearance order.
    pub fn problem_groups(&self) -> Vec<Vec<usize>> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, id) in self.ids.iter().enumerate() {
            let g = *index.entry(id.as_str()).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
        }
        groups
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let mut ds = Dataset::empty(self.schema);
        ds.split = self.split;
        for &i in rows {
            ds.push(
                &self.ids[i],
                self.row(i),
                self.blocks[i],
                self.feedback[i],
                self.n[i],
                self.a_rate[i],
            );
        }
        ds
    }

    /// Rows whose problem id is in `ids`, in original order.
    pub fn select_problems(&self, ids: &HashSet<&str>) -> Dataset {
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| ids.contains(self.ids[i].as_str()))
            .collect();
        self.select_rows(&rows)
    }

    /// Partitions problems (never rows) by a seeded shuffle. Each fraction
    /// gets `round(f * n_problems)` problems; the last part takes the rest.
    pub fn split_by_problem(&self, fractions: &[f64], seed: u64) -> Result<Vec<Dataset>, PipelineError> {
        if fractions.is_empty() || fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(PipelineError::Invalid("split fractions must lie in [0, 1]".into()));
        }
        if fractions.iter().sum::<f64>() > 1.0 + 1e-9 {
            return Err(PipelineError::Invalid("split fractions sum to more than 1".into()));
        }
        let mut ids = self.problem_ids();
        ids.shuffle(&mut rng_from_seed(seed));
        let total = ids.len();
        let mut parts = Vec::with_capacity(fractions.len());
        let mut start = 0;
        for (k, f) in fractions.iter().enumerate() {
            let end = if k + 1 == fractions.len() && (fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9 {
                total
            } else {
                (start + (f * total as f64).round() as usize).min(total)
            };
            let set: HashSet<&str> = ids[start..end].iter().copied().collect();
            parts.push(self.select_problems(&set));
            start = end;
        }
        Ok(parts)
    }

    /// A seeded random subset holding `fraction` of the problems (at least one).
    pub fn sample_problems(&self, fraction: f64, seed: u64) -> Result<Dataset, PipelineError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(PipelineError::Invalid(format!("fraction {fraction} is not in (0, 1]")));
        }
        let mut ids = self.problem_ids();
        ids.shuffle(&mut rng_from_seed(seed));
        let k = ((fraction * ids.len() as f64).round() as usize).clamp(1, ids.len().max(1));
        let set: HashSet<&str> = ids[..k.min(ids.len())].iter().copied().collect();
        Ok(self.select_problems(&set))
    }

    pub fn to_targets(&self) -> Vec<TargetRecord> {
        (0..self.len())
            .map(|i| TargetRecord {
                problem_id: self.ids[i].clone(),
                block: self.blocks[i],
                feedback: self.feedback[i],
                n: self.n[i],
                a_rate: self.a_rate[i],
            })
            .collect()
    }

    /// Same rows with replacement target values.
    pub fn with_targets(&self, a_rate: Vec<f64>) -> Result<Dataset, PipelineError> {
        if a_rate.len() != self.len() {
            return Err(PipelineError::LengthMismatch {
                predictions: a_rate.len(),
                targets: self.len(),
            });
        }
        Ok(Dataset {
            a_rate,
            ..self.clone()
        })
    }
}
