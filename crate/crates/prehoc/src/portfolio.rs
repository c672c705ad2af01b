//! The portfolio knowledge base: past datasets with their metadata,
//! description text, optional embedding vectors, per-fold model ranks, and
//! the derived ground-truth best model, plus the fixed model/family
//! taxonomy all predictors select from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meta::DatasetMetadata;

/// Default held-out fraction for benchmark splits.
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Error)]
pub enum PortfolioError {
    #[error("record has no ranked models")]
    NoRanks,
    #[error("config name {0:?} matches no known model")]
    UnknownConfig(String),
    #[error("schema violation at line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("stored ground_truth for {dataset_id:?} disagrees with fold ranks")]
    GroundTruthMismatch { dataset_id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The 11 candidate model types. Declaration order is the canonical
/// enumeration order used for every documented tie-break.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ModelLabel {
    CatBoost,
    XGBoost,
    LightGBM,
    RandomForest,
    ExtraTrees,
    NeuralNetFastAI,
    NeuralNetTorch,
    FTTransformer,
    TabPFN,
    LinearModel,
    KNeighbors,
}

impl ModelLabel {
    pub const ALL: [ModelLabel; 11] = [
        ModelLabel::CatBoost,
        ModelLabel::XGBoost,
        ModelLabel::LightGBM,
        ModelLabel::RandomForest,
        ModelLabel::ExtraTrees,
        ModelLabel::NeuralNetFastAI,
        ModelLabel::NeuralNetTorch,
        ModelLabel::FTTransformer,
        ModelLabel::TabPFN,
        ModelLabel::LinearModel,
        ModelLabel::KNeighbors,
    ];

    pub fn canonical_name(&self) -> &'static str {
        match self {
            ModelLabel::CatBoost => "CatBoost",
            ModelLabel::XGBoost => "XGBoost",
            ModelLabel::LightGBM => "LightGBM",
            ModelLabel::RandomForest => "RandomForest",
            ModelLabel::ExtraTrees => "ExtraTrees",
            ModelLabel::NeuralNetFastAI => "NeuralNetFastAI",
            ModelLabel::NeuralNetTorch => "NeuralNetTorch",
            ModelLabel::FTTransformer => "FTTransformer",
            ModelLabel::TabPFN => "TabPFN",
            ModelLabel::LinearModel => "LinearModel",
            ModelLabel::KNeighbors => "KNeighbors",
        }
    }

    /// Position in [`ModelLabel::ALL`].
    pub fn index(&self) -> usize {
        ModelLabel::ALL.iter().position(|l| l == self).unwrap()
    }
}

impl fmt::Display for ModelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

/// The six model families.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ModelFamily {
    BoostingMethods,
    TreeEnsembles,
    NeuralNetworks,
    Transformers,
    LinearModels,
    InstanceBasedModels,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 6] = [
        ModelFamily::BoostingMethods,
        ModelFamily::TreeEnsembles,
        ModelFamily::NeuralNetworks,
        ModelFamily::Transformers,
        ModelFamily::LinearModels,
        ModelFamily::InstanceBasedModels,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::BoostingMethods => "Boosting Methods",
            ModelFamily::TreeEnsembles => "Tree Ensembles",
            ModelFamily::NeuralNetworks => "Neural Networks",
            ModelFamily::Transformers => "Transformers",
            ModelFamily::LinearModels => "Linear Models",
            ModelFamily::InstanceBasedModels => "Instance-Based Models",
        }
    }

    /// Members of this family, in enumeration order.
    pub fn members(&self) -> Vec<ModelLabel> {
        ModelLabel::ALL
            .iter()
            .copied()
            .filter(|l| family_of(*l) == *self)
            .collect()
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The total model → family map.
pub fn family_of(label: ModelLabel) -> ModelFamily {
    match label {
        ModelLabel::CatBoost | ModelLabel::XGBoost | ModelLabel::LightGBM => {
            ModelFamily::BoostingMethods
        }
        ModelLabel::RandomForest | ModelLabel::ExtraTrees => ModelFamily::TreeEnsembles,
        ModelLabel::NeuralNetFastAI | ModelLabel::NeuralNetTorch => {
            ModelFamily::NeuralNetworks
        }
        ModelLabel::FTTransformer | ModelLabel::TabPFN => ModelFamily::Transformers,
        ModelLabel::LinearModel => ModelFamily::LinearModels,
        ModelLabel::KNeighbors => ModelFamily::InstanceBasedModels,
    }
}

/// Map a benchmark config name (e.g. "CatBoost_r177") to its model type by
/// longest-prefix match after stripping `_`, `-`, and spaces.
pub fn map_config_to_label(config_name: &str) -> Result<ModelLabel, PortfolioError> {
    let normalize = |s: &str| -> String {
        s.chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .collect::<String>()
            .to_ascii_lowercase()
    };
    let config = normalize(config_name);
    ModelLabel::ALL
        .iter()
        .copied()
        .filter(|label| config.starts_with(&normalize(label.canonical_name())))
        .max_by_key(|label| label.canonical_name().len())
        .ok_or_else(|| PortfolioError::UnknownConfig(config_name.to_string()))
}

/// One evaluation fold: rank per model (1 = best) and its metric error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRanks {
    pub fold: u32,
    pub ranks: BTreeMap<ModelLabel, u32>,
    #[serde(default)]
    pub errors: BTreeMap<ModelLabel, f64>,
}

/// One past dataset in the portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioRecord {
    pub dataset_id: String,
    pub metadata: DatasetMetadata,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub embedding: Option<Vec<f64>>,
    pub folds: Vec<FoldRanks>,
    pub ground_truth: ModelLabel,
}

impl PortfolioRecord {
    /// Build a record, deriving the ground-truth label from the fold ranks.
    pub fn new(
        dataset_id: impl Into<String>,
        metadata: DatasetMetadata,
        description: impl Into<String>,
        embedding: Option<Vec<f64>>,
        folds: Vec<FoldRanks>,
    ) -> Result<PortfolioRecord, PortfolioError> {
        let ground_truth = derive_ground_truth(&folds)?;
        Ok(PortfolioRecord {
            dataset_id: dataset_id.into(),
            metadata,
            description: description.into(),
            embedding,
            folds,
            ground_truth,
        })
    }
}

/// The knowledge base of past datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub records: Vec<PortfolioRecord>,
    pub provenance: String,
}

impl Portfolio {
    pub fn new(records: Vec<PortfolioRecord>, provenance: impl Into<String>) -> Portfolio {
        Portfolio {
            records,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Ground-truth labels in record order.
    pub fn truths(&self) -> Vec<crate::portfolio::ModelLabel> {
        self.records.iter().map(|r| r.ground_truth).collect()
    }
}

/// The model with the lowest mean rank across folds. Ties go to the lower
/// mean metric error, then to enumeration order.
pub fn derive_ground_truth(folds: &[FoldRanks]) -> Result<ModelLabel, PortfolioError> {
    let mut rank_sum: BTreeMap<ModelLabel, (f64, u32)> = BTreeMap::new();
    let mut err_sum: BTreeMap<ModelLabel, (f64, u32)> = BTreeMap::new();
    for fold in folds {
        for (&label, &rank) in &fold.ranks {
            let entry = rank_sum.entry(label).or_insert((0.0, 0));
            entry.0 += rank as f64;
            entry.1 += 1;
        }
        for (&label, &error) in &fold.errors {
            let entry = err_sum.entry(label).or_insert((0.0, 0));
            entry.0 += error;
            entry.1 += 1;
        }
    }
    if rank_sum.is_empty() {
        return Err(PortfolioError::NoRanks);
    }

    let mean_error = |label: ModelLabel| -> f64 {
        match err_sum.get(&label) {
            Some((sum, n)) if *n > 0 => sum / *n as f64,
            _ => f64::INFINITY,
        }
    };

    let mut best: Option<(ModelLabel, f64, f64)> = None;
    // Enumeration order makes "keep the incumbent on ties" the documented
    // tie-break.
    for label in ModelLabel::ALL {
        let Some((sum, n)) = rank_sum.get(&label) else {
            continue;
        };
        let mean_rank = sum / *n as f64;
        let err = mean_error(label);
        let better = match &best {
            None => true,
            Some((_, best_rank, best_err)) => {
                mean_rank < *best_rank || (mean_rank == *best_rank && err < *best_err)
            }
        };
        if better {
            best = Some((label, mean_rank, err));
        }
    }
    Ok(best.expect("non-empty rank map").0)
}

/// Check that one fold's ranks are a permutation of 1..=k.
fn validate_fold(fold: &FoldRanks) -> Result<(), String> {
    let k = fold.ranks.len() as u32;
    let seen: BTreeSet<u32> = fold.ranks.values().copied().collect();
    let expected: BTreeSet<u32> = (1..=k).collect();
    if seen != expected {
        return Err(format!(
            "fold {} ranks are not a permutation of 1..={k}",
            fold.fold
        ));
    }
    Ok(())
}

/// Stratified train/test split by ground-truth label.
///
/// Per label, `round(test_fraction × count)` records go to test, except
/// that single-record labels stay in train. Selection within a label is a
/// seeded uniform draw over that label's records sorted by dataset id, so
/// the split does not depend on record order in the input portfolio.
pub fn stratified_split(
    portfolio: &Portfolio,
    test_fraction: f64,
    seed: u64,
) -> (Portfolio, Portfolio) {
    let mut by_label: BTreeMap<ModelLabel, Vec<&PortfolioRecord>> = BTreeMap::new();
    for record in &portfolio.records {
        by_label.entry(record.ground_truth).or_default().push(record);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_ids: BTreeSet<String> = BTreeSet::new();
    for (_, mut group) in by_label {
        group.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
        let n_test = if group.len() == 1 {
            0
        } else {
            ((test_fraction * group.len() as f64).round() as usize).min(group.len())
        };
        group.shuffle(&mut rng);
        for record in group.into_iter().take(n_test) {
            test_ids.insert(record.dataset_id.clone());
        }
    }

    let mut train: Vec<PortfolioRecord> = Vec::new();
    let mut test: Vec<PortfolioRecord> = Vec::new();
    let mut sorted: Vec<&PortfolioRecord> = portfolio.records.iter().collect();
    sorted.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
    for record in sorted {
        if test_ids.contains(&record.dataset_id) {
            test.push(record.clone());
        } else {
            train.push(record.clone());
        }
    }
    (
        Portfolio::new(train, format!("{} [train]", portfolio.provenance)),
        Portfolio::new(test, format!("{} [test]", portfolio.provenance)),
    )
}

/// Load a portfolio from a JSONL file, one record per line. Fold ranks are
/// validated and the stored ground truth is checked against a fresh
/// derivation.
pub fn load_portfolio(path: &Path) -> Result<Portfolio, PortfolioError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PortfolioRecord =
            serde_json::from_str(&line).map_err(|e| PortfolioError::SchemaViolation {
                line: line_no,
                message: e.to_string(),
            })?;
        for fold in &record.folds {
            validate_fold(fold).map_err(|message| PortfolioError::SchemaViolation {
                line: line_no,
                message,
            })?;
        }
        let derived =
            derive_ground_truth(&record.folds).map_err(|e| PortfolioError::SchemaViolation {
                line: line_no,
                message: e.to_string(),
            })?;
        if derived != record.ground_truth {
            return Err(PortfolioError::GroundTruthMismatch {
                dataset_id: record.dataset_id,
            });
        }
        if !seen_ids.insert(record.dataset_id.clone()) {
            return Err(PortfolioError::SchemaViolation {
                line: line_no,
                message: format!("duplicate dataset_id {:?}", record.dataset_id),
            });
        }
        records.push(record);
    }
    Ok(Portfolio::new(records, path.display().to_string()))
}

/// Write a portfolio as JSONL, one record per line.
pub fn save_portfolio(portfolio: &Portfolio, path: &Path) -> Result<(), PortfolioError> {
    let mut file = std::fs::File::create(path)?;
    for record in &portfolio.records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(file, "{line}")?;
    }
    Ok(())
}
