//! The 11-variable statistical fingerprint of a dataset, plus the z-score
//! scaler used to make fingerprint vectors comparable under Euclidean
//! distance.
//!
//! Per-feature statistics ignore missing cells and use biased (population)
//! central moments. Skewness and kurtosis are clamped so that a single
//! pathological feature cannot blow up downstream distances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ColumnKind, TabularDataset, Task};

/// Clamp magnitude for skewness and kurtosis.
pub const STAT_CLAMP: f64 = 10_000.0;
/// Excess kurtosis of any distribution is at least −2.
pub const KURTOSIS_FLOOR: f64 = -2.0;
/// Histogram bins used to define target entropy for regression targets.
pub const REGRESSION_ENTROPY_BINS: usize = 10;

/// Field names in the canonical export order (CSV columns, vector
/// dimensions, and prompt rendering all use this order).
pub const METADATA_FIELDS: [&str; 11] = [
    "n_samples",
    "n_features",
    "n_numerical",
    "n_categorical",
    "class_imbalance",
    "n_outliers",
    "avg_skewness",
    "avg_kurtosis",
    "avg_variance",
    "n_missing",
    "target_entropy",
];

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("dataset has no rows or no feature columns")]
    EmptyDataset,
    #[error("entropy requires at least one count")]
    EmptyCounts,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// The 11 statistical variables describing a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_numerical: usize,
    pub n_categorical: usize,
    /// Majority-class fraction of the target; 0 for regression targets.
    pub class_imbalance: f64,
    /// Tukey-fence outliers summed over numerical feature columns.
    pub n_outliers: usize,
    pub avg_skewness: f64,
    /// Average excess kurtosis, bounded below by −2.
    pub avg_kurtosis: f64,
    pub avg_variance: f64,
    /// Missing cells across all columns, target included.
    pub n_missing: usize,
    /// Shannon entropy of the target in bits. Regression targets use a
    /// 10-equal-width-bin histogram.
    pub target_entropy: f64,
}

impl DatasetMetadata {
    /// The fingerprint as a fixed-order vector (see [`METADATA_FIELDS`]).
    pub fn to_vector(&self) -> Vec<f64> {
        vec![
            self.n_samples as f64,
            self.n_features as f64,
            self.n_numerical as f64,
            self.n_categorical as f64,
            self.class_imbalance,
            self.n_outliers as f64,
            self.avg_skewness,
            self.avg_kurtosis,
            self.avg_variance,
            self.n_missing as f64,
            self.target_entropy,
        ]
    }

    pub fn csv_header() -> String {
        METADATA_FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n_samples,
            self.n_features,
            self.n_numerical,
            self.n_categorical,
            self.class_imbalance,
            self.n_outliers,
            self.avg_skewness,
            self.avg_kurtosis,
            self.avg_variance,
            self.n_missing,
            self.target_entropy,
        )
    }
}

fn clamp_stat(raw: f64, lo: f64, hi: f64) -> f64 {
    if raw.is_nan() {
        0.0
    } else {
        raw.clamp(lo, hi)
    }
}

/// mean, m2, m3, m4 (biased central moments); zeros when fewer than 2 values.
fn central_moments(values: &[f64]) -> (f64, f64, f64, f64) {
    if values.len() < 2 {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

/// Fisher–Pearson skewness g1 = m3 / m2^(3/2), clamped to ±[`STAT_CLAMP`].
/// Returns 0 for degenerate inputs (fewer than 2 values or zero variance).
pub fn skewness(values: &[f64]) -> f64 {
    let (_, m2, m3, _) = central_moments(values);
    if m2 == 0.0 {
        return 0.0;
    }
    clamp_stat(m3 / m2.powf(1.5), -STAT_CLAMP, STAT_CLAMP)
}

/// Excess kurtosis g2 = m4 / m2² − 3, clamped to [−2, [`STAT_CLAMP`]].
/// Returns 0 for degenerate inputs.
pub fn kurtosis(values: &[f64]) -> f64 {
    let (_, m2, _, m4) = central_moments(values);
    if m2 == 0.0 {
        return 0.0;
    }
    clamp_stat(m4 / (m2 * m2) - 3.0, KURTOSIS_FLOOR, STAT_CLAMP)
}

/// Biased (population) variance; 0 when fewer than 2 values.
pub fn variance(values: &[f64]) -> f64 {
    central_moments(values).1
}

/// Quantile by linear interpolation over the sorted sample, q in [0, 1].
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lower = pos.floor() as usize;
    let frac = pos - lower as f64;
    if lower + 1 < sorted.len() {
        sorted[lower] + frac * (sorted[lower + 1] - sorted[lower])
    } else {
        sorted[lower]
    }
}

/// Count values outside the Tukey fences [Q1 − 1.5·IQR, Q3 + 1.5·IQR].
/// Fewer than 4 values never count as outliers.
pub fn count_outliers_iqr(values: &[f64]) -> usize {
    if values.len() < 4 {
        return 0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    values.iter().filter(|&&v| v < lo || v > hi).count()
}

/// Shannon entropy in bits of a count distribution. Zero counts contribute
/// nothing; the count list itself must be non-empty.
pub fn shannon_entropy(counts: &[usize]) -> Result<f64, MetaError> {
    if counts.is_empty() {
        return Err(MetaError::EmptyCounts);
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(MetaError::EmptyCounts);
    }
    let total = total as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum())
}

/// Majority-class fraction max(counts)/Σcounts. An empty signal (regression
/// targets) yields 0.
pub fn class_imbalance(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    match counts.iter().max() {
        Some(&max) if total > 0 => max as f64 / total as f64,
        _ => 0.0,
    }
}

/// Compute the full 11-variable fingerprint of a loaded dataset.
pub fn compute_metadata(dataset: &TabularDataset) -> Result<DatasetMetadata, MetaError> {
    if dataset.n_rows == 0 || dataset.columns.len() < 2 {
        return Err(MetaError::EmptyDataset);
    }

    let n_features = dataset.columns.len() - 1;
    let numerical_features: Vec<usize> = dataset
        .feature_columns()
        .filter(|(_, c)| c.kind == ColumnKind::Numerical)
        .map(|(i, _)| i)
        .collect();
    let n_numerical = numerical_features.len();
    let n_categorical = n_features - n_numerical;

    let (mut skew_sum, mut kurt_sum, mut var_sum, mut outliers) = (0.0, 0.0, 0.0, 0usize);
    for &col in &numerical_features {
        let values = dataset.numeric_values(col);
        skew_sum += skewness(&values);
        kurt_sum += kurtosis(&values);
        var_sum += variance(&values);
        outliers += count_outliers_iqr(&values);
    }
    let (avg_skewness, avg_kurtosis, avg_variance) = if n_numerical > 0 {
        let n = n_numerical as f64;
        (
            clamp_stat(skew_sum / n, -STAT_CLAMP, STAT_CLAMP),
            clamp_stat(kurt_sum / n, KURTOSIS_FLOOR, STAT_CLAMP),
            var_sum / n,
        )
    } else {
        (0.0, 0.0, 0.0)
    };

    let (imbalance, entropy) = match dataset.task {
        Task::BinaryClassification | Task::MulticlassClassification => {
            let counts = dataset.target_class_counts();
            (class_imbalance(&counts), shannon_entropy(&counts)?)
        }
        Task::Regression => {
            let counts = regression_histogram(&dataset.numeric_target_values());
            (0.0, shannon_entropy(&counts)?)
        }
    };

    Ok(DatasetMetadata {
        n_samples: dataset.n_rows,
        n_features,
        n_numerical,
        n_categorical,
        class_imbalance: imbalance,
        n_outliers: outliers,
        avg_skewness,
        avg_kurtosis,
        avg_variance,
        n_missing: dataset.total_missing(),
        target_entropy: entropy,
    })
}

/// Equal-width histogram of a regression target for entropy purposes.
fn regression_histogram(values: &[f64]) -> Vec<usize> {
    if values.is_empty() {
        return vec![1];
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return vec![values.len()];
    }
    let width = (max - min) / REGRESSION_ENTROPY_BINS as f64;
    let mut counts = vec![0usize; REGRESSION_ENTROPY_BINS];
    for &v in values {
        let bin = (((v - min) / width) as usize).min(REGRESSION_ENTROPY_BINS - 1);
        counts[bin] += 1;
    }
    counts
}

/// Per-dimension z-score parameters fitted on a set of metadata vectors.
///
/// Uses population standard deviations, so standardizing the fitting set
/// gives each dimension mean 0 and (where the deviation is nonzero)
/// variance 1. Constant dimensions standardize to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    means: Vec<f64>,
    std_devs: Vec<f64>,
}

impl Scaler {
    /// Fit on one or more rows of equal dimension.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Scaler, MetaError> {
        let first = rows.first().ok_or(MetaError::EmptyDataset)?;
        let dim = first.len();
        for row in rows {
            if row.len() != dim {
                return Err(MetaError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        let n = rows.len() as f64;
        let means: Vec<f64> = (0..dim)
            .map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n)
            .collect();
        let std_devs: Vec<f64> = (0..dim)
            .map(|d| {
                let var = rows.iter().map(|r| (r[d] - means[d]).powi(2)).sum::<f64>() / n;
                var.sqrt()
            })
            .collect();
        Ok(Scaler { means, std_devs })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// (x − mean)/std per dimension; dimensions with zero deviation map to 0.
    pub fn standardize(&self, row: &[f64]) -> Result<Vec<f64>, MetaError> {
        if row.len() != self.dim() {
            return Err(MetaError::DimensionMismatch {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(x, (mean, std))| if *std > 0.0 { (x - mean) / std } else { 0.0 })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::load_dataset;
    use std::io::Write;

    const EPS: f64 = 1e-9;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() <= EPS, "{a} != {b}");
    }

    // Independent oracle helpers: direct textbook formulas, separate from
    // the implementation under test.
    fn oracle_moment(values: &[f64], order: i32) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        values.iter().map(|v| (v - mean).powi(order)).sum::<f64>() / n
    }

    #[test]
    fn skewness_of_symmetric_sample_is_zero() {
        assert_close(skewness(&[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn skewness_of_constant_sample_is_zero() {
        assert_close(skewness(&[5.0, 5.0, 5.0, 5.0]), 0.0);
        assert_close(skewness(&[]), 0.0);
        assert_close(skewness(&[7.0]), 0.0);
    }

    #[test]
    fn skewness_matches_direct_moment_oracle() {
        let values = [1.0, 1.0, 1.0, 10.0];
        let expected = oracle_moment(&values, 3) / oracle_moment(&values, 2).powf(1.5);
        assert_close(skewness(&values), expected);
        // Two-point distribution with p = 1/4 at the top: g1 = 2/sqrt(3).
        assert!((skewness(&values) - 1.1547005383792515).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_of_two_point_sample_is_minus_two() {
        assert_close(kurtosis(&[0.0, 1.0]), -2.0);
    }

    #[test]
    fn kurtosis_of_constant_sample_is_zero() {
        assert_close(kurtosis(&[3.0, 3.0, 3.0]), 0.0);
    }

    #[test]
    fn kurtosis_matches_direct_moment_oracle() {
        let values = [1.0, 1.0, 1.0, 1.0, 100.0];
        let m2 = oracle_moment(&values, 2);
        let expected = oracle_moment(&values, 4) / (m2 * m2) - 3.0;
        assert_close(kurtosis(&values), expected);
        assert!((kurtosis(&values) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn clamp_caps_raw_statistics_at_exactly_ten_thousand() {
        assert_eq!(clamp_stat(1.0e9, -STAT_CLAMP, STAT_CLAMP), 10_000.0);
        assert_eq!(clamp_stat(-1.0e9, -STAT_CLAMP, STAT_CLAMP), -10_000.0);
        assert_eq!(clamp_stat(f64::INFINITY, KURTOSIS_FLOOR, STAT_CLAMP), 10_000.0);
        assert_eq!(clamp_stat(-7.0, KURTOSIS_FLOOR, STAT_CLAMP), -2.0);
        assert_eq!(clamp_stat(f64::NAN, -STAT_CLAMP, STAT_CLAMP), 0.0);
    }

    #[test]
    fn kurtosis_clamp_reached_end_to_end() {
        // Two-point sample with p = 1/n: raw g2 ≈ n − 6 blows past the cap.
        let mut values = vec![0.0; 20_000];
        values.push(1.0e6);
        assert_eq!(kurtosis(&values), 10_000.0);
    }

    #[test]
    fn outlier_free_sample() {
        assert_eq!(count_outliers_iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]), 0);
    }

    #[test]
    fn outlier_beyond_tukey_fence() {
        // Oracle: sorted = [1,2,3,4,100]; Q1 = 2, Q3 = 4 by linear
        // interpolation; fences (−1, 7); only 100 escapes.
        assert_eq!(count_outliers_iqr(&[1.0, 2.0, 3.0, 4.0, 100.0]), 1);
    }

    #[test]
    fn constant_sample_has_no_outliers() {
        assert_eq!(count_outliers_iqr(&[2.0; 8]), 0);
        assert_eq!(count_outliers_iqr(&[1.0, 2.0, 3.0]), 0);
    }

    #[test]
    fn entropy_examples() {
        assert_close(shannon_entropy(&[50, 50]).unwrap(), 1.0);
        assert_close(shannon_entropy(&[100]).unwrap(), 0.0);
        assert!(
            (shannon_entropy(&[70, 20, 10]).unwrap() - 1.1567796494470395).abs() < 1e-12
        );
        assert!(matches!(
            shannon_entropy(&[]),
            Err(MetaError::EmptyCounts)
        ));
    }

    #[test]
    fn imbalance_examples() {
        assert_close(class_imbalance(&[50, 50]), 0.5);
        assert_close(class_imbalance(&[90, 10]), 0.9);
        assert_close(class_imbalance(&[]), 0.0);
    }

    #[test]
    fn scaler_midpoint_standardizes_to_zero() {
        let scaler = Scaler::fit(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(scaler.standardize(&[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn scaler_normalizes_fitting_set() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![8.0, 5.0]];
        let scaler = Scaler::fit(&rows).unwrap();
        let standardized: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| scaler.standardize(r).unwrap())
            .collect();
        for d in 0..2 {
            let mean: f64 =
                standardized.iter().map(|r| r[d]).sum::<f64>() / rows.len() as f64;
            assert!(mean.abs() < 1e-9);
        }
        let var: f64 = standardized.iter().map(|r| r[0] * r[0]).sum::<f64>() / 3.0;
        assert!((var - 1.0).abs() < 1e-6);
        // Constant dimension maps to 0 for any input.
        assert_eq!(scaler.standardize(&[4.0, 123.0]).unwrap()[1], 0.0);
    }

    #[test]
    fn scaler_rejects_dimension_mismatch() {
        let scaler = Scaler::fit(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            scaler.standardize(&[1.0]),
            Err(MetaError::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            Scaler::fit(&[vec![0.0], vec![1.0, 2.0]]),
            Err(MetaError::DimensionMismatch { .. })
        ));
    }

    fn load_fixture(content: &str) -> crate::ingest::TabularDataset {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file.flush().unwrap();
        load_dataset(file.path(), None).unwrap()
    }

    #[test]
    fn direct_counts_fixture() {
        let ds = load_fixture("a,b,y\n1,x,0\n2,y,0\n3,x,1\n4,?,1\n");
        let md = compute_metadata(&ds).unwrap();
        assert_eq!(md.n_samples, 4);
        assert_eq!(md.n_features, 2);
        assert_eq!(md.n_numerical, 1);
        assert_eq!(md.n_categorical, 1);
        assert_eq!(md.n_missing, 1);
    }

    #[test]
    fn all_categorical_features_use_vacuous_averages() {
        let ds = load_fixture("a,b,y\nred,x,0\nblue,y,1\nred,x,0\nblue,y,1\n");
        let md = compute_metadata(&ds).unwrap();
        assert_eq!(md.n_numerical, 0);
        assert_eq!(md.avg_skewness, 0.0);
        assert_eq!(md.avg_kurtosis, 0.0);
        assert_eq!(md.avg_variance, 0.0);
        assert_eq!(md.n_outliers, 0);
    }

    #[test]
    fn six_row_fixture_matches_brute_force_oracle() {
        let ds = load_fixture("a,b,y\n1,x,0\n2,y,0\n3,x,0\n4,y,1\n5,x,1\n100,,1\n");
        let md = compute_metadata(&ds).unwrap();

        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 100.0];
        let m2 = oracle_moment(&a, 2);
        assert_eq!(md.n_samples, 6);
        assert_eq!(md.n_features, 2);
        assert_eq!(md.n_numerical, 1);
        assert_eq!(md.n_categorical, 1);
        assert_eq!(md.n_missing, 1);
        assert_close(md.class_imbalance, 0.5);
        assert_close(md.target_entropy, 1.0);
        assert_eq!(md.n_outliers, 1);
        assert_close(md.avg_variance, m2);
        assert_close(md.avg_skewness, oracle_moment(&a, 3) / m2.powf(1.5));
        assert_close(md.avg_kurtosis, oracle_moment(&a, 4) / (m2 * m2) - 3.0);
        // Frozen values from an independent script over the same fixture.
        assert!((md.avg_variance - 1308.4722222222222).abs() < 1e-9);
        assert!((md.avg_skewness - 1.7837298139192155).abs() < 1e-12);
        assert!((md.avg_kurtosis - 1.190837176139266).abs() < 1e-12);
    }

    #[test]
    fn regression_target_entropy_uses_binned_histogram() {
        let mut csv = String::from("a,y\n");
        for i in 0..40 {
            csv.push_str(&format!("{i},{}\n", i as f64 * 0.77 + 0.1));
        }
        let ds = load_fixture(&csv);
        assert_eq!(ds.task, Task::Regression);
        let md = compute_metadata(&ds).unwrap();
        assert_eq!(md.class_imbalance, 0.0);
        // 40 evenly spread values over 10 equal bins: 4 per bin.
        assert_close(md.target_entropy, shannon_entropy(&[4; 10]).unwrap());
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = load_fixture("a,b,y\n1,x,0\n2,y,1\n");
        let mut no_features = ds.clone();
        no_features.columns = vec![ds.columns[2].clone()];
        no_features.target_index = 0;
        assert!(matches!(
            compute_metadata(&no_features),
            Err(MetaError::EmptyDataset)
        ));
    }

    #[test]
    fn metadata_vector_order_matches_field_names() {
        let ds = load_fixture("a,b,y\n1,x,0\n2,y,0\n3,x,1\n4,?,1\n");
        let md = compute_metadata(&ds).unwrap();
        let v = md.to_vector();
        assert_eq!(v.len(), METADATA_FIELDS.len());
        assert_eq!(v[0], md.n_samples as f64);
        assert_eq!(v[4], md.class_imbalance);
        assert_eq!(v[9], md.n_missing as f64);
        assert_eq!(v[10], md.target_entropy);
        let header = DatasetMetadata::csv_header();
        assert!(header.starts_with("n_samples,"));
        assert!(header.ends_with(",target_entropy"));
        assert_eq!(md.csv_row().split(',').count(), 11);
    }
}
