//! Pairwise disaggregation scan.
//!
//! For an ordered pair `(x_j, x_c)`:
//!
//! 1. partition the rows on `x_c` (see [`crate::partition`]);
//! 2. fit `y ~ x_j` on all rows and inside every bin;
//! 3. test the aggregate fit against the global-mean model (χ², 1 df) and
//!    the per-bin fits against the bin-mean model (χ², one df per bin);
//! 4. flag a reversal when a strict majority of bins carry a significant
//!    slope whose sign opposes a significant aggregate slope;
//! 5. score the per-bin model with McFadden's pseudo-R² against the global
//!    mean.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, PairView};
use crate::error::{Error, Result};
use crate::glm::{deviance, fit_logistic, null_loglik, wald_p, FitConfig, FitStatus, LogisticFit};
use crate::partition::{build_partition, Bin, Partition, PartitionConfig};
use crate::special::chi2_sf;

/// Denominator of the reversal majority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReversalDenominator {
    #[default]
    AllSubgroups,
    SignificantSubgroups,
}

/// How an individual subgroup slope is judged significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupTest {
    #[default]
    Wald,
    /// Likelihood ratio against the bin-mean model, 1 df.
    Deviance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub alpha_level: f64,
    pub partition: PartitionConfig,
    pub fit: FitConfig,
    pub top_k: Option<usize>,
    pub require_reversal: bool,
    /// Benjamini–Hochberg adjustment of the disaggregation p-values.
    pub bh_correction: bool,
    pub reversal_denominator: ReversalDenominator,
    pub subgroup_test: SubgroupTest,
    /// Worker threads for the pair loop; `None` uses rayon's global pool.
    /// Has no effect on the output.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            alpha_level: 0.05,
            partition: PartitionConfig::default(),
            fit: FitConfig::default(),
            top_k: None,
            require_reversal: false,
            bh_correction: false,
            reversal_denominator: ReversalDenominator::default(),
            subgroup_test: SubgroupTest::default(),
            threads: None,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(Error::Domain(format!("alpha level must be in (0, 1), got {}", self.alpha_level)));
        }
        if self.threads == Some(0) {
            return Err(Error::Domain("thread count must be positive".into()));
        }
        self.partition.validate()?;
        self.fit.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendSign {
    Pos,
    Neg,
    Zero,
}

impl TrendSign {
    pub fn of(beta: f64) -> Self {
        if beta > 0.0 {
            Self::Pos
        } else if beta < 0.0 {
            Self::Neg
        } else {
            Self::Zero
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Pos => "+",
            Self::Neg => "-",
            Self::Zero => "0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupTrend {
    pub bin: Bin,
    pub fit: LogisticFit,
    /// Slope p-value (Wald by default); 1 for degenerate fits.
    pub beta_p: f64,
    pub beta_ci95: (f64, f64),
    pub significant: bool,
    pub sign: TrendSign,
    /// Log-likelihood of the bin-mean model on this bin.
    pub null_loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisaggregationResult {
    pub x_j: String,
    pub x_c: String,
    pub n: usize,
    pub aggregate_fit: LogisticFit,
    pub aggregate_sign: TrendSign,
    pub aggregate_p: f64,
    pub partition: Partition,
    pub subgroup_trends: Vec<SubgroupTrend>,
    pub disagg_deviance: f64,
    pub disagg_p: f64,
    /// Benjamini–Hochberg adjusted `disagg_p`, when requested.
    pub disagg_p_adjusted: Option<f64>,
    pub simpson_flag: bool,
    pub pseudo_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub x_j: String,
    pub x_c: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub dataset_fingerprint: String,
    pub n_rows: usize,
    pub outcome: String,
    pub config: ScanConfig,
    pub pairs_examined: usize,
    pub pairs_skipped: usize,
    pub pairs_tested: usize,
    pub pairs_significant: usize,
    /// Sorted by pseudo-R² descending, then `(x_j, x_c)`; at most `top_k`.
    pub results: Vec<DisaggregationResult>,
    pub skipped: Vec<SkippedPair>,
}

/// Fit on all rows and test against the global-mean model with 1 df.
pub fn aggregate_trend(view: &PairView, config: &ScanConfig) -> Result<(LogisticFit, f64)> {
    if view.n() < 2 {
        return Err(Error::EmptyInput);
    }
    if view.outcome_is_constant() {
        return Err(Error::ConstantOutcome);
    }
    let fit = fit_logistic(&view.x_j, &view.y, &config.fit)?;
    let null = null_loglik(&view.y, config.fit.prob_clamp)?;
    let p = chi2_sf(deviance(fit.loglik, null), 1)?;
    Ok((fit, p))
}

fn subgroup_trend(bin: &Bin, view: &PairView, config: &ScanConfig) -> Result<SubgroupTrend> {
    let x: Vec<f64> = bin.members.iter().map(|&i| view.x_j[i]).collect();
    let y: Vec<f64> = bin.members.iter().map(|&i| view.y[i]).collect();
    let fit = fit_logistic(&x, &y, &config.fit)?;
    let null = null_loglik(&y, config.fit.prob_clamp)?;
    let beta_p = match fit.status {
        FitStatus::DegenerateConstantY => 1.0,
        _ => match config.subgroup_test {
            SubgroupTest::Wald => wald_p(&fit)?,
            SubgroupTest::Deviance => chi2_sf(deviance(fit.loglik, null), 1)?,
        },
    };
    Ok(SubgroupTrend {
        bin: bin.clone(),
        beta_ci95: fit.beta_ci95(),
        significant: beta_p < config.alpha_level && fit.status == FitStatus::Converged,
        sign: TrendSign::of(fit.beta),
        beta_p,
        null_loglik: null,
        fit,
    })
}

/// Per-bin fits, the summed deviance against the bin-mean model, and its
/// χ² p-value with one degree of freedom per bin.
pub fn disaggregated_trends(
    view: &PairView,
    partition: &Partition,
    config: &ScanConfig,
) -> Result<(Vec<SubgroupTrend>, f64, f64)> {
    let trends = partition
        .bins
        .iter()
        .map(|bin| subgroup_trend(bin, view, config))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = trends
        .iter()
        .map(|t| match t.fit.status {
            FitStatus::DegenerateConstantY => 0.0,
            _ => deviance(t.fit.loglik, t.null_loglik),
        })
        .sum();
    let df = u32::try_from(partition.n_bins().max(1)).unwrap_or(u32::MAX);
    let p = chi2_sf(total, df)?;
    Ok((trends, total, p))
}

/// Strict-majority reversal rule, gated on a significant aggregate slope.
pub fn detect_reversal(
    aggregate_fit: &LogisticFit,
    aggregate_p: f64,
    trends: &[SubgroupTrend],
    alpha_level: f64,
    denominator: ReversalDenominator,
) -> bool {
    if !(aggregate_p < alpha_level) {
        return false;
    }
    let aggregate = TrendSign::of(aggregate_fit.beta);
    let opposite = match aggregate {
        TrendSign::Pos => TrendSign::Neg,
        TrendSign::Neg => TrendSign::Pos,
        TrendSign::Zero => return false,
    };
    let reversed = trends
        .iter()
        .filter(|t| t.significant && t.sign == opposite)
        .count();
    let total = match denominator {
        ReversalDenominator::AllSubgroups => trends.len(),
        ReversalDenominator::SignificantSubgroups => trends.iter().filter(|t| t.significant).count(),
    };
    total > 0 && 2 * reversed > total
}

/// McFadden pseudo-R² of the per-bin model against the global mean.
pub fn pseudo_r2(trends: &[SubgroupTrend], view: &PairView, prob_clamp: f64) -> Result<f64> {
    if view.outcome_is_constant() {
        return Err(Error::ConstantOutcome);
    }
    let full: f64 = trends.iter().map(|t| t.fit.loglik).sum();
    let null = null_loglik(&view.y, prob_clamp)?;
    Ok((1.0 - full / null).clamp(0.0, 1.0))
}

/// Evaluate one pair with an already-built partition.
pub fn evaluate_pair(view: &PairView, partition: Partition, config: &ScanConfig) -> Result<DisaggregationResult> {
    let (aggregate_fit, aggregate_p) = aggregate_trend(view, config)?;
    let (subgroup_trends, disagg_deviance, disagg_p) = disaggregated_trends(view, &partition, config)?;
    let simpson_flag = detect_reversal(
        &aggregate_fit,
        aggregate_p,
        &subgroup_trends,
        config.alpha_level,
        config.reversal_denominator,
    );
    let pseudo_r2 = pseudo_r2(&subgroup_trends, view, config.fit.prob_clamp)?;
    Ok(DisaggregationResult {
        x_j: view.x_j_name.clone(),
        x_c: view.x_c_name.clone(),
        n: view.n(),
        aggregate_sign: TrendSign::of(aggregate_fit.beta),
        aggregate_fit,
        aggregate_p,
        partition,
        subgroup_trends,
        disagg_deviance,
        disagg_p,
        disagg_p_adjusted: None,
        simpson_flag,
        pseudo_r2,
    })
}

enum PairOutcome {
    Tested(Box<DisaggregationResult>),
    Skipped(SkippedPair),
}

fn run_pair(dataset: &Dataset, x_j: &str, x_c: &str, config: &ScanConfig) -> Result<PairOutcome> {
    let skip = |reason: &str| {
        Ok(PairOutcome::Skipped(SkippedPair {
            x_j: x_j.to_string(),
            x_c: x_c.to_string(),
            reason: reason.to_string(),
        }))
    };
    let view = dataset.pair_view(x_j, x_c)?;
    if view.n() < 2 {
        return skip("too few rows");
    }
    if view.outcome_is_constant() {
        return skip("constant outcome");
    }
    let mut partition = build_partition(&view.x_c, &view.y, &config.partition)?;
    if partition.n_bins() < 2 {
        return skip("single-bin partition");
    }
    partition.covariate = x_c.to_string();
    evaluate_pair(&view, partition, config).map(|r| PairOutcome::Tested(Box::new(r)))
}

/// Benjamini–Hochberg step-up adjusted p-values, in input order.
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(p[i] * m as f64 / (rank + 1) as f64);
        adjusted[i] = running.min(1.0);
    }
    adjusted
}

fn report_order(a: &DisaggregationResult, b: &DisaggregationResult) -> Ordering {
    b.pseudo_r2
        .total_cmp(&a.pseudo_r2)
        .then_with(|| a.x_j.cmp(&b.x_j))
        .then_with(|| a.x_c.cmp(&b.x_c))
}

/// Examine every ordered covariate pair and rank the significant ones.
pub fn scan(dataset: &Dataset, config: &ScanConfig) -> Result<ScanReport> {
    config.validate()?;
    let names = dataset.covariate_names();
    if names.len() < 2 {
        return Err(Error::TooFewCovariates(names.len()));
    }
    let pairs: Vec<(&str, &str)> = names
        .iter()
        .flat_map(|&j| names.iter().filter(move |&&c| c != j).map(move |&c| (j, c)))
        .collect();

    let evaluate = || -> Result<Vec<PairOutcome>> {
        pairs
            .par_iter()
            .map(|&(j, c)| run_pair(dataset, j, c, config))
            .collect()
    };
    let outcomes = match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?
            .install(evaluate)?,
        None => evaluate()?,
    };

    let mut tested = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            PairOutcome::Tested(r) => tested.push(*r),
            PairOutcome::Skipped(s) => skipped.push(s),
        }
    }
    let pairs_tested = tested.len();

    if config.bh_correction {
        let raw: Vec<f64> = tested.iter().map(|r| r.disagg_p).collect();
        for (r, adj) in tested.iter_mut().zip(benjamini_hochberg(&raw)) {
            r.disagg_p_adjusted = Some(adj);
        }
    }
    let mut results: Vec<DisaggregationResult> = tested
        .into_iter()
        .filter(|r| {
            let p = r.disagg_p_adjusted.unwrap_or(r.disagg_p);
            p < config.alpha_level && (!config.require_reversal || r.simpson_flag)
        })
        .collect();
    let pairs_significant = results.len();
    results.sort_by(report_order);
    if let Some(k) = config.top_k {
        results.truncate(k);
    }

    Ok(ScanReport {
        schema_version: 1,
        dataset_fingerprint: dataset.fingerprint(),
        n_rows: dataset.n_rows(),
        outcome: dataset.outcome_name().to_string(),
        config: config.clone(),
        pairs_examined: pairs.len(),
        pairs_skipped: skipped.len(),
        pairs_tested,
        pairs_significant,
        results,
        skipped,
    })
}
