//! Greedy recursive binary partitioning of a conditioning covariate.
//!
//! Starting from a single bin, every round evaluates all admissible split
//! points of every bin and applies the one that increases the fraction of
//! outcome variance explained by bin membership the most. Candidate split
//! values are the midpoints between consecutive distinct covariate values,
//! and a split is only admissible if both halves keep `min_bin_size` rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two gains closer than this (relative to the larger) are considered equal
/// and resolved by the smaller split value.
const TIE_RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub max_bins: usize,
    pub min_bin_size: usize,
    pub min_gain: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            max_bins: 20,
            min_bin_size: 100,
            min_gain: 1e-12,
        }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_bins < 1 || self.min_bin_size < 1 || !(self.min_gain >= 0.0) {
            return Err(Error::Domain(format!("invalid partition config {self:?}")));
        }
        Ok(())
    }
}

/// One subgroup. `members` index into the arrays the partition was built
/// from and are kept sorted by covariate value (then index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    /// Lower boundary: the previous split value (exclusive), or the minimum
    /// covariate value for the first bin (inclusive).
    pub lower: f64,
    /// Upper boundary (inclusive): the split value, or the maximum covariate
    /// value for the last bin.
    pub upper: f64,
    pub count: usize,
    pub mean_y: f64,
    #[serde(skip)]
    pub members: Vec<usize>,
}

impl Bin {
    /// Bin over `members` (indices into `y`) with the given boundaries.
    pub fn from_members(members: Vec<usize>, lower: f64, upper: f64, y: &[f64]) -> Self {
        let sum: f64 = members.iter().map(|&i| y[i]).sum();
        let count = members.len();
        Self {
            lower,
            upper,
            count,
            mean_y: sum / count as f64,
            members,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub covariate: String,
    pub splits: Vec<f64>,
    pub bins: Vec<Bin>,
    pub sst: f64,
    pub r2: f64,
}

impl Partition {
    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    /// Index of the bin a covariate value falls into.
    pub fn bin_of(&self, x: f64) -> usize {
        self.splits.partition_point(|&s| s < x)
    }
}

pub fn total_sum_of_squares(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    Ok(y.iter().map(|v| (v - mean) * (v - mean)).sum())
}

/// `Σ_b N_b (ȳ_b − ȳ)²` over the bins.
pub fn between_group_ss(bins: &[Bin]) -> f64 {
    let n: usize = bins.iter().map(|b| b.count).sum();
    if n == 0 {
        return 0.0;
    }
    let mean = bins.iter().map(|b| b.mean_y * b.count as f64).sum::<f64>() / n as f64;
    bins.iter()
        .map(|b| b.count as f64 * (b.mean_y - mean) * (b.mean_y - mean))
        .sum()
}

/// `Σ_b Σ_i (y_{b,i} − ȳ_b)²`.
pub fn within_group_ss(bins: &[Bin], y: &[f64]) -> f64 {
    bins.iter()
        .map(|b| {
            b.members
                .iter()
                .map(|&i| (y[i] - b.mean_y) * (y[i] - b.mean_y))
                .sum::<f64>()
        })
        .sum()
}

/// Fraction of `sst` explained by bin membership, clamped to `[0, 1]`.
pub fn partition_r2(bins: &[Bin], sst: f64) -> Result<f64> {
    if !(sst > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((between_group_ss(bins) / sst).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    /// Number of sorted members that go to the left half.
    left_count: usize,
    value: f64,
    gain: f64,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mut m = (a + b) / 2.0;
    if !m.is_finite() {
        m = a / 2.0 + b / 2.0;
    }
    // adjacent floats: keep a <= s < b
    if m >= b {
        a
    } else {
        m
    }
}

/// Best admissible split of `members` (sorted by `x`).
///
/// The gain of splitting a bin into halves L and R is
/// `(N_L ȳ_L² + N_R ȳ_R² − N ȳ²) / SST`, evaluated in the equivalent
/// cancellation-free form `N_L N_R (ȳ_L − ȳ_R)² / (N · SST)`.
fn scan_bin(members: &[usize], x: &[f64], y: &[f64], sst: f64, config: &PartitionConfig) -> Option<SplitCandidate> {
    let n = members.len();
    let min = config.min_bin_size.max(1);
    if n < 2 * min || !(sst > 0.0) {
        return None;
    }
    let total: f64 = members.iter().map(|&i| y[i]).sum();

    let mut gains: Vec<SplitCandidate> = Vec::new();
    let mut left_sum = 0.0;
    for k in 0..n - 1 {
        left_sum += y[members[k]];
        let left = k + 1;
        let right = n - left;
        let (a, b) = (x[members[k]], x[members[k + 1]]);
        if a == b || left < min || right < min {
            continue;
        }
        let mean_l = left_sum / left as f64;
        let mean_r = (total - left_sum) / right as f64;
        let d = mean_l - mean_r;
        let gain = (left as f64 * right as f64 / n as f64) * d * d / sst;
        gains.push(SplitCandidate {
            left_count: left,
            value: midpoint(a, b),
            gain,
        });
    }
    let best = gains.iter().map(|c| c.gain).fold(f64::NEG_INFINITY, f64::max);
    if !(best > config.min_gain) {
        return None;
    }
    // candidates are in ascending split order; take the first near-maximal one
    gains
        .into_iter()
        .find(|c| c.gain >= best - best * TIE_RELATIVE_TOLERANCE)
}

fn sorted_members(bin: &Bin, x: &[f64]) -> Vec<usize> {
    let mut members = bin.members.clone();
    members.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    members
}

/// Best admissible split of one bin: `(split_value, delta_r2)`, or `None`
/// when the bin is too small, has a single distinct value, or no split
/// gains more than `config.min_gain`.
pub fn best_split(bin: &Bin, x_c: &[f64], y: &[f64], sst: f64, config: &PartitionConfig) -> Option<(f64, f64)> {
    let members = sorted_members(bin, x_c);
    scan_bin(&members, x_c, y, sst, config).map(|c| (c.value, c.gain))
}

/// Build the partition, also returning the explained fraction after every
/// accepted split (starting with the single-bin value 0).
pub fn build_partition_traced(x_c: &[f64], y: &[f64], config: &PartitionConfig) -> Result<(Partition, Vec<f64>)> {
    if x_c.len() != y.len() {
        return Err(Error::LengthMismatch(x_c.len(), y.len()));
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    config.validate()?;
    let sst = total_sum_of_squares(y)?;

    let mut members: Vec<usize> = (0..y.len()).collect();
    members.sort_by(|&a, &b| x_c[a].total_cmp(&x_c[b]).then(a.cmp(&b)));
    let lo = x_c[members[0]];
    let hi = x_c[members[members.len() - 1]];
    let mut bins = vec![Bin::from_members(members, lo, hi, y)];
    let mut splits: Vec<f64> = Vec::new();
    let mut trace = vec![0.0];

    if sst > 0.0 {
        let mut candidates: Vec<Option<SplitCandidate>> = vec![scan_bin(&bins[0].members, x_c, y, sst, config)];
        while bins.len() < config.max_bins {
            let best = candidates
                .iter()
                .flatten()
                .map(|c| c.gain)
                .fold(f64::NEG_INFINITY, f64::max);
            // leftmost near-maximal bin, which also holds the smallest split value
            let chosen = candidates.iter().enumerate().find_map(|(b, c)| {
                c.filter(|c| c.gain >= best - best * TIE_RELATIVE_TOLERANCE)
                    .map(|c| (b, c))
            });
            let Some((b, cand)) = chosen else { break };

            let old = bins.remove(b);
            let (left, right) = old.members.split_at(cand.left_count);
            let left_bin = Bin::from_members(left.to_vec(), old.lower, cand.value, y);
            let right_bin = Bin::from_members(right.to_vec(), cand.value, old.upper, y);
            let left_cand = scan_bin(&left_bin.members, x_c, y, sst, config);
            let right_cand = scan_bin(&right_bin.members, x_c, y, sst, config);
            bins.insert(b, right_bin);
            bins.insert(b, left_bin);
            candidates.splice(b..=b, [left_cand, right_cand]);
            let pos = splits.partition_point(|&s| s < cand.value);
            splits.insert(pos, cand.value);

            trace.push(partition_r2(&bins, sst)?);
        }
    }

    let r2 = if sst > 0.0 { partition_r2(&bins, sst)? } else { 0.0 };
    Ok((
        Partition {
            covariate: String::new(),
            splits,
            bins,
            sst,
            r2,
        },
        trace,
    ))
}

pub fn build_partition(x_c: &[f64], y: &[f64], config: &PartitionConfig) -> Result<Partition> {
    build_partition_traced(x_c, y, config).map(|(p, _)| p)
}
