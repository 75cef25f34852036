//! Synthetic datasets with planted subgroup trends.
//!
//! Each group `c` draws `x_j ~ Uniform(center − spread, center + spread)` and
//! `y ~ Bernoulli(logistic(alpha_c + beta_c · x_j))`. Group membership is
//! exposed as the numeric covariate `x_c = c + jitter` with
//! `jitter ~ Uniform(0, 0.2)`, so midpoint splits recover the groups.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`. A uniform draw is `(next_u64() >> 11) · 2⁻⁵³`.
//! Rows are emitted group by group; per row the draws are, in order:
//! `x_j`, the Bernoulli threshold for `y`, the jitter, then one value per
//! noise covariate (a normal value consumes two uniforms, Box–Muller cosine
//! branch).

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::glm::{fit_logistic, logistic, FitConfig};

const JITTER_WIDTH: f64 = 0.2;
/// Half-width of each group's `x_j` range in the two-group construction.
const PARADOX_SPREAD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub x_center: f64,
    pub x_spread: f64,
}

impl GroupSpec {
    /// A group whose expected outcome rate over its `x_j` range is `mean`.
    pub fn with_mean(size: usize, beta: f64, x_center: f64, x_spread: f64, mean: f64) -> Self {
        let rate = |alpha: f64| expected_rate(alpha, beta, x_center, x_spread);
        // rate is increasing in alpha
        let bound = 60.0 + beta.abs() * (x_center.abs() + x_spread);
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rate(mid) < mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self {
            size,
            alpha: 0.5 * (lo + hi),
            beta,
            x_center,
            x_spread,
        }
    }

    /// Expected outcome rate over the group's uniform `x_j` range.
    pub fn expected_rate(&self) -> f64 {
        expected_rate(self.alpha, self.beta, self.x_center, self.x_spread)
    }
}

/// Mean of `logistic(alpha + beta x)` for `x` uniform on `center ± spread`.
fn expected_rate(alpha: f64, beta: f64, center: f64, spread: f64) -> f64 {
    let softplus = |t: f64| t.max(0.0) + (-t.abs()).exp().ln_1p();
    if beta == 0.0 {
        return logistic(alpha + beta * center);
    }
    let hi = alpha + beta * (center + spread);
    let lo = alpha + beta * (center - spread);
    (softplus(hi) - softplus(lo)) / (hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseDistribution {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Default for NoiseDistribution {
    fn default() -> Self {
        Self::Uniform { low: 0.0, high: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub count: usize,
    #[serde(default)]
    pub distribution: NoiseDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl PlantedSpec {
    /// Two groups with slope −1 each, `x_j` centered at 0 and 4 (half-width
    /// 2, so the groups just touch) and outcome rates 0.2 and 0.8: the pooled
    /// slope is positive.
    pub fn two_group_paradox(total_n: usize, noise_count: usize, seed: u64) -> Self {
        let first = total_n / 2;
        Self {
            groups: vec![
                GroupSpec::with_mean(first, -1.0, 0.0, PARADOX_SPREAD, 0.2),
                GroupSpec::with_mean(total_n - first, -1.0, 4.0, PARADOX_SPREAD, 0.8),
            ],
            noise: NoiseSpec {
                count: noise_count,
                distribution: NoiseDistribution::default(),
            },
            seed,
        }
    }

    /// One group with no trend at all.
    pub fn homogeneous(n: usize, noise_count: usize, seed: u64) -> Self {
        Self {
            groups: vec![GroupSpec {
                size: n,
                alpha: 0.0,
                beta: 0.0,
                x_center: 0.0,
                x_spread: 1.0,
            }],
            noise: NoiseSpec {
                count: noise_count,
                distribution: NoiseDistribution::default(),
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidSpec("at least one group is required".into()));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.size < 1 {
                return Err(Error::InvalidSpec(format!("group {i} has size 0")));
            }
            if !(g.x_spread > 0.0) || !g.x_spread.is_finite() {
                return Err(Error::InvalidSpec(format!("group {i} needs a positive spread")));
            }
            if !(g.alpha.is_finite() && g.beta.is_finite() && g.x_center.is_finite()) {
                return Err(Error::InvalidSpec(format!("group {i} has non-finite parameters")));
            }
        }
        let ok = match self.noise.distribution {
            NoiseDistribution::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            NoiseDistribution::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
        };
        if !ok {
            return Err(Error::InvalidSpec(format!("bad noise distribution {:?}", self.noise.distribution)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub groups: Vec<GroupSpec>,
    pub outcome: String,
    pub x_j: String,
    pub x_c: String,
    pub noise: Vec<String>,
    /// Slope of a logistic fit to the pooled sample.
    pub pooled_beta: f64,
}

struct Uniform01(ChaCha8Rng);

impl Uniform01 {
    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        // 1 - u keeps the log argument in (0, 1]
        let u1 = 1.0 - self.next();
        let u2 = self.next();
        mean + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

pub fn generate(spec: &PlantedSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let n: usize = spec.groups.iter().map(|g| g.size).sum();
    let mut rng = Uniform01(ChaCha8Rng::seed_from_u64(spec.seed));

    let mut y = Vec::with_capacity(n);
    let mut x_j = Vec::with_capacity(n);
    let mut x_c = Vec::with_capacity(n);
    let mut noise: Vec<Vec<f64>> = vec![Vec::with_capacity(n); spec.noise.count];

    for (c, group) in spec.groups.iter().enumerate() {
        for _ in 0..group.size {
            let x = group.x_center + group.x_spread * (2.0 * rng.next() - 1.0);
            let p = logistic(group.alpha + group.beta * x);
            y.push(u8::from(rng.next() < p));
            x_j.push(x);
            x_c.push(c as f64 + JITTER_WIDTH * rng.next());
            for column in noise.iter_mut() {
                column.push(match spec.noise.distribution {
                    NoiseDistribution::Uniform { low, high } => low + (high - low) * rng.next(),
                    NoiseDistribution::Normal { mean, sd } => rng.normal(mean, sd),
                });
            }
        }
    }

    let y_f: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let pooled_beta = fit_logistic(&x_j, &y_f, &FitConfig::default())?.beta;

    let noise_names: Vec<String> = (1..=spec.noise.count).map(|i| format!("noise_{i}")).collect();
    let mut columns = vec![("x_j".to_string(), x_j), ("x_c".to_string(), x_c)];
    columns.extend(noise_names.iter().cloned().zip(noise));
    let dataset = Dataset::from_columns("y", y, columns)?;

    Ok((
        dataset,
        GroundTruth {
            groups: spec.groups.clone(),
            outcome: "y".into(),
            x_j: "x_j".into(),
            x_c: "x_c".into(),
            noise: noise_names,
            pooled_beta,
        },
    ))
}

/// True when every group slope has one sign and the pooled slope the other.
pub fn reversal_planted(truth: &GroundTruth) -> bool {
    if truth.groups.len() < 2 {
        return false;
    }
    let pooled = truth.pooled_beta.signum();
    if truth.pooled_beta == 0.0 {
        return false;
    }
    truth
        .groups
        .iter()
        .all(|g| g.beta != 0.0 && g.beta.signum() == -pooled)
}
