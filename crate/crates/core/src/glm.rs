//! Two-parameter logistic regression `P(y = 1 | x) = 1 / (1 + e^{-(α + βx)})`
//! fitted by maximum likelihood, plus the likelihood-ratio machinery used to
//! compare nested models.
//!
//! The solver is Newton's method on the log-likelihood (IRLS), run on the
//! standardized covariate so that the fit is equivariant under affine
//! changes of `x`. A small ridge term keeps the Newton system well posed and
//! bounds the estimates when the classes are perfectly separated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_two_sided_p;

/// 0.975 quantile of the standard normal.
pub const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iter: usize,
    pub loglik_tol: f64,
    pub ridge: f64,
    pub prob_clamp: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            loglik_tol: 1e-10,
            ridge: 1e-8,
            prob_clamp: 1e-12,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter > 0
            && self.loglik_tol > 0.0
            && self.ridge > 0.0
            && self.prob_clamp > 0.0
            && self.prob_clamp < 0.5;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid fit config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIter,
    DegenerateConstantY,
    /// The outcome classes are separated by `x`; the estimates are finite
    /// only because of the ridge term.
    RidgeBounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub alpha: f64,
    pub beta: f64,
    pub loglik: f64,
    pub n: usize,
    pub se_alpha: f64,
    pub se_beta: f64,
    pub iterations: usize,
    pub status: FitStatus,
}

impl LogisticFit {
    /// 95% Wald interval for the slope.
    pub fn beta_ci95(&self) -> (f64, f64) {
        (self.beta - Z_975 * self.se_beta, self.beta + Z_975 * self.se_beta)
    }

    pub fn predict(&self, x: f64) -> f64 {
        logistic(self.alpha + self.beta * x)
    }
}

pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^eta)` without overflow.
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

fn clamp_prob(p: f64, clamp: f64) -> f64 {
    p.clamp(clamp, 1.0 - clamp)
}

fn bernoulli_loglik(y: f64, p: f64) -> f64 {
    y * p.ln() + (1.0 - y) * (1.0 - p).ln()
}

/// Bernoulli log-likelihood with fitted probabilities clamped to
/// `[prob_clamp, 1 - prob_clamp]`.
pub fn log_likelihood(alpha: f64, beta: f64, x: &[f64], y: &[f64], prob_clamp: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    Ok(x.iter()
        .zip(y)
        .map(|(&xi, &yi)| bernoulli_loglik(yi, clamp_prob(logistic(alpha + beta * xi), prob_clamp)))
        .sum())
}

/// Log-likelihood of the constant model `p = ȳ`.
pub fn null_loglik(y: &[f64], prob_clamp: f64) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let p = clamp_prob(y.iter().sum::<f64>() / y.len() as f64, prob_clamp);
    Ok(y.iter().map(|&yi| bernoulli_loglik(yi, p)).sum())
}

/// `2 (loglik_full − loglik_null)`, clamped at zero.
pub fn deviance(loglik_full: f64, loglik_null: f64) -> f64 {
    let d = 2.0 * (loglik_full - loglik_null);
    if d < 0.0 {
        if d < -1e-9 {
            log::warn!("negative deviance {d:e} clamped to 0; are the models nested?");
        }
        return 0.0;
    }
    d
}

/// Two-sided Wald p-value for the slope.
pub fn wald_p(fit: &LogisticFit) -> Result<f64> {
    if fit.status == FitStatus::DegenerateConstantY {
        return Err(Error::DegenerateFit);
    }
    if fit.beta == 0.0 || !(fit.se_beta > 0.0) || !fit.se_beta.is_finite() {
        return Ok(1.0);
    }
    Ok(normal_two_sided_p(fit.beta / fit.se_beta))
}

/// Whether some threshold on `x` separates the classes (the MLE diverges).
fn is_separated(x: &[f64], y: &[f64]) -> bool {
    let (mut min0, mut max0, mut min1, mut max1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (&xi, &yi) in x.iter().zip(y) {
        if yi > 0.5 {
            min1 = min1.min(xi);
            max1 = max1.max(xi);
        } else {
            min0 = min0.min(xi);
            max0 = max0.max(xi);
        }
    }
    max0 <= min1 || max1 <= min0
}

/// Penalized objective and its derivatives at `(a, b)` on standardized `z`.
struct Newton {
    value: f64,
    grad: [f64; 2],
    /// Negative Hessian of the unpenalized log-likelihood.
    info: [f64; 3],
}

fn evaluate(a: f64, b: f64, z: &[f64], y: &[f64], ridge: f64) -> Newton {
    let mut value = 0.0;
    let mut grad = [0.0; 2];
    let mut info = [0.0; 3];
    for (&zi, &yi) in z.iter().zip(y) {
        let eta = a + b * zi;
        let p = logistic(eta);
        value += yi * eta - softplus(eta);
        let r = yi - p;
        grad[0] += r;
        grad[1] += r * zi;
        let w = p * (1.0 - p);
        info[0] += w;
        info[1] += w * zi;
        info[2] += w * zi * zi;
    }
    value -= 0.5 * ridge * (a * a + b * b);
    grad[0] -= ridge * a;
    grad[1] -= ridge * b;
    Newton { value, grad, info }
}

fn invert_sym2(m: [f64; 3]) -> Option<[f64; 3]> {
    let det = m[0] * m[2] - m[1] * m[1];
    let scale = (m[0] * m[2]).abs().max(f64::MIN_POSITIVE);
    if !(det > scale * 1e-14) {
        return None;
    }
    Some([m[2] / det, -m[1] / det, m[0] / det])
}

pub fn fit_logistic(x: &[f64], y: &[f64], config: &FitConfig) -> Result<LogisticFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    config.validate()?;
    let clamp = config.prob_clamp;
    let mean_y = y.iter().sum::<f64>() / n as f64;

    if y.iter().all(|&v| v == y[0]) {
        return Ok(LogisticFit {
            alpha: logit(clamp_prob(mean_y, clamp)),
            beta: 0.0,
            loglik: null_loglik(y, clamp)?,
            n,
            se_alpha: 0.0,
            se_beta: 0.0,
            iterations: 0,
            status: FitStatus::DegenerateConstantY,
        });
    }

    let mean_x = x.iter().sum::<f64>() / n as f64;
    let sd_x = (x.iter().map(|v| (v - mean_x) * (v - mean_x)).sum::<f64>() / n as f64).sqrt();
    if !(sd_x > 0.0) || x.iter().all(|&v| v == x[0]) {
        // no slope is identifiable; the intercept-only MLE is logit(ȳ)
        let alpha = logit(mean_y);
        return Ok(LogisticFit {
            alpha,
            beta: 0.0,
            loglik: log_likelihood(alpha, 0.0, x, y, clamp)?,
            n,
            se_alpha: 1.0 / (n as f64 * mean_y * (1.0 - mean_y)).sqrt(),
            se_beta: f64::INFINITY,
            iterations: 0,
            status: FitStatus::Converged,
        });
    }
    let z: Vec<f64> = x.iter().map(|v| (v - mean_x) / sd_x).collect();

    let ridge = config.ridge;
    let (mut a, mut b) = (logit(mean_y), 0.0);
    let mut current = evaluate(a, b, &z, y, ridge);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let h = [current.info[0] + ridge, current.info[1], current.info[2] + ridge];
        let Some(hinv) = invert_sym2(h) else { break };
        let da = hinv[0] * current.grad[0] + hinv[1] * current.grad[1];
        let db = hinv[1] * current.grad[0] + hinv[2] * current.grad[1];

        // step halving guards the rare overshoot far from the optimum
        let mut step = 1.0;
        let mut next = evaluate(a + da, b + db, &z, y, ridge);
        while next.value < current.value && step > 1e-10 {
            step *= 0.5;
            next = evaluate(a + step * da, b + step * db, &z, y, ridge);
        }
        if next.value < current.value {
            converged = true;
            break;
        }
        a += step * da;
        b += step * db;
        let change = next.value - current.value;
        current = next;
        if change.abs() < config.loglik_tol {
            converged = true;
            break;
        }
    }

    let alpha = a - b * mean_x / sd_x;
    let beta = b / sd_x;

    // covariance of (a, b) from the ridge-free information, mapped to (α, β)
    let final_eval = evaluate(a, b, &z, y, 0.0);
    let (se_alpha, se_beta) = match invert_sym2(final_eval.info) {
        Some(c) => {
            let m = mean_x / sd_x;
            let var_alpha = c[0] - 2.0 * m * c[1] + m * m * c[2];
            let var_beta = c[2] / (sd_x * sd_x);
            (var_alpha.max(0.0).sqrt(), var_beta.max(0.0).sqrt())
        }
        None => (f64::INFINITY, f64::INFINITY),
    };

    let status = if !converged {
        FitStatus::MaxIter
    } else if is_separated(x, y) {
        FitStatus::RidgeBounded
    } else {
        FitStatus::Converged
    };

    Ok(LogisticFit {
        alpha,
        beta,
        loglik: log_likelihood(alpha, beta, x, y, clamp)?,
        n,
        se_alpha,
        se_beta,
        iterations,
        status,
    })
}
