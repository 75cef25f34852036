#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn bernoulli(&mut self, p: f64) -> f64 {
        f64::from(u8::from(self.uniform() < p))
    }
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `Σ y log σ(a + b x) + (1 − y) log σ(−a − b x)`, overflow-safe.
pub fn loglik(a: f64, b: f64, x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let t = a + b * xi;
            let log_p = -((-t).max(0.0) + (-t.abs()).exp().ln_1p());
            let log_q = -(t.max(0.0) + (-t.abs()).exp().ln_1p());
            yi * log_p + (1.0 - yi) * log_q
        })
        .sum()
}

/// Mean-only log-likelihood, computed directly.
pub fn bernoulli_loglik(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let k: f64 = y.iter().sum();
    let p = k / n;
    let term = |count: f64, q: f64| if count > 0.0 { count * q.ln() } else { 0.0 };
    term(k, p) + term(n - k, 1.0 - p)
}

/// Maximum-likelihood logistic fit by zooming grid search, returned in the
/// original coordinates as `(alpha, beta, loglik)`.
pub fn grid_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let s = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    let u: Vec<f64> = x.iter().map(|v| (v - m) / s).collect();
    let (mut ca, mut cb) = (0.0, 0.0);
    let mut best = loglik(ca, cb, &u, y);
    let mut half = 16.0;
    let points = 10;
    while half > 1e-10 {
        let (mut na, mut nb) = (ca, cb);
        for i in 0..=2 * points {
            for j in 0..=2 * points {
                let a = ca + half * (i as f64 - points as f64) / points as f64;
                let b = cb + half * (j as f64 - points as f64) / points as f64;
                let ll = loglik(a, b, &u, y);
                if ll > best {
                    best = ll;
                    na = a;
                    nb = b;
                }
            }
        }
        ca = na;
        cb = nb;
        half /= 2.0;
    }
    (ca - cb * m / s, cb / s, best)
}
