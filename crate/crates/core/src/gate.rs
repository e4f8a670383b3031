//! Familiarity signal and strategy selection.
//!
//! The probe's top-K scores are summarized by their mean and by the entropy of
//! a max-shifted softmax with sharpness `lambda`. A high mean selects the
//! one-shot familiarity path, a low mean selects recollection, and in between
//! the entropy decides.

use serde::{Deserialize, Serialize};

use crate::corpus::ScoredList;
use crate::error::{Error, Result};

/// Which retrieval path handles a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Familiarity,
    Recollection,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Familiarity => "familiarity",
            Strategy::Recollection => "recollection",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// Softmax sharpness.
    pub lambda: f64,
    pub theta_high: f64,
    pub theta_low: f64,
    /// Entropy threshold for the mid band.
    pub tau: f64,
    /// Probe list size.
    pub probe_k: usize,
}

impl Default for GateParams {
    fn default() -> Self {
        Self {
            lambda: 20.0,
            theta_high: 0.6,
            theta_low: 0.3,
            tau: 0.2,
            probe_k: 10,
        }
    }
}

impl GateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParams(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.theta_low.is_nan() || self.theta_high.is_nan() || self.theta_low > self.theta_high {
            return Err(Error::InvalidParams(format!(
                "theta_low ({}) must not exceed theta_high ({})",
                self.theta_low, self.theta_high
            )));
        }
        if self.tau.is_nan() || self.tau < 0.0 {
            return Err(Error::InvalidParams(format!(
                "tau must be non-negative, got {}",
                self.tau
            )));
        }
        if self.probe_k == 0 {
            return Err(Error::InvalidParams("probe_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of probing a query.
///
/// `mean` and `entropy` are `None` only when the probe returned nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSignal {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
    pub mean: Option<f64>,
    pub entropy: Option<f64>,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distribution: Vec<f64>,
}

impl GateSignal {
    /// Drops the per-score vectors, keeping `mean`, `entropy` and `strategy`.
    pub fn summary(&self) -> GateSignal {
        GateSignal {
            scores: Vec::new(),
            distribution: Vec::new(),
            ..self.clone()
        }
    }
}

/// Max-shifted softmax `exp(λ(sᵢ − max s)) / Σⱼ exp(λ(sⱼ − max s))`.
///
/// `lambda == 0` yields the uniform distribution.
pub fn tempered_softmax(scores: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParams("scores must be finite".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (lambda * (s - max)).exp()).collect();
    // The maximum contributes exp(0) = 1, so the total is at least 1.
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if let Some(bad) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {bad} is not a probability"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
    }
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    Ok(h.max(0.0))
}

/// Two-threshold policy with an entropy tie-breaker for the middle band.
pub fn decide(mean: f64, entropy: f64, params: &GateParams) -> Strategy {
    if mean >= params.theta_high {
        Strategy::Familiarity
    } else if mean <= params.theta_low {
        Strategy::Recollection
    } else if entropy <= params.tau {
        Strategy::Familiarity
    } else {
        Strategy::Recollection
    }
}

/// Summarizes raw probe scores. An empty probe routes to recollection.
pub fn gate_scores(scores: &[f64], params: &GateParams) -> Result<GateSignal> {
    if scores.is_empty() {
        return Ok(GateSignal {
            scores: Vec::new(),
            mean: None,
            entropy: None,
            strategy: Strategy::Recollection,
            distribution: Vec::new(),
        });
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let distribution = tempered_softmax(scores, params.lambda)?;
    let h = entropy(&distribution)?;
    Ok(GateSignal {
        scores: scores.to_vec(),
        mean: Some(mean),
        entropy: Some(h),
        strategy: decide(mean, h, params),
        distribution,
    })
}

pub fn gate(probe: &ScoredList, params: &GateParams) -> Result<GateSignal> {
    gate_scores(&probe.scores(), params)
}

/// Lower bound on the top probability implied by `H(p) ≤ tau`.
///
/// Follows from `H(p) ≥ −ln p_max`.
pub fn exp_certificate(tau: f64) -> f64 {
    (-tau).exp()
}

/// Binary entropy in nats.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// Entropy of the distribution with top mass `x` and the rest spread evenly
/// over `k - 1` outcomes: the largest entropy any `k`-outcome distribution with
/// `p_max = x` can have.
pub fn max_entropy_envelope(x: f64, k: usize) -> f64 {
    binary_entropy(x) + (1.0 - x) * ((k - 1) as f64).ln()
}

/// The `x ∈ [1/k, 1]` where the max-entropy envelope equals `tau`.
///
/// The envelope falls from `ln k` at `x = 1/k` to `0` at `x = 1`, so the root
/// is unique; bisection stops once the envelope is within `1e-10` of `tau`.
pub fn phi_k(tau: f64, k: usize) -> f64 {
    assert!(k >= 2, "phi_k needs at least two outcomes");
    let lo_x = 1.0 / k as f64;
    if tau <= 0.0 {
        return 1.0;
    }
    if tau >= (k as f64).ln() {
        return lo_x;
    }
    let (mut lo, mut hi) = (lo_x, 1.0);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f = max_entropy_envelope(mid, k);
        if (f - tau).abs() <= 1e-10 {
            break;
        }
        if f > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}
