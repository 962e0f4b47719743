//! Point-to-point throughput under receiver-only CSI.
//!
//! Three transmission schemes are covered: a single fixed rate, a finite
//! stack of superposition layers, and the continuum of "virtual users" where
//! each infinitesimal power slice `dz` at interference level `z` carries rate
//! `r(z) dz`.
//!
//! Convention for the continuum: level `z` decodes iff
//! `h / (1 + h z) >= u` with `u = 2 ln2 * r(z)`, i.e. iff
//! `h >= u / (1 - u z)` (never when `u z >= 1`). With this convention the
//! fixed-rate marginal `r(z) = 1 / (2 ln2 (P / (2^(2R) - 1) + z))` gives a
//! constant threshold `(2^(2R) - 1) / P` and reproduces the fixed-rate
//! throughput exactly.

use std::f64::consts::LN_2;

use crate::channel::{decode_threshold, rate_for_success, success_prob};
use crate::error::{invalid, Result};
use crate::numerics::{integrate, lambert_w, maximize_1d, RealInterval, DEFAULT_COARSE_POINTS, DEFAULT_REFINEMENTS};

/// Success probability below which rate searches stop.
pub const RATE_SEARCH_FLOOR: f64 = 1e-6;
/// Number of interior points of the alpha line search in [`optimize_two_layer`].
pub const ALPHA_GRID: usize = 200;

fn check_channel(power: f64, sigma2: f64) -> Result<()> {
    if !(power > 0.0 && power.is_finite()) {
        return invalid(format!("power {power} must be finite and > 0"));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return invalid(format!("sigma2 {sigma2} must be finite and > 0"));
    }
    Ok(())
}

/// Average throughput `R * P[success]` of fixed-rate transmission.
pub fn fixed_rate_throughput(rate: f64, power: f64, sigma2: f64) -> f64 {
    if rate == 0.0 {
        return 0.0;
    }
    rate * success_prob(rate, power, sigma2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedRateOptimum {
    /// Throughput-maximizing physical-layer rate.
    pub rate: f64,
    /// Throughput at that rate.
    pub throughput: f64,
}

/// Throughput-optimal fixed rate, `R* = W(P sigma2) / (2 ln 2)`.
pub fn fixed_rate_optimum(power: f64, sigma2: f64) -> Result<FixedRateOptimum> {
    check_channel(power, sigma2)?;
    let rate = lambert_w(power * sigma2)? / (2.0 * LN_2);
    Ok(FixedRateOptimum { rate, throughput: fixed_rate_throughput(rate, power, sigma2) })
}

/// Closed form of the optimal fixed-rate throughput,
/// `W/(2 ln2) * exp(-1/W) * exp(1/(P sigma2))` with `W = W(P sigma2)`.
pub fn fixed_rate_optimum_closed_form(power: f64, sigma2: f64) -> Result<f64> {
    check_channel(power, sigma2)?;
    let snr = power * sigma2;
    let w = lambert_w(snr)?;
    Ok(w / (2.0 * LN_2) * (1.0 / snr - 1.0 / w).exp())
}

/// Piecewise fixed-rate superposition scheme.
///
/// Layer `k` occupies interference levels `[z_{k-1}, z_k]` and uses the
/// fixed-rate marginal of rate `R_k`, so it decodes iff
/// `h >= (2^(2 R_k) - 1) / P`. Rates must be non-increasing in `k` so that
/// lower layers (decoded last) never have a lower threshold than the layers
/// stacked above them.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredScheme {
    breakpoints: Vec<f64>,
    layer_rates: Vec<f64>,
}

impl LayeredScheme {
    pub fn new(breakpoints: Vec<f64>, layer_rates: Vec<f64>) -> Result<Self> {
        if layer_rates.is_empty() {
            return invalid("a layered scheme needs at least one layer");
        }
        if breakpoints.len() != layer_rates.len() + 1 {
            return invalid(format!(
                "{} layers need {} breakpoints, got {}",
                layer_rates.len(),
                layer_rates.len() + 1,
                breakpoints.len()
            ));
        }
        if breakpoints[0] != 0.0 {
            return invalid(format!("first breakpoint must be 0, got {}", breakpoints[0]));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return invalid(format!("breakpoints must be strictly increasing, found {} then {}", w[0], w[1]));
        }
        if let Some(r) = layer_rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return invalid(format!("layer rate {r} must be finite and >= 0"));
        }
        if let Some(k) = layer_rates.windows(2).position(|w| w[1] > w[0]) {
            return invalid(format!(
                "layer rates must be non-increasing (condition A): R{} = {} < R{} = {}",
                k + 1,
                layer_rates[k],
                k + 2,
                layer_rates[k + 1]
            ));
        }
        Ok(Self { breakpoints, layer_rates })
    }

    /// Single fixed-rate layer spanning `[0, power]`.
    pub fn single(rate: f64, power: f64) -> Result<Self> {
        Self::new(vec![0.0, power], vec![rate])
    }

    /// Two layers split at `alpha * power`.
    pub fn two_layer(r1: f64, r2: f64, alpha: f64, power: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("alpha {alpha} must lie in (0, 1)"));
        }
        Self::new(vec![0.0, alpha * power, power], vec![r1, r2])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn layer_rates(&self) -> &[f64] {
        &self.layer_rates
    }

    pub fn power(&self) -> f64 {
        *self.breakpoints.last().expect("validated non-empty")
    }

    pub fn layers(&self) -> usize {
        self.layer_rates.len()
    }

    /// Physical-layer rate carried by each layer,
    /// `0.5 log2((beta_k + z_k) / (beta_k + z_{k-1}))` with
    /// `beta_k = P / (2^(2 R_k) - 1)`.
    pub fn layer_physical_rates(&self) -> Vec<f64> {
        let p = self.power();
        self.layer_rates
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(&r, z)| {
                let g = (2.0 * LN_2 * r).exp_m1() / p;
                0.5 * ((z[1] * g).ln_1p() - (z[0] * g).ln_1p()) / LN_2
            })
            .collect()
    }

    /// Sum of the per-layer physical rates.
    pub fn total_physical_rate(&self) -> f64 {
        self.layer_physical_rates().iter().sum()
    }

    /// Gain thresholds `(2^(2 R_k) - 1) / P`, one per layer.
    pub fn thresholds(&self) -> Vec<f64> {
        let p = self.power();
        self.layer_rates.iter().map(|&r| decode_threshold(r, p)).collect()
    }
}

/// Expected throughput of a layered scheme: each layer's physical rate
/// weighted by the probability that its threshold is met.
pub fn layered_throughput(scheme: &LayeredScheme, power: f64, sigma2: f64) -> Result<f64> {
    check_channel(power, sigma2)?;
    let top = scheme.power();
    if (top - power).abs() > 1e-12 * power.max(1.0) {
        return invalid(format!("scheme spans [0, {top}] but power is {power}"));
    }
    Ok(scheme
        .layer_physical_rates()
        .iter()
        .zip(scheme.layer_rates())
        .map(|(&rate, &r)| if rate == 0.0 { 0.0 } else { rate * success_prob(r, power, sigma2) })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLayerOptimum {
    pub r1: f64,
    pub r2: f64,
    pub alpha: f64,
    pub throughput: f64,
}

impl TwoLayerOptimum {
    pub fn scheme(&self, power: f64) -> Result<LayeredScheme> {
        LayeredScheme::two_layer(self.r1, self.r2, self.alpha, power)
    }
}

fn two_layer_at_alpha(alpha: f64, power: f64, sigma2: f64, fallback: FixedRateOptimum) -> Result<TwoLayerOptimum> {
    let snr = power * sigma2;
    let cap = rate_for_success(RATE_SEARCH_FLOOR, power, sigma2);
    let range = RealInterval::new(0.0, cap)?;
    let lower = |r: f64| {
        let g = (2.0 * LN_2 * r).exp_m1();
        0.5 * (alpha * g).ln_1p() / LN_2 * (-g / snr).exp()
    };
    let upper = |r: f64| {
        let g = (2.0 * LN_2 * r).exp_m1();
        0.5 * ((1.0 - alpha) * g / (1.0 + alpha * g)).ln_1p() / LN_2 * (-g / snr).exp()
    };
    let (r1, f1) = maximize_1d(lower, range, DEFAULT_COARSE_POINTS, DEFAULT_REFINEMENTS)?;
    let (r2, f2) = maximize_1d(upper, range, DEFAULT_COARSE_POINTS, DEFAULT_REFINEMENTS)?;
    if r2 <= r1 {
        return Ok(TwoLayerOptimum { r1, r2, alpha, throughput: f1 + f2 });
    }
    // On R1 = R2 = R the two summands telescope to R * P[success], so the
    // constrained optimum is the fixed-rate optimum.
    Ok(TwoLayerOptimum { r1: fallback.rate, r2: fallback.rate, alpha, throughput: fallback.throughput })
}

/// Best two-layer superposition scheme.
///
/// For each alpha on a uniform grid of `ALPHA_GRID` interior points of
/// `(0, 1)`, the two summands are maximized separately; if that violates
/// `R2 <= R1` the pair collapses to the fixed-rate optimum. One zoom pass
/// around the best alpha follows. Ties keep the smaller alpha.
pub fn optimize_two_layer(power: f64, sigma2: f64) -> Result<TwoLayerOptimum> {
    check_channel(power, sigma2)?;
    let fixed = fixed_rate_optimum(power, sigma2)?;
    let scan = |lo: f64, hi: f64| -> Result<(usize, TwoLayerOptimum)> {
        let mut best: Option<(usize, TwoLayerOptimum)> = None;
        for k in 0..ALPHA_GRID {
            let alpha = lo + (hi - lo) * (k + 1) as f64 / (ALPHA_GRID + 1) as f64;
            let cand = two_layer_at_alpha(alpha, power, sigma2, fixed)?;
            if best.is_none_or(|(_, b)| cand.throughput > b.throughput) {
                best = Some((k, cand));
            }
        }
        Ok(best.expect("alpha grid is non-empty"))
    };
    let (k, coarse) = scan(0.0, 1.0)?;
    let step = 1.0 / (ALPHA_GRID + 1) as f64;
    let (lo, hi) = (k as f64 * step, (k + 2) as f64 * step);
    let (_, fine) = scan(lo, hi)?;
    let best = if fine.throughput > coarse.throughput { fine } else { coarse };
    Ok(best)
}

/// A marginal rate density `r(z)` over interference levels `z in [0, P]`.
pub trait MarginalRateFn {
    fn rate(&self, z: f64) -> f64;
}

impl<F: Fn(f64) -> f64> MarginalRateFn for F {
    fn rate(&self, z: f64) -> f64 {
        self(z)
    }
}

/// Marginal of single fixed-rate transmission at rate `rate` and power `power`.
#[derive(Debug, Clone, Copy)]
pub struct FixedRateMarginal {
    pub rate: f64,
    pub power: f64,
}

impl MarginalRateFn for FixedRateMarginal {
    fn rate(&self, z: f64) -> f64 {
        let g = (2.0 * LN_2 * self.rate).exp_m1();
        if g == 0.0 {
            return 0.0;
        }
        // 1 / (2 ln2 (P/g + z)), written to stay finite as g -> 0
        g / (2.0 * LN_2 * (self.power + z * g))
    }
}

/// Throughput-optimal marginal for Rayleigh fading with mean gain `sigma2`.
#[derive(Debug, Clone, Copy)]
pub struct OptimalMarginal {
    pub sigma2: f64,
}

impl MarginalRateFn for OptimalMarginal {
    fn rate(&self, z: f64) -> f64 {
        optimal_marginal_rate(z, self.sigma2)
    }
}

/// Gain threshold of the optimal marginal at level `z`: the root of
/// `h (1 + h z) = sigma2`.
pub fn optimal_threshold(z: f64, sigma2: f64) -> f64 {
    2.0 * sigma2 / (1.0 + (1.0 + 4.0 * sigma2 * z).sqrt())
}

/// Pointwise maximizer of `r * P[h / (1 + h z) >= 2 ln2 r]`:
///
/// `r*(z) = (1 + 2 s z - sqrt(1 + 4 s z)) / (4 ln2 s z^2)`, `s = sigma2`,
///
/// evaluated in the rationalized form `s / (ln2 (1 + 2 s z + sqrt(1 + 4 s z)))`
/// which is exact down to `z = 0` (limit `s / (2 ln2)`).
pub fn optimal_marginal_rate(z: f64, sigma2: f64) -> f64 {
    let a = sigma2 * z;
    sigma2 / (LN_2 * (1.0 + 2.0 * a + (1.0 + 4.0 * a).sqrt()))
}

/// The marginal in its published closed form,
/// `(1 + 2 s z - sqrt(1 + 4 s z)) / (2 ln2 s z^2)`, which is twice
/// [`optimal_marginal_rate`]. The numerator cancels catastrophically for
/// small `s z`, so it is evaluated as `2 s / (ln2 (1 + 2 s z + sqrt(1 + 4 s z)))`.
/// Reported for comparison only; the throughput routines use the optimal
/// marginal.
pub fn published_marginal_rate(z: f64, sigma2: f64) -> f64 {
    2.0 * optimal_marginal_rate(z, sigma2)
}

/// Gain threshold for decoding level `z` under marginal value `r`;
/// `inf` when the level can never be decoded.
pub fn level_threshold(r: f64, z: f64) -> f64 {
    let u = 2.0 * LN_2 * r;
    let slack = 1.0 - u * z;
    if slack <= 0.0 {
        f64::INFINITY
    } else {
        u / slack
    }
}

/// Probability that level `z` decodes when it carries marginal rate `r`.
pub fn level_decode_prob(r: f64, z: f64, sigma2: f64) -> f64 {
    let th = level_threshold(r, z);
    if th.is_infinite() {
        0.0
    } else {
        (-th / sigma2).exp()
    }
}

/// `int_0^P r(z) P_d(r(z), z) dz` for an arbitrary marginal.
pub fn marginal_throughput<M: MarginalRateFn>(marginal: &M, power: f64, sigma2: f64, tol: f64) -> Result<f64> {
    check_channel(power, sigma2)?;
    integrate(
        |z| {
            let r = marginal.rate(z);
            if r == 0.0 {
                0.0
            } else {
                r * level_decode_prob(r, z, sigma2)
            }
        },
        RealInterval::new(0.0, power)?,
        tol,
    )
}

/// Throughput of the optimal continuum of virtual users.
pub fn infinite_layer_throughput(power: f64, sigma2: f64, tol: f64) -> Result<f64> {
    marginal_throughput(&OptimalMarginal { sigma2 }, power, sigma2, tol)
}

/// Physical-layer rate `int_0^P r(z) dz` of a marginal.
pub fn marginal_physical_rate<M: MarginalRateFn>(marginal: &M, power: f64, tol: f64) -> Result<f64> {
    integrate(|z| marginal.rate(z), RealInterval::new(0.0, power)?, tol)
}

/// Whether the decode threshold is non-increasing in `z` on `samples`
/// uniformly spaced levels of `[0, P]`, i.e. whether decoding a level
/// implies decoding every level above it.
pub fn check_condition_a<M: MarginalRateFn>(marginal: &M, power: f64, samples: usize) -> bool {
    let n = samples.max(2);
    let mut prev = f64::INFINITY;
    for k in 0..n {
        let z = power * k as f64 / (n - 1) as f64;
        let r = marginal.rate(z);
        if !(r >= 0.0) || !r.is_finite() {
            return false;
        }
        let th = level_threshold(r, z);
        if k > 0 && th > prev * (1.0 + 1e-9) {
            return false;
        }
        prev = th;
    }
    true
}
