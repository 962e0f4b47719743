//! Single-link Rayleigh fading model.
//!
//! The power gain `h` of a link is exponential with mean `sigma2`, noise has
//! unit variance and rates are in bits per (real) channel use, so a packet
//! sent at rate `R` with power `P` survives iff `0.5 log2(1 + h P) >= R`.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{integrate, RealInterval};

/// Default absolute tolerance for the capacity integrals.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Waterfilling water-level search bracket and iteration budget.
const LAMBDA_BRACKET: (f64, f64) = (1e-12, 1e12);
const LAMBDA_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

/// A directed fading link; `sigma2` is the mean of the exponential power gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub sigma2: f64,
}

impl Link {
    pub fn new(from: impl Into<NodeId>, to: impl Into<NodeId>, sigma2: f64) -> Result<Self> {
        let link = Self { from: from.into(), to: to.into(), sigma2 };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2 <= 1.0) {
            return Err(Error::Validation(format!(
                "link {}->{}: sigma2 = {} must lie in (0, 1]",
                self.from, self.to, self.sigma2
            )));
        }
        Ok(())
    }
}

/// Transmit configuration of one node: average power per unit bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub id: NodeId,
    pub power: f64,
}

impl NodeConfig {
    pub fn new(id: impl Into<NodeId>, power: f64) -> Result<Self> {
        let node = Self { id: id.into(), power };
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::Validation(format!("node {}: power = {} must be finite and >= 0", self.id, self.power)));
        }
        Ok(())
    }
}

/// Smallest gain `h` that supports rate `rate` at power `power`.
pub fn decode_threshold(rate: f64, power: f64) -> f64 {
    (2.0 * LN_2 * rate).exp_m1() / power
}

/// Probability that a packet at `rate` survives the fade:
/// `exp(-(2^(2R) - 1) / (P sigma2))`.
///
/// Requires `rate >= 0`, `power > 0`, `sigma2 > 0`; underflows to exactly 0
/// for very large rates.
pub fn success_prob(rate: f64, power: f64, sigma2: f64) -> f64 {
    debug_assert!(rate >= 0.0 && power > 0.0 && sigma2 > 0.0);
    (-decode_threshold(rate, power) / sigma2).exp()
}

/// Erasure probability seen by the network layer, `1 - success_prob`.
pub fn erasure_prob(rate: f64, power: f64, sigma2: f64) -> f64 {
    -(-decode_threshold(rate, power) / sigma2).exp_m1()
}

/// Rate at which the success probability falls to `floor`.
pub fn rate_for_success(floor: f64, power: f64, sigma2: f64) -> f64 {
    0.5 * (power * sigma2 * (1.0 / floor).ln()).ln_1p() / LN_2
}

/// Ergodic capacity with receiver-only CSI, `E[0.5 log2(1 + h P)]`.
pub fn ergodic_capacity_csir(power: f64, sigma2: f64, tol: f64) -> Result<f64> {
    if !(power >= 0.0 && power.is_finite()) {
        return invalid(format!("power {power} must be finite and >= 0"));
    }
    if !(sigma2 > 0.0) {
        return invalid(format!("sigma2 {sigma2} must be positive"));
    }
    if power == 0.0 {
        return Ok(0.0);
    }
    let snr = power * sigma2;
    // h = sigma2 * u with u ~ Exp(1)
    integrate(|u| 0.5 * (snr * u).ln_1p() / LN_2 * (-u).exp(), RealInterval::decaying(0.0, 1.0)?, tol)
}

fn waterfill_power(lambda: f64, sigma2: f64, tol: f64) -> Result<f64> {
    let scale = (-lambda / sigma2).exp();
    if scale == 0.0 {
        return Ok(0.0);
    }
    // h = lambda + sigma2 * u, and 1/lambda - 1/h = sigma2 u / (lambda h)
    let inner = integrate(
        |u| {
            let h = lambda + sigma2 * u;
            sigma2 * u / (lambda * h) * (-u).exp()
        },
        RealInterval::decaying(0.0, 1.0)?,
        tol / scale,
    )?;
    Ok(scale * inner)
}

fn waterfill_rate(lambda: f64, sigma2: f64, tol: f64) -> Result<f64> {
    let scale = (-lambda / sigma2).exp();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let inner = integrate(
        |u| 0.5 * (sigma2 * u / lambda).ln_1p() / LN_2 * (-u).exp(),
        RealInterval::decaying(0.0, 1.0)?,
        tol / scale,
    )?;
    Ok(scale * inner)
}

/// Water level `lambda` for which `E[(1/lambda - 1/h)^+] = power`.
pub fn waterfilling_level(power: f64, sigma2: f64, tol: f64) -> Result<f64> {
    if !(power > 0.0 && power.is_finite()) {
        return invalid(format!("power {power} must be finite and > 0"));
    }
    if !(sigma2 > 0.0) {
        return invalid(format!("sigma2 {sigma2} must be positive"));
    }
    // expected power is decreasing in lambda; bisect on ln(lambda)
    let (mut lo, mut hi) = (LAMBDA_BRACKET.0.ln(), LAMBDA_BRACKET.1.ln());
    let quad_tol = (tol * 0.1).max(1e-15);
    if waterfill_power(LAMBDA_BRACKET.0, sigma2, quad_tol)? < power
        || waterfill_power(LAMBDA_BRACKET.1, sigma2, quad_tol)? > power
    {
        return Err(Error::Bisection(format!("power {power} is outside the water-level bracket {LAMBDA_BRACKET:?}")));
    }
    for _ in 0..LAMBDA_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let lambda = mid.exp();
        let p = waterfill_power(lambda, sigma2, quad_tol)?;
        if (p - power).abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
            return Ok(lambda);
        }
        if p > power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Bisection(format!("water level for power {power} not found within {LAMBDA_MAX_ITERS} iterations")))
}

/// Capacity with CSI at both ends: `p(h) = (1/lambda - 1/h)^+` waterfilling
/// over the fading distribution.
pub fn waterfilling_capacity(power: f64, sigma2: f64, tol: f64) -> Result<f64> {
    let lambda = waterfilling_level(power, sigma2, tol)?;
    waterfill_rate(lambda, sigma2, tol * 0.1)
}
