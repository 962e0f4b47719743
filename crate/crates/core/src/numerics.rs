//! Special functions, adaptive quadrature and grid-refined 1-D maximization.
//!
//! Everything here is a pure function of its arguments. The integrator is a
//! global adaptive Gauss-Kronrod (7/15) scheme; semi-infinite ranges are
//! mapped onto `[0, 1)` with a substitution scaled by the integrand's decay
//! length, so every integrand in the crate that decays like `exp(-h / s)`
//! is handled by passing `s` as the decay scale.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

/// Default number of uniform samples in the first pass of [`maximize_1d`].
pub const DEFAULT_COARSE_POINTS: usize = 256;
/// Default number of zoom passes in [`maximize_1d`].
pub const DEFAULT_REFINEMENTS: usize = 4;
/// Maximum number of subintervals the adaptive integrator may hold.
pub const MAX_SUBINTERVALS: usize = 4000;

/// A closed interval `[lo, hi]`.
///
/// `hi` may be `+inf` only when a decay scale is attached, see
/// [`RealInterval::decaying`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealInterval {
    pub lo: f64,
    pub hi: f64,
    decay_scale: Option<f64>,
}

impl RealInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return invalid(format!("interval [{lo}, {hi}] must be finite; use RealInterval::decaying for [lo, inf)"));
        }
        if lo > hi {
            return invalid(format!("empty interval [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi, decay_scale: None })
    }

    /// `[lo, +inf)` for an integrand whose magnitude decays roughly like
    /// `exp(-(x - lo) / scale)`.
    pub fn decaying(lo: f64, scale: f64) -> Result<Self> {
        if !lo.is_finite() {
            return invalid(format!("lower bound {lo} must be finite"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return invalid(format!("decay scale {scale} must be positive and finite"));
        }
        Ok(Self { lo, hi: f64::INFINITY, decay_scale: Some(scale) })
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Principal branch of the Lambert W function for `x >= 0`.
///
/// Halley iteration from a logarithmic seed; bisection on `w e^w - x` takes
/// over if the iteration fails to meet `|w e^w - x| <= 1e-12 max(1, x)`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return invalid(format!("lambert_w argument {x} is not finite"));
    }
    if x < 0.0 {
        return invalid(format!("lambert_w argument {x} is outside the principal branch domain x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = if x < 3.0 {
        x.ln_1p() * (1.0 - x.ln_1p() / (2.0 + x.ln_1p()))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if !w.is_finite() {
            break;
        }
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }

    let tol = 1e-12 * x.max(1.0);
    if w.is_finite() && w >= 0.0 && (w * w.exp() - x).abs() <= tol {
        return Ok(w);
    }
    Ok(lambert_w_bisect(x))
}

fn lambert_w_bisect(x: f64) -> f64 {
    // W(x) <= ln(1 + x) for x >= 0
    let mut lo = 0.0_f64;
    let mut hi = x.ln_1p().max(f64::MIN_POSITIVE);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid * mid.exp() < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(Error::Integration(format!("integrand is not finite at x = {center}")));
    }
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(Error::Integration(format!(
                "integrand is not finite near x = {}",
                if f1.is_finite() { center + dx } else { center - dx }
            )));
        }
        kronrod += wk * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Segment { a, b, value, error })
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let first = kronrod(f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    loop {
        // roundoff floor: an absolute tolerance below a few ulps of the
        // result cannot be certified
        let floor = 64.0 * f64::EPSILON * total.abs();
        if total_err <= tol.max(floor) {
            return Ok(total);
        }
        if heap.len() >= MAX_SUBINTERVALS {
            return Err(Error::Integration(format!(
                "error estimate {total_err:e} above tolerance {tol:e} after {MAX_SUBINTERVALS} subintervals"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Integration(format!("subinterval [{}, {}] cannot be split further", worst.a, worst.b)));
        }
        let left = kronrod(f, worst.a, mid)?;
        let right = kronrod(f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // keep the running error honest against cancellation drift
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Integrate `f` over `interval` to absolute tolerance `tol`.
///
/// For `[lo, inf)` intervals the substitution `x = lo + s t / (1 - t)` with
/// the interval's decay scale `s` maps the range onto `[0, 1)`. Fails with
/// [`Error::Integration`] when the integrand is not finite at a sample point
/// or when `MAX_SUBINTERVALS` are exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, interval: RealInterval, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return invalid(format!("tolerance {tol} must be positive"));
    }
    if interval.lo == interval.hi {
        return Ok(0.0);
    }
    match (interval.is_bounded(), interval.decay_scale) {
        (true, _) => adaptive(&f, interval.lo, interval.hi, tol),
        (false, Some(scale)) => {
            let lo = interval.lo;
            let g = |t: f64| {
                let one_minus = 1.0 - t;
                let x = lo + scale * t / one_minus;
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * scale / (one_minus * one_minus)
                }
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
        (false, None) => invalid("unbounded interval requires a decay scale"),
    }
}

/// Maximize `f` over a bounded interval by uniform sampling followed by
/// repeated zooming onto the bracket around the best sample.
///
/// No unimodality is assumed: the coarse pass sees the whole interval, and
/// the result is within one final-grid cell of the best coarse bracket's
/// maximizer. Ties keep the smallest abscissa. NaN samples are treated as
/// `-inf`.
pub fn maximize_1d<F: Fn(f64) -> f64>(
    f: F,
    interval: RealInterval,
    coarse_points: usize,
    refinements: usize,
) -> Result<(f64, f64)> {
    if !interval.is_bounded() {
        return invalid("maximize_1d requires a bounded interval");
    }
    if coarse_points < 2 {
        return invalid(format!("coarse_points = {coarse_points}, need at least 2"));
    }
    let eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    if interval.lo == interval.hi {
        return Ok((interval.lo, eval(interval.lo)));
    }

    let mut lo = interval.lo;
    let mut hi = interval.hi;
    let mut best_x = lo;
    let mut best_v = f64::NEG_INFINITY;
    for pass in 0..=refinements {
        let step = (hi - lo) / (coarse_points - 1) as f64;
        let mut pass_idx = 0usize;
        let mut pass_v = f64::NEG_INFINITY;
        for k in 0..coarse_points {
            let x = if k == coarse_points - 1 { hi } else { lo + step * k as f64 };
            let v = eval(x);
            if v > pass_v {
                pass_v = v;
                pass_idx = k;
            }
            if v > best_v || (pass == 0 && k == 0) {
                best_v = v;
                best_x = x;
            }
        }
        let new_lo = lo + step * pass_idx.saturating_sub(1) as f64;
        let new_hi = (lo + step * (pass_idx + 1) as f64).min(hi);
        if !(new_hi > new_lo) {
            break;
        }
        lo = new_lo;
        hi = new_hi;
    }
    Ok((best_x, best_v))
}

/// Width of the final sampling cell of [`maximize_1d`] on an interval of
/// the given width.
pub fn grid_resolution(width: f64, coarse_points: usize, refinements: usize) -> f64 {
    let n = (coarse_points.max(2) - 1) as f64;
    width / n * (2.0 / n).powi(refinements as i32)
}
