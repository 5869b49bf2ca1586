use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::experiment::{Outcome, Verdict};

/// Pass fraction over conclusive verdicts with an exact binomial interval.
/// The estimate and bounds are `None` when no verdict was conclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub point_estimate: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub confidence_level: f64,
    pub n_pass: usize,
    pub n_fail: usize,
    pub n_inconclusive: usize,
}

impl ScoreRecord {
    pub fn is_degenerate(&self) -> bool {
        self.point_estimate.is_none()
    }

    /// Interval width; a degenerate record counts as maximally wide.
    pub fn width(&self) -> f64 {
        match (self.ci_low, self.ci_high) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 1.0,
        }
    }
}

pub fn success_score<'a>(
    verdicts: impl IntoIterator<Item = &'a Verdict>,
    confidence_level: f64,
) -> Result<ScoreRecord> {
    if !(confidence_level > 0.0 && confidence_level < 1.0) {
        return Err(Error::InvalidConfidence(confidence_level));
    }
    let (mut n_pass, mut n_fail, mut n_inconclusive) = (0, 0, 0);
    for v in verdicts {
        match v.outcome {
            Outcome::Pass => n_pass += 1,
            Outcome::Fail => n_fail += 1,
            Outcome::Inconclusive => n_inconclusive += 1,
        }
    }
    let n = n_pass + n_fail;
    let (point_estimate, ci_low, ci_high) = if n == 0 {
        (None, None, None)
    } else {
        let (lo, hi) = clopper_pearson(n_pass as u64, n as u64, confidence_level)?;
        (Some(n_pass as f64 / n as f64), Some(lo), Some(hi))
    };
    Ok(ScoreRecord {
        point_estimate,
        ci_low,
        ci_high,
        confidence_level,
        n_pass,
        n_fail,
        n_inconclusive,
    })
}

/// Solves `f(p) = target` for increasing `f` on `[0, 1]`.
fn bisect(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided interval for `x` successes in `n` trials.
///
/// The bounds are beta quantiles: the lower one solves
/// `I_p(x, n-x+1) = alpha/2`, the upper one `I_p(x+1, n-x) = 1 - alpha/2`.
pub fn clopper_pearson(x: u64, n: u64, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfidence(level));
    }
    if n == 0 || x > n {
        return Err(Error::InvalidBound(format!("{x} successes in {n} trials")));
    }
    let alpha = 1.0 - level;
    let (xf, nf) = (x as f64, n as f64);
    let lo = if x == 0 {
        0.0
    } else {
        bisect(|p| beta_reg(xf, nf - xf + 1.0, p), alpha / 2.0)
    };
    let hi = if x == n {
        1.0
    } else {
        bisect(|p| beta_reg(xf + 1.0, nf - xf, p), 1.0 - alpha / 2.0)
    };
    Ok((lo, hi))
}
