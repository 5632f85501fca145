//! Classification of a decaying series as exponential, sub-exponential or
//! not convergent.
//!
//! The series is examined in log space. Two statistics are used:
//!
//! * the least-squares slope of `log v` against `n` over the trailing half
//!   of the series (the fitted rate);
//! * a growth exponent `β` from an octave ladder: the local slope is fitted
//!   separately on `[N/2, N]`, `[N/4, N/2]`, … and `log(−slope)` is regressed
//!   on `log n`. Under `log v ≈ −c n^β` the local slope scales as `n^{β−1}`,
//!   so geometric decay gives `β ≈ 1`, stretched decay such as
//!   `exp(−c√n)` gives `β ≈ 1/2`, and algebraic decay gives `β ≈ 0`.
//!
//! A slope below `−rate_floor` alone cannot tell `exp(−c√n)` from a true
//! geometric rate at `n ~ 10⁵`, which is why the exponent is required too.

use serde::{Deserialize, Serialize};

use super::stats::linear_fit;
use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 20;
const MAX_OCTAVES: usize = 6;
const MIN_POINTS_PER_OCTAVE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Slopes must be below `−rate_floor` (per step) to count as exponential.
    pub rate_floor: f64,
    /// A series whose tail stays below this is treated as converged.
    pub convergence_tol: f64,
    /// Minimum octave-ladder growth exponent for an exponential verdict.
    pub growth_exponent_min: f64,
    /// A series counts as decaying only if the fitted `log v` falls by at
    /// least this much across the fit window (`1/n` falls by `log 2`).
    pub min_log_drop: f64,
    /// Values at or below this are treated as exact zeros by [`classify_rate`].
    pub zero_floor: f64,
    /// Oscillation of `P_n/‖P_n‖` (or of the columns) above this is divergence.
    pub divergence_threshold: f64,
    /// Lower bound of the Lyapunov gap tolerance.
    pub gap_tol_floor: f64,
    /// Multiplier on `stderr1 + stderr2` in the gap tolerance.
    pub gap_tol_stderr_mult: f64,
    /// Replaces the whole statistical gap rule with `gap > gap_tol`.
    pub gap_tol: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            rate_floor: 1e-3,
            convergence_tol: 1e-6,
            growth_exponent_min: 0.8,
            min_log_drop: 0.1,
            zero_floor: 1e-300,
            divergence_threshold: 1e-3,
            gap_tol_floor: 1e-3,
            gap_tol_stderr_mult: 3.0,
            gap_tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateQuantity {
    ColumnDistance,
    ColumnToLimit,
    PnVToLimit,
    RankOneGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateClass {
    Exponential,
    SubExponential,
    NotConvergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateVerdict {
    pub quantity: RateQuantity,
    pub classification: RateClass,
    /// Slope of `log v` per step over the fit window; `-inf` once the series
    /// is identically zero.
    #[serde(serialize_with = "crate::float_fmt::lossless")]
    pub fitted_rate: f64,
    pub fit_window: (u64, u64),
    /// `1 − β` for the octave-ladder growth exponent `β`; `+inf` when the
    /// local slopes are not all negative.
    #[serde(serialize_with = "crate::float_fmt::lossless")]
    pub residual: f64,
    pub growth_exponent: Option<f64>,
    /// Number of points at or below the zero floor.
    pub clipped: usize,
}

/// Classifies a series of nonnegative values.
pub fn classify_rate(series: &[(u64, f64)], quantity: RateQuantity, thr: &Thresholds) -> Result<RateVerdict> {
    if let Some((n, v)) = series.iter().find(|(_, v)| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain(format!("value {v} at n = {n} is not a finite nonnegative number")));
    }
    let logs: Vec<(u64, f64)> =
        series.iter().map(|(n, v)| (*n, if *v <= thr.zero_floor { f64::NEG_INFINITY } else { v.ln() })).collect();
    classify_log_rate(&logs, quantity, thr)
}

/// Same as [`classify_rate`] for a series given as `(n, log v)`, which
/// keeps values far below the smallest double meaningful. Only `-inf`
/// counts as a zero here.
pub fn classify_log_rate(series: &[(u64, f64)], quantity: RateQuantity, thr: &Thresholds) -> Result<RateVerdict> {
    if series.len() < MIN_POINTS {
        return Err(Error::Domain(format!(
            "rate classification needs at least {MIN_POINTS} points, got {}",
            series.len()
        )));
    }
    if series.iter().any(|(_, l)| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::Domain("series contains NaN or +inf".into()));
    }
    let is_zero = |l: f64| l == f64::NEG_INFINITY;
    let clipped = series.iter().filter(|(_, l)| is_zero(*l)).count();

    let half = series.len() / 2;
    let trailing = &series[half..];
    let fit_window = (trailing[0].0, trailing[trailing.len() - 1].0);

    let usable: Vec<(f64, f64)> = trailing.iter().filter(|(_, l)| !is_zero(*l)).map(|(n, l)| (*n as f64, *l)).collect();

    if usable.len() < MIN_POINTS_PER_OCTAVE {
        // identically zero from the midpoint on: convergence is finite, which
        // beats any geometric rate
        return Ok(RateVerdict {
            quantity,
            classification: RateClass::Exponential,
            fitted_rate: f64::NEG_INFINITY,
            fit_window,
            residual: 0.0,
            growth_exponent: None,
            clipped,
        });
    }

    let (slope, _) = linear_fit(&usable).unwrap_or((0.0, usable[0].1));
    let ladder = octave_slopes(series);
    let decaying = ladder.len() >= 2 && ladder.iter().all(|(_, s)| *s < 0.0);
    let growth_exponent = if decaying {
        let pts: Vec<(f64, f64)> = ladder.iter().map(|(c, s)| (c.ln(), (-s).ln())).collect();
        linear_fit(&pts).map(|(b, _)| 1.0 + b)
    } else {
        None
    };
    let residual = growth_exponent.map_or(f64::INFINITY, |b| 1.0 - b);

    let tail_len = (series.len() / 20).max(1);
    let tail_max = series[series.len() - tail_len..].iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    let window = (fit_window.1 - fit_window.0) as f64;
    let converging = tail_max < thr.convergence_tol.ln() || (decaying && -slope * window >= thr.min_log_drop);

    let classification = if slope < -thr.rate_floor && growth_exponent.is_some_and(|b| b >= thr.growth_exponent_min) {
        RateClass::Exponential
    } else if converging {
        RateClass::SubExponential
    } else {
        RateClass::NotConvergent
    };

    Ok(RateVerdict { quantity, classification, fitted_rate: slope, fit_window, residual, growth_exponent, clipped })
}

/// `(window centre, slope)` for `[N/2, N]`, `[N/4, N/2]`, … while each
/// window still holds enough nonzero points.
fn octave_slopes(series: &[(u64, f64)]) -> Vec<(f64, f64)> {
    let n_max = series[series.len() - 1].0 as f64;
    let n_min = series[0].0 as f64;
    let mut out = Vec::new();
    let mut hi = n_max;
    for _ in 0..MAX_OCTAVES {
        let lo = hi / 2.0;
        if lo < n_min {
            break;
        }
        let pts: Vec<(f64, f64)> = series
            .iter()
            .filter(|(n, l)| (*n as f64) >= lo && (*n as f64) <= hi && l.is_finite())
            .map(|(n, l)| (*n as f64, *l))
            .collect();
        if pts.len() < MIN_POINTS_PER_OCTAVE {
            break;
        }
        match linear_fit(&pts) {
            Some((s, _)) => out.push((0.5 * (lo + hi), s)),
            None => break,
        }
        hi = lo;
    }
    out
}
