//! Comparison of observed behavior with the regime predictions.

use serde::Serialize;

use super::lyapunov::{estimate_lyapunov, LyapunovEstimate};
use super::rate::{classify_log_rate, RateClass, RateQuantity, RateVerdict, Thresholds};
use super::stats::median;
use super::summary::{aggregate_log_series, SeriesPoint, TrajectorySummary};
use crate::ensemble::{ColumnConvergence, LyapunovOrder, MatrixBehavior, Regime, RegimeReport};
use crate::error::{Error, Result};
use crate::mat2::ColumnVector2;

/// Everything measured on a batch of trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub lyapunov: LyapunovEstimate,
    pub gap_tol: f64,
    /// `Lambda2LessLambda1` or `Equal`.
    pub observed_order: LyapunovOrder,
    /// `d_∞(P_n)`.
    pub column_distance: Option<RateVerdict>,
    /// Step-to-step change of the normalized columns.
    pub column_to_limit: Option<RateVerdict>,
    /// Step-to-step change of `P_nV/‖P_nV‖₁`.
    pub pnv_to_limit: Option<RateVerdict>,
    pub rank_one_gap: Option<RateVerdict>,
    /// Mean over trajectories of `log(σ2/σ1)` at the last step.
    #[serde(serialize_with = "crate::float_fmt::lossless")]
    pub final_log_rank_one_gap: f64,
    /// Geometric mean of `n · d_∞(P_n)` over the trailing half.
    pub n_times_d_inf: Option<f64>,
    /// Medians over trajectories of the trailing-half oscillations.
    pub matrix_oscillation: f64,
    pub column_oscillation: f64,
    pub pnv_oscillation: Option<f64>,
}

fn rate(
    summaries: &[TrajectorySummary],
    q: RateQuantity,
    thr: &Thresholds,
    pick: fn(&SeriesPoint) -> Option<f64>,
) -> Option<RateVerdict> {
    classify_log_rate(&aggregate_log_series(summaries, pick), q, thr).ok()
}

fn median_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    median(&mut v)
}

/// Reduces trajectory summaries (all of the same length) to an
/// [`Observation`].
pub fn observe(summaries: &[TrajectorySummary], thr: &Thresholds) -> Result<Observation> {
    if let Some(s) = summaries.iter().find(|s| s.zero_at.is_some()) {
        return Err(Error::Degenerate(format!("the product is the zero matrix from step {}", s.zero_at.unwrap_or(0))));
    }
    let lyapunov = estimate_lyapunov(summaries.iter().map(|s| &s.last))?;
    let gap_tol = thr.gap_tol.unwrap_or_else(|| lyapunov.gap_tolerance(thr.gap_tol_stderr_mult, thr.gap_tol_floor));

    let column_distance = rate(summaries, RateQuantity::ColumnDistance, thr, |p| p.log_d_inf);
    let column_to_limit = rate(summaries, RateQuantity::ColumnToLimit, thr, |p| p.log_col_step);
    let pnv_to_limit = rate(summaries, RateQuantity::PnVToLimit, thr, |p| p.log_pnv_step);
    let rank_one_gap = rate(summaries, RateQuantity::RankOneGap, thr, |p| Some(p.log_gap));

    let observed_order = if lyapunov.lambda2_hat == f64::NEG_INFINITY {
        LyapunovOrder::Lambda2LessLambda1
    } else {
        let shape_ok =
            thr.gap_tol.is_some() || rank_one_gap.as_ref().is_some_and(|v| v.classification == RateClass::Exponential);
        if lyapunov.gap > gap_tol && shape_ok {
            LyapunovOrder::Lambda2LessLambda1
        } else {
            LyapunovOrder::Equal
        }
    };

    let final_logs: Vec<f64> = summaries.iter().map(|s| s.last.log_sigma2 - s.last.log_sigma1).collect();
    let final_log_rank_one_gap = final_logs.iter().sum::<f64>() / final_logs.len() as f64;

    let n_times_d_inf = {
        let agg = aggregate_log_series(summaries, |p| p.log_d_inf);
        let tail = &agg[agg.len() / 2..];
        let logs: Vec<f64> = tail.iter().map(|(n, l)| (*n as f64).ln() + l).filter(|x| x.is_finite()).collect();
        (!logs.is_empty()).then(|| (logs.iter().sum::<f64>() / logs.len() as f64).exp())
    };

    Ok(Observation {
        lyapunov,
        gap_tol,
        observed_order,
        column_distance,
        column_to_limit,
        pnv_to_limit,
        rank_one_gap,
        final_log_rank_one_gap,
        n_times_d_inf,
        matrix_oscillation: median_of(summaries.iter().map(TrajectorySummary::matrix_oscillation)).unwrap_or(0.0),
        column_oscillation: median_of(summaries.iter().map(TrajectorySummary::column_oscillation)).unwrap_or(0.0),
        pnv_oscillation: median_of(summaries.iter().filter_map(TrajectorySummary::pnv_oscillation)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClaimStatus {
    Agree,
    Contradict,
    /// The observation is inside the statistical margin; no decision.
    Undetermined,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: &'static str,
    pub status: ClaimStatus,
    pub detail: String,
}

/// The part of the regime report a verdict is checked against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub regime: Regime,
    pub summary: String,
    pub p_const: Option<f64>,
    pub q_const: Option<f64>,
    pub expected_lyapunov_order: LyapunovOrder,
    pub expected_column_convergence: ColumnConvergence,
    pub expected_matrix_behavior: MatrixBehavior,
    pub common_left_eigenvector: Option<ColumnVector2>,
}

impl From<&RegimeReport> for Prediction {
    fn from(r: &RegimeReport) -> Self {
        Prediction {
            regime: r.regime,
            summary: r.summary(),
            p_const: r.p_const,
            q_const: r.q_const,
            expected_lyapunov_order: r.expected_lyapunov_order,
            expected_column_convergence: r.expected_column_convergence,
            expected_matrix_behavior: r.expected_matrix_behavior,
            common_left_eigenvector: r.common_left_eigenvector,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub prediction: Prediction,
    pub observed: Observation,
    pub claims: Vec<Claim>,
    /// `λ̂1 − λ̂2 − gap_tol`.
    #[serde(serialize_with = "crate::float_fmt::lossless")]
    pub gap_margin: f64,
    pub agree: bool,
    pub notes: Vec<String>,
}

fn class_of(v: &Option<RateVerdict>) -> Option<RateClass> {
    v.as_ref().map(|v| v.classification)
}

fn fmt_class(v: &Option<RateVerdict>) -> String {
    match v {
        Some(v) => format!("{:?} (rate {:.3e}, β residual {:.3})", v.classification, v.fitted_rate, v.residual),
        None => "not classified".into(),
    }
}

/// Checks each claim of the theory that applies to `report` against `obs`.
pub fn verdict(report: &RegimeReport, obs: &Observation, thr: &Thresholds) -> Verdict {
    let lyap = &obs.lyapunov;
    let within_margin = lyap.gap.abs() <= obs.gap_tol;
    let observed_less = obs.observed_order == LyapunovOrder::Lambda2LessLambda1;
    let mut claims = Vec::new();
    let mut notes = Vec::new();

    // exponential convergence of the columns iff λ2 < λ1
    let status = match class_of(&obs.column_to_limit) {
        _ if !report.some_member_not_diagonal => ClaimStatus::NotApplicable,
        None => ClaimStatus::Undetermined,
        Some(c) if (c == RateClass::Exponential) == observed_less => ClaimStatus::Agree,
        Some(_) if within_margin => ClaimStatus::Undetermined,
        Some(_) => ClaimStatus::Contradict,
    };
    claims.push(Claim {
        name: "exponential-columns-iff-gap",
        status,
        detail: format!(
            "gap {:.4e} vs tol {:.4e}, order {:?}; columns {}",
            lyap.gap,
            obs.gap_tol,
            obs.observed_order,
            fmt_class(&obs.column_to_limit)
        ),
    });

    // λ2 < λ1 forces rank-one limit points and exponential P_nV convergence
    let status = if !observed_less {
        ClaimStatus::NotApplicable
    } else {
        let gap_ok =
            lyap.lambda2_hat == f64::NEG_INFINITY || class_of(&obs.rank_one_gap) == Some(RateClass::Exponential);
        let pnv_ok = obs.pnv_to_limit.is_none() || class_of(&obs.pnv_to_limit) == Some(RateClass::Exponential);
        if gap_ok && pnv_ok {
            ClaimStatus::Agree
        } else {
            ClaimStatus::Contradict
        }
    };
    claims.push(Claim {
        name: "rank-one-limit-points",
        status,
        detail: format!(
            "log σ2/σ1 at n: {:.4e}, {}; P_nV {}",
            obs.final_log_rank_one_gap,
            fmt_class(&obs.rank_one_gap),
            fmt_class(&obs.pnv_to_limit)
        ),
    });

    // the normalized product diverges without a common left eigenvector
    let oscillates = obs.matrix_oscillation > thr.divergence_threshold;
    let status = match report.expected_matrix_behavior {
        MatrixBehavior::Diverges if oscillates => ClaimStatus::Agree,
        MatrixBehavior::Converges if !oscillates => ClaimStatus::Agree,
        MatrixBehavior::Unspecified => ClaimStatus::NotApplicable,
        _ => ClaimStatus::Contradict,
    };
    claims.push(Claim {
        name: "normalized-matrix-behavior",
        status,
        detail: format!(
            "expected {:?}; oscillation {:.4e} vs threshold {:.1e}",
            report.expected_matrix_behavior, obs.matrix_oscillation, thr.divergence_threshold
        ),
    });

    let status = match (report.expected_lyapunov_order, observed_less) {
        (LyapunovOrder::Undetermined, _) => ClaimStatus::NotApplicable,
        (LyapunovOrder::Equal, false) | (LyapunovOrder::Lambda2LessLambda1, true) => ClaimStatus::Agree,
        (LyapunovOrder::Lambda2LessLambda1, false) if within_margin => ClaimStatus::Undetermined,
        _ => ClaimStatus::Contradict,
    };
    claims.push(Claim {
        name: "lyapunov-order",
        status,
        detail: format!(
            "expected {:?}; λ̂1 = {:.6} ± {:.2e}, λ̂2 = {:.6} ± {:.2e}",
            report.expected_lyapunov_order, lyap.lambda1_hat, lyap.stderr1, lyap.lambda2_hat, lyap.stderr2
        ),
    });

    let dist = class_of(&obs.column_distance);
    let step = class_of(&obs.column_to_limit);
    let exp = Some(RateClass::Exponential);
    let col_osc = obs.column_oscillation > thr.divergence_threshold;
    let observed = match report.expected_column_convergence {
        ColumnConvergence::ExponentialSameLimit => Some(dist == exp && step == exp),
        ColumnConvergence::ExponentialDistinctLimits | ColumnConvergence::ConstantColumns => Some(step == exp),
        ColumnConvergence::SubExponential => Some(dist == Some(RateClass::SubExponential)),
        ColumnConvergence::Divergent => Some(col_osc && step == Some(RateClass::NotConvergent)),
        ColumnConvergence::Undetermined => None,
    };
    let status = match observed {
        None => ClaimStatus::NotApplicable,
        Some(_) if step.is_none() => ClaimStatus::Undetermined,
        Some(true) => ClaimStatus::Agree,
        Some(false) => ClaimStatus::Contradict,
    };
    claims.push(Claim {
        name: "column-behavior",
        status,
        detail: format!(
            "expected {:?}; d_inf {}, columns {}, oscillation {:.4e}",
            report.expected_column_convergence,
            fmt_class(&obs.column_distance),
            fmt_class(&obs.column_to_limit),
            obs.column_oscillation
        ),
    });

    if within_margin && lyap.lambda2_hat.is_finite() {
        notes.push(format!(
            "|λ̂1 − λ̂2| = {:.3e} is within the tolerance {:.3e}; a finite run cannot separate the exponents",
            lyap.gap.abs(),
            obs.gap_tol
        ));
    }
    if report.regime == Regime::AllDiagonal && report.expected_lyapunov_order == LyapunovOrder::Equal {
        if let Some(osc) = obs.pnv_oscillation {
            notes.push(format!("diagonal members with p = q: P_nV oscillation {osc:.4e}, no prediction"));
        }
    }

    let agree = claims.iter().all(|c| c.status != ClaimStatus::Contradict);
    Verdict {
        prediction: report.into(),
        observed: obs.clone(),
        claims,
        gap_margin: lyap.gap - obs.gap_tol,
        agree,
        notes,
    }
}
