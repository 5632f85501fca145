//! Estimation and verdicts on batches of trajectories.

mod lyapunov;
pub mod oracle;
mod rate;
pub mod stats;
mod summary;
mod verdict;

pub use lyapunov::{estimate_lyapunov, rank_one_gap, LyapunovEstimate, RankOneGap};
pub use oracle::{closed_form, limit_of_pnv, triangular_oracle, PnvLimit, TriangularProduct};
pub use rate::{classify_log_rate, classify_rate, RateClass, RateQuantity, RateVerdict, Thresholds, MIN_POINTS};
pub use summary::{aggregate_log_series, Range, SeriesPoint, TrajectorySummary};
pub use verdict::{observe, verdict, Claim, ClaimStatus, Observation, Prediction, Verdict};

use crate::engine::{map_trajectories, BatchSpec};
use crate::ensemble::{classify, MatrixEnsemble};
use crate::error::{Error, Result};

/// Runs a batch and reduces every trajectory to a summary, in trajectory
/// order.
pub fn summarize(e: &MatrixEnsemble, spec: &BatchSpec) -> Result<Vec<TrajectorySummary>> {
    let tracks = spec.start.is_some();
    map_trajectories(e, spec, |_, traj| TrajectorySummary::collect(traj, spec.n_steps, tracks))?
        .into_iter()
        .map(|s| s.ok_or_else(|| Error::Domain("empty trajectory".into())))
        .collect()
}

/// classify → simulate → estimate → verdict.
pub fn analyze(e: &MatrixEnsemble, spec: &BatchSpec, thr: &Thresholds) -> Result<Verdict> {
    if spec.n_trajectories == 0 {
        return Err(Error::Domain("at least one trajectory is needed".into()));
    }
    let report = classify(e);
    let summaries = summarize(e, spec)?;
    let obs = observe(&summaries, thr)?;
    Ok(verdict(&report, &obs, thr))
}
