use serde::Serialize;

use super::stats::MeanVar;
use crate::engine::TrajectoryRecord;
use crate::error::{Error, Result};

/// Monte Carlo estimate of `(λ1, λ2)` from the final records of `T`
/// trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub lambda1_hat: f64,
    /// `-inf` once a singular member has been applied on some trajectory.
    #[serde(serialize_with = "crate::float_fmt::lossless")]
    pub lambda2_hat: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub n_steps: u64,
    pub n_trajectories: usize,
    #[serde(serialize_with = "crate::float_fmt::lossless")]
    pub gap: f64,
}

impl LyapunovEstimate {
    /// `max(mult · (stderr1 + stderr2), floor)`.
    pub fn gap_tolerance(&self, mult: f64, floor: f64) -> f64 {
        (mult * (self.stderr1 + self.stderr2)).max(floor)
    }
}

/// Means of `log σ_i(P_n) / n` across trajectories with their standard
/// errors. All records must be at the same step.
pub fn estimate_lyapunov<'a, I>(final_records: I) -> Result<LyapunovEstimate>
where
    I: IntoIterator<Item = &'a TrajectoryRecord>,
{
    let mut l1 = MeanVar::default();
    let mut l2 = MeanVar::default();
    let mut singular = false;
    let mut n_steps = None;
    for r in final_records {
        match n_steps {
            None => n_steps = Some(r.step),
            Some(n) if n != r.step => {
                return Err(Error::Domain(format!("trajectories end at different steps ({n} and {})", r.step)))
            }
            _ => {}
        }
        if r.is_zero_product() {
            return Err(Error::Degenerate(format!("zero product at step {}", r.step)));
        }
        let n = r.step as f64;
        l1.push(r.log_sigma1 / n);
        if r.log_sigma2 == f64::NEG_INFINITY {
            singular = true;
            l2.push(0.0);
        } else {
            l2.push(r.log_sigma2 / n);
        }
    }
    let Some(n_steps) = n_steps else {
        return Err(Error::Domain("no trajectories".into()));
    };
    let lambda1_hat = l1.mean();
    let (lambda2_hat, stderr2) = if singular { (f64::NEG_INFINITY, 0.0) } else { (l2.mean(), l2.std_error()) };
    Ok(LyapunovEstimate {
        lambda1_hat,
        lambda2_hat,
        stderr1: l1.std_error(),
        stderr2,
        n_steps,
        n_trajectories: l1.count() as usize,
        gap: lambda1_hat - lambda2_hat,
    })
}

/// `σ2(P_n)/σ1(P_n)` at one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankOneGap {
    pub gap: f64,
    /// `σ1 > σ2`, i.e. the top singular value is simple.
    pub simple_top: bool,
    /// Set for the zero product, where the gap is reported as 0.
    pub degenerate: bool,
}

pub fn rank_one_gap(record: &TrajectoryRecord) -> RankOneGap {
    if record.is_zero_product() || !record.log_sigma1.is_finite() {
        return RankOneGap { gap: 0.0, simple_top: false, degenerate: true };
    }
    let gap = (record.log_sigma2 - record.log_sigma1).exp().min(1.0);
    RankOneGap { gap, simple_top: gap < 1.0, degenerate: false }
}
