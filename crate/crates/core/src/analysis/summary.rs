//! Per-trajectory reductions of a record stream, and their aggregation
//! across trajectories.

use crate::engine::TrajectoryRecord;
use crate::mat2::ColumnVector2;

/// Log observables at one recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub step: u64,
    pub log_d_inf: Option<f64>,
    pub log_col_step: Option<f64>,
    pub log_pnv_step: Option<f64>,
    /// `log σ2 − log σ1`.
    pub log_gap: f64,
}

/// Running min/max of a scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Default for Range {
    fn default() -> Self {
        Range { min: f64::INFINITY, max: f64::NEG_INFINITY }
    }
}

impl Range {
    pub fn push(&mut self, x: f64) {
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// `max − min`, 0 when empty.
    pub fn width(&self) -> f64 {
        if self.max >= self.min {
            self.max - self.min
        } else {
            0.0
        }
    }
}

fn widest(ranges: &[Range]) -> f64 {
    ranges.iter().map(Range::width).fold(0.0, f64::max)
}

/// What the analysis keeps of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub series: Vec<SeriesPoint>,
    pub last: TrajectoryRecord,
    /// Entry ranges of `P_n/‖P_n‖₁` over the trailing half of the records.
    pub unit_ranges: [Range; 4],
    /// Coordinate ranges of both normalized columns over the trailing half.
    pub column_ranges: [Range; 4],
    pub pnv_ranges: Option<[Range; 2]>,
    /// First recorded step at which `P_n = 0`.
    pub zero_at: Option<u64>,
    /// First recorded step at which a start vector was mapped to 0.
    pub pnv_lost_at: Option<u64>,
}

impl TrajectorySummary {
    /// Consumes a record stream of a run of `n_steps` steps. Ranges use the
    /// records with `step > n_steps / 2`.
    pub fn collect<I>(records: I, n_steps: u64, tracks_vector: bool) -> Option<TrajectorySummary>
    where
        I: IntoIterator<Item = TrajectoryRecord>,
    {
        let half = n_steps / 2;
        let mut series = Vec::new();
        let mut unit_ranges = [Range::default(); 4];
        let mut column_ranges = [Range::default(); 4];
        let mut pnv_ranges = tracks_vector.then(|| [Range::default(); 2]);
        let mut zero_at = None;
        let mut pnv_lost_at = None;
        let mut last = None;
        for r in records {
            series.push(SeriesPoint {
                step: r.step,
                log_d_inf: r.log_d_inf,
                log_col_step: r.log_col_step,
                log_pnv_step: r.log_pnv_step,
                log_gap: r.log_sigma2 - r.log_sigma1,
            });
            if zero_at.is_none() && r.is_zero_product() {
                zero_at = Some(r.step);
            }
            if tracks_vector && pnv_lost_at.is_none() && r.pnv.is_none() {
                pnv_lost_at = Some(r.step);
            }
            if r.step > half {
                for (rng, x) in unit_ranges.iter_mut().zip(r.unit_matrix.entries()) {
                    rng.push(x);
                }
                let cols = [r.col1, r.col2];
                for (j, c) in cols.iter().enumerate() {
                    if let Some(c) = c {
                        column_ranges[2 * j].push(c.x);
                        column_ranges[2 * j + 1].push(c.y);
                    }
                }
                if let (Some(ranges), Some(ColumnVector2 { x, y })) = (pnv_ranges.as_mut(), r.pnv) {
                    ranges[0].push(x);
                    ranges[1].push(y);
                }
            }
            last = Some(r);
        }
        Some(TrajectorySummary { series, last: last?, unit_ranges, column_ranges, pnv_ranges, zero_at, pnv_lost_at })
    }

    /// Largest entrywise distance between two unit matrices of the
    /// trailing half.
    pub fn matrix_oscillation(&self) -> f64 {
        widest(&self.unit_ranges)
    }

    /// Largest sup-distance between two normalized columns (same index) of
    /// the trailing half.
    pub fn column_oscillation(&self) -> f64 {
        widest(&self.column_ranges)
    }

    pub fn pnv_oscillation(&self) -> Option<f64> {
        self.pnv_ranges.as_ref().map(|r| widest(r))
    }
}

/// Mean of the log values across trajectories at each recorded step (a
/// geometric mean of the underlying quantity). Exact zeros (`-inf`) are left
/// out of the mean; a step where every value is zero aggregates to `-inf`,
/// a step with no values at all is dropped.
pub fn aggregate_log_series<F>(summaries: &[TrajectorySummary], pick: F) -> Vec<(u64, f64)>
where
    F: Fn(&SeriesPoint) -> Option<f64>,
{
    let Some(first) = summaries.first() else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(first.series.len());
    for (i, p) in first.series.iter().enumerate() {
        let mut sum = 0.0;
        let mut finite = 0usize;
        let mut zeros = 0usize;
        for s in summaries {
            match s.series.get(i).and_then(&pick) {
                Some(l) if l.is_finite() => {
                    sum += l;
                    finite += 1;
                }
                Some(_) => zeros += 1,
                None => {}
            }
        }
        if finite > 0 {
            out.push((p.step, sum / finite as f64));
        } else if zeros > 0 {
            out.push((p.step, f64::NEG_INFINITY));
        }
    }
    out
}
