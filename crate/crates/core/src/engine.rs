//! Streaming computation of `P_n = A(ω_1)…A(ω_n)` with per-step
//! renormalization.
//!
//! The product is held as a unit-norm matrix plus the log of the discarded
//! scale. The log of `|det P_n|` is carried separately as the exact sum of
//! `log|det A(ω_i)|`, so the small singular value and the column distances
//! keep full relative accuracy even after the unit matrix has become
//! numerically rank one.
//!
//! Symbols are drawn with ChaCha20 (`rand_chacha::ChaCha20Rng`). A trajectory
//! with index `i` under master seed `s` uses the generator seeded from `s`
//! with its stream set to `i`, so trajectories are independent and their
//! contents do not depend on thread scheduling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::MatrixEnsemble;
use crate::error::{Error, Result};
use crate::mat2::{multiply, singular_values, ColumnVector2, Matrix2};

/// Records kept per trajectory when `record_every` is left to the default.
pub const DEFAULT_MAX_RECORDS: u64 = 10_000;

/// `1` up to `10⁴` steps, else `⌈n / 10⁴⌉`.
pub fn default_record_every(n_steps: u64) -> u64 {
    if n_steps <= DEFAULT_MAX_RECORDS {
        1
    } else {
        n_steps.div_ceil(DEFAULT_MAX_RECORDS)
    }
}

/// `log|det m|`; singular matrices give `-inf` exactly, and entries whose
/// determinant would overflow or underflow go through the normalized matrix.
fn log_abs_det_of(m: &Matrix2) -> f64 {
    let det = m.det().abs();
    if det == 0.0 {
        return f64::NEG_INFINITY;
    }
    if det.is_normal() {
        return det.ln();
    }
    let n = m.norm1();
    m.normalized().det().abs().ln() + 2.0 * n.ln()
}

/// `P_n` as `exp(log_scale) · unit` with `‖unit‖₁ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledProduct {
    unit: Matrix2,
    log_scale: f64,
    log_abs_det: f64,
}

impl Default for ScaledProduct {
    fn default() -> Self {
        Self::identity()
    }
}

impl ScaledProduct {
    /// `P_0 = I`, stored as `I/2` with scale `log 2`.
    pub fn identity() -> Self {
        ScaledProduct { unit: Matrix2::from_raw(0.5, 0.0, 0.0, 0.5), log_scale: 2f64.ln(), log_abs_det: 0.0 }
    }

    pub fn zero() -> Self {
        ScaledProduct { unit: Matrix2::ZERO, log_scale: f64::NEG_INFINITY, log_abs_det: f64::NEG_INFINITY }
    }

    pub fn from_matrix(m: &Matrix2) -> Self {
        let n = m.norm1();
        if n == 0.0 {
            return Self::zero();
        }
        ScaledProduct { unit: m.normalized(), log_scale: n.ln(), log_abs_det: log_abs_det_of(m) }
    }

    pub fn unit(&self) -> &Matrix2 {
        &self.unit
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// `log|det P_n|`, exact up to the rounding of a sum of logs.
    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    /// `log|det unit|`.
    pub fn log_abs_det_unit(&self) -> f64 {
        if self.log_abs_det == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.log_abs_det - 2.0 * self.log_scale
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale == f64::NEG_INFINITY
    }

    /// Right-multiplies by `a` and renormalizes.
    pub fn step(&self, a: &Matrix2) -> ScaledProduct {
        if self.is_zero() {
            return *self;
        }
        let a_norm = a.norm1();
        if a_norm == 0.0 {
            return Self::zero();
        }
        // unit entries are at most 1, so this only overflows for entries
        // near f64::MAX; fall back to a prescaled factor then
        let (product, extra) = match multiply(&self.unit, a) {
            Ok(p) => (p, 0.0),
            Err(_) => (multiply(&self.unit, &a.normalized()).expect("bounded factors"), a_norm.ln()),
        };
        let n = product.norm1();
        if n == 0.0 {
            return Self::zero();
        }
        let log_det_a = log_abs_det_of(a);
        ScaledProduct {
            unit: product.normalized(),
            log_scale: self.log_scale + extra + n.ln(),
            log_abs_det: self.log_abs_det + log_det_a,
        }
    }

    /// `exp(log_scale) · unit`; fails if an entry overflows.
    pub fn reconstruct(&self) -> Result<Matrix2> {
        if self.is_zero() {
            return Ok(Matrix2::ZERO);
        }
        let s = self.log_scale.exp();
        if !s.is_finite() {
            return Err(Error::Overflow);
        }
        self.unit.scaled(s).map_err(|_| Error::Overflow)
    }

    /// `(log σ₁(P_n), log σ₂(P_n))`.
    pub fn log_singular_values(&self) -> (f64, f64) {
        if self.is_zero() {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        let sv = singular_values(&self.unit);
        let l1 = self.log_scale + sv.sigma1.ln();
        let l2 = (self.log_abs_det - l1).min(l1);
        (l1, l2)
    }

    /// `log d_∞(P_n)`, `None` when a column is null.
    pub fn log_dinf(&self) -> Option<f64> {
        let u = &self.unit;
        let (s1, s2) = (u.a() + u.c(), u.b() + u.d());
        if s1 == 0.0 || s2 == 0.0 {
            return None;
        }
        Some((self.log_abs_det_unit() - s1.ln() - s2.ln()).min(0.0))
    }

    /// `log d_H(P_n)`; `+inf` when exactly one of `ad`, `bc` vanishes and
    /// `-inf` when both do.
    pub fn log_hilbert(&self) -> f64 {
        let u = &self.unit;
        let ad_zero = u.a() == 0.0 || u.d() == 0.0;
        let bc_zero = u.b() == 0.0 || u.c() == 0.0;
        match (ad_zero, bc_zero) {
            (true, true) => f64::NEG_INFINITY,
            (true, false) | (false, true) => f64::INFINITY,
            (false, false) => {
                // d_H = log(max/min) = log1p(|det| / min(ad, bc))
                let log_ad = u.a().ln() + u.d().ln();
                let log_bc = u.b().ln() + u.c().ln();
                let log_x = self.log_abs_det_unit() - log_ad.min(log_bc);
                if log_x == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else if log_x > -18.0 {
                    log_x.exp().ln_1p().ln()
                } else {
                    // log(log1p(x)) = log x + log1p(-x/2 + ...)
                    log_x + (-0.5 * log_x.exp()).ln_1p()
                }
            }
        }
    }
}

/// Where the symbols `ω_1, ω_2, …` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSource {
    /// i.i.d. draws under the ensemble probabilities, ChaCha20 with `seed`
    /// and stream `stream`.
    Seeded { seed: u64, stream: u64 },
    /// A fixed sequence; must be at least as long as the run.
    Explicit(Vec<usize>),
}

impl SymbolSource {
    pub fn seeded(seed: u64) -> Self {
        SymbolSource::Seeded { seed, stream: 0 }
    }
}

#[allow(clippy::large_enum_variant)]
enum SymbolIter<'a> {
    Sampled { rng: ChaCha20Rng, dist: WeightedIndex<f64> },
    Explicit(std::slice::Iter<'a, usize>),
}

impl SymbolIter<'_> {
    fn next_symbol(&mut self) -> usize {
        match self {
            SymbolIter::Sampled { rng, dist } => dist.sample(rng),
            SymbolIter::Explicit(it) => *it.next().expect("explicit sequence length checked up front"),
        }
    }
}

fn make_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn weighted(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|e| Error::InvalidEnsemble(e.to_string()))
}

/// `n` i.i.d. categorical draws; stream 0 of `seed`.
pub fn sample_symbols(seed: u64, probs: &[f64], n: usize) -> Result<Vec<usize>> {
    let dist = weighted(probs)?;
    let mut rng = make_rng(seed, 0);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// Observables of `P_n` at one recorded step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub symbol: usize,
    pub log_sigma1: f64,
    pub log_sigma2: f64,
    /// Hilbert distance between the columns of `P_n`.
    pub d_h: f64,
    /// Sup distance between the normalized columns; `None` if a column is null.
    pub d_inf: Option<f64>,
    pub log_d_h: f64,
    pub log_d_inf: Option<f64>,
    pub col1: Option<ColumnVector2>,
    pub col2: Option<ColumnVector2>,
    /// `P_n / ‖P_n‖₁`.
    pub unit_matrix: Matrix2,
    /// `P_nV / ‖P_nV‖₁` when a start vector was given and `P_nV ≠ 0`.
    pub pnv: Option<ColumnVector2>,
    /// Log of the sup-norm change of the normalized columns since the
    /// previous record (the larger of the two columns).
    pub log_col_step: Option<f64>,
    /// Same for the normalized `P_nV`.
    pub log_pnv_step: Option<f64>,
    pub log_scale: f64,
    /// `Σ_{i≤n} log|det A(ω_i)|`.
    pub log_abs_det: f64,
}

impl TrajectoryRecord {
    pub fn is_zero_product(&self) -> bool {
        self.unit_matrix.is_zero()
    }
}

fn log_norm1(v: ColumnVector2) -> f64 {
    v.norm1().ln()
}

/// `log ‖x̂ − ŷ‖_∞` for `x = U e`, `y = U t` via `det[x, y] = det U · det[e, t]`.
fn log_projective_step(prev: &ScaledProduct, e: ColumnVector2, t: ColumnVector2) -> Option<f64> {
    let u = prev.unit();
    let x = u.mul_vec(e);
    let y = u.mul_vec(t);
    if x.norm1() == 0.0 || y.norm1() == 0.0 {
        return None;
    }
    let cross = (e.x * t.y - e.y * t.x).abs();
    Some((prev.log_abs_det_unit() + cross.ln() - log_norm1(x) - log_norm1(y)).min(0.0))
}

/// Iterator over the recorded steps of one trajectory.
pub struct Trajectory<'a> {
    ensemble: &'a MatrixEnsemble,
    symbols: SymbolIter<'a>,
    start: Option<ColumnVector2>,
    n_steps: u64,
    record_every: u64,
    step: u64,
    state: ScaledProduct,
    prev_state: ScaledProduct,
    segment: Matrix2,
}

impl Trajectory<'_> {
    pub fn state(&self) -> &ScaledProduct {
        &self.state
    }

    fn record(&mut self, symbol: usize) -> TrajectoryRecord {
        let st = &self.state;
        let unit = *st.unit();
        let (log_sigma1, log_sigma2) = st.log_singular_values();
        let log_d_inf = st.log_dinf();
        let log_d_h = st.log_hilbert();
        let pnv = self.start.and_then(|v| unit.mul_vec(v).normalized());

        let e1 = ColumnVector2::new_unchecked(1.0, 0.0);
        let e2 = ColumnVector2::new_unchecked(0.0, 1.0);
        let log_col_step = [
            log_projective_step(&self.prev_state, e1, self.segment.column(0)),
            log_projective_step(&self.prev_state, e2, self.segment.column(1)),
        ]
        .into_iter()
        .flatten()
        .reduce(f64::max);
        let log_pnv_step = self.start.and_then(|v| log_projective_step(&self.prev_state, v, self.segment.mul_vec(v)));

        self.prev_state = self.state;
        self.segment = Matrix2::IDENTITY;

        TrajectoryRecord {
            step: self.step,
            symbol,
            log_sigma1,
            log_sigma2,
            d_h: log_d_h.exp(),
            d_inf: log_d_inf.map(f64::exp),
            log_d_h,
            log_d_inf,
            col1: unit.column(0).normalized(),
            col2: unit.column(1).normalized(),
            unit_matrix: unit,
            pnv,
            log_col_step,
            log_pnv_step,
            log_scale: st.log_scale(),
            log_abs_det: st.log_abs_det(),
        }
    }
}

impl Iterator for Trajectory<'_> {
    type Item = TrajectoryRecord;

    fn next(&mut self) -> Option<TrajectoryRecord> {
        while self.step < self.n_steps {
            let k = self.symbols.next_symbol();
            let a = &self.ensemble.matrices()[k];
            self.state = self.state.step(a);
            self.segment = multiply(&self.segment, a)
                .map(|m| m.normalized())
                .unwrap_or_else(|_| multiply(&self.segment, &a.normalized()).expect("bounded").normalized());
            self.step += 1;
            if self.step.is_multiple_of(self.record_every) || self.step == self.n_steps {
                return Some(self.record(k));
            }
        }
        None
    }
}

/// Starts a trajectory. Validates the start vector and the symbol source
/// before any stepping.
pub fn run<'a>(
    ensemble: &'a MatrixEnsemble,
    source: &'a SymbolSource,
    start: Option<ColumnVector2>,
    n_steps: u64,
    record_every: Option<u64>,
) -> Result<Trajectory<'a>> {
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    let record_every = record_every.unwrap_or_else(|| default_record_every(n_steps));
    if record_every == 0 {
        return Err(Error::Domain("record_every must be at least 1".into()));
    }
    let start = match start {
        None => None,
        Some(v) => {
            if !v.is_nonnegative() || !v.x.is_finite() || !v.y.is_finite() {
                return Err(Error::InvalidVector(format!("({}, {}) has a negative entry", v.x, v.y)));
            }
            Some(v.normalized().ok_or_else(|| Error::InvalidVector("the zero vector".into()))?)
        }
    };
    let symbols = match source {
        SymbolSource::Seeded { seed, stream } => {
            SymbolIter::Sampled { rng: make_rng(*seed, *stream), dist: weighted(ensemble.probs())? }
        }
        SymbolSource::Explicit(seq) => {
            if (seq.len() as u64) < n_steps {
                return Err(Error::Domain(format!(
                    "explicit sequence has {} symbols, {} steps requested",
                    seq.len(),
                    n_steps
                )));
            }
            if let Some(k) = seq.iter().find(|k| **k >= ensemble.len()) {
                return Err(Error::Domain(format!("symbol {k} outside 0..{}", ensemble.len())));
            }
            SymbolIter::Explicit(seq.iter())
        }
    };
    Ok(Trajectory {
        ensemble,
        symbols,
        start,
        n_steps,
        record_every,
        step: 0,
        state: ScaledProduct::identity(),
        prev_state: ScaledProduct::identity(),
        segment: Matrix2::IDENTITY,
    })
}

/// Parameters shared by every trajectory of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    pub master_seed: u64,
    pub n_trajectories: usize,
    pub start: Option<ColumnVector2>,
    pub n_steps: u64,
    pub record_every: Option<u64>,
}

/// Runs `n_trajectories` seeded trajectories in parallel and feeds each
/// record stream to `consume`. Results come back in trajectory order.
pub fn map_trajectories<R, F>(ensemble: &MatrixEnsemble, spec: &BatchSpec, consume: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, Trajectory<'_>) -> R + Sync,
{
    (0..spec.n_trajectories)
        .into_par_iter()
        .map(|i| {
            let source = SymbolSource::Seeded { seed: spec.master_seed, stream: i as u64 };
            let traj = run(ensemble, &source, spec.start, spec.n_steps, spec.record_every)?;
            Ok(consume(i, traj))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(a: f64, b: f64, c: f64, d: f64) -> Matrix2 {
        Matrix2::new(a, b, c, d).unwrap()
    }

    #[test]
    fn single_normalization_step() {
        let s = ScaledProduct::identity().step(&m(1.0, 3.0, 0.0, 1.0));
        let u = s.unit();
        assert_relative_eq!(u.a(), 0.2, max_relative = 1e-15);
        assert_relative_eq!(u.b(), 0.6, max_relative = 1e-15);
        assert_eq!(u.c(), 0.0);
        assert_relative_eq!(u.d(), 0.2, max_relative = 1e-15);
        assert_relative_eq!(s.log_scale(), 5f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(s.unit().norm1(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_state_is_absorbing() {
        let z = ScaledProduct::identity().step(&Matrix2::ZERO);
        assert!(z.is_zero());
        let z2 = z.step(&m(5.0, 1.0, 2.0, 3.0));
        assert!(z2.is_zero());
        assert_eq!(z2.log_scale(), f64::NEG_INFINITY);
        // nilpotent product
        let n = ScaledProduct::identity().step(&m(0.0, 1.0, 0.0, 0.0)).step(&m(0.0, 1.0, 0.0, 0.0));
        assert!(n.is_zero());
    }

    #[test]
    fn diagonal_power_without_overflow() {
        let a = m(2.0, 0.0, 0.0, 1.0);
        let mut s = ScaledProduct::identity();
        for _ in 0..60 {
            s = s.step(&a);
        }
        let alpha = (s.log_scale() + s.unit().a().ln()).exp();
        assert_relative_eq!(alpha, 2f64.powi(60), max_relative = 1e-12);
        for _ in 0..2000 {
            s = s.step(&a);
        }
        assert!(s.log_scale().is_finite());
        assert_relative_eq!(s.log_scale() + s.unit().a().ln(), 2060.0 * 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn huge_entries_take_the_prescaled_path() {
        let a = m(1e308, 1e308, 0.0, 1e308);
        let s = ScaledProduct::identity().step(&a).step(&a);
        assert!(s.log_scale().is_finite());
        assert_relative_eq!(s.unit().norm1(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn invalid_start_vector_rejected_before_stepping() {
        let e = MatrixEnsemble::uniform(vec![Matrix2::IDENTITY]).unwrap();
        let src = SymbolSource::seeded(1);
        assert!(matches!(
            run(&e, &src, Some(ColumnVector2 { x: -1.0, y: 1.0 }), 5, None),
            Err(Error::InvalidVector(_))
        ));
        assert!(matches!(run(&e, &src, Some(ColumnVector2 { x: 0.0, y: 0.0 }), 5, None), Err(Error::InvalidVector(_))));
        assert!(run(&e, &src, None, 0, None).is_err());
        assert!(run(&e, &SymbolSource::Explicit(vec![0, 1]), None, 2, None).is_err());
        assert!(run(&e, &SymbolSource::Explicit(vec![0]), None, 2, None).is_err());
    }

    #[test]
    fn record_schedule() {
        let e = MatrixEnsemble::uniform(vec![Matrix2::IDENTITY]).unwrap();
        let src = SymbolSource::seeded(0);
        let steps: Vec<u64> = run(&e, &src, None, 10, Some(4)).unwrap().map(|r| r.step).collect();
        assert_eq!(steps, vec![4, 8, 10]);
        assert_eq!(default_record_every(10_000), 1);
        assert_eq!(default_record_every(10_001), 2);
        assert_eq!(default_record_every(100_000), 10);
    }

    #[test]
    fn first_triangular_example_closed_form() {
        let b = [0.0, 1.0, 2.5];
        let e = MatrixEnsemble::uniform(b.iter().map(|b| m(1.0, *b, 0.0, 1.0)).collect()).unwrap();
        let seq = vec![1, 2, 0, 2, 1, 1, 0, 2, 2, 1];
        let src = SymbolSource::Explicit(seq.clone());
        let last = run(&e, &src, None, 10, None).unwrap().last().unwrap();
        let sum_b: f64 = seq.iter().map(|k| b[*k]).sum();
        let expect = m(1.0, sum_b, 0.0, 1.0).normalized();
        for (x, y) in last.unit_matrix.entries().iter().zip(expect.entries()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn third_triangular_example_pnv() {
        let e = MatrixEnsemble::uniform(vec![m(1.0, 1.0, 0.0, 2.0)]).unwrap();
        let src = SymbolSource::Explicit(vec![0; 20]);
        let last = run(&e, &src, Some(ColumnVector2 { x: 0.0, y: 1.0 }), 20, None).unwrap().last().unwrap();
        let s_n: f64 = (1..=20).map(|i| 2f64.powi(-i)).sum();
        let pnv = last.pnv.unwrap();
        assert_relative_eq!(pnv.x, s_n / (s_n + 1.0), max_relative = 1e-14);
        assert_relative_eq!(pnv.y, 1.0 / (s_n + 1.0), max_relative = 1e-14);
    }

    #[test]
    fn first_record_reproduces_single_matrix_values() {
        use crate::mat2::{dinf_distance, hilbert_distance};
        let x = m(2.0, 1.0, 1.0, 3.0);
        let e = MatrixEnsemble::uniform(vec![x]).unwrap();
        let src = SymbolSource::seeded(3);
        let r = run(&e, &src, None, 1, None).unwrap().next().unwrap();
        let sv = singular_values(&x);
        assert_relative_eq!(r.log_sigma1, sv.sigma1.ln(), max_relative = 1e-14);
        assert_relative_eq!(r.log_sigma2, sv.sigma2.ln(), max_relative = 1e-12);
        assert_relative_eq!(r.d_h, hilbert_distance(&x), max_relative = 1e-13);
        assert_relative_eq!(r.d_inf.unwrap(), dinf_distance(&x).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn sample_symbols_contract() {
        assert_eq!(sample_symbols(9, &[1.0], 50).unwrap(), vec![0; 50]);
        assert_eq!(sample_symbols(42, &[0.3, 0.7], 100).unwrap(), sample_symbols(42, &[0.3, 0.7], 100).unwrap());
        assert_ne!(sample_symbols(42, &[0.5, 0.5], 100).unwrap(), sample_symbols(43, &[0.5, 0.5], 100).unwrap());
    }

    #[test]
    fn sample_frequencies_concentrate() {
        let n = 100_000;
        let s = sample_symbols(2024, &[0.5, 0.5], n).unwrap();
        let ones = s.iter().filter(|k| **k == 1).count() as f64 / n as f64;
        // six binomial standard deviations is about 0.0095
        assert!((ones - 0.5).abs() < 0.01, "{ones}");
    }

    #[test]
    fn trajectories_use_independent_streams() {
        let e = MatrixEnsemble::uniform(vec![m(1.0, 1.0, 0.0, 1.0), Matrix2::IDENTITY]).unwrap();
        let spec = BatchSpec { master_seed: 5, n_trajectories: 4, start: None, n_steps: 64, record_every: Some(1) };
        let seqs = map_trajectories(&e, &spec, |_, t| t.map(|r| r.symbol).collect::<Vec<_>>()).unwrap();
        assert_ne!(seqs[0], seqs[1]);
        let again = map_trajectories(&e, &spec, |_, t| t.map(|r| r.symbol).collect::<Vec<_>>()).unwrap();
        assert_eq!(seqs, again);
    }
}
