//! Closed forms for upper-triangular products.
//!
//! For upper-triangular members `[[a, b], [0, d]]` the product is
//! `P_n = [[α_n, δ_n s_n], [0, δ_n]]` with `α_n = Π a(ω_i)`, `δ_n = Π d(ω_i)`
//! and `s_n = Σ (α_{i−1}/δ_{i−1}) (b(ω_i)/d(ω_i))`. Everything is kept in
//! logs so long sequences do not overflow.

use serde::Serialize;

use crate::engine::{run, SymbolSource};
use crate::ensemble::{classify, pq_constants, MatrixEnsemble, Regime};
use crate::error::{Error, Result};
use crate::mat2::{ColumnVector2, Matrix2};

/// `log(e^x + e^y)`.
fn log_add_exp(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `P_n` of an upper-triangular product in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangularProduct {
    pub n: usize,
    pub log_alpha: f64,
    pub log_delta: f64,
    /// `log s_n`; `-inf` while `s_n = 0`.
    pub log_s: f64,
}

impl TriangularProduct {
    pub fn identity() -> Self {
        TriangularProduct { n: 0, log_alpha: 0.0, log_delta: 0.0, log_s: f64::NEG_INFINITY }
    }

    /// Multiplies on the right by `[[a, b], [0, d]]`, `a, d > 0`.
    pub fn step(&self, a: f64, b: f64, d: f64) -> Self {
        let inc = if b > 0.0 { self.log_alpha - self.log_delta + b.ln() - d.ln() } else { f64::NEG_INFINITY };
        TriangularProduct {
            n: self.n + 1,
            log_alpha: self.log_alpha + a.ln(),
            log_delta: self.log_delta + d.ln(),
            log_s: log_add_exp(self.log_s, inc),
        }
    }

    pub fn s(&self) -> f64 {
        self.log_s.exp()
    }

    /// `P_n / ‖P_n‖₁`.
    pub fn unit(&self) -> Matrix2 {
        let la = self.log_alpha;
        let lb = self.log_delta + self.log_s;
        let ld = self.log_delta;
        let m = la.max(lb).max(ld);
        let (a, b, d) = ((la - m).exp(), (lb - m).exp(), (ld - m).exp());
        let total = a + b + d;
        Matrix2::from_raw(a / total, b / total, 0.0, d / total)
    }

    /// `P_n` itself; overflows for long products.
    pub fn matrix(&self) -> Result<Matrix2> {
        let a = self.log_alpha.exp();
        let d = self.log_delta.exp();
        let b = (self.log_delta + self.log_s).exp();
        if !(a.is_finite() && b.is_finite() && d.is_finite()) {
            return Err(Error::Overflow);
        }
        Ok(Matrix2::from_raw(a, b, 0.0, d))
    }
}

fn upper_members(e: &MatrixEnsemble) -> Result<()> {
    for (k, m) in e.matrices().iter().enumerate() {
        if !m.is_upper_triangular() || m.a() == 0.0 || m.d() == 0.0 {
            return Err(Error::Domain(format!("member {k} = {m} is not upper triangular with a positive diagonal")));
        }
    }
    Ok(())
}

/// Replays `symbols` through the closed form.
pub fn triangular_oracle(e: &MatrixEnsemble, symbols: &[usize]) -> Result<TriangularProduct> {
    upper_members(e)?;
    let ms = e.matrices();
    let mut p = TriangularProduct::identity();
    for &k in symbols {
        let m = ms.get(k).ok_or_else(|| Error::Domain(format!("symbol {k} outside 0..{}", ms.len())))?;
        p = p.step(m.a(), m.b(), m.d());
    }
    Ok(p)
}

/// Direct formulas for four small families.
pub mod closed_form {
    use super::TriangularProduct;

    /// `A(k) = [[1, b(k)], [0, 1]]`: `P_n = [[1, Σ b], [0, 1]]`.
    pub fn unit_diagonal(b: &[f64]) -> TriangularProduct {
        let sum: f64 = b.iter().sum();
        TriangularProduct { n: b.len(), log_alpha: 0.0, log_delta: 0.0, log_s: sum.ln() }
    }

    /// `A(k) = [[2, b(k)], [0, 1]]`: `P_n = [[2ⁿ, Σ 2^{i−1} b(ω_i)], [0, 1]]`.
    pub fn expanding_top(b: &[f64]) -> TriangularProduct {
        let n = b.len();
        let beta: f64 = b.iter().enumerate().map(|(i, bi)| 2f64.powi(i as i32) * bi).sum();
        TriangularProduct { n, log_alpha: n as f64 * 2f64.ln(), log_delta: 0.0, log_s: beta.ln() }
    }

    /// `A(k) = [[1, b(k)], [0, 2]]`: `P_n = [[1, Σ 2^{n−i} b(ω_i)], [0, 2ⁿ]]`,
    /// so `s_n = Σ 2^{−i} b(ω_i)`.
    pub fn expanding_bottom(b: &[f64]) -> TriangularProduct {
        let n = b.len();
        let s: f64 = b.iter().enumerate().map(|(i, bi)| 2f64.powi(-(i as i32) - 1) * bi).sum();
        TriangularProduct { n, log_alpha: 0.0, log_delta: n as f64 * 2f64.ln(), log_s: s.ln() }
    }

    /// `A(0) = [[2, 2], [0, 1]]`, `A(1) = [[1, 1], [0, 2]]`:
    /// `P_n = [[2^{k0(n)}, 2^{k1(n)} Σ_i 2^{k0(i) − k1(i)}], [0, 2^{k1(n)}]]`
    /// with `k_j(i)` the number of `j` among the first `i` symbols.
    pub fn balanced_walk(symbols: &[usize]) -> TriangularProduct {
        let ln2 = 2f64.ln();
        let (mut k0, mut k1) = (0i64, 0i64);
        let mut log_s = f64::NEG_INFINITY;
        for &w in symbols {
            if w == 0 {
                k0 += 1;
            } else {
                k1 += 1;
            }
            log_s = super::log_add_exp(log_s, (k0 - k1) as f64 * ln2);
        }
        TriangularProduct { n: symbols.len(), log_alpha: k0 as f64 * ln2, log_delta: k1 as f64 * ln2, log_s }
    }
}

pub const LIMIT_REL_TOL: f64 = 1e-12;

/// Predicted limit of `P_nV / ‖P_nV‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PnvLimit {
    Limit {
        vector: ColumnVector2,
        /// Bound on `s − s_n` at truncation (0 when `s` is not needed).
        tail_bound: f64,
        steps_used: u64,
        /// False if the tail bound was still above tolerance at `max_steps`.
        converged: bool,
    },
    Undetermined(String),
}

/// The limit of `P_nV / ‖P_nV‖₁` in the triangular regimes:
/// `(1, 0)` when `p ≥ q`; `(s/(s+1), 1/(s+1))` when `p < q` and `V` has a
/// nonnull second entry, `(1, 0)` otherwise. `s` is accumulated until
/// `(α_n/δ_n) · max(b/d) / (1 − √(p/q))` falls below `1e−12 · s_n`. The
/// lower-triangular case is handled by swapping coordinates.
pub fn limit_of_pnv(e: &MatrixEnsemble, source: &SymbolSource, v: ColumnVector2, max_steps: u64) -> Result<PnvLimit> {
    if !v.is_nonnegative() || v.norm1() == 0.0 {
        return Err(Error::InvalidVector(format!("({}, {}) must be nonnegative and nonzero", v.x, v.y)));
    }
    let report = classify(e);
    let (upper, v) = match report.regime {
        Regime::TriangularUpper => (e.clone(), v),
        Regime::TriangularLower => (swap_ensemble(e)?, ColumnVector2::new_unchecked(v.y, v.x)),
        other => return Ok(PnvLimit::Undetermined(format!("no closed-form limit in the {other:?} regime"))),
    };
    let swap_back = report.regime == Regime::TriangularLower;
    let finish = |x: ColumnVector2| if swap_back { ColumnVector2::new_unchecked(x.y, x.x) } else { x };
    let e1 = ColumnVector2::new_unchecked(1.0, 0.0);

    let pq = pq_constants(&upper)?;
    if pq.ordering() != std::cmp::Ordering::Less || v.y == 0.0 {
        return Ok(PnvLimit::Limit { vector: finish(e1), tail_bound: 0.0, steps_used: 0, converged: true });
    }

    let max_ratio = upper.matrices().iter().map(|m| m.b() / m.d()).fold(0.0, f64::max);
    let log_contraction = (1.0 - (0.5 * pq.log_margin).exp()).ln();
    let mut p = TriangularProduct::identity();
    let traj = run(&upper, source, None, max_steps, Some(1))?;
    let ms = upper.matrices();
    let mut tail_bound = f64::INFINITY;
    let mut converged = false;
    for rec in traj {
        let m = &ms[rec.symbol];
        p = p.step(m.a(), m.b(), m.d());
        let log_tail = p.log_alpha - p.log_delta + max_ratio.ln() - log_contraction;
        tail_bound = log_tail.exp();
        if p.log_s.is_finite() && log_tail < p.log_s + LIMIT_REL_TOL.ln() {
            converged = true;
            break;
        }
    }
    let s = p.s();
    let vector = ColumnVector2::new_unchecked(s / (s + 1.0), 1.0 / (s + 1.0));
    Ok(PnvLimit::Limit { vector: finish(vector), tail_bound, steps_used: p.n as u64, converged })
}

fn swap_ensemble(e: &MatrixEnsemble) -> Result<MatrixEnsemble> {
    let ms = e.matrices().iter().map(|m| Matrix2::from_raw(m.d(), m.c(), m.b(), m.a())).collect();
    MatrixEnsemble::new(ms, e.probs().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn m(a: f64, b: f64, c: f64, d: f64) -> Matrix2 {
        Matrix2::new(a, b, c, d).unwrap()
    }

    #[test]
    fn unit_diagonal_sum() {
        let e = MatrixEnsemble::uniform(vec![m(1.0, 0.5, 0.0, 1.0), m(1.0, 3.0, 0.0, 1.0)]).unwrap();
        let syms = [0, 1, 1, 0, 1];
        let p = triangular_oracle(&e, &syms).unwrap();
        assert_relative_eq!(p.s(), 10.0, max_relative = 1e-14);
        assert_relative_eq!(closed_form::unit_diagonal(&[0.5, 3.0, 3.0, 0.5, 3.0]).s(), 10.0, max_relative = 1e-14);
    }

    #[test]
    fn expanding_top_matches_oracle() {
        let bs = [1.0, 0.0, 2.0, 1.0];
        let e =
            MatrixEnsemble::uniform(vec![m(2.0, 0.0, 0.0, 1.0), m(2.0, 1.0, 0.0, 1.0), m(2.0, 2.0, 0.0, 1.0)]).unwrap();
        let syms: Vec<usize> = bs.iter().map(|b| *b as usize).collect();
        let p = triangular_oracle(&e, &syms).unwrap().matrix().unwrap();
        let c = closed_form::expanding_top(&bs).matrix().unwrap();
        // β_4 = 1 + 0 + 8 + 8
        assert_relative_eq!(c.b(), 17.0, max_relative = 1e-14);
        assert_relative_eq!(p.b(), c.b(), max_relative = 1e-14);
        assert_relative_eq!(p.a(), 16.0, max_relative = 1e-14);
    }

    #[test]
    fn expanding_bottom_geometric_limit() {
        let e = MatrixEnsemble::uniform(vec![m(1.0, 1.0, 0.0, 2.0)]).unwrap();
        let p = triangular_oracle(&e, &[0; 60]).unwrap();
        assert_relative_eq!(p.s(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(closed_form::expanding_bottom(&[1.0; 20]).s(), 1.0 - 2f64.powi(-20), max_relative = 1e-15);
    }

    #[test]
    fn balanced_walk_matches_oracle() {
        let e = MatrixEnsemble::uniform(vec![m(2.0, 2.0, 0.0, 1.0), m(1.0, 1.0, 0.0, 2.0)]).unwrap();
        let syms = crate::engine::sample_symbols(5, e.probs(), 500).unwrap();
        let a = triangular_oracle(&e, &syms).unwrap();
        let b = closed_form::balanced_walk(&syms);
        assert_abs_diff_eq!(a.log_alpha, b.log_alpha, epsilon = 1e-10);
        assert_abs_diff_eq!(a.log_delta, b.log_delta, epsilon = 1e-10);
        assert_relative_eq!(a.log_s, b.log_s, max_relative = 1e-12);
    }

    #[test]
    fn oracle_rejects_non_triangular() {
        let e = MatrixEnsemble::uniform(vec![m(1.0, 1.0, 1.0, 1.0)]).unwrap();
        assert!(triangular_oracle(&e, &[0]).is_err());
    }

    #[test]
    fn limits() {
        let v01 = ColumnVector2::new(0.0, 1.0).unwrap();
        let v10 = ColumnVector2::new(1.0, 0.0).unwrap();
        let src = SymbolSource::seeded(1);

        let dominant_top = MatrixEnsemble::uniform(vec![m(2.0, 1.0, 0.0, 1.0)]).unwrap();
        let PnvLimit::Limit { vector, .. } = limit_of_pnv(&dominant_top, &src, v01, 100).unwrap() else { panic!() };
        assert_eq!(vector, v10);

        let bottom = MatrixEnsemble::uniform(vec![m(1.0, 1.0, 0.0, 2.0)]).unwrap();
        let PnvLimit::Limit { vector, converged, steps_used, tail_bound } =
            limit_of_pnv(&bottom, &src, v01, 1000).unwrap()
        else {
            panic!()
        };
        assert!(converged);
        assert!(steps_used < 60);
        assert!(tail_bound < 1e-12);
        assert_abs_diff_eq!(vector.x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vector.y, 0.5, epsilon = 1e-12);

        let PnvLimit::Limit { vector, .. } = limit_of_pnv(&bottom, &src, v10, 1000).unwrap() else { panic!() };
        assert_eq!(vector, v10);

        // A^n = [[2^n, 0], [2^n - 1, 1]]
        let lower = MatrixEnsemble::uniform(vec![m(2.0, 0.0, 1.0, 1.0)]).unwrap();
        let PnvLimit::Limit { vector, .. } = limit_of_pnv(&lower, &src, v10, 1000).unwrap() else { panic!() };
        assert_abs_diff_eq!(vector.x, 0.5, epsilon = 1e-12);
        let PnvLimit::Limit { vector, .. } = limit_of_pnv(&lower, &src, v01, 1000).unwrap() else { panic!() };
        assert_eq!(vector, v01);

        let positive = MatrixEnsemble::uniform(vec![m(1.0, 1.0, 1.0, 2.0)]).unwrap();
        assert!(matches!(limit_of_pnv(&positive, &src, v01, 10).unwrap(), PnvLimit::Undetermined(_)));
    }
}
