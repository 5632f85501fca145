//! Finite families of matrices with a probability vector, and their
//! classification into structural regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{left_eigenvectors, ColumnVector2, Matrix2};

/// Tolerance on `Σ p_k = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Relative tolerance for projective equality of eigen-directions.
pub const EIGEN_DIRECTION_TOL: f64 = 1e-10;
/// Relative tolerance used to call `log p` and `log q` tied.
pub const PQ_TIE_TOL: f64 = 1e-12;

/// Matrices `A(0..s)` drawn i.i.d. with probabilities `p_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixEnsemble {
    matrices: Vec<Matrix2>,
    probs: Vec<f64>,
}

impl MatrixEnsemble {
    pub fn new(matrices: Vec<Matrix2>, probs: Vec<f64>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidEnsemble("the ensemble needs at least one matrix".into()));
        }
        if matrices.len() != probs.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} matrices but {} probabilities",
                matrices.len(),
                probs.len()
            )));
        }
        if let Some((k, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidEnsemble(format!("probability p_{k} = {p} must be positive")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidEnsemble(format!("probabilities sum to {total}, not 1")));
        }
        Ok(MatrixEnsemble { matrices, probs })
    }

    /// Equal weights `1/s`.
    pub fn uniform(matrices: Vec<Matrix2>) -> Result<Self> {
        let s = matrices.len().max(1);
        let probs = vec![1.0 / s as f64; matrices.len()];
        Self::new(matrices, probs)
    }

    pub fn matrices(&self) -> &[Matrix2] {
        &self.matrices
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn members(&self) -> impl Iterator<Item = (&Matrix2, f64)> {
        self.matrices.iter().zip(self.probs.iter().copied())
    }

    /// Entrywise sum `A* = Σ_k A(k)`.
    pub fn sum_matrix(&self) -> Matrix2 {
        let mut e = [0.0; 4];
        for m in &self.matrices {
            for (acc, v) in e.iter_mut().zip(m.entries()) {
                *acc += v;
            }
        }
        Matrix2::from_raw(e[0], e[1], e[2], e[3])
    }

    pub fn transposed(&self) -> MatrixEnsemble {
        MatrixEnsemble { matrices: self.matrices.iter().map(Matrix2::transpose).collect(), probs: self.probs.clone() }
    }

    /// Smallest nonnull entry and largest entry over all members.
    pub fn entry_bounds(&self) -> Option<(f64, f64)> {
        let entries = self.matrices.iter().flat_map(|m| m.entries());
        let min = entries.clone().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        let max = entries.fold(0.0, f64::max);
        (max > 0.0).then_some((min, max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    RankOneMember,
    EventuallyPositive,
    TriangularUpper,
    TriangularLower,
    AllDiagonal,
    AntidiagonalPresent,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LyapunovOrder {
    Lambda2LessLambda1,
    Equal,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnConvergence {
    ExponentialSameLimit,
    ExponentialDistinctLimits,
    SubExponential,
    ConstantColumns,
    Divergent,
    Undetermined,
}

/// What the theory predicts for `P_n / ‖P_n‖`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixBehavior {
    /// No common left eigenvector: the normalized product diverges a.s.
    Diverges,
    /// The normalized product converges (triangular with p < q, diagonal with p ≠ q).
    Converges,
    /// The theory does not decide convergence here.
    Unspecified,
}

/// Geometric means of the diagonal entries and the margin between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PqConstants {
    pub p: f64,
    pub q: f64,
    /// `Σ p_k log a(k) − Σ p_k log d(k)`.
    pub log_margin: f64,
}

impl PqConstants {
    /// Sign of `p − q` with ties declared within [`PQ_TIE_TOL`].
    pub fn ordering(&self) -> std::cmp::Ordering {
        let scale = self.p.ln().abs().max(self.q.ln().abs()).max(1.0);
        if self.log_margin.abs() <= PQ_TIE_TOL * scale {
            std::cmp::Ordering::Equal
        } else if self.log_margin > 0.0 {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Less
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub p_const: Option<f64>,
    pub q_const: Option<f64>,
    /// `log p − log q`, reported so near-ties are visible.
    pub pq_log_margin: Option<f64>,
    pub expected_lyapunov_order: LyapunovOrder,
    pub expected_column_convergence: ColumnConvergence,
    pub expected_matrix_behavior: MatrixBehavior,
    pub common_left_eigenvector: Option<ColumnVector2>,
    /// Limit of the normalized columns when it is deterministic.
    pub column_limit: Option<ColumnVector2>,
    /// Whether some member is not diagonal, the standing hypothesis of the
    /// column-convergence dichotomy.
    pub some_member_not_diagonal: bool,
    pub rationale: String,
}

impl RegimeReport {
    pub fn summary(&self) -> String {
        let order = match self.expected_lyapunov_order {
            LyapunovOrder::Lambda2LessLambda1 => "λ2<λ1",
            LyapunovOrder::Equal => "λ1=λ2",
            LyapunovOrder::Undetermined => "λ order undetermined",
        };
        let cols = match self.expected_column_convergence {
            ColumnConvergence::ExponentialSameLimit => "exponential same-limit columns",
            ColumnConvergence::ExponentialDistinctLimits => "exponential convergence, limit depends on ω",
            ColumnConvergence::SubExponential => "sub-exponential same-limit columns",
            ColumnConvergence::ConstantColumns => "eventually constant columns",
            ColumnConvergence::Divergent => "column divergence",
            ColumnConvergence::Undetermined => "column behavior undetermined",
        };
        format!("{:?}; predict {order}, {cols}", self.regime)
    }
}

/// `exp(Σ p_k log a(k))` and `exp(Σ p_k log d(k))`.
pub fn pq_constants(e: &MatrixEnsemble) -> Result<PqConstants> {
    let mut log_p = 0.0;
    let mut log_q = 0.0;
    for (k, (m, w)) in e.members().enumerate() {
        if m.a() == 0.0 || m.d() == 0.0 {
            return Err(Error::Domain(format!("member {k} has a zero diagonal entry; p and q need a(k), d(k) > 0")));
        }
        log_p += w * m.a().ln();
        log_q += w * m.d().ln();
    }
    Ok(PqConstants { p: log_p.exp(), q: log_q.exp(), log_margin: log_p - log_q })
}

/// `Σ p_k log|det A(k)|`, `-inf` as soon as one member is singular.
pub fn expected_log_det(e: &MatrixEnsemble) -> f64 {
    e.members().map(|(m, w)| w * m.det().abs().ln()).sum()
}

fn is_left_eigen_direction(m: &Matrix2, v: &ColumnVector2) -> bool {
    let w = m.left_mul_row(*v);
    let wn = w.norm1();
    if wn == 0.0 {
        return true;
    }
    let value = (w.x * v.x + w.y * v.y) / (v.x * v.x + v.y * v.y);
    let residual = (w.x - value * v.x).abs() + (w.y - value * v.y).abs();
    residual <= EIGEN_DIRECTION_TOL * wn
}

fn is_scalar(m: &Matrix2) -> bool {
    m.is_diagonal() && m.a() == m.d()
}

/// A row direction that is a left eigenvector of every member, if any.
pub fn common_left_eigenvector(e: &MatrixEnsemble) -> Option<ColumnVector2> {
    let constraining: Vec<&Matrix2> = e.matrices().iter().filter(|m| !is_scalar(m)).collect();
    let Some(first) = constraining.first() else {
        return Some(ColumnVector2::new_unchecked(1.0, 0.0));
    };
    left_eigenvectors(first)
        .into_iter()
        .map(|p| p.direction)
        .find(|v| constraining.iter().all(|m| is_left_eigen_direction(m, v)))
}

/// Regime label plus the predictions attached to it.
pub fn classify(e: &MatrixEnsemble) -> RegimeReport {
    let star = e.sum_matrix();
    let common = common_left_eigenvector(e);
    let some_member_not_diagonal = e.matrices().iter().any(|m| !m.is_diagonal());
    let mut report = RegimeReport {
        regime: Regime::Undetermined,
        p_const: None,
        q_const: None,
        pq_log_margin: None,
        expected_lyapunov_order: LyapunovOrder::Undetermined,
        expected_column_convergence: ColumnConvergence::Undetermined,
        expected_matrix_behavior: if common.is_none() { MatrixBehavior::Diverges } else { MatrixBehavior::Unspecified },
        common_left_eigenvector: common,
        column_limit: None,
        some_member_not_diagonal,
        rationale: String::new(),
    };

    if e.matrices().iter().any(|m| m.det() == 0.0) {
        report.regime = Regime::RankOneMember;
        report.expected_column_convergence = ColumnConvergence::ConstantColumns;
        report.expected_lyapunov_order = if e.matrices().iter().any(Matrix2::is_zero) {
            LyapunovOrder::Undetermined
        } else {
            LyapunovOrder::Lambda2LessLambda1
        };
        report.rationale = "a member has rank one: once it occurs the normalized columns are constant \
                            and equal, and λ2 = -inf"
            .into();
        return report;
    }

    let star_triangular = star.is_upper_triangular() || star.is_lower_triangular();
    if !star_triangular && e.matrices().iter().any(|m| m.nonnull_count() >= 3) {
        report.regime = Regime::EventuallyPositive;
        report.expected_lyapunov_order = LyapunovOrder::Lambda2LessLambda1;
        report.expected_column_convergence = ColumnConvergence::ExponentialSameLimit;
        report.rationale = "A* is not triangular and a member has three or more nonnull entries: \
                            P_n is eventually positive, the Birkhoff chain contracts, weak ergodicity holds"
            .into();
        return report;
    }

    if star_triangular && !star.is_diagonal() {
        let upper = star.is_upper_triangular();
        let pq = pq_constants(e).expect("rank-two triangular members have a positive diagonal");
        report.regime = if upper { Regime::TriangularUpper } else { Regime::TriangularLower };
        report.p_const = Some(pq.p);
        report.q_const = Some(pq.q);
        report.pq_log_margin = Some(pq.log_margin);
        // The lower case is the upper case conjugated by the coordinate swap,
        // which exchanges the roles of p and q.
        let order = if upper { pq.ordering() } else { pq.ordering().reverse() };
        let dominant =
            if upper { ColumnVector2::new_unchecked(1.0, 0.0) } else { ColumnVector2::new_unchecked(0.0, 1.0) };
        use std::cmp::Ordering::*;
        match order {
            Greater => {
                report.expected_lyapunov_order = LyapunovOrder::Lambda2LessLambda1;
                report.expected_column_convergence = ColumnConvergence::ExponentialSameLimit;
                report.column_limit = Some(dominant);
                report.rationale = "A* triangular, not diagonal; dominant diagonal geometric mean wins: \
                                    columns converge exponentially to the common limit"
                    .into();
            }
            Equal => {
                report.expected_lyapunov_order = LyapunovOrder::Equal;
                report.expected_column_convergence = ColumnConvergence::SubExponential;
                report.column_limit = Some(dominant);
                report.rationale = "A* triangular, not diagonal, p = q: columns converge to the common \
                                    limit but not exponentially, λ1 = λ2"
                    .into();
            }
            Less => {
                report.expected_lyapunov_order = LyapunovOrder::Lambda2LessLambda1;
                report.expected_column_convergence = ColumnConvergence::ExponentialDistinctLimits;
                report.expected_matrix_behavior = MatrixBehavior::Converges;
                report.rationale = "A* triangular, not diagonal, off-diagonal side dominates: columns and the \
                                    normalized product converge exponentially, the limit depends on ω"
                    .into();
            }
        }
        return report;
    }

    let all_two_nonnull = e.matrices().iter().all(|m| m.nonnull_count() == 2);
    if all_two_nonnull && e.matrices().iter().all(Matrix2::is_diagonal) {
        let pq = pq_constants(e).expect("rank-two diagonal members have a positive diagonal");
        report.regime = Regime::AllDiagonal;
        report.p_const = Some(pq.p);
        report.q_const = Some(pq.q);
        report.pq_log_margin = Some(pq.log_margin);
        report.expected_column_convergence = ColumnConvergence::ConstantColumns;
        if pq.ordering() == std::cmp::Ordering::Equal {
            report.expected_lyapunov_order = LyapunovOrder::Equal;
            report.rationale = "all members diagonal with p = q: λ1 = λ2, P_nV need not converge".into();
        } else {
            report.expected_lyapunov_order = LyapunovOrder::Lambda2LessLambda1;
            report.expected_matrix_behavior = MatrixBehavior::Converges;
            report.rationale =
                "all members diagonal with p ≠ q: λ2 < λ1, P_nV and the normalized product converge exponentially"
                    .into();
        }
        return report;
    }

    if all_two_nonnull && e.matrices().iter().any(Matrix2::is_antidiagonal) {
        report.regime = Regime::AntidiagonalPresent;
        report.expected_lyapunov_order = LyapunovOrder::Equal;
        report.expected_column_convergence = ColumnConvergence::Divergent;
        report.rationale = "every member has two nonnull entries and one is antidiagonal: both normalized \
                            columns diverge and λ1 = λ2"
            .into();
        return report;
    }

    report.rationale = "the member patterns match none of the treated cases".into();
    report
}
