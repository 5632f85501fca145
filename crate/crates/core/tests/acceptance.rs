//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rmp2::analysis::{estimate_lyapunov, observe, rank_one_gap, summarize, triangular_oracle, RateClass};
use rmp2::cli::{cmd_simulate, OutputFormat, RunConfig};
use rmp2::engine::{run, sample_symbols, BatchSpec, SymbolSource, TrajectoryRecord};
use rmp2::mat2::{birkhoff_coefficient, dinf_distance, hilbert_distance, multiply};
use rmp2::{ColumnVector2, Matrix2, MatrixEnsemble};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn batch(cfg: &RunConfig) -> BatchSpec {
    BatchSpec {
        master_seed: cfg.seed,
        n_trajectories: cfg.trajectories,
        start: cfg.vector,
        n_steps: cfg.steps,
        record_every: cfg.record_every,
    }
}

fn preset(name: &str, steps: u64, trajectories: usize) -> RunConfig {
    let mut cfg = RunConfig::preset(name).expect("preset");
    cfg.steps = steps;
    cfg.trajectories = trajectories;
    cfg
}

fn observation(cfg: &RunConfig) -> rmp2::analysis::Observation {
    let summaries = summarize(&cfg.ensemble, &batch(cfg)).expect("simulation");
    observe(&summaries, &cfg.thresholds).expect("observation")
}

fn last_record(e: &MatrixEnsemble, symbols: Vec<usize>, start: Option<ColumnVector2>) -> TrajectoryRecord {
    let n = symbols.len() as u64;
    let source = SymbolSource::Explicit(symbols);
    run(e, &source, start, n, Some(n)).unwrap().last().unwrap()
}

fn log_uniform(rng: &mut StdRng, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.random_range(lo_exp..hi_exp))
}

fn c1_unit_shear() -> Outcome {
    let cfg = preset("example-1", 10_000, 16);
    let obs = observation(&cfg);
    let class = obs.column_distance.as_ref().map(|v| v.classification);
    let nd = obs.n_times_d_inf.unwrap_or(f64::NAN);
    outcome(
        class == Some(RateClass::SubExponential) && (0.1..=10.0).contains(&nd),
        format!("d_inf class {class:?}, n·d_inf {nd:.4}"),
    )
}

fn c2_expanding_bottom_pnv() -> Outcome {
    let e = MatrixEnsemble::uniform(vec![Matrix2::new(1.0, 1.0, 0.0, 2.0).unwrap()]).unwrap();
    let r = last_record(&e, vec![0; 60], Some(ColumnVector2::new(0.0, 1.0).unwrap()));
    let tol = 2f64.powi(-55);
    let Some(v) = r.pnv else {
        return outcome(false, "no P_nV");
    };
    let err = (v.x - 0.5).abs().max((v.y - 0.5).abs());
    outcome(err <= tol, format!("P_60 V = ({:e}, {:e}), max error {err:e}, tol {tol:e}", v.x, v.y))
}

fn c3_balanced_walk() -> Outcome {
    let cfg = preset("example-4", 100_000, 32);
    let obs = observation(&cfg);
    let target = 0.5 * 2f64.ln();
    let l = &obs.lyapunov;
    let class = obs.column_distance.as_ref().map(|v| v.classification);
    let ok = (l.lambda1_hat - target).abs() <= 0.02
        && (l.lambda2_hat - target).abs() <= 0.02
        && class == Some(RateClass::SubExponential);
    outcome(ok, format!("λ1 {:.6}, λ2 {:.6}, target {target:.6}, d_inf class {class:?}", l.lambda1_hat, l.lambda2_hat))
}

fn c4_positive_single_member() -> Outcome {
    let (a, b, c, d) = (1.0f64, 1.0f64, 1.0f64, 2.0f64);
    // Roots of μ² − tr·μ + det.
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let (mu1, mu2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
    let expected = (mu1 / mu2).ln();

    let e = MatrixEnsemble::uniform(vec![Matrix2::new(a, b, c, d).unwrap()]).unwrap();
    let r = last_record(&e, vec![0; 50], None);
    let est = estimate_lyapunov([&r]).unwrap();
    let g = rank_one_gap(&r).gap;
    let ok = (est.gap - expected).abs() <= 1e-6 && g < 1e-15;
    outcome(ok, format!("λ1−λ2 {:.12}, log(μ1/μ2) {expected:.12}, σ2/σ1 at n=50 {g:e}", est.gap))
}

fn c5_lower_bounds() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let slack = 1e-12;
    let (mut low_h, mut low_inf, mut order) = (0usize, 0usize, 0usize);
    for _ in 0..100_000 {
        let e: [f64; 4] = std::array::from_fn(|_| log_uniform(&mut rng, -3.0, 3.0));
        let m = Matrix2::new(e[0], e[1], e[2], e[3]).unwrap();
        let bound = m.det().abs() / m.frobenius_sq();
        let dh = hilbert_distance(&m);
        let di = dinf_distance(&m).unwrap();
        if dh < bound * (1.0 - slack) {
            low_h += 1;
        }
        if di < bound * (1.0 - slack) {
            low_inf += 1;
        }
        if di > dh * (1.0 + slack) {
            order += 1;
        }
    }
    outcome(
        low_h + low_inf + order == 0,
        format!("violations: d_H lower {low_h}, d_inf lower {low_inf}, d_inf ≤ d_H {order}"),
    )
}

fn c6_submultiplicativity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let chain: Vec<Matrix2> = (0..5)
            .map(|_| {
                let e: [f64; 4] = std::array::from_fn(|_| log_uniform(&mut rng, -2.0, 2.0));
                Matrix2::try_from(e).unwrap()
            })
            .collect();
        let product = chain[1..].iter().fold(chain[0], |p, m| multiply(&p, m).unwrap());
        let bound = hilbert_distance(&chain[0]) * chain[1..].iter().map(birkhoff_coefficient).product::<f64>();
        let excess = hilbert_distance(&product) - bound;
        worst = worst.max(excess);
        if excess > 1e-10 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("violations {violations}, largest excess {worst:e}"))
}

fn c7_triangular_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..1_000u64 {
        let s = rng.random_range(1..=4usize);
        let members: Vec<Matrix2> = (0..s)
            .map(|_| {
                let b = if rng.random_bool(0.2) { 0.0 } else { log_uniform(&mut rng, -2.0, 1.0) };
                Matrix2::new(log_uniform(&mut rng, -1.0, 1.0), b, 0.0, log_uniform(&mut rng, -1.0, 1.0)).unwrap()
            })
            .collect();
        let e = MatrixEnsemble::uniform(members).unwrap();
        let symbols = sample_symbols(case, e.probs(), 200).unwrap();
        let oracle = triangular_oracle(&e, &symbols).unwrap().unit();
        let engine = last_record(&e, symbols, None).unit_matrix;
        for (x, y) in engine.entries().iter().zip(oracle.entries()) {
            worst = worst.max((x - y).abs());
        }
    }
    outcome(worst <= 1e-10, format!("largest entrywise difference {worst:e}"))
}

fn c8_antidiagonal() -> Outcome {
    let cfg = preset("antidiagonal", 100_000, 32);
    let obs = observation(&cfg);
    let l = &obs.lyapunov;
    let three_se = 3.0 * (l.stderr1 + l.stderr2);
    let gap_ok = l.gap.abs() < three_se;
    let div_ok = obs.column_oscillation > cfg.thresholds.divergence_threshold;
    outcome(
        gap_ok && div_ok,
        format!(
            "|λ1−λ2| {:.4e} vs 3 SE {three_se:.4e} ({}), column oscillation {:.4} vs {:e} ({})",
            l.gap.abs(),
            if gap_ok { "ok" } else { "exceeds" },
            obs.column_oscillation,
            cfg.thresholds.divergence_threshold,
            if div_ok { "ok" } else { "below" },
        ),
    )
}

fn c9_matrix_divergence() -> Outcome {
    let tri = RunConfig::preset("example-3").unwrap();
    let free = RunConfig::preset("no-common-eigenvector").unwrap();
    let a = observation(&tri).matrix_oscillation;
    let b = observation(&free).matrix_oscillation;
    let thr = tri.thresholds.divergence_threshold;
    outcome(a < thr && b > thr, format!("example-3 {a:e}, no-common-eigenvector {b:.4}, threshold {thr:e}"))
}

fn simulate_bytes(cfg: &RunConfig, threads: usize) -> Vec<u8> {
    let mut out = Vec::new();
    cmd_simulate(cfg, Some(threads), &mut out).expect("simulate");
    out
}

fn c10_determinism() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for format in [OutputFormat::JsonLines, OutputFormat::Csv] {
        let mut cfg = preset("example-4", 2_000, 8);
        cfg.format = format;
        cfg.vector = Some(ColumnVector2::new(1.0, 1.0).unwrap());
        let first = simulate_bytes(&cfg, 1);
        let again = simulate_bytes(&cfg, 1);
        let wide = simulate_bytes(&cfg, 8);
        let same = !first.is_empty() && first == again && first == wide;
        ok &= same;
        details.push(format!("{format:?} {} bytes {}", first.len(), if same { "identical" } else { "differ" }));
    }
    outcome(ok, details.join(", "))
}

type Criterion = (u32, fn() -> Outcome, Duration);

fn main() {
    let secs = Duration::from_secs_f64;
    let criteria: [Criterion; 10] = [
        (1, c1_unit_shear, secs(5.0)),
        (2, c2_expanding_bottom_pnv, secs(0.1)),
        (3, c3_balanced_walk, secs(60.0)),
        (4, c4_positive_single_member, secs(0.1)),
        (5, c5_lower_bounds, secs(5.0)),
        (6, c6_submultiplicativity, secs(5.0)),
        (7, c7_triangular_oracle, secs(10.0)),
        (8, c8_antidiagonal, secs(60.0)),
        (9, c9_matrix_divergence, secs(60.0)),
        (10, c10_determinism, secs(10.0)),
    ];
    let mut failed = Vec::new();
    for (id, check, limit) in criteria {
        let t0 = Instant::now();
        let o = check();
        let took = t0.elapsed();
        let in_time = took < limit;
        let pass = o.pass && in_time;
        println!(
            "criterion {id:>2}: {}  [{:.3} s, limit {} s{}]  {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs_f64(),
            if in_time { "" } else { ", too slow" },
            o.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: {} of 10 criteria fail: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
