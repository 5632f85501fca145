//! Monte Carlo Lyapunov exponents for the balanced-walk ensemble, whose two
//! exponents both equal log(2)/2.

use rmp2::analysis::{estimate_lyapunov, summarize};
use rmp2::cli::RunConfig;
use rmp2::engine::BatchSpec;

fn main() -> rmp2::Result<()> {
    let cfg = RunConfig::preset("example-4")?;
    let spec = BatchSpec { master_seed: 1, n_trajectories: 16, start: None, n_steps: 20_000, record_every: None };
    let summaries = summarize(&cfg.ensemble, &spec)?;
    let est = estimate_lyapunov(summaries.iter().map(|s| &s.last))?;
    println!("lambda1 = {:.5} +- {:.5}", est.lambda1_hat, est.stderr1);
    println!("lambda2 = {:.5} +- {:.5}", est.lambda2_hat, est.stderr2);
    println!("log(2)/2 = {:.5}", 0.5 * 2f64.ln());
    Ok(())
}
