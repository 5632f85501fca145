//! Predicted versus observed behaviour for each preset, at reduced size.

use rmp2::analysis::analyze;
use rmp2::cli::{preset_names, RunConfig};
use rmp2::engine::BatchSpec;

fn main() -> rmp2::Result<()> {
    for name in preset_names() {
        let cfg = RunConfig::preset(name)?;
        let spec = BatchSpec {
            master_seed: cfg.seed,
            n_trajectories: cfg.trajectories.min(8),
            start: cfg.vector,
            n_steps: cfg.steps.min(5_000),
            record_every: None,
        };
        let v = analyze(&cfg.ensemble, &spec, &cfg.thresholds)?;
        println!("{name}: {}", if v.agree { "agree" } else { "CONTRADICTION" });
        for c in &v.claims {
            println!("  {:<30} {:?}", c.name, c.status);
        }
    }
    Ok(())
}
