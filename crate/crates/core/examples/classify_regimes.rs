//! Regime classification of every bundled preset.

use rmp2::classify;
use rmp2::cli::{preset_names, RunConfig};

fn main() -> rmp2::Result<()> {
    for name in preset_names() {
        let cfg = RunConfig::preset(name)?;
        let report = classify(&cfg.ensemble);
        println!("{name:<22} {}", report.summary());
        println!("{:<22} {}", "", report.rationale);
    }
    Ok(())
}
