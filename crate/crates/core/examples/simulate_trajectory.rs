//! One seeded trajectory of the unit-diagonal shear ensemble, printed every
//! 1000 steps.

use rmp2::engine::{run, SymbolSource};
use rmp2::{Matrix2, MatrixEnsemble};

fn main() -> rmp2::Result<()> {
    let e = MatrixEnsemble::uniform(vec![Matrix2::IDENTITY, Matrix2::new(1.0, 1.0, 0.0, 1.0)?])?;
    let source = SymbolSource::seeded(42);
    println!("{:>6} {:>12} {:>12} {:>12}", "step", "log sigma1", "d_inf", "n*d_inf");
    for r in run(&e, &source, None, 10_000, Some(1000))? {
        let d = r.d_inf.unwrap_or(f64::NAN);
        println!("{:>6} {:>12.6} {:>12.4e} {:>12.6}", r.step, r.log_sigma1, d, r.step as f64 * d);
    }
    Ok(())
}
