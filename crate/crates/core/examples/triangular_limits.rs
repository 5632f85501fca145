//! Closed-form triangular products and the predicted limit of P_nV.

use rmp2::analysis::{closed_form, limit_of_pnv, triangular_oracle, PnvLimit};
use rmp2::engine::{run, sample_symbols, SymbolSource};
use rmp2::{ColumnVector2, Matrix2, MatrixEnsemble};

fn main() -> rmp2::Result<()> {
    let e = MatrixEnsemble::uniform(vec![Matrix2::new(1.0, 0.0, 0.0, 2.0)?, Matrix2::new(1.0, 1.0, 0.0, 2.0)?])?;
    let symbols = sample_symbols(9, e.probs(), 80)?;

    let oracle = triangular_oracle(&e, &symbols)?;
    let b: Vec<f64> = symbols.iter().map(|k| *k as f64).collect();
    let closed = closed_form::expanding_bottom(&b);
    println!("s from the oracle      {:.15}", oracle.s());
    println!("s from the closed form {:.15}", closed.s());

    let v = ColumnVector2::new(0.0, 1.0)?;
    let source = SymbolSource::Explicit(symbols.clone());
    let last = run(&e, &source, Some(v), 80, Some(80))?.last().expect("one record");
    let pnv = last.pnv.expect("P_nV is nonzero");
    println!("P_80 V / |P_80 V|      ({:.15}, {:.15})", pnv.x, pnv.y);

    match limit_of_pnv(&e, &source, v, 80)? {
        PnvLimit::Limit { vector, tail_bound, steps_used, .. } => {
            println!("predicted limit        ({:.15}, {:.15})", vector.x, vector.y);
            println!("  after {steps_used} steps, tail bound {tail_bound:.2e}");
        }
        PnvLimit::Undetermined(why) => println!("no prediction: {why}"),
    }
    Ok(())
}
