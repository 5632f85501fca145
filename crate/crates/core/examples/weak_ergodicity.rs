//! Positive members pull the columns of P_n together: d_H(P_n) drops at
//! least as fast as the product of the Birkhoff coefficients.

use rmp2::engine::{run, sample_symbols, SymbolSource};
use rmp2::mat2::{birkhoff_coefficient, hilbert_distance};
use rmp2::{Matrix2, MatrixEnsemble};

fn main() -> rmp2::Result<()> {
    let e = MatrixEnsemble::uniform(vec![Matrix2::new(1.0, 2.0, 1.0, 1.0)?, Matrix2::new(3.0, 1.0, 1.0, 2.0)?])?;
    let n = 12;
    let symbols = sample_symbols(5, e.probs(), n)?;
    let source = SymbolSource::Explicit(symbols.clone());

    let first = &e.matrices()[symbols[0]];
    let mut bound = hilbert_distance(first);
    println!("{:>4} {:>14} {:>14}", "n", "d_H(P_n)", "bound");
    for r in run(&e, &source, None, n as u64, Some(1))? {
        if r.step > 1 {
            bound *= birkhoff_coefficient(&e.matrices()[r.symbol]);
        }
        println!("{:>4} {:>14.6e} {:>14.6e}", r.step, r.d_h, bound);
    }
    Ok(())
}
