//! Singular values, column distances and the Birkhoff coefficient of a few
//! matrices.

use rmp2::mat2::{birkhoff_coefficient, dinf_distance, hilbert_distance, left_eigenvectors, singular_values};
use rmp2::Matrix2;

fn main() -> rmp2::Result<()> {
    let cases = [
        Matrix2::new(1.0, 1.0, 1.0, 2.0)?,
        Matrix2::new(2.0, 1.0, 0.0, 1.0)?,
        Matrix2::new(1e-3, 5.0, 2.0, 1e3)?,
        Matrix2::new(1.0, 2.0, 1.0, 2.0)?,
    ];
    for m in cases {
        let sv = singular_values(&m);
        println!("{m}");
        println!("  sigma1 {:.6e}  sigma2 {:.6e}  |det| {:.6e}", sv.sigma1, sv.sigma2, m.det().abs());
        println!(
            "  d_H {:.6e}  d_inf {:.6e}  tau_B {:.6}",
            hilbert_distance(&m),
            dinf_distance(&m)?,
            birkhoff_coefficient(&m)
        );
        for pair in left_eigenvectors(&m) {
            println!("  left eigenvector ({:.6}, {:.6}) for {:.6}", pair.direction.x, pair.direction.y, pair.value);
        }
    }
    Ok(())
}
