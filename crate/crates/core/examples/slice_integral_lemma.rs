//! Averages of integrals over central hyperplanes against the weighted volume
//! integral `c_d ∫ f(x)/|x| dx`, for ball indicators and a Gaussian.
//!
//! ```text
//! cargo run --release --example slice_integral_lemma
//! ```

use swflow::measures::{direction_set, DirectionMode};
use swflow::sliced::{slice_integral_check, slice_prefactor, IntegrationGrid};

fn main() -> swflow::Result<()> {
    let grid = IntegrationGrid {
        angular_cells: 128,
        ..IntegrationGrid::default()
    };
    for d in [2, 3] {
        let dirs = direction_set(d, 64, DirectionMode::default_for(d), 1)?;
        println!("d = {d}, c_d = {:.12}", slice_prefactor(d));
        for r in [0.5, 1.0, 2.0] {
            let ball = |x: &[f64]| f64::from(x.iter().map(|c| c * c).sum::<f64>() <= r * r);
            let s = slice_integral_check(ball, d, &dirs, grid)?;
            println!("  ball r = {r}: lhs {:.6}  rhs {:.6}  rel {:.1e}", s.lhs, s.rhs, s.relative_error());
        }
        let gauss = |x: &[f64]| (-0.5 * x.iter().map(|c| c * c).sum::<f64>()).exp();
        let s = slice_integral_check(gauss, d, &dirs, grid)?;
        println!("  gaussian:   lhs {:.6}  rhs {:.6}  rel {:.1e}", s.lhs, s.rhs, s.relative_error());
    }

    // f/|x| is not integrable at the origin when f ~ |x|^{-(d-1)}
    let dirs = direction_set(2, 16, DirectionMode::Grid2d, 0)?;
    let singular = |x: &[f64]| 1.0 / x[0].hypot(x[1]);
    match slice_integral_check(singular, 2, &dirs, grid) {
        Ok(s) => println!("singular integrand accepted: {s:?}"),
        Err(e) => println!("singular integrand rejected: {e}"),
    }
    Ok(())
}
