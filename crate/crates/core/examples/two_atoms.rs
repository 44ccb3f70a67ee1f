//! Two source atoms on the horizontal axis against two target atoms on the
//! vertical axis. At height π/2 the sliced velocity vanishes although the
//! measures differ; at height 1 the atoms move.
//!
//! ```text
//! cargo run --release --example two_atoms
//! ```

use std::f64::consts::FRAC_PI_2;

use swflow::measures::{direction_set, DirectionMode, ParticleCloud};
use swflow::sliced::evaluate;

fn main() -> swflow::Result<()> {
    let source = ParticleCloud::from_rows(&[[-1.0, 0.0], [1.0, 0.0]])?;
    let dirs = direction_set(2, 4096, DirectionMode::Grid2d, 0)?;

    for a in [FRAC_PI_2, 1.0, 2.0] {
        let target = ParticleCloud::from_rows(&[[0.0, -a], [0.0, a]])?;
        let eval = evaluate(&source, &target, &dirs)?;
        // continuum value of the first velocity component at (1, 0): a/π - 1/2
        println!(
            "a = {a:.4}: sw2^2 {:.4}, v(1,0) = ({:+.6}, {:+.6}), a/π - 1/2 = {:+.6}",
            eval.sw2_sq,
            eval.velocity.vector(1)[0],
            eval.velocity.vector(1)[1],
            a / std::f64::consts::PI - 0.5,
        );
    }
    Ok(())
}
