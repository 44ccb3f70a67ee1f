//! When the target is a translate of the source by `u`, every particle moves
//! with velocity `u/d`.
//!
//! ```text
//! cargo run --release --example translation_field
//! ```

use swflow::measures::{direction_set, sample_scenario, DirectionMode, ScenarioKind, ScenarioSpec};
use swflow::sliced::velocity_field;

fn main() -> swflow::Result<()> {
    let u = [1.0, -0.5, 2.0];
    for d in [2, 3] {
        let spec = ScenarioSpec::new(
            ScenarioKind::Gaussian {
                mean: vec![0.0],
                scale: vec![1.0],
            },
            d,
            500,
            1,
        );
        let rho = sample_scenario(&spec)?;
        let nu = rho.translated(&u[..d])?;
        let (mode, m) = if d == 2 {
            (DirectionMode::Grid2d, 64)
        } else {
            (DirectionMode::AntitheticMonteCarlo, 20_000)
        };
        let v = velocity_field(&rho, &nu, &direction_set(d, m, mode, 3)?)?;
        let worst = (0..v.len())
            .map(|i| {
                v.vector(i)
                    .iter()
                    .zip(&u)
                    .map(|(a, b)| (a - b / d as f64).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        println!("d = {d}, {} {m}: max |v - u/d| = {worst:.3e}", mode.name());
    }
    Ok(())
}
