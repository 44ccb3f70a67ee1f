//! The 1D inequality `∫ μ'(T - id) <= E(ν) - E(μ)` on grid densities, with
//! `T` the monotone map from `μ` to `ν`. A translation gives equality, so
//! the check allows for the grid error.
//!
//! ```text
//! cargo run --release --example entropy_lemma
//! ```

use swflow::ot1d::{entropy_lemma_gap, Density1DGrid};

type Density = Box<dyn Fn(f64) -> f64>;

fn gaussian(mean: f64, sd: f64) -> impl Fn(f64) -> f64 {
    move |x| (-0.5 * ((x - mean) / sd).powi(2)).exp()
}

fn main() -> swflow::Result<()> {
    let mu = Density1DGrid::from_fn(-12.0, 12.0, 4000, gaussian(0.0, 1.0))?;
    let cases: [(&str, Density); 4] = [
        ("shift by 1", Box::new(gaussian(1.0, 1.0))),
        ("dilate by 2", Box::new(gaussian(0.0, 2.0))),
        ("shrink by 1/2", Box::new(gaussian(0.0, 0.5))),
        ("two bumps", Box::new(|x| gaussian(-2.0, 0.7)(x) + 0.5 * gaussian(2.5, 1.2)(x))),
    ];
    for (name, f) in cases {
        let nu = Density1DGrid::from_fn(-12.0, 12.0, 4000, f)?;
        let gap = entropy_lemma_gap(&mu, &nu)?;
        println!(
            "{name:14} lhs {:+.6}  rhs {:+.6}  holds {}",
            gap.lhs,
            gap.rhs,
            gap.holds(1e-5)
        );
    }
    Ok(())
}
