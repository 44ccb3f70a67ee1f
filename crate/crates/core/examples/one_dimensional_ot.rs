//! Exact optimal transport on the line: sorted matching for equal-size
//! samples, quantile coupling for weighted atoms.
//!
//! ```text
//! cargo run --release --example one_dimensional_ot
//! ```

use swflow::ot1d::{monotone_map, tie_averaged_map, w2_sq_1d, Projection1D};

fn main() -> swflow::Result<()> {
    let x = Projection1D::uniform(&[0.3, -1.2, 2.0, 0.3])?;
    let y = Projection1D::uniform(&[5.0, 4.0, 7.0, 6.0])?;

    println!("source     {:?}", [0.3, -1.2, 2.0, 0.3]);
    println!("monotone   {:?}", monotone_map(&x, &y)?);
    // the two particles at 0.3 share the mean of their images
    println!("tie-avg    {:?}", tie_averaged_map(&x, &y)?);
    println!("W2^2       {:.6}", w2_sq_1d(&x, &y)?);

    // mass 3/4 at 1 has to split between the target atoms 0 and 1
    let weighted = Projection1D::from_values(&[0.0, 1.0], &[0.25, 0.75])?;
    let two = Projection1D::uniform(&[0.0, 1.0])?;
    println!("weighted W2^2 {:.6} (exact 0.25)", w2_sq_1d(&weighted, &two)?);
    Ok(())
}
