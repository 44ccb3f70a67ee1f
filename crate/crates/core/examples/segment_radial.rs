//! A segment on the horizontal axis flowing toward a rotation-invariant
//! annulus. With symmetric directions and a mirror-symmetric target the
//! particles never leave the axis, so the flow cannot reach the target.
//!
//! ```text
//! cargo run --release --example segment_radial
//! ```

use swflow::flow::{run_flow, FlowConfig};
use swflow::measures::{sample_scenario, DirectionMode, ScenarioKind, ScenarioSpec};

fn main() -> swflow::Result<()> {
    let rho0 = sample_scenario(&ScenarioSpec::new(ScenarioKind::Segment { a: -1.0, b: 1.0 }, 2, 512, 1))?;
    let nu = sample_scenario(
        &ScenarioSpec::new(ScenarioKind::RadialAnnulus { r0: 1.0, r1: 2.0 }, 2, 512, 2).mirrored(),
    )?;

    let cfg = FlowConfig {
        tau: 0.05,
        t_max: 25.0,
        directions: 256,
        direction_mode: Some(DirectionMode::Grid2d),
        record_every: 50,
        record_trajectory: true,
        deterministic: true,
        ..FlowConfig::default()
    };
    let run = run_flow(&rho0, &nu, &cfg)?;
    for s in &run.snapshots {
        let off_axis = s.cloud.rows().map(|p| p[1].abs()).fold(0.0, f64::max);
        let spread = s.cloud.rows().map(|p| p[0].abs()).fold(0.0, f64::max);
        println!("t = {:5.2}  max |x2| = {off_axis:.1e}  max |x1| = {spread:.3}", s.time);
    }
    let min_sw2 = run.energy.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    println!("smallest sw2^2 along the run: {min_sw2:.4}");
    Ok(())
}
