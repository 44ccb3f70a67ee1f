//! Runs an anisotropic pair to rest and compares the flow map with the
//! optimal assignment of the same endpoints. In the plane the flow map costs
//! more and breaks monotonicity; on the line it is optimal.
//!
//! ```text
//! cargo run --release --example flowmap_optimality
//! ```

use swflow::diagnostics::{assignment_cost, lagrangian_cost, monotonicity_violations};
use swflow::flow::{run_flow, FlowConfig};
use swflow::measures::{sample_scenario, ScenarioKind, ScenarioSpec};

fn probe(source: ScenarioKind, target: ScenarioKind, d: usize) -> swflow::Result<()> {
    let rho0 = sample_scenario(&ScenarioSpec::new(source, d, 512, 1))?;
    let nu = sample_scenario(&ScenarioSpec::new(target, d, 512, 2))?;
    let cfg = FlowConfig {
        tau: 0.1,
        t_max: 2000.0,
        directions: 64,
        stop_speed: 1e-4,
        record_every: usize::MAX,
        deterministic: true,
        ..FlowConfig::default()
    };
    let run = run_flow(&rho0, &nu, &cfg)?;
    let map = run.flow_map();
    let lag = lagrangian_cost(&map.sources, &map.images, d)?;
    let opt = assignment_cost(&map.sources, &map.images, d)?;
    let bad = monotonicity_violations(&map.sources, &map.images, d, None)?;
    println!(
        "d = {d}: {} at t = {:.1}; flow map {lag:.6}, optimal {:.6}, gap {:.3e}, {} non-monotone pairs",
        run.outcome.name(),
        run.final_state().time,
        opt.cost,
        lag - opt.cost,
        bad.count
    );
    Ok(())
}

fn main() -> swflow::Result<()> {
    let tilted_bar = ScenarioKind::RotateOf {
        base: Box::new(ScenarioKind::UniformBox {
            lo: vec![-2.0, -0.25],
            hi: vec![2.0, 0.25],
        }),
        angle: 0.5,
    };
    let upright_bar = ScenarioKind::UniformBox {
        lo: vec![-0.5, -1.5],
        hi: vec![0.5, 1.5],
    };
    probe(tilted_bar, upright_bar, 2)?;
    probe(
        ScenarioKind::UniformBox {
            lo: vec![-2.0],
            hi: vec![2.0],
        },
        ScenarioKind::RadialAnnulus { r0: 0.5, r1: 1.5 },
        1,
    )
}
