//! Iterative distribution transfer (unit steps along random orthonormal
//! bases) next to the explicit Euler flow, on the same pair of clouds.
//!
//! ```text
//! cargo run --release --example idt_vs_swf
//! ```

use swflow::flow::{run_flow, FlowConfig, FlowMode};
use swflow::measures::{sample_scenario, ScenarioKind, ScenarioSpec};

fn main() -> swflow::Result<()> {
    let rho0 = sample_scenario(&ScenarioSpec::new(
        ScenarioKind::UniformBox {
            lo: vec![-1.0],
            hi: vec![1.0],
        },
        3,
        2048,
        1,
    ))?;
    let nu = sample_scenario(&ScenarioSpec::new(
        ScenarioKind::Gaussian {
            mean: vec![1.0],
            scale: vec![1.0, 0.5, 2.0],
        },
        3,
        2048,
        2,
    ))?;

    let idt = FlowConfig {
        mode: FlowMode::Idt,
        t_max: 60.0,
        directions: 256,
        record_every: 10,
        seed: 7,
        ..FlowConfig::default()
    };
    let swf = FlowConfig {
        mode: FlowMode::Swf,
        tau: 0.5,
        record_every: 20,
        ..idt.clone()
    };
    for cfg in [idt, swf] {
        let run = run_flow(&rho0, &nu, &cfg)?;
        println!("{}:", cfg.mode.name());
        for r in &run.metrics {
            println!("  t = {:5.1}  sw2^2 = {:.3e}", r.t, r.sw2_sq);
        }
    }
    Ok(())
}
