//! A uniform square flowing toward the standard Gaussian: `SW_2^2` decays,
//! and `t · SW_2^2` stays bounded.
//!
//! ```text
//! cargo run --release --example gaussian_decay
//! ```

use swflow::diagnostics::decay_fit;
use swflow::flow::{run_flow, FlowConfig};
use swflow::measures::{sample_scenario, ScenarioKind, ScenarioSpec};

fn main() -> swflow::Result<()> {
    let square = ScenarioKind::UniformBox {
        lo: vec![-1.0],
        hi: vec![1.0],
    };
    let gaussian = ScenarioKind::Gaussian {
        mean: vec![0.0],
        scale: vec![1.0],
    };
    let source = ScenarioSpec::new(square, 2, 1024, 1);
    let rho0 = sample_scenario(&source)?;
    let nu = sample_scenario(&ScenarioSpec::new(gaussian, 2, 1024, 2))?;

    let cfg = FlowConfig {
        tau: 0.05,
        t_max: 30.0,
        directions: 128,
        record_every: 20,
        seed: 3,
        ..FlowConfig::default()
    };
    let run = run_flow(&rho0, &nu, &cfg)?;
    for r in &run.metrics {
        println!("t = {:5.1}  sw2^2 = {:.4e}  t·sw2^2 = {:.4}", r.t, r.sw2_sq, r.t * r.sw2_sq);
    }

    let fit = decay_fit(&run.metrics, 5.0)?;
    let e = source.analytic_entropy().unwrap();
    let m2 = source.kind.analytic_second_moment(2).unwrap();
    let bound = 2.0 * (e + m2 / 2.0 + (2.0 * std::f64::consts::PI).ln());
    println!("log-log slope {:.3}, max t·sw2^2 {:.4}", fit.slope, fit.c_hat);
    println!("2(E + M2/2 + log 2π) = {bound:.4} with E = {e:.4}, M2 = {m2:.4}");
    Ok(())
}
