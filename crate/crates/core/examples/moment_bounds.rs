//! Second and fourth moments and the support radius along a flow, against
//! their a priori bounds `max{M_p(ρ0), d^{p/2} c_{p,d} M_p(ν)}` and
//! `max{R(ρ0), √d R(ν)}`.
//!
//! ```text
//! cargo run --release --example moment_bounds
//! ```

use swflow::diagnostics::{moment_p, support_radius};
use swflow::flow::{run_flow, FlowConfig};
use swflow::measures::{sample_scenario, ScenarioKind, ScenarioSpec};
use swflow::sliced::c_pd;

fn main() -> swflow::Result<()> {
    let d = 2;
    let rho0 = sample_scenario(&ScenarioSpec::new(
        ScenarioKind::UniformBox {
            lo: vec![-0.5],
            hi: vec![0.5],
        },
        d,
        1024,
        1,
    ))?;
    let nu = sample_scenario(&ScenarioSpec::new(ScenarioKind::RadialAnnulus { r0: 0.5, r1: 1.5 }, d, 1024, 2))?;

    let bound = |p: f64| -> swflow::Result<f64> {
        let spread = (d as f64).powf(p / 2.0) * c_pd(p, d, 2000)?;
        Ok(moment_p(&rho0, p)?.max(spread * moment_p(&nu, p)?))
    };
    let radius_bound = support_radius(&rho0).max((d as f64).sqrt() * support_radius(&nu));

    let cfg = FlowConfig {
        t_max: 10.0,
        directions: 128,
        record_every: 20,
        ..FlowConfig::default()
    };
    let run = run_flow(&rho0, &nu, &cfg)?;
    println!("bounds: M2 {:.4}  M4 {:.4}  R {:.4}", bound(2.0)?, bound(4.0)?, radius_bound);
    for r in &run.metrics {
        println!(
            "t = {:5.2}  M2 {:.4}  M4 {:.4}  R {:.4}",
            r.t,
            r.m2,
            r.m_p.unwrap_or(f64::NAN),
            r.radius
        );
    }
    Ok(())
}
