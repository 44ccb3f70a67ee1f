//! Invariants of the transport primitives and the flow, checked on random
//! inputs.

use proptest::prelude::*;

use swflow::diagnostics::{assignment_cost, metrics_from_csv, metrics_to_csv, moment_p, MetricsRecord};
use swflow::experiment::ExperimentConfig;
use swflow::flow::{euler_step, FlowState};
use swflow::measures::{direction_set, DirectionMode, ParticleCloud};
use swflow::ot1d::{monotone_map, project, tie_averaged_map, w2_sq_1d, Projection1D};
use swflow::sliced::{sw2_sq, velocity_field};

fn coords(n: usize, d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n * d)
}

/// Two uniform clouds of the same size in dimension `d`.
fn pair(d: usize, max_n: usize) -> impl Strategy<Value = (ParticleCloud, ParticleCloud)> {
    (1..=max_n).prop_flat_map(move |n| {
        (coords(n, d), coords(n, d)).prop_map(move |(x, y)| {
            (ParticleCloud::uniform(x, d).unwrap(), ParticleCloud::uniform(y, d).unwrap())
        })
    })
}

fn weighted(values: Vec<f64>, raw: Vec<f64>) -> Projection1D {
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    Projection1D::from_values(&values, &w).unwrap()
}

fn weighted_1d(max_n: usize) -> impl Strategy<Value = Projection1D> {
    (1..=max_n).prop_flat_map(|n| {
        (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(0.05..1.0f64, n))
            .prop_map(|(v, r)| weighted(v, r))
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sliced_distance_is_symmetric((rho, nu) in pair(3, 30), seed in any::<u64>()) {
        let dirs = direction_set(3, 24, DirectionMode::AntitheticMonteCarlo, seed).unwrap();
        let a = sw2_sq(&rho, &nu, &dirs).unwrap();
        let b = sw2_sq(&nu, &rho, &dirs).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!(close(a, b, 1e-12));
        prop_assert_eq!(sw2_sq(&rho, &rho, &dirs).unwrap(), 0.0);
    }

    #[test]
    fn weighted_1d_cost_is_symmetric(p in weighted_1d(8), q in weighted_1d(8)) {
        let a = w2_sq_1d(&p, &q).unwrap();
        let b = w2_sq_1d(&q, &p).unwrap();
        prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn sliced_distance_is_below_assignment((rho, nu) in pair(2, 12), seed in any::<u64>()) {
        let dirs = direction_set(2, 16, DirectionMode::MonteCarlo, seed).unwrap();
        let sw = sw2_sq(&rho, &nu, &dirs).unwrap();
        let w = assignment_cost(rho.points(), nu.points(), 2).unwrap().cost;
        prop_assert!(sw <= w + 1e-12 * (1.0 + w));
    }

    #[test]
    fn monotone_map_pushes_forward_exactly(
        (x, y) in (1usize..40).prop_flat_map(|n| (coords(n, 1), coords(n, 1)))
    ) {
        let px = Projection1D::uniform(&x).unwrap();
        let py = Projection1D::uniform(&y).unwrap();
        let mut images = monotone_map(&px, &py).unwrap();
        images.sort_by(f64::total_cmp);
        let mut target = y.clone();
        target.sort_by(f64::total_cmp);
        prop_assert_eq!(images, target);
    }

    #[test]
    fn monotone_maps_are_nondecreasing(p in weighted_1d(12), q in weighted_1d(12)) {
        for map in [monotone_map(&p, &q).unwrap(), tie_averaged_map(&p, &q).unwrap()] {
            let mut pairs: Vec<(f64, f64)> = p.values().iter().zip(p.order())
                .map(|(&v, &i)| (v, map[i]))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            for w in pairs.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
        }
    }

    #[test]
    fn velocity_is_translation_equivariant(
        (rho, nu) in pair(2, 25),
        shift in prop::array::uniform2(-3.0..3.0f64),
    ) {
        let dirs = direction_set(2, 32, DirectionMode::Grid2d, 0).unwrap();
        let v = velocity_field(&rho, &nu, &dirs).unwrap();
        let w = velocity_field(&rho.translated(&shift).unwrap(), &nu.translated(&shift).unwrap(), &dirs).unwrap();
        for (a, b) in v.vectors().iter().zip(w.vectors()) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn velocity_is_rotation_equivariant((rho, nu) in pair(2, 25), angle in -3.0..3.0f64) {
        let dirs = direction_set(2, 48, DirectionMode::Grid2d, 0).unwrap();
        let (s, c) = angle.sin_cos();
        let rot = [c, -s, s, c];
        let v = velocity_field(&rho, &nu, &dirs).unwrap();
        let w = velocity_field(
            &rho.linear_image(&rot).unwrap(),
            &nu.linear_image(&rot).unwrap(),
            &dirs.rotated_2d(angle),
        )
        .unwrap();
        for i in 0..v.len() {
            let a = v.vector(i);
            let b = w.vector(i);
            prop_assert!((c * a[0] - s * a[1] - b[0]).abs() <= 1e-9);
            prop_assert!((s * a[0] + c * a[1] - b[1]).abs() <= 1e-9);
        }
    }

    #[test]
    fn one_dimensional_flow_is_exact((rho, nu) in pair(1, 30)) {
        let dirs = direction_set(1, 2, DirectionMode::AntitheticMonteCarlo, 0).unwrap();
        let p = project(&rho, &[1.0]).unwrap();
        let q = project(&nu, &[1.0]).unwrap();
        let t = tie_averaged_map(&p, &q).unwrap();
        let v = velocity_field(&rho, &nu, &dirs).unwrap();
        for (i, ti) in t.iter().enumerate() {
            prop_assert!((v.vector(i)[0] - (ti - rho.point(i)[0])).abs() <= 1e-12);
        }
        let sw = sw2_sq(&rho, &nu, &dirs).unwrap();
        prop_assert!(close(sw, w2_sq_1d(&p, &q).unwrap(), 1e-12));
    }

    #[test]
    fn assignment_is_symmetric((rho, nu) in pair(2, 10)) {
        let a = assignment_cost(rho.points(), nu.points(), 2).unwrap().cost;
        let b = assignment_cost(nu.points(), rho.points(), 2).unwrap().cost;
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn moments_are_homogeneous(
        (rho, _) in pair(3, 20),
        lambda in -4.0..4.0f64,
        p in 1.0..6.0f64,
    ) {
        let scaled = rho.scaled(lambda).unwrap();
        let want = lambda.abs().powf(p) * moment_p(&rho, p).unwrap();
        prop_assert!(close(moment_p(&scaled, p).unwrap(), want, 1e-10));
    }

    #[test]
    fn euler_steps_decrease_energy_and_keep_mass(
        (rho, nu) in pair(2, 20),
        tau in 0.01..0.5f64,
    ) {
        let dirs = direction_set(2, 16, DirectionMode::Grid2d, 0).unwrap();
        let mut state = FlowState::new(rho.clone());
        let mut energy = sw2_sq(&rho, &nu, &dirs).unwrap();
        for _ in 0..5 {
            state = euler_step(&state, &nu, &dirs, tau).unwrap();
            let next = sw2_sq(&state.cloud, &nu, &dirs).unwrap();
            prop_assert!(next <= energy + 1e-10 * (1.0 + energy), "{} -> {}", energy, next);
            energy = next;
        }
        prop_assert_eq!(state.cloud.len(), rho.len());
        prop_assert_eq!(state.cloud.weights(), rho.weights());
    }

    #[test]
    fn metrics_rows_round_trip(
        vals in prop::array::uniform8(-1e6..1e6f64),
        with_p in any::<bool>(),
    ) {
        let r = MetricsRecord {
            t: vals[0].abs(),
            sw2_sq: vals[1].abs(),
            m2: vals[2].abs(),
            m_p: with_p.then_some(vals[3].abs()),
            p: with_p.then_some(4.0),
            radius: vals[4].abs(),
            entropy: with_p.then_some(vals[5]),
            max_speed: vals[6].abs(),
            lagrangian_cost: (!with_p).then_some(vals[7].abs()),
        };
        let back = metrics_from_csv(&metrics_to_csv(&[r])).unwrap();
        prop_assert_eq!(back, vec![r]);
    }

    #[test]
    fn config_text_round_trips(seed in 0u64..1_000_000, tau in 0.001..1.0f64, n in 2usize..500) {
        let text = format!(
            "dim = 2\nseed = {seed}\nn = {n}\nsource.kind = gaussian\ntarget.kind = segment\n\
             target.a = -1\ntarget.b = 2\ntau = {tau}\n"
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(cfg.experiment, again.experiment);
    }
}
