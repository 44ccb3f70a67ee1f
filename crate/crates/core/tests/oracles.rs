//! Library results against independently computed references: closed forms,
//! brute force and law-of-large-numbers checks.

use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

use swflow::diagnostics::{
    assignment_cost, decay_fit, entropy_estimate, lagrangian_cost, metrics_from_csv,
    metrics_to_csv, moment_p, monotonicity_violations, support_radius, Bandwidth, MetricsRecord,
};
use swflow::flow::{euler_step, idt_step, random_orthonormal_basis, FlowState};
use swflow::measures::{
    direction_set, sample_scenario, DirectionMode, ParticleCloud, ScenarioKind, ScenarioSpec,
};
use swflow::ot1d::{entropy_lemma_gap, monotone_map, project, w2_sq_1d, Density1DGrid, Projection1D};
use swflow::sliced::{c_pd, slice_prefactor, unit_ball_volume, velocity_field};

fn c_pd_closed(p: f64, d: usize) -> f64 {
    let d = d as f64;
    gamma(d / 2.0) * gamma((p + 1.0) / 2.0) / (PI.sqrt() * gamma((d + p) / 2.0))
}

#[test]
fn c_pd_matches_gamma_closed_form() {
    for d in 2..=7 {
        for p in [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0] {
            let got = c_pd(p, d, 4000).unwrap();
            let want = c_pd_closed(p, d);
            assert!((got - want).abs() <= 1e-9 * want, "p={p} d={d}: {got} vs {want}");
        }
    }
    assert_eq!(c_pd(3.0, 1, 10).unwrap(), 1.0);
}

#[test]
fn c_pd_matches_direction_average() {
    // average of |θ_1|^4 over a fine planar grid
    let dirs = direction_set(2, 4096, DirectionMode::Grid2d, 0).unwrap();
    let avg: f64 = (0..dirs.len())
        .map(|k| dirs.weights()[k] * dirs.direction(k)[0].abs().powi(4))
        .sum();
    assert!((avg - c_pd(4.0, 2, 2000).unwrap()).abs() < 1e-12);
    assert!((avg - 3.0 / 8.0).abs() < 1e-12);
}

#[test]
fn ball_volumes_and_prefactors() {
    for k in 0..10 {
        let want = PI.powf(k as f64 / 2.0) / gamma(k as f64 / 2.0 + 1.0);
        assert!((unit_ball_volume(k) - want).abs() < 1e-12 * want, "k={k}");
    }
    assert!((slice_prefactor(2) - 1.0 / PI).abs() < 1e-15);
    assert!((slice_prefactor(3) - 0.5).abs() < 1e-15);
}

#[test]
fn gaussian_quantile_matching_is_affine() {
    let n = 2000;
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<f64> = (0..n).map(|i| std_normal.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
    let (m, s) = (0.8, 1.7);
    let y: Vec<f64> = x.iter().rev().map(|v| m + s * v).collect();
    let px = Projection1D::uniform(&x).unwrap();
    let py = Projection1D::uniform(&y).unwrap();
    let map = monotone_map(&px, &py).unwrap();
    for (xi, ti) in x.iter().zip(&map) {
        assert!((ti - (m + s * xi)).abs() < 1e-12);
    }
    let want: f64 = x.iter().map(|v| (m + (s - 1.0) * v).powi(2)).sum::<f64>() / n as f64;
    assert!((w2_sq_1d(&px, &py).unwrap() - want).abs() < 1e-12);
}

#[test]
fn weighted_1d_cost_matches_quantile_integral() {
    // atoms 0, 1 with weights 1/4, 3/4 against a single atom at 2 and
    // against uniform atoms {0, 1}: the latter costs 1/4 · 1 (mass 1/4 moves 0 -> 1)
    let src = Projection1D::from_values(&[0.0, 1.0], &[0.25, 0.75]).unwrap();
    let one = Projection1D::from_values(&[2.0], &[1.0]).unwrap();
    assert!((w2_sq_1d(&src, &one).unwrap() - (0.25 * 4.0 + 0.75)).abs() < 1e-14);
    let two = Projection1D::uniform(&[0.0, 1.0]).unwrap();
    assert!((w2_sq_1d(&src, &two).unwrap() - 0.25).abs() < 1e-14);
}

#[test]
fn sampled_moments_follow_the_law_of_large_numbers() {
    let n = 40_000;
    let cases = [
        (
            ScenarioKind::Gaussian {
                mean: vec![0.0],
                scale: vec![1.0, 2.0],
            },
            5.0,
        ),
        (
            ScenarioKind::UniformBox {
                lo: vec![-1.0],
                hi: vec![1.0],
            },
            2.0 / 3.0,
        ),
        // E|x|^2 on the shell: 2 (r1^4 - r0^4) / (4 (r1^2 - r0^2)) in the plane
        (ScenarioKind::RadialAnnulus { r0: 1.0, r1: 2.0 }, 2.5),
        (ScenarioKind::Segment { a: -1.0, b: 1.0 }, 1.0 / 3.0),
    ];
    for (kind, m2) in cases {
        let spec = ScenarioSpec::new(kind.clone(), 2, n, 5);
        assert!((kind.analytic_second_moment(2).unwrap() - m2).abs() < 1e-12, "{kind:?}");
        let cloud = sample_scenario(&spec).unwrap();
        let est = moment_p(&cloud, 2.0).unwrap();
        assert!((est - m2).abs() < 0.03 * m2, "{kind:?}: {est} vs {m2}");
    }
}

#[test]
fn annulus_support_radius() {
    let cloud = sample_scenario(&ScenarioSpec::new(
        ScenarioKind::RadialAnnulus { r0: 0.5, r1: 1.5 },
        3,
        5000,
        2,
    ))
    .unwrap();
    let r = support_radius(&cloud);
    assert!(r <= 1.5 && r > 1.45);
    assert!(cloud.rows().all(|p| p.iter().map(|c| c * c).sum::<f64>().sqrt() >= 0.5 - 1e-12));
}

#[test]
fn analytic_entropies() {
    let gauss = ScenarioSpec::new(
        ScenarioKind::Gaussian {
            mean: vec![0.0],
            scale: vec![2.0, 0.5],
        },
        2,
        10,
        0,
    );
    let want = -(2.0 * PI * E).ln() - (2.0f64 * 0.5).ln();
    assert!((gauss.analytic_entropy().unwrap() - want).abs() < 1e-12);
    let boxed = ScenarioSpec::new(
        ScenarioKind::UniformBox {
            lo: vec![0.0],
            hi: vec![2.0],
        },
        3,
        10,
        0,
    );
    assert!((boxed.analytic_entropy().unwrap() + 8.0f64.ln()).abs() < 1e-12);
}

#[test]
fn kernel_entropy_tracks_the_smoothed_gaussian() {
    let n = 20_000;
    let cloud = sample_scenario(&ScenarioSpec::new(
        ScenarioKind::Gaussian {
            mean: vec![0.0],
            scale: vec![1.0],
        },
        2,
        n,
        11,
    ))
    .unwrap();
    // the estimate sees N(0, (1 + h^2) I)
    let h = 0.3;
    let est = entropy_estimate(&cloud, Bandwidth::Fixed(h)).unwrap();
    let want = -(2.0 * PI * E).ln() - (1.0 + h * h).ln();
    assert!((est - want).abs() < 0.02, "{est} vs {want}");

    let line = sample_scenario(&ScenarioSpec::new(ScenarioKind::Segment { a: 0.0, b: 1.0 }, 2, 100, 1)).unwrap();
    assert_eq!(entropy_estimate(&line, Bandwidth::Auto).unwrap(), f64::NEG_INFINITY);
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn assignment_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let perms = permutations(6);
    for _ in 0..30 {
        let d = rng.random_range(1..=3);
        let x: Vec<f64> = (0..6 * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..6 * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cost = |p: &[usize]| {
            (0..6)
                .map(|i| (0..d).map(|c| (x[i * d + c] - y[p[i] * d + c]).powi(2)).sum::<f64>())
                .sum::<f64>()
                / 6.0
        };
        let best = perms.iter().map(|p| cost(p)).fold(f64::INFINITY, f64::min);
        let a = assignment_cost(&x, &y, d).unwrap();
        assert!((a.cost - best).abs() < 1e-12);
        assert!((cost(&a.permutation) - a.cost).abs() < 1e-12);
        let ident = lagrangian_cost(&x, &y, d).unwrap();
        assert!((ident - cost(&[0, 1, 2, 3, 4, 5])).abs() < 1e-12);
    }
}

#[test]
fn monotonicity_counts_match_pairwise_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 40;
    let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    // a rotation by 120 degrees breaks monotonicity for many pairs
    let (s, c) = (2.0 * PI / 3.0).sin_cos();
    let y: Vec<f64> = x
        .chunks_exact(2)
        .flat_map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect();
    let mut want = 0;
    for i in 0..n {
        for j in i + 1..n {
            let dot = (y[2 * i] - y[2 * j]) * (x[2 * i] - x[2 * j])
                + (y[2 * i + 1] - y[2 * j + 1]) * (x[2 * i + 1] - x[2 * j + 1]);
            if dot < 0.0 {
                want += 1;
            }
        }
    }
    let v = monotonicity_violations(&x, &y, 2, Some(0.0)).unwrap();
    assert_eq!(v.count, want);
    assert_eq!(want, n * (n - 1) / 2);
    let grad = monotonicity_violations(&x, &x.iter().map(|v| 3.0 * v).collect::<Vec<_>>(), 2, None).unwrap();
    assert_eq!(grad.count, 0);
}

#[test]
fn grid_entropy_of_gaussians() {
    for s in [0.5, 1.0, 2.0] {
        let g = Density1DGrid::from_fn(-12.0 * s, 12.0 * s, 4000, |x| (-0.5 * (x / s).powi(2)).exp()).unwrap();
        let want = -0.5 * (2.0 * PI * E * s * s).ln();
        assert!((g.entropy() - want).abs() < 1e-6, "s={s}");
    }
}

#[test]
fn entropy_gap_for_gaussian_dilation() {
    // T(y) = s y, so ∫ μ'(T - id) = -(s - 1) and E(ν) - E(μ) = -log s
    let mu = Density1DGrid::from_fn(-10.0, 10.0, 4000, |x| (-0.5 * x * x).exp()).unwrap();
    for s in [0.5, 0.8, 1.5] {
        let nu = Density1DGrid::from_fn(-10.0, 10.0, 4000, |x| (-0.5 * (x / s).powi(2)).exp()).unwrap();
        let gap = entropy_lemma_gap(&mu, &nu).unwrap();
        assert!((gap.lhs - (1.0 - s)).abs() < 1e-3, "s={s}: lhs {}", gap.lhs);
        assert!((gap.rhs + s.ln()).abs() < 1e-4, "s={s}: rhs {}", gap.rhs);
        assert!(gap.holds(0.0));
    }
}

#[test]
fn euler_step_moves_by_tau_times_velocity() {
    let rho = sample_scenario(&ScenarioSpec::new(
        ScenarioKind::UniformBox {
            lo: vec![-1.0],
            hi: vec![1.0],
        },
        3,
        200,
        1,
    ))
    .unwrap();
    let nu = sample_scenario(&ScenarioSpec::new(ScenarioKind::RadialAnnulus { r0: 1.0, r1: 2.0 }, 3, 300, 2)).unwrap();
    let dirs = direction_set(3, 50, DirectionMode::AntitheticMonteCarlo, 9).unwrap();
    let v = velocity_field(&rho, &nu, &dirs).unwrap();
    let state = FlowState::new(rho.clone());
    let next = euler_step(&state, &nu, &dirs, 0.1).unwrap();
    assert_eq!(next.step_index, 1);
    assert!((next.time - 0.1).abs() < 1e-15);
    for i in 0..rho.len() {
        for c in 0..3 {
            let want = rho.point(i)[c] + 0.1 * v.vector(i)[c];
            assert!((next.cloud.point(i)[c] - want).abs() < 1e-14);
        }
    }
    assert_eq!(next.cloud.weights(), rho.weights());
}

#[test]
fn idt_step_matches_every_basis_marginal() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 300;
    let rho = sample_scenario(&ScenarioSpec::new(
        ScenarioKind::UniformBox {
            lo: vec![-1.0],
            hi: vec![1.0],
        },
        3,
        n,
        1,
    ))
    .unwrap();
    let nu = sample_scenario(&ScenarioSpec::new(
        ScenarioKind::Gaussian {
            mean: vec![0.5],
            scale: vec![1.0],
        },
        3,
        n,
        2,
    ))
    .unwrap();
    let basis = random_orthonormal_basis(&mut rng, 3);
    let next = idt_step(&FlowState::new(rho), &nu, &basis).unwrap();
    for e in basis.chunks_exact(3) {
        let mut a = project(&next.cloud, e).unwrap().values().to_vec();
        let mut b = project(&nu, e).unwrap().values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn decay_fit_recovers_power_law() {
    let records: Vec<MetricsRecord> = (1..=200)
        .map(|k| {
            let t = k as f64 * 0.5;
            MetricsRecord {
                t,
                sw2_sq: 3.0 / t,
                m2: 1.0,
                m_p: None,
                p: None,
                radius: 1.0,
                entropy: None,
                max_speed: 0.0,
                lagrangian_cost: None,
            }
        })
        .collect();
    let fit = decay_fit(&records, 5.0).unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-12);
    assert!((fit.c_hat - 3.0).abs() < 1e-12);
    assert_eq!(fit.records, 191);

    let text = metrics_to_csv(&records);
    assert_eq!(metrics_from_csv(&text).unwrap(), records);
}

#[test]
fn uniform_weights_are_equal() {
    let cloud = ParticleCloud::uniform(vec![0.0; 10], 2).unwrap();
    assert!(cloud.weights().iter().all(|&w| w == 0.2));
}

fn quantile(values: &[f64], weights: &[f64], u: f64) -> f64 {
    let mut cum = 0.0;
    for (v, w) in values.iter().zip(weights) {
        cum += w;
        if u <= cum {
            return *v;
        }
    }
    *values.last().unwrap()
}

#[test]
fn unequal_weighted_cost_matches_discretized_quantiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let (n, m) = (rng.random_range(1..6), rng.random_range(1..6));
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut ys: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let wx: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let wy = vec![1.0 / m as f64; m];
        let k = 200_000;
        let want: f64 = (0..k)
            .map(|i| {
                let u = (i as f64 + 0.5) / k as f64;
                (quantile(&xs, &wx, u) - quantile(&ys, &wy, u)).powi(2)
            })
            .sum::<f64>()
            / k as f64;
        let got = w2_sq_1d(
            &Projection1D::from_values(&xs, &wx).unwrap(),
            &Projection1D::uniform(&ys).unwrap(),
        )
        .unwrap();
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
    }
}
