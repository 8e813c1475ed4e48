use super::*;
use crate::geometry::{Placement, Shape};
use crate::robot::Joint;
use crate::scenario::{required_samples, sample_ball};
use crate::sdfield::{overall_sdf, Obstacle, ObstacleMotion, SdfSample};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn revolute_z(offset_x: f64, max_speed: f64) -> Joint {
    Joint {
        axis: Vector3::z(),
        offset: Placement::from_translation(Vector3::new(offset_x, 0.0, 0.0)),
        limits: (-std::f64::consts::PI, std::f64::consts::PI),
        max_speed,
    }
}

fn sphere_link(radius: f64) -> Vec<(Shape, Placement)> {
    vec![(Shape::sphere(radius).unwrap(), Placement::identity())]
}

fn planar_arm(n: usize, max_speed: f64) -> RobotModel {
    let joints: Vec<Joint> = (0..n)
        .map(|i| revolute_z(if i == 0 { 0.0 } else { 0.4 }, max_speed))
        .collect();
    let links = (0..n).map(|_| sphere_link(0.05)).collect();
    RobotModel::new(joints, links, Placement::identity(), &[]).unwrap()
}

fn fixed_sphere(name: &str, radius: f64, at: Vector3<f64>) -> Obstacle {
    Obstacle {
        name: name.into(),
        shape: Shape::sphere(radius).unwrap(),
        motion: ObstacleMotion::Fixed(Placement::from_translation(at)),
    }
}

fn random_negdef(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    // −QDQᵀ via a product of random plane rotations applied to a diagonal.
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        m.set(i, i, -rng.gen_range(0.1..1.0));
    }
    let mut dense = nalgebra::DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    for _ in 0..2 * n {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let th: f64 = rng.gen_range(-1.0..1.0);
        let mut rot = nalgebra::DMatrix::identity(n, n);
        rot[(i, i)] = th.cos();
        rot[(j, j)] = th.cos();
        rot[(i, j)] = -th.sin();
        rot[(j, i)] = th.sin();
        dense = &rot * dense * rot.transpose();
    }
    SymMatrix::from_fn(n, |i, j| 0.5 * (dense[(i, j)] + dense[(j, i)]))
}

#[test]
fn apex_and_boundary_evaluation() {
    let h = SymMatrix::scaled_identity(3, -1.0);
    let cbf = QuadraticCbf::new(JointConfig::new(vec![0.3, -0.2, 0.9]), h, 1.0, 1.0, 1.0).unwrap();

    let (v, g) = evaluate_cbf(&cbf, cbf.center());
    assert_eq!(v, 1.0);
    assert!(g.iter().all(|&gi| gi == 0.0));

    let x = JointConfig::new(vec![1.3, -0.2, 0.9]); // x̃ = (1, 0, 0)
    let (v, g) = evaluate_cbf(&cbf, &x);
    assert!(v.abs() < 1e-15);
    assert!((g[0] + 2.0).abs() < 1e-15 && g[1] == 0.0 && g[2] == 0.0);
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..50 {
        let n = rng.gen_range(1..6);
        let h = random_negdef(&mut rng, n);
        let center = JointConfig::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let cbf = QuadraticCbf::new(center, h, rng.gen_range(0.1..2.0), 1.0, 0.5).unwrap();
        let x = JointConfig::new(
            cbf.center()
                .q
                .iter()
                .map(|c| c + rng.gen_range(-0.5..0.5))
                .collect(),
        );
        let (_, g) = evaluate_cbf(&cbf, &x);
        let step = 1e-5;
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.q[k] += step;
            xm.q[k] -= step;
            let fd = (evaluate_cbf(&cbf, &xp).0 - evaluate_cbf(&cbf, &xm).0) / (2.0 * step);
            let denom = g[k].abs().max(1.0);
            assert!(
                (fd - g[k]).abs() / denom <= 1e-6,
                "coord {k}: fd {fd} vs analytic {}",
                g[k]
            );
        }
    }
}

#[test]
fn constructor_rejects_malformed_barriers() {
    let center = JointConfig::new(vec![0.0, 0.0]);
    let ok = SymMatrix::scaled_identity(2, -0.5);
    assert!(QuadraticCbf::new(center.clone(), ok.clone(), 0.5, 1.0, 0.5).is_ok());
    // λ_max too close to zero.
    let soft = SymMatrix::scaled_identity(2, -1e-7);
    assert!(QuadraticCbf::new(center.clone(), soft, 0.5, 1.0, 0.5).is_err());
    // Spectral norm beyond one.
    let big = SymMatrix::scaled_identity(2, -1.5);
    assert!(QuadraticCbf::new(center.clone(), big, 0.5, 1.0, 0.5).is_err());
    // Apex below the margin, nonpositive alpha, negative sigma.
    assert!(QuadraticCbf::new(center.clone(), ok.clone(), 1e-8, 1.0, 0.5).is_err());
    assert!(QuadraticCbf::new(center.clone(), ok.clone(), 0.5, 0.0, 0.5).is_err());
    assert!(QuadraticCbf::new(center, ok, 0.5, 1.0, -0.1).is_err());
}

/// One-sample batch at distance `sd`, placed by hand.
fn handmade_batch(x_k: &JointConfig, offset: &[f64], sd: f64) -> ScenarioBatch {
    let state = JointConfig::new(
        x_k.q
            .iter()
            .zip(offset.iter())
            .map(|(a, b)| a + b)
            .collect(),
    );
    ScenarioBatch {
        samples: vec![state.clone()],
        sdf: vec![SdfSample {
            state,
            sd_out: sd,
            sd_in: SD_SENTINEL,
            sd_ov: sd,
            outer_witness: None,
            inner_witness: None,
        }],
        rng_seed: 0,
    }
}

#[test]
fn single_scenario_unit_ball_arithmetic() {
    // One joint, unit ball, one scenario at x̃ = 0.5 with distance 0.3.
    let model = planar_arm(1, 1.0);
    let x_k = JointConfig::new(vec![0.0]);
    let ball = ReachableBall {
        center: x_k.clone(),
        radius: 1.0,
    };
    let batch = handmade_batch(&x_k, &[0.5], 0.3);
    let assembled =
        assemble_program(&model, &x_k, &ball, &batch, Some(&[0.0]), 1.0).unwrap();

    // H = −1, d = 0.3, σ₁ = 1 satisfies everything: the envelope holds
    // with 0.25 slack, and the containment block is diag(0, 0.7).
    let z0 = [-1.0, 0.3, 1.0];
    for r in 0..assembled.program.num_rows() {
        assert!(
            assembled.program.row_value(r, &z0) >= -1e-12,
            "row {r} violated: {}",
            assembled.program.row_value(r, &z0)
        );
    }
    let env = assembled.envelope_rows[0].unwrap();
    assert!((assembled.program.row_value(env, &z0) - 0.25).abs() < 1e-12);
    let block = assembled.program.psd_block_at(&z0);
    assert!(block.get(0, 0).abs() < 1e-12);
    assert!((block.get(1, 1) - 0.7).abs() < 1e-12);
    let eig = sym_eigen(&block).unwrap();
    assert!(eig.min_eigenvalue() >= -1e-12);

    // The optimum pushes H to the norm bound and the envelope to equality:
    // d* = 0.3 − 0.25·(−1) = 0.55.
    let sol = solve(&assembled.program).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    assert!(
        (sol.objective_value - 0.55).abs() < 1e-6,
        "d̂* = {}",
        sol.objective_value
    );
}

#[test]
fn vacuous_batches_are_rejected() {
    let model = planar_arm(1, 1.0);
    let x_k = JointConfig::new(vec![0.0]);
    let ball = ReachableBall {
        center: x_k.clone(),
        radius: 1.0,
    };
    let batch = handmade_batch(&x_k, &[0.5], SD_SENTINEL);
    match assemble_program(&model, &x_k, &ball, &batch, None, 1.0) {
        Err(CbfError::NoScenarios(1)) => {}
        other => panic!("expected NoScenarios, got {other:?}"),
    }

    let empty = ScenarioBatch {
        samples: vec![],
        sdf: vec![],
        rng_seed: 0,
    };
    assert!(matches!(
        assemble_program(&model, &x_k, &ball, &empty, None, 1.0),
        Err(CbfError::Invalid(_))
    ));
}

#[test]
fn free_space_certificate_fills_the_ball() {
    let model = planar_arm(2, 1.0);
    let scene = Scene::new(vec![fixed_sphere(
        "far",
        0.1,
        Vector3::new(10.0, 0.0, 0.0),
    )])
    .unwrap();
    let x_k = JointConfig::new(vec![0.2, -0.4]);
    let dt = 0.01;
    let report = synthesize(
        &model,
        &scene,
        &x_k,
        dt,
        64,
        7,
        &SynthesisOptions::default(),
    )
    .unwrap();

    let r2 = dt * dt * 2.0; // r = dt·‖(1,1)‖
    // Far from everything the envelope is slack and the optimum rides the
    // containment cap: d_b ≈ σ₁·r² with σ₁ ≈ 1.
    assert!(
        (report.cbf.d_b() - report.cbf.sigma1() * r2).abs() <= 1e-5 * r2,
        "d_b = {}, σ₁r² = {}",
        report.cbf.d_b(),
        report.cbf.sigma1() * r2
    );
    assert!(report.cbf.sigma1() > 0.99);
    assert!(report.active.iter().all(|a| !a), "envelope should be slack");
    assert_eq!(report.c_star, theory_dimension(2));
}

#[test]
fn colliding_state_is_not_certified() {
    let model = planar_arm(2, 1.0);
    // Obstacle swallowing the whole first link: sd_ov ≈ −0.35 everywhere
    // in the tiny reachable ball.
    let scene = Scene::new(vec![fixed_sphere(
        "swallow",
        0.4,
        Vector3::new(0.4, 0.0, 0.0),
    )])
    .unwrap();
    let x_k = JointConfig::new(vec![0.0, 0.0]);
    match synthesize(&model, &scene, &x_k, 0.01, 64, 3, &SynthesisOptions::default()) {
        Err(CbfError::NoCertifiedSet { .. }) => {}
        Ok(report) => assert!(
            report.cbf.d_b() <= 2.0 * PSD_MARGIN,
            "deep collision must pin d_b at the margin, got {}",
            report.cbf.d_b()
        ),
        other => panic!("unexpected outcome: {other:?}"),
    }
}

#[test]
fn fixed_seed_reproduces_the_report() {
    let model = planar_arm(2, 1.0);
    let scene = Scene::new(vec![fixed_sphere(
        "near",
        0.05,
        Vector3::new(0.5, 0.2, 0.0),
    )])
    .unwrap();
    let x_k = JointConfig::new(vec![0.1, 0.3]);
    let opts = SynthesisOptions {
        count_support: true,
        ..SynthesisOptions::default()
    };
    let a = synthesize(&model, &scene, &x_k, 0.01, 32, 99, &opts).unwrap();
    let b = synthesize(&model, &scene, &x_k, 0.01, 32, 99, &opts).unwrap();
    assert_eq!(a.cbf, b.cbf);
    assert_eq!(a.c_star, b.c_star);
    assert_eq!(a.active, b.active);
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.risk.eps_hi.to_bits(), b.risk.eps_hi.to_bits());
    assert_eq!(a.risk.eps_lo.to_bits(), b.risk.eps_lo.to_bits());
}

#[test]
fn superlevel_set_stays_inside_the_ball() {
    let model = planar_arm(2, 1.2);
    let scene = Scene::new(vec![
        fixed_sphere("a", 0.08, Vector3::new(0.5, 0.1, 0.0)),
        fixed_sphere("b", 0.06, Vector3::new(0.3, -0.25, 0.0)),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dt = 0.01;
    let r = dt * (2.0f64).sqrt() * 1.2;
    for trial in 0..5 {
        let x_k = JointConfig::new(vec![
            rng.gen_range(-0.6..0.6),
            rng.gen_range(-0.6..0.6),
        ]);
        let report = match synthesize(
            &model,
            &scene,
            &x_k,
            dt,
            48,
            trial as u64,
            &SynthesisOptions::default(),
        ) {
            Ok(r) => r,
            Err(CbfError::NoCertifiedSet { .. }) => continue,
            Err(e) => panic!("unexpected error: {e}"),
        };

        // Analytic containment: the b ≥ 0 ellipsoid's largest semi-axis.
        assert!(
            report.cbf.superlevel_radius() <= r + 1e-6,
            "trial {trial}: superlevel radius {} exceeds ball {r}",
            report.cbf.superlevel_radius()
        );

        // Monte-Carlo over a strictly larger ball: whatever has b ≥ 0 must
        // lie inside the reachable ball.
        let big = ReachableBall {
            center: x_k.clone(),
            radius: 1.3 * r,
        };
        for x in sample_ball(&big, 4000, 1000 + trial as u64).unwrap() {
            let (b, _) = evaluate_cbf(&report.cbf, &x);
            if b >= 0.0 {
                assert!(
                    x_k.distance(&x) <= r + 1e-6,
                    "trial {trial}: b = {b:.3e} at distance {}",
                    x_k.distance(&x)
                );
            }
        }
    }
}

#[test]
fn fresh_sample_violation_stays_under_the_certificate() {
    // A near-contact but feasible state: the obstacle sits ~24 mm off the
    // elbow sphere while the reachable ball sweeps it by ~20 mm, so the
    // distance floor actually binds. Exact support counting for a tight
    // certificate, then an independent Monte-Carlo estimate of the
    // violation probability.
    let model = planar_arm(2, 3.0);
    let scene = Scene::new(vec![fixed_sphere(
        "edge",
        0.05,
        Vector3::new(0.48319, 0.14746, 0.0),
    )])
    .unwrap();
    let x_k = JointConfig::new(vec![0.15, -0.2]);
    let dt = 0.02;
    let (n_bar, _) = required_samples(theory_dimension(2), 0.2, 0.05, 20_000, 1e-3).unwrap();
    let opts = SynthesisOptions {
        count_support: true,
        ..SynthesisOptions::default()
    };
    let report = synthesize(&model, &scene, &x_k, dt, n_bar, 12, &opts).unwrap();
    assert!(report.c_star <= theory_dimension(2));
    assert!(report.risk.eps_hi < 0.3);

    let ball = reachable_ball(&model, &x_k, dt).unwrap();
    let fresh = sample_ball(&ball, 10_000, 777).unwrap();
    let mut violations = 0usize;
    for x in &fresh {
        let sd = overall_sdf(&model, x, &scene, 0.0).unwrap().sd_ov;
        let (b, _) = evaluate_cbf(&report.cbf, x);
        if b > sd {
            violations += 1;
        }
    }
    let v_hat = violations as f64 / fresh.len() as f64;
    assert!(
        v_hat <= report.risk.eps_hi,
        "V̂ = {v_hat} exceeds ε̄(c*) = {}",
        report.risk.eps_hi
    );
}

#[test]
fn decrease_rows_bind_only_for_explicit_candidates() {
    let model = planar_arm(2, 1.0);
    let x_k = JointConfig::new(vec![0.0, 0.0]);
    let ball = ReachableBall {
        center: x_k.clone(),
        radius: 0.02,
    };
    // Two samples on the same side of the center so a candidate pointing
    // away from them has positive decrease margins.
    let mut batch = handmade_batch(&x_k, &[0.01, 0.0], 0.5);
    let extra = handmade_batch(&x_k, &[0.008, 0.005], 0.4);
    batch.samples.extend(extra.samples);
    batch.sdf.extend(extra.sdf);

    let candidate = [-0.5, 0.0];
    let assembled =
        assemble_program(&model, &x_k, &ball, &batch, Some(&candidate), 1.0).unwrap();
    assert_eq!(assembled.scenario_rows().len(), 4); // 2 envelope + 2 decrease
    let sol = solve(&assembled.program).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    for row in assembled.invariance_rows.iter().flatten() {
        assert!(
            assembled.program.row_value(*row, &sol.z) >= -1e-7,
            "decrease row violated at the optimum"
        );
    }

    // Without a candidate the same batch yields only the envelope rows.
    let bare = assemble_program(&model, &x_k, &ball, &batch, None, 1.0).unwrap();
    assert_eq!(bare.scenario_rows().len(), 2);
    assert!(bare.invariance_rows.iter().all(|r| r.is_none()));
}

#[test]
fn synthesis_with_candidate_and_alternation_smoke() {
    let model = planar_arm(2, 1.0);
    let scene = Scene::new(vec![fixed_sphere(
        "side",
        0.05,
        Vector3::new(0.5, 0.2, 0.0),
    )])
    .unwrap();
    let x_k = JointConfig::new(vec![0.0, 0.1]);
    // A tiny candidate keeps the decrease rows satisfiable even with
    // samples all around the center (the margin scales with ‖u‖).
    let opts = SynthesisOptions {
        u_candidate: Some(vec![1e-4, -1e-4]),
        alpha: 10.0,
        rounds: 3,
        ..SynthesisOptions::default()
    };
    let report = synthesize(&model, &scene, &x_k, 0.01, 32, 4, &opts).unwrap();
    assert!(report.cbf.d_b() > 0.0);
    assert!(report.rounds_used >= 1 && report.rounds_used <= 3);

    // An aggressive candidate cannot be certified against a dense ball of
    // samples: the decrease rows force the barrier negative somewhere the
    // envelope cannot absorb.
    let bad = SynthesisOptions {
        u_candidate: Some(vec![1.0, 1.0]),
        alpha: 1.0,
        rounds: 1,
        ..SynthesisOptions::default()
    };
    assert!(matches!(
        synthesize(&model, &scene, &x_k, 0.01, 32, 4, &bad),
        Err(CbfError::NoCertifiedSet { .. })
    ));
}

#[test]
fn synthesize_validates_inputs() {
    let model = planar_arm(2, 1.0);
    let scene = Scene::empty();
    let x_k = JointConfig::new(vec![0.0, 0.0]);
    // n_bar must exceed the certificate dimension (8 for two joints).
    assert!(matches!(
        synthesize(&model, &scene, &x_k, 0.01, 8, 0, &SynthesisOptions::default()),
        Err(CbfError::Invalid(_))
    ));
    // An empty scene yields only vacuous samples.
    assert!(matches!(
        synthesize(&model, &scene, &x_k, 0.01, 32, 0, &SynthesisOptions::default()),
        Err(CbfError::NoScenarios(32))
    ));
    // Nonpositive dt.
    assert!(matches!(
        synthesize(&model, &scene, &x_k, 0.0, 32, 0, &SynthesisOptions::default()),
        Err(CbfError::Invalid(_))
    ));
}
