use super::*;
use nalgebra::{dmatrix, dvector};

fn complete(n: usize) -> GraphTopology {
    GraphTopology::complete(n, true)
}

#[test]
fn discrete_fixed_point_at_zero_opinions() {
    let w = dmatrix![0.5, -1.0; -1.0, 2.0];
    let s = SystemState::new(DVector::zeros(2), w.clone()).unwrap();
    let next = discrete_step(&s, &complete(2), 0.01, 0.01);
    assert_eq!(next.v, DVector::zeros(2));
    assert_eq!(next.w, w);
}

#[test]
fn discrete_scalar_self_loop() {
    let s = SystemState::new(dvector![1.0], dmatrix![1.0]).unwrap();
    let next = discrete_step(&s, &complete(1), 1.0, 1.0);
    assert_eq!(next.v, dvector![2.0]);
    assert_eq!(next.w, dmatrix![2.0]);
    assert_eq!(next.t, 1.0);
}

#[test]
fn discrete_pair_without_ties() {
    let s = SystemState::new(dvector![1.0, -1.0], DMatrix::zeros(2, 2)).unwrap();
    let g = GraphTopology::complete(2, false);
    let next = discrete_step(&s, &g, 0.01, 0.01);
    assert_eq!(next.v, dvector![1.0, -1.0]);
    assert_eq!(next.w, dmatrix![0.0, -0.01; -0.01, 0.0]);

    let next = discrete_step(&s, &complete(2), 0.01, 0.01);
    assert_eq!(next.w, dmatrix![0.01, -0.01; -0.01, 0.01]);
}

#[test]
fn masked_entries_are_frozen_and_silent() {
    // path 0-1-2; the (0, 2) tie is outside the graph.
    let g = GraphTopology::from_edges(3, [(0, 1), (1, 2)], false).unwrap();
    let w = dmatrix![0.0, 0.1, 5.0; 0.1, 0.0, 0.1; 5.0, 0.1, 0.0];
    let s = SystemState::new(dvector![1.0, 0.0, -1.0], w).unwrap();
    let next = discrete_step(&s, &g, 1.0, 1.0);
    assert_eq!(next.w[(0, 2)], 5.0);
    assert_eq!(next.w[(2, 0)], 5.0);
    assert_eq!(next.w[(0, 0)], 0.0);
    // node 0 only hears node 1, which is silent
    assert_eq!(next.v[0], 1.0);
    assert_eq!(next.v[1], 0.1 * 1.0 - 0.1 * 1.0);
}

#[test]
fn zero_opinions_stay_put_until_max_steps() {
    let w0 = dmatrix![1.0, 0.3; 0.3, -0.5];
    let s = SystemState::new(DVector::zeros(2), w0.clone()).unwrap();
    let mut cfg = SimConfig::continuous();
    cfg.max_steps = 200;
    let traj = integrate(&s, &complete(2), &cfg).unwrap();
    assert_eq!(traj.stop_reason, StopReason::MaxSteps);
    assert!(traj
        .samples
        .iter()
        .all(|x| x.w == w0 && x.v == DVector::zeros(2)));

    let mut cfg = SimConfig::discrete();
    cfg.max_steps = 50;
    let traj = run_discrete(&s, &complete(2), &cfg).unwrap();
    assert_eq!(traj.stop_reason, StopReason::MaxSteps);
    assert_eq!(traj.steps, 50);
}

#[test]
fn samples_strictly_increase() {
    let s = SystemState::new(dvector![0.3, -0.7, 0.2], DMatrix::identity(3, 3)).unwrap();
    let mut cfg = SimConfig::continuous();
    cfg.sample_every = 7;
    let traj = integrate(&s, &complete(3), &cfg).unwrap();
    assert_eq!(traj.stop_reason, StopReason::Blowup);
    assert!(traj.times().windows(2).all(|w| w[0] < w[1]));
    assert_eq!(traj.last().t, traj.stop_time);
    assert!(traj.last().peak() > 1e20);
}

#[test]
fn negative_self_appraisal_collapses() {
    // W(0) = -2I with small opinions: no growing mode, V decays to zero.
    let s = SystemState::new(dvector![0.1, 0.05, 0.08], DMatrix::identity(3, 3) * -2.0).unwrap();
    let mut cfg = SimConfig::continuous();
    cfg.dt = 1e-2;
    let traj = integrate(&s, &complete(3), &cfg).unwrap();
    assert_eq!(traj.stop_reason, StopReason::OpinionCollapse);
    assert!(traj.last().v.norm() < COLLAPSE_TOL);
}

#[test]
fn symmetry_is_preserved() {
    let w0 = dmatrix![0.2, -0.4, 0.1; -0.4, 0.5, 0.3; 0.1, 0.3, -0.6];
    let s = SystemState::new(dvector![0.5, -0.2, 0.9], w0).unwrap();
    let traj = integrate(&s, &complete(3), &SimConfig::continuous()).unwrap();
    for x in &traj.samples {
        assert!(x.asymmetry() < 1e-9 * (1.0 + max_abs(&x.w)));
    }
}

#[test]
fn riccati_residual_vanishes_at_start_and_detects_perturbation() {
    let v0 = dvector![0.4, -0.3, 0.8];
    let w0 = dmatrix![0.2, -0.4, 0.1; -0.4, 0.5, 0.3; 0.1, 0.3, -0.6];
    let c = SymmetricMatrix::new(&v0 * v0.transpose() - &w0 * &w0).unwrap();
    let mut s = SystemState::new(v0, w0).unwrap();
    assert!(riccati_residual(&s, &c) < 1e-15);
    s.w[(0, 1)] += 1e-3;
    s.w[(1, 0)] += 1e-3;
    let r = riccati_residual(&s, &c);
    assert!(r > 1e-4 && r < 1e-2, "residual {r}");
}

#[test]
fn riccati_residual_along_trajectory() {
    let v0 = dvector![0.4, -0.3, 0.8, 0.1];
    let w0 = dmatrix![
        0.2, -0.4, 0.1, 0.0;
        -0.4, 0.5, 0.3, 0.2;
        0.1, 0.3, -0.6, -0.1;
        0.0, 0.2, -0.1, 0.3
    ];
    let c = SymmetricMatrix::new(&v0 * v0.transpose() - &w0 * &w0).unwrap();
    let s = SystemState::new(v0, w0).unwrap();
    let mut cfg = SimConfig::continuous();
    cfg.blowup_threshold = 1e3;
    let traj = integrate(&s, &complete(4), &cfg).unwrap();
    for x in &traj.samples {
        let scale = 1.0 + max_abs(&x.w).powi(2);
        assert!(riccati_residual(x, &c) < 1e-6 * scale);
    }
}

#[test]
fn scalar_run_is_monotone_until_blowup() {
    let s = SystemState::new(dvector![0.5], dmatrix![0.3]).unwrap();
    let traj = integrate(&s, &complete(1), &SimConfig::continuous()).unwrap();
    assert_eq!(traj.stop_reason, StopReason::Blowup);
    for w in traj.samples.windows(2) {
        assert!(w[1].v[0] > w[0].v[0]);
        assert!(w[1].w[(0, 0)] > w[0].w[(0, 0)]);
    }
}

#[test]
fn opinion_ode_zero_stays_zero() {
    let c = SymmetricMatrix::from_diagonal(&[1.0, -2.0]);
    let traj =
        opinion_ode_integrate(&DVector::zeros(2), &DVector::zeros(2), &c, 1e-2, 1.0, 1e20).unwrap();
    assert_eq!(traj.stop_reason, StopReason::Horizon);
    assert!(traj.v.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn opinion_ode_matches_sinh_solution() {
    // f(t) = a / sinh(a t + b) solves f'' = 2f³ + a²f, i.e. C = [-a²].
    let (a, b) = (1.0f64, 1.0f64);
    let f = |t: f64| a / (a * t + b).sinh();
    let fp = |t: f64| -a * a * (a * t + b).cosh() / (a * t + b).sinh().powi(2);
    let c = SymmetricMatrix::from_diagonal(&[-a * a]);
    let traj =
        opinion_ode_integrate(&dvector![f(0.0)], &dvector![fp(0.0)], &c, 1e-3, 2.0, 1e20).unwrap();
    assert_eq!(traj.stop_reason, StopReason::Horizon);
    for (t, v) in traj.times.iter().zip(&traj.v) {
        assert!((v[0] - f(*t)).abs() <= 1e-6 * f(*t).abs(), "t = {t}");
    }
}

#[test]
fn opinion_ode_matches_sin_solution_before_pole() {
    // g(t) = a / sin(a t + b) solves g'' = 2g³ − a²g, i.e. C = [a²].
    let (a, b) = (1.0f64, 1.0f64);
    let g = |t: f64| a / (a * t + b).sin();
    let gp = |t: f64| -a * a * (a * t + b).cos() / (a * t + b).sin().powi(2);
    let end = std::f64::consts::PI - 1.0 - 0.05;
    let c = SymmetricMatrix::from_diagonal(&[a * a]);
    let traj =
        opinion_ode_integrate(&dvector![g(0.0)], &dvector![gp(0.0)], &c, 1e-3, end, 1e20).unwrap();
    assert_eq!(traj.stop_reason, StopReason::Horizon);
    assert!((traj.stop_time - end).abs() < 1e-12);
    for (t, v) in traj.times.iter().zip(&traj.v) {
        assert!((v[0] - g(*t)).abs() <= 1e-5 * g(*t).abs(), "t = {t}");
    }
}

#[test]
fn dissonance_examples() {
    let g = GraphTopology::from_edges(2, [(0, 1)], false).unwrap();
    let zero = SystemState::new(DVector::zeros(2), dmatrix![0.0, 3.0; 3.0, 0.0]).unwrap();
    assert_eq!(dissonance(&zero, &g).unwrap(), 0.0);
    let s = SystemState::new(dvector![1.0, 2.0], dmatrix![0.0, 3.0; 3.0, 0.0]).unwrap();
    assert_eq!(dissonance(&s, &g).unwrap(), 6.0);
    assert!(matches!(
        dissonance(&s, &GraphTopology::complete(2, true)),
        Err(DynamicsError::SelfLoopPresent)
    ));
}

#[test]
fn block_state_accessors() {
    let v = dvector![1.0, 2.0, 3.0, 4.0];
    let w = DMatrix::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
    let s = SystemState::with_blocks(2, v, w).unwrap();
    assert_eq!(s.n(), 2);
    assert_eq!(s.opinion(1).as_slice(), &[3.0, 4.0]);
    assert_eq!(s.block(0, 1), dmatrix![2.0, 3.0; 6.0, 7.0]);
    assert!(SystemState::with_blocks(3, dvector![1.0, 2.0], DMatrix::zeros(2, 2)).is_err());
    assert!(SystemState::new(dvector![1.0, 2.0], DMatrix::zeros(3, 3)).is_err());
}

#[test]
fn block_field_matches_elementwise_definition() {
    let g = GraphTopology::from_edges(3, [(0, 1), (1, 2)], false).unwrap();
    let v = dvector![0.3, -0.1, 0.7, 0.2, -0.5, 0.4];
    let w = DMatrix::from_fn(6, 6, |r, c| ((r * 7 + c * 3) % 5) as f64 * 0.1 - 0.2);
    let s = SystemState::with_blocks(2, v, w).unwrap();
    let (dv, dw) = vector_field(&s, &g);
    for i in 0..3 {
        let mut expect = DVector::zeros(2);
        for &j in g.neighbors(i) {
            expect += s.block(i, j) * s.opinion(j);
        }
        assert!((dv.rows(2 * i, 2) - expect).amax() < 1e-15);
        for j in 0..3 {
            let got = dw.view((2 * i, 2 * j), (2, 2));
            if g.has_edge(i, j) {
                assert!((got - s.opinion(i) * s.opinion(j).transpose()).amax() < 1e-15);
            } else {
                assert_eq!(got.amax(), 0.0);
            }
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let s = SystemState::new(dvector![1.0], dmatrix![1.0]).unwrap();
    let mut cfg = SimConfig::continuous();
    cfg.dt = 0.0;
    assert!(matches!(
        integrate(&s, &complete(1), &cfg),
        Err(DynamicsError::InvalidConfig(_))
    ));
    let mut cfg = SimConfig::discrete();
    cfg.a = -1.0;
    assert!(matches!(
        run_discrete(&s, &complete(1), &cfg),
        Err(DynamicsError::InvalidConfig(_))
    ));
    assert!(matches!(
        integrate(&s, &complete(1), &SimConfig::discrete()),
        Err(DynamicsError::InvalidConfig(_))
    ));
    assert!(matches!(
        integrate(&s, &complete(2), &SimConfig::continuous()),
        Err(DynamicsError::Dimension(_))
    ));
}

#[test]
fn csv_and_json_exports() {
    let s = SystemState::new(dvector![0.5, -0.5], DMatrix::identity(2, 2)).unwrap();
    let mut cfg = SimConfig::discrete();
    cfg.max_steps = 3;
    let g = complete(2);
    let traj = run_discrete(&s, &g, &cfg).unwrap();
    let csv = trajectory_csv(&traj, &g);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "t,v_0,v_1,w_0_0,w_0_1,w_1_0,w_1_1,v_norm_sq,min_triangle_product"
    );
    assert_eq!(lines.len(), 1 + traj.len());
    assert_eq!(lines[1], "0,0.5,-0.5,1,0,0,1,0.5,");
    assert_eq!(csv, trajectory_csv(&traj, &g));

    let json = trajectory_json(&traj, serde_json::json!({"seed": 7}));
    assert_eq!(json["meta"]["seed"], 7);
    assert_eq!(json["stop_reason"], "max_steps");
    assert_eq!(json["samples"].as_array().unwrap().len(), traj.len());
    assert_eq!(json["samples"][0]["w"][0][0], 1.0);

    let sparse = GraphTopology::from_edges(3, [(0, 2)], false).unwrap();
    let s3 = SystemState::new(dvector![1.0, 0.0, 1.0], DMatrix::zeros(3, 3)).unwrap();
    let traj = run_discrete(&s3, &sparse, &cfg).unwrap();
    assert!(trajectory_csv(&traj, &sparse).starts_with("t,v_0,v_1,v_2,w_0_2,v_norm_sq"));
}
