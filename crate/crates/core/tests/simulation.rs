use phlab::observers::{observability_gramian, GradientMode, ObserverSpec};
use phlab::sim::{
    compute_metrics, rk4_step, ControlUpdate, ControllerSpec, Event, EventKind, Feedback, IntegratorInit,
    ObserverEntry, Rk4Workspace, Scenario, Simulation,
};
use phlab::{presets, run_scenario, ConfigDocument, Coordinates, Matrix, SimError, Trajectory, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `e^{A}` by scaling and squaring with a truncated Taylor series.
fn expm(a: &Matrix) -> Matrix {
    let norm = a.abs().row_sum().max();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let n = a.nrows();
    let mut term = Matrix::identity(n, n);
    let mut sum = Matrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn stable_matrix(rng: &mut ChaCha8Rng) -> Matrix {
    let m = Matrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
    // Shifting by the top eigenvalue of the symmetric part makes that part
    // negative definite, hence the matrix stable.
    let shift = (0.5 * (&m + m.transpose())).symmetric_eigenvalues().max() + 0.5;
    m - Matrix::identity(4, 4) * shift
}

fn integrate_linear(a: &Matrix, x0: &Vector, h: f64, steps: usize) -> Vector {
    let mut y = x0.as_slice().to_vec();
    let mut ws = Rk4Workspace::new(4);
    for k in 0..steps {
        rk4_step(
            |_, s, out| {
                let d = a * Vector::from_column_slice(s);
                out.copy_from_slice(d.as_slice());
            },
            k as f64 * h,
            &mut y,
            h,
            &mut ws,
        )
        .unwrap();
    }
    Vector::from_vec(y)
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let a = stable_matrix(&mut rng);
        let x0 = Vector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let exact = expm(&(&a * 2.0)) * &x0;
        let e1 = (integrate_linear(&a, &x0, 0.1, 20) - &exact).norm();
        let e2 = (integrate_linear(&a, &x0, 0.05, 40) - &exact).norm();
        let ratio = e1 / e2;
        assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn rk4_flags_non_finite_state() {
    let mut y = vec![1.0];
    let mut ws = Rk4Workspace::new(1);
    let err = rk4_step(|_, _, out| out[0] = f64::NAN, 0.0, &mut y, 0.1, &mut ws).unwrap_err();
    assert!(matches!(err, SimError::NonFiniteState { .. }));
}

fn short(mut s: Scenario, horizon: f64) -> Scenario {
    s.horizon = horizon;
    s.step = 1e-7;
    s.stride = 100;
    s
}

fn entry(name: &str, spec: ObserverSpec, coordinates: Coordinates) -> ObserverEntry {
    let mut e = ObserverEntry::new(name, spec);
    e.coordinates = coordinates;
    e
}

#[test]
fn emulator_error_is_transition_matrix_times_theta() {
    let mut s = short(Scenario::cuk_default(), 2e-3);
    s.observers = vec![
        entry("emu", ObserverSpec::Emulator, Coordinates::Energy),
        entry("fct", ObserverSpec::FctGpebo { lambda: 5.0, gamma: 1e12, mu: 1e-6 }, Coordinates::Energy),
    ];
    let mut sim = Simulation::new(&s).unwrap();
    let theta = sim.state();
    while !sim.finished() {
        sim.step().unwrap();
    }
    let xi_emu = sim.observers()[0].estimate();
    let phi = &sim.observers()[1].gpebo().unwrap().phi;
    let err = sim.state() - xi_emu;
    let diff = (&err - phi * &theta).norm();
    assert!(diff <= 1e-9 * err.norm(), "{diff} vs {}", err.norm());
}

#[test]
fn gramian_of_recorded_transition_is_positive_definite() {
    let mut s = short(Scenario::cuk_default(), 5e-3);
    s.observers = vec![entry("fct", ObserverSpec::FctGpebo { lambda: 5.0, gamma: 1e12, mu: 1e-6 }, Coordinates::CoEnergy)];
    let mut sim = Simulation::new(&s).unwrap();
    let mut samples = vec![(0.0, sim.observers()[0].gpebo().unwrap().phi.clone())];
    while !sim.finished() {
        sim.step().unwrap();
        if sim.step_index() % 100 == 0 {
            samples.push((sim.time(), sim.observers()[0].gpebo().unwrap().phi.clone()));
        }
    }
    let c = Matrix::from_row_slice(1, 4, &[0.0, 0.0, 0.0, 1.0]);
    let report = observability_gramian(&samples, &c).unwrap();
    assert!(report.lambda_min > 0.0);
    assert!(report.lambda_max >= report.lambda_min);
    // Φ decays, so the energy of CΦ over the second half is smaller.
    let half = samples.len() / 2;
    let early = observability_gramian(&samples[..=half], &c).unwrap();
    let late = observability_gramian(&samples[half..], &c).unwrap();
    assert!(late.lambda_max < early.lambda_max);
}

#[test]
fn kbf_gain_stays_positive_definite_and_tracks() {
    let mut s = short(Scenario::cuk_default(), 0.01);
    let eye = Matrix::identity(4, 4);
    s.observers = vec![
        entry("kbf", ObserverSpec::Kbf { s: eye.clone(), h0: eye }, Coordinates::CoEnergy),
        entry("emu", ObserverSpec::Emulator, Coordinates::CoEnergy),
    ];
    let mut sim = Simulation::new(&s).unwrap();
    while !sim.finished() {
        sim.step().unwrap();
        if sim.step_index() % 5000 == 0 {
            if let phlab::observers::ObserverState::Kbf(k) = &sim.observers()[0].state {
                assert!(k.h.symmetric_eigenvalues().min() > 0.0);
            }
        }
    }
    let rec = sim.sample();
    // Injection helps relative to the open-loop copy, if only slightly.
    assert!(rec.observers[0].err_norm <= rec.observers[1].err_norm * 1.05);
}

#[test]
fn gradient_estimators_reduce_the_error() {
    let mut s = short(Scenario::cuk_default(), 0.01);
    s.observers = vec![
        entry("raw", ObserverSpec::Gradient { lambda: 5.0, gamma: 1e8, mode: GradientMode::Raw }, Coordinates::CoEnergy),
        entry("ext", ObserverSpec::Gradient { lambda: 5.0, gamma: 1e8, mode: GradientMode::Extended }, Coordinates::CoEnergy),
        entry("emu", ObserverSpec::Emulator, Coordinates::CoEnergy),
    ];
    let traj = run_scenario(&s).unwrap();
    let first = &traj.records[0];
    let last = traj.records.last().unwrap();
    for i in 0..2 {
        assert!(last.observers[i].err_norm < first.observers[i].err_norm);
        assert!(last.observers[i].err_norm.is_finite());
    }
}

#[test]
fn observer_feedback_run_matches_estimate_after_convergence() {
    let doc = presets::load("fig-full-state").unwrap();
    let (_, doc) = doc.variants().unwrap().remove(1);
    let mut doc = doc;
    doc.scenario.horizon = 0.01;
    let s = doc.to_scenario().unwrap();
    assert_eq!(s.feedback, Feedback::Observer(0));
    let traj = run_scenario(&s).unwrap();
    let m = compute_metrics(&traj, &doc.tolerances());
    let t_c = m.observers[0].t_c.expect("excited within 10 ms");
    for r in traj.records.iter().filter(|r| r.t > t_c) {
        assert!(r.observers[0].err_norm <= 1e-5 * r.x.norm());
    }
}

#[test]
fn csv_round_trip_of_a_run() {
    let mut s = short(Scenario::cuk_default(), 1e-3);
    s.observers = vec![entry("fct", ObserverSpec::FctGpebo { lambda: 5.0, gamma: 1e12, mu: 1e-6 }, Coordinates::CoEnergy)];
    s.events = vec![Event { time: 5e-4, kind: EventKind::Load(30.0) }];
    let traj = run_scenario(&s).unwrap();
    let csv = traj.to_csv();
    let back = Trajectory::from_csv(&csv).unwrap();
    assert_eq!(back.records, traj.records);
    assert_eq!(back.to_csv(), csv);
    assert_eq!(traj.records.iter().filter(|r| r.event.as_deref() == Some("load=30")).count(), 1);
}

#[test]
fn infeasible_reference_step_reports_its_epoch() {
    let mut s = short(Scenario::cuk_default(), 1e-3);
    s.events = vec![Event { time: 4e-4, kind: EventKind::Reference(-40.0) }];
    let (traj, err) = Simulation::new(&s).unwrap().run_partial();
    match err {
        Some(SimError::InfeasibleEquilibrium { epoch, .. }) => assert!((epoch - 4e-4).abs() < 1e-12),
        other => panic!("unexpected {other:?}"),
    }
    assert!(!traj.records.is_empty());
    assert!(traj.records.last().unwrap().t <= 4e-4 + 1e-12);
}

#[test]
fn per_stage_and_hold_agree_near_equilibrium() {
    let mut s = short(Scenario::cuk_default(), 2e-4);
    s.xc0 = IntegratorInit::Equilibrium;
    s.x0 = Vector::from_column_slice(&[1.23232658, 26.1800448141, -0.75, -15.1]);
    let hold = run_scenario(&s).unwrap();
    s.update = ControlUpdate::PerStage;
    let stage = run_scenario(&s).unwrap();
    let (a, b) = (&hold.records.last().unwrap().x, &stage.records.last().unwrap().x);
    assert!((a - b).norm() < 1e-3 * a.norm());
}

#[test]
fn open_loop_reaches_the_duty_ratio_equilibrium() {
    let mut s = Scenario::cuk_default();
    s.controller = ControllerSpec::OpenLoop { u: vec![0.621656689879] };
    s.horizon = 0.2;
    s.step = 1e-6;
    s.stride = 1000;
    let traj = run_scenario(&s).unwrap();
    let v4 = traj.records.last().unwrap().x[3];
    assert!((v4 + 15.0).abs() < 0.05, "{v4}");
    assert!(traj.records.iter().all(|r| r.w.is_none()));
}

#[test]
fn every_preset_parses_and_builds() {
    for p in presets::PRESETS {
        let doc = ConfigDocument::from_toml_str(p.source).unwrap();
        for (_, d) in doc.variants().unwrap() {
            d.to_scenario().unwrap();
        }
    }
}
