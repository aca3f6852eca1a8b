//! Fixed-step co-simulation of plant, controller and observers.
//!
//! Everything except the DREM scalars and the gradient `θ̂` lives in one
//! block `[x | x_c | D | observer blocks…]` advanced by a single RK4 step, so
//! all parts see parameter changes at the same grid instant. `D` integrates
//! `−Ẇ` for the PI-PBC storage function, which gives a dissipation
//! inequality check whose defect is pure integration error.

use std::time::{Duration, Instant};

use super::rk4::{rk4_step, Rk4Workspace};
use super::scenario::{ControlUpdate, ControllerSpec, EventKind, Feedback, IntegratorInit, PlantSpec, Scenario};
use super::trajectory::{ObserverSample, Record, Trajectory};
use crate::control::{lyapunov_value, passive_output_matrix, ClassicalPiState, ControlOutput, PiPbcState};
use crate::cuk::{build_cuk, solve_equilibrium, CukParams, RootPolicy};
use crate::error::SimError;
use crate::model::{EquilibriumPair, PHModel, DEFAULT_TOL};
use crate::observers::{Coordinates, LtvSnapshot, Observer, ObserverFrame};
use crate::{Matrix, Vector};

#[derive(Debug, Clone)]
enum Controller {
    PiPbc(PiPbcState),
    Classical(ClassicalPiState),
    OpenLoop(Vec<f64>),
}

impl Controller {
    fn evaluate(&self, model: &PHModel, x: &Vector, x_c: &Vector) -> ControlOutput {
        match self {
            Self::PiPbc(pi) => pi.evaluate(x, x_c),
            Self::Classical(pi) => {
                let v_out = (model.c() * model.co_energy(x))[0];
                pi.evaluate(v_out, x_c[0])
            }
            Self::OpenLoop(u) => ControlOutput { u: u.clone(), xc_dot: Vector::zeros(u.len()), saturated: false },
        }
    }
}

/// Stateful simulation; [`run_scenario`] drives it to the horizon.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    params: Option<(CukParams, RootPolicy)>,
    model: PHModel,
    controller: Controller,
    observers: Vec<Observer>,
    x_star: Vector,
    u_star: Vec<f64>,
    cmat: Matrix,
    reference: f64,
    state: Vec<f64>,
    offsets: Vec<usize>,
    ws: Rk4Workspace,
    k: usize,
    steps: usize,
    events: Vec<(usize, EventKind)>,
    next_event: usize,
    pending_labels: Vec<String>,
    saturated_steps: usize,
}

fn infeasible(epoch: f64) -> impl FnOnce(crate::error::EquilibriumError) -> SimError {
    move |source| SimError::InfeasibleEquilibrium { epoch, source }
}

fn operating_point(
    params: &CukParams,
    reference: f64,
    policy: RootPolicy,
    epoch: f64,
) -> Result<(PHModel, EquilibriumPair), SimError> {
    let model = build_cuk(params)?;
    let eq = solve_equilibrium(params, reference, policy).map_err(infeasible(epoch))?;
    Ok((model, eq.pair))
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, SimError> {
        scenario.validate().map_err(SimError::InvalidScenario)?;
        let (model, pair, params, reference) = match &scenario.plant {
            PlantSpec::Cuk { params, reference, policy } => {
                let (model, pair) = operating_point(params, *reference, *policy, 0.0)?;
                (model, pair, Some((*params, *policy)), *reference)
            }
            PlantSpec::Generic { model, x_star, u_star } => {
                let pair = EquilibriumPair::certify(model, x_star.clone(), u_star.clone(), DEFAULT_TOL)
                    .map_err(infeasible(0.0))?;
                let reference = (model.c() * model.co_energy(x_star))[0];
                (model.clone(), pair, None, reference)
            }
        };
        let (n, m) = (model.n(), model.m());

        let (controller, xc_star) = match &scenario.controller {
            ControllerSpec::PiPbc { kp, ki, saturation } => {
                let mut pi = PiPbcState::new(&model, pair.x_star.clone(), pair.u_star.clone(), kp.clone(), ki.clone());
                pi.saturation = *saturation;
                let xc_star = pi.xc_star().ok();
                (Controller::PiPbc(pi), xc_star)
            }
            ControllerSpec::ClassicalPi { kp, ki, saturation } => {
                let mut pi = ClassicalPiState::new(*kp, *ki, reference);
                pi.saturation = *saturation;
                let xc_star = (*ki != 0.0).then(|| Vector::from_element(1, -pair.u_star[0] / ki));
                (Controller::Classical(pi), xc_star)
            }
            ControllerSpec::OpenLoop { u } => (Controller::OpenLoop(u.clone()), Some(Vector::zeros(m))),
        };
        let xc0 = match &scenario.xc0 {
            IntegratorInit::Zero => Vector::zeros(m),
            IntegratorInit::Equilibrium => xc_star.ok_or_else(|| {
                SimError::InvalidScenario("integrator equilibrium needs an invertible K_I".into())
            })?,
            IntegratorInit::Value(v) => v.clone(),
        };

        let x0 = model.from_co_energy(&scenario.x0);
        let mut observers = Vec::with_capacity(scenario.observers.len());
        for entry in &scenario.observers {
            let frame = ObserverFrame::new(&model, entry.coordinates);
            let to_frame = |v: &Option<Vector>| {
                v.as_ref().map_or_else(|| Vector::zeros(n), |z| frame.to_frame(&model.from_co_energy(z)))
            };
            let (xi0, th0) = (to_frame(&entry.xi0), to_frame(&entry.theta_hat0));
            observers.push(Observer::new(entry.name.clone(), entry.spec.clone(), frame, xi0, th0));
        }

        let mut offsets = Vec::with_capacity(observers.len() + 1);
        let mut len = n + m + 1;
        for o in &observers {
            offsets.push(len);
            len += o.block_len();
        }
        offsets.push(len);
        let mut state = vec![0.0; len];
        state[..n].copy_from_slice(x0.as_slice());
        state[n..n + m].copy_from_slice(xc0.as_slice());
        for (o, w) in observers.iter().zip(offsets.windows(2)) {
            o.pack(&mut state[w[0]..w[1]]);
        }

        let events = scenario.events.iter().map(|e| (scenario.event_index(e.time), e.kind)).collect();
        let cmat = passive_output_matrix(&model, &pair.x_star);
        let mut sim = Self {
            scenario: scenario.clone(),
            params,
            model,
            controller,
            observers,
            x_star: pair.x_star,
            u_star: pair.u_star,
            cmat,
            reference,
            state,
            offsets,
            ws: Rk4Workspace::new(len),
            k: 0,
            steps: scenario.steps(),
            events,
            next_event: 0,
            pending_labels: Vec::new(),
            saturated_steps: 0,
        };
        sim.apply_due_events()?;
        Ok(sim)
    }

    fn n(&self) -> usize {
        self.model.n()
    }

    fn m(&self) -> usize {
        self.model.m()
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn model(&self) -> &PHModel {
        &self.model
    }

    pub fn observers(&self) -> &[Observer] {
        &self.observers
    }

    pub fn step_size(&self) -> f64 {
        self.scenario.step
    }

    pub fn step_index(&self) -> usize {
        self.k
    }

    pub fn total_steps(&self) -> usize {
        self.steps
    }

    pub fn finished(&self) -> bool {
        self.k >= self.steps
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.scenario.step
    }

    /// Plant state in storage variables.
    pub fn state(&self) -> Vector {
        Vector::from_column_slice(&self.state[..self.n()])
    }

    /// Plant state in co-energy variables.
    pub fn state_co_energy(&self) -> Vector {
        self.model.co_energy(&self.state())
    }

    pub fn integrator(&self) -> Vector {
        Vector::from_column_slice(&self.state[self.n()..self.n() + self.m()])
    }

    /// Accumulated `∫−Ẇ dt` (PI-PBC only; zero otherwise).
    pub fn dissipated(&self) -> f64 {
        self.state[self.n() + self.m()]
    }

    /// Restarts the dissipation integral at zero, so that the next step's
    /// increment is available at full relative precision.
    pub fn reset_dissipated(&mut self) {
        let i = self.n() + self.m();
        self.state[i] = 0.0;
    }

    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }

    pub fn u_star(&self) -> &[f64] {
        &self.u_star
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn saturated_steps(&self) -> usize {
        self.saturated_steps
    }

    /// PI-PBC storage function at the current state.
    pub fn lyapunov(&self) -> Option<f64> {
        match &self.controller {
            Controller::PiPbc(pi) => {
                lyapunov_value(&self.model, &pi.ki, &self.state(), &self.integrator(), &self.x_star, &self.u_star).ok()
            }
            _ => None,
        }
    }

    /// State the controller consumes, in storage variables.
    fn feedback_state(&self) -> Vector {
        match self.scenario.feedback {
            Feedback::FullState => self.state(),
            Feedback::Observer(i) => self.observers[i].estimate_native(),
        }
    }

    /// Control action the next step will apply.
    pub fn control(&self) -> ControlOutput {
        self.controller.evaluate(&self.model, &self.feedback_state(), &self.integrator())
    }

    fn apply_due_events(&mut self) -> Result<(), SimError> {
        while let Some(&(idx, kind)) = self.events.get(self.next_event) {
            if idx > self.k {
                break;
            }
            self.next_event += 1;
            self.apply_event(kind)?;
            self.pending_labels.push(kind.label());
        }
        Ok(())
    }

    fn apply_event(&mut self, kind: EventKind) -> Result<(), SimError> {
        let epoch = self.time();
        let (mut params, policy) = self.params.ok_or_else(|| SimError::InvalidScenario("events require the cuk plant".into()))?;
        match kind {
            EventKind::Reference(v) => self.reference = v,
            EventKind::Load(r) => params.r = r,
        }
        let (model, pair) = operating_point(&params, self.reference, policy, epoch)?;
        self.params = Some((params, policy));
        self.model = model;
        match &mut self.controller {
            Controller::PiPbc(pi) => pi.retarget(&self.model, pair.x_star.clone(), pair.u_star.clone()),
            Controller::Classical(pi) => pi.reference = self.reference,
            Controller::OpenLoop(_) => {}
        }
        self.cmat = passive_output_matrix(&self.model, &pair.x_star);
        self.x_star = pair.x_star;
        self.u_star = pair.u_star;
        Ok(())
    }

    /// Advances one step of length `h`.
    pub fn step(&mut self) -> Result<(), SimError> {
        let (n, m) = (self.n(), self.m());
        let h = self.scenario.step;
        let t = self.time();
        let held = self.control();
        if held.saturated {
            self.saturated_steps += 1;
        }

        let update = self.scenario.update;
        let feedback = self.scenario.feedback;
        let Self { model, controller, observers, state, offsets, ws, x_star, u_star, .. } = self;
        let model: &PHModel = model;
        let observers_ref: &[Observer] = observers;
        let frames = [
            ObserverFrame::new(model, Coordinates::Energy),
            ObserverFrame::new(model, Coordinates::CoEnergy),
        ];
        let frame_index = |c: Coordinates| match c {
            Coordinates::Energy => 0,
            Coordinates::CoEnergy => 1,
        };
        let snapshots = |u: &[f64]| -> [Option<LtvSnapshot>; 2] {
            let mut out = [None, None];
            for o in observers_ref {
                let i = frame_index(o.frame.coordinates);
                if out[i].is_none() {
                    out[i] = Some(frames[i].snapshot(model, u));
                }
            }
            out
        };
        let held_snaps = match update {
            ControlUpdate::Hold => Some(snapshots(&held.u)),
            ControlUpdate::PerStage => None,
        };
        let xc_star = match &*controller {
            Controller::PiPbc(pi) => pi.xc_star().ok(),
            _ => None,
        };
        let mut elapsed = vec![Duration::ZERO; observers_ref.len()];

        let rhs = |_t: f64, s: &[f64], out: &mut [f64]| {
            let x = Vector::from_column_slice(&s[..n]);
            let xc = Vector::from_column_slice(&s[n..n + m]);
            let fb = match feedback {
                Feedback::FullState => x.clone(),
                Feedback::Observer(i) => {
                    let o = &observers_ref[i];
                    o.frame.from_frame(&o.estimate_from_block(&s[offsets[i]..offsets[i + 1]]))
                }
            };
            let ctl = controller.evaluate(model, &fb, &xc);
            let u: &[f64] = match update {
                ControlUpdate::Hold => &held.u,
                ControlUpdate::PerStage => &ctl.u,
            };

            let dx = model.dynamics(&x, u);
            out[..n].copy_from_slice(dx.as_slice());
            out[n..n + m].copy_from_slice(ctl.xc_dot.as_slice());
            out[n + m] = match (&*controller, &xc_star) {
                (Controller::PiPbc(pi), Some(xcs)) => {
                    // −Ẇ = eᵀRe − ỹᵀũ − x̃_cᵀK_I ẋ_c with e = Q(x − x*)
                    let dev = &x - &*x_star;
                    let e = model.co_energy(&dev);
                    let ytilde = &pi.cmat * &dev;
                    let utilde = Vector::from_iterator(m, u.iter().zip(u_star.iter()).map(|(a, b)| a - b));
                    let xct = &xc - xcs;
                    e.dot(&(model.r() * &e)) - ytilde.dot(&utilde) - xct.dot(&(&pi.ki * &ctl.xc_dot))
                }
                _ => 0.0,
            };

            let stage_snaps;
            let snaps = match &held_snaps {
                Some(s) => s,
                None => {
                    stage_snaps = snapshots(u);
                    &stage_snaps
                }
            };
            for (i, o) in observers_ref.iter().enumerate() {
                let started = Instant::now();
                let fi = frame_index(o.frame.coordinates);
                let sys = snaps[fi].as_ref().expect("snapshot for every used frame");
                let y_m = frames[fi].measure(model, &x);
                let (a, b) = (offsets[i], offsets[i + 1]);
                o.derivative(sys, &s[a..b], &y_m, &mut out[a..b]);
                elapsed[i] += started.elapsed();
            }
        };
        rk4_step(rhs, t, state, h, ws)?;

        let x_end = Vector::from_column_slice(&state[..n]);
        for (i, o) in observers.iter_mut().enumerate() {
            let started = Instant::now();
            o.unpack(&state[offsets[i]..offsets[i + 1]]);
            let y_m = o.frame.measure(model, &x_end);
            o.post_step(model.c(), &y_m, h);
            o.elapsed += elapsed[i] + started.elapsed();
        }
        self.k += 1;
        self.apply_due_events()
    }

    /// Snapshot of the current instant as a trajectory record.
    pub fn sample(&mut self) -> Record {
        let x = self.state();
        let z = self.model.co_energy(&x);
        let ctl = self.control();
        let ytilde = (&self.cmat * (&x - &self.x_star)).iter().copied().collect();
        let observers = self
            .observers
            .iter()
            .map(|o| {
                let x_hat = self.model.co_energy(&o.estimate_native());
                ObserverSample { err_norm: (&x_hat - &z).norm(), x_hat, omega: o.omega(), delta: o.delta() }
            })
            .collect();
        let event = (!self.pending_labels.is_empty()).then(|| self.pending_labels.join(";"));
        self.pending_labels.clear();
        Record {
            t: self.time(),
            x: z,
            u: ctl.u,
            ytilde,
            w: self.lyapunov(),
            observers,
            saturated: ctl.saturated,
            event,
            reference: self.reference,
        }
    }

    fn empty_trajectory(&self) -> Trajectory {
        Trajectory {
            labels: self.model.labels().to_vec(),
            observer_names: self.observers.iter().map(|o| o.name.clone()).collect(),
            ..Default::default()
        }
    }

    fn finish(&self, traj: &mut Trajectory) {
        traj.saturated_steps = self.saturated_steps;
        traj.observer_seconds = self.observers.iter().map(|o| o.elapsed.as_secs_f64()).collect();
    }

    /// Runs to the horizon, returning whatever was recorded if a step fails.
    pub fn run_partial(mut self) -> (Trajectory, Option<SimError>) {
        let mut traj = self.empty_trajectory();
        traj.records.push(self.sample());
        let stride = self.scenario.stride;
        let mut failure = None;
        while !self.finished() {
            if let Err(e) = self.step() {
                failure = Some(e);
                break;
            }
            if self.k % stride == 0 || self.finished() {
                traj.records.push(self.sample());
            }
        }
        self.finish(&mut traj);
        (traj, failure)
    }

    pub fn run(self) -> Result<Trajectory, SimError> {
        match self.run_partial() {
            (traj, None) => Ok(traj),
            (_, Some(e)) => Err(e),
        }
    }
}

/// Integrates the scenario to its horizon.
pub fn run_scenario(scenario: &Scenario) -> Result<Trajectory, SimError> {
    Simulation::new(scenario)?.run()
}
