//! Shifted-passivity PI control.
//!
//! Around an assignable equilibrium `(x*, u*)` the model can be written as
//! `x̃̇ = Λ(u*)x̃ + G_N(x)ũ`, and the output `ỹ = 𝒞x̃` with `𝒞 = G_N(x*)ᵀQ`
//! satisfies `x̃ᵀQ G_N(x) v = ỹᵀv` for every `v`. A PI on `ỹ` is then
//! stabilizing, certified by `W = ½x̃ᵀQx̃ + ½x̃_cᵀK_I x̃_c`.

use serde::{Deserialize, Serialize};

use crate::error::ControlError;
use crate::model::PHModel;
use crate::{Matrix, Vector};

/// `G_N(x)`: column `i` is `GᵢE + JᵢQx` for `i = 1..m`.
pub fn gn_matrix(model: &PHModel, x: &Vector) -> Matrix {
    let qx = model.co_energy(x);
    let mut gn = Matrix::zeros(model.n(), model.m());
    for i in 1..=model.m() {
        let col = model.g(i) * model.e() + model.j(i) * &qx;
        gn.set_column(i - 1, &col);
    }
    gn
}

/// Passive-output matrix `𝒞 = G_N(x*)ᵀQ` (`m × n`).
pub fn passive_output_matrix(model: &PHModel, x_star: &Vector) -> Matrix {
    gn_matrix(model, x_star).transpose() * model.q()
}

/// `ỹ = 𝒞(x − x*)`.
pub fn shifted_output(cmat: &Matrix, x: &Vector, x_star: &Vector) -> Vector {
    cmat * (x - x_star)
}

/// Per-channel duty-ratio clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub min: f64,
    pub max: f64,
}

impl Default for Saturation {
    fn default() -> Self {
        Self { min: 0.02, max: 0.98 }
    }
}

impl Saturation {
    pub fn is_valid(&self) -> bool {
        0.0 <= self.min && self.min < self.max && self.max <= 1.0
    }

    /// Clamps in place and reports whether any channel was clipped.
    pub fn apply(&self, u: &mut [f64]) -> bool {
        let mut active = false;
        for ui in u.iter_mut() {
            let c = ui.clamp(self.min, self.max);
            active |= c != *ui;
            *ui = c;
        }
        active
    }
}

/// Result of evaluating a controller at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub u: Vec<f64>,
    pub xc_dot: Vector,
    pub saturated: bool,
}

/// PI-PBC `ẋ_c = ỹ`, `u = sat(−K_Pỹ − K_Ix_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiPbcState {
    pub x_c: Vector,
    pub kp: Matrix,
    pub ki: Matrix,
    pub cmat: Matrix,
    pub x_star: Vector,
    pub u_star: Vec<f64>,
    pub saturation: Saturation,
}

impl PiPbcState {
    /// Controller for the equilibrium `(x*, u*)` with `x_c = 0`.
    pub fn new(model: &PHModel, x_star: Vector, u_star: Vec<f64>, kp: Matrix, ki: Matrix) -> Self {
        let cmat = passive_output_matrix(model, &x_star);
        Self {
            x_c: Vector::zeros(model.m()),
            kp,
            ki,
            cmat,
            x_star,
            u_star,
            saturation: Saturation::default(),
        }
    }

    /// Switches to a new operating point; the integrator state is kept.
    pub fn retarget(&mut self, model: &PHModel, x_star: Vector, u_star: Vec<f64>) {
        self.cmat = passive_output_matrix(model, &x_star);
        self.x_star = x_star;
        self.u_star = u_star;
    }

    pub fn shifted_output(&self, x: &Vector) -> Vector {
        shifted_output(&self.cmat, x, &self.x_star)
    }

    /// Control law at `(x, x_c)` for an externally held integrator state.
    pub fn evaluate(&self, x: &Vector, x_c: &Vector) -> ControlOutput {
        let ytilde = self.shifted_output(x);
        let raw = -(&self.kp * &ytilde) - &self.ki * x_c;
        let mut u: Vec<f64> = raw.iter().copied().collect();
        let saturated = self.saturation.apply(&mut u);
        ControlOutput { u, xc_dot: ytilde, saturated }
    }

    pub fn step(&self, x: &Vector) -> ControlOutput {
        self.evaluate(x, &self.x_c)
    }

    /// Integrator equilibrium `x_c* = −K_I⁻¹u*`.
    pub fn xc_star(&self) -> Result<Vector, ControlError> {
        integrator_equilibrium(&self.ki, &self.u_star)
    }
}

fn integrator_equilibrium(ki: &Matrix, u_star: &[f64]) -> Result<Vector, ControlError> {
    let inv = ki.clone().try_inverse().ok_or(ControlError::SingularKI)?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::SingularKI);
    }
    Ok(-(inv * Vector::from_column_slice(u_star)))
}

/// Classical PI on the output-voltage error, `ẋ_c = v* − v`,
/// `u = sat(−K_P(v* − v) − K_I x_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPiState {
    pub x_c: f64,
    pub kp: f64,
    pub ki: f64,
    /// Output-voltage reference (V).
    pub reference: f64,
    pub saturation: Saturation,
}

impl ClassicalPiState {
    pub fn new(kp: f64, ki: f64, reference: f64) -> Self {
        Self { x_c: 0.0, kp, ki, reference, saturation: Saturation::default() }
    }

    pub fn evaluate(&self, v_out: f64, x_c: f64) -> ControlOutput {
        let err = self.reference - v_out;
        let mut u = vec![-self.kp * err - self.ki * x_c];
        let saturated = self.saturation.apply(&mut u);
        ControlOutput { u, xc_dot: Vector::from_element(1, err), saturated }
    }

    pub fn step(&self, v_out: f64) -> ControlOutput {
        self.evaluate(v_out, self.x_c)
    }
}

/// Lyapunov function `W = ½x̃ᵀQx̃ + ½x̃_cᵀK_Ix̃_c`, `x̃_c = x_c + K_I⁻¹u*`.
pub fn lyapunov_value(
    model: &PHModel,
    ki: &Matrix,
    x: &Vector,
    x_c: &Vector,
    x_star: &Vector,
    u_star: &[f64],
) -> Result<f64, ControlError> {
    let xc_tilde = x_c - integrator_equilibrium(ki, u_star)?;
    Ok(model.energy(&(x - x_star)) + 0.5 * xc_tilde.dot(&(ki * &xc_tilde)))
}

/// Rate `x̃ᵀQRQx̃ + ỹᵀK_Pỹ` at which `W` decays along the unsaturated loop.
pub fn dissipation_rate(model: &PHModel, kp: &Matrix, x: &Vector, x_star: &Vector, ytilde: &Vector) -> f64 {
    let e = model.co_energy(&(x - x_star));
    e.dot(&(model.r() * &e)) + ytilde.dot(&(kp * ytilde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuk::{build_cuk, solve_equilibrium, CukParams, RootPolicy};

    fn setup() -> (PHModel, Vector, f64) {
        let p = CukParams::default();
        let eq = solve_equilibrium(&p, -15.0, RootPolicy::Smallest).unwrap();
        let u = eq.u_star();
        (build_cuk(&p).unwrap(), eq.pair.x_star, u)
    }

    fn scalar(v: f64) -> Matrix {
        Matrix::from_element(1, 1, v)
    }

    #[test]
    fn gn_column_in_physical_units() {
        let (m, xs, _) = setup();
        let z = m.co_energy(&xs);
        let gn = gn_matrix(&m, &xs);
        let expected = [z[1], z[2] - z[0], -z[1], 0.0];
        for k in 0..4 {
            assert!((gn[(k, 0)] - expected[k]).abs() < 1e-12);
        }
        assert_eq!(gn_matrix(&m, &Vector::zeros(4)), Matrix::zeros(4, 1));
    }

    #[test]
    fn passive_output_ignores_output_voltage() {
        let (m, xs, _) = setup();
        let cm = passive_output_matrix(&m, &xs);
        assert_eq!(cm[(0, 3)], 0.0);
        assert!(shifted_output(&cm, &xs, &xs).norm() == 0.0);
        assert!((&cm * &xs)[0].abs() < 1e-12);
        let mut x = xs.clone();
        x[3] += 1e-4;
        assert_eq!(shifted_output(&cm, &x, &xs)[0], 0.0);
    }

    #[test]
    fn shifted_output_for_unit_v2_step() {
        let (m, xs, _) = setup();
        let cm = passive_output_matrix(&m, &xs);
        let mut x = xs.clone();
        x[1] += CukParams::default().c1; // v2 = v2* + 1 V
        let y = shifted_output(&cm, &x, &xs)[0];
        // ỹ = i3* − i1* with i1* = 1.23232658, i3* = −0.75
        assert!((y + 1.982326580).abs() < 1e-8, "{y}");
    }

    #[test]
    fn loop_equilibrium_returns_u_star() {
        let (m, xs, us) = setup();
        let mut pi = PiPbcState::new(&m, xs.clone(), vec![us], scalar(10.0), scalar(5.0));
        pi.x_c = pi.xc_star().unwrap();
        let out = pi.step(&xs);
        assert!((out.u[0] - us).abs() < 1e-15);
        assert_eq!(out.xc_dot[0], 0.0);
        assert!(!out.saturated);
    }

    #[test]
    fn integrator_windup_saturates() {
        let (m, xs, us) = setup();
        let mut pi = PiPbcState::new(&m, xs.clone(), vec![us], scalar(10.0), scalar(5.0));
        pi.x_c = Vector::from_element(1, -1.0);
        let out = pi.step(&xs);
        assert_eq!(out.u, vec![0.98]);
        assert!(out.saturated);
    }

    #[test]
    fn classical_pi_arithmetic() {
        let pi = ClassicalPiState::new(0.008, 8.0, -15.0);
        let mut raw = pi.clone();
        raw.saturation = Saturation { min: -10.0, max: 10.0 };
        assert_eq!(raw.step(-15.0).u, vec![0.0]);
        let out = pi.step(-16.0);
        assert_eq!(out.xc_dot[0], 1.0);
        assert_eq!(out.u, vec![0.02]);
        assert!(out.saturated);
        assert!((raw.step(-16.0).u[0] + 0.008).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_zero_at_equilibrium() {
        let (m, xs, us) = setup();
        let ki = scalar(5.0);
        let xc = integrator_equilibrium(&ki, &[us]).unwrap();
        assert_eq!(lyapunov_value(&m, &ki, &xs, &xc, &xs, &[us]).unwrap(), 0.0);
        assert_eq!(
            lyapunov_value(&m, &scalar(0.0), &xs, &xc, &xs, &[us]),
            Err(ControlError::SingularKI)
        );
    }

    #[test]
    fn saturation_bounds() {
        assert!(Saturation::default().is_valid());
        assert!(!Saturation { min: 0.5, max: 0.5 }.is_valid());
        let mut u = [0.5, -1.0, 2.0];
        assert!(Saturation::default().apply(&mut u));
        assert_eq!(u, [0.5, 0.02, 0.98]);
    }
}
