//! Gradient parameter estimators on the GPEBO regressor, used as
//! baselines for the DREM scheme.
//!
//! Both are linear in `θ̂` with a symmetric positive semidefinite gain,
//! `θ̂̇ = γ(v − Mθ̂)`. With the large adaptation gains of interest this is
//! far too stiff for explicit RK4 at the plant step, so `θ̂` is advanced with
//! the exact solution for `(M, v)` frozen over the step.

use serde::{Deserialize, Serialize};

use super::gpebo::{pack_regressor, unpack_regressor};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    /// `θ̂̇ = γΦᵀCᵀ(y_m − Cξ − CΦθ̂)`
    #[default]
    Raw,
    /// `θ̂̇ = γΩ(Y − Ωθ̂)`
    Extended,
}

/// Data the estimator law depends on at one instant.
#[derive(Debug, Clone, Copy)]
pub enum GradientInputs<'a> {
    Raw { phi: &'a Matrix, c: &'a Matrix, innovation: &'a Vector },
    Extended { omega_mat: &'a Matrix, y: &'a Vector },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientState {
    pub theta_hat: Vector,
    pub gamma: f64,
    pub mode: GradientMode,
}

impl GradientState {
    fn gain_and_drive(inputs: GradientInputs<'_>) -> (Matrix, Vector) {
        match inputs {
            GradientInputs::Raw { phi, c, innovation } => {
                let c_phi = c * phi;
                (c_phi.tr_mul(&c_phi), c_phi.tr_mul(innovation))
            }
            GradientInputs::Extended { omega_mat, y } => (omega_mat * omega_mat, omega_mat * y),
        }
    }

    /// Exact update over `h` with the inputs frozen.
    pub fn exact_step(&mut self, inputs: GradientInputs<'_>, h: f64) {
        let (m, v) = Self::gain_and_drive(inputs);
        self.theta_hat = frozen_linear_step(&self.theta_hat, &m, &v, self.gamma, h);
    }
}

/// `θ̂̇` for the given inputs.
pub fn gradient_derivatives(state: &GradientState, inputs: GradientInputs<'_>) -> Vector {
    let (m, v) = GradientState::gain_and_drive(inputs);
    (v - m * &state.theta_hat) * state.gamma
}

/// Solution of `θ̇ = γ(v − Mθ)` after time `h` for symmetric PSD `M`.
pub fn frozen_linear_step(theta: &Vector, m: &Matrix, v: &Vector, gamma: f64, h: f64) -> Vector {
    let eig = crate::linalg::symmetrize(m).symmetric_eigen();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut out = Vector::zeros(theta.len());
    for (k, sigma) in eig.eigenvalues.iter().enumerate() {
        let q = eig.eigenvectors.column(k);
        let th = q.dot(theta);
        let vq = q.dot(v);
        let sigma = sigma.max(0.0);
        let next = if sigma <= 1e-14 * scale {
            th + gamma * h * vq
        } else {
            let decay = (-gamma * sigma * h).exp();
            th * decay - vq / sigma * (-gamma * sigma * h).exp_m1()
        };
        out += q * next;
    }
    out
}

/// Gradient observer: the GPEBO regressor block `[ξ | Φ | Y | Ω]` plus `θ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientObserver {
    pub xi: Vector,
    pub phi: Matrix,
    pub y: Vector,
    pub omega_mat: Matrix,
    pub lambda: f64,
    pub estimator: GradientState,
}

impl GradientObserver {
    pub fn new(xi0: Vector, theta_hat0: Vector, lambda: f64, gamma: f64, mode: GradientMode) -> Self {
        let n = xi0.len();
        Self {
            xi: xi0,
            phi: Matrix::identity(n, n),
            y: Vector::zeros(n),
            omega_mat: Matrix::zeros(n, n),
            lambda,
            estimator: GradientState { theta_hat: theta_hat0, gamma, mode },
        }
    }

    pub fn pack(&self, out: &mut [f64]) {
        pack_regressor(&self.xi, &self.phi, &self.y, &self.omega_mat, out);
    }

    pub fn unpack(&mut self, s: &[f64]) {
        unpack_regressor(s, &mut self.xi, &mut self.phi, &mut self.y, &mut self.omega_mat);
    }

    /// Advances `θ̂` using the regressor at the end of the step.
    pub fn post_step(&mut self, c: &Matrix, y_m: &Vector, h: f64) {
        match self.estimator.mode {
            GradientMode::Raw => {
                let innovation = y_m - c * &self.xi;
                let inputs = GradientInputs::Raw { phi: &self.phi, c, innovation: &innovation };
                self.estimator.exact_step(inputs, h);
            }
            GradientMode::Extended => {
                let inputs = GradientInputs::Extended { omega_mat: &self.omega_mat, y: &self.y };
                self.estimator.exact_step(inputs, h);
            }
        }
    }

    pub fn estimate(&self) -> Vector {
        &self.xi + &self.phi * &self.estimator.theta_hat
    }
}
