//! Generalized parameter-estimation-based observer with DREM and
//! finite-convergence-time (FCT) reconstruction.
//!
//! The copy system `ξ̇ = A(t)ξ + b(t)` and the transition matrix
//! `Φ̇ = A(t)Φ, Φ(0) = I` give `x = ξ + Φθ` with the unknown constant
//! `θ = x(0) − ξ(0)`. Filtering `ΦᵀCᵀ(y_m − Cξ) = ΦᵀCᵀCΦθ` yields `Y = Ωθ`;
//! multiplying by `adj{Ω}` decouples it into `𝒴 = Δθ` with `Δ = det{Ω}`.
//!
//! `ω` and `θ̂` are not part of the RK4 block: `γΔ²` routinely exceeds `10¹²`,
//! so both are advanced with the exact solution of their scalar ODEs over a
//! step with `Δ` and `𝒴` frozen. The same frozen `Δ` drives both, which keeps
//! `θ̂ − θ = ω(θ̂(0) − θ)` exact up to rounding.

use nalgebra::{DMatrixView, DMatrixViewMut, DVectorView, DVectorViewMut};
use serde::{Deserialize, Serialize};

use super::LtvSnapshot;
use crate::linalg::adjugate_and_determinant;
use crate::{Matrix, Vector};

/// Tuning constants: filter gain `λ`, adaptation gain `γ`, clipping `µ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpeboParams {
    pub lambda: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl Default for GpeboParams {
    fn default() -> Self {
        Self { lambda: 5.0, gamma: 1e12, mu: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpeboState {
    pub xi: Vector,
    pub phi: Matrix,
    pub y: Vector,
    pub omega_mat: Matrix,
    /// `ω = exp(−γ∫Δ²)`.
    pub omega: f64,
    pub theta_hat: Vector,
    pub theta_hat0: Vector,
    pub params: GpeboParams,
    /// `γ∫Δ²`, kept alongside `ω` so that `1 − ω` is available without
    /// cancellation while `ω` is still close to one.
    excitation: f64,
    last_delta: f64,
}

/// Time derivatives of the matrix-valued observer states.
#[derive(Debug, Clone, PartialEq)]
pub struct GpeboDerivatives {
    pub xi: Vector,
    pub phi: Matrix,
    pub y: Vector,
    pub omega_mat: Matrix,
}

impl GpeboState {
    /// Zero initial conditions except `Φ(0) = I`, `ω(0) = 1`.
    pub fn new(n: usize, params: GpeboParams) -> Self {
        Self::with_initial(Vector::zeros(n), Vector::zeros(n), params)
    }

    /// `θ̂(0)` is frozen here for the lifetime of the observer.
    pub fn with_initial(xi0: Vector, theta_hat0: Vector, params: GpeboParams) -> Self {
        let n = xi0.len();
        Self {
            xi: xi0,
            phi: Matrix::identity(n, n),
            y: Vector::zeros(n),
            omega_mat: Matrix::zeros(n, n),
            omega: 1.0,
            theta_hat: theta_hat0.clone(),
            theta_hat0,
            params,
            excitation: 0.0,
            last_delta: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    /// Accumulated `γ∫Δ²`.
    pub fn excitation(&self) -> f64 {
        self.excitation
    }

    /// `Δ` used by the most recent scalar update.
    pub fn last_delta(&self) -> f64 {
        self.last_delta
    }

    /// Whether `ω < 1 − µ`, i.e. the excitation threshold has been crossed.
    pub fn excited(&self) -> bool {
        self.excitation > -(-self.params.mu).ln_1p()
    }

    /// Block length inside the integrator state: `ξ, Φ, Y, Ω`.
    pub fn block_len(n: usize) -> usize {
        2 * n + 2 * n * n
    }

    pub fn pack(&self, out: &mut [f64]) {
        pack_regressor(&self.xi, &self.phi, &self.y, &self.omega_mat, out);
    }

    pub fn unpack(&mut self, s: &[f64]) {
        unpack_regressor(s, &mut self.xi, &mut self.phi, &mut self.y, &mut self.omega_mat);
    }

    /// DREM mixing of the current `(Ω, Y)`.
    pub fn mix(&self) -> (Vector, f64) {
        drem_mix(&self.omega_mat, &self.y)
    }

    /// Exact `(ω, θ̂)` update over a step of length `h`.
    pub fn scalar_update(&mut self, script_y: &Vector, delta: f64, h: f64) {
        self.last_delta = delta;
        let rate = self.params.gamma * delta * delta * h;
        if rate == 0.0 {
            return;
        }
        self.excitation += rate;
        self.omega = (-self.excitation).exp();
        // θ̂ ← θ̂ + (1 − κ)(𝒴/Δ − θ̂), with (1 − κ)/Δ formed directly.
        let one_minus_kappa = -(-rate).exp_m1();
        let gain = one_minus_kappa / delta;
        self.theta_hat.zip_apply(script_y, |th, sy| *th += gain * sy - one_minus_kappa * *th);
    }

    /// Clipped-combination parameter estimate `θ̂_FCT`.
    pub fn theta_fct(&self) -> Vector {
        let mu = self.params.mu;
        if self.excited() {
            let one_minus = -(-self.excitation).exp_m1();
            (&self.theta_hat - &self.theta_hat0 * self.omega) / one_minus
        } else {
            (&self.theta_hat - &self.theta_hat0 * (1.0 - mu)) / mu
        }
    }

    pub fn estimate_fct(&self) -> Vector {
        gpebo_estimate(&self.xi, &self.phi, &self.theta_fct())
    }

    pub fn estimate_asymptotic(&self) -> Vector {
        gpebo_estimate(&self.xi, &self.phi, &self.theta_hat)
    }
}

pub(crate) fn pack_regressor(xi: &Vector, phi: &Matrix, y: &Vector, om: &Matrix, out: &mut [f64]) {
    let n = xi.len();
    let nn = n * n;
    out[..n].copy_from_slice(xi.as_slice());
    out[n..n + nn].copy_from_slice(phi.as_slice());
    out[n + nn..2 * n + nn].copy_from_slice(y.as_slice());
    out[2 * n + nn..2 * n + 2 * nn].copy_from_slice(om.as_slice());
}

pub(crate) fn unpack_regressor(s: &[f64], xi: &mut Vector, phi: &mut Matrix, y: &mut Vector, om: &mut Matrix) {
    let n = xi.len();
    let nn = n * n;
    xi.as_mut_slice().copy_from_slice(&s[..n]);
    phi.as_mut_slice().copy_from_slice(&s[n..n + nn]);
    y.as_mut_slice().copy_from_slice(&s[n + nn..2 * n + nn]);
    om.as_mut_slice().copy_from_slice(&s[2 * n + nn..2 * n + 2 * nn]);
}

/// Regressor-block right-hand side on packed storage `[ξ | Φ | Y | Ω]`.
pub(crate) fn regressor_derivative(sys: &LtvSnapshot, lambda: f64, s: &[f64], y_m: &Vector, out: &mut [f64]) {
    let n = sys.a.nrows();
    let nn = n * n;
    let xi = DVectorView::from_slice(&s[..n], n);
    let phi = DMatrixView::from_slice(&s[n..n + nn], n, n);
    let y = DVectorView::from_slice(&s[n + nn..2 * n + nn], n);
    let om = DMatrixView::from_slice(&s[2 * n + nn..2 * n + 2 * nn], n, n);

    let (o_xi, rest) = out.split_at_mut(n);
    let (o_phi, rest) = rest.split_at_mut(nn);
    let (o_y, o_om) = rest.split_at_mut(n);

    let mut d_xi = DVectorViewMut::from_slice(o_xi, n);
    d_xi.copy_from(&sys.b);
    d_xi.gemv(1.0, &sys.a, &xi, 1.0);

    let mut d_phi = DMatrixViewMut::from_slice(o_phi, n, n);
    d_phi.gemm(1.0, &sys.a, &phi, 0.0);

    let innovation = y_m - &sys.c * xi;
    let c_phi = &sys.c * phi;
    let mut d_y = DVectorViewMut::from_slice(o_y, n);
    d_y.copy_from(&y);
    d_y.gemv_tr(lambda, &c_phi, &innovation, -lambda);

    let mut d_om = DMatrixViewMut::from_slice(&mut o_om[..nn], n, n);
    d_om.copy_from(&om);
    d_om.gemm_tr(lambda, &c_phi, &c_phi, -lambda);
}

/// `ξ̇ = Aξ + b`, `Φ̇ = AΦ`, `Ẏ = −λY + λΦᵀCᵀ(y_m − Cξ)`,
/// `Ω̇ = −λΩ + λΦᵀCᵀCΦ`.
pub fn gpebo_matrix_derivatives(sys: &LtvSnapshot, state: &GpeboState, y_m: &Vector) -> GpeboDerivatives {
    let n = state.n();
    let mut packed = vec![0.0; GpeboState::block_len(n)];
    state.pack(&mut packed);
    let mut out = vec![0.0; packed.len()];
    regressor_derivative(sys, state.params.lambda, &packed, y_m, &mut out);
    let mut d = GpeboDerivatives {
        xi: Vector::zeros(n),
        phi: Matrix::zeros(n, n),
        y: Vector::zeros(n),
        omega_mat: Matrix::zeros(n, n),
    };
    unpack_regressor(&out, &mut d.xi, &mut d.phi, &mut d.y, &mut d.omega_mat);
    d
}

/// `(𝒴, Δ) = (adj{Ω}Y, det{Ω})`.
pub fn drem_mix(omega_mat: &Matrix, y: &Vector) -> (Vector, f64) {
    let (adj, det) = adjugate_and_determinant(omega_mat);
    (adj * y, det)
}

/// Standalone form of [`GpeboState::scalar_update`]: returns the new
/// `(ω, θ̂)` for a step of length `h` with `(𝒴, Δ)` frozen.
pub fn scalar_update(
    omega: f64,
    theta_hat: &Vector,
    script_y: &Vector,
    delta: f64,
    gamma: f64,
    h: f64,
) -> (f64, Vector) {
    let rate = gamma * delta * delta * h;
    if rate == 0.0 {
        return (omega, theta_hat.clone());
    }
    let kappa = (-rate).exp();
    let one_minus_kappa = -(-rate).exp_m1();
    let gain = one_minus_kappa / delta;
    let theta = theta_hat.zip_map(script_y, |th, sy| th + gain * sy - one_minus_kappa * th);
    (omega * kappa, theta)
}

/// `θ̂_FCT = (θ̂ − ω_cθ̂(0)) / (1 − ω_c)`, `ω_c = ω` if `ω < 1 − µ`, else `1 − µ`.
pub fn fct_combine(theta_hat: &Vector, theta_hat0: &Vector, omega: f64, mu: f64) -> Vector {
    let omega_c = if omega < 1.0 - mu { omega } else { 1.0 - mu };
    (theta_hat - theta_hat0 * omega_c) / (1.0 - omega_c)
}

/// `x̂ = ξ + Φθ`.
pub fn gpebo_estimate(xi: &Vector, phi: &Matrix, theta: &Vector) -> Vector {
    xi + phi * theta
}

/// Open-loop emulator: `x̂ = ξ`.
pub fn emulator_estimate(xi: &Vector) -> Vector {
    xi.clone()
}
