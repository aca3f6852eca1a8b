//! State observers driven by the measured output and the applied duty ratio.
//!
//! Observers run in a diagonally rescaled frame `z = Tx`. With `T = Q` the
//! observer works on currents and voltages (co-energy variables), which keeps
//! `det{Ω}` away from the floating-point floor for converter component values;
//! `T = I` reproduces the storage-variable formulation literally. Either way
//! the LTV data are `A = TΛ(u)T⁻¹`, `b = T(G₀ + ΣGᵢuᵢ)E` and the observers
//! measure `y_m = C T x`.

pub mod excitation;
pub mod gpebo;
pub mod gradient;
pub mod gramian;
pub mod kbf;

use serde::{Deserialize, Serialize};

pub use excitation::{excitation_time, excitation_time_from_delta, ExcitationMonitor};
pub use gpebo::{
    drem_mix, emulator_estimate, fct_combine, gpebo_estimate, gpebo_matrix_derivatives, scalar_update,
    GpeboDerivatives, GpeboParams, GpeboState,
};
pub use gradient::{gradient_derivatives, GradientInputs, GradientMode, GradientObserver, GradientState};
pub use gramian::{observability_gramian, GramianReport};
pub use kbf::{kbf_derivatives, KbfState};

use crate::model::PHModel;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordinates {
    /// Storage variables (fluxes and charges).
    Energy,
    /// Co-energy variables (currents and voltages).
    #[default]
    CoEnergy,
}

/// Diagonal change of coordinates `z = Tx` used by the observers.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverFrame {
    pub coordinates: Coordinates,
    pub scale: Vector,
}

/// LTV data at one instant, in observer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LtvSnapshot {
    pub a: Matrix,
    pub b: Vector,
    pub c: Matrix,
}

impl ObserverFrame {
    pub fn new(model: &PHModel, coordinates: Coordinates) -> Self {
        let scale = match coordinates {
            Coordinates::Energy => Vector::from_element(model.n(), 1.0),
            Coordinates::CoEnergy => model.q_diag().clone(),
        };
        Self { coordinates, scale }
    }

    pub fn to_frame(&self, x: &Vector) -> Vector {
        x.component_mul(&self.scale)
    }

    pub fn from_frame(&self, z: &Vector) -> Vector {
        z.component_div(&self.scale)
    }

    pub fn snapshot(&self, model: &PHModel, u: &[f64]) -> LtvSnapshot {
        let lam = model.drift_matrix(u);
        let t = &self.scale;
        let a = Matrix::from_fn(lam.nrows(), lam.ncols(), |i, j| t[i] * lam[(i, j)] / t[j]);
        LtvSnapshot { a, b: self.to_frame(&model.input_vector(u)), c: model.c().clone() }
    }

    /// Measurement seen by the observers, `C T x`.
    pub fn measure(&self, model: &PHModel, x: &Vector) -> Vector {
        model.c() * self.to_frame(x)
    }
}

/// Declarative observer description.
#[derive(Debug, Clone, PartialEq)]
pub enum ObserverSpec {
    FctGpebo { lambda: f64, gamma: f64, mu: f64 },
    AsymptoticGpebo { lambda: f64, gamma: f64 },
    Emulator,
    Kbf { s: Matrix, h0: Matrix },
    Gradient { lambda: f64, gamma: f64, mode: GradientMode },
}

impl ObserverSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::FctGpebo { .. } => "fct-gpebo",
            Self::AsymptoticGpebo { .. } => "gpebo",
            Self::Emulator => "emulator",
            Self::Kbf { .. } => "kbf",
            Self::Gradient { .. } => "gradient",
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), String> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive and finite, got {v}"))
            }
        };
        match self {
            Self::FctGpebo { lambda, gamma, mu } => {
                pos("lambda", *lambda)?;
                pos("gamma", *gamma)?;
                if !(*mu > 0.0 && *mu < 1.0) {
                    return Err(format!("mu must lie in (0, 1), got {mu}"));
                }
                Ok(())
            }
            Self::AsymptoticGpebo { lambda, gamma } | Self::Gradient { lambda, gamma, .. } => {
                pos("lambda", *lambda)?;
                pos("gamma", *gamma)
            }
            Self::Emulator => Ok(()),
            Self::Kbf { s, h0 } => {
                if s.shape() != (n, n) || h0.shape() != (n, n) {
                    return Err(format!("kbf matrices must be {n}x{n}"));
                }
                if !crate::linalg::is_symmetric(s, 0.0) || !crate::linalg::is_symmetric(h0, 0.0) {
                    return Err("kbf matrices must be symmetric".into());
                }
                if crate::linalg::symmetric_eigen_range(s).0 <= 0.0 {
                    return Err("kbf S must be positive definite".into());
                }
                if crate::linalg::symmetric_eigen_range(h0).0 < 0.0 {
                    return Err("kbf H0 must be positive semidefinite".into());
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObserverState {
    /// `fct` selects `θ̂_FCT` over the asymptotic `θ̂`.
    Gpebo { state: GpeboState, fct: bool },
    Emulator { xi: Vector },
    Kbf(KbfState),
    Gradient(GradientObserver),
}

/// An observer instance running on the simulation clock.
#[derive(Debug, Clone)]
pub struct Observer {
    pub name: String,
    pub spec: ObserverSpec,
    pub frame: ObserverFrame,
    pub state: ObserverState,
    /// Wall-clock time spent in this observer's updates.
    pub elapsed: std::time::Duration,
}

impl Observer {
    /// `xi0` and `theta_hat0` are in observer coordinates; the KBF starts at
    /// `x̂(0) = xi0`.
    pub fn new(name: impl Into<String>, spec: ObserverSpec, frame: ObserverFrame, xi0: Vector, theta_hat0: Vector) -> Self {
        let state = match &spec {
            ObserverSpec::FctGpebo { lambda, gamma, mu } => ObserverState::Gpebo {
                state: GpeboState::with_initial(xi0, theta_hat0, GpeboParams { lambda: *lambda, gamma: *gamma, mu: *mu }),
                fct: true,
            },
            ObserverSpec::AsymptoticGpebo { lambda, gamma } => ObserverState::Gpebo {
                state: GpeboState::with_initial(xi0, theta_hat0, GpeboParams { lambda: *lambda, gamma: *gamma, mu: 1e-6 }),
                fct: false,
            },
            ObserverSpec::Emulator => ObserverState::Emulator { xi: xi0 },
            ObserverSpec::Kbf { s, h0 } => ObserverState::Kbf(KbfState::new(xi0, h0.clone(), s.clone())),
            ObserverSpec::Gradient { lambda, gamma, mode } => {
                ObserverState::Gradient(GradientObserver::new(xi0, theta_hat0, *lambda, *gamma, *mode))
            }
        };
        Self { name: name.into(), spec, frame, state, elapsed: Default::default() }
    }

    pub fn n(&self) -> usize {
        self.frame.scale.len()
    }

    pub fn block_len(&self) -> usize {
        let n = self.n();
        match &self.state {
            ObserverState::Gpebo { .. } | ObserverState::Gradient(_) => GpeboState::block_len(n),
            ObserverState::Emulator { .. } => n,
            ObserverState::Kbf(_) => KbfState::block_len(n),
        }
    }

    pub fn pack(&self, out: &mut [f64]) {
        match &self.state {
            ObserverState::Gpebo { state, .. } => state.pack(out),
            ObserverState::Emulator { xi } => out.copy_from_slice(xi.as_slice()),
            ObserverState::Kbf(k) => k.pack(out),
            ObserverState::Gradient(g) => g.pack(out),
        }
    }

    pub fn unpack(&mut self, s: &[f64]) {
        match &mut self.state {
            ObserverState::Gpebo { state, .. } => state.unpack(s),
            ObserverState::Emulator { xi } => xi.as_mut_slice().copy_from_slice(s),
            ObserverState::Kbf(k) => k.unpack(s),
            ObserverState::Gradient(g) => g.unpack(s),
        }
    }

    /// Right-hand side of the observer block.
    pub fn derivative(&self, sys: &LtvSnapshot, s: &[f64], y_m: &Vector, out: &mut [f64]) {
        match &self.state {
            ObserverState::Gpebo { state, .. } => gpebo::regressor_derivative(sys, state.params.lambda, s, y_m, out),
            ObserverState::Gradient(g) => gpebo::regressor_derivative(sys, g.lambda, s, y_m, out),
            ObserverState::Emulator { .. } => {
                let n = sys.a.nrows();
                let xi = nalgebra::DVectorView::from_slice(s, n);
                let mut d = nalgebra::DVectorViewMut::from_slice(out, n);
                d.copy_from(&sys.b);
                d.gemv(1.0, &sys.a, &xi, 1.0);
            }
            ObserverState::Kbf(k) => kbf::kbf_block_derivative(sys, &k.s, s, y_m, out),
        }
    }

    /// Exact updates of the quantities kept outside the RK4 block, using the
    /// end-of-step block and measurement.
    pub fn post_step(&mut self, c: &Matrix, y_m: &Vector, h: f64) {
        match &mut self.state {
            ObserverState::Gpebo { state, .. } => {
                let (sy, delta) = state.mix();
                state.scalar_update(&sy, delta, h);
            }
            ObserverState::Gradient(g) => g.post_step(c, y_m, h),
            ObserverState::Emulator { .. } | ObserverState::Kbf(_) => {}
        }
    }

    /// Current estimate in observer coordinates.
    pub fn estimate(&self) -> Vector {
        match &self.state {
            ObserverState::Gpebo { state, fct: true } => state.estimate_fct(),
            ObserverState::Gpebo { state, fct: false } => state.estimate_asymptotic(),
            ObserverState::Emulator { xi } => emulator_estimate(xi),
            ObserverState::Kbf(k) => k.x_hat.clone(),
            ObserverState::Gradient(g) => g.estimate(),
        }
    }

    /// Estimate from an intermediate block, with the scalar states frozen at
    /// their start-of-step values.
    pub fn estimate_from_block(&self, s: &[f64]) -> Vector {
        let n = self.n();
        let xi = Vector::from_column_slice(&s[..n]);
        match &self.state {
            ObserverState::Gpebo { state, fct } => {
                let phi = nalgebra::DMatrixView::from_slice(&s[n..n + n * n], n, n);
                let theta = if *fct { state.theta_fct() } else { state.theta_hat.clone() };
                xi + phi * theta
            }
            ObserverState::Gradient(g) => {
                let phi = nalgebra::DMatrixView::from_slice(&s[n..n + n * n], n, n);
                xi + phi * &g.estimator.theta_hat
            }
            ObserverState::Emulator { .. } | ObserverState::Kbf(_) => xi,
        }
    }

    /// Estimate of the storage variables `x`.
    pub fn estimate_native(&self) -> Vector {
        self.frame.from_frame(&self.estimate())
    }

    pub fn omega(&self) -> Option<f64> {
        match &self.state {
            ObserverState::Gpebo { state, .. } => Some(state.omega),
            _ => None,
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match &self.state {
            ObserverState::Gpebo { state, .. } => Some(state.last_delta()),
            _ => None,
        }
    }

    pub fn gpebo(&self) -> Option<&GpeboState> {
        match &self.state {
            ObserverState::Gpebo { state, .. } => Some(state),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuk::{build_cuk, CukParams};

    #[test]
    fn frame_similarity() {
        let m = build_cuk(&CukParams::default()).unwrap();
        let u = [0.6];
        let e = ObserverFrame::new(&m, Coordinates::Energy).snapshot(&m, &u);
        assert_eq!(e.a, m.drift_matrix(&u));
        let f = ObserverFrame::new(&m, Coordinates::CoEnergy);
        let s = f.snapshot(&m, &u);
        let x = Vector::from_column_slice(&[1e-2, 5e-4, -8e-3, -3e-4]);
        // d/dt (Qx) = Q(Λx + b)
        let lhs = &s.a * f.to_frame(&x) + &s.b;
        let rhs = f.to_frame(&m.dynamics(&x, &u));
        assert!((lhs - &rhs).norm() < 1e-9 * rhs.norm());
        assert!((f.measure(&m, &x)[0] - x[3] / CukParams::default().c2).abs() < 1e-12);
        assert!((f.from_frame(&f.to_frame(&x)) - x).norm() < 1e-18);
    }

    #[test]
    fn spec_validation() {
        assert!(ObserverSpec::FctGpebo { lambda: 5.0, gamma: 1e12, mu: 1e-6 }.validate(4).is_ok());
        assert!(ObserverSpec::FctGpebo { lambda: 5.0, gamma: 1e12, mu: 1.0 }.validate(4).is_err());
        assert!(ObserverSpec::AsymptoticGpebo { lambda: 0.0, gamma: 1.0 }.validate(4).is_err());
        let i = Matrix::identity(4, 4);
        assert!(ObserverSpec::Kbf { s: i.clone(), h0: i.clone() }.validate(4).is_ok());
        assert!(ObserverSpec::Kbf { s: Matrix::zeros(4, 4), h0: i }.validate(4).is_err());
    }

    #[test]
    fn block_roundtrip() {
        let m = build_cuk(&CukParams::default()).unwrap();
        let f = ObserverFrame::new(&m, Coordinates::CoEnergy);
        let spec = ObserverSpec::FctGpebo { lambda: 5.0, gamma: 1e12, mu: 1e-6 };
        let mut o = Observer::new("fct", spec, f, Vector::from_element(4, 1.0), Vector::zeros(4));
        let mut buf = vec![0.0; o.block_len()];
        o.pack(&mut buf);
        assert_eq!(o.estimate_from_block(&buf), o.estimate());
        buf[0] = 3.0;
        o.unpack(&buf);
        assert_eq!(o.estimate()[0], 3.0);
        assert_eq!(o.omega(), Some(1.0));
    }
}
