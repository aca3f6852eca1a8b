//! Kalman–Bucy filter for the LTV model obtained by evaluating `u` along
//! the trajectory.

use nalgebra::{DMatrixView, DMatrixViewMut, DVectorView, DVectorViewMut};

use super::LtvSnapshot;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct KbfState {
    pub x_hat: Vector,
    pub h: Matrix,
    pub s: Matrix,
}

impl KbfState {
    pub fn new(x_hat0: Vector, h0: Matrix, s: Matrix) -> Self {
        Self { x_hat: x_hat0, h: h0, s }
    }

    pub fn block_len(n: usize) -> usize {
        n + n * n
    }

    pub fn pack(&self, out: &mut [f64]) {
        let n = self.x_hat.len();
        out[..n].copy_from_slice(self.x_hat.as_slice());
        out[n..n + n * n].copy_from_slice(self.h.as_slice());
    }

    pub fn unpack(&mut self, s: &[f64]) {
        let n = self.x_hat.len();
        self.x_hat.as_mut_slice().copy_from_slice(&s[..n]);
        self.h.as_mut_slice().copy_from_slice(&s[n..n + n * n]);
        // RK4 stages are combined entrywise, but keep H exactly symmetric.
        let hs = crate::linalg::symmetrize(&self.h);
        self.h = hs;
    }
}

/// `x̂̇ = Ax̂ + b + HCᵀ(y_m − Cx̂)`, `Ḣ = HAᵀ + AH − HCᵀCH + S`.
pub fn kbf_derivatives(sys: &LtvSnapshot, state: &KbfState, y_m: &Vector) -> (Vector, Matrix) {
    let n = state.x_hat.len();
    let mut packed = vec![0.0; KbfState::block_len(n)];
    state.pack(&mut packed);
    let mut out = vec![0.0; packed.len()];
    kbf_block_derivative(sys, &state.s, &packed, y_m, &mut out);
    (
        Vector::from_column_slice(&out[..n]),
        Matrix::from_column_slice(n, n, &out[n..]),
    )
}

pub(crate) fn kbf_block_derivative(sys: &LtvSnapshot, s_mat: &Matrix, s: &[f64], y_m: &Vector, out: &mut [f64]) {
    let n = sys.a.nrows();
    let x = DVectorView::from_slice(&s[..n], n);
    let h = DMatrixView::from_slice(&s[n..n + n * n], n, n);
    let (o_x, o_h) = out.split_at_mut(n);

    let ht_c = h * sys.c.transpose(); // H Cᵀ, n × p
    let innovation = y_m - &sys.c * x;
    let mut dx = DVectorViewMut::from_slice(o_x, n);
    dx.copy_from(&sys.b);
    dx.gemv(1.0, &sys.a, &x, 1.0);
    dx.gemv(1.0, &ht_c, &innovation, 1.0);

    let ah = &sys.a * h;
    // HAᵀ = (AH)ᵀ for symmetric H
    let mut dh = &ah + ah.transpose() + s_mat;
    dh.gemm(-1.0, &ht_c, &ht_c.transpose(), 1.0);
    let dh = crate::linalg::symmetrize(&dh);
    DMatrixViewMut::from_slice(&mut o_h[..n * n], n, n).copy_from(&dh);
}
