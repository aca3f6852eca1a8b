use crate::error::SimError;

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    fn resize(&mut self, len: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            v.resize(len, 0.0);
        }
    }
}

/// One classical Runge–Kutta step of `ẏ = f(t, y)` in place.
///
/// `f(t, y, out)` writes the derivative into `out`.
pub fn rk4_step<F>(mut f: F, t: f64, y: &mut [f64], h: f64, ws: &mut Rk4Workspace) -> Result<(), SimError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    ws.resize(y.len());
    let Rk4Workspace { k1, k2, k3, k4, tmp } = ws;

    f(t, y, k1);
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, tmp, k2);
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, tmp, k3);
    for i in 0..y.len() {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, tmp, k4);
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFiniteState(t + h));
    }
    Ok(())
}
