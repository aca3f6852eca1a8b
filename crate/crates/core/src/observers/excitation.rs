//! Interval-excitation bookkeeping for the DREM scheme.

/// First time at which the excitation threshold `ω ≤ 1 − µ` is met, from
/// sampled `(t, ω)` pairs.
pub fn excitation_time(samples: impl IntoIterator<Item = (f64, f64)>, mu: f64) -> Option<f64> {
    samples.into_iter().find(|&(_, w)| w <= 1.0 - mu).map(|(t, _)| t)
}

/// Same threshold evaluated from sampled `(t, Δ)` pairs: the first `t` at
/// which the trapezoidal `γ∫Δ²` reaches `−ln(1 − µ)`.
pub fn excitation_time_from_delta(samples: &[(f64, f64)], gamma: f64, mu: f64) -> Option<f64> {
    let target = -(-mu).ln_1p();
    let mut acc = 0.0;
    for w in samples.windows(2) {
        let ((t0, d0), (t1, d1)) = (w[0], w[1]);
        acc += 0.5 * gamma * (d0 * d0 + d1 * d1) * (t1 - t0);
        if acc >= target {
            return Some(t1);
        }
    }
    None
}

/// Tracks `ω` online and latches the first crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitationMonitor {
    pub mu: f64,
    crossed_at: Option<f64>,
}

impl ExcitationMonitor {
    pub fn new(mu: f64) -> Self {
        Self { mu, crossed_at: None }
    }

    pub fn observe(&mut self, t: f64, omega: f64) {
        if self.crossed_at.is_none() && omega <= 1.0 - self.mu {
            self.crossed_at = Some(t);
        }
    }

    pub fn crossed_at(&self) -> Option<f64> {
        self.crossed_at
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_crossing() {
        let s = [(0.0, 1.0), (1.0, 0.95), (2.0, 0.85), (3.0, 0.5)];
        assert_eq!(excitation_time(s, 0.1), Some(2.0));
        assert_eq!(excitation_time(s, 0.99), None);
        let mut m = ExcitationMonitor::new(0.1);
        for (t, w) in s {
            m.observe(t, w);
        }
        assert_eq!(m.crossed_at(), Some(2.0));
    }

    #[test]
    fn constant_delta_threshold() {
        // γΔ²t = −ln(1 − µ) ⇒ t = 0.105360… for γ = 1, Δ = 1, µ = 0.1
        let s: Vec<_> = (0..=2000).map(|k| (k as f64 * 1e-4, 1.0)).collect();
        let t = excitation_time_from_delta(&s, 1.0, 0.1).unwrap();
        assert!((t - 0.10536).abs() < 2e-4);
        assert_eq!(excitation_time_from_delta(&s, 0.0, 0.1), None);
    }
}
