//! Observability Gramian of the LTV pair along a recorded trajectory.

use crate::error::ObserverError;
use crate::linalg::symmetric_eigen_range;
use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GramianReport {
    pub gramian: Matrix,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Trapezoidal `∫ΦᵀCᵀCΦ dt` over the sampled `(t, Φ)` pairs, as given.
pub fn observability_gramian(samples: &[(f64, Matrix)], c: &Matrix) -> Result<GramianReport, ObserverError> {
    if samples.len() < 2 {
        return Err(ObserverError::InsufficientSamples);
    }
    let n = samples[0].1.ncols();
    let integrand = |phi: &Matrix| {
        let cp = c * phi;
        cp.tr_mul(&cp)
    };
    let mut g = Matrix::zeros(n, n);
    let mut prev = integrand(&samples[0].1);
    for w in samples.windows(2) {
        let next = integrand(&w[1].1);
        g += (&prev + &next) * (0.5 * (w[1].0 - w[0].0));
        prev = next;
    }
    let g = crate::linalg::symmetrize(&g);
    let (lambda_min, lambda_max) = symmetric_eigen_range(&g);
    Ok(GramianReport { gramian: g, lambda_min, lambda_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_identity() {
        let c = Matrix::identity(2, 2);
        let s: Vec<_> = (0..=10).map(|k| (k as f64 * 0.1, Matrix::identity(2, 2))).collect();
        let r = observability_gramian(&s, &c).unwrap();
        assert!((r.lambda_min - 1.0).abs() < 1e-12);
        assert!((r.lambda_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unobservable_direction_has_zero_eigenvalue() {
        let c = Matrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let s = vec![(0.0, Matrix::identity(2, 2)), (1.0, Matrix::identity(2, 2))];
        let r = observability_gramian(&s, &c).unwrap();
        assert_eq!(r.lambda_min, 0.0);
        assert!(matches!(
            observability_gramian(&s[..1], &c),
            Err(ObserverError::InsufficientSamples)
        ));
    }
}
