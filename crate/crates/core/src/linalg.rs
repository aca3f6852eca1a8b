//! Small dense linear-algebra helpers.
//!
//! Converter models are small (n ≤ 16), so everything here works on dense
//! `nalgebra` matrices. The adjugate is the one routine that matters for the
//! observer: DREM multiplies by `adj{Ω}` at every step, including while `Ω` is
//! still singular, so it must never go through an inverse.

use crate::{Matrix, Vector};

/// Largest dimension handled by explicit cofactor expansion.
pub const COFACTOR_MAX_DIM: usize = 4;

/// Laplace expansion of the sub-matrix selected by `rows` × `cols`.
fn laplace(m: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => m[(rows[0], cols[0])],
        2 => {
            m[(rows[0], cols[0])] * m[(rows[1], cols[1])]
                - m[(rows[0], cols[1])] * m[(rows[1], cols[0])]
        }
        k => {
            let mut sub = [0usize; COFACTOR_MAX_DIM];
            let mut acc = 0.0;
            for (jj, &c) in cols.iter().enumerate() {
                let a = m[(rows[0], c)];
                if a == 0.0 {
                    continue;
                }
                let mut idx = 0;
                for &other in cols.iter().filter(|&&o| o != c) {
                    sub[idx] = other;
                    idx += 1;
                }
                let minor = laplace(m, &rows[1..], &sub[..k - 1]);
                if jj % 2 == 0 {
                    acc += a * minor;
                } else {
                    acc -= a * minor;
                }
            }
            acc
        }
    }
}

fn complement(n: usize, skip: usize) -> ([usize; COFACTOR_MAX_DIM], usize) {
    let mut out = [0usize; COFACTOR_MAX_DIM];
    let mut len = 0;
    for i in (0..n).filter(|&i| i != skip) {
        out[len] = i;
        len += 1;
    }
    (out, len)
}

/// Characteristic-polynomial recursion: returns `(adj(A), det(A))`.
///
/// With `M₀ = 0`, `Mₖ = A Mₖ₋₁ + cₙ₋ₖ₊₁ I`, `cₙ₋ₖ = −tr(A Mₖ)/k`, the
/// adjugate is `(−1)ⁿ⁻¹ Mₙ` and the determinant `(−1)ⁿ c₀`.
fn faddeev_leverrier(a: &Matrix) -> (Matrix, f64) {
    let n = a.nrows();
    let eye = Matrix::identity(n, n);
    let mut m = Matrix::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        m = a * &m + &eye * c;
        let am = a * &m;
        c = -am.trace() / k as f64;
    }
    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
    let det = if n % 2 == 0 { c } else { -c };
    (m * sign, det)
}

/// Determinant; exact cofactor expansion up to 4×4.
pub fn determinant(m: &Matrix) -> f64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.nrows();
    if n <= COFACTOR_MAX_DIM {
        let idx: Vec<usize> = (0..n).collect();
        laplace(m, &idx, &idx)
    } else {
        faddeev_leverrier(m).1
    }
}

/// Adjugate (transposed cofactor matrix). Valid for singular input.
pub fn adjugate(m: &Matrix) -> Matrix {
    adjugate_and_determinant(m).0
}

/// Returns `(adj{M}, det{M})` so that `adj{M}·M = det{M}·I`.
pub fn adjugate_and_determinant(m: &Matrix) -> (Matrix, f64) {
    assert!(m.is_square(), "adjugate of a non-square matrix");
    let n = m.nrows();
    if n == 0 {
        return (Matrix::zeros(0, 0), 1.0);
    }
    if n > COFACTOR_MAX_DIM {
        return faddeev_leverrier(m);
    }
    let mut adj = Matrix::zeros(n, n);
    for i in 0..n {
        let (rows, nr) = complement(n, i);
        for j in 0..n {
            let (cols, nc) = complement(n, j);
            let minor = laplace(m, &rows[..nr], &cols[..nc]);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * minor;
        }
    }
    // Expansion along the first row reuses the cofactors just computed.
    let det = (0..n).map(|j| m[(0, j)] * adj[(j, 0)]).sum();
    (adj, det)
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).iter().all(|v| v.abs() <= tol)
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
pub fn symmetric_eigen_range(m: &Matrix) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = symmetrize(m).symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Numerical rank from the singular values.
pub fn rank(m: &Matrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = smax * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

pub fn is_diagonal(m: &Matrix) -> bool {
    m.is_square()
        && m.iter()
            .enumerate()
            .all(|(k, v)| k % m.nrows() == k / m.nrows() || *v == 0.0)
}

/// `xᵀ M y`.
pub fn bilinear(x: &Vector, m: &Matrix, y: &Vector) -> f64 {
    x.dot(&(m * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_adjugate() {
        let om = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let (adj, det) = adjugate_and_determinant(&om);
        assert_eq!(det, 1.0);
        let y = Vector::from_vec(vec![3.0, 2.0]);
        assert_eq!(adj * y, Vector::from_vec(vec![1.0, 1.0]));
    }

    #[test]
    fn scalar_adjugate_is_one() {
        let om = Matrix::from_element(1, 1, 7.5);
        let (adj, det) = adjugate_and_determinant(&om);
        assert_eq!(adj[(0, 0)], 1.0);
        assert_eq!(det, 7.5);
    }

    #[test]
    fn singular_matrix_has_rank_one_adjugate() {
        // rank n-1 => adj has rank 1 and adj·M = 0
        let m = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 1.0, 0.0, 1.0]);
        let (adj, det) = adjugate_and_determinant(&m);
        assert_eq!(det, 0.0);
        assert!((&adj * &m).iter().all(|v| v.abs() < 1e-12));
        assert_eq!(rank(&adj), 1);
    }

    #[test]
    fn faddeev_leverrier_matches_cofactors() {
        let m = Matrix::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5 + (i == j) as u8 as f64);
        let (a1, d1) = adjugate_and_determinant(&m);
        let (a2, d2) = faddeev_leverrier(&m);
        assert!((d1 - d2).abs() < 1e-10);
        assert!((a1 - a2).abs().max() < 1e-10);
    }

    #[test]
    fn large_adjugate_identity() {
        let n = 6;
        let m = Matrix::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 0.5 } else { 0.0 });
        let (adj, det) = adjugate_and_determinant(&m);
        let lhs = adj * &m;
        let rhs = Matrix::identity(n, n) * det;
        assert!((lhs - rhs).abs().max() < 1e-10);
        assert!((det - m.determinant()).abs() < 1e-10);
    }

    #[test]
    fn rank_and_diagonal() {
        let c = Matrix::from_row_slice(1, 4, &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(rank(&c), 1);
        assert!(is_diagonal(&Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0]))));
        assert!(!is_diagonal(&Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])));
    }
}
