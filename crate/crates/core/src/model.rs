//! Generic averaged model of a switched converter in port-Hamiltonian form,
//!
//! ```text
//! ẋ = (J₀ + Σ Jᵢuᵢ − R) Q x + (G₀ + Σ Gᵢuᵢ) E,      y_m = C x,
//! ```
//!
//! with inductor fluxes and capacitor charges as state and stored energy
//! `H(x) = ½ xᵀQx`. The co-energy vector `Qx` holds currents and voltages.

use crate::error::ModelError;
use crate::linalg;
use crate::{Matrix, Vector};

/// Default absolute tolerance for algebraic residuals.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Unvalidated model matrices, as read from a config file or built in code.
#[derive(Debug, Clone, PartialEq)]
pub struct RawModel {
    /// `J₀ … J_m`; index 0 is the drift interconnection.
    pub j: Vec<Matrix>,
    pub r: Matrix,
    /// Diagonal matrix of inverse inductances / capacitances.
    pub q: Matrix,
    /// `G₀ … G_m`.
    pub g: Vec<Matrix>,
    pub e: Vector,
    /// `p × n` measurement selector.
    pub c: Matrix,
    /// Names of the co-energy variables (currents / voltages), used for logs.
    pub labels: Option<Vec<String>>,
}

impl RawModel {
    pub fn validate(self) -> Result<PHModel, ModelError> {
        validate_model(self)
    }
}

/// Validated, immutable converter model.
#[derive(Debug, Clone, PartialEq)]
pub struct PHModel {
    j: Vec<Matrix>,
    r: Matrix,
    q: Matrix,
    q_diag: Vector,
    g: Vec<Matrix>,
    e: Vector,
    c: Matrix,
    labels: Vec<String>,
    r_positive_definite: bool,
}

fn dim_err(msg: impl Into<String>) -> ModelError {
    ModelError::Dimension(msg.into())
}

/// Checks the standing assumptions and returns the validated model.
///
/// Skew-symmetry and symmetry are checked exactly. Positive definiteness of
/// `R` is recorded but not required: the Ćuk converter has an uncoupled
/// capacitor and only a semidefinite `R`.
pub fn validate_model(raw: RawModel) -> Result<PHModel, ModelError> {
    let n = raw.q.nrows();
    if n == 0 || !raw.q.is_square() {
        return Err(dim_err("Q must be a non-empty square matrix"));
    }
    if raw.j.is_empty() || raw.j.len() != raw.g.len() {
        return Err(dim_err(format!(
            "need m+1 interconnection and input matrices, got {} and {}",
            raw.j.len(),
            raw.g.len()
        )));
    }
    for (name, mats) in [("J", &raw.j), ("G", &raw.g)] {
        if let Some(i) = mats.iter().position(|m| m.shape() != (n, n)) {
            return Err(dim_err(format!("{name}{i} must be {n}x{n}")));
        }
    }
    if raw.r.shape() != (n, n) {
        return Err(dim_err(format!("R must be {n}x{n}")));
    }
    if raw.e.len() != n {
        return Err(dim_err(format!("E must have length {n}")));
    }
    if raw.c.ncols() != n {
        return Err(dim_err(format!("C must have {n} columns")));
    }

    for (i, ji) in raw.j.iter().enumerate() {
        if !(ji + ji.transpose()).iter().all(|v| *v == 0.0) {
            return Err(ModelError::NonSkew(i));
        }
    }
    if !linalg::is_symmetric(&raw.r, 0.0) {
        return Err(ModelError::NonSymmetricR);
    }
    let (r_min, r_max) = linalg::symmetric_eigen_range(&raw.r);
    let r_tol = 1e-12 * r_max.abs().max(1.0);
    if r_min < -r_tol {
        return Err(ModelError::NonPsdR(r_min));
    }
    let q_diag = raw.q.diagonal();
    if !linalg::is_diagonal(&raw.q) || q_diag.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(ModelError::NonPositiveQ);
    }
    let p = raw.c.nrows();
    if p == 0 || p >= n || linalg::rank(&raw.c) != p {
        return Err(ModelError::RankDeficientC);
    }
    let labels = match raw.labels {
        Some(l) if l.len() == n => l,
        Some(l) => return Err(dim_err(format!("{} labels for {n} states", l.len()))),
        None => (1..=n).map(|i| format!("z{i}")).collect(),
    };

    Ok(PHModel {
        j: raw.j,
        r: raw.r,
        q: raw.q,
        q_diag,
        g: raw.g,
        e: raw.e,
        c: raw.c,
        labels,
        r_positive_definite: r_min > r_tol,
    })
}

impl PHModel {
    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn m(&self) -> usize {
        self.j.len() - 1
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn j(&self, i: usize) -> &Matrix {
        &self.j[i]
    }

    pub fn g(&self, i: usize) -> &Matrix {
        &self.g[i]
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn q_diag(&self) -> &Vector {
        &self.q_diag
    }

    pub fn e(&self) -> &Vector {
        &self.e
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Whether `R` is strictly positive definite (not just semidefinite).
    pub fn r_positive_definite(&self) -> bool {
        self.r_positive_definite
    }

    /// Back to raw form, e.g. to derive a variant with a changed parameter.
    pub fn to_raw(&self) -> RawModel {
        RawModel {
            j: self.j.clone(),
            r: self.r.clone(),
            q: self.q.clone(),
            g: self.g.clone(),
            e: self.e.clone(),
            c: self.c.clone(),
            labels: Some(self.labels.clone()),
        }
    }

    /// Stored energy `½ xᵀQx` in joules.
    pub fn energy(&self, x: &Vector) -> f64 {
        0.5 * x.iter().zip(self.q_diag.iter()).map(|(xi, qi)| qi * xi * xi).sum::<f64>()
    }

    /// Co-energy variables `Qx` (currents and voltages).
    pub fn co_energy(&self, x: &Vector) -> Vector {
        x.component_mul(&self.q_diag)
    }

    /// Inverse of [`PHModel::co_energy`].
    pub fn from_co_energy(&self, z: &Vector) -> Vector {
        z.component_div(&self.q_diag)
    }

    /// `J₀ + Σ Jᵢuᵢ`.
    pub fn interconnection(&self, u: &[f64]) -> Matrix {
        debug_assert_eq!(u.len(), self.m());
        let mut jm = self.j[0].clone();
        for (ji, ui) in self.j[1..].iter().zip(u) {
            jm += ji * *ui;
        }
        jm
    }

    /// `Λ(u) = (J₀ + Σ Jᵢuᵢ − R) Q`. The duty ratio is not range-checked.
    pub fn drift_matrix(&self, u: &[f64]) -> Matrix {
        let mut a = self.interconnection(u) - &self.r;
        for (k, qk) in self.q_diag.iter().enumerate() {
            a.column_mut(k).scale_mut(*qk);
        }
        a
    }

    /// `b(u) = (G₀ + Σ Gᵢuᵢ) E`.
    pub fn input_vector(&self, u: &[f64]) -> Vector {
        debug_assert_eq!(u.len(), self.m());
        let mut b = &self.g[0] * &self.e;
        for (gi, ui) in self.g[1..].iter().zip(u) {
            if *ui != 0.0 {
                b += (gi * &self.e) * *ui;
            }
        }
        b
    }

    /// Right-hand side `Λ(u)x + b(u)`.
    pub fn dynamics(&self, x: &Vector, u: &[f64]) -> Vector {
        self.drift_matrix(u) * x + self.input_vector(u)
    }

    /// Left-hand side of the equilibrium condition; zero iff `(x*, u*)` is an
    /// assignable equilibrium.
    pub fn equilibrium_residual(&self, x_star: &Vector, u_star: &[f64]) -> Vector {
        self.dynamics(x_star, u_star)
    }

    /// Measured output `y_m = Cx`.
    pub fn measure(&self, x: &Vector) -> Vector {
        &self.c * x
    }
}

/// An assignable equilibrium `(x*, u*)` with its residual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPair {
    pub x_star: Vector,
    pub u_star: Vec<f64>,
    pub residual_norm: f64,
}

impl EquilibriumPair {
    /// Builds the pair after checking the residual and `u* ∈ (0,1)`.
    pub fn certify(
        model: &PHModel,
        x_star: Vector,
        u_star: Vec<f64>,
        tol: f64,
    ) -> Result<Self, crate::error::EquilibriumError> {
        if u_star.len() != model.m() || x_star.len() != model.n() {
            return Err(dim_err("equilibrium pair dimensions do not match the model").into());
        }
        if u_star.iter().any(|u| !(*u > 0.0 && *u < 1.0)) {
            return Err(crate::error::EquilibriumError::NoRootInUnitInterval { roots: u_star });
        }
        let residual_norm = model.equilibrium_residual(&x_star, &u_star).norm();
        if !(residual_norm <= tol) {
            return Err(crate::error::EquilibriumError::Residual(residual_norm));
        }
        Ok(Self { x_star, u_star, residual_norm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuk::{build_cuk, CukParams};

    fn cuk() -> PHModel {
        build_cuk(&CukParams::default()).unwrap()
    }

    #[test]
    fn cuk_is_valid_but_only_semidefinite() {
        let m = cuk();
        assert_eq!((m.n(), m.m(), m.p()), (4, 1, 1));
        assert!(!m.r_positive_definite());
    }

    #[test]
    fn symmetric_j_is_rejected() {
        let mut raw = cuk().to_raw();
        raw.j[0] += Matrix::identity(4, 4);
        assert_eq!(validate_model(raw), Err(ModelError::NonSkew(0)));
    }

    #[test]
    fn zero_q_entry_is_rejected() {
        let mut raw = cuk().to_raw();
        raw.q[(2, 2)] = 0.0;
        assert_eq!(validate_model(raw), Err(ModelError::NonPositiveQ));
    }

    #[test]
    fn r_checks() {
        let mut raw = cuk().to_raw();
        raw.r[(0, 1)] = 0.5;
        assert_eq!(validate_model(raw), Err(ModelError::NonSymmetricR));
        let mut raw = cuk().to_raw();
        raw.r[(1, 1)] = -1.0;
        assert!(matches!(validate_model(raw), Err(ModelError::NonPsdR(_))));
    }

    #[test]
    fn rank_deficient_c() {
        let mut raw = cuk().to_raw();
        raw.c = Matrix::zeros(1, 4);
        assert_eq!(validate_model(raw), Err(ModelError::RankDeficientC));
        let mut raw = cuk().to_raw();
        raw.c = Matrix::identity(4, 4);
        assert_eq!(validate_model(raw), Err(ModelError::RankDeficientC));
    }

    #[test]
    fn energy_of_unit_inductor_current() {
        let m = cuk();
        assert_eq!(m.energy(&Vector::zeros(4)), 0.0);
        let x = Vector::from_vec(vec![10e-3, 0.0, 0.0, 0.0]);
        assert!((m.energy(&x) - 5e-3).abs() < 1e-15);
    }

    #[test]
    fn input_vector_ignores_duty_for_cuk() {
        let m = cuk();
        for u in [0.0, 0.3, 0.9] {
            assert_eq!(m.input_vector(&[u]), Vector::from_vec(vec![12.0, 0.0, 0.0, 0.0]));
        }
        let mut raw = m.to_raw();
        raw.e = Vector::zeros(4);
        let m0 = validate_model(raw).unwrap();
        assert_eq!(m0.input_vector(&[0.4]), Vector::zeros(4));
        assert_eq!(m0.equilibrium_residual(&Vector::zeros(4), &[0.4]), Vector::zeros(4));
    }

    #[test]
    fn drift_at_zero_duty() {
        let m = cuk();
        let expected = (m.j(0) - m.r()) * m.q();
        assert!((m.drift_matrix(&[0.0]) - expected).abs().max() < 1e-12);
        assert_eq!(m.dynamics(&Vector::zeros(4), &[0.5]), m.input_vector(&[0.5]));
    }
}
