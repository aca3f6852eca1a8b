//! The Ćuk converter: model matrices, equilibrium parameterization and an
//! independent steady-state oracle.
//!
//! State `x = (L₁i₁, C₁v₂, L₂i₃, C₂v₄)`, one duty ratio `u`, and only the
//! output voltage `v₄` measured. Equilibria are parameterized by the output
//! reference `x₄* = v₄* < 0` (inverting converter).

use serde::{Deserialize, Serialize};

use crate::error::{EquilibriumError, ModelError};
use crate::model::{validate_model, EquilibriumPair, PHModel, RawModel, DEFAULT_TOL};
use crate::{Matrix, Vector};

/// Circuit parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CukParams {
    /// Source voltage (V).
    pub e: f64,
    /// Parasitic resistance of the input inductor (Ω).
    pub r1: f64,
    /// Parasitic resistance of the output inductor (Ω).
    pub r2: f64,
    /// Load resistance (Ω).
    pub r: f64,
    pub l1: f64,
    pub l2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for CukParams {
    fn default() -> Self {
        Self {
            e: 12.0,
            r1: 1.7,
            r2: 1.7,
            r: 20.0,
            l1: 10e-3,
            l2: 10e-3,
            c1: 22e-6,
            c2: 22.9e-6,
        }
    }
}

impl CukParams {
    /// Storage elements `(L₁, C₁, L₂, C₂)`; `x = diag(storage)·(i₁, v₂, i₃, v₄)`.
    pub fn storage(&self) -> [f64; 4] {
        [self.l1, self.c1, self.l2, self.c2]
    }

    pub fn with_load(mut self, r: f64) -> Self {
        self.r = r;
        self
    }
}

/// Builds the averaged Ćuk model. Parasitics may be zero (ideal converter);
/// the load must be positive.
pub fn build_cuk(p: &CukParams) -> Result<PHModel, ModelError> {
    if !(p.r > 0.0) || p.r1 < 0.0 || p.r2 < 0.0 {
        return Err(ModelError::NonPsdR(p.r1.min(p.r2).min(p.r)));
    }
    let j0 = Matrix::from_row_slice(
        4,
        4,
        &[
            0.0, -1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    );
    let j1 = Matrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 1.0, 0.0, //
            0.0, -1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0,
        ],
    );
    let mut g0 = Matrix::zeros(4, 4);
    g0[(0, 0)] = 1.0;
    let r = Matrix::from_diagonal(&Vector::from_vec(vec![p.r1, 0.0, p.r2, 1.0 / p.r]));
    let q = Matrix::from_diagonal(&Vector::from_iterator(4, p.storage().iter().map(|s| 1.0 / s)));
    validate_model(RawModel {
        j: vec![j0, j1],
        r,
        q,
        g: vec![g0, Matrix::zeros(4, 4)],
        e: Vector::from_vec(vec![p.e, 0.0, 0.0, 0.0]),
        c: Matrix::from_row_slice(1, 4, &[0.0, 0.0, 0.0, 1.0]),
        labels: Some(["i1", "v2", "i3", "v4"].iter().map(|s| s.to_string()).collect()),
    })
}

/// Coefficients of `a₂u² + a₁u + a₀ = 0`, whose roots are the steady-state
/// duty ratios for a given `x₄*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumQuadratic {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl EquilibriumQuadratic {
    pub fn new(p: &CukParams, x4_star: f64) -> Self {
        Self {
            a0: (p.r + p.r2) * x4_star,
            a1: p.e * p.r - 2.0 * (p.r + p.r2) * x4_star,
            a2: (p.r1 + p.r + p.r2) * x4_star - p.e * p.r,
        }
    }

    pub fn discriminant(&self) -> f64 {
        self.a1 * self.a1 - 4.0 * self.a2 * self.a0
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.a2 * u + self.a1) * u + self.a0
    }

    /// Real roots in ascending order, computed without cancellation.
    pub fn roots(&self) -> Option<(f64, f64)> {
        let disc = self.discriminant();
        if disc < 0.0 {
            return None;
        }
        if self.a2 == 0.0 {
            let u = -self.a0 / self.a1;
            return Some((u, u));
        }
        let sq = disc.sqrt();
        let qq = -0.5 * (self.a1 + self.a1.signum() * sq);
        let (u1, u2) = if qq == 0.0 {
            (0.0, 0.0)
        } else {
            (qq / self.a2, self.a0 / qq)
        };
        Some((u1.min(u2), u1.max(u2)))
    }
}

/// Which admissible duty ratio to use when two lie in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootPolicy {
    #[default]
    Smallest,
    Largest,
}

/// Steady-state polynomial obtained by eliminating `i₁, v₂, i₃` from the four
/// averaged equations with `ẋ = 0` and `v₄ = x₄*`.
fn steady_state_polynomial(p: &CukParams, x4: f64, u: f64) -> f64 {
    x4 * (p.r1 * u * u + (p.r + p.r2) * (1.0 - u) * (1.0 - u)) + p.e * p.r * u * (1.0 - u)
}

const ORACLE_GRID: usize = 10_000;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-13 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// All steady-state duty ratios in (0, 1), found by a sign scan of the
/// steady-state polynomial on a uniform grid followed by bisection. Tangent
/// (double) roots are picked up from local minima of `|ρ|`.
pub fn steady_state_oracle(p: &CukParams, x4_star: f64) -> Result<Vec<f64>, EquilibriumError> {
    let rho = |u: f64| steady_state_polynomial(p, x4_star, u);
    let scale = x4_star.abs() * (p.r1 + p.r + p.r2) + p.e * p.r;
    let grid: Vec<f64> = (1..ORACLE_GRID).map(|i| i as f64 / ORACLE_GRID as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| rho(u)).collect();
    let mut roots = Vec::new();
    for k in 0..grid.len() {
        if vals[k] == 0.0 {
            roots.push(grid[k]);
        } else if k + 1 < grid.len() && vals[k + 1] != 0.0 && (vals[k] < 0.0) != (vals[k + 1] < 0.0) {
            roots.push(bisect(rho, grid[k], grid[k + 1]));
        }
    }
    for k in 1..grid.len().saturating_sub(1) {
        let (a, b, c) = (vals[k - 1].abs(), vals[k].abs(), vals[k + 1].abs());
        let same_sign = (vals[k - 1] < 0.0) == (vals[k] < 0.0) && (vals[k] < 0.0) == (vals[k + 1] < 0.0);
        if same_sign && b < a && b <= c {
            let u = golden_min(|u| rho(u).abs(), grid[k - 1], grid[k + 1]);
            if rho(u).abs() <= 1e-12 * scale {
                roots.push(u);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if roots.is_empty() {
        Err(EquilibriumError::NoRoot)
    } else {
        Ok(roots)
    }
}

/// Equilibrium coefficient vector `d(u*)` such that the physical equilibrium
/// `(i₁*, v₂*, i₃*, v₄*) = d(u*)·x₄*`.
pub fn equilibrium_direction(p: &CukParams, u: f64) -> [f64; 4] {
    [-u / (p.r * (1.0 - u)), -(1.0 / u) * (1.0 + p.r2 / p.r), 1.0 / p.r, 1.0]
}

/// Solved operating point with the diagnostics reported by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct CukEquilibrium {
    pub pair: EquilibriumPair,
    /// `(i₁*, v₂*, i₃*, v₄*)` in A and V.
    pub physical: [f64; 4],
    /// Admissible analytic roots in (0, 1), ascending.
    pub candidates: Vec<f64>,
    pub oracle_roots: Vec<f64>,
    pub quadratic: EquilibriumQuadratic,
}

impl CukEquilibrium {
    pub fn u_star(&self) -> f64 {
        self.pair.u_star[0]
    }
}

/// Solves for the equilibrium with output voltage `x₄*`, verifying the
/// residual and agreement with [`steady_state_oracle`].
pub fn solve_equilibrium(
    p: &CukParams,
    x4_star: f64,
    policy: RootPolicy,
) -> Result<CukEquilibrium, EquilibriumError> {
    if !(x4_star < 0.0) {
        return Err(EquilibriumError::InvalidReference(x4_star));
    }
    let quadratic = EquilibriumQuadratic::new(p, x4_star);
    let discriminant = quadratic.discriminant();
    let (lo, hi) = quadratic
        .roots()
        .ok_or(EquilibriumError::Infeasible { discriminant })?;
    let mut candidates: Vec<f64> = [lo, hi].into_iter().filter(|u| *u > 0.0 && *u < 1.0).collect();
    candidates.dedup();
    let u = match policy {
        RootPolicy::Smallest => candidates.first(),
        RootPolicy::Largest => candidates.last(),
    }
    .copied()
    .ok_or(EquilibriumError::NoRootInUnitInterval { roots: vec![lo, hi] })?;

    let oracle_roots = steady_state_oracle(p, x4_star)?;
    if !oracle_roots.iter().any(|r| (r - u).abs() <= 1e-9) {
        return Err(EquilibriumError::OracleMismatch { analytic: u, oracle: oracle_roots });
    }

    let d = equilibrium_direction(p, u);
    let physical = d.map(|di| di * x4_star);
    let storage = p.storage();
    let x_star = Vector::from_iterator(4, physical.iter().zip(storage).map(|(z, s)| z * s));
    let model = build_cuk(p)?;
    let pair = EquilibriumPair::certify(&model, x_star, vec![u], DEFAULT_TOL)?;
    Ok(CukEquilibrium { pair, physical, candidates, oracle_roots, quadratic })
}
