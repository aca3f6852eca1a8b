use thiserror::Error;

/// Violations of the standing assumptions on a port-Hamiltonian model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("interconnection matrix J{0} is not skew-symmetric")]
    NonSkew(usize),
    #[error("dissipation matrix R is not symmetric")]
    NonSymmetricR,
    #[error("dissipation matrix R is not positive semidefinite (min eigenvalue {0:e})")]
    NonPsdR(f64),
    #[error("Q must be diagonal with strictly positive entries")]
    NonPositiveQ,
    #[error("measurement matrix C is rank deficient or has p >= n")]
    RankDeficientC,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("no steady-state duty ratio in (0, 1)")]
    NoRoot,
    #[error("infeasible reference (discriminant {discriminant})")]
    Infeasible { discriminant: f64 },
    #[error("no root of the equilibrium quadratic lies in (0, 1): {roots:?}")]
    NoRootInUnitInterval { roots: Vec<f64> },
    #[error("analytic root {analytic} disagrees with oracle roots {oracle:?}")]
    OracleMismatch { analytic: f64, oracle: Vec<f64> },
    #[error("equilibrium residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("reference must be negative for the inverting converter, got {0}")]
    InvalidReference(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("integral gain K_I is singular")]
    SingularKI,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObserverError {
    #[error("excitation threshold not reached within the horizon")]
    NotYetExcited,
    #[error("insufficient samples for the requested window")]
    InsufficientSamples,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("infeasible equilibrium at t = {epoch} s: {source}")]
    InfeasibleEquilibrium {
        epoch: f64,
        #[source]
        source: EquilibriumError,
    },
    #[error("non-finite state at t = {0} s")]
    NonFiniteState(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid parameter path `{0}`")]
    Path(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
