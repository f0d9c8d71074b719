use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite input at coordinate {0}")]
    NonFinite(usize),
    #[error("parse error{}: {msg}", layer.map(|l| format!(" in layer {l}")).unwrap_or_default())]
    Parse { layer: Option<usize>, msg: String },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("infeasible budget: {0}")]
    Infeasible(String),
    #[error("quadrature did not converge on {location} (relative residual {residual:.3e})")]
    Quadrature { location: String, residual: f64 },
    #[error("tolerance {name} = {value:.3e} is below 1e-12; lower the coefficient norm or raise epsilon")]
    Underflow { name: &'static str, value: f64 },
    #[error("calibration reached ell_max = {ell_max} without meeting the target; best H1 error {best:.4e}")]
    Calibration { ell_max: usize, best: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
