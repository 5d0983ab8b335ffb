use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unbalanced condition violated: {0}")]
    Unbalanced(String),
    #[error("invalid reaction term: {0}")]
    InvalidReaction(String),
    #[error("NaN input to {0}")]
    NanInput(&'static str),
    #[error("bisection bracket failure: {0}")]
    BracketFailure(String),
    #[error("profile monotonicity failure at xi = {xi}: g' = {slope}")]
    ProfileMonotonicity { xi: f64, slope: f64 },
    #[error("profile tabulation: {0}")]
    Tabulation(String),
    #[error("invalid arrangement: {0}")]
    InvalidArrangement(String),
    #[error("ridge proxy needs at least two fronts")]
    NoRidges,
    #[error("surface solve did not converge at t = {t}: residual {residual:e}")]
    SurfaceSolve { t: f64, residual: f64 },
    #[error("parameter out of admissible range: {0}")]
    Inadmissible(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("numerical blow-up at t = {time}: {detail}")]
    BlowUp {
        time: f64,
        detail: String,
        snapshot: Option<PathBuf>,
    },
    #[error("snapshot format: {0}")]
    Format(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("experiment: {0}")]
    Experiment(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is numerical (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BracketFailure(_)
                | Error::ProfileMonotonicity { .. }
                | Error::Tabulation(_)
                | Error::SurfaceSolve { .. }
                | Error::BlowUp { .. }
        )
    }
}

pub(crate) fn check_finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_nan() {
        Err(Error::NanInput(name))
    } else {
        Ok(v)
    }
}
