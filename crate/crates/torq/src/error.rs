use thiserror::Error;

/// Errors raised by circuit-parameter validation and the solver pipeline.
#[derive(Debug, Error)]
pub enum TorqError {
    #[error("non-positive capacitance: {field} = {value}")]
    NonPositiveCapacitance { field: &'static str, value: f64 },

    #[error("negative Josephson energy: {field} = {value}")]
    NegativeJosephsonEnergy { field: &'static str, value: f64 },

    #[error("bias `{bias}` does not match design `{design}`")]
    BiasDesignMismatch { bias: &'static str, design: &'static str },

    #[error("design `{0}` is not supported by this basis")]
    UnsupportedDesign(&'static str),

    #[error("flux grid too coarse: {axis} has {points} points (need >= 31, odd)")]
    GridTooCoarse { axis: &'static str, points: usize },

    #[error("invalid basis spec: {0}")]
    InvalidSpec(String),

    #[error("eigensolver failed to converge after {iterations} iterations (best residual {best_residual:.3e})")]
    ConvergenceFailure { iterations: usize, best_residual: f64 },

    #[error("LAPACK {routine} returned info = {info}")]
    LapackError { routine: &'static str, info: i32 },

    #[error("convergence ladder needs at least 2 rungs, got {0}")]
    LadderTooShort(usize),

    #[error("gap minimum not bracketed: argmin at sweep endpoint f = {0}")]
    NoBracket(f64),

    #[error("realization {index}: sampled {field} non-positive after resampling")]
    InvalidRealization { index: u64, field: &'static str },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("at bias point {bias}: {source}")]
    AtBiasPoint {
        bias: f64,
        #[source]
        source: Box<TorqError>,
    },

    #[error("realization {index}: {source}")]
    AtRealization {
        index: u64,
        #[source]
        source: Box<TorqError>,
    },
}

impl TorqError {
    pub fn at_bias(self, bias: f64) -> Self {
        TorqError::AtBiasPoint {
            bias,
            source: Box::new(self),
        }
    }

    pub fn at_realization(self, index: u64) -> Self {
        TorqError::AtRealization {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, TorqError>;
