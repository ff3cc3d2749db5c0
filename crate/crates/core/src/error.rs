use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown element `{0}`")]
    UnknownElement(String),

    #[error("unknown isotope {element}-{mass_number}")]
    UnknownIsotope { element: String, mass_number: u32 },

    #[error("{element}: isotopes {first} and {second} tie for highest abundance")]
    AmbiguousDominantIsotope { element: String, first: u32, second: u32 },

    #[error("{element}-{mass_number} is the dominant isotope; its broadening contribution is undefined")]
    DominantIsotope { element: String, mass_number: u32 },

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("degenerate lattice cell (volume {volume} Å^3)")]
    DegenerateCell { volume: f64 },

    #[error("transition strength matrix is all zero")]
    ZeroStrengths,

    #[error("splitting {index} of the 151Eu {manifold} manifold is zero; ratio undefined")]
    ZeroSplitting { manifold: String, index: usize },

    #[error("grid [{grid_lo}, {grid_hi}] MHz clips line at {line} MHz (needs [{need_lo}, {need_hi}])")]
    GridTooNarrow {
        line: f64,
        need_lo: f64,
        need_hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    #[error("peak fit did not converge after {iterations} iterations (rms {residual_rms})")]
    FitDidNotConverge {
        iterations: usize,
        residual_rms: f64,
        /// Best parameters so far, `(center, fwhm, area)` per peak.
        best: Vec<(f64, f64, f64)>,
    },

    #[error("spectrum has no usable peaks")]
    NoPeaks,

    #[error("rate matrix has {dimension} independent stationary states; steady state not unique")]
    NonUniqueSteadyState { dimension: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no finite blockade radius at the magic angle")]
    MagicAngle,

    #[error("empty {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input, as opposed to a computation that
    /// failed on valid input.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::FitDidNotConverge { .. } | Error::Numerical(_) | Error::NonUniqueSteadyState { .. }
        )
    }
}
