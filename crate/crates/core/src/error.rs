use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown basis pair `{0}` (expected one of ZZ, XX, XY, YX, YY)")]
    UnknownBasisPair(String),

    #[error("unknown intensity `{0}` (expected `mu` or `nu`)")]
    UnknownIntensity(String),

    #[error("zero gain for {pair} at intensity {intensity}: error rate undefined")]
    ZeroGain { pair: String, intensity: f64 },

    #[error("photon number {0} is not supported (only 0 and 1)")]
    UnsupportedPhotonNumber(u32),

    #[error("signal and decoy intensities too close: mu - nu = {0:e}")]
    DegenerateDecoy(f64),

    #[error("single-photon lower bound is zero for {0}: error-rate bound undefined")]
    EmptyTally(String),

    #[error("no detections in the key basis (n_ZZ = 0)")]
    EmptyKeyBasis,

    #[error("invalid tally table: {0}")]
    InvalidTally(String),

    #[error("link infeasible: no candidate yields a positive key rate")]
    InfeasibleLink,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
