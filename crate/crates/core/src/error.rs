use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state has {found} coefficients but the spectrum has {expected} modes")]
    LengthMismatch { expected: usize, found: usize },

    #[error(
        "mode {mode} has |mu*tau| = {alpha} outside the scheme domain (radius {radius}); \
         the range hypothesis f: (-R,R) -> (-pi,pi) does not cover it"
    )]
    FrequencyOutOfSchemeDomain { mode: usize, alpha: f64, radius: f64 },

    #[error("argument {alpha} lies outside the scheme domain (-{radius}, {radius})")]
    OutsideDomain { alpha: f64, radius: f64 },

    #[error("Newmark parameter beta = {0} outside [0, 1/4]")]
    BetaOutOfRange(f64),

    #[error("inverse target |y| = {y} exceeds f(delta) = {limit}")]
    TargetOutOfRange { y: f64, limit: f64 },

    #[error("frequency {freq} outside the Nyquist cell (-{limit}, {limit})")]
    NyquistViolation { freq: f64, limit: f64 },

    #[error("mode {mode} with |mu*tau| = {alpha} is not in the filtered class |mu*tau| <= {delta}")]
    UnfilteredInput { mode: usize, alpha: f64, delta: f64 },

    #[error("point (t, s) = ({t}, {s}) is inside the group-velocity cone")]
    InsideCone { t: f64, s: f64 },

    #[error("filter band selects no mode of the spectrum")]
    EmptyBand,

    #[error(
        "band edge {delta} is not below the scheme radius R = {radius}; \
         violates the range hypothesis f: (-R,R) -> (-pi,pi)"
    )]
    BandExceedsScheme { delta: f64, radius: f64 },

    #[error("frequency gap {found} between modes {index} and {next} is below the required gap {gap}")]
    GapViolated {
        index: usize,
        next: usize,
        found: f64,
        gap: f64,
    },

    #[error("spectrum truncation N = {available} cannot hold the wave packet (needs N >= {required})")]
    TruncationTooSmall { required: i64, available: i64 },

    #[error("observation seminorm is degenerate at mode j = {j} (sin^2(j pi x0) = {value:e})")]
    DegenerateSeminorm { j: u64, value: f64 },

    #[error("observation value {value} at mode {mode} violates the boundedness bound {bound}")]
    ObservationUnbounded { mode: usize, value: f64, bound: f64 },

    #[error("hermitian eigensolve failed: {0}")]
    Eigensolve(String),
}
