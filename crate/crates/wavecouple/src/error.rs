use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("stationary template matching failed: {0}")]
    NoSolution(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("epsilon too large: {0}")]
    EpsilonTooLarge(String),
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("CFL condition violated: {0}")]
    CflViolation(String),
    #[error("supports overlap: {0}")]
    OverlappingSupports(String),
    #[error("no admissible delta: {0}")]
    NoAdmissibleDelta(String),
    #[error("bad epsilon: {0}")]
    BadEpsilon(String),
    #[error("jet order too low: {0}")]
    OrderTooLow(String),
    #[error("control time too short: {0}")]
    TimeTooShort(String),
    #[error("solution blew up: {0}")]
    BlowUp(String),
    #[error("Picard iteration diverged: {0}")]
    PicardDiverged(String),
    #[error("data incompatible: {0}")]
    DataIncompatible(String),
    #[error("derivative floor violated: {0}")]
    FloorViolated(String),
    #[error("Newton iteration stalled: {0}")]
    NewtonStalled(String),
    #[error("characteristic leaves the domain: {0}")]
    CharacteristicExitsDomain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable numeric code shared with the C interface.
    pub fn code(&self) -> i32 {
        match self {
            Error::NoSolution(_) => 1,
            Error::SingularSystem(_) => 2,
            Error::EpsilonTooLarge(_) => 3,
            Error::OutOfDomain(_) => 4,
            Error::CflViolation(_) => 5,
            Error::OverlappingSupports(_) => 6,
            Error::NoAdmissibleDelta(_) => 7,
            Error::BadEpsilon(_) => 8,
            Error::OrderTooLow(_) => 9,
            Error::TimeTooShort(_) => 10,
            Error::BlowUp(_) => 11,
            Error::PicardDiverged(_) => 12,
            Error::DataIncompatible(_) => 13,
            Error::FloorViolated(_) => 14,
            Error::NewtonStalled(_) => 15,
            Error::CharacteristicExitsDomain(_) => 16,
            Error::Parse(_) => 17,
            Error::Io(_) => 18,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
