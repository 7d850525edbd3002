use crate::numkit::NumError;
use crate::systems::SystemError;
use crate::trigcalc::TrigError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Trig(#[from] TrigError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("invalid parameter: {0}")]
    Domain(String),
    #[error("no flat region: {0}")]
    Selection(String),
    #[error("degenerate zero at t = {t}: derivative {derivative:e}")]
    DegenerateZero { t: f64, derivative: f64 },
    #[error("grazing zero at t = {t}: left derivative {derivative:e}")]
    GrazingZero { t: f64, derivative: f64 },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{method} failed: {detail}")]
    Solve { method: &'static str, detail: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
