use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("no crossover: {0}")]
    NoCrossover(String),
    #[error("no tangency: {0}")]
    NoTangency(String),
    #[error("quadrature did not converge (achieved error estimate {achieved:e}, requested {requested:e})")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("rate envelope violated at t = {t:e}: rate {rate:e} > bound {bound:e}")]
    Envelope { t: f64, rate: f64, bound: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fit window too small: {0} points (need at least 8)")]
    Window(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
