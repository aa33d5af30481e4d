use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (negative age, size mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The model itself is unusable (a law sampled a negative value, a rate is not monotone, ...).
    #[error("model error: {0}")]
    Model(String),

    #[error("event cap of {cap} events exceeded at t = {time}; the intensity is probably explosive")]
    EventCapExceeded { cap: u64, time: f64 },

    #[error("CFL rule violated: dt = {dt} > dx = {dx} (unit transport speed requires dt <= dx)")]
    Cfl { dt: f64, dx: f64 },

    #[error("Picard iteration did not converge within {iterations} iterations (last residual {last:e})")]
    PicardNotConverged {
        iterations: usize,
        last: f64,
        residuals: Vec<f64>,
    },

    #[error("age grid too short: tail mass beyond x_max = {x_max} is {tail_mass:e} (limit 1e-6)")]
    GridTooShort { x_max: f64, tail_mass: f64 },

    #[error("replica failed (N = {n}, seed = {seed}): {source}")]
    Replica {
        n: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
