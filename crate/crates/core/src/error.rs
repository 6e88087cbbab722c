use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("{name} = {value} is outside its domain: {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// The quantity is infinite at the requested argument (e.g. `K(1)`).
    #[error("{what} diverges at {name} = {value}")]
    Divergence {
        what: &'static str,
        name: &'static str,
        value: f64,
    },

    /// A grid, window or run configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An iteration that converges for every valid input failed to do so.
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(
    ok: bool,
    name: &'static str,
    value: f64,
    constraint: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            constraint,
        })
    }
}
