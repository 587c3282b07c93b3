use alloc::string::String;
use core::fmt;

/// Error type shared by all solver and oracle entry points.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration: bad grid, unknown catalog entry, empty lattice, ...
    Config(String),
    /// Two objects that must share a grid do not.
    GridMismatch(String),
    /// Explicit diffusion stability condition violated; carries nu*delta/h^2.
    Stability { ratio: f64 },
    /// Enumeration work estimate exceeds the budget; switch to lattice-DP mode.
    BudgetExceeded { required: u128, budget: u128 },
    /// A precondition on the inputs failed (e.g. terminal data not ordered).
    Precondition(String),
    /// Values left the representable range (e.g. heat-kernel underflow).
    NumericalRange(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::GridMismatch(msg) => write!(f, "grid mismatch: {msg}"),
            Error::Stability { ratio } => write!(
                f,
                "stability violation: nu*delta/h^2 = {ratio} exceeds 1/2; refine the time grid"
            ),
            Error::BudgetExceeded { required, budget } => write!(
                f,
                "enumeration budget exceeded ({required} > {budget}); use lattice-DP mode"
            ),
            Error::Precondition(msg) => write!(f, "precondition failed: {msg}"),
            Error::NumericalRange(msg) => write!(f, "numerical range error: {msg}"),
        }
    }
}

#[cfg(test)]
impl std::error::Error for Error {}
