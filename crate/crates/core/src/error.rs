use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible point: {0}")]
    Infeasible(String),

    #[error("ground set of size {n} exceeds the enumeration guard of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(xs: &[f64], what: &str) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "{what}[{i}] is not finite ({})",
            xs[i]
        ))),
        None => Ok(()),
    }
}

pub(crate) fn ensure_budget(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "budget must satisfy 1 <= k <= n (got n={n}, k={k})"
        )));
    }
    Ok(())
}
