use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("t = {t} lies outside the warp domain ({lo}, {hi})")]
    Domain { t: f64, lo: f64, hi: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    /// `|Du| / f(u)` exceeded the allowed bound at `vertex`.
    #[error("graph is not spacelike within margin at vertex {vertex}: |Du|/f(u) = {ratio} > {bound}")]
    Geometry { vertex: usize, ratio: f64, bound: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
}
