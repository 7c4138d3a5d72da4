//! Finite-blocklength random-binning simulation of the point-to-point
//! achievability scheme.
//!
//! Every `u^n` receives uniform i.i.d. bin indices `(g, w)`. In protocol B
//! the encoder, given `(g, w, x^n)`, draws `(u^n, x~^n)` from the i.i.d. law
//! restricted to the bin; the decoder recovers `u^n` from `(g, w, y~^n)`
//! by maximum a posteriori decoding within the bin and then applies the
//! letterwise kernel `p(y | y~, u)`. The induced `q(x^n, y^n)` is computed by
//! exact enumeration and compared with the i.i.d. target law.
//!
//! Sequences are indexed row-major, first letter slowest; bin indices are
//! 0-based.

mod binning;
pub mod casestudy;
mod decoder;
pub mod fixtures;
mod protocol;

pub use binning::{bin_count, draw_binning, BinningCode, DEFAULT_SEQUENCE_CAP};
pub use decoder::{build_sw_decoder, sw_error_monte_carlo, sw_error_prob, SwDecoder};
pub use protocol::{
    fix_g_instance, simulate, simulate_monte_carlo, GSelection, Protocol, SimConfig, SimReport,
    DEFAULT_STATE_CAP,
};

use thiserror::Error;

use crate::probkit::ProbError;
use crate::regions::RegionError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OsrbError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("{what} = {value} exceeds the cap {cap}")]
    Cap { what: &'static str, value: f64, cap: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("no g-instance {0}; the code has {1}")]
    UnknownG(usize, usize),
}

pub type Result<T> = std::result::Result<T, OsrbError>;

/// Symbols of sequence `idx` over an alphabet of size `q`, first letter first.
pub(crate) fn digits(mut idx: usize, q: usize, n: usize, out: &mut [usize]) {
    for i in (0..n).rev() {
        out[i] = idx % q;
        idx /= q;
    }
}

/// `q^n` as `f64`, for cap checks that must not overflow.
pub(crate) fn pow_f(q: usize, n: usize) -> f64 {
    (q as f64).powi(n as i32)
}
