use std::path::PathBuf;

use crate::frame_io::FrameError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid sizes, formats or mismatched operand formats.
    #[error("configuration error in {unit}: {msg}")]
    Config { unit: &'static str, msg: String },

    /// Data handed to a unit does not satisfy its shape or range contract.
    #[error("input error in {unit}: {msg}")]
    Input { unit: &'static str, msg: String },

    /// A hardware unit was driven out of sequence (load while busy, full bank, ...).
    #[error("protocol error in {unit}: {msg}")]
    Protocol { unit: &'static str, msg: String },

    #[error("frame_io: {0}")]
    Frame(#[from] FrameError),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(unit: &'static str, msg: impl Into<String>) -> Self {
        Error::Config {
            unit,
            msg: msg.into(),
        }
    }

    pub(crate) fn input(unit: &'static str, msg: impl Into<String>) -> Self {
        Error::Input {
            unit,
            msg: msg.into(),
        }
    }

    pub(crate) fn protocol(unit: &'static str, msg: impl Into<String>) -> Self {
        Error::Protocol {
            unit,
            msg: msg.into(),
        }
    }
}

/// Checks that `n` is a power of two no smaller than `min`.
pub(crate) fn check_pow2(unit: &'static str, n: usize, min: usize) -> Result<u32> {
    if n < min || !n.is_power_of_two() {
        return Err(Error::config(
            unit,
            format!("length {n} must be a power of two >= {min}"),
        ));
    }
    Ok(n.trailing_zeros())
}
