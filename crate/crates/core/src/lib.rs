//! Cycle-accurate model of an area-efficient radix-2 2D FFT processor.
//!
//! Two 1D blocks each own `n/2` butterfly units that are reused on every
//! stage; a ping-pong RAM pair sits between them so rows of one frame and
//! columns of the previous frame are processed concurrently. A closed-form
//! resource model and brute-force DFT oracles sit alongside the simulator.

pub mod butterfly;
pub mod error;
pub mod fft1d;
pub mod fft2d;
pub mod frame_io;
pub mod numeric;
pub mod oracle;
pub mod resources;
pub mod stimulus;

pub use error::{Error, Result};
pub use fft1d::{ControlState, Fft1dProcessor, SimConfig};
pub use fft2d::{run_2d, run_stream, Fft2dSystem, Frame2d, PingPongStore, StreamOutput};
pub use numeric::{FxComplex, FxFormat, Kernel, NumericMode, Sample};
