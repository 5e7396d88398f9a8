//! Software model of a pipelined radix-2 decimation-in-time FFT/IFFT
//! processor with per-stage quantization, and a statistical harness for
//! measuring the resulting quantization error.
//!
//! The crate is organized bottom-up:
//!
//! * [`complex`] holds the sample and block types shared by everything else.
//! * [`fft`] has the transform mathematics: twiddle factors, the butterfly,
//!   bit reversal, the direct DFT reference and the recursive radix-p split.
//! * [`quantizer`] implements the uniform (fixed-point) and mantissa
//!   (floating-point) quantizer models with their closed-form noise variances.
//! * [`pipeline`] wires butterflies, twiddle tables and quantize units into a
//!   `log2(N)`-stage processor.
//! * [`analysis`] measures error dispersion, percent error and SQNR, and runs
//!   the bit-resolution and transform-size sweeps.
//! * [`cli`] parses experiment configurations and renders CSV tables.

pub mod analysis;
pub mod cli;
pub mod complex;
pub mod error;
pub mod fft;
pub mod pipeline;
pub mod quantizer;

pub use complex::{ComplexSample, SignalBlock};
pub use error::{Error, Result};
