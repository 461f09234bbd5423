//! Speaker identification with vector-quantization codebooks of per-speaker size.
//!
//! The crate covers the full modelling chain: an LPC-cepstrum front end for
//! 8 kHz speech ([`dsp`]), LBG codebook training and quantization
//! ([`codebook`]), minimum-distortion identification and its distortion
//! statistics ([`identify`]), the model-size selection procedures
//! ([`size_select`]), and a deterministic synthetic-speaker generator used in
//! place of a real corpus ([`synth`]).
//!
//! Everything here is pure computation over in-memory data; file formats and
//! the command-line tool live in the companion `vqsid` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod codebook;
pub mod dsp;
pub mod identify;
pub mod size_select;
pub mod synth;

pub use codebook::{Codebook, CodebookFamily, LbgConfig, NormMode};
pub use dsp::{FeatureSequence, FeatureVector, FrontendConfig, Signal};
pub use identify::{DistortionStats, EvalReport, ModelBank, SizeAssignment};
pub use size_select::{GreedyTrace, SweepResult};
