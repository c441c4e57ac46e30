//! Symmetry-matching decoder for the LHZ parity code, with Monte-Carlo
//! benchmarks under code-capacity and phenomenological noise.
//!
//! Decoding runs in two steps: defects are paired along the code's
//! symmetries (`graph_builders`), the resulting cycles are turned into a
//! correction by taking the qubits they enclose (`clusters`), and an
//! optional 1-line pass (`postprocess`) removes heavy line overlaps.

pub mod clusters;
pub mod code;
pub mod error;
pub mod experiments;
pub mod gf2;
pub mod graph_builders;
pub mod matching;
pub mod noise_sim;
pub mod postprocess;
pub mod symmetry;
pub mod trace;

pub use code::{Code, QubitId, StabilizerId};
pub use error::{Error, Result};
pub use graph_builders::{DecoderMatching, Detector, LabeledPair, Strategy};
pub use noise_sim::{Model, NoiseConfig};
pub use symmetry::{Location, PlanarPoint, Site};
