//! Background recovery from a short burst of aligned frames: seed pixels
//! that never change, grow per-frame background masks over superpixels,
//! compose a background by per-channel mean shift, then remove ghosting
//! near edges.

pub mod bgmodel;
pub mod canny;
pub mod color;
pub mod config;
pub mod deghost;
pub mod dump;
pub mod error;
pub mod image;
pub mod io;
pub mod meanshift;
pub mod pipeline;
pub mod seeding;
pub mod slic;
pub mod synth;

pub use bgmodel::{compose_background, CandidateState, RuleThresholds};
pub use config::PipelineConfig;
pub use deghost::{deghost, ArtifactCandidateSet, DeghostParams, DeghostTrace};
pub use dump::DebugDumper;
pub use error::{Error, Result};
pub use image::{BinaryMask, ImageStack, RasterImage, Rgb};
pub use io::{load_image, load_image_with, save_image, LoadOptions};
pub use meanshift::{mean_shift_mode, MeanShiftParams};
pub use pipeline::{recover_background, recover_background_observed, NoObserver, Observer, PipelineReport, Recovery};
pub use seeding::{compute_change_image, compute_seeds, ChangeImage};
pub use slic::{segment, SlicAlgorithm, SlicParams, SuperpixelLabeling};
