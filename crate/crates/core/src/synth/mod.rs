//! Synthetic bursts with a known background, for measuring recovery.

mod metrics;
mod procedural;
mod render;
mod script;

pub use metrics::{evaluate, evaluate_region, RecoveryMetrics};
pub use procedural::procedural_background;
pub use render::{coverage_counts, ever_covered, render_scene, visibility_counts};
pub use script::{BackgroundSource, Occluder, SceneScript, Shape, DEFAULT_SCENE};
