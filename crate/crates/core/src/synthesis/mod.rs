//! Novel-view to canonical-view synthesis: depth-based warping, memory hole
//! filling, inpainting and the feature descriptor the policy consumes.

mod features;
mod frames;
mod inpaint;
mod memory;
mod pipeline;
mod providers;
mod warp;

pub use features::{extract_features, extract_features_with, raw_features, FeatureConfig, FeatureVector};
pub use frames::{interpolation_frames, interpolation_frames_with, interpolation_params, InterpolationSequence};
pub use inpaint::{inpaint, inpaint_with, InpaintMethod, NEUTRAL_COLOR};
pub use memory::{memory_fill, memory_fill_with, projected_box, MemoryBuffer, PixelBox, RecencyVeto};
pub use pipeline::{synthesize, PipelineConfig, Synthesis};
pub use providers::{DepthProvider, DepthSource, Observation, PoseProvider, PoseSource, ProviderConfig, ProviderKind};
pub use warp::{warp_to_canonical, warp_to_canonical_with};
