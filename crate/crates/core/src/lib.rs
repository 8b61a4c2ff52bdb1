//! Vehicle pose refinement from ceiling-facing camera images.
//!
//! A coarse place-recognition match picks a reference image with a known
//! pose. Sample points chosen on that reference (from a learned quality heat
//! map, or a regular grid) are matched into the query by SAD template search,
//! a robust planar homography is fitted to the resulting flow vectors, and
//! the homography is decomposed into an in-plane motion that refines the
//! reference pose.

pub mod error;
pub mod geometry;
pub mod heatmap;
pub mod homest;
pub mod image;
pub mod labeler;
pub mod matcher;
pub mod refdb;
pub mod pipeline;
pub mod sampler;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::Pose2;
pub use heatmap::HeatMap;
pub use image::GrayImage;
