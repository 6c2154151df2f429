//! Shapes and the image-space operations around them.

mod image;
pub mod markup;
mod nme;
mod patch;
mod procrustes;
mod pts;
mod shape;
mod transform;

pub use image::{GrayImage, ImagePyramid, Plane};
pub use nme::{nme, NormPair};
pub use patch::{crop_patch_into, crop_patches, patch_origin, PatchSet};
pub use procrustes::{mean_shape, procrustes_align, Alignment};
pub use pts::{parse_pts, read_pts, write_pts};
pub use shape::{shape_update, Point, Shape};
pub use transform::SimilarityTransform;
