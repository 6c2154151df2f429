//! Deterministic synthetic faces and `.pts` + PGM dataset I/O.

mod dataset;
mod generate;
mod pgm;
mod render;
mod template;

pub use dataset::{canonical_crop, load_pts_dataset, write_dataset, MANIFEST};
pub use generate::{
    generate_dataset, generate_sample, generate_shape, generate_with_poses, template_shape, GeneratorConfig, Pose,
};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use render::render_face;
pub use template::{expression_modes68, face_template68};
