//! Executable versions of the black-face and tunneling-tube constructions.

mod face;
mod tube;

pub use face::{
    black_at, estimate_black_probability, is_black, lattice_distance, lattice_infimum, random_face_point,
    slab_passage_time, slab_window, BlackEstimate, FaceSpec,
};
pub use tube::{build_tunneling_tube, embed_tube, is_tunneling, tube_section, TubePoints, TubeSpec};
