//! Planar similarity IFSs: maps, cylinder words, attractor covers, the
//! Hausdorff metric, similarity dimension and separation checks.

pub mod affine;
pub mod cover;
pub mod dimension;
pub mod hausdorff;
pub mod presets;
pub mod separation;
pub mod similarity;
pub mod system;
pub mod word;

pub use affine::{AffineMap2, IAffine, Rect};
pub use cover::{
    anchors, anchors_under, attractor_cover, attractor_cover_with_cap, bounding_ball, cylinder_boxes,
    depth_for_resolution, exact_anchors_under, exact_point, walk_words, Anchor, BoxCover, CoverBox, DEFAULT_BOX_CAP,
};
pub use dimension::{moran_root, similarity_dimension};
pub use hausdorff::{directed_distance, hausdorff_distance, RectIndex};
pub use separation::{check_ssc, cylinders_within, neighbor_count, stopping_family, SscVerdict};
pub use similarity::{Orthogonal, Rotation, Similarity2};
pub use system::Ifs;
pub use word::CylinderWord;
