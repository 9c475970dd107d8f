//! Slices, projections as graph-directed systems, weak separation evidence,
//! approximate vertical slices, blowups and gallery dimension.

pub mod approx;
pub mod gallery;
pub mod gdifs;
pub mod line;
pub mod wsc;

pub use approx::{approx_slice_sequence, approx_slices, blowup_miniset, miniset_of_ifs, ApproxSlice, ApproxSlices, Miniset, PSequence};
pub use gallery::{
    gallery_delta, miniset_gallery, vertical_slice_gallery, Gallery, GalleryDelta, GalleryGenerator, MIN_GALLERY_SAMPLES,
};
pub use gdifs::{gdifs_dimension, project_gdifs, GdDimension, GdEdge, Gdifs};
pub use line::{slice_cover, sn_number, AffineLine, SliceCover, SLICE_NODE_CAP};
pub use wsc::{line_maps, psi_xr_count, wsc_test, Map1, WscReport, WscVerdict, WSC_MAP_CAP, WSC_PAIR_CAP};

/// Least-squares slope of `y` on `x`.
pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
