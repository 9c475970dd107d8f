//! Affine embeddings `g(F) ⊆ E`: certified containment, restrict–map–rescale,
//! iterate-and-rescale sequences, the structure equation and parameter search.

pub mod rescale;
pub mod search;
pub mod structure;
pub mod tree;
pub mod verify;

pub use rescale::{
    iterate_rescale_sequence, restrict_map_rescale, singular, LimitClass, LocateMethod, RescaleResult,
    RescaleSequenceReport, RescaleTerm,
};
pub use search::{bb_search, snap_center, ParamBox, SearchHit, SearchMode, SearchOptions, SearchReport};
pub use structure::{structure_find, StructureSolution};
pub use tree::TargetTree;
pub use verify::{
    numeric_cover_check, refutation_witness, symbolic_certificate, verify_containment, verify_with,
    EmbeddingVerdict, SymbolicCertificate, Transition, VerdictStatus, VerifyMode, VerifyOptions, Witness,
};
