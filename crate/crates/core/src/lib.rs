//! Zero-shot perceptual quality assessment of textured 3D digital humans.
//!
//! The Digital Human Quality Index sums three sigmoid-aligned measures:
//! semantic affinity of six axis projections to antonym quality prompts,
//! spatial naturalness of those projections (NIQE), and geometry loss from
//! the mean dihedral angle of the mesh. The crate also generates the seven
//! distortion families used to build labelled corpora and reproduces the
//! grouped k-fold evaluation protocol.

pub mod distort;
pub mod error;
pub mod eval;
pub mod mesh;
pub mod niqe;
pub mod provenance;
pub mod quality;
pub mod raster;
pub mod render;
pub mod semantic;
pub mod synth;

pub use error::{Component, Error, Result};
