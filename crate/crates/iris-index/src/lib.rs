//! Iris indexing by intrinsic dimension.
//!
//! The pipeline: unwrap eye images into 64x512 normalized irises with the
//! rubber-sheet model ([`normalize`]), slice and preprocess the 16x256 key
//! portion and average it per eye ([`keyextract`]), measure the intrinsic
//! dimension of the averaged key portions by correlation dimension
//! ([`intdim`]), map them into a low-dimensional intrinsic code space with
//! PCA ([`embed`]), and evaluate identification search cost with the
//! penetration rate ([`index`]). [`synth`] generates datasets with known
//! ground truth, and [`io`] defines the checkpoint file formats the CLI
//! composes.

pub mod embed;
pub mod error;
pub mod index;
pub mod intdim;
pub mod io;
pub mod keyextract;
pub mod model;
pub mod normalize;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
