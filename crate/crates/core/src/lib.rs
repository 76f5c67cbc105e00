//! Search-driven acquisition of research documents.
//!
//! Two acquisition paths feed one document store:
//!
//! * **Path 1** issues each known paper title as a quoted `filetype:pdf`
//!   query and fetches the top results.
//! * **Path 2** issues each author name as a quoted query, ranks the results
//!   with a pairwise-trained linear model to pick the author's homepage, and
//!   crawls that homepage breadth-first to depth 2 for PDFs.
//!
//! Every harvested PDF is converted into a page/line text model, described by
//! structural features, and labeled paper/non-paper by a random forest before
//! it is counted in the per-path yield manifest.

pub mod clock;
pub mod crawler;
pub mod doc;
pub mod error;
pub mod features;
pub mod fixtures;
pub mod forest;
pub mod ltr;
pub mod pipeline;
pub mod search;
pub mod store;
pub mod text;
pub mod urlutil;

pub use error::{Error, Result};
