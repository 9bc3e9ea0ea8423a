//! Word-context matrices: co-occurrence counting, PPMI weighting, and the
//! vector operations used by selection and evaluation.

mod cooc;
mod embeddings;
mod ops;
mod ppmi;
mod sparse;

pub use cooc::{
    build_cooc, build_cooc_decay, build_cooc_window, CoocBuilder, CoocCounts, Weighting,
};
pub use embeddings::{load_embeddings, DenseEmbeddings};
pub(crate) use ops::finish_cosine;
pub use ops::{cosine, mask_columns, sparse_cosine, sparse_dot};
pub use ppmi::ppmi_transform;
pub(crate) use sparse::write_file;
pub use sparse::{fmt_sig9, parse_triplets, SparseMatrix};
