//! Dataset ingestion and multi-domain corpus construction.

mod cache;
mod corpus;
mod feature_table;
mod idx;
mod image;

pub use cache::{load_corpus, save_corpus, CorpusCache};
pub(crate) use cache::parse_key_values;
pub use corpus::{
    assemble_training_matrices, build_view_corpus, mnist_r_transforms, mnist_s_transforms,
    rand_sel, select_base_subset, DomainView, MultiDomainCorpus, TrainingMatrices, TransformKind,
    ViewTransform,
};
pub use feature_table::{load_feature_table, parse_feature_table, write_feature_table};
pub use idx::{
    decode_images, decode_labels, encode_images, encode_labels, load_idx_images, load_idx_labels,
    IMAGE_MAGIC, LABEL_MAGIC,
};
pub use image::{dilate_image, resize_bilinear, rotate_image, Image};
pub(crate) use image::square_side;
