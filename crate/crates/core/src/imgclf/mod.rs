//! Trainable 15-way image topic classifier with a confidence gate and
//! activation-map localization for human error triage.

pub mod cam;
mod model;
mod net;
mod train;

pub use cam::{cam, export_cam_gallery, normalize_map, overlay, raw_cam, GalleryRow, Heatmap};
pub use model::{to_input, Architecture, HeadObjective, ImageModel};
pub use net::{NetParams, Tensor};
pub use train::{
    evaluate, stratified_split, train_image_classifier, EpochStats, TrainConfig, TrainOutcome,
};
