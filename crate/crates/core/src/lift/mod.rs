//! Level-2 rough paths: lifts, translations, dilations and Hölder norms.

mod construct;
pub mod holder;
mod rough_path;

pub use construct::{lift_cm, lift_mixed, lift_piecewise_linear, translate, translate_by_path};
pub use holder::{holder_norms, holder_norms_with, path_holder, rough_distance, rough_distance_with, HolderMethod, HolderReport};
pub use rough_path::{chen_push, dilate, FineData, Level2RoughPath};
