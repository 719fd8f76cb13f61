//! Training, decision- and feature-level fusion, cross-validation and
//! persistence of the complete system.

mod config;
mod eval;
mod system;

pub use config::{FusionConfig, Mode, Task};
pub use eval::{
    accuracy_of, assign_folds, confusion_matrix, crossvalidate, crossvalidate_windows, default_candidates,
    permute_labels, Candidate, CandidateScore, EvalReport,
};
pub use system::{
    extract_dataset, load_system, save_system, train_on_windows, train_system, vote, Channel, ChannelBank,
    ExtractedWindow, Extraction, FusedStage, RejectedWindow, TrainedSystem, WindowFeatures, FORMAT_VERSION,
    VOTE_ORDER,
};
