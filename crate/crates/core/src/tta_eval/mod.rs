//! Evaluation protocol: single-image, test-time-augmentation and 144-crop
//! prediction averaging, ROC-AUC, early stopping and training subsets.

mod auc;
mod crops;
mod early_stop;
mod evaluate;
mod predictor;
mod subset;

pub use self::auc::{compute_auc, roc_curve, RocPoint};
pub use self::crops::{crop_scales, crops_144, CROP_COUNT};
pub use self::early_stop::{early_stop_step, Decision, EarlyStopState, DEFAULT_PATIENCE};
pub use self::evaluate::{
    evaluate, predict_tta, EvalConfig, EvalMode, EvalReport, PredictionRow, REPORT_FILE,
    PREDICTIONS_FILE, TEST_TTA_COPIES, VALIDATION_TTA_COPIES,
};
pub use self::predictor::{FnPredictor, PredictionTable, Predictor, ProcessPredictor};
pub use self::subset::{sample_subset, REFERENCE_SUBSET_SIZES};
