//! Dexterity evaluations: grasp-taxonomy validation and the Kapandji thumb
//! opposition test.

mod grasp;
mod kapandji;
mod report;

pub use grasp::{
    validate_grasp_library, GraspLibrary, GraspPose, GraspReport, GraspVerdict, LimitViolation, DEFAULT_GRASPS_JSON,
    GRASP_LIBRARY_VERSION, TAXONOMY_SIZE,
};
pub use kapandji::{
    anchor_position, evaluate_target, run_kapandji, thumb_seed_grid, Anchor, KapandjiFile, KapandjiOptions,
    KapandjiPosition, KapandjiReport, KapandjiTarget, DEFAULT_KAPANDJI_JSON, DEFAULT_TOLERANCE, KAPANDJI_FILE_VERSION,
    KAPANDJI_POSITIONS,
};
pub use report::{emit_evaluation_report, EvaluationReport, REPORT_SCHEMA_VERSION};
