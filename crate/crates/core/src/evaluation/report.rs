use serde::Serialize;

use super::{GraspReport, KapandjiReport};
use crate::error::{Error, Result};

/// Version of the report document layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluationReport {
    Grasp(GraspReport),
    Kapandji(KapandjiReport),
}

#[derive(Serialize)]
struct Document<'a> {
    schema_version: u32,
    reports: &'a [EvaluationReport],
}

/// Pretty-printed JSON document holding `reports` in the given order. The
/// output depends only on the input, byte for byte.
pub fn emit_evaluation_report(reports: &[EvaluationReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Empty("report list"));
    }
    let mut text = serde_json::to_string_pretty(&Document { schema_version: REPORT_SCHEMA_VERSION, reports })?;
    text.push('\n');
    Ok(text)
}
