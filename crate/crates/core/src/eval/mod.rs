//! Metrics over run results and rubric scoring of navigation scenarios.

mod judge;
mod metrics;

pub use judge::{
    judge_messages, judge_scenario, offline_score, parse_judge_response, scenario_text, Criterion, CriterionScores, JudgeError,
    JudgeRecord, JudgeScore, Rubric, Scale, BUILTIN_RUBRIC, CRITERIA,
};
pub use metrics::{
    compute_metrics, effective_outcome, per_type_csv, render_report_markdown, resolve_field, CountingMode, FormCoverage, MetricsReport,
    MetricsRow, RowError, TypeCounts,
};
