//! Pass accuracy, coverage and per-type breakdown over run results.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::browser::{GroundTruthField, ReactionManifest};
use crate::dom::{ControlType, ElementRef, Strategy};
use crate::script::{FailReason, InteractionRecord, Outcome, RunResults};

/// Which ground-truth fields enter the denominators. Excluded fields are dropped from
/// accuracy as well as coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountingMode {
    pub include_hidden: bool,
    pub include_file: bool,
}

impl Default for CountingMode {
    fn default() -> Self {
        CountingMode { include_hidden: false, include_file: true }
    }
}

impl CountingMode {
    fn counts(&self, control: ControlType) -> bool {
        match control {
            ControlType::Hidden => self.include_hidden,
            ControlType::File => self.include_file,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub success: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormCoverage {
    pub touched: usize,
    pub total: usize,
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `None` when there are no counted interactions.
    pub micro_accuracy: Option<f64>,
    pub macro_accuracy: Option<f64>,
    /// Pooled over every form that has a manifest.
    pub coverage: Option<f64>,
    pub per_type: BTreeMap<ControlType, TypeCounts>,
    pub n_test_cases: usize,
    pub n_interactions: usize,
    pub n_successes: usize,
    /// Records whose ref matched no ground-truth field; counted as `not_found` failures.
    pub unknown_refs: usize,
    pub forms: BTreeMap<String, FormCoverage>,
    /// Forms evaluated without a manifest: outcomes as recorded, no coverage.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub without_ground_truth: Vec<String>,
    pub counting: CountingMode,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// The ground-truth field a locator designates, by id (radio members included) or name.
pub fn resolve_field<'a>(manifest: &'a ReactionManifest, locator: &ElementRef) -> Option<&'a GroundTruthField> {
    let fields = &manifest.ground_truth.fields;
    let by_id = |id: &str| fields.iter().find(|f| f.id == id || f.member_ids.iter().any(|m| m == id));
    match locator.strategy {
        Strategy::Id => by_id(&locator.value),
        Strategy::Name => fields.iter().find(|f| f.name == locator.value),
        Strategy::Css => {
            let v = locator.value.as_str();
            if let Some(id) = v.strip_prefix('#').filter(|id| id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')) {
                return by_id(id);
            }
            let name = v.strip_prefix("[name=\"").and_then(|r| r.strip_suffix("\"]"))?;
            fields.iter().find(|f| f.name == name)
        }
        Strategy::Xpath => None,
    }
}

/// A record after ground-truth lookup.
struct Scored {
    success: bool,
    control: ControlType,
    field: Option<usize>,
    attempted: bool,
}

fn score(record: &InteractionRecord, manifest: Option<&ReactionManifest>, mode: &CountingMode) -> Option<Scored> {
    let Some(manifest) = manifest else {
        return mode.counts(record.control).then(|| Scored {
            success: record.outcome.is_success(),
            control: record.control,
            field: None,
            attempted: record.attempted,
        });
    };
    match resolve_field(manifest, &record.locator) {
        Some(field) => {
            let index = manifest.ground_truth.fields.iter().position(|f| core::ptr::eq(f, field));
            mode.counts(field.control).then(|| Scored {
                success: record.outcome.is_success(),
                control: field.control,
                field: index,
                attempted: record.attempted,
            })
        }
        None => Some(Scored { success: false, control: record.control, field: None, attempted: record.attempted }),
    }
}

/// Micro accuracy pools every interaction; macro averages per-script accuracy over scripts with
/// at least one counted interaction; coverage is the union of touched fields per form over the
/// counted ground-truth fields.
pub fn compute_metrics(results: &RunResults, manifests: &BTreeMap<String, ReactionManifest>, mode: CountingMode) -> MetricsReport {
    let mut report = MetricsReport {
        micro_accuracy: None,
        macro_accuracy: None,
        coverage: None,
        per_type: BTreeMap::new(),
        n_test_cases: 0,
        n_interactions: 0,
        n_successes: 0,
        unknown_refs: 0,
        forms: BTreeMap::new(),
        without_ground_truth: Vec::new(),
        counting: mode,
    };
    let mut case_accuracies = Vec::new();
    let (mut touched_total, mut field_total) = (0, 0);
    for form in &results.forms {
        let manifest = manifests.get(&form.form);
        if manifest.is_none() {
            report.without_ground_truth.push(form.form.clone());
        }
        let mut touched = BTreeSet::new();
        for run in &form.runs {
            report.n_test_cases += 1;
            let (mut ok, mut n) = (0, 0);
            for record in &run.records {
                let Some(s) = score(record, manifest, &mode) else { continue };
                if manifest.is_some() && s.field.is_none() {
                    report.unknown_refs += 1;
                }
                if let (Some(i), true) = (s.field, s.attempted) {
                    touched.insert(i);
                }
                n += 1;
                let bucket = report.per_type.entry(s.control).or_default();
                if s.success {
                    ok += 1;
                    bucket.success += 1;
                } else {
                    bucket.fail += 1;
                }
            }
            report.n_interactions += n;
            report.n_successes += ok;
            if let Some(a) = ratio(ok, n) {
                case_accuracies.push(a);
            }
        }
        if let Some(manifest) = manifest {
            let total = manifest.ground_truth.fields.iter().filter(|f| mode.counts(f.control)).count();
            touched_total += touched.len();
            field_total += total;
            let coverage = ratio(touched.len(), total);
            report.forms.insert(form.form.clone(), FormCoverage { touched: touched.len(), total, coverage });
        }
    }
    report.micro_accuracy = ratio(report.n_successes, report.n_interactions);
    report.macro_accuracy = (!case_accuracies.is_empty()).then(|| case_accuracies.iter().sum::<f64>() / case_accuracies.len() as f64);
    report.coverage = ratio(touched_total, field_total);
    report
}

/// Outcome a record contributes once ground truth is applied.
pub fn effective_outcome(record: &InteractionRecord, manifest: &ReactionManifest) -> Outcome {
    match resolve_field(manifest, &record.locator) {
        Some(_) => record.outcome,
        None => Outcome::Fail(FailReason::NotFound),
    }
}

/// Micro, macro and coverage as percentages with two decimals, e.g. `95.17 / 94.74 / 69.49%`.
/// Values are stored in hundredths of a percent so parsing and rendering round-trip exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub micro: u32,
    pub macro_: u32,
    pub coverage: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed metrics row {0:?}")]
pub struct RowError(pub String);

fn hundredths(fraction: f64) -> u32 {
    (fraction.clamp(0.0, 1.0) * 10_000.0 + 0.5) as u32
}

fn parse_percent(s: &str) -> Option<u32> {
    let s = s.trim().trim_end_matches('%').trim();
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if whole.is_empty() || frac.len() > 2 || !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let whole: u32 = whole.parse().ok()?;
    let frac: u32 = if frac.is_empty() { 0 } else { format!("{:0<2}", frac).parse().ok()? };
    let v = whole.checked_mul(100)?.checked_add(frac)?;
    (v <= 10_000).then_some(v)
}

impl MetricsRow {
    /// `None` unless all three metrics are defined.
    pub fn from_report(report: &MetricsReport) -> Option<MetricsRow> {
        Some(MetricsRow {
            micro: hundredths(report.micro_accuracy?),
            macro_: hundredths(report.macro_accuracy?),
            coverage: hundredths(report.coverage?),
        })
    }

    pub fn parse(s: &str) -> Result<MetricsRow, RowError> {
        let parts: Vec<&str> = s.split('/').collect();
        let err = || RowError(String::from(s));
        let [a, b, c] = parts.as_slice() else { return Err(err()) };
        Ok(MetricsRow {
            micro: parse_percent(a).ok_or_else(err)?,
            macro_: parse_percent(b).ok_or_else(err)?,
            coverage: parse_percent(c).ok_or_else(err)?,
        })
    }

    pub fn render(&self) -> String {
        let p = |v: u32| format!("{}.{:02}", v / 100, v % 100);
        format!("{} / {} / {}%", p(self.micro), p(self.macro_), p(self.coverage))
    }
}

fn opt_percent(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => String::from("n/a"),
    }
}

/// Per-type counts as CSV with a header row.
pub fn per_type_csv(report: &MetricsReport) -> String {
    let mut out = String::from("control,success,fail\n");
    for (control, counts) in &report.per_type {
        out.push_str(&format!("{},{},{}\n", control.as_str(), counts.success, counts.fail));
    }
    out
}

pub fn render_report_markdown(report: &MetricsReport) -> String {
    let mut out = String::from("# Form test report\n\n");
    out.push_str("| Metric | Value |\n|---|---|\n");
    out.push_str(&format!("| Micro accuracy | {} |\n", opt_percent(report.micro_accuracy)));
    out.push_str(&format!("| Macro accuracy | {} |\n", opt_percent(report.macro_accuracy)));
    out.push_str(&format!("| Coverage | {} |\n", opt_percent(report.coverage)));
    out.push_str(&format!("| Test cases | {} |\n| Interactions | {} |\n", report.n_test_cases, report.n_interactions));
    if report.unknown_refs > 0 {
        out.push_str(&format!("| Unknown refs | {} |\n", report.unknown_refs));
    }
    if let Some(row) = MetricsRow::from_report(report) {
        out.push_str(&format!("\nSummary row: `{}`\n", row.render()));
    }
    out.push_str("\n## By field type\n\n| Control | Success | Fail |\n|---|---|---|\n");
    for (control, c) in &report.per_type {
        out.push_str(&format!("| {} | {} | {} |\n", control.as_str(), c.success, c.fail));
    }
    out.push_str(&format!(
        "\nCounting: hidden fields {}, file fields {}.\n",
        if report.counting.include_hidden { "included" } else { "excluded" },
        if report.counting.include_file { "included" } else { "excluded" }
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::browser::GroundTruth;
    use crate::dom::{Constraints, Required};
    use crate::script::{FormRun, ScriptRun};
    use alloc::string::ToString;
    use alloc::vec;

    pub(crate) fn gt(id: &str, control: ControlType) -> GroundTruthField {
        GroundTruthField {
            id: id.into(),
            name: id.into(),
            control,
            required: Required::No,
            region: None,
            options: vec![],
            constraints: Constraints::default(),
            label: None,
            category: None,
            template_id: None,
            member_ids: vec![],
        }
    }

    pub(crate) fn manifest(fields: Vec<GroundTruthField>) -> ReactionManifest {
        ReactionManifest {
            version: 1,
            form_id: "f".into(),
            rules: vec![],
            initial_visible: vec![],
            regions: vec![],
            buttons: vec![],
            ground_truth: GroundTruth { fields, state_count: 1 },
        }
    }

    pub(crate) fn rec(id: &str, ok: bool) -> InteractionRecord {
        InteractionRecord {
            command_index: 0,
            locator: ElementRef::id(id),
            control: ControlType::Text,
            outcome: if ok { Outcome::Success } else { Outcome::Fail(FailReason::ValueRejected) },
            detail: None,
            attempted: true,
        }
    }

    pub(crate) fn results(form: &str, cases: Vec<Vec<InteractionRecord>>) -> RunResults {
        let runs = cases
            .into_iter()
            .enumerate()
            .map(|(i, records)| ScriptRun { script_id: format!("state-{}", i), target_state: i, records, assertions: vec![], aborted: None })
            .collect();
        RunResults { version: 1, backend: "sim".into(), forms: vec![FormRun { form: form.into(), page_url: String::new(), runs }] }
    }

    fn four_fields() -> BTreeMap<String, ReactionManifest> {
        let fields = ["a", "b", "c", "d"].iter().map(|id| gt(id, ControlType::Text)).collect();
        BTreeMap::from([("f".to_string(), manifest(fields))])
    }

    #[test]
    fn micro_and_macro_fixture() {
        let cases = vec![
            vec![rec("a", true), rec("b", true), rec("c", true), rec("d", false)],
            vec![rec("a", true), rec("b", false)],
        ];
        let r = compute_metrics(&results("f", cases), &four_fields(), CountingMode::default());
        assert_eq!(r.micro_accuracy, Some(4.0 / 6.0));
        assert_eq!(r.macro_accuracy, Some(0.625));
        assert_eq!(r.coverage, Some(1.0));
        assert_eq!((r.n_test_cases, r.n_interactions), (2, 6));
        assert_eq!(r.per_type[&ControlType::Text], TypeCounts { success: 4, fail: 2 });
    }

    #[test]
    fn all_success_is_one() {
        let cases = vec![vec![rec("a", true), rec("b", true)], vec![rec("c", true), rec("d", true)]];
        let r = compute_metrics(&results("f", cases), &four_fields(), CountingMode::default());
        assert_eq!((r.micro_accuracy, r.macro_accuracy, r.coverage), (Some(1.0), Some(1.0), Some(1.0)));
        assert!(r.per_type.values().all(|c| c.fail == 0));
    }

    #[test]
    fn empty_input_is_null() {
        let r = compute_metrics(&RunResults::new("sim"), &BTreeMap::new(), CountingMode::default());
        assert_eq!((r.micro_accuracy, r.macro_accuracy, r.coverage), (None, None, None));
        assert_eq!(r.n_interactions, 0);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"micro_accuracy\":null"));
    }

    #[test]
    fn unknown_refs_fail_and_hidden_is_excluded() {
        let mut fields: Vec<GroundTruthField> = vec![gt("a", ControlType::Text), gt("h", ControlType::Hidden)];
        fields[0].member_ids = vec!["a-0".into(), "a-1".into()];
        let manifests = BTreeMap::from([("f".to_string(), manifest(fields))]);
        let cases = vec![vec![rec("a-1", true), rec("zzz", true), rec("h", true)]];
        let r = compute_metrics(&results("f", cases.clone()), &manifests, CountingMode::default());
        assert_eq!((r.n_interactions, r.n_successes, r.unknown_refs), (2, 1, 1));
        assert_eq!(r.coverage, Some(1.0));
        let all = CountingMode { include_hidden: true, include_file: true };
        let r = compute_metrics(&results("f", cases), &manifests, all);
        assert_eq!((r.n_interactions, r.forms["f"].total), (3, 2));
        assert_eq!(effective_outcome(&rec("zzz", true), &manifests["f"]), Outcome::Fail(FailReason::NotFound));
    }

    #[test]
    fn coverage_is_a_union_and_skips_unattempted() {
        let mut late = rec("c", false);
        late.attempted = false;
        let cases = vec![vec![rec("a", true), rec("b", true)], vec![rec("a", true), late]];
        let r = compute_metrics(&results("f", cases), &four_fields(), CountingMode::default());
        assert_eq!(r.forms["f"].touched, 2);
        assert_eq!(r.coverage, Some(0.5));
    }

    #[test]
    fn forms_without_manifest_keep_recorded_outcomes() {
        let r = compute_metrics(&results("other", vec![vec![rec("x", true)]]), &four_fields(), CountingMode::default());
        assert_eq!(r.micro_accuracy, Some(1.0));
        assert_eq!(r.coverage, None);
        assert_eq!(r.without_ground_truth, ["other"]);
    }

    #[test]
    fn row_round_trips() {
        let row = MetricsRow::parse("95.17 / 94.74 / 69.49%").unwrap();
        assert_eq!(row, MetricsRow { micro: 9517, macro_: 9474, coverage: 6949 });
        assert_eq!(row.render(), "95.17 / 94.74 / 69.49%");
        assert_eq!(MetricsRow::parse("100 / 5.5 / 0%").unwrap().render(), "100.00 / 5.50 / 0.00%");
        for bad in ["95.17 / 94.74", "a / b / c", "101 / 1 / 1%", "1.234 / 1 / 1"] {
            assert!(MetricsRow::parse(bad).is_err(), "{}", bad);
        }
    }

    #[test]
    fn csv_and_markdown() {
        let cases = vec![vec![rec("a", true), rec("b", false)]];
        let r = compute_metrics(&results("f", cases), &four_fields(), CountingMode::default());
        assert_eq!(per_type_csv(&r), "control,success,fail\ntext,1,1\n");
        let md = render_report_markdown(&r);
        assert!(md.contains("| Micro accuracy | 50.00% |"));
        assert!(md.contains("`50.00 / 50.00 / 50.00%`"));
    }
}
