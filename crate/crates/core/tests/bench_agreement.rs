use std::sync::Arc;

use formnav_core::bench::{generate_benchmark, BenchConfig, Dataset, InputPool};
use formnav_core::browser::SimulatorSession;
use formnav_core::dom::{extract_forms, parse_document, ControlType, ElementRef};
use formnav_core::explore::{explore, ExploreLimits};
use formnav_core::script::{plan_state_scripts, run_script, Filler, Outcome};

fn dataset() -> Dataset {
    generate_benchmark(50, 50, 2024, &BenchConfig::default(), &InputPool::builtin()).unwrap()
}

#[test]
fn extraction_matches_ground_truth() {
    let data = dataset();
    for (entry, form) in data.index.forms.iter().zip(&data.forms) {
        let doc = parse_document(&form.html);
        assert!(form.manifest.missing_ids(&doc).is_empty(), "{}", entry.id);
        let model = &extract_forms(&doc)[0];
        let truth = &form.manifest.ground_truth.fields;
        assert_eq!(model.fields.len(), truth.len(), "{}", entry.id);
        for (got, want) in model.fields.iter().zip(truth) {
            assert_eq!(got.locator, ElementRef::id(want.id.clone()), "{}", entry.id);
            assert_eq!((got.control, &got.name, got.required), (want.control, &want.name, want.required), "{} {}", entry.id, want.id);
            assert_eq!(got.options, want.options);
            assert_eq!(got.constraints, want.constraints);
            assert_eq!(got.label, want.label);
            let initially = want.region.as_deref().is_none_or(|r| r == "sub-0") && want.control != ControlType::Hidden;
            assert_eq!(got.visible, initially, "{} {}", entry.id, want.id);
        }
    }
}

#[test]
fn explorer_and_runner_agree_with_manifests() {
    let data = dataset();
    let bundle = Arc::new(data.bundle("http://bench.test"));
    let mut session = SimulatorSession::new(bundle);
    let (mut ok, mut total) = (0, 0);
    for (entry, form) in data.index.forms.iter().zip(&data.forms) {
        let url = format!("http://bench.test/{}", entry.html);
        let graph = explore(&mut session, &url, &form.manifest.form_ref(), ExploreLimits::default()).unwrap();
        assert_eq!(graph.states.len(), entry.state_count, "{}", entry.id);
        assert!(graph.diagnostics.restore_violations.is_empty());
        for script in plan_state_scripts(&graph, None, &mut Filler::default()) {
            let run = run_script(&script, &mut session);
            for r in &run.records {
                if r.control == ControlType::File {
                    continue;
                }
                total += 1;
                if r.outcome == Outcome::Success {
                    ok += 1;
                } else {
                    panic!("{} {:?}", entry.id, r);
                }
            }
        }
    }
    assert_eq!(ok, total);
}
