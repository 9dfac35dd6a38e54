//! End-to-end runs: crawl, explore every form found, generate and run scripts, evaluate, and
//! build navigation scenarios. Everything lands in one self-describing run directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use formnav_core::bench::{generate_benchmark, InputPool, INDEX_VERSION};
use formnav_core::browser::ReactionManifest;
use formnav_core::dom::{extract_forms, parse_document, to_hex};
use formnav_core::eval::{compute_metrics, per_type_csv, render_report_markdown, MetricsReport, BUILTIN_RUBRIC};
use formnav_core::explore::{explore, STATE_GRAPH_VERSION};
use formnav_core::llm::LanguageModel;
use formnav_core::scenario::{generate_scenario, render_markdown, ScenarioError, NAV_ACTION_PROMPT, SCENARIO_VERSION};
use formnav_core::script::{plan_state_scripts, run_script, Dialect, Filler, FormRun, RunResults, RUN_RESULTS_VERSION, TEST_SCRIPT_VERSION};
use formnav_core::site::url::path_of;
use formnav_core::site::{crawl, TransitionGraph, GRAPH_SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::Backend;
use crate::config::{BackendChoice, PipelineConfig};
use crate::error::CliError;
use crate::io::{load_manifests, write_dataset, write_json, write_scripts, write_text, BENCH_ORIGIN};
use crate::llm::build_model;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub item: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Versions {
    pub formnav: String,
    pub transition_graph: u32,
    pub state_graph: u32,
    pub test_script: u32,
    pub run_results: u32,
    pub scenario: u32,
    pub dataset_index: u32,
    pub rubric: String,
    pub nav_prompt_sha256: String,
}

/// `manifest.json` of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub versions: Versions,
    pub config: PipelineConfig,
    pub forms: Vec<String>,
    pub scenarios: usize,
    pub errors: Vec<StageError>,
    pub findings: bool,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    pub report: MetricsReport,
    pub manifest: RunManifest,
}

fn versions() -> Versions {
    Versions {
        formnav: env!("CARGO_PKG_VERSION").into(),
        transition_graph: GRAPH_SCHEMA_VERSION,
        state_graph: STATE_GRAPH_VERSION,
        test_script: TEST_SCRIPT_VERSION,
        run_results: RUN_RESULTS_VERSION,
        scenario: SCENARIO_VERSION,
        dataset_index: INDEX_VERSION,
        rubric: serde_json::from_str::<serde_json::Value>(BUILTIN_RUBRIC).ok().and_then(|v| v["version"].as_str().map(String::from)).unwrap_or_default(),
        nav_prompt_sha256: to_hex(&Sha256::digest(NAV_ACTION_PROMPT.as_bytes())),
    }
}

/// File-system friendly key for the `index`-th of `count` forms on `url`. Benchmark pages
/// `/forms/0001.html` map to `0001`, matching their manifest file names.
pub fn form_key(url: &str, index: usize, count: usize) -> String {
    let path = path_of(url);
    let path = path.split('?').next().unwrap_or("");
    let stem = path.trim_matches('/').rsplit('/').next().unwrap_or("").trim_end_matches(".html").trim_end_matches(".htm");
    let mut key: String = stem.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' }).collect();
    if key.is_empty() {
        key = "index".into();
    }
    if count > 1 {
        key = format!("{}-{}", key, index + 1);
    }
    key
}

fn unique(key: String, taken: &mut BTreeMap<String, usize>) -> String {
    let n = taken.entry(key.clone()).or_insert(0);
    *n += 1;
    if *n == 1 {
        key
    } else {
        format!("{}-{}", key, n)
    }
}

/// Execute the configured pipeline, writing into `config.out_dir`.
pub fn pipeline_run(config: &PipelineConfig) -> Result<PipelineOutcome, CliError> {
    config.validate()?;
    let out = config.out_dir.clone();
    let mut errors = Vec::new();
    let mut model: Option<Box<dyn LanguageModel>> = config.llm.as_ref().map(build_model).transpose()?;

    let mut limits = config.crawl;
    let mut backend = match (&config.bench, config.backend) {
        (Some(bench), BackendChoice::Sim) => {
            // Index, every form and the submission page.
            limits.max_pages = limits.max_pages.max(bench.simple + bench.dynamic + 2);
            let dataset = generate_benchmark(bench.simple, bench.dynamic, bench.seed, &bench.config, &InputPool::builtin())
                .map_err(|e| CliError::Config(e.to_string()))?;
            write_dataset(&out.join("dataset"), &dataset)?;
            Backend::simulator(dataset.bundle(BENCH_ORIGIN))
        }
        _ => Backend::open(config.backend, config.site.as_deref(), &config.webdriver)?,
    };
    let dir_manifests = match &config.manifests {
        Some(dir) => load_manifests(dir)?,
        None => BTreeMap::new(),
    };

    let start = backend.resolve(config.start_url.as_deref().unwrap_or("/"));
    log::info!("crawling from {}", start);
    let report = crawl(&mut *backend.session, &start, limits).map_err(|e| CliError::Backend(e.to_string()))?;
    for failure in &report.failures {
        errors.push(StageError { stage: "crawl".into(), item: failure.url.clone(), message: failure.error.clone() });
    }
    let graph = report.graph;
    write_text(&out.join("graph.json"), &graph.to_json())?;

    let extra_dialects: &[Dialect] = if config.render_webdriver_text { &[Dialect::WebdriverText] } else { &[] };
    let mut results = RunResults::new(config.backend.as_str());
    let mut manifests: BTreeMap<String, ReactionManifest> = BTreeMap::new();
    let mut taken = BTreeMap::new();
    let mut keys = Vec::new();
    let mut pages: Vec<_> = graph.nodes.iter().filter(|n| n.has_forms && n.expanded).collect();
    pages.sort_by_key(|n| n.id);
    for node in pages {
        let forms = match backend.session.navigate(&node.url).and_then(|_| backend.session.page_source()) {
            Ok(src) => extract_forms(&parse_document(&src)),
            Err(e) => {
                errors.push(StageError { stage: "explore".into(), item: node.url.clone(), message: e.to_string() });
                continue;
            }
        };
        for (k, form) in forms.iter().enumerate() {
            let key = unique(form_key(&node.url, k, forms.len()), &mut taken);
            let page_manifest = backend
                .bundle
                .as_ref()
                .and_then(|b| b.manifests.get(&node.url))
                .and_then(|ms| ms.iter().find(|m| m.form_ref() == form.root))
                .cloned();
            if let Some(m) = page_manifest.or_else(|| dir_manifests.get(&key).cloned()) {
                write_json(&out.join("manifests").join(format!("{}.json", key)), &m)?;
                manifests.insert(key.clone(), m);
            }
            let states = match explore(&mut *backend.session, &node.url, &form.root, config.explore) {
                Ok(g) => g,
                Err(e) => {
                    errors.push(StageError { stage: "explore".into(), item: key, message: e.to_string() });
                    continue;
                }
            };
            for violation in &states.diagnostics.restore_violations {
                errors.push(StageError { stage: "explore".into(), item: key.clone(), message: format!("restore violation: {}", violation) });
            }
            write_json(&out.join("states").join(format!("{}.json", key)), &states)?;
            let mut filler = Filler { mode: config.fill_mode, llm: model.as_mut().map(|m| &mut **m as &mut dyn LanguageModel), upload_path: config.upload_path.clone() };
            let scripts = plan_state_scripts(&states, None, &mut filler);
            write_scripts(&out.join("scripts"), &key, &scripts, extra_dialects)?;
            let runs = scripts.iter().map(|s| run_script(s, &mut *backend.session)).collect();
            results.forms.push(FormRun { form: key.clone(), page_url: states.page_url.clone(), runs });
            keys.push(key);
        }
    }
    write_json(&out.join("results.json"), &results)?;
    let metrics = compute_metrics(&results, &manifests, config.counting);
    write_evaluation(&out.join("report.json"), &metrics)?;

    let mut unreachable = false;
    for (i, request) in config.nav_requests.iter().enumerate() {
        let name = format!("{:03}", i + 1);
        match generate_scenario(&graph, request, model.as_mut().map(|m| &mut **m as &mut dyn LanguageModel), NAV_ACTION_PROMPT) {
            Ok(s) => {
                write_json(&out.join("scenarios").join(format!("{}.json", name)), &s)?;
                write_text(&out.join("scenarios").join(format!("{}.md", name)), &render_markdown(&s, &graph))?;
            }
            Err(e) => {
                unreachable |= matches!(e, ScenarioError::Unreachable { .. });
                errors.push(StageError { stage: "navigate".into(), item: name, message: e.to_string() });
            }
        }
    }
    backend.close();

    let failed = metrics.n_successes < metrics.n_interactions || results.forms.iter().flat_map(|f| &f.runs).any(|r| r.aborted.is_some());
    let manifest = RunManifest {
        versions: versions(),
        config: config.clone(),
        forms: keys,
        scenarios: config.nav_requests.len(),
        findings: failed || unreachable || !errors.is_empty(),
        errors,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(PipelineOutcome { out_dir: out, report: metrics, manifest })
}

/// Write `report.json` with its Markdown rendering and per-type CSV alongside.
pub fn write_evaluation(path: &Path, report: &MetricsReport) -> Result<(), CliError> {
    write_json(path, report)?;
    write_text(&path.with_extension("md"), &render_report_markdown(report))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    write_text(&path.with_file_name(format!("{}-per-type.csv", stem)), &per_type_csv(report))
}

/// Load a graph written by the pipeline or by `crawl`.
pub fn read_graph(path: &Path) -> Result<TransitionGraph, CliError> {
    let text = crate::io::read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::input(path, e.to_string()))?;
    crate::schema::validate(crate::schema::SchemaKind::TransitionGraph, &value)
        .map_err(|e| CliError::input(path, format!("does not match the transition-graph schema: {}", e.join("; "))))?;
    TransitionGraph::from_json(&text).map_err(|e| CliError::input(path, e.to_string()))
}
