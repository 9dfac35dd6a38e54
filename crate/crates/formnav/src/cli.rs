//! Command line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use formnav_core::bench::{generate_benchmark, synthetic_site, InputPool};
use formnav_core::dom::{ElementRef, Strategy};
use formnav_core::eval::{compute_metrics, judge_scenario, offline_score, JudgeRecord, Rubric};
use formnav_core::explore::{explore, StateGraph};
use formnav_core::llm::LanguageModel;
use formnav_core::scenario::{generate_scenario, render_markdown, Endpoint, NavigationScenario, ScenarioError, TestRequest, NAV_ACTION_PROMPT};
use formnav_core::script::{plan_state_scripts, run_script, Dialect, FillMode, Filler, FormRun, RunResults};
use formnav_core::site::crawl;

use crate::backend::Backend;
use crate::config::{load_config, BackendChoice, BenchSettings, PipelineConfig};
use crate::error::{CliError, EXIT_FINDINGS, EXIT_OK, EXIT_USAGE};
use crate::io::{load_manifests, read_json, read_text, to_pretty_json, write_dataset, write_json, write_scripts, write_text};
use crate::llm::{build_model, LlmConfig};
use crate::pipeline::{pipeline_run, read_graph, write_evaluation};
use crate::schema::SchemaKind;

#[derive(Debug, Parser)]
#[command(name = "formnav", version, about = "Navigation and form test generation for web applications")]
pub struct Cli {
    /// More log output; repeat for more.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Pipeline configuration file supplying defaults for every verb.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Site served by the sim backend: bundle JSON, dataset directory or HTML directory.
    #[arg(long, value_name = "PATH")]
    pub site: Option<PathBuf>,
    /// Remote end for the webdriver backend.
    #[arg(long, value_name = "URL")]
    pub webdriver_url: Option<String>,
}

#[derive(Debug, Args)]
pub struct CountingArgs {
    /// Count hidden inputs in accuracy and coverage.
    #[arg(long)]
    pub include_hidden: bool,
    /// Leave file inputs out of accuracy and coverage.
    #[arg(long)]
    pub exclude_file: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crawl a site into a transition graph.
    Crawl {
        #[arg(long)]
        start: String,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        max_pages: Option<usize>,
        /// Stay on the start page's origin (default true).
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        same_origin: Option<bool>,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a navigation scenario between two pages of a graph.
    NavTest {
        #[arg(long)]
        graph: PathBuf,
        /// Node id or URL.
        #[arg(long)]
        start: String,
        /// Node id or URL.
        #[arg(long)]
        dest: String,
        /// Language model configuration; without it, built-in step templates are used.
        #[arg(long, value_name = "CONFIG")]
        llm: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Explore the display states of one form.
    FormExplore {
        #[arg(long)]
        url: String,
        /// CSS selector of the form.
        #[arg(long)]
        form: String,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate one test script per form state.
    FormTest {
        #[arg(long)]
        states: PathBuf,
        /// rules or llm.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_name = "CONFIG")]
        llm: Option<PathBuf>,
        /// Extra renderings besides native JSON: webdriver-text.
        #[arg(long)]
        dialect: Vec<String>,
        /// Subdirectory name for the scripts; defaults to one derived from the page URL, which
        /// matches benchmark manifest names.
        #[arg(long)]
        form_key: Option<String>,
        #[arg(long)]
        upload_path: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run test scripts and record every interaction.
    Run {
        #[arg(long)]
        scripts: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic form benchmark.
    BenchGen {
        #[arg(long)]
        simple: usize,
        #[arg(long)]
        dynamic: usize,
        #[arg(long)]
        seed: u64,
        /// Also write a linked multi-page site of this many pages as `site.json`.
        #[arg(long)]
        site_pages: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute accuracy and coverage metrics.
    Eval {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        manifests: PathBuf,
        #[command(flatten)]
        counting: CountingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a navigation scenario against the rubric.
    Judge {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_name = "CONFIG", conflicts_with = "offline", required_unless_present = "offline")]
        llm: Option<PathBuf>,
        /// Scores file instead of a model.
        #[arg(long, value_name = "FILE")]
        offline: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        rubric: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crawl, explore, generate, run and evaluate in one go.
    Pipeline {
        #[command(flatten)]
        backend: BackendArgs,
        /// Generate a benchmark with this many simple forms instead of reading a site.
        #[arg(long)]
        simple: Option<usize>,
        #[arg(long)]
        dynamic: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        include_hidden: bool,
        #[arg(long)]
        exclude_file: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Context {
    config: PipelineConfig,
}

impl Context {
    fn backend(&self, args: &BackendArgs) -> Result<Backend, CliError> {
        let mut webdriver = self.config.webdriver.clone();
        if let Some(url) = &args.webdriver_url {
            webdriver.endpoint = url.clone();
        }
        let choice = args.backend.unwrap_or(self.config.backend);
        let site = args.site.as_deref().or(self.config.site.as_deref());
        Backend::open(choice, site, &webdriver)
    }

    fn llm(&self, path: Option<&Path>) -> Result<Option<Box<dyn LanguageModel>>, CliError> {
        let config: Option<LlmConfig> = match path {
            Some(p) => Some(load_config(p)?),
            None => self.config.llm.clone(),
        };
        match config {
            Some(c) => {
                c.validate().map_err(CliError::Config)?;
                Ok(Some(build_model(&c)?))
            }
            None => Ok(None),
        }
    }
}

fn fill_mode(s: &str) -> Result<FillMode, CliError> {
    FillMode::parse(s).ok_or_else(|| CliError::Usage(format!("unknown fill mode {:?}; expected rules or llm", s)))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    let ctx = Context { config };
    match cli.command {
        Command::Crawl { start, max_depth, max_pages, same_origin, backend, out } => {
            let mut limits = ctx.config.crawl;
            limits.max_depth = max_depth.unwrap_or(limits.max_depth);
            limits.max_pages = max_pages.unwrap_or(limits.max_pages);
            limits.same_origin = same_origin.unwrap_or(limits.same_origin);
            let mut b = ctx.backend(&backend)?;
            let start = b.resolve(&start);
            let report = crawl(&mut *b.session, &start, limits).map_err(|e| CliError::Backend(e.to_string()))?;
            b.close();
            write_text(&out, &report.graph.to_json())?;
            for f in &report.failures {
                eprintln!("warning: {}: {}", f.url, f.error);
            }
            println!("{} pages, {} edges -> {}", report.graph.nodes.len(), report.graph.edges.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::NavTest { graph, start, dest, llm, out } => {
            let g = read_graph(&graph)?;
            let mut model = ctx.llm(llm.as_deref())?;
            let request = TestRequest { start: Endpoint::parse(&start), destination: Endpoint::parse(&dest) };
            match generate_scenario(&g, &request, model.as_mut().map(|m| &mut **m as &mut dyn LanguageModel), NAV_ACTION_PROMPT) {
                Ok(s) => {
                    write_json(&out, &s)?;
                    write_text(&out.with_extension("md"), &render_markdown(&s, &g))?;
                    println!("{} steps -> {}", s.steps.len(), out.display());
                    Ok(EXIT_OK)
                }
                Err(e @ ScenarioError::Unreachable { .. }) => {
                    eprintln!("finding: {}", e);
                    Ok(EXIT_FINDINGS)
                }
                Err(e @ ScenarioError::UnknownNode(_)) => Err(CliError::Usage(e.to_string())),
                Err(e) => Err(CliError::Backend(e.to_string())),
            }
        }
        Command::FormExplore { url, form, max_states, max_depth, backend, out } => {
            let mut limits = ctx.config.explore;
            limits.max_states = max_states.unwrap_or(limits.max_states);
            limits.max_depth = max_depth.unwrap_or(limits.max_depth);
            let mut b = ctx.backend(&backend)?;
            let url = b.resolve(&url);
            let graph = explore(&mut *b.session, &url, &ElementRef::new(Strategy::Css, form), limits);
            b.close();
            let graph = graph.map_err(|e| match e {
                formnav_core::explore::ExploreError::FormNotFound(m) => CliError::Usage(format!("form not found: {}", m)),
                other => CliError::Backend(other.to_string()),
            })?;
            write_json(&out, &graph)?;
            println!("{} states, {} edges -> {}", graph.states.len(), graph.edges.len(), out.display());
            for v in &graph.diagnostics.restore_violations {
                eprintln!("finding: restore violation: {}", v);
            }
            Ok(if graph.diagnostics.restore_violations.is_empty() { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::FormTest { states, mode, llm, dialect, form_key, upload_path, out } => {
            let graph: StateGraph = read_json(&states, Some(SchemaKind::StateGraph))?;
            let mode = mode.as_deref().map(fill_mode).transpose()?.unwrap_or(ctx.config.fill_mode);
            let mut model = ctx.llm(llm.as_deref())?;
            if mode == FillMode::Llm && model.is_none() {
                return Err(CliError::Usage("--mode llm needs --llm CONFIG".into()));
            }
            let dialects = dialect.iter().map(|d| Dialect::parse(d).map_err(|e| CliError::Usage(e.to_string()))).collect::<Result<Vec<_>, _>>()?;
            let key = form_key.unwrap_or_else(|| crate::pipeline::form_key(&graph.page_url, 0, 1));
            let mut filler = Filler { mode, llm: model.as_mut().map(|m| &mut **m as &mut dyn LanguageModel), upload_path: upload_path.unwrap_or_else(|| ctx.config.upload_path.clone()) };
            let scripts = plan_state_scripts(&graph, None, &mut filler);
            let written = write_scripts(&out, &key, &scripts, &dialects)?;
            println!("{} scripts, {} files -> {}", scripts.len(), written.len(), out.join(&key).display());
            Ok(EXIT_OK)
        }
        Command::Run { scripts, backend, out } => {
            let groups = crate::io::read_scripts(&scripts)?;
            let mut b = ctx.backend(&backend)?;
            let mut results = RunResults::new(args_backend(&backend, &ctx).as_str());
            for (form, scripts) in groups {
                let page_url = scripts.first().map(|s| s.provenance.page_url.clone()).unwrap_or_default();
                let runs = scripts.iter().map(|s| run_script(s, &mut *b.session)).collect();
                results.forms.push(FormRun { form, page_url, runs });
            }
            b.close();
            write_json(&out, &results)?;
            let runs: Vec<_> = results.forms.iter().flat_map(|f| &f.runs).collect();
            let passed = runs.iter().filter(|r| r.passed()).count();
            println!("{}/{} scripts passed -> {}", passed, runs.len(), out.display());
            Ok(if results.has_failures() { EXIT_FINDINGS } else { EXIT_OK })
        }
        Command::BenchGen { simple, dynamic, seed, site_pages, out } => {
            let bench = ctx.config.bench.unwrap_or_default();
            let data = generate_benchmark(simple, dynamic, seed, &bench.config, &InputPool::builtin()).map_err(|e| CliError::Config(e.to_string()))?;
            write_dataset(&out, &data)?;
            if let Some(pages) = site_pages {
                write_json(&out.join("site.json"), &synthetic_site(pages, seed).bundle)?;
            }
            println!("{} forms -> {}", data.forms.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::Eval { results, manifests, counting, out } => {
            let results: RunResults = read_json(&results, Some(SchemaKind::RunResults))?;
            let manifests = load_manifests(&manifests)?;
            let mut mode = ctx.config.counting;
            mode.include_hidden |= counting.include_hidden;
            mode.include_file &= !counting.exclude_file;
            let report = compute_metrics(&results, &manifests, mode);
            write_evaluation(&out, &report)?;
            match formnav_core::eval::MetricsRow::from_report(&report) {
                Some(row) => println!("micro / macro / coverage: {}", row.render()),
                None => println!("no counted interactions"),
            }
            for form in &report.without_ground_truth {
                eprintln!("warning: no manifest for {}", form);
            }
            Ok(if report.n_successes < report.n_interactions { EXIT_FINDINGS } else { EXIT_OK })
        }
        Command::Judge { scenario, llm, offline, rubric, out } => {
            let s: NavigationScenario = read_json(&scenario, Some(SchemaKind::Scenario))?;
            let rubric = match rubric {
                Some(p) => Rubric::parse(&read_text(&p)?).map_err(|e| CliError::input(&p, e.to_string()))?,
                None => Rubric::builtin(),
            };
            let record = match offline {
                Some(p) => JudgeRecord::Scored(offline_score(&read_text(&p)?, &rubric).map_err(|e| CliError::input(&p, e.to_string()))?),
                None => {
                    let mut model = ctx.llm(llm.as_deref())?.ok_or_else(|| CliError::Usage("--llm CONFIG or --offline FILE is required".into()))?;
                    judge_scenario(&s, &mut *model, &rubric)
                }
            };
            emit(out.as_deref(), &to_pretty_json(&record))?;
            match &record {
                JudgeRecord::Scored(score) => {
                    eprintln!("final score {}", score.rendered_final());
                    Ok(EXIT_OK)
                }
                JudgeRecord::Unscored { warnings, .. } => {
                    for w in warnings {
                        eprintln!("warning: {}", w);
                    }
                    Ok(EXIT_FINDINGS)
                }
            }
        }
        Command::Pipeline { backend, simple, dynamic, seed, mode, include_hidden, exclude_file, out } => {
            let mut config = ctx.config.clone();
            if let Some(b) = backend.backend {
                config.backend = b;
            }
            if let Some(url) = backend.webdriver_url {
                config.webdriver.endpoint = url;
            }
            if let Some(site) = backend.site {
                config.site = Some(site);
                config.bench = None;
            }
            if simple.is_some() || dynamic.is_some() || seed.is_some() {
                let mut bench = config.bench.unwrap_or_default();
                bench.simple = simple.unwrap_or(bench.simple);
                bench.dynamic = dynamic.unwrap_or(bench.dynamic);
                bench.seed = seed.unwrap_or(bench.seed);
                config.bench = Some(BenchSettings { ..bench });
                config.site = None;
            }
            if let Some(m) = mode {
                config.fill_mode = fill_mode(&m)?;
            }
            config.counting.include_hidden |= include_hidden;
            config.counting.include_file &= !exclude_file;
            if let Some(out) = out {
                config.out_dir = out;
            }
            let outcome = pipeline_run(&config)?;
            for e in &outcome.manifest.errors {
                eprintln!("{} {}: {}", e.stage, e.item, e.message);
            }
            match formnav_core::eval::MetricsRow::from_report(&outcome.report) {
                Some(row) => println!("{} forms, micro / macro / coverage: {} -> {}", outcome.manifest.forms.len(), row.render(), outcome.out_dir.display()),
                None => println!("{} forms -> {}", outcome.manifest.forms.len(), outcome.out_dir.display()),
            }
            Ok(if outcome.manifest.findings { EXIT_FINDINGS } else { EXIT_OK })
        }
    }
}

fn args_backend(args: &BackendArgs, ctx: &Context) -> BackendChoice {
    args.backend.unwrap_or(ctx.config.backend)
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}
