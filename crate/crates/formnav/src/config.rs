//! Pipeline configuration file. Precedence is command line, then file, then defaults.

use std::path::{Path, PathBuf};

use formnav_core::bench::BenchConfig;
use formnav_core::browser::SessionConfig;
use formnav_core::eval::CountingMode;
use formnav_core::explore::ExploreLimits;
use formnav_core::scenario::TestRequest;
use formnav_core::script::{FillMode, DEFAULT_UPLOAD_PATH};
use formnav_core::site::CrawlLimits;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::io::read_text;
use crate::llm::LlmConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Sim,
    Webdriver,
}

impl BackendChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendChoice::Sim => "sim",
            BackendChoice::Webdriver => "webdriver",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WebDriverConfig {
    pub endpoint: String,
    /// `alwaysMatch` capabilities for new sessions.
    pub capabilities: Value,
    pub session: SessionConfig,
}

impl Default for WebDriverConfig {
    fn default() -> Self {
        WebDriverConfig {
            endpoint: "http://localhost:4444".into(),
            capabilities: json!({ "browserName": "chrome" }),
            session: SessionConfig::default(),
        }
    }
}

/// Generate a benchmark dataset inside the run directory instead of reading a site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    pub simple: usize,
    pub dynamic: usize,
    pub seed: u64,
    pub config: BenchConfig,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings { simple: 2, dynamic: 2, seed: 1, config: BenchConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub backend: BackendChoice,
    /// Simulator site: bundle JSON, dataset directory or directory of HTML files.
    pub site: Option<PathBuf>,
    pub bench: Option<BenchSettings>,
    /// Defaults to the site's root page.
    pub start_url: Option<String>,
    /// Manifests for evaluation when the site does not carry them.
    pub manifests: Option<PathBuf>,
    pub webdriver: WebDriverConfig,
    pub crawl: CrawlLimits,
    pub explore: ExploreLimits,
    pub fill_mode: FillMode,
    pub upload_path: String,
    /// Also write each script as a WebDriver Python script.
    pub render_webdriver_text: bool,
    pub llm: Option<LlmConfig>,
    pub counting: CountingMode,
    pub nav_requests: Vec<TestRequest>,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            backend: BackendChoice::Sim,
            site: None,
            bench: None,
            start_url: None,
            manifests: None,
            webdriver: WebDriverConfig::default(),
            crawl: CrawlLimits::default(),
            explore: ExploreLimits::default(),
            fill_mode: FillMode::Rules,
            upload_path: DEFAULT_UPLOAD_PATH.into(),
            render_webdriver_text: false,
            llm: None,
            counting: CountingMode::default(),
            nav_requests: Vec::new(),
            out_dir: PathBuf::from("run"),
        }
    }
}

const SECRET_KEYS: [&str; 6] = ["api_key", "apikey", "token", "secret", "password", "authorization"];

fn find_secret(value: &Value, path: &str) -> Option<String> {
    match value {
        Value::Object(map) => map.iter().find_map(|(k, v)| {
            let here = if path.is_empty() { k.clone() } else { format!("{}.{}", path, k) };
            if SECRET_KEYS.contains(&k.to_ascii_lowercase().as_str()) {
                Some(here)
            } else {
                find_secret(v, &here)
            }
        }),
        Value::Array(items) => items.iter().enumerate().find_map(|(i, v)| find_secret(v, &format!("{}[{}]", path, i))),
        _ => None,
    }
}

/// Parse a JSON document that must not carry credentials.
pub fn parse_config<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("{}: {}", origin, e)))?;
    if let Some(key) = find_secret(&value, "") {
        return Err(CliError::Config(format!("{}: `{}` looks like a secret; supply credentials through environment variables", origin, key)));
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {}", origin, e)))
}

pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    parse_config(&read_text(path)?, &path.display().to_string())
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.backend == BackendChoice::Sim && self.site.is_none() && self.bench.is_none() {
            return bad("the sim backend needs `site` or `bench`".into());
        }
        if self.site.is_some() && self.bench.is_some() {
            return bad("`site` and `bench` are exclusive".into());
        }
        if self.fill_mode == FillMode::Llm && self.llm.is_none() {
            return bad("fill_mode `llm` needs an `llm` section".into());
        }
        if let Some(llm) = &self.llm {
            llm.validate().map_err(CliError::Config)?;
        }
        if self.explore.max_states == 0 || self.crawl.max_pages == 0 {
            return bad("limits must be positive".into());
        }
        self.webdriver.session.validate().map_err(CliError::Config)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_files_take_defaults() {
        let c: PipelineConfig = parse_config(r#"{"bench": {"simple": 1}, "crawl": {"max_pages": 7}}"#, "t").unwrap();
        assert_eq!(c.bench.unwrap().simple, 1);
        assert_eq!(c.bench.unwrap().dynamic, 2);
        assert_eq!(c.crawl.max_pages, 7);
        assert_eq!(c.crawl.max_depth, CrawlLimits::default().max_depth);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_backend_is_a_config_error() {
        let err = parse_config::<PipelineConfig>(r#"{"backend": "selenium"}"#, "t").unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_USAGE);
        assert!(err.to_string().contains("selenium"));
    }

    #[test]
    fn secrets_are_refused() {
        let err = parse_config::<PipelineConfig>(r#"{"llm": {"mode": "live", "api_key": "sk-1"}}"#, "t").unwrap_err();
        assert!(err.to_string().contains("llm.api_key"), "{}", err);
    }

    #[test]
    fn missing_site_fails_validation() {
        assert!(PipelineConfig::default().validate().is_err());
        let c = PipelineConfig { fill_mode: FillMode::Llm, bench: Some(BenchSettings::default()), ..Default::default() };
        assert!(c.validate().is_err());
    }
}
