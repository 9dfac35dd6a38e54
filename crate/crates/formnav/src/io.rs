//! Reading and writing the on-disk formats.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use formnav_core::bench::{Dataset, DatasetIndex, GeneratedForm};
use formnav_core::browser::{ReactionManifest, SiteBundle};
use formnav_core::script::{render_script, Dialect, TestScript};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::schema::{validate, SchemaKind};

/// Origin under which benchmark datasets are served by the simulator.
pub const BENCH_ORIGIN: &str = "http://bench.test";

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Parse `path` as JSON, checking it against `schema` first when given.
pub fn read_json<T: DeserializeOwned>(path: &Path, schema: Option<SchemaKind>) -> Result<T, CliError> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::input(path, e.to_string()))?;
    if let Some(kind) = schema {
        validate(kind, &value).map_err(|errors| CliError::input(path, format!("does not match the {} schema: {}", kind.name(), errors.join("; "))))?;
    }
    serde_json::from_value(value).map_err(|e| CliError::input(path, e.to_string()))
}

pub fn to_pretty_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    text
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(path, &to_pretty_json(value))
}

fn dataset_from_dir(dir: &Path) -> Result<Dataset, CliError> {
    let index: DatasetIndex = read_json(&dir.join("index.json"), None)?;
    let mut forms = Vec::with_capacity(index.forms.len());
    for entry in &index.forms {
        forms.push(GeneratedForm {
            html: read_text(&dir.join(&entry.html))?,
            manifest: read_json(&dir.join(&entry.manifest), None)?,
            spec: entry.spec,
        });
    }
    Ok(Dataset { index, forms })
}

fn html_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            html_files(root, &path, out)?;
        } else if path.extension().is_some_and(|e| e == "html" || e == "htm") {
            out.push(path.strip_prefix(root).expect("walked below root").to_path_buf());
        }
    }
    Ok(())
}

/// Load a simulator site. Accepts a bundle JSON file, a benchmark dataset directory (one with
/// `index.json`), or any directory of HTML files, each served at its relative path with
/// `index.html` also answering for its directory.
pub fn load_site(path: &Path) -> Result<SiteBundle, CliError> {
    if path.is_file() {
        return read_json(path, None);
    }
    if path.join("index.json").is_file() {
        return Ok(dataset_from_dir(path)?.bundle(BENCH_ORIGIN));
    }
    if !path.is_dir() {
        return Err(CliError::input(path, "no such site file or directory"));
    }
    let mut files = Vec::new();
    html_files(path, path, &mut files)?;
    let mut bundle = SiteBundle::new("http://sim.test");
    for rel in files {
        let url_path = format!("/{}", rel.to_string_lossy().replace('\\', "/"));
        let html = read_text(&path.join(&rel))?;
        if let Some(dir) = url_path.strip_suffix("index.html") {
            bundle.add_page(dir, html.clone());
        }
        bundle.add_page(&url_path, html);
    }
    Ok(bundle)
}

/// Manifests keyed by file stem, from `dir/manifests/` when present, else `dir/`.
pub fn load_manifests(dir: &Path) -> Result<BTreeMap<String, ReactionManifest>, CliError> {
    let dir = if dir.join("manifests").is_dir() { dir.join("manifests") } else { dir.to_path_buf() };
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))? {
        let path = entry.map_err(|e| CliError::io(&dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let stem = path.file_stem().expect("has extension").to_string_lossy().into_owned();
            out.insert(stem, read_json(&path, None)?);
        }
    }
    Ok(out)
}

pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<(), CliError> {
    for (rel, content) in dataset.files() {
        write_text(&dir.join(rel), &content)?;
    }
    Ok(())
}

/// Write each script as `dir/<form>/<id>.json`, plus a rendering per extra dialect.
pub fn write_scripts(dir: &Path, form: &str, scripts: &[TestScript], extra: &[Dialect]) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for script in scripts {
        for &dialect in std::iter::once(&Dialect::NativeJson).chain(extra.iter().filter(|d| **d != Dialect::NativeJson)) {
            let path = dir.join(form).join(format!("{}.{}", script.id, dialect.extension()));
            write_text(&path, &render_script(script, dialect))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn scripts_in(dir: &Path) -> Result<Vec<TestScript>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut scripts = Vec::with_capacity(paths.len());
    for path in paths {
        scripts.push(read_json::<TestScript>(&path, Some(SchemaKind::TestScript))?);
    }
    scripts.sort_by_key(|s| (s.target_state, s.id.clone()));
    Ok(scripts)
}

/// Scripts grouped by form: one group per subdirectory, plus the JSON files directly in `dir`
/// under the directory's own name.
pub fn read_scripts(dir: &Path) -> Result<Vec<(String, Vec<TestScript>)>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::input(dir, "not a directory"));
    }
    let mut groups = Vec::new();
    let own = scripts_in(dir)?;
    if !own.is_empty() {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "scripts".into());
        groups.push((name, own));
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    for sub in subdirs {
        let scripts = scripts_in(&sub)?;
        if !scripts.is_empty() {
            groups.push((sub.file_name().expect("directory entry").to_string_lossy().into_owned(), scripts));
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use formnav_core::bench::{generate_benchmark, BenchConfig, InputPool};

    #[test]
    fn dataset_directory_round_trips_to_a_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let data = generate_benchmark(1, 1, 4, &BenchConfig::default(), &InputPool::builtin()).unwrap();
        write_dataset(dir.path(), &data).unwrap();
        assert_eq!(load_site(dir.path()).unwrap(), data.bundle(BENCH_ORIGIN));
        let manifests = load_manifests(dir.path()).unwrap();
        assert_eq!(manifests.keys().collect::<Vec<_>>(), ["0001", "0002"]);
    }

    #[test]
    fn html_directory_is_served_by_path() {
        let dir = tempfile::tempdir().unwrap();
        write_text(&dir.path().join("index.html"), "<title>Home</title>").unwrap();
        write_text(&dir.path().join("a/b.html"), "<title>B</title>").unwrap();
        let bundle = load_site(dir.path()).unwrap();
        let urls: Vec<&String> = bundle.pages.keys().collect();
        assert_eq!(urls, ["http://sim.test/", "http://sim.test/a/b.html", "http://sim.test/index.html"]);
    }

    #[test]
    fn schema_violations_are_input_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_text(&path, r#"{"version": 1, "backend": "sim"}"#).unwrap();
        let err = read_json::<formnav_core::script::RunResults>(&path, Some(SchemaKind::RunResults)).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_USAGE);
        assert!(err.to_string().contains("run-results schema"));
    }
}
