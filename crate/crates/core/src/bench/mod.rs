//! Synthetic benchmark: weighted input pool, simple and dynamic forms, reaction manifests,
//! and a synthetic multi-page site for navigation tests.

mod enumerate;
mod form;
mod pool;
mod site;

pub use enumerate::{enumerate_states, EnumerateError};
pub use form::{generate_form, BenchError, FormKind, FormSpec, GeneratedForm, RequiredMode, FORM_ID, REQUIRED_PROBABILITY, SUBMIT_ACTION, TRIGGER_ID};
pub use pool::{sample_fields, Category, FieldSampler, InputPool, InputPoolEntry, PoolError, BUILTIN_POOL, POOL_SIZE};
pub use site::{synthetic_site, SyntheticSite};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::browser::SiteBundle;

pub const INDEX_VERSION: u32 = 1;

/// Field-count ranges and split probabilities used to draw form specs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub simple_fields: (usize, usize),
    pub dynamic_fields: (usize, usize),
    pub sub_forms: (usize, usize),
    /// Probability that a form marks required fields with the attribute.
    pub direct_share: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { simple_fields: (3, 15), dynamic_fields: (6, 24), sub_forms: (2, 4), direct_share: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub html: String,
    pub manifest: String,
    pub spec: FormSpec,
    pub state_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub version: u32,
    pub pool_version: u32,
    pub seed: u64,
    pub simple_count: usize,
    pub dynamic_count: usize,
    pub config: BenchConfig,
    pub required_probability: f64,
    /// Category sampling weights, by category name.
    pub category_weights: BTreeMap<String, u32>,
    pub forms: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub index: DatasetIndex,
    pub forms: Vec<GeneratedForm>,
}

impl Dataset {
    /// Relative path and contents of every file in the dataset directory.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = Vec::with_capacity(self.forms.len() * 2 + 1);
        for (entry, form) in self.index.forms.iter().zip(&self.forms) {
            out.push((entry.html.clone(), form.html.clone()));
            let mut manifest = serde_json::to_string_pretty(&form.manifest).expect("manifests serialize");
            manifest.push('\n');
            out.push((entry.manifest.clone(), manifest));
        }
        let mut index = serde_json::to_string_pretty(&self.index).expect("index serializes");
        index.push('\n');
        out.push(("index.json".into(), index));
        out
    }

    /// Simulator bundle serving every form at `/forms/NNNN.html` with its manifest, an index
    /// page at `/` linking to each form, and the submission target.
    pub fn bundle(&self, origin: &str) -> SiteBundle {
        let mut bundle = SiteBundle::new(origin);
        let mut index = String::from("<!DOCTYPE html><html><head><title>Benchmark forms</title></head><body><ul>");
        for entry in &self.index.forms {
            index.push_str(&format!(r#"<li><a href="/{}">Form {}</a></li>"#, entry.html, entry.id));
        }
        index.push_str("</ul></body></html>\n");
        bundle.add_page("/", index);
        for (entry, form) in self.index.forms.iter().zip(&self.forms) {
            let path = format!("/{}", entry.html);
            bundle.add_page(&path, form.html.clone());
            bundle.add_manifest(&path, form.manifest.clone());
        }
        bundle.add_page(SUBMIT_ACTION, "<!DOCTYPE html><title>Submitted</title><p>Thank you.</p>");
        bundle
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi.max(lo))
}

/// Form specs for a benchmark: simple forms first, then dynamic ones.
pub fn benchmark_specs(simple: usize, dynamic: usize, seed: u64, config: &BenchConfig) -> Vec<FormSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(simple + dynamic);
    for i in 0..simple + dynamic {
        let kind = if i < simple { FormKind::Simple } else { FormKind::Dynamic };
        let required_mode = if rng.gen_bool(config.direct_share) { RequiredMode::Direct } else { RequiredMode::Indirect };
        let (field_count, sub_form_count) = match kind {
            FormKind::Simple => (draw(&mut rng, config.simple_fields), 0),
            FormKind::Dynamic => {
                let subs = draw(&mut rng, config.sub_forms).clamp(2, 4);
                (draw(&mut rng, config.dynamic_fields).max(subs), subs)
            }
        };
        specs.push(FormSpec { kind, field_count, required_mode, sub_form_count, seed: rng.next_u64() });
    }
    specs
}

/// Generate the full dataset. Contents depend only on the arguments and the pool.
pub fn generate_benchmark(
    simple: usize,
    dynamic: usize,
    seed: u64,
    config: &BenchConfig,
    pool: &InputPool,
) -> Result<Dataset, BenchError> {
    let specs = benchmark_specs(simple, dynamic, seed, config);
    let mut forms = Vec::with_capacity(specs.len());
    let mut entries = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let form = generate_form(spec, pool)?;
        let id = format!("{:04}", i + 1);
        entries.push(IndexEntry {
            html: format!("forms/{}.html", id),
            manifest: format!("manifests/{}.json", id),
            id,
            spec: *spec,
            state_count: form.manifest.ground_truth.state_count,
        });
        forms.push(form);
    }
    let index = DatasetIndex {
        version: INDEX_VERSION,
        pool_version: pool.version,
        seed,
        simple_count: simple,
        dynamic_count: dynamic,
        config: *config,
        required_probability: REQUIRED_PROBABILITY,
        category_weights: Category::ALL.iter().map(|c| (String::from(c.as_str()), c.weight())).collect(),
        forms: entries,
    };
    Ok(Dataset { index, forms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_benchmark_is_deterministic() {
        let pool = InputPool::builtin();
        let a = generate_benchmark(2, 2, 11, &BenchConfig::default(), &pool).unwrap();
        let b = generate_benchmark(2, 2, 11, &BenchConfig::default(), &pool).unwrap();
        assert_eq!(a.files(), b.files());
        assert_eq!(a.files().len(), 9);
        let kinds: Vec<FormKind> = a.index.forms.iter().map(|f| f.spec.kind).collect();
        assert_eq!(kinds, [FormKind::Simple, FormKind::Simple, FormKind::Dynamic, FormKind::Dynamic]);
        assert_ne!(a.files(), generate_benchmark(2, 2, 12, &BenchConfig::default(), &pool).unwrap().files());
    }
}
