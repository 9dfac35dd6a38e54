//! The weighted input pool and field sampling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dom::{Constraints, ControlType};

/// The pool shipped with the crate.
pub const BUILTIN_POOL: &str = include_str!("../../../../data/pool.json");

pub const POOL_SIZE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Essential,
    VeryCommon,
    Common,
    ModeratelyCommon,
    LessCommon,
    Rare,
}

impl Category {
    pub const ALL: [Category; 6] =
        [Category::Essential, Category::VeryCommon, Category::Common, Category::ModeratelyCommon, Category::LessCommon, Category::Rare];

    /// Sampling weight, halving from one category to the next.
    pub fn weight(self) -> u32 {
        32 >> (self as u32)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Essential => "essential",
            Category::VeryCommon => "very_common",
            Category::Common => "common",
            Category::ModeratelyCommon => "moderately_common",
            Category::LessCommon => "less_common",
            Category::Rare => "rare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputPoolEntry {
    pub template_id: String,
    pub control: ControlType,
    pub name: String,
    pub label: String,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    #[serde(default, skip_serializing_if = "Constraints::is_empty")]
    pub constraints: Constraints,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PoolError {
    #[error("pool is not valid JSON: {0}")]
    Parse(String),
    #[error("pool has {0} entries, expected {POOL_SIZE}")]
    Size(usize),
    #[error("pool has no {0} entry")]
    MissingControl(&'static str),
    #[error("entry {0} needs options")]
    MissingOptions(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputPool {
    pub version: u32,
    pub entries: Vec<InputPoolEntry>,
}

impl InputPool {
    pub fn builtin() -> InputPool {
        Self::parse(BUILTIN_POOL).expect("built-in pool is valid")
    }

    pub fn parse(text: &str) -> Result<InputPool, PoolError> {
        let pool: InputPool = serde_json::from_str(text).map_err(|e| PoolError::Parse(format!("{}", e)))?;
        pool.validate()?;
        Ok(pool)
    }

    pub fn validate(&self) -> Result<(), PoolError> {
        if self.entries.len() != POOL_SIZE {
            return Err(PoolError::Size(self.entries.len()));
        }
        for control in ControlType::ALL {
            if !self.entries.iter().any(|e| e.control == control) {
                return Err(PoolError::MissingControl(control.as_str()));
            }
        }
        for e in &self.entries {
            if matches!(e.control, ControlType::Select | ControlType::Radio) && e.options.is_empty() {
                return Err(PoolError::MissingOptions(e.template_id.clone()));
            }
        }
        Ok(())
    }

    pub fn by_category(&self) -> BTreeMap<Category, Vec<&InputPoolEntry>> {
        let mut out: BTreeMap<Category, Vec<&InputPoolEntry>> = BTreeMap::new();
        for e in &self.entries {
            out.entry(e.category).or_default().push(e);
        }
        out
    }
}

/// Draws categories by weight, then an entry uniformly within the category.
pub struct FieldSampler<'a> {
    categories: Vec<(Category, Vec<&'a InputPoolEntry>)>,
    weights: WeightedIndex<u32>,
}

impl<'a> FieldSampler<'a> {
    /// Only categories present in the pool take part.
    pub fn new(pool: &'a InputPool) -> Self {
        let categories: Vec<(Category, Vec<&InputPoolEntry>)> = pool.by_category().into_iter().collect();
        let weights = WeightedIndex::new(categories.iter().map(|(c, _)| c.weight())).expect("pool is not empty");
        FieldSampler { categories, weights }
    }

    pub fn sample_category<R: Rng + ?Sized>(&self, rng: &mut R) -> Category {
        self.categories[self.weights.sample(rng)].0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a InputPoolEntry {
        let (_, entries) = &self.categories[self.weights.sample(rng)];
        entries.choose(rng).copied().expect("categories are non-empty")
    }
}

/// `n` entries drawn with replacement. Repeated names get numeric suffixes: `email`, `email_2`.
pub fn sample_fields<R: Rng + ?Sized>(pool: &InputPool, n: usize, rng: &mut R) -> Vec<InputPoolEntry> {
    let sampler = FieldSampler::new(pool);
    let mut taken = BTreeSet::new();
    (0..n)
        .map(|_| {
            let mut entry = sampler.sample(rng).clone();
            entry.name = unique_name(&mut taken, &entry.name);
            entry
        })
        .collect()
}

pub(crate) fn unique_name(taken: &mut BTreeSet<String>, base: &str) -> String {
    let name = (1..)
        .map(|k| if k == 1 { String::from(base) } else { format!("{}_{}", base, k) })
        .find(|n| !taken.contains(n))
        .expect("unbounded suffixes");
    taken.insert(name.clone());
    name
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_pool_is_complete() {
        let pool = InputPool::builtin();
        assert_eq!(pool.entries.len(), 200);
        assert_eq!(Category::ALL.map(Category::weight), [32, 16, 8, 4, 2, 1]);
    }

    #[test]
    fn names_are_unique_and_deterministic() {
        let pool = InputPool::builtin();
        let a = sample_fields(&pool, 300, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_fields(&pool, 300, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        let mut names: Vec<&str> = a.iter().map(|e| e.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 300);
    }

    #[test]
    fn single_category_pool() {
        let mut pool = InputPool::builtin();
        pool.entries.retain(|e| e.category == Category::Rare);
        let e = &sample_fields(&pool, 1, &mut ChaCha8Rng::seed_from_u64(9))[0];
        assert_eq!(e.category, Category::Rare);
    }

    #[test]
    fn suffix_collisions() {
        let mut taken = BTreeSet::new();
        assert_eq!(unique_name(&mut taken, "a_2"), "a_2");
        assert_eq!(unique_name(&mut taken, "a"), "a");
        assert_eq!(unique_name(&mut taken, "a"), "a_3");
    }
}
