//! Exhaustive enumeration of the display configurations a manifest's rules can reach.
//!
//! Works on an abstract model built from the manifest alone: region display flags plus the
//! values of the controls that trigger rules. Every visible trigger is exercised with every
//! value it can take, and rules are applied to a fixpoint with the same semantics the simulator
//! uses: each rule fires at most once per interaction, hiding a region resets the triggers inside
//! it, and a reset that changes a value re-evaluates that trigger's rules.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use crate::browser::{Condition, ReactionManifest, Visibility};
use crate::dom::{ControlType, Strategy};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Kind {
    Select(Vec<String>),
    Checkbox(String),
    Radio(Vec<String>),
    Button,
}

#[derive(Debug, Clone)]
struct Trigger {
    ids: Vec<String>,
    kind: Kind,
    region: Option<usize>,
}

impl Trigger {
    /// Value after a reset: the first option for selects, nothing for toggles.
    fn cleared(&self) -> String {
        match &self.kind {
            Kind::Select(options) => options.first().cloned().unwrap_or_default(),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct State {
    displayed: Vec<bool>,
    values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnumerateError {
    #[error("rule trigger {0} is not a declared control or button")]
    UnknownTrigger(String),
    #[error("region {0} has an undeclared parent")]
    UnknownParent(String),
    #[error("more than {0} states")]
    TooMany(usize),
}

struct Model<'a> {
    manifest: &'a ReactionManifest,
    parents: Vec<Option<usize>>,
    triggers: Vec<Trigger>,
    /// For each rule, its trigger index.
    rule_trigger: Vec<usize>,
}

impl Model<'_> {
    fn region_index(&self, id: &str) -> Option<usize> {
        self.manifest.regions.iter().position(|r| r.id == id)
    }

    fn within(&self, mut region: Option<usize>, ancestor: usize) -> bool {
        while let Some(r) = region {
            if r == ancestor {
                return true;
            }
            region = self.parents[r];
        }
        false
    }

    fn shown(&self, state: &State, mut region: Option<usize>) -> bool {
        while let Some(r) = region {
            if !state.displayed[r] {
                return false;
            }
            region = self.parents[r];
        }
        true
    }

    fn settle(&self, state: &mut State, start: usize, clicked: bool) {
        let mut fired = alloc::vec![false; self.manifest.rules.len()];
        let mut queue = VecDeque::from([(start, clicked)]);
        while let Some((t, clicked)) = queue.pop_front() {
            for (i, rule) in self.manifest.rules.iter().enumerate() {
                if fired[i] || self.rule_trigger[i] != t {
                    continue;
                }
                let value = &state.values[t];
                let holds = match (&rule.condition, &self.triggers[t].kind) {
                    (Condition::Clicked, _) => clicked,
                    (Condition::ValueEquals { value: v }, _) => value == v,
                    (Condition::Checked, Kind::Radio(options)) => {
                        let own = rule_member_value(rule.trigger.value.as_str(), &self.triggers[t], options);
                        own.is_some_and(|o| o == value)
                    }
                    (Condition::Checked, _) => !value.is_empty(),
                };
                if !holds {
                    continue;
                }
                fired[i] = true;
                for effect in &rule.effects {
                    let Some(r) = self.region_index(&effect.target) else { continue };
                    state.displayed[r] = effect.visibility == Visibility::Show;
                    if effect.visibility == Visibility::Hide {
                        for (k, trig) in self.triggers.iter().enumerate() {
                            if self.within(trig.region, r) {
                                let cleared = trig.cleared();
                                if state.values[k] != cleared {
                                    state.values[k] = cleared;
                                    queue.push_back((k, false));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

fn rule_member_value<'a>(member_id: &str, trigger: &Trigger, options: &'a [String]) -> Option<&'a String> {
    trigger.ids.iter().position(|id| id == member_id).and_then(|i| options.get(i))
}

/// Number of distinct region display configurations reachable from the initial page, or an error
/// when the manifest is inconsistent or more than `limit` configurations exist.
pub fn enumerate_states(manifest: &ReactionManifest, limit: usize) -> Result<usize, EnumerateError> {
    let mut parents = Vec::with_capacity(manifest.regions.len());
    for r in &manifest.regions {
        parents.push(match &r.parent {
            Some(p) => Some(manifest.regions.iter().position(|x| &x.id == p).ok_or_else(|| EnumerateError::UnknownParent(r.id.clone()))?),
            None => None,
        });
    }
    let region_of = |id: &Option<String>| id.as_ref().and_then(|id| manifest.regions.iter().position(|r| &r.id == id));

    let mut triggers: Vec<Trigger> = Vec::new();
    let mut rule_trigger = Vec::with_capacity(manifest.rules.len());
    for rule in &manifest.rules {
        let id = match rule.trigger.strategy {
            Strategy::Id => rule.trigger.value.clone(),
            _ => return Err(EnumerateError::UnknownTrigger(alloc::format!("{}", rule.trigger))),
        };
        if let Some(k) = triggers.iter().position(|t| t.ids.contains(&id)) {
            rule_trigger.push(k);
            continue;
        }
        let trigger = if let Some(f) = manifest.ground_truth.fields.iter().find(|f| f.id == id || f.member_ids.contains(&id)) {
            let kind = match f.control {
                ControlType::Select => Kind::Select(f.options.clone()),
                ControlType::Checkbox => Kind::Checkbox(String::from("on")),
                ControlType::Radio => Kind::Radio(f.options.clone()),
                _ => return Err(EnumerateError::UnknownTrigger(id)),
            };
            let ids = if f.member_ids.is_empty() { alloc::vec![f.id.clone()] } else { f.member_ids.clone() };
            Trigger { ids, kind, region: region_of(&f.region) }
        } else if let Some(b) = manifest.buttons.iter().find(|b| b.id == id) {
            Trigger { ids: alloc::vec![b.id.clone()], kind: Kind::Button, region: region_of(&b.region) }
        } else {
            return Err(EnumerateError::UnknownTrigger(id));
        };
        rule_trigger.push(triggers.len());
        triggers.push(trigger);
    }

    let model = Model { manifest, parents, triggers, rule_trigger };
    let initial = State {
        displayed: manifest.regions.iter().map(|r| r.displayed).collect(),
        values: model.triggers.iter().map(Trigger::cleared).collect(),
    };
    let mut seen: BTreeSet<State> = BTreeSet::new();
    let mut configurations: BTreeSet<Vec<bool>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(initial.clone());
    configurations.insert(initial.displayed.clone());
    queue.push_back(initial);
    while let Some(state) = queue.pop_front() {
        for (k, trig) in model.triggers.iter().enumerate() {
            if !model.shown(&state, trig.region) {
                continue;
            }
            let moves: Vec<(String, bool)> = match &trig.kind {
                Kind::Select(options) | Kind::Radio(options) => options.iter().map(|o| (o.clone(), false)).collect(),
                Kind::Checkbox(on) => {
                    let next = if state.values[k].is_empty() { on.clone() } else { String::new() };
                    alloc::vec![(next, false)]
                }
                Kind::Button => alloc::vec![(String::new(), true)],
            };
            for (value, clicked) in moves {
                let mut next = state.clone();
                next.values[k] = value;
                model.settle(&mut next, k, clicked);
                if seen.insert(next.clone()) {
                    configurations.insert(next.displayed.clone());
                    if configurations.len() > limit {
                        return Err(EnumerateError::TooMany(limit));
                    }
                    queue.push_back(next);
                }
            }
        }
    }
    Ok(configurations.len())
}
