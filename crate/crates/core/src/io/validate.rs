use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::document::{Entry, HierarchicalModel, Link, ListKey, Relation};
use super::{Issue, IssueCode};
use crate::model::{is_probability, NodeKind, StateSpec, SUM_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of structural validation. `warnings` never affect the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub issues: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn codes(&self) -> Vec<IssueCode> {
        self.issues.iter().map(|i| i.code).collect()
    }
}

pub(crate) fn expected_relation(kind: NodeKind) -> Option<Relation> {
    match kind {
        NodeKind::Goal => Some(Relation::AchievedBy),
        NodeKind::Function => Some(Relation::DependsOn),
        NodeKind::Subfunction => Some(Relation::Requires),
        NodeKind::Component => Some(Relation::SuccessThrough),
        _ => None,
    }
}

pub(crate) fn expected_list(kind: NodeKind) -> Option<(ListKey, NodeKind)> {
    match kind {
        NodeKind::Goal => Some((ListKey::Functions, NodeKind::Function)),
        NodeKind::Function => Some((ListKey::Subfunctions, NodeKind::Subfunction)),
        NodeKind::Subfunction => Some((ListKey::Components, NodeKind::Component)),
        NodeKind::Component => Some((ListKey::SuccessConditions, NodeKind::SuccessCondition)),
        _ => None,
    }
}

/// Children of `entry` sitting in the slot its tier expects.
pub(crate) fn tier_children(entry: &Entry, kind: NodeKind) -> Option<(&Link, &[Entry])> {
    let relation = expected_relation(kind)?;
    let (list, _) = expected_list(kind)?;
    let link = entry.link(relation)?;
    Some((link, link.list(list)?))
}

/// Full (non-reference) definitions by tier and name, in document order.
pub(crate) fn collect_definitions(
    goal: &Entry,
) -> HashMap<(NodeKind, String), Vec<(String, &Entry)>> {
    fn walk<'a>(
        entry: &'a Entry,
        kind: NodeKind,
        path: String,
        out: &mut HashMap<(NodeKind, String), Vec<(String, &'a Entry)>>,
    ) {
        if entry.reference.is_some() {
            return;
        }
        if let Some(name) = &entry.name {
            if kind != NodeKind::SuccessCondition {
                out.entry((kind, name.clone()))
                    .or_default()
                    .push((path.clone(), entry));
            }
        }
        let (Some(relation), Some((list, child_kind))) =
            (expected_relation(kind), expected_list(kind))
        else {
            return;
        };
        if let Some((_, children)) = tier_children(entry, kind) {
            for (i, child) in children.iter().enumerate() {
                let p = format!("{path}.{}.{}[{i}]", relation.key(), list.key());
                walk(child, child_kind, p, out);
            }
        }
    }
    let mut out = HashMap::new();
    walk(goal, NodeKind::Goal, "goal".to_string(), &mut out);
    out
}

/// Checks tier order, gates, names, probabilities and references.
pub fn validate_structure(model: &HierarchicalModel) -> ValidationReport {
    let definitions = collect_definitions(&model.goal);
    let mut v = Validator {
        definitions: &definitions,
        issues: Vec::new(),
        ancestors: Vec::new(),
    };
    v.entry(&model.goal, NodeKind::Goal, "goal", None);

    let mut repeated: Vec<_> = definitions.values().filter(|defs| defs.len() > 1).collect();
    repeated.sort_by(|a, b| a[1].0.cmp(&b[1].0));
    for defs in repeated {
        let (_, first) = &defs[0];
        for (path, other) in &defs[1..] {
            if other != first {
                v.push(
                    IssueCode::ConflictingDefinition,
                    path,
                    format!(
                        "{:?} redefined with different content",
                        first.name.as_deref().unwrap_or("")
                    ),
                );
            }
        }
    }

    let issues = v.issues;
    ValidationReport {
        verdict: if issues.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        issues,
        warnings: model.warnings.clone(),
    }
}

type Definitions<'a> = HashMap<(NodeKind, String), Vec<(String, &'a Entry)>>;

struct Validator<'d, 'a> {
    definitions: &'d Definitions<'a>,
    issues: Vec<Issue>,
    ancestors: Vec<String>,
}

impl Validator<'_, '_> {
    fn push(&mut self, code: IssueCode, path: &str, message: impl Into<String>) {
        self.issues.push(Issue::new(code, path, message));
    }

    fn entry(&mut self, e: &Entry, kind: NodeKind, path: &str, states: Option<&[StateSpec]>) {
        if let Some(target) = &e.reference {
            self.reference(e, target, kind, path);
            return;
        }
        match e.name.as_deref() {
            None => self.push(
                IssueCode::MissingField,
                &format!("{path}.name"),
                "name is required",
            ),
            Some(n) if n.trim().is_empty() => self.push(
                IssueCode::EmptyName,
                &format!("{path}.name"),
                "name must be non-empty",
            ),
            Some(_) => {}
        }
        if kind != NodeKind::Component {
            if e.states.is_some() {
                self.misplaced(path, "states", kind);
            }
            if e.direct_p_success.is_some() {
                self.misplaced(path, "direct_p_success", kind);
            }
        }
        if kind != NodeKind::SuccessCondition && e.given_state.is_some() {
            self.misplaced(path, "given_state", kind);
        }

        let expected = expected_relation(kind);
        for link in &e.links {
            if Some(link.relation) != expected {
                self.push(
                    IssueCode::LevelOrder,
                    &format!("{path}.{}", link.relation.key()),
                    format!("{} cannot follow a {}", link.relation.key(), kind.as_str()),
                );
            }
        }
        let link = expected.and_then(|r| e.link(r));

        self.ancestors.push(e.name.clone().unwrap_or_default());
        match kind {
            NodeKind::Goal | NodeKind::Function | NodeKind::Subfunction => {
                let relation = expected.expect("tier has a relation");
                match link {
                    Some(link) => {
                        self.link(link, kind, &format!("{path}.{}", relation.key()), None)
                    }
                    None if e.links.is_empty() => self.push(
                        IssueCode::MissingField,
                        &format!("{path}.{}", relation.key()),
                        format!("{} requires {}", kind.as_str(), relation.key()),
                    ),
                    None => {}
                }
            }
            NodeKind::Component => self.component(e, link, path),
            NodeKind::SuccessCondition => self.condition(e, path, states),
            NodeKind::AndGate | NodeKind::OrGate => unreachable!("gates are not document tiers"),
        }
        self.ancestors.pop();
    }

    fn misplaced(&mut self, path: &str, field: &str, kind: NodeKind) {
        self.push(
            IssueCode::MisplacedField,
            &format!("{path}.{field}"),
            format!("{field} is not allowed on a {}", kind.as_str()),
        );
    }

    fn reference(&mut self, e: &Entry, target: &str, kind: NodeKind, path: &str) {
        let here = format!("{path}.ref");
        if matches!(kind, NodeKind::Goal | NodeKind::SuccessCondition) {
            self.misplaced(path, "ref", kind);
            return;
        }
        let bare = Entry {
            reference: e.reference.clone(),
            ..Entry::default()
        };
        if *e != bare {
            self.push(
                IssueCode::RefWithBody,
                path,
                "a reference entry carries only \"ref\"",
            );
        }
        if target.trim().is_empty() {
            self.push(IssueCode::EmptyName, &here, "reference must name an entry");
        } else if self.definitions.contains_key(&(kind, target.to_string())) {
        } else if self.ancestors.iter().any(|a| a == target) {
            self.push(
                IssueCode::RefCycle,
                &here,
                format!("{target:?} is an ancestor of this entry"),
            );
        } else if self.definitions.keys().any(|(_, name)| name == target) {
            self.push(
                IssueCode::LevelOrder,
                &here,
                format!("{target:?} is not a {}", kind.as_str()),
            );
        } else {
            self.push(
                IssueCode::RefUnresolved,
                &here,
                format!("no {} named {target:?}", kind.as_str()),
            );
        }
    }

    fn link(&mut self, link: &Link, kind: NodeKind, path: &str, states: Option<&[StateSpec]>) {
        if link.gate.is_none() {
            self.push(
                IssueCode::GateMissing,
                path,
                "gate is required at every branching point",
            );
        }
        let (list_key, child_kind) = expected_list(kind).expect("tier has children");
        for (key, _) in &link.lists {
            if *key != list_key {
                self.push(
                    IssueCode::LevelOrder,
                    &format!("{path}.{}", key.key()),
                    format!("{} cannot appear below a {}", key.key(), kind.as_str()),
                );
            }
        }
        let list_path = format!("{path}.{}", list_key.key());
        let Some(children) = link.list(list_key) else {
            if link.lists.is_empty() {
                self.push(
                    IssueCode::MissingField,
                    &list_path,
                    format!("{} is required", list_key.key()),
                );
            }
            return;
        };
        if children.is_empty() {
            self.push(
                IssueCode::EmptyChildren,
                &list_path,
                "at least one child is required",
            );
        }
        let mut seen = HashSet::new();
        for (i, child) in children.iter().enumerate() {
            let child_path = format!("{list_path}[{i}]");
            if let Some(label) = child.label() {
                if !label.is_empty() && !seen.insert(label.to_string()) {
                    self.push(
                        IssueCode::DuplicateSibling,
                        &child_path,
                        format!("{label:?} appears twice under the same gate"),
                    );
                }
            }
            self.entry(child, child_kind, &child_path, states);
        }
    }

    fn component(&mut self, e: &Entry, link: Option<&Link>, path: &str) {
        if link.is_none() && e.direct_p_success.is_none() {
            self.push(
                IssueCode::NoSuccessModel,
                path,
                "component needs success_through or direct_p_success",
            );
        }
        if let Some(p) = e.direct_p_success {
            if !is_probability(p) {
                self.push(
                    IssueCode::ProbabilityRange,
                    &format!("{path}.direct_p_success"),
                    "outside [0,1]",
                );
            }
        }
        let states_path = format!("{path}.states");
        match &e.states {
            Some(states) if !states.is_empty() => {
                let mut seen = HashSet::new();
                let mut in_range = true;
                for (i, s) in states.iter().enumerate() {
                    if s.name.trim().is_empty() {
                        self.push(
                            IssueCode::EmptyName,
                            &format!("{states_path}[{i}].name"),
                            "state name must be non-empty",
                        );
                    } else if !seen.insert(s.name.as_str()) {
                        self.push(
                            IssueCode::DuplicateState,
                            &format!("{states_path}[{i}].name"),
                            format!("duplicate state {:?}", s.name),
                        );
                    }
                    if !is_probability(s.prior) {
                        in_range = false;
                        self.push(
                            IssueCode::ProbabilityRange,
                            &format!("{states_path}[{i}].prior"),
                            "outside [0,1]",
                        );
                    }
                }
                let sum: f64 = states.iter().map(|s| s.prior).sum();
                if in_range && (sum - 1.0).abs() > SUM_TOLERANCE {
                    self.push(
                        IssueCode::PriorSum,
                        &states_path,
                        format!("priors sum to {sum}, expected 1"),
                    );
                }
            }
            _ if link.is_some() => self.push(
                IssueCode::MissingStates,
                &states_path,
                "success conditions need declared states",
            ),
            Some(_) => self.push(
                IssueCode::MissingStates,
                &states_path,
                "states must not be empty",
            ),
            None => {}
        }
        if let Some(link) = link {
            self.link(
                link,
                NodeKind::Component,
                &format!("{path}.success_through"),
                e.states.as_deref(),
            );
        }
    }

    fn condition(&mut self, e: &Entry, path: &str, states: Option<&[StateSpec]>) {
        let here = format!("{path}.given_state");
        let Some(given) = &e.given_state else {
            self.push(IssueCode::MissingField, &here, "given_state is required");
            return;
        };
        for (state, p) in given {
            if !is_probability(*p) {
                self.push(
                    IssueCode::ProbabilityRange,
                    &format!("{here}.{state}"),
                    "outside [0,1]",
                );
            }
        }
        let Some(states) = states.filter(|s| !s.is_empty()) else {
            return;
        };
        let missing: Vec<&str> = states
            .iter()
            .map(|s| s.name.as_str())
            .filter(|n| !given.contains_key(*n))
            .collect();
        if !missing.is_empty() {
            self.push(
                IssueCode::GivenStateIncomplete,
                &here,
                format!("no likelihood for {missing:?}"),
            );
        }
        let unknown: Vec<&str> = given
            .keys()
            .map(String::as_str)
            .filter(|k| !states.iter().any(|s| s.name == *k))
            .collect();
        if !unknown.is_empty() {
            self.push(
                IssueCode::GivenStateUnknown,
                &here,
                format!("undeclared states {unknown:?}"),
            );
        }
    }
}
