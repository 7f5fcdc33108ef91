//! Strict reader for hierarchical model documents.
//!
//! The document mirrors the graph one tier per nesting level:
//!
//! ```json
//! {"Goal": {"name": "...", "achieved_by": {"gate": "AND_gate", "functions": [
//!   {"name": "...", "depends_on": {"gate": "OR_gate", "subfunctions": [
//!     {"name": "...", "requires": {"gate": "AND_gate", "components": [
//!       {"name": "CST-1",
//!        "states": [{"name": "operational", "prior": 0.98}, ...],
//!        "success_through": {"gate": "AND_gate", "success_conditions": [
//!          {"name": "...", "given_state": {"operational": 0.99, ...}}]}},
//!       {"ref": "CST-2"}]}}]}}]}}}
//! ```
//!
//! Parsing only checks vocabulary and value types; tier placement and
//! probability rules are checked by [`super::validate_structure`]. The string
//! `"N/A"` in place of any value or list element is dropped with an
//! `NA_DROPPED` warning.

use indexmap::IndexMap;
use serde_json::{Map, Value};

use super::{Issue, IssueCode, ParseError};
use crate::model::{GateKind, StateSpec};

const NOT_AVAILABLE: &str = "N/A";

/// Relationship keys that open a gate block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    AchievedBy,
    DependsOn,
    Requires,
    SuccessThrough,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::AchievedBy,
        Relation::DependsOn,
        Relation::Requires,
        Relation::SuccessThrough,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Relation::AchievedBy => "achieved_by",
            Relation::DependsOn => "depends_on",
            Relation::Requires => "requires",
            Relation::SuccessThrough => "success_through",
        }
    }
}

/// Child-list keys inside a gate block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ListKey {
    Functions,
    Subfunctions,
    Components,
    SuccessConditions,
}

impl ListKey {
    pub const ALL: [ListKey; 4] = [
        ListKey::Functions,
        ListKey::Subfunctions,
        ListKey::Components,
        ListKey::SuccessConditions,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ListKey::Functions => "functions",
            ListKey::Subfunctions => "subfunctions",
            ListKey::Components => "components",
            ListKey::SuccessConditions => "success_conditions",
        }
    }
}

/// One tier of the hierarchy as written in the document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Entry {
    pub name: Option<String>,
    /// `{"ref": name}` re-references an entry defined elsewhere.
    pub reference: Option<String>,
    pub links: Vec<Link>,
    pub states: Option<Vec<StateSpec>>,
    pub direct_p_success: Option<f64>,
    pub given_state: Option<IndexMap<String, f64>>,
}

impl Entry {
    pub fn link(&self, relation: Relation) -> Option<&Link> {
        self.links.iter().find(|l| l.relation == relation)
    }

    /// Name an entry is known by among its siblings.
    pub fn label(&self) -> Option<&str> {
        self.reference.as_deref().or(self.name.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub relation: Relation,
    pub gate: Option<GateKind>,
    pub lists: Vec<(ListKey, Vec<Entry>)>,
}

impl Link {
    pub fn list(&self, key: ListKey) -> Option<&[Entry]> {
        self.lists
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_slice())
    }
}

/// Parsed model document, plus warnings raised while reading it.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalModel {
    pub goal: Entry,
    pub warnings: Vec<Issue>,
}

impl HierarchicalModel {
    pub fn function_count(&self) -> usize {
        self.goal
            .link(Relation::AchievedBy)
            .and_then(|l| l.list(ListKey::Functions))
            .map_or(0, <[Entry]>::len)
    }
}

/// Reads a model document.
pub fn parse_model(text: &str) -> Result<HierarchicalModel, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError {
        issue: Issue::new(IssueCode::Syntax, "", e.to_string()),
        line: Some(e.line()),
        column: Some(e.column()),
    })?;
    let mut reader = Reader {
        warnings: Vec::new(),
    };
    let goal = reader.root(&value)?;
    Ok(HierarchicalModel {
        goal,
        warnings: reader.warnings,
    })
}

struct Reader {
    warnings: Vec<Issue>,
}

fn fail(code: IssueCode, path: &str, message: impl Into<String>) -> ParseError {
    ParseError {
        issue: Issue::new(code, path, message),
        line: None,
        column: None,
    }
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

impl Reader {
    fn is_na(&mut self, value: &Value, path: &str) -> bool {
        if value.as_str() == Some(NOT_AVAILABLE) {
            self.warnings.push(Issue::new(
                IssueCode::NaDropped,
                path,
                "placeholder \"N/A\" dropped",
            ));
            true
        } else {
            false
        }
    }

    fn object<'v>(
        &self,
        value: &'v Value,
        path: &str,
    ) -> Result<&'v Map<String, Value>, ParseError> {
        value.as_object().ok_or_else(|| {
            fail(
                IssueCode::TypeMismatch,
                path,
                format!("expected object, found {}", json_type(value)),
            )
        })
    }

    fn root(&mut self, value: &Value) -> Result<Entry, ParseError> {
        let map = self.object(value, "")?;
        if !map.contains_key("Goal") {
            return Err(fail(IssueCode::MissingField, "", "missing \"Goal\""));
        }
        let mut goal = None;
        for (key, v) in map {
            if key != "Goal" {
                return Err(fail(
                    IssueCode::UnknownKey,
                    key,
                    format!("unknown key {key:?}"),
                ));
            }
            if !self.is_na(v, "goal") {
                goal = Some(self.entry(v, "goal")?);
            }
        }
        goal.ok_or_else(|| fail(IssueCode::MissingField, "", "missing \"Goal\""))
    }

    fn entry(&mut self, value: &Value, path: &str) -> Result<Entry, ParseError> {
        let map = self.object(value, path)?;
        let mut entry = Entry::default();
        for (key, v) in map {
            let here = join(path, key);
            if self.is_na(v, &here) {
                continue;
            }
            match key.as_str() {
                "name" => entry.name = Some(self.string(v, &here)?),
                "ref" => entry.reference = Some(self.string(v, &here)?),
                "states" => entry.states = Some(self.states(v, &here)?),
                "direct_p_success" => entry.direct_p_success = Some(self.number(v, &here)?),
                "given_state" => entry.given_state = Some(self.given_state(v, &here)?),
                other => match Relation::ALL.into_iter().find(|r| r.key() == other) {
                    Some(relation) => entry.links.push(self.link(relation, v, &here)?),
                    None => {
                        return Err(fail(
                            IssueCode::UnknownKey,
                            &here,
                            format!("unknown key {other:?}"),
                        ))
                    }
                },
            }
        }
        Ok(entry)
    }

    fn link(&mut self, relation: Relation, value: &Value, path: &str) -> Result<Link, ParseError> {
        let map = self.object(value, path)?;
        let mut link = Link {
            relation,
            gate: None,
            lists: Vec::new(),
        };
        for (key, v) in map {
            let here = join(path, key);
            if self.is_na(v, &here) {
                continue;
            }
            if key == "gate" {
                link.gate = Some(match self.string(v, &here)?.as_str() {
                    "AND_gate" => GateKind::And,
                    "OR_gate" => GateKind::Or,
                    other => {
                        return Err(fail(
                            IssueCode::InvalidGate,
                            &here,
                            format!("gate must be \"AND_gate\" or \"OR_gate\", found {other:?}"),
                        ))
                    }
                });
                continue;
            }
            let Some(list_key) = ListKey::ALL.into_iter().find(|l| l.key() == key) else {
                return Err(fail(
                    IssueCode::UnknownKey,
                    &here,
                    format!("unknown key {key:?}"),
                ));
            };
            let items = v.as_array().ok_or_else(|| {
                fail(
                    IssueCode::TypeMismatch,
                    &here,
                    format!("expected array, found {}", json_type(v)),
                )
            })?;
            let mut entries = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let item_path = format!("{here}[{i}]");
                if !self.is_na(item, &item_path) {
                    entries.push(self.entry(item, &item_path)?);
                }
            }
            link.lists.push((list_key, entries));
        }
        Ok(link)
    }

    fn string(&self, value: &Value, path: &str) -> Result<String, ParseError> {
        value.as_str().map(str::to_string).ok_or_else(|| {
            fail(
                IssueCode::TypeMismatch,
                path,
                format!("expected string, found {}", json_type(value)),
            )
        })
    }

    fn number(&self, value: &Value, path: &str) -> Result<f64, ParseError> {
        value.as_f64().ok_or_else(|| {
            fail(
                IssueCode::TypeMismatch,
                path,
                format!("expected number, found {}", json_type(value)),
            )
        })
    }

    fn states(&mut self, value: &Value, path: &str) -> Result<Vec<StateSpec>, ParseError> {
        let items = value.as_array().ok_or_else(|| {
            fail(
                IssueCode::TypeMismatch,
                path,
                format!("expected array, found {}", json_type(value)),
            )
        })?;
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let here = format!("{path}[{i}]");
            let map = self.object(item, &here)?;
            let (mut name, mut prior) = (None, None);
            for (key, v) in map {
                let field = join(&here, key);
                match key.as_str() {
                    "name" => name = Some(self.string(v, &field)?),
                    "prior" => prior = Some(self.number(v, &field)?),
                    other => {
                        return Err(fail(
                            IssueCode::UnknownKey,
                            &field,
                            format!("unknown key {other:?}"),
                        ))
                    }
                }
            }
            let name = name.ok_or_else(|| {
                fail(
                    IssueCode::MissingField,
                    &join(&here, "name"),
                    "state needs a name",
                )
            })?;
            let prior = prior.ok_or_else(|| {
                fail(
                    IssueCode::MissingField,
                    &join(&here, "prior"),
                    "state needs a prior",
                )
            })?;
            out.push(StateSpec { name, prior });
        }
        Ok(out)
    }

    fn given_state(&self, value: &Value, path: &str) -> Result<IndexMap<String, f64>, ParseError> {
        let map = self.object(value, path)?;
        map.iter()
            .map(|(k, v)| Ok((k.clone(), self.number(v, &join(path, k))?)))
            .collect()
    }
}
