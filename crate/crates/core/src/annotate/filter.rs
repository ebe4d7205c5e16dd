use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{IssueKind, ParsedResponse};
use crate::metrics::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "kebab-case")]
pub enum FilterViolation {
    MissingId {
        id: u32,
    },
    DuplicateId {
        id: u32,
    },
    UnknownId {
        id: u32,
    },
    CategoryMismatch {
        id: u32,
        expected: String,
        found: String,
    },
    GroupedEntry {
        first: u32,
        last: u32,
    },
}

impl fmt::Display for FilterViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterViolation::MissingId { id } => write!(f, "missing id {id}"),
            FilterViolation::DuplicateId { id } => write!(f, "duplicate id {id}"),
            FilterViolation::UnknownId { id } => write!(f, "unknown id {id}"),
            FilterViolation::CategoryMismatch {
                id,
                expected,
                found,
            } => write!(
                f,
                "id {id}: expected category {expected:?}, found {found:?}"
            ),
            FilterViolation::GroupedEntry { first, last } => {
                write!(f, "grouped entry {first}-{last}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub violations: Vec<FilterViolation>,
}

/// Decides whether a summary names the expected category: equal lowercase token sequences, or
/// both phrases in one synonym group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryComparator {
    groups: Vec<BTreeSet<String>>,
}

impl CategoryComparator {
    pub fn with_groups<I, G, S>(groups: I) -> Self
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        CategoryComparator {
            groups: groups
                .into_iter()
                .map(|g| g.into_iter().map(|p| tokenize(p.as_ref()).join()).collect())
                .collect(),
        }
    }

    /// One group per line, phrases separated by commas; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        Self::with_groups(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| {
                    l.split(',')
                        .map(str::trim)
                        .filter(|p| !p.is_empty())
                        .collect::<Vec<_>>()
                }),
        )
    }

    pub fn matches(&self, expected: &str, summary: &str) -> bool {
        let (a, b) = (tokenize(expected).join(), tokenize(summary).join());
        a == b || self.groups.iter().any(|g| g.contains(&a) && g.contains(&b))
    }
}

/// Checks a parsed reply against the marks that were drawn: every expected display id described
/// exactly once, no unknown ids (interactions included), summaries naming the expected category
/// and no grouped entries.
pub fn hard_match(
    parsed: &ParsedResponse,
    expected: &BTreeMap<u32, String>,
    comparator: &CategoryComparator,
) -> FilterVerdict {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    let mut unknown = BTreeSet::new();
    for o in &parsed.objects {
        if !seen.insert(o.id) {
            violations.push(FilterViolation::DuplicateId { id: o.id });
            continue;
        }
        match expected.get(&o.id) {
            None => {
                unknown.insert(o.id);
            }
            Some(cat) if !comparator.matches(cat, &o.summary) => {
                violations.push(FilterViolation::CategoryMismatch {
                    id: o.id,
                    expected: cat.clone(),
                    found: o.summary.clone(),
                })
            }
            Some(_) => {}
        }
    }
    for i in &parsed.interactions {
        for id in [i.ids.0, i.ids.1] {
            if !expected.contains_key(&id) {
                unknown.insert(id);
            }
        }
    }
    violations.extend(
        unknown
            .into_iter()
            .map(|id| FilterViolation::UnknownId { id }),
    );
    for &id in expected.keys() {
        if !seen.contains(&id) {
            violations.push(FilterViolation::MissingId { id });
        }
    }
    for issue in &parsed.issues {
        if let IssueKind::GroupedEntry { first, last } = issue.kind {
            violations.push(FilterViolation::GroupedEntry { first, last });
        }
    }
    FilterVerdict {
        accepted: violations.is_empty(),
        violations,
    }
}
