use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{AnnotateError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub id: u32,
    pub summary: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub ids: (u32, u32),
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IssueKind {
    /// `2-5. people: ...` describes several marks at once.
    GroupedEntry {
        first: u32,
        last: u32,
    },
    ZeroId,
    EmptyField,
    Malformed,
}

/// A line the grammar could not accept. Parsing continues past it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryIssue {
    /// 1-based line number in the reply.
    pub line: usize,
    #[serde(flatten)]
    pub kind: IssueKind,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub objects: Vec<ObjectEntry>,
    pub interactions: Vec<Interaction>,
    pub issues: Vec<EntryIssue>,
}

static OBJECTS_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)the\s+objects\s+include\s*:?").unwrap());
static INTERACTIONS_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)the\s+interactions\s+include\s*:?").unwrap());
static OBJECT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d+)\s*\.\s*([^:]*?)\s*:\s*(.*)$").unwrap());
static GROUPED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(\d+)\s*(?:-|–|—|,|\bto\b|\band\b)\s*(\d+)\s*\.\s*[^:]*:").unwrap()
});
static INTERACTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(\d+)\s+and\s+(\d+)\s*:\s*(.*)$").unwrap());
static LEADING_NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+\s*[.:]").unwrap());

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objects,
    Interactions,
}

enum Last {
    None,
    Object,
    Interaction,
}

fn clean_line(line: &str) -> &str {
    let mut s = line.trim();
    for prefix in ["- ", "* ", "• "] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest.trim_start();
        }
    }
    s
}

fn clean_text(s: &str) -> String {
    s.trim().trim_end_matches(';').trim_end().to_string()
}

fn parse_id(s: &str) -> Option<u32> {
    s.parse().ok()
}

/// Reads an object list and an optional interaction list out of a free-text reply.
///
/// Headers match case-insensitively anywhere on a line, and text after a header on the same
/// line is parsed as an entry. Lines that match no entry pattern continue the previous entry.
pub fn parse_response(raw: &str) -> Result<ParsedResponse> {
    let mut out = ParsedResponse::default();
    let mut section = Section::Preamble;
    let mut last = Last::None;
    let mut saw_objects = false;

    for (n, line) in raw.lines().enumerate() {
        let line_no = n + 1;
        let mut text = line;
        if let Some(m) = INTERACTIONS_HEADER.find(text) {
            if saw_objects {
                section = Section::Interactions;
                last = Last::None;
                text = &text[m.end()..];
            }
        } else if let Some(m) = OBJECTS_HEADER.find(text) {
            if !saw_objects {
                saw_objects = true;
                section = Section::Objects;
                last = Last::None;
                text = &text[m.end()..];
            }
        }
        let text = clean_line(text);
        if section == Section::Preamble
            || text.is_empty()
            || text.chars().all(|c| c == '\'' || c == '`')
        {
            continue;
        }
        let issue = |kind: IssueKind| EntryIssue {
            line: line_no,
            kind,
            text: text.to_string(),
        };

        if let Some(c) = GROUPED.captures(text) {
            let (a, b) = (parse_id(&c[1]), parse_id(&c[2]));
            if let (Some(first), Some(last_id)) = (a, b) {
                if section == Section::Objects || !INTERACTION.is_match(text) {
                    out.issues.push(issue(IssueKind::GroupedEntry {
                        first,
                        last: last_id,
                    }));
                    last = Last::None;
                    continue;
                }
            }
        }
        if section == Section::Interactions {
            if let Some(c) = INTERACTION.captures(text) {
                match (parse_id(&c[1]), parse_id(&c[2])) {
                    (Some(0), _) | (_, Some(0)) => out.issues.push(issue(IssueKind::ZeroId)),
                    (Some(a), Some(b)) => {
                        let body = clean_text(&c[3]);
                        if body.is_empty() {
                            out.issues.push(issue(IssueKind::EmptyField));
                            last = Last::None;
                        } else {
                            out.interactions.push(Interaction {
                                ids: (a, b),
                                text: body,
                            });
                            last = Last::Interaction;
                        }
                    }
                    _ => out.issues.push(issue(IssueKind::Malformed)),
                }
                continue;
            }
        }
        if section == Section::Objects {
            if let Some(c) = OBJECT.captures(text) {
                match parse_id(&c[1]) {
                    Some(0) => out.issues.push(issue(IssueKind::ZeroId)),
                    Some(id) => {
                        let summary = c[2].trim().to_string();
                        let description = clean_text(&c[3]);
                        if summary.is_empty() || description.is_empty() {
                            out.issues.push(issue(IssueKind::EmptyField));
                            last = Last::None;
                        } else {
                            out.objects.push(ObjectEntry {
                                id,
                                summary,
                                description,
                            });
                            last = Last::Object;
                        }
                    }
                    None => out.issues.push(issue(IssueKind::Malformed)),
                }
                continue;
            }
        }
        // Continuation of the previous entry, unless it looks like a broken entry.
        let continued = if LEADING_NUMBER.is_match(text) {
            None
        } else {
            match last {
                Last::Object => out.objects.last_mut().map(|o| &mut o.description),
                Last::Interaction => out.interactions.last_mut().map(|i| &mut i.text),
                Last::None => None,
            }
        };
        match continued {
            Some(target) => {
                let extra = clean_text(text);
                if !extra.is_empty() {
                    target.push(' ');
                    target.push_str(&extra);
                }
            }
            None => {
                out.issues.push(issue(IssueKind::Malformed));
                last = Last::None;
            }
        }
    }
    if !saw_objects {
        return Err(AnnotateError::Parse(
            "no \"The objects include:\" section".into(),
        ));
    }
    Ok(out)
}

/// Canonical rendering; [`parse_response`] reads it back unchanged for well-formed input.
pub fn format_response(parsed: &ParsedResponse) -> String {
    let mut s = String::from("The objects include:\n");
    for o in &parsed.objects {
        let _ = writeln!(s, "{}. {}: {};", o.id, o.summary, o.description);
    }
    if !parsed.interactions.is_empty() {
        s.push_str("The interactions include:\n");
        for i in &parsed.interactions {
            let _ = writeln!(s, "{} and {}: {};", i.ids.0, i.ids.1, i.text);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const REPLY: &str = "Sure! Here is the description.\n\
        The objects include:\n\
        1. Person: the person is wearing a pink jacket, black pants, and a pink beanie. They are holding ski poles and are skiing on a snowy mountain.;\n\
        2. Skis: a pair of long red skis;\n\
        \n\
        The interactions include:\n\
        1 and 2: the person is skiing on the mountain using the skis.;\n";

    #[test]
    fn reference_lines() {
        let p = parse_response(REPLY).unwrap();
        assert_eq!(
            p.objects[0],
            ObjectEntry {
                id: 1,
                summary: "Person".into(),
                description: "the person is wearing a pink jacket, black pants, and a pink beanie. They are holding ski poles and are skiing on a snowy mountain.".into(),
            }
        );
        assert_eq!(
            p.interactions,
            vec![Interaction {
                ids: (1, 2),
                text: "the person is skiing on the mountain using the skis.".into()
            }]
        );
        assert!(p.issues.is_empty());
    }

    #[test]
    fn grouped_entry_is_flagged() {
        let p =
            parse_response("The objects include:\n1. Person: a man;\n2-5. people: xxx\n").unwrap();
        assert_eq!(p.objects.len(), 1);
        assert_eq!(
            p.issues[0].kind,
            IssueKind::GroupedEntry { first: 2, last: 5 }
        );
    }

    #[test]
    fn headers_are_case_insensitive_and_continuations_join() {
        let p = parse_response(
            "THE OBJECTS INCLUDE: 1. Dog: a brown dog\nsitting on grass;\nthe INTERACTIONS include:\n1 and 1: itself\n",
        )
        .unwrap();
        assert_eq!(p.objects[0].description, "a brown dog sitting on grass");
        assert_eq!(p.interactions[0].ids, (1, 1));
    }

    #[test]
    fn missing_section_is_error() {
        assert!(matches!(
            parse_response("1. Person: hi"),
            Err(AnnotateError::Parse(_))
        ));
    }

    #[test]
    fn malformed_lines_are_collected() {
        let p = parse_response(
            "The objects include:\nnonsense\n0. Cat: zero\n3. : empty\n4. Dog: ok\n",
        )
        .unwrap();
        assert_eq!(p.objects.len(), 1);
        let kinds: Vec<_> = p.issues.iter().map(|i| i.kind.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                IssueKind::Malformed,
                IssueKind::ZeroId,
                IssueKind::EmptyField
            ]
        );
    }

    #[test]
    fn canonical_roundtrip() {
        let p = parse_response(REPLY).unwrap();
        assert_eq!(parse_response(&format_response(&p)).unwrap(), p);
    }
}
