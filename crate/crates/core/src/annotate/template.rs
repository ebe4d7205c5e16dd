use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{AnnotateError, Result};

pub const NUM_INSTANCES: &str = "<num instances>";
pub const IMG_CATEGORIES: &str = "<img categories>";

const PROMPT1: &str = include_str!("../../templates/prompt1.txt");
const PROMPT2: &str = include_str!("../../templates/prompt2.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: String,
    pub body: String,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Result<Self> {
        let t = PromptTemplate {
            id: id.into(),
            body: body.into(),
        };
        for p in [NUM_INSTANCES, IMG_CATEGORIES] {
            if !t.body.contains(p) {
                return Err(AnnotateError::Template(format!(
                    "template {} lacks the {p} placeholder",
                    t.id
                )));
            }
        }
        Ok(t)
    }

    /// The two built-in instruction prompts, ids `prompt1` and `prompt2`.
    pub fn bundled() -> Vec<PromptTemplate> {
        vec![
            PromptTemplate::new("prompt1", PROMPT1).expect("bundled template"),
            PromptTemplate::new("prompt2", PROMPT2).expect("bundled template"),
        ]
    }

    /// Every `*.txt` file in `dir`, sorted by file name; the id is the file stem.
    pub fn load_dir(dir: &Path) -> Result<Vec<PromptTemplate>> {
        let io = |e: std::io::Error| AnnotateError::Io(format!("{}: {e}", dir.display()));
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        paths
            .into_iter()
            .map(|p| {
                let body = std::fs::read_to_string(&p).map_err(io)?;
                let id = p
                    .file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                PromptTemplate::new(id, body)
            })
            .collect()
    }
}

/// Literal placeholder substitution; categories are joined with ", " in display-id order.
pub fn build_prompt(template: &PromptTemplate, n: usize, categories: &[String]) -> Result<String> {
    if n == 0 || categories.len() != n {
        return Err(AnnotateError::Template(format!(
            "{n} instances but {} categories",
            categories.len()
        )));
    }
    if !template.body.contains(NUM_INSTANCES) || !template.body.contains(IMG_CATEGORIES) {
        return Err(AnnotateError::Template(format!(
            "template {} lacks a placeholder",
            template.id
        )));
    }
    Ok(template
        .body
        .replace(NUM_INSTANCES, &n.to_string())
        .replace(IMG_CATEGORIES, &categories.join(", ")))
}

/// Uniform choice driven by a generator seeded from `(seed, image_key)`.
pub fn select_template<'a>(
    templates: &'a [PromptTemplate],
    image_key: &str,
    seed: u64,
) -> Result<&'a PromptTemplate> {
    if templates.is_empty() {
        return Err(AnnotateError::Config("no prompt templates".into()));
    }
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(image_key.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);
    Ok(&templates[rng.gen_range(0..templates.len())])
}
