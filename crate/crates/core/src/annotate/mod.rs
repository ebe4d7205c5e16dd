//! Caption generation: mark rendering, prompt construction, multimodal endpoint calls with
//! logging and replay, reply parsing, hard matching and caption assembly.

mod client;
mod filter;
mod parse;
mod pipeline;
mod template;

pub use client::{
    BudgetClient, CassetteEntry, EndpointConfig, HttpClient, LmmClient, LmmError, LmmReply,
    LmmRequest, LoggingClient, ReplayClient, RetryClient, Sleeper, Usage,
};
pub use filter::{hard_match, CategoryComparator, FilterVerdict, FilterViolation};
pub use parse::{
    format_response, parse_response, EntryIssue, Interaction, IssueKind, ObjectEntry,
    ParsedResponse,
};
pub use pipeline::{
    assemble_captions, run_annotate, AnnotateConfig, AnnotateSummary, CaptionedSegment, Rephraser,
    DEFAULT_REPHRASE_PROMPT,
};
pub use template::{build_prompt, select_template, PromptTemplate, IMG_CATEGORIES, NUM_INSTANCES};

use crate::dataset::DatasetError;
use crate::som::SomError;

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("template error: {0}")]
    Template(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Lmm(#[from] LmmError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Som(#[from] SomError),
    #[error("image {image}: {message}")]
    Image { image: u64, message: String },
}

pub type Result<T> = std::result::Result<T, AnnotateError>;
