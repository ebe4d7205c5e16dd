use std::fmt;

use pancap_core::annotate::{AnnotateError, LmmError};
use pancap_core::dataset::{DatasetError, Severity};
use pancap_core::eval::EvalError;
use pancap_core::panoptic::PanopticError;
use pancap_core::som::SomError;
use pancap_core::stats::StatsError;

pub const USAGE: u8 = 1;
pub const FORMAT: u8 = 2;
pub const CONSISTENCY: u8 = 3;
pub const ENDPOINT: u8 = 4;

/// An error together with the process exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::new(USAGE, anyhow::anyhow!("{msg}"))
    }

    pub fn format(msg: impl fmt::Display) -> Self {
        Failure::new(FORMAT, anyhow::anyhow!("{msg}"))
    }

    pub fn context(mut self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        self.error = self.error.context(msg);
        self
    }
}

pub trait Coded {
    fn exit_code(&self) -> u8;
}

impl Coded for PanopticError {
    fn exit_code(&self) -> u8 {
        match self {
            PanopticError::Consistency(_) | PanopticError::NotFound(_) => CONSISTENCY,
            _ => FORMAT,
        }
    }
}

impl Coded for DatasetError {
    fn exit_code(&self) -> u8 {
        if self.is_consistency() {
            CONSISTENCY
        } else {
            FORMAT
        }
    }
}

impl Coded for EvalError {
    fn exit_code(&self) -> u8 {
        match self {
            EvalError::InvalidGrid(_) => USAGE,
            EvalError::Consistency(_) => CONSISTENCY,
            EvalError::Panoptic(e) => e.exit_code(),
            EvalError::Format(_) | EvalError::Metric(_) => FORMAT,
        }
    }
}

impl Coded for SomError {
    fn exit_code(&self) -> u8 {
        match self {
            SomError::Panoptic(e) => e.exit_code(),
            SomError::Shape { .. } => CONSISTENCY,
            SomError::EmptyMask => FORMAT,
        }
    }
}

impl Coded for LmmError {
    fn exit_code(&self) -> u8 {
        ENDPOINT
    }
}

impl Coded for AnnotateError {
    fn exit_code(&self) -> u8 {
        match self {
            AnnotateError::Template(_) | AnnotateError::Config(_) => USAGE,
            AnnotateError::Lmm(e) => e.exit_code(),
            AnnotateError::Dataset(e) => e.exit_code(),
            AnnotateError::Som(e) => e.exit_code(),
            AnnotateError::Io(_) | AnnotateError::Parse(_) | AnnotateError::Image { .. } => FORMAT,
        }
    }
}

impl Coded for StatsError {
    fn exit_code(&self) -> u8 {
        match self {
            StatsError::Tagger(_) => USAGE,
            StatsError::Empty => CONSISTENCY,
            StatsError::Io { .. } => FORMAT,
        }
    }
}

pub fn severity_code(s: Option<Severity>) -> u8 {
    match s {
        Some(Severity::Format) => FORMAT,
        Some(Severity::Consistency) => CONSISTENCY,
        _ => 0,
    }
}

impl<E> From<E> for Failure
where
    E: Coded + std::error::Error + Send + Sync + 'static,
{
    fn from(e: E) -> Self {
        Failure::new(e.exit_code(), e)
    }
}
