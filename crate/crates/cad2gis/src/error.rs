//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the conversion pipeline and its stages.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed DXF group-code/value content at a specific line (1-based).
    #[error("DXF parse error at line {line}: {message}")]
    DxfParse { line: usize, message: String },

    /// Structural DXF problem not tied to a single line (e.g. no ENTITIES
    /// section, or binary input).
    #[error("DXF structure error: {0}")]
    DxfStructure(String),

    /// Conversion profile failed validation; the message names the field.
    #[error("profile validation error: {0}")]
    ProfileValidation(String),

    /// Bad control-point CSV content.
    #[error("control point file error at line {line}: {message}")]
    ControlPoints { line: usize, message: String },

    /// Transform estimation failed (too few pairs, degenerate configuration).
    #[error("transform estimation error: {0}")]
    Estimation(String),

    /// Invalid transform application (e.g. double georeferencing).
    #[error("transform error: {0}")]
    Transform(String),

    /// Output serialization refused or failed.
    #[error("export error: {0}")]
    Export(String),

    /// Degenerate geometry where a valid shape was required.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stage label for operator-facing diagnostics.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::DxfParse { .. } | Error::DxfStructure(_) => "parse",
            Error::ProfileValidation(_) => "profile",
            Error::ControlPoints { .. } => "control-points",
            Error::Estimation(_) => "georeferencing",
            Error::Transform(_) => "georeferencing",
            Error::Export(_) => "export",
            Error::Geometry(_) => "geometry",
            Error::Io(_) => "io",
        }
    }
}
