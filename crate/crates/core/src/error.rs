use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefError {
    #[error("invalid cell reference `{input}` at position {pos}: {reason}")]
    Malformed {
        input: String,
        pos: usize,
        reason: String,
    },
    #[error("reference {reference} shifted by ({drow}, {dcol}) leaves the grid")]
    OutOfBounds {
        reference: String,
        drow: i64,
        dcol: i64,
    },
}

impl RefError {
    /// Re-anchor a position error found in a substring that starts at
    /// `offset` inside `full`.
    pub(crate) fn offset_by(self, offset: usize, full: &str) -> Self {
        match self {
            RefError::Malformed { pos, reason, .. } => RefError::Malformed {
                input: full.to_string(),
                pos: pos + offset,
                reason,
            },
            other => other,
        }
    }
}

/// Lexer and parser failures for formula text. Positions are byte offsets
/// into the formula body (after the leading `=`).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at position {pos}")]
pub struct FormulaError {
    pub pos: usize,
    pub message: String,
}

impl FormulaError {
    pub(crate) fn new(pos: usize, message: impl Into<String>) -> Self {
        FormulaError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate cell {cell}")]
    DuplicateCell { line: usize, cell: String },
    #[error("line {line}: duplicate sheet `{name}`")]
    DuplicateSheet { line: usize, name: String },
    #[error("line {line}: formula in {cell}: {source}")]
    Formula {
        line: usize,
        cell: String,
        source: FormulaError,
    },
    #[error("line {line}: {source}")]
    BadRef { line: usize, source: RefError },
    #[error("unknown sheet `{0}`")]
    UnknownSheet(String),
    #[error("invalid sheet name `{0}`")]
    BadSheetName(String),
    #[error("sheet `{0}` already exists")]
    SheetExists(String),
    #[error("{0}: substituting over a formula cell")]
    FormulaTarget(String),
    #[error("invalid literal: {0}")]
    InvalidLiteral(String),
    #[error(transparent)]
    Ref(#[from] RefError),
    #[error("{cell}: {source}")]
    FormulaParse { cell: String, source: FormulaError },
    #[error("{0} does not hold a formula")]
    NotAFormula(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestSpecError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate suite name `{name}`")]
    DuplicateSuite { line: usize, name: String },
    #[error("line {line}: duplicate test name `{name}`")]
    DuplicateTest { line: usize, name: String },
    #[error("line {line}: {source}")]
    BadRef { line: usize, source: RefError },
    #[error("{0}")]
    Ref(#[from] RefError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("anchor {0} is not an expectation target of the test")]
    AnchorNotTarget(String),
    #[error("target {target} is on a different sheet from anchor {anchor}")]
    CrossSheet { anchor: String, target: String },
    #[error("{0} is a formula cell and cannot be a capture input")]
    FormulaInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("no suite named `{0}`")]
    UnknownSuite(String),
    #[error("no test named `{0}`")]
    UnknownTest(String),
}
