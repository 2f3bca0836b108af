use std::fmt;

use aerialnet::error::Error;

/// Every way a command can stop early, each tied to one exit code.
#[derive(Debug)]
pub enum Failure {
    /// Malformed scenario or plan file.
    Parse(String),
    /// Well-formed input violating one or more invariants.
    Invalid(Vec<String>),
    /// More than a tenth of the sweep points failed.
    Sweep { failed: usize, total: usize },
    /// At least one analytic value left the simulation tolerance.
    Tolerance(Vec<String>),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Invalid(_) => 3,
            Failure::Sweep { .. } => 4,
            Failure::Tolerance(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Parse(m) => write!(f, "parse error: {m}"),
            Failure::Invalid(issues) => {
                write!(f, "invalid input ({} issue{}):", issues.len(), if issues.len() == 1 { "" } else { "s" })?;
                for i in issues {
                    write!(f, "\n  {i}")?;
                }
                Ok(())
            }
            Failure::Sweep { failed, total } => write!(f, "{failed} of {total} sweep points failed"),
            Failure::Tolerance(lines) => {
                write!(f, "tolerance breached:")?;
                for l in lines {
                    write!(f, "\n  {l}")?;
                }
                Ok(())
            }
            Failure::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(issues) => Failure::Invalid(issues.iter().map(ToString::to_string).collect()),
            Error::PreconditionViolated(m) => Failure::Invalid(vec![m]),
            Error::Parse(m) => Failure::Parse(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o: {e}"))
    }
}

/// `line:column` (both 1-based) of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let head = &text[..offset.min(text.len())];
    let line = head.matches('\n').count() + 1;
    let col = head.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Decodes a TOML document, reporting failures with their position.
pub fn decode<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, Failure> {
    toml::from_str(text).map_err(|e| {
        let at = e
            .span()
            .map(|s| {
                let (l, c) = line_col(text, s.start);
                format!(" at line {l}, column {c}")
            })
            .unwrap_or_default();
        Failure::Parse(format!("{origin}{at}: {}", e.message().trim_end()))
    })
}
