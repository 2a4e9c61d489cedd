use std::fmt;
use std::path::PathBuf;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Brute-force enumeration was asked to walk more subsets than allowed.
    #[error("{what} needs 2^{items} subsets, above the enumeration limit of 2^{limit}; use the decomposed evaluator")]
    EnumerationLimit {
        what: &'static str,
        items: usize,
        limit: usize,
    },

    #[error("caching gain is undefined: the {0} file-cap sum is zero")]
    UndefinedGain(&'static str),

    #[error("scenario is invalid:\n{}", ViolationList(.0))]
    Invalid(Vec<Violation>),

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("plot rendering failed: {0}")]
    Plot(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}
