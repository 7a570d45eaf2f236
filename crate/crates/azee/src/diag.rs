//! Diagnostics shared by grammar validation and expression checking.

use std::fmt;

use crate::expr::NodePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Warning => write!(f, "warning"),
            Severity::Error => write!(f, "error"),
        }
    }
}

/// Where a diagnostic points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Site {
    /// A place inside a grammar rule. `ord` is the pre-order position of the
    /// offending node within the rule body (0 for rule-level findings) and
    /// keeps reporting order stable. `line` is 0 for grammars built in code.
    Rule { header: String, line: usize, ord: usize },
    /// A node of an expression tree.
    Node { path: NodePath },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub site: Site,
}

impl Diagnostic {
    pub fn rule_error(header: &str, line: usize, ord: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            site: Site::Rule { header: header.to_owned(), line, ord },
        }
    }

    pub fn rule_warning(header: &str, line: usize, ord: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
            site: Site::Rule { header: header.to_owned(), line, ord },
        }
    }

    pub fn node_error(path: NodePath, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into(), site: Site::Node { path } }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.site {
            Site::Rule { header, line: 0, .. } => {
                write!(f, "{}: {} (rule `{}`)", self.severity, self.message, header)
            }
            Site::Rule { header, line, .. } => {
                write!(f, "{}: {} (rule `{}`, line {})", self.severity, self.message, header, line)
            }
            Site::Node { path } => {
                write!(f, "{}: {} (at {})", self.severity, self.message, path)
            }
        }
    }
}
