//! Exit codes and the one-line error record written to stderr.

use std::path::Path;

use serde::Serialize;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub exit: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { kind: "usage", exit: EXIT_USAGE, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self { kind: "io", exit: EXIT_USAGE, message: format!("{}: {e}", path.display()) }
    }

    /// A single JSON object on one line.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("error record is serializable")
    }
}

impl From<spinlabel::Error> for CliError {
    fn from(e: spinlabel::Error) -> Self {
        use spinlabel::Error as E;
        let kind = match &e {
            E::Config(_) => "config",
            E::Parse(_) => "parse",
            E::Io(_) => "io",
            E::Integrator(_) | E::NotHermitian { .. } => "integrator",
            E::Stall { .. } => "stall",
            _ => "input",
        };
        let exit = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        Self { kind, exit, message: e.to_string() }
    }
}
