use serde_json::json;
use std::path::Path;

/// Failure reported on stderr as JSON.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            exit_code: 1,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit_code: 2,
            ..Self::new("usage", message)
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl From<levitodyn_core::Error> for CliError {
    fn from(e: levitodyn_core::Error) -> Self {
        use levitodyn_core::Error as E;
        let kind = match e {
            E::InvalidParameter { .. } | E::AspectOutOfDomain(_) => "invalid_parameter",
            E::TimestepTooLarge { .. } => "timestep_too_large",
            E::NonFinite { .. } => "non_finite",
            E::SeriesTooShort { .. } | E::BandTooNarrow { .. } => "insufficient_data",
            E::FitDidNotConverge { .. } | E::DegenerateFit(_) => "fit_failed",
            E::NoTorsionalMode => "no_torsional_mode",
            E::Config(_) => "config",
        };
        Self::new(kind, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new("csv", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new("json", e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("io", e.to_string())
    }
}
