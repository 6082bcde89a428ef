use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or parameters; exit status 2.
    #[error("{0}")]
    Validation(String),
    /// The computation or the output writing failed; exit status 3.
    #[error("{0}")]
    Runtime(String),
}

impl From<pedcoal::Error> for CliError {
    fn from(e: pedcoal::Error) -> Self {
        let msg = format!("{}: {e}", e.kind());
        if e.is_validation() {
            CliError::Validation(msg)
        } else {
            CliError::Runtime(msg)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(format!("json: {e}"))
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    /// One JSON object, suitable for stderr.
    pub fn to_json(&self) -> String {
        let error = match self {
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
        };
        serde_json::to_string(&ErrorReport { error, message: self.to_string(), exit_code: self.exit_code() })
            .expect("error report serializes")
    }
}
