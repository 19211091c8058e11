use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ASSERTION: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const RUNTIME: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: config, flags or parameters outside a model's domain.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Runtime(_) | CliError::Io { .. } => exit::RUNTIME,
        }
    }
}

impl From<bimodal_core::Error> for CliError {
    fn from(e: bimodal_core::Error) -> Self {
        use bimodal_core::Error as E;
        match e {
            E::NormDrift(_) | E::NotHermitian(_) | E::SpaceMismatch | E::IndexOutOfRange { .. } => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}
