use std::fmt;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const FORMAT: i32 = 2;
    pub const STRUCTURE: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: exit::USAGE,
            message: message.into(),
        }
    }

    pub fn format(message: impl Into<String>) -> Self {
        CliError {
            code: exit::FORMAT,
            message: message.into(),
        }
    }

    /// Attaches the offending file to the message.
    pub fn in_file(mut self, path: &str) -> Self {
        self.message = format!("{path}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<synattn::Error> for CliError {
    fn from(e: synattn::Error) -> Self {
        use synattn::Error as E;
        let code = match &e {
            E::Format { .. } | E::Json(_) => exit::FORMAT,
            E::Structure(_)
            | E::Dimension(_)
            | E::DegenerateRow { .. }
            | E::IndexOutOfRange { .. }
            | E::StaleCache(_) => exit::STRUCTURE,
            E::NonFinite(_) => exit::NUMERICAL,
            E::Config(_) | E::Io(_) => exit::USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
