use std::fmt;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub const USAGE: i32 = 1;
pub const DATA: i32 = 2;
pub const NUMERIC: i32 = 3;

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { code: DATA, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<attrex::Error> for Failure {
    fn from(e: attrex::Error) -> Self {
        let code = match e {
            attrex::Error::Config(_) => USAGE,
            attrex::Error::NonFiniteLoss { .. } => NUMERIC,
            _ => DATA,
        };
        Failure { code, message: e.to_string() }
    }
}
