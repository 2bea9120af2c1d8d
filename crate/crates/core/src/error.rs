use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// Every variant names the component that failed so CLI messages can point
/// at the right subsystem.
#[derive(Debug, Error)]
pub enum MilError {
    #[error("{component}: invalid input: {message}")]
    Input {
        component: &'static str,
        message: String,
    },
    #[error("{component}: numerical failure: {message}")]
    Numerical {
        component: &'static str,
        message: String,
    },
    #[error("{component}: {source}")]
    Io {
        component: &'static str,
        #[source]
        source: std::io::Error,
    },
}

impl MilError {
    pub fn input(component: &'static str, message: impl Into<String>) -> Self {
        MilError::Input {
            component,
            message: message.into(),
        }
    }

    pub fn numerical(component: &'static str, message: impl Into<String>) -> Self {
        MilError::Numerical {
            component,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            MilError::Input { .. } | MilError::Io { .. } => 1,
            MilError::Numerical { .. } => 2,
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(self, MilError::Input { .. } | MilError::Io { .. })
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, MilError::Numerical { .. })
    }
}

pub type Result<T, E = MilError> = std::result::Result<T, E>;
