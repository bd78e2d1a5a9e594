//! Exit-code discipline: 0 ok, 1 usage, 2 missing upstream artifact,
//! 3 runtime failure.

use std::fmt;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    /// An upstream stage's artifacts are absent; names the stage to run.
    MissingStage(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::MissingStage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    pub fn missing(stage: &str, detail: impl fmt::Display) -> Failure {
        Failure::MissingStage(format!(
            "missing output of the `{stage}` stage: {detail}; run `postmortem {stage}` first"
        ))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage error: {msg}"),
            Failure::MissingStage(msg) => write!(f, "{msg}"),
            Failure::Runtime(err) => write!(f, "{err:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Failure {
        Failure::Runtime(err)
    }
}

impl From<postmortem::Error> for Failure {
    fn from(err: postmortem::Error) -> Failure {
        Failure::Runtime(anyhow::Error::new(err))
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Failure {
        Failure::Runtime(anyhow::Error::new(err))
    }
}

impl From<csv::Error> for Failure {
    fn from(err: csv::Error) -> Failure {
        Failure::Runtime(anyhow::Error::new(err))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(err: serde_json::Error) -> Failure {
        Failure::Runtime(anyhow::Error::new(err))
    }
}
