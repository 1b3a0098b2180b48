#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad configuration, scenario, checkpoint or metrics input.
    #[error("input error: {0}")]
    Input(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Input(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(format!("i/o: {e}"))
    }
}
