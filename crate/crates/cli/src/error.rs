use sosdecomp::decomp::DecompError;
use sosdecomp::hjb::HjbError;

/// Failures mapped onto the process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 2. `reason` is a stable machine-readable tag.
    #[error("{reason}: {detail}")]
    Validation { reason: &'static str, detail: String },
    /// Exit code 3.
    #[error("{reason}: {detail}")]
    Solver { reason: &'static str, detail: String },
    /// Exit code 4.
    #[error("NotConverged: {0}")]
    NotConverged(String),
    /// Exit code 1.
    #[error("Io: {0}")]
    Io(String),
}

impl CliError {
    pub fn validation(reason: &'static str, detail: String) -> Self {
        CliError::Validation { reason, detail }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation { .. } => 2,
            CliError::Solver { .. } => 3,
            CliError::NotConverged(_) => 4,
        }
    }

    pub fn from_hjb(e: HjbError) -> Self {
        let reason = match &e {
            HjbError::NoiseAssumptionViolated(_) => "NoiseAssumptionViolated",
            HjbError::Dimension(_) => "Dimension",
            HjbError::NonPositiveLambda(_) => "NonPositiveLambda",
            HjbError::ControlPenaltyNotPd => "ControlPenaltyNotPd",
            HjbError::NoiseCovarianceNotPsd(_) => "NoiseCovarianceNotPsd",
            HjbError::NotSymmetric(_) => "NotSymmetric",
            HjbError::EmptyBox { .. } => "EmptyBox",
            HjbError::MissingBoundaryCost(_) => "MissingBoundaryCost",
            HjbError::NonPositiveDesirability(_) => "NonPositiveDesirability",
            HjbError::StateDependentNoise => "StateDependentNoise",
            HjbError::FitFailed => "FitFailed",
        };
        CliError::validation(reason, e.to_string())
    }

    pub fn from_decomp(e: DecompError) -> Self {
        match e {
            DecompError::Hjb(h) => Self::from_hjb(h),
            e @ DecompError::Subproblem { .. } => CliError::Solver {
                reason: "SubproblemFailed",
                detail: e.to_string(),
            },
            e @ DecompError::TimeBudget { .. } => CliError::Solver {
                reason: "TimeBudget",
                detail: e.to_string(),
            },
            e @ DecompError::Sos(_) => CliError::Solver {
                reason: "Compile",
                detail: e.to_string(),
            },
            e => CliError::validation("Partition", e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
