use thiserror::Error;

/// Errors shared across the whole engine.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("precision budget exhausted at {bits} bits (cap {cap})")]
    PrecisionExhausted { bits: u64, cap: u64 },
    #[error("input collapsed to a rational after {digits} digits")]
    RationalInput { digits: usize },
    #[error("convergent table too short: needs coverage of {needed}, has {available} rows")]
    TableTooShort { needed: String, available: usize },
    #[error("invalid Ostrowski digits: {0}")]
    InvalidDigits(String),
    #[error("no quotient extension reaches the requested residue class")]
    Unreachable,
    #[error("invalid congruence target: {0}")]
    InvalidTarget(String),
    #[error("bad function parameters: {0}")]
    BadParams(String),
    #[error("evaluation at the singular point")]
    AtSingularPoint,
    #[error("b = {b} out of range (max {max})")]
    BadRange { b: String, max: String },
    #[error("block count b = {b} outside the validity window a_k/(2 s1 s2) = {window}")]
    OutOfWindow { b: String, window: String },
    #[error("epsilon values must lie strictly in (0,1)")]
    BadEpsilon,
    #[error("variation is infinite for functions with a logarithmic singularity")]
    InfiniteVariation,
    #[error("singular window degenerated to zero width")]
    DegenerateWindow,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

/// Adaptive-precision policy: enclosures start at `start` bits and double on
/// demand until `cap`, at which point the computation reports
/// `PrecisionExhausted` instead of looping.
#[derive(Clone, Copy, Debug)]
pub struct PrecisionPolicy {
    pub start: u32,
    pub cap: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            start: 128,
            cap: 1 << 20,
        }
    }
}

impl PrecisionPolicy {
    pub fn with_cap(cap: u32) -> Self {
        PrecisionPolicy { start: 128, cap }
    }

    /// Next precision after `bits`, or an error once the cap is exceeded.
    pub fn bump(&self, bits: u32) -> Result<u32> {
        if bits >= self.cap {
            Err(CoreError::PrecisionExhausted {
                bits: bits as u64,
                cap: self.cap as u64,
            })
        } else {
            Ok((bits.saturating_mul(2)).min(self.cap))
        }
    }
}
