//! Ledger tuning parameters and the enrolment throughput bound they imply.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::SimTime;

/// Canonical transaction size; the wire codec only supports this value.
pub const DEFAULT_TX_SIZE_BYTES: u64 = 400;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamsError {
    #[error("invalid ledger params: {0}")]
    InvalidParams(&'static str),
}

/// Parameters of the simulated proof-of-work ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LedgerParams {
    /// Maximum total serialized transaction bytes per block.
    pub block_size_bytes: u64,
    /// Serialized size of one transaction record.
    pub tx_size_bytes: u64,
    /// Average simulated minutes between mined blocks.
    pub avg_mining_time_min: f64,
    /// Leading zero bits required of a block digest. Small by default so
    /// mining cost is negligible and block timing is driven by the clock.
    pub difficulty_bits: u32,
}

impl Default for LedgerParams {
    fn default() -> Self {
        LedgerParams {
            block_size_bytes: 1_000_000,
            tx_size_bytes: DEFAULT_TX_SIZE_BYTES,
            avg_mining_time_min: 2.5,
            difficulty_bits: 8,
        }
    }
}

impl LedgerParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.tx_size_bytes == 0 {
            return Err(ParamsError::InvalidParams("tx_size_bytes must be > 0"));
        }
        if self.block_size_bytes < self.tx_size_bytes {
            return Err(ParamsError::InvalidParams(
                "block_size_bytes must be >= tx_size_bytes",
            ));
        }
        if !(self.avg_mining_time_min > 0.0) {
            return Err(ParamsError::InvalidParams("avg_mining_time_min must be > 0"));
        }
        Ok(())
    }

    /// Transactions that fit in one block.
    pub fn block_capacity(&self) -> usize {
        (self.block_size_bytes / self.tx_size_bytes) as usize
    }

    /// Simulated interval between mined blocks.
    pub fn mining_interval(&self) -> u64 {
        SimTime::from_minutes(self.avg_mining_time_min).millis()
    }
}

/// Theoretical upper bound on enrolments per simulated minute:
/// `block_size_bytes / (tx_size_bytes * avg_mining_time_min)`.
pub fn enrolment_upper_bound(params: &LedgerParams) -> Result<f64, ParamsError> {
    params.validate()?;
    Ok(params.block_size_bytes as f64 / (params.tx_size_bytes as f64 * params.avg_mining_time_min))
}
