//! Attention-score cost of uniform versus adaptive sequences.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostEstimate {
    pub resolution: u64,
    pub patch: u64,
    /// `(Z/P)²` tokens.
    pub uniform_length: u64,
    /// `(Z/P)⁴` attention entries.
    pub uniform_entries: u128,
    pub adaptive_length: Option<u64>,
    pub adaptive_entries: Option<u128>,
    /// `uniform_entries / adaptive_entries`.
    pub reduction: Option<f64>,
}

pub fn attention_cost(resolution: u64, patch: u64, adaptive_len: Option<u64>) -> Result<CostEstimate> {
    if patch == 0 || resolution == 0 || !resolution.is_multiple_of(patch) {
        return Err(Error::Config(format!(
            "patch {patch} must divide resolution {resolution}"
        )));
    }
    if adaptive_len == Some(0) {
        return Err(Error::Config("adaptive sequence length must be >= 1".into()));
    }
    let per_side = (resolution / patch) as u128;
    let uniform_length = per_side * per_side;
    let uniform_entries = uniform_length * uniform_length;
    let adaptive_entries = adaptive_len.map(|n| n as u128 * n as u128);
    Ok(CostEstimate {
        resolution,
        patch,
        uniform_length: uniform_length as u64,
        uniform_entries,
        adaptive_length: adaptive_len,
        adaptive_entries,
        reduction: adaptive_entries.map(|a| uniform_entries as f64 / a as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_512_8() {
        let c = attention_cost(512, 8, None).unwrap();
        assert_eq!(c.uniform_length, 4096);
        assert_eq!(c.uniform_entries, 16_777_216);
        assert_eq!(c.reduction, None);
    }

    #[test]
    fn single_patch() {
        let c = attention_cost(64, 64, None).unwrap();
        assert_eq!((c.uniform_length, c.uniform_entries), (1, 1));
    }

    #[test]
    fn reduction_ratio() {
        let c = attention_cost(512, 8, Some(424)).unwrap();
        assert_eq!(c.adaptive_entries, Some(179_776));
        let expect = (4096.0f64 / 424.0).powi(2);
        assert!((c.reduction.unwrap() - expect).abs() < 1e-9);
        assert!((c.reduction.unwrap() - 93.3).abs() < 0.05);
    }

    #[test]
    fn adaptive_equal_to_uniform_is_neutral() {
        let c = attention_cost(1024, 16, Some(4096)).unwrap();
        assert_eq!(c.adaptive_entries, Some(c.uniform_entries));
        assert_eq!(c.reduction, Some(1.0));
    }

    #[test]
    fn rejects_non_divisor() {
        assert!(attention_cost(512, 7, None).is_err());
        assert!(attention_cost(512, 0, None).is_err());
        assert!(attention_cost(512, 8, Some(0)).is_err());
    }
}
