//! Closed-form per-iteration operation and memory counts of the four SRR
//! algorithms. Operator sizes are nonzero counts of the full matrices, so a
//! 3x3 mask on an MxM frame has `9 M^2` entries.

use crate::error::{Result, SrrError};
use crate::srr::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModelInput {
    /// `M^2`, the HR pixel count.
    pub pixels: u64,
    pub h_nnz: u64,
    pub s_nnz: u64,
    pub q_nnz: u64,
    pub m_nnz: u64,
}

impl CostModelInput {
    /// Square `side x side` frames with per-pixel mask sizes.
    pub fn from_masks(side: u64, h_taps: u64, s_taps: u64, q_taps: u64, m_taps: u64) -> Self {
        let pixels = side * side;
        Self { pixels, h_nnz: h_taps * pixels, s_nnz: s_taps * pixels, q_nnz: q_taps * pixels, m_nnz: m_taps * pixels }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pixels", self.pixels),
            ("|H|", self.h_nnz),
            ("|S|", self.s_nnz),
            ("|Q|", self.q_nnz),
            ("|M|", self.m_nnz),
        ];
        match fields.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(SrrError::InvalidParameter(format!("{name} must be positive"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmCost {
    pub algorithm: Algorithm,
    pub operations: u64,
    pub memory: f64,
}

/// The algorithms with a tabulated cost.
pub const COSTED: [Algorithm; 4] = [Algorithm::Lms, Algorithm::Rlms, Algorithm::TsrLms, Algorithm::LtsrLms];

fn uncosted(alg: Algorithm) -> SrrError {
    SrrError::InvalidParameter(format!("no cost model for {alg}"))
}

/// Multiply-adds, surplus additions and resamplings per inner iteration.
pub fn operation_count(alg: Algorithm, c: &CostModelInput) -> Result<u64> {
    c.validate()?;
    let m2 = c.pixels;
    Ok(match alg {
        Algorithm::Lms => 3 * c.h_nnz + 2 * m2,
        Algorithm::Rlms => 3 * c.h_nnz + 2 * c.s_nnz + 2 * m2,
        Algorithm::TsrLms => 3 * c.h_nnz + 2 * c.s_nnz + 2 * c.q_nnz + c.m_nnz + 2 * m2,
        Algorithm::LtsrLms => 3 * c.h_nnz + 2 * c.s_nnz + 2 * c.q_nnz + 3 * m2,
        other => return Err(uncosted(other)),
    })
}

/// Stored values: image buffers plus mask coefficients (`|X| / M^2` each).
pub fn memory_count(alg: Algorithm, c: &CostModelInput) -> Result<f64> {
    c.validate()?;
    let m2 = c.pixels as f64;
    let per = |n: u64| n as f64 / m2;
    Ok(match alg {
        Algorithm::Lms => m2 + per(c.h_nnz),
        Algorithm::Rlms => m2 + per(c.h_nnz) + per(c.s_nnz),
        Algorithm::TsrLms => 2.0 * m2 + per(c.h_nnz) + per(c.s_nnz) + per(c.m_nnz) + per(c.q_nnz),
        Algorithm::LtsrLms => 2.0 * m2 + per(c.h_nnz) + per(c.s_nnz) + per(c.q_nnz),
        other => return Err(uncosted(other)),
    })
}

pub fn cost_model(c: &CostModelInput) -> Result<Vec<AlgorithmCost>> {
    COSTED
        .iter()
        .map(|&algorithm| {
            Ok(AlgorithmCost {
                algorithm,
                operations: operation_count(algorithm, c)?,
                memory: memory_count(algorithm, c)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_by_three_masks_at_256() {
        let c = CostModelInput::from_masks(256, 9, 9, 9, 9);
        assert_eq!(operation_count(Algorithm::Lms, &c).unwrap(), 1_900_544);
        assert_eq!(memory_count(Algorithm::LtsrLms, &c).unwrap(), 2.0 * 65536.0 + 27.0);
        let diff = operation_count(Algorithm::Rlms, &c).unwrap() - operation_count(Algorithm::Lms, &c).unwrap();
        assert_eq!(diff, 2 * c.s_nnz);
    }

    #[test]
    fn rejects_zero_counts_and_untabulated_algorithms() {
        let mut c = CostModelInput::from_masks(8, 9, 5, 5, 1);
        assert!(operation_count(Algorithm::LeastPerturbation, &c).is_err());
        c.q_nnz = 0;
        assert!(cost_model(&c).is_err());
    }
}
