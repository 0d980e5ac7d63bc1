use nalgebra::DMatrix;

use crate::error::{Result, SrrError};
use crate::frame::Frame;
use crate::ops::{apply_warp, apply_warp_transpose, Decimator, KernelOperator, Motion, TemporalInverse};

/// Largest pixel count (input or output) for which a dense matrix is built.
pub const EXPLICIT_PIXEL_CAP: usize = 4096;

/// A matrix-free operator that can be materialized.
#[derive(Debug, Clone, Copy)]
pub enum LinearOp<'a> {
    Decimate(&'a Decimator),
    DecimateAdjoint(&'a Decimator),
    Kernel(&'a KernelOperator),
    KernelAdjoint(&'a KernelOperator),
    Warp(&'a Motion),
    WarpTranspose(&'a Motion),
    TemporalInverse(&'a TemporalInverse),
}

impl LinearOp<'_> {
    pub fn output_dims(&self, input: (usize, usize)) -> Result<(usize, usize)> {
        match self {
            LinearOp::Decimate(d) => d.lr_dims(input),
            LinearOp::DecimateAdjoint(d) => Ok(d.hr_dims(input)),
            _ => Ok(input),
        }
    }

    pub fn apply(&self, f: &Frame) -> Result<Frame> {
        match self {
            LinearOp::Decimate(d) => d.apply(f),
            LinearOp::DecimateAdjoint(d) => d.apply_adjoint(f),
            LinearOp::Kernel(k) => k.apply(f),
            LinearOp::KernelAdjoint(k) => k.apply_adjoint(f),
            LinearOp::Warp(m) => apply_warp(m, f),
            LinearOp::WarpTranspose(m) => apply_warp_transpose(m, f),
            LinearOp::TemporalInverse(m) => m.apply(f),
        }
    }
}

/// Dense matrix of `op` acting on `input`-sized frames, one column per
/// canonical basis frame (row-major pixel order).
pub fn build_explicit_matrix(op: LinearOp<'_>, input: (usize, usize)) -> Result<DMatrix<f64>> {
    let out = op.output_dims(input)?;
    let (n_in, n_out) = (input.0 * input.1, out.0 * out.1);
    let pixels = n_in.max(n_out);
    if pixels > EXPLICIT_PIXEL_CAP {
        return Err(SrrError::SizeCapExceeded { pixels, cap: EXPLICIT_PIXEL_CAP });
    }
    let mut m = DMatrix::zeros(n_out, n_in);
    for c in 0..n_in {
        let col = op.apply(&Frame::basis(input.0, input.1, c / input.1, c % input.1))?;
        for (r, v) in col.as_slice().iter().enumerate() {
            m[(r, c)] = *v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_matrix_is_a_selection() {
        let d = Decimator::new(2).unwrap();
        let m = build_explicit_matrix(LinearOp::Decimate(&d), (4, 4)).unwrap();
        assert_eq!(m.shape(), (4, 16));
        for r in 0..4 {
            let row = m.row(r);
            assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|v| **v == 0.0).count(), 15);
        }
    }

    #[test]
    fn laplacian_matrix_is_symmetric_with_zero_row_sums() {
        let s = KernelOperator::laplacian();
        let m = build_explicit_matrix(LinearOp::Kernel(&s), (4, 4)).unwrap();
        assert_eq!(m.shape(), (16, 16));
        assert_eq!(m, m.transpose());
        for r in 0..16 {
            assert!(m.row(r).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn blur_matrix_is_doubly_block_circulant() {
        let h = KernelOperator::uniform(3).unwrap();
        let m = build_explicit_matrix(LinearOp::Kernel(&h), (8, 8)).unwrap();
        for r in 0..64 {
            assert!((m.row(r).sum() - 1.0).abs() < 1e-12);
        }
        // entry depends only on the circular offset between pixels
        for r in 0..64 {
            for c in 0..64 {
                let (ri, rj, ci, cj) = (r / 8, r % 8, c / 8, c % 8);
                let (oi, oj) = ((ri + 8 - ci) % 8, (rj + 8 - cj) % 8);
                assert_eq!(m[(r, c)], m[(oi * 8 + oj, 0)]);
            }
        }
    }

    #[test]
    fn size_cap() {
        let h = KernelOperator::uniform(3).unwrap();
        assert!(matches!(
            build_explicit_matrix(LinearOp::Kernel(&h), (65, 64)),
            Err(SrrError::SizeCapExceeded { .. })
        ));
    }
}
