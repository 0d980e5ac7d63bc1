use std::ops::{Add, Sub};

use crate::error::{mismatch, Result, SrrError};

/// A rectangular grid of real intensity samples stored row-major.
///
/// Intensities nominally live on the 0..255 scale, but intermediate
/// estimates are unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Frame {
    /// Builds a frame from row-major samples; all samples must be finite.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(SrrError::InvalidParameter(format!(
                "frame dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(SrrError::DimensionMismatch(format!(
                "{height}x{width} frame needs {} samples, got {}",
                height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(SrrError::InvalidParameter("frame samples must be finite".into()));
        }
        Ok(Self { height, width, data })
    }

    pub(crate) fn from_vec_unchecked(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "frame dimensions must be positive");
        Self { height, width, data: vec![value; height * width] }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "frame dimensions must be positive");
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self { height, width, data }
    }

    /// Unit impulse at `(row, col)`.
    pub fn basis(height: usize, width: usize, row: usize, col: usize) -> Self {
        let mut f = Self::zeros(height, width);
        f.data[row * width + col] = 1.0;
        f
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Sample with circulant wrap-around on both axes.
    #[inline]
    pub fn get_wrapped(&self, row: isize, col: isize) -> f64 {
        let r = row.rem_euclid(self.height as isize) as usize;
        let c = col.rem_euclid(self.width as isize) as usize;
        self.data[r * self.width + c]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn ensure_dims(&self, what: &str, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(mismatch(what, dims, self.dims()));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Frame) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute difference between two same-sized frames.
    pub fn max_abs_diff(&self, other: &Frame) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Frame {
        Frame::from_vec_unchecked(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Frame {
        self.map(|v| v * factor)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Frame) {
        debug_assert_eq!(self.dims(), x.dims());
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    /// Copies the `height`x`width` window whose top-left corner is `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Frame> {
        if row + height > self.height || col + width > self.width || height == 0 || width == 0 {
            return Err(SrrError::DimensionMismatch(format!(
                "crop {height}x{width} at ({row},{col}) exceeds {}x{} frame",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width);
        for i in row..row + height {
            data.extend_from_slice(&self.data[i * self.width + col..i * self.width + col + width]);
        }
        Ok(Frame::from_vec_unchecked(height, width, data))
    }
}

impl Add for &Frame {
    type Output = Frame;

    fn add(self, rhs: &Frame) -> Frame {
        assert_eq!(self.dims(), rhs.dims(), "frame dimensions differ");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Frame::from_vec_unchecked(self.height, self.width, data)
    }
}

impl Sub for &Frame {
    type Output = Frame;

    fn sub(self, rhs: &Frame) -> Frame {
        assert_eq!(self.dims(), rhs.dims(), "frame dimensions differ");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Frame::from_vec_unchecked(self.height, self.width, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_non_finite() {
        assert!(Frame::new(0, 3, vec![]).is_err());
        assert!(Frame::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Frame::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Frame::new(1, 2, vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn wrapped_access() {
        let f = Frame::from_fn(3, 4, |i, j| (i * 4 + j) as f64);
        assert_eq!(f.get_wrapped(-1, 0), 8.0);
        assert_eq!(f.get_wrapped(3, 5), 1.0);
    }

    #[test]
    fn crop_bounds() {
        let f = Frame::from_fn(4, 4, |i, j| (i * 4 + j) as f64);
        let c = f.crop(1, 2, 2, 2).unwrap();
        assert_eq!(c.as_slice(), &[6.0, 7.0, 10.0, 11.0]);
        assert!(f.crop(3, 3, 2, 2).is_err());
    }
}
