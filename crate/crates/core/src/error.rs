use thiserror::Error;

/// Errors produced by the reconstruction toolkit.
#[derive(Debug, Error)]
pub enum SrrError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel {kernel_rows}x{kernel_cols} does not fit a {frame_rows}x{frame_cols} frame")]
    KernelTooLarge {
        kernel_rows: usize,
        kernel_cols: usize,
        frame_rows: usize,
        frame_cols: usize,
    },

    #[error("explicit matrix of {pixels} pixels exceeds the cap of {cap}")]
    SizeCapExceeded { pixels: usize, cap: usize },

    #[error("non-finite estimate at frame {frame}, inner iteration {iteration}")]
    Diverged { frame: usize, iteration: usize },

    #[error("source image {source_rows}x{source_cols} too small for a {window_rows}x{window_cols} window walk")]
    SourceTooSmall {
        source_rows: usize,
        source_cols: usize,
        window_rows: usize,
        window_cols: usize,
    },

    #[error("insufficient source images: need at least {needed}, got {got}")]
    InsufficientSources { needed: usize, got: usize },

    #[error("malformed container: {0}")]
    Format(String),

    #[error("image decode error: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SrrError>;

pub(crate) fn mismatch(what: &str, expected: (usize, usize), got: (usize, usize)) -> SrrError {
    SrrError::DimensionMismatch(format!(
        "{what}: expected {}x{}, got {}x{}",
        expected.0, expected.1, got.0, got.1
    ))
}
