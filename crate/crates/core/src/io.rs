//! Frame containers, source-image loading and PGM export.
//!
//! Container layout: the 4-byte magic `SRRF`, then version, height, width
//! and frame count as little-endian `u32`, then every frame's samples as
//! row-major little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, SrrError};
use crate::frame::Frame;

pub const MAGIC: &[u8; 4] = b"SRRF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

pub fn encode_frames(frames: &[Frame], mut out: impl Write) -> Result<()> {
    let first = frames.first().ok_or_else(|| SrrError::Format("cannot store an empty sequence".into()))?;
    let (h, w) = first.dims();
    for f in frames {
        f.ensure_dims("container frame", (h, w))?;
    }
    let as_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| SrrError::Format(format!("{what} {v} exceeds the container range")))
    };
    out.write_all(MAGIC)?;
    for v in [VERSION, as_u32(h, "height")?, as_u32(w, "width")?, as_u32(frames.len(), "frame count")?] {
        out.write_all(&v.to_le_bytes())?;
    }
    for f in frames {
        for v in f.as_slice() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn decode_frames(mut input: impl Read) -> Result<Vec<Frame>> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| SrrError::Format("truncated container header".into()))?;
    if &header[..4] != MAGIC {
        return Err(SrrError::Format("bad container magic".into()));
    }
    let field = |k: usize| u32::from_le_bytes(header[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize;
    let (version, h, w, count) = (field(0), field(1), field(2), field(3));
    if version != VERSION as usize {
        return Err(SrrError::Format(format!("unsupported container version {version}")));
    }
    if h == 0 || w == 0 || count == 0 {
        return Err(SrrError::Format(format!("degenerate container {h}x{w}x{count}")));
    }
    let mut buf = vec![0u8; h * w * 8];
    let mut frames = Vec::with_capacity(count);
    for t in 0..count {
        input
            .read_exact(&mut buf)
            .map_err(|_| SrrError::Format(format!("container truncated in frame {t}")))?;
        let data = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        frames.push(Frame::new(h, w, data)?);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(SrrError::Format("trailing bytes after the last frame".into()));
    }
    Ok(frames)
}

pub fn write_frames(path: impl AsRef<Path>, frames: &[Frame]) -> Result<()> {
    encode_frames(frames, BufWriter::new(File::create(path)?))
}

pub fn read_frames(path: impl AsRef<Path>) -> Result<Vec<Frame>> {
    decode_frames(BufReader::new(File::open(path)?))
}

/// Loads any supported raster image as 0-255 luma.
pub fn load_image(path: impl AsRef<Path>) -> Result<Frame> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    Frame::new(h as usize, w as usize, img.into_raw().into_iter().map(f64::from).collect())
}

/// 8-bit binary PGM, values rounded and clamped to 0-255.
pub fn write_pgm(path: impl AsRef<Path>, frame: &Frame) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", frame.width(), frame.height())?;
    let bytes: Vec<u8> = frame.as_slice().iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq() -> Vec<Frame> {
        (0..3).map(|t| Frame::from_fn(4, 5, |i, j| (i * 5 + j) as f64 * 1.5 - t as f64 * 300.25)).collect()
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut bytes = Vec::new();
        encode_frames(&seq(), &mut bytes).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 20 * 8);
        assert_eq!(&bytes[..4], b"SRRF");
        assert_eq!(decode_frames(bytes.as_slice()).unwrap(), seq());
    }

    #[test]
    fn rejects_malformed_input() {
        let mut bytes = Vec::new();
        encode_frames(&seq(), &mut bytes).unwrap();
        assert!(decode_frames(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_frames(&bytes[..10]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_frames(extra.as_slice()).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_frames(bad.as_slice()).is_err());
        assert!(encode_frames(&[], Vec::new()).is_err());
        assert!(encode_frames(&[Frame::zeros(2, 2), Frame::zeros(2, 3)], Vec::new()).is_err());
    }

    #[test]
    fn pgm_clamps() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        write_pgm(&p, &Frame::new(1, 3, vec![-4.0, 127.6, 300.0]).unwrap()).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 128, 255]);
        assert_eq!(load_image(&p).unwrap().as_slice(), &[0.0, 128.0, 255.0]);
    }
}
