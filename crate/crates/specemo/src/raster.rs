//! Small image type backing spectrogram rendering and report figures.
//!
//! Pixels are stored row-major, top row first, as f32 in [0,1] until the
//! final quantization to 8-bit PPM. Resizing uses align-corners bilinear
//! interpolation: corner pixels of the source map exactly onto corner
//! pixels of the destination at every size.

use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image dimensions must be nonzero, got {h}x{w}")]
    EmptyImage { h: usize, w: usize },
    #[error("pixel buffer length {len} does not match {h}x{w}x3")]
    BadBufferLen { len: usize, h: usize, w: usize },
    #[error("ppm i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a binary ppm (P6) file")]
    NotPpm,
    #[error("malformed ppm header")]
    BadPpmHeader,
}

/// An RGB image, f32 channels in [0,1], row-major, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(height: usize, width: usize) -> Result<Self, RasterError> {
        if height == 0 || width == 0 {
            return Err(RasterError::EmptyImage {
                h: height,
                w: width,
            });
        }
        Ok(Raster {
            height,
            width,
            data: vec![0.0; height * width * 3],
        })
    }

    pub fn from_data(height: usize, width: usize, data: Vec<f32>) -> Result<Self, RasterError> {
        if height == 0 || width == 0 {
            return Err(RasterError::EmptyImage {
                h: height,
                w: width,
            });
        }
        if data.len() != height * width * 3 {
            return Err(RasterError::BadBufferLen {
                len: data.len(),
                h: height,
                w: width,
            });
        }
        Ok(Raster {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Align-corners bilinear resize. Source corners map exactly onto
    /// destination corners; a 1-wide source axis broadcasts.
    pub fn resize_bilinear(&self, out_h: usize, out_w: usize) -> Result<Raster, RasterError> {
        let mut out = Raster::new(out_h, out_w)?;
        let sy = scale(self.height, out_h);
        let sx = scale(self.width, out_w);
        for oy in 0..out_h {
            let fy = oy as f64 * sy;
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = (fy - y0 as f64) as f32;
            for ox in 0..out_w {
                let fx = ox as f64 * sx;
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = (fx - x0 as f64) as f32;
                let p00 = self.get(y0, x0);
                let p01 = self.get(y0, x1);
                let p10 = self.get(y1, x0);
                let p11 = self.get(y1, x1);
                let mut rgb = [0.0f32; 3];
                for c in 0..3 {
                    let top = p00[c] + (p01[c] - p00[c]) * wx;
                    let bot = p10[c] + (p11[c] - p10[c]) * wx;
                    rgb[c] = top + (bot - top) * wy;
                }
                out.set(oy, ox, rgb);
            }
        }
        Ok(out)
    }

    /// Quantize to 8 bits per channel: round(clamp(v,0,1) * 255).
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    /// Serialize as binary PPM (P6, maxval 255). An optional single-line
    /// comment is embedded in the header; readers that honour PPM
    /// comments skip it.
    pub fn write_ppm<W: Write>(&self, mut w: W, comment: Option<&str>) -> Result<(), RasterError> {
        w.write_all(b"P6\n")?;
        if let Some(c) = comment {
            debug_assert!(!c.contains('\n'), "ppm comments are single-line");
            w.write_all(b"# ")?;
            w.write_all(c.as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.write_all(format!("{} {}\n255\n", self.width, self.height).as_bytes())?;
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn ppm_bytes(&self, comment: Option<&str>) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.data.len() + 64);
        self.write_ppm(&mut buf, comment)
            .expect("writing to a Vec cannot fail");
        buf
    }

    /// Parse a binary PPM produced by `write_ppm` (or any P6 with
    /// maxval 255). Comments in the header are skipped.
    pub fn from_ppm_bytes(bytes: &[u8]) -> Result<Raster, RasterError> {
        let mut pos = 0usize;
        let magic = take_token(bytes, &mut pos).ok_or(RasterError::NotPpm)?;
        if magic != b"P6" {
            return Err(RasterError::NotPpm);
        }
        let w = parse_usize(take_token(bytes, &mut pos).ok_or(RasterError::BadPpmHeader)?)?;
        let h = parse_usize(take_token(bytes, &mut pos).ok_or(RasterError::BadPpmHeader)?)?;
        let maxval = parse_usize(take_token(bytes, &mut pos).ok_or(RasterError::BadPpmHeader)?)?;
        if maxval != 255 {
            return Err(RasterError::BadPpmHeader);
        }
        // exactly one whitespace byte separates header from pixel data
        pos += 1;
        let need = h * w * 3;
        if bytes.len() < pos + need {
            return Err(RasterError::BadPpmHeader);
        }
        let data = bytes[pos..pos + need]
            .iter()
            .map(|&b| b as f32 / 255.0)
            .collect();
        Raster::from_data(h, w, data)
    }
}

/// Align-corners scale factor: (in-1)/(out-1), degenerating to 0 when the
/// output axis has a single pixel.
fn scale(inp: usize, out: usize) -> f64 {
    if out <= 1 {
        0.0
    } else {
        (inp - 1) as f64 / (out - 1) as f64
    }
}

fn take_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    while *pos < bytes.len() {
        let b = bytes[*pos];
        if b == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else if b.is_ascii_whitespace() {
            *pos += 1;
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos > start {
        Some(&bytes[start..*pos])
    } else {
        None
    }
}

fn parse_usize(tok: &[u8]) -> Result<usize, RasterError> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or(RasterError::BadPpmHeader)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn resize_maps_corners_exactly() {
        let mut img = Raster::new(3, 5).unwrap();
        img.set(0, 0, [0.1, 0.2, 0.3]);
        img.set(0, 4, [0.4, 0.5, 0.6]);
        img.set(2, 0, [0.7, 0.8, 0.9]);
        img.set(2, 4, [1.0, 0.0, 0.5]);
        for &(h, w) in &[(2usize, 2usize), (7, 9), (64, 64)] {
            let r = img.resize_bilinear(h, w).unwrap();
            assert_eq!(r.get(0, 0), img.get(0, 0));
            assert_eq!(r.get(0, w - 1), img.get(0, 4));
            assert_eq!(r.get(h - 1, 0), img.get(2, 0));
            assert_eq!(r.get(h - 1, w - 1), img.get(2, 4));
        }
    }

    #[test]
    fn resize_identity_when_same_size() {
        let mut img = Raster::new(4, 4).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                img.set(y, x, [(y * 4 + x) as f32 / 15.0; 3]);
            }
        }
        let r = img.resize_bilinear(4, 4).unwrap();
        for (a, b) in r.data().iter().zip(img.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
    }

    #[test]
    fn resize_midpoint_is_average() {
        let mut img = Raster::new(1, 2).unwrap();
        img.set(0, 0, [0.0; 3]);
        img.set(0, 1, [1.0; 3]);
        let r = img.resize_bilinear(1, 3).unwrap();
        assert_abs_diff_eq!(r.get(0, 1)[0], 0.5, epsilon = 1e-7);
    }

    #[test]
    fn ppm_round_trip_preserves_quantized_pixels() {
        let mut img = Raster::new(2, 3).unwrap();
        let mut v = 0.05f32;
        for y in 0..2 {
            for x in 0..3 {
                img.set(y, x, [v, 1.0 - v, v * 0.5]);
                v += 0.13;
            }
        }
        let bytes = img.ppm_bytes(Some("cfg:deadbeef"));
        let back = Raster::from_ppm_bytes(&bytes).unwrap();
        assert_eq!(back.height(), 2);
        assert_eq!(back.width(), 3);
        assert_eq!(back.to_bytes(), img.to_bytes());
    }

    #[test]
    fn ppm_rejects_garbage() {
        assert!(matches!(
            Raster::from_ppm_bytes(b"P5\n1 1\n255\n0"),
            Err(RasterError::NotPpm)
        ));
        assert!(Raster::from_ppm_bytes(b"P6\n2 2\n255\nxx").is_err());
    }
}
