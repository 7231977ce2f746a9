//! Binary 8-bit PGM (`P5`) reading and writing.

use std::fs;
use std::path::Path;

use super::{ExperimentError, GrayImage, Result};

fn bad(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Image(msg.into())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(bad("truncated PGM header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| bad("non-ASCII PGM header"))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse().map_err(|_| bad(format!("invalid {what} '{tok}' in PGM header")))
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token()?;
    if magic != "P5" {
        return Err(bad(format!("expected binary PGM magic 'P5', found '{magic}'")));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(bad(format!("only 8-bit PGM is supported (maxval {maxval})")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = h.pos + 1;
    let len = width * height;
    if bytes.len() < start + len {
        return Err(bad(format!("PGM raster truncated: need {len} bytes, have {}", bytes.len().saturating_sub(start))));
    }
    let mut pixels = bytes[start..start + len].to_vec();
    if maxval != 255 {
        for p in &mut pixels {
            *p = ((u32::from(*p) * 255 + maxval as u32 / 2) / maxval as u32).min(255) as u8;
        }
    }
    GrayImage::new(width, height, pixels)
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes).map_err(|e| match e {
        ExperimentError::Image(msg) => ExperimentError::Image(format!("{}: {msg}", path.display())),
        other => other,
    })
}
