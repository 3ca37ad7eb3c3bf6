use super::GrayImage;
use crate::error::{Error, Result};

/// Decodes a binary (P5) or ASCII (P2) PGM file with maxval at most 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let magic = cursor.token().ok_or_else(|| Error::Format("empty PGM".into()))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(Error::Format(format!(
                "bad PGM magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cursor.header_number("width")?;
    let height = cursor.header_number("height")?;
    let maxval = cursor.header_number("maxval")?;
    if maxval == 0 {
        return Err(Error::Format("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedDepth(maxval as u32));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;

    let pixels = if binary {
        // exactly one whitespace byte separates the header from the raster
        match cursor.bytes.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err(Error::Format("missing whitespace after maxval".into())),
        }
        let body = &cursor.bytes[cursor.pos..];
        if body.len() < count {
            return Err(Error::Truncated(format!(
                "expected {count} pixel bytes, found {}",
                body.len()
            )));
        }
        let raw = &body[..count];
        if let Some(&bad) = raw.iter().find(|&&p| p as usize > maxval) {
            return Err(Error::Format(format!("sample {bad} exceeds maxval {maxval}")));
        }
        raw.to_vec()
    } else {
        let mut pixels = Vec::with_capacity(count);
        for i in 0..count {
            let token = cursor
                .token()
                .ok_or_else(|| Error::Truncated(format!("expected {count} ASCII samples, found {i}")))?;
            let value = parse_number(token)
                .filter(|&v| v <= maxval)
                .ok_or_else(|| Error::Format(format!("bad sample {:?}", String::from_utf8_lossy(token))))?;
            pixels.push(value as u8);
        }
        pixels
    };
    GrayImage::new(width, height, pixels)
}

/// Encodes an image as binary P5 with maxval 255.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_number(&mut self, field: &str) -> Result<usize> {
        let token = self
            .token()
            .ok_or_else(|| Error::Format(format!("PGM header ends before {field}")))?;
        parse_number(token)
            .ok_or_else(|| Error::Format(format!("bad PGM {field} {:?}", String::from_utf8_lossy(token))))
    }
}

fn parse_number(token: &[u8]) -> Option<usize> {
    if token.is_empty() || !token.iter().all(u8::is_ascii_digit) || token.len() > 9 {
        return None;
    }
    std::str::from_utf8(token).ok()?.parse().ok()
}
