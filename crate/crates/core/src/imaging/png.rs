use std::io::Cursor;

use png::{BitDepth, ColorType, Decoder, Transformations};

use super::GrayImage;
use crate::error::{Error, Result};

const SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Decodes an 8-bit non-interlaced grayscale or RGB PNG to luminance.
///
/// RGB pixels are converted with `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn decode_png_gray(bytes: &[u8]) -> Result<GrayImage> {
    verify_chunks(bytes)?;

    let mut decoder = Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(map_decode_error)?;
    let (width, height, color, depth, interlaced) = {
        let info = reader.info();
        (
            info.width as usize,
            info.height as usize,
            info.color_type,
            info.bit_depth,
            info.interlaced,
        )
    };
    if interlaced {
        return Err(Error::UnsupportedFormat("interlaced PNG".into()));
    }
    if depth != BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!("PNG bit depth {depth:?}")));
    }
    if !matches!(color, ColorType::Grayscale | ColorType::Rgb) {
        return Err(Error::UnsupportedFormat(format!("PNG color type {color:?}")));
    }

    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedFormat("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(map_decode_error)?;
    let stride = frame.line_size;

    let mut pixels = Vec::with_capacity(width * height);
    for row in buf.chunks(stride).take(height) {
        match color {
            ColorType::Grayscale => pixels.extend_from_slice(&row[..width]),
            _ => pixels.extend(
                row[..3 * width]
                    .chunks_exact(3)
                    .map(|rgb| luminance(rgb[0], rgb[1], rgb[2])),
            ),
        }
    }
    GrayImage::new(width, height, pixels)
}

pub(crate) fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Walks the chunk list and checks every CRC before handing off to the decoder.
fn verify_chunks(bytes: &[u8]) -> Result<()> {
    if bytes.len() < SIGNATURE.len() || bytes[..8] != SIGNATURE {
        return Err(Error::Format("missing PNG signature".into()));
    }
    let mut pos = 8;
    loop {
        let header = bytes
            .get(pos..pos + 8)
            .ok_or_else(|| Error::Truncated("PNG chunk header".into()))?;
        let len = u32::from_be_bytes(header[..4].try_into().unwrap()) as usize;
        let kind = &header[4..8];
        let end = pos
            .checked_add(12 + len)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| Error::Truncated(format!("PNG chunk {}", String::from_utf8_lossy(kind))))?;
        let stored = u32::from_be_bytes(bytes[end - 4..end].try_into().unwrap());
        let computed = crc32fast::hash(&bytes[pos + 4..end - 4]);
        if stored != computed {
            return Err(Error::Corrupt(format!(
                "CRC mismatch in PNG chunk {}",
                String::from_utf8_lossy(kind)
            )));
        }
        pos = end;
        if kind == b"IEND" {
            return Ok(());
        }
    }
}

fn map_decode_error(err: png::DecodingError) -> Error {
    match err {
        png::DecodingError::IoError(e) => Error::Truncated(e.to_string()),
        png::DecodingError::Format(e) => Error::Corrupt(e.to_string()),
        other => Error::UnsupportedFormat(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(width: u32, height: u32, color: ColorType, depth: BitDepth, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, width, height);
            enc.set_color(color);
            enc.set_depth(depth);
            let mut writer = enc.write_header().unwrap();
            writer.write_image_data(data).unwrap();
        }
        out
    }

    #[test]
    fn gray_ramp_is_identity() {
        let data: Vec<u8> = (0..32 * 32).map(|i| (i % 32 * 8) as u8).collect();
        let bytes = encode(32, 32, ColorType::Grayscale, BitDepth::Eight, &data);
        let img = decode_png_gray(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (32, 32));
        assert_eq!(img.pixels(), data.as_slice());
    }

    #[test]
    fn rgb_luminance() {
        assert_eq!(luminance(255, 255, 255), 255);
        // round(0.299 * 255) = round(76.245)
        assert_eq!(luminance(255, 0, 0), 76);

        let mut data = Vec::new();
        for i in 0..16 * 16 {
            data.extend_from_slice(if i % 2 == 0 { &[255, 0, 0] } else { &[255, 255, 255] });
        }
        let img = decode_png_gray(&encode(16, 16, ColorType::Rgb, BitDepth::Eight, &data)).unwrap();
        assert_eq!(img.get(0, 0), 76);
        assert_eq!(img.get(1, 0), 255);
    }

    #[test]
    fn crc_mismatch_is_corruption() {
        let data = vec![7u8; 16 * 16];
        let mut bytes = encode(16, 16, ColorType::Grayscale, BitDepth::Eight, &data);
        // flip a byte inside the IHDR payload
        bytes[8 + 8 + 2] ^= 0x40;
        assert!(matches!(decode_png_gray(&bytes), Err(Error::Corrupt(_))));
    }

    #[test]
    fn unsupported_depth_and_color() {
        let data = vec![0u8; 16 * 16 * 2];
        let bytes = encode(16, 16, ColorType::Grayscale, BitDepth::Sixteen, &data);
        assert!(matches!(decode_png_gray(&bytes), Err(Error::UnsupportedFormat(_))));

        let data = vec![0u8; 16 * 16 * 4];
        let bytes = encode(16, 16, ColorType::Rgba, BitDepth::Eight, &data);
        assert!(matches!(decode_png_gray(&bytes), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn truncated_stream() {
        let data = vec![9u8; 16 * 16];
        let bytes = encode(16, 16, ColorType::Grayscale, BitDepth::Eight, &data);
        assert!(matches!(
            decode_png_gray(&bytes[..bytes.len() - 20]),
            Err(Error::Truncated(_))
        ));
        assert!(matches!(decode_png_gray(b"not a png"), Err(Error::Format(_))));
    }
}
