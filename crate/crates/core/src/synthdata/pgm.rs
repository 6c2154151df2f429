//! 8-bit binary PGM (`P5`) images; plain `P2` is accepted on read.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::GrayImage;

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}

pub fn decode_pgm(bytes: &[u8], origin: &Path) -> Result<GrayImage> {
    let fail = |msg: &str| Error::Parse {
        file: origin.to_path_buf(),
        line: 1,
        msg: msg.to_string(),
    };
    // header: magic, width, height, maxval; `#` comments allowed
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(fail("truncated PGM header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| fail("non-ASCII PGM header"))?);
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| fail("bad number in PGM header"));
    let (width, height, maxval) = (parse(tokens[1])?, parse(tokens[2])?, parse(tokens[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(fail("only 8-bit PGM images are supported"));
    }
    let rescale = |v: usize| ((v * 255 + maxval / 2) / maxval) as u8;
    let data = match tokens[0] {
        "P5" => {
            let body = &bytes[(pos + 1).min(bytes.len())..];
            if body.len() < width * height {
                return Err(fail("PGM pixel data is truncated"));
            }
            body[..width * height].iter().map(|&v| rescale(v as usize)).collect()
        }
        "P2" => {
            let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| fail("non-ASCII P2 body"))?;
            let values = text
                .split_ascii_whitespace()
                .map(|t| t.parse::<usize>().map(rescale))
                .collect::<std::result::Result<Vec<u8>, _>>()
                .map_err(|_| fail("bad pixel value"))?;
            if values.len() < width * height {
                return Err(fail("PGM pixel data is truncated"));
            }
            values[..width * height].to_vec()
        }
        _ => return Err(fail("not a PGM file (expected P5 or P2)")),
    };
    GrayImage::new(width, height, data)
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    std::fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}
