//! Map files: binary/ASCII PGM and 8-bit grayscale PNG.
//!
//! Pixel 0 is an occupied cell and 255 a free cell; any other value is
//! rejected. A map may carry a `.meta` sidecar of UTF-8 `key=value` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{Cell, GridError, OccupancyGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapFormat {
    /// `P5`
    PgmBinary,
    /// `P2`
    PgmAscii,
    Png,
}

impl MapFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pgm" => Some(Self::PgmBinary),
            "png" => Some(Self::Png),
            _ => None,
        }
    }

    /// Sniffs the format from leading magic bytes.
    pub fn detect(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"P5") {
            Some(Self::PgmBinary)
        } else if bytes.starts_with(b"P2") {
            Some(Self::PgmAscii)
        } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(Self::Png)
        } else {
            None
        }
    }
}

#[derive(Debug, Error)]
pub enum MapIoError {
    #[error("malformed map file: {0}")]
    Format(String),
    #[error("pixel ({x}, {y}) has value {value}; only 0 (occupied) and 255 (free) are allowed")]
    Value { x: usize, y: usize, value: u16 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err(msg: impl Into<String>) -> MapIoError {
    MapIoError::Format(msg.into())
}

/// Decodes a grayscale raster without interpreting pixel values.
pub fn read_gray(bytes: &[u8], format: MapFormat) -> Result<(usize, usize, Vec<u16>), MapIoError> {
    match format {
        MapFormat::PgmBinary | MapFormat::PgmAscii => read_pgm(bytes, format),
        MapFormat::Png => read_png(bytes),
    }
}

pub fn load_map(bytes: &[u8], format: MapFormat) -> Result<OccupancyGrid, MapIoError> {
    let (width, height, pixels) = read_gray(bytes, format)?;
    let mut cells = Vec::with_capacity(pixels.len());
    for (i, &value) in pixels.iter().enumerate() {
        cells.push(match value {
            0 => Cell::Occupied,
            255 => Cell::Free,
            _ => {
                return Err(MapIoError::Value {
                    x: i % width,
                    y: i / width,
                    value,
                })
            }
        });
    }
    Ok(OccupancyGrid::new(width, height, cells)?)
}

pub fn save_map(grid: &OccupancyGrid, format: MapFormat) -> Vec<u8> {
    let pixels: Vec<u8> = grid.cells().iter().map(|c| if c.is_free() { 255 } else { 0 }).collect();
    encode_gray(grid.width(), grid.height(), &pixels, format)
}

/// Reads a map file, picking the format from its magic bytes.
pub fn read_map_file(path: &Path) -> Result<OccupancyGrid, MapIoError> {
    let bytes = std::fs::read(path)?;
    let format =
        MapFormat::detect(&bytes).ok_or_else(|| format_err(format!("{}: unrecognized map format", path.display())))?;
    load_map(&bytes, format)
}

/// Encodes an 8-bit grayscale raster in one of the supported formats.
pub fn encode_gray(width: usize, height: usize, pixels: &[u8], format: MapFormat) -> Vec<u8> {
    match format {
        MapFormat::PgmBinary => {
            let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
            out.extend_from_slice(pixels);
            out
        }
        MapFormat::PgmAscii => {
            let mut out = format!("P2\n{width} {height}\n255\n");
            for row in pixels.chunks(width) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
        MapFormat::Png => {
            let mut out = Vec::new();
            {
                let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
                enc.set_color(png::ColorType::Grayscale);
                enc.set_depth(png::BitDepth::Eight);
                let mut writer = enc.write_header().expect("in-memory PNG header");
                writer.write_image_data(pixels).expect("in-memory PNG payload");
            }
            out
        }
    }
}

struct PgmTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmTokens<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn next_number(&mut self, what: &str) -> Result<usize, MapIoError> {
        let tok = self.next_token().ok_or_else(|| format_err(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(format!("bad {what}: {:?}", String::from_utf8_lossy(tok))))
    }
}

fn read_pgm(bytes: &[u8], format: MapFormat) -> Result<(usize, usize, Vec<u16>), MapIoError> {
    let mut tokens = PgmTokens { bytes, pos: 0 };
    let magic = tokens.next_token().ok_or_else(|| format_err("empty file"))?;
    let expected: &[u8] = if format == MapFormat::PgmBinary { b"P5" } else { b"P2" };
    if magic != expected {
        return Err(format_err(format!(
            "expected magic {}, found {:?}",
            String::from_utf8_lossy(expected),
            String::from_utf8_lossy(magic)
        )));
    }
    let width = tokens.next_number("width")?;
    let height = tokens.next_number("height")?;
    let maxval = tokens.next_number("maxval")?;
    if maxval != 255 {
        return Err(format_err(format!("maxval must be 255, got {maxval}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| format_err("dimensions overflow"))?;
    match format {
        MapFormat::PgmBinary => {
            // exactly one whitespace byte separates the header from the raster
            let start = tokens.pos + 1;
            if tokens.pos >= bytes.len() || !bytes[tokens.pos].is_ascii_whitespace() {
                return Err(format_err("missing whitespace after header"));
            }
            let payload = &bytes[start.min(bytes.len())..];
            if payload.len() != n {
                return Err(format_err(format!(
                    "payload has {} bytes, expected {n} for {width}x{height}",
                    payload.len()
                )));
            }
            Ok((width, height, payload.iter().map(|&b| b as u16).collect()))
        }
        _ => {
            let mut pixels = Vec::with_capacity(n);
            while let Some(tok) = tokens.next_token() {
                let v: u16 = std::str::from_utf8(tok)
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| format_err("non-numeric pixel"))?;
                pixels.push(v);
            }
            if pixels.len() != n {
                return Err(format_err(format!(
                    "found {} pixels, expected {n} for {width}x{height}",
                    pixels.len()
                )));
            }
            Ok((width, height, pixels))
        }
    }
}

fn read_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>), MapIoError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| format_err(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(format_err(format!(
            "PNG must be 8-bit grayscale, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| format_err("PNG too large"))?];
    let frame = reader.next_frame(&mut buf).map_err(|e| format_err(e.to_string()))?;
    let data = &buf[..frame.buffer_size()];
    let mut pixels = Vec::with_capacity(width * height);
    for row in data.chunks(frame.line_size).take(height) {
        pixels.extend(row[..width].iter().map(|&b| b as u16));
    }
    Ok((width, height, pixels))
}

/// Sidecar metadata: ordered `key=value` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MapMeta(pub BTreeMap<String, String>);

impl MapMeta {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, MapIoError> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format_err(format!("meta line {}: expected key=value", n + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}
