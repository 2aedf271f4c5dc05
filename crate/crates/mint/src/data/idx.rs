//! IDX files: big-endian `u32` magic and dimensions followed by raw bytes.

use std::fs;
use std::path::Path;

use mint_core::models::LabeledPoint;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images stored row-major, one `rows * cols` block per image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u32(&mut self) -> Option<u32> {
        let chunk = self.bytes.get(self.pos..self.pos + 4)?;
        self.pos += 4;
        Some(u32::from_be_bytes(chunk.try_into().unwrap()))
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

fn header(reader: &mut Reader<'_>, expected_magic: u32, dims: usize) -> std::result::Result<Vec<usize>, String> {
    let magic = reader.u32().ok_or("file is shorter than its header")?;
    if magic != expected_magic {
        return Err(format!("bad magic number {magic:#010x}, expected {expected_magic:#010x}"));
    }
    (0..dims)
        .map(|_| reader.u32().map(|d| d as usize).ok_or_else(|| "file is shorter than its header".to_string()))
        .collect()
}

fn payload<'a>(reader: &Reader<'a>, expected: usize) -> std::result::Result<&'a [u8], String> {
    let rest = reader.rest();
    match rest.len() {
        l if l < expected => Err(format!("truncated file: header declares {expected} data bytes, found {l}")),
        l if l > expected => Err(format!("{} trailing bytes after the declared data", l - expected)),
        _ => Ok(rest),
    }
}

pub fn parse_images(bytes: &[u8]) -> std::result::Result<IdxImages, String> {
    let mut reader = Reader { bytes, pos: 0 };
    let dims = header(&mut reader, IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let size = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or("image dimensions overflow")?;
    let pixels = payload(&reader, size)?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

pub fn parse_labels(bytes: &[u8]) -> std::result::Result<Vec<u8>, String> {
    let mut reader = Reader { bytes, pos: 0 };
    let count = header(&mut reader, LABELS_MAGIC, 1)?[0];
    Ok(payload(&reader, count)?.to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn idx_error(path: &Path, message: String) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        message,
    }
}

/// Keeps the two digits, labels `digit_a` as 0 and `digit_b` as 1, scales
/// pixels to `[0, 1]` and appends a bias feature.
pub fn select_digits(images: &IdxImages, labels: &[u8], digit_a: u8, digit_b: u8) -> std::result::Result<Vec<LabeledPoint>, String> {
    if images.count != labels.len() {
        return Err(format!("{} images but {} labels", images.count, labels.len()));
    }
    let points: Vec<LabeledPoint> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, &digit)| {
            let label = if digit == digit_a {
                0
            } else if digit == digit_b {
                1
            } else {
                return None;
            };
            let raw = images.image(i).iter().map(|&p| p as f64 / 255.0).collect();
            Some(LabeledPoint::with_bias(raw, label))
        })
        .collect();
    if points.is_empty() {
        return Err(format!("no examples of digits {digit_a} or {digit_b}"));
    }
    Ok(points)
}

pub fn load_idx(images_path: &Path, labels_path: &Path, digit_a: u8, digit_b: u8) -> Result<Vec<LabeledPoint>> {
    let images = parse_images(&read(images_path)?).map_err(|m| idx_error(images_path, m))?;
    let labels = parse_labels(&read(labels_path)?).map_err(|m| idx_error(labels_path, m))?;
    select_digits(&images, &labels, digit_a, digit_b).map_err(|m| idx_error(labels_path, m))
}
