//! IDX files (the MNIST container format), plain or gzip-compressed.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::{seeded_permutation, Dataset, Task, DEFAULT_TRAIN_FRACTION};
use crate::{Error, Matrix, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

const CLASSES: usize = 10;

/// Decoded image file: `count` images of `rows x cols` unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

/// Reads a file, transparently inflating it when it starts with the gzip magic.
pub fn read_idx_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Parse(format!("{}: corrupt gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse("IDX header is truncated".into()))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Parse(format!(
            "bad IDX image magic {magic} (expected {IMAGE_MAGIC})"
        )));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let payload = &bytes[16..];
    if payload.len() != count * rows * cols {
        return Err(Error::Parse(format!(
            "IDX image payload has {} bytes, header promises {count}x{rows}x{cols}",
            payload.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: payload.to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Parse(format!(
            "bad IDX label magic {magic} (expected {LABEL_MAGIC})"
        )));
    }
    let count = be_u32(bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() != count {
        return Err(Error::Parse(format!(
            "IDX label payload has {} bytes, header promises {count}",
            payload.len()
        )));
    }
    Ok(payload.to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [
        IMAGE_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnistOptions {
    /// Number of images drawn (without replacement) from the files.
    pub subset: usize,
    pub seed: u64,
    /// Pixels dropped on each side; 4 turns 28x28 into the central 20x20.
    pub crop_border: usize,
    pub train_fraction: f64,
}

impl Default for MnistOptions {
    fn default() -> Self {
        MnistOptions {
            subset: 5000,
            seed: 0,
            crop_border: 4,
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }
}

/// Loads an MNIST-style image/label pair: seeded subset, central crop,
/// pixels scaled to `[0, 1]`, one-hot targets over 10 classes.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path, opts: &MnistOptions) -> Result<Dataset> {
    let images = parse_idx_images(&read_idx_bytes(images_path)?)?;
    let labels = parse_idx_labels(&read_idx_bytes(labels_path)?)?;
    mnist_from_parts(&images, &labels, opts)
}

pub(crate) fn mnist_from_parts(images: &IdxImages, labels: &[u8], opts: &MnistOptions) -> Result<Dataset> {
    if images.count != labels.len() {
        return Err(Error::Parse(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    if opts.subset == 0 || opts.subset > images.count {
        return Err(Error::InvalidArgument(format!(
            "subset of {} requested from {} images",
            opts.subset, images.count
        )));
    }
    let b = opts.crop_border;
    if 2 * b >= images.rows || 2 * b >= images.cols {
        return Err(Error::InvalidArgument(format!(
            "crop border {b} leaves nothing of {}x{} images",
            images.rows, images.cols
        )));
    }
    let (h, w) = (images.rows - 2 * b, images.cols - 2 * b);

    let chosen = &seeded_permutation(images.count, opts.seed)[..opts.subset];
    let mut xs = Vec::with_capacity(opts.subset * h * w);
    let mut ys = vec![0.0; opts.subset * CLASSES];
    for (r, &i) in chosen.iter().enumerate() {
        let img = images.image(i);
        for row in b..images.rows - b {
            let line = &img[row * images.cols + b..row * images.cols + images.cols - b];
            xs.extend(line.iter().map(|&p| f64::from(p) / 255.0));
        }
        let label = labels[i] as usize;
        if label >= CLASSES {
            return Err(Error::Parse(format!("label {label} is not a digit")));
        }
        ys[r * CLASSES + label] = 1.0;
    }
    Dataset::with_leading_train(
        "mnist",
        Matrix::new(opts.subset, h * w, xs)?,
        Matrix::new(opts.subset, CLASSES, ys)?,
        Task::Classification,
        opts.train_fraction,
        opts.seed,
    )
}
