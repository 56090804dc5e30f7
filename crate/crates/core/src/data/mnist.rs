//! MNIST in the IDX format (big-endian header, raw `u8` payload).

use std::path::{Path, PathBuf};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::Matrix;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnistSplit {
    Train,
    Test,
}

impl MnistSplit {
    fn prefix(self) -> &'static str {
        match self {
            MnistSplit::Train => "train",
            MnistSplit::Test => "t10k",
        }
    }
}

/// Standard file names inside an MNIST directory.
pub fn mnist_paths(dir: &Path, split: MnistSplit) -> (PathBuf, PathBuf) {
    let p = split.prefix();
    (
        dir.join(format!("{p}-images-idx3-ubyte")),
        dir.join(format!("{p}-labels-idx1-ubyte")),
    )
}

pub fn load_mnist_dir(dir: &Path, split: MnistSplit) -> Result<Dataset> {
    let (images, labels) = mnist_paths(dir, split);
    load_mnist_idx(&images, &labels)
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_err(path, "truncated header"))
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Loads an image/label file pair. Pixels are scaled to `[0, 1]` and
/// entity ids are `0..n` in file order.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels = std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    parse_mnist(&images, images_path, &labels, labels_path)
}

pub(crate) fn parse_mnist(
    images: &[u8],
    images_path: &Path,
    labels: &[u8],
    labels_path: &Path,
) -> Result<Dataset> {
    let magic = be_u32(images, 0, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(format_err(
            images_path,
            format!("bad image magic {magic:#010x}"),
        ));
    }
    let n = be_u32(images, 4, images_path)? as usize;
    let rows = be_u32(images, 8, images_path)? as usize;
    let cols = be_u32(images, 12, images_path)? as usize;
    let dim = rows * cols;
    let payload = &images[16..];
    if payload.len() < n * dim {
        return Err(format_err(
            images_path,
            format!(
                "truncated: {} pixel bytes for {n} images of {rows}x{cols}",
                payload.len()
            ),
        ));
    }

    let magic = be_u32(labels, 0, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(format_err(
            labels_path,
            format!("bad label magic {magic:#010x}"),
        ));
    }
    let n_labels = be_u32(labels, 4, labels_path)? as usize;
    if n_labels != n {
        return Err(format_err(
            labels_path,
            format!("{n_labels} labels for {n} images"),
        ));
    }
    let label_bytes = &labels[8..];
    if label_bytes.len() < n {
        return Err(format_err(labels_path, "truncated label payload"));
    }

    let pixels = payload[..n * dim]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    let features = Matrix::from_vec(n, dim, pixels)?;
    let labels = label_bytes[..n].iter().map(|&b| usize::from(b)).collect();
    Dataset::with_sequential_ids(features, Some(labels))
}
