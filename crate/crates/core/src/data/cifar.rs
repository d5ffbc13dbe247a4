//! Loader for the CIFAR binary format.
//!
//! Records are fixed-size: CIFAR-10 stores 1 label byte + 3072 pixel bytes,
//! CIFAR-100 stores a coarse and a fine label byte + 3072 pixel bytes.
//! Pixels are channel-major 32x32 RGB, scaled here to [0, 1]; CIFAR-100
//! uses the fine label.

use super::Dataset;
use crate::error::{Error, Result};
use crate::numkit::DenseArray;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const CIFAR_PIXELS: usize = 3 * 32 * 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CifarVariant {
    Cifar10,
    Cifar100,
}

impl CifarVariant {
    pub fn record_len(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 1 + CIFAR_PIXELS,
            CifarVariant::Cifar100 => 2 + CIFAR_PIXELS,
        }
    }

    pub fn num_classes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 10,
            CifarVariant::Cifar100 => 100,
        }
    }
}

pub fn load_cifar_binary(path: &Path, variant: CifarVariant) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_cifar_bytes(&bytes, variant).map_err(|detail| Error::MalformedFile {
        path: path.to_path_buf(),
        detail,
    })
}

fn parse_cifar_bytes(bytes: &[u8], variant: CifarVariant) -> std::result::Result<Dataset, String> {
    let record = variant.record_len();
    if bytes.is_empty() || !bytes.len().is_multiple_of(record) {
        let records = bytes.len() / record;
        return Err(format!(
            "expected a positive multiple of {record} bytes, got {} \
             ({} whole records, {} bytes left over)",
            bytes.len(),
            records,
            bytes.len() - records * record
        ));
    }
    let n = bytes.len() / record;
    let mut data = Vec::with_capacity(n * CIFAR_PIXELS);
    let mut labels = Vec::with_capacity(n);
    for rec in bytes.chunks_exact(record) {
        let (label, pixels) = match variant {
            CifarVariant::Cifar10 => (rec[0] as usize, &rec[1..]),
            // Coarse label first, fine second; the fine label is used.
            CifarVariant::Cifar100 => (rec[1] as usize, &rec[2..]),
        };
        if label >= variant.num_classes() {
            return Err(format!(
                "label {label} out of range for {} classes",
                variant.num_classes()
            ));
        }
        labels.push(label);
        data.extend(pixels.iter().map(|&b| b as f64 / 255.0));
    }
    let inputs = DenseArray::from_vec(data, vec![n, CIFAR_PIXELS])
        .map_err(|e| format!("internal shape error: {e}"))?;
    Dataset::new(inputs, labels, variant.num_classes()).map_err(|e| e.to_string())
}
