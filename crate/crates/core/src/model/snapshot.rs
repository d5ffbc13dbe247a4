//! Parameter snapshot files: a small header (magic, shape list) followed by
//! raw little-endian f64 data, one block per parameter tensor.
//!
//! Layout, all integers little-endian:
//!   bytes 0..8   magic "PLPSNAP1"
//!   u32          number of arrays
//!   per array:   u32 ndim, then ndim x u64 dims, then prod(dims) x f64

use super::Model;
use crate::error::{Error, Result};
use crate::numkit::DenseArray;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"PLPSNAP1";

pub fn save_arrays(path: &Path, arrays: &[DenseArray]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let werr = |e| Error::io(path, e);
    w.write_all(MAGIC).map_err(werr)?;
    w.write_all(&(arrays.len() as u32).to_le_bytes())
        .map_err(werr)?;
    for arr in arrays {
        w.write_all(&(arr.shape().len() as u32).to_le_bytes())
            .map_err(werr)?;
        for &d in arr.shape() {
            w.write_all(&(d as u64).to_le_bytes()).map_err(werr)?;
        }
        for &v in arr.data() {
            w.write_all(&v.to_le_bytes()).map_err(werr)?;
        }
    }
    w.flush().map_err(werr)
}

pub fn load_arrays(path: &Path) -> Result<Vec<DenseArray>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let malformed = |detail: String| Error::MalformedFile {
        path: path.to_path_buf(),
        detail,
    };

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(malformed(format!("bad magic {magic:?}")));
    }
    let count = read_u32(&mut r, path)? as usize;
    let mut arrays = Vec::with_capacity(count);
    for _ in 0..count {
        let ndim = read_u32(&mut r, path)? as usize;
        if ndim == 0 || ndim > 8 {
            return Err(malformed(format!("implausible ndim {ndim}")));
        }
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            shape.push(u64::from_le_bytes(buf) as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            data.push(f64::from_le_bytes(buf));
        }
        arrays.push(DenseArray::from_vec(data, shape)?);
    }
    Ok(arrays)
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

/// Writes the model's parameter tensors in flattening order.
pub fn save_model_params<M: Model>(path: &Path, model: &M) -> Result<()> {
    let flat = model.flatten();
    let mut arrays = Vec::new();
    let mut off = 0;
    for shape in model.param_shapes() {
        let n: usize = shape.iter().product();
        arrays.push(DenseArray::from_vec(flat[off..off + n].to_vec(), shape)?);
        off += n;
    }
    save_arrays(path, &arrays)
}

/// Loads a snapshot saved by [`save_model_params`], verifying each tensor
/// shape against the model.
pub fn load_model_params<M: Model>(path: &Path, model: &mut M) -> Result<()> {
    let arrays = load_arrays(path)?;
    let expected = model.param_shapes();
    if arrays.len() != expected.len() {
        return Err(Error::MalformedFile {
            path: path.to_path_buf(),
            detail: format!(
                "snapshot holds {} arrays, model has {}",
                arrays.len(),
                expected.len()
            ),
        });
    }
    let mut flat = Vec::with_capacity(model.num_params());
    for (arr, shape) in arrays.iter().zip(&expected) {
        if arr.shape() != shape.as_slice() {
            return Err(Error::MalformedFile {
                path: path.to_path_buf(),
                detail: format!("shape {:?} does not match model {:?}", arr.shape(), shape),
            });
        }
        flat.extend_from_slice(arr.data());
    }
    model.load_flat(&flat)
}
