//! Binary model checkpoints: magic `EBSQ1`, `u32` dims `(V, d_emb, d)`,
//! then every tensor in [`Params`] field order as little-endian `f32`.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::params::{Dims, Params};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"EBSQ1";

pub fn write_checkpoint<W: Write>(params: &Params<f32>, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(CHECKPOINT_MAGIC)?;
    let d = params.dims;
    for x in [d.vocab, d.emb, d.hidden] {
        w.write_all(&(x as u32).to_le_bytes())?;
    }
    for t in params.tensors() {
        for x in t {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated(what.to_string()),
        _ => Error::Io(e),
    })
}

/// Reads a checkpoint, validating magic, dims and length.
pub fn read_checkpoint<R: Read>(r: R) -> Result<Params<f32>> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 5];
    read_exact_or(&mut r, &mut magic, "checkpoint header")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic {
            expected: String::from_utf8_lossy(CHECKPOINT_MAGIC).into_owned(),
            found: String::from_utf8_lossy(&magic).into_owned(),
        });
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        let mut b = [0u8; 4];
        read_exact_or(&mut r, &mut b, "checkpoint dims")?;
        *d = u32::from_le_bytes(b) as usize;
    }
    if dims.iter().any(|&d| d == 0) || dims[0] < 4 {
        return Err(Error::InvalidInput(format!("invalid checkpoint dims {dims:?}")));
    }
    let mut params = Params::<f32>::zeros(Dims::new(dims[0], dims[1], dims[2]));
    for t in params.tensors_mut() {
        let mut buf = vec![0u8; t.len() * 4];
        read_exact_or(&mut r, &mut buf, "checkpoint tensors")?;
        for (x, b) in t.iter_mut().zip(buf.chunks_exact(4)) {
            *x = f32::from_le_bytes(b.try_into().unwrap());
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::InvalidInput("trailing bytes after checkpoint".into()));
    }
    if !params.is_finite() {
        return Err(Error::InvalidInput("checkpoint holds non-finite weights".into()));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &Params<f32>, path: impl AsRef<Path>) -> Result<()> {
    write_checkpoint(params, fs::File::create(path)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Params<f32>> {
    read_checkpoint(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let p = Params::<f32>::init(Dims::new(9, 3, 4), 8);
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        assert_eq!(&buf[..5], b"EBSQ1");
        assert_eq!(&buf[5..9], &9u32.to_le_bytes());
        assert_eq!(buf.len(), 5 + 12 + 4 * p.num_weights());
        assert_eq!(read_checkpoint(&buf[..]).unwrap(), p);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let p = Params::<f32>::init(Dims::new(9, 3, 4), 8);
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(&bad[..]), Err(Error::BadMagic { .. })));
        assert!(matches!(
            read_checkpoint(&buf[..buf.len() - 3]),
            Err(Error::Truncated(_))
        ));
        let mut long = buf.clone();
        long.push(0);
        assert!(read_checkpoint(&long[..]).is_err());
        let mut zero_dim = buf.clone();
        zero_dim[9..13].copy_from_slice(&0u32.to_le_bytes());
        assert!(read_checkpoint(&zero_dim[..]).is_err());
    }
}
