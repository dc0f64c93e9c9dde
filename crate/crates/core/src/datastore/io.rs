//! Store files: 6-byte magic, `u32` dim, `u64` count, `count * dim` keys
//! as little-endian `f32`, then `count` values as `(u32 token, u32 pair_id,
//! u16 position)`. Loading is all or nothing.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{Datastore, Value};

pub const STORE_MAGIC: &[u8; 6] = b"EBGEC1";
/// Contextual-embedding stores used by the sentence-level baseline.
pub const CONTEXT_MAGIC: &[u8; 6] = b"EBCTX1";

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated(what.to_string()),
        _ => Error::Io(e),
    })
}

impl Datastore {
    pub fn write_with_magic<W: Write>(&self, magic: &[u8; 6], w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(magic)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for x in &self.keys {
            w.write_all(&x.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.token.to_le_bytes())?;
            w.write_all(&v.pair_id.to_le_bytes())?;
            w.write_all(&v.position.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a store, rejecting a foreign magic, a dimension other than
    /// `expected_dim` when given, and short or over-long files.
    pub fn read_with_magic<R: Read>(magic: &[u8; 6], r: R, expected_dim: Option<usize>) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut found = [0u8; 6];
        read_exact_or(&mut r, &mut found, "store header")?;
        if &found != magic {
            return Err(Error::BadMagic {
                expected: String::from_utf8_lossy(magic).into_owned(),
                found: String::from_utf8_lossy(&found).into_owned(),
            });
        }
        let mut b4 = [0u8; 4];
        read_exact_or(&mut r, &mut b4, "store header")?;
        let dim = u32::from_le_bytes(b4) as usize;
        if let Some(expected) = expected_dim {
            if dim != expected {
                return Err(Error::DimMismatch { expected, found: dim });
            }
        }
        let mut b8 = [0u8; 8];
        read_exact_or(&mut r, &mut b8, "store header")?;
        let count = u64::from_le_bytes(b8) as usize;

        let key_bytes = count
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::InvalidInput("store size overflows".into()))?;
        // read in bounded chunks so a corrupt count cannot force a huge allocation
        let mut keys = Vec::new();
        let mut remaining = key_bytes;
        let mut buf = vec![0u8; 1 << 16];
        while remaining > 0 {
            let n = remaining.min(buf.len());
            read_exact_or(&mut r, &mut buf[..n], "store keys")?;
            keys.extend(buf[..n].chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())));
            remaining -= n;
        }
        let mut values = Vec::new();
        let mut rec = [0u8; 10];
        for _ in 0..count {
            read_exact_or(&mut r, &mut rec, "store values")?;
            values.push(Value {
                token: u32::from_le_bytes(rec[0..4].try_into().unwrap()),
                pair_id: u32::from_le_bytes(rec[4..8].try_into().unwrap()),
                position: u16::from_le_bytes(rec[8..10].try_into().unwrap()),
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::InvalidInput("trailing bytes after store".into()));
        }
        Ok(Datastore {
            dim,
            keys,
            values,
            index: None,
        })
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        self.write_with_magic(STORE_MAGIC, w)
    }

    pub fn read_from<R: Read>(r: R, expected_dim: Option<usize>) -> Result<Self> {
        Self::read_with_magic(STORE_MAGIC, r, expected_dim)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Self> {
        Self::read_from(fs::File::open(path)?, expected_dim)
    }
}
