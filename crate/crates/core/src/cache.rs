//! `.apt` token cache.
//!
//! Little-endian throughout. File header: magic `APF1`, version `u16`.
//! Each record:
//!
//! ```text
//! id_len u32 | id utf-8 | grid u32 | width u32 | height u32 | channels u8
//! patch u16 | seq_len u32 | leaf_count u32 | seed u64
//! seq_len × token
//! has_mask u8 | [seq_len × mask token]
//! token = morton u64 | x u32 | y u32 | size u32 | is_pad u8 | patch²·channels u8
//! ```
//!
//! Tokens inside a record have a fixed stride. Mask tokens use one channel.
//! Intensities are stored as 8-bit levels, so only sequences already on that
//! grid (see [`TokenSequence::quantized`]) round-trip bit-exactly.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::patch::{PatchToken, SequenceGeometry, TokenSequence};
use crate::quadtree::MortonCode;
use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"APF1";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CacheRecord<T> {
    pub image_id: String,
    pub sequence: TokenSequence<T>,
    /// Mask tokens sharing the image tokens' geometry, if a mask was given.
    pub mask: Option<TokenSequence<T>>,
}

pub struct CacheWriter<W: Write> {
    inner: W,
    records: usize,
}

impl<W: Write> CacheWriter<W> {
    pub fn new(mut inner: W) -> Result<Self> {
        inner.write_all(&MAGIC)?;
        inner.write_all(&VERSION.to_le_bytes())?;
        Ok(Self { inner, records: 0 })
    }

    pub fn write_record<T: Scalar>(&mut self, record: &CacheRecord<T>) -> Result<()> {
        let seq = &record.sequence;
        let g = &seq.geometry;
        if g.patch_size > u16::MAX as u32 {
            return Err(Error::Config(format!("patch size {} exceeds u16", g.patch_size)));
        }
        if let Some(mask) = &record.mask {
            if mask.len() != seq.len() || mask.geometry.patch_size != g.patch_size {
                return Err(Error::Config("mask tokens do not align with image tokens".into()));
            }
        }
        let id = record.image_id.as_bytes();
        let w = &mut self.inner;
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id)?;
        w.write_all(&g.grid_size.to_le_bytes())?;
        w.write_all(&g.original_size.0.to_le_bytes())?;
        w.write_all(&g.original_size.1.to_le_bytes())?;
        w.write_all(&[g.channels])?;
        w.write_all(&(g.patch_size as u16).to_le_bytes())?;
        w.write_all(&(seq.len() as u32).to_le_bytes())?;
        w.write_all(&seq.leaf_count.to_le_bytes())?;
        w.write_all(&seq.seed.to_le_bytes())?;
        write_tokens(w, seq, g.token_len())?;
        match &record.mask {
            None => w.write_all(&[0])?,
            Some(mask) => {
                w.write_all(&[1])?;
                write_tokens(w, mask, (g.patch_size * g.patch_size) as usize)?;
            }
        }
        self.records += 1;
        Ok(())
    }

    pub fn records(&self) -> usize {
        self.records
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

fn write_tokens<W: Write, T: Scalar>(w: &mut W, seq: &TokenSequence<T>, token_len: usize) -> Result<()> {
    let mut buf = Vec::with_capacity(21 + token_len);
    for t in &seq.tokens {
        if t.pixels.len() != token_len {
            return Err(Error::Config(format!(
                "token holds {} values, layout needs {token_len}",
                t.pixels.len()
            )));
        }
        buf.clear();
        buf.extend_from_slice(&t.morton.0.to_le_bytes());
        buf.extend_from_slice(&t.origin.0.to_le_bytes());
        buf.extend_from_slice(&t.origin.1.to_le_bytes());
        buf.extend_from_slice(&t.size.to_le_bytes());
        buf.push(t.is_pad as u8);
        buf.extend(t.pixels.iter().map(|p| p.to_u8_unit()));
        w.write_all(&buf)?;
    }
    Ok(())
}

pub struct CacheReader<R: Read> {
    inner: R,
}

fn corrupt(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::CorruptCache("truncated record".into())
    } else {
        Error::Io(e)
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(corrupt)?;
    Ok(buf)
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    Ok(read_array::<1, _>(r)?[0])
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    Ok(u16::from_le_bytes(read_array(r)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

impl<R: Read> CacheReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let magic: [u8; 4] = read_array(&mut inner)?;
        if magic != MAGIC {
            return Err(Error::CorruptCache(format!("bad magic {magic:?}")));
        }
        let version = read_u16(&mut inner)?;
        if version != VERSION {
            return Err(Error::CorruptCache(format!("unsupported version {version}")));
        }
        Ok(Self { inner })
    }

    /// Next record, or `None` at a clean end of file.
    pub fn next_record<T: Scalar>(&mut self) -> Result<Option<CacheRecord<T>>> {
        let mut first = [0u8; 1];
        loop {
            match self.inner.read(&mut first) {
                Ok(0) => return Ok(None),
                Ok(_) => break,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        let rest: [u8; 3] = read_array(&mut self.inner)?;
        let id_len = u32::from_le_bytes([first[0], rest[0], rest[1], rest[2]]) as usize;
        if id_len > 1 << 20 {
            return Err(Error::CorruptCache(format!("image id length {id_len}")));
        }
        let mut id = vec![0u8; id_len];
        self.inner.read_exact(&mut id).map_err(corrupt)?;
        let image_id = String::from_utf8(id)
            .map_err(|_| Error::CorruptCache("image id is not utf-8".into()))?;

        let r = &mut self.inner;
        let grid_size = read_u32(r)?;
        let width = read_u32(r)?;
        let height = read_u32(r)?;
        let channels = read_u8(r)?;
        let patch_size = read_u16(r)? as u32;
        let seq_len = read_u32(r)?;
        let leaf_count = read_u32(r)?;
        let seed = read_u64(r)?;
        if channels != 1 && channels != 3 {
            return Err(Error::CorruptCache(format!("channel count {channels}")));
        }
        if patch_size == 0 || grid_size == 0 {
            return Err(Error::CorruptCache("zero patch or grid size".into()));
        }
        let geometry = SequenceGeometry {
            patch_size,
            grid_size,
            original_size: (width, height),
            channels,
        };
        let sequence = read_tokens(r, geometry, seq_len, leaf_count, seed)?;
        let mask = match read_u8(r)? {
            0 => None,
            1 => Some(read_tokens(
                r,
                SequenceGeometry { channels: 1, ..geometry },
                seq_len,
                leaf_count,
                seed,
            )?),
            f => return Err(Error::CorruptCache(format!("mask flag {f}"))),
        };
        Ok(Some(CacheRecord {
            image_id,
            sequence,
            mask,
        }))
    }
}

fn read_tokens<R: Read, T: Scalar>(
    r: &mut R,
    geometry: SequenceGeometry,
    seq_len: u32,
    leaf_count: u32,
    seed: u64,
) -> Result<TokenSequence<T>> {
    let token_len = geometry.token_len();
    let mut tokens = Vec::with_capacity(seq_len.min(1 << 20) as usize);
    let mut pixels = vec![0u8; token_len];
    for _ in 0..seq_len {
        let morton = MortonCode(read_u64(r)?);
        let x = read_u32(r)?;
        let y = read_u32(r)?;
        let size = read_u32(r)?;
        let is_pad = match read_u8(r)? {
            0 => false,
            1 => true,
            f => return Err(Error::CorruptCache(format!("pad flag {f}"))),
        };
        r.read_exact(&mut pixels).map_err(corrupt)?;
        tokens.push(PatchToken {
            morton,
            origin: (x, y),
            size,
            pixels: pixels.iter().map(|&b| T::from_u8_unit(b)).collect(),
            is_pad,
        });
    }
    let real = tokens.iter().filter(|t| !t.is_pad).count() as u32;
    if real != leaf_count.min(seq_len) {
        return Err(Error::CorruptCache(format!(
            "{real} real tokens but header records {leaf_count} leaves for length {seq_len}"
        )));
    }
    Ok(TokenSequence {
        tokens,
        geometry,
        seed,
        leaf_count,
    })
}

impl<R: Read> Iterator for CacheReader<R> {
    type Item = Result<CacheRecord<f32>>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

pub fn write_cache<T: Scalar>(path: &Path, records: &[CacheRecord<T>]) -> Result<()> {
    let mut w = CacheWriter::new(BufWriter::new(File::create(path)?))?;
    for r in records {
        w.write_record(r)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_cache<T: Scalar>(path: &Path) -> Result<Vec<CacheRecord<T>>> {
    let mut reader = CacheReader::new(BufReader::new(File::open(path)?))?;
    let mut out = Vec::new();
    while let Some(rec) = reader.next_record()? {
        out.push(rec);
    }
    Ok(out)
}
