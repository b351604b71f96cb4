//! Binary tensor container.
//!
//! Layout: `b"SVCK"`, format version (u32), then records until the last four
//! bytes. A record is a name (u32 byte length + UTF-8), rank (u32), one u64 per
//! dim, a dtype tag (u8: 0 = f32, 1 = f64) and the row-major payload. The file
//! ends with the CRC32 of every preceding byte. Integers are little-endian.

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SVCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: TensorData,
}

impl Record {
    pub fn f64(name: impl Into<String>, shape: &[usize], data: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            data: TensorData::F64(data),
        }
    }

    /// A u64 stored bit-for-bit in a one-element f64 record.
    pub fn u64(name: impl Into<String>, v: u64) -> Self {
        Self::f64(name, &[1], vec![f64::from_bits(v)])
    }

    /// UTF-8 text stored one byte per f32 element.
    pub fn text(name: impl Into<String>, s: &str) -> Self {
        let bytes: Vec<f32> = s.bytes().map(f32::from).collect();
        Self {
            name: name.into(),
            shape: vec![bytes.len()],
            data: TensorData::F32(bytes),
        }
    }

    pub fn as_f64(&self) -> Result<&[f64]> {
        match &self.data {
            TensorData::F64(v) => Ok(v),
            TensorData::F32(_) => Err(Error::Checkpoint(format!("record {} is f32, expected f64", self.name))),
        }
    }

    pub fn as_u64(&self) -> Result<u64> {
        match self.as_f64()? {
            [v] => Ok(v.to_bits()),
            _ => Err(Error::Checkpoint(format!("record {} is not a scalar", self.name))),
        }
    }

    pub fn as_text(&self) -> Result<String> {
        let TensorData::F32(v) = &self.data else {
            return Err(Error::Checkpoint(format!("record {} is not text", self.name)));
        };
        let bytes = v
            .iter()
            .map(|&b| {
                if (0.0..=255.0).contains(&b) && b.fract() == 0.0 {
                    Ok(b as u8)
                } else {
                    Err(Error::Checkpoint(format!(
                        "record {} holds a non-byte value",
                        self.name
                    )))
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        String::from_utf8(bytes).map_err(|_| Error::Checkpoint(format!("record {} is not UTF-8", self.name)))
    }
}

pub fn encode(records: &[Record]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for r in records {
        let numel: usize = r.shape.iter().product();
        if numel != r.data.len() {
            return Err(Error::Checkpoint(format!(
                "record {} has shape {:?} but {} values",
                r.name,
                r.shape,
                r.data.len()
            )));
        }
        out.extend_from_slice(&(r.name.len() as u32).to_le_bytes());
        out.extend_from_slice(r.name.as_bytes());
        out.extend_from_slice(&(r.shape.len() as u32).to_le_bytes());
        for &d in &r.shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &r.data {
            TensorData::F32(v) => {
                out.push(0);
                v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
            }
            TensorData::F64(v) => {
                out.push(1);
                v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
            }
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated record".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Record>> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Checkpoint("bad checkpoint header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    if bytes.len() < 12 {
        return Err(Error::Checkpoint("truncated file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(Error::Checkpoint("CRC mismatch (file truncated or corrupted)".into()));
    }
    let mut cur = Cursor { buf: body, pos: 8 };
    let mut records = Vec::new();
    while cur.pos < body.len() {
        let len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| Error::Checkpoint("record name is not UTF-8".into()))?
            .to_string();
        let rank = cur.u32()? as usize;
        let shape = (0..rank)
            .map(|_| cur.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let numel = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| Error::Checkpoint(format!("record {name} is too large")))?;
        let data = match cur.take(1)?[0] {
            0 => TensorData::F32(
                cur.take(
                    numel
                        .checked_mul(4)
                        .ok_or_else(|| Error::Checkpoint("size overflow".into()))?,
                )?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect(),
            ),
            1 => TensorData::F64(
                cur.take(
                    numel
                        .checked_mul(8)
                        .ok_or_else(|| Error::Checkpoint("size overflow".into()))?,
                )?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect(),
            ),
            t => return Err(Error::Checkpoint(format!("record {name} has unknown dtype tag {t}"))),
        };
        records.push(Record { name, shape, data });
    }
    Ok(records)
}

pub fn write_records(path: impl AsRef<Path>, records: &[Record]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(records)?;
    // write then rename so an interrupted save never replaces a good file
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Record> {
        vec![
            Record::f64("w", &[2, 3], vec![1.0, -2.5, f64::MIN_POSITIVE, 0.1, 1e300, -0.0]),
            Record::u64("meta.step", u64::MAX - 3),
            Record::text("meta.config", "a = 1\nb = ls-san\n"),
            Record {
                name: "h".into(),
                shape: vec![],
                data: TensorData::F32(vec![0.5]),
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let bytes = encode(&sample()).unwrap();
        let back = decode(&bytes).unwrap();
        // meta.step is a NaN bit pattern, so compare it by bits
        for i in [0, 2, 3] {
            assert_eq!(back[i], sample()[i]);
        }
        assert_eq!(encode(&back).unwrap(), bytes);
        assert_eq!(back[1].as_u64().unwrap(), u64::MAX - 3);
        assert_eq!(back[2].as_text().unwrap(), "a = 1\nb = ls-san\n");
    }

    #[test]
    fn tampering_detected() {
        let bytes = encode(&sample()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).unwrap_err().to_string().contains("bad checkpoint header"));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(decode(&v2).unwrap_err().to_string().contains("version"));
        assert!(decode(&bytes[..bytes.len() - 9]).is_err());
        let mut flipped = bytes.clone();
        flipped[20] ^= 1;
        assert!(decode(&flipped).is_err());
    }
}
