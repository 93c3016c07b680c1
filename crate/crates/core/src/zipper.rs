//! Small zip reader and writer (stored and deflate entries, no zip64).
//!
//! The writer is deterministic: callers pass entries in the order wanted
//! and every timestamp is the DOS epoch, 1980-01-01 00:00.

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

const LOCAL_SIG: u32 = 0x0403_4b50;
const CENTRAL_SIG: u32 = 0x0201_4b50;
const END_SIG: u32 = 0x0605_4b50;
const DOS_DATE: u16 = (1 << 5) | 1;
const UTF8_FLAG: u16 = 1 << 11;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ZipError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ZipError> {
    Err(ZipError(msg.into()))
}

fn put16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn write_zip(entries: &[(String, Vec<u8>)]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut central = Vec::new();
    for (name, data) in entries {
        let crc = crc32fast::hash(data);
        let mut enc = DeflateEncoder::new(Vec::new(), Compression::default());
        enc.write_all(data).expect("writing to a Vec cannot fail");
        let packed = enc.finish().expect("writing to a Vec cannot fail");
        let (method, body): (u16, &[u8]) = if packed.len() < data.len() { (8, &packed) } else { (0, data) };
        let offset = out.len() as u32;

        put32(&mut out, LOCAL_SIG);
        put16(&mut out, 20);
        put16(&mut out, UTF8_FLAG);
        put16(&mut out, method);
        put16(&mut out, 0);
        put16(&mut out, DOS_DATE);
        put32(&mut out, crc);
        put32(&mut out, body.len() as u32);
        put32(&mut out, data.len() as u32);
        put16(&mut out, name.len() as u16);
        put16(&mut out, 0);
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(body);

        put32(&mut central, CENTRAL_SIG);
        put16(&mut central, 20);
        put16(&mut central, 20);
        put16(&mut central, UTF8_FLAG);
        put16(&mut central, method);
        put16(&mut central, 0);
        put16(&mut central, DOS_DATE);
        put32(&mut central, crc);
        put32(&mut central, body.len() as u32);
        put32(&mut central, data.len() as u32);
        put16(&mut central, name.len() as u16);
        put16(&mut central, 0);
        put16(&mut central, 0);
        put16(&mut central, 0);
        put16(&mut central, 0);
        put32(&mut central, 0);
        put32(&mut central, offset);
        central.extend_from_slice(name.as_bytes());
    }
    let central_offset = out.len() as u32;
    out.extend_from_slice(&central);
    put32(&mut out, END_SIG);
    put16(&mut out, 0);
    put16(&mut out, 0);
    put16(&mut out, entries.len() as u16);
    put16(&mut out, entries.len() as u16);
    put32(&mut out, central.len() as u32);
    put32(&mut out, central_offset);
    put16(&mut out, 0);
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ZipError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => bad("truncated archive"),
        }
    }
    fn u16(&mut self) -> Result<u16, ZipError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("two bytes")))
    }
    fn u32(&mut self) -> Result<u32, ZipError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }
}

/// Reads every file entry; directory entries are skipped.
pub(crate) fn read_zip(bytes: &[u8]) -> Result<Vec<(String, Vec<u8>)>, ZipError> {
    if bytes.len() < 22 || !bytes.starts_with(&LOCAL_SIG.to_le_bytes()) && !bytes.starts_with(&END_SIG.to_le_bytes()) {
        return bad("not a zip archive");
    }
    let search_from = bytes.len().saturating_sub(22 + 0xFFFF);
    let eocd = (search_from..=bytes.len() - 22)
        .rev()
        .find(|&i| bytes[i..i + 4] == END_SIG.to_le_bytes())
        .ok_or_else(|| ZipError("no end of central directory".into()))?;
    let mut c = Cursor { buf: bytes, pos: eocd + 10 };
    let count = c.u16()? as usize;
    let _size = c.u32()?;
    let offset = c.u32()? as usize;

    let mut out = Vec::with_capacity(count);
    let mut cd = Cursor { buf: bytes, pos: offset };
    for _ in 0..count {
        if cd.u32()? != CENTRAL_SIG {
            return bad("corrupt central directory");
        }
        cd.take(6)?;
        let method = cd.u16()?;
        cd.take(4)?;
        let crc = cd.u32()?;
        let packed_len = cd.u32()? as usize;
        let len = cd.u32()? as usize;
        let name_len = cd.u16()? as usize;
        let extra_len = cd.u16()? as usize;
        let comment_len = cd.u16()? as usize;
        cd.take(8)?;
        let local = cd.u32()? as usize;
        let name = String::from_utf8(cd.take(name_len)?.to_vec()).map_err(|_| ZipError("entry name is not UTF-8".into()))?;
        cd.take(extra_len + comment_len)?;

        let mut lc = Cursor { buf: bytes, pos: local };
        if lc.u32()? != LOCAL_SIG {
            return bad(format!("corrupt local header for {name}"));
        }
        lc.take(22)?;
        let lname = lc.u16()? as usize;
        let lextra = lc.u16()? as usize;
        lc.take(lname + lextra)?;
        let body = lc.take(packed_len)?;
        if name.ends_with('/') {
            continue;
        }
        let data = match method {
            0 => body.to_vec(),
            8 => {
                let mut data = Vec::with_capacity(len);
                DeflateDecoder::new(body)
                    .read_to_end(&mut data)
                    .map_err(|e| ZipError(format!("{name}: {e}")))?;
                data
            }
            m => return bad(format!("{name}: unsupported compression method {m}")),
        };
        if data.len() != len || crc32fast::hash(&data) != crc {
            return bad(format!("{name}: checksum mismatch"));
        }
        out.push((name, data));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic_and_readable() {
        let entries = vec![
            ("a.txt".to_string(), b"hello hello hello hello".to_vec()),
            ("dir/b.bin".to_string(), vec![0u8, 1, 2]),
            ("empty".to_string(), Vec::new()),
        ];
        let z = write_zip(&entries);
        assert_eq!(z, write_zip(&entries));
        assert_eq!(read_zip(&z).unwrap(), entries);
    }

    #[test]
    fn rejects_garbage_and_corruption() {
        assert!(read_zip(b"plain text, definitely not an archive").is_err());
        let mut z = write_zip(&[("a".into(), b"abcabcabcabcabcabc".to_vec())]);
        z[32] ^= 0xFF;
        assert!(read_zip(&z).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(entries in proptest::collection::vec(("[a-z]{1,8}", proptest::collection::vec(any::<u8>(), 0..300)), 0..6)) {
            let entries: Vec<(String, Vec<u8>)> = entries;
            prop_assert_eq!(read_zip(&write_zip(&entries)).unwrap(), entries);
        }
    }
}
