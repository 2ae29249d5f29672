use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{SegmentArchive, SpectroSegment};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SSCA";
const VERSION: u32 = 1;
const MANIFEST: &str = "manifest.csv";

/// Reads an archive, choosing the encoding by path kind: a directory is the
/// CSV encoding, a regular file the binary one.
pub fn read_archive(path: impl AsRef<Path>) -> Result<SegmentArchive> {
    let path = path.as_ref();
    if path.is_dir() {
        read_archive_csv(path)
    } else {
        read_archive_binary(path)
    }
}

/// Writes the binary encoding.
pub fn write_archive(archive: &SegmentArchive, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_binary(archive)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn encode_binary(archive: &SegmentArchive) -> Result<Vec<u8>> {
    let payload: usize = archive
        .segments()
        .iter()
        .map(|s| 2 + s.id().len() + 8 + 8 * s.energy().len())
        .sum();
    let mut out = Vec::with_capacity(12 + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(archive.len(), "segment count")?.to_le_bytes());
    for seg in archive.segments() {
        let id = seg.id().as_bytes();
        let id_len = u16::try_from(id.len())
            .map_err(|_| Error::Validation(format!("segment id {:?} is longer than 65535 bytes", seg.id())))?;
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&to_u32(seg.n_freq(), "n_freq")?.to_le_bytes());
        out.extend_from_slice(&to_u32(seg.n_time(), "n_time")?.to_le_bytes());
        // iter() walks logical row-major order regardless of memory layout
        for v in seg.energy().iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn to_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Validation(format!("{what} {n} does not fit in u32")))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.path,
                format!("byte {}", self.pos),
                format!(
                    "unexpected end of file reading {what} ({n} bytes needed, {} left)",
                    self.buf.len() - self.pos
                ),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_archive_binary(path: impl AsRef<Path>) -> Result<SegmentArchive> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor {
        buf: &buf,
        pos: 0,
        path,
    };

    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::format(path, "byte 0", "bad magic, expected \"SSCA\""));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::format(path, "byte 4", format!("unsupported version {version}")));
    }
    let count = cur.u32("segment count")? as usize;

    let mut segments = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let at = cur.pos;
        let id_len = cur.u16("id length")? as usize;
        let id = std::str::from_utf8(cur.take(id_len, "id")?)
            .map_err(|_| Error::format(path, format!("byte {}", at + 2), "segment id is not valid UTF-8"))?
            .to_owned();
        let n_freq = cur.u32("n_freq")? as usize;
        let n_time = cur.u32("n_time")? as usize;
        let cells = n_freq
            .checked_mul(n_time)
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| Error::format(path, format!("byte {}", cur.pos), "segment size overflows"))?;
        let raw = cur.take(cells, "energies")?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let energy = Array2::from_shape_vec((n_freq, n_time), values).expect("length checked above");
        segments.push(SpectroSegment::new(id, energy)?);
    }
    if cur.pos != buf.len() {
        return Err(Error::format(
            path,
            format!("byte {}", cur.pos),
            format!("{} trailing bytes after last segment", buf.len() - cur.pos),
        ));
    }
    SegmentArchive::new(segments, path.display().to_string())
}

/// Writes the CSV encoding into `dir`, creating it if needed.
pub fn write_archive_csv(archive: &SegmentArchive, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = digits(archive.len().saturating_sub(1)).max(5);

    let manifest_path = dir.join(MANIFEST);
    let mut manifest = String::from("id,file\n");
    for (i, seg) in archive.segments().iter().enumerate() {
        if seg.id().contains([',', '\n', '\r']) {
            return Err(Error::Validation(format!(
                "segment id {:?} cannot be stored in a CSV manifest",
                seg.id()
            )));
        }
        let file = format!("seg_{i:0width$}.csv");
        manifest.push_str(&format!("{},{file}\n", seg.id()));
        super::write_matrix_csv(seg.energy(), dir.join(&file))?;
    }
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))
}

pub fn read_archive_csv(dir: impl AsRef<Path>) -> Result<SegmentArchive> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "id,file")) => {}
        _ => return Err(Error::format(&manifest_path, "line 1", "expected header \"id,file\"")),
    }
    let mut segments = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (id, file) = line
            .split_once(',')
            .ok_or_else(|| Error::format(&manifest_path, format!("line {}", lineno + 1), "expected \"id,file\""))?;
        let energy = super::read_matrix_csv(dir.join(file))?;
        segments.push(SpectroSegment::new(id, energy)?);
    }
    SegmentArchive::new(segments, dir.display().to_string())
}

fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}
