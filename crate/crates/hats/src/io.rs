//! On-disk formats.
//!
//! Event files:
//! - canonical binary: little-endian; header = 8 ASCII bytes `HATSEVT1`,
//!   u16 width, u16 height, u64 event count; then 13 bytes per event:
//!   u16 x, u16 y, u64 t (microseconds), i8 p (+1/-1).
//! - CSV: header line `x,y,t,p`, one event per line, decimal integers.
//! - N-MNIST (read-only adapter, community-documented layout): 5 bytes per
//!   event; byte 0 = x, byte 1 = y, byte 2 bit 7 = polarity (1 -> +1,
//!   0 -> -1), remaining 23 bits of bytes 2-4 (big-endian within the
//!   field) = timestamp in microseconds.
//!
//! Feature matrices: little-endian; magic `HATSFTR1`, u32 sample count,
//! u32 feature dimension, then row-major 64-bit floats. Labels travel in an
//! optional sidecar file of little-endian u32 class ids, one per sample.

use crate::event::{Event, EventStream, Polarity, SensorGeometry, StreamError};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const EVENT_MAGIC: &[u8; 8] = b"HATSEVT1";
const FEATURE_MAGIC: &[u8; 8] = b"HATSFTR1";

/// Serialization formats for event streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    CanonicalBinary,
    Csv,
    /// Read-only; N-MNIST files carry no geometry, the 34x34 ATIS crop
    /// is assumed.
    NMnist,
}

impl Format {
    /// Guesses a format from a file extension: `.evt` canonical binary,
    /// `.csv` CSV, `.bin` N-MNIST.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("evt") => Some(Format::CanonicalBinary),
            Some("csv") => Some(Format::Csv),
            Some("bin") => Some(Format::NMnist),
            _ => None,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "canonical-binary" | "evt" => Ok(Format::CanonicalBinary),
            "csv" => Ok(Format::Csv),
            "nmnist" => Ok(Format::NMnist),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated record at byte offset {offset}")]
    TruncatedRecord { offset: u64 },
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("N-MNIST format is read-only")]
    ReadOnlyFormat,
}

/// N-MNIST files are raw event records with no geometry header; the
/// dataset's sensor crop is fixed.
const NMNIST_GEOMETRY: SensorGeometry = SensorGeometry { width: 34, height: 34 };

pub fn read_events(path: &Path, format: Format) -> Result<EventStream, FormatError> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);
    match format {
        Format::CanonicalBinary => read_canonical(&mut reader),
        Format::Csv => read_csv(&mut reader),
        Format::NMnist => read_nmnist(&mut reader),
    }
}

pub fn write_events(stream: &EventStream, path: &Path, format: Format) -> Result<(), FormatError> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    match format {
        Format::CanonicalBinary => write_canonical(stream, &mut writer),
        Format::Csv => write_csv(stream, &mut writer),
        Format::NMnist => Err(FormatError::ReadOnlyFormat),
    }
}

fn read_canonical<R: Read>(r: &mut R) -> Result<EventStream, FormatError> {
    let mut header = [0u8; 20];
    r.read_exact(&mut header)
        .map_err(|_| FormatError::MalformedHeader("file shorter than 20-byte header".into()))?;
    if &header[0..8] != EVENT_MAGIC {
        return Err(FormatError::MalformedHeader(format!(
            "bad magic {:?}",
            &header[0..8]
        )));
    }
    let width = u16::from_le_bytes([header[8], header[9]]);
    let height = u16::from_le_bytes([header[10], header[11]]);
    if width == 0 || height == 0 {
        return Err(FormatError::MalformedHeader("zero sensor dimension".into()));
    }
    let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let mut events = Vec::with_capacity(count.min(1 << 24) as usize);
    let mut rec = [0u8; 13];
    for i in 0..count {
        r.read_exact(&mut rec)
            .map_err(|_| FormatError::TruncatedRecord { offset: 20 + i * 13 })?;
        let x = u16::from_le_bytes([rec[0], rec[1]]);
        let y = u16::from_le_bytes([rec[2], rec[3]]);
        let t = u64::from_le_bytes(rec[4..12].try_into().unwrap());
        let p = Polarity::from_i8(rec[12] as i8)?;
        events.push(Event::new(x, y, t, p));
    }
    Ok(EventStream::validate(events, SensorGeometry::new(width, height))?)
}

fn write_canonical<W: Write>(stream: &EventStream, w: &mut W) -> Result<(), FormatError> {
    w.write_all(EVENT_MAGIC)?;
    w.write_all(&stream.geometry().width.to_le_bytes())?;
    w.write_all(&stream.geometry().height.to_le_bytes())?;
    w.write_all(&(stream.len() as u64).to_le_bytes())?;
    for e in stream.events() {
        w.write_all(&e.x.to_le_bytes())?;
        w.write_all(&e.y.to_le_bytes())?;
        w.write_all(&e.t.to_le_bytes())?;
        w.write_all(&[e.p.as_i8() as u8])?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<R: BufRead>(r: &mut R) -> Result<EventStream, FormatError> {
    let mut lines = r.lines();
    // First header line carries the geometry so CSV round-trips exactly:
    // "# geometry <width> <height>". A plain "x,y,t,p" header is also
    // accepted, inferring geometry from the event extents.
    let first = lines
        .next()
        .ok_or_else(|| FormatError::MalformedHeader("empty file".into()))??;
    let mut geometry = None;
    let header = if let Some(rest) = first.strip_prefix("# geometry ") {
        let mut it = rest.split_whitespace();
        let w: u16 = parse_field(it.next(), 1, "width")?;
        let h: u16 = parse_field(it.next(), 1, "height")?;
        if w == 0 || h == 0 {
            return Err(FormatError::MalformedHeader("zero sensor dimension".into()));
        }
        geometry = Some(SensorGeometry::new(w, h));
        lines
            .next()
            .ok_or_else(|| FormatError::MalformedHeader("missing column header".into()))??
    } else {
        first
    };
    if header.trim() != "x,y,t,p" {
        return Err(FormatError::MalformedHeader(format!(
            "expected column header 'x,y,t,p', got '{header}'"
        )));
    }
    let mut events = Vec::new();
    let mut line_no = 1;
    for line in lines {
        line_no += 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let x: u16 = parse_field(fields.next(), line_no, "x")?;
        let y: u16 = parse_field(fields.next(), line_no, "y")?;
        let t: u64 = parse_field(fields.next(), line_no, "t")?;
        let p: i8 = parse_field(fields.next(), line_no, "p")?;
        if fields.next().is_some() {
            return Err(FormatError::MalformedRecord {
                line: line_no,
                reason: "too many fields".into(),
            });
        }
        events.push(Event::new(x, y, t, Polarity::from_i8(p)?));
    }
    let geometry = geometry.unwrap_or_else(|| {
        let w = events.iter().map(|e| e.x).max().unwrap_or(0) + 1;
        let h = events.iter().map(|e| e.y).max().unwrap_or(0) + 1;
        SensorGeometry::new(w.max(1), h.max(1))
    });
    Ok(EventStream::validate(events, geometry)?)
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    name: &str,
) -> Result<T, FormatError> {
    field
        .ok_or_else(|| FormatError::MalformedRecord {
            line,
            reason: format!("missing field '{name}'"),
        })?
        .trim()
        .parse()
        .map_err(|_| FormatError::MalformedRecord {
            line,
            reason: format!("unparsable field '{name}'"),
        })
}

fn write_csv<W: Write>(stream: &EventStream, w: &mut W) -> Result<(), FormatError> {
    writeln!(
        w,
        "# geometry {} {}",
        stream.geometry().width,
        stream.geometry().height
    )?;
    writeln!(w, "x,y,t,p")?;
    for e in stream.events() {
        writeln!(w, "{},{},{},{}", e.x, e.y, e.t, e.p.as_i8())?;
    }
    w.flush()?;
    Ok(())
}

fn read_nmnist<R: Read>(r: &mut R) -> Result<EventStream, FormatError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() % 5 != 0 {
        return Err(FormatError::TruncatedRecord {
            offset: (buf.len() / 5 * 5) as u64,
        });
    }
    let mut events = Vec::with_capacity(buf.len() / 5);
    for rec in buf.chunks_exact(5) {
        let x = rec[0] as u16;
        let y = rec[1] as u16;
        let p = if rec[2] & 0x80 != 0 { Polarity::On } else { Polarity::Off };
        let t = (((rec[2] & 0x7f) as u64) << 16) | ((rec[3] as u64) << 8) | rec[4] as u64;
        events.push(Event::new(x, y, t, p));
    }
    Ok(EventStream::validate(events, NMNIST_GEOMETRY)?)
}

/// Row-major matrix of per-sample feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dim: usize) -> Self {
        FeatureMatrix { dim, data: Vec::new() }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut m = FeatureMatrix::new(dim);
        for r in rows {
            m.push_row(&r);
        }
        m
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim, "feature dimension mismatch");
        self.data.extend_from_slice(row);
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

pub fn write_features(matrix: &FeatureMatrix, path: &Path) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&(matrix.num_rows() as u32).to_le_bytes())?;
    w.write_all(&(matrix.dim() as u32).to_le_bytes())?;
    for v in &matrix.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix, FormatError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)
        .map_err(|_| FormatError::MalformedHeader("file shorter than 16-byte header".into()))?;
    if &header[0..8] != FEATURE_MAGIC {
        return Err(FormatError::MalformedHeader(format!(
            "bad magic {:?}",
            &header[0..8]
        )));
    }
    let count = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut data = Vec::with_capacity(count * dim);
    let mut buf = [0u8; 8];
    for i in 0..count * dim {
        r.read_exact(&mut buf)
            .map_err(|_| FormatError::TruncatedRecord { offset: (16 + i * 8) as u64 })?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(FeatureMatrix { dim, data })
}

/// Sidecar of u32 class ids, one per sample, little-endian.
pub fn write_labels(labels: &[u32], path: &Path) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels {
        w.write_all(&l.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<u32>, FormatError> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() % 4 != 0 {
        return Err(FormatError::TruncatedRecord {
            offset: (buf.len() / 4 * 4) as u64,
        });
    }
    Ok(buf
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
