//! AEDAT 1.0 / 2.0 binary parsing and writing for DVS128 recordings.
//!
//! A file is zero or more `#`-prefixed header lines followed by fixed-width
//! big-endian records: 16-bit address + 32-bit timestamp for 1.0, 32-bit
//! address + 32-bit timestamp for 2.0. The DVS128 address layout is
//! `bit 0` polarity (1 = ON), `bits 1-7` x, `bits 8-14` y. Files without a
//! version line are treated as 1.0, the historical default.

use thiserror::Error;

use crate::event::{Event, EventStream, Polarity, DVS128_SIZE};

#[derive(Debug, Error, PartialEq)]
pub enum AerIoError {
    #[error("unknown AEDAT version line: {0:?}")]
    UnknownVersion(String),
    #[error("truncated record at byte offset {offset} ({got} of {expected} bytes)")]
    TruncatedRecord { offset: usize, expected: usize, got: usize },
    #[error("event ({x},{y}) does not fit the DVS128 address encoding")]
    AddressOverflow { x: u16, y: u16 },
    #[error("timestamp {0} exceeds the 32-bit record field")]
    TimestampOverflow(u64),
    #[error(transparent)]
    Event(#[from] crate::event::EventError),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for AerIoError {
    fn from(e: std::io::Error) -> Self {
        AerIoError::Io(e.to_string())
    }
}

/// Container version; fixes the record width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AedatVersion {
    V1,
    V2,
}

impl AedatVersion {
    pub fn record_len(self) -> usize {
        match self {
            AedatVersion::V1 => 6,
            AedatVersion::V2 => 8,
        }
    }

    fn version_line(self) -> &'static str {
        match self {
            AedatVersion::V1 => "#!AER-DAT1.0",
            AedatVersion::V2 => "#!AER-DAT2.0",
        }
    }
}

/// Parsed header: the detected version and the raw comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct AedatHeader {
    pub version: AedatVersion,
    pub comment_lines: Vec<String>,
}

/// Result of parsing one file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedAedat {
    pub header: AedatHeader,
    pub stream: EventStream,
    /// Events whose timestamp was lower than their predecessor's in file
    /// order; the stream itself is stably re-sorted.
    pub reordered_events: usize,
}

fn decode_address(addr: u32) -> Event {
    let pol = if addr & 1 == 1 { Polarity::On } else { Polarity::Off };
    let x = ((addr >> 1) & 0x7F) as u16;
    let y = ((addr >> 8) & 0x7F) as u16;
    Event { x, y, t: 0, pol }
}

fn encode_address(e: &Event) -> Result<u32, AerIoError> {
    if e.x > 0x7F || e.y > 0x7F {
        return Err(AerIoError::AddressOverflow { x: e.x, y: e.y });
    }
    let pol_bit = match e.pol {
        Polarity::On => 1u32,
        Polarity::Off => 0,
    };
    Ok((e.y as u32) << 8 | (e.x as u32) << 1 | pol_bit)
}

/// Parses an AEDAT byte buffer into an event stream.
///
/// Records with decreasing timestamps are stably re-sorted and counted
/// (`reordered_events`); a record cut short by end-of-file is an error
/// carrying its byte offset.
/// A `#` byte opens a header line only if the bytes up to the next newline
/// are printable text; binary records can legitimately start with 0x23.
fn header_line_end(bytes: &[u8], offset: usize) -> Option<usize> {
    let printable =
        |line: &[u8]| line.iter().all(|&b| (0x20..=0x7e).contains(&b) || b == b'\t' || b == b'\r');
    match bytes[offset..].iter().take(4096).position(|&b| b == b'\n') {
        Some(nl) => printable(&bytes[offset..offset + nl]).then_some(offset + nl + 1),
        // a trailing header line without a final newline
        None if bytes.len() - offset <= 4096 && printable(&bytes[offset..]) => Some(bytes.len()),
        None => None,
    }
}

pub fn parse_aedat(bytes: &[u8]) -> Result<ParsedAedat, AerIoError> {
    let mut offset = 0usize;
    let mut version = None;
    let mut comment_lines = Vec::new();
    while offset < bytes.len() && bytes[offset] == b'#' {
        let end = match header_line_end(bytes, offset) {
            Some(end) => end,
            None => break,
        };
        let line = String::from_utf8_lossy(&bytes[offset..end]).trim_end().to_string();
        if let Some(rest) = line.strip_prefix("#!AER-DAT") {
            version = Some(match rest.trim() {
                "1.0" => AedatVersion::V1,
                "2.0" => AedatVersion::V2,
                _ => return Err(AerIoError::UnknownVersion(line)),
            });
        }
        comment_lines.push(line);
        offset = end;
    }
    let version = version.unwrap_or(AedatVersion::V1);
    let rec_len = version.record_len();

    let payload = &bytes[offset..];
    if payload.len() % rec_len != 0 {
        let whole = payload.len() / rec_len * rec_len;
        return Err(AerIoError::TruncatedRecord {
            offset: offset + whole,
            expected: rec_len,
            got: payload.len() - whole,
        });
    }
    let mut events = Vec::with_capacity(payload.len() / rec_len);
    for rec in payload.chunks_exact(rec_len) {
        let (addr, ts) = match version {
            AedatVersion::V1 => (
                u16::from_be_bytes([rec[0], rec[1]]) as u32,
                u32::from_be_bytes([rec[2], rec[3], rec[4], rec[5]]),
            ),
            AedatVersion::V2 => (
                u32::from_be_bytes([rec[0], rec[1], rec[2], rec[3]]),
                u32::from_be_bytes([rec[4], rec[5], rec[6], rec[7]]),
            ),
        };
        let mut e = decode_address(addr);
        e.t = ts as u64;
        events.push(e);
    }
    let (stream, reordered_events) =
        EventStream::from_unordered(DVS128_SIZE, DVS128_SIZE, events)?;
    Ok(ParsedAedat { header: AedatHeader { version, comment_lines }, stream, reordered_events })
}

/// Serializes a stream as an AEDAT file (version line + records).
pub fn write_aedat(stream: &EventStream, version: AedatVersion) -> Result<Vec<u8>, AerIoError> {
    let mut out = Vec::with_capacity(16 + stream.len() * version.record_len());
    out.extend_from_slice(version.version_line().as_bytes());
    out.push(b'\n');
    for e in stream.events() {
        let addr = encode_address(e)?;
        if e.t > u32::MAX as u64 {
            return Err(AerIoError::TimestampOverflow(e.t));
        }
        let ts = e.t as u32;
        match version {
            AedatVersion::V1 => {
                out.extend_from_slice(&(addr as u16).to_be_bytes());
                out.extend_from_slice(&ts.to_be_bytes());
            }
            AedatVersion::V2 => {
                out.extend_from_slice(&addr.to_be_bytes());
                out.extend_from_slice(&ts.to_be_bytes());
            }
        }
    }
    Ok(out)
}

/// Reads and parses an AEDAT file from disk.
pub fn read_aedat_file(path: &std::path::Path) -> Result<ParsedAedat, AerIoError> {
    let bytes = std::fs::read(path)?;
    parse_aedat(&bytes)
}
