//! Versioned, checksummed files for keys, states, circuits and operators.
//!
//! Layout: one ASCII header line `PSEUDOENT/<version> <kind> <len> <sha256>`
//! followed by exactly `len` payload bytes. Truncation or corruption shows up
//! as a length or checksum failure before the payload is parsed.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{io_err, HarnessError, Result};

pub const MAGIC: &str = "PSEUDOENT";
pub const ENVELOPE_VERSION: u32 = 1;

/// Payload kinds stored in envelopes.
pub mod kind {
    pub const FUNCTION_KEY: &str = "function-key";
    pub const SINGLE_CUT_KEY: &str = "single-cut-key";
    pub const MULTI_CUT_KEY: &str = "multi-cut-key";
    pub const STATE: &str = "state";
    pub const CIRCUIT: &str = "circuit";
    pub const OPERATOR: &str = "operator";
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn encode(kind: &str, payload: &[u8]) -> Vec<u8> {
    assert!(
        !kind.contains(char::is_whitespace),
        "envelope kinds are single tokens"
    );
    let header = format!(
        "{MAGIC}/{ENVELOPE_VERSION} {kind} {} {}\n",
        payload.len(),
        sha256_hex(payload)
    );
    let mut out = header.into_bytes();
    out.extend_from_slice(payload);
    out
}

/// Returns `(kind, payload)` after checking version, length and checksum.
pub fn decode(bytes: &[u8]) -> Result<(String, &[u8])> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| HarnessError::Envelope("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| HarnessError::Envelope("header is not UTF-8".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    let [tag, kind, len, sum] = parts[..] else {
        return Err(HarnessError::Envelope(format!(
            "header has {} fields, expected 4",
            parts.len()
        )));
    };
    let expected_tag = format!("{MAGIC}/{ENVELOPE_VERSION}");
    if tag != expected_tag {
        return Err(HarnessError::Version {
            expected: expected_tag,
            found: tag.to_string(),
        });
    }
    let len: usize = len
        .parse()
        .map_err(|_| HarnessError::Envelope(format!("bad length {len:?}")))?;
    let payload = &bytes[nl + 1..];
    let found = sha256_hex(payload);
    if payload.len() != len || found != sum {
        return Err(HarnessError::Checksum {
            expected: sum.to_string(),
            found,
        });
    }
    Ok((kind.to_string(), payload))
}

/// Decodes and insists on `kind`.
pub fn decode_kind<'a>(bytes: &'a [u8], kind: &str) -> Result<&'a [u8]> {
    let (found, payload) = decode(bytes)?;
    if found != kind {
        return Err(HarnessError::Kind {
            expected: kind.to_string(),
            found,
        });
    }
    Ok(payload)
}

pub fn write(path: &Path, kind: &str, payload: &[u8]) -> Result<()> {
    fs::write(path, encode(kind, payload)).map_err(io_err(path))
}

pub fn read(path: &Path) -> Result<(String, Vec<u8>)> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let (kind, payload) = decode(&bytes)?;
    Ok((kind, payload.to_vec()))
}
