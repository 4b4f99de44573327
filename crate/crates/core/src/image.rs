//! Sparse 32-byte memory images and their hex file format.
//!
//! An image is what the assembler produces and what the simulators load: a
//! map from 5-bit addresses to bytes, plus the symbol table that assembly
//! left behind. The text format is whitespace-separated two-digit hex byte
//! tokens in address order, with `@HH` markers (hex) introducing each
//! discontinuity and `//` comments running to end of line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::isa::ADDR_SPACE;

/// Sparse byte image over the 5-bit address space, with optional symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryImage {
    bytes: BTreeMap<u8, u8>,
    symbols: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("address {0} is outside the 32-byte address space")]
    AddressOutOfRange(u32),
    #[error("address {0} is already occupied")]
    Collision(u8),
}

/// Hex image text that does not parse. `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct HexParseError {
    pub line: usize,
    pub kind: HexParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HexParseErrorKind {
    #[error("malformed token {0:?} (expected a two-digit hex byte or @HH marker)")]
    MalformedToken(String),
    #[error("address {0:#04x} is outside the 32-byte address space")]
    AddressOutOfRange(u32),
    #[error("duplicate byte for address {0}")]
    DuplicateAddress(u8),
}

impl MemoryImage {
    pub fn new() -> Self {
        Self::default()
    }

    /// Places a byte; refuses addresses outside 0..=31 and double placement.
    pub fn set(&mut self, addr: u8, byte: u8) -> Result<(), ImageError> {
        if addr as usize >= ADDR_SPACE {
            return Err(ImageError::AddressOutOfRange(addr as u32));
        }
        if self.bytes.contains_key(&addr) {
            return Err(ImageError::Collision(addr));
        }
        self.bytes.insert(addr, byte);
        Ok(())
    }

    /// Replaces a byte unconditionally (for patching, e.g. a data cell).
    pub fn patch(&mut self, addr: u8, byte: u8) -> Result<(), ImageError> {
        if addr as usize >= ADDR_SPACE {
            return Err(ImageError::AddressOutOfRange(addr as u32));
        }
        self.bytes.insert(addr, byte);
        Ok(())
    }

    pub fn get(&self, addr: u8) -> Option<u8> {
        self.bytes.get(&addr).copied()
    }

    /// Occupied (address, byte) pairs in ascending address order.
    pub fn iter(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        self.bytes.iter().map(|(&a, &b)| (a, b))
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Records a symbol (label) address. Last definition wins; the assembler
    /// rejects duplicates before ever getting here.
    pub fn define_symbol(&mut self, name: &str, addr: u8) {
        self.symbols.insert(name.to_string(), addr);
    }

    pub fn symbol(&self, name: &str) -> Option<u8> {
        self.symbols.get(name).copied()
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, u8)> + '_ {
        self.symbols.iter().map(|(n, &a)| (n.as_str(), a))
    }

    /// Byte-content equality, ignoring symbols.
    pub fn same_bytes(&self, other: &MemoryImage) -> bool {
        self.bytes == other.bytes
    }
}

impl FromIterator<(u8, u8)> for MemoryImage {
    /// Builds from pairs; panics on invalid input (test/infra convenience).
    fn from_iter<T: IntoIterator<Item = (u8, u8)>>(iter: T) -> Self {
        let mut image = MemoryImage::new();
        for (addr, byte) in iter {
            image.set(addr, byte).expect("valid image literal");
        }
        image
    }
}

/// Renders an image as hex text. Contiguous runs print as byte tokens; each
/// gap emits an `@HH` marker first. Sixteen bytes per line.
pub fn format_hex(image: &MemoryImage) -> String {
    let mut out = String::new();
    let mut expected = 0u8;
    let mut on_line = 0;
    for (addr, byte) in image.iter() {
        if addr != expected {
            if on_line > 0 {
                out.push('\n');
            }
            let _ = write!(out, "@{addr:02X}");
            out.push(' ');
            on_line = 1;
        } else if on_line == 0 {
            // nothing yet on this line
        } else if on_line >= 16 {
            out.push('\n');
            on_line = 0;
        } else {
            out.push(' ');
        }
        let _ = write!(out, "{byte:02X}");
        on_line += 1;
        expected = addr.wrapping_add(1);
    }
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

/// Parses hex image text. Inverse of [`format_hex`]; also accepts arbitrary
/// whitespace layout and `//` comments.
pub fn parse_hex(text: &str) -> Result<MemoryImage, HexParseError> {
    let mut image = MemoryImage::new();
    let mut cursor: u32 = 0;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find("//") {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        for token in content.split_whitespace() {
            if let Some(marker) = token.strip_prefix('@') {
                let addr = parse_hex_pair(marker).ok_or_else(|| HexParseError {
                    line,
                    kind: HexParseErrorKind::MalformedToken(token.to_string()),
                })?;
                if addr as usize >= ADDR_SPACE {
                    return Err(HexParseError {
                        line,
                        kind: HexParseErrorKind::AddressOutOfRange(addr as u32),
                    });
                }
                cursor = addr as u32;
                continue;
            }
            let byte = parse_hex_pair(token).ok_or_else(|| HexParseError {
                line,
                kind: HexParseErrorKind::MalformedToken(token.to_string()),
            })?;
            if cursor as usize >= ADDR_SPACE {
                return Err(HexParseError {
                    line,
                    kind: HexParseErrorKind::AddressOutOfRange(cursor),
                });
            }
            image.set(cursor as u8, byte).map_err(|e| HexParseError {
                line,
                kind: match e {
                    ImageError::Collision(a) => HexParseErrorKind::DuplicateAddress(a),
                    ImageError::AddressOutOfRange(a) => HexParseErrorKind::AddressOutOfRange(a),
                },
            })?;
            cursor += 1;
        }
    }
    Ok(image)
}

fn parse_hex_pair(token: &str) -> Option<u8> {
    let bytes = token.as_bytes();
    if bytes.len() != 2 || !bytes.iter().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u8::from_str_radix(token, 16).ok()
}
