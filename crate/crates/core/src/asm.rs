//! Two-pass assembler and disassembler.
//!
//! Source grammar, line oriented:
//!
//! ```text
//! line    := [marker] [label ':'] [stmt] [';' comment]
//! stmt    := MNEMONIC [operand] | ".byte" (number | label) | ".org" number
//! operand := number | label            number := decimal | 0x hex
//! label   := [A-Za-z_][A-Za-z0-9_]*
//! marker  := two-digit hex address '<' 0x20 followed by ':'  (listing lines)
//! ```
//!
//! Mnemonics and directives are case-insensitive; labels are case-sensitive.
//! Branch opcodes encode their targets (net +3 forward, -2 backward), so
//! branch mnemonics take no operand.
//!
//! Disassembly emits listing lines (`"00: FF  HLT"`). A leading `NN:` with
//! `NN < 0x20` cannot be a label (labels never start with a digit), so the
//! parser reads it as an origin marker and skips the raw-byte column; the
//! result is that a listing re-assembles to the exact same bytes.

use std::collections::BTreeMap;
use std::fmt;

use crate::image::{ImageError, MemoryImage};
use crate::isa::{self, Instruction, Mnemonic, OperandKind};

/// One parsed source element. A line holding both a label and an
/// instruction yields two statements with the same line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    /// 1-based source line.
    pub line: usize,
    pub kind: StatementKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementKind {
    /// `name:` — binds `name` to the current placement address.
    Label(String),
    /// Mnemonic plus optional operand; arity already checked by the parser.
    Instruction {
        mnemonic: Mnemonic,
        operand: Option<Operand>,
    },
    /// `.byte payload` — places one literal byte.
    Byte(Operand),
    /// `.org addr` — moves the placement counter.
    Org(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Number(u64),
    Label(String),
}

/// Assembly failure; every variant carries its 1-based source line.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct AssemblyError {
    pub line: usize,
    pub kind: AssemblyErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssemblyErrorKind {
    Syntax(String),
    UnknownMnemonic(String),
    DuplicateLabel(String),
    UndefinedLabel(String),
    OperandRange { value: u64, max: u64 },
    ImageOverflow { addr: u64 },
    AddressCollision { addr: u8 },
}

impl fmt::Display for AssemblyErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyErrorKind::Syntax(msg) => write!(f, "syntax: {msg}"),
            AssemblyErrorKind::UnknownMnemonic(m) => write!(f, "unknown-mnemonic: {m:?}"),
            AssemblyErrorKind::DuplicateLabel(l) => write!(f, "duplicate-label: {l:?}"),
            AssemblyErrorKind::UndefinedLabel(l) => write!(f, "undefined-label: {l:?}"),
            AssemblyErrorKind::OperandRange { value, max } => {
                write!(f, "operand-range: {value} exceeds {max}")
            }
            AssemblyErrorKind::ImageOverflow { addr } => {
                write!(
                    f,
                    "image-overflow: address {addr} is outside the 32-byte space"
                )
            }
            AssemblyErrorKind::AddressCollision { addr } => {
                write!(f, "address-collision: address {addr} assembled twice")
            }
        }
    }
}

fn err(line: usize, kind: AssemblyErrorKind) -> AssemblyError {
    AssemblyError { line, kind }
}

fn syntax(line: usize, msg: impl Into<String>) -> AssemblyError {
    err(line, AssemblyErrorKind::Syntax(msg.into()))
}

fn is_ident(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Listing-line origin marker: `NN:` with `NN` a hex address below 0x20.
/// Such a token can never be a label (labels cannot start with a digit).
fn listing_marker(token: &str) -> Option<u8> {
    let body = token.strip_suffix(':')?;
    let bytes = body.as_bytes();
    if bytes.len() != 2 || !bytes.iter().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    let addr = u8::from_str_radix(body, 16).ok()?;
    (addr < 0x20).then_some(addr)
}

fn is_hex_pair(token: &str) -> bool {
    let bytes = token.as_bytes();
    bytes.len() == 2 && bytes.iter().all(|b| b.is_ascii_hexdigit())
}

fn parse_number(token: &str) -> Option<u64> {
    if let Some(hex) = token
        .strip_prefix("0x")
        .or_else(|| token.strip_prefix("0X"))
    {
        if hex.is_empty() || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        u64::from_str_radix(hex, 16).ok()
    } else {
        if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        token.parse().ok()
    }
}

fn parse_operand(line: usize, token: &str) -> Result<Operand, AssemblyError> {
    if let Some(n) = parse_number(token) {
        Ok(Operand::Number(n))
    } else if is_ident(token) {
        Ok(Operand::Label(token.to_string()))
    } else {
        Err(syntax(line, format!("malformed operand {token:?}")))
    }
}

/// Parses source text into statements. Checks lexical form and operand
/// arity; address and range checking happen in [`assemble`].
pub fn parse_source(source: &str) -> Result<Vec<Statement>, AssemblyError> {
    let mut statements = Vec::new();
    for (idx, raw_line) in source.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split(';').next().unwrap_or("");
        let mut tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }

        if let Some(addr) = listing_marker(tokens[0]) {
            statements.push(Statement {
                line,
                kind: StatementKind::Org(addr as u64),
            });
            tokens.remove(0);
            // Listing lines carry a raw-byte column before the mnemonic;
            // it is redundant with the re-encoded instruction, so skip it.
            if tokens.len() >= 2 && is_hex_pair(tokens[0]) {
                tokens.remove(0);
            }
        }

        if let Some(name) = tokens.first().and_then(|t| t.strip_suffix(':')) {
            if !is_ident(name) {
                return Err(syntax(line, format!("malformed label {name:?}")));
            }
            statements.push(Statement {
                line,
                kind: StatementKind::Label(name.to_string()),
            });
            tokens.remove(0);
        }

        let Some(&head) = tokens.first() else {
            continue;
        };
        let args = &tokens[1..];

        if head.eq_ignore_ascii_case(".byte") {
            let [payload] = args else {
                return Err(syntax(line, ".byte takes exactly one payload"));
            };
            statements.push(Statement {
                line,
                kind: StatementKind::Byte(parse_operand(line, payload)?),
            });
        } else if head.eq_ignore_ascii_case(".org") {
            let [addr] = args else {
                return Err(syntax(line, ".org takes exactly one address"));
            };
            let n = parse_number(addr)
                .ok_or_else(|| syntax(line, format!("malformed address {addr:?}")))?;
            statements.push(Statement {
                line,
                kind: StatementKind::Org(n),
            });
        } else if head.starts_with('.') {
            return Err(syntax(line, format!("unknown directive {head:?}")));
        } else {
            let Some(mnemonic) = Mnemonic::parse(head) else {
                return Err(err(
                    line,
                    AssemblyErrorKind::UnknownMnemonic(head.to_string()),
                ));
            };
            let operand = match (mnemonic.operand_kind(), args) {
                (OperandKind::None, []) => None,
                (OperandKind::None, [_, ..]) => {
                    return Err(syntax(
                        line,
                        format!("{mnemonic} takes no operand (branch targets are implied)"),
                    ));
                }
                (_, [op]) => Some(parse_operand(line, op)?),
                (_, []) => {
                    return Err(syntax(line, format!("{mnemonic} requires an operand")));
                }
                (_, [_, _, ..]) => {
                    return Err(syntax(line, format!("too many operands for {mnemonic}")));
                }
            };
            statements.push(Statement {
                line,
                kind: StatementKind::Instruction { mnemonic, operand },
            });
        }
    }
    Ok(statements)
}

/// Two-pass assembly: pass one walks placement to bind labels, pass two
/// resolves operands and encodes bytes.
pub fn assemble(statements: &[Statement]) -> Result<MemoryImage, AssemblyError> {
    let max_addr = isa::ADDR_SPACE as u64 - 1;

    // Pass 1: assign addresses to labels.
    let mut symbols: BTreeMap<&str, u8> = BTreeMap::new();
    let mut counter: u64 = 0;
    for st in statements {
        match &st.kind {
            StatementKind::Label(name) => {
                if counter > max_addr {
                    return Err(err(
                        st.line,
                        AssemblyErrorKind::ImageOverflow { addr: counter },
                    ));
                }
                if symbols.insert(name, counter as u8).is_some() {
                    return Err(err(
                        st.line,
                        AssemblyErrorKind::DuplicateLabel(name.clone()),
                    ));
                }
            }
            StatementKind::Org(addr) => {
                if *addr > max_addr {
                    return Err(err(
                        st.line,
                        AssemblyErrorKind::OperandRange {
                            value: *addr,
                            max: max_addr,
                        },
                    ));
                }
                counter = *addr;
            }
            StatementKind::Instruction { .. } | StatementKind::Byte(_) => {
                if counter > max_addr {
                    return Err(err(
                        st.line,
                        AssemblyErrorKind::ImageOverflow { addr: counter },
                    ));
                }
                counter += 1;
            }
        }
    }

    let resolve = |line: usize, operand: &Operand| -> Result<u64, AssemblyError> {
        match operand {
            Operand::Number(n) => Ok(*n),
            Operand::Label(name) => symbols
                .get(name.as_str())
                .map(|&a| a as u64)
                .ok_or_else(|| err(line, AssemblyErrorKind::UndefinedLabel(name.clone()))),
        }
    };
    let range = |line: usize, value: u64, max: u64| -> Result<u8, AssemblyError> {
        if value > max {
            Err(err(line, AssemblyErrorKind::OperandRange { value, max }))
        } else {
            Ok(value as u8)
        }
    };
    let place = |line: usize,
                 image: &mut MemoryImage,
                 counter: &mut u64,
                 byte: u8|
     -> Result<(), AssemblyError> {
        if *counter > max_addr {
            return Err(err(
                line,
                AssemblyErrorKind::ImageOverflow { addr: *counter },
            ));
        }
        image.set(*counter as u8, byte).map_err(|e| match e {
            ImageError::Collision(addr) => err(line, AssemblyErrorKind::AddressCollision { addr }),
            ImageError::AddressOutOfRange(addr) => {
                err(line, AssemblyErrorKind::ImageOverflow { addr: addr as u64 })
            }
        })?;
        *counter += 1;
        Ok(())
    };

    // Pass 2: resolve, encode, place.
    let mut image = MemoryImage::new();
    for (name, addr) in &symbols {
        image.define_symbol(name, *addr);
    }
    let mut counter: u64 = 0;
    for st in statements {
        match &st.kind {
            StatementKind::Label(_) => {}
            StatementKind::Org(addr) => counter = *addr,
            StatementKind::Byte(payload) => {
                let value = resolve(st.line, payload)?;
                let byte = range(st.line, value, 0xff)?;
                place(st.line, &mut image, &mut counter, byte)?;
            }
            StatementKind::Instruction { mnemonic, operand } => {
                let operand = match (mnemonic.operand_kind(), operand) {
                    (OperandKind::MemAddr, Some(op)) => {
                        Some(range(st.line, resolve(st.line, op)?, max_addr)?)
                    }
                    (OperandKind::Immediate, Some(op)) => {
                        Some(range(st.line, resolve(st.line, op)?, isa::IMM_MASK as u64)?)
                    }
                    (OperandKind::None, None) => None,
                    // Arity is checked at parse time; a hand-built statement
                    // stream that violates it is malformed.
                    _ => return Err(syntax(st.line, format!("operand arity for {mnemonic}"))),
                };
                let instr = Instruction::from_parts(*mnemonic, operand)
                    .ok_or_else(|| syntax(st.line, format!("operand arity for {mnemonic}")))?;
                let byte = isa::encode(instr).map_err(|e| {
                    let (value, max) = match e {
                        isa::EncodeError::MemAddr(v) => (v as u64, max_addr),
                        isa::EncodeError::Immediate(v) => (v as u64, isa::IMM_MASK as u64),
                    };
                    err(st.line, AssemblyErrorKind::OperandRange { value, max })
                })?;
                place(st.line, &mut image, &mut counter, byte)?;
            }
        }
    }
    Ok(image)
}

/// Parses and assembles in one call.
pub fn assemble_source(source: &str) -> Result<MemoryImage, AssemblyError> {
    assemble(&parse_source(source)?)
}

/// Renders an image as a listing: `"addr: byte  mnemonic [operand]"`, one
/// line per occupied byte. Decode is total, so every byte has a line, and
/// re-assembling the listing reproduces the bytes exactly.
pub fn disassemble(image: &MemoryImage) -> String {
    let mut out = String::new();
    for (addr, byte) in image.iter() {
        let instr = isa::decode(byte);
        out.push_str(&format!("{addr:02X}: {byte:02X}  {instr}\n"));
    }
    out
}
