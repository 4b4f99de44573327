//! Instruction set for the 8-bit accumulator machine.
//!
//! Every one of the 256 byte values decodes to exactly one instruction:
//! the seven memory-operand opcodes claim the `000`..`110` top-three-bit
//! blocks (32 encodings each), `1110` carries the 4-bit immediate add, and
//! the sixteen `1111xxxx` values are fixed single-byte operations. Decode is
//! therefore total and `encode(decode(b)) == b` for every byte.

use std::fmt;

/// Number of addressable bytes (5-bit address space).
pub const ADDR_SPACE: usize = 32;
/// Memory-operand mask: low five bits of a memory-class opcode.
pub const MEM_ADDR_MASK: u8 = 0x1f;
/// Immediate mask: low four bits of an `ADDI` encoding.
pub const IMM_MASK: u8 = 0x0f;

/// One decoded instruction. Operand ranges are enforced by [`encode`];
/// [`decode`] only ever produces in-range operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instruction {
    /// `000MMMMM` — load accumulator from memory.
    Lda(u8),
    /// `001MMMMM` — store accumulator to memory.
    Sta(u8),
    /// `010MMMMM` — add memory to accumulator.
    Add(u8),
    /// `011MMMMM` — subtract memory from accumulator.
    Sub(u8),
    /// `100MMMMM` — bitwise AND accumulator with memory.
    And(u8),
    /// `101MMMMM` — bitwise OR accumulator with memory.
    Or(u8),
    /// `110MMMMM` — bitwise XOR accumulator with memory.
    Xor(u8),
    /// `1110XXXX` — add a 4-bit immediate (zero-extended) to the accumulator.
    Addi(u8),
    /// `11110000` — jump: PC takes the accumulator value (low five bits).
    Jmp,
    /// `11110001` — jump to subroutine: PC takes the accumulator while the
    /// accumulator captures the incremented PC (the return address).
    Jsr,
    /// `11110010` — branch forward (net +3) when the accumulator is zero.
    BeqFwd,
    /// `11110011` — branch backward (net -2) when the accumulator is zero.
    BeqBwd,
    /// `11110100` — branch forward (net +3) when the accumulator is non-zero.
    BneFwd,
    /// `11110101` — branch backward (net -2) when the accumulator is non-zero.
    BneBwd,
    /// `11110110` — shift accumulator left one bit.
    Shl,
    /// `11110111` — logical shift accumulator right one bit.
    Shr,
    /// `11111000` — shift accumulator left four bits.
    Shl4,
    /// `11111001` — rotate accumulator left one bit.
    Rol,
    /// `11111010` — rotate accumulator right one bit.
    Ror,
    /// `11111011` — load accumulator indirect: acc = M[acc].
    Ldar,
    /// `11111100` — decrement accumulator.
    Dec,
    /// `11111101` — clear accumulator to zero.
    Clr,
    /// `11111110` — invert (bitwise complement) the accumulator.
    Inv,
    /// `11111111` — halt.
    Hlt,
}

/// Instruction group, mirroring how the opcode map is organized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstructionClass {
    /// `ADDI`: carries a 4-bit immediate.
    Immediate,
    /// Memory-operand opcodes (`LDA` .. `XOR`): carry a 5-bit address.
    VariableData,
    /// Jumps, branches, and halt.
    ControlBranch,
    /// Single-byte accumulator transforms plus the indirect load.
    DataManipulation,
}

/// Bare mnemonic, without operand. Used by the assembler front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mnemonic {
    Lda,
    Sta,
    Add,
    Sub,
    And,
    Or,
    Xor,
    Addi,
    Jmp,
    Jsr,
    BeqFwd,
    BeqBwd,
    BneFwd,
    BneBwd,
    Shl,
    Shr,
    Shl4,
    Rol,
    Ror,
    Ldar,
    Dec,
    Clr,
    Inv,
    Hlt,
}

/// What kind of operand a mnemonic takes in assembly source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandKind {
    /// 5-bit memory address (0..=31).
    MemAddr,
    /// 4-bit immediate (0..=15).
    Immediate,
    /// No operand; branch targets are implied by the opcode itself.
    None,
}

/// Accumulator transform selector for the arithmetic/logic evaluator.
/// Memory and immediate adds both map to [`AluOp::Add`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AluOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Shl4,
    Rol,
    Ror,
    Dec,
    Clr,
    Inv,
}

/// Operand out of range for [`encode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("memory address {0} does not fit in 5 bits (0..=31)")]
    MemAddr(u8),
    #[error("immediate {0} does not fit in 4 bits (0..=15)")]
    Immediate(u8),
}

/// Decodes one byte. Total: every byte value is a valid instruction.
pub fn decode(byte: u8) -> Instruction {
    let m = byte & MEM_ADDR_MASK;
    match byte >> 5 {
        0b000 => Instruction::Lda(m),
        0b001 => Instruction::Sta(m),
        0b010 => Instruction::Add(m),
        0b011 => Instruction::Sub(m),
        0b100 => Instruction::And(m),
        0b101 => Instruction::Or(m),
        0b110 => Instruction::Xor(m),
        _ => match byte >> 4 {
            0b1110 => Instruction::Addi(byte & IMM_MASK),
            _ => match byte & 0x0f {
                0x0 => Instruction::Jmp,
                0x1 => Instruction::Jsr,
                0x2 => Instruction::BeqFwd,
                0x3 => Instruction::BeqBwd,
                0x4 => Instruction::BneFwd,
                0x5 => Instruction::BneBwd,
                0x6 => Instruction::Shl,
                0x7 => Instruction::Shr,
                0x8 => Instruction::Shl4,
                0x9 => Instruction::Rol,
                0xa => Instruction::Ror,
                0xb => Instruction::Ldar,
                0xc => Instruction::Dec,
                0xd => Instruction::Clr,
                0xe => Instruction::Inv,
                _ => Instruction::Hlt,
            },
        },
    }
}

/// Encodes an instruction back to its byte. Rejects out-of-range operands.
pub fn encode(instr: Instruction) -> Result<u8, EncodeError> {
    use Instruction::*;
    let mem = |top: u8, m: u8| {
        if m > MEM_ADDR_MASK {
            Err(EncodeError::MemAddr(m))
        } else {
            Ok(top << 5 | m)
        }
    };
    match instr {
        Lda(m) => mem(0b000, m),
        Sta(m) => mem(0b001, m),
        Add(m) => mem(0b010, m),
        Sub(m) => mem(0b011, m),
        And(m) => mem(0b100, m),
        Or(m) => mem(0b101, m),
        Xor(m) => mem(0b110, m),
        Addi(x) => {
            if x > IMM_MASK {
                Err(EncodeError::Immediate(x))
            } else {
                Ok(0b1110_0000 | x)
            }
        }
        Jmp => Ok(0xf0),
        Jsr => Ok(0xf1),
        BeqFwd => Ok(0xf2),
        BeqBwd => Ok(0xf3),
        BneFwd => Ok(0xf4),
        BneBwd => Ok(0xf5),
        Shl => Ok(0xf6),
        Shr => Ok(0xf7),
        Shl4 => Ok(0xf8),
        Rol => Ok(0xf9),
        Ror => Ok(0xfa),
        Ldar => Ok(0xfb),
        Dec => Ok(0xfc),
        Clr => Ok(0xfd),
        Inv => Ok(0xfe),
        Hlt => Ok(0xff),
    }
}

/// Classifies an instruction into its opcode-map group.
pub fn class_of(instr: Instruction) -> InstructionClass {
    instr.mnemonic().class()
}

impl Instruction {
    pub fn mnemonic(self) -> Mnemonic {
        use Instruction::*;
        match self {
            Lda(_) => Mnemonic::Lda,
            Sta(_) => Mnemonic::Sta,
            Add(_) => Mnemonic::Add,
            Sub(_) => Mnemonic::Sub,
            And(_) => Mnemonic::And,
            Or(_) => Mnemonic::Or,
            Xor(_) => Mnemonic::Xor,
            Addi(_) => Mnemonic::Addi,
            Jmp => Mnemonic::Jmp,
            Jsr => Mnemonic::Jsr,
            BeqFwd => Mnemonic::BeqFwd,
            BeqBwd => Mnemonic::BeqBwd,
            BneFwd => Mnemonic::BneFwd,
            BneBwd => Mnemonic::BneBwd,
            Shl => Mnemonic::Shl,
            Shr => Mnemonic::Shr,
            Shl4 => Mnemonic::Shl4,
            Rol => Mnemonic::Rol,
            Ror => Mnemonic::Ror,
            Ldar => Mnemonic::Ldar,
            Dec => Mnemonic::Dec,
            Clr => Mnemonic::Clr,
            Inv => Mnemonic::Inv,
            Hlt => Mnemonic::Hlt,
        }
    }

    /// The 5-bit address or 4-bit immediate, if this instruction carries one.
    pub fn operand(self) -> Option<u8> {
        use Instruction::*;
        match self {
            Lda(m) | Sta(m) | Add(m) | Sub(m) | And(m) | Or(m) | Xor(m) | Addi(m) => Some(m),
            _ => None,
        }
    }

    pub fn class(self) -> InstructionClass {
        class_of(self)
    }

    /// Builds an instruction from mnemonic + optional operand, checking arity.
    /// Range checking is left to [`encode`].
    pub fn from_parts(mnemonic: Mnemonic, operand: Option<u8>) -> Option<Instruction> {
        use Mnemonic::*;
        match (mnemonic, operand) {
            (Lda, Some(m)) => Some(Instruction::Lda(m)),
            (Sta, Some(m)) => Some(Instruction::Sta(m)),
            (Add, Some(m)) => Some(Instruction::Add(m)),
            (Sub, Some(m)) => Some(Instruction::Sub(m)),
            (And, Some(m)) => Some(Instruction::And(m)),
            (Or, Some(m)) => Some(Instruction::Or(m)),
            (Xor, Some(m)) => Some(Instruction::Xor(m)),
            (Addi, Some(x)) => Some(Instruction::Addi(x)),
            (Jmp, None) => Some(Instruction::Jmp),
            (Jsr, None) => Some(Instruction::Jsr),
            (BeqFwd, None) => Some(Instruction::BeqFwd),
            (BeqBwd, None) => Some(Instruction::BeqBwd),
            (BneFwd, None) => Some(Instruction::BneFwd),
            (BneBwd, None) => Some(Instruction::BneBwd),
            (Shl, None) => Some(Instruction::Shl),
            (Shr, None) => Some(Instruction::Shr),
            (Shl4, None) => Some(Instruction::Shl4),
            (Rol, None) => Some(Instruction::Rol),
            (Ror, None) => Some(Instruction::Ror),
            (Ldar, None) => Some(Instruction::Ldar),
            (Dec, None) => Some(Instruction::Dec),
            (Clr, None) => Some(Instruction::Clr),
            (Inv, None) => Some(Instruction::Inv),
            (Hlt, None) => Some(Instruction::Hlt),
            _ => None,
        }
    }
}

/// Returns the canonical mnemonic text for an instruction.
pub fn mnemonic_of(instr: Instruction) -> &'static str {
    instr.mnemonic().as_str()
}

impl Mnemonic {
    /// All 24 mnemonics in opcode-map order.
    pub const ALL: [Mnemonic; 24] = [
        Mnemonic::Lda,
        Mnemonic::Sta,
        Mnemonic::Add,
        Mnemonic::Sub,
        Mnemonic::And,
        Mnemonic::Or,
        Mnemonic::Xor,
        Mnemonic::Addi,
        Mnemonic::Jmp,
        Mnemonic::Jsr,
        Mnemonic::BeqFwd,
        Mnemonic::BeqBwd,
        Mnemonic::BneFwd,
        Mnemonic::BneBwd,
        Mnemonic::Shl,
        Mnemonic::Shr,
        Mnemonic::Shl4,
        Mnemonic::Rol,
        Mnemonic::Ror,
        Mnemonic::Ldar,
        Mnemonic::Dec,
        Mnemonic::Clr,
        Mnemonic::Inv,
        Mnemonic::Hlt,
    ];

    pub fn as_str(self) -> &'static str {
        use Mnemonic::*;
        match self {
            Lda => "LDA",
            Sta => "STA",
            Add => "ADD",
            Sub => "SUB",
            And => "AND",
            Or => "OR",
            Xor => "XOR",
            Addi => "ADDI",
            Jmp => "JMP",
            Jsr => "JSR",
            BeqFwd => "BEQ_FWD",
            BeqBwd => "BEQ_BWD",
            BneFwd => "BNE_FWD",
            BneBwd => "BNE_BWD",
            Shl => "SHL",
            Shr => "SHR",
            Shl4 => "SHL4",
            Rol => "ROL",
            Ror => "ROR",
            Ldar => "LDAR",
            Dec => "DEC",
            Clr => "CLR",
            Inv => "INV",
            Hlt => "HLT",
        }
    }

    /// Case-insensitive mnemonic lookup.
    pub fn parse(text: &str) -> Option<Mnemonic> {
        let upper = text.to_ascii_uppercase();
        Mnemonic::ALL.iter().copied().find(|m| m.as_str() == upper)
    }

    pub fn operand_kind(self) -> OperandKind {
        use Mnemonic::*;
        match self {
            Lda | Sta | Add | Sub | And | Or | Xor => OperandKind::MemAddr,
            Addi => OperandKind::Immediate,
            _ => OperandKind::None,
        }
    }

    pub fn class(self) -> InstructionClass {
        use Mnemonic::*;
        match self {
            Addi => InstructionClass::Immediate,
            Lda | Sta | Add | Sub | And | Or | Xor => InstructionClass::VariableData,
            Jmp | Jsr | BeqFwd | BeqBwd | BneFwd | BneBwd | Hlt => InstructionClass::ControlBranch,
            Shl | Shr | Shl4 | Rol | Ror | Ldar | Dec | Clr | Inv => {
                InstructionClass::DataManipulation
            }
        }
    }

    /// Accumulator transform performed by this mnemonic, if it is an ALU op.
    pub fn alu_op(self) -> Option<AluOp> {
        use Mnemonic::*;
        match self {
            Add | Addi => Some(AluOp::Add),
            Sub => Some(AluOp::Sub),
            And => Some(AluOp::And),
            Or => Some(AluOp::Or),
            Xor => Some(AluOp::Xor),
            Shl => Some(AluOp::Shl),
            Shr => Some(AluOp::Shr),
            Shl4 => Some(AluOp::Shl4),
            Rol => Some(AluOp::Rol),
            Ror => Some(AluOp::Ror),
            Dec => Some(AluOp::Dec),
            Clr => Some(AluOp::Clr),
            Inv => Some(AluOp::Inv),
            _ => None,
        }
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.operand() {
            Some(op) => write!(f, "{} {}", self.mnemonic(), op),
            None => write!(f, "{}", self.mnemonic()),
        }
    }
}

impl fmt::Display for InstructionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            InstructionClass::Immediate => "immediate",
            InstructionClass::VariableData => "variable-data",
            InstructionClass::ControlBranch => "control-branch",
            InstructionClass::DataManipulation => "data-manipulation",
        };
        f.write_str(name)
    }
}
