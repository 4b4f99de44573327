//! Toolchain for an 8-bit accumulator machine with a 32-byte address space.
//!
//! The machine executes 24 single-byte instructions: memory-operand ALU
//! ops and loads/stores address the low five opcode bits, a 4-bit
//! immediate add, accumulator-indirect jump and subroutine call, four
//! conditional branches with fixed offsets baked into the opcode, and a
//! block of single-operand accumulator ops up to HLT. Memory is RAM plus
//! an input/output byte (button in, display latch out) plus optional ROM;
//! the default map is 17 bytes of RAM with the I/O byte at 16 and a
//! ten-entry seven-segment table in ROM.
//!
//! Two independent implementations of that contract live here:
//!
//! * [`arch`] — an instruction-level reference model, one step per
//!   instruction;
//! * [`rtl`] — a cycle-accurate two-phase (fetch/execute) model built from
//!   a control word, muxes, and a scan chain, two ticks per instruction.
//!
//! [`cosim`] runs them in lockstep and reports the first architectural
//! mismatch; its fault-injection catalog proves the comparison can see
//! every control-word field. [`asm`] assembles and disassembles the
//! textual form, [`image`] holds loadable memory images and their hex
//! interchange format, [`schedule`] scripts the button input, and
//! [`programs`] bundles a display demo plus a directed suite covering the
//! whole instruction set.

pub mod arch;
pub mod asm;
pub mod cosim;
pub mod image;
pub mod isa;
pub mod programs;
pub mod rtl;
pub mod schedule;

pub use arch::{ArchMachine, ArchState, MemoryMapConfig, RunOutcome, SEVEN_SEGMENT_DIGITS};
pub use asm::{assemble_source, disassemble, AssemblyError};
pub use cosim::{fuzz_cosim, run_lockstep, Divergence, FuzzConfig, FuzzReport};
pub use image::{format_hex, parse_hex, HexParseError, MemoryImage};
pub use isa::{decode, encode, Instruction, InstructionClass, Mnemonic};
pub use rtl::{control_signals, ControlSignals, Phase, RtlMachine, RtlState};
pub use schedule::{InputSchedule, IoInputs};
