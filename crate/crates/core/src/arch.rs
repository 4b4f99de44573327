//! Instruction-level simulator: the reference model for the machine.
//!
//! One call to [`ArchMachine::step`] retires one instruction. All data
//! arithmetic wraps modulo 256 (no flags); the program counter wraps modulo
//! 32. Branches move the PC a net +3 (forward) or -2 (backward) from the
//! branch's own address. `JMP`/`JSR` load the PC from the accumulator's low
//! five bits, with `JSR` simultaneously capturing the incremented PC — the
//! return address — in the accumulator. `HLT` leaves the PC one past itself
//! and freezes the state.
//!
//! The memory map is parameterized: `ram_size` read/write bytes, one of
//! them (`io_addr`) doubling as the I/O port, then an optional constant ROM
//! appended directly after RAM, then zeros to the end of the 32-byte space.
//! Reading the I/O byte returns the button state in bit 0 (never the last
//! written value); writing it latches the byte to the output port and the
//! underlying RAM cell.

use crate::image::MemoryImage;
use crate::isa::{self, AluOp, Instruction, ADDR_SPACE};
use crate::schedule::{InputSchedule, IoInputs};

/// Display patterns for digits 0-9: bit 0 = segment a .. bit 6 = segment g,
/// active high, bit 7 unused. This is the default ROM content.
pub const SEVEN_SEGMENT_DIGITS: [u8; 10] =
    [0x3f, 0x06, 0x5b, 0x4f, 0x66, 0x6d, 0x7d, 0x07, 0x7f, 0x6f];

/// Default number of RAM bytes (the last one being the I/O port).
pub const DEFAULT_RAM_SIZE: usize = 17;

/// Memory-map parameters shared by both simulators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryMapConfig {
    ram_size: usize,
    io_addr: u8,
    rom: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("ram_size {0} must be between 1 and 32")]
    RamSizeOutOfRange(usize),
    #[error("RAM ({ram_size}) plus ROM ({rom_len}) exceeds the 32-byte space")]
    RomOverflow { ram_size: usize, rom_len: usize },
    #[error("io_addr {io_addr} must lie inside RAM (0..{ram_size})")]
    IoAddrOutsideRam { io_addr: u8, ram_size: usize },
}

impl MemoryMapConfig {
    pub fn new(ram_size: usize, io_addr: u8, rom: Vec<u8>) -> Result<Self, ConfigError> {
        if ram_size == 0 || ram_size > ADDR_SPACE {
            return Err(ConfigError::RamSizeOutOfRange(ram_size));
        }
        if ram_size + rom.len() > ADDR_SPACE {
            return Err(ConfigError::RomOverflow {
                ram_size,
                rom_len: rom.len(),
            });
        }
        if io_addr as usize >= ram_size {
            return Err(ConfigError::IoAddrOutsideRam { io_addr, ram_size });
        }
        Ok(MemoryMapConfig {
            ram_size,
            io_addr,
            rom,
        })
    }

    /// Default map with the I/O byte last in RAM and the digit ROM appended.
    pub fn with_ram_size(ram_size: usize) -> Result<Self, ConfigError> {
        Self::new(
            ram_size,
            ram_size.saturating_sub(1) as u8,
            SEVEN_SEGMENT_DIGITS.to_vec(),
        )
    }

    pub fn ram_size(&self) -> usize {
        self.ram_size
    }

    pub fn io_addr(&self) -> u8 {
        self.io_addr
    }

    pub fn rom(&self) -> &[u8] {
        &self.rom
    }

    /// First ROM address (ROM sits directly after RAM).
    pub fn rom_base(&self) -> u8 {
        self.ram_size as u8
    }
}

impl Default for MemoryMapConfig {
    fn default() -> Self {
        Self::with_ram_size(DEFAULT_RAM_SIZE).expect("default map is valid")
    }
}

/// Architectural state: everything a program can observe between steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchState {
    pub acc: u8,
    /// Always < 32.
    pub pc: u8,
    pub halted: bool,
    /// Last value written to the I/O byte; zero after reset.
    pub out_latch: u8,
    /// `ram_size` bytes; `ram[io_addr]` shadows the output latch.
    pub ram: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResetError {
    #[error(
        "image byte {image_byte:#04x} at address {addr} conflicts with ROM byte {rom_byte:#04x}"
    )]
    RomConflict {
        addr: u8,
        image_byte: u8,
        rom_byte: u8,
    },
    #[error("image byte at address {addr} falls outside RAM and ROM")]
    UnmappedImageByte { addr: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("stepped a halted machine")]
pub struct SteppedWhileHalted;

/// What one instruction did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepResult {
    pub executed: Instruction,
    pub pc_before: u8,
    pub pc_after: u8,
    pub acc_before: u8,
    pub acc_after: u8,
    /// Write that actually landed in RAM (including the I/O byte), if any.
    /// Stores aimed at ROM or unmapped space change nothing and record
    /// nothing.
    pub memory_write: Option<(u8, u8)>,
    pub halted_now: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Halted,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub steps: usize,
    pub outcome: RunOutcome,
    pub trace: Vec<StepResult>,
}

/// Combinational accumulator transform. `b` is ignored by the unary ops.
pub fn alu_eval(op: AluOp, a: u8, b: u8) -> u8 {
    match op {
        AluOp::Add => a.wrapping_add(b),
        AluOp::Sub => a.wrapping_sub(b),
        AluOp::And => a & b,
        AluOp::Or => a | b,
        AluOp::Xor => a ^ b,
        AluOp::Shl => a << 1,
        AluOp::Shr => a >> 1,
        AluOp::Shl4 => a << 4,
        AluOp::Rol => a.rotate_left(1),
        AluOp::Ror => a.rotate_right(1),
        AluOp::Dec => a.wrapping_sub(1),
        AluOp::Clr => 0,
        AluOp::Inv => !a,
    }
}

/// The reference machine: a memory map plus architectural state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchMachine {
    config: MemoryMapConfig,
    state: ArchState,
}

impl ArchMachine {
    /// Power-on state with an image loaded. Image bytes inside RAM
    /// initialize it; bytes inside ROM must match the configured ROM;
    /// anything else is rejected.
    pub fn reset(config: MemoryMapConfig, image: &MemoryImage) -> Result<Self, ResetError> {
        let mut ram = vec![0u8; config.ram_size()];
        for (addr, byte) in image.iter() {
            let a = addr as usize;
            if a < config.ram_size() {
                ram[a] = byte;
            } else if a < config.ram_size() + config.rom().len() {
                let rom_byte = config.rom()[a - config.ram_size()];
                if byte != rom_byte {
                    return Err(ResetError::RomConflict {
                        addr,
                        image_byte: byte,
                        rom_byte,
                    });
                }
            } else {
                return Err(ResetError::UnmappedImageByte { addr });
            }
        }
        Ok(ArchMachine {
            config,
            state: ArchState {
                acc: 0,
                pc: 0,
                halted: false,
                out_latch: 0,
                ram,
            },
        })
    }

    pub fn config(&self) -> &MemoryMapConfig {
        &self.config
    }

    pub fn state(&self) -> &ArchState {
        &self.state
    }

    /// Direct state access for harnesses that need to arrange a scenario.
    pub fn state_mut(&mut self) -> &mut ArchState {
        &mut self.state
    }

    /// Memory read as the datapath sees it: the I/O byte reads as the
    /// button bit, ROM reads its constants, unmapped space reads zero.
    /// Addresses are truncated to five bits.
    pub fn mem_read(&self, inputs: IoInputs, addr: u8) -> u8 {
        let a = (addr as usize) % ADDR_SPACE;
        if a == self.config.io_addr() as usize {
            inputs.button as u8
        } else if a < self.config.ram_size() {
            self.state.ram[a]
        } else if a < self.config.ram_size() + self.config.rom().len() {
            self.config.rom()[a - self.config.ram_size()]
        } else {
            0
        }
    }

    /// Memory write: RAM takes the byte; the I/O byte additionally latches
    /// it to the output port; ROM and unmapped space ignore it. Returns the
    /// effective write, if any.
    pub fn mem_write(&mut self, addr: u8, value: u8) -> Option<(u8, u8)> {
        let a = (addr as usize) % ADDR_SPACE;
        if a < self.config.ram_size() {
            if a == self.config.io_addr() as usize {
                self.state.out_latch = value;
            }
            self.state.ram[a] = value;
            Some((a as u8, value))
        } else {
            None
        }
    }

    /// Retires one instruction.
    pub fn step(&mut self, inputs: IoInputs) -> Result<StepResult, SteppedWhileHalted> {
        if self.state.halted {
            return Err(SteppedWhileHalted);
        }
        let p = self.state.pc;
        let byte = self.mem_read(inputs, p);
        let instr = isa::decode(byte);
        let acc_before = self.state.acc;
        let mut next_pc = (p + 1) % 32;
        let mut memory_write = None;
        let mut halted_now = false;

        use Instruction::*;
        match instr {
            Lda(m) => self.state.acc = self.mem_read(inputs, m),
            Sta(m) => memory_write = self.mem_write(m, acc_before),
            Add(m) => self.state.acc = alu_eval(AluOp::Add, acc_before, self.mem_read(inputs, m)),
            Sub(m) => self.state.acc = alu_eval(AluOp::Sub, acc_before, self.mem_read(inputs, m)),
            And(m) => self.state.acc = alu_eval(AluOp::And, acc_before, self.mem_read(inputs, m)),
            Or(m) => self.state.acc = alu_eval(AluOp::Or, acc_before, self.mem_read(inputs, m)),
            Xor(m) => self.state.acc = alu_eval(AluOp::Xor, acc_before, self.mem_read(inputs, m)),
            Addi(x) => self.state.acc = alu_eval(AluOp::Add, acc_before, x),
            Jmp => next_pc = acc_before % 32,
            Jsr => {
                // Swap: PC takes the accumulator while the accumulator takes
                // the incremented PC (the return address). Both read entry
                // values.
                next_pc = acc_before % 32;
                self.state.acc = (p + 1) % 32;
            }
            BeqFwd => {
                if acc_before == 0 {
                    next_pc = (p + 3) % 32;
                }
            }
            BeqBwd => {
                if acc_before == 0 {
                    next_pc = (p + 30) % 32;
                }
            }
            BneFwd => {
                if acc_before != 0 {
                    next_pc = (p + 3) % 32;
                }
            }
            BneBwd => {
                if acc_before != 0 {
                    next_pc = (p + 30) % 32;
                }
            }
            Ldar => self.state.acc = self.mem_read(inputs, acc_before % 32),
            Hlt => {
                self.state.halted = true;
                halted_now = true;
            }
            Shl | Shr | Shl4 | Rol | Ror | Dec | Clr | Inv => {
                let op = instr.mnemonic().alu_op().expect("unary alu op");
                self.state.acc = alu_eval(op, acc_before, 0);
            }
        }
        self.state.pc = next_pc;
        Ok(StepResult {
            executed: instr,
            pc_before: p,
            pc_after: next_pc,
            acc_before,
            acc_after: self.state.acc,
            memory_write,
            halted_now,
        })
    }

    /// Steps until halt or `max_steps`, whichever comes first. A halted
    /// machine is a fixed point: the run retires nothing and says so.
    pub fn run(&mut self, schedule: &InputSchedule, max_steps: usize) -> RunResult {
        let mut trace = Vec::new();
        for step_index in 0..max_steps {
            if self.state.halted {
                break;
            }
            let result = self
                .step(schedule.at(step_index))
                .expect("checked not halted");
            trace.push(result);
        }
        RunResult {
            steps: trace.len(),
            outcome: if self.state.halted {
                RunOutcome::Halted
            } else {
                RunOutcome::StepLimit
            },
            trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::assemble_source;
    use proptest::prelude::*;

    /// Geometry oracle for the display constants: which segments light per
    /// digit on the standard layout (a top, b upper-right, c lower-right,
    /// d bottom, e lower-left, f upper-left, g middle).
    const DIGIT_SEGMENTS: [&str; 10] = [
        "abcdef",  // 0
        "bc",      // 1
        "abdeg",   // 2
        "abcdg",   // 3
        "bcfg",    // 4
        "acdfg",   // 5
        "acdefg",  // 6
        "abc",     // 7
        "abcdefg", // 8
        "abcdfg",  // 9
    ];

    fn segments_to_bits(segments: &str) -> u8 {
        segments.bytes().fold(0u8, |acc, s| acc | 1 << (s - b'a'))
    }

    #[test]
    fn seven_segment_constants_match_display_geometry() {
        for (digit, segments) in DIGIT_SEGMENTS.iter().enumerate() {
            assert_eq!(
                SEVEN_SEGMENT_DIGITS[digit],
                segments_to_bits(segments),
                "digit {digit}"
            );
        }
    }

    fn default_machine(image: &MemoryImage) -> ArchMachine {
        ArchMachine::reset(MemoryMapConfig::default(), image).unwrap()
    }

    fn no_input() -> IoInputs {
        IoInputs::default()
    }

    use crate::image::MemoryImage;

    #[test]
    fn memory_map_decision_table_default_config() {
        let image: MemoryImage = (0u8..17).map(|a| (a, a + 1)).collect();
        let mut machine = default_machine(&image);
        machine.state_mut().ram[16] = 0x99; // shows the button overrides RAM
        for addr in 0u8..32 {
            let released = machine.mem_read(no_input(), addr);
            let pressed = machine.mem_read(IoInputs::pressed(), addr);
            match addr {
                0..=15 => {
                    assert_eq!(released, addr + 1);
                    assert_eq!(pressed, addr + 1);
                }
                16 => {
                    assert_eq!(released, 0, "I/O byte reads the button, not RAM");
                    assert_eq!(pressed, 1);
                }
                17..=26 => {
                    let expected = SEVEN_SEGMENT_DIGITS[(addr - 17) as usize];
                    assert_eq!(released, expected);
                    assert_eq!(pressed, expected);
                }
                _ => {
                    assert_eq!(released, 0);
                    assert_eq!(pressed, 0);
                }
            }
        }
        assert_eq!(machine.mem_read(no_input(), 17), 0x3f);
        assert_eq!(machine.mem_read(no_input(), 19), 0x5b);
    }

    #[test]
    fn memory_map_decision_table_small_config() {
        let config = MemoryMapConfig::with_ram_size(4).unwrap();
        assert_eq!(config.io_addr(), 3);
        assert_eq!(config.rom_base(), 4);
        let machine = ArchMachine::reset(config, &MemoryImage::new()).unwrap();
        assert_eq!(machine.mem_read(IoInputs::pressed(), 3), 1);
        assert_eq!(machine.mem_read(no_input(), 4), 0x3f); // rom[0]
        assert_eq!(machine.mem_read(no_input(), 13), 0x6f); // rom[9]
        assert_eq!(machine.mem_read(no_input(), 14), 0);
        assert_eq!(machine.mem_read(no_input(), 31), 0);
    }

    #[test]
    fn config_invariants_are_enforced() {
        assert!(matches!(
            MemoryMapConfig::new(0, 0, vec![]),
            Err(ConfigError::RamSizeOutOfRange(0))
        ));
        assert!(matches!(
            MemoryMapConfig::new(33, 0, vec![]),
            Err(ConfigError::RamSizeOutOfRange(33))
        ));
        assert!(matches!(
            MemoryMapConfig::new(23, 22, SEVEN_SEGMENT_DIGITS.to_vec()),
            Err(ConfigError::RomOverflow { .. })
        ));
        assert!(matches!(
            MemoryMapConfig::new(17, 17, vec![]),
            Err(ConfigError::IoAddrOutsideRam { .. })
        ));
        assert!(MemoryMapConfig::new(32, 0, vec![]).is_ok());
        assert!(MemoryMapConfig::with_ram_size(22).is_ok());
    }

    #[test]
    fn reset_loads_ram_and_validates_rom_overlap() {
        let image: MemoryImage = [(0u8, 0xfdu8), (1, 0xff)].into_iter().collect();
        let machine = default_machine(&image);
        assert_eq!(machine.state().ram[0], 0xfd);
        assert_eq!(machine.state().ram[1], 0xff);
        assert!(machine.state().ram[2..].iter().all(|&b| b == 0));
        assert_eq!(machine.state().acc, 0);
        assert_eq!(machine.state().pc, 0);
        assert_eq!(machine.state().out_latch, 0);
        assert!(!machine.state().halted);

        // ROM overlap must match the constants exactly.
        let matching: MemoryImage = [(17u8, 0x3fu8)].into_iter().collect();
        assert!(ArchMachine::reset(MemoryMapConfig::default(), &matching).is_ok());
        let conflicting: MemoryImage = [(17u8, 0x00u8)].into_iter().collect();
        assert_eq!(
            ArchMachine::reset(MemoryMapConfig::default(), &conflicting),
            Err(ResetError::RomConflict {
                addr: 17,
                image_byte: 0x00,
                rom_byte: 0x3f
            })
        );
        let unmapped: MemoryImage = [(27u8, 0x01u8)].into_iter().collect();
        assert_eq!(
            ArchMachine::reset(MemoryMapConfig::default(), &unmapped),
            Err(ResetError::UnmappedImageByte { addr: 27 })
        );
    }

    #[test]
    fn alu_reference_values() {
        assert_eq!(alu_eval(AluOp::Add, 250, 10), 4);
        assert_eq!(alu_eval(AluOp::Sub, 5, 10), 251);
        assert_eq!(alu_eval(AluOp::And, 0xf0, 0x3c), 0x30);
        assert_eq!(alu_eval(AluOp::Or, 0x30, 0x0f), 0x3f);
        assert_eq!(alu_eval(AluOp::Xor, 0x3f, 0xf0), 0xcf);
        assert_eq!(alu_eval(AluOp::Shl, 0x81, 0), 0x02);
        assert_eq!(alu_eval(AluOp::Shr, 0x81, 0), 0x40);
        assert_eq!(alu_eval(AluOp::Shl4, 0x1b, 0), 0xb0);
        assert_eq!(alu_eval(AluOp::Rol, 0x80, 0), 0x01);
        assert_eq!(alu_eval(AluOp::Ror, 0x01, 0), 0x80);
        assert_eq!(alu_eval(AluOp::Dec, 0, 0), 255);
        assert_eq!(alu_eval(AluOp::Clr, 0xaa, 0), 0);
        assert_eq!(alu_eval(AluOp::Inv, 0x0f, 0), 0xf0);
    }

    #[test]
    fn addi_adds_zero_extended_immediate() {
        let image: MemoryImage = [(0u8, 0xe5u8)].into_iter().collect();
        let mut machine = default_machine(&image);
        machine.state_mut().acc = 10;
        let r = machine.step(no_input()).unwrap();
        assert_eq!(machine.state().acc, 15);
        assert_eq!(machine.state().pc, 1);
        assert_eq!(r.executed, Instruction::Addi(5));
    }

    #[test]
    fn jsr_swaps_pc_and_return_address() {
        let image: MemoryImage = [(4u8, 0xf1u8)].into_iter().collect();
        let mut machine = default_machine(&image);
        machine.state_mut().pc = 4;
        machine.state_mut().acc = 0x10;
        machine.step(no_input()).unwrap();
        assert_eq!(machine.state().pc, 16);
        assert_eq!(machine.state().acc, 5);
    }

    #[test]
    fn jsr_at_last_address_wraps_return_address() {
        let config = MemoryMapConfig::new(32, 0, vec![]).unwrap();
        let image: MemoryImage = [(31u8, 0xf1u8)].into_iter().collect();
        let mut machine = ArchMachine::reset(config, &image).unwrap();
        machine.state_mut().pc = 31;
        machine.state_mut().acc = 0xe3; // low five bits = 3
        machine.step(no_input()).unwrap();
        assert_eq!(machine.state().pc, 3, "PC takes the accumulator mod 32");
        assert_eq!(machine.state().acc, 0, "return address wraps to 0");
    }

    #[test]
    fn jmp_truncates_accumulator_to_five_bits() {
        let image: MemoryImage = [(0u8, 0xf0u8)].into_iter().collect();
        let mut machine = default_machine(&image);
        machine.state_mut().acc = 0xff;
        machine.step(no_input()).unwrap();
        assert_eq!(machine.state().pc, 31);
        assert_eq!(machine.state().acc, 0xff, "JMP leaves the accumulator");
    }

    #[test]
    fn ldar_dereferences_accumulator() {
        let image: MemoryImage = [(0u8, 0xfbu8)].into_iter().collect();
        let mut machine = default_machine(&image);
        machine.state_mut().acc = 18;
        machine.step(no_input()).unwrap();
        // Address 18 is the second ROM byte: the digit-1 pattern.
        assert_eq!(machine.state().acc, 0x06);

        let mut machine = default_machine(&image);
        machine.state_mut().acc = 19;
        machine.step(no_input()).unwrap();
        assert_eq!(machine.state().acc, 0x5b, "digit-2 pattern");
    }

    #[test]
    fn hlt_increments_pc_then_freezes() {
        let image: MemoryImage = [(0u8, 0xffu8)].into_iter().collect();
        let mut machine = default_machine(&image);
        let r = machine.step(no_input()).unwrap();
        assert!(r.halted_now);
        assert_eq!(machine.state().pc, 1);
        assert!(machine.state().halted);
        assert_eq!(machine.step(no_input()), Err(SteppedWhileHalted));
    }

    #[test]
    fn hlt_at_last_address_wraps_pc() {
        let config = MemoryMapConfig::new(32, 0, vec![]).unwrap();
        let image: MemoryImage = [(31u8, 0xffu8)].into_iter().collect();
        let mut machine = ArchMachine::reset(config, &image).unwrap();
        machine.state_mut().pc = 31;
        machine.step(no_input()).unwrap();
        assert_eq!(machine.state().pc, 0);
        assert!(machine.state().halted);
    }

    #[test]
    fn branch_reference_cases() {
        // (byte, acc, pc_before, pc_after)
        let cases = [
            (0xf2u8, 0u8, 0u8, 3u8), // BEQ_FWD taken
            (0xf2, 7, 0, 1),         // BEQ_FWD not taken
            (0xf3, 0, 5, 3),         // BEQ_BWD taken
            (0xf3, 7, 5, 6),         // BEQ_BWD not taken
            (0xf4, 7, 0, 3),         // BNE_FWD taken
            (0xf4, 0, 0, 1),         // BNE_FWD not taken
            (0xf5, 7, 5, 3),         // BNE_BWD taken
            (0xf5, 0, 5, 6),         // BNE_BWD not taken
            (0xf2, 0, 30, 1),        // forward wrap: 30+3 = 33 mod 32
            (0xf3, 0, 1, 31),        // backward wrap: 1-2 mod 32
            (0xf3, 0, 0, 30),        // backward wrap from 0
        ];
        for (byte, acc, pc_before, pc_after) in cases {
            // All-RAM map, with the I/O byte parked away from the fetch address.
            let io_addr = (pc_before + 16) % 32;
            let config = MemoryMapConfig::new(32, io_addr, vec![]).unwrap();
            let image: MemoryImage = [(pc_before, byte)].into_iter().collect();
            let mut machine = ArchMachine::reset(config, &image).unwrap();
            machine.state_mut().pc = pc_before;
            machine.state_mut().acc = acc;
            machine.step(no_input()).unwrap();
            assert_eq!(
                machine.state().pc,
                pc_after,
                "byte {byte:#04x} acc {acc} from pc {pc_before}"
            );
            assert_eq!(machine.state().acc, acc, "branches leave the accumulator");
        }
    }

    #[test]
    fn io_byte_write_latches_and_read_returns_button() {
        // STA 16 / LDA 16 / HLT with the button held.
        let image = assemble_source("STA 16\nLDA 16\nHLT").unwrap();
        let mut machine = default_machine(&image);
        machine.state_mut().acc = 0x6d;
        let r = machine.step(IoInputs::pressed()).unwrap();
        assert_eq!(machine.state().out_latch, 0x6d);
        assert_eq!(machine.state().ram[16], 0x6d);
        assert_eq!(r.memory_write, Some((16, 0x6d)));
        machine.step(IoInputs::pressed()).unwrap();
        assert_eq!(
            machine.state().acc,
            1,
            "I/O read is the button bit, not the latched value"
        );
        let mut machine = default_machine(&image);
        machine.state_mut().acc = 0x6d;
        machine.step(no_input()).unwrap();
        machine.step(no_input()).unwrap();
        assert_eq!(machine.state().acc, 0);
    }

    #[test]
    fn stores_to_rom_and_unmapped_space_are_ignored() {
        let image = assemble_source("STA 20\nSTA 27\nHLT").unwrap();
        let mut machine = default_machine(&image);
        machine.state_mut().acc = 0xaa;
        let r1 = machine.step(no_input()).unwrap();
        let r2 = machine.step(no_input()).unwrap();
        assert_eq!(r1.memory_write, None);
        assert_eq!(r2.memory_write, None);
        assert_eq!(machine.mem_read(no_input(), 20), SEVEN_SEGMENT_DIGITS[3]);
        assert_eq!(machine.mem_read(no_input(), 27), 0);
    }

    #[test]
    fn fetch_reads_through_the_full_memory_map() {
        // PC inside ROM: the digit-0 pattern 0x3f decodes as STA 31.
        let mut machine = default_machine(&MemoryImage::new());
        machine.state_mut().pc = 17;
        machine.state_mut().acc = 0x55;
        let r = machine.step(no_input()).unwrap();
        assert_eq!(r.executed, Instruction::Sta(31));
        assert_eq!(r.memory_write, None);
        assert_eq!(machine.state().pc, 18);

        // PC on the I/O byte: the fetched instruction is the button bit.
        let mut machine = default_machine(&MemoryImage::new());
        machine.state_mut().pc = 16;
        let r = machine.step(IoInputs::pressed()).unwrap();
        assert_eq!(r.executed, Instruction::Lda(1));
    }

    #[test]
    fn run_halts_and_reports_steps() {
        let image = assemble_source("CLR\nHLT").unwrap();
        let mut machine = default_machine(&image);
        let result = machine.run(&InputSchedule::new(), 100);
        assert_eq!(result.outcome, RunOutcome::Halted);
        assert_eq!(result.steps, 2);
        assert_eq!(result.trace.len(), 2);
        assert!(machine.state().halted);
        // Fixed point: a second run does nothing.
        let again = machine.run(&InputSchedule::new(), 100);
        assert_eq!(again.outcome, RunOutcome::Halted);
        assert_eq!(again.steps, 0);
    }

    #[test]
    fn run_reports_step_limit_on_endless_loop() {
        // CLR at 0, backward branch at 1: the loop 0 -> 1 -> 31 -> 0 never
        // reaches a halt.
        let image = assemble_source("CLR\nBEQ_BWD").unwrap();
        let mut machine = default_machine(&image);
        let result = machine.run(&InputSchedule::new(), 50);
        assert_eq!(result.outcome, RunOutcome::StepLimit);
        assert_eq!(result.steps, 50);
        assert!(!machine.state().halted);
    }

    #[test]
    fn trace_memory_writes_replay_onto_initial_ram() {
        let image = assemble_source("LDA k\nSTA 3\nADDI 1\nSTA 16\nHLT\nk: .byte 9").unwrap();
        let mut machine = default_machine(&image);
        let initial_ram = machine.state().ram.clone();
        let result = machine.run(&InputSchedule::new(), 100);
        assert_eq!(result.outcome, RunOutcome::Halted);
        let mut replayed = initial_ram;
        for r in &result.trace {
            if let Some((addr, value)) = r.memory_write {
                replayed[addr as usize] = value;
            }
        }
        assert_eq!(&replayed, &machine.state().ram);
    }

    proptest! {
        #[test]
        fn pc_stays_in_range_and_halt_is_absorbing(
            program in proptest::collection::vec(any::<u8>(), 17),
            buttons in proptest::collection::vec(any::<bool>(), 64),
        ) {
            let image: MemoryImage = program.iter().copied().enumerate()
                .map(|(a, b)| (a as u8, b)).collect();
            let mut machine = default_machine(&image);
            let schedule = InputSchedule::from_bits(buttons);
            for step in 0..64 {
                if machine.state().halted { break; }
                machine.step(schedule.at(step)).unwrap();
                prop_assert!((machine.state().pc as usize) < ADDR_SPACE);
                prop_assert_eq!(machine.state().ram.len(), 17);
            }
            if machine.state().halted {
                let frozen = machine.state().clone();
                prop_assert_eq!(machine.step(schedule.at(0)), Err(SteppedWhileHalted));
                prop_assert_eq!(machine.state(), &frozen);
            }
        }

        #[test]
        fn branch_pairs_are_complementary(pc in 0u8..32, acc in any::<u8>()) {
            // For a fixed (pc, acc), exactly one of BEQ/BNE in each
            // direction moves the PC off the fall-through path.
            for (beq, bne) in [(0xf2u8, 0xf4u8), (0xf3, 0xf5)] {
                let io_addr = (pc + 16) % 32;
                let config = MemoryMapConfig::new(32, io_addr, vec![]).unwrap();
                let image: MemoryImage = [(pc, beq)].into_iter().collect();
                let mut m1 = ArchMachine::reset(config.clone(), &image).unwrap();
                m1.state_mut().pc = pc;
                m1.state_mut().acc = acc;
                m1.step(IoInputs::default()).unwrap();
                let image: MemoryImage = [(pc, bne)].into_iter().collect();
                let mut m2 = ArchMachine::reset(config, &image).unwrap();
                m2.state_mut().pc = pc;
                m2.state_mut().acc = acc;
                m2.step(IoInputs::default()).unwrap();
                let fall_through = (pc + 1) % 32;
                prop_assert_eq!(
                    m1.state().pc == fall_through,
                    m2.state().pc != fall_through
                );
            }
        }
    }
}
