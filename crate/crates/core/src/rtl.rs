//! Cycle-accurate model of the two-phase datapath.
//!
//! A control unit alternates FETCH and EXECUTE. FETCH drives the memory
//! address mux with the PC, loads the fetched byte into IR, and increments
//! the PC. EXECUTE decodes IR into one control word that steers the ALU,
//! the three muxes, and the register/memory write enables; a halt opcode
//! parks the control unit in a terminal HALT state instead. Because the PC
//! has already moved past the branch, taken branches apply +2 (forward) or
//! -3 (backward) to reach the architectural +3/-2; a not-taken branch
//! simply leaves `pc_write_enable` low.
//!
//! Every instruction therefore costs exactly two clock ticks.
//!
//! This module deliberately re-derives everything from the IR bit patterns
//! rather than calling the instruction-level model: the two implementations
//! are compared against each other by the co-simulation harness, and shared
//! logic would hide exactly the bugs that comparison exists to catch.

use crate::arch::{MemoryMapConfig, ResetError};
use crate::image::MemoryImage;
use crate::schedule::{InputSchedule, IoInputs};

/// Control unit state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Fetch,
    Execute,
    Halt,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Fetch => "FETCH",
            Phase::Execute => "EXECUTE",
            Phase::Halt => "HALT",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 4-bit ALU operation codes carried in the control word.
pub mod alu_code {
    pub const ADD: u8 = 0b0000;
    pub const SUB: u8 = 0b0001;
    pub const AND: u8 = 0b0010;
    pub const OR: u8 = 0b0011;
    pub const XOR: u8 = 0b0100;
    pub const SHL: u8 = 0b0101;
    pub const SHR: u8 = 0b0110;
    pub const SHL4: u8 = 0b0111;
    pub const ROL: u8 = 0b1000;
    pub const ROR: u8 = 0b1001;
    pub const DEC: u8 = 0b1010;
    pub const CLR: u8 = 0b1011;
    pub const INV: u8 = 0b1100;
}

/// PC input mux: `00` PC+1, `01` ACC, `10` PC-3, `11` PC+2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcSelect {
    Inc,
    Acc,
    Back3,
    Fwd2,
}

/// ACC input mux: `00` ALU result, `01` memory, `10` PC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccSelect {
    Alu,
    Mem,
    Pc,
}

/// Memory address mux: `00` IR[4:0], `01` ACC, `10` PC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemAddrSelect {
    IrLow,
    Acc,
    Pc,
}

/// ALU B-input mux: `0` memory, `1` the IR immediate field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AluBSelect {
    Mem,
    Imm,
}

impl PcSelect {
    pub fn bits(self) -> u8 {
        match self {
            PcSelect::Inc => 0b00,
            PcSelect::Acc => 0b01,
            PcSelect::Back3 => 0b10,
            PcSelect::Fwd2 => 0b11,
        }
    }
}

impl AccSelect {
    pub fn bits(self) -> u8 {
        match self {
            AccSelect::Alu => 0b00,
            AccSelect::Mem => 0b01,
            AccSelect::Pc => 0b10,
        }
    }
}

impl MemAddrSelect {
    pub fn bits(self) -> u8 {
        match self {
            MemAddrSelect::IrLow => 0b00,
            MemAddrSelect::Acc => 0b01,
            MemAddrSelect::Pc => 0b10,
        }
    }
}

impl AluBSelect {
    pub fn bits(self) -> u8 {
        match self {
            AluBSelect::Mem => 0,
            AluBSelect::Imm => 1,
        }
    }
}

/// One control word: every enable and mux select for a single tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlSignals {
    pub pc_write_enable: bool,
    pub pc_select: PcSelect,
    pub acc_write_enable: bool,
    pub acc_select: AccSelect,
    pub ir_load_enable: bool,
    pub alu_opcode: u8,
    pub alu_b_select: AluBSelect,
    pub mem_write_enable: bool,
    pub mem_addr_select: MemAddrSelect,
}

impl ControlSignals {
    /// Everything disabled, all muxes at their `00` inputs.
    pub fn idle() -> Self {
        ControlSignals {
            pc_write_enable: false,
            pc_select: PcSelect::Inc,
            acc_write_enable: false,
            acc_select: AccSelect::Alu,
            ir_load_enable: false,
            alu_opcode: alu_code::ADD,
            alu_b_select: AluBSelect::Mem,
            mem_write_enable: false,
            mem_addr_select: MemAddrSelect::IrLow,
        }
    }
}

/// Pure control decode: (phase, IR, accumulator-is-zero) -> control word.
/// The branch condition is folded in here, so a not-taken branch is simply
/// a tick with `pc_write_enable` low.
pub fn control_signals(phase: Phase, ir: u8, acc_is_zero: bool) -> ControlSignals {
    let mut s = ControlSignals::idle();

    fn alu_to_acc(s: &mut ControlSignals, opcode: u8) {
        s.acc_write_enable = true;
        s.acc_select = AccSelect::Alu;
        s.alu_opcode = opcode;
    }
    fn branch(s: &mut ControlSignals, taken: bool, select: PcSelect) {
        if taken {
            s.pc_write_enable = true;
            s.pc_select = select;
        }
    }

    match phase {
        Phase::Halt => {}
        Phase::Fetch => {
            s.mem_addr_select = MemAddrSelect::Pc;
            s.ir_load_enable = true;
            s.pc_write_enable = true;
            s.pc_select = PcSelect::Inc;
        }
        Phase::Execute => match ir >> 5 {
            0b000 => {
                // load direct
                s.acc_write_enable = true;
                s.acc_select = AccSelect::Mem;
                s.mem_addr_select = MemAddrSelect::IrLow;
            }
            0b001 => {
                // store
                s.mem_write_enable = true;
                s.mem_addr_select = MemAddrSelect::IrLow;
            }
            0b010 => {
                alu_to_acc(&mut s, alu_code::ADD);
                s.mem_addr_select = MemAddrSelect::IrLow;
            }
            0b011 => {
                alu_to_acc(&mut s, alu_code::SUB);
                s.mem_addr_select = MemAddrSelect::IrLow;
            }
            0b100 => {
                alu_to_acc(&mut s, alu_code::AND);
                s.mem_addr_select = MemAddrSelect::IrLow;
            }
            0b101 => {
                alu_to_acc(&mut s, alu_code::OR);
                s.mem_addr_select = MemAddrSelect::IrLow;
            }
            0b110 => {
                alu_to_acc(&mut s, alu_code::XOR);
                s.mem_addr_select = MemAddrSelect::IrLow;
            }
            _ => {
                if ir >> 4 == 0b1110 {
                    // immediate add
                    alu_to_acc(&mut s, alu_code::ADD);
                    s.alu_b_select = AluBSelect::Imm;
                } else {
                    match ir & 0x0f {
                        0x0 => {
                            // jump via accumulator
                            s.pc_write_enable = true;
                            s.pc_select = PcSelect::Acc;
                        }
                        0x1 => {
                            // jump to subroutine: PC<-ACC while ACC<-PC
                            s.pc_write_enable = true;
                            s.pc_select = PcSelect::Acc;
                            s.acc_write_enable = true;
                            s.acc_select = AccSelect::Pc;
                        }
                        0x2 => branch(&mut s, acc_is_zero, PcSelect::Fwd2),
                        0x3 => branch(&mut s, acc_is_zero, PcSelect::Back3),
                        0x4 => branch(&mut s, !acc_is_zero, PcSelect::Fwd2),
                        0x5 => branch(&mut s, !acc_is_zero, PcSelect::Back3),
                        0x6 => alu_to_acc(&mut s, alu_code::SHL),
                        0x7 => alu_to_acc(&mut s, alu_code::SHR),
                        0x8 => alu_to_acc(&mut s, alu_code::SHL4),
                        0x9 => alu_to_acc(&mut s, alu_code::ROL),
                        0xa => alu_to_acc(&mut s, alu_code::ROR),
                        0xb => {
                            // load indirect through the accumulator
                            s.acc_write_enable = true;
                            s.acc_select = AccSelect::Mem;
                            s.mem_addr_select = MemAddrSelect::Acc;
                        }
                        0xc => alu_to_acc(&mut s, alu_code::DEC),
                        0xd => alu_to_acc(&mut s, alu_code::CLR),
                        0xe => alu_to_acc(&mut s, alu_code::INV),
                        _ => {} // halt: nothing enabled, phase machine parks
                    }
                }
            }
        },
    }
    s
}

/// Combinational ALU keyed by the 4-bit control-word opcode. Unknown codes
/// produce zero (they are never emitted).
// Written without the std rotate/wrapping helpers on purpose: keeping the
// expressions different from the reference model's is what lets the
// co-simulation catch a bug in either one.
#[allow(clippy::manual_rotate)]
fn alu(opcode: u8, a: u8, b: u8) -> u8 {
    match opcode {
        alu_code::ADD => (a as u16 + b as u16) as u8,
        alu_code::SUB => (a as i16 - b as i16) as u8,
        alu_code::AND => a & b,
        alu_code::OR => a | b,
        alu_code::XOR => a ^ b,
        alu_code::SHL => ((a as u16) << 1) as u8,
        alu_code::SHR => a >> 1,
        alu_code::SHL4 => ((a as u16) << 4) as u8,
        alu_code::ROL => a << 1 | a >> 7,
        alu_code::ROR => a >> 1 | a << 7,
        alu_code::DEC => (a as u16 + 0xff) as u8,
        alu_code::CLR => 0,
        alu_code::INV => a ^ 0xff,
        _ => 0,
    }
}

/// What a 5-bit address decodes to in the memory bank.
enum Cell {
    Register(usize),
    IoPort,
    Constant(usize),
    Open,
}

fn classify(config: &MemoryMapConfig, addr: usize) -> Cell {
    if addr == config.io_addr() as usize {
        Cell::IoPort
    } else if addr < config.ram_size() {
        Cell::Register(addr)
    } else if addr < config.ram_size() + config.rom().len() {
        Cell::Constant(addr - config.ram_size())
    } else {
        Cell::Open
    }
}

fn bank_read(config: &MemoryMapConfig, ram: &[u8], button: bool, addr: usize) -> u8 {
    match classify(config, addr) {
        Cell::IoPort => button as u8,
        Cell::Register(i) => ram[i],
        Cell::Constant(i) => config.rom()[i],
        Cell::Open => 0,
    }
}

fn bank_write(
    config: &MemoryMapConfig,
    ram: &mut [u8],
    out_latch: &mut u8,
    addr: usize,
    value: u8,
) -> Option<(u8, u8)> {
    match classify(config, addr) {
        Cell::IoPort => {
            *out_latch = value;
            ram[addr] = value;
            Some((addr as u8, value))
        }
        Cell::Register(i) => {
            ram[i] = value;
            Some((addr as u8, value))
        }
        Cell::Constant(_) | Cell::Open => None,
    }
}

/// Register and memory state of the cycle-accurate model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlState {
    pub acc: u8,
    /// Always < 32.
    pub pc: u8,
    pub ir: u8,
    pub phase: Phase,
    pub out_latch: u8,
    pub ram: Vec<u8>,
}

impl RtlState {
    /// Architectural halt flag: the control unit parked in HALT.
    pub fn halted(&self) -> bool {
        self.phase == Phase::Halt
    }
}

/// What one clock tick did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickResult {
    /// Phase the tick executed in (the pre-tick phase).
    pub phase: Phase,
    pub pc_before: u8,
    pub acc_before: u8,
    pub acc_after: u8,
    /// IR after the tick: during FETCH this is the newly fetched byte, and
    /// during EXECUTE it is the byte being executed.
    pub ir_after: u8,
    pub memory_write: Option<(u8, u8)>,
    pub halted_after: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleRunResult {
    pub ticks: usize,
    /// Completed EXECUTE phases, i.e. retired instructions.
    pub instructions: usize,
    pub halted: bool,
}

/// Wrong-length scan stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("scan stream has {got} bits, chain holds {expected}")]
pub struct ScanLengthError {
    pub expected: usize,
    pub got: usize,
}

/// Scan chain bit count: 5 (PC) + 8 (ACC) + 8 (IR) + 8 per RAM byte. The
/// phase register and ROM are not on the chain.
pub fn scan_len(ram_size: usize) -> usize {
    5 + 8 + 8 + 8 * ram_size
}

/// Serializes the chain head-first: PC, ACC, IR, then RAM in address order,
/// each register most-significant bit first.
pub fn scan_export(state: &RtlState) -> Vec<bool> {
    fn push_bits(bits: &mut Vec<bool>, value: u8, width: u32) {
        for i in (0..width).rev() {
            bits.push(value >> i & 1 == 1);
        }
    }
    let mut bits = Vec::with_capacity(scan_len(state.ram.len()));
    push_bits(&mut bits, state.pc, 5);
    push_bits(&mut bits, state.acc, 8);
    push_bits(&mut bits, state.ir, 8);
    for &cell in &state.ram {
        push_bits(&mut bits, cell, 8);
    }
    bits
}

/// Renders a scan stream as `'0'`/`'1'` text, head bit first.
pub fn scan_to_text(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parses `'0'`/`'1'` text (whitespace ignored) into a scan stream.
pub fn scan_from_text(text: &str) -> Option<Vec<bool>> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

/// Top-level pin assignment (8 inputs, 8 outputs).
pub mod pins {
    pub const IN_RESET: u8 = 0;
    pub const IN_SCAN_ENABLE: u8 = 1;
    pub const IN_SCAN_IN: u8 = 2;
    pub const IN_BUTTON: u8 = 3;
    // Inputs 4-7 are unused.
    /// Outputs 0-6 are display segments a-g; output 7 is the halt flag.
    pub const OUT_SEGMENT_A: u8 = 0;
    pub const OUT_SEGMENT_G: u8 = 6;
    pub const OUT_HALTED: u8 = 7;
}

/// Input pin bundle decoded from a raw 8-bit port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputPins(pub u8);

impl InputPins {
    pub fn reset(self) -> bool {
        self.0 >> pins::IN_RESET & 1 == 1
    }
    pub fn scan_enable(self) -> bool {
        self.0 >> pins::IN_SCAN_ENABLE & 1 == 1
    }
    pub fn scan_in(self) -> bool {
        self.0 >> pins::IN_SCAN_IN & 1 == 1
    }
    pub fn button(self) -> bool {
        self.0 >> pins::IN_BUTTON & 1 == 1
    }
}

/// The cycle-accurate machine: memory map plus register state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlMachine {
    config: MemoryMapConfig,
    state: RtlState,
}

impl RtlMachine {
    /// Power-on state with an image loaded; same image rules as the
    /// reference machine.
    pub fn reset(config: MemoryMapConfig, image: &MemoryImage) -> Result<Self, ResetError> {
        let mut ram = vec![0u8; config.ram_size()];
        for (addr, byte) in image.iter() {
            let a = addr as usize;
            match classify(&config, a) {
                Cell::Register(i) => ram[i] = byte,
                Cell::IoPort => ram[a] = byte,
                Cell::Constant(i) => {
                    let rom_byte = config.rom()[i];
                    if byte != rom_byte {
                        return Err(ResetError::RomConflict {
                            addr,
                            image_byte: byte,
                            rom_byte,
                        });
                    }
                }
                Cell::Open => return Err(ResetError::UnmappedImageByte { addr }),
            }
        }
        Ok(RtlMachine {
            config,
            state: RtlState {
                acc: 0,
                pc: 0,
                ir: 0,
                phase: Phase::Fetch,
                out_latch: 0,
                ram,
            },
        })
    }

    pub fn config(&self) -> &MemoryMapConfig {
        &self.config
    }

    pub fn state(&self) -> &RtlState {
        &self.state
    }

    /// Direct state access for harnesses that need to arrange a scenario.
    pub fn state_mut(&mut self) -> &mut RtlState {
        &mut self.state
    }

    /// One clock tick under the real control unit.
    pub fn tick(&mut self, inputs: IoInputs) -> TickResult {
        self.tick_with_control(inputs, control_signals)
    }

    /// One clock tick under an arbitrary control function. This is the
    /// fault-injection hook: a harness can corrupt a single control field
    /// and watch the co-simulation catch it.
    pub fn tick_with_control(
        &mut self,
        inputs: IoInputs,
        control: impl Fn(Phase, u8, bool) -> ControlSignals,
    ) -> TickResult {
        let state = &mut self.state;
        let phase = state.phase;
        let ir_executed = state.ir;
        let signals = control(phase, ir_executed, state.acc == 0);

        // Combinational paths, all reading pre-edge register values.
        let addr = match signals.mem_addr_select {
            MemAddrSelect::IrLow => (state.ir & 0x1f) as usize,
            MemAddrSelect::Acc => (state.acc & 0x1f) as usize,
            MemAddrSelect::Pc => state.pc as usize,
        };
        let mem_out = bank_read(&self.config, &state.ram, inputs.button, addr);
        let alu_b = match signals.alu_b_select {
            AluBSelect::Mem => mem_out,
            AluBSelect::Imm => state.ir & 0x0f,
        };
        let alu_out = alu(signals.alu_opcode, state.acc, alu_b);

        let pc_before = state.pc;
        let acc_before = state.acc;
        let next_acc = if signals.acc_write_enable {
            match signals.acc_select {
                AccSelect::Alu => alu_out,
                AccSelect::Mem => mem_out,
                AccSelect::Pc => state.pc,
            }
        } else {
            state.acc
        };
        let next_pc = if signals.pc_write_enable {
            match signals.pc_select {
                PcSelect::Inc => (state.pc + 1) % 32,
                PcSelect::Acc => state.acc & 0x1f,
                PcSelect::Back3 => (state.pc + 29) % 32,
                PcSelect::Fwd2 => (state.pc + 2) % 32,
            }
        } else {
            state.pc
        };
        let next_ir = if signals.ir_load_enable {
            mem_out
        } else {
            state.ir
        };
        let memory_write = if signals.mem_write_enable {
            bank_write(
                &self.config,
                &mut state.ram,
                &mut state.out_latch,
                addr,
                acc_before,
            )
        } else {
            None
        };

        // Clock edge.
        state.acc = next_acc;
        state.pc = next_pc;
        state.ir = next_ir;
        state.phase = match phase {
            Phase::Fetch => Phase::Execute,
            Phase::Execute => {
                if ir_executed == 0xff {
                    Phase::Halt
                } else {
                    Phase::Fetch
                }
            }
            Phase::Halt => Phase::Halt,
        };

        TickResult {
            phase,
            pc_before,
            acc_before,
            acc_after: state.acc,
            ir_after: state.ir,
            memory_write,
            halted_after: state.phase == Phase::Halt,
        }
    }

    /// Ticks until HALT or `max_ticks`. Both phases of instruction `k`
    /// sample schedule entry `k`, mirroring the instruction-level runner.
    pub fn run_cycles(&mut self, schedule: &InputSchedule, max_ticks: usize) -> CycleRunResult {
        let mut ticks = 0;
        let mut instructions = 0;
        while ticks < max_ticks && self.state.phase != Phase::Halt {
            let result = self.tick(schedule.at(instructions));
            ticks += 1;
            if result.phase == Phase::Execute {
                instructions += 1;
            }
        }
        CycleRunResult {
            ticks,
            instructions,
            halted: self.state.phase == Phase::Halt,
        }
    }

    /// Like [`run_cycles`](Self::run_cycles) but hands every tick result to
    /// the caller (trace writers).
    pub fn run_cycles_traced(
        &mut self,
        schedule: &InputSchedule,
        max_ticks: usize,
        mut on_tick: impl FnMut(usize, &TickResult),
    ) -> CycleRunResult {
        let mut ticks = 0;
        let mut instructions = 0;
        while ticks < max_ticks && self.state.phase != Phase::Halt {
            let result = self.tick(schedule.at(instructions));
            on_tick(ticks, &result);
            ticks += 1;
            if result.phase == Phase::Execute {
                instructions += 1;
            }
        }
        CycleRunResult {
            ticks,
            instructions,
            halted: self.state.phase == Phase::Halt,
        }
    }

    pub fn scan_len(&self) -> usize {
        scan_len(self.config.ram_size())
    }

    pub fn scan_export(&self) -> Vec<bool> {
        scan_export(&self.state)
    }

    /// Loads a full chain image and releases the machine into FETCH. The
    /// output port mirrors the reloaded I/O cell.
    pub fn scan_import(&mut self, bits: &[bool]) -> Result<(), ScanLengthError> {
        let expected = self.scan_len();
        if bits.len() != expected {
            return Err(ScanLengthError {
                expected,
                got: bits.len(),
            });
        }
        self.apply_chain(bits);
        self.state.phase = Phase::Fetch;
        Ok(())
    }

    /// Shifts the whole chain one bit toward scan-out. The head bit (PC
    /// bit 4) falls out; `scan_in` enters at the tail (last RAM byte, bit
    /// 0). The phase register is not on the chain and does not move.
    pub fn scan_shift(&mut self, scan_in: bool) -> bool {
        let mut bits = scan_export(&self.state);
        let out = bits.remove(0);
        bits.push(scan_in);
        self.apply_chain(&bits);
        out
    }

    fn apply_chain(&mut self, bits: &[bool]) {
        fn take(iter: &mut impl Iterator<Item = bool>, width: u32) -> u8 {
            let mut value = 0u8;
            for _ in 0..width {
                value = value << 1 | iter.next().expect("chain length checked") as u8;
            }
            value
        }
        let mut iter = bits.iter().copied();
        self.state.pc = take(&mut iter, 5);
        self.state.acc = take(&mut iter, 8);
        self.state.ir = take(&mut iter, 8);
        for i in 0..self.state.ram.len() {
            self.state.ram[i] = take(&mut iter, 8);
        }
        // The output port shows whatever sits in the I/O cell now.
        self.state.out_latch = self.state.ram[self.config.io_addr() as usize];
    }

    /// Output pin image: bits 0-6 are display segments a-g from the output
    /// latch, bit 7 is the halt flag. Stays asserted while parked in HALT.
    pub fn output_pins(&self) -> u8 {
        (self.state.out_latch & 0x7f) | (self.state.halted() as u8) << 7
    }
}
