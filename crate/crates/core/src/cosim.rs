//! Differential co-simulation of the two machine models.
//!
//! The instruction-level machine ([`ArchMachine`]) and the cycle-accurate
//! machine ([`RtlMachine`]) are independent implementations of the same
//! contract. This module runs them in lockstep — one instruction step
//! against two clock ticks — and compares accumulator, PC, RAM, output
//! latch, and halt flag at every instruction boundary. Any mismatch is
//! reported as a [`Divergence`] naming the field and both values.
//!
//! [`fuzz_cosim`] drives the comparison over seeded random programs and
//! button schedules; [`control_fault_catalog`] provides one deliberately
//! broken control unit per control-word field, each of which the
//! comparison must catch (a mutation test for the harness itself).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::arch::{ArchMachine, MemoryMapConfig};
use crate::image::MemoryImage;
use crate::rtl::{control_signals, ControlSignals, Phase, RtlMachine};
use crate::schedule::InputSchedule;

/// One architectural field that disagreed between the two models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mismatch {
    Acc { arch: u8, rtl: u8 },
    Pc { arch: u8, rtl: u8 },
    OutLatch { arch: u8, rtl: u8 },
    Halted { arch: bool, rtl: bool },
    Ram { addr: u8, arch: u8, rtl: u8 },
}

impl Mismatch {
    pub fn field(&self) -> &'static str {
        match self {
            Mismatch::Acc { .. } => "acc",
            Mismatch::Pc { .. } => "pc",
            Mismatch::OutLatch { .. } => "out_latch",
            Mismatch::Halted { .. } => "halted",
            Mismatch::Ram { .. } => "ram",
        }
    }
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Mismatch::Acc { arch, rtl } => {
                write!(f, "acc: arch=0x{arch:02X} rtl=0x{rtl:02X}")
            }
            Mismatch::Pc { arch, rtl } => write!(f, "pc: arch={arch} rtl={rtl}"),
            Mismatch::OutLatch { arch, rtl } => {
                write!(f, "out_latch: arch=0x{arch:02X} rtl=0x{rtl:02X}")
            }
            Mismatch::Halted { arch, rtl } => {
                write!(f, "halted: arch={arch} rtl={rtl}")
            }
            Mismatch::Ram { addr, arch, rtl } => {
                write!(f, "ram[{addr}]: arch=0x{arch:02X} rtl=0x{rtl:02X}")
            }
        }
    }
}

/// First disagreement found during a lockstep run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divergence {
    /// Instructions completed when the mismatch was observed; 0 means the
    /// two reset states already differed.
    pub step: usize,
    pub mismatch: Mismatch,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "diverged after instruction {}: {}",
            self.step, self.mismatch
        )
    }
}

/// Statistics from a lockstep run that stayed in agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LockstepOutcome {
    pub instructions: usize,
    pub ticks: usize,
    pub halted: bool,
}

fn compare(arch: &ArchMachine, rtl: &RtlMachine) -> Option<Mismatch> {
    let a = arch.state();
    let r = rtl.state();
    if a.halted != r.halted() {
        return Some(Mismatch::Halted {
            arch: a.halted,
            rtl: r.halted(),
        });
    }
    if a.pc != r.pc {
        return Some(Mismatch::Pc {
            arch: a.pc,
            rtl: r.pc,
        });
    }
    if a.acc != r.acc {
        return Some(Mismatch::Acc {
            arch: a.acc,
            rtl: r.acc,
        });
    }
    if a.out_latch != r.out_latch {
        return Some(Mismatch::OutLatch {
            arch: a.out_latch,
            rtl: r.out_latch,
        });
    }
    for (addr, (&x, &y)) in a.ram.iter().zip(r.ram.iter()).enumerate() {
        if x != y {
            return Some(Mismatch::Ram {
                addr: addr as u8,
                arch: x,
                rtl: y,
            });
        }
    }
    None
}

/// Runs both machines in lockstep under the genuine control unit.
pub fn run_lockstep(
    arch: &mut ArchMachine,
    rtl: &mut RtlMachine,
    schedule: &InputSchedule,
    max_steps: usize,
) -> Result<LockstepOutcome, Divergence> {
    run_lockstep_with_control(arch, rtl, schedule, max_steps, control_signals)
}

/// Lockstep run with the cycle-accurate model driven by an arbitrary
/// control function — the hook used for control-fault injection.
///
/// Both machines must start from the same reset state; the comparison at
/// step 0 enforces that. Each instruction step pairs with two clock ticks,
/// with both ticks sampling the same schedule entry.
pub fn run_lockstep_with_control(
    arch: &mut ArchMachine,
    rtl: &mut RtlMachine,
    schedule: &InputSchedule,
    max_steps: usize,
    control: impl Fn(Phase, u8, bool) -> ControlSignals,
) -> Result<LockstepOutcome, Divergence> {
    if let Some(mismatch) = compare(arch, rtl) {
        return Err(Divergence { step: 0, mismatch });
    }
    let mut instructions = 0;
    let mut ticks = 0;
    while instructions < max_steps && !arch.state().halted {
        let inputs = schedule.at(instructions);
        arch.step(inputs)
            .expect("lockstep invariant: neither machine is halted here");
        rtl.tick_with_control(inputs, &control);
        rtl.tick_with_control(inputs, &control);
        instructions += 1;
        ticks += 2;
        if let Some(mismatch) = compare(arch, rtl) {
            return Err(Divergence {
                step: instructions,
                mismatch,
            });
        }
    }
    Ok(LockstepOutcome {
        instructions,
        ticks,
        halted: arch.state().halted,
    })
}

/// Fills every RAM cell with a random byte. Execution still covers the
/// ROM and open regions of the address space via jumps and wrapping, but
/// the loadable image itself stays within RAM, which is all the reset
/// contract accepts for arbitrary bytes.
pub fn random_program(rng: &mut impl RngCore, map: &MemoryMapConfig) -> MemoryImage {
    let mut image = MemoryImage::new();
    for addr in 0..map.ram_size() as u8 {
        image
            .set(addr, (rng.next_u32() & 0xff) as u8)
            .expect("RAM addresses are always mappable");
    }
    image
}

/// Random button bit for each of the first `len` instruction steps.
pub fn random_schedule(rng: &mut impl RngCore, len: usize) -> InputSchedule {
    let mut schedule = InputSchedule::new();
    for step in 0..len {
        schedule.set(step, rng.next_u32() & 1 == 1);
    }
    schedule
}

/// Derives the per-program generator so program `i` is reproducible in
/// isolation from the campaign seed alone.
pub fn program_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Campaign parameters for [`fuzz_cosim`].
#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub map: MemoryMapConfig,
    pub programs: usize,
    pub max_steps: usize,
    pub seed: u64,
}

/// A divergence found by fuzzing, with enough context to replay it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzFailure {
    pub program_index: usize,
    pub image: MemoryImage,
    pub divergence: Divergence,
}

impl std::fmt::Display for FuzzFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "program {}: {}", self.program_index, self.divergence)
    }
}

/// Aggregate result of a fuzzing campaign. The campaign stops at the
/// first failing program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzReport {
    pub programs_run: usize,
    pub instructions: usize,
    pub ticks: usize,
    pub halted_programs: usize,
    pub failure: Option<FuzzFailure>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs `programs` random programs through the lockstep comparison.
pub fn fuzz_cosim(config: &FuzzConfig) -> FuzzReport {
    let mut report = FuzzReport {
        programs_run: 0,
        instructions: 0,
        ticks: 0,
        halted_programs: 0,
        failure: None,
    };
    for index in 0..config.programs {
        let mut rng = program_rng(config.seed, index);
        let image = random_program(&mut rng, &config.map);
        let schedule = random_schedule(&mut rng, config.max_steps);
        let mut arch = ArchMachine::reset(config.map.clone(), &image)
            .expect("generated image stays within RAM");
        let mut rtl = RtlMachine::reset(config.map.clone(), &image)
            .expect("generated image stays within RAM");
        match run_lockstep(&mut arch, &mut rtl, &schedule, config.max_steps) {
            Ok(outcome) => {
                report.programs_run += 1;
                report.instructions += outcome.instructions;
                report.ticks += outcome.ticks;
                report.halted_programs += outcome.halted as usize;
            }
            Err(divergence) => {
                report.programs_run += 1;
                report.failure = Some(FuzzFailure {
                    program_index: index,
                    image,
                    divergence,
                });
                break;
            }
        }
    }
    report
}

/// A deliberately broken control unit targeting one control-word field,
/// paired with a program that exposes it.
#[derive(Debug, Clone, Copy)]
pub struct ControlFault {
    /// Control-word field the fault corrupts.
    pub field: &'static str,
    pub description: &'static str,
    /// Assembly source that makes the fault architecturally visible.
    pub program: &'static str,
    pub control: fn(Phase, u8, bool) -> ControlSignals,
}

/// One fault per control-word field. Running each catalog entry's program
/// under its broken control function must produce a divergence, and the
/// same program under the genuine control unit must not: this checks that
/// the lockstep comparison actually has teeth on every field.
pub fn control_fault_catalog() -> [ControlFault; 9] {
    use crate::rtl::{alu_code, AccSelect, AluBSelect, MemAddrSelect, PcSelect};

    fn base(phase: Phase, ir: u8, acc_is_zero: bool) -> ControlSignals {
        control_signals(phase, ir, acc_is_zero)
    }

    fn fault_pc_write_enable(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Execute && ir == 0xf0 {
            s.pc_write_enable = false; // jump-via-acc never lands
        }
        s
    }
    fn fault_pc_select(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Execute && ir == 0xf2 && z {
            s.pc_select = PcSelect::Inc; // taken forward branch falls through
        }
        s
    }
    fn fault_acc_write_enable(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Execute && ir >> 5 == 0b000 {
            s.acc_write_enable = false; // direct load drops its result
        }
        s
    }
    fn fault_acc_select(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Execute && ir >> 5 == 0b000 {
            s.acc_select = AccSelect::Alu; // load takes the adder instead of memory
        }
        s
    }
    fn fault_ir_load_enable(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Fetch {
            s.ir_load_enable = false; // IR goes stale
        }
        s
    }
    fn fault_alu_opcode(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Execute && ir >> 5 == 0b010 {
            s.alu_opcode = alu_code::SUB; // memory add subtracts
        }
        s
    }
    fn fault_alu_b_select(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Execute && ir >> 4 == 0b1110 {
            s.alu_b_select = AluBSelect::Mem; // immediate add reads memory
        }
        s
    }
    fn fault_mem_write_enable(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Execute && ir >> 5 == 0b001 {
            s.mem_write_enable = false; // stores vanish
        }
        s
    }
    fn fault_mem_addr_select(phase: Phase, ir: u8, z: bool) -> ControlSignals {
        let mut s = base(phase, ir, z);
        if phase == Phase::Execute && ir == 0xfb {
            s.mem_addr_select = MemAddrSelect::IrLow; // indirect load misaddresses
        }
        s
    }

    [
        ControlFault {
            field: "pc_write_enable",
            description: "jump-via-acc leaves PC unchanged",
            program: "ADDI 6\nJMP\nHLT\nHLT\nHLT\nHLT\nHLT",
            control: fault_pc_write_enable,
        },
        ControlFault {
            field: "pc_select",
            description: "taken forward branch selects PC+1",
            program: "CLR\nBEQ_FWD\nHLT\nHLT\nADDI 1\nHLT",
            control: fault_pc_select,
        },
        ControlFault {
            field: "acc_write_enable",
            description: "direct load never writes ACC",
            program: "LDA k\nHLT\nk: .byte 0x2A",
            control: fault_acc_write_enable,
        },
        ControlFault {
            field: "acc_select",
            description: "direct load routed through the ALU",
            program: "ADDI 5\nLDA k\nHLT\nk: .byte 0x2A",
            control: fault_acc_select,
        },
        ControlFault {
            field: "ir_load_enable",
            description: "fetch leaves a stale IR",
            program: "ADDI 1\nHLT",
            control: fault_ir_load_enable,
        },
        ControlFault {
            field: "alu_opcode",
            description: "memory add decodes as subtract",
            program: "LDA a\nADD b\nHLT\na: .byte 250\nb: .byte 10",
            control: fault_alu_opcode,
        },
        ControlFault {
            field: "alu_b_select",
            description: "immediate add reads the memory bus",
            program: "ADDI 5\nHLT",
            control: fault_alu_b_select,
        },
        ControlFault {
            field: "mem_write_enable",
            description: "stores are dropped",
            program: "ADDI 7\nSTA 3\nHLT",
            control: fault_mem_write_enable,
        },
        ControlFault {
            field: "mem_addr_select",
            description: "indirect load addresses from IR",
            program: "ADDI 15\nADDI 2\nLDAR\nHLT",
            control: fault_mem_addr_select,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::assemble_source;

    fn machines(source: &str) -> (ArchMachine, RtlMachine) {
        let image = assemble_source(source).unwrap();
        let map = MemoryMapConfig::default();
        (
            ArchMachine::reset(map.clone(), &image).unwrap(),
            RtlMachine::reset(map, &image).unwrap(),
        )
    }

    #[test]
    fn directed_program_stays_in_lockstep() {
        let (mut arch, mut rtl) =
            machines("LDA a\nADD b\nSTA 3\nSHL\nXOR a\nHLT\na: .byte 0x0F\nb: .byte 0x31");
        let outcome = run_lockstep(&mut arch, &mut rtl, &InputSchedule::new(), 100).unwrap();
        assert!(outcome.halted);
        assert_eq!(outcome.ticks, 2 * outcome.instructions);
        assert_eq!(arch.state().acc, rtl.state().acc);
    }

    #[test]
    fn button_schedule_reaches_both_models_identically() {
        // Instruction 1 is the I/O read; press the button exactly there.
        let (mut arch, mut rtl) = machines("CLR\nLDA 16\nSTA 0\nHLT");
        let mut schedule = InputSchedule::new();
        schedule.set(1, true);
        let outcome = run_lockstep(&mut arch, &mut rtl, &schedule, 100).unwrap();
        assert!(outcome.halted);
        assert_eq!(arch.state().ram[0], 1);
        assert_eq!(rtl.state().ram[0], 1);
    }

    #[test]
    fn non_halting_program_stops_at_step_budget() {
        let (mut arch, mut rtl) = machines("CLR\nBEQ_BWD");
        let outcome = run_lockstep(&mut arch, &mut rtl, &InputSchedule::new(), 50).unwrap();
        assert!(!outcome.halted);
        assert_eq!(outcome.instructions, 50);
        assert_eq!(outcome.ticks, 100);
    }

    #[test]
    fn divergence_reports_seeded_state_mismatch() {
        let (mut arch, mut rtl) = machines("HLT");
        rtl.state_mut().acc = 1;
        let err = run_lockstep(&mut arch, &mut rtl, &InputSchedule::new(), 10).unwrap_err();
        assert_eq!(err.step, 0);
        assert_eq!(err.mismatch, Mismatch::Acc { arch: 0, rtl: 1 });
        assert_eq!(
            err.to_string(),
            "diverged after instruction 0: acc: arch=0x00 rtl=0x01"
        );
    }

    #[test]
    fn fuzz_campaign_is_deterministic_and_clean() {
        let config = FuzzConfig {
            map: MemoryMapConfig::default(),
            programs: 40,
            max_steps: 300,
            seed: 0xc051_u64,
        };
        let first = fuzz_cosim(&config);
        let second = fuzz_cosim(&config);
        assert!(first.passed(), "divergence: {:?}", first.failure);
        assert_eq!(first, second);
        assert_eq!(first.programs_run, 40);
        assert_eq!(first.ticks, 2 * first.instructions);
    }

    #[test]
    fn fuzz_generation_is_reproducible_per_program() {
        let map = MemoryMapConfig::default();
        let a = random_program(&mut program_rng(7, 3), &map);
        let b = random_program(&mut program_rng(7, 3), &map);
        let c = random_program(&mut program_rng(7, 4), &map);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn every_control_fault_is_caught_and_baseline_is_clean() {
        for fault in control_fault_catalog() {
            let image = assemble_source(fault.program).unwrap();
            let map = MemoryMapConfig::default();

            let mut arch = ArchMachine::reset(map.clone(), &image).unwrap();
            let mut rtl = RtlMachine::reset(map.clone(), &image).unwrap();
            let baseline = run_lockstep(&mut arch, &mut rtl, &InputSchedule::new(), 200);
            assert!(
                baseline.is_ok(),
                "{}: program must pass under the genuine control unit",
                fault.field
            );

            let mut arch = ArchMachine::reset(map.clone(), &image).unwrap();
            let mut rtl = RtlMachine::reset(map, &image).unwrap();
            let result = run_lockstep_with_control(
                &mut arch,
                &mut rtl,
                &InputSchedule::new(),
                200,
                fault.control,
            );
            assert!(
                result.is_err(),
                "{} ({}) must diverge",
                fault.field,
                fault.description
            );
        }
    }
}
