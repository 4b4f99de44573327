//! Acceptance gate: one test per shipping criterion. Each test prints a
//! single `PASS <criterion>` line when it holds; a failed assertion marks
//! the criterion failed.

use std::collections::BTreeSet;

use acc8::arch::{ArchMachine, MemoryMapConfig, RunOutcome, SEVEN_SEGMENT_DIGITS};
use acc8::asm::{assemble_source, disassemble};
use acc8::cosim::{
    control_fault_catalog, fuzz_cosim, program_rng, random_program, random_schedule, run_lockstep,
    run_lockstep_with_control, FuzzConfig,
};
use acc8::image::{format_hex, parse_hex, MemoryImage};
use acc8::isa::{decode, encode, Instruction};
use acc8::programs::{demo_image, directed_suite};
use acc8::rtl::{scan_len, Phase, RtlMachine};
use acc8::schedule::InputSchedule;
use rand_core::RngCore;

fn both_machines(map: &MemoryMapConfig, image: &MemoryImage) -> (ArchMachine, RtlMachine) {
    (
        ArchMachine::reset(map.clone(), image).expect("image loads"),
        RtlMachine::reset(map.clone(), image).expect("image loads"),
    )
}

#[test]
fn c1_every_byte_decodes_to_exactly_one_instruction() {
    let mut seen: BTreeSet<Instruction> = BTreeSet::new();
    for byte in 0..=255u8 {
        let instr = decode(byte);
        assert_eq!(
            encode(instr).unwrap(),
            byte,
            "encode(decode(0x{byte:02X})) must return the same byte"
        );
        seen.insert(instr);
    }
    assert_eq!(seen.len(), 256, "all 256 decoded instructions are distinct");
    println!("PASS c1: every byte decodes to exactly one instruction, encode inverts decode");
}

#[test]
fn c2_directed_suite_covers_all_24_instructions_with_known_finals() {
    let map = MemoryMapConfig::default();
    let mut executed: BTreeSet<&'static str> = BTreeSet::new();

    for program in directed_suite() {
        let image = assemble_source(program.source).expect("bundled program assembles");
        let (mut arch, mut rtl) = both_machines(&map, &image);

        let run = arch.run(&InputSchedule::new(), 200);
        assert_eq!(run.outcome, RunOutcome::Halted, "{} halts", program.name);
        for step in &run.trace {
            executed.insert(step.executed.mnemonic().as_str());
        }
        assert_eq!(arch.state().acc, program.final_acc, "{} acc", program.name);
        assert_eq!(arch.state().pc, program.final_pc, "{} pc", program.name);
        assert_eq!(
            arch.state().out_latch,
            program.final_out_latch,
            "{} out_latch",
            program.name
        );
        for &(addr, value) in program.ram_expect {
            assert_eq!(
                arch.state().ram[addr as usize],
                value,
                "{} ram[{addr}]",
                program.name
            );
        }

        let cycles = rtl.run_cycles(&InputSchedule::new(), 400);
        assert!(cycles.halted, "{} halts on the cycle model", program.name);
        assert_eq!(
            rtl.state().acc,
            program.final_acc,
            "{} rtl acc",
            program.name
        );
        assert_eq!(rtl.state().pc, program.final_pc, "{} rtl pc", program.name);
        assert_eq!(rtl.state().out_latch, program.final_out_latch);
        for &(addr, value) in program.ram_expect {
            assert_eq!(rtl.state().ram[addr as usize], value);
        }
    }

    assert_eq!(
        executed.len(),
        24,
        "suite executes every instruction: {executed:?}"
    );
    println!("PASS c2: directed suite executes all 24 instructions and matches hand-computed finals on both models");
}

#[test]
fn c3_branch_arithmetic_is_exact_for_every_program_counter() {
    // All-RAM map so any cell can hold the branch byte; the I/O byte is
    // parked away from the fetch address.
    for pc in 0..32u8 {
        let io_addr = (pc + 16) % 32;
        let map = MemoryMapConfig::new(32, io_addr, vec![]).unwrap();
        // (opcode, taken when acc == 0, forward)
        let cases = [
            (0xf2u8, true, true), // branch-if-zero forward
            (0xf3, true, false),  // branch-if-zero backward
            (0xf4, false, true),  // branch-if-not-zero forward
            (0xf5, false, false), // branch-if-not-zero backward
        ];
        for (opcode, taken_on_zero, forward) in cases {
            for acc in [0u8, 7] {
                let taken = (acc == 0) == taken_on_zero;
                let expected = if !taken {
                    (pc + 1) % 32
                } else if forward {
                    (pc + 3) % 32
                } else {
                    (pc + 30) % 32
                };

                let image = MemoryImage::new();
                let (mut arch, mut rtl) = both_machines(&map, &image);

                arch.state_mut().pc = pc;
                arch.state_mut().acc = acc;
                arch.state_mut().ram[pc as usize] = opcode;
                arch.step(Default::default()).unwrap();
                assert_eq!(
                    arch.state().pc,
                    expected,
                    "arch: opcode 0x{opcode:02X} at pc={pc} acc={acc}"
                );
                assert_eq!(
                    arch.state().acc,
                    acc,
                    "branches never touch the accumulator"
                );

                rtl.state_mut().pc = pc;
                rtl.state_mut().acc = acc;
                rtl.state_mut().ram[pc as usize] = opcode;
                rtl.tick(Default::default());
                rtl.tick(Default::default());
                assert_eq!(
                    rtl.state().pc,
                    expected,
                    "rtl: opcode 0x{opcode:02X} at pc={pc} acc={acc}"
                );
                assert_eq!(rtl.state().acc, acc);
            }
        }
    }
    println!("PASS c3: taken branches land at +3/-2 and not-taken at +1 for all 32 branch addresses, both models");
}

#[test]
fn c4_every_instruction_costs_exactly_two_ticks() {
    let map = MemoryMapConfig::default();
    let max_steps = 400;
    for index in 0..120 {
        let mut rng = program_rng(0x71c5, index);
        let image = random_program(&mut rng, &map);
        let schedule = random_schedule(&mut rng, max_steps);
        let (mut arch, mut rtl) = both_machines(&map, &image);

        let run = arch.run(&schedule, max_steps);
        let cycles = rtl.run_cycles(&schedule, 2 * max_steps);
        assert_eq!(
            cycles.instructions, run.steps,
            "program {index}: same instruction count"
        );
        assert_eq!(
            cycles.ticks,
            2 * run.steps,
            "program {index}: two ticks per instruction"
        );
        assert_eq!(cycles.halted, run.outcome == RunOutcome::Halted);
    }
    println!("PASS c4: tick count equals twice the instruction count over 120 random programs");
}

#[test]
fn c5_thousand_program_lockstep_and_control_fault_mutation() {
    let config = FuzzConfig {
        map: MemoryMapConfig::default(),
        programs: 1000,
        max_steps: 1000,
        seed: 0xd1ff,
    };
    let report = fuzz_cosim(&config);
    assert_eq!(report.programs_run, 1000);
    assert!(
        report.passed(),
        "lockstep divergence: {}",
        report.failure.as_ref().unwrap()
    );
    assert_eq!(report.ticks, 2 * report.instructions);

    let map = MemoryMapConfig::default();
    for fault in control_fault_catalog() {
        let image = assemble_source(fault.program).unwrap();
        let (mut arch, mut rtl) = both_machines(&map, &image);
        assert!(
            run_lockstep(&mut arch, &mut rtl, &InputSchedule::new(), 200).is_ok(),
            "{}: clean control unit must pass",
            fault.field
        );
        let (mut arch, mut rtl) = both_machines(&map, &image);
        assert!(
            run_lockstep_with_control(
                &mut arch,
                &mut rtl,
                &InputSchedule::new(),
                200,
                fault.control
            )
            .is_err(),
            "{}: fault ({}) must be caught",
            fault.field,
            fault.description
        );
    }
    println!("PASS c5: 1000 random programs run divergence-free and all 9 control-word faults are caught");
}

#[test]
fn c6_scan_chain_serializes_and_restores_the_full_state() {
    assert_eq!(scan_len(17), 157);
    assert_eq!(scan_len(4), 53);
    assert_eq!(scan_len(22), 197);

    let map = MemoryMapConfig::default();
    let image = demo_image(3);
    let (_, mut rtl) = both_machines(&map, &image);
    rtl.run_cycles(&InputSchedule::new(), 400);
    assert_eq!(rtl.scan_len(), 157);
    let stream = rtl.scan_export();
    assert_eq!(stream.len(), 157);

    // Export/import restores every chain register into a fresh machine.
    let mut fresh = RtlMachine::reset(map.clone(), &MemoryImage::new()).unwrap();
    fresh.scan_import(&stream).unwrap();
    assert_eq!(fresh.state().pc, rtl.state().pc);
    assert_eq!(fresh.state().acc, rtl.state().acc);
    assert_eq!(fresh.state().ir, rtl.state().ir);
    assert_eq!(fresh.state().ram, rtl.state().ram);
    assert_eq!(fresh.state().phase, Phase::Fetch);

    // Clocking the chain out bit-by-bit replays the export stream.
    let mut shifted = Vec::new();
    for _ in 0..rtl.scan_len() {
        shifted.push(rtl.scan_shift(false));
    }
    assert_eq!(shifted, stream);
    println!(
        "PASS c6: 157-bit scan chain round-trips state and shift-out replays the export stream"
    );
}

#[test]
fn c7_models_agree_across_memory_map_configurations() {
    let rom = SEVEN_SEGMENT_DIGITS.to_vec();
    let mut seed = 0x5eed_0000u64;
    for ram_size in [4usize, 17, 22] {
        for rom_present in [false, true] {
            let rom_bytes = if rom_present { rom.clone() } else { vec![] };
            let map = MemoryMapConfig::new(ram_size, ram_size as u8 - 1, rom_bytes).unwrap();
            seed += 1;
            let report = fuzz_cosim(&FuzzConfig {
                map,
                programs: 80,
                max_steps: 400,
                seed,
            });
            assert!(
                report.passed(),
                "ram_size={ram_size} rom={rom_present}: {}",
                report.failure.as_ref().unwrap()
            );
            assert_eq!(report.programs_run, 80);
        }
    }
    println!("PASS c7: lockstep agreement holds for RAM sizes 4/17/22 with and without ROM");
}

#[test]
fn c8_demo_program_displays_every_decimal_digit() {
    let map = MemoryMapConfig::default();
    for digit in 0..10u8 {
        let pattern = SEVEN_SEGMENT_DIGITS[digit as usize];
        let image = demo_image(digit);
        let (mut arch, mut rtl) = both_machines(&map, &image);

        let run = arch.run(&InputSchedule::new(), 100);
        assert_eq!(run.outcome, RunOutcome::Halted);
        assert_eq!(arch.state().out_latch, pattern, "digit {digit}");
        assert_eq!(arch.state().ram[16], pattern);

        let cycles = rtl.run_cycles(&InputSchedule::new(), 200);
        assert!(cycles.halted);
        assert_eq!(rtl.state().out_latch, pattern, "digit {digit}");
        assert_eq!(rtl.output_pins(), 0x80 | pattern, "halt flag plus segments");
    }
    println!("PASS c8: demo shows the correct seven-segment pattern for digits 0-9 on both models");
}

#[test]
fn c9_text_formats_round_trip() {
    // Disassembled listings re-assemble to the identical image.
    for program in directed_suite() {
        let image = assemble_source(program.source).unwrap();
        let listing = disassemble(&image);
        let back = assemble_source(&listing)
            .unwrap_or_else(|e| panic!("{}: listing re-assembles: {e}", program.name));
        assert!(
            image.same_bytes(&back),
            "{}: listing must re-assemble byte-identically",
            program.name
        );
    }

    // Hex images round-trip for arbitrary sparse contents.
    let mut rng = program_rng(0x4e4, 0);
    for _ in 0..100 {
        let mut image = MemoryImage::new();
        for addr in 0..32u8 {
            if rng.next_u32() & 1 == 1 {
                image.set(addr, (rng.next_u32() & 0xff) as u8).unwrap();
            }
        }
        let text = format_hex(&image);
        let back = parse_hex(&text).unwrap();
        assert!(image.same_bytes(&back));
    }
    println!("PASS c9: listings re-assemble byte-identically and hex images round-trip");
}
