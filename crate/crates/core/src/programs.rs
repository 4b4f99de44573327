//! Bundled assembly programs: the display demo and a directed suite whose
//! final states were computed by hand, covering all 24 instructions.

use crate::asm::assemble_source;
use crate::image::MemoryImage;

pub const DEMO: &str = include_str!("../programs/demo.asm");
pub const ALU: &str = include_str!("../programs/alu.asm");
pub const SHIFT: &str = include_str!("../programs/shift.asm");
pub const BRANCH: &str = include_str!("../programs/branch.asm");
pub const JUMP: &str = include_str!("../programs/jump.asm");

/// A program with its expected final state under the default memory map.
#[derive(Debug, Clone, Copy)]
pub struct DirectedProgram {
    pub name: &'static str,
    pub source: &'static str,
    pub final_acc: u8,
    pub final_pc: u8,
    pub final_out_latch: u8,
    /// RAM cells with asserted final values.
    pub ram_expect: &'static [(u8, u8)],
}

/// Every instruction appears in at least one of these programs; each runs
/// to HALT well within 200 steps on the default memory map.
pub fn directed_suite() -> [DirectedProgram; 5] {
    [
        DirectedProgram {
            name: "demo",
            source: DEMO,
            final_acc: 0x6d,
            final_pc: 6,
            final_out_latch: 0x6d,
            ram_expect: &[(6, 5), (16, 0x6d)],
        },
        DirectedProgram {
            name: "alu",
            source: ALU,
            final_acc: 0x85,
            final_pc: 9,
            final_out_latch: 0,
            ram_expect: &[(9, 0x5a), (10, 0x3c), (11, 0x03), (12, 0x85)],
        },
        DirectedProgram {
            name: "shift",
            source: SHIFT,
            final_acc: 0x0f,
            final_pc: 10,
            final_out_latch: 0,
            ram_expect: &[(10, 0x0f)],
        },
        DirectedProgram {
            name: "branch",
            source: BRANCH,
            final_acc: 9,
            final_pc: 15,
            final_out_latch: 0,
            ram_expect: &[(15, 9)],
        },
        DirectedProgram {
            name: "jump",
            source: JUMP,
            final_acc: 2,
            final_pc: 4,
            final_out_latch: 0,
            ram_expect: &[(9, 4), (10, 0x2a), (11, 2), (12, 0x2a), (13, 2)],
        },
    ]
}

/// The demo image with its digit cell patched to `digit` (0-9).
pub fn demo_image(digit: u8) -> MemoryImage {
    assert!(digit < 10, "the display demo shows decimal digits");
    let mut image = assemble_source(DEMO).expect("bundled demo assembles");
    let addr = image.symbol("digit").expect("demo defines `digit`");
    image.patch(addr, digit).expect("digit cell is mapped");
    image
}
