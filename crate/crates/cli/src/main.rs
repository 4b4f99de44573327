//! `acc8` — assembler, disassembler, dual simulators, scan-chain tools,
//! and the differential co-simulation harness for the 8-bit accumulator
//! machine, behind one command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use acc8::arch::{ArchMachine, MemoryMapConfig, RunOutcome, StepResult, SEVEN_SEGMENT_DIGITS};
use acc8::asm::{assemble_source, disassemble};
use acc8::cosim::{fuzz_cosim, run_lockstep, FuzzConfig};
use acc8::image::{format_hex, parse_hex, MemoryImage};
use acc8::isa::{decode, encode};
use acc8::programs::{demo_image, DEMO};
use acc8::rtl::{scan_from_text, scan_to_text, Phase, RtlMachine, TickResult};
use acc8::schedule::InputSchedule;

#[derive(Parser)]
#[command(
    name = "acc8",
    version,
    about = "Toolchain for an 8-bit accumulator machine with 32 bytes of memory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Instruction-level reference model.
    Arch,
    /// Cycle-accurate two-phase model.
    Rtl,
}

/// Memory-map selection shared by the execution commands. The I/O byte is
/// always the last RAM byte.
#[derive(Args)]
struct MapArgs {
    /// RAM bytes (the I/O byte is the last one).
    #[arg(long, default_value_t = 17)]
    ram_size: usize,
    /// ROM contents as a hex-byte file, or "none" for no ROM
    /// (default: the built-in seven-segment table).
    #[arg(long)]
    rom: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a source file into a hex memory image.
    Assemble {
        source: PathBuf,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Disassemble a hex memory image into a listing that re-assembles
    /// to the same bytes.
    Disassemble {
        image: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a hex image and print the final state summary.
    Run {
        image: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Arch)]
        mode: Mode,
        /// Instruction budget (arch mode).
        #[arg(long, default_value_t = 4096)]
        max_steps: usize,
        /// Clock-tick budget (rtl mode).
        #[arg(long, default_value_t = 8192)]
        max_ticks: usize,
        /// Button schedule file: lines of "<step-index> <button-bit>".
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Write a trace file: one record per instruction (arch) or per
        /// tick (rtl).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Differential co-simulation of the two models. With an image, checks
    /// that one program; otherwise fuzzes random programs.
    Cosim {
        /// Specific image to check instead of random programs.
        image: Option<PathBuf>,
        /// Random programs to generate (ignored with an image).
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instruction budget per program.
        #[arg(long, default_value_t = 4096)]
        max_steps: usize,
        /// Button schedule file (only with an image; fuzzing draws random
        /// schedules).
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Scan-chain state streams ('0'/'1' text, head bit first).
    Scan {
        #[command(subcommand)]
        action: ScanAction,
    },
    /// Run the bundled seven-segment demo (or print its source).
    Demo {
        /// Digit to display (0-9).
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(0..=9))]
        digit: u8,
        #[arg(long, value_enum, default_value_t = Mode::Arch)]
        mode: Mode,
        /// Print the demo's assembly source instead of running it.
        #[arg(long)]
        source: bool,
    },
}

#[derive(Subcommand)]
enum ScanAction {
    /// Reset with an image, run the given number of ticks, and emit the
    /// scan-chain stream.
    Dump {
        image: PathBuf,
        /// Clock ticks to run before dumping (0 dumps the reset state).
        #[arg(long, default_value_t = 0)]
        ticks: usize,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Load a stream into a fresh machine and print the restored state.
    Load {
        stream: PathBuf,
        #[command(flatten)]
        map: MapArgs,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Assemble { source, output } => cmd_assemble(&source, output.as_deref()),
        Command::Disassemble { image, output } => cmd_disassemble(&image, output.as_deref()),
        Command::Run {
            image,
            mode,
            max_steps,
            max_ticks,
            schedule,
            trace,
            map,
        } => cmd_run(
            &image,
            mode,
            max_steps,
            max_ticks,
            schedule.as_deref(),
            trace.as_deref(),
            &map,
        ),
        Command::Cosim {
            image,
            count,
            seed,
            max_steps,
            schedule,
            map,
        } => cmd_cosim(
            image.as_deref(),
            count,
            seed,
            max_steps,
            schedule.as_deref(),
            &map,
        ),
        Command::Scan { action } => match action {
            ScanAction::Dump {
                image,
                ticks,
                schedule,
                output,
                map,
            } => cmd_scan_dump(&image, ticks, schedule.as_deref(), output.as_deref(), &map),
            ScanAction::Load { stream, map } => cmd_scan_load(&stream, &map),
        },
        Command::Demo {
            digit,
            mode,
            source,
        } => cmd_demo(digit, mode, source),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_output(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_image(path: &Path) -> Result<MemoryImage> {
    parse_hex(&read_text(path)?).with_context(|| format!("parsing image {}", path.display()))
}

fn read_schedule(path: Option<&Path>) -> Result<InputSchedule> {
    match path {
        None => Ok(InputSchedule::new()),
        Some(path) => InputSchedule::parse(&read_text(path)?)
            .with_context(|| format!("parsing schedule {}", path.display())),
    }
}

/// ROM file: whitespace-separated two-digit hex bytes, `//` comments.
fn parse_rom_text(text: &str) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        for token in line.split_whitespace() {
            let well_formed = token.len() == 2 && token.bytes().all(|b| b.is_ascii_hexdigit());
            ensure!(
                well_formed,
                "line {}: malformed ROM byte {token:?}",
                idx + 1
            );
            bytes.push(u8::from_str_radix(token, 16).unwrap());
        }
    }
    Ok(bytes)
}

fn build_map(args: &MapArgs) -> Result<MemoryMapConfig> {
    ensure!(args.ram_size >= 1, "--ram-size must be at least 1");
    let rom = match args.rom.as_deref() {
        None => SEVEN_SEGMENT_DIGITS.to_vec(),
        Some("none") => Vec::new(),
        Some(path) => parse_rom_text(&read_text(Path::new(path))?)
            .with_context(|| format!("parsing ROM {path}"))?,
    };
    MemoryMapConfig::new(args.ram_size, (args.ram_size - 1) as u8, rom)
        .context("invalid memory map")
}

fn summary_line(halted: bool, pc: u8, acc: u8, out_latch: u8) -> String {
    format!("halted={halted} pc={pc} acc={acc} out_latch=0x{out_latch:02X}")
}

fn write_column(write: Option<(u8, u8)>) -> String {
    match write {
        Some((addr, value)) => format!("{addr:02X}:{value:02X}"),
        None => "-".to_string(),
    }
}

/// Trace record, tab-separated: step, pc_before, raw byte, mnemonic,
/// acc_before, acc_after, memory write (`AA:VV` or `-`), halted flag.
fn arch_trace_line(step: usize, r: &StepResult) -> String {
    let byte = encode(r.executed).expect("an executed instruction always encodes");
    format!(
        "{step}\t{:02}\t{byte:02X}\t{}\t{:02X}\t{:02X}\t{}\t{}",
        r.pc_before,
        r.executed,
        r.acc_before,
        r.acc_after,
        write_column(r.memory_write),
        r.halted_now as u8
    )
}

/// Same field order as the arch trace, one record per tick; the mnemonic
/// column carries `FETCH` on fetch ticks and the decoded instruction on
/// execute ticks.
fn rtl_trace_line(tick: usize, r: &TickResult) -> String {
    let label = match r.phase {
        Phase::Fetch => "FETCH".to_string(),
        _ => decode(r.ir_after).to_string(),
    };
    format!(
        "{tick}\t{:02}\t{:02X}\t{label}\t{:02X}\t{:02X}\t{}\t{}",
        r.pc_before,
        r.ir_after,
        r.acc_before,
        r.acc_after,
        write_column(r.memory_write),
        r.halted_after as u8
    )
}

fn cmd_assemble(source: &Path, output: Option<&Path>) -> Result<()> {
    let image = assemble_source(&read_text(source)?)
        .with_context(|| format!("assembling {}", source.display()))?;
    write_output(output, &format_hex(&image))
}

fn cmd_disassemble(image: &Path, output: Option<&Path>) -> Result<()> {
    write_output(output, &disassemble(&read_image(image)?))
}

fn cmd_run(
    image_path: &Path,
    mode: Mode,
    max_steps: usize,
    max_ticks: usize,
    schedule: Option<&Path>,
    trace: Option<&Path>,
    map: &MapArgs,
) -> Result<()> {
    let image = read_image(image_path)?;
    let map = build_map(map)?;
    let schedule = read_schedule(schedule)?;

    let (summary, trace_text) = match mode {
        Mode::Arch => {
            let mut machine = ArchMachine::reset(map, &image).context("loading image")?;
            let run = machine.run(&schedule, max_steps);
            let lines: Vec<String> = run
                .trace
                .iter()
                .enumerate()
                .map(|(i, r)| arch_trace_line(i, r))
                .collect();
            if run.outcome == RunOutcome::StepLimit {
                eprintln!("note: stopped at the {max_steps}-instruction budget");
            }
            let s = machine.state();
            (
                summary_line(s.halted, s.pc, s.acc, s.out_latch),
                lines.join("\n"),
            )
        }
        Mode::Rtl => {
            let mut machine = RtlMachine::reset(map, &image).context("loading image")?;
            let mut lines = Vec::new();
            let cycles = machine.run_cycles_traced(&schedule, max_ticks, |tick, r| {
                lines.push(rtl_trace_line(tick, r));
            });
            if !cycles.halted {
                eprintln!("note: stopped at the {max_ticks}-tick budget");
            }
            let s = machine.state();
            (
                summary_line(s.halted(), s.pc, s.acc, s.out_latch),
                lines.join("\n"),
            )
        }
    };

    if let Some(path) = trace {
        let text = if trace_text.is_empty() {
            trace_text
        } else {
            trace_text + "\n"
        };
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{summary}");
    Ok(())
}

fn cmd_cosim(
    image: Option<&Path>,
    count: usize,
    seed: u64,
    max_steps: usize,
    schedule: Option<&Path>,
    map_args: &MapArgs,
) -> Result<()> {
    let map = build_map(map_args)?;

    if let Some(path) = image {
        let image = read_image(path)?;
        let schedule = read_schedule(schedule)?;
        let mut arch = ArchMachine::reset(map.clone(), &image).context("loading image")?;
        let mut rtl = RtlMachine::reset(map, &image).context("loading image")?;
        match run_lockstep(&mut arch, &mut rtl, &schedule, max_steps) {
            Ok(outcome) => {
                println!(
                    "programs=1 instructions={} ticks={} halted_programs={}",
                    outcome.instructions, outcome.ticks, outcome.halted as usize
                );
                println!("PASS");
                Ok(())
            }
            Err(divergence) => {
                println!(
                    "programs=1 instructions={} ticks={}",
                    divergence.step,
                    2 * divergence.step
                );
                println!("FAIL {}: {divergence}", path.display());
                std::process::exit(1);
            }
        }
    } else {
        ensure!(
            schedule.is_none(),
            "--schedule applies only when checking a specific image"
        );
        let report = fuzz_cosim(&FuzzConfig {
            map,
            programs: count,
            max_steps,
            seed,
        });
        println!(
            "programs={} instructions={} ticks={} halted_programs={}",
            report.programs_run, report.instructions, report.ticks, report.halted_programs
        );
        match &report.failure {
            None => {
                println!("PASS");
                Ok(())
            }
            Some(failure) => {
                println!("FAIL {failure}");
                println!("failing image:");
                print!("{}", format_hex(&failure.image));
                std::process::exit(1);
            }
        }
    }
}

fn cmd_scan_dump(
    image: &Path,
    ticks: usize,
    schedule: Option<&Path>,
    output: Option<&Path>,
    map: &MapArgs,
) -> Result<()> {
    let image = read_image(image)?;
    let map = build_map(map)?;
    let schedule = read_schedule(schedule)?;
    let mut machine = RtlMachine::reset(map, &image).context("loading image")?;
    if ticks > 0 {
        machine.run_cycles(&schedule, ticks);
    }
    let stream = scan_to_text(&machine.scan_export());
    write_output(output, &format!("{stream}\n"))
}

fn cmd_scan_load(stream: &Path, map: &MapArgs) -> Result<()> {
    let text = read_text(stream)?;
    let bits = scan_from_text(&text)
        .with_context(|| format!("{}: streams contain only '0' and '1'", stream.display()))?;
    let map = build_map(map)?;
    let mut machine =
        RtlMachine::reset(map, &MemoryImage::new()).expect("empty image always loads");
    machine.scan_import(&bits).context("loading scan stream")?;
    let s = machine.state();
    println!(
        "pc={} acc={} ir=0x{:02X} phase={} out_latch=0x{:02X}",
        s.pc, s.acc, s.ir, s.phase, s.out_latch
    );
    let ram: Vec<String> = s.ram.iter().map(|b| format!("{b:02X}")).collect();
    println!("ram={}", ram.join(" "));
    Ok(())
}

/// Three-row rendering of a seven-segment pattern (bit 0 = segment a on
/// top, bits 1-6 = b..g).
fn render_segments(pattern: u8) -> String {
    let seg = |bit: u8| pattern >> bit & 1 == 1;
    let pick = |on: bool, glyph: char| if on { glyph } else { ' ' };
    format!(
        " {} \n{}{}{}\n{}{}{}",
        pick(seg(0), '_'),
        pick(seg(5), '|'),
        pick(seg(6), '_'),
        pick(seg(1), '|'),
        pick(seg(4), '|'),
        pick(seg(3), '_'),
        pick(seg(2), '|'),
    )
}

fn cmd_demo(digit: u8, mode: Mode, source_only: bool) -> Result<()> {
    if source_only {
        print!("{DEMO}");
        return Ok(());
    }
    let image = demo_image(digit);
    let map = MemoryMapConfig::default();
    let schedule = InputSchedule::new();
    let summary = match mode {
        Mode::Arch => {
            let mut machine = ArchMachine::reset(map, &image).expect("demo image loads");
            let run = machine.run(&schedule, 100);
            ensure!(run.outcome == RunOutcome::Halted, "demo must halt");
            let s = machine.state();
            summary_line(s.halted, s.pc, s.acc, s.out_latch)
        }
        Mode::Rtl => {
            let mut machine = RtlMachine::reset(map, &image).expect("demo image loads");
            let cycles = machine.run_cycles(&schedule, 200);
            ensure!(cycles.halted, "demo must halt");
            let s = machine.state();
            summary_line(s.halted(), s.pc, s.acc, s.out_latch)
        }
    };
    println!("{summary}");
    println!("{}", render_segments(SEVEN_SEGMENT_DIGITS[digit as usize]));
    Ok(())
}
