//! Python bindings for the accumulator-machine toolchain: assembler,
//! both simulators, the scan chain, and the differential co-simulation
//! harness.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use acc8::arch::{ArchMachine, MemoryMapConfig, RunOutcome, SEVEN_SEGMENT_DIGITS};
use acc8::cosim::{fuzz_cosim, run_lockstep, FuzzConfig};
use acc8::image::MemoryImage;
use acc8::isa::{self, Instruction, Mnemonic};
use acc8::rtl::{scan_from_text, scan_to_text, RtlMachine};
use acc8::schedule::InputSchedule;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn schedule_from_bits(bits: Option<Vec<bool>>) -> InputSchedule {
    match bits {
        None => InputSchedule::new(),
        Some(bits) => InputSchedule::from_bits(bits),
    }
}

/// Sparse 32-byte memory image with an optional symbol table.
#[pyclass(name = "MemoryImage", from_py_object)]
#[derive(Clone)]
struct PyMemoryImage {
    inner: MemoryImage,
}

#[pymethods]
impl PyMemoryImage {
    #[new]
    fn new() -> Self {
        PyMemoryImage {
            inner: MemoryImage::new(),
        }
    }

    #[staticmethod]
    fn from_hex(text: &str) -> PyResult<Self> {
        Ok(PyMemoryImage {
            inner: acc8::image::parse_hex(text).map_err(value_error)?,
        })
    }

    fn to_hex(&self) -> String {
        acc8::image::format_hex(&self.inner)
    }

    fn set(&mut self, addr: u8, byte: u8) -> PyResult<()> {
        self.inner.set(addr, byte).map_err(value_error)
    }

    /// Overwrites an already-assigned address (e.g. a `.byte` cell).
    fn patch(&mut self, addr: u8, byte: u8) -> PyResult<()> {
        self.inner.patch(addr, byte).map_err(value_error)
    }

    fn get(&self, addr: u8) -> Option<u8> {
        self.inner.get(addr)
    }

    /// Address bound to an assembler label, if the image carries symbols.
    fn symbol(&self, name: &str) -> Option<u8> {
        self.inner.symbol(name)
    }

    fn items(&self) -> Vec<(u8, u8)> {
        self.inner.iter().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("MemoryImage({} bytes)", self.inner.len())
    }
}

/// Address-space layout: RAM (with the I/O byte inside it) plus optional
/// ROM, in 32 bytes total.
#[pyclass(name = "MemoryMapConfig", from_py_object)]
#[derive(Clone)]
struct PyMemoryMapConfig {
    inner: MemoryMapConfig,
}

#[pymethods]
impl PyMemoryMapConfig {
    /// `rom=None` selects the built-in seven-segment table; pass `[]` for
    /// no ROM. `io_addr=None` selects the last RAM byte.
    #[new]
    #[pyo3(signature = (ram_size=17, io_addr=None, rom=None))]
    fn new(ram_size: usize, io_addr: Option<u8>, rom: Option<Vec<u8>>) -> PyResult<Self> {
        let io_addr = io_addr.unwrap_or(ram_size.saturating_sub(1) as u8);
        let rom = rom.unwrap_or_else(|| SEVEN_SEGMENT_DIGITS.to_vec());
        Ok(PyMemoryMapConfig {
            inner: MemoryMapConfig::new(ram_size, io_addr, rom).map_err(value_error)?,
        })
    }

    #[getter]
    fn ram_size(&self) -> usize {
        self.inner.ram_size()
    }

    #[getter]
    fn io_addr(&self) -> u8 {
        self.inner.io_addr()
    }

    #[getter]
    fn rom(&self) -> Vec<u8> {
        self.inner.rom().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "MemoryMapConfig(ram_size={}, io_addr={}, rom={} bytes)",
            self.inner.ram_size(),
            self.inner.io_addr(),
            self.inner.rom().len()
        )
    }
}

/// Instruction-level reference machine.
#[pyclass(name = "ArchMachine")]
struct PyArchMachine {
    inner: ArchMachine,
}

#[pymethods]
impl PyArchMachine {
    #[new]
    #[pyo3(signature = (image, config=None))]
    fn new(image: &PyMemoryImage, config: Option<PyMemoryMapConfig>) -> PyResult<Self> {
        let map = config.map_or_else(MemoryMapConfig::default, |c| c.inner);
        Ok(PyArchMachine {
            inner: ArchMachine::reset(map, &image.inner).map_err(value_error)?,
        })
    }

    /// Executes one instruction. Raises if the machine is halted.
    #[pyo3(signature = (button=false))]
    fn step(&mut self, button: bool) -> PyResult<()> {
        self.inner
            .step(acc8::schedule::IoInputs { button })
            .map(|_| ())
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Runs until HALT or the step budget; returns (steps, halted).
    /// `schedule[k]` is the button bit during instruction `k`.
    #[pyo3(signature = (max_steps=4096, schedule=None))]
    fn run(&mut self, max_steps: usize, schedule: Option<Vec<bool>>) -> (usize, bool) {
        let result = self.inner.run(&schedule_from_bits(schedule), max_steps);
        (result.steps, result.outcome == RunOutcome::Halted)
    }

    #[getter]
    fn acc(&self) -> u8 {
        self.inner.state().acc
    }

    #[getter]
    fn pc(&self) -> u8 {
        self.inner.state().pc
    }

    #[getter]
    fn halted(&self) -> bool {
        self.inner.state().halted
    }

    #[getter]
    fn out_latch(&self) -> u8 {
        self.inner.state().out_latch
    }

    #[getter]
    fn ram(&self) -> Vec<u8> {
        self.inner.state().ram.clone()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.state();
        format!(
            "ArchMachine(pc={}, acc=0x{:02X}, halted={})",
            s.pc, s.acc, s.halted
        )
    }
}

/// Cycle-accurate two-phase machine with the scan chain.
#[pyclass(name = "RtlMachine")]
struct PyRtlMachine {
    inner: RtlMachine,
}

#[pymethods]
impl PyRtlMachine {
    #[new]
    #[pyo3(signature = (image, config=None))]
    fn new(image: &PyMemoryImage, config: Option<PyMemoryMapConfig>) -> PyResult<Self> {
        let map = config.map_or_else(MemoryMapConfig::default, |c| c.inner);
        Ok(PyRtlMachine {
            inner: RtlMachine::reset(map, &image.inner).map_err(value_error)?,
        })
    }

    /// One clock tick (half an instruction).
    #[pyo3(signature = (button=false))]
    fn tick(&mut self, button: bool) {
        self.inner.tick(acc8::schedule::IoInputs { button });
    }

    /// Runs until HALT or the tick budget; returns
    /// (ticks, instructions, halted).
    #[pyo3(signature = (max_ticks=8192, schedule=None))]
    fn run_cycles(
        &mut self,
        max_ticks: usize,
        schedule: Option<Vec<bool>>,
    ) -> (usize, usize, bool) {
        let result = self
            .inner
            .run_cycles(&schedule_from_bits(schedule), max_ticks);
        (result.ticks, result.instructions, result.halted)
    }

    /// Scan chain as a '0'/'1' string, head bit first.
    fn scan_export(&self) -> String {
        scan_to_text(&self.inner.scan_export())
    }

    /// Loads a '0'/'1' stream and releases the machine into FETCH.
    fn scan_import(&mut self, stream: &str) -> PyResult<()> {
        let bits = scan_from_text(stream)
            .ok_or_else(|| value_error("streams contain only '0' and '1'"))?;
        self.inner.scan_import(&bits).map_err(value_error)
    }

    /// Shifts the chain one bit; returns the bit that fell out.
    fn scan_shift(&mut self, scan_in: bool) -> bool {
        self.inner.scan_shift(scan_in)
    }

    fn scan_len(&self) -> usize {
        self.inner.scan_len()
    }

    /// Bits 0-6: display segments a-g; bit 7: halt flag.
    fn output_pins(&self) -> u8 {
        self.inner.output_pins()
    }

    #[getter]
    fn acc(&self) -> u8 {
        self.inner.state().acc
    }

    #[getter]
    fn pc(&self) -> u8 {
        self.inner.state().pc
    }

    #[getter]
    fn ir(&self) -> u8 {
        self.inner.state().ir
    }

    #[getter]
    fn phase(&self) -> &'static str {
        self.inner.state().phase.as_str()
    }

    #[getter]
    fn halted(&self) -> bool {
        self.inner.state().halted()
    }

    #[getter]
    fn out_latch(&self) -> u8 {
        self.inner.state().out_latch
    }

    #[getter]
    fn ram(&self) -> Vec<u8> {
        self.inner.state().ram.clone()
    }

    fn __repr__(&self) -> String {
        let s = self.inner.state();
        format!(
            "RtlMachine(pc={}, acc=0x{:02X}, phase={})",
            s.pc,
            s.acc,
            s.phase.as_str()
        )
    }
}

/// Assembles source text into a memory image (symbols included).
#[pyfunction]
fn assemble(source: &str) -> PyResult<PyMemoryImage> {
    Ok(PyMemoryImage {
        inner: acc8::asm::assemble_source(source).map_err(value_error)?,
    })
}

/// Disassembles an image into a listing that re-assembles byte-identically.
#[pyfunction]
fn disassemble(image: &PyMemoryImage) -> String {
    acc8::asm::disassemble(&image.inner)
}

/// Textual form of the instruction a byte decodes to, e.g. `"LDA 5"`.
#[pyfunction]
fn decode(byte: u8) -> String {
    isa::decode(byte).to_string()
}

/// Opcode byte for a mnemonic plus optional operand.
#[pyfunction]
#[pyo3(signature = (mnemonic, operand=None))]
fn encode(mnemonic: &str, operand: Option<u8>) -> PyResult<u8> {
    let mnemonic = Mnemonic::parse(mnemonic)
        .ok_or_else(|| value_error(format!("unknown mnemonic {mnemonic:?}")))?;
    let instruction = Instruction::from_parts(mnemonic, operand)
        .ok_or_else(|| value_error("operand arity does not match the mnemonic"))?;
    isa::encode(instruction).map_err(value_error)
}

/// Seven-segment patterns for digits 0-9 (bit 0 = segment a).
#[pyfunction]
fn seven_segment_digits() -> Vec<u8> {
    SEVEN_SEGMENT_DIGITS.to_vec()
}

/// Assembly source of the bundled display demo.
#[pyfunction]
fn demo_source() -> &'static str {
    acc8::programs::DEMO
}

/// The demo image with its digit cell patched to `digit` (0-9).
#[pyfunction]
fn demo_image(digit: u8) -> PyResult<PyMemoryImage> {
    if digit > 9 {
        return Err(value_error("digit must be 0-9"));
    }
    Ok(PyMemoryImage {
        inner: acc8::programs::demo_image(digit),
    })
}

/// Runs both models in lockstep on one image; returns
/// (instructions, ticks, halted). Raises RuntimeError on divergence.
#[pyfunction]
#[pyo3(signature = (image, config=None, max_steps=4096, schedule=None))]
fn lockstep(
    image: &PyMemoryImage,
    config: Option<PyMemoryMapConfig>,
    max_steps: usize,
    schedule: Option<Vec<bool>>,
) -> PyResult<(usize, usize, bool)> {
    let map = config.map_or_else(MemoryMapConfig::default, |c| c.inner);
    let mut arch = ArchMachine::reset(map.clone(), &image.inner).map_err(value_error)?;
    let mut rtl = RtlMachine::reset(map, &image.inner).map_err(value_error)?;
    let outcome = run_lockstep(
        &mut arch,
        &mut rtl,
        &schedule_from_bits(schedule),
        max_steps,
    )
    .map_err(|d| PyRuntimeError::new_err(d.to_string()))?;
    Ok((outcome.instructions, outcome.ticks, outcome.halted))
}

/// Differential fuzzing campaign; returns
/// (passed, programs_run, instructions, failure_message_or_None).
#[pyfunction]
#[pyo3(signature = (programs=100, max_steps=1000, seed=0, config=None))]
fn fuzz(
    programs: usize,
    max_steps: usize,
    seed: u64,
    config: Option<PyMemoryMapConfig>,
) -> (bool, usize, usize, Option<String>) {
    let map = config.map_or_else(MemoryMapConfig::default, |c| c.inner);
    let report = fuzz_cosim(&FuzzConfig {
        map,
        programs,
        max_steps,
        seed,
    });
    (
        report.passed(),
        report.programs_run,
        report.instructions,
        report.failure.map(|f| f.to_string()),
    )
}

#[pymodule]
fn acc8_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMemoryImage>()?;
    m.add_class::<PyMemoryMapConfig>()?;
    m.add_class::<PyArchMachine>()?;
    m.add_class::<PyRtlMachine>()?;
    m.add_function(wrap_pyfunction!(assemble, m)?)?;
    m.add_function(wrap_pyfunction!(disassemble, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(seven_segment_digits, m)?)?;
    m.add_function(wrap_pyfunction!(demo_source, m)?)?;
    m.add_function(wrap_pyfunction!(demo_image, m)?)?;
    m.add_function(wrap_pyfunction!(lockstep, m)?)?;
    m.add_function(wrap_pyfunction!(fuzz, m)?)?;
    Ok(())
}
