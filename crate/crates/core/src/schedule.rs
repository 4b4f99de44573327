//! External inputs and their schedule file format.
//!
//! The machine has a single input bit (the button). A schedule maps step
//! indices to input values; unlisted steps read as released. The file form
//! is one `<step-index> <button-bit>` pair per line. At cycle granularity
//! the same schedule applies: both clock phases of step `k` sample entry
//! `k`, so a cycle-level run observes exactly what the instruction-level
//! run observed.

use std::collections::BTreeMap;

/// Input pin values for one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IoInputs {
    pub button: bool,
}

impl IoInputs {
    pub fn pressed() -> Self {
        IoInputs { button: true }
    }
}

/// Sparse step-indexed input schedule; missing steps default to released.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputSchedule {
    entries: BTreeMap<usize, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ScheduleParseError {
    pub line: usize,
    pub msg: String,
}

impl InputSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, step: usize, button: bool) {
        self.entries.insert(step, button);
    }

    pub fn at(&self, step: usize) -> IoInputs {
        IoInputs {
            button: self.entries.get(&step).copied().unwrap_or(false),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds a dense schedule from per-step button bits.
    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut schedule = Self::new();
        for (step, bit) in bits.into_iter().enumerate() {
            if bit {
                schedule.set(step, true);
            }
        }
        schedule
    }

    /// Parses `<step-index> <button-bit>` lines; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, ScheduleParseError> {
        let mut schedule = Self::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let mut fields = raw_line.split_whitespace();
            let Some(step) = fields.next() else { continue };
            let Some(bit) = fields.next() else {
                return Err(ScheduleParseError {
                    line,
                    msg: "expected \"<step-index> <button-bit>\"".into(),
                });
            };
            if fields.next().is_some() {
                return Err(ScheduleParseError {
                    line,
                    msg: "trailing fields after \"<step-index> <button-bit>\"".into(),
                });
            }
            let step: usize = step.parse().map_err(|_| ScheduleParseError {
                line,
                msg: format!("malformed step index {step:?}"),
            })?;
            let button = match bit {
                "0" => false,
                "1" => true,
                other => {
                    return Err(ScheduleParseError {
                        line,
                        msg: format!("button bit must be 0 or 1, got {other:?}"),
                    });
                }
            };
            schedule.set(step, button);
        }
        Ok(schedule)
    }
}
