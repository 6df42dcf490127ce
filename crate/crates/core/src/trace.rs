//! Workload data model: commands, DRAM geometry, trace records and
//! fixed-length subsequences.
//!
//! Traces are stored as headerless CSV, one record per line:
//!
//! ```text
//! ACT,0,1,1,2
//! WRA,0,1,1,3
//! PRE,0,1,1,0
//! ```
//!
//! Fields are `cmd,rank,bank_group,bank,address`. The address is a row for
//! `ACT`, a column for `RDA`/`WRA`, and is written as `0` (and ignored) for
//! `PRE`/`PREA`. Files ending in `.gz` are read through a gzip decoder.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the five DRAM controller commands carried in a workload trace.
///
/// The integer encoding (`ACT = 0` .. `PREA = 4`) is stable; it defines the
/// packed n-gram keys and the lexicographic tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Command {
    #[serde(rename = "ACT")]
    Act = 0,
    #[serde(rename = "RDA")]
    Rda = 1,
    #[serde(rename = "WRA")]
    Wra = 2,
    #[serde(rename = "PRE")]
    Pre = 3,
    #[serde(rename = "PREA")]
    Prea = 4,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Act,
        Command::Rda,
        Command::Wra,
        Command::Pre,
        Command::Prea,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Command> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Command::Act => "ACT",
            Command::Rda => "RDA",
            Command::Wra => "WRA",
            Command::Pre => "PRE",
            Command::Prea => "PREA",
        }
    }

    /// `RDA` or `WRA`.
    pub fn is_access(self) -> bool {
        matches!(self, Command::Rda | Command::Wra)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ACT" => Ok(Command::Act),
            "RDA" => Ok(Command::Rda),
            "WRA" => Ok(Command::Wra),
            "PRE" => Ok(Command::Pre),
            "PREA" => Ok(Command::Prea),
            other => Err(format!("unknown command `{other}`")),
        }
    }
}

/// Shape of the DRAM device and of the address blocks used for spatial
/// features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct DramGeometry {
    pub ranks: u32,
    pub bank_groups_per_rank: u32,
    pub banks_per_group: u32,
    pub rows_per_bank: u32,
    pub cols_per_bank: u32,
    /// Rows per address block.
    pub block_rows: u32,
    /// Columns per address block.
    pub block_cols: u32,
}

impl Default for DramGeometry {
    fn default() -> Self {
        Self {
            ranks: 2,
            bank_groups_per_rank: 4,
            banks_per_group: 4,
            rows_per_bank: 1 << 17,
            cols_per_bank: 1 << 10,
            block_rows: 1 << 14,
            block_cols: 8,
        }
    }
}

impl DramGeometry {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("ranks", self.ranks),
            ("bank_groups_per_rank", self.bank_groups_per_rank),
            ("banks_per_group", self.banks_per_group),
            ("rows_per_bank", self.rows_per_bank),
            ("cols_per_bank", self.cols_per_bank),
            ("block_rows", self.block_rows),
            ("block_cols", self.block_cols),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidGeometry(format!("{name} must be >= 1")));
            }
        }
        if self.ranks > 256 || self.bank_groups_per_rank > 256 || self.banks_per_group > 256 {
            return Err(Error::InvalidGeometry(
                "rank, bank group and bank counts are limited to 256".into(),
            ));
        }
        if !self.rows_per_bank.is_multiple_of(self.block_rows) {
            return Err(Error::InvalidGeometry(format!(
                "block_rows {} does not divide rows_per_bank {}",
                self.block_rows, self.rows_per_bank
            )));
        }
        if !self.cols_per_bank.is_multiple_of(self.block_cols) {
            return Err(Error::InvalidGeometry(format!(
                "block_cols {} does not divide cols_per_bank {}",
                self.block_cols, self.cols_per_bank
            )));
        }
        Ok(())
    }

    pub fn banks_per_rank(&self) -> usize {
        (self.bank_groups_per_rank * self.banks_per_group) as usize
    }

    pub fn bank_count(&self) -> usize {
        self.ranks as usize * self.banks_per_rank()
    }

    pub fn block_grid(&self) -> (usize, usize) {
        (
            (self.rows_per_bank / self.block_rows) as usize,
            (self.cols_per_bank / self.block_cols) as usize,
        )
    }

    pub fn block_count(&self) -> usize {
        let (r, c) = self.block_grid();
        r * c
    }

    /// Block holding cell `(row, col)`, numbered row-block major.
    pub fn block_index(&self, row: u32, col: u32) -> usize {
        let (_, block_cols) = self.block_grid();
        (row / self.block_rows) as usize * block_cols + (col / self.block_cols) as usize
    }

    /// Inverse of [`bank_linear_index`] for indices in `[0, bank_count)`.
    pub fn bank_location(&self, index: usize) -> (u8, u8, u8) {
        let bank = index % self.banks_per_group as usize;
        let rest = index / self.banks_per_group as usize;
        let group = rest % self.bank_groups_per_rank as usize;
        let rank = rest / self.bank_groups_per_rank as usize;
        (rank as u8, group as u8, bank as u8)
    }

    /// Reads a geometry from a TOML file. Missing keys take the defaults.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let geometry: DramGeometry =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        geometry.validate()?;
        Ok(geometry)
    }
}

/// Position of `(rank, bank_group, bank)` in rank-major, then bank-group,
/// then bank order.
pub fn bank_linear_index(
    rank: u32,
    bank_group: u32,
    bank: u32,
    geometry: &DramGeometry,
) -> Result<usize> {
    let checks = [
        ("rank", rank, geometry.ranks),
        ("bank_group", bank_group, geometry.bank_groups_per_rank),
        ("bank", bank, geometry.banks_per_group),
    ];
    for (field, value, limit) in checks {
        if value >= limit {
            return Err(Error::OutOfRange {
                line: 0,
                field,
                value: value as u64,
                limit: limit as u64,
            });
        }
    }
    Ok(((rank * geometry.bank_groups_per_rank + bank_group) * geometry.banks_per_group + bank)
        as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub cmd: Command,
    pub rank: u8,
    pub bank_group: u8,
    pub bank: u8,
    /// Row for `ACT`, column for `RDA`/`WRA`, zero for precharges.
    pub address: u32,
}

impl TraceRecord {
    pub fn new(cmd: Command, rank: u8, bank_group: u8, bank: u8, address: u32) -> Self {
        Self {
            cmd,
            rank,
            bank_group,
            bank,
            address,
        }
    }

    /// Linear bank index; assumes the record was validated against `geometry`.
    #[inline]
    pub fn bank_index(&self, geometry: &DramGeometry) -> usize {
        (self.rank as usize * geometry.bank_groups_per_rank as usize + self.bank_group as usize)
            * geometry.banks_per_group as usize
            + self.bank as usize
    }

    fn check(&self, geometry: &DramGeometry, line: usize) -> Result<()> {
        let address_limit = match self.cmd {
            Command::Act => Some(("address(row)", geometry.rows_per_bank)),
            Command::Rda | Command::Wra => Some(("address(col)", geometry.cols_per_bank)),
            Command::Pre | Command::Prea => None,
        };
        let checks = [
            ("rank", self.rank as u32, geometry.ranks),
            ("bank_group", self.bank_group as u32, geometry.bank_groups_per_rank),
            ("bank", self.bank as u32, geometry.banks_per_group),
        ];
        for (field, value, limit) in checks.into_iter().chain(
            address_limit.map(|(field, limit)| (field, self.address, limit)),
        ) {
            if value >= limit {
                return Err(Error::OutOfRange {
                    line,
                    field,
                    value: value as u64,
                    limit: limit as u64,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let address = match self.cmd {
            Command::Pre | Command::Prea => 0,
            _ => self.address,
        };
        write!(
            f,
            "{},{},{},{},{}",
            self.cmd, self.rank, self.bank_group, self.bank, address
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadSequence {
    pub label: String,
    pub records: Vec<TraceRecord>,
}

impl WorkloadSequence {
    pub fn new(label: impl Into<String>, records: Vec<TraceRecord>) -> Self {
        Self {
            label: label.into(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A contiguous, non-overlapping block of a workload sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsequence {
    pub label: String,
    /// Index of the block within the parent sequence.
    pub source_block: usize,
    pub records: Vec<TraceRecord>,
}

impl Subsequence {
    pub fn commands(&self) -> impl Iterator<Item = Command> + '_ {
        self.records.iter().map(|r| r.cmd)
    }
}

/// Counts produced while cutting a sequence into subsequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub records: usize,
    pub subsequences: usize,
    pub dropped_records: usize,
}

impl IngestReport {
    pub fn new(len: usize, subseq_len: usize) -> Self {
        let subsequences = len / subseq_len.max(1);
        Self {
            records: len,
            subsequences,
            dropped_records: len - subsequences * subseq_len.max(1),
        }
    }
}

fn parse_line(line: &str, line_no: usize, geometry: &DramGeometry) -> Result<TraceRecord> {
    let malformed = |reason: String| Error::MalformedLine {
        line: line_no,
        reason,
    };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(malformed(format!("expected 5 fields, found {}", fields.len())));
    }
    let cmd: Command = fields[0].parse().map_err(malformed)?;
    let mut numbers = [0u64; 4];
    for (slot, text) in numbers.iter_mut().zip(&fields[1..]) {
        *slot = text
            .parse::<u64>()
            .map_err(|e| malformed(format!("`{text}`: {e}")))?;
    }
    let narrow = |field: &'static str, value: u64, limit: u32| -> Result<u64> {
        if value >= limit as u64 {
            Err(Error::OutOfRange {
                line: line_no,
                field,
                value,
                limit: limit as u64,
            })
        } else {
            Ok(value)
        }
    };
    let rank = narrow("rank", numbers[0], geometry.ranks)? as u8;
    let bank_group = narrow("bank_group", numbers[1], geometry.bank_groups_per_rank)? as u8;
    let bank = narrow("bank", numbers[2], geometry.banks_per_group)? as u8;
    let address = match cmd {
        Command::Pre | Command::Prea => 0,
        _ => u32::try_from(numbers[3]).map_err(|_| Error::OutOfRange {
            line: line_no,
            field: "address",
            value: numbers[3],
            limit: u32::MAX as u64,
        })?,
    };
    let record = TraceRecord::new(cmd, rank, bank_group, bank, address);
    record.check(geometry, line_no)?;
    Ok(record)
}

/// Parses a CSV trace. Blank lines are skipped; line numbers in errors are
/// 1-based physical lines.
pub fn parse_trace<R: BufRead>(
    reader: R,
    geometry: &DramGeometry,
    label: impl Into<String>,
) -> Result<WorkloadSequence> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        records.push(parse_line(line, i + 1, geometry)?);
    }
    Ok(WorkloadSequence::new(label, records))
}

/// Label used for a trace file: the file name without `.csv` / `.gz`.
pub fn label_from_path(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = name.strip_suffix(".gz").unwrap_or(&name);
    let name = name.strip_suffix(".csv").unwrap_or(name);
    name.to_string()
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub fn read_trace_file(path: &Path, geometry: &DramGeometry) -> Result<WorkloadSequence> {
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if is_gzip(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_trace(BufReader::new(reader), geometry, label_from_path(path))
}

pub fn write_trace<W: Write>(mut writer: W, records: &[TraceRecord]) -> Result<()> {
    for record in records {
        writeln!(writer, "{record}")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    if is_gzip(path) {
        let mut encoder = GzEncoder::new(file, flate2::Compression::default());
        write_trace(&mut encoder, records)?;
        encoder.finish()?.flush()?;
    } else {
        write_trace(file, records)?;
    }
    Ok(())
}

/// Cuts `seq` into `floor(len / subseq_len)` consecutive blocks. The trailing
/// remainder is dropped.
pub fn partition(seq: &WorkloadSequence, subseq_len: usize) -> Vec<Subsequence> {
    assert!(subseq_len >= 1, "subsequence length must be >= 1");
    seq.records
        .chunks_exact(subseq_len)
        .enumerate()
        .map(|(block, chunk)| Subsequence {
            label: seq.label.clone(),
            source_block: block,
            records: chunk.to_vec(),
        })
        .collect()
}
