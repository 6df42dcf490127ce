//! Protocol-valid synthetic workload generator.
//!
//! A [`WorkloadProfile`] repeats a command motif (for example
//! `ACT RDA*8 PRE`) against banks chosen by a weighted round-robin over
//! `bank_affinity`, picking rows and columns from a [`SpatialMode`]. Each
//! motif instance runs on one bank and must start and end with that bank
//! closed, so any concatenation of instances is legal.
//!
//! Randomness comes from `ChaCha8Rng` (`rand_chacha` 0.3) seeded with
//! `seed_from_u64(profile.seed)`; integer draws use `Rng::gen_range` and
//! probabilities use `Rng::gen::<f64>()` from `rand` 0.8. Both are
//! platform-independent, so a profile always yields the same trace.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{Command, DramGeometry, TraceRecord, WorkloadSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotifStep {
    pub cmd: Command,
    pub repeat: u32,
}

/// Ordered command template, written as e.g. `"ACT RDA*4 WRA*2 PRE"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Motif(pub Vec<MotifStep>);

impl Motif {
    pub fn steps(&self) -> &[MotifStep] {
        &self.0
    }

    pub fn len_records(&self) -> usize {
        self.0.iter().map(|s| s.repeat as usize).sum()
    }

    /// Checks that the motif is legal on a single bank that starts closed,
    /// and that it leaves the bank closed.
    pub fn check_legal(&self) -> std::result::Result<(), String> {
        if self.0.is_empty() {
            return Err("motif is empty".into());
        }
        let mut open = false;
        for (i, step) in self.0.iter().enumerate() {
            if step.repeat == 0 {
                return Err(format!("step {i} has repeat 0"));
            }
            match step.cmd {
                Command::Act => {
                    if open || step.repeat > 1 {
                        return Err(format!("step {i}: ACT on an already active bank"));
                    }
                    open = true;
                }
                Command::Rda | Command::Wra => {
                    if !open {
                        return Err(format!("step {i}: {} without an active row", step.cmd));
                    }
                }
                Command::Pre | Command::Prea => open = false,
            }
        }
        if open {
            return Err("motif leaves a row active".into());
        }
        Ok(())
    }
}

impl FromStr for Motif {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let steps = s
            .split_whitespace()
            .map(|token| {
                let (cmd, repeat) = match token.split_once('*') {
                    Some((cmd, n)) => (
                        cmd,
                        n.parse::<u32>()
                            .map_err(|e| format!("bad repeat in `{token}`: {e}"))?,
                    ),
                    None => (token, 1),
                };
                Ok(MotifStep {
                    cmd: cmd.parse()?,
                    repeat,
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        Ok(Motif(steps))
    }
}

impl fmt::Display for Motif {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if step.repeat == 1 {
                write!(f, "{}", step.cmd)?;
            } else {
                write!(f, "{}*{}", step.cmd, step.repeat)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Motif {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Motif {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// How rows (at `ACT`) and columns (at `RDA`/`WRA`) are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SpatialMode {
    /// Walks cells row-major through rows `[start_row, start_row + span_rows)`,
    /// wrapping at the end of the window.
    SequentialSweep { start_row: u32, span_rows: u32 },
    /// Advances the row by `row_stride` per activation and the column by
    /// `col_stride` per access, inside the row window.
    Strided {
        start_row: u32,
        span_rows: u32,
        row_stride: u32,
        col_stride: u32,
    },
    /// With probability `heat` an activation targets one of `blocks` (address
    /// block indices) and its accesses stay inside that block; otherwise the
    /// row and columns are uniform over the bank.
    HotBlock { blocks: Vec<u32>, heat: f64 },
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub name: String,
    pub motif: Motif,
    /// Per access, the probability of swapping `RDA` and `WRA`; per access
    /// step, the probability of growing or shrinking its repeat count by one.
    #[serde(default)]
    pub motif_noise: f64,
    pub spatial: SpatialMode,
    /// One non-negative weight per linear bank index.
    pub bank_affinity: Vec<f64>,
    pub seed: u64,
}

impl WorkloadProfile {
    pub fn validate(&self, geometry: &DramGeometry) -> Result<()> {
        let invalid = |reason: String| Error::InvalidProfile {
            name: self.name.clone(),
            reason,
        };
        self.motif.check_legal().map_err(invalid)?;
        if !(0.0..=1.0).contains(&self.motif_noise) {
            return Err(invalid(format!("motif_noise {} outside [0, 1]", self.motif_noise)));
        }
        if self.bank_affinity.len() != geometry.bank_count() {
            return Err(invalid(format!(
                "bank_affinity has {} weights, geometry has {} banks",
                self.bank_affinity.len(),
                geometry.bank_count()
            )));
        }
        if self.bank_affinity.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("bank weights must be finite and non-negative".into()));
        }
        if self.bank_affinity.iter().sum::<f64>() <= 0.0 {
            return Err(invalid("bank weights are all zero".into()));
        }
        let check_window = |start: u32, span: u32| {
            if span == 0 || start as u64 + span as u64 > geometry.rows_per_bank as u64 {
                Err(invalid(format!(
                    "row window [{start}, {start}+{span}) does not fit in {} rows",
                    geometry.rows_per_bank
                )))
            } else {
                Ok(())
            }
        };
        match &self.spatial {
            SpatialMode::SequentialSweep {
                start_row,
                span_rows,
            } => check_window(*start_row, *span_rows)?,
            SpatialMode::Strided {
                start_row,
                span_rows,
                ..
            } => check_window(*start_row, *span_rows)?,
            SpatialMode::HotBlock { blocks, heat } => {
                if !(0.0..=1.0).contains(heat) {
                    return Err(invalid(format!("heat {heat} outside [0, 1]")));
                }
                if blocks.is_empty() && *heat > 0.0 {
                    return Err(invalid("hot_block needs at least one block".into()));
                }
                if let Some(b) = blocks.iter().find(|&&b| b as usize >= geometry.block_count()) {
                    return Err(invalid(format!(
                        "block {b} outside [0, {})",
                        geometry.block_count()
                    )));
                }
            }
            SpatialMode::UniformRandom => {}
        }
        Ok(())
    }
}

/// Uniform weights over `banks`, zero elsewhere.
pub fn affinity_over(banks: &[usize], geometry: &DramGeometry) -> Vec<f64> {
    let mut weights = vec![0.0; geometry.bank_count()];
    for &b in banks {
        weights[b] = 1.0;
    }
    weights
}

/// Several profiles taking turns, switching after at least `phase_len`
/// records at a motif boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Interleave {
    pub name: String,
    pub parts: Vec<WorkloadProfile>,
    pub phase_len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    Profile(WorkloadProfile),
    Interleave(Interleave),
}

impl Workload {
    pub fn name(&self) -> &str {
        match self {
            Workload::Profile(p) => &p.name,
            Workload::Interleave(i) => &i.name,
        }
    }

    pub fn validate(&self, geometry: &DramGeometry) -> Result<()> {
        match self {
            Workload::Profile(p) => p.validate(geometry),
            Workload::Interleave(i) => {
                if i.parts.is_empty() || i.phase_len == 0 {
                    return Err(Error::InvalidProfile {
                        name: i.name.clone(),
                        reason: "interleave needs parts and phase_len >= 1".into(),
                    });
                }
                i.parts.iter().try_for_each(|p| p.validate(geometry))
            }
        }
    }

    pub fn generate(&self, length: usize, geometry: &DramGeometry) -> Result<WorkloadSequence> {
        match self {
            Workload::Profile(p) => generate_workload(p, length, geometry),
            Workload::Interleave(i) => generate_interleaved(i, length, geometry),
        }
    }
}

/// Smooth weighted round-robin: every full cycle visits each bank exactly in
/// proportion to its (rounded) weight.
#[derive(Debug, Clone)]
struct BankScheduler {
    weights: Vec<f64>,
    credit: Vec<f64>,
    total: f64,
}

impl BankScheduler {
    fn new(weights: &[f64]) -> Self {
        Self {
            weights: weights.to_vec(),
            credit: vec![0.0; weights.len()],
            total: weights.iter().sum(),
        }
    }

    fn next(&mut self) -> usize {
        for (c, w) in self.credit.iter_mut().zip(&self.weights) {
            *c += w;
        }
        // highest credit wins, lowest index on ties
        let mut best = None;
        for (i, (&c, &w)) in self.credit.iter().zip(&self.weights).enumerate() {
            if w > 0.0 && best.is_none_or(|b: usize| c > self.credit[b]) {
                best = Some(i);
            }
        }
        let best = best.expect("validated affinity has a positive weight");
        self.credit[best] -= self.total;
        best
    }
}

struct Emitter<'a> {
    profile: &'a WorkloadProfile,
    geometry: &'a DramGeometry,
    rng: ChaCha8Rng,
    banks: BankScheduler,
    sweep_row: u32,
    sweep_col: u32,
    hot: Option<(u32, u32)>,
}

impl<'a> Emitter<'a> {
    fn new(profile: &'a WorkloadProfile, geometry: &'a DramGeometry, seed: u64) -> Self {
        Self {
            profile,
            geometry,
            rng: ChaCha8Rng::seed_from_u64(seed),
            banks: BankScheduler::new(&profile.bank_affinity),
            sweep_row: 0,
            sweep_col: 0,
            hot: None,
        }
    }

    fn activation_row(&mut self) -> u32 {
        let g = self.geometry;
        match &self.profile.spatial {
            SpatialMode::SequentialSweep { start_row, .. } => start_row + self.sweep_row,
            SpatialMode::Strided {
                start_row,
                span_rows,
                row_stride,
                ..
            } => {
                let row = start_row + self.sweep_row;
                self.sweep_row = ((self.sweep_row as u64 + *row_stride as u64) % *span_rows as u64) as u32;
                row
            }
            SpatialMode::HotBlock { blocks, heat } => {
                if !blocks.is_empty() && self.rng.gen::<f64>() < *heat {
                    let block = blocks[self.rng.gen_range(0..blocks.len())];
                    let (_, grid_cols) = g.block_grid();
                    let block_row = block / grid_cols as u32;
                    let block_col = block % grid_cols as u32;
                    self.hot = Some((block_row, block_col));
                    block_row * g.block_rows + self.rng.gen_range(0..g.block_rows)
                } else {
                    self.hot = None;
                    self.rng.gen_range(0..g.rows_per_bank)
                }
            }
            SpatialMode::UniformRandom => self.rng.gen_range(0..g.rows_per_bank),
        }
    }

    fn access_col(&mut self) -> u32 {
        let g = self.geometry;
        match &self.profile.spatial {
            SpatialMode::SequentialSweep { span_rows, .. } => {
                let col = self.sweep_col;
                self.sweep_col += 1;
                if self.sweep_col == g.cols_per_bank {
                    self.sweep_col = 0;
                    self.sweep_row = (self.sweep_row + 1) % span_rows;
                }
                col
            }
            SpatialMode::Strided { col_stride, .. } => {
                let col = self.sweep_col;
                self.sweep_col =
                    ((self.sweep_col as u64 + *col_stride as u64) % g.cols_per_bank as u64) as u32;
                col
            }
            SpatialMode::HotBlock { .. } => match self.hot {
                Some((_, block_col)) => block_col * g.block_cols + self.rng.gen_range(0..g.block_cols),
                None => self.rng.gen_range(0..g.cols_per_bank),
            },
            SpatialMode::UniformRandom => self.rng.gen_range(0..g.cols_per_bank),
        }
    }

    /// Appends one motif instance; stops early once `out` holds `limit` records.
    fn emit_motif(&mut self, out: &mut Vec<TraceRecord>, limit: usize) {
        let bank = self.banks.next();
        let (rank, group, bank_in_group) = self.geometry.bank_location(bank);
        let noise = self.profile.motif_noise;
        for step in &self.profile.motif.0 {
            let mut repeat = step.repeat;
            if step.cmd.is_access() && noise > 0.0 && self.rng.gen::<f64>() < noise {
                if self.rng.gen::<bool>() {
                    repeat += 1;
                } else if repeat > 1 {
                    repeat -= 1;
                }
            }
            for _ in 0..repeat {
                if out.len() >= limit {
                    return;
                }
                let (cmd, address) = match step.cmd {
                    Command::Act => (Command::Act, self.activation_row()),
                    Command::Rda | Command::Wra => {
                        let cmd = if noise > 0.0 && self.rng.gen::<f64>() < noise {
                            if step.cmd == Command::Rda {
                                Command::Wra
                            } else {
                                Command::Rda
                            }
                        } else {
                            step.cmd
                        };
                        (cmd, self.access_col())
                    }
                    other => (other, 0),
                };
                out.push(TraceRecord::new(cmd, rank, group, bank_in_group, address));
            }
        }
    }
}

/// Generates `length` records from `profile`. Deterministic in
/// `(profile, length, geometry)`.
pub fn generate_workload(
    profile: &WorkloadProfile,
    length: usize,
    geometry: &DramGeometry,
) -> Result<WorkloadSequence> {
    profile.validate(geometry)?;
    let mut emitter = Emitter::new(profile, geometry, profile.seed);
    let mut records = Vec::with_capacity(length);
    while records.len() < length {
        emitter.emit_motif(&mut records, length);
    }
    Ok(WorkloadSequence::new(profile.name.clone(), records))
}

fn generate_interleaved(
    spec: &Interleave,
    length: usize,
    geometry: &DramGeometry,
) -> Result<WorkloadSequence> {
    Workload::Interleave(spec.clone()).validate(geometry)?;
    let mut emitters: Vec<Emitter> = spec
        .parts
        .iter()
        .map(|p| {
            let seed = spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ p.seed;
            Emitter::new(p, geometry, seed)
        })
        .collect();
    let mut records = Vec::with_capacity(length);
    let mut part = 0;
    let mut phase_start = 0;
    while records.len() < length {
        emitters[part].emit_motif(&mut records, length);
        if records.len() - phase_start >= spec.phase_len {
            part = (part + 1) % emitters.len();
            phase_start = records.len();
        }
    }
    Ok(WorkloadSequence::new(spec.name.clone(), records))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `RDA`/`WRA` on a bank with no active row.
    AccessWithoutActivation,
    /// `ACT` on a bank whose row is still active.
    DoubleActivation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub violations: Vec<Violation>,
}

impl ProtocolReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_protocol(records: &[TraceRecord], geometry: &DramGeometry) -> ProtocolReport {
    let per_rank = geometry.banks_per_rank();
    let mut open = vec![false; geometry.bank_count()];
    let mut violations = Vec::new();
    for (index, record) in records.iter().enumerate() {
        let bank = record.bank_index(geometry);
        match record.cmd {
            Command::Act => {
                if open[bank] {
                    violations.push(Violation {
                        index,
                        kind: ViolationKind::DoubleActivation,
                    });
                }
                open[bank] = true;
            }
            Command::Rda | Command::Wra => {
                if !open[bank] {
                    violations.push(Violation {
                        index,
                        kind: ViolationKind::AccessWithoutActivation,
                    });
                }
            }
            Command::Pre => open[bank] = false,
            Command::Prea => {
                let start = record.rank as usize * per_rank;
                open[start..start + per_rank].fill(false);
            }
        }
    }
    ProtocolReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Known,
    Unknown,
}

/// Named workloads with their known/unknown role, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub entries: Vec<(Workload, Role)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProfileEntry {
    name: String,
    motif: Motif,
    #[serde(default)]
    motif_noise: f64,
    spatial: SpatialMode,
    /// Shorthand for uniform weights over the listed bank indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    banks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bank_affinity: Option<Vec<f64>>,
    seed: u64,
    #[serde(default = "default_role")]
    role: Role,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InterleaveEntry {
    name: String,
    parts: Vec<String>,
    phase_len: usize,
    seed: u64,
    #[serde(default = "default_role")]
    role: Role,
}

fn default_role() -> Role {
    Role::Known
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct CatalogFile {
    #[serde(default)]
    profile: Vec<ProfileEntry>,
    #[serde(default)]
    interleave: Vec<InterleaveEntry>,
}

impl Catalog {
    pub fn workloads(&self) -> impl Iterator<Item = &Workload> {
        self.entries.iter().map(|(w, _)| w)
    }

    pub fn names_with_role(&self, role: Role) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|(w, _)| w.name().to_string())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Workload> {
        self.workloads().find(|w| w.name() == name)
    }

    /// Parses a TOML catalog with `[[profile]]` and `[[interleave]]` tables.
    /// Interleave parts refer to profiles by name. Entries are ordered with
    /// all profiles first, then interleaves.
    pub fn from_toml(text: &str, geometry: &DramGeometry) -> Result<Self> {
        let file: CatalogFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("profile catalog: {e}")))?;
        let mut profiles = BTreeMap::new();
        let mut entries = Vec::new();
        for entry in file.profile {
            let bank_affinity = match (entry.bank_affinity, entry.banks) {
                (Some(w), None) => w,
                (None, Some(banks)) => {
                    if let Some(b) = banks.iter().find(|&&b| b >= geometry.bank_count()) {
                        return Err(Error::InvalidProfile {
                            name: entry.name,
                            reason: format!("bank {b} outside geometry"),
                        });
                    }
                    affinity_over(&banks, geometry)
                }
                (None, None) => vec![1.0; geometry.bank_count()],
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidProfile {
                        name: entry.name,
                        reason: "give either `banks` or `bank_affinity`, not both".into(),
                    })
                }
            };
            let profile = WorkloadProfile {
                name: entry.name,
                motif: entry.motif,
                motif_noise: entry.motif_noise,
                spatial: entry.spatial,
                bank_affinity,
                seed: entry.seed,
            };
            profile.validate(geometry)?;
            profiles.insert(profile.name.clone(), profile.clone());
            entries.push((Workload::Profile(profile), entry.role));
        }
        for entry in file.interleave {
            let parts = entry
                .parts
                .iter()
                .map(|p| {
                    profiles.get(p).cloned().ok_or_else(|| Error::InvalidProfile {
                        name: entry.name.clone(),
                        reason: format!("unknown part `{p}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let workload = Workload::Interleave(Interleave {
                name: entry.name,
                parts,
                phase_len: entry.phase_len,
                seed: entry.seed,
            });
            workload.validate(geometry)?;
            entries.push((workload, entry.role));
        }
        let mut names: Vec<&str> = entries.iter().map(|(w, _)| w.name()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate workload name `{}`", w[0])));
        }
        Ok(Catalog { entries })
    }

    pub fn from_toml_file(path: &Path, geometry: &DramGeometry) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?, geometry)
    }

    pub fn to_toml(&self) -> String {
        let mut file = CatalogFile::default();
        for (workload, role) in &self.entries {
            match workload {
                Workload::Profile(p) => file.profile.push(ProfileEntry {
                    name: p.name.clone(),
                    motif: p.motif.clone(),
                    motif_noise: p.motif_noise,
                    spatial: p.spatial.clone(),
                    banks: None,
                    bank_affinity: Some(p.bank_affinity.clone()),
                    seed: p.seed,
                    role: *role,
                }),
                Workload::Interleave(i) => file.interleave.push(InterleaveEntry {
                    name: i.name.clone(),
                    parts: i.parts.iter().map(|p| p.name.clone()).collect(),
                    phase_len: i.phase_len,
                    seed: i.seed,
                    role: *role,
                }),
            }
        }
        toml::to_string_pretty(&file).expect("catalog serializes")
    }
}

pub mod presets {
    //! Named catalogs shipped with the crate.

    use super::*;

    pub const BENCHMARK_V1: &str = "benchmark-v1";

    pub fn by_name(name: &str, geometry: &DramGeometry) -> Option<Catalog> {
        match name {
            BENCHMARK_V1 => Some(benchmark_v1(geometry)),
            _ => None,
        }
    }

    fn profile(
        name: &str,
        motif: &str,
        motif_noise: f64,
        spatial: SpatialMode,
        banks: &[usize],
        seed: u64,
        geometry: &DramGeometry,
    ) -> WorkloadProfile {
        WorkloadProfile {
            name: name.into(),
            motif: motif.parse().expect("preset motif parses"),
            motif_noise,
            spatial,
            bank_affinity: affinity_over(banks, geometry),
            seed,
        }
    }

    fn bank_range(range: std::ops::Range<usize>, geometry: &DramGeometry) -> Vec<usize> {
        range.map(|b| b % geometry.bank_count()).collect()
    }

    fn row_block_start(block: u32, geometry: &DramGeometry) -> u32 {
        (block % (geometry.rows_per_bank / geometry.block_rows)) * geometry.block_rows
    }

    /// Six known workloads and two unknown ones.
    ///
    /// `stream-read-relocated` repeats the commands and banks of
    /// `stream-read` over a row region no known workload touches.
    /// `mixed-stream-hot` alternates between two known workloads, so its
    /// features sit between those classes.
    pub fn benchmark_v1(geometry: &DramGeometry) -> Catalog {
        let g = geometry;
        let sweep = |block: u32, span: u32| SpatialMode::SequentialSweep {
            start_row: row_block_start(block, g),
            span_rows: span.min(g.block_rows),
        };
        let (_, grid_cols) = g.block_grid();
        let grid_cols = grid_cols as u32;
        let block_count = g.block_count() as u32;
        let hot = |row_block: u32, cols: &[u32]| SpatialMode::HotBlock {
            blocks: cols
                .iter()
                .map(|c| (row_block * grid_cols + c % grid_cols) % block_count)
                .collect(),
            heat: 1.0,
        };

        let stream_read = profile(
            "stream-read",
            "ACT RDA*8 PRE",
            0.0,
            sweep(0, 4096),
            &bank_range(0..8, g),
            11,
            g,
        );
        let stream_write = profile(
            "stream-write",
            "ACT WRA*8 PRE",
            0.0,
            sweep(1, 4096),
            &bank_range(8..16, g),
            12,
            g,
        );
        let hot_rw = profile(
            "hot-rw",
            "ACT RDA*2 WRA*2 PRE",
            0.05,
            hot(2, &[3, 40, 77, 101]),
            &bank_range(16..24, g),
            13,
            g,
        );
        let strided_copy = profile(
            "strided-copy",
            "ACT RDA*4 PRE ACT WRA*4 PRE",
            0.0,
            SpatialMode::Strided {
                start_row: row_block_start(3, g),
                span_rows: g.block_rows.min(8192),
                row_stride: 7,
                col_stride: 37,
            },
            &bank_range(24..32, g),
            14,
            g,
        );
        let pointer_chase = profile(
            "pointer-chase",
            "ACT RDA PRE",
            0.0,
            hot(4, &[0, 9, 18, 27, 36, 45]),
            &bank_range(0..32, g).into_iter().step_by(2).collect::<Vec<_>>(),
            15,
            g,
        );
        let bulk_fill = profile(
            "bulk-fill",
            "ACT WRA*16 PREA",
            0.02,
            SpatialMode::Strided {
                start_row: row_block_start(6, g),
                span_rows: g.block_rows.min(2048),
                row_stride: 1,
                col_stride: 8,
            },
            &bank_range(1..32, g).into_iter().step_by(2).collect::<Vec<_>>(),
            16,
            g,
        );
        let relocated = WorkloadProfile {
            name: "stream-read-relocated".into(),
            spatial: sweep(5, 4096),
            seed: 21,
            ..stream_read.clone()
        };
        let mixed = Interleave {
            name: "mixed-stream-hot".into(),
            parts: vec![stream_write.clone(), hot_rw.clone()],
            phase_len: 400,
            seed: 22,
        };

        let known = [stream_read, stream_write, hot_rw, strided_copy, pointer_chase, bulk_fill];
        let mut entries: Vec<(Workload, Role)> = known
            .into_iter()
            .map(|p| (Workload::Profile(p), Role::Known))
            .collect();
        entries.push((Workload::Profile(relocated), Role::Unknown));
        entries.push((Workload::Interleave(mixed), Role::Unknown));
        Catalog { entries }
    }
}
