use crate::trace::{Command, DramGeometry, TraceRecord};

/// Access count per linear bank index, over every record.
pub fn bank_vector(records: &[TraceRecord], geometry: &DramGeometry) -> Vec<f64> {
    let mut counts = vec![0.0; geometry.bank_count()];
    for r in records {
        counts[r.bank_index(geometry)] += 1.0;
    }
    counts
}

/// Block access counts summed over all banks, plus the number of reads and
/// writes that had no active row to resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct AddressCounts {
    pub blocks: Vec<f64>,
    pub orphans: usize,
}

/// Resolves each `RDA`/`WRA` to a cell through the row opened by the
/// preceding `ACT` on the same bank and counts it in that cell's block.
pub fn address_vector(records: &[TraceRecord], geometry: &DramGeometry) -> AddressCounts {
    let mut blocks = vec![0.0; geometry.block_count()];
    let orphans = accumulate_blocks(records, geometry, &mut blocks);
    AddressCounts { blocks, orphans }
}

pub(crate) fn accumulate_blocks(
    records: &[TraceRecord],
    geometry: &DramGeometry,
    blocks: &mut [f64],
) -> usize {
    let per_rank = geometry.banks_per_rank();
    let mut active: Vec<Option<u32>> = vec![None; geometry.bank_count()];
    let mut orphans = 0;
    for r in records {
        let bank = r.bank_index(geometry);
        match r.cmd {
            Command::Act => active[bank] = Some(r.address),
            Command::Rda | Command::Wra => match active[bank] {
                Some(row) => blocks[geometry.block_index(row, r.address)] += 1.0,
                None => orphans += 1,
            },
            Command::Pre => active[bank] = None,
            Command::Prea => {
                let start = r.rank as usize * per_rank;
                active[start..start + per_rank].fill(None);
            }
        }
    }
    orphans
}
