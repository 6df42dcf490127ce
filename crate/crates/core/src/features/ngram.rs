use std::collections::HashMap;
use std::fmt;

use crate::trace::Command;

/// Bits per command in a packed n-gram key.
const BITS: u32 = 3;
/// Longest n-gram that fits in a `u64` key.
pub const MAX_N: usize = (64 / BITS) as usize;

/// An n-gram packed base-8, first command most significant, so that for a
/// fixed `n` numeric key order equals lexicographic order on command codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NGram {
    pub n: u8,
    pub key: u64,
}

impl NGram {
    pub fn from_commands(cmds: &[Command]) -> NGram {
        assert!(!cmds.is_empty() && cmds.len() <= MAX_N);
        let key = cmds
            .iter()
            .fold(0u64, |acc, c| (acc << BITS) | c.code() as u64);
        NGram {
            n: cmds.len() as u8,
            key,
        }
    }

    pub fn commands(&self) -> Vec<Command> {
        (0..self.n as u32)
            .rev()
            .map(|i| {
                let code = (self.key >> (i * BITS)) & 0b111;
                Command::from_code(code as u8).expect("valid packed command")
            })
            .collect()
    }
}

impl fmt::Display for NGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.commands().into_iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(c.symbol())?;
        }
        Ok(())
    }
}

fn mask(n: usize) -> u64 {
    if n * BITS as usize >= 64 {
        u64::MAX
    } else {
        (1u64 << (n as u32 * BITS)) - 1
    }
}

/// Calls `f` with the packed key of every window of width `n` (stride 1).
#[inline]
pub fn for_each_window<I, F>(cmds: I, n: usize, mut f: F)
where
    I: IntoIterator<Item = Command>,
    F: FnMut(u64),
{
    assert!((1..=MAX_N).contains(&n), "n-gram width must be in 1..={MAX_N}");
    let mask = mask(n);
    let mut key = 0u64;
    for (i, c) in cmds.into_iter().enumerate() {
        key = ((key << BITS) | c.code() as u64) & mask;
        if i + 1 >= n {
            f(key);
        }
    }
}

/// Sliding-window n-gram counts. Total mass is `max(0, L - n + 1)`.
pub fn count_ngrams<I>(cmds: I, n: usize) -> HashMap<NGram, u64>
where
    I: IntoIterator<Item = Command>,
{
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for_each_window(cmds, n, |key| *counts.entry(key).or_insert(0) += 1);
    counts
        .into_iter()
        .map(|(key, c)| (NGram { n: n as u8, key }, c))
        .collect()
}
