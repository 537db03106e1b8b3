//! Synthetic corpus with planted rules
//! `HIGH ∨ (RECENT ∧ GENRE) ∨ (RECENT ∧ CAST ∧ DIRECTOR) → RELEVANT`
//! and a label-independent distractor atom COOKIE.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const SYNTHETIC_ATOMS: [&str; 6] = ["HIGH", "GENRE", "RECENT", "CAST", "DIRECTOR", "COOKIE"];

pub const SYNTHETIC_CSV_HEADER: &str = "user_id,item_id,HIGH,GENRE,RECENT,CAST,DIRECTOR,COOKIE,label";

const HIGH: usize = 0;
const GENRE: usize = 1;
const RECENT: usize = 2;
const CAST: usize = 3;
const DIRECTOR: usize = 4;
const COOKIE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SyntheticSample {
    pub user_id: u32,
    pub item_id: u32,
    /// In [`SYNTHETIC_ATOMS`] order.
    pub atoms: [bool; 6],
    pub label: bool,
}

/// How positive samples relate to the three planted rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportMode {
    /// Each positive satisfies exactly one rule.
    #[default]
    Exclusive,
    /// Each positive satisfies its assigned rule; the others are unconstrained.
    Overlapping,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub samples: usize,
    pub users: u32,
    pub items: u32,
    pub support: SupportMode,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_209,
            users: 6_040,
            items: 3_883,
            support: SupportMode::Exclusive,
            seed: 0,
        }
    }
}

/// Which of the three planted rules fire.
pub fn rules_fired(atoms: &[bool; 6]) -> [bool; 3] {
    [
        atoms[HIGH],
        atoms[RECENT] && atoms[GENRE],
        atoms[RECENT] && atoms[CAST] && atoms[DIRECTOR],
    ]
}

/// `HIGH ∨ (RECENT ∧ GENRE) ∨ (RECENT ∧ CAST ∧ DIRECTOR)`.
pub fn ground_truth(atoms: &[bool; 6]) -> bool {
    rules_fired(atoms).iter().any(|&f| f)
}

/// All assignments of the five rule atoms (COOKIE left false).
fn assignments() -> impl Iterator<Item = [bool; 6]> {
    (0u8..32).map(|bits| {
        let mut a = [false; 6];
        for (j, slot) in a.iter_mut().take(COOKIE).enumerate() {
            *slot = bits & (1 << j) != 0;
        }
        a
    })
}

/// Allowed rule-atom assignments per sample kind: index 0 for negatives,
/// `1 + r` for positives supporting rule `r`.
fn allowed_assignments(mode: SupportMode) -> [Vec<[bool; 6]>; 4] {
    let mut out: [Vec<[bool; 6]>; 4] = Default::default();
    for a in assignments() {
        let fired = rules_fired(&a);
        let count = fired.iter().filter(|&&f| f).count();
        if count == 0 {
            out[0].push(a);
        }
        for r in 0..3 {
            let ok = match mode {
                SupportMode::Exclusive => fired[r] && count == 1,
                SupportMode::Overlapping => fired[r],
            };
            if ok {
                out[1 + r].push(a);
            }
        }
    }
    out
}

/// Default-sized corpus (1,000,209 samples over 6,040 users and 3,883 items).
pub fn generate_synthetic(seed: u64) -> Vec<SyntheticSample> {
    generate(&SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    })
}

impl SyntheticConfig {
    pub fn generate(&self) -> Vec<SyntheticSample> {
        generate(self)
    }
}

fn generate(cfg: &SyntheticConfig) -> Vec<SyntheticSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let allowed = allowed_assignments(cfg.support);
    let positives = cfg.samples / 2;
    let mut kinds: Vec<u8> = (0..cfg.samples)
        .map(|i| if i < positives { 1 + (i % 3) as u8 } else { 0 })
        .collect();
    kinds.shuffle(&mut rng);

    let users = cfg.users.max(1) as usize;
    let items = cfg.items.max(1) as usize;
    kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| {
            let pool = &allowed[usize::from(kind)];
            let mut atoms = pool[rng.gen_range(0..pool.len())];
            atoms[COOKIE] = rng.gen_bool(0.5);
            let label = kind != 0;
            assert_eq!(label, ground_truth(&atoms), "generator violated the planted formula");
            SyntheticSample {
                user_id: (i % users) as u32 + 1,
                item_id: (i % items) as u32 + 1,
                atoms,
                label,
            }
        })
        .collect()
}

pub fn write_synthetic_csv(samples: &[SyntheticSample], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{SYNTHETIC_CSV_HEADER}")?;
    for s in samples {
        write!(out, "{},{}", s.user_id, s.item_id)?;
        for &a in &s.atoms {
            write!(out, ",{}", u8::from(a))?;
        }
        writeln!(out, ",{}", u8::from(s.label))?;
    }
    Ok(())
}

pub fn read_synthetic_csv(reader: impl BufRead, path: &Path) -> Result<Vec<SyntheticSample>> {
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim() == SYNTHETIC_CSV_HEADER => {}
        Some((_, Err(e))) => return Err(Error::io(path, e)),
        _ => return Err(Error::parse(path, 1, "missing synthetic CSV header")),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 9 {
            return Err(Error::parse(path, line_no, format!("expected 9 fields, found {}", fields.len())));
        }
        let id = |s: &str| -> Result<u32> {
            s.parse().map_err(|_| Error::parse(path, line_no, format!("invalid id {s:?}")))
        };
        let bit = |s: &str| -> Result<bool> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(Error::parse(path, line_no, format!("expected 0 or 1, found {s:?}"))),
            }
        };
        let mut atoms = [false; 6];
        for (slot, raw) in atoms.iter_mut().zip(&fields[2..8]) {
            *slot = bit(raw)?;
        }
        out.push(SyntheticSample {
            user_id: id(fields[0])?,
            item_id: id(fields[1])?,
            atoms,
            label: bit(fields[8])?,
        });
    }
    Ok(out)
}
