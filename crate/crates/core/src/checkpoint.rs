//! Plain-text model checkpoints.
//!
//! ```text
//! k n
//! W_11 ... W_1n        (k rows of raw weights, shortest round-trip decimals)
//! ...
//! ATOM_1               (n atom names, one per line)
//! ...
//! ```
//!
//! Reading a checkpoint back yields bit-identical raw weights and therefore
//! bit-identical predictions.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::RuleNetwork;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub network: RuleNetwork<T>,
    pub atom_names: Vec<String>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(network: RuleNetwork<T>, atom_names: Vec<String>) -> Result<Self> {
        if atom_names.len() != network.atoms() {
            return Err(Error::LengthMismatch {
                expected: network.atoms(),
                actual: atom_names.len(),
            });
        }
        if let Some(bad) = atom_names.iter().find(|n| n.trim().is_empty() || n.contains('\n')) {
            return Err(Error::Format(format!("atom name {bad:?} cannot be stored")));
        }
        Ok(Self { network, atom_names })
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        let (k, n) = self.network.shape();
        writeln!(out, "{k} {n}")?;
        for row in self.network.raw_weights().iter_rows() {
            let cells: Vec<String> = row.iter().map(|w| w.to_string()).collect();
            writeln!(out, "{}", cells.join(" "))?;
        }
        for name in &self.atom_names {
            writeln!(out, "{name}")?;
        }
        Ok(())
    }

    pub fn read(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((no, Ok(line))) => Ok((no, line)),
                Some((_, Err(e))) => Err(Error::io(path, e)),
                None => Err(Error::Format(format!("{}: truncated before {what}", path.display()))),
            }
        };
        let (no, header) = next("header")?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(path, no, format!("invalid dimension {t:?}"))))
            .collect::<Result<_>>()?;
        let [k, n] = dims[..] else {
            return Err(Error::parse(path, no, "header must be `k n`"));
        };
        let mut data = Vec::with_capacity(k * n);
        for _ in 0..k {
            let (no, line) = next("weights")?;
            let row: Vec<T> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::parse(path, no, format!("invalid weight {t:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::parse(path, no, format!("expected {n} weights, found {}", row.len())));
            }
            data.extend(row);
        }
        let mut names = Vec::with_capacity(n);
        for _ in 0..n {
            let (_, name) = next("atom names")?;
            names.push(name);
        }
        let network = RuleNetwork::from_raw(Matrix::from_vec(k, n, data)?)?;
        Self::new(network, names)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), path)
    }
}
