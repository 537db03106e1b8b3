//! Reading learned rules back out of a network.
//!
//! Hiding atoms whose fuzzy weight is below the display threshold only
//! changes what is printed; predictions always use the full matrix.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::atoms::AtomCatalog;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::RuleNetwork;
use crate::scalar::Scalar;

pub const DEFAULT_DISPLAY_THRESHOLD: f64 = 0.1;

/// Head atom of every rendered clause.
pub const HEAD: &str = "RELEVANT";

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedRule {
    /// Zero-based row of the weight matrix.
    pub rule_index: usize,
    /// Atoms at or above the threshold, heaviest first.
    pub atoms: Vec<(String, f64)>,
    /// The complete fuzzy weight row.
    pub weights: Vec<f64>,
}

impl ExtractedRule {
    /// No atom reached the threshold; the rule body is empty.
    pub fn is_vacuous(&self) -> bool {
        self.atoms.is_empty()
    }
}

pub fn extract_rules<T: Scalar>(
    net: &RuleNetwork<T>,
    catalog: &AtomCatalog,
    threshold: f64,
) -> Result<Vec<ExtractedRule>> {
    if catalog.len() != net.atoms() {
        return Err(Error::LengthMismatch {
            expected: net.atoms(),
            actual: catalog.len(),
        });
    }
    let fuzzy = net.fuzzify();
    Ok((0..net.rules())
        .map(|i| {
            let weights: Vec<f64> = fuzzy.row(i).iter().map(|w| w.as_f64()).collect();
            let mut order: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] >= threshold).collect();
            order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
            ExtractedRule {
                rule_index: i,
                atoms: order
                    .into_iter()
                    .map(|j| (catalog.get(j).name.clone(), weights[j]))
                    .collect(),
                weights,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HornStyle {
    /// `A ∧ B → RELEVANT`
    #[default]
    Unicode,
    /// `A AND B -> RELEVANT`
    Ascii,
}

/// `ATOM1 ∧ ATOM2 → RELEVANT`; a vacuous rule renders as `TRUE -> RELEVANT`.
pub fn render_horn(rule: &ExtractedRule, style: HornStyle) -> String {
    let (and, implies) = match style {
        HornStyle::Unicode => (" ∧ ", " → "),
        HornStyle::Ascii => (" AND ", " -> "),
    };
    if rule.is_vacuous() {
        log::warn!("rule R{} has no atom above the display threshold", rule.rule_index + 1);
        return format!("TRUE{implies}{HEAD}");
    }
    let body: Vec<&str> = rule.atoms.iter().map(|(name, _)| name.as_str()).collect();
    format!("{}{implies}{HEAD}", body.join(and))
}

/// `R1: RECENT 0.994, GENRE 0.987` with weights rounded to three decimals.
pub fn describe_rule(rule: &ExtractedRule) -> String {
    let parts: Vec<String> = rule
        .atoms
        .iter()
        .map(|(name, w)| format!("{name} {w:.3}"))
        .collect();
    format!("R{}: {}", rule.rule_index + 1, if parts.is_empty() { "-".into() } else { parts.join(", ") })
}

/// Pairs of non-vacuous rules `(a, b)`, `a < b`, with the same set of
/// displayed atoms. Reported only; nothing is removed.
pub fn duplicate_rules(rules: &[ExtractedRule]) -> Vec<(usize, usize)> {
    let keys: Vec<Vec<&str>> = rules
        .iter()
        .map(|r| {
            let mut names: Vec<&str> = r.atoms.iter().map(|(n, _)| n.as_str()).collect();
            names.sort_unstable();
            names
        })
        .collect();
    let mut out = Vec::new();
    for a in 0..rules.len() {
        for b in a + 1..rules.len() {
            if !keys[a].is_empty() && keys[a] == keys[b] {
                out.push((rules[a].rule_index, rules[b].rule_index));
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Full-precision fuzzy weight matrix: header `rule,<atom names>`, then one
/// row per rule.
pub fn export_weights<T: Scalar>(net: &RuleNetwork<T>, catalog: &AtomCatalog, mut out: impl Write) -> Result<()> {
    if catalog.len() != net.atoms() {
        return Err(Error::LengthMismatch {
            expected: net.atoms(),
            actual: catalog.len(),
        });
    }
    let io = |e| Error::io("<weights>", e);
    let header: Vec<String> = catalog.iter().map(|a| csv_field(&a.name)).collect();
    writeln!(out, "rule,{}", header.join(",")).map_err(io)?;
    for (i, row) in net.fuzzify().iter_rows().enumerate() {
        let cells: Vec<String> = row.iter().map(|w| w.to_string()).collect();
        writeln!(out, "R{},{}", i + 1, cells.join(",")).map_err(io)?;
    }
    Ok(())
}

/// Reads a matrix written by [`export_weights`]: `(atom names, fuzzy weights)`.
pub fn import_weights<T: Scalar>(reader: impl BufRead, path: &Path) -> Result<(Vec<String>, Matrix<T>)> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(path, 1, "missing header")),
    };
    let mut names = split_csv(&header);
    if names.first().map(String::as_str) != Some("rule") {
        return Err(Error::parse(path, 1, "header must start with `rule`"));
    }
    names.remove(0);
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells = split_csv(&line);
        if cells.len() != names.len() + 1 {
            return Err(Error::parse(path, idx + 1, format!("expected {} fields", names.len() + 1)));
        }
        let row = cells[1..]
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<T>()
                    .map_err(|_| Error::parse(path, idx + 1, format!("invalid weight {c:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    Ok((names, Matrix::from_rows(&rows)?))
}

/// Box-plot summary of all fuzzy weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistribution {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Smallest weight no lower than `q1 - 1.5 IQR`.
    pub lower_whisker: f64,
    /// Largest weight no higher than `q3 + 1.5 IQR`.
    pub upper_whisker: f64,
    /// `(rule, atom, weight)` beyond the whiskers.
    pub outliers: Vec<(usize, usize, f64)>,
    pub fraction_below_display: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn weight_distribution<T: Scalar>(net: &RuleNetwork<T>) -> WeightDistribution {
    let fuzzy = net.fuzzify();
    let mut sorted: Vec<f64> = fuzzy.as_slice().iter().map(|w| w.as_f64()).collect();
    sorted.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = sorted.iter().copied().filter(|&w| w >= lo_fence && w <= hi_fence);
    let lower_whisker = inside.clone().fold(f64::INFINITY, f64::min);
    let upper_whisker = inside.fold(f64::NEG_INFINITY, f64::max);
    let mut outliers = Vec::new();
    for i in 0..fuzzy.rows() {
        for j in 0..fuzzy.cols() {
            let w = fuzzy.get(i, j).as_f64();
            if w < lo_fence || w > hi_fence {
                outliers.push((i, j, w));
            }
        }
    }
    let below = sorted.iter().filter(|&&w| w < DEFAULT_DISPLAY_THRESHOLD).count();
    WeightDistribution {
        count: sorted.len(),
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        lower_whisker,
        upper_whisker,
        outliers,
        fraction_below_display: below as f64 / sorted.len() as f64,
    }
}

impl WeightDistribution {
    /// `statistic,value` rows followed by one `outlier,<rule>,<atom>,<weight>`
    /// row per outlier.
    pub fn write_csv(&self, catalog: &AtomCatalog, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "statistic,value")?;
        for (name, v) in [
            ("count", self.count as f64),
            ("min", self.min),
            ("q1", self.q1),
            ("median", self.median),
            ("q3", self.q3),
            ("max", self.max),
            ("lower_whisker", self.lower_whisker),
            ("upper_whisker", self.upper_whisker),
            ("fraction_below_0.1", self.fraction_below_display),
        ] {
            writeln!(out, "{name},{v}")?;
        }
        for &(i, j, w) in &self.outliers {
            let atom = catalog.as_slice().get(j).map_or_else(|| j.to_string(), |a| csv_field(&a.name));
            writeln!(out, "outlier,R{},{atom},{w}", i + 1)?;
        }
        Ok(())
    }
}
