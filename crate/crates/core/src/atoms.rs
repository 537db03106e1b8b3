//! Atom catalogs and atomization of user-item pairs.
//!
//! A catalog fixes the meaning of every position of an atom vector. Indicator
//! atoms come from user and movie metadata; threshold atoms compare a training
//! statistic (item mean rating, user mean rating, item rating count) against a
//! percentile of its training distribution. Users and items without training
//! ratings fall back to dataset means before thresholding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::data::{
    Gender, Genre, Interaction, MovieInfo, SyntheticSample, UserInfo, AGE_CODES, OCCUPATIONS,
    RELEVANCE_THRESHOLD, SYNTHETIC_ATOMS,
};
use crate::error::{Error, Result};
use crate::network::RuleNetwork;
use crate::scalar::Scalar;

/// Percentiles tried for every threshold statistic.
pub const CANDIDATE_PERCENTILES: [u32; 5] = [10, 25, 50, 75, 90];

/// If no candidate of a statistic reaches this weight the median is kept.
pub const DEGENERATE_WEIGHT: f64 = 1e-3;

/// First decade of the release-decade indicators; there are eleven.
pub const FIRST_DECADE: u16 = 1900;
pub const DECADES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomKind {
    UserIndicator,
    ItemIndicator,
    UserStatThreshold,
    ItemStatThreshold,
    InteractionDerived,
}

impl AtomKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AtomKind::UserIndicator => "user-indicator",
            AtomKind::ItemIndicator => "item-indicator",
            AtomKind::UserStatThreshold => "user-stat-threshold",
            AtomKind::ItemStatThreshold => "item-stat-threshold",
            AtomKind::InteractionDerived => "interaction-derived",
        }
    }

    pub fn is_threshold(self) -> bool {
        matches!(self, AtomKind::UserStatThreshold | AtomKind::ItemStatThreshold)
    }
}

impl fmt::Display for AtomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AtomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            AtomKind::UserIndicator,
            AtomKind::ItemIndicator,
            AtomKind::UserStatThreshold,
            AtomKind::ItemStatThreshold,
            AtomKind::InteractionDerived,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::Format(format!("unknown atom kind {s:?}")))
    }
}

/// Training statistics that back the threshold atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistic {
    ItemMeanRating,
    UserMeanRating,
    ItemRatingCount,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [
        Statistic::ItemMeanRating,
        Statistic::UserMeanRating,
        Statistic::ItemRatingCount,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Statistic::ItemMeanRating => "HIGH AVG MOVIE RATING",
            Statistic::UserMeanRating => "HIGH AVG RATING PER USER",
            Statistic::ItemRatingCount => "MOVIE RATED OFTEN",
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Statistic::ItemMeanRating => "item_mean_rating",
            Statistic::UserMeanRating => "user_mean_rating",
            Statistic::ItemRatingCount => "item_rating_count",
        }
    }

    pub fn kind(self) -> AtomKind {
        match self {
            Statistic::UserMeanRating => AtomKind::UserStatThreshold,
            _ => AtomKind::ItemStatThreshold,
        }
    }
}

/// Feature an atom is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomSource {
    /// Column of the synthetic corpus.
    Synthetic(usize),
    Gender(Gender),
    Age(u8),
    Occupation(u8),
    Genre(Genre),
    /// The movie has this genre and it is the user's favourite.
    FavoriteGenre(Genre),
    /// Release year in `[decade, decade + 10)`.
    Decade(u16),
    Stat(Statistic),
}

impl AtomSource {
    pub fn id(&self) -> String {
        match *self {
            AtomSource::Synthetic(j) => format!("synthetic:{}", SYNTHETIC_ATOMS[j]),
            AtomSource::Gender(Gender::Female) => "gender:F".into(),
            AtomSource::Gender(Gender::Male) => "gender:M".into(),
            AtomSource::Age(code) => format!("age:{code}"),
            AtomSource::Occupation(code) => format!("occupation:{code}"),
            AtomSource::Genre(g) => format!("genre:{}", g.name()),
            AtomSource::FavoriteGenre(g) => format!("favorite_genre:{}", g.name()),
            AtomSource::Decade(d) => format!("decade:{d}"),
            AtomSource::Stat(s) => format!("stat:{}", s.id()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomDef {
    pub name: String,
    pub kind: AtomKind,
    pub threshold: Option<f64>,
    pub source: AtomSource,
}

impl AtomDef {
    fn indicator(name: String, kind: AtomKind, source: AtomSource) -> Self {
        Self {
            name,
            kind,
            threshold: None,
            source,
        }
    }

    /// `"HIGH AVG MOVIE RATING (4.0+)"` and friends.
    pub fn threshold_atom(stat: Statistic, threshold: f64) -> Self {
        Self {
            name: format!("{} ({}+)", stat.label(), format_threshold(threshold)),
            kind: stat.kind(),
            threshold: Some(threshold),
            source: AtomSource::Stat(stat),
        }
    }

    pub fn statistic(&self) -> Option<Statistic> {
        match self.source {
            AtomSource::Stat(s) => Some(s),
            _ => None,
        }
    }
}

/// Shortest round-trip form with at least one decimal: `4.0`, `228.0`, `3.75`.
pub fn format_threshold(t: f64) -> String {
    if t.fract() == 0.0 && t.abs() < 1e15 {
        format!("{t:.1}")
    } else {
        format!("{t}")
    }
}

fn age_label(code: u8) -> String {
    match code {
        1 => "AGE UNDER 18".into(),
        18 => "AGE 18-24".into(),
        25 => "AGE 25-34".into(),
        35 => "AGE 35-44".into(),
        45 => "AGE 45-49".into(),
        50 => "AGE 50-55".into(),
        56 => "AGE 56+".into(),
        other => format!("AGE {other}"),
    }
}

/// Ordered atom definitions; position `j` is the meaning of atom `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCatalog {
    atoms: Vec<AtomDef>,
}

/// Which catalog family to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogKind {
    Synthetic,
    MovieLens,
}

impl FromStr for CatalogKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "synthetic" => Ok(CatalogKind::Synthetic),
            "movielens" => Ok(CatalogKind::MovieLens),
            other => Err(Error::Config(format!("unknown dataset kind {other:?}"))),
        }
    }
}

impl fmt::Display for CatalogKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CatalogKind::Synthetic => "synthetic",
            CatalogKind::MovieLens => "movielens",
        })
    }
}

impl AtomCatalog {
    pub fn new(atoms: Vec<AtomDef>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("atom catalog"));
        }
        let mut seen = BTreeSet::new();
        for a in &atoms {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Format(format!("duplicate atom name {:?}", a.name)));
            }
            if a.kind.is_threshold() != a.threshold.is_some() {
                return Err(Error::Format(format!(
                    "atom {:?}: a threshold is required exactly for stat-threshold kinds",
                    a.name
                )));
            }
            if a.threshold.is_some_and(|t| !t.is_finite()) {
                return Err(Error::NonFinite("atom threshold"));
            }
        }
        Ok(Self { atoms })
    }

    /// HIGH, GENRE, RECENT, CAST, DIRECTOR, COOKIE.
    pub fn synthetic() -> Self {
        let atoms = SYNTHETIC_ATOMS
            .iter()
            .enumerate()
            .map(|(j, name)| {
                AtomDef::indicator(name.to_string(), AtomKind::InteractionDerived, AtomSource::Synthetic(j))
            })
            .collect();
        Self { atoms }
    }

    /// The 77 metadata atoms shared by every MovieLens catalog.
    pub fn movielens_base() -> Self {
        let mut atoms = vec![
            AtomDef::indicator("GENDER_F".into(), AtomKind::UserIndicator, AtomSource::Gender(Gender::Female)),
            AtomDef::indicator("GENDER_M".into(), AtomKind::UserIndicator, AtomSource::Gender(Gender::Male)),
        ];
        for code in AGE_CODES {
            atoms.push(AtomDef::indicator(age_label(code), AtomKind::UserIndicator, AtomSource::Age(code)));
        }
        for (code, label) in OCCUPATIONS.iter().enumerate() {
            atoms.push(AtomDef::indicator(
                format!("OCCUPATION {}", label.to_uppercase()),
                AtomKind::UserIndicator,
                AtomSource::Occupation(code as u8),
            ));
        }
        for g in Genre::ALL {
            atoms.push(AtomDef::indicator(
                format!("MOVIE GENRE {}", g.name().to_uppercase()),
                AtomKind::ItemIndicator,
                AtomSource::Genre(g),
            ));
        }
        for g in Genre::ALL {
            atoms.push(AtomDef::indicator(
                format!("MATCHES FAVORITE GENRE {}", g.name().to_uppercase()),
                AtomKind::InteractionDerived,
                AtomSource::FavoriteGenre(g),
            ));
        }
        for d in 0..DECADES as u16 {
            let decade = FIRST_DECADE + 10 * d;
            atoms.push(AtomDef::indicator(
                format!("RELEASED IN {decade}S"),
                AtomKind::ItemIndicator,
                AtomSource::Decade(decade),
            ));
        }
        Self { atoms }
    }

    /// Base atoms plus one threshold atom per statistic.
    pub fn movielens(thresholds: [f64; 3]) -> Result<Self> {
        let mut atoms = Self::movielens_base().atoms;
        for (stat, t) in Statistic::ALL.into_iter().zip(thresholds) {
            atoms.push(AtomDef::threshold_atom(stat, t));
        }
        Self::new(atoms)
    }

    /// Base atoms plus every distinct percentile candidate of every statistic.
    pub fn movielens_candidates(stats: &InteractionStats) -> Result<Self> {
        let mut atoms = Self::movielens_base().atoms;
        for stat in Statistic::ALL {
            for (_, t) in stats.candidates(stat)? {
                atoms.push(AtomDef::threshold_atom(stat, t));
            }
        }
        Self::new(atoms)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn get(&self, index: usize) -> &AtomDef {
        &self.atoms[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &AtomDef> {
        self.atoms.iter()
    }

    pub fn as_slice(&self) -> &[AtomDef] {
        &self.atoms
    }

    pub fn names(&self) -> Vec<String> {
        self.atoms.iter().map(|a| a.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.name == name)
    }

    /// Thresholds of the three statistic atoms, if each occurs exactly once.
    pub fn thresholds(&self) -> Option<[f64; 3]> {
        let mut out = [f64::NAN; 3];
        for (slot, stat) in out.iter_mut().zip(Statistic::ALL) {
            let mut found = self.atoms.iter().filter(|a| a.statistic() == Some(stat));
            *slot = found.next()?.threshold?;
            if found.next().is_some() {
                return None;
            }
        }
        Some(out)
    }

    /// One line per atom: `index<TAB>name<TAB>kind<TAB>threshold` (`-` when absent).
    pub fn write_tsv(&self, mut out: impl Write) -> std::io::Result<()> {
        for (j, a) in self.atoms.iter().enumerate() {
            let threshold = a.threshold.map_or_else(|| "-".to_string(), |t| t.to_string());
            writeln!(out, "{j}\t{}\t{}\t{threshold}", a.name, a.kind)?;
        }
        Ok(())
    }

    pub fn read_tsv(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut atoms = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(path, line_no, format!("expected 4 fields, found {}", fields.len())));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("invalid index {:?}", fields[0])))?;
            if index != atoms.len() {
                return Err(Error::parse(path, line_no, format!("expected index {}, found {index}", atoms.len())));
            }
            let kind: AtomKind = fields[2].parse().map_err(|e: Error| Error::parse(path, line_no, e.to_string()))?;
            let threshold = match fields[3] {
                "-" | "" => None,
                raw => Some(
                    raw.parse::<f64>()
                        .map_err(|_| Error::parse(path, line_no, format!("invalid threshold {raw:?}")))?,
                ),
            };
            let name = fields[1].to_string();
            let source = source_for(&name, threshold)
                .ok_or_else(|| Error::parse(path, line_no, format!("unknown atom {name:?}")))?;
            atoms.push(AtomDef {
                name,
                kind,
                threshold,
                source,
            });
        }
        Self::new(atoms)
    }

    /// Rebuilds a catalog from canonical atom names, e.g. those stored in a
    /// checkpoint. Thresholds are read back from the `(t+)` suffix.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let known: Vec<AtomDef> = Self::synthetic()
            .atoms
            .into_iter()
            .chain(Self::movielens_base().atoms)
            .collect();
        let atoms = names
            .iter()
            .map(|name| {
                let name = name.as_ref();
                if let Some(def) = known.iter().find(|a| a.name == name) {
                    return Ok(def.clone());
                }
                Statistic::ALL
                    .into_iter()
                    .find_map(|stat| {
                        let t: f64 = name
                            .strip_prefix(stat.label())?
                            .strip_prefix(" (")?
                            .strip_suffix("+)")?
                            .parse()
                            .ok()?;
                        Some(AtomDef::threshold_atom(stat, t))
                    })
                    .filter(|def| def.name == name)
                    .ok_or_else(|| Error::Format(format!("unknown atom {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }
}

/// Recovers the source of a canonical atom name.
fn source_for(name: &str, threshold: Option<f64>) -> Option<AtomSource> {
    if threshold.is_some() {
        return Statistic::ALL
            .into_iter()
            .find(|s| name.starts_with(s.label()) && name[s.label().len()..].starts_with(" ("))
            .map(AtomSource::Stat);
    }
    AtomCatalog::synthetic()
        .atoms
        .into_iter()
        .chain(AtomCatalog::movielens_base().atoms)
        .find(|a| a.name == name)
        .map(|a| a.source)
}

pub fn build_catalog(
    kind: CatalogKind,
    stats: Option<&InteractionStats>,
    thresholds: Option<[f64; 3]>,
) -> Result<AtomCatalog> {
    match (kind, thresholds, stats) {
        (CatalogKind::Synthetic, _, _) => Ok(AtomCatalog::synthetic()),
        (CatalogKind::MovieLens, Some(t), _) => AtomCatalog::movielens(t),
        (CatalogKind::MovieLens, None, Some(stats)) => AtomCatalog::movielens_candidates(stats),
        (CatalogKind::MovieLens, None, None) => Err(Error::Config(
            "a MovieLens catalog needs thresholds or training statistics".into(),
        )),
    }
}

/// Nearest-rank percentile: the `ceil(p / 100 * N)`-th smallest value.
pub fn percentile(values: &[f64], p: u32) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile of no values"));
    }
    if !(1..=100).contains(&p) {
        return Err(Error::Config(format!("percentile {p} outside 1..=100")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p as usize * sorted.len()).div_ceil(100).max(1);
    Ok(sorted[rank - 1])
}

/// Per-user and per-item statistics of the training ratings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InteractionStats {
    item_mean: BTreeMap<u32, f64>,
    item_count: BTreeMap<u32, u64>,
    user_mean: BTreeMap<u32, f64>,
    favorite_genre: BTreeMap<u32, Genre>,
    /// Mean training rating; stands in for unseen users' and items' means.
    pub global_mean: f64,
    /// Mean rating count over training items; stands in for unseen items.
    pub mean_item_count: f64,
}

pub fn compute_stats(train: &[Interaction]) -> Result<InteractionStats> {
    if train.is_empty() {
        return Err(Error::Empty("training interactions"));
    }
    let mut items: BTreeMap<u32, (f64, u64)> = BTreeMap::new();
    let mut users: BTreeMap<u32, (f64, u64)> = BTreeMap::new();
    let mut total = 0.0;
    for r in train {
        let e = items.entry(r.item_id).or_default();
        e.0 += r.rating;
        e.1 += 1;
        let e = users.entry(r.user_id).or_default();
        e.0 += r.rating;
        e.1 += 1;
        total += r.rating;
    }
    Ok(InteractionStats {
        item_mean: items.iter().map(|(&id, &(s, c))| (id, s / c as f64)).collect(),
        item_count: items.iter().map(|(&id, &(_, c))| (id, c)).collect(),
        user_mean: users.iter().map(|(&id, &(s, c))| (id, s / c as f64)).collect(),
        favorite_genre: BTreeMap::new(),
        global_mean: total / train.len() as f64,
        mean_item_count: train.len() as f64 / items.len() as f64,
    })
}

impl InteractionStats {
    /// Records each user's favourite genre: the genre with the most relevant
    /// (rating >= 4) training ratings, ties going to the earlier genre.
    pub fn with_favorite_genres(mut self, train: &[Interaction], movies: &BTreeMap<u32, MovieInfo>) -> Self {
        let mut counts: BTreeMap<u32, [u32; 18]> = BTreeMap::new();
        for r in train.iter().filter(|r| r.rating >= RELEVANCE_THRESHOLD) {
            if let Some(m) = movies.get(&r.item_id) {
                let c = counts.entry(r.user_id).or_insert([0; 18]);
                for g in m.genres() {
                    c[g.index()] += 1;
                }
            }
        }
        self.favorite_genre = counts
            .into_iter()
            .filter_map(|(user, c)| {
                let best = (0..18).fold(0, |b, g| if c[g] > c[b] { g } else { b });
                (c[best] > 0).then_some((user, Genre::ALL[best]))
            })
            .collect();
        self
    }

    pub fn item_mean(&self, item: u32) -> Option<f64> {
        self.item_mean.get(&item).copied()
    }

    pub fn item_count(&self, item: u32) -> Option<u64> {
        self.item_count.get(&item).copied()
    }

    pub fn user_mean(&self, user: u32) -> Option<f64> {
        self.user_mean.get(&user).copied()
    }

    pub fn favorite_genre(&self, user: u32) -> Option<Genre> {
        self.favorite_genre.get(&user).copied()
    }

    pub fn users(&self) -> usize {
        self.user_mean.len()
    }

    pub fn items(&self) -> usize {
        self.item_mean.len()
    }

    /// Statistic for a pair, imputed with the dataset mean when unseen.
    pub fn value(&self, stat: Statistic, user: u32, item: u32) -> f64 {
        match stat {
            Statistic::ItemMeanRating => self.item_mean(item).unwrap_or(self.global_mean),
            Statistic::UserMeanRating => self.user_mean(user).unwrap_or(self.global_mean),
            Statistic::ItemRatingCount => self
                .item_count(item)
                .map_or(self.mean_item_count, |c| c as f64),
        }
    }

    /// One value per training user or item.
    pub fn distribution(&self, stat: Statistic) -> Vec<f64> {
        match stat {
            Statistic::ItemMeanRating => self.item_mean.values().copied().collect(),
            Statistic::UserMeanRating => self.user_mean.values().copied().collect(),
            Statistic::ItemRatingCount => self.item_count.values().map(|&c| c as f64).collect(),
        }
    }

    /// `(percentile, threshold)` for [`CANDIDATE_PERCENTILES`], dropping
    /// repeated thresholds (the lowest percentile is kept).
    pub fn candidates(&self, stat: Statistic) -> Result<Vec<(u32, f64)>> {
        let values = self.distribution(stat);
        let mut out: Vec<(u32, f64)> = Vec::new();
        for p in CANDIDATE_PERCENTILES {
            let t = percentile(&values, p)?;
            if out.iter().all(|&(_, prev)| prev != t) {
                out.push((p, t));
            }
        }
        Ok(out)
    }
}

/// Metadata and statistics needed to atomize MovieLens pairs.
#[derive(Debug, Clone, Copy)]
pub struct AtomContext<'a> {
    pub users: &'a BTreeMap<u32, UserInfo>,
    pub movies: &'a BTreeMap<u32, MovieInfo>,
    pub stats: &'a InteractionStats,
}

impl AtomContext<'_> {
    /// Writes the crisp atom values of `(user, item)` into `out`.
    pub fn atomize_into<T: Scalar>(&self, catalog: &AtomCatalog, user: u32, item: u32, out: &mut [T]) -> Result<()> {
        if out.len() != catalog.len() {
            return Err(Error::LengthMismatch {
                expected: catalog.len(),
                actual: out.len(),
            });
        }
        let info = self.users.get(&user);
        let movie = self.movies.get(&item);
        for (slot, atom) in out.iter_mut().zip(catalog.iter()) {
            let on = match atom.source {
                AtomSource::Synthetic(_) => {
                    return Err(Error::Format(format!(
                        "atom {:?} belongs to the synthetic corpus",
                        atom.name
                    )))
                }
                AtomSource::Gender(g) => info.is_some_and(|u| u.gender == g),
                AtomSource::Age(code) => info.is_some_and(|u| u.age == code),
                AtomSource::Occupation(code) => info.is_some_and(|u| u.occupation == code),
                AtomSource::Genre(g) => movie.is_some_and(|m| m.has_genre(g)),
                AtomSource::FavoriteGenre(g) => {
                    self.stats.favorite_genre(user) == Some(g) && movie.is_some_and(|m| m.has_genre(g))
                }
                AtomSource::Decade(d) => movie
                    .and_then(|m| m.year)
                    .is_some_and(|y| decade_of(y) == d),
                AtomSource::Stat(stat) => {
                    let t = atom.threshold.expect("threshold atoms carry a threshold");
                    self.stats.value(stat, user, item) >= t
                }
            };
            *slot = if on { T::one() } else { T::zero() };
        }
        Ok(())
    }

    pub fn atomize<T: Scalar>(&self, catalog: &AtomCatalog, user: u32, item: u32) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); catalog.len()];
        self.atomize_into(catalog, user, item, &mut out)?;
        Ok(out)
    }
}

/// Decade bucket of a release year; years outside the covered range join
/// the first or last bucket.
pub fn decade_of(year: u16) -> u16 {
    let last = FIRST_DECADE + 10 * (DECADES as u16 - 1);
    (year / 10 * 10).clamp(FIRST_DECADE, last)
}

/// Atom vector of a synthetic sample in catalog order.
pub fn synthetic_atoms<T: Scalar>(sample: &SyntheticSample) -> [T; 6] {
    sample.atoms.map(|b| if b { T::one() } else { T::zero() })
}

/// Outcome of threshold selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSelection {
    /// Base atoms plus one threshold atom per statistic.
    pub catalog: AtomCatalog,
    /// Retained thresholds in [`Statistic::ALL`] order.
    pub thresholds: [f64; 3],
    /// `(statistic, threshold, score)` for every candidate; the score is the
    /// largest fuzzy weight of the candidate over all rules.
    pub scores: Vec<(Statistic, f64, f64)>,
    /// Statistics whose candidates all stayed below [`DEGENERATE_WEIGHT`].
    pub degenerate: Vec<Statistic>,
}

/// Picks the retained threshold per statistic from a network trained on the
/// candidate catalog.
pub fn choose_thresholds<T: Scalar>(
    net: &RuleNetwork<T>,
    candidates: &AtomCatalog,
    stats: &InteractionStats,
) -> Result<ThresholdSelection> {
    if net.atoms() != candidates.len() {
        return Err(Error::LengthMismatch {
            expected: candidates.len(),
            actual: net.atoms(),
        });
    }
    let fuzzy = net.fuzzify();
    let mut scores = Vec::new();
    let mut thresholds = [0.0; 3];
    let mut degenerate = Vec::new();
    for (slot, stat) in thresholds.iter_mut().zip(Statistic::ALL) {
        let mut best: Option<(f64, f64)> = None;
        for (j, atom) in candidates.iter().enumerate() {
            if atom.statistic() != Some(stat) {
                continue;
            }
            let t = atom.threshold.expect("threshold atom");
            let score = (0..net.rules())
                .map(|i| fuzzy.get(i, j).as_f64())
                .fold(f64::NEG_INFINITY, f64::max);
            scores.push((stat, t, score));
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((t, score));
            }
        }
        let (t, score) = best.ok_or_else(|| Error::Format(format!("no candidate atoms for {}", stat.label())))?;
        *slot = if score < DEGENERATE_WEIGHT {
            let median = percentile(&stats.distribution(stat), 50)?;
            log::warn!(
                "all {} candidates have weight below {DEGENERATE_WEIGHT}; keeping the median threshold {}",
                stat.label(),
                format_threshold(median)
            );
            degenerate.push(stat);
            median
        } else {
            t
        };
    }
    Ok(ThresholdSelection {
        catalog: AtomCatalog::movielens(thresholds)?,
        thresholds,
        scores,
        degenerate,
    })
}

/// Trains once on the candidate catalog and keeps the best threshold per
/// statistic.
pub fn select_threshold_atoms<T: Scalar>(
    stats: &InteractionStats,
    trainer: impl FnOnce(&AtomCatalog) -> Result<RuleNetwork<T>>,
) -> Result<ThresholdSelection> {
    let candidates = AtomCatalog::movielens_candidates(stats)?;
    let net = trainer(&candidates)?;
    choose_thresholds(&net, &candidates, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use proptest::prelude::*;

    fn rating(user: u32, item: u32, r: f64) -> Interaction {
        Interaction {
            user_id: user,
            item_id: item,
            rating: r,
            timestamp: 0,
        }
    }

    #[test]
    fn percentile_examples() {
        let hundred: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&hundred, 50).unwrap(), 50.0);
        for p in CANDIDATE_PERCENTILES {
            assert_eq!(percentile(&[7.0], p).unwrap(), 7.0);
        }
        assert_eq!(percentile(&[3.0, 1.0, 2.0, 5.0, 4.0], 90).unwrap(), 5.0);
        assert!(percentile(&[], 50).is_err());
        assert!(percentile(&[1.0], 0).is_err());
    }

    #[test]
    fn stats_examples() {
        let train = [rating(1, 10, 4.0), rating(2, 10, 5.0), rating(3, 11, 3.0)];
        let s = compute_stats(&train).unwrap();
        assert_eq!(s.item_mean(10), Some(4.5));
        assert_eq!(s.item_count(10), Some(2));
        assert_eq!(s.user_mean(3), Some(3.0));
        assert_eq!(s.global_mean, 4.0);
        assert_eq!(s.mean_item_count, 1.5);
        assert_eq!(s.value(Statistic::ItemMeanRating, 9, 99), 4.0);
        assert_eq!(s.value(Statistic::ItemRatingCount, 9, 99), 1.5);
        assert!(compute_stats(&[]).is_err());
    }

    #[test]
    fn synthetic_catalog() {
        let c = build_catalog(CatalogKind::Synthetic, None, None).unwrap();
        assert_eq!(c.names(), ["HIGH", "GENRE", "RECENT", "CAST", "DIRECTOR", "COOKIE"]);
        assert!("netflix".parse::<CatalogKind>().is_err());
    }

    #[test]
    fn movielens_catalog_has_eighty_atoms() {
        assert_eq!(AtomCatalog::movielens_base().len(), 77);
        let c = build_catalog(CatalogKind::MovieLens, None, Some([4.0, 4.0, 228.0])).unwrap();
        assert_eq!(c.len(), 80);
        assert!(c.index_of("HIGH AVG MOVIE RATING (4.0+)").is_some());
        assert!(c.index_of("HIGH AVG RATING PER USER (4.0+)").is_some());
        assert!(c.index_of("MOVIE RATED OFTEN (228.0+)").is_some());
        assert_eq!(c.thresholds(), Some([4.0, 4.0, 228.0]));
        assert!(build_catalog(CatalogKind::MovieLens, None, None).is_err());
    }

    #[test]
    fn catalog_invariants_enforced() {
        let mut atoms = AtomCatalog::synthetic().as_slice().to_vec();
        atoms[1].name = "HIGH".into();
        assert!(AtomCatalog::new(atoms).is_err());
        let mut atoms = AtomCatalog::synthetic().as_slice().to_vec();
        atoms[0].threshold = Some(1.0);
        assert!(AtomCatalog::new(atoms).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        for c in [AtomCatalog::synthetic(), AtomCatalog::movielens([3.8125, 4.0, 228.0]).unwrap()] {
            let mut buf = Vec::new();
            c.write_tsv(&mut buf).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert_eq!(text.lines().count(), c.len());
            let back = AtomCatalog::read_tsv(std::io::Cursor::new(buf), Path::new("c.tsv")).unwrap();
            assert_eq!(back, c);
        }
        let line = "0\tHIGH AVG MOVIE RATING (4.0+)\titem-stat-threshold\t4\n";
        let c = AtomCatalog::read_tsv(std::io::Cursor::new(line), Path::new("c.tsv")).unwrap();
        assert_eq!(c.get(0).source, AtomSource::Stat(Statistic::ItemMeanRating));
        assert!(AtomCatalog::read_tsv(std::io::Cursor::new("0\tNOPE\tuser-indicator\t-\n"), Path::new("c")).is_err());
    }

    #[test]
    fn catalog_from_names() {
        let stats = compute_stats(&[rating(1, 10, 4.0), rating(2, 11, 2.5), rating(2, 10, 3.0)]).unwrap();
        for c in [
            AtomCatalog::synthetic(),
            AtomCatalog::movielens([3.8125, 4.0, 228.0]).unwrap(),
            AtomCatalog::movielens_candidates(&stats).unwrap(),
        ] {
            assert_eq!(AtomCatalog::from_names(&c.names()).unwrap(), c);
        }
        assert!(AtomCatalog::from_names(&["HIGH AVG MOVIE RATING (4+)"]).is_err());
        assert!(AtomCatalog::from_names(&["HIGH", "HIGH"]).is_err());
    }

    fn context_fixture() -> (BTreeMap<u32, UserInfo>, BTreeMap<u32, MovieInfo>, Vec<Interaction>) {
        let users = [
            (1, Gender::Female, 25, 4),
            (2, Gender::Male, 56, 12),
        ]
        .into_iter()
        .map(|(id, gender, age, occupation)| {
            (
                id,
                UserInfo {
                    user_id: id,
                    gender,
                    age,
                    occupation,
                    zip: "00000".into(),
                },
            )
        })
        .collect();
        let movies = [
            MovieInfo::new(10, "Heat (1995)".into(), &[Genre::Action, Genre::Crime]),
            MovieInfo::new(11, "Metropolis (1927)".into(), &[Genre::SciFi]),
            MovieInfo::new(12, "Untitled".into(), &[Genre::Drama]),
        ]
        .into_iter()
        .map(|m| (m.item_id, m))
        .collect();
        let train = vec![
            rating(1, 10, 4.2),
            rating(1, 11, 2.0),
            rating(2, 10, 5.0),
            rating(2, 11, 4.0),
            rating(2, 12, 1.0),
        ];
        (users, movies, train)
    }

    #[test]
    fn atomize_indicators_and_thresholds() {
        let (users, movies, train) = context_fixture();
        let stats = compute_stats(&train).unwrap().with_favorite_genres(&train, &movies);
        assert_eq!(stats.favorite_genre(1), Some(Genre::Action));
        let ctx = AtomContext {
            users: &users,
            movies: &movies,
            stats: &stats,
        };
        let catalog = AtomCatalog::movielens([4.0, 4.0, 2.0]).unwrap();
        let a: Vec<f64> = ctx.atomize(&catalog, 1, 10).unwrap();
        let on = |name: &str| a[catalog.index_of(name).unwrap()];
        assert_eq!(on("GENDER_F"), 1.0);
        assert_eq!(on("GENDER_M"), 0.0);
        assert_eq!(on("AGE 25-34"), 1.0);
        assert_eq!(on("OCCUPATION COLLEGE/GRAD STUDENT"), 1.0);
        assert_eq!(on("MOVIE GENRE ACTION"), 1.0);
        assert_eq!(on("MOVIE GENRE DRAMA"), 0.0);
        assert_eq!(on("MATCHES FAVORITE GENRE ACTION"), 1.0);
        assert_eq!(on("MATCHES FAVORITE GENRE CRIME"), 0.0);
        assert_eq!(on("RELEASED IN 1990S"), 1.0);
        // item 10 mean 4.6, user 1 mean 3.1, item 10 count 2
        assert_eq!(on("HIGH AVG MOVIE RATING (4.0+)"), 1.0);
        assert_eq!(on("HIGH AVG RATING PER USER (4.0+)"), 0.0);
        assert_eq!(on("MOVIE RATED OFTEN (2.0+)"), 1.0);
        assert!(a.iter().all(|&x| x == 0.0 || x == 1.0));
        assert_eq!(a, ctx.atomize::<f64>(&catalog, 1, 10).unwrap());
    }

    #[test]
    fn cold_start_uses_dataset_means() {
        let (users, movies, train) = context_fixture();
        let stats = compute_stats(&train).unwrap();
        let ctx = AtomContext {
            users: &users,
            movies: &movies,
            stats: &stats,
        };
        // global mean 3.24, mean item count 5/3
        let catalog = AtomCatalog::movielens([3.2, 3.3, 1.6]).unwrap();
        let a: Vec<f64> = ctx.atomize(&catalog, 99, 98).unwrap();
        assert_eq!(&a[77..], &[1.0, 0.0, 1.0]);
        assert!(a[..77].iter().all(|&x| x == 0.0));
        let strict = AtomCatalog::movielens([4.0, 4.0, 228.0]).unwrap();
        let b: Vec<f64> = ctx.atomize(&strict, 99, 98).unwrap();
        assert_eq!(b[77], 0.0);
    }

    #[test]
    fn decades() {
        assert_eq!(decade_of(1919), 1910);
        assert_eq!(decade_of(1999), 1990);
        assert_eq!(decade_of(2000), 2000);
        assert_eq!(decade_of(1895), 1900);
        assert_eq!(decade_of(2015), 2000);
    }

    fn candidate_stats() -> InteractionStats {
        let train: Vec<Interaction> = (1..=20u32)
            .flat_map(|item| (1..=item).map(move |u| rating(u, item, f64::from(1 + (u + item) % 5))))
            .collect();
        compute_stats(&train).unwrap()
    }

    fn net_with(candidates: &AtomCatalog, weights: &[(usize, f64)]) -> RuleNetwork<f64> {
        let mut m = Matrix::filled(2, candidates.len(), 0.01);
        for &(j, w) in weights {
            m.set(1, j, w);
        }
        RuleNetwork::from_fuzzy(m).unwrap()
    }

    #[test]
    fn selection_keeps_the_heaviest_candidate() {
        let stats = candidate_stats();
        let candidates = AtomCatalog::movielens_candidates(&stats).unwrap();
        let counts: Vec<usize> = (0..candidates.len())
            .filter(|&j| candidates.get(j).statistic() == Some(Statistic::ItemRatingCount))
            .collect();
        let t75 = stats.candidates(Statistic::ItemRatingCount).unwrap()[3].1;
        let net = net_with(&candidates, &[(counts[3], 0.7)]);
        let sel = select_threshold_atoms(&stats, |c| {
            assert_eq!(c, &candidates);
            Ok(net.clone())
        })
        .unwrap();
        assert_eq!(sel.thresholds[2], t75);
        assert_eq!(sel.catalog.len(), 80);
        assert!(sel.degenerate.is_empty());
    }

    #[test]
    fn degenerate_selection_keeps_median() {
        let stats = candidate_stats();
        let candidates = AtomCatalog::movielens_candidates(&stats).unwrap();
        let net = RuleNetwork::from_fuzzy(Matrix::filled(2, candidates.len(), 1e-4)).unwrap();
        let sel = choose_thresholds(&net, &candidates, &stats).unwrap();
        assert_eq!(sel.degenerate.len(), 3);
        for (t, stat) in sel.thresholds.iter().zip(Statistic::ALL) {
            assert_eq!(*t, percentile(&stats.distribution(stat), 50).unwrap());
        }
    }

    proptest! {
        #[test]
        fn percentile_is_an_order_statistic(
            values in prop::collection::vec(-1e3..1e3f64, 1..60),
            p in 1u32..=100,
        ) {
            let v = percentile(&values, p).unwrap();
            let below = values.iter().filter(|&&x| x < v).count();
            let at_most = values.iter().filter(|&&x| x <= v).count();
            let rank = (p as usize * values.len()).div_ceil(100);
            prop_assert!(below < rank && rank <= at_most);
        }
    }
}
