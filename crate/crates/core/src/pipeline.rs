//! End-to-end runs: load a dataset, build atoms, train, score and evaluate.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::atoms::{
    compute_stats, select_threshold_atoms, synthetic_atoms, AtomCatalog, AtomContext, CatalogKind, InteractionStats,
    ThresholdSelection,
};
use crate::baseline::fit_bias;
use crate::checkpoint::Checkpoint;
use crate::config::{CandidateSet, RunConfig};
use crate::data::{
    binarize, parse_movielens, random_split, temporal_split, Interaction, MovieLens, SplitDataset, SyntheticSample,
    RELEVANCE_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, repeat_evaluate, MetricsReport, RunMetrics, ScoredItem};
use crate::network::RuleNetwork;
use crate::scalar::Scalar;
use crate::training::{train, LabeledAtoms, TrainConfig, TrainHistory};

/// Rows atomized per parallel work item.
const ATOMIZE_CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub network: RuleNetwork<T>,
    pub catalog: AtomCatalog,
    pub history: TrainHistory<T>,
    /// Present for MovieLens runs.
    pub selection: Option<ThresholdSelection>,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn checkpoint(&self) -> Result<Checkpoint<T>> {
        Checkpoint::new(self.network.clone(), self.catalog.names())
    }
}

/// Train, validation and test data of one dataset.
#[derive(Debug, Clone)]
pub enum Prepared {
    Synthetic(SplitDataset<SyntheticSample>),
    MovieLens(Box<MovieLensRun>),
}

impl Prepared {
    /// Generates or reads the configured dataset and splits it.
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        match cfg.dataset {
            CatalogKind::Synthetic => {
                let samples = cfg.synthetic_config().generate();
                Ok(Prepared::Synthetic(random_split(&samples, cfg.split, cfg.data_seed)?))
            }
            CatalogKind::MovieLens => {
                let dir = cfg
                    .movielens_dir
                    .as_ref()
                    .ok_or_else(|| Error::Config("movielens_dir is not set".into()))?;
                let data = parse_movielens(dir)?;
                Ok(Prepared::MovieLens(Box::new(MovieLensRun::prepare(data, cfg)?)))
            }
        }
    }

    pub fn kind(&self) -> CatalogKind {
        match self {
            Prepared::Synthetic(_) => CatalogKind::Synthetic,
            Prepared::MovieLens(_) => CatalogKind::MovieLens,
        }
    }

    /// Trains one model; MovieLens runs select their thresholds first.
    pub fn train<T: Scalar>(&self, tcfg: &TrainConfig<T>) -> Result<TrainedModel<T>> {
        match self {
            Prepared::Synthetic(split) => train_synthetic(split, tcfg),
            Prepared::MovieLens(ml) => {
                let selection = ml.select_thresholds(tcfg)?;
                ml.train_with(selection, tcfg)
            }
        }
    }

    /// Scores the test candidates with a rule network over `catalog`.
    pub fn score<T: Scalar>(
        &self,
        net: &RuleNetwork<T>,
        catalog: &AtomCatalog,
        candidates: CandidateSet,
    ) -> Result<Vec<ScoredItem>> {
        if net.atoms() != catalog.len() {
            return Err(Error::LengthMismatch {
                expected: catalog.len(),
                actual: net.atoms(),
            });
        }
        match self {
            Prepared::Synthetic(split) => {
                if catalog != &AtomCatalog::synthetic() {
                    return Err(Error::Format("model was not trained on the synthetic atoms".into()));
                }
                if candidates != CandidateSet::Rated {
                    return Err(Error::Config("the synthetic corpus only supports rated candidates".into()));
                }
                score_synthetic(net, &split.test)
            }
            Prepared::MovieLens(ml) => ml.score(net, catalog, &ml.candidates(candidates)),
        }
    }

    /// Fits the bias baseline on the training ratings and scores the test candidates.
    pub fn score_baseline(&self, cfg: &RunConfig) -> Result<Vec<ScoredItem>> {
        match self {
            Prepared::Synthetic(_) => Err(Error::Config(
                "the bias baseline needs ratings; use the movielens dataset".into(),
            )),
            Prepared::MovieLens(ml) => {
                let model = fit_bias(&ml.split.train, cfg.bias)?;
                Ok(ml
                    .candidates(cfg.candidates)
                    .into_par_iter()
                    .map(|(user_id, item_id, relevant)| ScoredItem {
                        user_id,
                        item_id,
                        score: model.predict(user_id, item_id),
                        relevant,
                    })
                    .collect())
            }
        }
    }
}

pub fn synthetic_labeled<T: Scalar>(samples: &[SyntheticSample]) -> Result<LabeledAtoms<T>> {
    let mut data = LabeledAtoms::new(6);
    for s in samples {
        data.push(&synthetic_atoms::<T>(s), s.label)?;
    }
    Ok(data)
}

pub fn train_synthetic<T: Scalar>(
    split: &SplitDataset<SyntheticSample>,
    tcfg: &TrainConfig<T>,
) -> Result<TrainedModel<T>> {
    let data = synthetic_labeled(&split.train)?;
    let validation = synthetic_labeled(&split.validation)?;
    let (network, history) = train(&data, Some(&validation), tcfg)?;
    Ok(TrainedModel {
        network,
        catalog: AtomCatalog::synthetic(),
        history,
        selection: None,
    })
}

/// One scored item per test sample; relevance is the sample label.
pub fn score_synthetic<T: Scalar>(net: &RuleNetwork<T>, samples: &[SyntheticSample]) -> Result<Vec<ScoredItem>> {
    samples
        .par_iter()
        .map(|s| {
            Ok(ScoredItem {
                user_id: s.user_id,
                item_id: s.item_id,
                score: net.predict(&synthetic_atoms::<T>(s))?.value().as_f64(),
                relevant: s.label,
            })
        })
        .collect()
}

/// Planted rules of the synthetic corpus as synthetic catalog indices:
/// HIGH, RECENT ∧ GENRE and RECENT ∧ CAST ∧ DIRECTOR.
pub const PLANTED_RULES: [&[usize]; 3] = [&[0], &[1, 2], &[2, 3, 4]];
const COOKIE: usize = 5;

/// Weight a planted atom must reach in its rule row.
pub const PLANTED_ON: f64 = 0.9;
/// Largest weight allowed for the other atoms of that row.
pub const PLANTED_OFF: f64 = 0.1;
/// Largest COOKIE weight allowed in any row.
pub const COOKIE_MAX: f64 = 0.05;

/// True when every planted rule has a row with its atoms at or above
/// [`PLANTED_ON`] and all other atoms at or below [`PLANTED_OFF`], and COOKIE
/// stays at or below [`COOKIE_MAX`] everywhere. Rule order and redundant
/// rows do not matter.
pub fn recovers_planted_rules<T: Scalar>(net: &RuleNetwork<T>) -> bool {
    if net.atoms() != 6 {
        return false;
    }
    let fuzzy = net.fuzzify();
    let w = |i: usize, j: usize| fuzzy.get(i, j).as_f64();
    let cookie_ok = (0..net.rules()).all(|i| w(i, COOKIE) <= COOKIE_MAX);
    cookie_ok
        && PLANTED_RULES.iter().all(|rule| {
            (0..net.rules()).any(|i| {
                (0..6).all(|j| if rule.contains(&j) { w(i, j) >= PLANTED_ON } else { w(i, j) <= PLANTED_OFF })
            })
        })
}

/// MovieLens ratings split in time, with training statistics.
#[derive(Debug, Clone)]
pub struct MovieLensRun {
    pub data: MovieLens,
    pub split: SplitDataset<Interaction>,
    pub stats: InteractionStats,
}

impl MovieLensRun {
    pub fn prepare(data: MovieLens, cfg: &RunConfig) -> Result<Self> {
        let split = temporal_split(&data.interactions, cfg.split)?;
        let stats = compute_stats(&split.train)?.with_favorite_genres(&split.train, &data.movies);
        log::info!(
            "movielens split: {} train, {} validation, {} test ratings",
            split.train.len(),
            split.validation.len(),
            split.test.len()
        );
        Ok(Self { data, split, stats })
    }

    pub fn context(&self) -> AtomContext<'_> {
        AtomContext {
            users: &self.data.users,
            movies: &self.data.movies,
            stats: &self.stats,
        }
    }

    /// Atom vectors of `records`, labelled relevant when rated 4 or more.
    /// Rows keep the order of `records` regardless of the thread count.
    pub fn labeled<T: Scalar>(&self, catalog: &AtomCatalog, records: &[Interaction]) -> Result<LabeledAtoms<T>> {
        let n = catalog.len();
        let ctx = self.context();
        let mut atoms = vec![T::zero(); records.len() * n];
        atoms
            .par_chunks_mut(ATOMIZE_CHUNK * n.max(1))
            .zip(records.par_chunks(ATOMIZE_CHUNK))
            .try_for_each(|(out, recs)| {
                for (row, r) in out.chunks_exact_mut(n).zip(recs) {
                    ctx.atomize_into(catalog, r.user_id, r.item_id, row)?;
                }
                Ok::<_, Error>(())
            })?;
        let labels: Vec<bool> = records.iter().map(|r| binarize(r.rating, RELEVANCE_THRESHOLD)).collect();
        LabeledAtoms::from_parts(n, atoms, &labels)
    }

    /// Trains on the candidate threshold catalog and keeps one threshold per statistic.
    pub fn select_thresholds<T: Scalar>(&self, tcfg: &TrainConfig<T>) -> Result<ThresholdSelection> {
        let selection = select_threshold_atoms(&self.stats, |candidates| {
            let data = self.labeled::<T>(candidates, &self.split.train)?;
            log::info!("threshold selection: {} candidate atoms", candidates.len());
            Ok(train(&data, None, tcfg)?.0)
        })?;
        log::info!("retained thresholds {:?}", selection.thresholds);
        Ok(selection)
    }

    pub fn train_with<T: Scalar>(&self, selection: ThresholdSelection, tcfg: &TrainConfig<T>) -> Result<TrainedModel<T>> {
        let data = self.labeled::<T>(&selection.catalog, &self.split.train)?;
        let validation = self.labeled::<T>(&selection.catalog, &self.split.validation)?;
        let (network, history) = train(&data, Some(&validation), tcfg)?;
        Ok(TrainedModel {
            network,
            catalog: selection.catalog.clone(),
            history,
            selection: Some(selection),
        })
    }

    /// `(user, item, relevant)` triples to rank, ordered by user then item.
    pub fn candidates(&self, mode: CandidateSet) -> Vec<(u32, u32, bool)> {
        let mut relevant: BTreeMap<(u32, u32), bool> = BTreeMap::new();
        for r in &self.split.test {
            let e = relevant.entry((r.user_id, r.item_id)).or_insert(false);
            *e |= binarize(r.rating, RELEVANCE_THRESHOLD);
        }
        match mode {
            CandidateSet::Rated => relevant.into_iter().map(|((u, i), rel)| (u, i, rel)).collect(),
            CandidateSet::All => {
                let seen: BTreeSet<(u32, u32)> = self
                    .split
                    .train
                    .iter()
                    .chain(&self.split.validation)
                    .map(|r| (r.user_id, r.item_id))
                    .collect();
                let users: BTreeSet<u32> = relevant.keys().map(|&(u, _)| u).collect();
                users
                    .into_iter()
                    .flat_map(|u| self.data.movies.keys().map(move |&i| (u, i)))
                    .filter(|key| !seen.contains(key) || relevant.contains_key(key))
                    .map(|(u, i)| (u, i, relevant.get(&(u, i)).copied().unwrap_or(false)))
                    .collect()
            }
        }
    }

    pub fn score<T: Scalar>(
        &self,
        net: &RuleNetwork<T>,
        catalog: &AtomCatalog,
        candidates: &[(u32, u32, bool)],
    ) -> Result<Vec<ScoredItem>> {
        let ctx = self.context();
        candidates
            .par_chunks(ATOMIZE_CHUNK)
            .map(|chunk| {
                let mut row = vec![T::zero(); catalog.len()];
                chunk
                    .iter()
                    .map(|&(user_id, item_id, relevant)| {
                        ctx.atomize_into(catalog, user_id, item_id, &mut row)?;
                        Ok(ScoredItem {
                            user_id,
                            item_id,
                            score: net.predict(&row)?.value().as_f64(),
                            relevant,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .map(|parts| parts.concat())
    }
}

/// Trains and evaluates one model per seed `seed + r`. MovieLens thresholds
/// are selected once with the base seed and shared by all runs.
pub fn repeat_model<T: Scalar>(prepared: &Prepared, cfg: &RunConfig) -> Result<MetricsReport> {
    let base: TrainConfig<T> = cfg.train_config();
    let selection = match prepared {
        Prepared::MovieLens(ml) => Some(ml.select_thresholds(&base)?),
        Prepared::Synthetic(_) => None,
    };
    repeat_evaluate(cfg.runs, base.seed, |seed| {
        let tcfg = base.clone().with_seed(seed);
        let model = match (prepared, &selection) {
            (Prepared::MovieLens(ml), Some(sel)) => ml.train_with(sel.clone(), &tcfg)?,
            _ => prepared.train(&tcfg)?,
        };
        let metrics = evaluate_model(prepared, &model.network, &model.catalog, cfg)?;
        log::info!("seed {seed}: {}", summary_line(&metrics, &cfg.ks));
        Ok(metrics)
    })
}

pub fn evaluate_model<T: Scalar>(
    prepared: &Prepared,
    net: &RuleNetwork<T>,
    catalog: &AtomCatalog,
    cfg: &RunConfig,
) -> Result<RunMetrics> {
    evaluate(&prepared.score(net, catalog, cfg.candidates)?, &cfg.ks)
}

/// The baseline has no randomness; every run repeats the same fit.
pub fn repeat_baseline(prepared: &Prepared, cfg: &RunConfig) -> Result<MetricsReport> {
    repeat_evaluate(cfg.runs, cfg.train.seed, |_| evaluate(&prepared.score_baseline(cfg)?, &cfg.ks))
}

fn summary_line(m: &RunMetrics, ks: &[usize]) -> String {
    use crate::evaluation::Metric;
    ks.iter()
        .flat_map(|&k| {
            [Metric::Precision, Metric::Recall, Metric::Ndcg, Metric::Map]
                .map(|metric| format!("{}@{k}={:.3}", metric.short(), m.get(metric, k).unwrap_or(f64::NAN)))
        })
        .collect::<Vec<_>>()
        .join(" ")
}
