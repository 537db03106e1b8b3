//! Bias-only rating predictor `mu + b_u + b_i`, fitted by alternating
//! regularised means.

use std::collections::BTreeMap;

use crate::data::Interaction;
use crate::error::{Error, Result};

pub const RATING_MIN: f64 = 1.0;
pub const RATING_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasConfig {
    pub epochs: usize,
    pub reg_items: f64,
    pub reg_users: f64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            reg_items: 10.0,
            reg_users: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasModel {
    pub mu: f64,
    pub user_bias: BTreeMap<u32, f64>,
    pub item_bias: BTreeMap<u32, f64>,
    pub config: BiasConfig,
}

/// Alternates `b_i = sum(r - mu - b_u) / (reg_i + |R_i|)` and
/// `b_u = sum(r - mu - b_i) / (reg_u + |R_u|)`.
///
/// Records are processed in sorted order, so the fit does not depend on the
/// order of `train`.
pub fn fit_bias(train: &[Interaction], config: BiasConfig) -> Result<BiasModel> {
    if train.is_empty() {
        return Err(Error::Empty("training ratings"));
    }
    if !(config.reg_items >= 0.0 && config.reg_users >= 0.0) {
        return Err(Error::Config("bias regularisation must be non-negative".into()));
    }
    let mut records: Vec<(u32, u32, f64)> = train.iter().map(|r| (r.user_id, r.item_id, r.rating)).collect();
    records.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));

    let mu = records.iter().map(|r| r.2).sum::<f64>() / records.len() as f64;
    let mut user_bias: BTreeMap<u32, f64> = records.iter().map(|r| (r.0, 0.0)).collect();
    let mut item_bias: BTreeMap<u32, f64> = records.iter().map(|r| (r.1, 0.0)).collect();

    let mut sums: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for _ in 0..config.epochs {
        sums.clear();
        for &(u, i, r) in &records {
            let e = sums.entry(i).or_default();
            e.0 += r - mu - user_bias[&u];
            e.1 += 1.0;
        }
        for (i, (s, c)) in &sums {
            item_bias.insert(*i, s / (config.reg_items + c));
        }
        sums.clear();
        for &(u, i, r) in &records {
            let e = sums.entry(u).or_default();
            e.0 += r - mu - item_bias[&i];
            e.1 += 1.0;
        }
        for (u, (s, c)) in &sums {
            user_bias.insert(*u, s / (config.reg_users + c));
        }
    }
    Ok(BiasModel {
        mu,
        user_bias,
        item_bias,
        config,
    })
}

impl BiasModel {
    /// `mu + b_u + b_i` with zero bias for unseen ids, clipped to `[1, 5]`.
    pub fn predict(&self, user: u32, item: u32) -> f64 {
        let bu = self.user_bias.get(&user).copied().unwrap_or(0.0);
        let bi = self.item_bias.get(&item).copied().unwrap_or(0.0);
        (self.mu + bu + bi).clamp(RATING_MIN, RATING_MAX)
    }
}
