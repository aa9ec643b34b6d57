use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{NeedError, Result};
use crate::models::{ClassifierTask, ForecastTask};

/// Rows that belong to a country and a year.
pub trait Keyed {
    fn country(&self) -> &str;
    fn year(&self) -> i32;
}

impl Keyed for ForecastTask {
    fn country(&self) -> &str {
        &self.country_code
    }
    fn year(&self) -> i32 {
        self.year
    }
}

impl Keyed for ClassifierTask {
    fn country(&self) -> &str {
        &self.country_code
    }
    fn year(&self) -> i32 {
        self.year
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    /// Countries with fewer usable rows are left out of the split.
    pub min_rows: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.25,
            min_rows: 4,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(NeedError::config("test_fraction", "must lie strictly between 0 and 1"));
        }
        if self.min_rows < 2 {
            return Err(NeedError::config("min_rows", "must be at least 2"));
        }
        Ok(())
    }

    /// Test rows for a country with `t` usable rows; at least one row always
    /// stays in training.
    pub fn test_count(&self, t: usize) -> usize {
        let raw = (self.test_fraction * t as f64 - 1e-9).ceil().max(1.0) as usize;
        raw.min(t.saturating_sub(1))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub excluded_countries: Vec<String>,
}

/// Per-country chronological suffix split. Indices refer to `rows`.
pub fn chronological_split<T: Keyed>(rows: &[T], spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut by_country: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        by_country.entry(r.country()).or_default().push(i);
    }
    let mut split = Split::default();
    for (country, mut idx) in by_country {
        if idx.len() < spec.min_rows {
            log::warn!(
                "{country}: {} usable rows (< {}), excluded from split",
                idx.len(),
                spec.min_rows
            );
            split.excluded_countries.push(country.to_string());
            continue;
        }
        idx.sort_by_key(|&i| rows[i].year());
        let n_test = spec.test_count(idx.len());
        let cut = idx.len() - n_test;
        split.train.extend_from_slice(&idx[..cut]);
        split.test.extend_from_slice(&idx[cut..]);
    }
    if split.test.is_empty() {
        return Err(NeedError::insufficient("no country has enough rows for a train/test split"));
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
