//! Regime-entry events and horizon labels.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NeedError, Result};
use crate::regime::{RegimeAssignment, RegimeLabel};

/// What counts as an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventTarget {
    /// Any change of regime.
    AnyChange,
    /// Entry into one regime.
    Entry(RegimeLabel),
}

impl EventTarget {
    pub fn table_name(self) -> &'static str {
        match self {
            EventTarget::AnyChange => "Global",
            EventTarget::Entry(l) => regime_table_name(l),
        }
    }
}

pub fn regime_table_name(l: RegimeLabel) -> &'static str {
    match l {
        RegimeLabel::StoreDominant => "Store-dominant",
        RegimeLabel::Transitional => "Transitional",
        RegimeLabel::FlowDominant => "Flow-dominant",
    }
}

impl fmt::Display for EventTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventTarget::AnyChange => f.write_str("global"),
            EventTarget::Entry(l) => f.write_str(l.as_str()),
        }
    }
}

impl FromStr for EventTarget {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "global" | "any" => Ok(EventTarget::AnyChange),
            other => other.parse().map(EventTarget::Entry),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub country_code: String,
    pub year: i32,
    pub regime: RegimeLabel,
    pub event: bool,
    /// 1 iff an event occurs in (t, t+H]; `None` within H years of the
    /// country's last observation.
    pub label: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventPanel {
    pub target: EventTarget,
    pub horizon: usize,
    /// Rows sorted by (country, year).
    pub rows: Vec<EventRow>,
}

impl EventPanel {
    pub fn n_events(&self) -> usize {
        self.rows.iter().filter(|r| r.event).count()
    }

    pub fn events(&self) -> impl Iterator<Item = (&str, i32)> {
        self.rows.iter().filter(|r| r.event).map(|r| (r.country_code.as_str(), r.year))
    }

    pub fn labeled(&self) -> impl Iterator<Item = &EventRow> {
        self.rows.iter().filter(|r| r.label.is_some())
    }
}

/// Flags events and builds horizon labels from one method's assignments.
/// An event at (i, t) needs an observed regime at t-1 that differs (entry:
/// and the regime at t is the target).
pub fn label_events(assignments: &[RegimeAssignment], target: EventTarget, horizon: usize) -> Result<EventPanel> {
    if horizon == 0 {
        return Err(NeedError::config("horizon", "must be at least 1"));
    }
    let mut by_country: BTreeMap<&str, Vec<&RegimeAssignment>> = BTreeMap::new();
    for a in assignments {
        by_country.entry(&a.country_code).or_default().push(a);
    }
    let mut rows = Vec::with_capacity(assignments.len());
    for (country, mut list) in by_country {
        list.sort_by_key(|a| a.year);
        if list.windows(2).any(|w| w[0].year == w[1].year) {
            return Err(NeedError::invalid(format!(
                "{country}: more than one regime per year; pass a single method"
            )));
        }
        let start = rows.len();
        for (k, a) in list.iter().enumerate() {
            let prev = (k > 0 && list[k - 1].year == a.year - 1).then(|| list[k - 1].label);
            let event = match (target, prev) {
                (_, None) => false,
                (EventTarget::AnyChange, Some(p)) => p != a.label,
                (EventTarget::Entry(l), Some(p)) => a.label == l && p != l,
            };
            rows.push(EventRow {
                country_code: country.to_string(),
                year: a.year,
                regime: a.label,
                event,
                label: None,
            });
        }
        let last_year = list.last().map(|a| a.year).unwrap_or(i32::MIN);
        let h = horizon as i32;
        let country_rows = &rows[start..];
        let labels: Vec<Option<bool>> = country_rows
            .iter()
            .map(|r| {
                (r.year + h <= last_year).then(|| {
                    country_rows
                        .iter()
                        .any(|e| e.event && e.year > r.year && e.year <= r.year + h)
                })
            })
            .collect();
        for (r, l) in rows[start..].iter_mut().zip(labels) {
            r.label = l;
        }
    }
    let panel = EventPanel { target, horizon, rows };
    if panel.n_events() == 0 {
        return Err(NeedError::insufficient(format!("no events for target '{target}'")));
    }
    Ok(panel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regime::RegimeMethod;
    use RegimeLabel::*;

    fn path(labels: &[RegimeLabel]) -> Vec<RegimeAssignment> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| RegimeAssignment {
                country_code: "A".into(),
                year: i as i32 + 1,
                label: *l,
                method: RegimeMethod::EndogenousKmeans,
                features: [0.0; 3],
            })
            .collect()
    }

    #[test]
    fn hand_trace() {
        let p = label_events(
            &path(&[StoreDominant, StoreDominant, Transitional, Transitional, StoreDominant]),
            EventTarget::Entry(Transitional),
            2,
        )
        .unwrap();
        let events: Vec<bool> = p.rows.iter().map(|r| r.event).collect();
        assert_eq!(events, vec![false, false, true, false, false]);
        let labels: Vec<Option<bool>> = p.rows.iter().map(|r| r.label).collect();
        assert_eq!(labels, vec![Some(true), Some(true), Some(false), None, None]);
    }

    #[test]
    fn no_transitions_is_an_error() {
        let err = label_events(&path(&[StoreDominant; 6]), EventTarget::AnyChange, 2).unwrap_err();
        assert!(err.to_string().contains("no events"));
    }

    #[test]
    fn any_change_counts_exits_too() {
        let p = label_events(
            &path(&[StoreDominant, Transitional, Transitional, FlowDominant]),
            EventTarget::AnyChange,
            1,
        )
        .unwrap();
        assert_eq!(p.n_events(), 2);
    }
}
