//! Change events and the normalized change log.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::hierarchy::HierarchyGraph;

/// One atomic change performed by a user on an ontology class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRecord {
    /// 0-based position in the input file, used as the tie-breaker on equal timestamps.
    pub seq: u64,
    /// Epoch milliseconds, UTC.
    pub ts: i64,
    pub user: String,
    pub class_id: String,
    pub action: String,
    /// Name of the modified property; only the name is kept, never the value.
    pub property: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("no change records left after filtering")]
    EmptyLog,
}

/// Normalization options applied when building a [`ChangeLog`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestConfig {
    /// Users whose changes are dropped entirely.
    pub bot_users: BTreeSet<String>,
    /// Report-level filter. Never consulted when fitting models.
    pub min_user_changes: u64,
    pub obfuscate_users: bool,
    /// Actions that modify a property value and therefore carry a property name.
    pub property_actions: BTreeSet<String>,
}

impl IngestConfig {
    pub const DEFAULT_PROPERTY_ACTIONS: [&'static str; 4] = [
        "property_value_added",
        "property_value_changed",
        "property_value_deleted",
        "property_value_replaced",
    ];
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            bot_users: BTreeSet::new(),
            min_user_changes: 0,
            obfuscate_users: false,
            property_actions: Self::DEFAULT_PROPERTY_ACTIONS
                .iter()
                .map(|a| a.to_string())
                .collect(),
        }
    }
}

/// A chronologically ordered change log.
///
/// Logs built through [`ChangeLog::normalize`] are sorted by `(ts, seq)`.
/// [`ChangeLog::from_raw`] keeps file order so that [`validate_changelog`]
/// can report ordering problems in the input itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeLog {
    records: Vec<ChangeRecord>,
    source_digest: String,
}

impl ChangeLog {
    /// Drops bot users, sorts stably by `(ts, seq)` and optionally obfuscates usernames.
    ///
    /// Obfuscated names are `"u"` followed by the 1-based rank of the user's
    /// first appearance in the sorted log, zero-padded to the width of the
    /// number of distinct users.
    pub fn normalize(
        records: Vec<ChangeRecord>,
        config: &IngestConfig,
        source_digest: impl Into<String>,
    ) -> Result<ChangeLog, IngestError> {
        let mut records: Vec<ChangeRecord> = records
            .into_iter()
            .filter(|r| !config.bot_users.contains(&r.user))
            .collect();
        if records.is_empty() {
            return Err(IngestError::EmptyLog);
        }
        records.sort_by_key(|r| (r.ts, r.seq));

        if config.obfuscate_users {
            let mut first_seen: BTreeMap<String, usize> = BTreeMap::new();
            for r in &records {
                let next = first_seen.len() + 1;
                first_seen.entry(r.user.clone()).or_insert(next);
            }
            let width = decimal_width(first_seen.len());
            let aliases: BTreeMap<String, String> = first_seen
                .into_iter()
                .map(|(user, rank)| (user, format!("u{rank:0width$}")))
                .collect();
            for r in &mut records {
                r.user = aliases[&r.user].clone();
            }
        }

        Ok(ChangeLog {
            records,
            source_digest: source_digest.into(),
        })
    }

    /// Wraps records exactly as given, without filtering or sorting.
    pub fn from_raw(records: Vec<ChangeRecord>, source_digest: impl Into<String>) -> ChangeLog {
        ChangeLog {
            records,
            source_digest: source_digest.into(),
        }
    }

    pub fn records(&self) -> &[ChangeRecord] {
        &self.records
    }

    pub fn source_digest(&self) -> &str {
        &self.source_digest
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Raw number of changes per user.
    pub fn user_change_counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.user.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Number of changes that hit a class before its last `move_action` record.
    ///
    /// Returns `None` when the log contains no move records at all. Move
    /// records themselves are not counted.
    pub fn moved_before_changed(&self, move_action: &str) -> Option<u64> {
        let mut last_move: BTreeMap<&str, (i64, u64)> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.action == move_action) {
            let key = (r.ts, r.seq);
            let slot = last_move.entry(r.class_id.as_str()).or_insert(key);
            if key > *slot {
                *slot = key;
            }
        }
        if last_move.is_empty() {
            return None;
        }
        let hit = self
            .records
            .iter()
            .filter(|r| r.action != move_action)
            .filter(|r| {
                last_move
                    .get(r.class_id.as_str())
                    .is_some_and(|&mv| (r.ts, r.seq) < mv)
            })
            .count();
        Some(hit as u64)
    }
}

fn decimal_width(mut n: usize) -> usize {
    let mut width = 1;
    while n >= 10 {
        n /= 10;
        width += 1;
    }
    width
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckKind {
    MonotoneTimestamps,
    PropertyActionConsistency,
    UnknownClassReferences,
    DuplicateTsSeq,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::MonotoneTimestamps => "monotone_timestamps",
            CheckKind::PropertyActionConsistency => "property_action_consistency",
            CheckKind::UnknownClassReferences => "unknown_class_references",
            CheckKind::DuplicateTsSeq => "duplicate_ts_seq",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    Passed,
    /// Each finding names the offending record by `seq`.
    Failed(Vec<(u64, String)>),
    /// The check needs input that was not supplied.
    Skipped(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub checks: Vec<(CheckKind, CheckOutcome)>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .all(|(_, o)| !matches!(o, CheckOutcome::Failed(_)))
    }

    pub fn outcome(&self, kind: CheckKind) -> Option<&CheckOutcome> {
        self.checks.iter().find(|(k, _)| *k == kind).map(|(_, o)| o)
    }
}

/// Runs every structural check over the records in their stored order.
///
/// The unknown-class check is skipped unless a hierarchy is supplied.
pub fn validate_changelog(
    log: &ChangeLog,
    config: &IngestConfig,
    hierarchy: Option<&HierarchyGraph>,
) -> ValidationReport {
    let records = log.records();

    let mut monotone = Vec::new();
    for pair in records.windows(2) {
        if pair[1].ts < pair[0].ts {
            monotone.push((
                pair[1].seq,
                format!(
                    "timestamp {} precedes predecessor {}",
                    pair[1].ts, pair[0].ts
                ),
            ));
        }
    }

    let mut consistency = Vec::new();
    for r in records {
        let expects_property = config.property_actions.contains(&r.action);
        match (&r.property, expects_property) {
            (None, true) => {
                consistency.push((r.seq, format!("action {:?} requires a property", r.action)))
            }
            (Some(p), false) => consistency.push((
                r.seq,
                format!(
                    "action {:?} does not modify a property but names {:?}",
                    r.action, p
                ),
            )),
            _ => {}
        }
    }

    let unknown = match hierarchy {
        Some(g) => outcome(
            records
                .iter()
                .filter(|r| !g.contains(&r.class_id))
                .map(|r| (r.seq, format!("class {:?} not in hierarchy", r.class_id)))
                .collect(),
        ),
        None => CheckOutcome::Skipped("no hierarchy supplied"),
    };

    let mut seen = BTreeSet::new();
    let mut duplicates = Vec::new();
    for r in records {
        if !seen.insert((r.ts, r.seq)) {
            duplicates.push((
                r.seq,
                format!("duplicate (ts, seq) = ({}, {})", r.ts, r.seq),
            ));
        }
    }

    ValidationReport {
        checks: alloc::vec![
            (CheckKind::MonotoneTimestamps, outcome(monotone)),
            (CheckKind::PropertyActionConsistency, outcome(consistency)),
            (CheckKind::UnknownClassReferences, unknown),
            (CheckKind::DuplicateTsSeq, outcome(duplicates)),
        ],
    }
}

fn outcome(findings: Vec<(u64, String)>) -> CheckOutcome {
    if findings.is_empty() {
        CheckOutcome::Passed
    } else {
        CheckOutcome::Failed(findings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(seq: u64, ts: i64, user: &str, class: &str) -> ChangeRecord {
        ChangeRecord {
            seq,
            ts,
            user: user.into(),
            class_id: class.into(),
            action: "class_created".into(),
            property: None,
        }
    }

    #[test]
    fn equal_timestamps_keep_file_order() {
        let records = vec![
            rec(0, 50, "b", "X"),
            rec(1, 10, "a", "X"),
            rec(2, 10, "c", "Y"),
        ];
        let log = ChangeLog::normalize(records, &IngestConfig::default(), "d").unwrap();
        let order: Vec<u64> = log.records().iter().map(|r| r.seq).collect();
        assert_eq!(order, vec![1, 2, 0]);
    }

    #[test]
    fn bots_removed_without_reordering() {
        let mut records = Vec::new();
        for i in 0..935 {
            records.push(rec(i, i as i64, "who-bot", "X"));
        }
        records.push(rec(935, 5, "alice", "X"));
        records.push(rec(936, 2, "bob", "Y"));
        let config = IngestConfig {
            bot_users: ["who-bot".to_string()].into_iter().collect(),
            ..IngestConfig::default()
        };
        let log = ChangeLog::normalize(records, &config, "d").unwrap();
        assert_eq!(log.len(), 2);
        assert!(log.records().iter().all(|r| r.user != "who-bot"));
    }

    #[test]
    fn only_bots_is_empty() {
        let config = IngestConfig {
            bot_users: ["bot".to_string()].into_iter().collect(),
            ..IngestConfig::default()
        };
        let err = ChangeLog::normalize(vec![rec(0, 0, "bot", "X")], &config, "d").unwrap_err();
        assert_eq!(err, IngestError::EmptyLog);
    }

    #[test]
    fn obfuscation_ranks_first_appearance() {
        let mut records = Vec::new();
        let users = [
            "zed", "amy", "zed", "kim", "a1", "a2", "a3", "a4", "a5", "a6", "a7",
        ];
        for (i, u) in users.iter().enumerate() {
            records.push(rec(i as u64, i as i64, u, "X"));
        }
        let config = IngestConfig {
            obfuscate_users: true,
            ..IngestConfig::default()
        };
        let log = ChangeLog::normalize(records, &config, "d").unwrap();
        let names: Vec<&str> = log.records().iter().map(|r| r.user.as_str()).collect();
        assert_eq!(&names[..4], &["u01", "u02", "u01", "u03"]);
        assert_eq!(names[10], "u10");
    }

    #[test]
    fn well_formed_log_passes_all_checks() {
        let records = vec![
            rec(0, 1, "a", "X"),
            rec(1, 2, "b", "Y"),
            rec(2, 3, "a", "X"),
        ];
        let log = ChangeLog::normalize(records, &IngestConfig::default(), "d").unwrap();
        let report = validate_changelog(&log, &IngestConfig::default(), None);
        assert!(report.passed());
        assert_eq!(
            report.outcome(CheckKind::UnknownClassReferences),
            Some(&CheckOutcome::Skipped("no hierarchy supplied"))
        );
    }

    #[test]
    fn missing_property_is_flagged() {
        let mut r = rec(0, 1, "a", "X");
        r.action = "property_value_changed".into();
        let log = ChangeLog::from_raw(vec![r], "d");
        let report = validate_changelog(&log, &IngestConfig::default(), None);
        assert!(!report.passed());
        match report.outcome(CheckKind::PropertyActionConsistency) {
            Some(CheckOutcome::Failed(f)) => assert_eq!(f[0].0, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsorted_raw_log_fails_monotonicity() {
        let log = ChangeLog::from_raw(vec![rec(0, 20, "a", "X"), rec(1, 10, "a", "X")], "d");
        let report = validate_changelog(&log, &IngestConfig::default(), None);
        assert!(matches!(
            report.outcome(CheckKind::MonotoneTimestamps),
            Some(CheckOutcome::Failed(f)) if f[0].0 == 1
        ));
    }

    #[test]
    fn duplicate_ts_seq_detected() {
        let log = ChangeLog::from_raw(vec![rec(4, 20, "a", "X"), rec(4, 20, "b", "Y")], "d");
        let report = validate_changelog(&log, &IngestConfig::default(), None);
        assert!(matches!(
            report.outcome(CheckKind::DuplicateTsSeq),
            Some(CheckOutcome::Failed(_))
        ));
    }

    #[test]
    fn moved_before_changed_counts_prior_edits() {
        let mut mv = rec(2, 30, "a", "X");
        mv.action = "class_moved".into();
        let records = vec![
            rec(0, 10, "a", "X"),
            rec(1, 20, "b", "X"),
            mv,
            rec(3, 40, "a", "X"),
        ];
        let log = ChangeLog::normalize(records, &IngestConfig::default(), "d").unwrap();
        assert_eq!(log.moved_before_changed("class_moved"), Some(2));
        assert_eq!(log.moved_before_changed("nothing"), None);
    }
}
