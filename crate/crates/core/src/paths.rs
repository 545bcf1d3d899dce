//! Path families extracted from a change log.
//!
//! Every builder follows the same pipeline: session breaks are inserted
//! first (user views only), then each event is mapped to its label, then
//! consecutive events sharing a run key are truncated to the run cap.
//! `BREAK` always terminates a run.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::hierarchy::{HierarchyGraph, RelationshipLabel};
use crate::record::{ChangeLog, ChangeRecord};

pub const BREAK: &str = "BREAK";
pub const NO_PROPERTY: &str = "no property";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("{} change(s) reference classes missing from the hierarchy (first: seq {} class {:?})", .0.len(), .0[0].0, .0[0].1)]
    UnknownClasses(Vec<(u64, String)>),
    #[error("invalid path: {0}")]
    InvalidPath(&'static str),
    #[error("break threshold must be positive")]
    InvalidBreakThreshold,
    #[error("unknown path kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathKind {
    /// Class view: distinct consecutive contributors of each class.
    UserSequence,
    /// User view: depth level of each changed class.
    DepthLevel,
    /// User view: relationship between consecutively changed classes.
    Relationship,
    PropertyUser,
    PropertyClass,
    /// User view: change action labels.
    Action,
}

impl PathKind {
    pub const ALL: [PathKind; 6] = [
        PathKind::UserSequence,
        PathKind::DepthLevel,
        PathKind::Relationship,
        PathKind::PropertyUser,
        PathKind::PropertyClass,
        PathKind::Action,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::UserSequence => "user-seq",
            PathKind::DepthLevel => "depth",
            PathKind::Relationship => "relationship",
            PathKind::PropertyUser => "property-user",
            PathKind::PropertyClass => "property-class",
            PathKind::Action => "action",
        }
    }

    /// User-view paths get session breaks; class-view paths never do.
    pub fn is_user_view(self) -> bool {
        !matches!(self, PathKind::UserSequence | PathKind::PropertyClass)
    }

    pub fn needs_hierarchy(self) -> bool {
        matches!(self, PathKind::DepthLevel | PathKind::Relationship)
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PathKind {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PathKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PathError::UnknownKind(s.to_string()))
    }
}

/// One chronologically ordered label sequence for a single user or class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionPath {
    pub owner: String,
    pub kind: PathKind,
    pub labels: Vec<String>,
}

impl InteractionPath {
    pub fn new(
        owner: impl Into<String>,
        kind: PathKind,
        labels: Vec<String>,
    ) -> Result<Self, PathError> {
        if labels.is_empty() {
            return Err(PathError::InvalidPath("path has no labels"));
        }
        if labels.iter().any(String::is_empty) {
            return Err(PathError::InvalidPath("empty label"));
        }
        Ok(InteractionPath {
            owner: owner.into(),
            kind,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl AsRef<[String]> for InteractionPath {
    fn as_ref(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionConfig {
    /// Gaps strictly longer than this start a new session.
    pub break_threshold_ms: u64,
    pub break_label: String,
}

impl SessionConfig {
    pub fn from_secs(secs: u64) -> Result<Self, PathError> {
        if secs == 0 {
            return Err(PathError::InvalidBreakThreshold);
        }
        Ok(SessionConfig {
            break_threshold_ms: secs * 1000,
            ..SessionConfig::default()
        })
    }
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            break_threshold_ms: 300_000,
            break_label: BREAK.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sessioned<'a> {
    Event(&'a ChangeRecord),
    Break,
}

/// Interleaves one user's chronologically sorted events with session breaks.
pub fn insert_breaks<'a>(events: &[&'a ChangeRecord], cfg: &SessionConfig) -> Vec<Sessioned<'a>> {
    let mut out = Vec::with_capacity(events.len());
    let mut prev: Option<&ChangeRecord> = None;
    for &e in events {
        if let Some(p) = prev {
            if e.ts.saturating_sub(p.ts) as i128 > cfg.break_threshold_ms as i128 {
                out.push(Sessioned::Break);
            }
        }
        out.push(Sessioned::Event(e));
        prev = Some(e);
    }
    out
}

/// Maximum number of consecutive same-key items kept by [`merge_runs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunCap {
    /// No self-transition survives.
    One,
    /// Exactly one self-transition survives.
    Two,
}

impl RunCap {
    pub fn get(self) -> usize {
        match self {
            RunCap::One => 1,
            RunCap::Two => 2,
        }
    }
}

/// Truncates every maximal run of equal keys to at most `cap` items.
///
/// Items whose key is `None` never join a run.
pub fn merge_runs<T, K, F>(items: Vec<T>, mut key: F, cap: RunCap) -> Vec<T>
where
    K: PartialEq,
    F: FnMut(&T) -> Option<K>,
{
    let cap = cap.get();
    let mut out = Vec::with_capacity(items.len());
    let mut current: Option<K> = None;
    let mut run = 0usize;
    for item in items {
        let k = key(&item);
        match (&k, &current) {
            (Some(a), Some(b)) if a == b => run += 1,
            _ => run = 1,
        }
        current = k;
        if run <= cap {
            out.push(item);
        }
    }
    out
}

fn group_by<'a, F>(log: &'a ChangeLog, owner: F) -> BTreeMap<&'a str, Vec<&'a ChangeRecord>>
where
    F: Fn(&'a ChangeRecord) -> &'a str,
{
    let mut groups: BTreeMap<&str, Vec<&ChangeRecord>> = BTreeMap::new();
    for r in log.records() {
        groups.entry(owner(r)).or_default().push(r);
    }
    groups
}

/// A label plus its run key; `None` keys never merge.
type Keyed<K> = (String, Option<K>);

fn finish<K: PartialEq + Clone>(
    owner: &str,
    kind: PathKind,
    items: Vec<Keyed<K>>,
    cap: RunCap,
) -> Option<InteractionPath> {
    let labels: Vec<String> = merge_runs(items, |(_, k)| k.clone(), cap)
        .into_iter()
        .map(|(l, _)| l)
        .collect();
    (!labels.is_empty()).then(|| InteractionPath {
        owner: owner.to_string(),
        kind,
        labels,
    })
}

/// Shared user-view pipeline: breaks, then labels, then cap-2 run merging.
fn user_view_paths<'a, K, L>(
    log: &'a ChangeLog,
    cfg: &SessionConfig,
    kind: PathKind,
    mut label_and_key: L,
) -> Vec<InteractionPath>
where
    K: PartialEq + Clone,
    L: FnMut(&'a ChangeRecord) -> (String, K),
{
    group_by(log, |r| r.user.as_str())
        .into_iter()
        .filter_map(|(user, events)| {
            let items: Vec<Keyed<K>> = insert_breaks(&events, cfg)
                .into_iter()
                .map(|s| match s {
                    Sessioned::Break => (cfg.break_label.clone(), None),
                    Sessioned::Event(r) => {
                        let (label, key) = label_and_key(r);
                        (label, Some(key))
                    }
                })
                .collect();
            finish(user, kind, items, RunCap::Two)
        })
        .collect()
}

fn check_classes(log: &ChangeLog, g: &HierarchyGraph) -> Result<(), PathError> {
    let missing: Vec<(u64, String)> = log
        .records()
        .iter()
        .filter(|r| !g.contains(&r.class_id))
        .map(|r| (r.seq, r.class_id.clone()))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(PathError::UnknownClasses(missing))
    }
}

/// One path per class listing its contributors, consecutive repeats collapsed.
pub fn build_user_sequence_paths(log: &ChangeLog) -> Vec<InteractionPath> {
    group_by(log, |r| r.class_id.as_str())
        .into_iter()
        .filter_map(|(class, events)| {
            let items: Vec<Keyed<&str>> = events
                .iter()
                .map(|r| (r.user.clone(), Some(r.user.as_str())))
                .collect();
            finish(class, PathKind::UserSequence, items, RunCap::One)
        })
        .collect()
}

/// One path per user of `level-{depth}` labels; same-class runs capped at two.
pub fn build_depth_paths(
    log: &ChangeLog,
    g: &HierarchyGraph,
    cfg: &SessionConfig,
) -> Result<Vec<InteractionPath>, PathError> {
    check_classes(log, g)?;
    let mut level_labels: BTreeMap<u32, String> = BTreeMap::new();
    Ok(user_view_paths(log, cfg, PathKind::DepthLevel, |r| {
        let idx = g.index_of(&r.class_id).expect("classes checked");
        let depth = g.depth_at(idx);
        let label = level_labels
            .entry(depth)
            .or_insert_with(|| format!("level-{depth}"))
            .clone();
        (label, idx)
    }))
}

/// One path per user of relationship labels between consecutively changed classes.
///
/// The first change of a user yields no label. A label following a session
/// break still relates the last class before the break to the first class
/// after it. Runs of `Self` are capped at two. A break that would open a
/// path (the user's first two changes are a session apart) is dropped so
/// that no path starts with `BREAK`; users with one change yield no path.
pub fn build_relationship_paths(
    log: &ChangeLog,
    g: &HierarchyGraph,
    cfg: &SessionConfig,
) -> Result<Vec<InteractionPath>, PathError> {
    check_classes(log, g)?;
    let paths = group_by(log, |r| r.user.as_str())
        .into_iter()
        .filter_map(|(user, events)| {
            let mut items: Vec<Keyed<usize>> = Vec::new();
            let mut prev: Option<usize> = None;
            let mut pending_break = false;
            for s in insert_breaks(&events, cfg) {
                let r = match s {
                    Sessioned::Break => {
                        pending_break = true;
                        continue;
                    }
                    Sessioned::Event(r) => r,
                };
                let cur = g.index_of(&r.class_id).expect("classes checked");
                if let Some(p) = prev {
                    if pending_break && !items.is_empty() {
                        items.push((cfg.break_label.clone(), None));
                    }
                    let label = g.classify_at(p, cur);
                    let key = (label == RelationshipLabel::Same).then_some(cur);
                    items.push((label.as_str().to_string(), key));
                }
                pending_break = false;
                prev = Some(cur);
            }
            finish(user, PathKind::Relationship, items, RunCap::Two)
        })
        .collect();
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyView {
    User,
    Class,
}

/// Property names per change, `no property` for non-property changes.
///
/// The user view is keyed on `(class, property)` and gets session breaks.
/// The class view is keyed on the property alone, regardless of user.
pub fn build_property_paths(
    log: &ChangeLog,
    view: PropertyView,
    cfg: &SessionConfig,
) -> Vec<InteractionPath> {
    fn label(r: &ChangeRecord) -> &str {
        r.property.as_deref().unwrap_or(NO_PROPERTY)
    }
    match view {
        PropertyView::User => user_view_paths(log, cfg, PathKind::PropertyUser, |r| {
            (label(r).to_string(), (r.class_id.as_str(), label(r)))
        }),
        PropertyView::Class => group_by(log, |r| r.class_id.as_str())
            .into_iter()
            .filter_map(|(class, events)| {
                let items: Vec<Keyed<&str>> = events
                    .iter()
                    .map(|r| (label(r).to_string(), Some(label(r))))
                    .collect();
                finish(class, PathKind::PropertyClass, items, RunCap::Two)
            })
            .collect(),
    }
}

/// One path per user of change-action labels, keyed on `(class, action)`.
pub fn build_action_paths(log: &ChangeLog, cfg: &SessionConfig) -> Vec<InteractionPath> {
    user_view_paths(log, cfg, PathKind::Action, |r| {
        (r.action.clone(), (r.class_id.as_str(), r.action.as_str()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::IngestConfig;
    use alloc::vec;
    use alloc::vec::Vec;

    fn rec(seq: u64, ts_secs: i64, user: &str, class: &str) -> ChangeRecord {
        ChangeRecord {
            seq,
            ts: ts_secs * 1000,
            user: user.into(),
            class_id: class.into(),
            action: "class_created".into(),
            property: None,
        }
    }

    fn log_of(records: Vec<ChangeRecord>) -> ChangeLog {
        ChangeLog::normalize(records, &IngestConfig::default(), "test").unwrap()
    }

    fn labels(p: &InteractionPath) -> Vec<&str> {
        p.labels.iter().map(String::as_str).collect()
    }

    fn tree() -> HierarchyGraph {
        HierarchyGraph::from_edges(
            [
                ("A", "R"),
                ("B", "R"),
                ("A1", "A"),
                ("A2", "A"),
                ("B1", "B"),
                ("B2", "B"),
                ("C1", "C"),
                ("C", "B1"),
                ("D", "C1"),
            ],
            None,
        )
        .unwrap()
    }

    fn break_positions(events: &[ChangeRecord], cfg: &SessionConfig) -> Vec<usize> {
        let refs: Vec<&ChangeRecord> = events.iter().collect();
        insert_breaks(&refs, cfg)
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Sessioned::Break))
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn breaks_follow_strict_threshold() {
        let cfg = SessionConfig::default();
        let ev = |gaps: &[i64]| {
            let mut t = 0;
            let mut v = vec![rec(0, 0, "u", "X")];
            for (i, g) in gaps.iter().enumerate() {
                t += g;
                v.push(rec(i as u64 + 1, t, "u", "X"));
            }
            v
        };
        assert!(break_positions(&ev(&[10, 20]), &cfg).is_empty());
        assert_eq!(break_positions(&ev(&[10, 301]), &cfg), vec![2]);
        assert!(break_positions(&ev(&[300]), &cfg).is_empty());
    }

    #[test]
    fn zero_threshold_rejected() {
        assert_eq!(
            SessionConfig::from_secs(0),
            Err(PathError::InvalidBreakThreshold)
        );
    }

    #[test]
    fn merge_runs_examples() {
        let users = vec!["A", "B", "B", "C"];
        assert_eq!(
            merge_runs(users, |u| Some(*u), RunCap::One),
            vec!["A", "B", "C"]
        );

        // (label, class) pairs: class A three times, then B, then C.
        let depth = vec![
            ("D3", "A"),
            ("D3", "A"),
            ("D3", "A"),
            ("D3", "B"),
            ("D4", "C"),
        ];
        let merged: Vec<&str> = merge_runs(depth, |(_, c)| Some(*c), RunCap::Two)
            .into_iter()
            .map(|(l, _)| l)
            .collect();
        assert_eq!(merged, vec!["D3", "D3", "D3", "D4"]);

        let props = vec!["title", "title", "title", "use"];
        assert_eq!(
            merge_runs(props, |p| Some(*p), RunCap::Two),
            vec!["title", "title", "use"]
        );
    }

    #[test]
    fn none_keys_never_merge() {
        let items = vec![1, 1, 1];
        assert_eq!(
            merge_runs(items, |_| None::<u8>, RunCap::One),
            vec![1, 1, 1]
        );
    }

    #[test]
    fn user_sequences() {
        let log = log_of(vec![
            rec(0, 1, "A", "k"),
            rec(1, 2, "B", "k"),
            rec(2, 3, "B", "k"),
            rec(3, 4, "C", "k"),
            rec(4, 5, "A", "once"),
            rec(5, 6, "A", "same"),
            rec(6, 7, "A", "same"),
            rec(7, 8, "A", "same"),
        ]);
        let paths = build_user_sequence_paths(&log);
        let owners: Vec<&str> = paths.iter().map(|p| p.owner.as_str()).collect();
        assert_eq!(owners, vec!["k", "once", "same"]);
        assert_eq!(labels(&paths[0]), vec!["A", "B", "C"]);
        assert_eq!(labels(&paths[1]), vec!["A"]);
        assert_eq!(labels(&paths[2]), vec!["A"]);
    }

    fn depth_graph() -> HierarchyGraph {
        // A and B at depth 3, C at depth 4, Z at depth 0.
        HierarchyGraph::from_edges(
            [
                ("P1", "Z"),
                ("P2", "P1"),
                ("A", "P2"),
                ("B", "P2"),
                ("C", "A"),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn depth_worked_example() {
        let g = depth_graph();
        let log = log_of(vec![
            rec(0, 0, "u", "A"),
            rec(1, 10, "u", "A"),
            rec(2, 20, "u", "A"),
            rec(3, 30, "u", "B"),
            rec(4, 40, "u", "C"),
        ]);
        let paths = build_depth_paths(&log, &g, &SessionConfig::default()).unwrap();
        assert_eq!(
            labels(&paths[0]),
            vec!["level-3", "level-3", "level-3", "level-4"]
        );
    }

    #[test]
    fn depth_single_root_change_and_break() {
        let g = depth_graph();
        let log = log_of(vec![rec(0, 0, "solo", "Z")]);
        let paths = build_depth_paths(&log, &g, &SessionConfig::default()).unwrap();
        assert_eq!(labels(&paths[0]), vec!["level-0"]);

        let log = log_of(vec![
            rec(0, 0, "u", "A"),
            rec(1, 10, "u", "A"),
            rec(2, 610, "u", "A"),
        ]);
        let paths = build_depth_paths(&log, &g, &SessionConfig::default()).unwrap();
        assert_eq!(
            labels(&paths[0]),
            vec!["level-3", "level-3", "BREAK", "level-3"]
        );
    }

    #[test]
    fn depth_unknown_classes_listed() {
        let g = depth_graph();
        let log = log_of(vec![
            rec(0, 0, "u", "A"),
            rec(1, 1, "u", "nope"),
            rec(2, 2, "v", "gone"),
        ]);
        match build_depth_paths(&log, &g, &SessionConfig::default()) {
            Err(PathError::UnknownClasses(list)) => {
                assert_eq!(list, vec![(1, "nope".to_string()), (2, "gone".to_string())]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn relationship_self_collapse() {
        let g = tree();
        let log = log_of((0..4).map(|i| rec(i, i as i64, "u", "A1")).collect());
        let paths = build_relationship_paths(&log, &g, &SessionConfig::default()).unwrap();
        assert_eq!(labels(&paths[0]), vec!["Self", "Self"]);
    }

    #[test]
    fn relationship_sibling_self_parent() {
        let g = tree();
        let log = log_of(vec![
            rec(0, 0, "u", "A1"),
            rec(1, 1, "u", "A2"),
            rec(2, 2, "u", "A2"),
            rec(3, 3, "u", "A"),
        ]);
        let paths = build_relationship_paths(&log, &g, &SessionConfig::default()).unwrap();
        assert_eq!(labels(&paths[0]), vec!["Sibling", "Self", "Parent"]);
    }

    #[test]
    fn relationship_across_break() {
        let g = tree();
        // The leading break is dropped; the cross-break relation is kept.
        let log = log_of(vec![rec(0, 0, "u", "A1"), rec(1, 1000, "u", "B1")]);
        let paths = build_relationship_paths(&log, &g, &SessionConfig::default()).unwrap();
        assert_eq!(labels(&paths[0]), vec!["Cousin"]);

        let log = log_of(vec![
            rec(0, 0, "u", "A1"),
            rec(1, 5, "u", "A2"),
            rec(2, 1000, "u", "D"),
        ]);
        let paths = build_relationship_paths(&log, &g, &SessionConfig::default()).unwrap();
        assert_eq!(labels(&paths[0]), vec!["Sibling", "BREAK", "Other"]);
    }

    #[test]
    fn relationship_single_change_dropped() {
        let g = tree();
        let log = log_of(vec![
            rec(0, 0, "u", "A1"),
            rec(1, 0, "v", "A1"),
            rec(2, 1, "v", "A"),
        ]);
        let paths = build_relationship_paths(&log, &g, &SessionConfig::default()).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].owner, "v");
    }

    /// Merging before labelling collapses the raw events and loses a `Self`.
    #[test]
    fn pipeline_order_matters() {
        let g = tree();
        let log = log_of((0..4).map(|i| rec(i, i as i64, "u", "A1")).collect());
        let correct = build_relationship_paths(&log, &g, &SessionConfig::default()).unwrap();

        let events: Vec<&ChangeRecord> = log.records().iter().collect();
        let merged_events = merge_runs(events, |r| Some(r.class_id.as_str()), RunCap::Two);
        let swapped: Vec<&str> = merged_events
            .windows(2)
            .map(|w| {
                g.classify_relationship(&w[0].class_id, &w[1].class_id)
                    .unwrap()
                    .as_str()
            })
            .collect();
        assert_eq!(labels(&correct[0]), vec!["Self", "Self"]);
        assert_eq!(swapped, vec!["Self"]);
    }

    fn prop(seq: u64, ts: i64, user: &str, class: &str, p: Option<&str>) -> ChangeRecord {
        let mut r = rec(seq, ts, user, class);
        if let Some(p) = p {
            r.action = "property_value_changed".into();
            r.property = Some(p.into());
        }
        r
    }

    #[test]
    fn property_class_view() {
        let log = log_of(vec![
            prop(0, 0, "a", "K", Some("title")),
            prop(1, 1, "b", "K", Some("title")),
            prop(2, 2, "a", "K", Some("title")),
            prop(3, 3, "c", "K", Some("use")),
            prop(4, 4, "c", "M", None),
        ]);
        let paths = build_property_paths(&log, PropertyView::Class, &SessionConfig::default());
        assert_eq!(labels(&paths[0]), vec!["title", "title", "use"]);
        assert_eq!(labels(&paths[1]), vec!["no property"]);
    }

    #[test]
    fn property_user_view_distinct_classes() {
        let log = log_of(vec![
            prop(0, 0, "a", "A", Some("title")),
            prop(1, 1, "a", "B", Some("title")),
        ]);
        let paths = build_property_paths(&log, PropertyView::User, &SessionConfig::default());
        assert_eq!(labels(&paths[0]), vec!["title", "title"]);
    }

    #[test]
    fn action_paths() {
        let act = |seq, ts, a: &str| {
            let mut r = rec(seq, ts, "u", "K");
            r.action = a.into();
            r
        };
        let cfg = SessionConfig::default();
        let log = log_of(vec![act(0, 0, "add"), act(1, 1, "add"), act(2, 2, "move")]);
        assert_eq!(
            labels(&build_action_paths(&log, &cfg)[0]),
            vec!["add", "add", "move"]
        );
        let log = log_of(vec![act(0, 0, "move")]);
        assert_eq!(labels(&build_action_paths(&log, &cfg)[0]), vec!["move"]);
        let log = log_of(vec![act(0, 0, "add"), act(1, 1000, "add")]);
        assert_eq!(
            labels(&build_action_paths(&log, &cfg)[0]),
            vec!["add", "BREAK", "add"]
        );
    }

    #[test]
    fn path_kind_round_trips_names() {
        for k in PathKind::ALL {
            assert_eq!(k.as_str().parse::<PathKind>().unwrap(), k);
        }
        assert!("nope".parse::<PathKind>().is_err());
    }

    #[test]
    fn interaction_path_rejects_empty() {
        assert!(InteractionPath::new("o", PathKind::Action, vec![]).is_err());
        assert!(InteractionPath::new("o", PathKind::Action, vec![String::new()]).is_err());
    }
}
