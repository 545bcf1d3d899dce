use std::collections::BTreeMap;

use chainlog_core::{
    build_depth_paths, build_relationship_paths, build_user_sequence_paths, expand_order,
    insert_breaks, merge_runs, tuple_label, ChangeLog, ChangeRecord, ContributionDistribution,
    HierarchyGraph, IngestConfig, InteractionPath, PathKind, RelationshipLabel, RunCap,
    SessionConfig, Sessioned, TransitionModel,
};
use proptest::prelude::*;

fn record(seq: u64, ts: i64, user: &str, class: &str) -> ChangeRecord {
    ChangeRecord {
        seq,
        ts,
        user: user.to_string(),
        class_id: class.to_string(),
        action: "class_created".to_string(),
        property: None,
    }
}

fn to_paths(raw: &[Vec<u8>]) -> Vec<InteractionPath> {
    raw.iter()
        .enumerate()
        .map(|(i, p)| InteractionPath {
            owner: format!("p{i}"),
            kind: PathKind::Action,
            labels: p.iter().map(|s| format!("s{s}")).collect(),
        })
        .collect()
}

/// Tree given as `parent[i] < i + 1` for node `i + 1`; node 0 is the root.
fn tree_from_parents(parents: &[usize]) -> HierarchyGraph {
    let names: Vec<String> = (0..=parents.len()).map(|i| format!("n{i:02}")).collect();
    let edges: Vec<(&str, &str)> = parents
        .iter()
        .enumerate()
        .map(|(i, &p)| (names[i + 1].as_str(), names[p].as_str()))
        .collect();
    HierarchyGraph::from_edges(edges, None).unwrap()
}

fn tree_strategy() -> impl Strategy<Value = Vec<usize>> {
    (1usize..20).prop_flat_map(|n| (0..n).map(|i| 0..=i).collect::<Vec<_>>())
}

/// Shortest root path length by exhaustive enumeration of upward walks.
fn enumerate_depth(g: &HierarchyGraph, idx: usize) -> u32 {
    if g.parents_of(idx).is_empty() {
        return 0;
    }
    g.parents_of(idx)
        .iter()
        .map(|&p| 1 + enumerate_depth(g, p))
        .min()
        .unwrap()
}

proptest! {
    #[test]
    fn merge_runs_idempotent_and_bounded(labels in prop::collection::vec(0u8..4, 0..60), two in any::<bool>()) {
        let cap = if two { RunCap::Two } else { RunCap::One };
        let once = merge_runs(labels.clone(), |l| Some(*l), cap);
        let twice = merge_runs(once.clone(), |l| Some(*l), cap);
        prop_assert_eq!(&once, &twice);
        let mut run = 0;
        for (i, l) in once.iter().enumerate() {
            run = if i > 0 && once[i - 1] == *l { run + 1 } else { 1 };
            prop_assert!(run <= cap.get());
        }
        // Short runs survive untouched: the distinct-run sequence is preserved.
        let mut a = labels.clone();
        a.dedup();
        let mut b = once.clone();
        b.dedup();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn break_count_matches_gaps(gaps in prop::collection::vec(0i64..700_000, 0..40)) {
        let mut ts = 0;
        let mut events = vec![record(0, 0, "u", "X")];
        for (i, g) in gaps.iter().enumerate() {
            ts += g;
            events.push(record(i as u64 + 1, ts, "u", "X"));
        }
        let refs: Vec<&ChangeRecord> = events.iter().collect();
        let cfg = SessionConfig::default();
        let out = insert_breaks(&refs, &cfg);
        let expected = gaps.iter().filter(|&&g| g > 300_000).count();
        let breaks = out.iter().filter(|s| matches!(s, Sessioned::Break)).count();
        prop_assert_eq!(breaks, expected);
        prop_assert!(matches!(out.first(), Some(Sessioned::Event(_))));
        prop_assert!(matches!(out.last(), Some(Sessioned::Event(_))));
        prop_assert!(out.windows(2).all(|w| !(matches!(w[0], Sessioned::Break) && matches!(w[1], Sessioned::Break))));
    }

    #[test]
    fn depth_matches_enumeration(parents in tree_strategy(), extra in prop::collection::vec((1usize..20, 0usize..20), 0..6)) {
        // Extra edges always point to a lower-numbered node, so the graph stays acyclic.
        let n = parents.len() + 1;
        let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
        let mut edges: Vec<(&str, &str)> = parents
            .iter()
            .enumerate()
            .map(|(i, &p)| (names[i + 1].as_str(), names[p].as_str()))
            .collect();
        for (c, p) in extra {
            if c < n && p < c {
                edges.push((names[c].as_str(), names[p].as_str()));
            }
        }
        let g = HierarchyGraph::from_edges(edges, None).unwrap();
        for idx in 0..g.len() {
            prop_assert_eq!(g.depth_at(idx), enumerate_depth(&g, idx));
        }
    }

    #[test]
    fn classifier_symmetries(parents in tree_strategy()) {
        let g = tree_from_parents(&parents);
        for a in 0..g.len() {
            for b in 0..g.len() {
                let ab = g.classify_at(a, b);
                let ba = g.classify_at(b, a);
                let expected = match ab {
                    RelationshipLabel::Child => RelationshipLabel::Parent,
                    RelationshipLabel::Parent => RelationshipLabel::Child,
                    RelationshipLabel::Descendant => RelationshipLabel::Ancestor,
                    RelationshipLabel::Ancestor => RelationshipLabel::Descendant,
                    other => other,
                };
                prop_assert_eq!(ba, expected);
                prop_assert_ne!(ab, RelationshipLabel::Break);
            }
        }
    }

    #[test]
    fn bidirectional_distance_matches_plain_bfs(parents in tree_strategy(), cap in 1u32..8) {
        let g = tree_from_parents(&parents);
        for a in 0..g.len() {
            let mut dist = vec![u32::MAX; g.len()];
            dist[a] = 0;
            let mut queue = std::collections::VecDeque::from([a]);
            while let Some(x) = queue.pop_front() {
                for &y in g.parents_of(x).iter().chain(g.children_of(x)) {
                    if dist[y] == u32::MAX {
                        dist[y] = dist[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            for (b, &d) in dist.iter().enumerate() {
                let expected = (d <= cap).then_some(d);
                prop_assert_eq!(g.distance_at(a, b, cap), expected);
            }
        }
    }

    #[test]
    fn fit_conserves_counts_and_ignores_order(
        raw in prop::collection::vec(prop::collection::vec(0u8..5, 1..15), 1..12),
        order in 1usize..3,
    ) {
        let paths = to_paths(&raw);
        let expected: usize = paths.iter().map(|p| p.len().saturating_sub(order)).sum();
        match TransitionModel::fit(&paths, order, 0.0) {
            Ok(m) => {
                prop_assert_eq!(m.n_transitions() as usize, expected);
                let mut reversed = paths.clone();
                reversed.reverse();
                let m2 = TransitionModel::fit(&reversed, order, 0.0).unwrap();
                prop_assert_eq!(m, m2);
            }
            Err(_) => prop_assert_eq!(expected, 0),
        }
    }

    #[test]
    fn expansion_equals_direct_fit(raw in prop::collection::vec(prop::collection::vec(0u8..4, 3..20), 1..10)) {
        let paths = to_paths(&raw);
        let direct = TransitionModel::fit(&paths, 2, 0.0).unwrap();
        let expanded = TransitionModel::fit(&expand_order(&paths, 2), 1, 0.0).unwrap();
        for row in 0..direct.histories().len() {
            let h = direct.history_labels(row);
            let er = expanded.find_history(&[tuple_label(&h)]).unwrap().unwrap();
            for &(s, c) in direct.row_counts(row) {
                let next = tuple_label(&[h[1], direct.states().label(s)]);
                let ns = expanded.states().index_of(&next).unwrap();
                prop_assert_eq!(expanded.count_at(er, ns), c);
            }
            prop_assert_eq!(expanded.row_total(er), direct.row_total(row));
        }
        prop_assert_eq!(expanded.n_transitions(), direct.n_transitions());
    }

    #[test]
    fn metrics_invariances(counts in prop::collection::vec(0u64..50, 2..12), scale in 1u64..20, rot in 0usize..12) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let d = |v: &[u64]| ContributionDistribution::from_counts(v.iter().enumerate().map(|(i, &c)| (format!("u{i:02}"), c))).unwrap();
        let base = d(&counts);
        let scaled: Vec<u64> = counts.iter().map(|c| c * scale).collect();
        let mut rotated = counts.clone();
        rotated.rotate_left(rot % counts.len());
        for other in [d(&scaled), d(&rotated)] {
            prop_assert!((base.normalized_entropy().unwrap() - other.normalized_entropy().unwrap()).abs() < 1e-12);
            prop_assert!((base.gini_coefficient().unwrap() - other.gini_coefficient().unwrap()).abs() < 1e-12);
        }
        let n = counts.len() as f64;
        let sum: f64 = counts.iter().map(|&c| c as f64).sum();
        let mut pairwise = 0.0;
        for &a in &counts {
            for &b in &counts {
                pairwise += (a as f64 - b as f64).abs();
            }
        }
        prop_assert!((base.gini_coefficient().unwrap() - pairwise / (2.0 * n * sum)).abs() < 1e-12);
        let h = base.normalized_entropy().unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
    }

    #[test]
    fn user_sequence_counts_match_recount(events in prop::collection::vec((0u8..4, 0u8..5), 1..80)) {
        let records: Vec<ChangeRecord> = events
            .iter()
            .enumerate()
            .map(|(i, (u, c))| record(i as u64, i as i64, &format!("user{u}"), &format!("class{c}")))
            .collect();
        let log = ChangeLog::normalize(records, &IngestConfig::default(), "x").unwrap();
        let paths = build_user_sequence_paths(&log);
        for p in &paths {
            prop_assert!(p.labels.windows(2).all(|w| w[0] != w[1]));
        }
        let mut brute: BTreeMap<(String, String), u64> = BTreeMap::new();
        for p in &paths {
            for w in p.labels.windows(2) {
                *brute.entry((w[0].clone(), w[1].clone())).or_default() += 1;
            }
        }
        match TransitionModel::fit(&paths, 1, 0.0) {
            Ok(m) => {
                let mut fitted = BTreeMap::new();
                for row in 0..m.histories().len() {
                    let from = m.history_labels(row)[0].to_string();
                    for &(s, c) in m.row_counts(row) {
                        fitted.insert((from.clone(), m.states().label(s).to_string()), c);
                    }
                }
                prop_assert_eq!(fitted, brute);
            }
            Err(_) => prop_assert!(brute.is_empty()),
        }
    }

    #[test]
    fn structural_paths_respect_break_placement(
        parents in tree_strategy(),
        events in prop::collection::vec((0u8..3, 0usize..20, 0i64..900), 1..60),
    ) {
        let g = tree_from_parents(&parents);
        let mut ts = 0;
        let records: Vec<ChangeRecord> = events
            .iter()
            .enumerate()
            .map(|(i, &(u, c, gap))| {
                ts += gap * 1000;
                record(i as u64, ts, &format!("u{u}"), g.name(c % g.len()))
            })
            .collect();
        let log = ChangeLog::normalize(records, &IngestConfig::default(), "x").unwrap();
        let cfg = SessionConfig::default();
        let depth = build_depth_paths(&log, &g, &cfg).unwrap();
        let rel = build_relationship_paths(&log, &g, &cfg).unwrap();
        for p in depth.iter().chain(&rel) {
            prop_assert!(!p.labels.is_empty());
            prop_assert_ne!(p.labels.first().unwrap(), "BREAK");
            prop_assert_ne!(p.labels.last().unwrap(), "BREAK");
            prop_assert!(p.labels.windows(2).all(|w| !(w[0] == "BREAK" && w[1] == "BREAK")));
            prop_assert!(p.labels.windows(3).all(|w| !(w[0] == w[1] && w[1] == w[2] && w[0] == "Self")));
        }
    }
}
