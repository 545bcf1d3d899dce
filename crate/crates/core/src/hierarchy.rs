//! The `isKindOf` hierarchy: depths, distances and relationship labels.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Name of the synthesized root when the input has several parentless classes.
pub const VIRTUAL_ROOT: &str = "__ROOT__";

/// Distance cap used by the relationship classifier's callers.
///
/// Only distances up to 4 affect labels; anything further is `Other`.
pub const DEFAULT_DISTANCE_CAP: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("cycle in isKindOf relation: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("root override {0:?} is not a class of the hierarchy")]
    UnknownRoot(String),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("{} classes are not reachable from root {root:?} (first: {first:?})", .count)]
    UnreachableFromRoot {
        root: String,
        first: String,
        count: usize,
    },
    #[error("hierarchy has no classes")]
    Empty,
}

/// Structural relation of the next-edited class relative to the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationshipLabel {
    Same,
    Child,
    Parent,
    Descendant,
    Ancestor,
    Sibling,
    Cousin,
    Other,
    /// Session boundary. Only the path builder emits it.
    Break,
}

impl RelationshipLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationshipLabel::Same => "Self",
            RelationshipLabel::Child => "Child",
            RelationshipLabel::Parent => "Parent",
            RelationshipLabel::Descendant => "Descendant",
            RelationshipLabel::Ancestor => "Ancestor",
            RelationshipLabel::Sibling => "Sibling",
            RelationshipLabel::Cousin => "Cousin",
            RelationshipLabel::Other => "Other",
            RelationshipLabel::Break => "BREAK",
        }
    }
}

impl fmt::Display for RelationshipLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ancestry between two classes, with the minimum number of edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectedRelation {
    /// `to` is reached from `from` by following parent edges.
    Up(u32),
    /// `to` is reached from `from` by following child edges.
    Down(u32),
    None,
}

/// Collects `child -> parent` edges before the graph is frozen.
#[derive(Debug, Default, Clone)]
pub struct HierarchyBuilder {
    index: BTreeMap<String, usize>,
    names: Vec<String>,
    parents: Vec<Vec<usize>>,
}

impl HierarchyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(id.to_string(), i);
        self.names.push(id.to_string());
        self.parents.push(Vec::new());
        i
    }

    pub fn add_edge(&mut self, child: &str, parent: &str) {
        let c = self.add_node(child);
        let p = self.add_node(parent);
        self.parents[c].push(p);
    }

    /// Freezes the graph, detecting cycles and computing BFS depths.
    ///
    /// Without an override, a single parentless class becomes the root; with
    /// several, [`VIRTUAL_ROOT`] is synthesized above all of them.
    pub fn build(mut self, root_override: Option<&str>) -> Result<HierarchyGraph, GraphError> {
        if self.names.is_empty() {
            return Err(GraphError::Empty);
        }
        for ps in &mut self.parents {
            ps.sort_unstable();
            ps.dedup();
        }
        if let Some(cycle) = find_cycle(&self.parents) {
            return Err(GraphError::CycleDetected(
                cycle.into_iter().map(|i| self.names[i].clone()).collect(),
            ));
        }

        let root = match root_override {
            Some(id) => *self
                .index
                .get(id)
                .ok_or_else(|| GraphError::UnknownRoot(id.to_string()))?,
            None => {
                let orphans: Vec<usize> = (0..self.names.len())
                    .filter(|&i| self.parents[i].is_empty())
                    .collect();
                if orphans.len() == 1 {
                    orphans[0]
                } else {
                    let root = self.add_node(VIRTUAL_ROOT);
                    for o in orphans {
                        self.parents[o].push(root);
                    }
                    root
                }
            }
        };

        let n = self.names.len();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }

        let mut depth = vec![u32::MAX; n];
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(node) = queue.pop_front() {
            for &c in &children[node] {
                if depth[c] == u32::MAX {
                    depth[c] = depth[node] + 1;
                    queue.push_back(c);
                }
            }
        }
        let unreachable: Vec<usize> = (0..n).filter(|&i| depth[i] == u32::MAX).collect();
        if let Some(&first) = unreachable.first() {
            return Err(GraphError::UnreachableFromRoot {
                root: self.names[root].clone(),
                first: self.names[first].clone(),
                count: unreachable.len(),
            });
        }

        Ok(HierarchyGraph {
            index: self.index,
            names: self.names,
            parents: self.parents,
            children,
            root,
            depth,
        })
    }
}

/// Iterative DFS over parent edges; returns the node sequence of a cycle.
fn find_cycle(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; parents.len()];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for start in 0..parents.len() {
        if color[start] != WHITE {
            continue;
        }
        color[start] = GRAY;
        stack.push((start, 0));
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&p) = parents[node].get(*next) {
                *next += 1;
                match color[p] {
                    WHITE => {
                        color[p] = GRAY;
                        stack.push((p, 0));
                    }
                    GRAY => {
                        let from = stack.iter().position(|&(n, _)| n == p).unwrap_or(0);
                        let mut cycle: Vec<usize> = stack[from..].iter().map(|&(n, _)| n).collect();
                        cycle.push(p);
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                color[node] = BLACK;
                stack.pop();
            }
        }
    }
    None
}

/// Immutable `isKindOf` graph with memoized depths.
#[derive(Debug, Clone)]
pub struct HierarchyGraph {
    index: BTreeMap<String, usize>,
    names: Vec<String>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    depth: Vec<u32>,
}

impl HierarchyGraph {
    /// Builds a graph from `(child, parent)` pairs.
    pub fn from_edges<'a, I>(edges: I, root_override: Option<&str>) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut b = HierarchyBuilder::new();
        for (c, p) in edges {
            b.add_edge(c, p);
        }
        b.build(root_override)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn root(&self) -> &str {
        &self.names[self.root]
    }

    pub fn class_ids(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn parents_of(&self, idx: usize) -> &[usize] {
        &self.parents[idx]
    }

    pub fn children_of(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    fn require(&self, id: &str) -> Result<usize, GraphError> {
        self.index_of(id)
            .ok_or_else(|| GraphError::UnknownClass(id.to_string()))
    }

    /// Length of the shortest path from the root.
    pub fn depth(&self, id: &str) -> Result<u32, GraphError> {
        Ok(self.depth[self.require(id)?])
    }

    pub fn depth_at(&self, idx: usize) -> u32 {
        self.depth[idx]
    }

    /// Shortest path length treating edges as undirected, if it is at most `cap`.
    pub fn undirected_distance(
        &self,
        a: &str,
        b: &str,
        cap: u32,
    ) -> Result<Option<u32>, GraphError> {
        Ok(self.distance_at(self.require(a)?, self.require(b)?, cap))
    }

    /// Bidirectional BFS bounded by `cap`, expanding the smaller frontier first.
    pub fn distance_at(&self, a: usize, b: usize, cap: u32) -> Option<u32> {
        if a == b {
            return Some(0);
        }
        struct Side {
            seen: BTreeMap<usize, u32>,
            frontier: Vec<usize>,
            level: u32,
        }
        let mut sides = [
            Side {
                seen: BTreeMap::from([(a, 0)]),
                frontier: vec![a],
                level: 0,
            },
            Side {
                seen: BTreeMap::from([(b, 0)]),
                frontier: vec![b],
                level: 0,
            },
        ];
        while sides[0].level + sides[1].level < cap
            && !sides[0].frontier.is_empty()
            && !sides[1].frontier.is_empty()
        {
            let (left, right) = sides.split_at_mut(1);
            let (this, other) = if left[0].frontier.len() <= right[0].frontier.len() {
                (&mut left[0], &right[0])
            } else {
                (&mut right[0], &left[0])
            };
            let next_level = this.level + 1;
            let mut next = Vec::new();
            let mut best: Option<u32> = None;
            for &node in &this.frontier {
                for &m in self.parents[node].iter().chain(&self.children[node]) {
                    if this.seen.contains_key(&m) {
                        continue;
                    }
                    this.seen.insert(m, next_level);
                    if let Some(&d) = other.seen.get(&m) {
                        let total = next_level + d;
                        best = Some(best.map_or(total, |b| b.min(total)));
                    }
                    next.push(m);
                }
            }
            if let Some(d) = best {
                return (d <= cap).then_some(d);
            }
            this.frontier = next;
            this.level = next_level;
        }
        None
    }

    pub fn directed_relation(&self, from: &str, to: &str) -> Result<DirectedRelation, GraphError> {
        Ok(self.directed_relation_at(self.require(from)?, self.require(to)?))
    }

    pub fn directed_relation_at(&self, from: usize, to: usize) -> DirectedRelation {
        if from == to {
            return DirectedRelation::None;
        }
        if let Some(d) = self.upward_distance(from, to) {
            return DirectedRelation::Up(d);
        }
        if let Some(d) = self.upward_distance(to, from) {
            return DirectedRelation::Down(d);
        }
        DirectedRelation::None
    }

    /// Minimum number of parent edges from `from` to `target`.
    fn upward_distance(&self, from: usize, target: usize) -> Option<u32> {
        let mut seen = BTreeSet::from([from]);
        let mut frontier = vec![from];
        let mut level = 0;
        while !frontier.is_empty() {
            level += 1;
            let mut next = Vec::new();
            for &node in &frontier {
                for &p in &self.parents[node] {
                    if p == target {
                        return Some(level);
                    }
                    if seen.insert(p) {
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        None
    }

    /// Labels the relation of `next` with respect to `prev`.
    ///
    /// Rules apply in order: identity, directed ancestry, sibling (same depth,
    /// shared parent, distance 2), cousin (same depth, shared grandparent, no
    /// shared parent, distance 4), otherwise `Other`.
    pub fn classify_relationship(
        &self,
        prev: &str,
        next: &str,
    ) -> Result<RelationshipLabel, GraphError> {
        Ok(self.classify_at(self.require(prev)?, self.require(next)?))
    }

    pub fn classify_at(&self, prev: usize, next: usize) -> RelationshipLabel {
        if prev == next {
            return RelationshipLabel::Same;
        }
        match self.directed_relation_at(prev, next) {
            DirectedRelation::Down(1) => return RelationshipLabel::Child,
            DirectedRelation::Down(_) => return RelationshipLabel::Descendant,
            DirectedRelation::Up(1) => return RelationshipLabel::Parent,
            DirectedRelation::Up(_) => return RelationshipLabel::Ancestor,
            DirectedRelation::None => {}
        }
        if self.depth[prev] != self.depth[next] {
            return RelationshipLabel::Other;
        }
        let shared_parent = sorted_intersects(&self.parents[prev], &self.parents[next]);
        if shared_parent {
            if self.distance_at(prev, next, 2) == Some(2) {
                return RelationshipLabel::Sibling;
            }
            return RelationshipLabel::Other;
        }
        let gp_prev = self.grandparents(prev);
        let gp_next = self.grandparents(next);
        if sorted_intersects(&gp_prev, &gp_next) && self.distance_at(prev, next, 4) == Some(4) {
            return RelationshipLabel::Cousin;
        }
        RelationshipLabel::Other
    }

    fn grandparents(&self, idx: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.parents[idx]
            .iter()
            .flat_map(|&p| self.parents[p].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn sorted_intersects(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => return true,
        }
    }
    false
}
