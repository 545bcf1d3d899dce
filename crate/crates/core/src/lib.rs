//! Sequential interaction path mining over collaborative ontology change logs.
//!
//! The crate turns a chronologically ordered stream of [`ChangeRecord`]s into
//! label sequences ("interaction paths") and fits Markov chain models of
//! arbitrary order over them:
//!
//! * [`record`] holds the canonical change event types, normalization (bot
//!   filtering, stable chronological ordering, username obfuscation) and the
//!   structural validation report.
//! * [`hierarchy`] holds the `isKindOf` graph with depth, distance and
//!   relationship classification queries.
//! * [`paths`] builds the path families (user sequences, depth levels,
//!   hierarchical relationships, properties, change actions) including
//!   session `BREAK` insertion and run merging.
//! * [`markov`] fits transition models, answers probability and top-k
//!   queries, samples synthetic paths and scores log-likelihood.
//! * [`metrics`] computes histograms, normalized Shannon entropy and the
//!   Gini coefficient.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, exports and
//! the command-line front end live in the `chainlog` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod hierarchy;
pub mod markov;
pub mod metrics;
pub mod paths;
pub mod record;

pub use hierarchy::{
    DirectedRelation, GraphError, HierarchyBuilder, HierarchyGraph, RelationshipLabel,
    DEFAULT_DISTANCE_CAP, VIRTUAL_ROOT,
};
pub use markov::{
    expand_order, tuple_label, LogLikelihood, ModelError, StartDistribution, StateSpace,
    TransitionModel,
};
pub use metrics::{state_histogram, ContributionDistribution, MetricsError};
pub use paths::{
    build_action_paths, build_depth_paths, build_property_paths, build_relationship_paths,
    build_user_sequence_paths, insert_breaks, merge_runs, InteractionPath, PathError, PathKind,
    PropertyView, RunCap, SessionConfig, Sessioned, BREAK, NO_PROPERTY,
};
pub use record::{
    validate_changelog, ChangeLog, ChangeRecord, CheckKind, CheckOutcome, IngestConfig,
    IngestError, ValidationReport,
};
