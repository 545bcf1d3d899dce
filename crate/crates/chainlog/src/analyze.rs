//! End-to-end analysis: log -> paths -> model -> exports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chainlog_core::{
    build_action_paths, build_depth_paths, build_property_paths, build_relationship_paths,
    build_user_sequence_paths, state_histogram, ChangeLog, ContributionDistribution,
    HierarchyGraph, IngestConfig, InteractionPath, MetricsError, PathKind, PropertyView,
    SessionConfig, TransitionModel,
};

use crate::error::{Error, Result};
use crate::export::{export_histogram_csv, export_matrix_csv, MatrixValues};
use crate::heatmap::{min_count_filter, write_heatmap_svg};
use crate::hierarchy_io::load_hierarchy;
use crate::ingest::{parse_changelog, LogFormat};
use crate::model_io::save_model;
use crate::report::{export_report_json, top_transitions, Report, TOP_TRANSITIONS};

/// Action label marking a class move in the change log.
pub const MOVE_ACTION: &str = "class_moved";

pub const MATRIX_FILE: &str = "matrix.csv";
pub const COUNTS_FILE: &str = "counts.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const REPORT_FILE: &str = "report.json";
pub const HEATMAP_FILE: &str = "heatmap.svg";
pub const MODEL_FILE: &str = "model.json";

/// Distribution the entropy and Gini figures are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropySource {
    /// Raw change counts per user in the filtered log.
    #[default]
    UserChanges,
    /// Label occurrences in the built paths.
    PathStates,
}

impl EntropySource {
    pub fn as_str(self) -> &'static str {
        match self {
            EntropySource::UserChanges => "user-changes",
            EntropySource::PathStates => "path-states",
        }
    }
}

impl FromStr for EntropySource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "user-changes" => Ok(EntropySource::UserChanges),
            "path-states" => Ok(EntropySource::PathStates),
            other => Err(format!("unknown entropy source {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub log_path: PathBuf,
    /// Inferred from the file extension when absent.
    pub log_format: Option<LogFormat>,
    pub hierarchy_path: Option<PathBuf>,
    pub root_override: Option<String>,
    pub path_kind: PathKind,
    pub order: usize,
    pub alpha: f64,
    pub break_secs: u64,
    /// Figure-only filter; never affects the model or the report metrics.
    pub min_user_changes: u64,
    pub ingest: IngestConfig,
    pub entropy_source: EntropySource,
    pub out_dir: PathBuf,
}

impl AnalysisConfig {
    pub fn new(
        log_path: impl Into<PathBuf>,
        path_kind: PathKind,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        AnalysisConfig {
            log_path: log_path.into(),
            log_format: None,
            hierarchy_path: None,
            root_override: None,
            path_kind,
            order: 1,
            alpha: 0.0,
            break_secs: 300,
            min_user_changes: 0,
            ingest: IngestConfig::default(),
            entropy_source: EntropySource::default(),
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (
            self.path_kind.needs_hierarchy(),
            self.hierarchy_path.is_some(),
        ) {
            (true, false) => {
                return Err(Error::Config(format!(
                    "--kind {} requires --hierarchy",
                    self.path_kind
                )))
            }
            (false, true) => {
                return Err(Error::Config(format!(
                    "--kind {} does not use a hierarchy",
                    self.path_kind
                )))
            }
            _ => {}
        }
        if self.order == 0 {
            return Err(Error::Config("order must be at least 1".into()));
        }
        if self.break_secs == 0 {
            return Err(Error::Config("break threshold must be positive".into()));
        }
        Ok(())
    }

    fn format(&self) -> LogFormat {
        self.log_format
            .unwrap_or_else(|| LogFormat::from_extension(&self.log_path))
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisBundle {
    pub paths: Vec<InteractionPath>,
    pub model: TransitionModel,
    pub histogram: ContributionDistribution,
    pub user_changes: BTreeMap<String, u64>,
    pub report: Report,
    pub outputs: Vec<PathBuf>,
}

/// Builds the paths of one kind. Structural kinds need the hierarchy.
pub fn build_paths(
    kind: PathKind,
    log: &ChangeLog,
    hierarchy: Option<&HierarchyGraph>,
    session: &SessionConfig,
) -> Result<Vec<InteractionPath>> {
    let need =
        || hierarchy.ok_or_else(|| Error::Config(format!("path kind {kind} needs a hierarchy")));
    Ok(match kind {
        PathKind::UserSequence => build_user_sequence_paths(log),
        PathKind::DepthLevel => build_depth_paths(log, need()?, session)?,
        PathKind::Relationship => build_relationship_paths(log, need()?, session)?,
        PathKind::PropertyUser => build_property_paths(log, PropertyView::User, session),
        PathKind::PropertyClass => build_property_paths(log, PropertyView::Class, session),
        PathKind::Action => build_action_paths(log, session),
    })
}

fn metric(result: std::result::Result<f64, MetricsError>) -> Result<Option<f64>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(MetricsError::DegenerateDistribution(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Runs the whole pipeline and writes every artifact into `cfg.out_dir`.
pub fn run_analyze(cfg: &AnalysisConfig) -> Result<AnalysisBundle> {
    cfg.validate()?;
    let mut ingest = cfg.ingest.clone();
    ingest.min_user_changes = cfg.min_user_changes;
    let log = parse_changelog(&cfg.log_path, cfg.format(), &ingest)?;
    let hierarchy = cfg
        .hierarchy_path
        .as_deref()
        .map(|p| load_hierarchy(p, cfg.root_override.as_deref()))
        .transpose()?;
    let session = SessionConfig::from_secs(cfg.break_secs)?;

    let paths = build_paths(cfg.path_kind, &log, hierarchy.as_ref(), &session)?;
    let model = TransitionModel::fit(&paths, cfg.order, cfg.alpha)?;
    let histogram = state_histogram(&paths)?;
    let user_changes = log.user_change_counts();

    let inequality = match cfg.entropy_source {
        EntropySource::UserChanges => ContributionDistribution::new(user_changes.clone())?,
        EntropySource::PathStates => histogram.clone(),
    };
    let break_count = paths
        .iter()
        .flat_map(|p| &p.labels)
        .filter(|l| **l == session.break_label)
        .count() as u64;

    let report = Report {
        path_kind: cfg.path_kind.as_str().to_string(),
        order: cfg.order,
        alpha: cfg.alpha,
        source_digest: log.source_digest().to_string(),
        n_paths: paths.len(),
        n_states: model.states().len(),
        n_transitions: model.n_transitions(),
        normalized_entropy: metric(inequality.normalized_entropy())?,
        gini: metric(inequality.gini_coefficient())?,
        entropy_source: cfg.entropy_source.as_str().to_string(),
        top_transitions: top_transitions(&model, TOP_TRANSITIONS),
        break_count,
        moved_before_changed: log.moved_before_changed(MOVE_ACTION),
    };

    fs::create_dir_all(&cfg.out_dir).map_err(Error::io(&cfg.out_dir))?;
    let out = |name: &str| cfg.out_dir.join(name);
    export_matrix_csv(&model, MatrixValues::Probs, &out(MATRIX_FILE))?;
    export_matrix_csv(&model, MatrixValues::Counts, &out(COUNTS_FILE))?;
    export_histogram_csv(&histogram, &out(HISTOGRAM_FILE))?;
    export_report_json(&report, &out(REPORT_FILE))?;
    save_model(&model, &out(MODEL_FILE))?;

    // Users are filtered by their raw changes; other states by their path frequency.
    let render_counts = match cfg.path_kind {
        PathKind::UserSequence => &user_changes,
        _ => histogram.entries(),
    };
    write_heatmap_svg(
        &model,
        min_count_filter(render_counts, cfg.min_user_changes),
        &out(HEATMAP_FILE),
    )?;

    let outputs = [
        MATRIX_FILE,
        COUNTS_FILE,
        HISTOGRAM_FILE,
        REPORT_FILE,
        HEATMAP_FILE,
        MODEL_FILE,
    ]
    .iter()
    .map(|n| out(n))
    .collect();
    Ok(AnalysisBundle {
        paths,
        model,
        histogram,
        user_changes,
        report,
        outputs,
    })
}

/// Convenience for callers that only have a log path on disk.
pub fn load_log(
    path: &Path,
    format: Option<LogFormat>,
    ingest: &IngestConfig,
) -> Result<ChangeLog> {
    parse_changelog(
        path,
        format.unwrap_or_else(|| LogFormat::from_extension(path)),
        ingest,
    )
}
