//! Evaluation metrics, permutation feature importance, the ordering-method
//! ablation study and the observation-target rule.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{build_dataset, split, Dataset};
use crate::error::{Error, Result};
use crate::neuralnet::{argmax, train, DenseNetwork, Task, TrainConfig, TrainReport, TrainTargets};
use crate::ordering::OrderingMethod;
use crate::seed;
use crate::state::{Flavor, WorldState, TEAM_SIZE};
use crate::synthgen::KickEvent;
use crate::target::{PredictionTarget, TargetKind, TargetValue};

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::WidthMismatch { expected: b, found: a });
    }
    if a == 0 {
        return Err(Error::Empty("predictions"));
    }
    Ok(())
}

/// Percentage of predictions equal to their label.
pub fn classification_accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    check_lengths(predictions.len(), labels.len())?;
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(100.0 * hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionError {
    pub mae: f64,
    pub rmse: f64,
}

/// Mean and root-mean-square of the per-sample Euclidean error.
pub fn regression_error(predictions: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<RegressionError> {
    check_lengths(predictions.len(), labels.len())?;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (p, l) in predictions.iter().zip(labels) {
        if p.len() != l.len() {
            return Err(Error::WidthMismatch { expected: l.len(), found: p.len() });
        }
        let e2: f64 = p.iter().zip(l).map(|(a, b)| (a - b) * (a - b)).sum();
        abs += e2.sqrt();
        sq += e2;
    }
    let n = labels.len() as f64;
    Ok(RegressionError { mae: abs / n, rmse: (sq / n).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub our_goals: u32,
    pub their_goals: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchMetrics {
    pub matches: usize,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub win_rate: f64,
    /// Draws count as half a win.
    pub expected_win_rate: f64,
    pub avg_goals_for: f64,
    pub avg_goals_against: f64,
}

pub fn match_metrics(records: &[MatchRecord]) -> Result<MatchMetrics> {
    if records.is_empty() {
        return Err(Error::Empty("match records"));
    }
    let n = records.len();
    let wins = records.iter().filter(|r| r.our_goals > r.their_goals).count();
    let draws = records.iter().filter(|r| r.our_goals == r.their_goals).count();
    let nf = n as f64;
    Ok(MatchMetrics {
        matches: n,
        wins,
        draws,
        losses: n - wins - draws,
        win_rate: 100.0 * wins as f64 / nf,
        expected_win_rate: 100.0 * (wins as f64 + 0.5 * draws as f64) / nf,
        avg_goals_for: records.iter().map(|r| f64::from(r.our_goals)).sum::<f64>() / nf,
        avg_goals_against: records.iter().map(|r| f64::from(r.their_goals)).sum::<f64>() / nf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnImportance {
    pub column: usize,
    pub name: String,
    /// Mean accuracy drop in percentage points.
    pub mean_drop: f64,
    /// Population standard deviation of the drop across repeats.
    pub std: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub baseline_accuracy: f64,
    pub repeats: usize,
    pub seed: u64,
    /// In column order.
    pub columns: Vec<ColumnImportance>,
}

impl ImportanceReport {
    /// Columns sorted by rank.
    pub fn ranked(&self) -> Vec<&ColumnImportance> {
        let mut v: Vec<&ColumnImportance> = self.columns.iter().collect();
        v.sort_by_key(|c| c.rank);
        v
    }

    pub fn to_text(&self, top: usize) -> String {
        let mut out = format!("baseline accuracy {:.2}% over {} repeats\n", self.baseline_accuracy, self.repeats);
        writeln!(out, "{:>5}  {:<32} {:>10} {:>8}", "rank", "column", "drop", "std").unwrap();
        for c in self.ranked().into_iter().take(top) {
            writeln!(out, "{:>5}  {:<32} {:>10.4} {:>8.4}", c.rank, c.name, c.mean_drop, c.std).unwrap();
        }
        out
    }
}

/// Output of the layers after the first, given first-layer pre-activations.
fn classify_from_first(net: &DenseNetwork, z0: &[f64], buf: &mut Vec<f64>) -> usize {
    buf.clear();
    buf.extend_from_slice(z0);
    let first = &net.layers[0];
    if first.activation == crate::neuralnet::Activation::Relu {
        buf.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let mut x = std::mem::take(buf);
    for l in &net.layers[1..] {
        x = l.forward(&x);
    }
    let class = argmax(&x);
    *buf = x;
    class
}

/// Accuracy drop caused by shuffling each input column, averaged over
/// `repeats` seeded shuffles.
///
/// Shuffles are applied in standardized input space, where only the first
/// layer's pre-activations change, so those are updated incrementally.
pub fn permutation_importance(
    net: &DenseNetwork,
    inputs: &[Vec<f64>],
    labels: &[usize],
    column_names: Option<&[String]>,
    repeats: usize,
    seed_value: u64,
) -> Result<ImportanceReport> {
    if !matches!(net.task, Task::Classification(_)) {
        return Err(Error::InvalidConfig("permutation importance needs a classification model".into()));
    }
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    check_lengths(inputs.len(), labels.len())?;
    let width = net.input_width();
    if let Some(names) = column_names {
        if names.len() != width {
            return Err(Error::WidthMismatch { expected: width, found: names.len() });
        }
    }
    let xs: Vec<Vec<f64>> = inputs.iter().map(|r| net.standardize(r)).collect::<Result<_>>()?;
    let first = &net.layers[0];
    let z0: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|x| {
            let mut z = vec![0.0; first.out_dim];
            first.affine(x, &mut z);
            z
        })
        .collect();
    let n = xs.len();
    let accuracy = |hits: usize| 100.0 * hits as f64 / n as f64;
    let baseline_hits = z0
        .iter()
        .zip(labels)
        .filter(|(z, l)| classify_from_first(net, z, &mut Vec::new()) == **l)
        .count();
    let baseline = accuracy(baseline_hits);

    let drops: Vec<Vec<f64>> = (0..width)
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = (0..first.out_dim).map(|o| first.weights[o * width + j]).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut z = vec![0.0; first.out_dim];
            let mut buf = Vec::new();
            (0..repeats)
                .map(|r| {
                    perm.iter_mut().enumerate().for_each(|(i, p)| *p = i);
                    perm.shuffle(&mut seed::derived_rng(seed_value, &[j as u64, r as u64]));
                    let mut hits = 0;
                    for i in 0..n {
                        let delta = xs[perm[i]][j] - xs[i][j];
                        z.copy_from_slice(&z0[i]);
                        if delta != 0.0 {
                            crate::neuralnet::axpy(&mut z, delta, &column);
                        }
                        hits += usize::from(classify_from_first(net, &z, &mut buf) == labels[i]);
                    }
                    baseline - accuracy(hits)
                })
                .collect()
        })
        .collect();

    let mut columns: Vec<ColumnImportance> = drops
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let mean = d.iter().sum::<f64>() / repeats as f64;
            let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / repeats as f64;
            ColumnImportance {
                column: j,
                name: column_names.map_or_else(|| format!("c{j}"), |names| names[j].clone()),
                mean_drop: mean,
                std: var.sqrt(),
                rank: 0,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&a, &b| columns[b].mean_drop.total_cmp(&columns[a].mean_drop).then(a.cmp(&b)));
    for (r, j) in order.into_iter().enumerate() {
        columns[j].rank = r + 1;
    }
    Ok(ImportanceReport { baseline_accuracy: baseline, repeats, seed: seed_value, columns })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CellMetric {
    /// Test accuracy in percent.
    Accuracy { percent: f64 },
    /// Test error in target units.
    Error { mae: f64, rmse: f64 },
}

impl CellMetric {
    /// Accuracy percent or MAE.
    pub fn headline(&self) -> f64 {
        match self {
            CellMetric::Accuracy { percent } => *percent,
            CellMetric::Error { mae, .. } => *mae,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub target: PredictionTarget,
    pub method: OrderingMethod,
    pub metric: CellMetric,
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub targets: Vec<PredictionTarget>,
    pub methods: Vec<OrderingMethod>,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub feature_flavor: Flavor,
    pub train: TrainConfig,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            targets: PredictionTarget::ALL.to_vec(),
            methods: OrderingMethod::ALL.to_vec(),
            train_fraction: 0.8,
            split_seed: 0,
            feature_flavor: Flavor::Noisy,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub targets: Vec<PredictionTarget>,
    pub methods: Vec<OrderingMethod>,
    pub n_events: usize,
    pub config: AblationConfig,
    /// Row-major: targets × methods.
    pub cells: Vec<AblationCell>,
}

impl AblationReport {
    pub fn cell(&self, target: PredictionTarget, method: OrderingMethod) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.target == target && c.method == method)
    }

    pub fn is_complete(&self) -> bool {
        self.cells.len() == self.targets.len() * self.methods.len()
            && self
                .targets
                .iter()
                .all(|t| self.methods.iter().all(|m| self.cell(*t, *m).is_some()))
    }

    /// Targets as rows and methods as columns; accuracies in percent, errors
    /// as `MAE/RMSE`.
    pub fn to_text(&self) -> String {
        let width = 13;
        let mut out = format!("{:<16}", "target");
        for m in &self.methods {
            write!(out, "{:>width$}", m.name()).unwrap();
        }
        out.push('\n');
        for t in &self.targets {
            write!(out, "{:<16}", t.name()).unwrap();
            for m in &self.methods {
                let text = match self.cell(*t, *m).map(|c| c.metric) {
                    Some(CellMetric::Accuracy { percent }) => format!("{percent:.2}%"),
                    Some(CellMetric::Error { mae, rmse }) => format!("{mae:.2}/{rmse:.2}"),
                    None => "-".into(),
                };
                write!(out, "{text:>width$}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Rows of `ds` that belong to `target`, as model inputs and targets.
fn target_rows(ds: &Dataset, target: PredictionTarget) -> Result<(Vec<Vec<f64>>, TargetColumn)> {
    let (xs, ys): (Vec<Vec<f64>>, Vec<TargetValue>) = ds
        .rows
        .iter()
        .filter(|(_, l)| target.includes(l))
        .map(|(f, l)| (f.values.clone(), target.value(l)))
        .unzip();
    if xs.is_empty() {
        return Err(Error::Empty("rows for this target"));
    }
    let column = match target.kind() {
        TargetKind::Classification(n_classes) => TargetColumn::Classes {
            labels: ys
                .into_iter()
                .map(|v| match v {
                    TargetValue::Class(c) => c,
                    TargetValue::Values(_) => unreachable!("classification target"),
                })
                .collect(),
            n_classes,
        },
        TargetKind::Regression(width) => TargetColumn::Values {
            rows: ys
                .into_iter()
                .map(|v| match v {
                    TargetValue::Values(v) => v,
                    TargetValue::Class(_) => unreachable!("regression target"),
                })
                .collect(),
            width,
        },
    };
    Ok((xs, column))
}

/// Target values of the rows selected for one prediction target.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetColumn {
    Classes { labels: Vec<usize>, n_classes: usize },
    Values { rows: Vec<Vec<f64>>, width: usize },
}

impl TargetColumn {
    fn as_train_targets(&self) -> TrainTargets<'_> {
        match self {
            TargetColumn::Classes { labels, n_classes } => TrainTargets::Classes { labels, n_classes: *n_classes },
            TargetColumn::Values { rows, width } => TrainTargets::Values { rows, width: *width },
        }
    }
}

/// Model inputs and targets of the rows of `ds` that take part in `target`.
pub fn target_data(ds: &Dataset, target: PredictionTarget) -> Result<(Vec<Vec<f64>>, TargetColumn)> {
    target_rows(ds, target)
}

/// Trains a model for `target` on the matching rows of `ds`.
pub fn train_target(ds: &Dataset, target: PredictionTarget, cfg: &TrainConfig) -> Result<(DenseNetwork, TrainReport)> {
    let (xs, ys) = target_rows(ds, target)?;
    train(&xs, ys.as_train_targets(), cfg)
}

fn expected_task(target: PredictionTarget) -> Task {
    match target.kind() {
        TargetKind::Classification(n) => Task::Classification(n),
        TargetKind::Regression(n) => Task::Regression(n),
    }
}

/// Scores `net` on the rows of `ds` that take part in `target`; returns the
/// metric and the number of rows scored.
pub fn score_target(net: &DenseNetwork, ds: &Dataset, target: PredictionTarget) -> Result<(CellMetric, usize)> {
    let expected = expected_task(target);
    if net.task != expected {
        return Err(Error::InvalidConfig(format!(
            "model task is `{}` but target {target} needs `{expected}`",
            net.task
        )));
    }
    if ds.schema().width() != net.input_width() {
        return Err(Error::WidthMismatch { expected: net.input_width(), found: ds.schema().width() });
    }
    let (xs, ys) = target_rows(ds, target)?;
    let preds = net.predict_batch(&xs)?;
    let metric = match ys {
        TargetColumn::Classes { labels, .. } => {
            let classes: Vec<usize> = preds.iter().map(|p| p.class.expect("classification")).collect();
            CellMetric::Accuracy { percent: classification_accuracy(&classes, &labels)? }
        }
        TargetColumn::Values { rows, .. } => {
            let outputs: Vec<Vec<f64>> = preds.into_iter().map(|p| p.outputs).collect();
            let e = regression_error(&outputs, &rows)?;
            CellMetric::Error { mae: e.mae, rmse: e.rmse }
        }
    };
    Ok((metric, xs.len()))
}

/// Trains on `train_ds` and scores on `test_ds` for one target.
pub fn evaluate_target(
    train_ds: &Dataset,
    test_ds: &Dataset,
    target: PredictionTarget,
    cfg: &TrainConfig,
) -> Result<(DenseNetwork, CellMetric, usize, usize)> {
    let (net, report) = train_target(train_ds, target, cfg)?;
    let (metric, test_rows) = score_target(&net, test_ds, target)?;
    Ok((net, metric, report.rows, test_rows))
}

/// Trains one model per (target, method) cell and scores it on a held-out
/// split. The split is drawn once per method with the same seed, so every
/// method sees the same train and test events.
pub fn run_ablation(events: &[KickEvent], cfg: &AblationConfig) -> Result<AblationReport> {
    if cfg.targets.is_empty() || cfg.methods.is_empty() {
        return Err(Error::InvalidConfig("ablation needs at least one target and one method".into()));
    }
    cfg.train.validate()?;
    let splits: Vec<(Dataset, Dataset)> = cfg
        .methods
        .par_iter()
        .map(|m| {
            let ds = build_dataset(events, *m, cfg.feature_flavor)?;
            split(&ds, cfg.train_fraction, cfg.split_seed).map_err(|e| e.context(format!("method {m}")))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..cfg.targets.len())
        .flat_map(|t| (0..cfg.methods.len()).map(move |m| (t, m)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(ti, mi)| {
            let (target, method) = (cfg.targets[ti], cfg.methods[mi]);
            let (tr, te) = &splits[mi];
            let (_, metric, train_rows, test_rows) = evaluate_target(tr, te, target, &cfg.train)
                .map_err(|e| e.context(format!("target {target}, method {method}")))?;
            Ok(AblationCell { target, method, metric, train_rows, test_rows })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport {
        targets: cfg.targets.clone(),
        methods: cfg.methods.clone(),
        n_events: events.len(),
        config: cfg.clone(),
        cells,
    })
}

/// The teammate worth looking at next: the most likely receiver, if the
/// observer's information about them is stale.
///
/// `probabilities[i]` is the probability of unum `i + 1`.
pub fn choose_observation_target(probabilities: &[f64], ws: &WorldState, staleness_threshold: u32) -> Result<Option<u8>> {
    if probabilities.len() != TEAM_SIZE {
        return Err(Error::InvalidProbabilities(format!(
            "expected {TEAM_SIZE} entries, found {}",
            probabilities.len()
        )));
    }
    if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidProbabilities(format!("entry {p} is not a finite non-negative number")));
    }
    let unum = argmax(probabilities) as u8 + 1;
    let mate = ws.teammate(unum)?;
    Ok((mate.pos_count > staleness_threshold).then_some(unum))
}
