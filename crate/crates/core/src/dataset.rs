//! Feature/label datasets, their CSV files and deterministic splits.
//!
//! A dataset file `name.csv` holds a header line (794 feature columns then 8
//! label columns) and one line per event. Its sidecar `name.meta.json`
//! records the ordering method, feature flavor, schema version, seed and the
//! event id of every row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DatasetError, Error, Result};
use crate::features::{extract_row, FeatureRow, FeatureSchema, FEATURE_WIDTH, SCHEMA_VERSION};
use crate::labels::{generate_labels, LabelRow, LABEL_COLUMNS, LABEL_WIDTH};
use crate::ordering::{order_players, OrderingMethod, OrderingReference};
use crate::seed;
use crate::state::Flavor;
use crate::synthgen::KickEvent;

pub const DATASET_FORMAT: &str = "kickcast-dataset";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Which state the features were extracted from.
    pub flavor: Flavor,
    pub seed: Option<u64>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema_version: u32,
    pub method: OrderingMethod,
    pub rows: Vec<(FeatureRow, LabelRow)>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn schema(&self) -> &'static FeatureSchema {
        FeatureSchema::current()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn features(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.iter().map(|(f, _)| f.values.as_slice())
    }

    pub fn labels(&self) -> impl Iterator<Item = &LabelRow> {
        self.rows.iter().map(|(_, l)| l)
    }

    pub fn column_names() -> Vec<String> {
        let mut names = FeatureSchema::current().column_names.clone();
        names.extend(LABEL_COLUMNS.iter().map(|s| s.to_string()));
        names
    }
}

/// Pairs each event's features (from the chosen flavor) with labels derived
/// from its full-state action, indexed against the feature state's teammate
/// ordering.
pub fn build_dataset(events: &[KickEvent], method: OrderingMethod, feature_flavor: Flavor) -> Result<Dataset> {
    if events.is_empty() {
        return Err(Error::Empty("events"));
    }
    let rows = events
        .par_iter()
        .map(|e| {
            let state = match feature_flavor {
                Flavor::Full => &e.fws,
                Flavor::Noisy => &e.ws,
            };
            let features = extract_row(state, method, e.event_id)?;
            let reference = OrderingReference::with_kicker(state.kicker()?.pos);
            let ordering = order_players(&state.teammates, method, state.kicker_unum, &reference)?;
            let labels = generate_labels(&e.action, &ordering, &e.fws)?;
            Ok((features, labels))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e: Error| e.context(format!("building {method} dataset")))?;
    Ok(Dataset {
        schema_version: SCHEMA_VERSION,
        method,
        rows,
        provenance: Provenance {
            flavor: feature_flavor,
            seed: None,
            source: "events".into(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format: String,
    pub schema_version: u32,
    pub method: OrderingMethod,
    pub flavor: Flavor,
    pub seed: Option<u64>,
    pub source: String,
    pub feature_width: usize,
    pub label_columns: Vec<String>,
    pub rows: usize,
    pub event_ids: Vec<u64>,
}

/// `dir/name.csv` → `dir/name.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    if ds.is_empty() {
        return Err(DatasetError::NoRows.into());
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::from(DatasetError::Csv(e.to_string()));
    w.write_record(Dataset::column_names()).map_err(csv_err)?;
    let mut record: Vec<String> = Vec::with_capacity(FEATURE_WIDTH + LABEL_WIDTH);
    for (f, l) in &ds.rows {
        if f.values.len() != FEATURE_WIDTH {
            return Err(Error::WidthMismatch { expected: FEATURE_WIDTH, found: f.values.len() });
        }
        record.clear();
        record.extend(f.values.iter().map(|v| v.to_string()));
        record.extend(l.to_values().iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(csv_err)?;
    }
    let inner = w.into_inner().map_err(|e| DatasetError::Csv(e.to_string()))?;
    inner
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))?;

    let meta = DatasetMeta {
        format: DATASET_FORMAT.into(),
        schema_version: ds.schema_version,
        method: ds.method,
        flavor: ds.provenance.flavor,
        seed: ds.provenance.seed,
        source: ds.provenance.source.clone(),
        feature_width: FEATURE_WIDTH,
        label_columns: LABEL_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows: ds.len(),
        event_ids: ds.rows.iter().map(|(f, _)| f.event_id).collect(),
    };
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
}

pub fn read_meta(csv_path: &Path) -> Result<DatasetMeta> {
    let side = sidecar_path(csv_path);
    let text = match std::fs::read_to_string(&side) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(DatasetError::MissingSidecar(side).into())
        }
        Err(e) => return Err(Error::io(&side, e)),
    };
    // Check the version before the full shape so that files from other
    // versions report a version error rather than a field error.
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| DatasetError::BadSidecar {
        path: side.clone(),
        message: e.to_string(),
    })?;
    let version = raw.get("schema_version").and_then(|v| v.as_u64()).ok_or_else(|| {
        DatasetError::BadSidecar {
            path: side.clone(),
            message: "missing schema_version".into(),
        }
    })?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(DatasetError::SchemaVersion {
            expected: SCHEMA_VERSION,
            found: version as u32,
        }
        .into());
    }
    serde_json::from_value(raw).map_err(|e| {
        DatasetError::BadSidecar {
            path: side,
            message: e.to_string(),
        }
        .into()
    })
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    let meta = read_meta(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let expected_names = Dataset::column_names();
    let width = expected_names.len();
    let mut records = r.records();
    let csv_err = |e: csv::Error| Error::from(DatasetError::Csv(e.to_string()));

    let header = records.next().ok_or(DatasetError::NoRows)?.map_err(csv_err)?;
    if header.len() != width {
        return Err(DatasetError::WidthMismatch { line: 1, expected: width, found: header.len() }.into());
    }
    for (i, (found, expected)) in header.iter().zip(&expected_names).enumerate() {
        if found != expected {
            return Err(DatasetError::HeaderMismatch {
                column: i,
                expected: expected.clone(),
                found: found.to_string(),
            }
            .into());
        }
    }

    let mut rows = Vec::with_capacity(meta.rows);
    let mut values = Vec::with_capacity(width);
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(csv_err)?;
        if rec.len() != width {
            return Err(DatasetError::WidthMismatch { line, expected: width, found: rec.len() }.into());
        }
        values.clear();
        for (column, text) in rec.iter().enumerate() {
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(DatasetError::BadNumber { line, column, text: text.to_string() }.into())
                }
            }
        }
        let label = LabelRow::from_values(&values[FEATURE_WIDTH..]).map_err(|(column, value)| {
            DatasetError::BadLabel { line, column: column.to_string(), value }
        })?;
        let event_id = meta.event_ids.get(i).copied().unwrap_or(i as u64);
        rows.push((
            FeatureRow {
                values: values[..FEATURE_WIDTH].to_vec(),
                schema_version: meta.schema_version,
                ordering_method: meta.method,
                event_id,
            },
            label,
        ));
    }
    if rows.is_empty() {
        return Err(DatasetError::NoRows.into());
    }
    Ok(Dataset {
        schema_version: meta.schema_version,
        method: meta.method,
        rows,
        provenance: Provenance {
            flavor: meta.flavor,
            seed: meta.seed,
            source: meta.source,
        },
    })
}

/// Seeded shuffle, then the first `round(n * train_fraction)` rows train.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = ds.len();
    let degenerate = || Error::from(DatasetError::DegenerateSplit { rows: n, fraction: train_fraction });
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(degenerate());
    }
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(degenerate());
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let take = |ids: &[usize]| Dataset {
        rows: ids.iter().map(|&i| ds.rows[i].clone()).collect(),
        ..Dataset { rows: Vec::new(), ..ds.clone_meta() }
    };
    Ok((take(&idx[..n_train]), take(&idx[n_train..])))
}

impl Dataset {
    fn clone_meta(&self) -> Dataset {
        Dataset {
            schema_version: self.schema_version,
            method: self.method,
            rows: Vec::new(),
            provenance: self.provenance.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::NoiseConfig;
    use crate::synthgen::{generate_events, EpisodeConfig};

    fn events(n: usize, noise: NoiseConfig) -> Vec<KickEvent> {
        generate_events(&EpisodeConfig { n_events: n, seed: 21, noise, ..EpisodeConfig::default() }).unwrap()
    }

    #[test]
    fn single_event_arity() {
        let ds = build_dataset(&events(1, NoiseConfig::default()), OrderingMethod::Unum, Flavor::Noisy).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(Dataset::column_names().len(), 794 + 8);
    }

    #[test]
    fn methods_agree_on_method_free_labels() {
        let ev = events(60, NoiseConfig::default());
        let a = build_dataset(&ev, OrderingMethod::X, Flavor::Noisy).unwrap();
        let b = build_dataset(&ev, OrderingMethod::Unum, Flavor::Noisy).unwrap();
        let mut differs = 0;
        for ((_, la), (_, lb)) in a.rows.iter().zip(&b.rows) {
            assert_eq!(la.category, lb.category);
            assert_eq!(la.target_unum, lb.target_unum);
            differs += usize::from(la.target_index != lb.target_index);
        }
        assert!(differs > 0);
    }

    #[test]
    fn zero_noise_flavors_agree() {
        let ev = events(20, NoiseConfig::zero());
        for m in OrderingMethod::ALL {
            let a = build_dataset(&ev, m, Flavor::Full).unwrap();
            let b = build_dataset(&ev, m, Flavor::Noisy).unwrap();
            assert_eq!(a.rows, b.rows);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let ev = events(15, NoiseConfig::default());
        let mut ds = build_dataset(&ev, OrderingMethod::AkgFk, Flavor::Noisy).unwrap();
        ds.provenance.seed = Some(21);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&ds, &path).unwrap();
        assert!(dir.path().join("d.meta.json").exists());
        let back = read_csv(&path).unwrap();
        assert_eq!(back.method, ds.method);
        assert_eq!(back.provenance, ds.provenance);
        for ((fa, la), (fb, lb)) in ds.rows.iter().zip(&back.rows) {
            assert_eq!(fa.event_id, fb.event_id);
            assert!(fa.values.iter().zip(&fb.values).all(|(x, y)| x.to_bits() == y.to_bits()));
            assert_eq!(la, lb);
        }
    }

    #[test]
    fn read_errors_are_distinct() {
        let ev = events(3, NoiseConfig::default());
        let ds = build_dataset(&ev, OrderingMethod::X, Flavor::Noisy).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&ds, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        // Header with one column dropped.
        let (header, rest) = text.split_once('\n').unwrap();
        let short = header.rsplit_once(',').unwrap().0;
        std::fs::write(&path, format!("{short}\n{rest}")).unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Dataset(DatasetError::WidthMismatch { line: 1, found: 801, .. }))));

        // Unparseable cell.
        std::fs::write(&path, text.replacen("\n0", "\nabc", 1).replacen(",", ",x", 0)).unwrap();
        let bad = text.split('\n').enumerate().map(|(i, l)| if i == 2 { l.replacen(',', ",oops,", 1).replacen(",oops,", ",oops", 1) } else { l.to_string() }).collect::<Vec<_>>().join("\n");
        std::fs::write(&path, bad).unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Dataset(DatasetError::BadNumber { line: 3, .. }))));

        std::fs::write(&path, &text).unwrap();
        std::fs::remove_file(sidecar_path(&path)).unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Dataset(DatasetError::MissingSidecar(_)))));
    }

    #[test]
    fn version_error_names_both_versions() {
        let ev = events(2, NoiseConfig::default());
        let ds = build_dataset(&ev, OrderingMethod::X, Flavor::Noisy).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&ds, &path).unwrap();
        let side = sidecar_path(&path);
        let meta = std::fs::read_to_string(&side).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 2");
        std::fs::write(&side, meta).unwrap();
        let err = read_csv(&path).unwrap_err();
        assert!(matches!(err, Error::Dataset(DatasetError::SchemaVersion { expected: 1, found: 2 })));
        let msg = err.to_string();
        assert!(msg.contains('1') && msg.contains('2'), "{msg}");
    }

    #[test]
    fn split_examples() {
        let ev = events(10, NoiseConfig::default());
        let ds = build_dataset(&ev, OrderingMethod::Unum, Flavor::Noisy).unwrap();
        let (tr, te) = split(&ds, 0.8, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr2, te2) = split(&ds, 0.8, 1).unwrap();
        assert_eq!(tr.rows, tr2.rows);
        assert_eq!(te.rows, te2.rows);
        let mut ids: Vec<u64> = tr.rows.iter().chain(&te.rows).map(|(f, _)| f.event_id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());

        assert!(split(&ds, 0.0, 1).is_err());
        assert!(split(&ds, 0.99, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
    }
}
