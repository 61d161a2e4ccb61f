//! Labelled score records: loading, cleaning, and stratified splitting.
//!
//! Missing scores are carried as `NaN` until [`clean`] drops them. Empty
//! fields, `nan` in any case, and any non-numeric text all count as missing;
//! so do finite scores outside `[0, 1]`.
//!
//! Answers shorter than three tokens are expected to be filtered upstream,
//! since answer text is not part of the input.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "PASS")]
    Pass,
}

impl Label {
    pub fn is_pass(self) -> bool {
        self == Label::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pass => "PASS",
            Label::Fail => "FAIL",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScoreRecord {
    pub id: String,
    /// `NaN` marks a missing or unparseable score before cleaning.
    pub score: f64,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

impl LabeledScoreRecord {
    pub fn new(id: impl Into<String>, score: f64, label: Label) -> Self {
        Self {
            id: id.into(),
            score,
            label,
            source: None,
            extras: BTreeMap::new(),
        }
    }

    fn has_valid_score(&self) -> bool {
        self.score.is_finite() && (0.0..=1.0).contains(&self.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDataset {
    pub records: Vec<LabeledScoreRecord>,
    pub metric_name: String,
    /// Rows skipped at load time because their label was unmapped.
    #[serde(default)]
    pub skipped_bad_labels: usize,
}

impl ScoreDataset {
    pub fn new(metric_name: impl Into<String>, records: Vec<LabeledScoreRecord>) -> Self {
        Self {
            records,
            metric_name: metric_name.into(),
            skipped_bad_labels: 0,
        }
    }

    /// Builds a dataset from parallel score/label slices with ids `0..n`.
    pub fn from_pairs(metric_name: impl Into<String>, scores: &[f64], labels: &[Label]) -> Self {
        assert_eq!(
            scores.len(),
            labels.len(),
            "scores and labels differ in length"
        );
        let records = scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&s, &l))| LabeledScoreRecord::new(i.to_string(), s, l))
            .collect();
        Self::new(metric_name, records)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.score).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn scores_with(&self, label: Label) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.label == label)
            .map(|r| r.score)
            .collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }

    /// Errors with [`Error::SingleClass`] unless both labels occur.
    pub fn require_both_labels(&self) -> Result<()> {
        if self.count(Label::Pass) == 0 || self.count(Label::Fail) == 0 {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    /// Records at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> ScoreDataset {
        ScoreDataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            metric_name: self.metric_name.clone(),
            skipped_bad_labels: 0,
        }
    }

    fn indices_by_label(&self) -> [(Label, Vec<usize>); 2] {
        let mut fail = Vec::new();
        let mut pass = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            match r.label {
                Label::Fail => fail.push(i),
                Label::Pass => pass.push(i),
            }
        }
        [(Label::Fail, fail), (Label::Pass, pass)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_in: usize,
    pub rows_dropped_missing_score: usize,
    pub rows_dropped_bad_label: usize,
    pub rows_out: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(Error::ConfigInvalid(format!("unknown format `{other}`"))),
        }
    }
}

impl Format {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext)
                if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") =>
            {
                Format::Jsonl
            }
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnmappedLabel {
    #[default]
    Error,
    Skip,
}

/// Field names and label tokens used by [`load_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub format: Format,
    pub score_field: String,
    pub label_field: String,
    pub pass_token: String,
    pub fail_token: String,
    /// Column used as record id; row numbers are used when it is absent.
    pub id_field: String,
    /// Column copied into `LabeledScoreRecord::source` when present.
    pub source_field: String,
    pub on_unmapped_label: UnmappedLabel,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            format: Format::Csv,
            score_field: "score".into(),
            label_field: "label".into(),
            pass_token: "PASS".into(),
            fail_token: "FAIL".into(),
            id_field: "id".into(),
            source_field: "source".into(),
            on_unmapped_label: UnmappedLabel::Error,
        }
    }
}

impl LoadOptions {
    pub fn with_format(mut self, format: Format) -> Self {
        self.format = format;
        self
    }

    fn map_label(&self, row: usize, raw: &str) -> Result<Option<Label>> {
        let v = raw.trim();
        if v.eq_ignore_ascii_case(self.pass_token.trim()) {
            Ok(Some(Label::Pass))
        } else if v.eq_ignore_ascii_case(self.fail_token.trim()) {
            Ok(Some(Label::Fail))
        } else {
            match self.on_unmapped_label {
                UnmappedLabel::Error => Err(Error::LabelUnmapped {
                    row,
                    value: v.to_string(),
                }),
                UnmappedLabel::Skip => Ok(None),
            }
        }
    }
}

fn parse_score(raw: &str) -> f64 {
    // Anything unparseable becomes the missing marker.
    raw.trim().parse::<f64>().unwrap_or(f64::NAN)
}

/// Reads a CSV or JSONL file into an uncleaned dataset named after the
/// score field. Row numbers in errors are 1-based data rows.
pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<ScoreDataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut ds = match opts.format {
        Format::Csv => load_csv(path, opts)?,
        Format::Jsonl => load_jsonl(path, opts)?,
    };
    ds.metric_name = opts.score_field.clone();
    Ok(ds)
}

fn load_csv(path: &Path, opts: &LoadOptions) -> Result<ScoreDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let score_col =
        col(&opts.score_field).ok_or_else(|| Error::MissingField(opts.score_field.clone()))?;
    let label_col =
        col(&opts.label_field).ok_or_else(|| Error::MissingField(opts.label_field.clone()))?;
    let id_col = col(&opts.id_field);
    let source_col = col(&opts.source_field);

    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let label_raw = row.get(label_col).ok_or_else(|| Error::Malformed {
            row: row_no,
            message: format!("missing `{}` value", opts.label_field),
        })?;
        let Some(label) = opts.map_label(row_no, label_raw)? else {
            skipped += 1;
            continue;
        };
        let score = row.get(score_col).map(parse_score).unwrap_or(f64::NAN);
        let id = id_col
            .and_then(|c| row.get(c))
            .map(str::to_string)
            .unwrap_or_else(|| row_no.to_string());
        let source = source_col.and_then(|c| row.get(c)).map(str::to_string);
        let extras = headers
            .iter()
            .enumerate()
            .filter(|(c, _)| {
                *c != score_col && *c != label_col && Some(*c) != id_col && Some(*c) != source_col
            })
            .filter_map(|(c, h)| row.get(c).map(|v| (h.to_string(), v.to_string())))
            .collect();
        records.push(LabeledScoreRecord {
            id,
            score,
            label,
            source,
            extras,
        });
    }
    Ok(ScoreDataset {
        records,
        metric_name: String::new(),
        skipped_bad_labels: skipped,
    })
}

fn value_to_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn load_jsonl(path: &Path, opts: &LoadOptions) -> Result<ScoreDataset> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut skipped = 0;
    let mut row_no = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        row_no += 1;
        let obj: serde_json::Map<String, Value> =
            serde_json::from_str(&line).map_err(|e| Error::Malformed {
                row: row_no,
                message: e.to_string(),
            })?;
        let score_v = obj
            .get(&opts.score_field)
            .ok_or_else(|| Error::MissingField(opts.score_field.clone()))?;
        let label_v = obj
            .get(&opts.label_field)
            .ok_or_else(|| Error::MissingField(opts.label_field.clone()))?;
        let Some(label) = opts.map_label(row_no, &value_to_string(label_v))? else {
            skipped += 1;
            continue;
        };
        let score = match score_v {
            Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
            Value::String(s) => parse_score(s),
            _ => f64::NAN,
        };
        let id = obj
            .get(&opts.id_field)
            .map(value_to_string)
            .unwrap_or_else(|| row_no.to_string());
        let source = obj.get(&opts.source_field).map(value_to_string);
        let extras = obj
            .iter()
            .filter(|(k, _)| {
                **k != opts.score_field
                    && **k != opts.label_field
                    && **k != opts.id_field
                    && **k != opts.source_field
            })
            .map(|(k, v)| (k.clone(), value_to_string(v)))
            .collect();
        records.push(LabeledScoreRecord {
            id,
            score,
            label,
            source,
            extras,
        });
    }
    Ok(ScoreDataset {
        records,
        metric_name: String::new(),
        skipped_bad_labels: skipped,
    })
}

/// Drops records whose score is missing, non-finite, or outside `[0, 1]`.
pub fn clean(dataset: &ScoreDataset) -> Result<(ScoreDataset, CleaningReport)> {
    let rows_in = dataset.len() + dataset.skipped_bad_labels;
    let records: Vec<_> = dataset
        .records
        .iter()
        .filter(|r| r.has_valid_score())
        .cloned()
        .collect();
    let report = CleaningReport {
        rows_in,
        rows_dropped_missing_score: dataset.len() - records.len(),
        rows_dropped_bad_label: dataset.skipped_bad_labels,
        rows_out: records.len(),
    };
    if records.is_empty() {
        return Err(Error::EmptyAfterCleaning);
    }
    Ok((
        ScoreDataset {
            records,
            metric_name: dataset.metric_name.clone(),
            skipped_bad_labels: 0,
        },
        report,
    ))
}

/// Writes the dataset in the layout [`load_dataset`] reads with default
/// [`LoadOptions`] (columns `id`, `score`, `label`, `source`, then extras).
pub fn write_dataset(dataset: &ScoreDataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    match format {
        Format::Jsonl => {
            let mut out = BufWriter::new(File::create(path)?);
            for r in &dataset.records {
                let mut obj = serde_json::Map::new();
                obj.insert("id".into(), Value::String(r.id.clone()));
                obj.insert(
                    "score".into(),
                    serde_json::Number::from_f64(r.score).map_or(Value::Null, Value::Number),
                );
                obj.insert("label".into(), Value::String(r.label.as_str().into()));
                if let Some(src) = &r.source {
                    obj.insert("source".into(), Value::String(src.clone()));
                }
                for (k, v) in &r.extras {
                    obj.insert(k.clone(), Value::String(v.clone()));
                }
                serde_json::to_writer(&mut out, &obj)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        Format::Csv => {
            let extra_keys: Vec<String> = dataset
                .records
                .iter()
                .flat_map(|r| r.extras.keys().cloned())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let with_source = dataset.records.iter().any(|r| r.source.is_some());
            let mut w = csv::Writer::from_path(path)?;
            let mut header = vec!["id".to_string(), "score".into(), "label".into()];
            if with_source {
                header.push("source".into());
            }
            header.extend(extra_keys.iter().cloned());
            w.write_record(&header)?;
            for r in &dataset.records {
                let mut row = vec![
                    r.id.clone(),
                    format!("{}", r.score),
                    r.label.as_str().into(),
                ];
                if with_source {
                    row.push(r.source.clone().unwrap_or_default());
                }
                for k in &extra_keys {
                    row.push(r.extras.get(k).cloned().unwrap_or_default());
                }
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
    pub seed: u64,
}

impl FoldAssignment {
    /// `(train, test)` record indices for one fold, each ascending.
    pub fn train_test(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..self.fold_of.len()).partition(|&i| self.fold_of[i] == fold);
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified K-fold assignment.
///
/// Each class is shuffled with a seeded ChaCha8 stream and dealt round-robin
/// into folds; the dealing position carries over from FAIL to PASS so total
/// fold sizes also differ by at most one.
pub fn stratified_kfold(dataset: &ScoreDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::ConfigInvalid(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let groups = dataset.indices_by_label();
    for (label, idx) in &groups {
        if idx.len() < k {
            return Err(Error::TooFewPerClass {
                label: *label,
                count: idx.len(),
                k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; dataset.len()];
    let mut next = 0;
    for (_, mut idx) in groups {
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of, seed })
}

/// Splits into `(fit, calibration)` parts; the calibration part receives
/// `round(calib_fraction * n)` records (per class when `stratified`).
/// Both parts keep the original record order.
pub fn split_holdout(
    dataset: &ScoreDataset,
    calib_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(ScoreDataset, ScoreDataset)> {
    if !(calib_fraction > 0.0 && calib_fraction < 1.0) {
        return Err(Error::OutOfRange(format!(
            "calibration fraction must be in (0, 1), got {calib_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_calib = vec![false; dataset.len()];
    let groups: Vec<Vec<usize>> = if stratified {
        dataset
            .indices_by_label()
            .into_iter()
            .map(|(_, v)| v)
            .collect()
    } else {
        vec![(0..dataset.len()).collect()]
    };
    for mut idx in groups {
        idx.shuffle(&mut rng);
        let take = (calib_fraction * idx.len() as f64).round() as usize;
        for &i in &idx[..take] {
            in_calib[i] = true;
        }
    }
    let (calib, fit): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| in_calib[i]);
    if calib.is_empty() || fit.is_empty() {
        return Err(Error::DegenerateSplit);
    }
    Ok((dataset.subset(&fit), dataset.subset(&calib)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn balanced(n_pass: usize, n_fail: usize) -> ScoreDataset {
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_pass {
            scores.push(0.5 + 0.4 * i as f64 / n_pass as f64);
            labels.push(Label::Pass);
        }
        for i in 0..n_fail {
            scores.push(0.4 * i as f64 / n_fail as f64);
            labels.push(Label::Fail);
        }
        ScoreDataset::from_pairs("m", &scores, &labels)
    }

    #[test]
    fn csv_with_nan_score_loads_two_records() {
        let f = write_tmp("id,score,label\na,0.5,PASS\nb,nan,FAIL\n", ".csv");
        let ds = load_dataset(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records[0].score, 0.5);
        assert_eq!(ds.records[0].label, Label::Pass);
        assert!(ds.records[1].score.is_nan());
        assert_eq!(ds.records[1].label, Label::Fail);
    }

    #[test]
    fn jsonl_line_parses() {
        let f = write_tmp(
            "{\"id\":\"q1\",\"score\":1.0,\"label\":\"FAIL\"}\n",
            ".jsonl",
        );
        let opts = LoadOptions::default().with_format(Format::Jsonl);
        let ds = load_dataset(f.path(), &opts).unwrap();
        assert_eq!(
            ds.records,
            vec![LabeledScoreRecord::new("q1", 1.0, Label::Fail)]
        );
    }

    #[test]
    fn unmapped_label_reports_row() {
        let f = write_tmp("id,score,label\na,0.5,PASS\nb,0.2,MAYBE\n", ".csv");
        match load_dataset(f.path(), &LoadOptions::default()) {
            Err(Error::LabelUnmapped { row, value }) => {
                assert_eq!(row, 2);
                assert_eq!(value, "MAYBE");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn skipped_labels_are_counted_by_clean() {
        let f = write_tmp(
            "id,score,label\na,0.5,PASS\nb,0.2,MAYBE\nc,,FAIL\nd,0.1,FAIL\n",
            ".csv",
        );
        let opts = LoadOptions {
            on_unmapped_label: UnmappedLabel::Skip,
            ..LoadOptions::default()
        };
        let ds = load_dataset(f.path(), &opts).unwrap();
        let (out, report) = clean(&ds).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(
            report,
            CleaningReport {
                rows_in: 4,
                rows_dropped_missing_score: 1,
                rows_dropped_bad_label: 1,
                rows_out: 2
            }
        );
    }

    #[test]
    fn missing_fields_and_files() {
        let f = write_tmp("id,score,verdict\na,0.5,PASS\n", ".csv");
        assert!(matches!(
            load_dataset(f.path(), &LoadOptions::default()),
            Err(Error::MissingField(name)) if name == "label"
        ));
        assert!(matches!(
            load_dataset("/definitely/not/here.csv", &LoadOptions::default()),
            Err(Error::FileNotFound(_))
        ));
    }

    #[test]
    fn missing_markers_are_all_dropped() {
        let f = write_tmp(
            "id,score,label,note\na,,PASS,x\nb,NaN,FAIL,y\nc,oops,PASS,z\nd,1.5,FAIL,w\ne,-0.1,PASS,v\nf,0.3,FAIL,\"quoted, note\"\n",
            ".csv",
        );
        let ds = load_dataset(f.path(), &LoadOptions::default()).unwrap();
        let (out, report) = clean(&ds).unwrap();
        assert_eq!(report.rows_dropped_missing_score, 5);
        assert_eq!(out.records[0].id, "f");
        assert_eq!(out.records[0].extras["note"], "quoted, note");
    }

    #[test]
    fn clean_drops_nan_and_keeps_order() {
        let ds = ScoreDataset::from_pairs(
            "m",
            &[0.2, f64::NAN, 0.9],
            &[Label::Fail, Label::Pass, Label::Pass],
        );
        let (out, report) = clean(&ds).unwrap();
        assert_eq!(out.scores(), vec![0.2, 0.9]);
        assert_eq!(report.rows_dropped_missing_score, 1);
        assert_eq!(
            report.rows_in,
            report.rows_out + report.rows_dropped_missing_score
        );
    }

    #[test]
    fn clean_identity_when_valid() {
        let ds = balanced(3, 3);
        let (out, report) = clean(&ds).unwrap();
        assert_eq!(out, ds);
        assert_eq!(
            report.rows_dropped_missing_score + report.rows_dropped_bad_label,
            0
        );
    }

    #[test]
    fn large_file_cleaning_counts() {
        let n = 9_616;
        let scores: Vec<f64> = (0..n)
            .map(|i| {
                if i < 1_913 {
                    f64::NAN
                } else {
                    (i % 100) as f64 / 100.0
                }
            })
            .collect();
        let labels: Vec<Label> = (0..n)
            .map(|i| if i % 2 == 0 { Label::Pass } else { Label::Fail })
            .collect();
        let (out, report) = clean(&ScoreDataset::from_pairs("m", &scores, &labels)).unwrap();
        assert_eq!(out.len(), 7_703);
        assert_eq!(report.rows_out, 7_703);
    }

    #[test]
    fn empty_after_cleaning() {
        let ds = ScoreDataset::from_pairs("m", &[f64::NAN], &[Label::Pass]);
        assert!(matches!(clean(&ds), Err(Error::EmptyAfterCleaning)));
    }

    #[test]
    fn kfold_balanced_exact() {
        let ds = balanced(10, 10);
        let folds = stratified_kfold(&ds, 5, 7).unwrap();
        for f in 0..5 {
            let (_, test) = folds.train_test(f);
            let sub = ds.subset(&test);
            assert_eq!(sub.count(Label::Pass), 2);
            assert_eq!(sub.count(Label::Fail), 2);
        }
    }

    #[test]
    fn kfold_uneven_counts() {
        let ds = balanced(7, 5);
        let folds = stratified_kfold(&ds, 5, 1).unwrap();
        for f in 0..5 {
            let (_, test) = folds.train_test(f);
            let sub = ds.subset(&test);
            assert!((1..=2).contains(&sub.count(Label::Pass)));
            assert_eq!(sub.count(Label::Fail), 1);
        }
        let again = stratified_kfold(&ds, 5, 1).unwrap();
        assert_eq!(folds, again);
    }

    #[test]
    fn kfold_too_few() {
        let ds = balanced(10, 3);
        assert!(matches!(
            stratified_kfold(&ds, 5, 0),
            Err(Error::TooFewPerClass {
                label: Label::Fail,
                count: 3,
                k: 5
            })
        ));
    }

    #[test]
    fn holdout_halves() {
        let ds = balanced(50, 50);
        let (a, b) = split_holdout(&ds, 0.5, 3, false).unwrap();
        assert_eq!((a.len(), b.len()), (50, 50));
        let mut ids: Vec<_> = a
            .records
            .iter()
            .chain(&b.records)
            .map(|r| r.id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 100);
    }

    #[test]
    fn holdout_stratified_and_degenerate() {
        let ds = balanced(80, 20);
        let (fit, cal) = split_holdout(&ds, 0.5, 9, true).unwrap();
        assert!(cal.count(Label::Pass).abs_diff(40) <= 1);
        assert!(cal.count(Label::Fail).abs_diff(10) <= 1);
        assert_eq!(fit.len() + cal.len(), 100);

        let small = balanced(5, 5);
        assert!(matches!(
            split_holdout(&small, 0.99, 0, false),
            Err(Error::DegenerateSplit)
        ));
    }
}
