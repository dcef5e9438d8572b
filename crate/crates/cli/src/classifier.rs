//! Building base classifiers from command-line specs.

use std::path::Path;

use anyhow::{Context, Result};
use smoothcert::classifiers::{
    AnalyticSmoothing, BaseClassifier, Constant, ExternalClassifier, Halfspace, LabeledDataset, Slab,
};

use crate::args::{ClassifierArgs, ClassifierKind};
use crate::table::Cell;
use crate::UsageError;

pub enum Built {
    Halfspace(Halfspace),
    Slab(Slab),
    Constant(Constant),
    Nn(LabeledDataset),
    External(ExternalClassifier),
}

impl Built {
    pub fn base(&self) -> &dyn BaseClassifier {
        match self {
            Built::Halfspace(c) => c,
            Built::Slab(c) => c,
            Built::Constant(c) => c,
            Built::Nn(c) => c,
            Built::External(c) => c,
        }
    }

    pub fn analytic(&self) -> Option<&dyn AnalyticSmoothing> {
        match self {
            Built::Halfspace(c) => Some(c),
            Built::Slab(c) => Some(c),
            _ => None,
        }
    }

    /// Sends the shutdown request to external adapters.
    pub fn close(self) -> Result<()> {
        if let Built::External(c) = self {
            c.shutdown().context("shutting down the classifier adapter")?;
        }
        Ok(())
    }
}

fn need<T: Copy>(value: Option<T>, flag: &str, kind: &str) -> Result<T, UsageError> {
    value.ok_or_else(|| UsageError(format!("--classifier {kind} requires {flag}")))
}

/// `dim` is the dimension of the points to be certified, used where the
/// classifier flags do not fix one.
pub fn build(spec: &ClassifierArgs, dim: usize, workers: usize) -> Result<Built> {
    Ok(match spec.classifier {
        ClassifierKind::Halfspace => {
            let w = spec.w.clone().ok_or_else(|| UsageError("--classifier halfspace requires --w".into()))?;
            let b = need(spec.b, "--b", "halfspace")?;
            Built::Halfspace(Halfspace::new(w, b).map_err(|e| UsageError(e.to_string()))?)
        }
        ClassifierKind::Slab => {
            let w = spec.w.clone().ok_or_else(|| UsageError("--classifier slab requires --w".into()))?;
            let lo = need(spec.lo, "--lo", "slab")?;
            let hi = need(spec.hi, "--hi", "slab")?;
            Built::Slab(Slab::new(w, lo, hi).map_err(|e| UsageError(e.to_string()))?)
        }
        ClassifierKind::Constant => {
            let label = need(spec.label, "--label", "constant")?;
            let classes = spec.classes.unwrap_or(2).max(label + 1);
            Built::Constant(Constant { dim, label, classes })
        }
        ClassifierKind::Nn => {
            let path = spec.dataset.as_deref().ok_or_else(|| UsageError("--classifier nn requires --dataset".into()))?;
            Built::Nn(load_dataset(path)?)
        }
        ClassifierKind::External => {
            let line = spec
                .external_command
                .as_deref()
                .ok_or_else(|| UsageError("--classifier external requires --command".into()))?;
            let mut parts = line.split_whitespace().map(str::to_string);
            let program = parts.next().ok_or_else(|| UsageError("--command is empty".into()))?;
            let args: Vec<String> = parts.collect();
            let c = ExternalClassifier::spawn(&program, &args, workers, Some(dim))
                .with_context(|| format!("starting classifier adapter {line:?}"))?;
            Built::External(c)
        }
    })
}

/// Classifier parameters echoed into every output record.
pub fn echo(spec: &ClassifierArgs) -> Vec<(&'static str, Cell)> {
    let mut out = vec![("classifier", Cell::from(format!("{:?}", spec.classifier).to_lowercase()))];
    match spec.classifier {
        ClassifierKind::Halfspace => {
            out.push(("w", spec.w.clone().into()));
            out.push(("b", spec.b.into()));
        }
        ClassifierKind::Slab => {
            out.push(("w", spec.w.clone().into()));
            out.push(("lo", spec.lo.into()));
            out.push(("hi", spec.hi.into()));
        }
        ClassifierKind::Constant => {
            out.push(("label", spec.label.into()));
        }
        ClassifierKind::Nn => {
            out.push(("dataset", spec.dataset.as_ref().map(|p| p.display().to_string()).into()));
        }
        ClassifierKind::External => {
            out.push(("command", spec.external_command.clone().into()));
        }
    }
    out
}

/// Reads `x1,...,xd,label` rows.
pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening dataset {}", path.display()))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading {} row {}", path.display(), i + 1))?;
        let (label, coords) = record
            .iter()
            .collect::<Vec<_>>()
            .split_last()
            .map(|(l, c)| (l.to_string(), c.to_vec()))
            .with_context(|| format!("{} row {} is empty", path.display(), i + 1))?;
        let label: usize = label.parse().with_context(|| format!("{} row {}: bad label {label:?}", path.display(), i + 1))?;
        let coords = coords
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{} row {}: bad coordinate", path.display(), i + 1))?;
        points.push(coords);
        labels.push(label);
    }
    Ok(LabeledDataset::from_points(&points, labels)?)
}

/// Reads one point per CSV row.
pub fn load_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening points {}", path.display()))?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading {} row {}", path.display(), i + 1))?;
        let p = record
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{} row {}: bad coordinate", path.display(), i + 1))?;
        points.push(p);
    }
    Ok(points)
}
