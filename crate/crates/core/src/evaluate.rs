//! Pixel metrics against ground truth, restricted to brain pixels, plus the
//! constraint and minimum-size ablation drivers.

use crate::error::{Error, Result};
use crate::image::BinaryMask;

/// Pixel confusion counts over brain pixels only.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Counts prediction/truth agreement over the brain mask.
pub fn confusion(
    pred: &BinaryMask,
    truth: &BinaryMask,
    brain: &BinaryMask,
) -> Result<ConfusionCounts> {
    if !pred.same_shape(truth) || !pred.same_shape(brain) {
        return Err(Error::ShapeMismatch(
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height(),
        ));
    }
    let mut counts = ConfusionCounts::default();
    for ((&p, &t), &b) in pred.data().iter().zip(truth.data()).zip(brain.data()) {
        if !b {
            continue;
        }
        match (p, t) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    Ok(counts)
}

/// Percentage of truth pixels detected; undefined without truth positives.
pub fn sensitivity(counts: &ConfusionCounts) -> Option<f64> {
    let den = counts.tp + counts.fn_;
    (den > 0).then(|| 100.0 * counts.tp as f64 / den as f64)
}

/// Percentage of negative pixels left alone; undefined without negatives.
pub fn specificity(counts: &ConfusionCounts) -> Option<f64> {
    let den = counts.tn + counts.fp;
    (den > 0).then(|| 100.0 * counts.tn as f64 / den as f64)
}

/// Metrics for one slice.
#[derive(Debug, Clone)]
pub struct SliceMetrics {
    pub slice_index: usize,
    pub counts: ConfusionCounts,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

/// Per-slice rows plus unweighted averages. Slices whose metric is undefined
/// (no truth positives, or no negatives) are excluded from that average.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub per_slice: Vec<SliceMetrics>,
    pub avg_sensitivity: Option<f64>,
    pub avg_specificity: Option<f64>,
    pub avg_true_positives: f64,
    pub avg_false_positives: f64,
}

impl MetricsReport {
    pub fn from_counts(rows: Vec<(usize, ConfusionCounts)>) -> Self {
        let per_slice: Vec<SliceMetrics> = rows
            .into_iter()
            .map(|(slice_index, counts)| SliceMetrics {
                slice_index,
                sensitivity: sensitivity(&counts),
                specificity: specificity(&counts),
                counts,
            })
            .collect();
        let mean_of = |values: Vec<f64>| -> Option<f64> {
            (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
        };
        let avg_sensitivity = mean_of(per_slice.iter().filter_map(|s| s.sensitivity).collect());
        let avg_specificity = mean_of(per_slice.iter().filter_map(|s| s.specificity).collect());
        let n = per_slice.len().max(1) as f64;
        let avg_true_positives = per_slice.iter().map(|s| s.counts.tp as f64).sum::<f64>() / n;
        let avg_false_positives = per_slice.iter().map(|s| s.counts.fp as f64).sum::<f64>() / n;
        Self {
            per_slice,
            avg_sensitivity,
            avg_specificity,
            avg_true_positives,
            avg_false_positives,
        }
    }

    /// Comma-separated rows: slice, counts, metrics; aggregate row last.
    /// Undefined metrics print as `NA`.
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.2}"),
            None => "NA".to_string(),
        };
        let mut out = String::from("slice_index,tp,fp,tn,fn,sensitivity,specificity\n");
        for s in &self.per_slice {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.slice_index,
                s.counts.tp,
                s.counts.fp,
                s.counts.tn,
                s.counts.fn_,
                fmt(s.sensitivity),
                fmt(s.specificity)
            ));
        }
        out.push_str(&format!(
            "aggregate,{:.2},{:.2},,,{},{}\n",
            self.avg_true_positives,
            self.avg_false_positives,
            fmt(self.avg_sensitivity),
            fmt(self.avg_specificity)
        ));
        out
    }
}


/// Which coarse constraints an ablation run enables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    Both,
    None,
    SizeOnly,
    DistanceOnly,
}

impl ConstraintMode {
    pub const ALL: [ConstraintMode; 4] = [
        ConstraintMode::Both,
        ConstraintMode::None,
        ConstraintMode::SizeOnly,
        ConstraintMode::DistanceOnly,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ConstraintMode::Both => "Both",
            ConstraintMode::None => "None",
            ConstraintMode::SizeOnly => "Size",
            ConstraintMode::DistanceOnly => "Distance",
        }
    }

    fn apply(&self, cfg: &mut crate::pipeline::RunConfig) {
        let (size, distance) = match self {
            ConstraintMode::Both => (true, true),
            ConstraintMode::None => (false, false),
            ConstraintMode::SizeOnly => (true, false),
            ConstraintMode::DistanceOnly => (false, true),
        };
        cfg.size_constraint = size;
        cfg.distance_constraint = distance;
    }
}

/// Scores a full detection run against the stack's lesion truth. The brain
/// restriction uses the truth brain masks when present, falling back to the
/// computed foreground.
pub fn score_detection(
    stack: &crate::pipeline::SliceStack,
    detection: &crate::pipeline::StackDetection,
) -> Result<MetricsReport> {
    let truth = stack
        .truth_lesion
        .as_ref()
        .ok_or(Error::MissingGroundTruth)?;
    let mut rows = Vec::with_capacity(truth.len());
    for (i, pred) in detection.confirmed_masks.iter().enumerate() {
        let brain = match &stack.truth_brain {
            Some(brains) => &brains[i],
            None => &detection.slices[i].foreground,
        };
        rows.push((i, confusion(pred, &truth[i], brain)?));
    }
    Ok(MetricsReport::from_counts(rows))
}

/// Reruns the pipeline with the named constraint configuration and scores
/// the result against ground truth.
pub fn ablation_run(
    stack: &crate::pipeline::SliceStack,
    mode: ConstraintMode,
    base: &crate::pipeline::RunConfig,
) -> Result<MetricsReport> {
    if stack.truth_lesion.is_none() {
        return Err(Error::MissingGroundTruth);
    }
    let mut cfg = base.clone();
    mode.apply(&mut cfg);
    let detection = crate::pipeline::detect_stack(stack, &cfg)?;
    score_detection(stack, &detection)
}

/// Reruns the pipeline over a sweep of minimum lesion sizes (`None` turns
/// the filter off). Both other constraints stay as configured.
pub fn min_size_sweep(
    stack: &crate::pipeline::SliceStack,
    sizes: &[Option<usize>],
    base: &crate::pipeline::RunConfig,
) -> Result<Vec<(Option<usize>, MetricsReport)>> {
    if stack.truth_lesion.is_none() {
        return Err(Error::MissingGroundTruth);
    }
    let mut out = Vec::with_capacity(sizes.len());
    for &min_size in sizes {
        let mut cfg = base.clone();
        cfg.min_lesion_size = min_size.unwrap_or(0);
        let detection = crate::pipeline::detect_stack(stack, &cfg)?;
        out.push((min_size, score_detection(stack, &detection)?));
    }
    Ok(out)
}
