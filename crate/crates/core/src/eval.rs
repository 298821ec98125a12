//! Point-adjusted precision, recall and F1, and best-F1 threshold search.
//!
//! Under point-adjust, a ground-truth segment with at least one raw alarm
//! counts as fully detected; alarms outside segments are kept as they are.
//! Alarms are raised where `score > threshold`.

use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

/// Inclusive run `[start, end]` of anomalous instants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnomalySegment {
    pub start: usize,
    pub end: usize,
}

impl AnomalySegment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn segments_from_labels(labels: &[u8]) -> Vec<AnomalySegment> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &l) in labels.iter().enumerate() {
        match (l != 0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(AnomalySegment { start: s, end: i - 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(AnomalySegment {
            start: s,
            end: labels.len() - 1,
        });
    }
    out
}

pub fn point_adjust(pred: &[u8], truth: &[u8]) -> Result<Vec<u8>> {
    check_len("prediction length", truth.len(), pred.len())?;
    let mut adjusted: Vec<u8> = pred.iter().map(|&p| u8::from(p != 0)).collect();
    for seg in segments_from_labels(truth) {
        let hit = adjusted[seg.start..=seg.end].iter().any(|&p| p != 0);
        if hit {
            adjusted[seg.start..=seg.end].fill(1);
        }
    }
    Ok(adjusted)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
    /// False when `TP + FP == 0`; precision is then reported as 0.
    pub precision_defined: bool,
    /// False when `TP + FN == 0`; recall is then reported as 0.
    pub recall_defined: bool,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision_defined = tp + fp > 0;
        let recall_defined = tp + fn_ > 0;
        let precision = if precision_defined { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        let recall = if recall_defined { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            precision_defined,
            recall_defined,
        }
    }
}

/// Point-wise metrics of (already adjusted) predictions.
pub fn prf(pred: &[u8], truth: &[u8]) -> Result<Metrics> {
    check_len("prediction length", truth.len(), pred.len())?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentOutcome {
    pub start: usize,
    pub end: usize,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub threshold: f64,
    pub n_points: usize,
    /// Point-adjusted metrics.
    pub adjusted: Metrics,
    /// Metrics of the raw alarms, before adjustment.
    pub raw: Metrics,
    pub segments: Vec<SegmentOutcome>,
}

fn check_scores(scores: &[f64], truth: &[u8]) -> Result<()> {
    check_len("truth length", scores.len(), truth.len())?;
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("anomaly scores"));
    }
    Ok(())
}

/// Full report at a fixed threshold.
pub fn evaluate(scores: &[f64], truth: &[u8], threshold: f64) -> Result<EvalReport> {
    check_scores(scores, truth)?;
    if threshold.is_nan() {
        return Err(Error::NonFinite("threshold"));
    }
    let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s > threshold)).collect();
    let adjusted_pred = point_adjust(&pred, truth)?;
    let segments = segments_from_labels(truth)
        .into_iter()
        .map(|s| SegmentOutcome {
            start: s.start,
            end: s.end,
            detected: pred[s.start..=s.end].iter().any(|&p| p != 0),
        })
        .collect();
    Ok(EvalReport {
        threshold,
        n_points: scores.len(),
        adjusted: prf(&adjusted_pred, truth)?,
        raw: prf(&pred, truth)?,
        segments,
    })
}

/// Largest float strictly less than `x` (finite `x`).
fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// Smallest float strictly greater than `x` (finite `x`).
fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Adjusted metrics at every candidate threshold, ascending.
///
/// Candidates are the distinct scores plus one value just below the minimum
/// (alarm everywhere) and one just above the maximum (no alarms). Together
/// they realize every alarm set a threshold can produce.
pub fn sweep_curve(scores: &[f64], truth: &[u8]) -> Result<Vec<(f64, Metrics)>> {
    check_scores(scores, truth)?;
    let mut candidates = scores.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let top = *candidates.last().expect("non-empty");
    candidates.insert(0, next_down(candidates[0]));
    candidates.push(next_up(top));

    let mut normal: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t == 0)
        .map(|(&s, _)| s)
        .collect();
    normal.sort_by(f64::total_cmp);
    let segs = segments_from_labels(truth);
    let total_anom: usize = segs.iter().map(AnomalySegment::len).sum();
    let mut seg_max: Vec<(f64, usize)> = segs
        .iter()
        .map(|s| {
            let m = scores[s.start..=s.end].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (m, s.len())
        })
        .collect();
    seg_max.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Walk thresholds upward; count how many normal points and segment
    // maxima are at or below each candidate.
    let mut out = Vec::with_capacity(candidates.len());
    let (mut ni, mut si, mut missed_len) = (0usize, 0usize, 0usize);
    for &c in &candidates {
        while ni < normal.len() && normal[ni] <= c {
            ni += 1;
        }
        while si < seg_max.len() && seg_max[si].0 <= c {
            missed_len += seg_max[si].1;
            si += 1;
        }
        let tp = total_anom - missed_len;
        let fp = normal.len() - ni;
        out.push((c, Metrics::from_counts(tp, fp, missed_len)));
    }
    Ok(out)
}

/// Threshold with the highest point-adjusted F1; ties go to the larger threshold.
pub fn best_f1_sweep(scores: &[f64], truth: &[u8]) -> Result<(f64, EvalReport)> {
    let curve = sweep_curve(scores, truth)?;
    let mut best = curve.last().expect("non-empty");
    for point in curve.iter().rev() {
        if point.1.f1 > best.1.f1 {
            best = point;
        }
    }
    let threshold = best.0;
    Ok((threshold, evaluate(scores, truth, threshold)?))
}

pub fn curve_points(curve: &[(f64, Metrics)]) -> Vec<CurvePoint> {
    curve
        .iter()
        .map(|(t, m)| CurvePoint {
            threshold: *t,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        })
        .collect()
}

/// Labels of the instants that carry a score: drop the first `window_len - 1`.
pub fn align_truth(labels: &[u8], window_len: usize) -> Result<&[u8]> {
    if window_len == 0 || labels.len() < window_len {
        return Err(Error::TooShort {
            required: window_len.max(1),
            actual: labels.len(),
        });
    }
    Ok(&labels[window_len - 1..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn seg(start: usize, end: usize) -> AnomalySegment {
        AnomalySegment { start, end }
    }

    #[test]
    fn segments() {
        assert!(segments_from_labels(&[0, 0, 0]).is_empty());
        assert_eq!(segments_from_labels(&[0, 1, 1, 0, 1]), vec![seg(1, 2), seg(4, 4)]);
        assert_eq!(segments_from_labels(&[1]), vec![seg(0, 0)]);
    }

    #[test]
    fn adjust_examples() {
        let truth = [0, 0, 1, 1, 1, 1, 0, 0];
        let pred = [0, 0, 0, 1, 0, 0, 0, 1];
        assert_eq!(point_adjust(&pred, &truth).unwrap(), vec![0, 0, 1, 1, 1, 1, 0, 1]);
        let quiet = [1, 0, 0, 0, 0, 0, 0, 0];
        assert_eq!(point_adjust(&quiet, &truth).unwrap(), quiet.to_vec());
        assert!(point_adjust(&[0], &truth).is_err());
    }

    #[test]
    fn prf_examples() {
        let m = prf(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let m = prf(&[1, 1], &[1, 0]).unwrap();
        assert_eq!((m.precision, m.recall), (0.5, 1.0));
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        let m = prf(&[0, 0], &[0, 0]).unwrap();
        assert!(!m.precision_defined && !m.recall_defined);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn sweep_examples() {
        let (t, r) = best_f1_sweep(&[1.0, 2.0, 3.0], &[0, 0, 1]).unwrap();
        assert_eq!(t, 2.0);
        assert_eq!(r.adjusted.f1, 1.0);

        let (t, r) = best_f1_sweep(&[1.0, 5.0, 3.0], &[0, 0, 0]).unwrap();
        assert!(t > 5.0);
        assert_eq!(r.adjusted.f1, 0.0);
        assert_eq!(r.adjusted.fp, 0);

        let (t, r) = best_f1_sweep(&[3.0, 3.0], &[1, 1]).unwrap();
        assert!(t < 3.0);
        assert_eq!(r.adjusted.f1, 1.0);

        assert!(best_f1_sweep(&[], &[]).is_err());
        assert!(best_f1_sweep(&[f64::NAN], &[0]).is_err());
    }

    #[test]
    fn report_segments_and_raw_counts() {
        let truth = [0, 1, 1, 1, 0, 1, 1];
        let scores = [0.0, 0.0, 0.9, 0.0, 0.0, 0.1, 0.2];
        let r = evaluate(&scores, &truth, 0.5).unwrap();
        assert_eq!(r.segments.iter().map(|s| s.detected).collect::<Vec<_>>(), vec![true, false]);
        assert_eq!((r.raw.tp, r.raw.fp, r.raw.fn_), (1, 0, 4));
        assert_eq!((r.adjusted.tp, r.adjusted.fp, r.adjusted.fn_), (3, 0, 2));
    }

    #[test]
    fn align_drops_warmup() {
        assert_eq!(align_truth(&[0, 1, 0, 1], 3).unwrap(), &[0, 1]);
        assert!(align_truth(&[0, 1], 3).is_err());
    }

    #[test]
    fn next_up_is_strict() {
        for x in [0.0, 1.0, -1.0, 1e300, -5e-324] {
            assert!(next_up(x) > x);
            assert!(next_down(x) < x);
        }
    }

    proptest! {
        #[test]
        fn adjust_properties(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let (pred, truth): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let adj = point_adjust(&pred, &truth).unwrap();
            let before = prf(&pred, &truth).unwrap();
            let after = prf(&adj, &truth).unwrap();
            prop_assert!(after.tp >= before.tp);
            prop_assert_eq!(after.fp, before.fp);
            for i in 0..truth.len() {
                if truth[i] == 0 {
                    prop_assert_eq!(adj[i], pred[i]);
                }
            }
            let all_hit = segments_from_labels(&truth)
                .iter()
                .all(|s| pred[s.start..=s.end].iter().any(|&p| p == 1));
            let has_segments = truth.iter().any(|&t| t == 1);
            prop_assert_eq!(after.recall == 1.0, has_segments && all_hit);
            for v in [after.precision, after.recall, after.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn sweep_dominates_fixed_thresholds(
            data in prop::collection::vec((0u8..6, 0u8..2), 1..80),
            probe in 0u8..7,
        ) {
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
            let truth: Vec<u8> = data.iter().map(|d| d.1).collect();
            let (_, best) = best_f1_sweep(&scores, &truth).unwrap();
            let fixed = evaluate(&scores, &truth, f64::from(probe) - 0.5).unwrap();
            prop_assert!(best.adjusted.f1 >= fixed.adjusted.f1);
        }
    }
}
