//! Frame-level ROC, AUC and EER.
//!
//! The anomaly class (`+1`) is the positive class and a frame is flagged when
//! its score is at or above the threshold. Tied scores share one threshold,
//! so ties become diagonal segments of the curve.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

/// Scores paired with their ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    scores: Vec<f64>,
    labels: Vec<Label>,
}

impl ScoreSeries {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Data(format!("score {i} is {}", scores[i])));
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// From (0,0) to (1,1), both rates nondecreasing.
    pub points: Vec<RocPoint>,
    /// Threshold producing each point; the first is `+∞`.
    pub thresholds: Vec<f64>,
}

pub fn roc(series: &ScoreSeries) -> Result<RocCurve> {
    let positives = series.labels.iter().filter(|l| l.is_anomaly()).count();
    let negatives = series.labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Data(
            "ROC needs both anomalous and normal frames".into(),
        ));
    }

    let mut order: Vec<usize> = (0..series.scores.len()).collect();
    order.sort_by(|&a, &b| series.scores[b].total_cmp(&series.scores[a]));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let threshold = series.scores[order[k]];
        while k < order.len() && series.scores[order[k]] == threshold {
            if series.labels[order[k]].is_anomaly() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
        });
        thresholds.push(threshold);
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EerMode {
    /// Linear interpolation along the segment crossing `tpr = 1 - fpr`.
    #[default]
    Interpolated,
    /// FPR of the vertex closest to the line.
    NearestVertex,
}

/// False-positive rate where the curve meets `tpr = 1 - fpr`.
pub fn eer(curve: &RocCurve) -> f64 {
    eer_with(curve, EerMode::Interpolated)
}

pub fn eer_with(curve: &RocCurve, mode: EerMode) -> f64 {
    // h grows from -1 at (0,0) to +1 at (1,1)
    let h = |p: &RocPoint| p.fpr + p.tpr - 1.0;
    match mode {
        EerMode::Interpolated => {
            for w in curve.points.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let (ha, hb) = (h(a), h(b));
                if ha == 0.0 {
                    return a.fpr;
                }
                if hb == 0.0 {
                    return b.fpr;
                }
                if ha < 0.0 && hb > 0.0 {
                    let t = -ha / (hb - ha);
                    return a.fpr + t * (b.fpr - a.fpr);
                }
            }
            curve.points.last().map(|p| p.fpr).unwrap_or(1.0)
        }
        EerMode::NearestVertex => curve
            .points
            .iter()
            .min_by(|a, b| h(a).abs().total_cmp(&h(b).abs()))
            .map(|p| p.fpr)
            .unwrap_or(1.0),
    }
}

/// AUC and EER in percent, as reported in result tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub auc: f64,
    pub eer: f64,
}

pub fn evaluate(series: &ScoreSeries, mode: EerMode) -> Result<Detection> {
    let curve = roc(series)?;
    Ok(Detection {
        auc: 100.0 * auc(&curve),
        eer: 100.0 * eer_with(&curve, mode),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Anomaly as A, Normal as N};

    fn series(scores: &[f64], labels: &[Label]) -> ScoreSeries {
        ScoreSeries::new(scores.to_vec(), labels.to_vec()).unwrap()
    }

    fn pts(c: &RocCurve) -> Vec<(f64, f64)> {
        c.points.iter().map(|p| (p.fpr, p.tpr)).collect()
    }

    #[test]
    fn perfect_separation() {
        let c = roc(&series(&[3.0, 2.0, 1.0], &[A, A, N])).unwrap();
        assert_eq!(pts(&c), vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(auc(&c), 1.0);
        assert_eq!(eer(&c), 0.0);
    }

    #[test]
    fn all_scores_tied() {
        let c = roc(&series(&[0.5; 4], &[A, N, N, A])).unwrap();
        assert_eq!(pts(&c), vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&c), 0.5);
        assert_eq!(eer(&c), 0.5);
    }

    #[test]
    fn inverted_ranking() {
        let c = roc(&series(&[1.0, 2.0, 3.0, 4.0], &[A, A, N, N])).unwrap();
        assert_eq!(auc(&c), 0.0);
        assert_eq!(eer(&c), 1.0);
    }

    #[test]
    fn interpolated_crossing() {
        let c = RocCurve {
            points: vec![
                RocPoint { fpr: 0.0, tpr: 0.0 },
                RocPoint { fpr: 0.2, tpr: 0.6 },
                RocPoint { fpr: 1.0, tpr: 1.0 },
            ],
            thresholds: vec![f64::INFINITY, 1.0, 0.0],
        };
        assert!((eer(&c) - 1.0 / 3.0).abs() < 1e-15);
        // nearest vertex: |h| is 1, 0.2, 1
        assert_eq!(eer_with(&c, EerMode::NearestVertex), 0.2);
    }

    #[test]
    fn single_class_is_data_error() {
        assert!(matches!(roc(&series(&[1.0, 2.0], &[A, A])), Err(Error::Data(_))));
    }

    #[test]
    fn series_validation() {
        assert!(matches!(ScoreSeries::new(vec![1.0], vec![A, N]), Err(Error::Shape(_))));
        assert!(matches!(ScoreSeries::new(vec![f64::NAN, 1.0], vec![A, N]), Err(Error::Data(_))));
    }

    #[test]
    fn thresholds_align_with_points() {
        let c = roc(&series(&[0.1, 0.4, 0.4, 0.9], &[N, A, N, A])).unwrap();
        assert_eq!(c.thresholds, vec![f64::INFINITY, 0.9, 0.4, 0.1]);
        assert_eq!(c.points.len(), c.thresholds.len());
    }
}
