//! Cross-domain feature space generalization.
//!
//! For a detector trained on domain A, the partial generalization is the
//! absolute change in its detection metric between A's own test set and
//! domain B's:
//!
//! ```text
//!     G_part(f^A)        = | R_A(f^A) - R_B(f^A) |
//!     G_comp(f^A, f^B)   = ½ · ( G_part(f^A) + G_part(f^B) )
//! ```
//!
//! Lower is better: the detector behaves consistently across domains. Two
//! methodologies α and β are compared on the same domain pair through three
//! strict inequalities, one per direction plus one on `G_comp`. A method
//! generalizes fully only when it wins all three; winning `G_comp` while
//! losing one direction means one `G_part` is compensating for the other.
//!
//! Metric values are used directly (percent AUC or EER). Because
//! `|x - y| = |(100 - x) - (100 - y)|`, reading AUC as a risk or as
//! `100 - AUC` gives identical numbers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Differences at or below this (in percentage points) count as ties.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Auc,
    Eer,
}

impl MetricKind {
    pub const ALL: [MetricKind; 2] = [MetricKind::Auc, MetricKind::Eer];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Auc => "auc",
            MetricKind::Eer => "eer",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auc" => Ok(MetricKind::Auc),
            "eer" => Ok(MetricKind::Eer),
            other => Err(Error::Format(format!("unknown metric {other:?}"))),
        }
    }
}

/// How the feature space is prepared before detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Descriptors as extracted.
    Raw,
    /// Source-fitted PCA reused on the target.
    Pca,
    /// Transfer Component Analysis over both training sets.
    Tca,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Raw, Method::Pca, Method::Tca];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::Pca => "pca",
            Method::Tca => "tca",
        }
    }

    /// Whether the method uses target-domain data to adapt the space.
    pub fn is_transfer(self) -> bool {
        matches!(self, Method::Tca)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(Method::Raw),
            "pca" => Ok(Method::Pca),
            "tca" => Ok(Method::Tca),
            other => Err(Error::Format(format!("unknown method {other:?}"))),
        }
    }
}

/// One detection metric of a classifier trained on `classifier_origin`,
/// measured on the test set of `evaluated_on`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskValue {
    pub metric: MetricKind,
    /// Percent, in `[0, 100]`.
    pub value: f64,
    pub classifier_origin: String,
    pub evaluated_on: String,
}

impl RiskValue {
    pub fn new(
        metric: MetricKind,
        value: f64,
        classifier_origin: impl Into<String>,
        evaluated_on: impl Into<String>,
    ) -> Result<Self> {
        if !value.is_finite() || !(0.0..=100.0).contains(&value) {
            return Err(Error::Data(format!(
                "{metric} value {value} outside [0, 100]"
            )));
        }
        Ok(Self {
            metric,
            value,
            classifier_origin: classifier_origin.into(),
            evaluated_on: evaluated_on.into(),
        })
    }
}

/// Partial generalization of one classifier.
pub fn g_part(risk_on_origin: &RiskValue, risk_on_other: &RiskValue) -> Result<f64> {
    if risk_on_origin.metric != risk_on_other.metric {
        return Err(Error::Config(format!(
            "cannot mix {} and {}",
            risk_on_origin.metric, risk_on_other.metric
        )));
    }
    if risk_on_origin.classifier_origin != risk_on_other.classifier_origin {
        return Err(Error::Config(format!(
            "risks come from different classifiers ({} vs {})",
            risk_on_origin.classifier_origin, risk_on_other.classifier_origin
        )));
    }
    Ok((risk_on_origin.value - risk_on_other.value).abs())
}

/// Complete generalization of a domain pair.
pub fn g_comp(g_ab: f64, g_ba: f64) -> f64 {
    0.5 * (g_ab + g_ba)
}

/// Rounds half-up to `decimals` places.
///
/// The nudge absorbs binary representation error of decimal inputs, so a
/// value meant to be `x.xx5` rounds up.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = x.abs() * scale;
    let nudge = 1e-7 * scaled.max(1.0);
    ((scaled + 0.5 + nudge).floor() / scale).copysign(x)
}

/// Two decimals, the precision of reported tables.
pub fn round2(x: f64) -> f64 {
    round_half_up(x, 2)
}

/// Preconditions under which generalization numbers are comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeaningfulnessCheck {
    /// Every detector was trained with the same parameters.
    pub same_bias: bool,
    /// Both domains are described by the same descriptor set.
    pub same_descriptors: bool,
    /// No fit stage saw test data of either domain.
    pub no_test_leakage: bool,
}

impl MeaningfulnessCheck {
    pub fn ensure(&self) -> Result<()> {
        let mut failed = Vec::new();
        if !self.same_bias {
            failed.push("detector parameters differ");
        }
        if !self.same_descriptors {
            failed.push("descriptor sets differ");
        }
        if !self.no_test_leakage {
            failed.push("test data reached a fit stage");
        }
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "generalization not meaningful: {}",
                failed.join(", ")
            )))
        }
    }
}

/// `G_part` in both directions and `G_comp` for one pair, metric and method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub domain_a: String,
    pub domain_b: String,
    pub metric: MetricKind,
    pub method: Method,
    /// Classifier trained on A.
    pub g_part_ab: f64,
    /// Classifier trained on B.
    pub g_part_ba: f64,
    pub g_comp: f64,
}

impl GeneralizationReport {
    pub fn from_parts(
        domain_a: impl Into<String>,
        domain_b: impl Into<String>,
        metric: MetricKind,
        method: Method,
        g_part_ab: f64,
        g_part_ba: f64,
    ) -> Result<Self> {
        for g in [g_part_ab, g_part_ba] {
            if !g.is_finite() || !(0.0..=100.0).contains(&g) {
                return Err(Error::Data(format!("G_part {g} outside [0, 100]")));
            }
        }
        Ok(Self {
            domain_a: domain_a.into(),
            domain_b: domain_b.into(),
            metric,
            method,
            g_part_ab,
            g_part_ba,
            g_comp: g_comp(g_part_ab, g_part_ba),
        })
    }

    /// Builds the report from the four risks of the pair.
    pub fn from_risks(
        method: Method,
        a_on_a: &RiskValue,
        a_on_b: &RiskValue,
        b_on_b: &RiskValue,
        b_on_a: &RiskValue,
    ) -> Result<Self> {
        if a_on_a.metric != b_on_b.metric {
            return Err(Error::Config("risks mix metric kinds".into()));
        }
        let ab = g_part(a_on_a, a_on_b)?;
        let ba = g_part(b_on_b, b_on_a)?;
        Self::from_parts(
            a_on_a.classifier_origin.clone(),
            b_on_b.classifier_origin.clone(),
            a_on_a.metric,
            method,
            ab,
            ba,
        )
    }

    pub fn g_part(&self, dir: Direction) -> f64 {
        match dir {
            Direction::AtoB => self.g_part_ab,
            Direction::BtoA => self.g_part_ba,
        }
    }

    /// The same numbers with the pair order reversed.
    pub fn swapped(&self) -> Self {
        Self {
            domain_a: self.domain_b.clone(),
            domain_b: self.domain_a.clone(),
            g_part_ab: self.g_part_ba,
            g_part_ba: self.g_part_ab,
            ..self.clone()
        }
    }

    /// Re-expresses `other` in this report's pair order, if it is the same pair.
    fn aligned(&self, other: &GeneralizationReport) -> Option<GeneralizationReport> {
        if other.domain_a == self.domain_a && other.domain_b == self.domain_b {
            Some(other.clone())
        } else if other.domain_a == self.domain_b && other.domain_b == self.domain_a {
            Some(other.swapped())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Trained on A, applied to B.
    AtoB,
    /// Trained on B, applied to A.
    BtoA,
}

/// Who wins one inequality (lower generalization value wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Alpha,
    Beta,
    Tie,
}

fn winner(alpha: f64, beta: f64) -> Winner {
    if alpha < beta - TIE_EPS {
        Winner::Alpha
    } else if beta < alpha - TIE_EPS {
        Winner::Beta
    } else {
        Winner::Tie
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Wins both directions and `G_comp`.
    AlphaFull,
    /// Wins `G_comp` and the A→B direction; B→A is tied.
    AlphaPartialAb,
    /// Wins `G_comp` and the B→A direction; A→B is tied.
    AlphaPartialBa,
    /// Wins `G_comp` while losing one direction.
    AlphaCompleteOnly,
    BetaFull,
    BetaPartialAb,
    BetaPartialBa,
    BetaCompleteOnly,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::AlphaFull => "alpha_full",
            Verdict::AlphaPartialAb => "alpha_partial_ab",
            Verdict::AlphaPartialBa => "alpha_partial_ba",
            Verdict::AlphaCompleteOnly => "alpha_complete_only",
            Verdict::BetaFull => "beta_full",
            Verdict::BetaPartialAb => "beta_partial_ab",
            Verdict::BetaPartialBa => "beta_partial_ba",
            Verdict::BetaCompleteOnly => "beta_complete_only",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// The verdict with "alpha"/"beta" replaced by method names, e.g. `tca_full`.
    pub fn label(self, alpha: Method, beta: Method) -> String {
        let s = self.as_str();
        if let Some(rest) = s.strip_prefix("alpha") {
            format!("{alpha}{rest}")
        } else if let Some(rest) = s.strip_prefix("beta") {
            format!("{beta}{rest}")
        } else {
            s.to_string()
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub domain_a: String,
    pub domain_b: String,
    pub metric: MetricKind,
    pub alpha: Method,
    pub beta: Method,
    /// Inequality on `G_part` of the A-trained classifiers.
    pub ab: Winner,
    /// Inequality on `G_part` of the B-trained classifiers.
    pub ba: Winner,
    pub comp: Winner,
    pub verdict: Verdict,
}

pub fn compare_methods(
    alpha: &GeneralizationReport,
    beta: &GeneralizationReport,
) -> Result<Comparison> {
    let beta = alpha.aligned(beta).ok_or_else(|| {
        Error::Config(format!(
            "reports cover different pairs: ({}, {}) vs ({}, {})",
            alpha.domain_a, alpha.domain_b, beta.domain_a, beta.domain_b
        ))
    })?;
    if alpha.metric != beta.metric {
        return Err(Error::Config(format!(
            "cannot compare {} with {}",
            alpha.metric, beta.metric
        )));
    }
    if alpha.method == beta.method {
        return Err(Error::Config(format!(
            "both reports come from method {}",
            alpha.method
        )));
    }

    let ab = winner(alpha.g_part_ab, beta.g_part_ab);
    let ba = winner(alpha.g_part_ba, beta.g_part_ba);
    let comp = winner(alpha.g_comp, beta.g_comp);

    let verdict = match comp {
        Winner::Tie => Verdict::Inconclusive,
        w => {
            let other = if w == Winner::Alpha { Winner::Beta } else { Winner::Alpha };
            let alpha_side = w == Winner::Alpha;
            match (ab, ba) {
                (x, y) if x == w && y == w => {
                    if alpha_side { Verdict::AlphaFull } else { Verdict::BetaFull }
                }
                (x, y) if x == other || y == other => {
                    if alpha_side { Verdict::AlphaCompleteOnly } else { Verdict::BetaCompleteOnly }
                }
                (x, _) if x == w => {
                    if alpha_side { Verdict::AlphaPartialAb } else { Verdict::BetaPartialAb }
                }
                (_, y) if y == w => {
                    if alpha_side { Verdict::AlphaPartialBa } else { Verdict::BetaPartialBa }
                }
                _ => Verdict::Inconclusive,
            }
        }
    };

    Ok(Comparison {
        domain_a: alpha.domain_a.clone(),
        domain_b: alpha.domain_b.clone(),
        metric: alpha.metric,
        alpha: alpha.method,
        beta: beta.method,
        ab,
        ba,
        comp,
        verdict,
    })
}

/// One directed `G_part` cell: classifier trained on `source`, applied to `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialCell {
    pub source: String,
    pub target: String,
    pub metric: MetricKind,
    pub method: Method,
    pub g_part: f64,
}

impl GeneralizationReport {
    pub fn cell(&self, dir: Direction) -> PartialCell {
        let (source, target) = match dir {
            Direction::AtoB => (&self.domain_a, &self.domain_b),
            Direction::BtoA => (&self.domain_b, &self.domain_a),
        };
        PartialCell {
            source: source.clone(),
            target: target.clone(),
            metric: self.metric,
            method: self.method,
            g_part: self.g_part(dir),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeTransfer {
    pub source: String,
    pub target: String,
    pub metric: MetricKind,
    pub transfer_method: Method,
    pub baseline_method: Method,
    pub transfer_g_part: f64,
    pub baseline_g_part: f64,
    /// The baseline generalizes strictly better than the transfer method.
    pub flagged: bool,
}

/// Flags each baseline whose `G_part` is strictly lower than the transfer
/// method's on the same directed pair.
pub fn detect_negative_transfer_cells(
    tl: &PartialCell,
    baselines: &[PartialCell],
) -> Result<Vec<NegativeTransfer>> {
    if baselines.is_empty() {
        return Err(Error::Config("no baselines to compare against".into()));
    }
    baselines
        .iter()
        .map(|b| {
            if b.source != tl.source || b.target != tl.target || b.metric != tl.metric {
                return Err(Error::Config(format!(
                    "baseline {}→{} ({}) does not match {}→{} ({})",
                    b.source, b.target, b.metric, tl.source, tl.target, tl.metric
                )));
            }
            if b.method.is_transfer() {
                return Err(Error::Config(format!(
                    "baseline method {} performs transfer",
                    b.method
                )));
            }
            Ok(NegativeTransfer {
                source: tl.source.clone(),
                target: tl.target.clone(),
                metric: tl.metric,
                transfer_method: tl.method,
                baseline_method: b.method,
                transfer_g_part: tl.g_part,
                baseline_g_part: b.g_part,
                flagged: winner(b.g_part, tl.g_part) == Winner::Alpha,
            })
        })
        .collect()
}

/// Report-level form of [`detect_negative_transfer_cells`] for one direction.
pub fn detect_negative_transfer(
    tl_report: &GeneralizationReport,
    baseline_reports: &[GeneralizationReport],
    dir: Direction,
) -> Result<Vec<NegativeTransfer>> {
    let baselines = baseline_reports
        .iter()
        .map(|b| {
            tl_report
                .aligned(b)
                .map(|b| b.cell(dir))
                .ok_or_else(|| Error::Config("baseline covers a different pair".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    detect_negative_transfer_cells(&tl_report.cell(dir), &baselines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn risk(v: f64, origin: &str, on: &str) -> RiskValue {
        RiskValue::new(MetricKind::Auc, v, origin, on).unwrap()
    }

    fn report(method: Method, ab: f64, ba: f64) -> GeneralizationReport {
        GeneralizationReport::from_parts("A", "B", MetricKind::Auc, method, ab, ba).unwrap()
    }

    #[test]
    fn g_part_published_cells() {
        let g = g_part(&risk(90.59, "Boat-River", "Boat-River"), &risk(99.1, "Boat-River", "Canoe"))
            .unwrap();
        assert!((g - 8.51).abs() < 1e-9);
        let g = g_part(&risk(63.24, "Boat-River", "Boat-River"), &risk(92.75, "Boat-River", "Canoe"))
            .unwrap();
        assert!((g - 29.51).abs() < 1e-9);
        assert_eq!(g_part(&risk(70.0, "A", "A"), &risk(70.0, "A", "B")).unwrap(), 0.0);
    }

    #[test]
    fn g_part_rejects_mixed_inputs() {
        let eer = RiskValue::new(MetricKind::Eer, 10.0, "A", "B").unwrap();
        assert!(matches!(g_part(&risk(1.0, "A", "A"), &eer), Err(Error::Config(_))));
        assert!(matches!(
            g_part(&risk(1.0, "A", "A"), &risk(2.0, "C", "B")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn risk_range() {
        assert!(matches!(RiskValue::new(MetricKind::Auc, 100.5, "A", "A"), Err(Error::Data(_))));
        assert!(matches!(RiskValue::new(MetricKind::Auc, -0.1, "A", "A"), Err(Error::Data(_))));
    }

    #[test]
    fn g_comp_published_cells() {
        assert!((round2(g_comp(10.55, 8.51)) - 9.53).abs() < 1e-12);
        assert!((round2(g_comp(0.55, 3.11)) - 1.83).abs() < 1e-12);
        assert_eq!(g_comp(0.0, 0.0), 0.0);
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(round2(1.005), 1.01);
        assert_eq!(round2(27.025), 27.03);
        assert_eq!(round2(17.144), 17.14);
        assert_eq!(round2(0.0), 0.0);
        assert_eq!(round_half_up(27.025, 1), 27.0);
        assert_eq!(round_half_up(25.175, 1), 25.2);
        assert_eq!(round_half_up(-1.005, 2), -1.01);
    }

    #[test]
    fn full_win() {
        // (Canoe, Boat-Sea) AUC, TCA vs raw descriptors
        let tca = report(Method::Tca, 15.33, 6.13);
        let raw = report(Method::Raw, 37.63, 37.78);
        let c = compare_methods(&tca, &raw).unwrap();
        assert_eq!(c.verdict, Verdict::AlphaFull);
        assert_eq!(c.verdict.label(Method::Tca, Method::Raw), "tca_full");
        let c = compare_methods(&raw, &tca).unwrap();
        assert_eq!(c.verdict, Verdict::BetaFull);
    }

    #[test]
    fn compensation_case() {
        // (Belleview, Ped2) AUC, TCA vs PCA
        let tca = report(Method::Tca, 7.47, 8.92);
        let pca = report(Method::Pca, 18.92, 5.18);
        let c = compare_methods(&tca, &pca).unwrap();
        assert_eq!((c.ab, c.ba, c.comp), (Winner::Alpha, Winner::Beta, Winner::Alpha));
        assert_eq!(c.verdict, Verdict::AlphaCompleteOnly);
        assert_eq!(c.verdict.label(Method::Tca, Method::Pca), "tca_complete_only");
    }

    #[test]
    fn partial_and_ties() {
        let a = report(Method::Tca, 5.0, 5.0);
        let b = report(Method::Pca, 5.0, 5.0);
        assert_eq!(compare_methods(&a, &b).unwrap().verdict, Verdict::Inconclusive);
        let b = report(Method::Pca, 7.0, 5.0);
        assert_eq!(compare_methods(&a, &b).unwrap().verdict, Verdict::AlphaPartialAb);
        let b = report(Method::Pca, 5.0, 7.0);
        assert_eq!(compare_methods(&a, &b).unwrap().verdict, Verdict::AlphaPartialBa);
        assert_eq!(compare_methods(&b, &a).unwrap().verdict, Verdict::BetaPartialBa);
    }

    #[test]
    fn compare_aligns_swapped_pairs() {
        let a = report(Method::Tca, 1.0, 9.0);
        let b = GeneralizationReport::from_parts("B", "A", MetricKind::Auc, Method::Pca, 0.5, 2.0)
            .unwrap();
        let c = compare_methods(&a, &b).unwrap();
        assert_eq!((c.ab, c.ba), (Winner::Alpha, Winner::Beta));
    }

    #[test]
    fn compare_rejects_mismatch() {
        let a = report(Method::Tca, 1.0, 2.0);
        let other_pair =
            GeneralizationReport::from_parts("A", "C", MetricKind::Auc, Method::Pca, 1.0, 2.0).unwrap();
        assert!(matches!(compare_methods(&a, &other_pair), Err(Error::Config(_))));
        let eer =
            GeneralizationReport::from_parts("A", "B", MetricKind::Eer, Method::Pca, 1.0, 2.0).unwrap();
        assert!(matches!(compare_methods(&a, &eer), Err(Error::Config(_))));
        assert!(matches!(compare_methods(&a, &a), Err(Error::Config(_))));
    }

    fn cell(method: Method, g: f64) -> PartialCell {
        PartialCell {
            source: "Train".into(),
            target: "Ped1".into(),
            metric: MetricKind::Auc,
            method,
            g_part: g,
        }
    }

    #[test]
    fn negative_transfer_flags() {
        let flags =
            detect_negative_transfer_cells(&cell(Method::Tca, 19.14), &[cell(Method::Raw, 0.55)])
                .unwrap();
        assert!(flags[0].flagged);

        let flags = detect_negative_transfer_cells(
            &cell(Method::Tca, 1.77),
            &[cell(Method::Raw, 27.84), cell(Method::Pca, 4.1)],
        )
        .unwrap();
        assert!(flags.iter().all(|f| !f.flagged));

        let flags =
            detect_negative_transfer_cells(&cell(Method::Tca, 3.0), &[cell(Method::Pca, 3.0)])
                .unwrap();
        assert!(!flags[0].flagged);
    }

    #[test]
    fn negative_transfer_errors() {
        assert!(matches!(
            detect_negative_transfer_cells(&cell(Method::Tca, 1.0), &[]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            detect_negative_transfer_cells(&cell(Method::Tca, 1.0), &[cell(Method::Tca, 1.0)]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn negative_transfer_on_reports() {
        let tca = report(Method::Tca, 19.14, 8.96);
        let raw = report(Method::Raw, 0.55, 3.11);
        let f = detect_negative_transfer(&tca, &[raw.clone()], Direction::AtoB).unwrap();
        assert!(f[0].flagged);
        assert_eq!(f[0].source, "A");
        let f = detect_negative_transfer(&tca, &[raw], Direction::BtoA).unwrap();
        assert!(f[0].flagged);
        assert_eq!(f[0].source, "B");
    }

    #[test]
    fn meaningfulness_gate() {
        let ok = MeaningfulnessCheck { same_bias: true, same_descriptors: true, no_test_leakage: true };
        assert!(ok.ensure().is_ok());
        let bad = MeaningfulnessCheck { no_test_leakage: false, ..ok };
        assert!(matches!(bad.ensure(), Err(Error::Config(_))));
    }

    #[test]
    fn parse_names() {
        assert_eq!("TCA".parse::<Method>().unwrap(), Method::Tca);
        assert_eq!("eer".parse::<MetricKind>().unwrap(), MetricKind::Eer);
        assert!(matches!("svm".parse::<Method>(), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn g_part_is_symmetric_and_orientation_free(x in 0.0f64..=100.0, y in 0.0f64..=100.0) {
            let a = g_part(&risk(x, "A", "A"), &risk(y, "A", "B")).unwrap();
            let b = g_part(&risk(y, "A", "A"), &risk(x, "A", "B")).unwrap();
            prop_assert_eq!(a, b);
            let flipped = g_part(&risk(100.0 - x, "A", "A"), &risk(100.0 - y, "A", "B")).unwrap();
            prop_assert!((a - flipped).abs() < 1e-12);
            prop_assert!((0.0..=100.0).contains(&a));
        }

        #[test]
        fn g_comp_symmetric_and_bounded(a in 0.0f64..=100.0, b in 0.0f64..=100.0) {
            prop_assert_eq!(g_comp(a, b), g_comp(b, a));
            prop_assert!((0.0..=100.0).contains(&g_comp(a, b)));
        }

        #[test]
        fn self_pair_is_zero(x in 0.0f64..=100.0) {
            prop_assert_eq!(g_part(&risk(x, "A", "A"), &risk(x, "A", "A")).unwrap(), 0.0);
        }
    }
}
