//! Experiment orchestration: scenarios over domain pairs, records and tables.
//!
//! A scenario fixes how the feature space is prepared (raw, PCA or TCA) and
//! how the one-class detector is trained. [`run_pair`] executes it for one
//! source→target pair; [`run_matrix`] covers every ordered pair of a domain
//! list, self-pairs included, because each `G_part` needs the origin
//! domain's own risk.

pub mod config;
pub mod records;
pub mod tables;

use std::cell::{Cell, RefCell};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DomainDataset, DomainPair, FeatureMatrix, Label, Standardizer};
use crate::error::{Error, Result};
use crate::generalization::{MeaningfulnessCheck, Method};
use crate::linalg::KernelSpec;
use crate::metrics::{evaluate, EerMode, ScoreSeries};
use crate::ocsvm::{self, ocsvm_fit_with, ocsvm_score, SolverOptions};
use crate::pca::{self, pca_fit, pca_transform, PcaModel};
use crate::tca::{self, tca_fit, tca_transform, TcaModel};

pub use config::ExperimentConfig;
pub use records::{import_paper_tables, read_records, records_csv, records_json, timings_csv};
pub use tables::{emit_generalization_tables, GeneralizationTables, OutputFormat};

/// One experiment scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub method: Method,
    /// Projection dimensionality for PCA and TCA.
    pub components_k: usize,
    pub nu: f64,
    pub detector_kernel: KernelSpec,
    pub tca_kernel: KernelSpec,
    pub tca_mu: f64,
    /// Per-feature standardization fitted on the source training set.
    pub normalize: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            method: Method::Raw,
            components_k: pca::DEFAULT_COMPONENTS,
            nu: ocsvm::DEFAULT_NU,
            detector_kernel: ocsvm::DEFAULT_KERNEL,
            tca_kernel: tca::DEFAULT_KERNEL,
            tca_mu: tca::DEFAULT_MU,
            normalize: false,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn new(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components_k == 0 {
            return Err(Error::Config("components_k must be positive".into()));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::Config(format!("nu must lie in (0, 1], got {}", self.nu)));
        }
        if !(self.tca_mu > 0.0) || !self.tca_mu.is_finite() {
            return Err(Error::Config(format!("tca_mu must be positive, got {}", self.tca_mu)));
        }
        self.detector_kernel.validate()?;
        self.tca_kernel.validate()
    }

    /// Whether two scenarios train their detectors identically.
    fn same_detector(&self, other: &ScenarioConfig) -> bool {
        self.nu == other.nu
            && self.detector_kernel == other.detector_kernel
            && self.normalize == other.normalize
            && self.seed == other.seed
    }
}

/// Wall time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub feature_load_ms: f64,
    pub fit_projection_ms: f64,
    pub fit_detector_ms: f64,
    pub score_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.feature_load_ms + self.fit_projection_ms + self.fit_detector_ms + self.score_ms
    }
}

/// Detection result of one scenario on one source→target pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub source: String,
    pub target: String,
    pub method: Method,
    /// Percent.
    pub auc: f64,
    /// Percent.
    pub eer: f64,
    /// Absent for imported records.
    pub timings: Option<StageTimings>,
    /// Target test frames per second over the whole run.
    pub fps: Option<f64>,
}

impl RunRecord {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        method: Method,
        auc: f64,
        eer: f64,
    ) -> Result<Self> {
        for (name, v) in [("auc", auc), ("eer", eer)] {
            if !v.is_finite() || !(0.0..=100.0).contains(&v) {
                return Err(Error::Data(format!("{name} {v} outside [0, 100]")));
            }
        }
        Ok(Self {
            source: source.into(),
            target: target.into(),
            method,
            auc,
            eer,
            timings: None,
            fps: None,
        })
    }

    pub fn is_self_pair(&self) -> bool {
        self.source == self.target
    }
}

/// Pipeline stage, for the leakage audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stage {
    Normalize,
    FitProjection,
    FitDetector,
    Score,
    Evaluate,
}

impl Stage {
    /// Stages that learn parameters.
    pub fn is_fit(self) -> bool {
        matches!(self, Stage::Normalize | Stage::FitProjection | Stage::FitDetector)
    }
}

/// Which part of a domain pair was read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Access {
    SourceTrain,
    TargetTrain,
    SourceTest,
    TargetTest,
    TargetLabels,
}

impl Access {
    fn is_test_data(self) -> bool {
        matches!(self, Access::SourceTest | Access::TargetTest | Access::TargetLabels)
    }
}

/// Every data access of one pipeline run, tagged with its stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditTrail {
    events: Vec<(Stage, Access)>,
}

impl AuditTrail {
    pub fn events(&self) -> &[(Stage, Access)] {
        &self.events
    }

    /// Accesses of test rows or labels from a fit stage.
    pub fn leaks(&self) -> Vec<(Stage, Access)> {
        self.events
            .iter()
            .copied()
            .filter(|(s, a)| s.is_fit() && a.is_test_data())
            .collect()
    }

    pub fn is_clean(&self) -> bool {
        self.leaks().is_empty()
    }
}

/// Hands out the parts of a pair while logging who asked.
struct Guard<'a> {
    pair: &'a DomainPair,
    stage: Cell<Stage>,
    log: RefCell<Vec<(Stage, Access)>>,
}

impl<'a> Guard<'a> {
    fn new(pair: &'a DomainPair) -> Self {
        Self {
            pair,
            stage: Cell::new(Stage::Normalize),
            log: RefCell::new(Vec::new()),
        }
    }

    fn enter(&self, stage: Stage) {
        self.stage.set(stage);
    }

    fn touch(&self, access: Access) {
        self.log.borrow_mut().push((self.stage.get(), access));
    }

    fn source_train(&self) -> &'a FeatureMatrix {
        self.touch(Access::SourceTrain);
        self.pair.source().train()
    }

    fn target_train(&self) -> &'a FeatureMatrix {
        self.touch(Access::TargetTrain);
        self.pair.target().train()
    }

    fn target_test(&self) -> &'a FeatureMatrix {
        self.touch(Access::TargetTest);
        self.pair.target().test()
    }

    fn target_labels(&self) -> &'a [Label] {
        self.touch(Access::TargetLabels);
        self.pair.target().test_labels()
    }

    fn into_trail(self) -> AuditTrail {
        AuditTrail { events: self.log.into_inner() }
    }
}

enum Projection {
    Identity,
    Pca(PcaModel),
    Tca(TcaModel),
}

impl Projection {
    fn apply(&self, x: FeatureMatrix) -> Result<FeatureMatrix> {
        match self {
            Projection::Identity => Ok(x),
            Projection::Pca(m) => pca_transform(m, &x),
            Projection::Tca(m) => tca_transform(m, &x),
        }
    }
}

fn prepare(std: &Option<Standardizer>, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    match std {
        Some(s) => s.apply(x),
        None => Ok(x.clone()),
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs one scenario: fit on the source (and, for TCA, the target training
/// set), score the target test set, evaluate against its labels.
pub fn run_pair(cfg: &ScenarioConfig, pair: &DomainPair) -> Result<RunRecord> {
    run_pair_audited(cfg, pair).map(|(r, _)| r)
}

/// [`run_pair`] that also returns the log of data accesses.
pub fn run_pair_audited(cfg: &ScenarioConfig, pair: &DomainPair) -> Result<(RunRecord, AuditTrail)> {
    cfg.validate()?;
    let guard = Guard::new(pair);

    let t = Instant::now();
    guard.enter(Stage::Normalize);
    let std = if cfg.normalize {
        Some(Standardizer::fit(guard.source_train()))
    } else {
        None
    };

    guard.enter(Stage::FitProjection);
    let projection = match cfg.method {
        Method::Raw => Projection::Identity,
        Method::Pca => Projection::Pca(pca_fit(&prepare(&std, guard.source_train())?, cfg.components_k)?),
        Method::Tca => Projection::Tca(tca_fit(
            &prepare(&std, guard.source_train())?,
            &prepare(&std, guard.target_train())?,
            cfg.tca_kernel,
            cfg.components_k,
            cfg.tca_mu,
            cfg.seed,
        )?),
    };
    let fit_projection_ms = ms_since(t);

    let t = Instant::now();
    guard.enter(Stage::FitDetector);
    let z_train = projection.apply(prepare(&std, guard.source_train())?)?;
    let opts = SolverOptions { seed: cfg.seed, ..SolverOptions::default() };
    let detector = ocsvm_fit_with(&z_train, cfg.nu, cfg.detector_kernel, &opts)?;
    let fit_detector_ms = ms_since(t);

    let t = Instant::now();
    guard.enter(Stage::Score);
    let z_test = projection.apply(prepare(&std, guard.target_test())?)?;
    let scores = ocsvm_score(&detector, &z_test)?;

    guard.enter(Stage::Evaluate);
    let series = ScoreSeries::new(scores, guard.target_labels().to_vec())?;
    let detection = evaluate(&series, EerMode::Interpolated)?;
    let score_ms = ms_since(t);

    let timings = StageTimings {
        feature_load_ms: 0.0,
        fit_projection_ms,
        fit_detector_ms,
        score_ms,
    };
    let mut record = RunRecord::new(
        pair.source().name(),
        pair.target().name(),
        cfg.method,
        detection.auc,
        detection.eer,
    )?;
    record.fps = Some(pair.target().test().rows() as f64 / (timings.total_ms() / 1e3).max(1e-9));
    record.timings = Some(timings);
    Ok((record, guard.into_trail()))
}

/// Every scenario on every ordered pair of `domains`, self-pairs included.
///
/// Output order is scenario order, then source, then target, in input
/// order, whatever order the parallel workers finish in.
pub fn run_matrix(cfgs: &[ScenarioConfig], domains: &[DomainDataset]) -> Result<Vec<RunRecord>> {
    if cfgs.is_empty() {
        return Err(Error::Config("no scenarios configured".into()));
    }
    if domains.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 domains, got {}",
            domains.len()
        )));
    }
    for (i, d) in domains.iter().enumerate() {
        if domains[..i].iter().any(|e| e.name() == d.name()) {
            return Err(Error::Config(format!("duplicate domain name {:?}", d.name())));
        }
    }
    for (i, c) in cfgs.iter().enumerate() {
        c.validate()?;
        if cfgs[..i].iter().any(|e| e.method == c.method) {
            return Err(Error::Config(format!("method {} configured twice", c.method)));
        }
    }

    let mut check = MeaningfulnessCheck {
        same_bias: cfgs.iter().all(|c| c.same_detector(&cfgs[0])),
        same_descriptors: domains.iter().all(|d| d.dims() == domains[0].dims()),
        no_test_leakage: true,
    };
    check.ensure()?;

    let jobs: Vec<(usize, usize, usize)> = (0..cfgs.len())
        .flat_map(|c| {
            (0..domains.len()).flat_map(move |s| (0..domains.len()).map(move |t| (c, s, t)))
        })
        .collect();

    let results = jobs
        .par_iter()
        .map(|&(c, s, t)| {
            let pair = DomainPair::new(domains[s].clone(), domains[t].clone())?;
            run_pair_audited(&cfgs[c], &pair)
        })
        .collect::<Result<Vec<_>>>()?;

    check.no_test_leakage = results.iter().all(|(_, audit)| audit.is_clean());
    check.ensure()?;
    Ok(results.into_iter().map(|(r, _)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_synthetic_pair, SyntheticSpec};
    use crate::linalg::Gamma;

    fn pair(seed: u64, shift: f64) -> DomainPair {
        make_synthetic_pair(&SyntheticSpec { seed, shift, n_train: 60, n_test: 60, ..Default::default() })
            .unwrap()
    }

    fn rbf(method: Method) -> ScenarioConfig {
        ScenarioConfig {
            method,
            components_k: 2,
            detector_kernel: KernelSpec::Rbf(Gamma::MedianHeuristic),
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn defaults() {
        let c = ScenarioConfig::default();
        assert_eq!(c.components_k, 80);
        assert_eq!(c.nu, 0.25);
        assert_eq!(c.detector_kernel, KernelSpec::Linear);
        assert_eq!(c.tca_kernel, KernelSpec::Rbf(Gamma::MedianHeuristic));
        assert_eq!(c.tca_mu, 1.0);
        assert!(!c.normalize);
    }

    #[test]
    fn no_gap_raw_detects_well() {
        let r = run_pair(&rbf(Method::Raw), &pair(1, 0.0)).unwrap();
        assert!(r.auc > 90.0, "auc {}", r.auc);
        assert!((0.0..=100.0).contains(&r.eer));
        assert!(r.timings.is_some() && r.fps.unwrap() > 0.0);
    }

    #[test]
    fn fit_stages_never_see_test_data() {
        let p = pair(2, 3.0);
        for method in Method::ALL {
            for normalize in [false, true] {
                let cfg = ScenarioConfig { normalize, ..rbf(method) };
                let (_, audit) = run_pair_audited(&cfg, &p).unwrap();
                assert!(audit.is_clean(), "{method}: {:?}", audit.leaks());
                assert!(audit.events().contains(&(Stage::Evaluate, Access::TargetLabels)));
                assert!(audit.events().contains(&(Stage::Score, Access::TargetTest)));
                let tca_reads_target =
                    audit.events().contains(&(Stage::FitProjection, Access::TargetTrain));
                assert_eq!(tca_reads_target, method == Method::Tca);
            }
        }
    }

    #[test]
    fn self_pair_matches_explicit_source_to_source() {
        let p = pair(3, 3.0);
        let selfp = DomainPair::new(p.source().clone(), p.source().clone()).unwrap();
        for method in Method::ALL {
            let a = run_pair(&rbf(method), &selfp).unwrap();
            let b = run_pair(&rbf(method), &selfp).unwrap();
            assert_eq!((a.auc, a.eer), (b.auc, b.eer));
        }
    }

    #[test]
    fn k_beyond_rank_is_config_error() {
        let cfg = ScenarioConfig { components_k: 9, ..rbf(Method::Pca) };
        assert!(matches!(run_pair(&cfg, &pair(4, 1.0)), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_scenario() {
        let cfg = ScenarioConfig { nu: 0.0, ..ScenarioConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = ScenarioConfig { tca_mu: -1.0, ..ScenarioConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn matrix_counts_and_order() {
        let p = pair(5, 2.0);
        let third = make_synthetic_pair(&SyntheticSpec { seed: 9, n_train: 60, n_test: 60, ..Default::default() })
            .unwrap()
            .target()
            .renamed("third");
        let domains = vec![p.source().clone(), p.target().clone(), third];
        let cfgs: Vec<_> = [Method::Tca, Method::Raw, Method::Pca].map(rbf).to_vec();
        let recs = run_matrix(&cfgs, &domains).unwrap();
        assert_eq!(recs.len(), 27);
        assert_eq!(recs[0].method, Method::Tca);
        assert_eq!((recs[0].source.as_str(), recs[0].target.as_str()), ("source", "source"));
        assert_eq!((recs[1].source.as_str(), recs[1].target.as_str()), ("source", "target"));
        assert_eq!((recs[3].source.as_str(), recs[3].target.as_str()), ("target", "source"));
        assert_eq!(recs[9].method, Method::Raw);
        assert_eq!(recs.iter().filter(|r| r.is_self_pair()).count(), 9);
    }

    #[test]
    fn duplicated_domain_gives_matching_records() {
        let p = pair(6, 3.0);
        let a = p.source().clone();
        let b = a.renamed("copy");
        let recs = run_matrix(&[rbf(Method::Raw)], &[a, b]).unwrap();
        let self_rec = &recs[0];
        let cross = &recs[1];
        assert!((self_rec.auc - cross.auc).abs() < 1e-6);
        assert!((self_rec.eer - cross.eer).abs() < 1e-6);
    }

    #[test]
    fn matrix_rejects_bad_requests() {
        let p = pair(7, 1.0);
        let two = vec![p.source().clone(), p.target().clone()];
        assert!(matches!(run_matrix(&[rbf(Method::Raw)], &[]), Err(Error::Config(_))));
        assert!(matches!(run_matrix(&[rbf(Method::Raw)], &two[..1]), Err(Error::Config(_))));
        assert!(matches!(run_matrix(&[], &two), Err(Error::Config(_))));
        let dup = vec![p.source().clone(), p.source().clone()];
        assert!(matches!(run_matrix(&[rbf(Method::Raw)], &dup), Err(Error::Config(_))));
        let mixed = [rbf(Method::Raw), ScenarioConfig { nu: 0.5, ..rbf(Method::Pca) }];
        assert!(matches!(run_matrix(&mixed, &two), Err(Error::Config(_))));
        let twice = [rbf(Method::Raw), rbf(Method::Raw)];
        assert!(matches!(run_matrix(&twice, &two), Err(Error::Config(_))));
    }
}
