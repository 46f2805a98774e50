//! Monte-Carlo experiments over memory detector models.
//!
//! Shot `i` of an experiment with base seed `s` is sampled from
//! `shot_seed(s, i)`, so results do not depend on how shots are spread
//! across threads. A shot is a logical failure when the committed
//! correction's observable action differs from the sampled one on any
//! observable.

mod oracle;
mod stats;
mod studies;
mod tables;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptive::{AdaptiveConfig, AdaptiveController, TunerMode};
use crate::codes::{
    bb72, build_bb, build_memory_dem, build_repetition, build_toric, sample_shot, shot_seed, Basis,
    CodeError, CssCode, DetectorModel, Monomial, NoiseModelSpec,
};
use crate::window::{BpLsdDecoder, WindowConfig, WindowPlan, WindowRecord};
use crate::DecodeError;

pub use oracle::{oracle_agreement, oracle_decode, OracleAgreement, OracleResult, ORACLE_MAX_FAULTS};
pub use stats::{
    average_ranks, per_round, quantile_sorted, spearman, wilson_interval, Correlation, Proportion,
    TimingSummary, Z95,
};
pub use studies::{
    adaptive_comparison, commit_size_sweep, detector_separation, ler_vs_q_bins, q_bins_from_shots,
    window_time_scaling, AdaptiveComparison, CommitPoint, QBin, QBinTable, SeparationStats,
    TimePoint,
};
pub use tables::{
    commit_sweep_csv, controller_trace_csv, ler_vs_p_csv, ler_vs_q_csv, records_csv,
    separation_cdf_csv, time_vs_w_csv,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodeSpec {
    Toric {
        d: usize,
    },
    /// Bivariate bicycle code with `A`, `B` given as monomials `x^i y^j`.
    Bb {
        l: usize,
        m: usize,
        a: Vec<Monomial>,
        b: Vec<Monomial>,
        d: usize,
    },
    /// The [[72,12,6]] bivariate bicycle code.
    Bb72,
    Repetition {
        n: usize,
    },
    /// A detector model read from its JSON document.
    DemFile {
        path: PathBuf,
    },
}

impl CodeSpec {
    pub fn build(&self) -> Result<Option<CssCode>, HarnessError> {
        Ok(match self {
            CodeSpec::Toric { d } => Some(build_toric(*d)?),
            CodeSpec::Bb { l, m, a, b, d } => Some(build_bb(*l, *m, a, b, *d)?),
            CodeSpec::Bb72 => Some(bb72()),
            CodeSpec::Repetition { n } => Some(build_repetition(*n)?),
            CodeSpec::DemFile { .. } => None,
        })
    }

    pub fn label(&self) -> String {
        match self {
            CodeSpec::Toric { d } => format!("toric_d{d}"),
            CodeSpec::Bb { l, m, d, .. } => format!("bb_{l}x{m}_d{d}"),
            CodeSpec::Bb72 => "bb72".into(),
            CodeSpec::Repetition { n } => format!("repetition_{n}"),
            CodeSpec::DemFile { path } => format!("dem:{}", path.display()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowMode {
    /// One window over every round.
    Global,
    Fixed {
        window: usize,
    },
    /// Baseline and target sizes come from the adaptive section.
    Adaptive,
}

fn default_commit() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub code: CodeSpec,
    #[serde(default)]
    pub basis: Basis,
    pub rounds: usize,
    pub noise: NoiseModelSpec,
    pub window: WindowMode,
    #[serde(default = "default_commit")]
    pub commit: usize,
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub adaptive: AdaptiveConfig<f64>,
    #[serde(default)]
    pub decoder: BpLsdDecoder<f64>,
}

impl ExperimentSpec {
    pub fn window_config(&self) -> WindowConfig {
        match self.window {
            WindowMode::Global => WindowConfig::global(self.rounds),
            WindowMode::Fixed { window } => WindowConfig::new(window, self.commit, self.rounds),
            WindowMode::Adaptive => {
                WindowConfig::new(self.adaptive.baseline_window, self.commit, self.rounds)
            }
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.shots == 0 {
            return Err(HarnessError::Config("shots must be >= 1".into()));
        }
        self.noise.validate()?;
        self.decoder.bp.validate()?;
        self.window_config().validate()?;
        if self.adaptive.q.alpha < 1.0 {
            return Err(HarnessError::Config("adaptive.q.alpha must be >= 1".into()));
        }
        if self.window == WindowMode::Adaptive {
            self.adaptive.validate()?;
            if self.adaptive.target_window > self.rounds {
                return Err(HarnessError::Config(format!(
                    "target window {} exceeds {} rounds",
                    self.adaptive.target_window, self.rounds
                )));
            }
        }
        Ok(())
    }

    /// Same experiment decoded with a fixed window.
    pub fn with_fixed_window(&self, window: usize) -> Self {
        Self {
            window: WindowMode::Fixed { window },
            ..self.clone()
        }
    }

    /// Builds the code (when the experiment names one) and the detector model.
    pub fn build(&self) -> Result<(Option<CssCode>, DetectorModel<f64>), HarnessError> {
        let code = self.code.build()?;
        let dem = match (&code, &self.code) {
            (Some(code), _) => build_memory_dem(code, self.basis, self.rounds, &self.noise)?,
            (None, CodeSpec::DemFile { path }) => {
                let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                    path: path.clone(),
                    source,
                })?;
                let dem = DetectorModel::from_json(&text)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                if dem.rounds() != self.rounds {
                    return Err(HarnessError::Config(format!(
                        "{} has {} rounds, experiment asks for {}",
                        path.display(),
                        dem.rounds(),
                        self.rounds
                    )));
                }
                dem
            }
            (None, _) => unreachable!("only model files lack a code"),
        };
        Ok((code, dem))
    }
}

/// Outcome of one decoded shot.
#[derive(Clone, Debug)]
pub struct ShotOutcome {
    pub index: u64,
    pub failed: bool,
    /// Observables whose prediction was wrong.
    pub failed_observables: Vec<usize>,
    pub records: Vec<WindowRecord<f64>>,
    /// Threshold after the shot's last window, in adaptive mode.
    pub final_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QHistogram {
    /// `bins + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl QHistogram {
    pub fn from_values(values: &[f64], bins: usize) -> Self {
        let max = values.iter().copied().fold(0.0, f64::max);
        let top = if max > 0.0 { max } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|i| top * i as f64 / bins as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let i = ((v / top) * bins as f64).floor() as usize;
            counts[i.min(bins - 1)] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub mode: TunerMode,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub crate_version: String,
    pub alpha: f64,
    pub delta: f64,
    pub c0: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub tuner_mode: TunerMode,
    pub seed: u64,
    pub seed_derivation: String,
    pub git_revision: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub code_label: String,
    pub n_detectors: usize,
    pub n_faults: usize,
    pub n_observables: usize,
    pub shots: u64,
    pub logical_errors: u64,
    pub ler: Proportion,
    pub ler_per_round: f64,
    pub ler_per_round_ci: (f64, f64),
    pub observable_errors: Vec<u64>,
    pub windows: u64,
    pub wall_time: TimingSummary,
    /// Mean per-window wall time over that of the fixed target-window run.
    pub normalized_time: Option<f64>,
    pub retry_rate: f64,
    /// Retry rate over the second half of the window stream.
    pub steady_state_retry_rate: f64,
    pub threshold: Option<ThresholdSummary>,
    pub q_mean: f64,
    pub q_histogram: QHistogram,
    pub metadata: ReportMetadata,
}

impl ExperimentReport {
    pub fn mean_window_ns(&self) -> f64 {
        self.wall_time.mean_ns
    }
}

const Q_HISTOGRAM_BINS: usize = 20;

/// Decodes every shot of `spec` against `dem`, in shot order.
pub fn run_shots(
    spec: &ExperimentSpec,
    dem: &DetectorModel<f64>,
) -> Result<Vec<ShotOutcome>, HarnessError> {
    spec.validate()?;
    let escalation = match spec.window {
        WindowMode::Adaptive => spec.adaptive.escalation_sizes(),
        _ => Vec::new(),
    };
    let plan = WindowPlan::with_escalation(dem, spec.window_config(), &escalation)?;
    let adaptive = spec.window == WindowMode::Adaptive;
    let decode = |i: u64, ctrl: Option<&mut AdaptiveController<f64>>| {
        let shot = sample_shot(dem, shot_seed(spec.seed, i));
        let out = plan.decode_stream(&shot.syndrome, &spec.decoder, &spec.adaptive.q, ctrl)?;
        let predicted = dem.observable_flips(&out.correction);
        let wrong = predicted.xor(&shot.observable_flips);
        let mut records = out.records;
        for r in &mut records {
            r.committed_correction = Vec::new();
        }
        Ok::<_, HarnessError>(ShotOutcome {
            index: i,
            failed: !wrong.is_zero(),
            failed_observables: wrong.ones().collect(),
            final_threshold: records.last().and_then(|r| r.c_after),
            records,
        })
    };

    if adaptive && spec.adaptive.tuner_mode == TunerMode::SharedStream {
        let mut ctrl = AdaptiveController::new(spec.adaptive)?;
        (0..spec.shots).map(|i| decode(i, Some(&mut ctrl))).collect()
    } else {
        (0..spec.shots)
            .into_par_iter()
            .map(|i| {
                let mut ctrl = if adaptive {
                    Some(AdaptiveController::new(spec.adaptive)?)
                } else {
                    None
                };
                decode(i, ctrl.as_mut())
            })
            .collect()
    }
}

/// Aggregates decoded shots into a report.
pub fn summarize(
    spec: &ExperimentSpec,
    dem: &DetectorModel<f64>,
    shots: &[ShotOutcome],
) -> ExperimentReport {
    let n = shots.len() as u64;
    let errors = shots.iter().filter(|s| s.failed).count() as u64;
    let mut observable_errors = vec![0u64; dem.n_observables()];
    for s in shots {
        for &o in &s.failed_observables {
            observable_errors[o] += 1;
        }
    }
    let records: Vec<&WindowRecord<f64>> = shots.iter().flat_map(|s| &s.records).collect();
    let windows = records.len() as u64;
    let retries = records.iter().filter(|r| r.retried).count();
    let tail = &records[records.len() / 2..];
    let tail_retries = tail.iter().filter(|r| r.retried).count();
    let qs: Vec<f64> = records.iter().map(|r| r.q_value).collect();
    let ler = Proportion::wilson(errors, n);
    let rounds = spec.rounds;
    let thresholds: Vec<f64> = shots.iter().filter_map(|s| s.final_threshold).collect();
    let threshold = (!thresholds.is_empty()).then(|| ThresholdSummary {
        mode: spec.adaptive.tuner_mode,
        mean: thresholds.iter().sum::<f64>() / thresholds.len() as f64,
        min: thresholds.iter().copied().fold(f64::INFINITY, f64::min),
        max: thresholds.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    });
    let ratio = |k: usize, total: usize| if total == 0 { 0.0 } else { k as f64 / total as f64 };
    ExperimentReport {
        spec: spec.clone(),
        code_label: spec.code.label(),
        n_detectors: dem.n_detectors(),
        n_faults: dem.n_faults(),
        n_observables: dem.n_observables(),
        shots: n,
        logical_errors: errors,
        ler,
        ler_per_round: per_round(ler.estimate, rounds),
        ler_per_round_ci: (per_round(ler.lo, rounds), per_round(ler.hi, rounds)),
        observable_errors,
        windows,
        wall_time: TimingSummary::from_samples(records.iter().map(|r| r.wall_time_ns).collect()),
        normalized_time: None,
        retry_rate: ratio(retries, records.len()),
        steady_state_retry_rate: ratio(tail_retries, tail.len()),
        threshold,
        q_mean: if qs.is_empty() { 0.0 } else { qs.iter().sum::<f64>() / qs.len() as f64 },
        q_histogram: QHistogram::from_values(&qs, Q_HISTOGRAM_BINS),
        metadata: ReportMetadata {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            alpha: spec.adaptive.q.alpha,
            delta: spec.adaptive.delta,
            c0: spec.adaptive.c0,
            r_min: spec.adaptive.r_min,
            r_max: spec.adaptive.r_max,
            tuner_mode: spec.adaptive.tuner_mode,
            seed: spec.seed,
            seed_derivation: "splitmix64(seed + (shot + 1) * 0x9E3779B97F4A7C15)".into(),
            git_revision: None,
        },
    }
}

/// Runs an experiment. Adaptive experiments also run the fixed
/// target-window decoder on the same shots to normalize their time.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
    run_experiment_detailed(spec).map(|(report, _)| report)
}

/// As [`run_experiment`], also returning every decoded shot.
pub fn run_experiment_detailed(
    spec: &ExperimentSpec,
) -> Result<(ExperimentReport, Vec<ShotOutcome>), HarnessError> {
    let (_, dem) = spec.build()?;
    let shots = run_shots(spec, &dem)?;
    let mut report = summarize(spec, &dem, &shots);
    if spec.window == WindowMode::Adaptive {
        let target = spec.with_fixed_window(spec.adaptive.target_window);
        let reference = summarize(&target, &dem, &run_shots(&target, &dem)?);
        report.normalized_time = Some(report.mean_window_ns() / reference.mean_window_ns());
    }
    Ok((report, shots))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toric_spec(d: usize, rounds: usize, p: f64, window: WindowMode) -> ExperimentSpec {
        ExperimentSpec {
            code: CodeSpec::Toric { d },
            basis: Basis::Z,
            rounds,
            noise: NoiseModelSpec::depolarizing(p).unwrap(),
            window,
            commit: 1,
            shots: 200,
            seed: 11,
            adaptive: AdaptiveConfig {
                baseline_window: 2,
                target_window: 3,
                ..Default::default()
            },
            decoder: BpLsdDecoder::default(),
        }
    }

    #[test]
    fn quiet_experiment_has_no_errors() {
        let spec = toric_spec(3, 5, 0.01, WindowMode::Adaptive);
        let (_, dem) = spec.build().unwrap();
        let quiet = dem.with_priors(vec![0.0; dem.n_faults()]).unwrap();
        let shots = run_shots(&spec, &quiet).unwrap();
        let r = summarize(&spec, &quiet, &shots);
        assert_eq!(r.logical_errors, 0);
        assert_eq!(r.ler.estimate, 0.0);
        assert_eq!(r.retry_rate, 0.0);
        assert_eq!(r.q_mean, 0.0);
    }

    #[test]
    fn global_equals_single_window() {
        let global = toric_spec(3, 4, 0.02, WindowMode::Global);
        let single = toric_spec(3, 4, 0.02, WindowMode::Fixed { window: 4 });
        let single = ExperimentSpec { commit: 3, ..single };
        let a = run_experiment(&global).unwrap();
        let b = run_experiment(&single).unwrap();
        assert_eq!(a.logical_errors, b.logical_errors);
    }

    #[test]
    fn deterministic_counts() {
        let spec = toric_spec(3, 6, 0.02, WindowMode::Adaptive);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.logical_errors, b.logical_errors);
        assert_eq!(a.retry_rate, b.retry_rate);
        assert_eq!(a.q_histogram, b.q_histogram);
        assert!(a.normalized_time.unwrap() > 0.0);
    }

    #[test]
    fn spec_validation() {
        let mut spec = toric_spec(3, 6, 0.02, WindowMode::Fixed { window: 3 });
        spec.shots = 0;
        assert!(spec.validate().is_err());
        spec.shots = 1;
        spec.commit = 3;
        assert!(spec.validate().is_err());
        let mut spec = toric_spec(3, 6, 0.02, WindowMode::Adaptive);
        spec.adaptive.target_window = 9;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = toric_spec(5, 10, 0.01, WindowMode::Adaptive);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let minimal = r#"{"code":{"family":"toric","d":3},"rounds":3,
            "noise":{"kind":"depolarizing","p":0.01},"window":{"mode":"global"},"shots":5}"#;
        let parsed: ExperimentSpec = serde_json::from_str(minimal).unwrap();
        assert_eq!(parsed.commit, 1);
        assert_eq!(parsed.adaptive.c0, 0.003);
        let unknown = minimal.replace("\"shots\":5", "\"shots\":5,\"bogus\":1");
        assert!(serde_json::from_str::<ExperimentSpec>(&unknown).is_err());
    }

    #[test]
    fn histogram_counts_everything() {
        let h = QHistogram::from_values(&[0.0, 0.5, 1.0, 0.25], 4);
        assert_eq!(h.counts.iter().sum::<u64>(), 4);
        assert_eq!(h.counts, vec![1, 1, 1, 1]);
    }
}
