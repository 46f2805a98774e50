//! Sweeps and statistics built from repeated experiment runs.

use serde::{Deserialize, Serialize};

use super::{
    run_shots, spearman, summarize, CodeSpec, Correlation, ExperimentReport, ExperimentSpec,
    HarnessError, Proportion, ShotOutcome, WindowMode,
};
use crate::codes::{sample_shot, shot_seed, ToricLayout};
use crate::window::WindowPlan;

fn code_distance(spec: &ExperimentSpec) -> Result<usize, HarnessError> {
    spec.code
        .build()?
        .map(|c| c.d)
        .ok_or_else(|| HarnessError::Config("study needs a code with known distance".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QBin {
    pub q_lo: f64,
    pub q_hi: f64,
    pub q_mean: f64,
    pub ler: Proportion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QBinTable {
    pub bins: Vec<QBin>,
    /// Between bin mean `Q` and bin error rate.
    pub correlation: Correlation,
    /// Shots split at the median `Q`.
    pub lower_half: Proportion,
    pub upper_half: Proportion,
    pub report: ExperimentReport,
}

/// Bins shots of a global-decoding experiment by their `Q` into `n_bins`
/// equal-count bins and reports each bin's logical error rate.
pub fn ler_vs_q_bins(spec: &ExperimentSpec, n_bins: usize) -> Result<QBinTable, HarnessError> {
    if spec.window != WindowMode::Global {
        return Err(HarnessError::Config("Q binning needs global decoding".into()));
    }
    let (_, dem) = spec.build()?;
    let shots = run_shots(spec, &dem)?;
    q_bins_from_shots(&shots, n_bins, summarize(spec, &dem, &shots))
}

/// Bins already decoded single-window shots; see [`ler_vs_q_bins`].
pub fn q_bins_from_shots(
    shots: &[ShotOutcome],
    n_bins: usize,
    report: ExperimentReport,
) -> Result<QBinTable, HarnessError> {
    if n_bins < 2 || n_bins > shots.len() {
        return Err(HarnessError::Config(format!(
            "need 2 <= bins <= {} shots, got {n_bins} bins",
            shots.len()
        )));
    }
    if shots.iter().any(|s| s.records.len() != 1) {
        return Err(HarnessError::Config("Q binning needs one window per shot".into()));
    }
    let mut order: Vec<(f64, bool)> = shots.iter().map(|s| (s.records[0].q_value, s.failed)).collect();
    // Stable sort keeps shot order among equal Q, so binning is deterministic.
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    let chunk = |slice: &[(f64, bool)]| {
        let errors = slice.iter().filter(|(_, f)| *f).count() as u64;
        QBin {
            q_lo: slice.first().map_or(0.0, |x| x.0),
            q_hi: slice.last().map_or(0.0, |x| x.0),
            q_mean: slice.iter().map(|x| x.0).sum::<f64>() / slice.len() as f64,
            ler: Proportion::wilson(errors, slice.len() as u64),
        }
    };
    let n = order.len();
    let bins: Vec<QBin> = (0..n_bins)
        .map(|b| chunk(&order[b * n / n_bins..(b + 1) * n / n_bins]))
        .collect();
    let xs: Vec<f64> = bins.iter().map(|b| b.q_mean).collect();
    let ys: Vec<f64> = bins.iter().map(|b| b.ler.estimate).collect();
    Ok(QBinTable {
        correlation: spearman(&xs, &ys),
        lower_half: chunk(&order[..n / 2]).ler,
        upper_half: chunk(&order[n / 2..]).ler,
        bins,
        report,
    })
}

/// Per-window maxima of nearest-neighbour distances between triggered detectors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeparationStats {
    /// Toric Manhattan distance between check positions, time ignored.
    pub space: Vec<usize>,
    /// Round difference, position ignored.
    pub time: Vec<usize>,
    /// Windows with fewer than two triggered detectors.
    pub excluded: u64,
}

impl SeparationStats {
    /// Fraction of windows whose maximum lies within `bound`.
    pub fn fraction_within(values: &[usize], bound: usize) -> f64 {
        if values.is_empty() {
            return 1.0;
        }
        values.iter().filter(|&&v| v <= bound).count() as f64 / values.len() as f64
    }

    /// `(distance, fraction <= distance)` for every distance up to the maximum.
    pub fn cdf(values: &[usize]) -> Vec<(usize, f64)> {
        let max = values.iter().copied().max().unwrap_or(0);
        (0..=max).map(|v| (v, Self::fraction_within(values, v))).collect()
    }

    /// Adds one window given its triggered detectors as `(round, check)`.
    pub fn push_window(&mut self, layout: &ToricLayout, triggered: &[(usize, usize)]) {
        if triggered.len() < 2 {
            self.excluded += 1;
            return;
        }
        let mut space_max = 0;
        let mut time_max = 0;
        for (i, &(ra, ca)) in triggered.iter().enumerate() {
            let mut space_nn = usize::MAX;
            let mut time_nn = usize::MAX;
            for (j, &(rb, cb)) in triggered.iter().enumerate() {
                if i != j {
                    space_nn = space_nn.min(layout.distance(ca, cb));
                    time_nn = time_nn.min(ra.abs_diff(rb));
                }
            }
            space_max = space_max.max(space_nn);
            time_max = time_max.max(time_nn);
        }
        self.space.push(space_max);
        self.time.push(time_max);
    }
}

/// Nearest-neighbour statistics of the syndromes seen by each window of a
/// fixed-window toric experiment.
pub fn detector_separation(spec: &ExperimentSpec) -> Result<SeparationStats, HarnessError> {
    if !matches!(spec.code, CodeSpec::Toric { .. }) || !matches!(spec.window, WindowMode::Fixed { .. }) {
        return Err(HarnessError::Config(
            "separation study needs a toric code and a fixed window".into(),
        ));
    }
    spec.validate()?;
    let (code, dem) = spec.build()?;
    let layout = code.and_then(|c| c.toric).expect("toric codes carry a layout");
    let checks_per_round = dem.n_detectors() / dem.rounds();
    let plan = WindowPlan::new(&dem, spec.window_config())?;
    let mut stats = SeparationStats::default();
    for i in 0..spec.shots {
        let shot = sample_shot(&dem, shot_seed(spec.seed, i));
        let mut windows: Vec<Vec<(usize, usize)>> = Vec::new();
        plan.decode_stream_observed(&shot.syndrome, &spec.decoder, &spec.adaptive.q, None, &mut |w| {
            windows.push(
                w.syndrome
                    .ones()
                    .map(|local| {
                        let d = w.sub.detectors[local];
                        (d / checks_per_round, d % checks_per_round)
                    })
                    .collect(),
            );
        })?;
        for w in &windows {
            stats.push_window(&layout, w);
        }
    }
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitPoint {
    pub commit: usize,
    pub window: usize,
    pub report: ExperimentReport,
}

/// Logical error rate for each commit size with the buffer fixed at `d - 1`.
pub fn commit_size_sweep(
    spec: &ExperimentSpec,
    commits: &[usize],
) -> Result<Vec<CommitPoint>, HarnessError> {
    let d = code_distance(spec)?;
    let (_, dem) = spec.build()?;
    commits
        .iter()
        .map(|&commit| {
            let window = commit + d - 1;
            let point = ExperimentSpec {
                window: WindowMode::Fixed { window },
                commit,
                ..spec.clone()
            };
            let shots = run_shots(&point, &dem)?;
            Ok(CommitPoint {
                commit,
                window,
                report: summarize(&point, &dem, &shots),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub window: usize,
    pub mean_window_ns: f64,
    /// Relative to the reference window size.
    pub normalized: f64,
    pub report: ExperimentReport,
}

/// Mean per-window decode time for each window size on identical shots,
/// normalized to `W = d` (or to the largest size when `d` is absent).
pub fn window_time_scaling(
    spec: &ExperimentSpec,
    sizes: &[usize],
) -> Result<Vec<TimePoint>, HarnessError> {
    if sizes.is_empty() {
        return Err(HarnessError::Config("no window sizes given".into()));
    }
    let d = code_distance(spec).ok();
    let reference = d
        .filter(|d| sizes.contains(d))
        .unwrap_or_else(|| *sizes.iter().max().expect("nonempty"));
    let (_, dem) = spec.build()?;
    let mut points = sizes
        .iter()
        .map(|&window| {
            let point = spec.with_fixed_window(window);
            let report = summarize(&point, &dem, &run_shots(&point, &dem)?);
            Ok(TimePoint {
                window,
                mean_window_ns: report.mean_window_ns(),
                normalized: 0.0,
                report,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let base = points
        .iter()
        .find(|p| p.window == reference)
        .expect("reference is one of the sizes")
        .mean_window_ns;
    for p in &mut points {
        p.normalized = p.mean_window_ns / base;
    }
    Ok(points)
}

/// Baseline, target and adaptive runs of one adaptive experiment on the
/// same shots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveComparison {
    pub baseline: ExperimentReport,
    pub target: ExperimentReport,
    pub adaptive: ExperimentReport,
}

impl AdaptiveComparison {
    pub fn normalized_time(&self) -> f64 {
        self.adaptive.normalized_time.expect("set by adaptive_comparison")
    }
}

pub fn adaptive_comparison(spec: &ExperimentSpec) -> Result<AdaptiveComparison, HarnessError> {
    if spec.window != WindowMode::Adaptive {
        return Err(HarnessError::Config("comparison needs adaptive window mode".into()));
    }
    let (_, dem) = spec.build()?;
    let run = |s: &ExperimentSpec| -> Result<ExperimentReport, HarnessError> {
        Ok(summarize(s, &dem, &run_shots(s, &dem)?))
    };
    let mut baseline = run(&spec.with_fixed_window(spec.adaptive.baseline_window))?;
    let mut target = run(&spec.with_fixed_window(spec.adaptive.target_window))?;
    let mut adaptive = run(spec)?;
    let t = target.mean_window_ns();
    baseline.normalized_time = Some(baseline.mean_window_ns() / t);
    adaptive.normalized_time = Some(adaptive.mean_window_ns() / t);
    target.normalized_time = Some(1.0);
    Ok(AdaptiveComparison {
        baseline,
        target,
        adaptive,
    })
}
