//! Sliding-window decoding over the round axis.
//!
//! A window covers rounds `[start, end)`. It owns every detector in that
//! range and every fault whose earliest round lies in the range; faults
//! reaching past `end` are truncated to their in-window detectors. After
//! decoding, faults whose earliest round precedes `commit_end` are
//! committed, and the detectors they flip are toggled in the running
//! syndrome so the next window sees the committed faults' effect as
//! artificial defects.

use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_decode_window, committed_mask, AdaptiveController, QConfig};
use crate::bp::{bp_decode, BpConfig};
use crate::codes::DetectorModel;
use crate::gf2::{BitVector, SparseBitMatrix};
use crate::lsd::{committed_cluster_carryover, lsd_decode, ClusterStats, LsdConfig};
use crate::scalar::Real;
use crate::DecodeError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub window_rounds: usize,
    pub commit_rounds: usize,
    pub total_rounds: usize,
}

impl WindowConfig {
    pub fn new(window_rounds: usize, commit_rounds: usize, total_rounds: usize) -> Self {
        Self {
            window_rounds,
            commit_rounds,
            total_rounds,
        }
    }

    /// A single window covering every round.
    pub fn global(total_rounds: usize) -> Self {
        Self::new(total_rounds, total_rounds.saturating_sub(1).max(1), total_rounds)
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let Self {
            window_rounds: w,
            commit_rounds: c,
            total_rounds: t,
        } = *self;
        // C == W only makes sense for a single window that commits everything.
        if !(1 <= c && c <= w && w <= t && (c < w || w == t)) {
            return Err(DecodeError::Config(format!(
                "window sizes need 1 <= commit ({c}) < window ({w}) <= total ({t})"
            )));
        }
        Ok(())
    }
}

/// Round range of one window position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpan {
    pub index: usize,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    /// Exclusive; faults starting before this round are committed.
    pub commit_end: usize,
    /// The last window commits everything it decodes.
    pub is_final: bool,
}

impl WindowSpan {
    pub fn rounds(&self) -> usize {
        self.end - self.start
    }
}

/// Window positions `start = k * commit_rounds` until one reaches the end.
pub fn schedule(cfg: &WindowConfig) -> Result<Vec<WindowSpan>, DecodeError> {
    cfg.validate()?;
    let mut spans = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + cfg.window_rounds).min(cfg.total_rounds);
        let is_final = end == cfg.total_rounds;
        spans.push(WindowSpan {
            index: spans.len(),
            start,
            end,
            commit_end: if is_final { end } else { start + cfg.commit_rounds },
            is_final,
        });
        if is_final {
            return Ok(spans);
        }
        start += cfg.commit_rounds;
    }
}

/// A window's detector model together with its embedding in the full model.
#[derive(Clone, Debug)]
pub struct SubDem<T> {
    dem: DetectorModel<T>,
    /// Global index of each local detector, ascending.
    pub detectors: Vec<usize>,
    /// Global index of each local fault, ascending.
    pub faults: Vec<usize>,
    pub first_round: usize,
    fault_rounds: Vec<usize>,
}

impl<T: Real> SubDem<T> {
    pub fn dem(&self) -> &DetectorModel<T> {
        &self.dem
    }

    /// Absolute earliest round of local fault `f`.
    pub fn fault_round(&self, f: usize) -> usize {
        self.fault_rounds[f]
    }

    pub fn local_detector(&self, global: usize) -> Option<usize> {
        self.detectors.binary_search(&global).ok()
    }

    /// Restricts a full-length syndrome to this window.
    pub fn slice(&self, syndrome: &BitVector) -> BitVector {
        BitVector::from_indices(
            self.detectors.len(),
            self.detectors
                .iter()
                .enumerate()
                .filter(|(_, &d)| syndrome.get(d))
                .map(|(i, _)| i),
        )
    }

    /// Lifts a local fault vector to global fault indices.
    pub fn lift(&self, local: &BitVector) -> Vec<usize> {
        local.ones().map(|f| self.faults[f]).collect()
    }
}

fn fault_rounds<T: Real>(dem: &DetectorModel<T>) -> Vec<usize> {
    (0..dem.n_faults()).map(|f| dem.fault_round(f)).collect()
}

fn extract_with_rounds<T: Real>(
    dem: &DetectorModel<T>,
    rounds_of_fault: &[usize],
    start: usize,
    end: usize,
) -> Result<SubDem<T>, DecodeError> {
    if !(start < end && end <= dem.rounds()) {
        return Err(DecodeError::Config(format!(
            "window [{start}, {end}) outside 0..{}",
            dem.rounds()
        )));
    }
    let rod = dem.round_of_detector();
    let detectors: Vec<usize> = (0..dem.n_detectors())
        .filter(|&d| (start..end).contains(&rod[d]))
        .collect();
    let faults: Vec<usize> = (0..dem.n_faults())
        .filter(|&f| (start..end).contains(&rounds_of_fault[f]))
        .collect();
    let obs_rows: Vec<usize> = (0..dem.n_observables()).collect();
    let h = dem.h().submatrix(&detectors, &faults);
    let observables: SparseBitMatrix = dem.observables().submatrix(&obs_rows, &faults);
    let priors = faults.iter().map(|&f| dem.priors()[f]).collect();
    let local_rounds = detectors.iter().map(|&d| rod[d] - start).collect();
    let sub = DetectorModel::new(h, priors, observables, local_rounds, end - start)
        .map_err(|e| DecodeError::Config(format!("window [{start}, {end}): {e}")))?;
    Ok(SubDem {
        dem: sub,
        fault_rounds: faults.iter().map(|&f| rounds_of_fault[f]).collect(),
        detectors,
        faults,
        first_round: start,
    })
}

/// Sub-model of rounds `[start, end)`.
pub fn extract_sub_dem<T: Real>(
    dem: &DetectorModel<T>,
    start: usize,
    end: usize,
) -> Result<SubDem<T>, DecodeError> {
    extract_with_rounds(dem, &fault_rounds(dem), start, end)
}

/// Toggles, in a window's syndrome slice, every detector of that window
/// flipped by the committed global faults.
pub fn apply_artificial_defects<T: Real>(
    slice: &BitVector,
    committed: &[usize],
    dem: &DetectorModel<T>,
    next: &SubDem<T>,
) -> BitVector {
    let mut out = slice.clone();
    for &f in committed {
        for &d in dem.h().col(f) {
            if let Some(local) = next.local_detector(d) {
                out.toggle(local);
            }
        }
    }
    out
}

/// A window ready to decode.
#[derive(Clone, Debug)]
pub struct WindowInstance<'a, T> {
    pub span: WindowSpan,
    pub sub: &'a SubDem<T>,
    /// Measured syndrome plus artificial defects from earlier commits.
    pub syndrome: BitVector,
}

#[derive(Clone, Debug)]
pub struct InnerOutcome<T> {
    pub correction: BitVector,
    pub stats: ClusterStats<T>,
    pub bp_converged: bool,
    pub bp_iterations: usize,
}

pub trait InnerDecoder<T: Real>: Sync {
    fn decode(
        &self,
        dem: &DetectorModel<T>,
        syndrome: &BitVector,
    ) -> Result<InnerOutcome<T>, DecodeError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BpLsdDecoder<T> {
    pub bp: BpConfig<T>,
    pub lsd: LsdConfig,
}

impl<T: Real> Default for BpLsdDecoder<T> {
    fn default() -> Self {
        Self {
            bp: BpConfig::default(),
            lsd: LsdConfig::default(),
        }
    }
}

impl<T: Real> InnerDecoder<T> for BpLsdDecoder<T> {
    fn decode(
        &self,
        dem: &DetectorModel<T>,
        syndrome: &BitVector,
    ) -> Result<InnerOutcome<T>, DecodeError> {
        let bp = bp_decode(dem, syndrome, &self.bp)?;
        let (correction, stats) = lsd_decode(dem, syndrome, &bp, &self.lsd)?;
        Ok(InnerOutcome {
            correction,
            stats,
            bp_converged: bp.converged,
            bp_iterations: bp.iterations_used,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowRecord<T> {
    pub index: usize,
    pub start: usize,
    /// Size of the window whose solution was committed.
    pub window_rounds_used: usize,
    /// Global fault indices committed by this window.
    pub committed_correction: Vec<usize>,
    pub q_value: T,
    pub retried: bool,
    pub wall_time_ns: u64,
    pub cluster_count: usize,
    pub bp_converged: bool,
    pub c_before: Option<T>,
    pub c_after: Option<T>,
    pub r_obs: Option<T>,
}

pub const RECORDS_CSV_HEADER: &str = "shot,window,rounds_used,retried,q,cluster_count,wall_time_ns";

impl<T: Real> WindowRecord<T> {
    pub fn csv_row(&self, shot: u64) -> String {
        format!(
            "{shot},{},{},{},{},{},{}",
            self.index,
            self.window_rounds_used,
            u8::from(self.retried),
            self.q_value,
            self.cluster_count,
            self.wall_time_ns
        )
    }
}

/// Decoded shot: the global correction and one record per window position.
#[derive(Clone, Debug)]
pub struct StreamOutcome<T> {
    pub correction: BitVector,
    pub records: Vec<WindowRecord<T>>,
}

/// An enlarged window: its span and sub-model.
type Escalated<T> = (WindowSpan, SubDem<T>);

/// Precomputed windows for one detector model and schedule.
///
/// `levels[k][i]` is window `i` enlarged to the `k`-th escalation size;
/// an entry is absent when the enlargement would not add a round.
#[derive(Clone, Debug)]
pub struct WindowPlan<'a, T> {
    dem: &'a DetectorModel<T>,
    config: WindowConfig,
    spans: Vec<WindowSpan>,
    base: Vec<SubDem<T>>,
    levels: Vec<Vec<Option<Escalated<T>>>>,
}

impl<'a, T: Real> WindowPlan<'a, T> {
    pub fn new(dem: &'a DetectorModel<T>, config: WindowConfig) -> Result<Self, DecodeError> {
        Self::with_escalation(dem, config, &[])
    }

    /// Plan whose windows may grow to each size in `escalation` (ascending).
    pub fn with_escalation(
        dem: &'a DetectorModel<T>,
        config: WindowConfig,
        escalation: &[usize],
    ) -> Result<Self, DecodeError> {
        if config.total_rounds != dem.rounds() {
            return Err(DecodeError::Config(format!(
                "schedule covers {} rounds, model has {}",
                config.total_rounds,
                dem.rounds()
            )));
        }
        let spans = schedule(&config)?;
        let rounds = fault_rounds(dem);
        let base = spans
            .iter()
            .map(|s| extract_with_rounds(dem, &rounds, s.start, s.end))
            .collect::<Result<Vec<_>, _>>()?;
        let mut levels = Vec::with_capacity(escalation.len());
        for &size in escalation {
            let level = spans
                .iter()
                .map(|s| {
                    let end = (s.start + size).min(config.total_rounds);
                    if end <= s.end {
                        return Ok(None);
                    }
                    let span = WindowSpan { end, ..*s };
                    Ok(Some((span, extract_with_rounds(dem, &rounds, s.start, end)?)))
                })
                .collect::<Result<Vec<_>, DecodeError>>()?;
            levels.push(level);
        }
        Ok(Self {
            dem,
            config,
            spans,
            base,
            levels,
        })
    }

    pub fn dem(&self) -> &DetectorModel<T> {
        self.dem
    }

    pub fn config(&self) -> &WindowConfig {
        &self.config
    }

    pub fn spans(&self) -> &[WindowSpan] {
        &self.spans
    }

    pub fn sub_dem(&self, window: usize) -> &SubDem<T> {
        &self.base[window]
    }

    /// Decodes one shot window by window.
    pub fn decode_stream<D: InnerDecoder<T> + ?Sized>(
        &self,
        syndrome: &BitVector,
        inner: &D,
        q_config: &QConfig<T>,
        controller: Option<&mut AdaptiveController<T>>,
    ) -> Result<StreamOutcome<T>, DecodeError> {
        self.decode_stream_observed(syndrome, inner, q_config, controller, &mut |_| {})
    }

    /// As [`Self::decode_stream`], calling `observe` on every baseline
    /// window instance before it is decoded.
    pub fn decode_stream_observed<D: InnerDecoder<T> + ?Sized>(
        &self,
        syndrome: &BitVector,
        inner: &D,
        q_config: &QConfig<T>,
        mut controller: Option<&mut AdaptiveController<T>>,
        observe: &mut dyn FnMut(&WindowInstance<'_, T>),
    ) -> Result<StreamOutcome<T>, DecodeError> {
        if syndrome.len() != self.dem.n_detectors() {
            return Err(DecodeError::DimensionMismatch {
                expected: self.dem.n_detectors(),
                found: syndrome.len(),
            });
        }
        let mut residual = syndrome.clone();
        let mut correction = BitVector::zeros(self.dem.n_faults());
        let mut records = Vec::with_capacity(self.spans.len());
        let mut carry: Option<ClusterStats<T>> = None;

        for (i, span) in self.spans.iter().enumerate() {
            let mut attempts = vec![WindowInstance {
                span: *span,
                sub: &self.base[i],
                syndrome: self.base[i].slice(&residual),
            }];
            if controller.is_some() {
                for level in &self.levels {
                    if let Some((span, sub)) = &level[i] {
                        attempts.push(WindowInstance {
                            span: *span,
                            sub,
                            syndrome: sub.slice(&residual),
                        });
                    }
                }
            }
            observe(&attempts[0]);
            let result = adaptive_decode_window(
                &attempts,
                inner,
                controller.as_deref_mut(),
                q_config,
                carry.as_ref(),
            )?;
            let used = &attempts[result.used];
            let mask = committed_mask(used, &result.outcome.correction);
            let committed = used.sub.lift(&mask);
            for &f in &committed {
                correction.toggle(f);
                for &d in self.dem.h().col(f) {
                    residual.toggle(d);
                }
            }
            carry = q_config
                .include_committed_carryover
                .then(|| committed_cluster_carryover(&result.outcome.stats, &mask));
            records.push(WindowRecord {
                index: i,
                start: span.start,
                window_rounds_used: used.span.rounds(),
                committed_correction: committed,
                q_value: result.q,
                retried: result.retried,
                wall_time_ns: result.wall_time_ns,
                cluster_count: result.outcome.stats.clusters.len(),
                bp_converged: result.outcome.bp_converged,
                c_before: result.c_before,
                c_after: result.c_after,
                r_obs: result.r_obs,
            });
        }
        Ok(StreamOutcome {
            correction,
            records,
        })
    }
}
