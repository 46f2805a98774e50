//! Decoder confidence and the retry controller.
//!
//! The confidence score `Q` of a window is the α-norm of its cluster
//! weights normalized by the total weight of every fault mechanism in the
//! window:
//!
//! ```text
//! Q = (Σ_i W_i^α)^(1/α) / Σ_e w_e,    W_i = Σ_{e ∈ C_i} w_e
//! ```
//!
//! Large `Q` means heavy or extended clusters, i.e. low confidence. A window
//! whose `Q` exceeds the threshold `c` is re-decoded with a larger window.
//! The threshold itself is steered by an on-off controller with a dead
//! zone so that the cumulative retry rate stays inside `[r_min, r_max]`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::gf2::BitVector;
use crate::lsd::ClusterStats;
use crate::scalar::Real;
use crate::window::{InnerDecoder, InnerOutcome, WindowInstance};
use crate::DecodeError;

/// Lower bound on the retry threshold; keeps `c` strictly positive.
pub const THRESHOLD_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct QConfig<T> {
    /// Norm order, at least 1.
    pub alpha: T,
    /// Add the committed part of the previous window's clusters.
    pub include_committed_carryover: bool,
}

impl<T: Real> Default for QConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::of(2.0),
            include_committed_carryover: true,
        }
    }
}

/// Normalized α-norm of cluster weights.
pub fn q_from_weights<T: Real>(
    weights: impl IntoIterator<Item = T>,
    total_weight: T,
    alpha: T,
) -> Result<T, DecodeError> {
    if !(total_weight > T::zero()) {
        return Err(DecodeError::Config(format!(
            "total weight must be positive, got {total_weight}"
        )));
    }
    if !(alpha >= T::one()) {
        return Err(DecodeError::Config(format!("alpha must be >= 1, got {alpha}")));
    }
    let weights: Vec<T> = weights.into_iter().collect();
    if let Some(w) = weights.iter().find(|w| !(**w >= T::zero())) {
        return Err(DecodeError::Config(format!("negative cluster weight {w}")));
    }
    let largest = weights.iter().copied().fold(T::zero(), T::max);
    if largest == T::zero() {
        return Ok(T::zero());
    }
    // Scale by the largest weight so w^alpha cannot overflow.
    let sum: T = weights.iter().map(|&w| (w / largest).powf(alpha)).sum();
    Ok(largest * sum.powf(alpha.recip()) / total_weight)
}

/// Confidence score of a set of clusters.
pub fn q_metric<T: Real>(stats: &ClusterStats<T>, alpha: T) -> Result<T, DecodeError> {
    q_from_weights(stats.cluster_weights(), stats.total_weight, alpha)
}

/// Score of the current window's clusters plus carried-over clusters.
pub fn q_with_carryover<T: Real>(
    stats: &ClusterStats<T>,
    carry: Option<&ClusterStats<T>>,
    alpha: T,
) -> Result<T, DecodeError> {
    let carried = carry.into_iter().flat_map(|c| c.cluster_weights());
    q_from_weights(stats.cluster_weights().chain(carried), stats.total_weight, alpha)
}

/// Threshold controller state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypertunerState<T> {
    pub c: T,
    pub c0: T,
    /// Multiplicative step, in (0, 1).
    pub delta: T,
    pub r_min: T,
    pub r_max: T,
    pub n_proc: u64,
    pub n_retry: u64,
}

impl<T: Real> HypertunerState<T> {
    pub fn new(c0: T, delta: T, r_min: T, r_max: T) -> Result<Self, DecodeError> {
        let state = Self {
            c: c0,
            c0,
            delta,
            r_min,
            r_max,
            n_proc: 0,
            n_retry: 0,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(self.c0 > T::zero()) {
            return Err(DecodeError::Config(format!("c0 must be > 0, got {}", self.c0)));
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return Err(DecodeError::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(T::zero() <= self.r_min && self.r_min < self.r_max && self.r_max <= T::one()) {
            return Err(DecodeError::Config(format!(
                "target band [{}, {}] must satisfy 0 <= r_min < r_max <= 1",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    /// Cumulative retry rate over every processed window.
    pub fn r_obs(&self) -> Option<T> {
        (self.n_proc > 0).then(|| T::of(self.n_retry as f64) / T::of(self.n_proc as f64))
    }

    /// Records one processed window and adjusts the threshold.
    pub fn update(&mut self, retried: bool) -> T {
        self.n_proc += 1;
        if retried {
            self.n_retry += 1;
        }
        let r_obs = self.r_obs().expect("n_proc > 0");
        if r_obs > self.r_max {
            self.c = self.c * (T::one() + self.delta);
        } else if r_obs < self.r_min {
            self.c = (self.c * (T::one() - self.delta)).max(T::of(THRESHOLD_FLOOR));
        }
        self.c
    }
}

/// Low confidence: strictly above the threshold.
pub fn should_retry<T: Real>(q: T, state: &HypertunerState<T>) -> bool {
    q > state.c
}

/// Pure form of [`HypertunerState::update`].
pub fn hypertuner_update<T: Real>(state: &HypertunerState<T>, retried: bool) -> HypertunerState<T> {
    let mut next = *state;
    next.update(retried);
    next
}

/// Whether threshold state spans shots or restarts with each shot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TunerMode {
    #[default]
    PerShot,
    /// One controller sees every window of every shot in order.
    SharedStream,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AdaptiveConfig<T> {
    pub baseline_window: usize,
    pub target_window: usize,
    pub q: QConfig<T>,
    pub c0: T,
    pub delta: T,
    pub r_min: T,
    pub r_max: T,
    pub max_retries_per_window: usize,
    pub tuner_mode: TunerMode,
}

impl<T: Real> Default for AdaptiveConfig<T> {
    fn default() -> Self {
        Self {
            baseline_window: 3,
            target_window: 7,
            q: QConfig::default(),
            c0: T::of(0.003),
            delta: T::of(0.1),
            r_min: T::of(0.20),
            r_max: T::of(0.30),
            max_retries_per_window: 1,
            tuner_mode: TunerMode::PerShot,
        }
    }
}

impl<T: Real> AdaptiveConfig<T> {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.baseline_window == 0 || self.target_window <= self.baseline_window {
            return Err(DecodeError::Config(format!(
                "target window {} must exceed baseline window {} >= 1",
                self.target_window, self.baseline_window
            )));
        }
        if self.max_retries_per_window == 0 {
            return Err(DecodeError::Config("max_retries_per_window must be >= 1".into()));
        }
        if !(self.q.alpha >= T::one()) {
            return Err(DecodeError::Config(format!("alpha must be >= 1, got {}", self.q.alpha)));
        }
        self.initial_state().map(|_| ())
    }

    pub fn initial_state(&self) -> Result<HypertunerState<T>, DecodeError> {
        HypertunerState::new(self.c0, self.delta, self.r_min, self.r_max)
    }

    /// Window sizes tried after the baseline, one per retry level, spread
    /// evenly up to the target.
    pub fn escalation_sizes(&self) -> Vec<usize> {
        let b = self.max_retries_per_window;
        let span = self.target_window - self.baseline_window;
        let mut sizes: Vec<usize> = (1..=b)
            .map(|j| self.baseline_window + (span * j).div_ceil(b))
            .collect();
        sizes.dedup();
        sizes
    }
}

/// Retry controller carried along a window chain.
#[derive(Clone, Debug)]
pub struct AdaptiveController<T> {
    pub config: AdaptiveConfig<T>,
    pub state: HypertunerState<T>,
}

impl<T: Real> AdaptiveController<T> {
    pub fn new(config: AdaptiveConfig<T>) -> Result<Self, DecodeError> {
        config.validate()?;
        Ok(Self {
            state: config.initial_state()?,
            config,
        })
    }
}

/// Result of decoding one window position, possibly after retries.
#[derive(Clone, Debug)]
pub struct WindowAttempt<T> {
    pub outcome: InnerOutcome<T>,
    /// Index into the attempt list of the instance whose solution is kept.
    pub used: usize,
    /// Score of the baseline attempt, which gates the first retry.
    pub q: T,
    /// Score of the kept attempt.
    pub q_final: T,
    pub retried: bool,
    /// Summed inner-decode time of every attempt.
    pub wall_time_ns: u64,
    pub c_before: Option<T>,
    pub c_after: Option<T>,
    pub r_obs: Option<T>,
}

pub(crate) fn timed_decode<T: Real, D: InnerDecoder<T> + ?Sized>(
    inner: &D,
    instance: &WindowInstance<'_, T>,
) -> Result<(InnerOutcome<T>, u64), DecodeError> {
    let start = Instant::now();
    let outcome = inner.decode(instance.sub.dem(), &instance.syndrome)?;
    let ns = start.elapsed().as_nanos().max(1) as u64;
    Ok((outcome, ns))
}

/// Decodes a window at baseline size and escalates while confidence is low.
///
/// `attempts[0]` is the baseline instance; later entries are the enlarged
/// instances at the same start round. Without a controller only the
/// baseline is decoded. The controller's threshold is updated exactly once.
pub fn adaptive_decode_window<T: Real, D: InnerDecoder<T> + ?Sized>(
    attempts: &[WindowInstance<'_, T>],
    inner: &D,
    controller: Option<&mut AdaptiveController<T>>,
    q_config: &QConfig<T>,
    carry: Option<&ClusterStats<T>>,
) -> Result<WindowAttempt<T>, DecodeError> {
    let carry = carry.filter(|_| q_config.include_committed_carryover);
    let (mut outcome, mut wall) = timed_decode(inner, &attempts[0])?;
    let q = q_with_carryover(&outcome.stats, carry, q_config.alpha)?;
    let mut q_final = q;
    let Some(ctrl) = controller else {
        return Ok(WindowAttempt {
            outcome,
            used: 0,
            q,
            q_final,
            retried: false,
            wall_time_ns: wall,
            c_before: None,
            c_after: None,
            r_obs: None,
        });
    };

    let c_before = ctrl.state.c;
    let mut used = 0;
    while used + 1 < attempts.len() && should_retry(q_final, &ctrl.state) {
        used += 1;
        let (next, ns) = timed_decode(inner, &attempts[used])?;
        wall += ns;
        q_final = q_with_carryover(&next.stats, carry, q_config.alpha)?;
        outcome = next;
    }
    let retried = used > 0;
    let c_after = ctrl.state.update(retried);
    Ok(WindowAttempt {
        outcome,
        used,
        q,
        q_final,
        retried,
        wall_time_ns: wall,
        c_before: Some(c_before),
        c_after: Some(c_after),
        r_obs: ctrl.state.r_obs(),
    })
}

/// Committed faults of a decoded window, as a vector over its local faults.
pub(crate) fn committed_mask<T: Real>(
    instance: &WindowInstance<'_, T>,
    correction: &BitVector,
) -> BitVector {
    let sub = instance.sub;
    let limit = instance.span.commit_end;
    BitVector::from_indices(
        correction.len(),
        correction
            .ones()
            .filter(|&f| instance.span.is_final || sub.fault_round(f) < limit),
    )
}
