//! Normalized min-sum belief propagation on a detector model's Tanner graph.
//!
//! Messages live on the edges of `H` in CSR order. Check-to-fault messages
//! carry the sign of the detector's syndrome bit, so a fault's posterior LLR
//! going negative means "this fault probably fired".

use serde::{Deserialize, Serialize};

use crate::codes::DetectorModel;
use crate::gf2::BitVector;
use crate::scalar::Real;
use crate::DecodeError;

/// Prior LLRs are clipped to this magnitude so zero-probability faults stay finite.
const LLR_CAP: f64 = 100.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// All checks update from the previous iteration's messages.
    #[default]
    Flooding,
    /// Checks update one after another, each seeing the latest posteriors.
    Serial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BpConfig<T> {
    pub max_iterations: usize,
    /// Normalization applied to every check-to-fault message, in (0, 1].
    pub scaling_factor: T,
    pub schedule: Schedule,
}

impl<T: Real> Default for BpConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            scaling_factor: T::of(0.625),
            schedule: Schedule::Flooding,
        }
    }
}

impl<T: Real> BpConfig<T> {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.max_iterations == 0 {
            return Err(DecodeError::Config("max_iterations must be >= 1".into()));
        }
        if !(self.scaling_factor > T::zero() && self.scaling_factor <= T::one()) {
            return Err(DecodeError::Config(format!(
                "scaling_factor must lie in (0, 1], got {}",
                self.scaling_factor
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpResult<T> {
    pub posterior_llrs: Vec<T>,
    /// Bit `f` set iff `posterior_llrs[f] < 0`.
    pub hard_decision: BitVector,
    /// The hard decision reproduces the syndrome exactly.
    pub converged: bool,
    pub iterations_used: usize,
}

struct Messages<'a, T> {
    dem: &'a DetectorModel<T>,
    syndrome: &'a BitVector,
    priors: Vec<T>,
    scale: T,
}

impl<T: Real> Messages<'_, T> {
    /// Min-sum update of check `c`: reads fault-to-check messages from
    /// `v2c`, writes check-to-fault messages into `c2v`.
    #[inline]
    fn update_check(&self, c: usize, v2c: &[T], c2v: &mut [T]) {
        let range = self.dem.h().row_edge_range(c);
        let mut negative = self.syndrome.get(c);
        let mut min1 = T::infinity();
        let mut min2 = T::infinity();
        let mut argmin = usize::MAX;
        for e in range.clone() {
            let m = v2c[e];
            if m < T::zero() {
                negative = !negative;
            }
            let a = m.abs();
            if a < min1 {
                min2 = min1;
                min1 = a;
                argmin = e;
            } else if a < min2 {
                min2 = a;
            }
        }
        for e in range {
            let mag = if e == argmin { min2 } else { min1 };
            let mag = if mag.is_finite() { mag * self.scale } else { T::zero() };
            // Sign excluding this edge's own contribution.
            let own_negative = v2c[e] < T::zero();
            c2v[e] = if negative != own_negative { -mag } else { mag };
        }
    }

    fn satisfied(&self, hard: &BitVector) -> bool {
        let h = self.dem.h();
        (0..h.n_rows()).all(|c| {
            let parity = h.row(c).iter().filter(|&&f| hard.get(f)).count() & 1 == 1;
            parity == self.syndrome.get(c)
        })
    }
}

fn hard_decision<T: Real>(llrs: &[T]) -> BitVector {
    BitVector::from_indices(
        llrs.len(),
        llrs.iter()
            .enumerate()
            .filter(|(_, &l)| l < T::zero())
            .map(|(i, _)| i),
    )
}

/// Runs min-sum BP from the model's prior LLRs, stopping as soon as the
/// hard decision satisfies `syndrome`.
pub fn bp_decode<T: Real>(
    dem: &DetectorModel<T>,
    syndrome: &BitVector,
    cfg: &BpConfig<T>,
) -> Result<BpResult<T>, DecodeError> {
    cfg.validate()?;
    if syndrome.len() != dem.n_detectors() {
        return Err(DecodeError::DimensionMismatch {
            expected: dem.n_detectors(),
            found: syndrome.len(),
        });
    }
    let cap = T::of(LLR_CAP);
    let priors: Vec<T> = dem.weights().iter().map(|&w| w.min(cap)).collect();
    let initial = hard_decision(&priors);
    let msgs = Messages {
        dem,
        syndrome,
        priors,
        scale: cfg.scaling_factor,
    };
    if msgs.satisfied(&initial) {
        return Ok(BpResult {
            posterior_llrs: msgs.priors.clone(),
            hard_decision: initial,
            converged: true,
            iterations_used: 0,
        });
    }
    match cfg.schedule {
        Schedule::Flooding => Ok(flooding(&msgs, cfg.max_iterations)),
        Schedule::Serial => Ok(serial(&msgs, cfg.max_iterations)),
    }
}

fn flooding<T: Real>(msgs: &Messages<'_, T>, max_iterations: usize) -> BpResult<T> {
    let h = msgs.dem.h();
    let nnz = h.nnz();
    let mut v2c = vec![T::zero(); nnz];
    for c in 0..h.n_rows() {
        for (e, &f) in h.row_edge_range(c).zip(h.row(c)) {
            v2c[e] = msgs.priors[f];
        }
    }
    let mut c2v = vec![T::zero(); nnz];
    let mut posterior = msgs.priors.clone();
    let mut hard = BitVector::zeros(h.n_cols());
    for it in 1..=max_iterations {
        for c in 0..h.n_rows() {
            msgs.update_check(c, &v2c, &mut c2v);
        }
        for f in 0..h.n_cols() {
            let edges = h.col_edge_ids(f);
            let total = edges.iter().fold(msgs.priors[f], |acc, &e| acc + c2v[e]);
            posterior[f] = total;
            for &e in edges {
                v2c[e] = total - c2v[e];
            }
        }
        hard = hard_decision(&posterior);
        if msgs.satisfied(&hard) {
            return BpResult {
                posterior_llrs: posterior,
                hard_decision: hard,
                converged: true,
                iterations_used: it,
            };
        }
    }
    BpResult {
        posterior_llrs: posterior,
        hard_decision: hard,
        converged: false,
        iterations_used: max_iterations,
    }
}

fn serial<T: Real>(msgs: &Messages<'_, T>, max_iterations: usize) -> BpResult<T> {
    let h = msgs.dem.h();
    let nnz = h.nnz();
    let mut c2v = vec![T::zero(); nnz];
    let mut v2c = vec![T::zero(); nnz];
    let mut posterior = msgs.priors.clone();
    let mut hard = BitVector::zeros(h.n_cols());
    for it in 1..=max_iterations {
        for c in 0..h.n_rows() {
            for (e, &f) in h.row_edge_range(c).zip(h.row(c)) {
                v2c[e] = posterior[f] - c2v[e];
            }
            msgs.update_check(c, &v2c, &mut c2v);
            for (e, &f) in h.row_edge_range(c).zip(h.row(c)) {
                posterior[f] = v2c[e] + c2v[e];
            }
        }
        hard = hard_decision(&posterior);
        if msgs.satisfied(&hard) {
            return BpResult {
                posterior_llrs: posterior,
                hard_decision: hard,
                converged: true,
                iterations_used: it,
            };
        }
    }
    BpResult {
        posterior_llrs: posterior,
        hard_decision: hard,
        converged: false,
        iterations_used: max_iterations,
    }
}
