use serde::{Deserialize, Serialize};

use super::{CodeError, CssCode, NoiseModelSpec};
use crate::gf2::{BitVector, SparseBitMatrix};
use crate::scalar::{llr, Real};

/// Which logical basis a memory experiment preserves.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Z errors against X checks; X logicals are tracked.
    X,
    /// X errors against Z checks; Z logicals are tracked.
    #[default]
    Z,
}

/// A decoding problem: check matrix over faults, fault priors and the
/// logical observables each fault flips.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorModel<T> {
    h: SparseBitMatrix,
    priors: Vec<T>,
    weights: Vec<T>,
    observables: SparseBitMatrix,
    round_of_detector: Vec<usize>,
    rounds: usize,
}

impl<T: Real> DetectorModel<T> {
    /// Validates and assembles a model. `h` is detectors x faults and
    /// `observables` is observables x faults.
    pub fn new(
        h: SparseBitMatrix,
        priors: Vec<T>,
        observables: SparseBitMatrix,
        round_of_detector: Vec<usize>,
        rounds: usize,
    ) -> Result<Self, CodeError> {
        let n_faults = h.n_cols();
        if priors.len() != n_faults {
            return Err(CodeError::Invalid(format!(
                "{} priors for {n_faults} faults",
                priors.len()
            )));
        }
        if observables.n_cols() != n_faults {
            return Err(CodeError::Invalid(format!(
                "observable matrix has {} columns for {n_faults} faults",
                observables.n_cols()
            )));
        }
        if round_of_detector.len() != h.n_rows() {
            return Err(CodeError::Invalid(format!(
                "round map covers {} of {} detectors",
                round_of_detector.len(),
                h.n_rows()
            )));
        }
        if let Some(&r) = round_of_detector.iter().find(|&&r| r >= rounds) {
            return Err(CodeError::Invalid(format!(
                "detector round {r} outside 0..{rounds}"
            )));
        }
        for (f, &p) in priors.iter().enumerate() {
            if !(p >= T::zero() && p <= T::of(0.5)) {
                return Err(CodeError::Invalid(format!(
                    "fault {f} prior {p} outside [0, 0.5]"
                )));
            }
            if h.col(f).is_empty() {
                return Err(CodeError::Invalid(format!("fault {f} triggers no detector")));
            }
        }
        let weights = priors.iter().map(|&p| llr(p)).collect();
        Ok(Self {
            h,
            priors,
            weights,
            observables,
            round_of_detector,
            rounds,
        })
    }

    pub fn h(&self) -> &SparseBitMatrix {
        &self.h
    }

    pub fn observables(&self) -> &SparseBitMatrix {
        &self.observables
    }

    pub fn priors(&self) -> &[T] {
        &self.priors
    }

    /// Per-fault LLR weights `log((1 - p) / p)`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn round_of_detector(&self) -> &[usize] {
        &self.round_of_detector
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn n_detectors(&self) -> usize {
        self.h.n_rows()
    }

    pub fn n_faults(&self) -> usize {
        self.h.n_cols()
    }

    pub fn n_observables(&self) -> usize {
        self.observables.n_rows()
    }

    /// Earliest round touched by fault `f`.
    pub fn fault_round(&self, f: usize) -> usize {
        self.h
            .col(f)
            .iter()
            .map(|&d| self.round_of_detector[d])
            .min()
            .expect("fault columns are nonempty")
    }

    /// Sum of all fault weights.
    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn syndrome_of(&self, errors: &BitVector) -> BitVector {
        self.h.mul_vec(errors).expect("error vector sized to faults")
    }

    pub fn observable_flips(&self, errors: &BitVector) -> BitVector {
        self.observables
            .mul_vec(errors)
            .expect("error vector sized to faults")
    }

    /// Same model with different priors.
    pub fn with_priors(&self, priors: Vec<T>) -> Result<Self, CodeError> {
        Self::new(
            self.h.clone(),
            priors,
            self.observables.clone(),
            self.round_of_detector.clone(),
            self.rounds,
        )
    }

    /// Keeps only the listed faults, in the listed order.
    pub fn select_faults(&self, faults: &[usize]) -> Result<Self, CodeError> {
        let rows: Vec<usize> = (0..self.n_detectors()).collect();
        let obs_rows: Vec<usize> = (0..self.n_observables()).collect();
        Self::new(
            self.h.submatrix(&rows, faults),
            faults.iter().map(|&f| self.priors[f]).collect(),
            self.observables.submatrix(&obs_rows, faults),
            self.round_of_detector.clone(),
            self.rounds,
        )
    }

    /// Converts the scalar type of priors and weights.
    pub fn cast<U: Real>(&self) -> DetectorModel<U> {
        DetectorModel::new(
            self.h.clone(),
            self.priors.iter().map(|p| U::of(p.f64())).collect(),
            self.observables.clone(),
            self.round_of_detector.clone(),
            self.rounds,
        )
        .expect("casting keeps a valid model valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DemDocument::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CodeError> {
        let doc: DemDocument<T> =
            serde_json::from_str(text).map_err(|e| CodeError::Schema(e.to_string()))?;
        doc.try_into()
    }
}

/// One column of the detector error model as it appears on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEntry<T> {
    pub detectors: Vec<usize>,
    pub observables: Vec<usize>,
    pub prior: T,
}

/// JSON document form of a [`DetectorModel`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemDocument<T> {
    pub n_detectors: usize,
    pub n_faults: usize,
    pub n_observables: usize,
    pub rounds: usize,
    pub round_of_detector: Vec<usize>,
    pub faults: Vec<FaultEntry<T>>,
}

impl<T: Real> From<&DetectorModel<T>> for DemDocument<T> {
    fn from(dem: &DetectorModel<T>) -> Self {
        let obs_t = dem.observables.transpose();
        DemDocument {
            n_detectors: dem.n_detectors(),
            n_faults: dem.n_faults(),
            n_observables: dem.n_observables(),
            rounds: dem.rounds,
            round_of_detector: dem.round_of_detector.clone(),
            faults: (0..dem.n_faults())
                .map(|f| FaultEntry {
                    detectors: dem.h.col(f).to_vec(),
                    observables: obs_t.row(f).to_vec(),
                    prior: dem.priors[f],
                })
                .collect(),
        }
    }
}

impl<T: Real> TryFrom<DemDocument<T>> for DetectorModel<T> {
    type Error = CodeError;

    fn try_from(doc: DemDocument<T>) -> Result<Self, CodeError> {
        if doc.faults.len() != doc.n_faults {
            return Err(CodeError::Schema(format!(
                "n_faults is {} but {} faults listed",
                doc.n_faults,
                doc.faults.len()
            )));
        }
        let mut det_cols = Vec::with_capacity(doc.n_faults);
        let mut obs_cols = Vec::with_capacity(doc.n_faults);
        let mut priors = Vec::with_capacity(doc.n_faults);
        for fault in doc.faults {
            det_cols.push(fault.detectors);
            obs_cols.push(fault.observables);
            priors.push(fault.prior);
        }
        let h = SparseBitMatrix::from_cols(doc.n_detectors, det_cols)
            .map_err(|e| CodeError::Schema(e.to_string()))?;
        let observables = SparseBitMatrix::from_cols(doc.n_observables, obs_cols)
            .map_err(|e| CodeError::Schema(e.to_string()))?;
        DetectorModel::new(h, priors, observables, doc.round_of_detector, doc.rounds)
            .map_err(|e| CodeError::Schema(e.to_string()))
    }
}

/// Phenomenological memory experiment.
///
/// Detector `r * m + i` compares check `i` in round `r` with round `r - 1`
/// (round 0 against the known initial state; the last round is a perfect
/// readout). Faults are listed round by round: first one data-flip fault
/// per qubit (prior `p_data`), then, for every round but the last, one
/// measurement fault per check (prior `p_meas`) flipping detectors `r` and
/// `r + 1` of that check.
pub fn build_memory_dem<T: Real>(
    code: &CssCode,
    basis: Basis,
    rounds: usize,
    noise: &NoiseModelSpec,
) -> Result<DetectorModel<T>, CodeError> {
    noise.validate()?;
    let rates = noise.effective_rates();
    memory_dem_with_rates(code, basis, rounds, T::of(rates.p_data), T::of(rates.p_meas))
}

/// As [`build_memory_dem`] with explicit per-round rates.
pub fn memory_dem_with_rates<T: Real>(
    code: &CssCode,
    basis: Basis,
    rounds: usize,
    p_data: T,
    p_meas: T,
) -> Result<DetectorModel<T>, CodeError> {
    if rounds < 2 {
        return Err(CodeError::Invalid(format!(
            "memory experiment needs >= 2 rounds, got {rounds}"
        )));
    }
    let (checks, logicals) = match basis {
        Basis::X => (&code.hx, &code.logical_x),
        Basis::Z => (&code.hz, &code.logical_z),
    };
    let m = checks.n_rows();
    let n = code.n;
    let mut det_cols = Vec::new();
    let mut obs_cols = Vec::new();
    let mut priors = Vec::new();
    for r in 0..rounds {
        for q in 0..n {
            det_cols.push(checks.col(q).iter().map(|&i| r * m + i).collect());
            obs_cols.push(
                logicals
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.get(q))
                    .map(|(j, _)| j)
                    .collect(),
            );
            priors.push(p_data);
        }
        if r + 1 < rounds {
            for i in 0..m {
                det_cols.push(vec![r * m + i, (r + 1) * m + i]);
                obs_cols.push(Vec::new());
                priors.push(p_meas);
            }
        }
    }
    let h = SparseBitMatrix::from_cols(m * rounds, det_cols)?;
    let observables = SparseBitMatrix::from_cols(logicals.len(), obs_cols)?;
    let round_of_detector = (0..m * rounds).map(|d| d / m).collect();
    DetectorModel::new(h, priors, observables, round_of_detector, rounds)
}
