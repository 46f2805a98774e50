//! Exhaustive minimum-weight decoding for tiny detector models.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::codes::DetectorModel;
use crate::gf2::BitVector;
use crate::window::InnerDecoder;

/// Largest model the oracle will enumerate.
pub const ORACLE_MAX_FAULTS: usize = 24;

/// Relative tolerance under which two pattern weights count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// `None` when the syndrome lies outside the column space.
    pub correction: Option<BitVector>,
    pub weight: f64,
    /// Number of distinct minimum-weight patterns.
    pub ties: u64,
    /// Tied minima disagree on some observable.
    pub ambiguous: bool,
}

fn check_size<T: crate::Real>(dem: &DetectorModel<T>) -> Result<(), HarnessError> {
    if dem.n_faults() > ORACLE_MAX_FAULTS {
        return Err(HarnessError::Config(format!(
            "exhaustive oracle handles at most {ORACLE_MAX_FAULTS} faults, model has {}",
            dem.n_faults()
        )));
    }
    Ok(())
}

fn same_weight(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Packs up to 64 bits of `v` per word into a hashable key.
fn key(v: &BitVector) -> Vec<u64> {
    v.words().to_vec()
}

/// Minimum-weight pattern explaining `syndrome`, by Gray-code enumeration
/// of all `2^|F|` fault patterns.
pub fn oracle_decode<T: crate::Real>(
    dem: &DetectorModel<T>,
    syndrome: &BitVector,
) -> Result<OracleResult, HarnessError> {
    check_size(dem)?;
    if syndrome.len() != dem.n_detectors() {
        return Err(HarnessError::Config(format!(
            "syndrome has {} bits, model has {} detectors",
            syndrome.len(),
            dem.n_detectors()
        )));
    }
    let n = dem.n_faults();
    let cols: Vec<BitVector> = (0..n).map(|f| dem.h().col_vector(f)).collect();
    let obs: Vec<BitVector> = (0..n).map(|f| dem.observables().col_vector(f)).collect();
    let weights: Vec<f64> = dem.weights().iter().map(|w| w.f64()).collect();

    let mut pattern = BitVector::zeros(n);
    let mut s = BitVector::zeros(dem.n_detectors());
    let mut action = BitVector::zeros(dem.n_observables());
    let mut weight = 0.0;
    let mut best: Option<(f64, BitVector, BitVector)> = None;
    let mut ties = 0u64;
    let mut ambiguous = false;
    let total: u64 = 1 << n;
    for step in 0..total {
        if step > 0 {
            let f = step.trailing_zeros() as usize;
            pattern.toggle(f);
            s.xor_assign(&cols[f]);
            action.xor_assign(&obs[f]);
            weight += if pattern.get(f) { weights[f] } else { -weights[f] };
        }
        if s != *syndrome {
            continue;
        }
        match &best {
            Some((bw, _, _)) if same_weight(weight, *bw) => {
                ties += 1;
                if best.as_ref().is_some_and(|(_, _, a)| *a != action) {
                    ambiguous = true;
                }
            }
            Some((bw, _, _)) if weight > *bw => {}
            _ => {
                best = Some((weight, pattern.clone(), action.clone()));
                ties = 1;
                ambiguous = false;
            }
        }
    }
    Ok(match best {
        Some((w, p, _)) => OracleResult {
            correction: Some(p),
            weight: w,
            ties,
            ambiguous,
        },
        None => OracleResult {
            correction: None,
            weight: f64::INFINITY,
            ties: 0,
            ambiguous: false,
        },
    })
}

/// Agreement between a decoder and the oracle over every syndrome a model
/// can produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleAgreement {
    pub n_faults: usize,
    /// Distinct reachable syndromes, the zero syndrome included.
    pub syndromes: usize,
    /// Syndromes whose minimum-weight patterns disagree on observables.
    pub ties_excluded: usize,
    pub agreeing: usize,
    /// `agreeing / (syndromes - ties_excluded)`.
    pub fraction: f64,
    /// Agreement weighted by each syndrome's probability.
    pub probability_weighted: f64,
}

struct SyndromeClass {
    syndrome: BitVector,
    best_weight: f64,
    action: BitVector,
    ambiguous: bool,
    probability: f64,
}

/// Compares `decoder`'s observable action with the oracle's on every
/// reachable syndrome of `dem`.
pub fn oracle_agreement<T: crate::Real, D: InnerDecoder<T> + ?Sized>(
    dem: &DetectorModel<T>,
    decoder: &D,
) -> Result<OracleAgreement, HarnessError> {
    check_size(dem)?;
    let n = dem.n_faults();
    let cols: Vec<BitVector> = (0..n).map(|f| dem.h().col_vector(f)).collect();
    let obs: Vec<BitVector> = (0..n).map(|f| dem.observables().col_vector(f)).collect();
    let weights: Vec<f64> = dem.weights().iter().map(|w| w.f64()).collect();
    let priors: Vec<f64> = dem.priors().iter().map(|p| p.f64()).collect();

    let mut classes: Vec<SyndromeClass> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut pattern = BitVector::zeros(n);
    let mut s = BitVector::zeros(dem.n_detectors());
    let mut action = BitVector::zeros(dem.n_observables());
    let mut weight = 0.0;
    for step in 0..(1u64 << n) {
        if step > 0 {
            let f = step.trailing_zeros() as usize;
            pattern.toggle(f);
            s.xor_assign(&cols[f]);
            action.xor_assign(&obs[f]);
            weight += if pattern.get(f) { weights[f] } else { -weights[f] };
        }
        let probability: f64 = (0..n)
            .map(|f| if pattern.get(f) { priors[f] } else { 1.0 - priors[f] })
            .product();
        let id = *index.entry(key(&s)).or_insert_with(|| {
            classes.push(SyndromeClass {
                syndrome: s.clone(),
                best_weight: f64::INFINITY,
                action: action.clone(),
                ambiguous: false,
                probability: 0.0,
            });
            classes.len() - 1
        });
        let c = &mut classes[id];
        c.probability += probability;
        if c.best_weight.is_finite() && same_weight(weight, c.best_weight) {
            if c.action != action {
                c.ambiguous = true;
            }
        } else if weight < c.best_weight {
            c.best_weight = weight;
            c.action = action.clone();
            c.ambiguous = false;
        }
    }

    let mut agreeing = 0;
    let mut ties_excluded = 0;
    let (mut agree_mass, mut mass) = (0.0, 0.0);
    for c in &classes {
        if c.ambiguous {
            ties_excluded += 1;
            continue;
        }
        let out = decoder.decode(dem, &c.syndrome)?;
        mass += c.probability;
        if dem.observable_flips(&out.correction) == c.action {
            agreeing += 1;
            agree_mass += c.probability;
        }
    }
    let considered = classes.len() - ties_excluded;
    Ok(OracleAgreement {
        n_faults: n,
        syndromes: classes.len(),
        ties_excluded,
        agreeing,
        fraction: if considered == 0 { 1.0 } else { agreeing as f64 / considered as f64 },
        probability_weighted: if mass == 0.0 { 1.0 } else { agree_mass / mass },
    })
}
