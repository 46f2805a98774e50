use serde::{Deserialize, Serialize};

use super::CodeError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Uniform depolarizing: every operation fails with rate `p`.
    Depolarizing,
    /// Neutral-atom inspired rates.
    #[serde(rename = "NA", alias = "na")]
    NeutralAtom,
    /// Superconducting inspired rates.
    #[serde(rename = "SI100", alias = "si100")]
    Si100,
}

/// Hardware-inspired noise model with base physical error rate `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModelSpec {
    pub kind: NoiseKind,
    pub p: f64,
}

/// Per-round phenomenological rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveRates {
    /// Probability a data qubit flips between consecutive check rounds.
    pub p_data: f64,
    /// Probability a check outcome is misread.
    pub p_meas: f64,
}

impl NoiseModelSpec {
    pub fn new(kind: NoiseKind, p: f64) -> Result<Self, CodeError> {
        let spec = Self { kind, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn depolarizing(p: f64) -> Result<Self, CodeError> {
        Self::new(NoiseKind::Depolarizing, p)
    }

    pub fn validate(&self) -> Result<(), CodeError> {
        if !(self.p > 0.0 && self.p < 0.5) {
            return Err(CodeError::Invalid(format!(
                "base error rate must lie in (0, 0.5), got {}",
                self.p
            )));
        }
        Ok(())
    }

    /// Reduces the per-operation table to two per-round rates.
    ///
    /// Data flips collect the two-qubit and idle rates (plus the
    /// wait-for-measurement rate for SI100); check flips collect readout
    /// and reset-side rates.
    pub fn effective_rates(&self) -> EffectiveRates {
        let p = self.p;
        let (p_data, p_meas) = match self.kind {
            NoiseKind::Depolarizing => (p, p),
            NoiseKind::NeutralAtom => (p + p / 10.0, p + p / 10.0),
            NoiseKind::Si100 => (p + p / 10.0 + 2.0 * p, 5.0 * p + 2.0 * p),
        };
        EffectiveRates { p_data, p_meas }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15
    }

    #[test]
    fn depolarizing_is_identity() {
        let r = NoiseModelSpec::depolarizing(0.005).unwrap().effective_rates();
        assert_eq!((r.p_data, r.p_meas), (0.005, 0.005));
    }

    #[test]
    fn si100_rates() {
        let r = NoiseModelSpec::new(NoiseKind::Si100, 0.001).unwrap().effective_rates();
        assert!(close(r.p_data, 0.0031));
        assert!(close(r.p_meas, 0.007));
    }

    #[test]
    fn na_rates() {
        let r = NoiseModelSpec::new(NoiseKind::NeutralAtom, 0.001).unwrap().effective_rates();
        assert!(close(r.p_data, 0.0011));
        assert!(close(r.p_meas, 0.0011));
    }

    #[test]
    fn si100_readout_dominates_na() {
        for p in [1e-4, 1e-3, 0.01, 0.05] {
            let na = NoiseModelSpec::new(NoiseKind::NeutralAtom, p).unwrap().effective_rates();
            let si = NoiseModelSpec::new(NoiseKind::Si100, p).unwrap().effective_rates();
            let dep = NoiseModelSpec::depolarizing(p).unwrap().effective_rates();
            assert!(si.p_meas > na.p_meas);
            assert!(na.p_meas >= dep.p_meas);
        }
    }

    #[test]
    fn rejects_out_of_range_p() {
        assert!(NoiseModelSpec::depolarizing(0.0).is_err());
        assert!(NoiseModelSpec::depolarizing(0.5).is_err());
    }

    #[test]
    fn kind_serde_names() {
        let spec: NoiseModelSpec = serde_json::from_str(r#"{"kind":"SI100","p":0.001}"#).unwrap();
        assert_eq!(spec.kind, NoiseKind::Si100);
        let spec: NoiseModelSpec = serde_json::from_str(r#"{"kind":"NA","p":0.001}"#).unwrap();
        assert_eq!(spec.kind, NoiseKind::NeutralAtom);
        assert!(serde_json::from_str::<NoiseModelSpec>(r#"{"kind":"NA","p":0.1,"x":1}"#).is_err());
    }
}
