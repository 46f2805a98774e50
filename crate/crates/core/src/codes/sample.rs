use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DetectorModel;
use crate::gf2::BitVector;
use crate::scalar::Real;

/// One Monte-Carlo sample of a detector model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shot {
    pub errors: BitVector,
    pub syndrome: BitVector,
    pub observable_flips: BitVector,
}

/// Fires every fault independently with its prior. Deterministic in `seed`.
pub fn sample_shot<T: Real>(dem: &DetectorModel<T>, seed: u64) -> Shot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = BitVector::zeros(dem.n_faults());
    for (f, p) in dem.priors().iter().enumerate() {
        if rng.gen::<f64>() < p.f64() {
            errors.set(f, true);
        }
    }
    let syndrome = dem.syndrome_of(&errors);
    let observable_flips = dem.observable_flips(&errors);
    Shot {
        errors,
        syndrome,
        observable_flips,
    }
}

/// Stable per-shot seed derived from the experiment seed (SplitMix64 finalizer).
pub fn shot_seed(base_seed: u64, shot_index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(shot_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_memory_dem, build_toric, Basis, NoiseModelSpec};

    fn dem() -> DetectorModel<f64> {
        let code = build_toric(3).unwrap();
        build_memory_dem(&code, Basis::Z, 3, &NoiseModelSpec::depolarizing(0.01).unwrap()).unwrap()
    }

    #[test]
    fn zero_priors_give_zero_syndrome() {
        let d = dem();
        let quiet = d.with_priors(vec![0.0; d.n_faults()]).unwrap();
        for seed in 0..20 {
            let shot = sample_shot(&quiet, seed);
            assert!(shot.syndrome.is_zero());
            assert!(shot.observable_flips.is_zero());
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let d = dem();
        assert_eq!(sample_shot(&d, 42), sample_shot(&d, 42));
        let differ = (0..50).any(|s| sample_shot(&d, s) != sample_shot(&d, s + 1000));
        assert!(differ);
    }

    #[test]
    fn single_half_prior_fault_binomial() {
        let d = dem();
        let mut priors = vec![0.0; d.n_faults()];
        priors[5] = 0.5;
        let d = d.with_priors(priors).unwrap();
        let fired = (0..10_000u64)
            .filter(|&i| sample_shot(&d, shot_seed(7, i)).errors.get(5))
            .count();
        // 3 sigma of Binomial(10^4, 1/2) is 150
        assert!((4850..=5150).contains(&fired), "fired {fired}");
    }

    #[test]
    fn shot_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| shot_seed(1, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(shot_seed(1, 0), shot_seed(2, 0));
    }
}
