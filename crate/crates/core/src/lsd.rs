//! Localized statistics decoding (order 0).
//!
//! When BP fails to converge, clusters are seeded at every unsatisfied
//! detector and grown one fault at a time, most-likely fault first
//! according to the BP posteriors. A cluster stops growing once its local
//! syndrome lies in the span of its columns; clusters that touch are
//! merged. Each finished cluster is then solved by local elimination with
//! columns in reliability order, and the union of the local solutions is
//! the correction.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::bp::BpResult;
use crate::codes::DetectorModel;
use crate::gf2::{BitVector, ColumnBasis};
use crate::scalar::Real;
use crate::DecodeError;

/// Which faults of a cluster count towards its weight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Faults in the cluster's local solution.
    #[default]
    Solution,
    /// Every fault the cluster absorbed while growing.
    Membership,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterOrigin {
    #[default]
    Current,
    /// Committed part of a cluster from the previous window.
    Carried,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster<T> {
    /// Detector indices in the decoded model.
    pub detectors: Vec<usize>,
    /// Fault indices in the decoded model.
    pub faults: Vec<usize>,
    /// Prior LLR weight of each entry of `faults`.
    pub fault_weights: Vec<T>,
    /// Local solution, aligned with `faults`.
    pub solution: BitVector,
    pub llr_weight: T,
    pub origin: ClusterOrigin,
}

impl<T: Real> Cluster<T> {
    fn weigh(&mut self, mode: WeightMode) {
        self.llr_weight = match mode {
            WeightMode::Solution => self.solution.ones().map(|i| self.fault_weights[i]).sum(),
            WeightMode::Membership => self.fault_weights.iter().copied().sum(),
        };
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterStats<T> {
    pub clusters: Vec<Cluster<T>>,
    /// Sum of weights over every fault of the decoded model.
    pub total_weight: T,
    pub weight_mode: WeightMode,
    /// Clusters are connected components of a converged BP solution
    /// rather than LSD growth clusters.
    pub from_converged_bp: bool,
}

impl<T: Real> ClusterStats<T> {
    pub fn empty(total_weight: T, weight_mode: WeightMode) -> Self {
        Self {
            clusters: Vec::new(),
            total_weight,
            weight_mode,
            from_converged_bp: true,
        }
    }

    pub fn cluster_weights(&self) -> impl Iterator<Item = T> + '_ {
        self.clusters.iter().map(|c| c.llr_weight)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsdConfig {
    pub weight_mode: WeightMode,
}

#[derive(Clone, Copy, Debug)]
struct Candidate<T> {
    llr: T,
    fault: usize,
}

impl<T: Real> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Candidate<T> {}

impl<T: Real> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Candidate<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.llr
            .partial_cmp(&other.llr)
            .unwrap_or(Ordering::Equal)
            .then(self.fault.cmp(&other.fault))
    }
}

struct Growing<T> {
    detectors: Vec<usize>,
    local: HashMap<usize, usize>,
    faults: Vec<usize>,
    basis: ColumnBasis,
    candidates: BinaryHeap<Reverse<Candidate<T>>>,
    valid: bool,
}

impl<T: Real> Growing<T> {
    fn seeded(detector: usize) -> Self {
        let mut g = Self {
            detectors: Vec::new(),
            local: HashMap::new(),
            faults: Vec::new(),
            basis: ColumnBasis::new(0),
            candidates: BinaryHeap::new(),
            valid: false,
        };
        g.add_detector(detector);
        g
    }

    fn add_detector(&mut self, d: usize) {
        let idx = self.detectors.len();
        self.detectors.push(d);
        self.local.insert(d, idx);
        self.basis.grow_rows(self.detectors.len());
    }

    fn insert_column(&mut self, f: usize, rows: &[usize]) {
        let local: Vec<usize> = rows.iter().map(|d| self.local[d]).collect();
        self.basis.insert(f, &local);
    }

    fn local_syndrome(&self, syndrome: &BitVector) -> Vec<usize> {
        self.detectors
            .iter()
            .enumerate()
            .filter(|(_, &d)| syndrome.get(d))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Union-find over cluster ids, union by size.
struct Forest {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Forest {
    fn new() -> Self {
        Self {
            parent: Vec::new(),
            size: Vec::new(),
        }
    }

    fn make(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        self.size.push(1);
        id
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins two roots and returns (surviving root, absorbed root).
    fn union(&mut self, a: usize, b: usize) -> (usize, usize) {
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        (big, small)
    }
}

const NONE: usize = usize::MAX;

/// Post-processes a BP result into a correction satisfying `syndrome`,
/// together with the cluster statistics of that correction.
pub fn lsd_decode<T: Real>(
    dem: &DetectorModel<T>,
    syndrome: &BitVector,
    bp: &BpResult<T>,
    cfg: &LsdConfig,
) -> Result<(BitVector, ClusterStats<T>), DecodeError> {
    if syndrome.len() != dem.n_detectors() {
        return Err(DecodeError::DimensionMismatch {
            expected: dem.n_detectors(),
            found: syndrome.len(),
        });
    }
    if bp.posterior_llrs.len() != dem.n_faults() {
        return Err(DecodeError::DimensionMismatch {
            expected: dem.n_faults(),
            found: bp.posterior_llrs.len(),
        });
    }
    let (correction, stats) = if bp.converged {
        let stats = support_components(dem, &bp.hard_decision, cfg.weight_mode);
        (bp.hard_decision.clone(), stats)
    } else {
        grow_and_solve(dem, syndrome, &bp.posterior_llrs, cfg.weight_mode)?
    };
    debug_assert_eq!(&dem.syndrome_of(&correction), syndrome);
    Ok((correction, stats))
}

/// Connected components (through shared detectors) of a correction's support.
fn support_components<T: Real>(
    dem: &DetectorModel<T>,
    correction: &BitVector,
    mode: WeightMode,
) -> ClusterStats<T> {
    let h = dem.h();
    let support: Vec<usize> = correction.ones().collect();
    let mut forest = Forest::new();
    for _ in &support {
        forest.make();
    }
    let mut first_at: HashMap<usize, usize> = HashMap::new();
    for (i, &f) in support.iter().enumerate() {
        for &d in h.col(f) {
            match first_at.get(&d) {
                Some(&j) => {
                    let (a, b) = (forest.find(i), forest.find(j));
                    if a != b {
                        forest.union(a, b);
                    }
                }
                None => {
                    first_at.insert(d, i);
                }
            }
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); support.len()];
    for i in 0..support.len() {
        let r = forest.find(i);
        by_root[r].push(support[i]);
    }
    let weights = dem.weights();
    let clusters = by_root
        .into_iter()
        .filter(|fs| !fs.is_empty())
        .map(|faults| {
            let mut detectors: Vec<usize> = faults.iter().flat_map(|&f| h.col(f).iter().copied()).collect();
            detectors.sort_unstable();
            detectors.dedup();
            let mut c = Cluster {
                fault_weights: faults.iter().map(|&f| weights[f]).collect(),
                solution: BitVector::from_indices(faults.len(), 0..faults.len()),
                detectors,
                faults,
                llr_weight: T::zero(),
                origin: ClusterOrigin::Current,
            };
            c.weigh(mode);
            c
        })
        .collect();
    ClusterStats {
        clusters,
        total_weight: dem.total_weight(),
        weight_mode: mode,
        from_converged_bp: true,
    }
}

fn grow_and_solve<T: Real>(
    dem: &DetectorModel<T>,
    syndrome: &BitVector,
    llrs: &[T],
    mode: WeightMode,
) -> Result<(BitVector, ClusterStats<T>), DecodeError> {
    let h = dem.h();
    let mut owner_det = vec![NONE; dem.n_detectors()];
    let mut absorbed_fault = vec![false; dem.n_faults()];
    let mut forest = Forest::new();
    let mut slots: Vec<Option<Growing<T>>> = Vec::new();

    let push_candidates = |g: &mut Growing<T>, d: usize| {
        for &f in h.row(d) {
            g.candidates.push(Reverse(Candidate { llr: llrs[f], fault: f }));
        }
    };

    for d in syndrome.ones() {
        let id = forest.make();
        let mut g = Growing::seeded(d);
        push_candidates(&mut g, d);
        owner_det[d] = id;
        slots.push(Some(g));
    }

    loop {
        let active: Vec<usize> = (0..slots.len())
            .filter(|&id| slots[id].as_ref().is_some_and(|g| !g.valid))
            .collect();
        if active.is_empty() {
            break;
        }
        for id in active {
            if forest.find(id) != id {
                continue;
            }
            let Some(g) = slots[id].as_mut() else { continue };
            if g.valid {
                continue;
            }
            // Best adjacent fault not yet absorbed by this cluster.
            let f = loop {
                match g.candidates.pop() {
                    Some(Reverse(c)) if !absorbed_fault[c.fault] => break Some(c.fault),
                    Some(_) => continue,
                    None => break None,
                }
            };
            let Some(f) = f else {
                return Err(DecodeError::Unsolvable(format!(
                    "cluster seeded at detector {} exhausted its component",
                    g.detectors[0]
                )));
            };

            // `f` joins the cluster only once all its detectors belong to it.
            let mut root = id;
            absorbed_fault[f] = true;
            for &d in h.col(f) {
                let owner = owner_det[d];
                if owner == NONE {
                    owner_det[d] = root;
                    let g = slots[root].as_mut().unwrap();
                    g.add_detector(d);
                    push_candidates(g, d);
                    continue;
                }
                let other = forest.find(owner);
                if other == root {
                    continue;
                }
                let (keep, gone) = forest.union(root, other);
                let absorbed = slots[gone].take().unwrap();
                let g = slots[keep].as_mut().unwrap();
                for &dd in &absorbed.detectors {
                    g.add_detector(dd);
                }
                for &ff in &absorbed.faults {
                    g.faults.push(ff);
                    g.insert_column(ff, h.col(ff));
                }
                g.candidates.extend(absorbed.candidates);
                root = keep;
            }
            let g = slots[root].as_mut().unwrap();
            g.faults.push(f);
            g.insert_column(f, h.col(f));
            let target = g.local_syndrome(syndrome);
            g.valid = g.basis.contains(&target);
        }
    }

    let weights = dem.weights();
    let mut correction = BitVector::zeros(dem.n_faults());
    let mut clusters = Vec::new();
    for g in slots.into_iter().flatten() {
        let mut order = g.faults.clone();
        order.sort_by(|&a, &b| {
            llrs[a]
                .partial_cmp(&llrs[b])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut basis = ColumnBasis::new(g.detectors.len());
        for &f in &order {
            let rows: Vec<usize> = h.col(f).iter().map(|d| g.local[d]).collect();
            basis.insert(f, &rows);
        }
        let target = g.local_syndrome(syndrome);
        let chosen = basis.solve(&target).ok_or_else(|| {
            DecodeError::Unsolvable("finished cluster lost solvability".into())
        })?;
        let position: HashMap<usize, usize> =
            order.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut solution = BitVector::zeros(order.len());
        for f in chosen {
            correction.toggle(f);
            solution.set(position[&f], true);
        }
        let mut detectors = g.detectors;
        detectors.sort_unstable();
        let mut c = Cluster {
            detectors,
            fault_weights: order.iter().map(|&f| weights[f]).collect(),
            faults: order,
            solution,
            llr_weight: T::zero(),
            origin: ClusterOrigin::Current,
        };
        c.weigh(mode);
        clusters.push(c);
    }
    Ok((
        correction,
        ClusterStats {
            clusters,
            total_weight: dem.total_weight(),
            weight_mode: mode,
            from_converged_bp: false,
        },
    ))
}

/// Restricts the previous window's clusters to the faults it committed.
///
/// Each surviving cluster keeps only its committed faults and is re-weighed
/// under the same weight mode; clusters with no committed fault vanish.
/// `committed` is indexed like the previous window's faults.
pub fn committed_cluster_carryover<T: Real>(
    prev: &ClusterStats<T>,
    committed: &BitVector,
) -> ClusterStats<T> {
    let clusters = prev
        .clusters
        .iter()
        .filter(|c| c.origin == ClusterOrigin::Current)
        .filter_map(|c| {
            let keep: Vec<usize> = (0..c.faults.len())
                .filter(|&i| committed.get(c.faults[i]))
                .collect();
            if keep.is_empty() {
                return None;
            }
            let mut out = Cluster {
                detectors: Vec::new(),
                faults: keep.iter().map(|&i| c.faults[i]).collect(),
                fault_weights: keep.iter().map(|&i| c.fault_weights[i]).collect(),
                solution: BitVector::from_indices(
                    keep.len(),
                    keep.iter().enumerate().filter(|(_, &i)| c.solution.get(i)).map(|(j, _)| j),
                ),
                llr_weight: T::zero(),
                origin: ClusterOrigin::Carried,
            };
            out.weigh(prev.weight_mode);
            (out.llr_weight > T::zero()).then_some(out)
        })
        .collect();
    ClusterStats {
        clusters,
        total_weight: prev.total_weight,
        weight_mode: prev.weight_mode,
        from_converged_bp: prev.from_converged_bp,
    }
}
