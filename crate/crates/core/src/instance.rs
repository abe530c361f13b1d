//! Problem instances: arm sets, true parameters, and the ground-truth
//! classification of testing arms.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::InstanceError;
use crate::linalg;

/// Tolerance for comparing rewards when checking uniqueness of the best arm.
const TIE_TOL: f64 = 1e-12;

/// An ordered, nonempty collection of equal-dimension arm vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet {
    arms: Vec<DVector<f64>>,
    bound: f64,
}

impl ArmSet {
    /// Builds an arm set whose declared norm bound is the largest arm norm.
    pub fn new(arms: Vec<Vec<f64>>) -> Result<Self, InstanceError> {
        let arms: Vec<DVector<f64>> = arms.into_iter().map(DVector::from_vec).collect();
        Self::from_vectors(arms)
    }

    pub fn from_vectors(arms: Vec<DVector<f64>>) -> Result<Self, InstanceError> {
        let first = arms.first().ok_or(InstanceError::EmptyArmSet)?;
        let d = first.len();
        if d == 0 {
            return Err(InstanceError::EmptyArmSet);
        }
        for (i, a) in arms.iter().enumerate() {
            if a.len() != d {
                return Err(InstanceError::DimensionMismatch {
                    index: i,
                    expected: d,
                    found: a.len(),
                });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(InstanceError::NonFinite("arm coordinates"));
            }
        }
        let bound = arms.iter().map(|a| a.norm()).fold(0.0, f64::max);
        Ok(Self { arms, bound })
    }

    /// Replaces the declared bound `L`; every arm norm must respect it.
    pub fn with_bound(mut self, bound: f64) -> Result<Self, InstanceError> {
        for (i, a) in self.arms.iter().enumerate() {
            let norm = a.norm();
            if norm > bound * (1.0 + 1e-12) {
                return Err(InstanceError::ArmNormExceeded { index: i, norm, bound });
            }
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.arms[0].len()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn get(&self, i: usize) -> &DVector<f64> {
        &self.arms[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DVector<f64>> {
        self.arms.iter()
    }

    pub fn as_slice(&self) -> &[DVector<f64>] {
        &self.arms
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.arms.iter().map(|a| a.iter().copied().collect()).collect()
    }
}

impl std::ops::Index<usize> for ArmSet {
    type Output = DVector<f64>;

    fn index(&self, i: usize) -> &DVector<f64> {
        &self.arms[i]
    }
}

/// Role of a testing arm under the true parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmRole {
    /// The best feasible arm.
    Best,
    /// Superoptimal and infeasible.
    SuperoptimalInfeasible,
    /// Feasible and suboptimal.
    FeasibleSuboptimal,
    /// Infeasible and suboptimal.
    InfeasibleSuboptimal,
}

/// Partition of the testing-arm indices into the best arm and the three
/// competitor classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmClassification {
    pub best: usize,
    pub a1: Vec<usize>,
    pub a2: Vec<usize>,
    pub a3: Vec<usize>,
}

impl ArmClassification {
    pub fn role(&self, i: usize) -> Option<ArmRole> {
        if i == self.best {
            Some(ArmRole::Best)
        } else if self.a1.contains(&i) {
            Some(ArmRole::SuperoptimalInfeasible)
        } else if self.a2.contains(&i) {
            Some(ArmRole::FeasibleSuboptimal)
        } else if self.a3.contains(&i) {
            Some(ArmRole::InfeasibleSuboptimal)
        } else {
            None
        }
    }
}

/// A fully specified best-feasible-arm problem. Immutable once built.
#[derive(Debug, Clone)]
pub struct Instance {
    train: ArmSet,
    test: ArmSet,
    theta_r: DVector<f64>,
    theta_c: DVector<f64>,
    tau: f64,
    sigma: f64,
    gamma: f64,
    r1: f64,
    r2: f64,
    best: usize,
    truth_known: bool,
}

/// Raw parameters for [`Instance::new`].
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub train: ArmSet,
    pub test: ArmSet,
    pub theta_r: Vec<f64>,
    pub theta_c: Vec<f64>,
    pub tau: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub r1: f64,
    pub r2: f64,
}

impl Instance {
    /// Validates every instance invariant and caches the best feasible arm.
    ///
    /// Noise scales may be zero (noiseless simulation); parameter bounds must
    /// be positive.
    pub fn new(spec: InstanceSpec) -> Result<Self, InstanceError> {
        let inst = Self::build(spec, true)?;
        Ok(inst)
    }

    /// Builds an instance whose parameters only drive the simulated
    /// environment and are not trusted as ground truth. Uniqueness and
    /// feasibility violations are logged rather than rejected.
    pub fn with_untrusted_truth(spec: InstanceSpec) -> Result<Self, InstanceError> {
        Self::build(spec, false)
    }

    fn build(spec: InstanceSpec, strict: bool) -> Result<Self, InstanceError> {
        let InstanceSpec {
            train,
            test,
            theta_r,
            theta_c,
            tau,
            sigma,
            gamma,
            r1,
            r2,
        } = spec;
        let d = train.dim();
        if test.dim() != d {
            return Err(InstanceError::ParameterDimension {
                what: "testing arms",
                expected: d,
                found: test.dim(),
            });
        }
        for (what, v) in [("theta_r", &theta_r), ("theta_c", &theta_c)] {
            if v.len() != d {
                return Err(InstanceError::ParameterDimension {
                    what,
                    expected: d,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(InstanceError::NonFinite(what));
            }
        }
        for (what, value) in [("tau", tau), ("sigma", sigma), ("gamma", gamma), ("r1", r1), ("r2", r2)] {
            if !value.is_finite() {
                return Err(InstanceError::NonFinite(what));
            }
        }
        for (what, value) in [("sigma", sigma), ("gamma", gamma)] {
            if value < 0.0 {
                return Err(InstanceError::OutOfRange {
                    what,
                    requirement: "nonnegative",
                    value,
                });
            }
        }
        for (what, value) in [("r1", r1), ("r2", r2)] {
            if value <= 0.0 {
                return Err(InstanceError::OutOfRange {
                    what,
                    requirement: "positive",
                    value,
                });
            }
        }
        let theta_r = DVector::from_vec(theta_r);
        let theta_c = DVector::from_vec(theta_c);
        for (what, v, bound) in [("theta_r", &theta_r, r1), ("theta_c", &theta_c, r2)] {
            let norm = v.norm();
            if norm > bound * (1.0 + 1e-12) {
                return Err(InstanceError::ParameterNormExceeded { what, norm, bound });
            }
        }
        if !span_contains(&train, &test) {
            return Err(InstanceError::SpanNotCovered);
        }

        let best = match best_feasible_index(&theta_r, &theta_c, &test, tau) {
            Some(b) => b,
            None if strict => return Err(InstanceError::NoFeasibleArm),
            None => {
                log::warn!("no testing arm is feasible under the supplied parameters");
                0
            }
        };
        let best_reward = theta_r.dot(&test[best]);
        for (i, z) in test.iter().enumerate() {
            if i == best || theta_c.dot(z) > tau {
                continue;
            }
            let r = theta_r.dot(z);
            if (r - best_reward).abs() <= TIE_TOL * (1.0 + best_reward.abs()) {
                if strict {
                    return Err(InstanceError::NonUniqueBest(best.min(i), best.max(i)));
                }
                log::warn!("best feasible arm is not unique ({best} ties {i})");
            }
        }
        if (theta_c.dot(&test[best]) - tau).abs() <= TIE_TOL * (1.0 + tau.abs()) {
            log::warn!("best feasible arm {best} lies on the cost boundary; hardness is zero");
        }

        Ok(Self {
            train,
            test,
            theta_r,
            theta_c,
            tau,
            sigma,
            gamma,
            r1,
            r2,
            best,
            truth_known: strict,
        })
    }

    pub fn train(&self) -> &ArmSet {
        &self.train
    }

    pub fn test(&self) -> &ArmSet {
        &self.test
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    pub fn theta_r(&self) -> &DVector<f64> {
        &self.theta_r
    }

    pub fn theta_c(&self) -> &DVector<f64> {
        &self.theta_c
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    /// Largest declared arm-norm bound over both arm sets.
    pub fn arm_bound(&self) -> f64 {
        self.train.bound().max(self.test.bound())
    }

    /// Whether the parameters are ground truth (false for datasets loaded
    /// without a truth sidecar).
    pub fn truth_known(&self) -> bool {
        self.truth_known
    }

    /// True when the training and testing sets hold the same vectors in the
    /// same order.
    pub fn shared_arms(&self) -> bool {
        self.train == self.test || self.train.as_slice() == self.test.as_slice()
    }

    pub fn to_spec(&self) -> InstanceSpec {
        InstanceSpec {
            train: self.train.clone(),
            test: self.test.clone(),
            theta_r: self.theta_r.iter().copied().collect(),
            theta_c: self.theta_c.iter().copied().collect(),
            tau: self.tau,
            sigma: self.sigma,
            gamma: self.gamma,
            r1: self.r1,
            r2: self.r2,
        }
    }

    /// Same arms and parameters with a different cost threshold.
    pub fn with_tau(&self, tau: f64) -> Result<Self, InstanceError> {
        let mut spec = self.to_spec();
        spec.tau = tau;
        Self::new(spec)
    }

    /// Same arms and parameters with different noise scales.
    pub fn with_noise(&self, sigma: f64, gamma: f64) -> Result<Self, InstanceError> {
        let mut spec = self.to_spec();
        spec.sigma = sigma;
        spec.gamma = gamma;
        Self::new(spec)
    }

    pub fn best(&self) -> usize {
        self.best
    }

    pub fn reward(&self, z: usize) -> f64 {
        self.theta_r.dot(&self.test[z])
    }

    pub fn cost(&self, z: usize) -> f64 {
        self.theta_c.dot(&self.test[z])
    }

    pub fn is_feasible(&self, z: usize) -> bool {
        self.cost(z) <= self.tau
    }

    pub fn classify(&self) -> ArmClassification {
        classify_arms(self)
    }

    pub fn is_alternative(&self, theta1: &DVector<f64>, theta2: &DVector<f64>, z: usize) -> bool {
        is_alternative(theta1, theta2, z, &self.test, self.tau)
    }

    pub fn from_json_str(s: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile =
            serde_json::from_str(s).map_err(|e| InstanceError::Format(e.to_string()))?;
        file.into_instance()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let s = std::fs::read_to_string(path.as_ref())
            .map_err(|e| InstanceError::Format(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&s)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            d: self.dim(),
            train: self.train.to_rows(),
            test: self.test.to_rows(),
            theta_r: self.theta_r.iter().copied().collect(),
            theta_c: self.theta_c.iter().copied().collect(),
            tau: self.tau,
            sigma: self.sigma,
            gamma: self.gamma,
            r1: self.r1,
            r2: self.r2,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }
}

/// On-disk JSON form of an instance. Field names are fixed and unknown
/// fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub d: usize,
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
    pub theta_r: Vec<f64>,
    pub theta_c: Vec<f64>,
    pub tau: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub r1: f64,
    pub r2: f64,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, InstanceError> {
        let train = ArmSet::new(self.train)?;
        let test = ArmSet::new(self.test)?;
        if train.dim() != self.d {
            return Err(InstanceError::ParameterDimension {
                what: "training arms",
                expected: self.d,
                found: train.dim(),
            });
        }
        Instance::new(InstanceSpec {
            train,
            test,
            theta_r: self.theta_r,
            theta_c: self.theta_c,
            tau: self.tau,
            sigma: self.sigma,
            gamma: self.gamma,
            r1: self.r1,
            r2: self.r2,
        })
    }
}

fn span_contains(train: &ArmSet, test: &ArmSet) -> bool {
    let rank_train = linalg::rank(train.as_slice());
    let mut all = train.as_slice().to_vec();
    all.extend_from_slice(test.as_slice());
    linalg::rank(&all) == rank_train
}

/// Index of the highest-reward arm among those with cost at most `tau`,
/// lowest index on exact ties. `None` when no arm is feasible.
pub fn best_feasible_index(
    theta_r: &DVector<f64>,
    theta_c: &DVector<f64>,
    arms: &ArmSet,
    tau: f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in arms.iter().enumerate() {
        if theta_c.dot(z) > tau {
            continue;
        }
        let r = theta_r.dot(z);
        if best.is_none_or(|(_, br)| r > br) {
            best = Some((i, r));
        }
    }
    best.map(|(i, _)| i)
}

/// The best feasible arm of a validated instance.
pub fn best_feasible_arm(inst: &Instance) -> usize {
    inst.best()
}

/// Splits the non-best testing arms into A1 (superoptimal, infeasible),
/// A2 (feasible, suboptimal) and A3 (infeasible, suboptimal).
pub fn classify_arms(inst: &Instance) -> ArmClassification {
    let best = inst.best();
    let best_reward = inst.reward(best);
    let mut out = ArmClassification {
        best,
        a1: Vec::new(),
        a2: Vec::new(),
        a3: Vec::new(),
    };
    for i in 0..inst.test().len() {
        if i == best {
            continue;
        }
        let superoptimal = inst.reward(i) > best_reward;
        match (inst.is_feasible(i), superoptimal) {
            (false, true) => out.a1.push(i),
            (true, false) => out.a2.push(i),
            (false, false) => out.a3.push(i),
            // Unreachable on a validated instance; a feasible superoptimal arm
            // would be the best one.
            (true, true) => out.a2.push(i),
        }
    }
    out
}

/// Whether arm `z` fails to be the best feasible arm under `(theta1, theta2)`:
/// either `z` is infeasible, or some other arm is feasible with reward at
/// least that of `z`.
pub fn is_alternative(
    theta1: &DVector<f64>,
    theta2: &DVector<f64>,
    z: usize,
    arms: &ArmSet,
    tau: f64,
) -> bool {
    let target = &arms[z];
    if theta2.dot(target) > tau {
        return true;
    }
    let reward = theta1.dot(target);
    arms.iter()
        .enumerate()
        .any(|(i, other)| i != z && theta1.dot(other) >= reward && theta2.dot(other) <= tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eoo(alpha: f64) -> Instance {
        let arms = vec![
            vec![1.0, 0.0],
            vec![0.0, 0.15],
            vec![0.0, 1.0],
            vec![1.2, 1.2],
            vec![alpha.cos(), alpha.sin()],
        ];
        Instance::new(InstanceSpec {
            train: ArmSet::new(arms.clone()).unwrap(),
            test: ArmSet::new(arms).unwrap(),
            theta_r: vec![1.0, 0.0],
            theta_c: vec![0.0, 1.0],
            tau: 0.5,
            sigma: 1.0,
            gamma: 1.0,
            r1: 2.0,
            r2: 2.0,
        })
        .unwrap()
    }

    #[test]
    fn eoo_best_and_roles() {
        let inst = eoo(0.1);
        assert_eq!(best_feasible_arm(&inst), 0);
        let c = classify_arms(&inst);
        assert!(c.a2.contains(&1));
        assert!(c.a3.contains(&2));
        assert!(c.a1.contains(&3));
        // cos(0.1) < 1 with cost sin(0.1) < 0.5: feasible and suboptimal.
        assert!(c.a2.contains(&4));
    }

    #[test]
    fn single_feasible_arm() {
        let inst = Instance::new(InstanceSpec {
            train: ArmSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            test: ArmSet::new(vec![vec![1.0, 0.0]]).unwrap(),
            theta_r: vec![1.0, 0.0],
            theta_c: vec![0.0, 1.0],
            tau: 0.0,
            sigma: 1.0,
            gamma: 1.0,
            r1: 1.0,
            r2: 1.0,
        })
        .unwrap();
        assert_eq!(inst.best(), 0);
    }

    #[test]
    fn rejects_infeasible_and_tied_instances() {
        let mut spec = eoo(0.1).to_spec();
        spec.tau = -1.0;
        assert_eq!(Instance::new(spec).unwrap_err(), InstanceError::NoFeasibleArm);

        let arms = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let tied = Instance::new(InstanceSpec {
            train: ArmSet::new(arms.clone()).unwrap(),
            test: ArmSet::new(arms).unwrap(),
            theta_r: vec![1.0, 0.0],
            theta_c: vec![0.0, 1.0],
            tau: 0.5,
            sigma: 1.0,
            gamma: 1.0,
            r1: 1.0,
            r2: 1.0,
        });
        assert_eq!(tied.unwrap_err(), InstanceError::NonUniqueBest(0, 1));
    }

    #[test]
    fn rejects_uncovered_span() {
        let res = Instance::new(InstanceSpec {
            train: ArmSet::new(vec![vec![1.0, 0.0]]).unwrap(),
            test: ArmSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            theta_r: vec![1.0, 0.0],
            theta_c: vec![0.0, 0.0],
            tau: 0.5,
            sigma: 1.0,
            gamma: 1.0,
            r1: 1.0,
            r2: 1.0,
        });
        assert_eq!(res.unwrap_err(), InstanceError::SpanNotCovered);
    }

    #[test]
    fn rejects_parameter_outside_bound() {
        let mut spec = eoo(0.1).to_spec();
        spec.r1 = 0.5;
        assert!(matches!(
            Instance::new(spec),
            Err(InstanceError::ParameterNormExceeded { what: "theta_r", .. })
        ));
    }

    #[test]
    fn boundary_cost_is_feasible() {
        let inst = eoo(0.1).with_tau(0.15).unwrap();
        // [0, 0.15] has cost exactly 0.15.
        assert!(inst.is_feasible(1));
    }

    #[test]
    fn alternative_predicate_cases() {
        let inst = eoo(0.1);
        let tr = inst.theta_r().clone();
        let tc = inst.theta_c().clone();
        assert!(!inst.is_alternative(&tr, &tc, 0));
        for z in 1..5 {
            assert!(inst.is_alternative(&tr, &tc, z));
        }
        // Push the cost of z* above tau.
        let shifted = &tc + DVector::from_vec(vec![10.0, 0.0]);
        assert!(inst.is_alternative(&tr, &shifted, 0));
        // Swap the rewards of [1,0] and [0,0.15]: theta1 = [0.15, 1/0.15 * 1.0]
        // gives <theta1,[1,0]> = 0.15 and <theta1,[0,0.15]> = 1.0.
        let swapped = DVector::from_vec(vec![0.15, 1.0 / 0.15]);
        assert!((swapped.dot(&inst.test()[0]) - 0.15).abs() < 1e-12);
        assert!((swapped.dot(&inst.test()[1]) - 1.0).abs() < 1e-12);
        assert!(inst.is_alternative(&swapped, &tc, 0));
    }

    #[test]
    fn json_roundtrip_and_unknown_fields() {
        let inst = eoo(0.2);
        let s = inst.to_json_pretty();
        let back = Instance::from_json_str(&s).unwrap();
        assert_eq!(back.to_file(), inst.to_file());
        let mut v: serde_json::Value = serde_json::from_str(&s).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(matches!(
            Instance::from_json_str(&v.to_string()),
            Err(InstanceError::Format(_))
        ));
    }

    #[test]
    fn arm_set_validation() {
        assert_eq!(ArmSet::new(vec![]).unwrap_err(), InstanceError::EmptyArmSet);
        assert!(matches!(
            ArmSet::new(vec![vec![1.0, 0.0], vec![1.0]]),
            Err(InstanceError::DimensionMismatch { index: 1, .. })
        ));
        let set = ArmSet::new(vec![vec![3.0, 4.0]]).unwrap();
        assert_eq!(set.bound(), 5.0);
        assert!(set.clone().with_bound(4.0).is_err());
        assert_eq!(set.with_bound(6.0).unwrap().bound(), 6.0);
    }
}
