//! Error exponent of best feasible arm identification.
//!
//! Two routes to the same quantity:
//!
//! * [`gamma_closed_form`] maximizes `min_z f(w, z)` where `f` is the
//!   per-arm closed-form term (`f1`..`f4`), with supergradients taken from
//!   the analytic derivative of each term.
//! * [`gamma_minmax_form`] maximizes
//!   `inf_{(θ1,θ2) ∈ Θ̄_{z*}} ½(‖θ1-θr‖²_{A(w)}/σ² + ‖θ2-θc‖²_{A(w)}/γ²)`, realizing the infimum constructively by projecting
//!   the truth onto each face of the alternative set. Supergradients come from
//!   the envelope theorem at the projected point.
//!
//! Both use the same outer solver: exponentiated-gradient ascent with
//! restarts followed by a pairwise mass-transfer polish, and finally a
//! stationarity certificate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::SimplexWeights;
use crate::env::RngStream;
use crate::error::SolverError;
use crate::instance::Instance;
use crate::linalg::{self, SpdFactor};

/// Which closed-form term applies to a testing arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HardnessCase {
    /// Superoptimal and infeasible: only the cost must move.
    F1,
    /// Feasible and suboptimal: only the reward must move.
    F2,
    /// Infeasible and suboptimal: both must move.
    F3,
    /// The best arm itself becoming infeasible.
    F4,
}

impl HardnessCase {
    pub fn as_str(self) -> &'static str {
        match self {
            HardnessCase::F1 => "f1",
            HardnessCase::F2 => "f2",
            HardnessCase::F3 => "f3",
            HardnessCase::F4 => "f4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmHardness {
    pub arm: usize,
    pub value: f64,
    pub case: HardnessCase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardnessResult {
    pub gamma: f64,
    pub w_star: SimplexWeights,
    pub per_arm: Vec<ArmHardness>,
    pub binding_arm: usize,
    pub case: HardnessCase,
}

#[derive(Debug, Clone)]
pub struct HardnessOptions {
    /// Number of ascent runs; the first starts at the uniform allocation.
    pub restarts: usize,
    pub iterations: usize,
    /// Base step of the `step / √k` schedule.
    pub step: f64,
    /// Size of the single-coordinate mass transfers probed by the certificate.
    pub transfer: f64,
    /// Largest tolerated relative improvement from any probed transfer.
    pub tol: f64,
    pub seed: u64,
}

impl Default for HardnessOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            iterations: 2000,
            step: 0.1,
            transfer: 1e-3,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// Minimizer of the weighted distance from a center to one face of an
/// alternative set.
#[derive(Debug, Clone)]
pub struct AltProjection {
    /// The testing arm whose face was used.
    pub region: usize,
    pub theta1: DVector<f64>,
    pub theta2: DVector<f64>,
    pub objective: f64,
    pub reward_active: bool,
    pub cost_active: bool,
}

/// Geometry needed to project onto `Θ̄_best`: the testing arms, the cost
/// threshold, the arm whose optimality is being refuted, and the variance
/// scales weighting the reward and cost parts of the metric.
#[derive(Debug, Clone, Copy)]
pub struct AltGeometry<'a> {
    pub arms: &'a [DVector<f64>],
    pub tau: f64,
    pub best: usize,
    pub var_r: f64,
    pub var_c: f64,
    /// Strict-side offset applied to the constraint boundaries.
    pub margin: f64,
}

/// Projection of `center` onto `{θ : aᵀθ ≥ b}` in the `V` metric.
/// Returns the moved point and `(b - aᵀc)² / aᵀV⁻¹a`, or `None` when the
/// halfspace is empty.
fn halfspace(
    center: &DVector<f64>,
    a: &DVector<f64>,
    b: f64,
    factor: &SpdFactor,
) -> Option<(DVector<f64>, f64)> {
    let slack = a.dot(center) - b;
    if slack >= 0.0 {
        return Some((center.clone(), 0.0));
    }
    let v_inv_a = factor.solve(a);
    let q = a.dot(&v_inv_a);
    if q <= 0.0 || !q.is_finite() {
        return None;
    }
    let mu = -slack / q;
    Some((center + v_inv_a * mu, slack * slack / q))
}

/// Projects `(center_r, center_c)` onto the face of `Θ̄_best` associated with
/// arm `z` under the metric `½(‖·‖²_V / var_r + ‖·‖²_V / var_c)`.
///
/// For `z ≠ best` the face is `{θ1ᵀz ≥ θ1ᵀbest, θ2ᵀz ≤ τ}`; for `z = best`
/// it is `{θ2ᵀbest ≥ τ}`. Returns `None` if the face is empty.
pub fn project_region(
    center_r: &DVector<f64>,
    center_c: &DVector<f64>,
    factor: &SpdFactor,
    geom: &AltGeometry<'_>,
    z: usize,
) -> Option<AltProjection> {
    let arm = &geom.arms[z];
    if z == geom.best {
        let (theta2, dist) = halfspace(center_c, arm, geom.tau + geom.margin, factor)?;
        return Some(AltProjection {
            region: z,
            theta1: center_r.clone(),
            theta2,
            objective: 0.5 * dist / geom.var_c,
            reward_active: false,
            cost_active: dist > 0.0,
        });
    }
    let diff = arm - &geom.arms[geom.best];
    let (theta1, dist_r) = halfspace(center_r, &diff, geom.margin, factor)?;
    let neg = -arm;
    let (theta2, dist_c) = halfspace(center_c, &neg, -geom.tau + geom.margin, factor)?;
    Some(AltProjection {
        region: z,
        theta1,
        theta2,
        objective: 0.5 * (dist_r / geom.var_r + dist_c / geom.var_c),
        reward_active: dist_r > 0.0,
        cost_active: dist_c > 0.0,
    })
}

/// The closest point of `Θ̄_best` over all faces; lowest arm index on ties.
pub fn nearest_alternative(
    center_r: &DVector<f64>,
    center_c: &DVector<f64>,
    factor: &SpdFactor,
    geom: &AltGeometry<'_>,
) -> Option<AltProjection> {
    let mut best: Option<AltProjection> = None;
    for z in 0..geom.arms.len() {
        if let Some(p) = project_region(center_r, center_c, factor, geom, z) {
            if best.as_ref().is_none_or(|b| p.objective < b.objective) {
                best = Some(p);
            }
        }
    }
    best
}

/// Projects the true parameters onto the face of `Θ̄_{z*}` belonging to
/// testing arm `z`, in the metric given by the positive definite matrix `v`.
/// When `v = A(w)` the objective equals the closed-form term `f(w, z)`.
pub fn project_to_alternative(
    inst: &Instance,
    z: usize,
    v: &DMatrix<f64>,
) -> Result<AltProjection, SolverError> {
    if inst.sigma() <= 0.0 {
        return Err(SolverError::ZeroNoise("sigma"));
    }
    if inst.gamma() <= 0.0 {
        return Err(SolverError::ZeroNoise("gamma"));
    }
    if z >= inst.test().len() {
        return Err(SolverError::InvalidInput(format!("arm {z} out of range")));
    }
    let factor = SpdFactor::new(v)?;
    let geom = AltGeometry {
        arms: inst.test().as_slice(),
        tau: inst.tau(),
        best: inst.best(),
        var_r: inst.sigma().powi(2),
        var_c: inst.gamma().powi(2),
        margin: 0.0,
    };
    project_region(inst.theta_r(), inst.theta_c(), &factor, &geom, z)
        .ok_or_else(|| SolverError::InvalidInput(format!("face of arm {z} is empty")))
}

/// Instance data expressed in an orthonormal basis of the span of the
/// training arms, so that `A(w)` is invertible for full-support `w`.
struct Reduced {
    x: Vec<DVector<f64>>,
    z: Vec<DVector<f64>>,
    theta_r: DVector<f64>,
    theta_c: DVector<f64>,
    tau: f64,
    var_r: f64,
    var_c: f64,
    best: usize,
}

impl Reduced {
    fn new(inst: &Instance) -> Result<Self, SolverError> {
        if inst.sigma() <= 0.0 {
            return Err(SolverError::ZeroNoise("sigma"));
        }
        if inst.gamma() <= 0.0 {
            return Err(SolverError::ZeroNoise("gamma"));
        }
        let d = inst.dim();
        let basis = linalg::span_basis(inst.train().as_slice())
            .ok_or(SolverError::DegenerateDesign { rank: 0, dim: d })?;
        let project = |v: &DVector<f64>| -> DVector<f64> {
            if basis.ncols() == d {
                v.clone()
            } else {
                basis.transpose() * v
            }
        };
        Ok(Self {
            x: inst.train().iter().map(project).collect(),
            z: inst.test().iter().map(project).collect(),
            theta_r: project(inst.theta_r()),
            theta_c: project(inst.theta_c()),
            tau: inst.tau(),
            var_r: inst.sigma().powi(2),
            var_c: inst.gamma().powi(2),
            best: inst.best(),
        })
    }

    fn factor(&self, w: &[f64]) -> Result<SpdFactor, SolverError> {
        SpdFactor::new(&linalg::weighted_gram(&self.x, w))
    }
}

/// One term of the inner minimum together with a supergradient in `w`.
struct Term {
    value: f64,
    grad: Vec<f64>,
    case: HardnessCase,
}

trait InnerProblem {
    fn terms(&self, w: &[f64]) -> Result<Vec<Term>, SolverError>;
    fn arms(&self) -> usize;
}

struct ClosedForm(Reduced);

impl ClosedForm {
    /// `c / aᵀV⁻¹a` and its gradient `c (aᵀV⁻¹x)² / (aᵀV⁻¹a)²`.
    fn ratio(&self, factor: &SpdFactor, a: &DVector<f64>, c: f64, grad: &mut [f64]) -> f64 {
        let v_inv_a = factor.solve(a);
        let q = a.dot(&v_inv_a);
        if q <= 0.0 {
            return f64::INFINITY;
        }
        let value = c / q;
        for (g, x) in grad.iter_mut().zip(&self.0.x) {
            let s = x.dot(&v_inv_a);
            *g += value * s * s / q;
        }
        value
    }
}

impl InnerProblem for ClosedForm {
    fn arms(&self) -> usize {
        self.0.x.len()
    }

    fn terms(&self, w: &[f64]) -> Result<Vec<Term>, SolverError> {
        let r = &self.0;
        let factor = r.factor(w)?;
        let zb = &r.z[r.best];
        let best_reward = r.theta_r.dot(zb);
        let mut out = Vec::with_capacity(r.z.len());
        for (i, z) in r.z.iter().enumerate() {
            let mut grad = vec![0.0; r.x.len()];
            let cost = r.theta_c.dot(z);
            let cost_term = |s: &Self, g: &mut [f64]| {
                let gap = r.tau - cost;
                s.ratio(&factor, z, gap * gap / (2.0 * r.var_c), g)
            };
            let (value, case) = if i == r.best {
                (cost_term(self, &mut grad), HardnessCase::F4)
            } else {
                let infeasible = cost > r.tau;
                let superoptimal = r.theta_r.dot(z) > best_reward;
                match (infeasible, superoptimal) {
                    (true, true) => (cost_term(self, &mut grad), HardnessCase::F1),
                    (false, _) => {
                        let gap = best_reward - r.theta_r.dot(z);
                        let diff = z - zb;
                        let v = self.ratio(&factor, &diff, gap * gap / (2.0 * r.var_r), &mut grad);
                        (v, HardnessCase::F2)
                    }
                    (true, false) => {
                        let gap = best_reward - r.theta_r.dot(z);
                        let diff = z - zb;
                        let v_r = self.ratio(&factor, &diff, gap * gap / (2.0 * r.var_r), &mut grad);
                        (v_r + cost_term(self, &mut grad), HardnessCase::F3)
                    }
                }
            };
            out.push(Term { value, grad, case });
        }
        Ok(out)
    }
}

struct MinMaxForm(Reduced);

impl InnerProblem for MinMaxForm {
    fn arms(&self) -> usize {
        self.0.x.len()
    }

    fn terms(&self, w: &[f64]) -> Result<Vec<Term>, SolverError> {
        let r = &self.0;
        let factor = r.factor(w)?;
        let geom = AltGeometry {
            arms: &r.z,
            tau: r.tau,
            best: r.best,
            var_r: r.var_r,
            var_c: r.var_c,
            margin: 0.0,
        };
        let mut out = Vec::with_capacity(r.z.len());
        for i in 0..r.z.len() {
            let Some(p) = project_region(&r.theta_r, &r.theta_c, &factor, &geom, i) else {
                out.push(Term {
                    value: f64::INFINITY,
                    grad: vec![0.0; r.x.len()],
                    case: HardnessCase::F2,
                });
                continue;
            };
            let d1 = &p.theta1 - &r.theta_r;
            let d2 = &p.theta2 - &r.theta_c;
            // Envelope theorem: the objective is linear in w at fixed (θ1, θ2).
            let grad = r
                .x
                .iter()
                .map(|x| 0.5 * (x.dot(&d1).powi(2) / r.var_r + x.dot(&d2).powi(2) / r.var_c))
                .collect();
            let case = if i == r.best {
                HardnessCase::F4
            } else {
                match (p.reward_active, p.cost_active) {
                    (true, true) => HardnessCase::F3,
                    (false, true) => HardnessCase::F1,
                    _ => HardnessCase::F2,
                }
            };
            out.push(Term {
                value: p.objective,
                grad,
                case,
            });
        }
        Ok(out)
    }
}

fn binding(terms: &[Term]) -> usize {
    let mut idx = 0;
    for (i, t) in terms.iter().enumerate() {
        if t.value < terms[idx].value {
            idx = i;
        }
    }
    idx
}

fn objective<P: InnerProblem>(p: &P, w: &[f64]) -> Result<f64, SolverError> {
    let terms = p.terms(w)?;
    Ok(terms[binding(&terms)].value)
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
}

fn ascend<P: InnerProblem>(
    p: &P,
    start: Vec<f64>,
    opts: &HardnessOptions,
) -> Result<(Vec<f64>, f64), SolverError> {
    let mut w = start;
    let mut best_w = w.clone();
    let mut best_v = f64::NEG_INFINITY;
    for k in 1..=opts.iterations {
        let terms = p.terms(&w)?;
        let b = binding(&terms);
        let value = terms[b].value;
        if value > best_v {
            best_v = value;
            best_w.clone_from(&w);
        }
        let grad = &terms[b].grad;
        let scale = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if !(scale > 0.0) || !scale.is_finite() {
            break;
        }
        let step = opts.step / (k as f64).sqrt();
        let shift = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / scale;
        for (wi, g) in w.iter_mut().zip(grad) {
            *wi *= (step * (g / scale - shift)).exp();
        }
        normalize(&mut w);
        for wi in w.iter_mut() {
            *wi = wi.max(1e-300);
        }
    }
    Ok((best_w, best_v))
}

fn transfer(w: &[f64], from: usize, to: usize, amount: f64) -> Vec<f64> {
    let mut out = w.to_vec();
    let delta = amount.min(out[from]);
    out[from] -= delta;
    out[to] += delta;
    out
}

/// Greedy pairwise mass transfers with shrinking step sizes.
fn polish<P: InnerProblem>(
    p: &P,
    mut w: Vec<f64>,
    mut value: f64,
    opts: &HardnessOptions,
) -> Result<(Vec<f64>, f64), SolverError> {
    let n = w.len();
    let mut step = 0.05_f64.max(opts.transfer);
    loop {
        for _sweep in 0..500 {
            let mut improved = false;
            for from in 0..n {
                if w[from] <= 0.0 {
                    continue;
                }
                for to in 0..n {
                    if to == from {
                        continue;
                    }
                    let cand = transfer(&w, from, to, step);
                    let v = objective(p, &cand)?;
                    if v > value * (1.0 + 1e-12) + f64::MIN_POSITIVE {
                        w = cand;
                        value = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if step <= opts.transfer {
            break;
        }
        step = (step / 3.0).max(opts.transfer);
    }
    Ok((w, value))
}

fn certify<P: InnerProblem>(p: &P, w: &[f64], value: f64, opts: &HardnessOptions) -> Result<f64, SolverError> {
    let n = w.len();
    let mut worst = 0.0_f64;
    for from in 0..n {
        if w[from] <= 0.0 {
            continue;
        }
        for to in 0..n {
            if to != from {
                let v = objective(p, &transfer(w, from, to, opts.transfer))?;
                worst = worst.max(v - value);
            }
        }
    }
    let allowed = opts.tol * value.abs().max(f64::MIN_POSITIVE);
    if worst > allowed {
        return Err(SolverError::NotStationary {
            best_value: value,
            best_weights: w.to_vec(),
            improvement: worst,
        });
    }
    Ok(worst)
}

fn maximize<P: InnerProblem>(p: &P, opts: &HardnessOptions) -> Result<HardnessResult, SolverError> {
    let n = p.arms();
    if opts.restarts == 0 {
        return Err(SolverError::InvalidInput("at least one restart is required".into()));
    }
    let mut rng = RngStream::new(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in 0..opts.restarts {
        let start = if r == 0 {
            vec![1.0 / n as f64; n]
        } else {
            let mut w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.uniform()).ln() + 1e-3).collect();
            normalize(&mut w);
            w
        };
        let (w, v) = ascend(p, start, opts)?;
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((w, v));
        }
    }
    let (w, v) = best.expect("at least one restart");
    let (mut w, _) = polish(p, w, v, opts)?;
    normalize(&mut w);
    let value = objective(p, &w)?;
    certify(p, &w, value, opts)?;

    let terms = p.terms(&w)?;
    let b = binding(&terms);
    let per_arm = terms
        .iter()
        .enumerate()
        .map(|(i, t)| ArmHardness {
            arm: i,
            value: t.value,
            case: t.case,
        })
        .collect();
    Ok(HardnessResult {
        gamma: terms[b].value.max(0.0),
        w_star: SimplexWeights::normalized(w)?,
        per_arm,
        binding_arm: b,
        case: terms[b].case,
    })
}

/// Closed-form per-arm terms `f(w, z)` at allocation `w`.
pub fn f_values(inst: &Instance, w: &SimplexWeights) -> Result<Vec<ArmHardness>, SolverError> {
    if w.len() != inst.train().len() {
        return Err(SolverError::InvalidInput(format!(
            "{} weights for {} training arms",
            w.len(),
            inst.train().len()
        )));
    }
    let p = ClosedForm(Reduced::new(inst)?);
    Ok(p.terms(w.as_slice())?
        .into_iter()
        .enumerate()
        .map(|(i, t)| ArmHardness {
            arm: i,
            value: t.value,
            case: t.case,
        })
        .collect())
}

/// Inner value of the max-min form at `w`: the smallest projection
/// objective over the faces of `Θ̄_{z*}`, per arm.
pub fn alternative_values(inst: &Instance, w: &SimplexWeights) -> Result<Vec<ArmHardness>, SolverError> {
    let p = MinMaxForm(Reduced::new(inst)?);
    Ok(p.terms(w.as_slice())?
        .into_iter()
        .enumerate()
        .map(|(i, t)| ArmHardness {
            arm: i,
            value: t.value,
            case: t.case,
        })
        .collect())
}

/// `Γ` via the closed-form terms.
pub fn gamma_closed_form(inst: &Instance, opts: &HardnessOptions) -> Result<HardnessResult, SolverError> {
    maximize(&ClosedForm(Reduced::new(inst)?), opts)
}

/// `Γ` via the max-min form with constructive projections.
pub fn gamma_minmax_form(inst: &Instance, opts: &HardnessOptions) -> Result<HardnessResult, SolverError> {
    maximize(&MinMaxForm(Reduced::new(inst)?), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ArmSet, InstanceSpec};
    use approx::assert_relative_eq;

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

    fn basis_instance(sigma: f64) -> Instance {
        // K-armed reduction: orthonormal arms, rewards on the diagonal.
        let arms = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        Instance::new(InstanceSpec {
            train: ArmSet::new(arms.clone()).unwrap(),
            test: ArmSet::new(arms).unwrap(),
            theta_r: vec![1.0, 0.6, 0.3],
            theta_c: vec![0.0, 0.0, 0.0],
            tau: 0.5,
            sigma,
            gamma: 1.0,
            r1: 2.0,
            r2: 2.0,
        })
        .unwrap()
    }

    fn explicit_f(inst: &Instance, w: &[f64]) -> Vec<f64> {
        let mut v = DMatrix::zeros(inst.dim(), inst.dim());
        for (x, &wi) in inst.train().iter().zip(w) {
            v += x * x.transpose() * wi;
        }
        let inv = v.try_inverse().unwrap();
        let q = |a: &DVector<f64>| (a.transpose() * &inv * a)[0];
        let b = inst.best();
        let zb = inst.test()[b].clone();
        let (s2, g2) = (inst.sigma().powi(2), inst.gamma().powi(2));
        (0..inst.test().len())
            .map(|i| {
                let z = inst.test()[i].clone();
                let dc = (inst.tau() - inst.cost(i)).abs();
                let dr = inst.reward(b) - inst.reward(i);
                let c_part = dc * dc / (2.0 * g2 * q(&z));
                if i == b {
                    return c_part;
                }
                let r_part = dr * dr / (2.0 * s2 * q(&(&z - &zb)));
                match (inst.is_feasible(i), dr < 0.0) {
                    (false, true) => c_part,
                    (true, _) => r_part,
                    (false, false) => c_part + r_part,
                }
            })
            .collect()
    }

    #[test]
    fn k_armed_reduction_formula() {
        let inst = basis_instance(1.0);
        let w = SimplexWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let f = f_values(&inst, &w).unwrap();
        for j in 1..3 {
            let gap = inst.reward(0) - inst.reward(j);
            let expected = gap * gap / (2.0 * (1.0 / w[j] + 1.0 / w[0]));
            assert_relative_eq!(f[j].value, expected, epsilon = 1e-12);
            assert_eq!(f[j].case, HardnessCase::F2);
        }
        assert_eq!(f[0].case, HardnessCase::F4);
    }

    #[test]
    fn f_values_match_explicit_inverse_on_eoo() {
        let inst = eoo(0.1);
        let g = crate::design::g_optimal(inst.train(), 1e-3, 100_000).unwrap();
        let f = f_values(&inst, &g.weights).unwrap();
        let expected = explicit_f(&inst, g.weights.as_slice());
        for (a, e) in f.iter().zip(&expected) {
            assert_relative_eq!(a.value, *e, max_relative = 1e-9);
        }
        let cases: Vec<_> = f.iter().map(|a| a.case).collect();
        assert_eq!(
            cases,
            vec![HardnessCase::F4, HardnessCase::F2, HardnessCase::F3, HardnessCase::F1, HardnessCase::F2]
        );
    }

    #[test]
    fn scaling_sigma_and_gaps_cancels() {
        let inst = basis_instance(1.0);
        let mut spec = inst.to_spec();
        spec.sigma = 2.0;
        spec.theta_r = spec.theta_r.iter().map(|v| v * 2.0).collect();
        spec.r1 = 4.0;
        let scaled = Instance::new(spec).unwrap();
        let w = SimplexWeights::new(vec![0.4, 0.4, 0.2]).unwrap();
        let a = f_values(&inst, &w).unwrap();
        let b = f_values(&scaled, &w).unwrap();
        for j in 1..3 {
            assert_relative_eq!(a[j].value, b[j].value, epsilon = 1e-12);
        }
    }

    #[test]
    fn one_point_simplex() {
        let inst = Instance::new(InstanceSpec {
            train: ArmSet::new(vec![vec![1.0]]).unwrap(),
            test: ArmSet::new(vec![vec![1.0]]).unwrap(),
            theta_r: vec![1.0],
            theta_c: vec![0.2],
            tau: 0.5,
            sigma: 1.0,
            gamma: 0.5,
            r1: 1.0,
            r2: 1.0,
        })
        .unwrap();
        let expected = (0.5 - 0.2f64).powi(2) / (2.0 * 0.25);
        let opts = HardnessOptions {
            restarts: 2,
            iterations: 10,
            ..Default::default()
        };
        let a = gamma_closed_form(&inst, &opts).unwrap();
        let b = gamma_minmax_form(&inst, &opts).unwrap();
        assert_relative_eq!(a.gamma, expected, epsilon = 1e-12);
        assert_relative_eq!(b.gamma, expected, epsilon = 1e-12);
        assert_eq!(a.case, HardnessCase::F4);
    }

    #[test]
    fn projection_faces_match_closed_form() {
        let inst = eoo(0.2);
        let w = SimplexWeights::new(vec![0.3, 0.1, 0.2, 0.1, 0.3]).unwrap();
        let v = crate::design::info_matrix(inst.train(), &w);
        let f = f_values(&inst, &w).unwrap();
        for z in 0..5 {
            let p = project_to_alternative(&inst, z, &v).unwrap();
            assert_relative_eq!(p.objective, f[z].value, max_relative = 1e-10);
            match f[z].case {
                HardnessCase::F2 => assert_eq!(&p.theta2, inst.theta_c()),
                HardnessCase::F1 | HardnessCase::F4 => assert_eq!(&p.theta1, inst.theta_r()),
                HardnessCase::F3 => {}
            }
        }
    }

    #[test]
    fn closed_and_minmax_agree_on_eoo() {
        let inst = eoo(0.1);
        let opts = HardnessOptions::default();
        let a = gamma_closed_form(&inst, &opts).unwrap();
        let b = gamma_minmax_form(&inst, &opts).unwrap();
        assert!((a.gamma - b.gamma).abs() <= 0.01 * a.gamma);
        assert!(a.gamma > 0.0);
    }

    #[test]
    fn noise_monotonicity() {
        let inst = eoo(0.3);
        let opts = HardnessOptions {
            restarts: 4,
            ..Default::default()
        };
        let base = gamma_closed_form(&inst, &opts).unwrap().gamma;
        let louder = gamma_closed_form(&inst.with_noise(1.5, 1.0).unwrap(), &opts).unwrap().gamma;
        let louder_cost = gamma_closed_form(&inst.with_noise(1.0, 1.5).unwrap(), &opts).unwrap().gamma;
        assert!(louder <= base * (1.0 + 1e-6));
        assert!(louder_cost <= base * (1.0 + 1e-6));
    }

    #[test]
    fn zero_noise_is_rejected() {
        let inst = eoo(0.1).with_noise(0.0, 1.0).unwrap();
        assert!(matches!(
            gamma_closed_form(&inst, &HardnessOptions::default()),
            Err(SolverError::ZeroNoise("sigma"))
        ));
    }
}
