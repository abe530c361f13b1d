//! Instance sources: the End-of-Optimism family, random unit-ball
//! instances, and CSV datasets.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::env::RngStream;
use crate::error::{Error, InstanceError, Result};
use crate::instance::{ArmSet, Instance, InstanceSpec};

/// Attempts allowed when drawing a valid random instance.
const RANDOM_ATTEMPTS: usize = 1000;

/// End-of-Optimism instance with a cost constraint: arms `[1,0]`,
/// `[0,0.15]`, `[0,1]`, `[1.2,1.2]` and `[cos α, sin α]`, shared between
/// training and testing; `θr = [1,0]`, `θc = [0,1]`, `τ = 0.5`, unit noise.
/// The best feasible arm is `[1,0]`.
pub fn generate_eoo_instance(alpha: f64) -> Result<Instance> {
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(InstanceError::OutOfRange {
            what: "alpha",
            requirement: "in (0, π/2)",
            value: alpha,
        }
        .into());
    }
    let arms = vec![
        vec![1.0, 0.0],
        vec![0.0, 0.15],
        vec![0.0, 1.0],
        vec![1.2, 1.2],
        vec![alpha.cos(), alpha.sin()],
    ];
    Ok(Instance::new(InstanceSpec {
        train: ArmSet::new(arms.clone())?,
        test: ArmSet::new(arms)?,
        theta_r: vec![1.0, 0.0],
        theta_c: vec![0.0, 1.0],
        tau: 0.5,
        sigma: 1.0,
        gamma: 1.0,
        r1: 2.0,
        r2: 2.0,
    })?)
}

/// A point uniform in the `d`-dimensional unit ball.
pub fn uniform_ball_point(d: usize, rng: &mut RngStream) -> DVector<f64> {
    loop {
        let g = rng.normal_vector(d);
        let n = g.norm();
        if n > 0.0 {
            let radius = rng.uniform().powf(1.0 / d as f64);
            return g * (radius / n);
        }
    }
}

/// `K` arms uniform in the unit ball of `R^d`, shared between training and
/// testing, with `θr = e1`, `θc = e_d`, `τ = 0.5` and unit noise. Draws whose
/// best feasible arm is missing, tied, duplicated, or on the cost boundary
/// are discarded and redrawn.
pub fn generate_random_instance(d: usize, k: usize, seed: u64) -> Result<Instance> {
    if d < 2 || k < 2 {
        return Err(Error::Config(format!("random instances need d >= 2 and K >= 2, got d={d}, K={k}")));
    }
    let mut rng = RngStream::new(seed);
    let mut theta_r = vec![0.0; d];
    let mut theta_c = vec![0.0; d];
    theta_r[0] = 1.0;
    theta_c[d - 1] = 1.0;
    for _ in 0..RANDOM_ATTEMPTS {
        let arms: Vec<DVector<f64>> = (0..k).map(|_| uniform_ball_point(d, &mut rng)).collect();
        let Ok(set) = ArmSet::from_vectors(arms).and_then(|a| a.with_bound(1.0)) else {
            continue;
        };
        let spec = InstanceSpec {
            train: set.clone(),
            test: set,
            theta_r: theta_r.clone(),
            theta_c: theta_c.clone(),
            tau: 0.5,
            sigma: 1.0,
            gamma: 1.0,
            r1: 2.0,
            r2: 2.0,
        };
        let Ok(inst) = Instance::new(spec) else {
            continue;
        };
        let b = inst.best();
        let duplicated = inst.test().iter().enumerate().any(|(i, z)| i != b && z == &inst.test()[b]);
        if !duplicated && inst.cost(b) < inst.tau() {
            return Ok(inst);
        }
    }
    Err(Error::Config(format!(
        "no valid random instance (d={d}, K={k}, seed={seed}) in {RANDOM_ATTEMPTS} attempts"
    )))
}

/// Noise and bound settings for dataset instances.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetOptions {
    pub sigma: f64,
    pub gamma: f64,
    /// Declared arm-norm bound `L`.
    pub arm_bound: f64,
    pub r1: f64,
    pub r2: f64,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            gamma: 1.0,
            arm_bound: 3f64.sqrt(),
            r1: 10f64.sqrt(),
            r2: 20f64.sqrt(),
        }
    }
}

/// Ground-truth parameters stored next to a dataset CSV.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetTruth {
    pub theta_r: Vec<f64>,
    pub theta_c: Vec<f64>,
}

/// `movies.csv` → `movies.truth.json`.
pub fn truth_sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("truth.json")
}

struct DatasetRows {
    features: Vec<Vec<f64>>,
    reward: Option<Vec<f64>>,
    cost: Option<Vec<f64>>,
}

fn parse_dataset(path: &Path) -> Result<DatasetRows> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("id") {
        return Err(Error::Data(format!("{}: first column must be `id`", path.display())));
    }
    let mut feat_cols = Vec::new();
    let (mut reward_col, mut cost_col) = (None, None);
    for (j, h) in headers.iter().enumerate().skip(1) {
        if let Some(idx) = h.strip_prefix("feat_") {
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::Data(format!("{}: bad feature column `{h}`", path.display())))?;
            feat_cols.push((idx, j));
        } else if h == "reward_param" {
            reward_col = Some(j);
        } else if h == "cost_param" {
            cost_col = Some(j);
        } else {
            return Err(Error::Data(format!("{}: unexpected column `{h}`", path.display())));
        }
    }
    feat_cols.sort_unstable();
    if feat_cols.is_empty() || feat_cols.iter().enumerate().any(|(i, (idx, _))| i != *idx) {
        return Err(Error::Data(format!(
            "{}: feature columns must be feat_0..feat_(d-1)",
            path.display()
        )));
    }
    let parse = |record: &csv::StringRecord, j: usize, line: usize| -> Result<f64> {
        let raw = record.get(j).unwrap_or("");
        raw.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Data(format!("{}: row {line}: bad number `{raw}`", path.display())))
    };
    let mut rows = DatasetRows {
        features: Vec::new(),
        reward: reward_col.map(|_| Vec::new()),
        cost: cost_col.map(|_| Vec::new()),
    };
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                line + 1,
                record.len(),
                headers.len()
            )));
        }
        let feats = feat_cols
            .iter()
            .map(|&(_, j)| parse(&record, j, line + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.features.push(feats);
        if let (Some(v), Some(j)) = (rows.reward.as_mut(), reward_col) {
            v.push(parse(&record, j, line + 1)?);
        }
        if let (Some(v), Some(j)) = (rows.cost.as_mut(), cost_col) {
            v.push(parse(&record, j, line + 1)?);
        }
    }
    if rows.features.is_empty() {
        return Err(Error::Data(format!("{}: no arms", path.display())));
    }
    Ok(rows)
}

/// Least-squares `θ` with `features · θ ≈ targets` (minimum-norm solution).
fn fit_parameter(features: &[Vec<f64>], targets: &[f64]) -> Result<Vec<f64>> {
    let d = features[0].len();
    let a = DMatrix::from_fn(features.len(), d, |i, j| features[i][j]);
    let b = DVector::from_column_slice(targets);
    let theta = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Data(format!("least-squares fit failed: {e}")))?;
    Ok(theta.iter().copied().collect())
}

/// Loads a dataset instance: each CSV row is one arm (shared between
/// training and testing). Ground truth comes from the sidecar
/// [`truth_sidecar_path`] when present. Without it, the parameters are
/// fitted by least squares to the `reward_param`/`cost_param` columns and
/// the instance is marked as having no trusted truth.
pub fn load_dataset_instance(path: &Path, tau: f64, opts: &DatasetOptions) -> Result<Instance> {
    let rows = parse_dataset(path)?;
    let arms = ArmSet::new(rows.features.clone())?.with_bound(opts.arm_bound)?;
    let d = arms.dim();
    let sidecar = truth_sidecar_path(path);
    let mut spec = InstanceSpec {
        train: arms.clone(),
        test: arms,
        theta_r: vec![0.0; d],
        theta_c: vec![0.0; d],
        tau,
        sigma: opts.sigma,
        gamma: opts.gamma,
        r1: opts.r1,
        r2: opts.r2,
    };
    if sidecar.exists() {
        let truth: DatasetTruth = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?;
        spec.theta_r = truth.theta_r;
        spec.theta_c = truth.theta_c;
        return Ok(Instance::new(spec)?);
    }
    log::warn!(
        "{}: no truth sidecar at {}; correctness will not be scored",
        path.display(),
        sidecar.display()
    );
    if let Some(r) = &rows.reward {
        spec.theta_r = fit_parameter(&rows.features, r)?;
    }
    if let Some(c) = &rows.cost {
        spec.theta_c = fit_parameter(&rows.features, c)?;
    }
    // Fitted parameters may exceed the declared bounds; widen rather than reject.
    let nr = DVector::from_column_slice(&spec.theta_r).norm();
    let nc = DVector::from_column_slice(&spec.theta_c).norm();
    spec.r1 = spec.r1.max(nr);
    spec.r2 = spec.r2.max(nc);
    Ok(Instance::with_untrusted_truth(spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoo_fifth_arm() {
        let inst = generate_eoo_instance(0.1).unwrap();
        let z = &inst.test()[4];
        assert!((z[0] - 0.9950).abs() < 1e-4 && (z[1] - 0.0998).abs() < 1e-4);
        assert_eq!(inst.best(), 0);
    }

    #[test]
    fn eoo_rejects_bad_alpha() {
        assert!(generate_eoo_instance(0.0).is_err());
        assert!(generate_eoo_instance(2.0).is_err());
    }

    #[test]
    fn random_instance_is_deterministic_and_bounded() {
        let a = generate_random_instance(2, 5, 17).unwrap();
        let b = generate_random_instance(2, 5, 17).unwrap();
        assert_eq!(a.test(), b.test());
        assert!(a.test().iter().all(|z| z.norm() <= 1.0));
        assert_ne!(generate_random_instance(2, 5, 18).unwrap().test(), a.test());
    }

    #[test]
    fn ball_norm_moment() {
        let mut rng = RngStream::new(5);
        let n = 10_000;
        let mean: f64 = (0..n).map(|_| uniform_ball_point(2, &mut rng).norm()).sum::<f64>() / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.02 * 2.0 / 3.0, "mean norm {mean}");
    }
}
