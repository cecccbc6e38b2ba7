//! Monte Carlo estimation of Parisian Pickands and Piterbarg constants.
//!
//! Both constants are expectations of `exp(sup_t inf_{s in [0,T]} eta(t+s))`
//! for the drifted field
//!
//! ```text
//! eta(x) = sqrt(2) B_{alpha/2}(x) - |x|^alpha - h(x)
//! ```
//!
//! over a growing outer interval. The Pickands constant (no drift) is
//! normalized by the outer length; the Piterbarg constant (power drift `h`)
//! is not. Two outer-interval conventions are supported: the symmetric
//! interval `[-lambda, lambda]` divided by `lambda`, which at `T = 0` is
//! twice the classical constant, and the half interval `[0, lambda]`
//! divided by `lambda`, which reduces to the classical `H_alpha`. The
//! asymptotic formulas consume the half-interval Pickands constant and the
//! symmetric-interval Piterbarg constant.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_paths::{FbmGridSampler, PathGrid, SamplerScratch};
use crate::parisian::sup_inf_slice;
use crate::rng::{replicate_rng, with_workers};

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    SymmetricInterval,
    HalfInterval,
}

impl Convention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::SymmetricInterval => "symmetric_interval",
            Convention::HalfInterval => "half_interval",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divided by `lambda` (Pickands type).
    PerLength,
    /// Not normalized (Piterbarg type).
    Raw,
}

/// Two-sided power drift `h(x) = A_- |x|^{g_-} 1{x<=0} + A_+ x^{g_+} 1{x>=0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerDrift {
    pub a_minus: f64,
    pub gamma_minus: f64,
    pub a_plus: f64,
    pub gamma_plus: f64,
}

impl PowerDrift {
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.a_minus * (-x).powf(self.gamma_minus)
        } else if x > 0.0 {
            self.a_plus * x.powf(self.gamma_plus)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftedFieldSpec {
    pub alpha: f64,
    /// Parisian window length `T`.
    pub t: f64,
    /// Outer half-width `lambda`.
    pub lambda: f64,
    pub grid_step: f64,
    pub drift: Option<PowerDrift>,
    pub convention: Convention,
}

impl DriftedFieldSpec {
    pub fn pickands(alpha: f64, t: f64, lambda: f64, grid_step: f64, convention: Convention) -> Self {
        DriftedFieldSpec {
            alpha,
            t,
            lambda,
            grid_step,
            drift: None,
            convention,
        }
    }

    pub fn normalization(&self) -> Normalization {
        if self.drift.is_some() {
            Normalization::Raw
        } else {
            Normalization::PerLength
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::param("alpha", format!("must lie in (0,2], got {}", self.alpha)));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::param("T", format!("must be finite and nonnegative, got {}", self.t)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::param("grid_step", format!("must be positive, got {}", self.grid_step)));
        }
        if let Some(d) = &self.drift {
            for (name, v) in [
                ("a_minus", d.a_minus),
                ("gamma_minus", d.gamma_minus),
                ("a_plus", d.a_plus),
                ("gamma_plus", d.gamma_plus),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::param(name, format!("drift coefficient must be positive, got {v}")));
                }
            }
        }
        steps_of(self.lambda, self.grid_step, "lambda")?;
        steps_of(self.t, self.grid_step, "T")?;
        Ok(())
    }

    fn outer_steps(&self) -> usize {
        (self.lambda / self.grid_step).round() as usize
    }
}

fn steps_of(len: f64, step: f64, what: &str) -> Result<usize> {
    let r = len / step;
    let k = r.round();
    if (r - k).abs() > GRID_TOL * r.max(1.0) {
        return Err(Error::Dimension(format!(
            "{what} = {len} is not a multiple of grid step {step}"
        )));
    }
    Ok(k as usize)
}

/// Samples the drifted field on a fixed grid; reusable across replicates.
#[derive(Debug, Clone)]
pub struct DriftedFieldSampler {
    spec: DriftedFieldSpec,
    /// Index of `x = 0` on the grid.
    zero: usize,
    points: usize,
    fbm: Option<FbmGridSampler>,
    /// `-|x|^alpha - h(x)` on the grid.
    trend: Vec<f64>,
    xs: Vec<f64>,
}

impl DriftedFieldSampler {
    /// Grid covering the outer interval extended by a window of `t_max`.
    pub fn new(spec: &DriftedFieldSpec, t_max: f64) -> Result<Self> {
        spec.validate()?;
        let n_out = spec.outer_steps();
        let n_w = steps_of(t_max, spec.grid_step, "T")?;
        let (zero, steps) = match spec.convention {
            Convention::SymmetricInterval => (n_out, 2 * n_out + n_w),
            Convention::HalfInterval => (0, n_out + n_w),
        };
        let g = spec.grid_step;
        let xs: Vec<f64> = (0..=steps).map(|j| (j as f64 - zero as f64) * g).collect();
        let trend = xs
            .iter()
            .map(|&x| -x.abs().powf(spec.alpha) - spec.drift.map_or(0.0, |d| d.eval(x)))
            .collect();
        let fbm = if spec.alpha < 2.0 {
            Some(FbmGridSampler::new(spec.alpha / 2.0, 0.0, steps, g)?)
        } else {
            None
        };
        Ok(DriftedFieldSampler {
            spec: *spec,
            zero,
            points: steps + 1,
            fbm,
            trend,
            xs,
        })
    }

    pub fn origin(&self) -> f64 {
        self.xs[0]
    }

    /// Index range of the outer interval.
    pub fn outer_range(&self) -> (usize, usize) {
        match self.spec.convention {
            Convention::SymmetricInterval => (0, 2 * self.spec.outer_steps()),
            Convention::HalfInterval => (0, self.spec.outer_steps()),
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut SamplerScratch, out: &mut Vec<f64>) {
        match &self.fbm {
            Some(fbm) => {
                fbm.sample_into(rng, scratch, out);
                let pin = out[self.zero];
                for (v, tr) in out.iter_mut().zip(&self.trend) {
                    *v = std::f64::consts::SQRT_2 * (*v - pin) + tr;
                }
            }
            None => {
                // alpha = 2: B_1(x) = xi * x.
                let xi: f64 = rng.sample(StandardNormal);
                out.clear();
                out.extend(
                    self.xs
                        .iter()
                        .zip(&self.trend)
                        .map(|(&x, &tr)| std::f64::consts::SQRT_2 * xi * x + tr),
                );
            }
        }
        debug_assert_eq!(out.len(), self.points);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathGrid {
        let mut values = Vec::new();
        self.sample_into(rng, &mut SamplerScratch::default(), &mut values);
        PathGrid {
            hurst: self.spec.alpha / 2.0,
            origin: self.origin(),
            dt: self.spec.grid_step,
            values,
        }
    }
}

/// One sample of the drifted field over the outer interval extended by `T`,
/// pinned at zero for `x = 0`. The `hurst` field of the result is `alpha/2`.
pub fn sample_drifted_field(spec: &DriftedFieldSpec, seed: u64) -> Result<PathGrid> {
    let sampler = DriftedFieldSampler::new(spec, spec.t)?;
    Ok(sampler.sample(&mut replicate_rng(seed, 0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub stderr: f64,
    pub replicates: u64,
    pub spec: DriftedFieldSpec,
    pub normalization: Normalization,
    pub convention: Convention,
    /// Master seed, absent for externally supplied values.
    pub seed: Option<u64>,
}

impl ConstantEstimate {
    /// Wraps an externally known constant for the field `spec`.
    pub fn known(value: f64, spec: DriftedFieldSpec) -> Self {
        ConstantEstimate {
            value,
            stderr: 0.0,
            replicates: 0,
            normalization: spec.normalization(),
            convention: spec.convention,
            spec,
            seed: None,
        }
    }
}

/// Monte Carlo options shared by the constant estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabParams {
    pub replicates: u64,
    pub seed: u64,
    pub workers: Option<usize>,
}

/// Per-replicate values `sup_t inf_s eta(t+s)` for each window in `ts`, on
/// common random numbers. `out[i][r]` belongs to `ts[i]`, replicate `r`.
pub fn sup_inf_samples(spec: &DriftedFieldSpec, ts: &[f64], params: LabParams) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if ts.is_empty() {
        return Ok(Vec::new());
    }
    let mut windows = Vec::with_capacity(ts.len());
    for &t in ts {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::param("T", format!("must be finite and nonnegative, got {t}")));
        }
        windows.push(steps_of(t, spec.grid_step, "T")?);
    }
    let t_max = ts.iter().cloned().fold(0.0, f64::max);
    let sampler = DriftedFieldSampler::new(spec, t_max)?;
    let (a, b) = sampler.outer_range();

    let per_rep: Vec<Vec<f64>> = with_workers(params.workers, || {
        (0..params.replicates)
            .into_par_iter()
            .map_init(
                || (SamplerScratch::default(), Vec::new(), VecDeque::new()),
                |(scratch, path, deque), r| {
                    let mut rng = replicate_rng(params.seed, r);
                    sampler.sample_into(&mut rng, scratch, path);
                    windows
                        .iter()
                        .map(|&w| sup_inf_slice(path, a, b, w, deque).expect("grid sized for window"))
                        .collect()
                },
            )
            .collect()
    });

    let mut out = vec![Vec::with_capacity(per_rep.len()); ts.len()];
    for row in per_rep {
        for (o, v) in out.iter_mut().zip(row) {
            o.push(v);
        }
    }
    Ok(out)
}

/// Estimates for several window lengths on common random numbers; the
/// estimates are nonincreasing in `T` replicate by replicate.
pub fn estimate_constant_curve(spec: &DriftedFieldSpec, ts: &[f64], params: LabParams) -> Result<Vec<ConstantEstimate>> {
    if params.replicates < 100 {
        return Err(Error::param(
            "replicates",
            format!("at least 100 replicates are required, got {}", params.replicates),
        ));
    }
    let samples = sup_inf_samples(spec, ts, params)?;
    let norm = match spec.normalization() {
        Normalization::PerLength => spec.lambda,
        Normalization::Raw => 1.0,
    };
    Ok(ts
        .iter()
        .zip(samples)
        .map(|(&t, vals)| {
            let exps: Vec<f64> = vals.iter().map(|v| v.exp()).collect();
            let (mean, sd) = mean_sd(&exps);
            let mut s = *spec;
            s.t = t;
            ConstantEstimate {
                value: mean / norm,
                stderr: sd / (exps.len() as f64).sqrt() / norm,
                replicates: params.replicates,
                spec: s,
                normalization: spec.normalization(),
                convention: spec.convention,
                seed: Some(params.seed),
            }
        })
        .collect())
}

/// Monte Carlo estimate of the constant defined by `spec`.
pub fn estimate_constant(spec: &DriftedFieldSpec, replicates: u64, seed: u64) -> Result<ConstantEstimate> {
    estimate_constant_with(
        spec,
        LabParams {
            replicates,
            seed,
            workers: None,
        },
    )
}

pub fn estimate_constant_with(spec: &DriftedFieldSpec, params: LabParams) -> Result<ConstantEstimate> {
    Ok(estimate_constant_curve(spec, &[spec.t], params)?.remove(0))
}

/// Mean and sample standard deviation with compensated summation; the
/// result depends only on the order of `xs`.
pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = neumaier_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1.0)).sqrt())
}

pub(crate) fn neumaier_sum(it: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half(alpha: f64, t: f64) -> DriftedFieldSpec {
        DriftedFieldSpec::pickands(alpha, t, 2.0, 0.0625, Convention::HalfInterval)
    }

    #[test]
    fn field_is_pinned_at_zero() {
        let mut spec = half(1.0, 0.5);
        let p = sample_drifted_field(&spec, 3).unwrap();
        assert_eq!(p.values[0], 0.0);
        assert_eq!(p.len(), 2 * 16 + 8 + 1);

        spec.convention = Convention::SymmetricInterval;
        spec.drift = Some(PowerDrift {
            a_minus: 1.0,
            gamma_minus: 1.0,
            a_plus: 2.0,
            gamma_plus: 1.0,
        });
        let p = sample_drifted_field(&spec, 3).unwrap();
        assert_eq!(p.origin, -2.0);
        assert_eq!(p.values[32], 0.0);
        assert_eq!(p.len(), 4 * 16 + 8 + 1);
    }

    #[test]
    fn alpha_two_field_is_a_random_line() {
        let spec = half(2.0, 0.0);
        let p = sample_drifted_field(&spec, 11).unwrap();
        let slope = (p.values[1] + p.dt * p.dt) / p.dt;
        for (j, v) in p.values.iter().enumerate() {
            let x = j as f64 * p.dt;
            assert!((v - (slope * x - x * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn window_must_fit_the_grid() {
        let spec = DriftedFieldSpec::pickands(1.0, 0.1, 2.0, 0.0625, Convention::HalfInterval);
        assert!(matches!(spec.validate(), Err(Error::Dimension(_))));
        let spec = DriftedFieldSpec::pickands(1.0, 0.0, 2.01, 0.0625, Convention::HalfInterval);
        assert!(matches!(spec.validate(), Err(Error::Dimension(_))));
        assert!(DriftedFieldSpec::pickands(2.5, 0.0, 2.0, 0.0625, Convention::HalfInterval)
            .validate()
            .is_err());
    }

    #[test]
    fn too_few_replicates() {
        assert!(estimate_constant(&half(1.0, 0.0), 99, 1).is_err());
    }

    #[test]
    fn neumaier_is_exact_on_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(xs.iter().copied()), 2.0);
    }
}
