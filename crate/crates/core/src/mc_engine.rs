//! Crude Monte Carlo estimation of Parisian ruin probabilities.
//!
//! Two kinds of sources are supported: the many-inputs risk model, where
//! `Z(t) = B_H(t) / D(t)`, and a synthetic process
//! `Z(t) = sigma(t) B_H(b + t) / (b + t)^H` whose variance and correlation
//! expansions at `t* = 0` are prescribed exactly. Rare events are made
//! affordable by simulating only a shrinking vicinity of the optimal point.
//!
//! Every replicate owns a deterministic random stream, and the estimate is
//! an integer hit count, so results do not depend on the worker count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{classify, corollary_value, theorem1_value, AsymptoticCase, Constants};
use crate::error::{Error, Result};
use crate::gaussian_paths::{FbmGridSampler, SamplerScratch};
use crate::parisian::{sup_inf_slice, WindowSpec};
use crate::risk_model::{LocalExpansion, RiskModel};
use crate::rng::{replicate_rng, with_workers};

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Process with `sigma(t) = 1 / (1 + A_+ t^{g_+} 1{t>=0} + A_- |t|^{g_-} 1{t<0})`
/// modulating the standardized fBm `B_H(b + t) / (b + t)^H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProcessSpec {
    pub hurst: f64,
    pub a_minus: f64,
    pub gamma_minus: f64,
    pub a_plus: f64,
    pub gamma_plus: f64,
    #[serde(default = "default_base_time")]
    pub base_time: f64,
    /// Half-width of the simulated domain when no vicinity is requested.
    /// Defaults to `base_time / 2`.
    #[serde(default)]
    pub extent: Option<f64>,
}

fn default_base_time() -> f64 {
    1.0
}

impl SyntheticProcessSpec {
    pub fn new(hurst: f64, a_minus: f64, gamma_minus: f64, a_plus: f64, gamma_plus: f64) -> Result<Self> {
        let s = SyntheticProcessSpec {
            hurst,
            a_minus,
            gamma_minus,
            a_plus,
            gamma_plus,
            base_time: 1.0,
            extent: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::param("hurst", format!("must lie in (0,1), got {}", self.hurst)));
        }
        for (name, v) in [
            ("A_minus", self.a_minus),
            ("gamma_minus", self.gamma_minus),
            ("A_plus", self.a_plus),
            ("gamma_plus", self.gamma_plus),
            ("base_time", self.base_time),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if let Some(e) = self.extent {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::param("extent", format!("must be positive and finite, got {e}")));
            }
        }
        Ok(())
    }

    pub fn extent(&self) -> f64 {
        self.extent.unwrap_or(0.5 * self.base_time)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        let bump = if t >= 0.0 {
            self.a_plus * t.powf(self.gamma_plus)
        } else {
            self.a_minus * (-t).powf(self.gamma_minus)
        };
        1.0 / (1.0 + bump)
    }

    /// Exact local structure at `t* = 0`: `alpha = 2H`, `D = 1 / (2 b^{2H})`.
    pub fn local_expansion(&self) -> Result<LocalExpansion> {
        self.validate()?;
        let mut e = LocalExpansion::new(
            self.a_minus,
            self.gamma_minus,
            self.a_plus,
            self.gamma_plus,
            2.0 * self.hurst,
            1.0 / (2.0 * self.base_time.powf(2.0 * self.hurst)),
        )?;
        e.t_star = 0.0;
        e.sigma_star = 1.0;
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Mipr(RiskModel),
    Synthetic(SyntheticProcessSpec),
}

impl Source {
    pub fn local_expansion(&self) -> Result<LocalExpansion> {
        match self {
            Source::Mipr(m) => m.local_expansion(),
            Source::Synthetic(s) => s.local_expansion(),
        }
    }

    fn hurst(&self) -> f64 {
        match self {
            Source::Mipr(m) => m.hurst,
            Source::Synthetic(s) => s.hurst,
        }
    }
}

/// Threshold of the ruin event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Level `u` for the standardized process `Z / sigma*`.
    U(f64),
    /// Number of inputs: level `sqrt(N)` for `B_H / D` (risk model only).
    N(f64),
}

/// How the Parisian window length is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// Window of the given length `T_u`.
    Fixed(f64),
    /// `T_u = T u^{-2/nu}`.
    AssumptionB(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vicinity {
    /// `delta_pm = u^{-2/g_pm} (ln u)^{2/g_pm}`.
    Log,
    /// `delta_pm = Lambda u^{-2/g_pm}`.
    Lambda(f64),
}

/// One-sided half-widths `(delta_-, delta_+)` of the simulated vicinity of `t*`.
pub fn build_vicinity(exp: &LocalExpansion, u: f64, mode: Vicinity) -> Result<(f64, f64)> {
    if !(u > std::f64::consts::E && u.is_finite()) {
        return Err(Error::param("u", format!("vicinity needs u > e, got {u}")));
    }
    let half = |g: f64| match mode {
        Vicinity::Log => (u.ln() / u).powf(2.0 / g),
        Vicinity::Lambda(l) => l * u.powf(-2.0 / g),
    };
    if let Vicinity::Lambda(l) = mode {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive and finite, got {l}")));
        }
    }
    Ok((half(exp.gamma_minus), half(exp.gamma_plus)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub replicates: u64,
    pub seed: u64,
    /// Explicit grid step; chosen automatically when `None`.
    pub dt: Option<f64>,
    /// Points per `min(T_u, q(u))` for the automatic step.
    pub resolution: f64,
    /// Lower bound for the automatic step.
    pub dt_floor: f64,
    pub vicinity: Option<Vicinity>,
    pub workers: Option<usize>,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            replicates: 10_000,
            seed: 0,
            dt: None,
            resolution: 8.0,
            dt_floor: 1e-6,
            vicinity: None,
            workers: None,
        }
    }
}

/// Simulation grid in source time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dt: f64,
    /// First grid time.
    pub start: f64,
    /// Outer domain `E` is `[start, end]`; the path extends to `end + T_u`.
    pub end: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub p_hat: f64,
    pub hits: u64,
    pub replicates: u64,
    pub ci95: (f64, f64),
    /// Standardized threshold (`n_hat` for an `N` threshold).
    pub u: f64,
    /// Continuous window length `T_u`.
    pub window_duration: f64,
    pub grid: GridInfo,
    pub window: WindowSpec,
    pub vicinity: Option<(f64, f64)>,
    pub master_seed: u64,
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Precomputed grid, sampler and transformation for one ruin experiment.
///
/// Replicate `i` of `Z` on the grid is produced by [`RuinSimulator::sample_path`];
/// the ruin event is `sup_inf(path) > level()`.
#[derive(Debug, Clone)]
pub struct RuinSimulator {
    sampler: FbmGridSampler,
    /// `Z_j = multiplier_j * B_H(tau_j)`.
    multiplier: Vec<f64>,
    outer: (usize, usize),
    window: WindowSpec,
    window_duration: f64,
    level: f64,
    u: f64,
    grid: GridInfo,
    /// Source time of grid index 0, and the index of `t*`.
    star_index: usize,
    vicinity: Option<(f64, f64)>,
}

impl RuinSimulator {
    pub fn new(source: &Source, threshold: Threshold, rule: WindowRule, params: &McParams) -> Result<Self> {
        let expansion = source.local_expansion();
        let (t_star, sigma_star) = match (source, &expansion) {
            (Source::Mipr(m), _) => {
                m.validate()?;
                let opt = m.find_tstar();
                match opt {
                    Ok(o) => (o.t_star, o.sigma_star),
                    Err(e) => {
                        // The full-domain simulation only needs a reference
                        // point for the grid when no vicinity is used.
                        if params.vicinity.is_some() || matches!(threshold, Threshold::U(_)) {
                            return Err(e);
                        }
                        (f64::NAN, f64::NAN)
                    }
                }
            }
            (Source::Synthetic(s), _) => {
                s.validate()?;
                (0.0, 1.0)
            }
        };

        let (u, level) = match (source, threshold) {
            (Source::Mipr(_), Threshold::N(n)) => {
                if !(n >= 0.0 && n.is_finite()) {
                    return Err(Error::param("N", format!("must be nonnegative and finite, got {n}")));
                }
                (n.sqrt() / sigma_star, n.sqrt())
            }
            (Source::Mipr(_), Threshold::U(u)) => (u, u * sigma_star),
            (Source::Synthetic(_), Threshold::U(u)) => (u, u),
            (Source::Synthetic(_), Threshold::N(_)) => {
                return Err(Error::Usage("an N threshold applies to the risk model only".into()));
            }
        };
        if u.is_infinite() || (u.is_nan() && matches!(threshold, Threshold::U(_))) {
            return Err(Error::param("u", format!("must be finite, got {u}")));
        }

        let nu = || -> Result<f64> {
            let e = expansion
                .clone()
                .map_err(|e| Error::Dependency(format!("local expansion unavailable: {e}")))?;
            Ok(classify(&e)?.nu)
        };
        let window_duration = match rule {
            WindowRule::Fixed(t) => {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(Error::param("T_u", format!("must be finite and nonnegative, got {t}")));
                }
                t
            }
            WindowRule::AssumptionB(t) => {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(Error::param("T", format!("must be finite and nonnegative, got {t}")));
                }
                if !(u > 0.0) {
                    return Err(Error::param("u", format!("window rule needs u > 0, got {u}")));
                }
                t * u.powf(-2.0 / nu()?)
            }
        };

        let dt = match params.dt {
            Some(dt) => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Error::param("dt", format!("must be positive and finite, got {dt}")));
                }
                dt
            }
            None => {
                if !(u > 0.0) {
                    return Err(Error::param("u", format!("automatic dt needs u > 0, got {u}; pass dt")));
                }
                if !(params.resolution >= 1.0) {
                    return Err(Error::param("resolution", format!("must be at least 1, got {}", params.resolution)));
                }
                let q = u.powf(-2.0 / nu()?);
                let scale = if window_duration > 0.0 { window_duration.min(q) } else { q };
                (scale / params.resolution).max(params.dt_floor)
            }
        };
        if window_duration > 0.0 && window_duration < 2.0 * dt {
            return Err(Error::Dimension(format!(
                "grid step {dt} does not resolve the window {window_duration} (need T_u >= 2 dt)"
            )));
        }
        let window = WindowSpec::from_duration(window_duration, dt)?;

        let vicinity = match params.vicinity {
            Some(mode) => {
                let e = expansion
                    .as_ref()
                    .map_err(|e| Error::Dependency(format!("vicinity needs a local expansion: {e}")))?;
                Some(build_vicinity(e, u, mode)?)
            }
            None => None,
        };

        let steps = |x: f64| (x / dt * (1.0 + 1e-12)).floor() as usize;
        let csteps = |x: f64| (x / dt * (1.0 - 1e-12)).ceil() as usize;
        // Grid indices on either side of the reference point.
        let (origin, k_minus, k_plus) = match source {
            Source::Mipr(m) => {
                let s = m.horizon;
                if t_star.is_nan() {
                    let s = s.ok_or_else(|| Error::param("horizon", "full-domain simulation needs S"))?;
                    (0.0, 0, steps(s))
                } else {
                    let left_max = steps(t_star);
                    let right_max = s.map(|s| steps((s - t_star).max(0.0)));
                    let (km, kp) = match vicinity {
                        Some((dm, dp)) => (csteps(dm).min(left_max), csteps(dp)),
                        None => (
                            left_max,
                            right_max.ok_or_else(|| Error::param("horizon", "full-domain simulation needs S"))?,
                        ),
                    };
                    let kp = right_max.map_or(kp, |r| kp.min(r));
                    ((t_star - km as f64 * dt).max(0.0), km, kp)
                }
            }
            Source::Synthetic(s) => {
                let b = s.base_time;
                // Keep b + t strictly positive at the first grid point.
                let left_max = csteps(b).saturating_sub(1);
                let (dm, dp) = vicinity.unwrap_or((s.extent(), s.extent()));
                let km = csteps(dm).min(left_max);
                let kp = csteps(dp);
                (b - km as f64 * dt, km, kp)
            }
        };
        let outer_last = k_minus + k_plus;
        let n_steps = outer_last + window.window_len;
        if n_steps == 0 {
            return Err(Error::Dimension("simulation domain has no grid steps".into()));
        }
        let sampler = FbmGridSampler::new(source.hurst(), origin, n_steps, dt)?;

        // Source time of grid index j.
        let t0 = match source {
            Source::Mipr(_) => origin,
            Source::Synthetic(_) => -(k_minus as f64) * dt,
        };
        let multiplier: Vec<f64> = (0..=n_steps)
            .map(|j| {
                let tau = origin + j as f64 * dt;
                match source {
                    Source::Mipr(m) => 1.0 / m.barrier(tau),
                    Source::Synthetic(s) => {
                        let t = t0 + j as f64 * dt;
                        s.sigma(t) / tau.powf(s.hurst)
                    }
                }
            })
            .collect();

        Ok(RuinSimulator {
            sampler,
            multiplier,
            outer: (0, outer_last),
            window,
            window_duration,
            level,
            u,
            grid: GridInfo {
                dt,
                start: t0,
                end: t0 + outer_last as f64 * dt,
                points: n_steps + 1,
            },
            star_index: k_minus,
            vicinity,
        })
    }

    /// Writes replicate `index` of `Z` on the grid into `out`.
    pub fn sample_path(&self, master_seed: u64, index: u64, scratch: &mut SamplerScratch, out: &mut Vec<f64>) {
        let mut rng = replicate_rng(master_seed, index);
        self.sampler.sample_into(&mut rng, scratch, out);
        for (z, m) in out.iter_mut().zip(&self.multiplier) {
            *z *= m;
        }
    }

    /// Parisian functional of a path over the outer domain.
    pub fn sup_inf(&self, path: &[f64]) -> Result<f64> {
        let mut deque = std::collections::VecDeque::new();
        sup_inf_slice(path, self.outer.0, self.outer.1, self.window.window_len, &mut deque)
    }

    /// Level the functional must strictly exceed.
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn grid(&self) -> GridInfo {
        self.grid
    }

    pub fn window(&self) -> WindowSpec {
        self.window
    }

    pub fn window_duration(&self) -> f64 {
        self.window_duration
    }

    pub fn outer_range(&self) -> (usize, usize) {
        self.outer
    }

    /// Grid index of the optimal point.
    pub fn star_index(&self) -> usize {
        self.star_index
    }

    pub fn vicinity(&self) -> Option<(f64, f64)> {
        self.vicinity
    }

    /// Source time of grid index `j`.
    pub fn time(&self, j: usize) -> f64 {
        self.grid.start + j as f64 * self.grid.dt
    }

    /// Per-replicate values of the functional, in replicate order.
    pub fn sup_inf_samples(&self, replicates: u64, master_seed: u64, workers: Option<usize>) -> Result<Vec<f64>> {
        with_workers(workers, || {
            (0..replicates)
                .into_par_iter()
                .map_init(
                    || (SamplerScratch::default(), Vec::new(), std::collections::VecDeque::new()),
                    |(scratch, path, deque), i| {
                        self.sample_path(master_seed, i, scratch, path);
                        sup_inf_slice(path, self.outer.0, self.outer.1, self.window.window_len, deque)
                    },
                )
                .collect()
        })
    }

    pub fn run(&self, replicates: u64, master_seed: u64, workers: Option<usize>) -> Result<MCEstimate> {
        if replicates == 0 {
            return Err(Error::param("replicates", "must be positive"));
        }
        let level = self.level;
        let hits: u64 = with_workers(workers, || {
            (0..replicates)
                .into_par_iter()
                .map_init(
                    || (SamplerScratch::default(), Vec::new(), std::collections::VecDeque::new()),
                    |(scratch, path, deque), i| -> Result<u64> {
                        self.sample_path(master_seed, i, scratch, path);
                        let v = sup_inf_slice(path, self.outer.0, self.outer.1, self.window.window_len, deque)?;
                        Ok(u64::from(v > level))
                    },
                )
                .try_reduce(|| 0, |a, b| Ok(a + b))
        })?;
        Ok(MCEstimate {
            p_hat: hits as f64 / replicates as f64,
            hits,
            replicates,
            ci95: wilson_interval(hits, replicates),
            u: self.u,
            window_duration: self.window_duration,
            grid: self.grid,
            window: self.window,
            vicinity: self.vicinity,
            master_seed,
        })
    }
}

/// Estimates `P{sup_{t in E} inf_{s in [0, T_u]} Z(t + s) > level}` by crude Monte Carlo.
pub fn estimate_ruin(source: &Source, threshold: Threshold, rule: WindowRule, params: &McParams) -> Result<MCEstimate> {
    let sim = RuinSimulator::new(source, threshold, rule, params)?;
    sim.run(params.replicates, params.seed, params.workers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub u: f64,
    pub p_mc: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p_asym: f64,
    pub ratio: f64,
    pub branch: AsymptoticCase,
    pub seconds: f64,
}

/// Monte Carlo against first-order asymptotics over a list of thresholds.
///
/// For `N` thresholds on the risk model the corollary closed forms are used
/// with `T` read from an Assumption B window rule; otherwise the general
/// theorem is evaluated at the standardized level.
pub fn compare_table(
    source: &Source,
    thresholds: &[Threshold],
    rule: WindowRule,
    constants: &Constants,
    params: &McParams,
) -> Result<Vec<ComparisonRow>> {
    if thresholds.is_empty() {
        return Ok(Vec::new());
    }
    let exp = source.local_expansion()?;
    let label = classify(&exp)?;
    let mut rows = Vec::with_capacity(thresholds.len());
    for &th in thresholds {
        let sim = RuinSimulator::new(source, th, rule, params)?;
        let u = sim.u();
        // T in the Assumption B normalization.
        let t = match rule {
            WindowRule::AssumptionB(t) => t,
            WindowRule::Fixed(tu) => tu * u.powf(2.0 / label.nu),
        };
        let asym = match (source, th) {
            (Source::Mipr(m), Threshold::N(n)) => corollary_value(m, n, t, constants)?,
            _ => theorem1_value(&exp, t, u, constants)?,
        };
        let clock = Instant::now();
        let est = sim.run(params.replicates, params.seed, params.workers)?;
        let seconds = clock.elapsed().as_secs_f64();
        rows.push(ComparisonRow {
            u,
            p_mc: est.p_hat,
            ci_lo: est.ci95.0,
            ci_hi: est.ci95.1,
            p_asym: asym.value,
            ratio: est.p_hat / asym.value,
            branch: asym.case,
            seconds,
        });
    }
    rows.sort_by(|a, b| a.u.total_cmp(&b.u));
    Ok(rows)
}
