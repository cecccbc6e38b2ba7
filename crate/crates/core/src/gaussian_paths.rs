//! Exact sampling of fractional Brownian motion on uniform grids.
//!
//! Fractional Gaussian noise is generated by circulant embedding of its
//! autocovariance (Davies-Harte), then cumulatively summed and rescaled by
//! self-similarity. Paths that start away from the origin are produced by
//! sampling the increments and then drawing the starting value from its
//! exact conditional law given those increments.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::replicate_rng;

/// Relative tolerance for negative circulant eigenvalues before they are
/// treated as a genuine failure of the embedding.
const EIGEN_NEG_TOL: f64 = 1e-8;

fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::param("hurst", format!("must lie in (0,1), got {hurst}")))
    }
}

/// Lag-`k` autocovariance of unit-step fractional Gaussian noise.
pub fn cov_fgn(hurst: f64, k: u64) -> Result<f64> {
    check_hurst(hurst)?;
    Ok(fgn_autocov(hurst, k as f64))
}

#[inline]
fn fgn_autocov(hurst: f64, k: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).abs().powf(h2) - 2.0 * k.abs().powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Covariance of fractional Brownian motion at times `s` and `t`.
pub fn cov_fbm(hurst: f64, s: f64, t: f64) -> Result<f64> {
    check_hurst(hurst)?;
    if s < 0.0 || t < 0.0 {
        return Err(Error::param("time", format!("times must be nonnegative, got ({s}, {t})")));
    }
    Ok(fbm_cov(hurst, s, t))
}

#[inline]
fn fbm_cov(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
}

/// A Gaussian path sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub hurst: f64,
    /// Time of `values[0]`.
    pub origin: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl PathGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of sample `j`.
    pub fn time(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.dt
    }

    pub fn last_index(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

/// Reusable buffers for the FFT-based samplers. One per worker thread.
#[derive(Default)]
pub struct SamplerScratch {
    buf: Vec<Complex<f64>>,
    fft_scratch: Vec<Complex<f64>>,
    noise: Vec<f64>,
}

/// Circulant-embedding generator of unit-step fractional Gaussian noise.
#[derive(Clone)]
pub struct FgnSampler {
    hurst: f64,
    n: usize,
    sqrt_eigen: Arc<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FgnSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FgnSampler")
            .field("hurst", &self.hurst)
            .field("n", &self.n)
            .field("embedding", &self.sqrt_eigen.len())
            .finish()
    }
}

impl FgnSampler {
    /// Prepares a generator of `n` consecutive fGn values.
    pub fn new(hurst: f64, n: usize) -> Result<Self> {
        check_hurst(hurst)?;
        if n == 0 {
            return Err(Error::param("n", "need at least one increment"));
        }
        let m = n.next_power_of_two();
        let size = 2 * m;
        let mut row: Vec<Complex<f64>> = (0..size)
            .map(|j| {
                let lag = if j <= m { j } else { size - j };
                Complex::new(fgn_autocov(hurst, lag as f64), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        fft.process(&mut row);

        let max_eig = row.iter().fold(0.0_f64, |acc, c| acc.max(c.re));
        let mut sqrt_eigen = Vec::with_capacity(size);
        for c in &row {
            let lambda = c.re;
            if lambda < -EIGEN_NEG_TOL * max_eig {
                return Err(Error::Internal(format!(
                    "circulant embedding not nonnegative definite (eigenvalue {lambda:e}, H = {hurst}, n = {n})"
                )));
            }
            sqrt_eigen.push((lambda.max(0.0) / size as f64).sqrt());
        }
        Ok(FgnSampler {
            hurst,
            n,
            sqrt_eigen: Arc::new(sqrt_eigen),
            fft,
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Fills `out[..n]` with one unit-step fGn sample.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut SamplerScratch, out: &mut [f64]) {
        let size = self.sqrt_eigen.len();
        scratch.buf.clear();
        scratch.buf.extend(self.sqrt_eigen.iter().map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(s * re, s * im)
        }));
        let need = self.fft.get_inplace_scratch_len();
        if scratch.fft_scratch.len() < need {
            scratch.fft_scratch.resize(need, Complex::new(0.0, 0.0));
        }
        self.fft
            .process_with_scratch(&mut scratch.buf[..size], &mut scratch.fft_scratch[..need]);
        for (o, c) in out[..self.n].iter_mut().zip(&scratch.buf) {
            *o = c.re;
        }
    }
}

/// Samples fBm on `origin + j*dt`, `j = 0..=n`, for any `origin >= 0`.
#[derive(Debug, Clone)]
pub struct FbmGridSampler {
    fgn: FgnSampler,
    origin: f64,
    dt: f64,
    scale: f64,
    /// Regression of B_H(origin) on the unit increments, with residual sd.
    anchor: Option<(Arc<Vec<f64>>, f64)>,
}

impl FbmGridSampler {
    pub fn new(hurst: f64, origin: f64, n: usize, dt: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if !(origin >= 0.0 && origin.is_finite()) {
            return Err(Error::param("origin", format!("must be nonnegative, got {origin}")));
        }
        let fgn = FgnSampler::new(hurst, n)?;
        let scale = dt.powf(hurst);
        let anchor = if origin > 0.0 {
            Some(conditional_anchor(hurst, origin, n, dt)?)
        } else {
            None
        };
        Ok(FbmGridSampler {
            fgn,
            origin,
            dt,
            scale,
            anchor: anchor.map(|(w, s)| (Arc::new(w), s)),
        })
    }

    pub fn hurst(&self) -> f64 {
        self.fgn.hurst
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of grid points, `n + 1`.
    pub fn points(&self) -> usize {
        self.fgn.n + 1
    }

    /// Writes the `n + 1` path values into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut SamplerScratch, out: &mut Vec<f64>) {
        let n = self.fgn.n;
        let mut noise = std::mem::take(&mut scratch.noise);
        noise.resize(n, 0.0);
        self.fgn.sample_into(rng, scratch, &mut noise);

        let start = match &self.anchor {
            None => 0.0,
            Some((weights, resid_sd)) => {
                let xi: f64 = rng.sample(StandardNormal);
                let fitted: f64 = weights.iter().zip(&noise).map(|(w, y)| w * y).sum();
                fitted + resid_sd * xi
            }
        };
        out.clear();
        out.reserve(n + 1);
        out.push(start);
        let mut acc = 0.0;
        for &y in &noise {
            acc += y;
            out.push(start + self.scale * acc);
        }
        scratch.noise = noise;
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathGrid {
        let mut scratch = SamplerScratch::default();
        let mut values = Vec::new();
        self.sample_into(rng, &mut scratch, &mut values);
        PathGrid {
            hurst: self.hurst(),
            origin: self.origin,
            dt: self.dt,
            values,
        }
    }
}

/// Weights `w` and residual sd `s` with B_H(a) = w . Y + s * xi, where `Y`
/// are the unit fGn increments on `a + [0, n*dt]`.
fn conditional_anchor(hurst: f64, a: f64, n: usize, dt: f64) -> Result<(Vec<f64>, f64)> {
    let scale = dt.powf(hurst);
    let r: Vec<f64> = (0..n).map(|k| fgn_autocov(hurst, k as f64)).collect();
    let c: Vec<f64> = (0..n)
        .map(|k| {
            let lo = a + k as f64 * dt;
            let hi = a + (k + 1) as f64 * dt;
            (fbm_cov(hurst, hi, a) - fbm_cov(hurst, lo, a)) / scale
        })
        .collect();
    let w = levinson_solve(&r, &c)?;
    let explained: f64 = w.iter().zip(&c).map(|(w, c)| w * c).sum();
    let var = a.powf(2.0 * hurst);
    let resid = var - explained;
    if resid < -1e-8 * var {
        return Err(Error::Internal(format!(
            "negative conditional variance {resid:e} for anchor at {a}"
        )));
    }
    Ok((w, resid.max(0.0).sqrt()))
}

/// Solves `T x = b` for a symmetric positive definite Toeplitz matrix with
/// first column `r` (Levinson recursion, O(n^2)).
pub(crate) fn levinson_solve(r: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if r.len() != n {
        return Err(Error::Dimension(format!("toeplitz column {} vs rhs {}", r.len(), n)));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let r0 = r[0];
    if r0 <= 0.0 {
        return Err(Error::Internal("toeplitz diagonal must be positive".into()));
    }
    let rr: Vec<f64> = r.iter().map(|v| v / r0).collect();
    let bb: Vec<f64> = b.iter().map(|v| v / r0).collect();

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    x[0] = bb[0];
    if n == 1 {
        return Ok(x);
    }
    y[0] = -rr[1];
    let mut beta = 1.0;
    let mut alpha = -rr[1];
    for k in 1..n {
        beta *= 1.0 - alpha * alpha;
        if beta <= 0.0 {
            return Err(Error::Internal("toeplitz matrix not positive definite".into()));
        }
        let dot: f64 = (0..k).map(|i| rr[i + 1] * x[k - 1 - i]).sum();
        let mu = (bb[k] - dot) / beta;
        for i in 0..k {
            tmp[i] = x[i] + mu * y[k - 1 - i];
        }
        x[..k].copy_from_slice(&tmp[..k]);
        x[k] = mu;
        if k < n - 1 {
            let dot: f64 = (0..k).map(|i| rr[i + 1] * y[k - 1 - i]).sum();
            alpha = (-rr[k + 1] - dot) / beta;
            for i in 0..k {
                tmp[i] = y[i] + alpha * y[k - 1 - i];
            }
            y[..k].copy_from_slice(&tmp[..k]);
            y[k] = alpha;
        }
    }
    Ok(x)
}

/// One exact sample of `(B_H(j*dt))_{j=0..=n}`.
pub fn sample_fbm(hurst: f64, n: usize, dt: f64, seed: u64) -> Result<PathGrid> {
    let sampler = FbmGridSampler::new(hurst, 0.0, n, dt)?;
    let mut rng = replicate_rng(seed, 0);
    Ok(sampler.sample(&mut rng))
}

/// Dense Cholesky sampler of fBm on `j*dt`, `j = 0..=n`. Cubic cost; kept
/// for small grids as a cross-check of the circulant generator.
#[derive(Debug, Clone)]
pub struct CholeskyFbmSampler {
    hurst: f64,
    dt: f64,
    lower: Vec<f64>,
    n: usize,
}

impl CholeskyFbmSampler {
    pub const MAX_N: usize = 512;

    pub fn new(hurst: f64, n: usize, dt: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if n == 0 || n > Self::MAX_N {
            return Err(Error::param("n", format!("must lie in 1..={}, got {n}", Self::MAX_N)));
        }
        if !(dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            let ti = (i + 1) as f64 * dt;
            for j in 0..=i {
                let tj = (j + 1) as f64 * dt;
                let mut sum = fbm_cov(hurst, ti, tj);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::Internal("fBm covariance not positive definite".into()));
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(CholeskyFbmSampler { hurst, dt, lower: l, n })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PathGrid {
        let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
        let mut values = Vec::with_capacity(self.n + 1);
        values.push(0.0);
        for i in 0..self.n {
            let row = &self.lower[i * self.n..i * self.n + i + 1];
            values.push(row.iter().zip(&z).map(|(a, b)| a * b).sum());
        }
        PathGrid {
            hurst: self.hurst,
            origin: 0.0,
            dt: self.dt,
            values,
        }
    }
}
