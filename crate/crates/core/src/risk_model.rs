//! Variance geometry of the many-inputs proportional reinsurance model.
//!
//! `d` companies share `N` i.i.d. sub-risks `alpha + mu t - sigma B_H(t)`.
//! Simultaneous ruin reduces to the scalar process `Z(t) = B_H(t) / D(t)`
//! with the convex piecewise-linear barrier `D(t) = max_i (alpha_i + mu_i t) / sigma_i`.
//! With all `sigma_i = 1` this is the unnormalized barrier of the model.
//!
//! The standard deviation `sigma_Z(t) = t^H / D(t)` has a unique maximizer
//! `t*`: its derivative is `t^{H-1} G(t) / D(t)^2` with
//! `G(t) = H D(t) - t D'(t)` decreasing from `G(0+) > 0`. The maximizer is a
//! stationary point of one line, a kink of the envelope, or both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One business line `(alpha_i, mu_i, sigma_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub alpha: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Line {
    pub fn new(alpha: f64, mu: f64, sigma: f64) -> Self {
        Line { alpha, mu, sigma }
    }

    fn intercept(&self) -> f64 {
        self.alpha / self.sigma
    }

    fn slope(&self) -> f64 {
        self.mu / self.sigma
    }

    fn at(&self, t: f64) -> f64 {
        (self.alpha + self.mu * t) / self.sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskModel {
    pub lines: Vec<Line>,
    pub hurst: f64,
    /// Time horizon `S`; `None` means unbounded.
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimumKind {
    /// `G` vanishes in the interior of a linear piece.
    Stationary,
    /// Two lines intersect and `G` jumps across zero.
    Kink,
    /// A line intersection that is also a stationary point of one side.
    Coincident,
}

impl OptimumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimumKind::Stationary => "stationary",
            OptimumKind::Kink => "kink",
            OptimumKind::Coincident => "coincident",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalPoint {
    pub t_star: f64,
    pub kind: OptimumKind,
    /// Index of the line active just before `t*`.
    pub active_left: usize,
    /// Index of the line active just after `t*`.
    pub active_right: usize,
    pub sigma_star: f64,
}

impl OptimalPoint {
    /// `sqrt(N) / sigma_Z(t*)`.
    pub fn n_hat(&self, n: f64) -> f64 {
        n.sqrt() / self.sigma_star
    }
}

/// Local data at the optimum: one-sided power expansions of the standard
/// deviation and the local correlation structure.
///
/// `sigma(t)/sigma* = 1 - A_pm |t - t*|^{gamma_pm} + o(...)` as `t -> t* pm 0`,
/// `corr(Z(t), Z(s)) = 1 - D_corr |t - s|^alpha + o(...)` near `t*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalExpansion {
    pub a_minus: f64,
    pub gamma_minus: f64,
    pub a_plus: f64,
    pub gamma_plus: f64,
    pub alpha: f64,
    pub d_corr: f64,
    pub t_star: f64,
    pub sigma_star: f64,
}

impl LocalExpansion {
    /// Validated constructor for abstract expansions.
    pub fn new(a_minus: f64, gamma_minus: f64, a_plus: f64, gamma_plus: f64, alpha: f64, d_corr: f64) -> Result<Self> {
        let e = LocalExpansion {
            a_minus,
            gamma_minus,
            a_plus,
            gamma_plus,
            alpha,
            d_corr,
            t_star: 0.0,
            sigma_star: 1.0,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a_minus", self.a_minus),
            ("gamma_minus", self.gamma_minus),
            ("a_plus", self.a_plus),
            ("gamma_plus", self.gamma_plus),
            ("d_corr", self.d_corr),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::param("alpha", format!("must lie in (0,2], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Relative tolerance for deciding that `G` vanishes.
const G_ZERO_TOL: f64 = 1e-12;
/// Looser tolerance used when assigning one-sided exponents.
const SLOPE_ZERO_TOL: f64 = 1e-9;

impl RiskModel {
    pub fn new(lines: Vec<Line>, hurst: f64, horizon: Option<f64>) -> Result<Self> {
        let m = RiskModel { lines, hurst, horizon };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lines.is_empty() {
            return Err(Error::param("lines", "at least one line is required"));
        }
        for (i, l) in self.lines.iter().enumerate() {
            for (name, v) in [("alpha", l.alpha), ("mu", l.mu), ("sigma", l.sigma)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::param(
                        "lines",
                        format!("line {i}: {name} must be positive and finite, got {v}"),
                    ));
                }
            }
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::param("hurst", format!("must lie in (0,1), got {}", self.hurst)));
        }
        if let Some(s) = self.horizon {
            if !(s > 0.0) {
                return Err(Error::param("horizon", format!("must be positive, got {s}")));
            }
        }
        Ok(())
    }

    /// Multiplies every `alpha_i` and `mu_i` by `c`.
    pub fn scaled(&self, c: f64) -> RiskModel {
        RiskModel {
            lines: self
                .lines
                .iter()
                .map(|l| Line::new(l.alpha * c, l.mu * c, l.sigma))
                .collect(),
            ..self.clone()
        }
    }

    /// `D(t) = max_i (alpha_i + mu_i t) / sigma_i`.
    pub fn barrier(&self, t: f64) -> f64 {
        self.lines.iter().map(|l| l.at(t)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Line active just after `t` (ties go to the steepest line).
    fn active_right(&self, t: f64) -> usize {
        self.active_by(t, |a, b| a > b)
    }

    /// Line active just before `t` (ties go to the flattest line).
    fn active_left(&self, t: f64) -> usize {
        self.active_by(t, |a, b| a < b)
    }

    fn active_by(&self, t: f64, prefer: impl Fn(f64, f64) -> bool) -> usize {
        let mut best = 0;
        let mut best_v = self.lines[0].at(t);
        for (i, l) in self.lines.iter().enumerate().skip(1) {
            let v = l.at(t);
            let tie = (v - best_v).abs() <= 1e-14 * v.abs().max(best_v.abs());
            if (v > best_v && !tie) || (tie && prefer(l.slope(), self.lines[best].slope())) {
                best = i;
                best_v = v;
            }
        }
        best
    }

    /// `sigma_Z(t) = t^H / D(t)`.
    pub fn sigma_z(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::param("t", format!("must be positive, got {t}")));
        }
        Ok(t.powf(self.hurst) / self.barrier(t))
    }

    /// One-sided values `(G(t-), G(t+))` of `G(t) = H D(t) - t D'(t)`.
    pub fn g_one_sided(&self, t: f64) -> (f64, f64) {
        let g = |i: usize| g_line(&self.lines[i], self.hurst, t);
        (g(self.active_left(t)), g(self.active_right(t)))
    }

    /// Breakpoints of the upper envelope on `[0, inf)` as `(start, line)`.
    fn envelope(&self) -> Vec<(f64, usize)> {
        let mut pieces = vec![(0.0, self.active_right(0.0))];
        loop {
            let (t0, cur) = *pieces.last().unwrap();
            let c = &self.lines[cur];
            let mut next: Option<(f64, usize)> = None;
            for (j, l) in self.lines.iter().enumerate() {
                if l.slope() <= c.slope() {
                    continue;
                }
                let t = (c.intercept() - l.intercept()) / (l.slope() - c.slope());
                if t < t0 {
                    continue;
                }
                next = match next {
                    None => Some((t, j)),
                    Some((tb, jb)) => {
                        if t < tb || (t == tb && l.slope() > self.lines[jb].slope()) {
                            Some((t, j))
                        } else {
                            Some((tb, jb))
                        }
                    }
                };
            }
            match next {
                Some((t, j)) if t == t0 => {
                    // Several lines cross exactly at t0: move straight to the steepest.
                    pieces.last_mut().unwrap().1 = j;
                }
                Some(p) => pieces.push(p),
                None => break,
            }
        }
        pieces
    }

    /// Locates the unique maximizer of `sigma_Z`.
    pub fn find_tstar(&self) -> Result<OptimalPoint> {
        self.validate()?;
        let h = self.hurst;
        let pieces = self.envelope();
        let mut found: Option<(f64, OptimumKind, usize, usize)> = None;

        for (k, &(t0, line)) in pieces.iter().enumerate() {
            let l = &self.lines[line];
            if k > 0 {
                let prev = pieces[k - 1].1;
                let gl = g_line(&self.lines[prev], h, t0);
                let gr = g_line(l, h, t0);
                let zl = gl.abs() <= G_ZERO_TOL * g_scale(&self.lines[prev], h, t0);
                let zr = gr.abs() <= G_ZERO_TOL * g_scale(l, h, t0);
                if zl && zr {
                    return Err(Error::Degeneracy(format!(
                        "both one-sided stationarity conditions vanish at the line intersection t = {t0}"
                    )));
                }
                if gr <= 0.0 || zr {
                    let kind = if zl || zr { OptimumKind::Coincident } else { OptimumKind::Kink };
                    found = Some((t0, kind, prev, line));
                    break;
                }
            }
            let t1 = pieces.get(k + 1).map(|p| p.0);
            let g_end = t1.map(|t| g_line(l, h, t));
            match (t1, g_end) {
                (Some(t1), Some(ge)) => {
                    let end_zero = ge.abs() <= G_ZERO_TOL * g_scale(l, h, t1);
                    if ge > 0.0 || end_zero {
                        continue;
                    }
                    let t = bisect_decreasing(|t| g_line(l, h, t), t0, t1);
                    found = Some((t, OptimumKind::Stationary, line, line));
                    break;
                }
                _ => {
                    let mut hi = (2.0 * t0).max(1.0);
                    let mut guard = 0;
                    while g_line(l, h, hi) > 0.0 {
                        hi *= 2.0;
                        guard += 1;
                        if guard > 2000 {
                            return Err(Error::Internal("no sign change of G found".into()));
                        }
                    }
                    let t = bisect_decreasing(|t| g_line(l, h, t), t0, hi);
                    found = Some((t, OptimumKind::Stationary, line, line));
                    break;
                }
            }
        }

        let (t_star, kind, left, right) =
            found.ok_or_else(|| Error::Internal("no sign change of G found".into()))?;
        if !(t_star > 0.0 && t_star.is_finite()) {
            return Err(Error::Degeneracy(format!("optimal point {t_star} is not interior")));
        }
        if let Some(s) = self.horizon {
            // t* is located to ~1e-12 relative; treat that band as the boundary.
            if t_star >= s * (1.0 - 1e-10) {
                return Err(Error::BoundaryCase { t_star, horizon: s });
            }
        }
        Ok(OptimalPoint {
            t_star,
            kind,
            active_left: left,
            active_right: right,
            sigma_star: self.sigma_z(t_star)?,
        })
    }

    /// One-sided power expansion of `sigma_Z` and correlation data at `t*`.
    pub fn local_expansion(&self) -> Result<LocalExpansion> {
        let opt = self.find_tstar()?;
        self.local_expansion_at(&opt)
    }

    pub fn local_expansion_at(&self, opt: &OptimalPoint) -> Result<LocalExpansion> {
        let h = self.hurst;
        let t = opt.t_star;
        let left = &self.lines[opt.active_left];
        let right = &self.lines[opt.active_right];

        // One-sided logarithmic derivatives of sigma_Z at t*.
        let slope = |l: &Line| h / t - l.slope() / (l.intercept() + l.slope() * t);
        let curvature = |l: &Line| {
            let r = l.slope() / (l.intercept() + l.slope() * t);
            0.5 * (h / (t * t) - r * r)
        };
        let (flat_left, flat_right) = match opt.kind {
            OptimumKind::Stationary => (true, true),
            OptimumKind::Kink => (false, false),
            OptimumKind::Coincident => {
                let rl = g_line(left, h, t).abs() / g_scale(left, h, t);
                let rr = g_line(right, h, t).abs() / g_scale(right, h, t);
                if rl <= rr {
                    (true, false)
                } else {
                    (false, true)
                }
            }
        };

        let side = |flat: bool, l: &Line, name: &'static str| -> Result<(f64, f64)> {
            if flat {
                let c2 = curvature(l);
                if !(c2 > 0.0) {
                    return Err(Error::Degeneracy(format!(
                        "second-order coefficient on the {name} side is {c2:e}, non-degeneracy fails"
                    )));
                }
                Ok((c2, 2.0))
            } else {
                let c1 = slope(l).abs();
                if c1 <= SLOPE_ZERO_TOL * h / t {
                    return Err(Error::Degeneracy(format!(
                        "first-order coefficient on the {name} side vanishes at a kink"
                    )));
                }
                Ok((c1, 1.0))
            }
        };
        let (a_minus, gamma_minus) = side(flat_left, left, "left")?;
        let (a_plus, gamma_plus) = side(flat_right, right, "right")?;
        let e = LocalExpansion {
            a_minus,
            gamma_minus,
            a_plus,
            gamma_plus,
            alpha: 2.0 * h,
            d_corr: 1.0 / (2.0 * t.powf(2.0 * h)),
            t_star: t,
            sigma_star: opt.sigma_star,
        };
        e.validate()?;
        Ok(e)
    }

    /// `sqrt(N) / sigma_Z(t*)`.
    pub fn n_hat(&self, n: f64) -> Result<f64> {
        if !(n >= 0.0) {
            return Err(Error::param("N", format!("must be nonnegative, got {n}")));
        }
        Ok(self.find_tstar()?.n_hat(n))
    }
}

fn g_line(l: &Line, h: f64, t: f64) -> f64 {
    h * l.at(t) - t * l.slope()
}

fn g_scale(l: &Line, h: f64, t: f64) -> f64 {
    h * l.at(t) + t * l.slope()
}

fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * hi.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_line() -> RiskModel {
        RiskModel::new(vec![Line::new(1.0, 1.0, 1.0)], 0.5, None).unwrap()
    }

    fn two_lines() -> RiskModel {
        RiskModel::new(vec![Line::new(1.0, 3.0, 1.0), Line::new(2.0, 1.0, 1.0)], 0.5, None).unwrap()
    }

    #[test]
    fn barrier_examples() {
        assert_eq!(one_line().barrier(2.0), 3.0);
        let m = two_lines();
        assert_eq!(m.barrier(0.0), 2.0);
        assert_eq!(m.barrier(1.0), 4.0);
        let folded = RiskModel::new(vec![Line::new(2.0, 4.0, 2.0)], 0.5, None).unwrap();
        assert_eq!(folded.barrier(2.0), 5.0);
    }

    #[test]
    fn sigma_z_examples() {
        let m = one_line();
        assert!((m.sigma_z(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(m.sigma_z(1e-6).unwrap() < 1e-2);
        assert!(m.sigma_z(1e6).unwrap() < 1e-2);
        assert!(m.sigma_z(0.0).is_err());
    }

    #[test]
    fn stationary_optimum() {
        let p = one_line().find_tstar().unwrap();
        assert!((p.t_star - 1.0).abs() < 1e-10);
        assert_eq!(p.kind, OptimumKind::Stationary);
        assert!((p.sigma_star - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kink_optimum() {
        let p = two_lines().find_tstar().unwrap();
        assert!((p.t_star - 0.5).abs() < 1e-15);
        assert_eq!(p.kind, OptimumKind::Kink);
        assert_eq!(p.active_left, 1);
        assert_eq!(p.active_right, 0);
    }

    #[test]
    fn coincident_optimum() {
        // Line (1,1) is stationary at t=1 for H=1/2; a steeper line crosses it there.
        let m = RiskModel::new(vec![Line::new(1.0, 1.0, 1.0), Line::new(0.0001, 1.9999, 1.0)], 0.5, None);
        let m = m.unwrap();
        let p = m.find_tstar().unwrap();
        assert_eq!(p.kind, OptimumKind::Coincident);
        assert!((p.t_star - 1.0).abs() < 1e-12);
        let e = m.local_expansion().unwrap();
        assert_eq!(e.gamma_minus, 2.0);
        assert_eq!(e.gamma_plus, 1.0);
    }

    #[test]
    fn boundary_case_rejected() {
        let m = RiskModel::new(vec![Line::new(1.0, 1.0, 1.0)], 0.5, Some(0.8)).unwrap();
        assert!(matches!(m.find_tstar(), Err(Error::BoundaryCase { .. })));
        let m = RiskModel::new(vec![Line::new(1.0, 1.0, 1.0)], 0.5, Some(1.0)).unwrap();
        assert!(matches!(m.find_tstar(), Err(Error::BoundaryCase { .. })));
    }

    #[test]
    fn expansion_examples() {
        let e = one_line().local_expansion().unwrap();
        assert_eq!((e.gamma_minus, e.gamma_plus), (2.0, 2.0));
        // sigma(1+d)/sigma(1) = 2 sqrt(1+d)/(2+d) = 1 - d^2/8 + O(d^3)
        assert!((e.a_minus - 0.125).abs() < 1e-9);
        assert!((e.a_plus - 0.125).abs() < 1e-9);
        assert_eq!(e.alpha, 1.0);
        assert!((e.d_corr - 0.5).abs() < 1e-10);

        let e = two_lines().local_expansion().unwrap();
        assert_eq!((e.gamma_minus, e.gamma_plus), (1.0, 1.0));
        assert!((e.a_minus - 0.6).abs() < 1e-12);
        assert!((e.a_plus - 0.2).abs() < 1e-12);
    }

    #[test]
    fn n_hat_examples() {
        let m = one_line();
        assert!((m.n_hat(400.0).unwrap() - 40.0).abs() < 1e-9);
        assert_eq!(m.n_hat(0.0).unwrap(), 0.0);
        assert!(m.n_hat(-1.0).is_err());
    }

    #[test]
    fn invalid_models() {
        assert!(RiskModel::new(vec![], 0.5, None).is_err());
        assert!(RiskModel::new(vec![Line::new(1.0, 0.0, 1.0)], 0.5, None).is_err());
        assert!(RiskModel::new(vec![Line::new(1.0, 1.0, 1.0)], 1.2, None).is_err());
        assert!(RiskModel::new(vec![Line::new(1.0, 1.0, 1.0)], 0.5, Some(-1.0)).is_err());
    }
}
