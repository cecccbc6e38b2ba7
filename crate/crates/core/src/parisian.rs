//! The Parisian sup-inf functional on uniform grids.
//!
//! For a path sampled at `t_j = origin + j*dt` the functional
//! `sup_{t in E} inf_{s in [0, T]} f(t + s)` becomes
//! `max_{j in [a, b]} min(values[j..=j + w])` with `w = round(T / dt)`.
//! The inner minimum is a sliding-window minimum evaluated with a
//! monotonic deque, so the whole functional costs O(n).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian_paths::PathGrid;

/// Discretized Parisian window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Window length in grid steps.
    pub window_len: usize,
    /// `|T/dt - window_len|`.
    pub rounding_slack: f64,
}

impl WindowSpec {
    pub fn steps(window_len: usize) -> Self {
        WindowSpec {
            window_len,
            rounding_slack: 0.0,
        }
    }

    /// Rounds a continuous window length `t_window` to the grid `dt`.
    pub fn from_duration(t_window: f64, dt: f64) -> Result<Self> {
        if !(t_window >= 0.0 && t_window.is_finite()) {
            return Err(Error::param("window", format!("must be finite and nonnegative, got {t_window}")));
        }
        if !(dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let ratio = t_window / dt;
        let window_len = ratio.round();
        Ok(WindowSpec {
            window_len: window_len as usize,
            rounding_slack: (ratio - window_len).abs(),
        })
    }

    pub fn duration(&self, dt: f64) -> f64 {
        self.window_len as f64 * dt
    }
}

/// `m[j] = min(values[j..=j+w])` for `j = 0..=len-1-w`.
pub fn sliding_min(values: &[f64], w: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if w + 1 > n {
        return Err(Error::Dimension(format!(
            "window of {} points does not fit in {} values",
            w + 1,
            n
        )));
    }
    let mut out = Vec::with_capacity(n - w);
    let mut deque = VecDeque::with_capacity(w + 1);
    for (i, &v) in values.iter().enumerate() {
        while let Some(&back) = deque.back() {
            if values[back] >= v {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(i);
        if i >= w {
            let start = i - w;
            while let Some(&front) = deque.front() {
                if front < start {
                    deque.pop_front();
                } else {
                    break;
                }
            }
            out.push(values[deque[0]]);
        }
    }
    Ok(out)
}

/// Max over `j in [a, b]` of `min(values[j..=j+w])`, without allocating
/// the intermediate minima.
pub(crate) fn sup_inf_slice(values: &[f64], a: usize, b: usize, w: usize, deque: &mut VecDeque<usize>) -> Result<f64> {
    check_range(values.len(), a, b, w)?;
    let seg = &values[a..=b + w];
    deque.clear();
    let mut best = f64::NEG_INFINITY;
    for (i, &v) in seg.iter().enumerate() {
        while let Some(&back) = deque.back() {
            if seg[back] >= v {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(i);
        if i >= w {
            let start = i - w;
            while deque[0] < start {
                deque.pop_front();
            }
            let m = seg[deque[0]];
            if m > best {
                best = m;
            }
        }
    }
    Ok(best)
}

fn check_range(len: usize, a: usize, b: usize, w: usize) -> Result<()> {
    if a > b {
        return Err(Error::Dimension(format!("empty outer range [{a}, {b}]")));
    }
    if len == 0 || b + w > len - 1 {
        return Err(Error::Dimension(format!(
            "outer range end {b} plus window {w} exceeds last index {}",
            len as isize - 1
        )));
    }
    Ok(())
}

/// Grid version of `sup_{t in E} inf_{s in [0,T]} f(t+s)` with `E` given by
/// the index range `[a, b]`.
pub fn parisian_sup_inf(path: &PathGrid, e_range: (usize, usize), window: WindowSpec) -> Result<f64> {
    parisian_sup_inf_values(&path.values, e_range, window)
}

/// Same as [`parisian_sup_inf`] on a bare slice.
pub fn parisian_sup_inf_values(values: &[f64], e_range: (usize, usize), window: WindowSpec) -> Result<f64> {
    let mut deque = VecDeque::new();
    sup_inf_slice(values, e_range.0, e_range.1, window.window_len, &mut deque)
}

/// Parisian exceedance event: the functional strictly exceeds `u`.
pub fn parisian_event(path: &PathGrid, e_range: (usize, usize), window: WindowSpec, u: f64) -> Result<bool> {
    Ok(parisian_sup_inf(path, e_range, window)? > u)
}

/// Simultaneous multivariate functional: all rows must stay high over one
/// common window. Equals the scalar functional of the row-wise minimum.
pub fn parisian_multi<R: AsRef<[f64]>>(paths: &[R], e_range: (usize, usize), window: WindowSpec) -> Result<f64> {
    let first = paths
        .first()
        .ok_or_else(|| Error::Dimension("no rows supplied".into()))?
        .as_ref();
    let n = first.len();
    if let Some((i, row)) = paths.iter().enumerate().find(|(_, r)| r.as_ref().len() != n) {
        return Err(Error::Dimension(format!(
            "ragged rows: row {i} has {} values, row 0 has {n}",
            row.as_ref().len()
        )));
    }
    let mut lower = first.to_vec();
    for row in &paths[1..] {
        for (l, &v) in lower.iter_mut().zip(row.as_ref()) {
            if v < *l {
                *l = v;
            }
        }
    }
    parisian_sup_inf_values(&lower, e_range, window)
}
