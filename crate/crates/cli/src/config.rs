//! Strict JSON run configuration.
//!
//! One document describes one experiment. Unknown and duplicate keys are
//! rejected; out-of-range values are reported with the offending key.

use std::path::Path;

use parisian_core::{Line, RiskModel, Source, SyntheticProcessSpec, Threshold, Vicinity, WindowRule};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub alpha: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// Synthetic process; `hurst` is taken from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub a_minus: f64,
    pub gamma_minus: f64,
    pub a_plus: f64,
    pub gamma_plus: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    /// Half-interval Parisian Pickands constant at `D^{1/alpha} T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickands: Option<f64>,
    /// Symmetric-interval Parisian Piterbarg constant at `D^{1/alpha} T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piterbarg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub hurst: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lines: Option<Vec<LineConfig>>,
    /// Horizon `S` of the risk model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<f64>>,

    /// Window parameter `T` of `T_u = T u^{-2/nu}`.
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "T")]
    pub t: Option<f64>,
    /// Fixed window length, exclusive with `T`.
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "T_u")]
    pub t_u: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_floor: Option<f64>,
    /// `log`, `lambda:<L>` or `none`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vicinity: Option<String>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
}

pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, path)
}

fn positive(key: &'static str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::range(key, format!("must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn nonnegative(key: &'static str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x >= 0.0 && x.is_finite()) => Err(CliError::range(key, format!("must be nonnegative, got {x}"))),
        _ => Ok(()),
    }
}

pub fn parse_vicinity(s: &str) -> Result<Option<Vicinity>> {
    match s {
        "none" => Ok(None),
        "log" => Ok(Some(Vicinity::Log)),
        _ => {
            let l = s
                .strip_prefix("lambda:")
                .and_then(|x| x.parse::<f64>().ok())
                .ok_or_else(|| CliError::range("vicinity", format!("expected log, none or lambda:<L>, got {s:?}")))?;
            if !(l > 0.0 && l.is_finite()) {
                return Err(CliError::range("vicinity", format!("lambda must be positive, got {l}")));
            }
            Ok(Some(Vicinity::Lambda(l)))
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(CliError::range("hurst", format!("must lie in (0,1), got {}", self.hurst)));
        }
        match (&self.lines, &self.synthetic) {
            (Some(_), Some(_)) => return Err(CliError::range("synthetic", "give either `lines` or `synthetic`, not both")),
            (None, None) => return Err(CliError::range("lines", "a source is required: `lines` or `synthetic`")),
            _ => {}
        }
        if let Some(lines) = &self.lines {
            if lines.is_empty() {
                return Err(CliError::range("lines", "at least one line is required"));
            }
            for l in lines {
                positive("lines", Some(l.alpha))?;
                positive("lines", Some(l.mu))?;
                positive("lines", Some(l.sigma))?;
            }
        }
        if let Some(s) = &self.synthetic {
            positive("a_minus", Some(s.a_minus))?;
            positive("gamma_minus", Some(s.gamma_minus))?;
            positive("a_plus", Some(s.a_plus))?;
            positive("gamma_plus", Some(s.gamma_plus))?;
            positive("base_time", s.base_time)?;
            positive("extent", s.extent)?;
        }
        positive("horizon", self.horizon)?;
        nonnegative("n", self.n)?;
        for &n in self.n_list.iter().flatten() {
            nonnegative("n_list", Some(n))?;
        }
        for &u in self.u_list.iter().flatten() {
            if !u.is_finite() {
                return Err(CliError::range("u_list", format!("must be finite, got {u}")));
            }
        }
        if let Some(u) = self.u {
            if !u.is_finite() {
                return Err(CliError::range("u", format!("must be finite, got {u}")));
            }
        }
        if self.u.is_some() && self.n.is_some() {
            return Err(CliError::range("n", "give either `u` or `n`, not both"));
        }
        if self.u_list.is_some() && self.n_list.is_some() {
            return Err(CliError::range("n_list", "give either `u_list` or `n_list`, not both"));
        }
        if self.synthetic.is_some() && (self.n.is_some() || self.n_list.is_some()) {
            return Err(CliError::range("n", "an input count applies to the risk model only"));
        }
        nonnegative("T", self.t)?;
        nonnegative("T_u", self.t_u)?;
        if self.t.is_some() && self.t_u.is_some() {
            return Err(CliError::range("T_u", "give either `T` or `T_u`, not both"));
        }
        if self.replicates == Some(0) {
            return Err(CliError::range("replicates", "must be positive"));
        }
        positive("dt", self.dt)?;
        positive("dt_floor", self.dt_floor)?;
        if let Some(r) = self.resolution {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(CliError::range("resolution", format!("must be at least 1, got {r}")));
            }
        }
        if let Some(v) = &self.vicinity {
            parse_vicinity(v)?;
        }
        if let Some(c) = &self.constants {
            positive("pickands", c.pickands)?;
            positive("piterbarg", c.piterbarg)?;
        }
        Ok(())
    }

    pub fn source(&self) -> Result<Source> {
        if let Some(lines) = &self.lines {
            let model = RiskModel::new(
                lines.iter().map(|l| Line::new(l.alpha, l.mu, l.sigma)).collect(),
                self.hurst,
                self.horizon,
            )?;
            return Ok(Source::Mipr(model));
        }
        let s = self
            .synthetic
            .as_ref()
            .ok_or_else(|| CliError::range("synthetic", "missing source"))?;
        let mut spec = SyntheticProcessSpec::new(self.hurst, s.a_minus, s.gamma_minus, s.a_plus, s.gamma_plus)?;
        if let Some(b) = s.base_time {
            spec.base_time = b;
        }
        spec.extent = s.extent;
        spec.validate()?;
        Ok(Source::Synthetic(spec))
    }

    pub fn model(&self) -> Result<RiskModel> {
        match self.source()? {
            Source::Mipr(m) => Ok(m),
            Source::Synthetic(_) => Err(CliError::range("lines", "this command needs a risk model (`lines`)")),
        }
    }

    /// Window rule; defaults to `T = 0`.
    pub fn window_rule(&self) -> WindowRule {
        match (self.t, self.t_u) {
            (_, Some(tu)) => WindowRule::Fixed(tu),
            (Some(t), None) => WindowRule::AssumptionB(t),
            (None, None) => WindowRule::AssumptionB(0.0),
        }
    }

    /// Single threshold for `mc-ruin`.
    pub fn threshold(&self) -> Result<Threshold> {
        match (self.u, self.n) {
            (Some(u), None) => Ok(Threshold::U(u)),
            (None, Some(n)) => Ok(Threshold::N(n)),
            _ => Err(CliError::range("u", "exactly one of `u` or `n` is required")),
        }
    }

    /// Threshold list for `compare`; empty when neither list is given.
    pub fn thresholds(&self) -> Vec<Threshold> {
        match (&self.u_list, &self.n_list) {
            (Some(us), _) => us.iter().map(|&u| Threshold::U(u)).collect(),
            (None, Some(ns)) => ns.iter().map(|&n| Threshold::N(n)).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn vicinity(&self) -> Result<Option<Vicinity>> {
        match &self.vicinity {
            Some(v) => parse_vicinity(v),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig> {
        parse_config(s, Path::new("cfg.json"))
    }

    #[test]
    fn minimal_risk_model() {
        let c = parse(r#"{"lines":[{"alpha":1,"mu":1,"sigma":1}],"hurst":0.5,"horizon":2,"n":100,"T":1}"#).unwrap();
        assert!(matches!(c.source().unwrap(), Source::Mipr(_)));
        assert_eq!(c.threshold().unwrap(), Threshold::N(100.0));
        assert_eq!(c.window_rule(), WindowRule::AssumptionB(1.0));
    }

    #[test]
    fn range_error_names_key() {
        let e = parse(r#"{"lines":[{"alpha":1,"mu":1,"sigma":1}],"hurst":1.2}"#).unwrap_err();
        assert!(matches!(e, CliError::Range { key: "hurst", .. }), "{e}");
    }

    #[test]
    fn duplicate_and_unknown_keys() {
        let e = parse(r#"{"hurst":0.5,"hurst":0.6,"lines":[{"alpha":1,"mu":1,"sigma":1}]}"#).unwrap_err();
        assert!(e.to_string().contains("duplicate field"), "{e}");
        let e = parse(r#"{"hurst":0.5,"lines":[{"alpha":1,"mu":1,"sigma":1}],"colour":1}"#).unwrap_err();
        assert!(e.to_string().contains("unknown field"), "{e}");
    }

    #[test]
    fn parse_error_has_line() {
        let e = parse("{\n\"hurst\": 0.5,\n\"lines\": [}\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn vicinity_strings() {
        assert_eq!(parse_vicinity("log").unwrap(), Some(Vicinity::Log));
        assert_eq!(parse_vicinity("none").unwrap(), None);
        assert_eq!(parse_vicinity("lambda:2.5").unwrap(), Some(Vicinity::Lambda(2.5)));
        assert!(parse_vicinity("lambda:-1").is_err());
        assert!(parse_vicinity("wide").is_err());
    }
}
