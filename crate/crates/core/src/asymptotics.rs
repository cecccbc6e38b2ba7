//! Exact first-order asymptotics of Parisian ruin probabilities.
//!
//! With `nu = min(alpha, gamma_-, gamma_+)` and `gamma = max(gamma_-, gamma_+)`
//! the tail `P{sup_t inf_{s in [0, T_u]} Z(t+s) > u}`, `T_u = T u^{-2/nu}`, behaves as
//!
//! * Pickands (`nu = alpha != gamma`): `C_S H^P_alpha(D^{1/alpha} T) u^{2/nu - 2/gamma} Psi(u)`,
//! * Piterbarg (`alpha = gamma_- = gamma_+`): `H^P_{alpha,h}(D^{1/alpha} T) Psi(u)`,
//! * Talagrand (`min(gamma_-, gamma_+) < alpha`): `C Psi(u)`, where `C` is
//!   `exp(-min(A_- T^{gamma_-}, A_+ T^{gamma_+}))` when `gamma_+ < gamma_-` and 1 otherwise.
//!
//! Every value carries a log-scale representation so that thresholds far in
//! the tail do not underflow.

use serde::{Deserialize, Serialize};
use libm::{erfc, tgamma as gamma};

use crate::constants_lab::{Convention, ConstantEstimate, DriftedFieldSpec, Normalization, PowerDrift};
use crate::error::{Error, Result};
use crate::risk_model::{LocalExpansion, RiskModel};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EXPONENT_TOL: f64 = 1e-12;

/// Standard normal survival function `P{N(0,1) > u}`.
pub fn psi(u: f64) -> f64 {
    if u > 8.0 {
        log_psi(u).exp()
    } else {
        0.5 * erfc(u / std::f64::consts::SQRT_2)
    }
}

/// `ln P{N(0,1) > u}`, accurate far into the tail.
pub fn log_psi(u: f64) -> f64 {
    if u <= 8.0 {
        (0.5 * erfc(u / std::f64::consts::SQRT_2)).ln()
    } else {
        -0.5 * u * u - LN_SQRT_2PI + mills_ratio(u).ln()
    }
}

/// Standard normal density.
pub fn phi(u: f64) -> f64 {
    (-0.5 * u * u - LN_SQRT_2PI).exp()
}

/// `Psi(u) / phi(u)` by its continued fraction, for `u` well above 1.
fn mills_ratio(u: f64) -> f64 {
    let mut f = u;
    for k in (1..=120).rev() {
        f = u + k as f64 / f;
    }
    1.0 / f
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXPONENT_TOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticCase {
    Pickands,
    Piterbarg,
    /// `gamma_- = gamma_+ < alpha`.
    TalagrandSymmetric,
    /// `gamma_- < gamma_+` and `gamma_- < alpha`.
    TalagrandLeftLight,
    /// `gamma_+ < gamma_-` and `gamma_+ < alpha`.
    TalagrandRightLight,
}

impl AsymptoticCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            AsymptoticCase::Pickands => "pickands",
            AsymptoticCase::Piterbarg => "piterbarg",
            AsymptoticCase::TalagrandSymmetric => "talagrand_symmetric",
            AsymptoticCase::TalagrandLeftLight => "talagrand_left_light",
            AsymptoticCase::TalagrandRightLight => "talagrand_right_light",
        }
    }

    pub fn is_talagrand(&self) -> bool {
        matches!(
            self,
            AsymptoticCase::TalagrandSymmetric | AsymptoticCase::TalagrandLeftLight | AsymptoticCase::TalagrandRightLight
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseLabel {
    pub nu: f64,
    pub gamma: f64,
    pub zeta_minus: f64,
    pub zeta_plus: f64,
    /// `max(zeta_-, zeta_+) = 2/nu - 2/gamma`.
    pub zeta: f64,
    pub case: AsymptoticCase,
}

impl CaseLabel {
    /// Pickands scale `q(u) = u^{-2/nu}`.
    pub fn pickands_scale(&self, u: f64) -> f64 {
        u.powf(-2.0 / self.nu)
    }

    /// Power of `u` in front of `Psi(u)`: `zeta` in the Pickands case, 0 otherwise.
    pub fn tail_power(&self) -> f64 {
        match self.case {
            AsymptoticCase::Pickands => self.zeta,
            _ => 0.0,
        }
    }
}

/// Branch classification of a local expansion.
pub fn classify(exp: &LocalExpansion) -> Result<CaseLabel> {
    for (name, v) in [
        ("alpha", exp.alpha),
        ("gamma_minus", exp.gamma_minus),
        ("gamma_plus", exp.gamma_plus),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("exponent must be positive, got {v}")));
        }
    }
    if exp.alpha > 2.0 {
        return Err(Error::param("alpha", format!("must lie in (0,2], got {}", exp.alpha)));
    }
    let (a, gm, gp) = (exp.alpha, exp.gamma_minus, exp.gamma_plus);
    let gmin = gm.min(gp);
    let nu = a.min(gmin);
    let gamma = gm.max(gp);
    let zeta_minus = (2.0 / nu - 2.0 / gm).max(0.0);
    let zeta_plus = (2.0 / nu - 2.0 / gp).max(0.0);

    let case = if same(gm, a) && same(gp, a) {
        AsymptoticCase::Piterbarg
    } else if gmin > a || same(gmin, a) {
        AsymptoticCase::Pickands
    } else if same(gm, gp) {
        AsymptoticCase::TalagrandSymmetric
    } else if gp < gm {
        AsymptoticCase::TalagrandRightLight
    } else {
        AsymptoticCase::TalagrandLeftLight
    };
    Ok(CaseLabel {
        nu,
        gamma,
        zeta_minus,
        zeta_plus,
        zeta: zeta_minus.max(zeta_plus),
        case,
    })
}

/// Constant `C` of the Talagrand branch for window parameter `T`.
pub fn talagrand_constant(exp: &LocalExpansion, t: f64) -> Result<f64> {
    let label = classify(exp)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("T", format!("must be finite and nonnegative, got {t}")));
    }
    match label.case {
        AsymptoticCase::TalagrandRightLight => {
            let left = exp.a_minus * t.powf(exp.gamma_minus);
            let right = exp.a_plus * t.powf(exp.gamma_plus);
            Ok((-left.min(right)).exp())
        }
        AsymptoticCase::TalagrandSymmetric | AsymptoticCase::TalagrandLeftLight => Ok(1.0),
        other => Err(Error::Usage(format!(
            "the Talagrand constant is undefined in the {} case",
            other.as_str()
        ))),
    }
}

/// `C_S = sum over sides with gamma_side = gamma of A^{-1/gamma} D^{1/alpha} Gamma(1/gamma + 1)`.
pub fn pickands_prefactor(exp: &LocalExpansion) -> Result<f64> {
    let label = classify(exp)?;
    let d = exp.d_corr.powf(1.0 / exp.alpha);
    let mut c = 0.0;
    for (a, g) in [(exp.a_plus, exp.gamma_plus), (exp.a_minus, exp.gamma_minus)] {
        if same(g, label.gamma) {
            c += a.powf(-1.0 / g) * d * gamma(1.0 / g + 1.0);
        }
    }
    Ok(c)
}

/// Argument `D^{1/alpha} T` at which the constants are evaluated.
pub fn constant_argument(exp: &LocalExpansion, t: f64) -> f64 {
    exp.d_corr.powf(1.0 / exp.alpha) * t
}

/// Drift `h` of the Piterbarg constant: `A_pm D^{-gamma_pm/alpha} |t|^{gamma_pm}`.
pub fn piterbarg_drift(exp: &LocalExpansion) -> PowerDrift {
    PowerDrift {
        a_minus: exp.a_minus * exp.d_corr.powf(-exp.gamma_minus / exp.alpha),
        gamma_minus: exp.gamma_minus,
        a_plus: exp.a_plus * exp.d_corr.powf(-exp.gamma_plus / exp.alpha),
        gamma_plus: exp.gamma_plus,
    }
}

/// Field description for the Pickands constant required for `(exp, T)`.
pub fn pickands_constant_spec(exp: &LocalExpansion, t: f64, lambda: f64, grid_step: f64) -> DriftedFieldSpec {
    DriftedFieldSpec::pickands(exp.alpha, constant_argument(exp, t), lambda, grid_step, Convention::HalfInterval)
}

/// Field description for the Piterbarg constant required for `(exp, T)`.
pub fn piterbarg_constant_spec(exp: &LocalExpansion, t: f64, lambda: f64, grid_step: f64) -> DriftedFieldSpec {
    DriftedFieldSpec {
        alpha: exp.alpha,
        t: constant_argument(exp, t),
        lambda,
        grid_step,
        drift: Some(piterbarg_drift(exp)),
        convention: Convention::SymmetricInterval,
    }
}

/// Constants available to the asymptotic formulas.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub pickands: Option<ConstantEstimate>,
    pub piterbarg: Option<ConstantEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Theorem,
    /// Some side has exponent 2 (Pickands case).
    QuadraticSide,
    /// Both sides linear, `1 > 2H` (Pickands case).
    LinearRough,
    /// Both sides linear, `1 = 2H` (Piterbarg case).
    LinearBrownian,
    /// Both sides linear, `1 < 2H` (Talagrand case).
    LinearSmooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticValue {
    pub case: AsymptoticCase,
    pub formula: Formula,
    /// Everything in front of `u^power Psi(u)`, constants included.
    pub prefactor: f64,
    pub power: f64,
    pub u: f64,
    pub value: f64,
    pub log_value: f64,
    pub constant_source: Option<ConstantEstimate>,
}

impl AsymptoticValue {
    fn assemble(
        case: AsymptoticCase,
        formula: Formula,
        prefactor: f64,
        power: f64,
        u: f64,
        constant_source: Option<ConstantEstimate>,
    ) -> Self {
        let log_value = prefactor.ln() + power * u.ln() + log_psi(u);
        AsymptoticValue {
            case,
            formula,
            prefactor,
            power,
            u,
            value: log_value.exp(),
            log_value,
            constant_source,
        }
    }
}

fn check_constant(
    c: Option<&ConstantEstimate>,
    what: &str,
    alpha: f64,
    argument: f64,
    convention: Convention,
    normalization: Normalization,
    drift: Option<PowerDrift>,
) -> Result<ConstantEstimate> {
    let c = c.ok_or_else(|| Error::Dependency(format!("the {what} constant is required for this branch")))?;
    if !(c.value > 0.0 && c.value.is_finite()) {
        return Err(Error::param("constant", format!("{what} constant must be positive, got {}", c.value)));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    if !close(c.spec.alpha, alpha) {
        return Err(Error::Dependency(format!(
            "{what} constant has alpha = {}, branch needs {alpha}",
            c.spec.alpha
        )));
    }
    if !close(c.spec.t, argument) {
        return Err(Error::Dependency(format!(
            "{what} constant evaluated at T = {}, branch needs D^(1/alpha) T = {argument}",
            c.spec.t
        )));
    }
    if c.convention != convention || c.normalization != normalization {
        return Err(Error::Dependency(format!(
            "{what} constant must use the {} convention",
            convention.as_str()
        )));
    }
    match (drift, c.spec.drift) {
        (None, None) => {}
        (Some(want), Some(got))
            if close(want.a_minus, got.a_minus)
                && close(want.a_plus, got.a_plus)
                && close(want.gamma_minus, got.gamma_minus)
                && close(want.gamma_plus, got.gamma_plus) => {}
        _ => {
            return Err(Error::Dependency(format!("{what} constant has the wrong drift")));
        }
    }
    Ok(c.clone())
}

fn check_u(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::param("u", format!("must be positive and finite, got {u}")))
    }
}

/// Asymptotic approximation of `P{sup-inf Z > u}` under Assumption B with parameter `T`.
pub fn theorem1_value(exp: &LocalExpansion, t: f64, u: f64, constants: &Constants) -> Result<AsymptoticValue> {
    exp.validate()?;
    check_u(u)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("T", format!("must be finite and nonnegative, got {t}")));
    }
    let label = classify(exp)?;
    let arg = constant_argument(exp, t);
    match label.case {
        AsymptoticCase::Pickands => {
            let c = check_constant(
                constants.pickands.as_ref(),
                "Pickands",
                exp.alpha,
                arg,
                Convention::HalfInterval,
                Normalization::PerLength,
                None,
            )?;
            let prefactor = pickands_prefactor(exp)? * c.value;
            Ok(AsymptoticValue::assemble(
                label.case,
                Formula::Theorem,
                prefactor,
                label.zeta,
                u,
                Some(c),
            ))
        }
        AsymptoticCase::Piterbarg => {
            let c = check_constant(
                constants.piterbarg.as_ref(),
                "Piterbarg",
                exp.alpha,
                arg,
                Convention::SymmetricInterval,
                Normalization::Raw,
                Some(piterbarg_drift(exp)),
            )?;
            Ok(AsymptoticValue::assemble(label.case, Formula::Theorem, c.value, 0.0, u, Some(c)))
        }
        _ => {
            let c = talagrand_constant(exp, t)?;
            Ok(AsymptoticValue::assemble(label.case, Formula::Theorem, c, 0.0, u, None))
        }
    }
}

/// Asymptotics of the many-inputs ruin probability at `N` inputs, with
/// `T = lim T_N N_hat^{1/H}`. Uses the closed forms for the four standard
/// exponent patterns and falls back to [`theorem1_value`] otherwise.
pub fn corollary_value(model: &RiskModel, n: f64, t: f64, constants: &Constants) -> Result<AsymptoticValue> {
    let opt = model.find_tstar()?;
    let exp = model.local_expansion_at(&opt)?;
    let u = opt.n_hat(n);
    check_u(u)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("T", format!("must be finite and nonnegative, got {t}")));
    }
    let h = model.hurst;
    let label = classify(&exp)?;

    // D^{1/(2H)} with D = 1/(2 t*^{2H}) is 1/(2^{1/(2H)} t*).
    let time_scale = 2f64.powf(1.0 / (2.0 * h)) * opt.t_star;
    let d_root = exp.d_corr.powf(1.0 / exp.alpha);
    if (d_root * time_scale - 1.0).abs() > 1e-12 {
        return Err(Error::Internal(format!(
            "correlation scale mismatch: D^(1/alpha) = {d_root}, 1/(2^(1/2H) t*) = {}",
            1.0 / time_scale
        )));
    }
    let arg = t / time_scale;
    let (gm, gp) = (exp.gamma_minus, exp.gamma_plus);
    let quadratic = gm == 2.0 || gp == 2.0;
    let linear = gm == 1.0 && gp == 1.0;
    let two_h = 2.0 * h;

    if quadratic && label.case == AsymptoticCase::Pickands {
        let c = check_constant(
            constants.pickands.as_ref(),
            "Pickands",
            exp.alpha,
            arg,
            Convention::HalfInterval,
            Normalization::PerLength,
            None,
        )?;
        let half_sqrt_pi = 0.5 * std::f64::consts::PI.sqrt();
        let mut sum = 0.0;
        if gp == 2.0 {
            sum += exp.a_plus.powf(-0.5);
        }
        if gm == 2.0 {
            sum += exp.a_minus.powf(-0.5);
        }
        let prefactor = half_sqrt_pi * sum * c.value / time_scale;
        return Ok(AsymptoticValue::assemble(
            label.case,
            Formula::QuadraticSide,
            prefactor,
            2.0 / label.nu - 1.0,
            u,
            Some(c),
        ));
    }
    if linear && !same(two_h, 1.0) && two_h < 1.0 {
        let c = check_constant(
            constants.pickands.as_ref(),
            "Pickands",
            exp.alpha,
            arg,
            Convention::HalfInterval,
            Normalization::PerLength,
            None,
        )?;
        let prefactor = (1.0 / exp.a_minus + 1.0 / exp.a_plus) * c.value / time_scale;
        return Ok(AsymptoticValue::assemble(
            label.case,
            Formula::LinearRough,
            prefactor,
            2.0 / two_h - 2.0,
            u,
            Some(c),
        ));
    }
    if linear && same(two_h, 1.0) {
        let c = check_constant(
            constants.piterbarg.as_ref(),
            "Piterbarg",
            exp.alpha,
            arg,
            Convention::SymmetricInterval,
            Normalization::Raw,
            Some(piterbarg_drift(&exp)),
        )?;
        return Ok(AsymptoticValue::assemble(
            label.case,
            Formula::LinearBrownian,
            c.value,
            0.0,
            u,
            Some(c),
        ));
    }
    if linear && two_h > 1.0 {
        return Ok(AsymptoticValue::assemble(label.case, Formula::LinearSmooth, 1.0, 0.0, u, None));
    }
    theorem1_value(&exp, t, u, constants)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(alpha: f64, gm: f64, gp: f64) -> LocalExpansion {
        LocalExpansion::new(1.0, gm, 1.0, gp, alpha, 0.5).unwrap()
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0), 0.5);
        for u in [0.5, 1.0, 3.0] {
            assert!((psi(u) + psi(-u) - 1.0).abs() < 1e-15);
        }
        assert!((psi(3.0) / 1.349_898_031_630_093_3e-3 - 1.0).abs() < 1e-13);
        // erfc and continued-fraction branches agree where they meet.
        let direct = (0.5 * erfc(8.0 / std::f64::consts::SQRT_2)).ln();
        let cf = -32.0 - LN_SQRT_2PI + mills_ratio(8.0).ln();
        assert!((direct - cf).abs() < 1e-12);
        assert!(log_psi(40.0).is_finite());
        assert!((log_psi(40.0) - (-804.608_442_013_754)).abs() < 1e-9);
    }

    #[test]
    fn classification_examples() {
        let l = classify(&exp(1.0, 2.0, 2.0)).unwrap();
        assert_eq!(l.case, AsymptoticCase::Pickands);
        assert_eq!((l.nu, l.zeta), (1.0, 1.0));

        let l = classify(&exp(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(l.case, AsymptoticCase::Piterbarg);
        assert_eq!(l.zeta, 0.0);

        let l = classify(&exp(0.8, 0.7, 0.5)).unwrap();
        assert_eq!(l.case, AsymptoticCase::TalagrandRightLight);
        assert_eq!(l.nu, 0.5);
        assert_eq!(l.zeta_plus, 0.0);
        assert!((l.zeta_minus - (4.0 - 20.0 / 7.0)).abs() < 1e-14);

        assert_eq!(classify(&exp(0.8, 0.5, 0.7)).unwrap().case, AsymptoticCase::TalagrandLeftLight);
        assert_eq!(classify(&exp(0.8, 0.5, 0.5)).unwrap().case, AsymptoticCase::TalagrandSymmetric);

        let mut bad = exp(1.0, 1.0, 1.0);
        bad.gamma_plus = 0.0;
        assert!(classify(&bad).is_err());
    }

    #[test]
    fn talagrand_constants() {
        let e = LocalExpansion::new(1.0, 2.0, 2.0, 1.0, 2.0, 0.5).unwrap();
        assert!((talagrand_constant(&e, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(talagrand_constant(&e, 0.0).unwrap(), 1.0);
        let e = LocalExpansion::new(1.0, 0.5, 3.0, 0.9, 1.5, 0.5).unwrap();
        assert_eq!(talagrand_constant(&e, 2.0).unwrap(), 1.0);
        assert!(matches!(talagrand_constant(&exp(1.0, 2.0, 2.0), 1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn talagrand_value_is_psi() {
        let e = exp(0.8, 0.5, 0.5);
        for u in [1.0, 3.0, 10.0] {
            let v = theorem1_value(&e, 1.0, u, &Constants::default()).unwrap();
            assert_eq!(v.prefactor, 1.0);
            assert_eq!(v.power, 0.0);
            assert!((v.value - psi(u)).abs() <= 1e-14 * psi(u));
        }
    }

    #[test]
    fn pickands_prefactor_symmetric_quadratic() {
        let a: f64 = 0.3;
        let e = LocalExpansion::new(a, 2.0, a, 2.0, 1.5, 0.7).unwrap();
        let want = std::f64::consts::PI.sqrt() * a.powf(-0.5) * 0.7f64.powf(1.0 / 1.5);
        assert!((pickands_prefactor(&e).unwrap() - want).abs() < 1e-13 * want);
    }

    #[test]
    fn pickands_prefactor_mixed() {
        let e = LocalExpansion::new(0.4, 3.0, 0.9, 2.0, 1.0, 0.5).unwrap();
        let want = 0.4f64.powf(-1.0 / 3.0) * 0.5 * gamma(4.0 / 3.0);
        assert!((pickands_prefactor(&e).unwrap() - want).abs() < 1e-13 * want);
        assert!((classify(&e).unwrap().zeta - (2.0 - 2.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn missing_or_bad_constants() {
        let e = exp(1.0, 2.0, 2.0);
        assert!(matches!(
            theorem1_value(&e, 0.5, 3.0, &Constants::default()),
            Err(Error::Dependency(_))
        ));
        let spec = pickands_constant_spec(&e, 0.5, 8.0, 0.125);
        let mut c = Constants {
            pickands: Some(ConstantEstimate::known(-1.0, spec)),
            piterbarg: None,
        };
        assert!(matches!(theorem1_value(&e, 0.5, 3.0, &c), Err(Error::Parameter { .. })));
        c.pickands = Some(ConstantEstimate::known(1.0, pickands_constant_spec(&e, 0.7, 8.0, 0.125)));
        assert!(matches!(theorem1_value(&e, 0.5, 3.0, &c), Err(Error::Dependency(_))));
        c.pickands = Some(ConstantEstimate::known(1.0, spec));
        assert!(theorem1_value(&e, 0.5, 3.0, &c).is_ok());
    }

    #[test]
    fn log_value_survives_far_tail() {
        let e = exp(1.0, 2.0, 2.0);
        let c = Constants {
            pickands: Some(ConstantEstimate::known(1.0, pickands_constant_spec(&e, 0.0, 8.0, 0.125))),
            piterbarg: None,
        };
        let v = theorem1_value(&e, 0.0, 40.0, &c).unwrap();
        assert!(v.log_value.is_finite());
        assert!(v.log_value < -790.0);
        assert_eq!(v.value, v.log_value.exp());
    }
}
