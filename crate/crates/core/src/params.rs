//! Problem parameters and the closed-form quantities derived from them.
//!
//! The radial equation studied throughout the crate is
//!
//! ```text
//! u'' + (n-1)/r u' + k1 r^l1 u^p + k2 r^l2 u^q = 0,   r > 0,
//! ```
//!
//! with `k1 = k2 = 1` for the two-term problem. The coefficient toggles admit
//! single-term equations whose singular and regular solutions are known in
//! closed form; they serve as oracles for the integrator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance used to detect that an exponent sits exactly on a
/// critical value.
pub const EPS_CRIT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("dimension n = {0} must be at least 3")]
    Dimension(u32),
    #[error("coefficient {name} = {value} must be 0 or 1")]
    Coefficient { name: &'static str, value: f64 },
    #[error("at least one of k1, k2 must be active")]
    NoActiveTerm,
    #[error("exponent {name} = 1 makes the scaling exponent undefined")]
    UnitExponent { name: &'static str },
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("lambda undefined: alpha (n - 2 - alpha) = {product} is not positive")]
    UndefinedLambda { product: f64 },
}

/// The quintuple `(n, p, q, l1, l2)` together with the term toggles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub l1: f64,
    pub l2: f64,
    #[serde(default = "one")]
    pub k1: f64,
    #[serde(default = "one")]
    pub k2: f64,
}

fn one() -> f64 {
    1.0
}

impl ProblemParams {
    /// Two-term problem with both coefficients equal to one.
    pub fn new(n: u32, p: f64, q: f64, l1: f64, l2: f64) -> Result<Self, ParamError> {
        Self::with_coefficients(n, p, q, l1, l2, 1.0, 1.0)
    }

    pub fn with_coefficients(
        n: u32,
        p: f64,
        q: f64,
        l1: f64,
        l2: f64,
        k1: f64,
        k2: f64,
    ) -> Result<Self, ParamError> {
        let params = ProblemParams { n, p, q, l1, l2, k1, k2 };
        params.validate()?;
        Ok(params)
    }

    /// Single-term equation `Δu + r^weight u^exponent = 0`. The inactive
    /// q-pair mirrors the active pair so every derived constant is finite.
    pub fn single_term(n: u32, exponent: f64, weight: f64) -> Result<Self, ParamError> {
        Self::with_coefficients(n, exponent, exponent, weight, weight, 1.0, 0.0)
    }

    pub fn both_active(&self) -> bool {
        self.k1 == 1.0 && self.k2 == 1.0
    }

    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n < 3 {
            return Err(ParamError::Dimension(self.n));
        }
        for (name, value) in [("k1", self.k1), ("k2", self.k2)] {
            if value != 0.0 && value != 1.0 {
                return Err(ParamError::Coefficient { name, value });
            }
        }
        if ![self.p, self.q, self.l1, self.l2].iter().all(|x| x.is_finite()) {
            return Err(ParamError::Invalid("non-finite exponent or weight".into()));
        }
        if self.p == 1.0 {
            return Err(ParamError::UnitExponent { name: "p" });
        }
        if self.q == 1.0 {
            return Err(ParamError::UnitExponent { name: "q" });
        }
        match (self.k1 == 1.0, self.k2 == 1.0) {
            (true, true) => {
                if !(1.0 < self.p && self.p < self.q) {
                    return Err(ParamError::Invalid(format!(
                        "need 1 < p < q, got p = {}, q = {}",
                        self.p, self.q
                    )));
                }
                if !(-2.0 < self.l2 && self.l2 < self.l1 && self.l1 <= 0.0) {
                    return Err(ParamError::Invalid(format!(
                        "need -2 < l2 < l1 <= 0, got l1 = {}, l2 = {}",
                        self.l1, self.l2
                    )));
                }
            }
            (true, false) => check_single("p", self.p, self.l1)?,
            (false, true) => check_single("q", self.q, self.l2)?,
            (false, false) => {}
        }
        Ok(())
    }
}

fn check_single(name: &str, exponent: f64, weight: f64) -> Result<(), ParamError> {
    if exponent > 1.0 && weight > -2.0 {
        Ok(())
    } else {
        Err(ParamError::Invalid(format!(
            "active term needs {name} > 1 and weight > -2, got {exponent}, {weight}"
        )))
    }
}

/// Which power term of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    P,
    Q,
}

/// Closed-form quantities derived from [`ProblemParams`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedConstants {
    #[serde(skip)]
    pub params: ProblemParams,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `None` when `alpha1 (n - 2 - alpha1) <= 0`.
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub serrin1: f64,
    pub sobolev1: f64,
    pub sobolev2: f64,
    pub c1coef: f64,
    pub c2coef: f64,
    pub delta: f64,
    pub delta2: f64,
    pub omega_sq: f64,
    /// Square root of `omega_sq`, present only when it is positive.
    pub omega: Option<f64>,
}

impl DerivedConstants {
    /// Exponent multiplying `t` in the weight of `term` once the amplitude is
    /// scaled as `v = r^alpha u` and `t = ln r`.
    pub fn frame_exp(&self, alpha: f64, term: Term) -> f64 {
        frame_exponent(&self.params, alpha, term)
    }

    pub fn lambda1(&self) -> Result<f64, ParamError> {
        self.lambda1.ok_or(ParamError::UndefinedLambda {
            product: self.alpha1 * (self.params.dim() - 2.0 - self.alpha1),
        })
    }

    pub fn lambda2(&self) -> Result<f64, ParamError> {
        self.lambda2.ok_or(ParamError::UndefinedLambda {
            product: self.alpha2 * (self.params.dim() - 2.0 - self.alpha2),
        })
    }
}

pub fn frame_exponent(params: &ProblemParams, alpha: f64, term: Term) -> f64 {
    match term {
        Term::P => params.l1 - (params.p - 1.0) * alpha + 2.0,
        Term::Q => params.l2 - (params.q - 1.0) * alpha + 2.0,
    }
}

fn lambda_from(alpha: f64, dim: f64, exponent: f64) -> Option<f64> {
    let product = alpha * (dim - 2.0 - alpha);
    (product > 0.0).then(|| product.powf(1.0 / (exponent - 1.0)))
}

pub fn derive_constants(params: &ProblemParams) -> Result<DerivedConstants, ParamError> {
    params.validate()?;
    let ProblemParams { p, q, l1, l2, .. } = *params;
    let n = params.dim();
    let alpha1 = (2.0 + l1) / (p - 1.0);
    let alpha2 = (2.0 + l2) / (q - 1.0);
    let omega_sq = (2.0 + l1) * (n - 2.0 - alpha1) - 0.25 * (n - 2.0 - 2.0 * alpha1).powi(2);
    Ok(DerivedConstants {
        params: *params,
        alpha1,
        alpha2,
        lambda1: lambda_from(alpha1, n, p),
        lambda2: lambda_from(alpha2, n, q),
        serrin1: (n + l1) / (n - 2.0),
        sobolev1: (n + 2.0 + 2.0 * l1) / (n - 2.0),
        sobolev2: (n + 2.0 + 2.0 * l2) / (n - 2.0),
        c1coef: n - 2.0 - 2.0 * alpha1,
        c2coef: n - 2.0 - 2.0 * alpha2,
        delta: (2.0 + l1) * (1.0 - q) / (p - 1.0) + 2.0 + l2,
        delta2: (p - 1.0) * (alpha1 - alpha2),
        omega_sq,
        omega: (omega_sq > 0.0).then(|| omega_sq.sqrt()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalCase {
    None,
    CriticalQ,
    CriticalP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularCase {
    None,
    SingularAtInfinity,
    SingularAtOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalityMargins {
    pub p_minus_serrin1: f64,
    pub p_minus_sobolev1: f64,
    pub q_minus_sobolev2: f64,
    pub q_minus_p: f64,
}

/// Which asymptotic regimes a parameter set falls in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeFlags {
    pub subcritical_two_term: bool,
    pub critical_case: CriticalCase,
    pub singular_case: SingularCase,
    pub criticality_margins: CriticalityMargins,
}

pub fn classify_regime(params: &ProblemParams, dc: &DerivedConstants) -> RegimeFlags {
    classify_regime_with(params, dc, EPS_CRIT)
}

pub fn classify_regime_with(
    params: &ProblemParams,
    dc: &DerivedConstants,
    eps_crit: f64,
) -> RegimeFlags {
    let ProblemParams { p, q, l1, l2, .. } = *params;
    let margins = CriticalityMargins {
        p_minus_serrin1: p - dc.serrin1,
        p_minus_sobolev1: p - dc.sobolev1,
        q_minus_sobolev2: q - dc.sobolev2,
        q_minus_p: q - p,
    };
    let base = params.both_active()
        && -2.0 < l2
        && l2 < l1
        && l1 <= 0.0
        && dc.serrin1 < p
        && p < q;
    let p_critical = (p - dc.sobolev1).abs() <= eps_crit;
    let q_critical = (q - dc.sobolev2).abs() <= eps_crit;

    let critical_case = if !base {
        CriticalCase::None
    } else if q_critical {
        CriticalCase::CriticalQ
    } else if p_critical {
        CriticalCase::CriticalP
    } else {
        CriticalCase::None
    };
    let singular_case = if base && !q_critical && q < dc.sobolev2 {
        SingularCase::SingularAtInfinity
    } else if base && !q_critical && dc.sobolev1 < p && !p_critical {
        SingularCase::SingularAtOrigin
    } else {
        SingularCase::None
    };
    RegimeFlags {
        subcritical_two_term: base && !p_critical && !q_critical,
        critical_case,
        singular_case,
        criticality_margins: margins,
    }
}

/// Scaling exponent and amplitude of the exact singular profile
/// `u = lambda r^-alpha` of `Δu + r^l u^exponent = 0`.
pub fn exact_single_term_singular(n: u32, l: f64, exponent: f64) -> Result<(f64, f64), ParamError> {
    if n < 3 {
        return Err(ParamError::Dimension(n));
    }
    if exponent == 1.0 {
        return Err(ParamError::UnitExponent { name: "exponent" });
    }
    let alpha = (2.0 + l) / (exponent - 1.0);
    let product = alpha * (f64::from(n) - 2.0 - alpha);
    if product <= 0.0 {
        return Err(ParamError::UndefinedLambda { product });
    }
    Ok((alpha, product.powf(1.0 / (exponent - 1.0))))
}

/// The ground-state bubble of `Δu + u^{(n+2)/(n-2)} = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AubinTalenti {
    pub n: u32,
}

impl AubinTalenti {
    pub fn new(n: u32) -> Result<Self, ParamError> {
        if n < 3 {
            return Err(ParamError::Dimension(n));
        }
        Ok(AubinTalenti { n })
    }

    pub fn critical_exponent(&self) -> f64 {
        let n = f64::from(self.n);
        (n + 2.0) / (n - 2.0)
    }

    /// `u(0)`, also the coefficient of the `r^{2-n}` tail.
    pub fn height(&self) -> f64 {
        let n = f64::from(self.n);
        (n * (n - 2.0)).powf((n - 2.0) / 4.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        let n = f64::from(self.n);
        self.height() * (1.0 + r * r).powf(-(n - 2.0) / 2.0)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let n = f64::from(self.n);
        -(n - 2.0) * r * self.height() * (1.0 + r * r).powf(-n / 2.0)
    }

    /// Parameters of the single-term critical equation solved by the bubble.
    pub fn params(&self) -> ProblemParams {
        ProblemParams::single_term(self.n, self.critical_exponent(), 0.0)
            .expect("critical exponent is admissible")
    }
}

pub fn aubin_talenti_profile(n: u32) -> Result<impl Fn(f64) -> f64, ParamError> {
    let bubble = AubinTalenti::new(n)?;
    Ok(move |r: f64| bubble.value(r))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn config_a() -> ProblemParams {
        ProblemParams::new(5, 1.9, 1.95, 0.0, -0.5).unwrap()
    }

    #[test]
    fn config_a_constants_match_high_precision_values() {
        let dc = derive_constants(&config_a()).unwrap();
        assert_relative_eq!(dc.alpha1, 2.2222222222222222, max_relative = 1e-14);
        assert_relative_eq!(dc.alpha2, 1.5789473684210526, max_relative = 1e-14);
        assert_relative_eq!(dc.lambda1.unwrap(), 1.8367404753952032, max_relative = 1e-13);
        assert_relative_eq!(dc.lambda2.unwrap(), 2.3412637106373519, max_relative = 1e-13);
        assert_relative_eq!(dc.delta, -0.61111111111111111, max_relative = 1e-13);
        assert_relative_eq!(dc.delta2, 0.57894736842105263, max_relative = 1e-13);
        assert_relative_eq!(dc.omega_sq, 1.0339506172839506, max_relative = 1e-13);
        assert_eq!(dc.sobolev2, 2.0);
    }

    #[test]
    fn single_term_cubic_in_five_dimensions() {
        let params = ProblemParams::single_term(5, 3.0, 0.0).unwrap();
        let dc = derive_constants(&params).unwrap();
        assert_relative_eq!(dc.alpha1, 1.0);
        assert_relative_eq!(dc.lambda1.unwrap(), 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn critical_q_alpha2_is_half_dimension() {
        let params = ProblemParams::new(5, 1.9, 2.0, 0.0, -0.5).unwrap();
        let dc = derive_constants(&params).unwrap();
        assert_eq!(dc.alpha2, 1.5);
        assert_relative_eq!(dc.lambda2.unwrap(), 2.25, max_relative = 1e-15);
    }

    #[test]
    fn regimes_for_reference_configs() {
        let a = config_a();
        let flags = classify_regime(&a, &derive_constants(&a).unwrap());
        assert!(flags.subcritical_two_term);
        assert_eq!(flags.critical_case, CriticalCase::None);
        assert_eq!(flags.singular_case, SingularCase::SingularAtInfinity);

        let b = ProblemParams::new(5, 1.9, 2.0, 0.0, -0.5).unwrap();
        let flags = classify_regime(&b, &derive_constants(&b).unwrap());
        assert_eq!(flags.critical_case, CriticalCase::CriticalQ);
        assert!(!flags.subcritical_two_term);
        assert_eq!(flags.singular_case, SingularCase::None);

        let c = ProblemParams::new(5, 2.5, 3.0, 0.0, -0.5).unwrap();
        let flags = classify_regime(&c, &derive_constants(&c).unwrap());
        assert_eq!(flags.singular_case, SingularCase::SingularAtOrigin);
        assert!(flags.subcritical_two_term);
    }

    #[test]
    fn below_serrin_gives_no_regime() {
        let params = ProblemParams::new(5, 1.5, 1.95, 0.0, -0.5).unwrap();
        let flags = classify_regime(&params, &derive_constants(&params).unwrap());
        assert!(!flags.subcritical_two_term);
        assert_eq!(flags.singular_case, SingularCase::None);
        assert!(flags.criticality_margins.p_minus_serrin1 < 0.0);
    }

    #[test]
    fn rejects_unit_exponents_and_bad_orderings() {
        assert!(matches!(
            ProblemParams::new(5, 1.0, 1.5, 0.0, -0.5),
            Err(ParamError::UnitExponent { name: "p" })
        ));
        assert!(ProblemParams::new(5, 2.0, 1.5, 0.0, -0.5).is_err());
        assert!(ProblemParams::new(5, 1.5, 2.0, -0.5, 0.0).is_err());
        assert!(ProblemParams::new(2, 1.5, 2.0, 0.0, -0.5).is_err());
        assert!(ProblemParams::with_coefficients(5, 1.5, 2.0, 0.0, -0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn undefined_lambda_is_flagged() {
        // alpha1 = 4 > n - 2 = 3
        let params = ProblemParams::single_term(5, 1.5, 0.0).unwrap();
        let dc = derive_constants(&params).unwrap();
        assert!(dc.lambda1.is_none());
        assert!(dc.lambda1().is_err());
    }

    #[test]
    fn exact_singular_examples() {
        let (a, l) = exact_single_term_singular(5, 0.0, 3.0).unwrap();
        assert_relative_eq!(a, 1.0);
        assert_relative_eq!(l, 2f64.sqrt(), max_relative = 1e-15);
        let (a, l) = exact_single_term_singular(3, 0.0, 5.0).unwrap();
        assert_relative_eq!(a, 0.5);
        assert_relative_eq!(l, std::f64::consts::FRAC_1_SQRT_2, max_relative = 1e-15);
        let (a, l) = exact_single_term_singular(5, -1.0, 2.0).unwrap();
        assert_relative_eq!(a, 1.0);
        assert_relative_eq!(l, 2.0, max_relative = 1e-15);
        assert!(exact_single_term_singular(5, 0.0, 1.5).is_err());
    }

    #[test]
    fn bubble_values() {
        let bubble = AubinTalenti::new(5).unwrap();
        assert_relative_eq!(bubble.value(0.0), 7.6219912223192210, max_relative = 1e-14);
        let u3 = aubin_talenti_profile(3).unwrap();
        assert_relative_eq!(u3(1.0), 0.93060485910209960, max_relative = 1e-14);
        let r = 1e4;
        assert_relative_eq!(bubble.value(r) * r.powi(3), bubble.height(), max_relative = 1e-7);
    }

    /// Substitution check of the bubble by central differences of the
    /// closed form; independent of the analytic derivative.
    #[test]
    fn bubble_satisfies_critical_equation() {
        for n in 3..8 {
            let bubble = AubinTalenti::new(n).unwrap();
            let pc = bubble.critical_exponent();
            for &r in &[0.1, 0.5, 1.0, 2.0, 5.0] {
                let h = 1e-4 * r;
                let u = |x: f64| bubble.value(x);
                let d1 = (u(r + h) - u(r - h)) / (2.0 * h);
                let d2 = (u(r + h) - 2.0 * u(r) + u(r - h)) / (h * h);
                let res = d2 + f64::from(n - 1) / r * d1 + u(r).powf(pc);
                assert!(res.abs() < 1e-5 * u(r).powf(pc).max(1e-3), "n={n} r={r} res={res}");
                assert_relative_eq!(bubble.derivative(r), d1, max_relative = 1e-7);
            }
        }
    }
}
