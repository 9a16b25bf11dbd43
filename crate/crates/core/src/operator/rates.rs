//! Predicted sup-norm convergence exponents.

use crate::error::{Error, Result};

/// `ν = αθ / (1 + (1−θ)·max{β, 0})`.
pub fn theoretical_rate(alpha: f64, beta: f64, theta: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "beta must be finite, got {beta}"
        )));
    }
    check_theta(theta)?;
    Ok(alpha * theta / (1.0 + (1.0 - theta) * beta.max(0.0)))
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "theta must lie in (0, 1], got {theta}"
        )));
    }
    Ok(())
}

/// Which stability result the exponent comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyCase {
    /// Normalized family, `p → q`.
    Normalized,
    /// Variational family with `p < 2`, `q ≤ 2`.
    VariationalSingular,
    /// Variational family with `p > 2`, `q ≥ 2`.
    VariationalDegenerate,
    /// General `(p, p′)` family with `p′ > 2`, `q′ ≥ 2`.
    GeneralDegenerate,
    /// General `(p, p′)` family with `p′ < 2`, `q′ ≤ 2`.
    GeneralSingular,
    /// General family with `p′ = q′` held fixed.
    GeneralFixedPPrime,
    /// Regularization `ε → 0` of the general family (`p ≥ 1`, `p′ ≥ 2`).
    Regularization,
    /// Regularization `(ε₁, ε₂) → 0` of the biased infinity-Laplacian.
    BiasedInfinity,
}

impl FamilyCase {
    pub const ALL: [FamilyCase; 8] = [
        FamilyCase::Normalized,
        FamilyCase::VariationalSingular,
        FamilyCase::VariationalDegenerate,
        FamilyCase::GeneralDegenerate,
        FamilyCase::GeneralSingular,
        FamilyCase::GeneralFixedPPrime,
        FamilyCase::Regularization,
        FamilyCase::BiasedInfinity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyCase::Normalized => "normalized",
            FamilyCase::VariationalSingular => "variational_singular",
            FamilyCase::VariationalDegenerate => "variational_degenerate",
            FamilyCase::GeneralDegenerate => "general_degenerate",
            FamilyCase::GeneralSingular => "general_singular",
            FamilyCase::GeneralFixedPPrime => "general_fixed_pprime",
            FamilyCase::Regularization => "regularization",
            FamilyCase::BiasedInfinity => "biased_infinity",
        }
    }

    pub fn from_name(name: &str) -> Option<FamilyCase> {
        FamilyCase::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateParams {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub p_prime: Option<f64>,
    pub q_prime: Option<f64>,
    pub theta: f64,
    /// Free interpolation exponent of the regularization estimates.
    pub m: Option<f64>,
}

impl RateParams {
    pub fn with_theta(theta: f64) -> Self {
        Self {
            theta,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction {
    pub nu_sup: f64,
    /// False when the exponent is an open supremum (any ν below it works).
    pub attained: bool,
}

impl RatePrediction {
    fn attained(nu: f64) -> Self {
        Self {
            nu_sup: nu,
            attained: true,
        }
    }

    fn open(nu: f64) -> Self {
        Self {
            nu_sup: nu,
            attained: false,
        }
    }
}

fn na(msg: impl Into<String>) -> Error {
    Error::CaseNotApplicable(msg.into())
}

fn need(v: Option<f64>, name: &str, case: FamilyCase) -> Result<f64> {
    v.ok_or_else(|| na(format!("{} needs parameter {name}", case.name())))
}

fn require(cond: bool, case: FamilyCase, window: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(na(format!("{} requires {window}", case.name())))
    }
}

fn m_in(m: f64, lo: f64, hi: f64) -> Result<()> {
    if m > lo && m < hi {
        Ok(())
    } else {
        Err(na(format!("m = {m} outside ({lo}, {hi})")))
    }
}

pub fn family_rate(case: FamilyCase, params: &RateParams) -> Result<RatePrediction> {
    let theta = params.theta;
    check_theta(theta)?;
    if params.m.is_some()
        && !matches!(
            case,
            FamilyCase::Regularization | FamilyCase::BiasedInfinity
        )
    {
        return Err(na(format!("{} takes no m parameter", case.name())));
    }
    match case {
        FamilyCase::Normalized => {
            let ok = |v: Option<f64>| v.is_none_or(|x| x >= 1.0);
            require(ok(params.p) && ok(params.q), case, "p, q ≥ 1")?;
            Ok(RatePrediction::attained(theta))
        }
        FamilyCase::VariationalSingular => {
            let p = need(params.p, "p", case)?;
            let q = need(params.q, "q", case)?;
            require(
                p > 1.0 && p < 2.0 && q > 1.0 && q <= 2.0,
                case,
                "1 < p < 2, 1 < q ≤ 2",
            )?;
            Ok(RatePrediction::attained(theta))
        }
        FamilyCase::VariationalDegenerate => {
            let p = need(params.p, "p", case)?;
            let q = need(params.q, "q", case)?;
            require(p > 2.0 && q >= 2.0, case, "p > 2, q ≥ 2")?;
            // β ranges over (q/2 − 1, ∞); the β-dependence disappears at θ = 1
            let nu = 2.0 * theta / ((1.0 - theta) * q + 2.0 * theta);
            Ok(RatePrediction {
                nu_sup: nu,
                attained: theta == 1.0,
            })
        }
        FamilyCase::GeneralDegenerate => {
            let pp = need(params.p_prime, "p_prime", case)?;
            let qp = need(params.q_prime, "q_prime", case)?;
            require(pp > 2.0 && qp >= 2.0, case, "p′ > 2, q′ ≥ 2")?;
            Ok(RatePrediction::attained(theta))
        }
        FamilyCase::GeneralSingular => {
            let pp = need(params.p_prime, "p_prime", case)?;
            let qp = need(params.q_prime, "q_prime", case)?;
            require(
                pp > 1.0 && pp < 2.0 && qp > 1.0 && qp <= 2.0,
                case,
                "1 < p′ < 2, 1 < q′ ≤ 2",
            )?;
            // every admissible β is negative, so max{β, 0} = 0
            Ok(RatePrediction::attained(theta))
        }
        FamilyCase::GeneralFixedPPrime => {
            let qp = need(params.q_prime, "q_prime", case)?;
            require(qp > 1.0, case, "q′ > 1")?;
            if let Some(pp) = params.p_prime {
                require(pp == qp, case, "p′ = q′")?;
            }
            Ok(RatePrediction::attained(theoretical_rate(
                1.0,
                qp / 2.0 - 1.0,
                theta,
            )?))
        }
        FamilyCase::Regularization => {
            let pp = need(params.p_prime, "p_prime", case)?;
            require(pp >= 2.0, case, "p′ ≥ 2")?;
            if let Some(p) = params.p {
                require(p >= 1.0, case, "p ≥ 1")?;
            }
            regularization_rate(pp, theta, params.m)
        }
        FamilyCase::BiasedInfinity => match params.m {
            None => Ok(RatePrediction::open(theta / 2.0)),
            Some(m) => {
                m_in(m, 0.0, 0.25)?;
                Ok(RatePrediction::attained(2.0 * m * theta))
            }
        },
    }
}

fn regularization_rate(pp: f64, theta: f64, m: Option<f64>) -> Result<RatePrediction> {
    if pp == 2.0 {
        return match m {
            None => Ok(RatePrediction::open(theta / 2.0)),
            Some(m) => {
                m_in(m, 0.0, 0.5)?;
                Ok(RatePrediction::attained(m * theta))
            }
        };
    }
    if pp < 3.0 {
        return match m {
            None => Ok(RatePrediction::attained((pp - 2.0) * theta)),
            Some(m) => {
                m_in(m, 0.0, (pp - 1.0) / 2.0)?;
                Ok(RatePrediction::attained(theta * (pp - 2.0).min(m)))
            }
        };
    }
    if pp <= 4.0 {
        return match m {
            None => Ok(RatePrediction::open(theta)),
            Some(m) => {
                m_in(m, 0.0, 1.0)?;
                Ok(RatePrediction::attained(theta * (pp - 2.0).min(m)))
            }
        };
    }
    match m {
        None => Ok(RatePrediction::open(
            theta / (1.0 + (1.0 - theta) * (pp - 4.0)),
        )),
        Some(m) => {
            m_in(m, 0.0, 1.0)?;
            let beta = (pp - 4.0).max(pp / 2.0 - 1.0 - m);
            Ok(RatePrediction::attained(theoretical_rate(m, beta, theta)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn theoretical_examples() {
        assert_eq!(theoretical_rate(1.0, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(theoretical_rate(1.0, -0.3, 0.5).unwrap(), 0.5);
        assert_relative_eq!(
            theoretical_rate(1.0, 1.0, 0.5).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert!(theoretical_rate(1.0, 0.0, 0.0).is_err());
        assert!(theoretical_rate(1.0, 0.0, 1.5).is_err());
        assert!(theoretical_rate(0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn family_examples() {
        let r = family_rate(FamilyCase::Normalized, &RateParams::with_theta(0.7)).unwrap();
        assert_eq!(r, RatePrediction::attained(0.7));

        let mut params = RateParams::with_theta(1.0);
        params.p_prime = Some(2.5);
        let r = family_rate(FamilyCase::Regularization, &params).unwrap();
        assert_eq!(r, RatePrediction::attained(0.5));

        let mut params = RateParams::with_theta(0.5);
        params.p_prime = Some(5.0);
        let r = family_rate(FamilyCase::Regularization, &params).unwrap();
        assert_relative_eq!(r.nu_sup, 1.0 / 3.0, epsilon = 1e-15);
        assert!(!r.attained);
    }

    #[test]
    fn windows_enforced() {
        let mut params = RateParams::with_theta(1.0);
        params.p = Some(1.5);
        params.q = Some(2.5);
        assert!(matches!(
            family_rate(FamilyCase::VariationalSingular, &params),
            Err(Error::CaseNotApplicable(_))
        ));
        assert!(family_rate(FamilyCase::VariationalDegenerate, &params).is_err());
        let mut params = RateParams::with_theta(1.0);
        params.p_prime = Some(1.5);
        assert!(family_rate(FamilyCase::Regularization, &params).is_err());
        params.p_prime = Some(2.0);
        params.m = Some(0.6);
        assert!(family_rate(FamilyCase::Regularization, &params).is_err());
        let mut params = RateParams::with_theta(1.0);
        params.m = Some(0.1);
        assert!(family_rate(FamilyCase::Normalized, &params).is_err());
    }

    #[test]
    fn free_exponent_m() {
        let mut params = RateParams::with_theta(1.0);
        params.p_prime = Some(2.0);
        params.m = Some(0.4);
        assert_eq!(
            family_rate(FamilyCase::Regularization, &params).unwrap(),
            RatePrediction::attained(0.4)
        );
        let mut params = RateParams::with_theta(0.5);
        params.m = Some(0.2);
        assert_relative_eq!(
            family_rate(FamilyCase::BiasedInfinity, &params)
                .unwrap()
                .nu_sup,
            0.2,
            epsilon = 1e-15
        );
        // m → 1 recovers the open supremum for p′ > 4
        let mut params = RateParams::with_theta(0.5);
        params.p_prime = Some(5.0);
        params.m = Some(1.0 - 1e-9);
        let r = family_rate(FamilyCase::Regularization, &params).unwrap();
        assert_relative_eq!(r.nu_sup, 1.0 / 3.0, epsilon = 1e-8);
    }
}
