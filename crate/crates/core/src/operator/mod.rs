//! Diffusion coefficients `A(ξ)` of the six operator families, their closed-form
//! square roots, first-order terms and the predicted rate exponents.
//!
//! Every family has the shape `A(ξ) = a·I + b·ξ⊗ξ/|ξ|²` (a multiple of the
//! identity plus a rank-one update along `ξ`), and so does its square root.
//! [`RankOneForm`] stores that pair and gives eigenvalues without an
//! eigensolve.

mod c1;
mod hamiltonian;
mod rates;

pub use c1::{c1_certify, c1_gap, c2_gap, C1Params, C1Report, C2Params, XiGrid};
pub use hamiltonian::{hamiltonian, HamiltonianSpec};
pub use rates::{family_rate, theoretical_rate, FamilyCase, RateParams, RatePrediction};

use crate::error::{Error, Result};
use crate::matrix::{SquareMatrix, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `I + (p−2) ξ⊗ξ/|ξ|²`
    Normalized,
    /// `|ξ|^{p−2} (I + (p−2) ξ⊗ξ/|ξ|²)`
    Variational,
    /// `|ξ|^{p′−2} (I + (p−2) ξ⊗ξ/|ξ|²)`
    GeneralPQ,
    /// `(|ξ|²+ε²)^{(p′−2)/2} (I + (p−2) ξ⊗ξ/(|ξ|²+ε²))`
    RegularizedPQ,
    /// `ξ⊗ξ/|ξ|²`
    BiasedInfinity,
    /// `ξ⊗ξ/(|ξ|²+ε₁²) + ε₁ I`
    BiasedInfinityRegularized,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Normalized,
        Family::Variational,
        Family::GeneralPQ,
        Family::RegularizedPQ,
        Family::BiasedInfinity,
        Family::BiasedInfinityRegularized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normalized => "normalized",
            Family::Variational => "variational",
            Family::GeneralPQ => "general_pq",
            Family::RegularizedPQ => "regularized_pq",
            Family::BiasedInfinity => "biased_infinity",
            Family::BiasedInfinityRegularized => "biased_infinity_regularized",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn is_biased(self) -> bool {
        matches!(
            self,
            Family::BiasedInfinity | Family::BiasedInfinityRegularized
        )
    }
}

/// Which parameter a perturbation sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbAxis {
    P,
    PPrime,
    Eps,
    Eps1Eps2,
}

/// Raw parameters; unused entries are ignored by the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    pub p: f64,
    pub p_prime: f64,
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub a: f64,
    pub grad_floor: f64,
}

impl Default for OperatorParams {
    fn default() -> Self {
        Self {
            p: 2.0,
            p_prime: 2.0,
            eps: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            a: 0.0,
            grad_floor: 0.0,
        }
    }
}

/// One validated member of an operator family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    family: Family,
    params: OperatorParams,
}

/// `iso·I + along·d⊗d` with `d` a unit vector (unset when `along == 0` at ξ = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOneForm {
    pub n: usize,
    pub iso: f64,
    pub along: f64,
    pub dir: [f64; MAX_DIM],
}

impl RankOneForm {
    fn new(n: usize, iso: f64, along: f64, xi: &[f64], norm: f64) -> Self {
        let mut dir = [0.0; MAX_DIM];
        if norm > 0.0 {
            for (d, x) in dir.iter_mut().zip(xi) {
                *d = x / norm;
            }
        }
        if n == 1 {
            // ξ⊗ξ/|ξ|² ≡ 1 on the line
            return Self {
                n,
                iso: iso + along,
                along: 0.0,
                dir,
            };
        }
        Self { n, iso, along, dir }
    }

    fn isotropic(n: usize, iso: f64) -> Self {
        Self {
            n,
            iso,
            along: 0.0,
            dir: [0.0; MAX_DIM],
        }
    }

    pub fn to_matrix(&self) -> SquareMatrix {
        let d = &self.dir[..self.n];
        SquareMatrix::identity(self.n)
            .scale(self.iso)
            .add(&SquareMatrix::outer(d).scale(self.along))
            .expect("same dim")
    }

    /// Eigenvalue along `ξ`.
    pub fn eig_along(&self) -> f64 {
        self.iso + self.along
    }

    pub fn eig_max(&self) -> f64 {
        if self.n == 1 {
            self.eig_along()
        } else {
            self.iso.max(self.eig_along())
        }
    }

    pub fn eig_min(&self) -> f64 {
        if self.n == 1 {
            self.eig_along()
        } else {
            self.iso.min(self.eig_along())
        }
    }

    /// `tr(self · hess)`
    pub fn contract(&self, hess: &SquareMatrix) -> f64 {
        let mut acc = self.iso * hess.trace();
        if self.along != 0.0 {
            acc += self.along * hess.quadratic_form(&self.dir[..self.n]);
        }
        acc
    }

    /// Spectral norm of `self − other`, both sharing the direction of the same ξ.
    pub fn diff_norm(&self, other: &RankOneForm) -> f64 {
        let d_along = (self.eig_along() - other.eig_along()).abs();
        if self.n == 1 {
            d_along
        } else {
            d_along.max((self.iso - other.iso).abs())
        }
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "{name} must be finite, got {v}"
        )));
    }
    Ok(())
}

impl OperatorSpec {
    pub fn new(family: Family, params: OperatorParams) -> Result<Self> {
        let p = &params;
        for (name, v) in [
            ("p", p.p),
            ("p_prime", p.p_prime),
            ("eps", p.eps),
            ("eps1", p.eps1),
            ("eps2", p.eps2),
            ("a", p.a),
            ("grad_floor", p.grad_floor),
        ] {
            check_finite(name, v)?;
        }
        if p.grad_floor < 0.0 {
            return Err(Error::InvalidSpec("grad_floor must be ≥ 0".into()));
        }
        let bad = |msg: &str| Err(Error::InvalidSpec(format!("{}: {msg}", family.name())));
        match family {
            Family::Normalized if p.p < 1.0 => return bad("requires p ≥ 1"),
            Family::Variational if p.p <= 1.0 => return bad("requires p > 1"),
            Family::GeneralPQ if p.p <= 1.0 || p.p_prime <= 1.0 => {
                return bad("requires p > 1 and p′ > 1")
            }
            Family::RegularizedPQ if p.p < 1.0 || p.p_prime < 2.0 || p.eps < 0.0 => {
                return bad("requires p ≥ 1, p′ ≥ 2, ε ≥ 0")
            }
            Family::BiasedInfinityRegularized if p.eps1 < 0.0 || p.eps2 < 0.0 => {
                return bad("requires ε₁, ε₂ ≥ 0")
            }
            _ => {}
        }
        Ok(Self { family, params })
    }

    pub fn normalized(p: f64) -> Result<Self> {
        Self::new(
            Family::Normalized,
            OperatorParams {
                p,
                ..Default::default()
            },
        )
    }

    pub fn variational(p: f64) -> Result<Self> {
        Self::new(
            Family::Variational,
            OperatorParams {
                p,
                p_prime: p,
                ..Default::default()
            },
        )
    }

    pub fn general_pq(p: f64, p_prime: f64) -> Result<Self> {
        Self::new(
            Family::GeneralPQ,
            OperatorParams {
                p,
                p_prime,
                ..Default::default()
            },
        )
    }

    pub fn regularized_pq(p: f64, p_prime: f64, eps: f64) -> Result<Self> {
        Self::new(
            Family::RegularizedPQ,
            OperatorParams {
                p,
                p_prime,
                eps,
                ..Default::default()
            },
        )
    }

    pub fn biased_infinity(a: f64) -> Result<Self> {
        Self::new(
            Family::BiasedInfinity,
            OperatorParams {
                a,
                ..Default::default()
            },
        )
    }

    pub fn biased_infinity_regularized(a: f64, eps1: f64, eps2: f64) -> Result<Self> {
        Self::new(
            Family::BiasedInfinityRegularized,
            OperatorParams {
                a,
                eps1,
                eps2,
                ..Default::default()
            },
        )
    }

    pub fn with_grad_floor(self, grad_floor: f64) -> Result<Self> {
        Self::new(
            self.family,
            OperatorParams {
                grad_floor,
                ..self.params
            },
        )
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn p_prime(&self) -> f64 {
        self.params.p_prime
    }

    pub fn eps(&self) -> f64 {
        self.params.eps
    }

    pub fn eps1(&self) -> f64 {
        self.params.eps1
    }

    pub fn eps2(&self) -> f64 {
        self.params.eps2
    }

    pub fn a(&self) -> f64 {
        self.params.a
    }

    pub fn grad_floor(&self) -> f64 {
        self.params.grad_floor
    }

    /// Defined at ξ = 0 by the formula itself.
    pub fn everywhere_defined(&self) -> bool {
        match self.family {
            Family::RegularizedPQ => self.params.eps > 0.0,
            Family::BiasedInfinityRegularized => self.params.eps1 > 0.0,
            _ => false,
        }
    }

    /// Power of `|ξ|` multiplying the bracket, for the homogeneous families.
    pub fn growth_exponent(&self) -> Option<f64> {
        match self.family {
            Family::Normalized => Some(0.0),
            Family::Variational => Some(self.params.p - 2.0),
            Family::GeneralPQ | Family::RegularizedPQ => Some(self.params.p_prime - 2.0),
            Family::BiasedInfinity | Family::BiasedInfinityRegularized => None,
        }
    }

    /// Whether `A(ξ)` grows without bound as `|ξ| → ∞`.
    pub fn unbounded_growth(&self) -> bool {
        self.growth_exponent().is_some_and(|e| e > 0.0)
    }

    /// Default test exponent `k` of the admissible growth window: `max(4, 2p′/(p′−1))`.
    pub fn default_test_exponent(&self) -> f64 {
        match self.family {
            Family::Variational | Family::GeneralPQ => {
                let q = if self.family == Family::Variational {
                    self.params.p
                } else {
                    self.params.p_prime
                };
                (2.0 * q / (q - 1.0)).max(4.0)
            }
            _ => 4.0,
        }
    }

    /// The spec with one parameter moved by `delta`; `Eps`/`Eps1Eps2` set the
    /// regularization to `delta` (switching to the regularized family).
    pub fn perturbed(&self, axis: PerturbAxis, delta: f64) -> Result<Self> {
        let mut params = self.params;
        let family = match (axis, self.family) {
            (PerturbAxis::P, f) if !f.is_biased() => {
                params.p += delta;
                if f == Family::Variational {
                    params.p_prime = params.p;
                }
                f
            }
            (PerturbAxis::PPrime, f @ (Family::GeneralPQ | Family::RegularizedPQ)) => {
                params.p_prime += delta;
                f
            }
            (PerturbAxis::Eps, Family::RegularizedPQ | Family::GeneralPQ) => {
                params.eps = delta;
                Family::RegularizedPQ
            }
            (PerturbAxis::Eps1Eps2, f) if f.is_biased() => {
                params.eps1 = delta;
                params.eps2 = delta;
                Family::BiasedInfinityRegularized
            }
            (axis, f) => {
                return Err(Error::InvalidSpec(format!(
                    "axis {axis:?} cannot perturb family {}",
                    f.name()
                )))
            }
        };
        Self::new(family, params)
    }

    /// The ε-regularized member used where the gradient is (numerically) singular.
    pub fn regularized_with(&self, eps_num: f64) -> OperatorSpec {
        let mut params = self.params;
        let family = match self.family {
            Family::Normalized => {
                params.p_prime = 2.0;
                params.eps = eps_num;
                Family::RegularizedPQ
            }
            Family::Variational => {
                params.p_prime = params.p;
                params.eps = eps_num;
                Family::RegularizedPQ
            }
            Family::GeneralPQ | Family::RegularizedPQ => {
                params.eps = if self.params.eps > 0.0 {
                    self.params.eps
                } else {
                    eps_num
                };
                Family::RegularizedPQ
            }
            Family::BiasedInfinity | Family::BiasedInfinityRegularized => {
                params.eps1 = if self.params.eps1 > 0.0 {
                    self.params.eps1
                } else {
                    eps_num
                };
                Family::BiasedInfinityRegularized
            }
        };
        // internal use: p′ < 2 is allowed here for regularized singular families
        OperatorSpec { family, params }
    }

    fn check_xi(xi: &[f64]) -> Result<f64> {
        if xi.is_empty() || xi.len() > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "xi must have 1..={MAX_DIM} components, got {}",
                xi.len()
            )));
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("xi not finite: {xi:?}")));
        }
        Ok(xi.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `A(ξ)` as a rank-one form.
    pub fn diffusion_form(&self, xi: &[f64]) -> Result<RankOneForm> {
        let norm = Self::check_xi(xi)?;
        if norm == 0.0 && !self.everywhere_defined() {
            return Err(Error::SingularGradient(xi.to_vec()));
        }
        Ok(self.diffusion_form_unchecked(xi, norm))
    }

    /// `A(ξ)^{1/2}` as a rank-one form.
    pub fn sqrt_form(&self, xi: &[f64]) -> Result<RankOneForm> {
        let norm = Self::check_xi(xi)?;
        if norm == 0.0 && !self.everywhere_defined() {
            return Err(Error::SingularGradient(xi.to_vec()));
        }
        Ok(self.sqrt_form_unchecked(xi, norm))
    }

    pub(crate) fn diffusion_form_unchecked(&self, xi: &[f64], norm: f64) -> RankOneForm {
        let n = xi.len();
        let p = self.params.p;
        let (iso, along) = match self.family {
            Family::Normalized => (1.0, p - 2.0),
            Family::Variational | Family::GeneralPQ => {
                let f = norm.powf(self.growth_exponent().unwrap_or(0.0));
                (f, f * (p - 2.0))
            }
            Family::RegularizedPQ => {
                let eps = self.params.eps;
                let s = norm * norm + eps * eps;
                let f = s.powf(0.5 * (self.params.p_prime - 2.0));
                let along = if norm > 0.0 {
                    f * (p - 2.0) * norm * norm / s
                } else {
                    0.0
                };
                (f, along)
            }
            Family::BiasedInfinity => (0.0, 1.0),
            Family::BiasedInfinityRegularized => {
                let e1 = self.params.eps1;
                let s = norm * norm + e1 * e1;
                let along = if norm > 0.0 { norm * norm / s } else { 0.0 };
                (e1, along)
            }
        };
        RankOneForm::new(n, iso, along, xi, norm)
    }

    pub(crate) fn sqrt_form_unchecked(&self, xi: &[f64], norm: f64) -> RankOneForm {
        let n = xi.len();
        let p = self.params.p;
        let (iso, along) = match self.family {
            Family::Normalized => (1.0, (p - 1.0).sqrt() - 1.0),
            Family::Variational | Family::GeneralPQ => {
                let g = norm.powf(0.5 * self.growth_exponent().unwrap_or(0.0));
                (g, g * ((p - 1.0).sqrt() - 1.0))
            }
            Family::RegularizedPQ => {
                let eps = self.params.eps;
                let s = norm * norm + eps * eps;
                let g = s.powf(0.25 * (self.params.p_prime - 2.0));
                let along = if norm > 0.0 {
                    g * (((norm * norm * (p - 1.0) + eps * eps) / s).sqrt() - 1.0)
                } else {
                    0.0
                };
                (g, along)
            }
            Family::BiasedInfinity => (0.0, 1.0),
            Family::BiasedInfinityRegularized => {
                let e1 = self.params.eps1;
                let s = norm * norm + e1 * e1;
                let along = if norm > 0.0 {
                    (e1 + norm * norm / s).sqrt() - e1.sqrt()
                } else {
                    0.0
                };
                (e1.sqrt(), along)
            }
        };
        RankOneForm::new(n, iso, along, xi, norm)
    }

    /// Continuous extension of `A` to ξ = 0 in dimension `n`, when one exists.
    pub fn extension_at_zero(&self, n: usize) -> Option<RankOneForm> {
        if self.everywhere_defined() {
            let zero = [0.0; MAX_DIM];
            return Some(self.diffusion_form_unchecked(&zero[..n], 0.0));
        }
        let p = self.params.p;
        match self.family {
            Family::BiasedInfinity | Family::BiasedInfinityRegularized => {
                (n == 1).then(|| RankOneForm::isotropic(1, 1.0))
            }
            _ => {
                let e = self.growth_exponent().unwrap_or(0.0);
                if e > 0.0 {
                    Some(RankOneForm::isotropic(n, 0.0))
                } else if e < 0.0 {
                    None
                } else if n == 1 {
                    Some(RankOneForm::isotropic(1, p - 1.0))
                } else if p == 2.0 {
                    Some(RankOneForm::isotropic(n, 1.0))
                } else {
                    None
                }
            }
        }
    }
}

/// `A(ξ)` for the given family member.
pub fn diffusion_matrix(spec: &OperatorSpec, xi: &[f64]) -> Result<SquareMatrix> {
    Ok(spec.diffusion_form(xi)?.to_matrix())
}

/// Closed-form `A(ξ)^{1/2}`.
pub fn sqrt_matrix(spec: &OperatorSpec, xi: &[f64]) -> Result<SquareMatrix> {
    Ok(spec.sqrt_form(xi)?.to_matrix())
}
