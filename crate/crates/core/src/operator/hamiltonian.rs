use std::fmt;
use std::sync::Arc;

use super::{Family, OperatorSpec};
use crate::ScalarFn;

/// First-order term `H(x, t, ξ) = −a·√(|ξ|²+ε₂²) − f(x, t)`.
///
/// With `a = 0` and no source this is the zero Hamiltonian used by every
/// non-biased family.
#[derive(Clone, Default)]
pub struct HamiltonianSpec {
    pub a: f64,
    pub eps2: f64,
    pub source: Option<ScalarFn>,
    /// Lipschitz constant `L_H`; metadata only.
    pub lipschitz: Option<f64>,
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSpec")
            .field("a", &self.a)
            .field("eps2", &self.eps2)
            .field("source", &self.source.as_ref().map(|_| "<fn>"))
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl HamiltonianSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn biased(a: f64, eps2: f64) -> Self {
        Self {
            a,
            eps2,
            ..Self::default()
        }
    }

    /// The first-order term that accompanies `spec` (nonzero only for biased families).
    pub fn for_operator(spec: &OperatorSpec) -> Self {
        match spec.family() {
            Family::BiasedInfinity => Self::biased(spec.a(), 0.0),
            Family::BiasedInfinityRegularized => Self::biased(spec.a(), spec.eps2()),
            _ => Self::zero(),
        }
    }

    pub fn with_source<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        self.source = Some(Arc::new(f));
        self
    }

    pub fn with_source_fn(mut self, f: Option<ScalarFn>) -> Self {
        self.source = f;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.source.is_none()
    }

    pub fn eval(&self, x: &[f64], t: f64, xi: &[f64]) -> f64 {
        let mut h = 0.0;
        if self.a != 0.0 {
            let s: f64 = xi.iter().map(|v| v * v).sum::<f64>() + self.eps2 * self.eps2;
            h -= self.a * s.sqrt();
        }
        if let Some(f) = &self.source {
            h -= f(x, t);
        }
        h
    }
}

pub fn hamiltonian(h: &HamiltonianSpec, x: &[f64], t: f64, xi: &[f64]) -> f64 {
    h.eval(x, t, xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unregularized_bias() {
        let h = HamiltonianSpec::biased(1.0, 0.0);
        assert_eq!(hamiltonian(&h, &[0.0], 0.0, &[1.0, 0.0]), -1.0);
    }

    #[test]
    fn pythagorean_regularization() {
        let h = HamiltonianSpec::biased(1.0, 3.0);
        assert_eq!(hamiltonian(&h, &[0.0], 0.0, &[4.0, 0.0]), -5.0);
    }

    #[test]
    fn source_only() {
        let h = HamiltonianSpec::zero().with_source(|x, t| x[0] * t);
        assert_eq!(hamiltonian(&h, &[2.0], 0.5, &[7.0]), -1.0);
    }

    #[test]
    fn follows_operator_family() {
        let s = OperatorSpec::biased_infinity_regularized(2.0, 0.1, 0.3).unwrap();
        let h = HamiltonianSpec::for_operator(&s);
        assert_eq!((h.a, h.eps2), (2.0, 0.3));
        assert!(HamiltonianSpec::for_operator(&OperatorSpec::normalized(3.0).unwrap()).is_zero());
    }
}
