//! Square-root closeness `‖A_ε(ξ)^{1/2} − A_0(ξ)^{1/2}‖ ≤ c_A ε^α (1+|ξ|^β)` and
//! the matching first-order bound `|H_ε − H_0| ≤ c_H ε^γ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HamiltonianSpec, OperatorSpec, PerturbAxis};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Params {
    pub alpha: f64,
    pub beta: f64,
    pub c_a: f64,
    /// Test exponent `k` of the admissible growth window.
    pub k: f64,
}

impl C1Params {
    pub fn new(alpha: f64, beta: f64, c_a: f64, k: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "alpha must be > 0, got {alpha}"
            )));
        }
        if !(k > 2.0) {
            return Err(Error::InvalidInput(format!("k must be > 2, got {k}")));
        }
        if !(c_a >= 0.0) {
            return Err(Error::InvalidInput(format!("c_A must be ≥ 0, got {c_a}")));
        }
        let lower = (2.0 - k) / (2.0 * (k - 1.0));
        if !(beta > lower) {
            return Err(Error::InvalidInput(format!(
                "beta = {beta} must exceed (2−k)/(2(k−1)) = {lower}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            c_a,
            k,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C2Params {
    pub gamma: f64,
    pub c_h: f64,
}

/// Sample gradients: log-spaced magnitudes times unit directions.
#[derive(Debug, Clone, PartialEq)]
pub struct XiGrid {
    pub magnitudes: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl XiGrid {
    /// `count` magnitudes log-spaced on `[lo, hi]`, and the coordinate axes plus
    /// `extra_dirs` seeded random directions in ℝⁿ (both signs on the line).
    pub fn log_spaced(
        n: usize,
        lo: f64,
        hi: f64,
        count: usize,
        extra_dirs: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidInput(format!("dimension {n} not in 1..=3")));
        }
        if !(lo > 0.0 && hi >= lo && count >= 1) {
            return Err(Error::InvalidInput(
                "magnitudes need 0 < lo ≤ hi and count ≥ 1".into(),
            ));
        }
        let magnitudes = if count == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        };
        let mut directions = Vec::new();
        if n == 1 {
            directions.push(vec![1.0]);
            directions.push(vec![-1.0]);
        } else {
            for axis in 0..n {
                let mut e = vec![0.0; n];
                e[axis] = 1.0;
                directions.push(e);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while directions.len() < n + extra_dirs {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-3 {
                    directions.push(v.iter().map(|x| x / norm).collect());
                }
            }
        }
        Ok(Self {
            magnitudes,
            directions,
        })
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.magnitudes.len() * self.directions.len());
        for &m in &self.magnitudes {
            for d in &self.directions {
                out.push(d.iter().map(|x| x * m).collect());
            }
        }
        out
    }
}

/// Spectral norm of `A_a(ξ)^{1/2} − A_b(ξ)^{1/2}`; closed form from the shared
/// rank-one structure.
pub fn c1_gap(a: &OperatorSpec, b: &OperatorSpec, xi: &[f64]) -> Result<f64> {
    let sa = a.sqrt_form(xi)?;
    let sb = b.sqrt_form(xi)?;
    Ok(sa.diff_norm(&sb))
}

#[derive(Debug, Clone, PartialEq)]
pub struct C1Report {
    pub max_ratio: f64,
    pub worst_xi: Vec<f64>,
    pub worst_eps: f64,
    pub pass: bool,
}

/// Scan `gap / (ε^α (1+|ξ|^β))` over all perturbations and sample gradients.
pub fn c1_certify(
    base: &OperatorSpec,
    axis: PerturbAxis,
    eps_list: &[f64],
    xi_grid: &XiGrid,
    candidate: &C1Params,
) -> Result<C1Report> {
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput(
            "ε list must be nonempty and positive".into(),
        ));
    }
    if xi_grid.magnitudes.is_empty()
        || xi_grid.directions.is_empty()
        || xi_grid.magnitudes.iter().any(|m| !(*m > 0.0))
    {
        return Err(Error::InvalidInput(
            "xi grid must be nonempty with positive magnitudes".into(),
        ));
    }
    let mut report = C1Report {
        max_ratio: 0.0,
        worst_xi: Vec::new(),
        worst_eps: eps_list[0],
        pass: true,
    };
    for &eps in eps_list {
        let perturbed = base.perturbed(axis, eps)?;
        let scale = eps.powf(candidate.alpha);
        for &m in &xi_grid.magnitudes {
            let weight = scale * (1.0 + m.powf(candidate.beta));
            for d in &xi_grid.directions {
                let xi: Vec<f64> = d.iter().map(|x| x * m).collect();
                let ratio = c1_gap(&perturbed, base, &xi)? / weight;
                if ratio > report.max_ratio || report.worst_xi.is_empty() {
                    report.max_ratio = ratio;
                    report.worst_xi = xi;
                    report.worst_eps = eps;
                }
            }
        }
    }
    report.pass = report.max_ratio <= candidate.c_a;
    Ok(report)
}

/// `max |H_a − H_b|` over gradient samples and space-time points.
pub fn c2_gap(
    a: &HamiltonianSpec,
    b: &HamiltonianSpec,
    xis: &[Vec<f64>],
    points: &[(Vec<f64>, f64)],
) -> Result<f64> {
    if xis.is_empty() || points.is_empty() {
        return Err(Error::InvalidInput("c2_gap needs nonempty grids".into()));
    }
    let mut gap: f64 = 0.0;
    for (x, t) in points {
        for xi in xis {
            gap = gap.max((a.eval(x, *t, xi) - b.eval(x, *t, xi)).abs());
        }
    }
    Ok(gap)
}
