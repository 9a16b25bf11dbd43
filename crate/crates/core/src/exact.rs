//! Closed-form solutions with residual checks and sampled sup differences.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ScalarFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExactKind {
    /// `e^{(1−p)t} sin x₀` for the normalized operator.
    HeatMode,
    /// Self-similar solution of `u_t = Δ_p u`.
    Barenblatt,
    /// `|x|^{(p+1)/(p−1)}` solving `Δ_p u = λ_p u^{(p−1)/(p+1)}`.
    RadialElliptic,
    /// Radial solution of `−Δ_p v = c`.
    Torsion,
    /// `|x|^{(p−n)/(p−1)}`, p-harmonic away from the origin.
    Fundamental,
}

impl ExactKind {
    pub const ALL: [ExactKind; 5] = [
        ExactKind::HeatMode,
        ExactKind::Barenblatt,
        ExactKind::RadialElliptic,
        ExactKind::Torsion,
        ExactKind::Fundamental,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExactKind::HeatMode => "heat_mode",
            ExactKind::Barenblatt => "barenblatt",
            ExactKind::RadialElliptic => "radial_elliptic",
            ExactKind::Torsion => "torsion",
            ExactKind::Fundamental => "fundamental",
        }
    }

    pub fn from_name(name: &str) -> Option<ExactKind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_stationary(self) -> bool {
        matches!(
            self,
            ExactKind::RadialElliptic | ExactKind::Torsion | ExactKind::Fundamental
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualMode {
    Analytic,
    /// Central differences with spacing `h` in space and time.
    Discrete {
        h: f64,
    },
}

/// A validated closed-form solution in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    kind: ExactKind,
    p: f64,
    n: usize,
    a: f64,
    c: f64,
}

impl ExactSolution {
    /// `a` is the Barenblatt mass constant, `c` the torsion source; each is ignored elsewhere.
    pub fn new(kind: ExactKind, p: f64, n: usize, a: f64, c: f64) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidSpec(format!("{}: {m}", kind.name())));
        if !(1..=3).contains(&n) {
            return invalid(format!("dimension must be 1..=3, got {n}"));
        }
        if !(p.is_finite() && p > 1.0) {
            return invalid(format!("requires p > 1, got {p}"));
        }
        match kind {
            ExactKind::Barenblatt => {
                let lo = 2.0 * n as f64 / (n as f64 + 1.0);
                if !(p > lo) || p == 2.0 {
                    return invalid(format!("requires p > {lo} and p ≠ 2, got {p}"));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return invalid(format!("requires A > 0, got {a}"));
                }
            }
            ExactKind::Torsion if !(c > 0.0 && c.is_finite()) => {
                return invalid(format!("requires c > 0, got {c}"));
            }
            ExactKind::Fundamental if !(p > n as f64) => {
                return invalid(format!("requires p > n = {n}, got {p}"));
            }
            _ => {}
        }
        Ok(Self { kind, p, n, a, c })
    }

    pub fn heat_mode(p: f64, n: usize) -> Result<Self> {
        Self::new(ExactKind::HeatMode, p, n, 0.0, 0.0)
    }

    pub fn barenblatt(p: f64, n: usize, a: f64) -> Result<Self> {
        Self::new(ExactKind::Barenblatt, p, n, a, 0.0)
    }

    pub fn radial_elliptic(p: f64, n: usize) -> Result<Self> {
        Self::new(ExactKind::RadialElliptic, p, n, 0.0, 0.0)
    }

    pub fn torsion(p: f64, n: usize, c: f64) -> Result<Self> {
        Self::new(ExactKind::Torsion, p, n, 0.0, c)
    }

    pub fn fundamental(p: f64, n: usize) -> Result<Self> {
        Self::new(ExactKind::Fundamental, p, n, 0.0, 0.0)
    }

    /// Same solution with exponent `p` replaced (validated).
    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.kind, p, self.n, self.a, self.c)
    }

    pub fn kind(&self) -> ExactKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Barenblatt `λ_p = n(p−2)+p`.
    pub fn barenblatt_lambda(&self) -> f64 {
        self.n as f64 * (self.p - 2.0) + self.p
    }

    /// Barenblatt `γ_p = ((2−p)/p)·λ_p^{1/(1−p)}`.
    pub fn barenblatt_gamma(&self) -> f64 {
        let p = self.p;
        (2.0 - p) / p * self.barenblatt_lambda().powf(1.0 / (1.0 - p))
    }

    /// Elliptic eigenvalue `(n+1)((p+1)/(p−1))^{p−1}`.
    pub fn elliptic_lambda(&self) -> f64 {
        let p = self.p;
        (self.n as f64 + 1.0) * ((p + 1.0) / (p - 1.0)).powf(p - 1.0)
    }

    /// Radius of the Barenblatt support at time `t` (only when it is compact).
    pub fn free_boundary_radius(&self, t: f64) -> Option<f64> {
        if self.kind != ExactKind::Barenblatt || self.barenblatt_gamma() >= 0.0 {
            return None;
        }
        let alpha = self.p / (self.p - 1.0);
        let s = (self.a / -self.barenblatt_gamma()).powf(1.0 / alpha);
        Some(s * t.powf(1.0 / self.barenblatt_lambda()))
    }

    fn check_point(&self, x: &[f64], t: f64) -> Result<()> {
        if self.kind != ExactKind::HeatMode && x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("bad point x = {x:?}, t = {t}")));
        }
        match self.kind {
            ExactKind::HeatMode if t < 0.0 => {
                Err(Error::InvalidInput(format!("requires t ≥ 0, got {t}")))
            }
            ExactKind::Barenblatt if t <= 0.0 => {
                Err(Error::InvalidInput(format!("requires t > 0, got {t}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check_point(x, t)?;
        Ok(self.eval_unchecked(x, t))
    }

    fn eval_unchecked(&self, x: &[f64], t: f64) -> f64 {
        let p = self.p;
        let r = norm(x);
        match self.kind {
            ExactKind::HeatMode => ((1.0 - p) * t).exp() * x[0].sin(),
            ExactKind::Barenblatt => {
                let lambda = self.barenblatt_lambda();
                let s = r * t.powf(-1.0 / lambda);
                let phi = self.a + self.barenblatt_gamma() * s.powf(p / (p - 1.0));
                if phi <= 0.0 {
                    return 0.0;
                }
                t.powf(-(self.n as f64) / lambda) * phi.powf((p - 1.0) / (p - 2.0))
            }
            ExactKind::RadialElliptic => r.powf((p + 1.0) / (p - 1.0)),
            ExactKind::Torsion => {
                -(p - 1.0) / p
                    * (self.c / self.n as f64).powf(1.0 / (p - 1.0))
                    * r.powf(p / (p - 1.0))
            }
            ExactKind::Fundamental => r.powf((p - self.n as f64) / (p - 1.0)),
        }
    }

    /// The solution as boundary/initial data `g(x, t) = u(x, t + offset)`.
    pub fn as_data(&self, offset: f64) -> ScalarFn {
        let sol = *self;
        Arc::new(move |x: &[f64], t: f64| sol.eval(x, t + offset).unwrap_or(f64::NAN))
    }

    /// Defect of the governing equation at `(x, t)`; points within `clearance`
    /// of the singular set are rejected.
    pub fn residual(&self, x: &[f64], t: f64, mode: ResidualMode, clearance: f64) -> Result<f64> {
        self.check_point(x, t)?;
        let h = match mode {
            ResidualMode::Analytic => 0.0,
            ResidualMode::Discrete { h } if h > 0.0 && h.is_finite() => h,
            ResidualMode::Discrete { h } => {
                return Err(Error::InvalidInput(format!(
                    "stencil spacing must be positive, got {h}"
                )))
            }
        };
        // stencils reach 2h away from the centre
        let delta = clearance.max(2.0 * h);
        let r = norm(x);
        let singular = match self.kind {
            ExactKind::HeatMode => false,
            ExactKind::Barenblatt => {
                r < delta
                    || self
                        .free_boundary_radius(t)
                        .is_some_and(|rs| (r - rs).abs() < delta)
            }
            _ => r < delta,
        };
        if singular {
            return Err(Error::SingularPoint(format!(
                "{} at x = {x:?}, t = {t} is within {delta} of its singular set",
                self.kind.name()
            )));
        }
        match mode {
            ResidualMode::Analytic => Ok(self.analytic_residual(x, t)),
            ResidualMode::Discrete { h } => Ok(self.discrete_residual(x, t, h)),
        }
    }

    fn radial_plap(&self, r: f64, ur: f64, urr: f64) -> f64 {
        let p = self.p;
        ur.abs().powf(p - 2.0) * ((p - 1.0) * urr + (self.n as f64 - 1.0) * ur / r)
    }

    fn analytic_residual(&self, x: &[f64], t: f64) -> f64 {
        let p = self.p;
        let r = norm(x);
        match self.kind {
            ExactKind::HeatMode => {
                let u = self.eval_unchecked(x, t);
                // u_t − (p−1)u_{x₀x₀}
                (1.0 - p) * u - (p - 1.0) * -u
            }
            ExactKind::Barenblatt => {
                let lambda = self.barenblatt_lambda();
                let (k, m) = (self.n as f64 / lambda, 1.0 / lambda);
                let (alpha, beta) = (p / (p - 1.0), (p - 1.0) / (p - 2.0));
                let gamma = self.barenblatt_gamma();
                let s = r * t.powf(-m);
                let phi = self.a + gamma * s.powf(alpha);
                if phi <= 0.0 {
                    return 0.0;
                }
                let tk = t.powf(-k);
                let ur = tk
                    * beta
                    * phi.powf(beta - 1.0)
                    * gamma
                    * alpha
                    * s.powf(alpha - 1.0)
                    * t.powf(-m);
                let urr = tk
                    * t.powf(-2.0 * m)
                    * beta
                    * gamma
                    * alpha
                    * ((beta - 1.0)
                        * phi.powf(beta - 2.0)
                        * gamma
                        * alpha
                        * s.powf(2.0 * alpha - 2.0)
                        + phi.powf(beta - 1.0) * (alpha - 1.0) * s.powf(alpha - 2.0));
                let ut = t.powf(-k - 1.0)
                    * (-k * phi.powf(beta)
                        - m * beta * gamma * alpha * phi.powf(beta - 1.0) * s.powf(alpha));
                ut - self.radial_plap(r, ur, urr)
            }
            ExactKind::RadialElliptic => {
                let e = (p + 1.0) / (p - 1.0);
                let ur = e * r.powf(e - 1.0);
                let urr = e * (e - 1.0) * r.powf(e - 2.0);
                let u = r.powf(e);
                self.elliptic_lambda() * u.powf((p - 1.0) / (p + 1.0))
                    - self.radial_plap(r, ur, urr)
            }
            ExactKind::Torsion => {
                let kappa = (self.c / self.n as f64).powf(1.0 / (p - 1.0));
                let e = 1.0 / (p - 1.0);
                let ur = -kappa * r.powf(e);
                let urr = -kappa * e * r.powf(e - 1.0);
                -self.radial_plap(r, ur, urr) - self.c
            }
            ExactKind::Fundamental => {
                let b = (p - self.n as f64) / (p - 1.0);
                let ur = b * r.powf(b - 1.0);
                let urr = b * (b - 1.0) * r.powf(b - 2.0);
                self.radial_plap(r, ur, urr)
            }
        }
    }

    /// Stencil version of the operator in Cartesian coordinates.
    fn discrete_residual(&self, x: &[f64], t: f64, h: f64) -> f64 {
        let d = x.len();
        let f = |y: &[f64]| self.eval_unchecked(y, t);
        let mut y = x.to_vec();
        let u0 = f(x);
        let mut grad = [0.0; 3];
        let mut hess = [[0.0; 3]; 3];
        for i in 0..d {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let um = f(&y);
            y[i] = x[i];
            grad[i] = (up - um) / (2.0 * h);
            hess[i][i] = (up - 2.0 * u0 + um) / (h * h);
            for j in 0..i {
                let mut corner = |si: f64, sj: f64| {
                    y[i] = x[i] + si * h;
                    y[j] = x[j] + sj * h;
                    let v = f(&y);
                    y[i] = x[i];
                    y[j] = x[j];
                    v
                };
                let c =
                    (corner(1.0, 1.0) + corner(-1.0, -1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0))
                        / (4.0 * h * h);
                hess[i][j] = c;
                hess[j][i] = c;
            }
        }
        let g2: f64 = grad[..d].iter().map(|g| g * g).sum();
        let lap: f64 = (0..d).map(|i| hess[i][i]).sum();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += hess[i][j] * grad[i] * grad[j];
            }
        }
        let p = self.p;
        let normalized = if g2 > 0.0 {
            lap + (p - 2.0) * quad / g2
        } else {
            lap + (p - 2.0) * hess[0][0]
        };
        let plap = || g2.sqrt().powf(p - 2.0) * normalized;
        let ut = || {
            let g = |s: f64| self.eval_unchecked(x, s);
            if t >= h && (self.kind != ExactKind::Barenblatt || t > h) {
                (g(t + h) - g(t - h)) / (2.0 * h)
            } else {
                (-3.0 * g(t) + 4.0 * g(t + h) - g(t + 2.0 * h)) / (2.0 * h)
            }
        };
        match self.kind {
            ExactKind::HeatMode => ut() - normalized,
            ExactKind::Barenblatt => ut() - plap(),
            ExactKind::RadialElliptic => {
                self.elliptic_lambda() * u0.powf((p - 1.0) / (p + 1.0)) - plap()
            }
            ExactKind::Torsion => -plap() - self.c,
            ExactKind::Fundamental => plap(),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sample set covering a space-time region.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSampler {
    points: Vec<Vec<f64>>,
    times: Vec<f64>,
}

impl DomainSampler {
    pub const DEFAULT_SPACE: usize = 10_000;
    pub const DEFAULT_TIME: usize = 100;

    /// Uniform lattice of about `space_count` points on the box times
    /// `time_count` uniform times on `[t0, t1]` (both ends included).
    pub fn uniform(
        extent: &[(f64, f64)],
        (t0, t1): (f64, f64),
        space_count: usize,
        time_count: usize,
    ) -> Result<Self> {
        if extent.is_empty() || extent.len() > 3 || space_count == 0 || time_count == 0 {
            return Err(Error::InvalidInput(
                "sampler needs 1..=3 axes and positive counts".into(),
            ));
        }
        if extent.iter().any(|(a, b)| !(b >= a)) || !(t1 >= t0) {
            return Err(Error::InvalidInput("sampler ranges must be ordered".into()));
        }
        let d = extent.len();
        let per_axis = ((space_count as f64).powf(1.0 / d as f64).round() as usize).max(1);
        let lin = |lo: f64, hi: f64, k: usize, m: usize| {
            if m == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * k as f64 / (m - 1) as f64
            }
        };
        let total = per_axis.pow(d as u32);
        let points = (0..total)
            .map(|mut flat| {
                let mut x = vec![0.0; d];
                for axis in (0..d).rev() {
                    let k = flat % per_axis;
                    flat /= per_axis;
                    x[axis] = lin(extent[axis].0, extent[axis].1, k, per_axis);
                }
                x
            })
            .collect();
        let times = (0..time_count)
            .map(|k| lin(t0, t1, k, time_count))
            .collect();
        Ok(Self { points, times })
    }

    /// Default density: 10⁴ space points × 10² times.
    pub fn default_for(extent: &[(f64, f64)], times: (f64, f64)) -> Result<Self> {
        Self::uniform(extent, times, Self::DEFAULT_SPACE, Self::DEFAULT_TIME)
    }

    /// Explicit sample points and times.
    pub fn from_points(points: Vec<Vec<f64>>, times: Vec<f64>) -> Self {
        Self { points, times }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Max over the samples of `|u₁ − u₂|` for two members of one solution family.
pub fn sup_diff_closed_form(
    a: &ExactSolution,
    b: &ExactSolution,
    sampler: &DomainSampler,
) -> Result<f64> {
    if a.kind != b.kind || a.n != b.n {
        return Err(Error::InvalidInput(format!(
            "cannot compare {} (n={}) with {} (n={})",
            a.kind.name(),
            a.n,
            b.kind.name(),
            b.n
        )));
    }
    for x in sampler.points.iter().take(1) {
        for &t in &sampler.times {
            a.check_point(x, t)?;
        }
    }
    let nt = sampler.times.len();
    let m = exec::max_over(Execution::default(), sampler.points.len() * nt, |k| {
        let x = &sampler.points[k / nt];
        let t = sampler.times[k % nt];
        (a.eval_unchecked(x, t) - b.eval_unchecked(x, t)).abs()
    });
    Ok(m.max(0.0))
}

/// Sampler over one period of the heat mode on `[0, T]`.
pub fn heat_mode_sampler(horizon: f64) -> Result<DomainSampler> {
    DomainSampler::default_for(&[(0.0, 2.0 * PI)], (0.0, horizon))
}
