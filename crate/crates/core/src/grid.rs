//! Uniform 1D/2D node-centered grids, grid functions, stencils and sup norms.
//!
//! Nodes are stored row-major: in 2D the flat index is `i0 * N1 + i1`, so the
//! last axis varies fastest.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

pub const MIN_RESOLUTION: usize = 8;

/// 17 significant digits; round-trips every `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
        }
    }

    pub fn from_name(s: &str) -> Option<Boundary> {
        match s {
            "periodic" => Some(Boundary::Periodic),
            "dirichlet" => Some(Boundary::Dirichlet),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    extent: Vec<(f64, f64)>,
    resolution: Vec<usize>,
    boundary: Boundary,
    spacing: Vec<f64>,
}

impl GridSpec {
    pub fn new(
        extent: Vec<(f64, f64)>,
        resolution: Vec<usize>,
        boundary: Boundary,
    ) -> Result<Self> {
        let dim = extent.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!(
                "grid dim must be 1 or 2, got {dim}"
            )));
        }
        if resolution.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: resolution.len(),
            });
        }
        let mut spacing = Vec::with_capacity(dim);
        for (&(a, b), &n) in extent.iter().zip(&resolution) {
            if n < MIN_RESOLUTION {
                return Err(Error::InvalidInput(format!(
                    "resolution {n} below minimum {MIN_RESOLUTION}"
                )));
            }
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidInput(format!("bad interval [{a}, {b}]")));
            }
            let cells = match boundary {
                Boundary::Periodic => n,
                Boundary::Dirichlet => n - 1,
            };
            spacing.push((b - a) / cells as f64);
        }
        Ok(Self {
            extent,
            resolution,
            boundary,
            spacing,
        })
    }

    pub fn uniform_1d(a: f64, b: f64, n: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![(a, b)], vec![n], boundary)
    }

    pub fn square_2d(a: f64, b: f64, n: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![(a, b), (a, b)], vec![n, n], boundary)
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn extent(&self) -> &[(f64, f64)] {
        &self.extent
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn h_min(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [node, 0]
        } else {
            let n1 = self.resolution[1];
            [node / n1, node % n1]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim() == 1 {
            idx[0]
        } else {
            idx[0] * self.resolution[1] + idx[1]
        }
    }

    /// Physical coordinates of a node (unused trailing entries are zero).
    pub fn coords(&self, node: usize) -> [f64; 2] {
        let idx = self.multi_index(node);
        let mut x = [0.0; 2];
        for axis in 0..self.dim() {
            x[axis] = self.extent[axis].0 + idx[axis] as f64 * self.spacing[axis];
        }
        x
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        if self.boundary == Boundary::Periodic {
            return false;
        }
        let idx = self.multi_index(node);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] + 1 == self.resolution[a])
    }

    /// Neighbor at `offset` along `axis`, wrapping on periodic grids.
    pub fn neighbor(&self, node: usize, axis: usize, offset: isize) -> Option<usize> {
        let mut idx = self.multi_index(node);
        let n = self.resolution[axis] as isize;
        let j = idx[axis] as isize + offset;
        let j = match self.boundary {
            Boundary::Periodic => j.rem_euclid(n),
            Boundary::Dirichlet if (0..n).contains(&j) => j,
            Boundary::Dirichlet => return None,
        };
        idx[axis] = j as usize;
        Some(self.flat_index(idx))
    }

    /// Grid with halved spacing whose node `2i` coincides with coarse node `i`.
    pub fn refined(&self) -> Result<GridSpec> {
        let resolution = self
            .resolution
            .iter()
            .map(|&n| match self.boundary {
                Boundary::Periodic => 2 * n,
                Boundary::Dirichlet => 2 * n - 1,
            })
            .collect();
        GridSpec::new(self.extent.clone(), resolution, self.boundary)
    }

    /// Index on [`GridSpec::refined`] of coarse node `node`.
    pub fn node_on_refined(&self, node: usize, fine: &GridSpec) -> usize {
        let idx = self.multi_index(node);
        fine.flat_index([2 * idx[0], 2 * idx[1]])
    }

    fn header(&self, time: f64) -> String {
        let extent = self
            .extent
            .iter()
            .map(|(a, b)| format!("{},{}", format_f64(*a), format_f64(*b)))
            .collect::<Vec<_>>()
            .join(";");
        let n = self
            .resolution
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "# grid dim={} extent={} N={} boundary={} time={}",
            self.dim(),
            extent,
            n,
            self.boundary.name(),
            format_f64(time)
        )
    }
}

/// Grid function at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    time: f64,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at node {i}")));
        }
        if !(time >= 0.0) || !time.is_finite() {
            return Err(Error::InvalidInput(format!("time must be ≥ 0, got {time}")));
        }
        Ok(Self { grid, values, time })
    }

    /// Sample `f(x)` at every node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &GridSpec, time: f64, f: F) -> Result<Self> {
        let d = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.coords(i)[..d])).collect();
        Self::new(grid.clone(), values, time)
    }

    pub(crate) fn from_parts_unchecked(grid: GridSpec, values: Vec<f64>, time: f64) -> Self {
        Self { grid, values, time }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check_stencil(&self, node: usize) -> Result<()> {
        if node >= self.grid.len() {
            return Err(Error::InvalidInput(format!("node {node} out of range")));
        }
        if self.grid.is_boundary(node) {
            return Err(Error::NoInteriorStencil(node));
        }
        Ok(())
    }

    /// Central-difference gradient.
    pub fn gradient(&self, node: usize) -> Result<Vec<f64>> {
        self.check_stencil(node)?;
        let mut g = [0.0; 2];
        self.gradient_into(node, &mut g);
        Ok(g[..self.grid.dim()].to_vec())
    }

    /// Second differences on the diagonal, 4-point cross stencil off it.
    pub fn hessian(&self, node: usize) -> Result<SquareMatrix> {
        self.check_stencil(node)?;
        Ok(self.hessian_unchecked(node))
    }

    pub(crate) fn gradient_into(&self, node: usize, out: &mut [f64; 2]) {
        let u = &self.values;
        for (axis, o) in out.iter_mut().enumerate().take(self.grid.dim()) {
            let p = self.grid.neighbor(node, axis, 1).expect("interior node");
            let m = self.grid.neighbor(node, axis, -1).expect("interior node");
            *o = (u[p] - u[m]) / (2.0 * self.grid.spacing[axis]);
        }
    }

    /// Central gradient into `out`; returns `sqrt(Σ ((D₊u)² + (D₋u)²)/2)`, which
    /// equals `|∇u| + O(h²)` on smooth data but stays positive at symmetric kinks.
    pub(crate) fn gradient_and_spread(&self, node: usize, out: &mut [f64; 2]) -> f64 {
        let u = &self.values;
        let mut sq = 0.0;
        for (axis, o) in out.iter_mut().enumerate().take(self.grid.dim()) {
            let p = self.grid.neighbor(node, axis, 1).expect("interior node");
            let m = self.grid.neighbor(node, axis, -1).expect("interior node");
            let h = self.grid.spacing[axis];
            let (dp, dm) = ((u[p] - u[node]) / h, (u[node] - u[m]) / h);
            *o = 0.5 * (dp + dm);
            sq += 0.5 * (dp * dp + dm * dm);
        }
        sq.sqrt()
    }

    pub(crate) fn hessian_unchecked(&self, node: usize) -> SquareMatrix {
        let g = &self.grid;
        let u = &self.values;
        let d = g.dim();
        let mut hess = SquareMatrix::zeros(d);
        for axis in 0..d {
            let p = g.neighbor(node, axis, 1).expect("interior node");
            let m = g.neighbor(node, axis, -1).expect("interior node");
            let h = g.spacing[axis];
            hess.set(axis, axis, (u[p] - 2.0 * u[node] + u[m]) / (h * h));
        }
        if d == 2 {
            let step = |n: usize, o0: isize, o1: isize| {
                let a = g.neighbor(n, 0, o0).expect("interior node");
                g.neighbor(a, 1, o1).expect("interior node")
            };
            let cross = (u[step(node, 1, 1)] + u[step(node, -1, -1)]
                - u[step(node, 1, -1)]
                - u[step(node, -1, 1)])
                / (4.0 * g.spacing[0] * g.spacing[1]);
            hess.set(0, 1, cross);
            hess.set(1, 0, cross);
        }
        hess
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(self)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// CSV text: grid header line, then one value per line.
    pub fn to_csv(&self) -> String {
        let mut out = self.grid.header(self.time);
        out.push('\n');
        for v in &self.values {
            let _ = writeln!(out, "{}", format_f64(*v));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))?;
        let (grid, time) = parse_header(header)?;
        let values = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {l:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(grid, values, time)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn parse_header(line: &str) -> Result<(GridSpec, f64)> {
    let body = line
        .strip_prefix("# grid")
        .ok_or_else(|| Error::Parse(format!("missing '# grid' header: {line:?}")))?;
    let (mut dim, mut extent, mut res, mut boundary, mut time) = (None, None, None, None, None);
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
    };
    for tok in body.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header token {tok:?}")))?;
        match key {
            "dim" => {
                dim = Some(
                    val.parse::<usize>()
                        .map_err(|e| Error::Parse(e.to_string()))?,
                )
            }
            "extent" => {
                let mut ext = Vec::new();
                for pair in val.split(';') {
                    let (a, b) = pair
                        .split_once(',')
                        .ok_or_else(|| Error::Parse(format!("bad extent {pair:?}")))?;
                    ext.push((num(a)?, num(b)?));
                }
                extent = Some(ext);
            }
            "N" => {
                res = Some(
                    val.split(',')
                        .map(|s| s.parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "boundary" => {
                boundary = Some(
                    Boundary::from_name(val)
                        .ok_or_else(|| Error::Parse(format!("unknown boundary {val:?}")))?,
                )
            }
            "time" => time = Some(num(val)?),
            other => return Err(Error::Parse(format!("unknown header key {other:?}"))),
        }
    }
    let missing = |k: &str| Error::Parse(format!("header missing {k}"));
    let extent = extent.ok_or_else(|| missing("extent"))?;
    let dim = dim.ok_or_else(|| missing("dim"))?;
    if dim != extent.len() {
        return Err(Error::Parse(format!(
            "dim={dim} disagrees with {} extents",
            extent.len()
        )));
    }
    let grid = GridSpec::new(
        extent,
        res.ok_or_else(|| missing("N"))?,
        boundary.ok_or_else(|| missing("boundary"))?,
    )?;
    Ok((grid, time.ok_or_else(|| missing("time"))?))
}

pub fn sup_norm(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

pub fn sup_diff(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    Ok(f.values
        .iter()
        .zip(&g.values)
        .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn line(n: usize, b: Boundary) -> GridSpec {
        GridSpec::uniform_1d(0.0, 1.0, n, b).unwrap()
    }

    #[test]
    fn spacing_by_boundary() {
        assert_eq!(line(10, Boundary::Periodic).spacing(0), 0.1);
        assert_relative_eq!(
            line(11, Boundary::Dirichlet).spacing(0),
            0.1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::uniform_1d(0.0, 1.0, 7, Boundary::Periodic).is_err());
        assert!(GridSpec::uniform_1d(1.0, 1.0, 16, Boundary::Periodic).is_err());
        assert!(GridSpec::new(vec![(0.0, 1.0); 3], vec![8; 3], Boundary::Periodic).is_err());
        assert!(GridSpec::new(vec![(0.0, 1.0)], vec![8, 8], Boundary::Periodic).is_err());
    }

    #[test]
    fn gradient_exact_on_affine() {
        let g = line(11, Boundary::Dirichlet);
        let f = ScalarField::from_fn(&g, 0.0, |x| 3.0 * x[0]).unwrap();
        for node in 1..10 {
            assert_relative_eq!(f.gradient(node).unwrap()[0], 3.0, epsilon = 1e-13);
        }
        assert!(matches!(f.gradient(0), Err(Error::NoInteriorStencil(0))));
        assert!(matches!(f.hessian(10), Err(Error::NoInteriorStencil(10))));
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let g = GridSpec::square_2d(0.0, 1.0, 9, Boundary::Periodic).unwrap();
        let f = ScalarField::from_fn(&g, 0.0, |_| 2.5).unwrap();
        assert_eq!(f.gradient(0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(f.hessian(40).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn periodic_sine_gradient_at_origin() {
        let g = GridSpec::uniform_1d(0.0, 2.0 * PI, 64, Boundary::Periodic).unwrap();
        let f = ScalarField::from_fn(&g, 0.0, |x| x[0].sin()).unwrap();
        let h = g.spacing(0);
        assert_relative_eq!(f.gradient(0).unwrap()[0], h.sin() / h, epsilon = 1e-14);
        assert_relative_eq!(f.gradient(0).unwrap()[0], 1.0 - h * h / 6.0, epsilon = 1e-6);
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let g = GridSpec::square_2d(-1.0, 1.0, 9, Boundary::Dirichlet).unwrap();
        let xx = ScalarField::from_fn(&g, 0.0, |x| x[0] * x[0]).unwrap();
        let hx = xx.hessian(40).unwrap();
        assert_relative_eq!(hx.get(0, 0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(hx.get(1, 1), 0.0, epsilon = 1e-12);
        assert_relative_eq!(hx.get(0, 1), 0.0, epsilon = 1e-12);
        let xy = ScalarField::from_fn(&g, 0.0, |x| x[0] * x[1]).unwrap();
        let h = xy.hessian(30).unwrap();
        assert_relative_eq!(h.get(0, 1), 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.get(1, 0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.get(0, 0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn second_difference_of_cubic() {
        // nodes at 0, 0.1, ..., 2.0; node 10 sits at x = 1
        let g = GridSpec::uniform_1d(0.0, 2.0, 21, Boundary::Dirichlet).unwrap();
        let f = ScalarField::from_fn(&g, 0.0, |x| x[0].powi(3)).unwrap();
        assert_relative_eq!(f.hessian(10).unwrap().get(0, 0), 6.0, epsilon = 1e-10);
    }

    #[test]
    fn sup_norms() {
        let g = line(16, Boundary::Periodic);
        let two = ScalarField::from_fn(&g, 0.0, |_| 2.0).unwrap();
        assert_eq!(two.sup_norm(), 2.0);
        assert_eq!(sup_diff(&two, &two).unwrap(), 0.0);
        let other = ScalarField::from_fn(&line(17, Boundary::Periodic), 0.0, |_| 2.0).unwrap();
        assert!(matches!(sup_diff(&two, &other), Err(Error::GridMismatch)));

        let g = GridSpec::uniform_1d(0.0, 2.0 * PI, 256, Boundary::Periodic).unwrap();
        let s = ScalarField::from_fn(&g, 0.0, |x| x[0].sin()).unwrap();
        let h = g.spacing(0);
        assert!(s.sup_norm() <= 1.0 && s.sup_norm() >= 1.0 - h * h / 2.0);
    }

    #[test]
    fn csv_header_format() {
        let g = GridSpec::new(
            vec![(0.0, 1.0), (-1.0, 2.0)],
            vec![8, 9],
            Boundary::Dirichlet,
        )
        .unwrap();
        let f = ScalarField::from_fn(&g, 0.25, |x| x[0] - x[1]).unwrap();
        let csv = f.to_csv();
        let first = csv.lines().next().unwrap();
        assert!(first.starts_with("# grid dim=2 extent="));
        assert!(first.contains(" N=8,9 boundary=dirichlet time=2.5"));
        assert_eq!(csv.lines().count(), 1 + 72);
        assert_eq!(ScalarField::from_csv(&csv).unwrap(), f);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(ScalarField::from_csv("").is_err());
        assert!(ScalarField::from_csv("hello\n1\n").is_err());
        let g = line(8, Boundary::Periodic);
        let f = ScalarField::from_fn(&g, 0.0, |_| 1.0).unwrap();
        let truncated: String = f.to_csv().lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(ScalarField::from_csv(&truncated).is_err());
    }

    #[test]
    fn refinement_maps_nodes() {
        let g = GridSpec::square_2d(0.0, 1.0, 9, Boundary::Dirichlet).unwrap();
        let fine = g.refined().unwrap();
        assert_eq!(fine.resolution(), &[17, 17]);
        for node in [0, 10, 40, 80] {
            assert_eq!(g.coords(node), fine.coords(g.node_on_refined(node, &fine)));
        }
        let p = line(8, Boundary::Periodic);
        let pf = p.refined().unwrap();
        assert_relative_eq!(pf.spacing(0), p.spacing(0) / 2.0, epsilon = 1e-16);
    }
}
