//! Piecewise-(bi)linear densities on a node lattice: the common currency
//! for sampling, cell masses and marginal distribution functions.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::wavefunction::Wavefunction;

/// Node positions `lo + j h`, `j = 0..nodes`, along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAxis {
    pub lo: f64,
    pub h: f64,
    pub nodes: usize,
}

impl NodeAxis {
    pub fn new(lo: f64, hi: f64, segments: usize) -> Result<Self> {
        if !(hi > lo) || segments == 0 {
            return Err(Error::param("axis", "need lo < hi and at least one segment"));
        }
        Ok(NodeAxis { lo, h: (hi - lo) / segments as f64, nodes: segments + 1 })
    }

    /// The node lattice of a simulation grid axis: both walls on Dirichlet
    /// axes, the stored points on periodic ones.
    pub fn of_grid(a: &crate::grid::Axis) -> Self {
        let h = a.spacing();
        let nodes = match a.boundary {
            Boundary::Dirichlet => a.n + 1,
            Boundary::Periodic => a.n,
        };
        NodeAxis { lo: a.lo, h, nodes }
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.lo + (self.nodes - 1) as f64 * self.h
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.h
    }

    #[inline]
    pub fn segments(&self) -> usize {
        self.nodes - 1
    }

    /// Segment index and fraction for `x`, clamped to the lattice.
    #[inline]
    fn locate(&self, x: f64) -> (usize, f64) {
        let u = ((x - self.lo) / self.h).clamp(0.0, self.segments() as f64);
        let j = (u.floor() as usize).min(self.segments() - 1);
        (j, u - j as f64)
    }
}

/// A nonnegative density linear along each axis between nodes, normalized
/// to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    axes: Vec<NodeAxis>,
    /// Row-major node values.
    values: Vec<f64>,
    /// 1D: cumulative segment masses. 2D: cumulative x-segment masses.
    cum: Vec<f64>,
    /// 2D only: per node row, cumulative y-segment masses (unnormalized).
    row_cum: Vec<f64>,
}

impl TabulatedDensity {
    /// Normalizes `values` (one per node, row-major) to unit mass.
    pub fn new(axes: Vec<NodeAxis>, mut values: Vec<f64>) -> Result<Self> {
        let len: usize = axes.iter().map(|a| a.nodes).product();
        if axes.is_empty() || axes.len() > 2 || values.len() != len {
            return Err(Error::GridMismatch(format!("{} densities for {} nodes", values.len(), len)));
        }
        if axes.iter().any(|a| a.nodes < 2) {
            return Err(Error::param("axes", "need at least two nodes per axis"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("density", "values must be finite and nonnegative"));
        }
        let mut d = TabulatedDensity { axes, values: Vec::new(), cum: Vec::new(), row_cum: Vec::new() };
        let total = d.raw_mass(&values);
        if !(total > 0.0) {
            return Err(Error::param("density", "not normalizable (zero mass)"));
        }
        values.iter_mut().for_each(|v| *v /= total);
        d.values = values;
        d.build_tables();
        Ok(d)
    }

    /// Samples `f` at every node.
    pub fn from_fn(axes: Vec<NodeAxis>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = match axes.as_slice() {
            [a] => (0..a.nodes).map(|i| f(&[a.node(i)])).collect(),
            [a, b] => {
                let mut v = Vec::with_capacity(a.nodes * b.nodes);
                for i in 0..a.nodes {
                    for j in 0..b.nodes {
                        v.push(f(&[a.node(i), b.node(j)]));
                    }
                }
                v
            }
            _ => return Err(Error::param("axes", "need 1 or 2 axes")),
        };
        Self::new(axes, values)
    }

    /// `|psi|^2` on the wavefunction's node lattice.
    pub fn born(psi: &Wavefunction) -> Result<Self> {
        Self::from_grid_values(psi.grid(), &psi.density())
    }

    /// Grid-point values extended onto the node lattice (zero on the far
    /// Dirichlet walls).
    pub fn from_grid_values(grid: &Grid, values: &[f64]) -> Result<Self> {
        let axes: Vec<NodeAxis> = grid.axes().iter().map(NodeAxis::of_grid).collect();
        let vals = match grid.dim() {
            1 => {
                let mut v = values.to_vec();
                v.resize(axes[0].nodes, 0.0);
                v
            }
            _ => {
                let ny = grid.axis(1).n;
                let (ax, ay) = (axes[0].nodes, axes[1].nodes);
                let mut v = vec![0.0; ax * ay];
                for i in 0..grid.axis(0).n {
                    v[i * ay..i * ay + ny].copy_from_slice(&values[i * ny..(i + 1) * ny]);
                }
                v
            }
        };
        Self::new(axes, vals)
    }

    fn raw_mass(&self, values: &[f64]) -> f64 {
        match self.axes.as_slice() {
            [a] => trapezoid(values) * a.h,
            [a, b] => {
                let rows: Vec<f64> = values.chunks_exact(b.nodes).map(trapezoid).collect();
                trapezoid(&rows) * a.h * b.h
            }
            _ => unreachable!(),
        }
    }

    fn build_tables(&mut self) {
        match self.axes.clone().as_slice() {
            [a] => {
                self.cum = cumulative(&self.values, a.h);
            }
            [a, b] => {
                let ny = b.nodes;
                let mut row_cum = Vec::with_capacity(self.values.len());
                let mut marg = Vec::with_capacity(a.nodes);
                for row in self.values.chunks_exact(ny) {
                    let c = cumulative(row, b.h);
                    marg.push(*c.last().expect("nonempty"));
                    row_cum.extend(c);
                }
                self.row_cum = row_cum;
                self.cum = cumulative(&marg, a.h);
            }
            _ => unreachable!(),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[NodeAxis] {
        &self.axes
    }

    /// Normalized node values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated density at `x` (zero outside the lattice).
    pub fn at(&self, x: &[f64]) -> f64 {
        if self.axes.iter().zip(x).any(|(a, &xi)| xi < a.lo || xi > a.hi()) {
            return 0.0;
        }
        match self.axes.as_slice() {
            [a] => {
                let (j, s) = a.locate(x[0]);
                (1.0 - s) * self.values[j] + s * self.values[j + 1]
            }
            [a, b] => {
                let (i, s) = a.locate(x[0]);
                let (j, r) = b.locate(x[1]);
                let v = |i: usize, j: usize| self.values[i * b.nodes + j];
                (1.0 - s) * ((1.0 - r) * v(i, j) + r * v(i, j + 1)) + s * ((1.0 - r) * v(i + 1, j) + r * v(i + 1, j + 1))
            }
            _ => unreachable!(),
        }
    }

    /// Mass of the box between node indices `[i0, i1) x [j0, j1)` (segment
    /// units), exact for the interpolant.
    pub fn box_mass(&self, range: &[(usize, usize)]) -> f64 {
        match self.axes.as_slice() {
            [a] => trapezoid(&self.values[range[0].0..=range[0].1]) * a.h,
            [a, b] => {
                let rows: Vec<f64> = (range[0].0..=range[0].1)
                    .map(|i| trapezoid(&self.values[i * b.nodes + range[1].0..=i * b.nodes + range[1].1]))
                    .collect();
                trapezoid(&rows) * a.h * b.h
            }
            _ => unreachable!(),
        }
    }

    /// Distribution function of a 1D density at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        assert_eq!(self.dim(), 1, "cdf of a 1D density; take a marginal first");
        let a = &self.axes[0];
        if x <= a.lo {
            return 0.0;
        }
        if x >= a.hi() {
            return 1.0;
        }
        let (j, s) = a.locate(x);
        let (f0, f1) = (self.values[j], self.values[j + 1]);
        (self.cum[j] + a.h * (f0 * s + 0.5 * (f1 - f0) * s * s)).min(1.0)
    }

    /// Marginal density along axis `d`.
    pub fn marginal(&self, d: usize) -> TabulatedDensity {
        if self.dim() == 1 {
            return self.clone();
        }
        TabulatedDensity::new(vec![self.axes[d]], self.marginal_nodes(d)).expect("marginal of a valid density")
    }

    /// Marginal distribution function along axis `d` at `x`. Builds the
    /// marginal on every call; use `marginal` for repeated queries.
    pub fn marginal_cdf(&self, d: usize, x: f64) -> f64 {
        self.marginal(d).cdf(x)
    }

    /// Marginal density at the nodes of axis `d`.
    pub fn marginal_nodes(&self, d: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [_] => self.values.clone(),
            [a, b] => {
                if d == 0 {
                    self.values.chunks_exact(b.nodes).map(|r| trapezoid(r) * b.h).collect()
                } else {
                    (0..b.nodes)
                        .map(|j| {
                            let col: Vec<f64> = (0..a.nodes).map(|i| self.values[i * b.nodes + j]).collect();
                            trapezoid(&col) * a.h
                        })
                        .collect()
                }
            }
            _ => unreachable!(),
        }
    }

    /// Draws one point; `x` receives the coordinates.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) {
        match self.axes.as_slice() {
            [a] => {
                x[0] = sample_linear(&self.cum, &self.values, a, rng.random::<f64>());
            }
            [a, b] => {
                let ny = b.nodes;
                let marg: &[f64] = &self.cum;
                // marginal node values are the last entries of the row tables
                let mv = |i: usize| self.row_cum[i * ny + ny - 1];
                let u: f64 = rng.random();
                let target = u * marg[marg.len() - 1];
                let i = upper_segment(marg, target);
                let (f0, f1) = (mv(i), mv(i + 1));
                let s = solve_linear_segment(f0, f1, (target - marg[i]) / a.h);
                x[0] = a.node(i) + s * a.h;
                // conditional along y: linear blend of the two node rows
                let r0 = &self.row_cum[i * ny..(i + 1) * ny];
                let r1 = &self.row_cum[(i + 1) * ny..(i + 2) * ny];
                let blend = |j: usize| (1.0 - s) * r0[j] + s * r1[j];
                let total = blend(ny - 1);
                let target = rng.random::<f64>() * total;
                let (mut lo, mut hi) = (0usize, ny - 1);
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if blend(mid) <= target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let v = |row: usize, j: usize| self.values[row * ny + j];
                let g0 = (1.0 - s) * v(i, lo) + s * v(i + 1, lo);
                let g1 = (1.0 - s) * v(i, lo + 1) + s * v(i + 1, lo + 1);
                let r = solve_linear_segment(g0, g1, (target - blend(lo)) / b.h);
                x[1] = b.node(lo) + r * b.h;
            }
            _ => unreachable!(),
        }
    }
}

fn trapezoid(v: &[f64]) -> f64 {
    match v.len() {
        0 | 1 => 0.0,
        n => v[1..n - 1].iter().sum::<f64>() + 0.5 * (v[0] + v[n - 1]),
    }
}

/// `c[j] = integral up to node j` of the linear interpolant of `v`.
fn cumulative(v: &[f64], h: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    c.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        c.push(acc);
    }
    c
}

/// Segment `j` with `c[j] <= target < c[j+1]`, skipping empty segments.
fn upper_segment(c: &[f64], target: f64) -> usize {
    let last = c.len() - 2;
    let j = c.partition_point(|&v| v <= target).saturating_sub(1).min(last);
    // never land in a zero-mass segment
    let mut k = j;
    while k < last && c[k + 1] <= c[k] {
        k += 1;
    }
    while k > 0 && c[k + 1] <= c[k] {
        k -= 1;
    }
    k
}

/// `s` in `[0, 1]` with `f0 s + (f1 - f0) s^2 / 2 = m`, `m` in units of `h`.
#[inline]
fn solve_linear_segment(f0: f64, f1: f64, m: f64) -> f64 {
    let df = f1 - f0;
    let total = 0.5 * (f0 + f1);
    if total <= 0.0 {
        return 0.5;
    }
    let m = m.clamp(0.0, total);
    let s = if df.abs() < 1e-12 * (f0.abs() + f1.abs()) {
        m / f0
    } else {
        // stable root of 0.5 df s^2 + f0 s - m = 0
        let disc = (f0 * f0 + 2.0 * df * m).max(0.0);
        let den = f0 + disc.sqrt();
        if den > 0.0 {
            2.0 * m / den
        } else {
            0.0
        }
    };
    s.clamp(0.0, 1.0)
}

fn sample_linear(cum: &[f64], values: &[f64], a: &NodeAxis, u: f64) -> f64 {
    let target = u * cum[cum.len() - 1];
    let j = upper_segment(cum, target);
    let s = solve_linear_segment(values[j], values[j + 1], (target - cum[j]) / a.h);
    a.node(j) + s * a.h
}
