//! Shock curve representation and the body-fitted polar grid over the
//! subsonic domain.
//!
//! The grid maps `(s, theta)` in `[0, 1] x [0, 2pi)` onto the domain through
//! `r = s * R_b(theta)`, where `R_b` follows the shock between `P3` and `P1`
//! and the sonic circle elsewhere. The angular lattice is anchored at
//! `3pi/2` so that `P2` is always a grid node.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, PI};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetryMode {
    /// Right half `theta in [3pi/2, 5pi/2]` with even reflection across the `eta` axis.
    Half,
    /// Whole disk, periodic in `theta`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Interior,
    Sonic,
    Shock,
    SymmetryAxis,
    Pole,
}

/// Sampled free boundary `r(theta)` on `[theta3, theta1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockCurve {
    pub thetas: Vec<f64>,
    pub r: Vec<f64>,
    pub rprime: Vec<f64>,
    /// Samples where the shock ODE was clamped (`r^2 <= pbar`).
    pub frozen: Vec<bool>,
}

impl ShockCurve {
    /// Builds the symmetric curve from the right branch, given on
    /// `thetas[0] = 3pi/2 < ... < thetas[last] = theta1`.
    pub fn from_right_branch(thetas: &[f64], r: &[f64], rprime: &[f64], frozen: &[bool]) -> Self {
        let n = thetas.len();
        let mut out = ShockCurve {
            thetas: Vec::with_capacity(2 * n - 1),
            r: Vec::with_capacity(2 * n - 1),
            rprime: Vec::with_capacity(2 * n - 1),
            frozen: Vec::with_capacity(2 * n - 1),
        };
        for k in (1..n).rev() {
            out.thetas.push(3.0 * PI - thetas[k]);
            out.r.push(r[k]);
            out.rprime.push(-rprime[k]);
            out.frozen.push(frozen[k]);
        }
        out.thetas.extend_from_slice(thetas);
        out.r.extend_from_slice(r);
        out.rprime.extend_from_slice(rprime);
        out.frozen.extend_from_slice(frozen);
        // The P2 sample has zero slope on a symmetric curve.
        out.rprime[n - 1] = 0.0;
        out
    }

    /// Index of the sample at `3pi/2` on a curve built by [`Self::from_right_branch`].
    pub fn p2_index(&self) -> usize {
        self.thetas.len() / 2
    }

    pub fn theta1(&self) -> f64 {
        *self.thetas.last().unwrap()
    }

    pub fn theta3(&self) -> f64 {
        self.thetas[0]
    }

    pub fn r_at_p2(&self) -> f64 {
        self.r[self.p2_index()]
    }

    pub fn right_thetas(&self) -> &[f64] {
        &self.thetas[self.p2_index()..]
    }

    pub fn right_r(&self) -> &[f64] {
        &self.r[self.p2_index()..]
    }

    pub fn right_rprime(&self) -> &[f64] {
        &self.rprime[self.p2_index()..]
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen.iter().filter(|&&f| f).count()
    }

    /// Cartesian image of every sample.
    pub fn cartesian(&self) -> Vec<[f64; 2]> {
        self.thetas
            .iter()
            .zip(&self.r)
            .map(|(&t, &r)| [r * math::cos(t), r * math::sin(t)])
            .collect()
    }

    /// Checks sample ordering, the endpoint anchors and the sign pattern of
    /// the slope.
    pub fn validate(&self, r1: f64, r2: f64) -> Result<(), Error> {
        let n = self.thetas.len();
        if n < 3 || self.r.len() != n || self.rprime.len() != n || self.frozen.len() != n {
            return Err(Error::Geometry("shock samples have inconsistent lengths".into()));
        }
        if self.thetas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Geometry("shock angles must increase strictly".into()));
        }
        if !(self.theta3() < 1.5 * PI && 1.5 * PI < self.theta1()) {
            return Err(Error::Geometry("shock must span 3pi/2".into()));
        }
        for (&a, &b) in [(&self.r[0], &r1), (&self.r[n - 1], &r1)] {
            if math::abs(a - b) > 1e-12 {
                return Err(Error::Geometry(format!("shock endpoint radius {a} differs from r1 = {b}")));
            }
        }
        let tol = 1e-12;
        for (k, &r) in self.r.iter().enumerate() {
            if !(r >= r2 - tol && r <= r1 + tol) {
                return Err(Error::Geometry(format!(
                    "shock radius {r} at theta = {} outside [r2, r1]",
                    self.thetas[k]
                )));
            }
        }
        for (&t, &rp) in self.thetas.iter().zip(&self.rprime) {
            let bad = if t > 1.5 * PI { rp < -tol } else if t < 1.5 * PI { rp > tol } else { rp != 0.0 };
            if bad {
                return Err(Error::Geometry(format!("shock slope {rp} has the wrong sign at theta = {t}")));
            }
        }
        Ok(())
    }

    /// Monotone cubic Hermite interpolation of `(r, r')` at `theta`.
    pub fn interp(&self, theta: f64) -> Result<(f64, f64), Error> {
        interp_shock(self, theta)
    }
}

/// Hermite cubic through the stored radii and slopes. Slopes are limited per
/// interval (Fritsch-Carlson) so the interpolant stays monotone wherever the
/// samples are.
pub fn interp_shock(shock: &ShockCurve, theta: f64) -> Result<(f64, f64), Error> {
    let t = &shock.thetas;
    let n = t.len();
    let eps = 1e-12 * (1.0 + math::abs(t[n - 1]));
    if !(theta >= t[0] - eps && theta <= t[n - 1] + eps) {
        return Err(Error::Geometry(format!(
            "theta = {theta} outside the shock range [{}, {}]",
            t[0],
            t[n - 1]
        )));
    }
    let theta = theta.clamp(t[0], t[n - 1]);
    let k = match t.binary_search_by(|x| x.partial_cmp(&theta).unwrap()) {
        Ok(k) => return Ok((shock.r[k], shock.rprime[k])),
        Err(k) => k - 1,
    };
    let h = t[k + 1] - t[k];
    let (y0, y1) = (shock.r[k], shock.r[k + 1]);
    let delta = (y1 - y0) / h;
    let (mut m0, mut m1) = (shock.rprime[k], shock.rprime[k + 1]);
    if delta == 0.0 {
        m0 = 0.0;
        m1 = 0.0;
    } else {
        if m0 * delta < 0.0 {
            m0 = 0.0;
        }
        if m1 * delta < 0.0 {
            m1 = 0.0;
        }
        let (a, b) = (m0 / delta, m1 / delta);
        let q = a * a + b * b;
        if q > 9.0 {
            let tau = 3.0 / math::sqrt(q);
            m0 *= tau;
            m1 *= tau;
        }
    }
    let u = (theta - t[k]) / h;
    let (u2, u3) = (u * u, u * u * u);
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    let r = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
    let d00 = (6.0 * u2 - 6.0 * u) / h;
    let d10 = 3.0 * u2 - 4.0 * u + 1.0;
    let d01 = (-6.0 * u2 + 6.0 * u) / h;
    let d11 = 3.0 * u2 - 2.0 * u;
    let rp = d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
    Ok((r, rp))
}

/// Body-fitted grid over the subsonic domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    pub ns: usize,
    pub ntheta: usize,
    pub mode: SymmetryMode,
    pub ds: f64,
    pub dtheta: f64,
    /// Angles of the stored `theta` columns.
    pub thetas: Vec<f64>,
    /// Boundary radius `R_b` and its first two angular derivatives.
    pub rb: Vec<f64>,
    pub rb_d1: Vec<f64>,
    pub rb_d2: Vec<f64>,
    /// Shock slope `r'` at shock columns, zero elsewhere.
    pub shock_rprime: Vec<f64>,
    pub on_shock: Vec<bool>,
    /// Column of `P2`.
    pub p2_column: usize,
    pub r1: f64,
    pub theta1: f64,
    pub theta3: f64,
}

/// Builds the grid for the given shock. `ntheta` counts angular intervals on
/// the full circle and must be even; in `Half` mode only `ntheta/2 + 1`
/// columns are stored.
pub fn build_grid(
    r1: f64,
    shock: &ShockCurve,
    ns: usize,
    ntheta: usize,
    mode: SymmetryMode,
) -> Result<DomainGrid, Error> {
    check_sizes(ns, ntheta)?;
    let n = shock.thetas.len();
    if n < 3 || shock.r.len() != n || shock.rprime.len() != n || shock.frozen.len() != n {
        return Err(Error::Geometry("shock samples have inconsistent lengths".into()));
    }
    if shock.thetas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Geometry("non-monotone shock angles".into()));
    }
    let (theta3, theta1) = (shock.theta3(), shock.theta1());
    if !(theta3 < 1.5 * PI && theta1 > 1.5 * PI && theta1 < 2.5 * PI && theta3 > 0.5 * PI) {
        return Err(Error::Geometry("shock samples must cover [theta3, theta1] around 3pi/2".into()));
    }
    let dtheta = 2.0 * PI / ntheta as f64;
    let nt = column_count(ntheta, mode);
    let mut rb = vec![r1; nt];
    let mut shock_rprime = vec![0.0; nt];
    let mut on_shock = vec![false; nt];
    for j in 0..nt {
        let t = math::wrap_from(1.5 * PI + j as f64 * dtheta, 0.5 * PI);
        if t > theta3 && t < theta1 {
            let (r, rp) = interp_shock(shock, t)?;
            rb[j] = r;
            shock_rprime[j] = rp;
            on_shock[j] = true;
        }
    }
    shock_rprime[0] = 0.0;
    Ok(assemble_grid(r1, ns, ntheta, mode, rb, shock_rprime, on_shock, theta1, theta3))
}

fn check_sizes(ns: usize, ntheta: usize) -> Result<(), Error> {
    if ns < 2 || ntheta < 8 || ntheta % 2 != 0 {
        return Err(Error::Config(format!(
            "grid needs ns >= 2 and an even ntheta >= 8 (got {ns}, {ntheta})"
        )));
    }
    Ok(())
}

fn column_count(ntheta: usize, mode: SymmetryMode) -> usize {
    match mode {
        SymmetryMode::Half => ntheta / 2 + 1,
        SymmetryMode::Full => ntheta,
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble_grid(
    r1: f64,
    ns: usize,
    ntheta: usize,
    mode: SymmetryMode,
    rb: Vec<f64>,
    shock_rprime: Vec<f64>,
    on_shock: Vec<bool>,
    theta1: f64,
    theta3: f64,
) -> DomainGrid {
    let nt = rb.len();
    let dtheta = 2.0 * PI / ntheta as f64;
    let mut grid = DomainGrid {
        ns,
        ntheta,
        mode,
        ds: 1.0 / ns as f64,
        dtheta,
        thetas: (0..nt).map(|j| 1.5 * PI + j as f64 * dtheta).collect(),
        rb_d1: vec![0.0; nt],
        rb_d2: vec![0.0; nt],
        rb,
        shock_rprime,
        on_shock,
        p2_column: 0,
        r1,
        theta1,
        theta3,
    };
    for j in 0..nt {
        let rm = grid.rb[grid.column(j as isize - 1)];
        let rp = grid.rb[grid.column(j as isize + 1)];
        let r0 = grid.rb[j];
        grid.rb_d1[j] = (rp - rm) / (2.0 * dtheta);
        grid.rb_d2[j] = (rp - 2.0 * r0 + rm) / (dtheta * dtheta);
    }
    grid
}

impl DomainGrid {
    /// Plain polar disk of radius `r1` with no shock columns.
    pub fn disk(r1: f64, ns: usize, ntheta: usize, mode: SymmetryMode) -> Result<DomainGrid, Error> {
        check_sizes(ns, ntheta)?;
        let nt = column_count(ntheta, mode);
        Ok(assemble_grid(r1, ns, ntheta, mode, vec![r1; nt], vec![0.0; nt], vec![false; nt], 2.0 * PI, PI))
    }

    /// Number of stored angular columns.
    pub fn nt(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_unknowns(&self) -> usize {
        1 + self.ns * self.nt()
    }

    /// Unknown index of node `(i, j)`; all `i = 0` nodes collapse onto the pole.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        if i == 0 {
            0
        } else {
            1 + (i - 1) * self.nt() + j
        }
    }

    /// Maps an out-of-range column by even reflection (`Half`) or
    /// periodically (`Full`).
    #[inline]
    pub fn column(&self, j: isize) -> usize {
        let nt = self.nt() as isize;
        match self.mode {
            SymmetryMode::Full => j.rem_euclid(nt) as usize,
            SymmetryMode::Half => {
                let m = nt - 1;
                let mut j = j;
                if j < 0 {
                    j = -j;
                }
                if j > m {
                    j = 2 * m - j;
                }
                j as usize
            }
        }
    }

    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.ds
    }

    pub fn radius(&self, i: usize, j: usize) -> f64 {
        self.s(i) * self.rb[j]
    }

    pub fn xy(&self, i: usize, j: usize) -> [f64; 2] {
        let r = self.radius(i, j);
        [r * math::cos(self.thetas[j]), r * math::sin(self.thetas[j])]
    }

    pub fn tag(&self, i: usize, j: usize) -> NodeTag {
        if i == 0 {
            NodeTag::Pole
        } else if i == self.ns {
            if self.on_shock[j] {
                NodeTag::Shock
            } else {
                NodeTag::Sonic
            }
        } else if self.mode == SymmetryMode::Half && (j == 0 || j == self.nt() - 1) {
            NodeTag::SymmetryAxis
        } else {
            NodeTag::Interior
        }
    }

    /// Columns carrying shock nodes, ordered by `theta`.
    pub fn shock_columns(&self) -> Vec<usize> {
        (0..self.nt()).filter(|&j| self.on_shock[j]).collect()
    }

    /// Area weight of node `(i, j)`: `s R^2 ds dtheta` with trapezoid end
    /// weights, doubled in `Half` mode so weights sum to the full area.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let ws = if i == self.ns { 0.5 } else { 1.0 };
        let wt = match self.mode {
            SymmetryMode::Full => 1.0,
            SymmetryMode::Half => {
                if j == 0 || j == self.nt() - 1 {
                    1.0
                } else {
                    2.0
                }
            }
        };
        ws * wt * self.s(i) * self.rb[j] * self.rb[j] * self.ds * self.dtheta
    }

    pub fn integrate(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 1..=self.ns {
            for j in 0..self.nt() {
                acc += self.weight(i, j) * f(i, j);
            }
        }
        acc
    }

    pub fn area(&self) -> f64 {
        self.integrate(|_, _| 1.0)
    }

    /// Boundary radius at an arbitrary angle (linear between columns).
    pub fn boundary_radius(&self, theta: f64) -> f64 {
        let (j0, j1, w) = self.angular_cell(theta);
        (1.0 - w) * self.rb[j0] + w * self.rb[j1]
    }

    /// Columns bracketing `theta` and the interpolation weight of the upper one.
    pub fn angular_cell(&self, theta: f64) -> (usize, usize, f64) {
        let mut t = math::wrap_from(theta, 1.5 * PI) - 1.5 * PI;
        if self.mode == SymmetryMode::Half && t > PI {
            t = 2.0 * PI - t;
        }
        let x = t / self.dtheta;
        let k = libm::floor(x) as isize;
        let w = x - k as f64;
        (self.column(k), self.column(k + 1), w)
    }

    /// Logical coordinates `(s, theta)` of a Cartesian point.
    pub fn logical(&self, xi: f64, eta: f64) -> (f64, f64) {
        let theta = math::angle_from(xi, eta, 0.5 * PI);
        let r = math::hypot(xi, eta);
        (r / self.boundary_radius(theta), theta)
    }

    /// Bilinear interpolation of a nodal field in `(s, theta)`. Returns
    /// `None` outside the mapped domain.
    pub fn sample(&self, values: &[f64], xi: f64, eta: f64) -> Option<f64> {
        let (s, theta) = self.logical(xi, eta);
        if !(s <= 1.0 + 1e-12) {
            return None;
        }
        let s = s.min(1.0);
        let (j0, j1, w) = self.angular_cell(theta);
        let x = s / self.ds;
        let i0 = (libm::floor(x) as usize).min(self.ns - 1);
        let a = x - i0 as f64;
        let v = |i: usize, j: usize| values[self.index(i, j)];
        let lo = (1.0 - w) * v(i0, j0) + w * v(i0, j1);
        let hi = (1.0 - w) * v(i0 + 1, j0) + w * v(i0 + 1, j1);
        Some((1.0 - a) * lo + a * hi)
    }
}

/// Nodal pressure values on a [`DomainGrid`], indexed by [`DomainGrid::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    pub values: Vec<f64>,
}

impl PressureField {
    pub fn constant(grid: &DomainGrid, c: f64) -> Self {
        PressureField { values: vec![c; grid.n_unknowns()] }
    }

    pub fn at(&self, grid: &DomainGrid, i: usize, j: usize) -> f64 {
        self.values[grid.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Values on the outer ring at the given columns.
    pub fn boundary_trace(&self, grid: &DomainGrid, columns: &[usize]) -> Vec<f64> {
        columns.iter().map(|&j| self.at(grid, grid.ns, j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_curve(n_right: usize, theta1: f64, pbar: f64) -> ShockCurve {
        let sq = pbar.sqrt();
        let mut th = Vec::new();
        let mut r = Vec::new();
        let mut rp = Vec::new();
        for k in 0..=n_right {
            let t = 1.5 * PI + (theta1 - 1.5 * PI) * k as f64 / n_right as f64;
            let c = (t - 1.5 * PI).cos();
            th.push(t);
            r.push(sq / c);
            rp.push(sq * (t - 1.5 * PI).sin() / (c * c));
        }
        ShockCurve::from_right_branch(&th, &r, &rp, &vec![false; th.len()])
    }

    #[test]
    fn mirrored_curve_is_symmetric() {
        let c = line_curve(20, 5.0 * PI / 3.0, 1.5);
        let n = c.thetas.len();
        for k in 0..n {
            assert!((c.thetas[k] + c.thetas[n - 1 - k] - 3.0 * PI).abs() < 1e-12);
            assert_eq!(c.r[k], c.r[n - 1 - k]);
            assert_eq!(c.rprime[k], -c.rprime[n - 1 - k]);
        }
        assert_eq!(c.rprime[c.p2_index()], 0.0);
        assert!(c.validate(2f64.sqrt(), 1.0).is_ok());
    }

    #[test]
    fn interp_endpoints_and_p2() {
        let c = line_curve(20, 5.0 * PI / 3.0, 1.5);
        let (r, rp) = interp_shock(&c, c.theta1()).unwrap();
        assert_eq!(r, *c.r.last().unwrap());
        assert_eq!(rp, *c.rprime.last().unwrap());
        let (_, rp) = interp_shock(&c, 1.5 * PI).unwrap();
        assert_eq!(rp, 0.0);
        assert!(interp_shock(&c, c.theta1() + 0.1).is_err());
    }

    #[test]
    fn interp_matches_line_midpoints() {
        let c = line_curve(200, 5.0 * PI / 3.0, 1.5);
        let mut worst: f64 = 0.0;
        for w in c.thetas.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let exact = 1.5f64.sqrt() / (t - 1.5 * PI).cos();
            worst = worst.max((interp_shock(&c, t).unwrap().0 - exact).abs());
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn disk_area() {
        let r1 = 2f64.sqrt();
        for mode in [SymmetryMode::Half, SymmetryMode::Full] {
            let g = DomainGrid::disk(r1, 256, 256, mode).unwrap();
            assert!((g.area() - PI * 2.0).abs() / (PI * 2.0) < 1e-3);
        }
    }

    #[test]
    fn segment_area() {
        // Disk of radius sqrt(2) cut by the chord eta = -sqrt(1.5).
        let (r1, h): (f64, f64) = (2f64.sqrt(), 1.5f64.sqrt());
        let seg = r1 * r1 * (h / r1).acos() - h * (r1 * r1 - h * h).sqrt();
        let exact = PI * r1 * r1 - seg;
        let c = line_curve(400, 5.0 * PI / 3.0, 1.5);
        let g = build_grid(r1, &c, 256, 256, SymmetryMode::Half).unwrap();
        assert!((g.area() - exact).abs() / exact < 1e-3, "{} vs {exact}", g.area());
    }

    #[test]
    fn tags_partition_boundary() {
        let c = line_curve(40, 5.0 * PI / 3.0, 1.5);
        let g = build_grid(2f64.sqrt(), &c, 16, 32, SymmetryMode::Half).unwrap();
        let mut counts = [0usize; 5];
        for i in 0..=g.ns {
            for j in 0..g.nt() {
                let k = match g.tag(i, j) {
                    NodeTag::Interior => 0,
                    NodeTag::Sonic => 1,
                    NodeTag::Shock => 2,
                    NodeTag::SymmetryAxis => 3,
                    NodeTag::Pole => 4,
                };
                counts[k] += 1;
            }
        }
        assert_eq!(counts[1] + counts[2], g.nt());
        assert_eq!(counts[3], 2 * (g.ns - 1));
        assert_eq!(counts[4], g.nt());
        assert_eq!(g.tag(g.ns, 0), NodeTag::Shock);
    }

    #[test]
    fn column_wrapping() {
        let g = DomainGrid::disk(1.0, 4, 16, SymmetryMode::Half).unwrap();
        assert_eq!(g.nt(), 9);
        assert_eq!(g.column(-1), 1);
        assert_eq!(g.column(9), 7);
        let g = DomainGrid::disk(1.0, 4, 16, SymmetryMode::Full).unwrap();
        assert_eq!(g.column(-1), 15);
        assert_eq!(g.column(16), 0);
    }

    #[test]
    fn bilinear_sample_reproduces_linear_field() {
        let g = DomainGrid::disk(1.3, 32, 64, SymmetryMode::Full).unwrap();
        let mut v = vec![0.0; g.n_unknowns()];
        for i in 0..=g.ns {
            for j in 0..g.nt() {
                v[g.index(i, j)] = 1.0 + g.s(i);
            }
        }
        let got = g.sample(&v, 0.3, -0.4).unwrap();
        assert!((got - (1.0 + 0.5 / 1.3)).abs() < 1e-12);
        assert!(g.sample(&v, 2.0, 0.0).is_none());
    }
}
