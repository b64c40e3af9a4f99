//! Jump data on the free boundary: the shock ODE, the oblique derivative
//! coefficients, the one-point value at `P2` and the shock update map.

use alloc::format;
use alloc::vec::Vec;

use crate::grid::{DomainGrid, PressureField, ShockCurve, SymmetryMode};
use crate::math::{self, PI};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `theta in [3pi/2, theta1]`, where `r' >= 0`.
    Right,
    /// `theta in [theta3, 3pi/2]`, where `r' <= 0`.
    Left,
}

/// Shock slope `dr/dtheta = +-r sqrt((r^2 - pbar)/pbar)` with
/// `pbar = (p + p2)/2`; zero once `r^2 <= pbar`.
pub fn shock_rhs_g(p: f64, r: f64, p2: f64, branch: Branch) -> f64 {
    let pbar = 0.5 * (p + p2);
    let d = r * r - pbar;
    if !(d > 0.0) || !(pbar > 0.0) {
        return 0.0;
    }
    let g = r * math::sqrt(d / pbar);
    match branch {
        Branch::Right => g,
        Branch::Left => -g,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObliqueCoeffs {
    pub beta1: f64,
    pub beta2: f64,
    /// Obliqueness `beta . (1, -r')`.
    pub mu: f64,
    pub pbar: f64,
    pub jump: f64,
}

/// Coefficients of `beta1 p_r + beta2 p_theta = 0` at a shock point where
/// the subsonic pressure is `p`.
pub fn oblique_coeffs(p: f64, r: f64, rprime: f64, p2: f64) -> ObliqueCoeffs {
    let pbar = 0.5 * (p + p2);
    let jump = p - p2;
    let r2 = r * r;
    let beta1 = 2.0 * rprime * ((r2 - pbar) / r2 - jump / (4.0 * pbar) + pbar * (r2 - p) / (r2 * p));
    let beta2 = 4.0 * (r2 - pbar) / r2 - jump / (2.0 * pbar);
    let mu = -2.0 * rprime * (1.0 - pbar / p);
    ObliqueCoeffs { beta1, beta2, mu, pbar, jump }
}

/// One-point value `p_hat = 2 r^2 - p2`, which makes `pbar = r^2` at `P2`.
pub fn p_hat_at_p2(r_at_p2: f64, p2: f64) -> Result<f64, Error> {
    let p_hat = 2.0 * r_at_p2 * r_at_p2 - p2;
    if !(p_hat > p2) {
        return Err(Error::Geometry(format!(
            "shock reaches the sonic circle of state 2 at P2 (r = {r_at_p2})"
        )));
    }
    Ok(p_hat)
}

/// Piecewise-linear pressure trace along the shock, in ascending `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockTrace {
    pub thetas: Vec<f64>,
    pub p: Vec<f64>,
}

impl ShockTrace {
    pub fn eval(&self, theta: f64) -> f64 {
        let t = &self.thetas;
        let n = t.len();
        if theta <= t[0] {
            return self.p[0];
        }
        if theta >= t[n - 1] {
            return self.p[n - 1];
        }
        let k = t.partition_point(|&x| x <= theta) - 1;
        let w = (theta - t[k]) / (t[k + 1] - t[k]);
        (1.0 - w) * self.p[k] + w * self.p[k + 1]
    }
}

/// Right-branch sample angles: the grid lattice `3pi/2 + k dtheta` below
/// `theta1`, followed by `theta1` itself. A lattice node closer than
/// `dtheta/4` to `theta1` is dropped to avoid a degenerate last interval.
pub fn right_branch_nodes(theta1: f64, dtheta: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let t = 1.5 * PI + k as f64 * dtheta;
        if t >= theta1 - 0.25 * dtheta {
            break;
        }
        out.push(t);
        k += 1;
    }
    out.push(theta1);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSolution {
    /// Radii at the requested nodes, starting with the initial radius.
    pub r: Vec<f64>,
    pub rprime: Vec<f64>,
    pub frozen: Vec<bool>,
}

/// Integrates the shock ODE with classical RK4 through `nodes`, starting at
/// `(nodes[0], r_start)`. Once `r^2 <= pbar` the radius stays frozen for the
/// remainder of the branch; radii are never allowed below `r_floor`.
pub fn integrate_branch(
    nodes: &[f64],
    r_start: f64,
    trace: &dyn Fn(f64) -> f64,
    p2: f64,
    branch: Branch,
    r_floor: f64,
) -> BranchSolution {
    let f = |t: f64, r: f64| shock_rhs_g(trace(t), r, p2, branch);
    let mut r = r_start;
    let mut frozen = false;
    let mut out = BranchSolution {
        r: Vec::with_capacity(nodes.len()),
        rprime: Vec::with_capacity(nodes.len()),
        frozen: Vec::with_capacity(nodes.len()),
    };
    out.r.push(r);
    out.rprime.push(f(nodes[0], r));
    out.frozen.push(false);
    for w in nodes.windows(2) {
        let (a, h) = (w[0], w[1] - w[0]);
        if !frozen {
            let k1 = f(a, r);
            let k2 = f(a + 0.5 * h, r + 0.5 * h * k1);
            let k3 = f(a + 0.5 * h, r + 0.5 * h * k2);
            let k4 = f(a + h, r + h * k3);
            r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let pbar = 0.5 * (trace(w[1]) + p2);
            if r * r <= pbar || r < r_floor {
                frozen = true;
            }
            if r < r_floor {
                r = r_floor;
            }
        }
        out.r.push(r);
        out.rprime.push(if frozen { 0.0 } else { f(w[1], r) });
        out.frozen.push(frozen);
    }
    out
}

/// Result of one application of the shock update map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    pub shock: ShockCurve,
    /// `|r_right(3pi/2) - r_left(3pi/2)|` before symmetrization (zero in `Half` mode).
    pub branch_mismatch: f64,
}

/// Pressure trace along the shock columns of `grid`, closed with `p1` at
/// `theta1`, mirrored onto the left branch in `Half` mode.
pub fn trace_from_field(grid: &DomainGrid, field: &PressureField, p1: f64, branch: Branch) -> ShockTrace {
    let mut thetas = Vec::new();
    let mut p = Vec::new();
    for j in grid.shock_columns() {
        let t = math::wrap_from(grid.thetas[j], 0.5 * PI);
        let on_branch = match branch {
            Branch::Right => t >= 1.5 * PI,
            Branch::Left => t <= 1.5 * PI,
        };
        if on_branch || grid.mode == SymmetryMode::Half {
            thetas.push(t);
            p.push(field.at(grid, grid.ns, j));
        }
    }
    let mut pairs: Vec<(f64, f64)> = thetas.into_iter().zip(p).collect();
    if grid.mode == SymmetryMode::Half && branch == Branch::Left {
        pairs = pairs.into_iter().map(|(t, v)| (3.0 * PI - t, v)).collect();
    }
    match branch {
        Branch::Right => pairs.push((grid.theta1, p1)),
        Branch::Left => pairs.push((grid.theta3, p1)),
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    ShockTrace { thetas: pairs.iter().map(|x| x.0).collect(), p: pairs.iter().map(|x| x.1).collect() }
}

/// Shock update: integrates the shock ODE from `P1` (and `P3` in `Full`
/// mode) towards `P2` with the pressure trace of `field` on the current
/// grid, then returns a symmetric curve on the right-branch lattice.
pub fn map_j(grid: &DomainGrid, field: &PressureField, p1: f64, p2: f64, r2: f64) -> Result<MapOutput, Error> {
    let r1 = grid.r1;
    let nodes_up = right_branch_nodes(grid.theta1, grid.dtheta);
    let nodes_down: Vec<f64> = nodes_up.iter().rev().copied().collect();
    let tr = trace_from_field(grid, field, p1, Branch::Right);
    let right = integrate_branch(&nodes_down, r1, &|t| tr.eval(t), p2, Branch::Right, r2);
    let mut r: Vec<f64> = right.r.iter().rev().copied().collect();
    let mut rp: Vec<f64> = right.rprime.iter().rev().copied().collect();
    let mut fr: Vec<bool> = right.frozen.iter().rev().copied().collect();
    let mut mismatch = 0.0;
    if grid.mode == SymmetryMode::Full {
        let tl = trace_from_field(grid, field, p1, Branch::Left);
        let left_nodes: Vec<f64> = nodes_down.iter().map(|t| 3.0 * PI - t).collect();
        let left = integrate_branch(&left_nodes, r1, &|t| tl.eval(t), p2, Branch::Left, r2);
        let n = r.len();
        mismatch = math::abs(right.r[n - 1] - left.r[n - 1]);
        for k in 0..n {
            let q = n - 1 - k;
            r[k] = 0.5 * (r[k] + left.r[q]);
            rp[k] = 0.5 * (rp[k] - left.rprime[q]);
            fr[k] = fr[k] || left.frozen[q];
        }
    }
    let last = r.len() - 1;
    r[last] = r1;
    if r.iter().any(|&x| x > r1 + 1e-10) {
        return Err(Error::Geometry("shock update left the sonic disk".into()));
    }
    Ok(MapOutput { shock: ShockCurve::from_right_branch(&nodes_up, &r, &rp, &fr), branch_mismatch: mismatch })
}

/// Shock obtained by integrating the ODE against a prescribed trace on the
/// right branch.
pub fn shock_from_trace(theta1: f64, dtheta: f64, r1: f64, r2: f64, p2: f64, trace: &dyn Fn(f64) -> f64) -> ShockCurve {
    let nodes_up = right_branch_nodes(theta1, dtheta);
    let nodes_down: Vec<f64> = nodes_up.iter().rev().copied().collect();
    let sol = integrate_branch(&nodes_down, r1, trace, p2, Branch::Right, r2);
    let r: Vec<f64> = sol.r.iter().rev().copied().collect();
    let rp: Vec<f64> = sol.rprime.iter().rev().copied().collect();
    let fr: Vec<bool> = sol.frozen.iter().rev().copied().collect();
    ShockCurve::from_right_branch(&nodes_up, &r, &rp, &fr)
}

/// Convex combination `(1 - lambda) a + lambda b` of two curves on the same samples.
pub fn damp(a: &ShockCurve, b: &ShockCurve, lambda: f64) -> ShockCurve {
    let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (1.0 - lambda) * p + lambda * q).collect();
    ShockCurve {
        thetas: b.thetas.clone(),
        r: mix(&a.r, &b.r),
        rprime: mix(&a.rprime, &b.rprime),
        frozen: b.frozen.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_vanishes_at_sonic_relative_point() {
        assert_eq!(shock_rhs_g(2.0, 1.5f64.sqrt(), 1.0, Branch::Right), 0.0);
        assert_eq!(shock_rhs_g(2.0, 1.0, 1.0, Branch::Right), 0.0);
        assert!(shock_rhs_g(2.0, 1.3, 1.0, Branch::Left) < 0.0);
    }

    #[test]
    fn g_matches_line_derivative() {
        let t = PI / 12.0;
        let r = 1.5f64.sqrt() / t.cos();
        let exact = 1.5f64.sqrt() * t.tan() / t.cos();
        assert!((shock_rhs_g(2.0, r, 1.0, Branch::Right) - exact).abs() < 1e-14);
    }

    #[test]
    fn oblique_at_p2() {
        let c = oblique_coeffs(2.0, 1.5f64.sqrt(), 0.0, 1.0);
        assert_eq!(c.beta1, 0.0);
        assert_eq!(c.mu, 0.0);
        assert!((c.beta2 + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn p_hat_examples() {
        assert!((p_hat_at_p2(1.5f64.sqrt(), 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(p_hat_at_p2(1.0, 1.0).is_err());
        let r = 1.2;
        let ph = p_hat_at_p2(r, 1.0).unwrap();
        assert_eq!(shock_rhs_g(ph, r, 1.0, Branch::Right), 0.0);
    }

    #[test]
    fn trace_interpolation() {
        let tr = ShockTrace { thetas: vec![0.0, 1.0, 3.0], p: vec![1.0, 2.0, 0.0] };
        assert_eq!(tr.eval(-1.0), 1.0);
        assert_eq!(tr.eval(0.5), 1.5);
        assert_eq!(tr.eval(2.0), 1.0);
        assert_eq!(tr.eval(5.0), 0.0);
    }

    #[test]
    fn nodes_end_at_theta1() {
        let n = right_branch_nodes(23.0 * PI / 12.0, 2.0 * PI / 256.0);
        assert_eq!(n[0], 1.5 * PI);
        assert_eq!(*n.last().unwrap(), 23.0 * PI / 12.0);
        assert!(n.windows(2).all(|w| w[1] - w[0] > 0.2 * 2.0 * PI / 256.0));
    }

    #[test]
    fn frozen_line_curve() {
        let t1 = 5.0 * PI / 3.0;
        let c = shock_from_trace(t1, 2.0 * PI / 512.0, 2f64.sqrt(), 1.0, 1.0, &|_| 2.0);
        let mut worst: f64 = 0.0;
        for (t, r) in c.thetas.iter().zip(&c.r) {
            worst = worst.max((r - 1.5f64.sqrt() / (t - 1.5 * PI).cos()).abs());
        }
        assert!(worst < 1e-5, "{worst}");
        assert!(c.validate(2f64.sqrt(), 1.0).is_ok());
    }

    #[test]
    fn frozen_line_fine_steps() {
        let t1 = 5.0 * PI / 3.0;
        let nodes: Vec<f64> = (0..=1000).map(|k| t1 - (t1 - 1.5 * PI) * k as f64 / 1000.0).collect();
        let sol = integrate_branch(&nodes, 2f64.sqrt(), &|_| 2.0, 1.0, Branch::Right, 1.0);
        let mut worst: f64 = 0.0;
        for (t, r) in nodes.iter().zip(&sol.r) {
            worst = worst.max((r - 1.5f64.sqrt() / (t - 1.5 * PI).cos()).abs());
        }
        assert!((sol.r[1000] - 1.5f64.sqrt()).abs() <= 1e-8);
        assert!(worst <= 1e-6);
    }
}
