//! Regularized, cut-off operator for the pressure and its frozen-coefficient
//! linearization on a [`DomainGrid`].
//!
//! Interior rows discretize
//!
//! ```text
//! L p = (zeta(w - r^2) + eps) p_rr + (w + eps)/r^2 p_tt + (w + eps)/r p_r
//!       + (r^2 w_r / w) p_r - 2 r p_r
//! ```
//!
//! with second-order centred differences in the mapped coordinates, where
//! `w` is the frozen coefficient field.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{DomainGrid, NodeTag, PressureField};
use crate::math;
use crate::shock;
use crate::sparse::{self, CsrBuilder, CsrMatrix, SolveInfo, SolveOptions};
use crate::Error;

/// Cut-off applied to the type coefficient `w - r^2`. Identity for `s >= 0`,
/// constant `-eps/2` for `s <= -eps`, cubic Hermite in between. With
/// `eps = 0` it is the identity.
pub fn zeta(s: f64, eps: f64) -> f64 {
    if s >= 0.0 || eps <= 0.0 {
        return s;
    }
    if s <= -eps {
        return -0.5 * eps;
    }
    // t in [0, 1]; value -eps/2 with zero slope at t = 0, value 0 with unit
    // slope (in s) at t = 1.
    let t = (s + eps) / eps;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h11 = t3 - t2;
    -0.5 * eps * h00 + eps * h11
}

/// Derivative of [`zeta`] in `s`.
pub fn zeta_prime(s: f64, eps: f64) -> f64 {
    if s >= 0.0 || eps <= 0.0 {
        return 1.0;
    }
    if s <= -eps {
        return 0.0;
    }
    let t = (s + eps) / eps;
    let dh00 = 6.0 * t * t - 6.0 * t;
    let dh11 = 3.0 * t * t - 2.0 * t;
    (-0.5 * eps * dh00 + eps * dh11) / eps
}

/// Frozen coefficient field and regularization for one linear solve.
#[derive(Debug, Clone, Copy)]
pub struct OperatorSpec<'a> {
    pub epsilon: f64,
    pub omega: &'a [f64],
    /// Right-hand side of interior and pole rows; zero when absent.
    pub source: Option<&'a [f64]>,
}

/// Boundary data for the outer ring.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    /// Dirichlet value on each sonic column.
    pub sonic: Vec<f64>,
    /// One-point value at `P2`.
    pub p_hat: f64,
    pub p2: f64,
}

impl BoundaryData {
    pub fn uniform(grid: &DomainGrid, p1: f64, p2: f64, p_hat: f64) -> Self {
        BoundaryData { sonic: vec![p1; grid.nt()], p_hat, p2 }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Mapped-coordinate coefficients at an interior node: multipliers of
/// `P_ss`, `P_st`, `P_tt`, `P_s`.
#[derive(Debug, Clone, Copy)]
struct Metric {
    a: f64,
    b: f64,
    r: f64,
    big_r: f64,
}

fn metric(grid: &DomainGrid, i: usize, j: usize) -> Metric {
    let s = grid.s(i);
    let (rb, d1, d2) = (grid.rb[j], grid.rb_d1[j], grid.rb_d2[j]);
    Metric {
        a: -s * d1 / rb,
        b: -s * (d2 / rb - 2.0 * d1 * d1 / (rb * rb)),
        r: s * rb,
        big_r: rb,
    }
}

/// Weighted first-ring average closing the pole row:
/// `4 sum w_j (P_1j - P_0) / h_j^2 / sum w_j` approximates the Laplacian.
fn pole_weights(grid: &DomainGrid) -> Vec<f64> {
    let nt = grid.nt();
    (0..nt)
        .map(|j| {
            let w = match grid.mode {
                crate::grid::SymmetryMode::Half if j == 0 || j == nt - 1 => 0.5,
                _ => 1.0,
            };
            let h = grid.ds * grid.rb[j];
            w / (h * h)
        })
        .collect()
}

/// Assembles the linear system for one Picard step.
pub fn assemble_linear(grid: &DomainGrid, spec: &OperatorSpec<'_>, bc: &BoundaryData) -> Result<LinearSystem, Error> {
    let n = grid.n_unknowns();
    let w = spec.omega;
    if w.len() != n {
        return Err(Error::Geometry("coefficient field does not match the grid".into()));
    }
    if let Some((node, &value)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Coefficient { node, value });
    }
    let eps = spec.epsilon;
    let (ds, dt) = (grid.ds, grid.dtheta);
    let nt = grid.nt();
    let mut b = CsrBuilder::new(n);
    let mut rhs = vec![0.0; n];
    let src = |k: usize| spec.source.map_or(0.0, |f| f[k]);

    // Pole.
    let pw = pole_weights(grid);
    let tot: f64 = (0..nt).map(|j| pw[j] * grid.ds * grid.ds * grid.rb[j] * grid.rb[j]).sum();
    let lead = 4.0 * (w[0] + eps) / tot;
    let mut diag = 0.0;
    for j in 0..nt {
        b.add(grid.index(1, j), lead * pw[j]);
        diag -= lead * pw[j];
    }
    b.add(0, diag);
    b.finish_row();
    rhs[0] = src(0);

    for i in 1..=grid.ns {
        for j in 0..nt {
            let k = grid.index(i, j);
            match grid.tag(i, j) {
                NodeTag::Sonic => {
                    b.add(k, 1.0);
                    rhs[k] = bc.sonic[j];
                }
                NodeTag::Shock if j == grid.p2_column => {
                    b.add(k, 1.0);
                    rhs[k] = bc.p_hat;
                }
                NodeTag::Shock => shock_row(grid, &mut b, i, j, w[k], bc.p2),
                NodeTag::Interior | NodeTag::SymmetryAxis => {
                    interior_row(grid, &mut b, i, j, w, eps, ds, dt);
                    rhs[k] = src(k);
                }
                NodeTag::Pole => unreachable!(),
            }
            b.finish_row();
        }
    }
    Ok(LinearSystem { matrix: b.build(), rhs })
}

#[allow(clippy::too_many_arguments)]
fn interior_row(grid: &DomainGrid, b: &mut CsrBuilder, i: usize, j: usize, w: &[f64], eps: f64, ds: f64, dt: f64) {
    let m = metric(grid, i, j);
    let col = |dj: isize| grid.column(j as isize + dj);
    let idx = |ii: usize, dj: isize| grid.index(ii, col(dj));
    let k = grid.index(i, j);
    let om = w[k];
    let om_r = (w[idx(i + 1, 0)] - w[idx(i - 1, 0)]) / (2.0 * ds * m.big_r);
    let r = m.r;
    let ca = zeta(om - r * r, eps) + eps;
    let cb = (om + eps) / (r * r);
    let cc = (om + eps) / r + r * r * om_r / om - 2.0 * r;
    let rb = m.big_r;
    let css = ca / (rb * rb) + cb * m.a * m.a;
    let cst = 2.0 * cb * m.a;
    let ctt = cb;
    let cs = cc / rb + cb * m.b;
    // Centred first derivative while the cell Peclet number stays below one,
    // one-sided in the direction that keeps the off-diagonals non-negative
    // otherwise.
    let (up, dn, mid) = if math::abs(cs) * ds <= 2.0 * css {
        (cs / (2.0 * ds), -cs / (2.0 * ds), 0.0)
    } else if cs > 0.0 {
        (cs / ds, 0.0, -cs / ds)
    } else {
        (0.0, -cs / ds, cs / ds)
    };
    b.add(idx(i + 1, 0), css / (ds * ds) + up);
    b.add(idx(i - 1, 0), css / (ds * ds) + dn);
    b.add(k, -2.0 * css / (ds * ds) - 2.0 * ctt / (dt * dt) + mid);
    b.add(idx(i, 1), ctt / (dt * dt));
    b.add(idx(i, -1), ctt / (dt * dt));
    let q = cst / (4.0 * ds * dt);
    b.add(idx(i + 1, 1), q);
    b.add(idx(i - 1, -1), q);
    b.add(idx(i + 1, -1), -q);
    b.add(idx(i - 1, 1), -q);
}

/// Oblique condition `beta1 p_r + beta2 p_theta = 0` at a shock node, written
/// as `(mu/R) P_s + beta2 P_theta` with a one-sided `s` difference and an
/// upwinded `theta` difference, scaled so the diagonal is positive.
fn shock_row(grid: &DomainGrid, b: &mut CsrBuilder, i: usize, j: usize, om: f64, p2: f64) {
    let k = grid.index(i, j);
    let r = grid.rb[j];
    let rp = grid.shock_rprime[j];
    let c = shock::oblique_coeffs(om, r, rp, p2);
    let scale = 1.0 + math::abs(c.beta2) + math::abs(c.mu / r);
    let sg = if c.mu > 0.0 { 1.0 } else { -1.0 };
    let cs = sg * c.mu / (r * grid.ds);
    let ct = sg * c.beta2 / grid.dtheta;
    if math::abs(cs) + math::abs(ct) * grid.ds <= 1e-13 * scale {
        b.add(k, 1.0);
        b.add(grid.index(i - 1, j), -1.0);
        return;
    }
    b.add(k, cs);
    b.add(grid.index(i - 1, j), -cs);
    if ct > 0.0 {
        b.add(k, ct);
        b.add(grid.index(i, grid.column(j as isize - 1)), -ct);
    } else {
        b.add(k, -ct);
        b.add(grid.index(i, grid.column(j as isize + 1)), ct);
    }
}

/// Solves the assembled system starting from `guess`.
pub fn solve_linear(
    system: &LinearSystem,
    guess: &[f64],
    opts: &SolveOptions,
) -> Result<(PressureField, SolveInfo), Error> {
    let mut x = guess.to_vec();
    let info = sparse::solve(&system.matrix, &system.rhs, &mut x, opts)?;
    Ok((PressureField { values: x }, info))
}

/// Pointwise values of the nonlinear regularized operator
///
/// ```text
/// Q p = (zeta(p - r^2) + eps) p_rr + (p + eps)/r^2 p_tt + (p + eps)/r p_r
///       + (r p_r)^2 / p - 2 r p_r
/// ```
///
/// at interior and axis nodes; zero elsewhere.
pub fn nonlinear_residual(grid: &DomainGrid, p: &[f64], epsilon: f64) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_unknowns()];
    let (ds, dt) = (grid.ds, grid.dtheta);
    for i in 1..grid.ns {
        for j in 0..grid.nt() {
            let m = metric(grid, i, j);
            let at = |ii: usize, dj: isize| p[grid.index(ii, grid.column(j as isize + dj))];
            let pc = at(i, 0);
            let ps = (at(i + 1, 0) - at(i - 1, 0)) / (2.0 * ds);
            let pss = (at(i + 1, 0) - 2.0 * pc + at(i - 1, 0)) / (ds * ds);
            let ptt = (at(i, 1) - 2.0 * pc + at(i, -1)) / (dt * dt);
            let pst = (at(i + 1, 1) - at(i + 1, -1) - at(i - 1, 1) + at(i - 1, -1)) / (4.0 * ds * dt);
            let rb = m.big_r;
            let r = m.r;
            let p_r = ps / rb;
            let p_rr = pss / (rb * rb);
            let p_tt = ptt + 2.0 * m.a * pst + m.a * m.a * pss + m.b * ps;
            out[grid.index(i, j)] = (zeta(pc - r * r, epsilon) + epsilon) * p_rr
                + (pc + epsilon) / (r * r) * p_tt
                + (pc + epsilon) / r * p_r
                + (r * p_r) * (r * p_r) / pc
                - 2.0 * r * p_r;
        }
    }
    out
}

/// Evaluates the interior rows of `L` (frozen at `omega`) applied to `p`.
pub fn apply_linear(grid: &DomainGrid, spec: &OperatorSpec<'_>, bc: &BoundaryData, p: &[f64]) -> Result<Vec<f64>, Error> {
    let sys = assemble_linear(grid, spec, bc)?;
    let mut y = vec![0.0; p.len()];
    sys.matrix.matvec(p, &mut y);
    for i in 1..=grid.ns {
        for j in 0..grid.nt() {
            if !matches!(grid.tag(i, j), NodeTag::Interior | NodeTag::SymmetryAxis) {
                y[grid.index(i, j)] = 0.0;
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SymmetryMode;

    #[test]
    fn zeta_branches() {
        assert_eq!(zeta(1.0, 0.1), 1.0);
        assert_eq!(zeta(-0.2, 0.1), -0.05);
        assert_eq!(zeta(0.0, 0.1), 0.0);
        assert!((zeta(-0.1, 0.1) + 0.05).abs() < 1e-15);
        assert_eq!(zeta(-0.3, 0.0), -0.3);
    }

    #[test]
    fn zeta_slope_bound_and_monotone() {
        let eps = 0.1;
        let n = 10_000;
        let mut prev = zeta(-3.0 * eps, eps);
        let h = 6.0 * eps / n as f64;
        for k in 1..=n {
            let s = -3.0 * eps + k as f64 * h;
            let z = zeta(s, eps);
            assert!((z - prev) / h <= 1.0 + 1e-9);
            assert!(z >= prev - 1e-15);
            assert!(zeta_prime(s, eps) <= 1.0 + 1e-12 && zeta_prime(s, eps) >= 0.0);
            prev = z;
        }
    }

    #[test]
    fn zeta_prime_matches_difference_quotient() {
        let eps = 0.3;
        for k in 1..60 {
            let s = -eps + k as f64 * eps / 60.0;
            let h = 1e-6;
            let fd = (zeta(s + h, eps) - zeta(s - h, eps)) / (2.0 * h);
            assert!((fd - zeta_prime(s, eps)).abs() < 1e-6);
        }
    }

    #[test]
    fn constants_lie_in_kernel() {
        let g = DomainGrid::disk(2f64.sqrt(), 16, 32, SymmetryMode::Full).unwrap();
        let omega: Vec<f64> = (0..g.n_unknowns()).map(|k| 1.5 + 0.01 * (k % 5) as f64).collect();
        let spec = OperatorSpec { epsilon: 1e-2, omega: &omega, source: None };
        let bc = BoundaryData::uniform(&g, 2.0, 1.0, 2.0);
        let p = vec![1.7; g.n_unknowns()];
        let y = apply_linear(&g, &spec, &bc, &p).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-9), "{:e}", y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let q = nonlinear_residual(&g, &p, 1e-2);
        assert!(q.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dirichlet_disk_gives_constant() {
        let g = DomainGrid::disk(2f64.sqrt(), 12, 24, SymmetryMode::Half).unwrap();
        let omega = vec![2.0; g.n_unknowns()];
        let spec = OperatorSpec { epsilon: 1e-2, omega: &omega, source: None };
        let bc = BoundaryData::uniform(&g, 2.0, 1.0, 2.0);
        let sys = assemble_linear(&g, &spec, &bc).unwrap();
        let (p, _) = solve_linear(&sys, &vec![1.0; g.n_unknowns()], &SolveOptions::default()).unwrap();
        assert!(p.values.iter().all(|v| (v - 2.0).abs() < 1e-8));
    }

    #[test]
    fn rejects_nonpositive_coefficients() {
        let g = DomainGrid::disk(1.0, 4, 8, SymmetryMode::Full).unwrap();
        let mut omega = vec![1.0; g.n_unknowns()];
        omega[3] = 0.0;
        let spec = OperatorSpec { epsilon: 0.1, omega: &omega, source: None };
        let bc = BoundaryData::uniform(&g, 1.0, 0.5, 1.0);
        assert!(matches!(assemble_linear(&g, &spec, &bc), Err(Error::Coefficient { node: 3, .. })));
    }

    #[test]
    fn leading_coefficient_floor() {
        // In the hyperbolic range the p_rr coefficient never drops below eps/2.
        for &eps in &[1e-1, 1e-3, 1e-6] {
            for k in 0..200 {
                let s = -5.0 + k as f64 * 0.05;
                assert!(zeta(s, eps) + eps >= 0.5 * eps - 1e-18);
            }
        }
    }
}
