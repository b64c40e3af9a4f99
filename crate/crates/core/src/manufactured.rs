//! Manufactured-solution study for the frozen-coefficient operator on the
//! full disk: an exact smooth field, its source term, and the max-norm error
//! of the discrete solution.

use alloc::vec;
use alloc::vec::Vec;

use crate::elliptic::{self, zeta, BoundaryData, OperatorSpec};
use crate::grid::{DomainGrid, SymmetryMode};
use crate::math;
use crate::sparse::SolveOptions;
use crate::Error;

/// Smooth test problem `p = p1 - (p1 - r^2) (a + b sin(xi + 2 eta))`. It
/// equals `p1` on the sonic circle and stays above `r^2` inside it when
/// `a > b >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub p1: f64,
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Manufactured { p1: 2.0, epsilon: 0.1, a: 0.3, b: 0.1 }
    }
}

impl Manufactured {
    /// `[p, p_x, p_y, p_xx, p_xy, p_yy]` at `(x, y)`.
    pub fn exact(&self, x: f64, y: f64) -> [f64; 6] {
        let q = self.p1 - x * x - y * y;
        let (sn, cs) = (math::sin(x + 2.0 * y), math::cos(x + 2.0 * y));
        let w = self.a + self.b * sn;
        let (wx, wy) = (self.b * cs, 2.0 * self.b * cs);
        let (wxx, wxy, wyy) = (-self.b * sn, -2.0 * self.b * sn, -4.0 * self.b * sn);
        let (qx, qy) = (-2.0 * x, -2.0 * y);
        let p = self.p1 - q * w;
        let px = -(qx * w + q * wx);
        let py = -(qy * w + q * wy);
        let pxx = -(-2.0 * w + 2.0 * qx * wx + q * wxx);
        let pyy = -(-2.0 * w + 2.0 * qy * wy + q * wyy);
        let pxy = -(qx * wy + qy * wx + q * wxy);
        [p, px, py, pxx, pxy, pyy]
    }

    /// The continuous operator with coefficients frozen at the exact field,
    /// applied to the exact field, in polar form.
    pub fn source(&self, x: f64, y: f64) -> f64 {
        let eps = self.epsilon;
        let [p, px, py, pxx, pxy, pyy] = self.exact(x, y);
        let r = math::hypot(x, y);
        if r == 0.0 {
            return (p + eps) * (pxx + pyy);
        }
        let (c, s) = (x / r, y / r);
        let pr = c * px + s * py;
        let prr = c * c * pxx + 2.0 * c * s * pxy + s * s * pyy;
        let ptt = r * r * (s * s * pxx - 2.0 * c * s * pxy + c * c * pyy) - r * pr;
        (zeta(p - r * r, eps) + eps) * prr + (p + eps) / (r * r) * ptt + (p + eps) / r * pr + r * r * pr / p * pr
            - 2.0 * r * pr
    }

    /// Max-norm nodal error on the `n x n` full-disk grid.
    pub fn error(&self, n: usize) -> Result<f64, Error> {
        let g = DomainGrid::disk(math::sqrt(self.p1), n, n, SymmetryMode::Full)?;
        let nodes: Vec<[f64; 2]> = (0..g.n_unknowns())
            .map(|k| if k == 0 { [0.0, 0.0] } else { g.xy(1 + (k - 1) / g.nt(), (k - 1) % g.nt()) })
            .collect();
        let omega: Vec<f64> = nodes.iter().map(|q| self.exact(q[0], q[1])[0]).collect();
        let f: Vec<f64> = nodes.iter().map(|q| self.source(q[0], q[1])).collect();
        let spec = OperatorSpec { epsilon: self.epsilon, omega: &omega, source: Some(&f) };
        let bc = BoundaryData::uniform(&g, self.p1, 1.0, self.p1);
        let sys = elliptic::assemble_linear(&g, &spec, &bc)?;
        let guess = vec![self.p1; g.n_unknowns()];
        let opts = SolveOptions { tol: 1e-12, ..SolveOptions::default() };
        let (p, _) = elliptic::solve_linear(&sys, &guess, &opts)?;
        Ok(math::max_abs(p.values.iter().zip(&omega).map(|(a, b)| a - b)))
    }

    /// Errors on each grid and the observed orders between neighbours.
    pub fn study(&self, sizes: &[usize]) -> Result<(Vec<f64>, Vec<f64>), Error> {
        let errs = sizes.iter().map(|&n| self.error(n)).collect::<Result<Vec<_>, _>>()?;
        let orders = errs
            .windows(2)
            .zip(sizes.windows(2))
            .map(|(e, n)| math::ln(e[0] / e[1]) / math::ln(n[1] as f64 / n[0] as f64))
            .collect();
        Ok((errs, orders))
    }
}
