//! Velocity recovery by radial integration of the pressure gradient, and
//! the composite sampler over the whole self-similar plane.
//!
//! Along each ray `u_r = p_xi / r` and `v_r = p_eta / r`. Integration starts
//! at the outer boundary node of every grid column and runs inwards, stopping
//! short of the origin where the velocity may be multi-valued.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{DomainGrid, PressureField, ShockCurve, SymmetryMode};
use crate::math::{self, PI};
use crate::riemann::{State, WaveFan};

/// Default inner cut-off, relative to the boundary radius.
pub const S_MIN: f64 = 1e-2;

/// Velocity on grid nodes with `s >= s_min`; `NaN` closer to the pole.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// First ring carrying values.
    pub i_min: usize,
    /// Index (0 to 3) of the far-field state used as boundary data per column.
    pub sector: Vec<u8>,
}

/// Index of the constant state occupying the supersonic side of the shock at
/// angle `theta` (in `[pi/2, 5pi/2)`). Rays themselves go to the lower-angle
/// sector.
pub fn shock_sector(fan: &WaveFan, theta: f64) -> usize {
    if theta <= fan.theta_j23() {
        1
    } else if theta <= fan.theta_j34() {
        2
    } else {
        3
    }
}

/// Velocity jump `inside - outside` across the shock at `(r, theta)` with
/// slope `rprime`, from the first two jump relations given the pressure jump
/// `dp = p_inside - p_outside`.
pub fn velocity_jump(dp: f64, r: f64, rprime: f64, theta: f64) -> (f64, f64) {
    let (st, ct) = (math::sin(theta), math::cos(theta));
    let q = rprime / r;
    (-(dp / r) * (ct + q * st), -(dp / r) * (st - q * ct))
}

/// Cartesian pressure gradient at node `(i, j)`, `1 <= i <= ns`.
pub fn pressure_gradient(grid: &DomainGrid, p: &PressureField, i: usize, j: usize) -> [f64; 2] {
    let at = |ii: usize, jj: isize| p.values[grid.index(ii, grid.column(jj))];
    let jj = j as isize;
    let ds = grid.ds;
    let p_s = if i < grid.ns {
        (at(i + 1, jj) - at(i - 1, jj)) / (2.0 * ds)
    } else {
        (3.0 * at(i, jj) - 4.0 * at(i - 1, jj) + at(i - 2, jj)) / (2.0 * ds)
    };
    let p_t = (at(i, jj + 1) - at(i, jj - 1)) / (2.0 * grid.dtheta);
    let big_r = grid.rb[j];
    let s = grid.s(i);
    let r = s * big_r;
    let p_r = p_s / big_r;
    let p_th = p_t - s * grid.rb_d1[j] * p_r;
    let (st, ct) = (math::sin(grid.thetas[j]), math::cos(grid.thetas[j]));
    [ct * p_r - st / r * p_th, st * p_r + ct / r * p_th]
}

/// Integrates the velocity inward from the boundary of every column.
pub fn recover_velocity(grid: &DomainGrid, p: &PressureField, fan: &WaveFan, s_min: f64) -> VelocityField {
    let n = grid.n_unknowns();
    let mut u = vec![f64::NAN; n];
    let mut v = vec![f64::NAN; n];
    let i_min = (libm::ceil(s_min / grid.ds) as usize).clamp(1, grid.ns);
    let mut sector = vec![0u8; grid.nt()];
    let p1_state = fan.state(0);
    for j in 0..grid.nt() {
        let nb = grid.ns;
        let top = grid.index(nb, j);
        let (mut uc, mut vc) = (p1_state.u, p1_state.v);
        if grid.on_shock[j] {
            let theta = math::wrap_from(grid.thetas[j], 0.5 * PI);
            let k = shock_sector(fan, theta);
            sector[j] = k as u8;
            let out = fan.state(k);
            let (du, dv) = velocity_jump(p.values[top] - out.p, grid.rb[j], grid.shock_rprime[j], grid.thetas[j]);
            uc = out.u + du;
            vc = out.v + dv;
        }
        u[top] = uc;
        v[top] = vc;
        let big_r = grid.rb[j];
        let f = |i: usize| {
            let g = pressure_gradient(grid, p, i, j);
            let r = grid.radius(i, j);
            (g[0] / r, g[1] / r)
        };
        let mut fo = f(nb);
        for i in (i_min..nb).rev() {
            let fi = f(i);
            uc -= 0.5 * (fi.0 + fo.0) * big_r * grid.ds;
            vc -= 0.5 * (fi.1 + fo.1) * big_r * grid.ds;
            let k = grid.index(i, j);
            u[k] = uc;
            v[k] = vc;
            fo = fi;
        }
    }
    VelocityField { u, v, i_min, sector }
}

/// Region reached by a query point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Outside the sonic circle of state 1; carries the state index.
    FarField(usize),
    /// Inside the sonic circle but beyond the diffracted shock.
    BeyondShock(usize),
    Subsonic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub p: f64,
    /// `None` inside the pole-excluded disk.
    pub velocity: Option<(f64, f64)>,
    pub region: Region,
}

/// Converged pressure, shock and recovered velocity, together with the wave
/// fan that supplies the supersonic states.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSolution {
    pub fan: WaveFan,
    pub shock: ShockCurve,
    pub grid: DomainGrid,
    pub pressure: PressureField,
    pub velocity: VelocityField,
}

impl CompositeSolution {
    pub fn new(fan: WaveFan, shock: ShockCurve, grid: DomainGrid, pressure: PressureField) -> Self {
        let velocity = recover_velocity(&grid, &pressure, &fan, S_MIN);
        CompositeSolution { fan, shock, grid, pressure, velocity }
    }

    /// Constant state outside the sonic circle.
    pub fn far_field_region(&self, xi: f64, eta: f64) -> usize {
        let above12 = self.fan.shock_s12m.signed_distance(xi, eta) > 0.0;
        let above41 = self.fan.shock_s41p.signed_distance(xi, eta) < 0.0;
        if above12 && above41 {
            0
        } else {
            shock_sector(&self.fan, math::angle_from(xi, eta, 0.5 * PI))
        }
    }

    fn region(&self, xi: f64, eta: f64) -> Region {
        let r = math::hypot(xi, eta);
        if r >= self.fan.r1 {
            return Region::FarField(self.far_field_region(xi, eta));
        }
        let theta = math::angle_from(xi, eta, 0.5 * PI);
        if theta > self.fan.theta3 && theta < self.fan.theta1 && r > self.grid.boundary_radius(theta) {
            return Region::BeyondShock(shock_sector(&self.fan, theta));
        }
        Region::Subsonic
    }

    fn velocity_at(&self, xi: f64, eta: f64) -> Option<(f64, f64)> {
        let mirrored = self.grid.mode == SymmetryMode::Half && xi < 0.0;
        let x = if mirrored { -xi } else { xi };
        let u = self.grid.sample(&self.velocity.u, x, eta)?;
        let v = self.grid.sample(&self.velocity.v, x, eta)?;
        if !(u.is_finite() && v.is_finite()) {
            return None;
        }
        // u - u1 is odd and v even under the reflection.
        let u = if mirrored { 2.0 * self.fan.state(0).u - u } else { u };
        Some((u, v))
    }

    pub fn sample(&self, xi: f64, eta: f64) -> Sample {
        let region = self.region(xi, eta);
        let constant = |s: State| Sample { p: s.p, velocity: Some((s.u, s.v)), region };
        match region {
            Region::FarField(k) | Region::BeyondShock(k) => constant(self.fan.state(k)),
            Region::Subsonic => {
                let p = self.grid.sample(&self.pressure.values, xi, eta).unwrap_or_else(|| {
                    // Between the linear boundary and a query on it: use the ring.
                    let theta = math::angle_from(xi, eta, 0.5 * PI);
                    let rb = self.grid.boundary_radius(theta);
                    let k = rb / math::hypot(xi, eta) * (1.0 - 1e-13);
                    self.grid.sample(&self.pressure.values, xi * k, eta * k).unwrap_or(self.fan.p1())
                });
                Sample { p, velocity: self.velocity_at(xi, eta), region }
            }
        }
    }
}

/// Free function form of [`CompositeSolution::sample`].
pub fn sample_solution(sol: &CompositeSolution, xi: f64, eta: f64) -> Sample {
    sol.sample(xi, eta)
}
