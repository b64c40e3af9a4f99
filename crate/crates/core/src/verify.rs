//! Post-hoc checks of the qualitative properties a converged solution must
//! have. Every check is a pure function of the solution, and every check
//! records the threshold it was judged against.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::grid::SymmetryMode;
use crate::math::{self, PI};
use crate::recovery::CompositeSolution;

/// Slack on the pressure bounds.
pub const BOUND_SLACK: f64 = 1e-8;
/// Relative band for the extrapolated sonic slope.
pub const SONIC_SLOPE_BAND: f64 = 0.05;
/// Angular band around `P1`/`P3` excluded from sonic probes.
pub const CORNER_BAND: f64 = 0.15;
/// Probes near the sonic arc use nodes with `x <= X_PROBE * r1`.
pub const X_PROBE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Not enough resolution to decide; does not count as a failure.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub threshold: f64,
    pub values: Vec<(String, f64)>,
    pub note: Option<String>,
}

impl Check {
    fn new(name: &str, pass: bool, threshold: f64, values: &[(&str, f64)]) -> Self {
        Check {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            threshold,
            values: values.iter().map(|(k, v)| (String::from(*k), *v)).collect(),
            note: None,
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyReport {
    pub checks: Vec<Check>,
}

impl PropertyReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// True unless some check failed outright.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }
}

pub fn check_bounds(sol: &CompositeSolution) -> Check {
    let (p1, p2) = (sol.fan.p1(), sol.fan.p2());
    let (lo, hi) = (sol.pressure.min(), sol.pressure.max());
    let pass = lo > p2 - BOUND_SLACK && hi <= p1 + BOUND_SLACK;
    Check::new("pressure_bounds", pass, BOUND_SLACK, &[("p_min", lo), ("p_max", hi), ("p1", p1), ("p2", p2)])
}

/// Pressure and radius margins over the shock.
pub fn check_shock_gap(sol: &CompositeSolution) -> Check {
    let g = &sol.grid;
    let p_gap = sol.pressure.boundary_trace(g, &g.shock_columns()).iter().map(|p| p - sol.fan.p2()).fold(f64::INFINITY, f64::min);
    let r_gap = sol.shock.r.iter().map(|r| r - sol.fan.r2).fold(f64::INFINITY, f64::min);
    Check::new("shock_gap", p_gap > 0.0 && r_gap > 0.0, 0.0, &[("pressure_gap", p_gap), ("radius_gap", r_gap)])
}

/// The shock ODE clamp may only be active at `P2`.
pub fn check_clamp(sol: &CompositeSolution) -> Check {
    let k0 = sol.shock.p2_index();
    let away = sol.shock.frozen.iter().enumerate().filter(|(k, f)| **f && *k != k0).count();
    Check::new("clamp_inactive", away == 0, 0.0, &[("frozen_away_from_p2", away as f64)])
}

/// Discrete convexity of the shock as a graph `eta(xi)`.
pub fn check_convexity(sol: &CompositeSolution) -> Check {
    let r1 = sol.fan.r1;
    let tol = -1e-6 * r1;
    let pts = sol.shock.cartesian();
    let n = pts.len();
    if n < 5 || pts.windows(2).any(|w| !(w[1][0] > w[0][0])) {
        return Check::new("convexity", false, tol, &[]).with_note("shock is not a graph over xi".into());
    }
    let (x0, x1) = (pts[0][0], pts[n - 1][0]);
    let margin = 0.1 * (x1 - x0);
    let mut min_all = f64::INFINITY;
    let mut min_interior = f64::INFINITY;
    for k in 1..n - 1 {
        let (a, b, c) = (pts[k - 1], pts[k], pts[k + 1]);
        let d2 = 2.0 * ((c[1] - b[1]) / (c[0] - b[0]) - (b[1] - a[1]) / (b[0] - a[0])) / (c[0] - a[0]);
        min_all = min_all.min(d2);
        if b[0] > x0 + margin && b[0] < x1 - margin {
            min_interior = min_interior.min(d2);
        }
    }
    // Slope implied by the jump relations with the computed trace, against
    // the finite-difference slope of the curve, on the right half.
    let g = &sol.grid;
    let mut slope_dev: f64 = 0.0;
    for j in g.shock_columns() {
        let th = g.thetas[j];
        if !(th > 1.5 * PI + 1e-9) || g.shock_rprime[j] == 0.0 {
            continue;
        }
        let r = g.rb[j];
        let (xi, eta) = (r * math::cos(th), r * math::sin(th));
        let pbar = 0.5 * (sol.pressure.at(g, g.ns, j) + sol.fan.p2());
        let disc = pbar * (r * r - pbar);
        if !(disc >= 0.0) || math::abs(xi * xi - pbar) < 1e-12 {
            continue;
        }
        let formula = (xi * eta + math::sqrt(disc)) / (xi * xi - pbar);
        let rp = g.shock_rprime[j];
        let fd = (rp * math::sin(th) + r * math::cos(th)) / (rp * math::cos(th) - r * math::sin(th));
        slope_dev = slope_dev.max(math::abs(formula - fd));
    }
    let pass = min_all >= tol && min_interior > 0.0;
    Check::new(
        "convexity",
        pass,
        tol,
        &[("min_second_difference", min_all), ("interior_min", min_interior), ("slope_formula_deviation", slope_dev)],
    )
}

fn sonic_station_columns(sol: &CompositeSolution) -> Vec<usize> {
    let g = &sol.grid;
    (0..g.nt())
        .filter(|&j| {
            if g.on_shock[j] {
                return false;
            }
            let t = math::wrap_from(g.thetas[j], 0.5 * PI);
            math::abs(t - sol.fan.theta1) > CORNER_BAND
                && math::abs(t - sol.fan.theta3) > CORNER_BAND
                && (t > sol.fan.theta1 || t < sol.fan.theta3)
        })
        .collect()
}

/// `phi = p1 - p` against `x = r1 - r` along sonic columns:
/// `0 <= phi <= 2 r1 x` near the arc, and the fitted `k` in `(2 r1 - k) x`.
pub fn check_sonic_bounds(sol: &CompositeSolution) -> Check {
    let g = &sol.grid;
    let (p1, r1) = (sol.fan.p1(), sol.fan.r1);
    let mut min_phi = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    for j in sonic_station_columns(sol) {
        for i in (1..g.ns).rev() {
            let x = r1 - g.radius(i, j);
            if x > X_PROBE * r1 {
                break;
            }
            let phi = p1 - sol.pressure.at(g, i, j);
            min_phi = min_phi.min(phi);
            max_ratio = max_ratio.max(phi / x);
        }
    }
    let pass = min_phi >= -BOUND_SLACK && max_ratio <= 2.0 * r1 + BOUND_SLACK;
    Check::new(
        "sonic_phi_bounds",
        pass,
        2.0 * r1,
        &[("min_phi", min_phi), ("max_phi_over_x", max_ratio), ("k_fitted", 2.0 * r1 - max_ratio)],
    )
}

/// Extrapolated `phi_x` at the boundary node of column `j`, from the two
/// nearest interior nodes (`phi(0) = 0` on the sonic arc).
fn sonic_slope(sol: &CompositeSolution, j: usize) -> f64 {
    let g = &sol.grid;
    let p1 = sol.fan.p1();
    let n = g.ns;
    let x1 = (1.0 - g.s(n - 1)) * g.rb[j];
    let d1 = (p1 - sol.pressure.at(g, n - 1, j)) / x1;
    let d2 = (p1 - sol.pressure.at(g, n - 2, j)) / (2.0 * x1);
    2.0 * d1 - d2
}

/// `phi_x` at the top of the sonic arc should approach `r1`.
pub fn check_sonic_slope(sol: &CompositeSolution) -> Check {
    let g = &sol.grid;
    let r1 = sol.fan.r1;
    let mid = (0..g.nt())
        .min_by(|&a, &b| {
            let da = math::abs(math::wrap_from(g.thetas[a], 0.0) - 0.5 * PI);
            let db = math::abs(math::wrap_from(g.thetas[b], 0.0) - 0.5 * PI);
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    let slope = sonic_slope(sol, mid);
    let pass = math::abs(slope - r1) <= SONIC_SLOPE_BAND * r1;
    Check::new("sonic_phi_x", pass, SONIC_SLOPE_BAND * r1, &[("phi_x", slope), ("r1", r1)])
}

/// Linear extrapolation to `t0` from the two samples nearest to it.
fn extrapolate(samples: &mut [(f64, f64)], t0: f64) -> Option<f64> {
    samples.sort_by(|a, b| math::abs(a.0 - t0).partial_cmp(&math::abs(b.0 - t0)).unwrap());
    let (a, b) = (*samples.first()?, *samples.get(1)?);
    if a.0 == b.0 {
        return Some(a.1);
    }
    Some(a.1 + (b.1 - a.1) * (t0 - a.0) / (b.0 - a.0))
}

/// Limits of `phi_x` at a corner along the sonic arc and along the shock
/// must differ by at least `r1 / 2`.
fn corner(sol: &CompositeSolution, name: &str, theta_c: f64) -> Check {
    let g = &sol.grid;
    let r1 = sol.fan.r1;
    let n = g.ns;
    let reach = 4.0 * g.dtheta;
    let mut sonic = Vec::new();
    let mut along = Vec::new();
    for j in 0..g.nt() {
        let mut t = math::wrap_from(g.thetas[j], 0.5 * PI);
        if g.mode == SymmetryMode::Half && theta_c < 1.5 * PI {
            t = 3.0 * PI - t;
        }
        if math::abs(t - theta_c) > reach {
            continue;
        }
        if g.on_shock[j] {
            // One node inside the shock, radial centred difference of p.
            let dpr = (sol.pressure.at(g, n, j) - sol.pressure.at(g, n - 2, j)) / (2.0 * g.ds * g.rb[j]);
            along.push((t, dpr));
        } else {
            sonic.push((t, sonic_slope(sol, j)));
        }
    }
    match (extrapolate(&mut sonic, theta_c), extrapolate(&mut along, theta_c)) {
        (Some(a), Some(b)) => {
            let d = math::abs(a - b);
            Check::new(name, d >= 0.5 * r1, 0.5 * r1, &[("sonic_limit", a), ("shock_limit", b), ("disparity", d)])
        }
        _ => Check {
            status: Status::Inconclusive,
            ..Check::new(name, false, 0.5 * r1, &[])
        }
        .with_note(format!("fewer than two probe columns on each side within {reach:.3} rad")),
    }
}

pub fn check_corner_disparity(sol: &CompositeSolution) -> [Check; 2] {
    [corner(sol, "corner_disparity_p1", sol.fan.theta1), corner(sol, "corner_disparity_p3", sol.fan.theta3)]
}

/// Distance from `(r, theta)` to the sonic arc (the part of the circle
/// `r = r1` outside `(theta3, theta1)`).
fn sonic_distance(sol: &CompositeSolution, r: f64, theta: f64) -> f64 {
    let t = math::wrap_from(theta, 0.5 * PI);
    let r1 = sol.fan.r1;
    if t >= sol.fan.theta1 || t <= sol.fan.theta3 {
        return r1 - r;
    }
    let (x, y) = (r * math::cos(t), r * math::sin(t));
    let d = |a: f64| math::hypot(x - r1 * math::cos(a), y - r1 * math::sin(a));
    d(sol.fan.theta1).min(d(sol.fan.theta3))
}

/// Largest `lambda` with `p - r^2 >= lambda dist(., sonic arc)` on interior nodes.
pub fn check_ellipticity(sol: &CompositeSolution) -> Check {
    let g = &sol.grid;
    let mut lambda = (sol.pressure.values[0]) / sol.fan.r1;
    let mut margin = sol.pressure.values[0];
    for i in 1..g.ns {
        for j in 0..g.nt() {
            let r = g.radius(i, j);
            let gap = sol.pressure.at(g, i, j) - r * r;
            margin = margin.min(gap);
            let d = sonic_distance(sol, r, g.thetas[j]);
            if d > 0.0 {
                lambda = lambda.min(gap / d);
            }
        }
    }
    Check::new("ellipticity", lambda > 0.0, 0.0, &[("lambda", lambda), ("min_p_minus_r2", margin)])
}

/// Runs every check.
pub fn verify_solution(sol: &CompositeSolution) -> PropertyReport {
    let [c1, c3] = check_corner_disparity(sol);
    PropertyReport {
        checks: alloc::vec![
            check_bounds(sol),
            check_shock_gap(sol),
            check_clamp(sol),
            check_convexity(sol),
            check_sonic_bounds(sol),
            check_sonic_slope(sol),
            c1,
            c3,
            check_ellipticity(sol),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, PressureField, ShockCurve};
    use crate::riemann::{build_wave_fan, RiemannConfig};
    use crate::shock;
    use alloc::vec;

    fn with_shock(shock: ShockCurve, field: impl Fn(f64, f64) -> f64) -> CompositeSolution {
        let fan = build_wave_fan(&RiemannConfig::default()).unwrap();
        let g = build_grid(fan.r1, &shock, 32, 128, SymmetryMode::Half).unwrap();
        let mut p = PressureField::constant(&g, fan.p1());
        for i in 1..=g.ns {
            for j in 0..g.nt() {
                let k = g.index(i, j);
                p.values[k] = field(g.radius(i, j), g.thetas[j]);
            }
        }
        CompositeSolution::new(fan, shock, g, p)
    }

    fn line_shock() -> ShockCurve {
        let fan = build_wave_fan(&RiemannConfig::default()).unwrap();
        shock::shock_from_trace(fan.theta1, 2.0 * PI / 128.0, fan.r1, fan.r2, fan.p2(), &|_| fan.p1())
    }

    #[test]
    fn line_shock_gap_matches_geometry() {
        let sol = with_shock(line_shock(), |_, _| 2.0);
        let c = check_shock_gap(&sol);
        assert!(c.passed());
        // The frozen arc inherits the RK4 error of the coarse lattice.
        let want = 1.5f64.sqrt() - 1.0;
        assert!((c.value("radius_gap").unwrap() - want).abs() < 5e-4);
    }

    #[test]
    fn shock_on_inner_circle_fails_gap_only() {
        // Negative control: an arc of the state-2 sonic circle around P2.
        let mut s = line_shock();
        let k0 = s.p2_index();
        for k in k0 - 3..=k0 + 3 {
            s.r[k] = 1.0;
            s.rprime[k] = 0.0;
        }
        let sol = with_shock(s, |r, _| 2.0 - 0.5 * (2.0 - r * r));
        assert!(!check_shock_gap(&sol).passed());
        assert!(check_bounds(&sol).passed());
        assert!(check_ellipticity(&sol).passed());
    }

    #[test]
    fn out_of_range_pressure_fails_bounds() {
        let sol = with_shock(line_shock(), |_, _| 2.0 + 1e-6);
        assert!(!check_bounds(&sol).passed());
    }

    #[test]
    fn planar_lines_are_convex_not_strictly() {
        // Right half on S41+, mirrored onto S12-: a V with straight sides.
        let fan = build_wave_fan(&RiemannConfig::default()).unwrap();
        let sq = fan.pbar0.sqrt();
        let phi = 1.5 * PI + fan.config.alpha1;
        let mut th: Vec<f64> = (0..)
            .map(|k| 1.5 * PI + k as f64 * 2.0 * PI / 128.0)
            .take_while(|t| *t < fan.theta1 - 1e-3)
            .collect();
        th.push(fan.theta1);
        let r: Vec<f64> = th.iter().map(|t| sq / (t - phi).cos()).collect();
        let rp: Vec<f64> = th.iter().zip(&r).map(|(t, r)| r * (t - phi).tan()).collect();
        let s = ShockCurve::from_right_branch(&th, &r, &rp, &vec![false; th.len()]);
        let sol = with_shock(s, |_, _| 2.0);
        let c = check_convexity(&sol);
        assert!(c.value("min_second_difference").unwrap() >= -1e-6 * fan.r1, "{c:?}");
        assert!(c.value("interior_min").unwrap().abs() < 1e-9, "{c:?}");
        assert!(!c.passed());
    }

    #[test]
    fn sonic_checks_on_model_field() {
        // p = p1 - r1 (r1 - r) near the arc has phi_x = r1 exactly.
        let r1 = 2f64.sqrt();
        let sol = with_shock(line_shock(), move |r, _| 2.0 - r1 * (r1 - r));
        let s = check_sonic_slope(&sol);
        assert!(s.passed(), "{s:?}");
        assert!((s.value("phi_x").unwrap() - r1).abs() < 1e-9);
        let b = check_sonic_bounds(&sol);
        assert!(b.passed(), "{b:?}");
        assert!((b.value("k_fitted").unwrap() - r1).abs() < 1e-9);
    }

    #[test]
    fn constant_field_has_no_corner_disparity() {
        let sol = with_shock(line_shock(), |_, _| 2.0);
        for c in check_corner_disparity(&sol) {
            assert_eq!(c.status, Status::Fail, "{c:?}");
            assert!(c.value("disparity").unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn ellipticity_constant_for_model_field() {
        // p - r^2 = r1 (r1 - r) on the disk part, so lambda ~ r1 there.
        let r1 = 2f64.sqrt();
        let sol = with_shock(line_shock(), move |r, _| r * r + r1 * (r1 - r));
        let c = check_ellipticity(&sol);
        assert!(c.passed());
        assert!(c.value("lambda").unwrap() > 0.0);
    }

    #[test]
    fn report_collects_every_check() {
        let sol = with_shock(line_shock(), |_, _| 2.0);
        let rep = verify_solution(&sol);
        assert_eq!(rep.checks.len(), 9);
        assert!(!rep.all_passed());
        assert!(rep.get("pressure_bounds").unwrap().passed());
    }
}
