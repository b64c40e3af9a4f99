//! Far-field wave fan: four constant states separated by two planar shocks
//! and two vortex sheets, plus the sonic circles and the anchor points where
//! the shocks first meet the sonic circle of state 1.

use alloc::format;

use crate::math::{self, PI};
use crate::Error;

/// Problem datum. State 1 occupies the upper sector; states 2, 3, 4 share
/// the pressure `p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannConfig {
    pub p1: f64,
    pub u1: f64,
    pub v1: f64,
    pub p2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for RiemannConfig {
    fn default() -> Self {
        RiemannConfig {
            p1: 2.0,
            u1: 0.0,
            v1: 0.0,
            p2: 1.0,
            alpha1: PI / 4.0,
            alpha2: PI / 4.0,
        }
    }
}

impl RiemannConfig {
    /// Checks the invariants shared by the regular and the critical path.
    /// `alpha1 = 0` is accepted here; [`build_wave_fan`] rejects it.
    pub fn validate(&self) -> Result<(), Error> {
        let finite = [self.p1, self.u1, self.v1, self.p2, self.alpha1, self.alpha2]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Config("all configuration values must be finite".into()));
        }
        if !(self.p2 > 0.0) {
            return Err(Error::Config(format!("p2 > 0 required (got p2 = {})", self.p2)));
        }
        if !(self.p1 > self.p2) {
            return Err(Error::Config(format!(
                "p1 > p2 required (got p1 = {}, p2 = {})",
                self.p1, self.p2
            )));
        }
        if !(self.alpha1 >= 0.0 && self.alpha1 < PI / 2.0) {
            return Err(Error::Config(format!(
                "alpha1 in [0, pi/2) required (got {})",
                self.alpha1
            )));
        }
        if !(self.alpha2 > 0.0 && self.alpha2 < PI / 2.0) {
            return Err(Error::Config(format!(
                "alpha2 in (0, pi/2) required (got {})",
                self.alpha2
            )));
        }
        Ok(())
    }

    pub fn is_critical(&self) -> bool {
        self.alpha1 == 0.0
    }

    pub fn pbar0(&self) -> f64 {
        0.5 * (self.p1 + self.p2)
    }

    /// Strength `[p]/sqrt(pbar)` of both initial shocks.
    pub fn jump_speed(&self) -> f64 {
        (self.p1 - self.p2) / math::sqrt(self.pbar0())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub p: f64,
    pub u: f64,
    pub v: f64,
}

impl State {
    pub fn new(p: f64, u: f64, v: f64) -> Self {
        State { p, u, v }
    }

    pub fn energy(&self) -> f64 {
        0.5 * (self.u * self.u + self.v * self.v) + self.p
    }
}

/// Line `{x : normal . x = offset}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarLine {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl PlanarLine {
    pub fn signed_distance(&self, xi: f64, eta: f64) -> f64 {
        self.normal[0] * xi + self.normal[1] * eta - self.offset
    }

    pub fn distance_to_origin(&self) -> f64 {
        math::abs(self.offset)
    }
}

/// Half-line from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub direction: [f64; 2],
}

impl Ray {
    pub fn angle(&self) -> f64 {
        math::angle_from(self.direction[0], self.direction[1], PI / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveKind {
    ShockPlus,
    ShockMinus,
    VortexPlus,
    VortexMinus,
    None,
}

/// One of the four far-field interfaces, described in the orientation used by
/// [`classify_discontinuity`]: `left` lies to the left of `direction`, which
/// points towards the far field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface {
    pub name: &'static str,
    pub left: usize,
    pub right: usize,
    pub direction: [f64; 2],
    pub expected: WaveKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFan {
    pub config: RiemannConfig,
    /// States 1 to 4 at indices 0 to 3.
    pub states: [State; 4],
    pub shock_s12m: PlanarLine,
    pub shock_s41p: PlanarLine,
    pub vortex_j23p: Ray,
    pub vortex_j34m: Ray,
    pub r1: f64,
    pub r2: f64,
    /// Angle of `P1`, unwrapped into `(3pi/2, 5pi/2)`.
    pub theta1: f64,
    /// Angle of `P3`, equal to `3pi - theta1`.
    pub theta3: f64,
    pub pbar0: f64,
}

/// Closed-form far-field states without any invariant checks. Used directly
/// only by tests that need degenerate data such as `p1 = p2`.
pub fn far_field_states(cfg: &RiemannConfig) -> [State; 4] {
    let k = cfg.jump_speed();
    let (sa, ca) = (math::sin(cfg.alpha1), math::cos(cfg.alpha1));
    let sb = math::sin(cfg.alpha2);
    let s1 = State::new(cfg.p1, cfg.u1, cfg.v1);
    let s2 = State::new(cfg.p2, cfg.u1 - k * sa, cfg.v1 - k * ca);
    let s3 = State::new(cfg.p2, cfg.u1, cfg.v1 + k * (sa / sb - ca));
    let s4 = State::new(cfg.p2, cfg.u1 + k * sa, cfg.v1 - k * ca);
    [s1, s2, s3, s4]
}

fn vortex_direction(a: &State, b: &State, fallback: [f64; 2]) -> [f64; 2] {
    let (du, dv) = (b.u - a.u, b.v - a.v);
    let n = math::hypot(du, dv);
    let (mut x, mut y) = if n > 1e-14 { (du / n, dv / n) } else { (fallback[0], fallback[1]) };
    if y > 0.0 {
        x = -x;
        y = -y;
    }
    let n = math::hypot(x, y);
    [x / n, y / n]
}

pub fn build_wave_fan(cfg: &RiemannConfig) -> Result<WaveFan, Error> {
    cfg.validate()?;
    if cfg.is_critical() {
        return Err(Error::Config(
            "alpha1 = 0 is the critical case; use CriticalSolution".into(),
        ));
    }
    let states = far_field_states(cfg);
    let pbar0 = cfg.pbar0();
    let sq = math::sqrt(pbar0);
    let (sa, ca) = (math::sin(cfg.alpha1), math::cos(cfg.alpha1));
    let sb = math::sin(cfg.alpha2);
    let shock_s12m = PlanarLine { normal: [sa, ca], offset: -sq };
    let shock_s41p = PlanarLine { normal: [sa, -ca], offset: sq };
    let left_dir = [-1.0, -1.0 / sb];
    let right_dir = [1.0, -1.0 / sb];
    let vortex_j23p = Ray { direction: vortex_direction(&states[1], &states[2], left_dir) };
    let vortex_j34m = Ray { direction: vortex_direction(&states[2], &states[3], right_dir) };
    let r1 = math::sqrt(cfg.p1);
    let r2 = math::sqrt(cfg.p2);
    let (theta1, theta3) = anchor_angles(cfg)?;
    Ok(WaveFan {
        config: *cfg,
        states,
        shock_s12m,
        shock_s41p,
        vortex_j23p,
        vortex_j34m,
        r1,
        r2,
        theta1,
        theta3,
        pbar0,
    })
}

fn anchor_angles(cfg: &RiemannConfig) -> Result<(f64, f64), Error> {
    let r1 = math::sqrt(cfg.p1);
    let c = math::sqrt(cfg.pbar0()) / r1;
    if !(c < 1.0) {
        return Err(Error::Config("shock lines do not reach the sonic circle".into()));
    }
    // The foot of the perpendicular from the origin onto S41+ sits at angle
    // 3pi/2 + alpha1; the far-field intersection lies acos(c) further on.
    let theta1 = 1.5 * PI + cfg.alpha1 + math::acos(c);
    Ok((theta1, 3.0 * PI - theta1))
}

impl WaveFan {
    pub fn state(&self, idx: usize) -> State {
        self.states[idx]
    }

    pub fn p1(&self) -> f64 {
        self.config.p1
    }

    pub fn p2(&self) -> f64 {
        self.config.p2
    }

    /// Angle of `J23+` in `[pi/2, 5pi/2)`.
    pub fn theta_j23(&self) -> f64 {
        self.vortex_j23p.angle()
    }

    /// Angle of `J34-` in `[pi/2, 5pi/2)`.
    pub fn theta_j34(&self) -> f64 {
        self.vortex_j34m.angle()
    }

    pub fn interfaces(&self) -> [Interface; 4] {
        let (sa, ca) = (math::sin(self.config.alpha1), math::cos(self.config.alpha1));
        [
            Interface {
                name: "S12-",
                left: 1,
                right: 0,
                direction: [-ca, sa],
                expected: WaveKind::ShockMinus,
            },
            Interface {
                name: "J23+",
                left: 2,
                right: 1,
                direction: self.vortex_j23p.direction,
                expected: WaveKind::VortexPlus,
            },
            Interface {
                name: "J34-",
                left: 3,
                right: 2,
                direction: self.vortex_j34m.direction,
                expected: WaveKind::VortexMinus,
            },
            Interface {
                name: "S41+",
                left: 0,
                right: 3,
                direction: [ca, sa],
                expected: WaveKind::ShockPlus,
            },
        ]
    }

    /// Rankine-Hugoniot residual `|[p]^2 - pbar ([u]^2 + [v]^2)|` between two states.
    pub fn rh_residual(a: &State, b: &State) -> f64 {
        let pbar = 0.5 * (a.p + b.p);
        let (dp, du, dv) = (a.p - b.p, a.u - b.u, a.v - b.v);
        math::abs(dp * dp - pbar * (du * du + dv * dv))
    }
}

/// Returns `(theta1, theta3, P1, P3)`.
pub fn sonic_anchors(fan: &WaveFan) -> (f64, f64, [f64; 2], [f64; 2]) {
    let p = |t: f64| [fan.r1 * math::cos(t), fan.r1 * math::sin(t)];
    (fan.theta1, fan.theta3, p(fan.theta1), p(fan.theta3))
}

/// Relative tolerance used when testing the jump relations.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Classifies the discontinuity separating `left` (to the left of
/// `direction`) from `right`.
///
/// A vortex sheet carries no pressure jump and a velocity jump parallel to
/// the sheet; it is `VortexPlus` when `direction . (right - left)` is
/// positive. A shock satisfies the squared jump relation with a velocity jump
/// normal to the front, and the velocity must jump along the normal pointing
/// to the high-pressure side. It is `ShockPlus` when that normal lies to the
/// left of `direction`.
pub fn classify_discontinuity(left: &State, right: &State, direction: [f64; 2]) -> WaveKind {
    let [dx, dy] = direction;
    let (dp, du, dv) = (right.p - left.p, right.u - left.u, right.v - left.v);
    let scale = 1.0 + math::abs(left.p) + math::abs(right.p);
    let vel_scale = 1.0 + math::hypot(left.u, left.v) + math::hypot(right.u, right.v);
    let jump = math::hypot(du, dv);
    let tol = CLASSIFY_TOL;
    if math::abs(dp) <= tol * scale {
        if jump <= tol * vel_scale {
            return WaveKind::None;
        }
        let cross = dx * dv - dy * du;
        if math::abs(cross) > tol * vel_scale {
            return WaveKind::None;
        }
        return if dx * du + dy * dv > 0.0 { WaveKind::VortexPlus } else { WaveKind::VortexMinus };
    }
    let pbar = 0.5 * (left.p + right.p);
    if !(pbar > 0.0) {
        return WaveKind::None;
    }
    let rh = dp * dp - pbar * jump * jump;
    if math::abs(rh) > tol * scale * scale {
        return WaveKind::None;
    }
    if math::abs(dx * du + dy * dv) > tol * vel_scale {
        return WaveKind::None;
    }
    let (n, high, low) = if left.p > right.p {
        ([-dy, dx], left, right)
    } else {
        ([dy, -dx], right, left)
    };
    let entropy = (high.u - low.u) * n[0] + (high.v - low.v) * n[1];
    if entropy <= 0.0 {
        return WaveKind::None;
    }
    if dx * n[1] - dy * n[0] > 0.0 {
        WaveKind::ShockPlus
    } else {
        WaveKind::ShockMinus
    }
}

/// Piecewise-constant solution of the critical case `alpha1 = 0`: both shocks
/// merge into the horizontal line `eta = -sqrt(pbar0)` and states 2, 3, 4
/// coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSolution {
    pub upper: State,
    pub lower: State,
    pub line_eta: f64,
}

impl CriticalSolution {
    pub fn new(cfg: &RiemannConfig) -> Result<Self, Error> {
        cfg.validate()?;
        if !cfg.is_critical() {
            return Err(Error::Config("critical path requires alpha1 = 0".into()));
        }
        let states = far_field_states(cfg);
        Ok(CriticalSolution {
            upper: states[0],
            lower: states[1],
            line_eta: -math::sqrt(cfg.pbar0()),
        })
    }

    pub fn sample(&self, _xi: f64, eta: f64) -> State {
        if eta > self.line_eta {
            self.upper
        } else {
            self.lower
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_fan() -> WaveFan {
        build_wave_fan(&RiemannConfig::default()).unwrap()
    }

    #[test]
    fn default_state_two() {
        let fan = default_fan();
        let s2 = fan.states[1];
        let c = -(1.0 / 1.5f64.sqrt()) * (0.5f64.sqrt());
        assert!((s2.u - c).abs() < 1e-15 && (s2.v - c).abs() < 1e-15);
        assert!((s2.u + 0.5773502691896258).abs() < 1e-12);
    }

    #[test]
    fn near_critical_states_converge() {
        let cfg = RiemannConfig { alpha1: 1e-9, ..RiemannConfig::default() };
        let fan = build_wave_fan(&cfg).unwrap();
        let lim = -1.0 / 1.5f64.sqrt();
        for i in [1, 3] {
            assert!(fan.states[i].u.abs() < 1e-8);
            assert!((fan.states[i].v - lim).abs() < 1e-8);
        }
    }

    #[test]
    fn equal_pressures_collapse_fan() {
        let cfg = RiemannConfig { p1: 1.0, p2: 1.0, u1: 0.3, v1: -0.2, ..RiemannConfig::default() };
        let states = far_field_states(&cfg);
        for s in &states[1..] {
            assert_eq!(s.u, 0.3);
            assert_eq!(s.v, -0.2);
            assert_eq!(s.p, 1.0);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = RiemannConfig { p1: 1.0, p2: 1.0, ..RiemannConfig::default() };
        let err = build_wave_fan(&cfg).unwrap_err();
        assert!(alloc::format!("{err}").contains("p1 > p2 required"));
        let cfg = RiemannConfig { alpha2: 0.0, ..RiemannConfig::default() };
        assert!(build_wave_fan(&cfg).is_err());
        let cfg = RiemannConfig { alpha1: 0.0, ..RiemannConfig::default() };
        assert!(build_wave_fan(&cfg).is_err());
        assert!(CriticalSolution::new(&cfg).is_ok());
    }

    #[test]
    fn interfaces_follow_initial_pattern() {
        for &(a1, a2) in &[(0.3, 0.2), (PI / 4.0, PI / 4.0), (1.2, 0.7), (0.05, 1.4)] {
            let cfg = RiemannConfig { alpha1: a1, alpha2: a2, u1: 0.4, v1: -0.1, ..RiemannConfig::default() };
            let fan = build_wave_fan(&cfg).unwrap();
            for itf in fan.interfaces() {
                let kind = classify_discontinuity(&fan.states[itf.left], &fan.states[itf.right], itf.direction);
                assert_eq!(kind, itf.expected, "{} at ({a1}, {a2})", itf.name);
            }
        }
    }

    #[test]
    fn classify_plain_vortex() {
        let a = State::new(1.0, 0.0, 0.0);
        let b = State::new(1.0, 0.5, 0.5);
        let d = [0.5f64.sqrt(), 0.5f64.sqrt()];
        assert_eq!(classify_discontinuity(&a, &b, d), WaveKind::VortexPlus);
        assert_eq!(classify_discontinuity(&b, &a, d), WaveKind::VortexMinus);
        assert_eq!(classify_discontinuity(&a, &a, d), WaveKind::None);
        let c = State::new(1.0, 0.5, -0.5);
        assert_eq!(classify_discontinuity(&a, &c, d), WaveKind::None);
    }

    #[test]
    fn anchors_small_angle_limit() {
        let cfg = RiemannConfig { alpha1: 1e-12, ..RiemannConfig::default() };
        let fan = build_wave_fan(&cfg).unwrap();
        let (t1, t3, p1, _) = sonic_anchors(&fan);
        assert!((t1 - 5.0 * PI / 3.0).abs() < 1e-10);
        assert!((p1[0] - 0.5f64.sqrt()).abs() < 1e-10);
        assert!((p1[1] + 1.5f64.sqrt()).abs() < 1e-10);
        assert!((t3 - (3.0 * PI - t1)).abs() < 1e-15);
    }

    #[test]
    fn anchor_lies_on_line_and_circle() {
        // Independent oracle: bisection on the signed distance to S41+ along C1,
        // searching the arc beyond the foot of the perpendicular.
        let fan = default_fan();
        let line = fan.shock_s41p;
        let f = |t: f64| line.signed_distance(fan.r1 * t.cos(), fan.r1 * t.sin());
        let (mut lo, mut hi) = (1.5 * PI + fan.config.alpha1, 2.5 * PI);
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((fan.theta1 - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!((fan.theta1 - 23.0 * PI / 12.0).abs() < 1e-12);
    }

    #[test]
    fn line_distances_and_pressures() {
        let fan = default_fan();
        let sq = fan.pbar0.sqrt();
        assert!((fan.shock_s12m.distance_to_origin() - sq).abs() < 1e-15);
        assert!((fan.shock_s41p.distance_to_origin() - sq).abs() < 1e-15);
        assert_eq!(fan.states[1].p, fan.states[2].p);
        assert_eq!(fan.states[2].p, fan.states[3].p);
        assert_eq!(fan.r1, 2f64.sqrt());
        assert_eq!(fan.r2, 1.0);
    }

    #[test]
    fn energy_accessor() {
        let s = State::new(2.0, 3.0, 4.0);
        assert_eq!(s.energy(), 14.5);
    }

    #[test]
    fn critical_solution_sample() {
        let cfg = RiemannConfig { alpha1: 0.0, ..RiemannConfig::default() };
        let sol = CriticalSolution::new(&cfg).unwrap();
        assert_eq!(sol.sample(0.0, 0.0), sol.upper);
        assert_eq!(sol.sample(3.0, -2.0), sol.lower);
        assert!((sol.lower.v + 1.0 / 1.5f64.sqrt()).abs() < 1e-15);
    }
}
