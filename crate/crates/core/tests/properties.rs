use pgs_core::elliptic::{zeta, zeta_prime};
use pgs_core::grid::build_grid;
use pgs_core::riemann::{far_field_states, WaveFan};
use pgs_core::shock::{damp, map_j, oblique_coeffs, shock_rhs_g, Branch};
use pgs_core::{build_wave_fan, initial_shock, DomainGrid, PressureField, RiemannConfig, SolverConfig, SymmetryMode, WaveKind};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = RiemannConfig> {
    (0.2f64..1.5, 0.05f64..2.0, -1.0f64..1.0, -1.0f64..1.0, 0.05f64..1.0, 0.2f64..1.4).prop_map(
        |(p2, dp, u1, v1, a1, a2)| RiemannConfig { p1: p2 + dp, u1, v1, p2, alpha1: a1, alpha2: a2 },
    )
}

/// `(p, r, r', p2)` with `p2 < p`, the shock ODE active and `r'` on it.
fn admissible_triple() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.2f64..1.5, 0.01f64..2.0, 0.0f64..1.0, 1e-3f64..1.0).prop_map(|(p2, dp, t, lift)| {
        let p = p2 + dp;
        let pbar = 0.5 * (p + p2);
        let r = (pbar * (1.0 + lift)).sqrt();
        let rp = t * shock_rhs_g(p, r, p2, Branch::Right);
        (p, r, rp, p2)
    })
}

fn fill(grid: &DomainGrid, f: impl Fn(f64, f64) -> f64) -> PressureField {
    let mut p = PressureField::constant(grid, 0.0);
    p.values[0] = f(0.0, 0.0);
    for i in 1..=grid.ns {
        for j in 0..grid.nt() {
            p.values[grid.index(i, j)] = f(grid.radius(i, j), grid.thetas[j]);
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn obliqueness_identity((p, r, rp, p2) in admissible_triple()) {
        let c = oblique_coeffs(p, r, rp, p2);
        let lhs = c.beta1 - c.beta2 * rp;
        let pbar = 0.5 * (p + p2);
        let rhs = -2.0 * rp * (1.0 - pbar / p);
        let scale = 1.0f64.max(c.beta1.abs()).max((c.beta2 * rp).abs());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{lhs} vs {rhs}");
        prop_assert!((c.mu - rhs).abs() <= 1e-12 * scale);
        // Strictly oblique wherever the shock is not tangent to a circle.
        prop_assert!(rp == 0.0 || c.mu < 0.0);
    }

    #[test]
    fn cutoff_is_monotone_with_unit_slope_cap(s in -1.0f64..1.0, h in 1e-6f64..0.1, eps in 1e-6f64..0.5) {
        let d = zeta(s + h, eps) - zeta(s, eps);
        prop_assert!(d >= -1e-15);
        prop_assert!(d <= h * (1.0 + 1e-9));
        let zp = zeta_prime(s, eps);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&zp));
        prop_assert!(zeta(s, eps) >= -0.5 * eps - 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn far_field_fan_satisfies_jump_relations(cfg in config()) {
        let states = far_field_states(&cfg);
        // Shocks carry the squared relation, vortex sheets no pressure jump.
        let fan = match build_wave_fan(&cfg) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        for itf in fan.interfaces() {
            let (a, b) = (states[itf.left], states[itf.right]);
            match itf.expected {
                WaveKind::ShockPlus | WaveKind::ShockMinus => prop_assert!(WaveFan::rh_residual(&a, &b) < 1e-12),
                _ => prop_assert!((a.p - b.p).abs() < 1e-12),
            }
        }
    }

    #[test]
    fn shock_map_is_admissible_and_order_preserving(a in 0.0f64..1.0, b in 0.0f64..1.0, k in 1u32..4, phase in 0.0f64..6.3, gap in 0.0f64..0.3) {
        let fan = build_wave_fan(&RiemannConfig::default()).unwrap();
        let cfg = SolverConfig { ns: 8, ntheta: 64, ..SolverConfig::default() };
        let s = initial_shock(&fan, &cfg);
        let g = build_grid(fan.r1, &s, 8, 64, SymmetryMode::Half).unwrap();
        let (p1, p2) = (fan.p1(), fan.p2());
        // Smooth fields in [p2, p1], the second pointwise above the first.
        let lo = |r: f64, t: f64| {
            let w = 0.5 * (1.0 + (k as f64 * t + phase).sin());
            p1 - (p1 - p2) * (0.2 + 0.6 * a * w) * (r / fan.r1)
        };
        let hi = |r: f64, t: f64| lo(r, t) + gap * b * (p1 - lo(r, t));
        let ml = map_j(&g, &fill(&g, lo), p1, p2, fan.r2).unwrap().shock;
        let mh = map_j(&g, &fill(&g, hi), p1, p2, fan.r2).unwrap().shock;
        prop_assert!(ml.validate(fan.r1, fan.r2).is_ok());
        prop_assert!(mh.validate(fan.r1, fan.r2).is_ok());
        for (x, y) in ml.r.iter().zip(&mh.r) {
            prop_assert!(x <= &(y + 1e-12), "{x} > {y}");
        }
        let mixed = damp(&s, &ml, 0.5);
        prop_assert!(mixed.validate(fan.r1, fan.r2).is_ok());
    }
}
