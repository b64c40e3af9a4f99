//! Nested iteration: Picard on the frozen-coefficient operator, damped
//! shock updates, and continuation in the regularization parameter.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::elliptic::{self, BoundaryData, OperatorSpec};
use crate::grid::{build_grid, DomainGrid, PressureField, ShockCurve, SymmetryMode};
use crate::math;
use crate::riemann::WaveFan;
use crate::shock;
use crate::sparse::SolveOptions;
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub ns: usize,
    pub ntheta: usize,
    pub eps_schedule: Vec<f64>,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub shock_damping: f64,
    pub outer_tol: f64,
    pub outer_max: usize,
    pub linear: SolveOptions,
    pub mode: SymmetryMode,
}

/// Geometric schedule from `first` down to `last` with ratio `1/sqrt(10)`.
pub fn default_schedule(first: f64, last: f64) -> Vec<f64> {
    let ratio = 1.0 / math::sqrt(10.0);
    let mut out = vec![first];
    let mut e = first;
    while e * ratio >= last * (1.0 - 1e-9) {
        let k = out.len() as i32;
        // Recompute from the start to avoid accumulating rounding.
        e = first * math::powi(ratio, k);
        out.push(e);
    }
    out
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            ns: 128,
            ntheta: 256,
            eps_schedule: default_schedule(1e-1, 1e-6),
            picard_tol: 1e-9,
            picard_max: 200,
            shock_damping: 0.5,
            outer_tol: 1e-7,
            outer_max: 1000,
            linear: SolveOptions::default(),
            mode: SymmetryMode::Half,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.eps_schedule.is_empty()
            || self.eps_schedule.iter().any(|e| !(*e > 0.0))
            || self.eps_schedule.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(Error::Config("eps_schedule must be positive and strictly decreasing".into()));
        }
        if !(self.shock_damping > 0.0 && self.shock_damping <= 1.0) {
            return Err(Error::Config("shock_damping in (0, 1] required".into()));
        }
        if self.ns < 4 || self.ntheta < 16 || self.ntheta % 2 != 0 {
            return Err(Error::Config("ns >= 4 and even ntheta >= 16 required".into()));
        }
        if !(self.picard_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the convergence history, recorded per shock update.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub epsilon: f64,
    pub outer: usize,
    pub shock_change: f64,
    pub picard_iterations: usize,
    pub linear_residual: f64,
    pub branch_mismatch: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// `min (p - p2)` over shock nodes.
    pub shock_gap: f64,
    /// `min (p - r^2)` over interior nodes.
    pub ellipticity_margin: f64,
    pub r_p2: f64,
    pub frozen: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
    /// Final shock of each completed stage.
    pub stage_shocks: Vec<(f64, ShockCurve)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedBoundaryInfo {
    pub iterations: usize,
    pub last_change: f64,
    pub linear_residual: f64,
}

/// Picard iteration for the pressure on a fixed domain. `p_hat` is the
/// one-point value imposed at `P2`.
pub fn solve_fixed_boundary(
    grid: &DomainGrid,
    fan: &WaveFan,
    p_hat: f64,
    epsilon: f64,
    cfg: &SolverConfig,
    init: &PressureField,
) -> Result<(PressureField, FixedBoundaryInfo), Error> {
    let (p1, p2) = (fan.p1(), fan.p2());
    let bc = BoundaryData::uniform(grid, p1, p2, p_hat);
    let mut p = init.clone();
    let mut changes: Vec<f64> = Vec::new();
    let mut growth = 0;
    let mut info = FixedBoundaryInfo { iterations: 0, last_change: f64::INFINITY, linear_residual: 0.0 };
    for it in 1..=cfg.picard_max {
        let spec = OperatorSpec { epsilon, omega: &p.values, source: None };
        let sys = elliptic::assemble_linear(grid, &spec, &bc)?;
        let (next, lin) = elliptic::solve_linear(&sys, &p.values, &cfg.linear)?;
        let change = math::max_abs(next.values.iter().zip(&p.values).map(|(a, b)| a - b));
        if !next.is_finite() {
            return Err(Error::PicardDivergence { changes });
        }
        if let Some(&last) = changes.last() {
            growth = if change > last { growth + 1 } else { 0 };
        }
        changes.push(change);
        p = next;
        info = FixedBoundaryInfo { iterations: it, last_change: change, linear_residual: lin.backward_error };
        if change <= cfg.picard_tol {
            break;
        }
        if growth >= 5 {
            return Err(Error::PicardDivergence { changes });
        }
        if p.min() <= 0.0 {
            return Err(Error::PicardDivergence { changes });
        }
    }
    let (lo, hi) = (p.min(), p.max());
    if lo < p2 - 1e-8 || hi > p1 + 1e-8 {
        return Err(Error::MaxPrinciple { min: lo, max: hi });
    }
    Ok((p, info))
}

fn ellipticity_margin(grid: &DomainGrid, p: &PressureField) -> f64 {
    let mut m = f64::INFINITY;
    for i in 1..grid.ns {
        for j in 0..grid.nt() {
            let r = grid.radius(i, j);
            m = m.min(p.at(grid, i, j) - r * r);
        }
    }
    m
}

fn shock_gap(grid: &DomainGrid, p: &PressureField, p2: f64) -> f64 {
    grid.shock_columns().iter().map(|&j| p.at(grid, grid.ns, j) - p2).fold(f64::INFINITY, f64::min)
}

/// Damped fixed-point iteration on the shock map at a fixed `epsilon`.
pub fn solve_free_boundary(
    fan: &WaveFan,
    epsilon: f64,
    cfg: &SolverConfig,
    init_shock: &ShockCurve,
    init_field: Option<&PressureField>,
    trace: &mut ConvergenceTrace,
) -> Result<(PressureField, ShockCurve, DomainGrid), Error> {
    let (p1, p2) = (fan.p1(), fan.p2());
    let mut shock_curve = init_shock.clone();
    let mut grid = build_grid(fan.r1, &shock_curve, cfg.ns, cfg.ntheta, cfg.mode)?;
    let mut field = match init_field {
        Some(f) if f.values.len() == grid.n_unknowns() => f.clone(),
        _ => PressureField::constant(&grid, p1),
    };
    let lambda = cfg.shock_damping;
    for outer in 1..=cfg.outer_max {
        let p_hat = shock::p_hat_at_p2(shock_curve.r_at_p2(), p2)?;
        let (p, info) = solve_fixed_boundary(&grid, fan, p_hat, epsilon, cfg, &field)?;
        field = p;
        let mapped = shock::map_j(&grid, &field, p1, p2, fan.r2)?;
        let change = math::max_abs(mapped.shock.r.iter().zip(&shock_curve.r).map(|(a, b)| a - b));
        let next = shock::damp(&shock_curve, &mapped.shock, lambda);
        trace.rows.push(TraceRow {
            epsilon,
            outer,
            shock_change: lambda * change,
            picard_iterations: info.iterations,
            linear_residual: info.linear_residual,
            branch_mismatch: mapped.branch_mismatch,
            p_min: field.min(),
            p_max: field.max(),
            shock_gap: shock_gap(&grid, &field, p2),
            ellipticity_margin: ellipticity_margin(&grid, &field),
            r_p2: next.r_at_p2(),
            frozen: next.frozen_count(),
        });
        shock_curve = next;
        grid = build_grid(fan.r1, &shock_curve, cfg.ns, cfg.ntheta, cfg.mode)?;
        if lambda * change <= cfg.outer_tol {
            let p_hat = shock::p_hat_at_p2(shock_curve.r_at_p2(), p2)?;
            let (p, _) = solve_fixed_boundary(&grid, fan, p_hat, epsilon, cfg, &field)?;
            return Ok((p, shock_curve, grid));
        }
    }
    let last_change = trace.rows.last().map_or(f64::INFINITY, |r| r.shock_change);
    Err(Error::OuterMaxExceeded { last_change })
}

/// Planar `S41+` shock with the pressure frozen at `p1`, mirrored onto the
/// left branch. Exact in the critical limit and admissible for every angle.
pub fn initial_shock(fan: &WaveFan, cfg: &SolverConfig) -> ShockCurve {
    let dtheta = 2.0 * math::PI / cfg.ntheta as f64;
    let p1 = fan.p1();
    shock::shock_from_trace(fan.theta1, dtheta, fan.r1, fan.r2, fan.p2(), &|_| p1)
}

/// Runs [`solve_free_boundary`] along the regularization schedule, warm
/// starting each stage from the previous one. The trace keeps every row
/// recorded before a failure.
pub fn continuation_from(
    fan: &WaveFan,
    cfg: &SolverConfig,
    init_shock: &ShockCurve,
    trace: &mut ConvergenceTrace,
) -> Result<(PressureField, ShockCurve, DomainGrid), Error> {
    cfg.validate()?;
    let mut shock_curve = init_shock.clone();
    let mut field: Option<PressureField> = None;
    let mut last = None;
    for &eps in &cfg.eps_schedule {
        let (p, s, g) = solve_free_boundary(fan, eps, cfg, &shock_curve, field.as_ref(), trace)
            .map_err(|e| Error::Stage { epsilon: eps, source: Box::new(e) })?;
        trace.stage_shocks.push((eps, s.clone()));
        shock_curve = s.clone();
        field = Some(p.clone());
        last = Some((p, s, g));
    }
    Ok(last.expect("validated schedule is non-empty"))
}

/// [`continuation_from`] starting at [`initial_shock`].
pub fn continuation_solve(
    fan: &WaveFan,
    cfg: &SolverConfig,
) -> Result<(PressureField, ShockCurve, DomainGrid, ConvergenceTrace), Error> {
    let mut trace = ConvergenceTrace::default();
    let init = initial_shock(fan, cfg);
    let (p, s, g) = continuation_from(fan, cfg, &init, &mut trace)?;
    Ok((p, s, g, trace))
}
