//! SSP-RK3 time integration with dispersive CFL control and event monitors.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord, Thresholds};
use crate::equations::{EquationSpec, InitialCondition};
use crate::error::{Error, Result};
use crate::grid::{project, GridFunction, GridSpec, PeriodicGrid};
use crate::ldg::{FluxMode, LdgOperator};

/// Guard for the all-zero state in [`cfl_dt`].
pub const SPEED_FLOOR: f64 = 1e-14;

pub const DEFAULT_CFL: f64 = 2e-4;
pub const DEFAULT_BREACH_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_JUMP_THRESHOLD: f64 = 0.05;
/// Growth of `max|u|` beyond this multiple of `max|u₀|` is treated as blowup;
/// the dispersive step size shrinks like `1/max|u|`, so a runaway would
/// otherwise stall rather than overflow.
pub const AMPLITUDE_LIMIT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SupportBreach,
    RegularityLoss,
    Blowup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub u: GridFunction,
    pub t: f64,
    pub step: u64,
    pub events: Vec<Event>,
}

impl SimState {
    pub fn new(u: GridFunction) -> Self {
        Self { u, t: 0.0, step: 0, events: Vec::new() }
    }

    pub fn blown_up(&self) -> bool {
        self.events.iter().any(|e| e.kind == EventKind::Blowup)
    }

    pub fn first_event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: EquationSpec,
    pub grid: GridSpec,
    pub ic: InitialCondition,
    pub t_end: f64,
    pub cfl: f64,
    pub snapshot_times: Vec<f64>,
    /// Relative to `max|u₀|`.
    pub breach_threshold: f64,
    /// Absolute bound on interface jumps of the second broken derivative.
    pub jump_threshold: f64,
    pub diagnostics_stride: u64,
    pub flux_mode: FluxMode,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.spec.is_kmn() {
            return Err(Error::Domain("time evolution requires a = 0".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Domain(format!("t_end must be finite and >= 0, got {}", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Domain(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.breach_threshold > 0.0) || !(self.jump_threshold > 0.0) {
            return Err(Error::Domain("thresholds must be positive".into()));
        }
        if self.diagnostics_stride == 0 {
            return Err(Error::Domain("diagnostics_stride must be >= 1".into()));
        }
        if self.snapshot_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Domain("snapshot times must be finite and >= 0".into()));
        }
        self.ic.validate()?;
        PeriodicGrid::new(self.grid)?;
        Ok(())
    }
}

/// `cfl · min(dx / conv, dx³ / disp)` with both speeds floored at [`SPEED_FLOOR`].
pub fn cfl_dt(op: &LdgOperator, u: &GridFunction, cfl: f64) -> f64 {
    let dx = op.grid().dx();
    let (conv, disp) = op.max_wave_speeds(u);
    cfl * (dx / conv.max(SPEED_FLOOR)).min(dx.powi(3) / disp.max(SPEED_FLOOR))
}

/// One SSP-RK3 step. A non-finite stage freezes the state and appends a blowup event.
pub fn step(op: &LdgOperator, state: &SimState, dt: f64) -> SimState {
    match ssp_rk3(op, &state.u, dt) {
        Ok(u) => SimState { u, t: state.t + dt, step: state.step + 1, events: state.events.clone() },
        Err(e) => {
            let mut frozen = state.clone();
            frozen.events.push(Event { t: state.t, kind: EventKind::Blowup, detail: e.to_string() });
            frozen
        }
    }
}

fn ssp_rk3(op: &LdgOperator, u: &GridFunction, dt: f64) -> Result<GridFunction> {
    let mut l = GridFunction::zeros(op.grid());

    op.rhs_into(u, &mut l)?;
    let mut u1 = u.clone();
    u1.axpby(1.0, dt, &l);

    op.rhs_into(&u1, &mut l)?;
    // u2 = ¾u + ¼(u1 + dt L(u1))
    u1.axpby(0.25, 0.25 * dt, &l);
    u1.axpby(1.0, 0.75, u);
    let u2 = u1;

    op.rhs_into(&u2, &mut l)?;
    // u⁺ = (u + 2(u2 + dt L(u2)))/3. The weights fl(⅓) + fl(⅔) sum to 1 − 2⁻⁵⁴,
    // which would shrink the mass by that factor on every step.
    let mut out = u2;
    out.axpby(2.0, 2.0 * dt, &l);
    out.axpby(1.0, 1.0, u);
    out.coeffs_mut().iter_mut().for_each(|v| *v /= 3.0);
    out.check_finite()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Blowup,
}

/// Worst values seen by the monitors before the first support breach (or the end of the run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub peak0: f64,
    pub support0: Option<(f64, f64)>,
    pub pre_breach_max_outside: f64,
    pub pre_breach_min_u: f64,
    pub pre_breach_max_jump2: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Vec<(f64, GridFunction)>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub events: Vec<Event>,
    pub status: RunStatus,
    pub final_state: SimState,
    pub monitors: MonitorSummary,
}

impl RunOutcome {
    pub fn first_event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    /// Records strictly before the first support breach.
    pub fn pre_breach_diagnostics(&self) -> &[DiagnosticsRecord] {
        let cut = self.first_event(EventKind::SupportBreach).map(|e| e.t).unwrap_or(f64::INFINITY);
        let end = self.diagnostics.partition_point(|r| r.t < cut);
        &self.diagnostics[..end]
    }
}

/// Node indices lying outside `[x0 − dx, x1 + dx]`.
fn outside_nodes(grid: &PeriodicGrid, support: Option<(f64, f64)>) -> Vec<usize> {
    let Some((x0, x1)) = support else { return Vec::new() };
    let (lo, hi) = (x0 - grid.dx(), x1 + grid.dx());
    let n = grid.nodes_per_cell();
    (0..grid.num_cells() * n)
        .filter(|&idx| {
            let x = grid.node_x(idx / n, idx % n);
            x < lo || x > hi
        })
        .collect()
}

/// Traces of the second broken derivative at the two cell ends, as row vectors.
fn second_derivative_trace_rows(grid: &PeriodicGrid) -> (Vec<f64>, Vec<f64>) {
    let n = grid.nodes_per_cell();
    let b = &grid.basis;
    let s = (2.0 / grid.dx()).powi(2);
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    // row · D · D, D[i][k] = diff[i * n + k]
    for k in 0..n {
        let mut l = 0.0;
        let mut r = 0.0;
        for i in 0..n {
            let mut dd = 0.0;
            for j in 0..n {
                dd += b.diff[i * n + j] * b.diff[j * n + k];
            }
            l += b.at_left[i] * dd;
            r += b.at_right[i] * dd;
        }
        left[k] = s * l;
        right[k] = s * r;
    }
    (left, right)
}

fn max_jump2(u: &GridFunction, rows: &(Vec<f64>, Vec<f64>)) -> f64 {
    let k = u.grid().num_cells();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    (0..k)
        .map(|j| (dot(&rows.1, u.cell(j)) - dot(&rows.0, u.cell((j + 1) % k))).abs())
        .fold(0.0, f64::max)
}

/// Integrate a configured experiment to `t_end` or the first blowup.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let grid = PeriodicGrid::new(config.grid)?;
    let op = LdgOperator::new(config.spec, Arc::clone(&grid), config.flux_mode)?;
    let u0 = project(&grid, |x| config.ic.eval(x))?;

    let peak0 = u0.max_abs_nodal();
    let breach_level = config.breach_threshold * peak0;
    let thresholds = Thresholds { support: breach_level };
    let support0 = config.ic.support();
    let outside = outside_nodes(&grid, support0);
    let jump_rows = (grid.poly_order() >= 2).then(|| second_derivative_trace_rows(&grid));

    let mut targets: Vec<f64> = config.snapshot_times.iter().copied().filter(|&t| t > 0.0 && t <= config.t_end).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    if targets.last().copied() != Some(config.t_end) && config.t_end > 0.0 {
        targets.push(config.t_end);
    }
    let snapshot_wanted = |t: f64| config.snapshot_times.contains(&t);

    let mut state = SimState::new(u0);
    let mut trajectory = vec![(0.0, state.u.clone())];
    let mut diagnostics = vec![diagnostics::record(&config.spec, &state.u, 0.0, thresholds)];
    let mut monitors = MonitorSummary {
        peak0,
        support0,
        pre_breach_max_outside: outside.iter().map(|&i| state.u.coeffs()[i].abs()).fold(0.0, f64::max),
        pre_breach_min_u: state.u.min_nodal(),
        pre_breach_max_jump2: jump_rows.as_ref().map(|r| max_jump2(&state.u, r)).unwrap_or(f64::NAN),
    };
    let mut breached = false;
    let mut irregular = false;

    for target in targets {
        while state.t < target {
            let mut dt = cfl_dt(&op, &state.u, config.cfl);
            let landing = state.t + dt >= target;
            if landing {
                dt = target - state.t;
            }
            let next = step(&op, &state, dt);
            if next.blown_up() {
                state = next;
                let status = RunStatus::Blowup;
                return Ok(finish(config, state, trajectory, diagnostics, status, monitors, thresholds));
            }
            state = next;
            if landing {
                state.t = target;
            }
            let amplitude = state.u.max_abs_nodal();
            if peak0 > 0.0 && amplitude > AMPLITUDE_LIMIT * peak0 {
                state.events.push(Event {
                    t: state.t,
                    kind: EventKind::Blowup,
                    detail: format!("max|u| = {amplitude:.3e} exceeds {AMPLITUDE_LIMIT} x max|u0|"),
                });
                return Ok(finish(config, state, trajectory, diagnostics, RunStatus::Blowup, monitors, thresholds));
            }

            let max_out = outside.iter().map(|&i| state.u.coeffs()[i].abs()).fold(0.0, f64::max);
            if !breached {
                if max_out > breach_level {
                    breached = true;
                    let idx = outside.iter().copied().find(|&i| state.u.coeffs()[i].abs() > breach_level).unwrap();
                    let n = grid.nodes_per_cell();
                    let x = grid.node_x(idx / n, idx % n);
                    state.events.push(Event {
                        t: state.t,
                        kind: EventKind::SupportBreach,
                        detail: format!("|u| = {max_out:.3e} > {breach_level:.3e} at x = {x:.6}"),
                    });
                } else {
                    monitors.pre_breach_max_outside = monitors.pre_breach_max_outside.max(max_out);
                    monitors.pre_breach_min_u = monitors.pre_breach_min_u.min(state.u.min_nodal());
                }
            }
            if let Some(rows) = &jump_rows {
                let jump = max_jump2(&state.u, rows);
                if !breached {
                    monitors.pre_breach_max_jump2 = monitors.pre_breach_max_jump2.max(jump);
                }
                if !irregular && jump > config.jump_threshold {
                    irregular = true;
                    state.events.push(Event {
                        t: state.t,
                        kind: EventKind::RegularityLoss,
                        detail: format!("max second-derivative jump {jump:.3e} > {:.3e}", config.jump_threshold),
                    });
                }
            }

            let at_snapshot = landing && snapshot_wanted(state.t);
            if state.step.is_multiple_of(config.diagnostics_stride) || at_snapshot {
                diagnostics.push(diagnostics::record(&config.spec, &state.u, state.t, thresholds));
            }
            if at_snapshot {
                trajectory.push((state.t, state.u.clone()));
            }
        }
    }

    if diagnostics.last().map(|r| r.t) != Some(state.t) {
        diagnostics.push(diagnostics::record(&config.spec, &state.u, state.t, thresholds));
    }
    Ok(finish(config, state, trajectory, diagnostics, RunStatus::Completed, monitors, thresholds))
}

fn finish(
    config: &RunConfig,
    state: SimState,
    trajectory: Vec<(f64, GridFunction)>,
    mut diagnostics: Vec<DiagnosticsRecord>,
    status: RunStatus,
    monitors: MonitorSummary,
    thresholds: Thresholds,
) -> RunOutcome {
    if status == RunStatus::Completed && diagnostics.last().map(|r| r.t) != Some(state.t) {
        diagnostics.push(diagnostics::record(&config.spec, &state.u, state.t, thresholds));
    }
    RunOutcome { trajectory, diagnostics, events: state.events.clone(), status, final_state: state, monitors }
}
