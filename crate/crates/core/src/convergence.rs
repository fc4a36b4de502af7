//! Self-convergence on a refinement ladder `K, 2K, 4K` and rhs consistency on smooth data.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::{project, GridFunction, GridSpec, PeriodicGrid};
use crate::ldg::{exact_kmn_rhs, LdgOperator};
use crate::timestepper::{run, RunConfig, RunStatus};

/// Differences below this fraction of the quantity's scale count as round-off.
pub const DEGENERATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatus {
    Measured,
    /// Both differences at round-off (e.g. an exact steady state).
    Degenerate,
}

/// Non-finite entries (unused slots, orders of zero errors) are written as `null`
/// and read back as NaN.
mod nullable {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(v: &[f64; N], s: S) -> Result<S::Ok, S::Error> {
        let opt: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        opt.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error> {
        let opt: Vec<Option<f64>> = Vec::deserialize(d)?;
        let n = opt.len();
        opt.into_iter()
            .map(|x| x.unwrap_or(f64::NAN))
            .collect::<Vec<_>>()
            .try_into()
            .map_err(|_| serde::de::Error::invalid_length(n, &"a fixed-length array"))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let opt: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
            opt.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            let opt: Vec<Option<f64>> = Vec::deserialize(d)?;
            Ok(opt.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
        }
    }
}

/// One quantity on the three levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub quantity: String,
    /// Per level for functionals; for `l2` and rhs errors, per pair or level as documented.
    #[serde(with = "nullable")]
    pub values: [f64; 3],
    /// Errors the orders are measured from.
    #[serde(with = "nullable::vec")]
    pub errors: Vec<f64>,
    /// `log₂(errors[i] / errors[i+1])`.
    #[serde(with = "nullable::vec")]
    pub orders: Vec<f64>,
    pub status: OrderStatus,
}

impl ConvergenceRow {
    /// The order on the finest available pair.
    pub fn order(&self) -> Option<f64> {
        match self.status {
            OrderStatus::Measured => self.orders.last().copied(),
            OrderStatus::Degenerate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub ladder: [usize; 3],
    pub t_end: f64,
    pub poly_order: usize,
    /// Solution self-convergence: `‖u_K − u_2K‖₂`, `‖u_2K − u_4K‖₂`.
    pub solution: ConvergenceRow,
    /// Functionals at `t_end`; errors are successive differences.
    pub functionals: Vec<ConvergenceRow>,
    /// `L(Πu₀)` against the exact operator, when the initial condition has closed-form derivatives.
    pub rhs_nodal: Option<ConvergenceRow>,
    pub rhs_cell_average: Option<ConvergenceRow>,
    pub smooth_ic: bool,
}

impl ConvergenceReport {
    pub fn rows(&self) -> impl Iterator<Item = &ConvergenceRow> {
        std::iter::once(&self.solution)
            .chain(&self.functionals)
            .chain(self.rhs_nodal.as_ref())
            .chain(self.rhs_cell_average.as_ref())
    }
}

fn row(quantity: &str, values: [f64; 3], errors: Vec<f64>, scale: f64) -> ConvergenceRow {
    let floor = DEGENERATE_TOLERANCE * scale.max(1.0);
    let floors = vec![floor; errors.len()];
    row_with_floors(quantity, values, errors, &floors)
}

fn row_with_floors(quantity: &str, values: [f64; 3], errors: Vec<f64>, floors: &[f64]) -> ConvergenceRow {
    let degenerate = errors.iter().zip(floors).all(|(e, f)| e.abs() <= *f);
    let orders = errors.windows(2).map(|w| (w[0].abs() / w[1].abs()).log2()).collect();
    ConvergenceRow {
        quantity: quantity.to_string(),
        values,
        errors,
        orders,
        status: if degenerate { OrderStatus::Degenerate } else { OrderStatus::Measured },
    }
}

/// `‖a − b‖₂` with quadrature on the cells of `fine`.
fn l2_distance(a: &GridFunction, b: &GridFunction, fine: &PeriodicGrid) -> f64 {
    let basis = &fine.basis;
    let mut total = 0.0;
    for j in 0..fine.num_cells() {
        for (q, w) in basis.quad_weights.iter().enumerate() {
            let x = fine.quad_x(j, q);
            let d = a.eval(x) - b.eval(x);
            total += 0.5 * fine.dx() * w * d * d;
        }
    }
    total.sqrt()
}

fn level_grid(base: &GridSpec, k: usize) -> GridSpec {
    GridSpec { num_cells: k, ..*base }
}

/// Run `base` on `K, 2K, 4K` cells, with `K = base.grid.num_cells`.
pub fn convergence_study(base: &RunConfig) -> Result<ConvergenceReport> {
    base.validate()?;
    let k0 = base.grid.num_cells;
    let ladder = [k0, 2 * k0, 4 * k0];

    let mut finals = Vec::with_capacity(3);
    let mut records: Vec<DiagnosticsRecord> = Vec::with_capacity(3);
    for &k in &ladder {
        let cfg = RunConfig {
            grid: level_grid(&base.grid, k),
            snapshot_times: Vec::new(),
            diagnostics_stride: u64::MAX,
            ..base.clone()
        };
        let out = run(&cfg)?;
        if out.status == RunStatus::Blowup {
            return Err(Error::Domain(format!("refinement level K = {k} blew up: {:?}", out.events.last())));
        }
        records.push(*out.diagnostics.last().expect("a completed run records its final state"));
        finals.push(out.final_state.u);
    }

    let fine = PeriodicGrid::new(level_grid(&base.grid, ladder[2]))?;
    let e01 = l2_distance(&finals[0], &finals[1], &fine);
    let e12 = l2_distance(&finals[1], &finals[2], &fine);
    let norm = l2_distance(&finals[2], &GridFunction::zeros(&fine), &fine);
    let solution = row("l2", [e01, e12, f64::NAN], vec![e01, e12], norm);

    let named: [(&str, fn(&DiagnosticsRecord) -> f64); 7] = [
        ("I1", |r| r.i1),
        ("I_omega", |r| r.i_omega),
        ("hamiltonian", |r| r.hamiltonian),
        ("xmom", |r| r.xmom),
        ("x3mom", |r| r.x3mom),
        ("conv_flux", |r| r.conv_flux),
        ("disp_mass", |r| r.disp_mass),
    ];
    let functionals = named
        .iter()
        .map(|(name, get)| {
            let v = [get(&records[0]), get(&records[1]), get(&records[2])];
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            row(name, v, vec![v[0] - v[1], v[1] - v[2]], scale)
        })
        .collect();

    let (rhs_nodal, rhs_cell_average) = match consistency_errors(base, &ladder)? {
        Some((nodal, avg, floors)) => (
            Some(row_with_floors("rhs_nodal", nodal, nodal.to_vec(), &floors)),
            Some(row_with_floors("rhs_cell_average", avg, avg.to_vec(), &floors)),
        ),
        None => (None, None),
    };

    Ok(ConvergenceReport {
        ladder,
        t_end: base.t_end,
        poly_order: base.grid.poly_order,
        solution,
        functionals,
        rhs_nodal,
        rhs_cell_average,
        smooth_ic: base.ic.is_smooth(),
    })
}

/// Round-off level of the dispersive chain, `(P+1)⁶ max|u|ⁿ / dx³` in units of ε.
const RHS_ROUNDOFF_ULPS: f64 = 100.0;

/// Max nodal and max cell-average error of `L(Πu₀) − Π(exact)` on each level,
/// with the round-off floor of each level.
fn consistency_errors(base: &RunConfig, ladder: &[usize; 3]) -> Result<Option<([f64; 3], [f64; 3], Vec<f64>)>> {
    let ic = &base.ic;
    if ic.derivatives(base.grid.x_left).is_none() {
        return Ok(None);
    }
    let mut nodal = [0.0; 3];
    let mut avg = [0.0; 3];
    let mut floors = vec![0.0; 3];
    for (i, &k) in ladder.iter().enumerate() {
        let grid = PeriodicGrid::new(level_grid(&base.grid, k))?;
        let op = LdgOperator::new(base.spec, grid.clone(), base.flux_mode)?;
        let u = project(&grid, |x| ic.eval(x))?;
        let exact = project(&grid, |x| exact_kmn_rhs(&base.spec, ic.derivatives(x).expect("smooth IC")))?;
        let mut d = op.rhs(&u)?;
        d.axpby(1.0, -1.0, &exact);
        nodal[i] = d.max_abs_nodal();
        avg[i] = d.cell_averages().into_iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let amp = ((grid.poly_order() + 1) as f64).powi(6) / grid.dx().powi(3);
        floors[i] = RHS_ROUNDOFF_ULPS * f64::EPSILON * amp * u.max_abs_nodal().powf(base.spec.n());
    }
    Ok(Some((nodal, avg, floors)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equations::{make_kmn, InitialCondition};
    use crate::ldg::FluxMode;
    use crate::timestepper::{DEFAULT_BREACH_THRESHOLD, DEFAULT_CFL, DEFAULT_JUMP_THRESHOLD};
    use std::f64::consts::PI;

    fn base(ic: InitialCondition, k: usize, t_end: f64) -> RunConfig {
        RunConfig {
            spec: make_kmn(2.0, 2.0).unwrap(),
            grid: GridSpec::new(0.0, 2.0 * PI, k, 3),
            ic,
            t_end,
            cfl: DEFAULT_CFL,
            snapshot_times: vec![],
            breach_threshold: DEFAULT_BREACH_THRESHOLD,
            jump_threshold: DEFAULT_JUMP_THRESHOLD,
            diagnostics_stride: 100,
            flux_mode: FluxMode::GlobalLaxFriedrichs,
        }
    }

    #[test]
    fn constant_state_is_degenerate() {
        let r = convergence_study(&base(InitialCondition::Cosine { mean: 1.5, amplitude: 0.0, wavenumber: 1.0 }, 6, 1e-3))
            .unwrap();
        assert_eq!(r.ladder, [6, 12, 24]);
        assert_eq!(r.solution.status, OrderStatus::Degenerate, "{:?}", r.solution);
        assert!(r.solution.order().is_none());
        let i1 = r.functionals.iter().find(|f| f.quantity == "I1").unwrap();
        assert_eq!(i1.status, OrderStatus::Degenerate);
        assert_eq!(r.rhs_nodal.as_ref().unwrap().status, OrderStatus::Degenerate);

        // NaN slots survive a JSON round trip
        let text = serde_json::to_string(&r).unwrap();
        let back: ConvergenceReport = serde_json::from_str(&text).unwrap();
        assert!(back.solution.values[2].is_nan());
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn smooth_data_converges() {
        let ic = InitialCondition::Cosine { mean: 2.0, amplitude: 1.0, wavenumber: 1.0 };
        let r = convergence_study(&base(ic, 8, 2e-3)).unwrap();
        assert!(r.smooth_ic);
        let order = r.solution.order().unwrap();
        assert!(order >= 2.5, "{:?}", r.solution);
        assert!(r.rhs_cell_average.as_ref().unwrap().order().unwrap() >= 1.5);
        assert_eq!(r.rows().count(), 1 + 7 + 2);
    }

    #[test]
    fn compact_bump_report_is_well_formed() {
        let ic = InitialCondition::CosCubedBump { center: PI, half_width: 2.0, scale: 1.0 };
        let r = convergence_study(&base(ic, 8, 1e-3)).unwrap();
        assert!(!r.smooth_ic && r.rhs_nodal.is_none());
        assert!(r.rows().all(|row| row.errors.len() == 2 && row.orders.len() == 1));
    }
}
