//! A priori upper bounds on the lifespan of strong solutions, from the initial data alone.
//!
//! All three bounds come from the centre-of-mass argument: while the support
//! stays inside `[x₀, x₁]`, `d/dt ∫xu = ∫u^m` is bounded below, yet `∫xu`
//! cannot exceed `x₁ I₁`.
//!
//! The third-moment bound is not translation invariant as written. It is
//! evaluated in the frame where the support midpoint sits at the origin.

use serde::{Deserialize, Serialize};

use crate::diagnostics::holder_floor_value;
use crate::equations::{EquationSpec, InitialCondition};
use crate::error::{Error, Result};
use crate::grid::{pow_kmn, GridFunction};
use crate::quadrature::gauss_legendre;
use crate::timestepper::{Event, EventKind};

/// Composite panels over the support for pointwise data.
pub const BOUNDS_PANELS: usize = 4096;
const PANEL_POINTS: usize = 8;
/// Relative level below which grid data counts as vacuum.
pub const SUPPORT_DETECTION: f64 = 1e-12;
/// Relative tolerance on negative values of `u₀`.
pub const SIGN_TOLERANCE: f64 = 1e-12;

/// Where `u₀` comes from.
#[derive(Debug, Clone, Copy)]
pub enum InitialData<'a> {
    /// A profile with declared support inside the periodic domain `[left, right]`.
    Pointwise { ic: &'a InitialCondition, domain: (f64, f64) },
    /// A discrete field; the support is detected from its nodes.
    Grid(&'a GridFunction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Applicability {
    pub t1: bool,
    pub t2: bool,
    pub t3: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub x0: f64,
    pub x1: f64,
    pub d: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I_omega")]
    pub i_omega: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: Option<f64>,
    #[serde(rename = "T3")]
    pub t3: f64,
    /// Hölder lower bound `I₁^m d^{1−m}` on `∫u^m`.
    pub floor: f64,
    pub applicable: Applicability,
}

impl BoundsReport {
    /// Smallest applicable bound.
    pub fn min_bound(&self) -> f64 {
        let mut b = f64::INFINITY;
        if self.applicable.t1 {
            b = b.min(self.t1);
        }
        if let (true, Some(t2)) = (self.applicable.t2, self.t2) {
            b = b.min(t2);
        }
        if self.applicable.t3 {
            b = b.min(self.t3);
        }
        b
    }
}

/// Integrals of `u₀` over `[x₀, x₁]`, with `s = x − (x₀ + x₁)/2`.
struct Moments {
    i1: f64,
    s1: f64,
    s3: f64,
    pow_omega: f64,
}

pub fn compute_bounds(spec: &EquationSpec, data: InitialData<'_>) -> Result<BoundsReport> {
    if !spec.is_kmn() {
        return Err(Error::Domain(format!("lifespan bounds are derived for K(m, n) only, got {spec}")));
    }
    let omega = spec.omega();
    let (x0, x1, mom) = match data {
        InitialData::Pointwise { ic, domain } => pointwise_moments(ic, domain, omega)?,
        InitialData::Grid(u) => grid_moments(u, omega)?,
    };
    let (m, n) = (spec.m(), spec.n());
    let d = x1 - x0;
    let h = 0.5 * d;
    let i1 = mom.i1;
    let floor = holder_floor_value(m, i1, d)?;

    // x₁I₁ − ∫xu₀ = ∫(x₁ − x)u₀, evaluated about the midpoint
    let num1 = h * i1 - mom.s1;
    let t1 = num1 / floor;
    let t2 = spec.is_k_n_plus_1_n().then(|| num1 / mom.pow_omega);
    let t3 = (h.powi(3) * i1 - mom.s3) / (6.0 * i1.powf(n) * d.powf(1.0 - n));
    if let Some(t2) = t2 {
        debug_assert!(t2 <= t1 * (1.0 + 1e-9), "T2 = {t2} exceeds T1 = {t1}");
    }

    Ok(BoundsReport {
        x0,
        x1,
        d,
        i1,
        i_omega: mom.pow_omega / omega,
        t1,
        t2,
        t3,
        floor,
        applicable: Applicability { t1: true, t2: t2.is_some(), t3: true },
    })
}

fn check_support(x0: f64, x1: f64, (left, right): (f64, f64)) -> Result<()> {
    if !(x0 > left && x1 < right) {
        return Err(Error::SupportAtBoundary { x0, x1, left, right });
    }
    Ok(())
}

fn pointwise_moments(ic: &InitialCondition, domain: (f64, f64), omega: f64) -> Result<(f64, f64, Moments)> {
    ic.validate()?;
    let (x0, x1) = ic
        .support()
        .ok_or_else(|| Error::Domain("initial condition is not compactly supported".into()))?;
    check_support(x0, x1, domain)?;

    let c = 0.5 * (x0 + x1);
    let (xi, w) = gauss_legendre(PANEL_POINTS);
    let h = (x1 - x0) / BOUNDS_PANELS as f64;
    let mut mom = Moments { i1: 0.0, s1: 0.0, s3: 0.0, pow_omega: 0.0 };
    let mut peak = 0.0f64;
    let mut lowest = (f64::INFINITY, 0.0);
    for p in 0..BOUNDS_PANELS {
        let mid = x0 + (p as f64 + 0.5) * h;
        for (z, wt) in xi.iter().zip(&w) {
            let x = mid + 0.5 * h * z;
            let u = ic.eval(x);
            if !u.is_finite() {
                return Err(Error::NonFinite { x, value: u });
            }
            peak = peak.max(u.abs());
            if u < lowest.0 {
                lowest = (u, x);
            }
            let (s, ww) = (x - c, 0.5 * h * wt);
            mom.i1 += ww * u;
            mom.s1 += ww * s * u;
            mom.s3 += ww * s * s * s * u;
            mom.pow_omega += ww * pow_kmn(u, omega);
        }
    }
    check_sign(peak, lowest)?;
    Ok((x0, x1, mom))
}

fn grid_moments(u: &GridFunction, omega: f64) -> Result<(f64, f64, Moments)> {
    u.check_finite()?;
    let g = u.grid();
    let n = g.nodes_per_cell();
    let peak = u.max_abs_nodal();
    let lowest = u
        .nodes()
        .map(|(_, _, x, v)| (v, x))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    check_sign(peak, lowest)?;

    let level = SUPPORT_DETECTION * peak;
    let active: Vec<usize> = (0..g.num_cells()).filter(|&j| u.cell(j).iter().any(|v| v.abs() > level)).collect();
    let (first, last) = (active[0], active[active.len() - 1]);
    let x0 = g.cell_center(first) - 0.5 * g.dx();
    let x1 = g.cell_center(last) + 0.5 * g.dx();
    // touching the seam also covers a support that wraps around it
    if first == 0 || last + 1 == g.num_cells() {
        return Err(Error::SupportAtBoundary { x0, x1, left: g.x_left(), right: g.x_right() });
    }
    debug_assert_eq!(u.coeffs().len(), g.num_cells() * n);

    let c = 0.5 * (x0 + x1);
    let mom = Moments {
        i1: u.integrate(),
        s1: u.quad_sum(|x, v| (x - c) * v),
        s3: u.quad_sum(|x, v| (x - c).powi(3) * v),
        pow_omega: u.integrate_power(omega)?,
    };
    Ok((x0, x1, mom))
}

fn check_sign(peak: f64, (value, x): (f64, f64)) -> Result<()> {
    if peak == 0.0 {
        return Err(Error::Trivial);
    }
    if value < -SIGN_TOLERANCE * peak {
        return Err(Error::SignViolation { x, value });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Ok,
    Violation,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub verdict: Verdict,
    pub bound: f64,
    pub event_time: Option<f64>,
    pub event_kind: Option<EventKind>,
}

/// Compare the earliest support breach or regularity loss with the smallest applicable bound.
pub fn bound_vs_event(report: &BoundsReport, events: &[Event], t_end: f64) -> BoundCheck {
    let bound = report.min_bound();
    let first = events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::SupportBreach | EventKind::RegularityLoss))
        .min_by(|a, b| a.t.total_cmp(&b.t));
    let verdict = match first {
        Some(e) if e.t <= bound => Verdict::Ok,
        Some(_) => Verdict::Violation,
        None if t_end < bound => Verdict::Inconclusive,
        None => Verdict::Violation,
    };
    BoundCheck { verdict, bound, event_time: first.map(|e| e.t), event_kind: first.map(|e| e.kind) }
}
