//! LDG spatial operator for `u_t = −(u^m)_x − (u^n)_xxx` on a periodic grid.
//!
//! The dispersive term is rewritten as the first-order chain
//!
//! ```text
//! w = u^n,   p = w_x,   q = p_x,   u_t + (u^m + q)_x = 0
//! ```
//!
//! with alternating interface values: `ŵ = w⁻`, `p̂ = p⁺`, `q̂ = q⁺`. Taking `ŵ`
//! and `q̂` from opposite sides makes the `[qw]` boundary terms cancel, and
//! `p̂ = p⁺` leaves the non-positive residue `−½[p]²` in `d/dt ∫u^{n+1}`.
//!
//! That estimate is only useful when `∫u^{n+1}` is coercive, i.e. when the
//! dispersion coefficient `n u^{n−1}` never changes sign. For even `n` an
//! undershoot below zero reverses it, and the alternating pattern is then
//! violently unstable, so `w` uses the odd extension `sign(u)|u|^n`. This is
//! `u^n` for every `u ≥ 0` and makes the nodal energy `Σ W|u|^{n+1}` decrease
//! under the dispersive chain.
//!
//! The convective flux is Lax–Friedrichs.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::equations::EquationSpec;
use crate::error::{Error, Result};
use crate::grid::{is_integer, pow_kmn, GridFunction, PeriodicGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxMode {
    /// One dissipation constant `max m|u|^{m−1}` over the whole grid.
    #[default]
    GlobalLaxFriedrichs,
    /// Dissipation constant from the two traces at each interface.
    LocalLaxFriedrichs,
}

#[derive(Debug)]
pub struct LdgOperator {
    spec: EquationSpec,
    grid: Arc<PeriodicGrid>,
    flux_mode: FluxMode,
    conv_pow: Power,
    disp_pow: Power,
    /// `vol[i * N + k] = W_k l_i'(ξ_k) / W_i`.
    vol: Vec<f64>,
    /// `conv_vol[i * Q + q] = W_q l_i'(ζ_q) / W_i`.
    conv_vol: Vec<f64>,
    /// `l_i(±1) / W_i`.
    lift_left: Vec<f64>,
    lift_right: Vec<f64>,
    scratch: Mutex<Scratch>,
}

#[derive(Debug, Default)]
struct Scratch {
    w: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    flux: Vec<f64>,
}

impl Clone for LdgOperator {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec,
            grid: Arc::clone(&self.grid),
            flux_mode: self.flux_mode,
            conv_pow: self.conv_pow,
            disp_pow: self.disp_pow,
            vol: self.vol.clone(),
            conv_vol: self.conv_vol.clone(),
            lift_left: self.lift_left.clone(),
            lift_right: self.lift_right.clone(),
            scratch: Mutex::default(),
        }
    }
}

/// `u^p` with the integer cases unrolled; see [`pow_kmn`].
#[derive(Debug, Clone, Copy)]
enum Power {
    Square,
    /// `u|u|`
    OddSquare,
    Cube,
    Int(i32),
    /// `sign(u)|u|^k`
    OddInt(i32),
    Real(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        match p {
            _ if p == 2.0 => Power::Square,
            _ if p == 3.0 => Power::Cube,
            _ if is_integer(p) => Power::Int(p as i32),
            _ => Power::Real(p),
        }
    }

    /// Odd extension of `u^p` for integer `p`: agrees with `u^p` on `u ≥ 0`.
    fn odd(p: f64) -> Self {
        match Power::new(p) {
            Power::Square => Power::OddSquare,
            Power::Int(k) if k % 2 == 0 => Power::OddInt(k),
            other => other,
        }
    }

    #[inline(always)]
    fn apply(self, u: f64) -> f64 {
        match self {
            Power::Square => u * u,
            Power::OddSquare => u * u.abs(),
            Power::Cube => u * u * u,
            Power::Int(k) => u.powi(k),
            Power::OddInt(k) => u.signum() * u.abs().powi(k),
            Power::Real(p) => pow_kmn(u, p),
        }
    }
}

impl LdgOperator {
    pub fn new(spec: EquationSpec, grid: Arc<PeriodicGrid>, flux_mode: FluxMode) -> Result<Self> {
        if !spec.is_kmn() {
            return Err(Error::Domain(format!(
                "the time-dependent solver handles K(m, n) (a = 0) only, got a = {}",
                spec.a()
            )));
        }
        let b = &grid.basis;
        let n = grid.nodes_per_cell();
        let nq = b.quad_weights.len();
        let mut vol = vec![0.0; n * n];
        let mut conv_vol = vec![0.0; n * nq];
        for i in 0..n {
            for k in 0..n {
                vol[i * n + k] = b.weights[k] * b.diff[k * n + i] / b.weights[i];
            }
            for q in 0..nq {
                conv_vol[i * nq + q] = b.quad_weights[q] * b.interp_diff[q * n + i] / b.weights[i];
            }
        }
        let lift_left = (0..n).map(|i| b.at_left[i] / b.weights[i]).collect();
        let lift_right = (0..n).map(|i| b.at_right[i] / b.weights[i]).collect();
        Ok(Self {
            spec,
            conv_pow: Power::new(spec.m()),
            disp_pow: Power::odd(spec.n()),
            grid,
            flux_mode,
            vol,
            conv_vol,
            lift_left,
            lift_right,
            scratch: Mutex::default(),
        })
    }

    pub fn spec(&self) -> &EquationSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn flux_mode(&self) -> FluxMode {
        self.flux_mode
    }

    /// `(max m|u|^{m−1}, max n|u|^{n−1})` over the nodes.
    pub fn max_wave_speeds(&self, u: &GridFunction) -> (f64, f64) {
        let m = self.spec.m();
        let n = self.spec.n();
        let umax = u.max_abs_nodal();
        (wave_speed(m, umax), wave_speed(n, umax))
    }

    /// Semidiscrete right-hand side `L(u) ≈ −(u^m)_x − (u^n)_xxx`.
    pub fn rhs(&self, u: &GridFunction) -> Result<GridFunction> {
        let mut out = GridFunction::zeros(&self.grid);
        self.rhs_into(u, &mut out)?;
        Ok(out)
    }

    pub fn rhs_into(&self, u: &GridFunction, out: &mut GridFunction) -> Result<()> {
        if !u.same_grid(out) || *u.grid().as_ref() != *self.grid.as_ref() {
            return Err(Error::GridMismatch("field is not on the operator's grid".into()));
        }
        u.check_finite()?;

        let n = self.grid.nodes_per_cell();
        let nq = self.grid.basis.quad_weights.len();
        let alpha_global = match self.flux_mode {
            FluxMode::GlobalLaxFriedrichs => wave_speed(self.spec.m(), u.max_abs_nodal()),
            FluxMode::LocalLaxFriedrichs => 0.0,
        };
        let mut guard = self.scratch.lock().unwrap_or_else(|e| e.into_inner());
        let uc = u.coeffs();
        let res = out.coeffs_mut();
        // Constant sizes for the usual orders let the inner loops unroll.
        match (n, nq) {
            (2, 5) => self.sweep(2, 5, uc, res, &mut guard, alpha_global),
            (3, 5) => self.sweep(3, 5, uc, res, &mut guard, alpha_global),
            (4, 5) => self.sweep(4, 5, uc, res, &mut guard, alpha_global),
            (5, 6) => self.sweep(5, 6, uc, res, &mut guard, alpha_global),
            _ => self.sweep(n, nq, uc, res, &mut guard, alpha_global),
        }
        drop(guard);
        out.check_finite()
    }

    #[inline(always)]
    fn sweep(&self, n: usize, nq: usize, uc: &[f64], res: &mut [f64], scratch: &mut Scratch, alpha_global: f64) {
        let g = &self.grid;
        let b = &g.basis;
        let k = g.num_cells();
        let Scratch { w, p, q, flux } = scratch;
        w.resize(k * n, 0.0);
        p.resize(k * n, 0.0);
        q.resize(k * n, 0.0);
        flux.resize(k, 0.0);

        let right_trace = |v: &[f64], j: usize| dot(&b.at_right[..n], &v[j * n..(j + 1) * n]);
        let left_trace = |v: &[f64], j: usize| dot(&b.at_left[..n], &v[j * n..(j + 1) * n]);
        let next = |j: usize| if j + 1 == k { 0 } else { j + 1 };

        for (wi, &v) in w.iter_mut().zip(uc) {
            *wi = self.disp_pow.apply(v);
        }

        // ŵ_{j+1/2} = w⁻
        for j in 0..k {
            flux[j] = right_trace(w, j);
        }
        self.derivative(n, w, flux, p);

        // p̂_{j+1/2} = p⁺
        for j in 0..k {
            flux[j] = left_trace(p, next(j));
        }
        self.derivative(n, p, flux, q);

        // total flux at j+1/2: LF convective flux + q̂ = q⁺
        let m_exp = self.spec.m();
        for j in 0..k {
            let jr = next(j);
            let u_minus = right_trace(uc, j);
            let u_plus = left_trace(uc, jr);
            let alpha = match self.flux_mode {
                FluxMode::GlobalLaxFriedrichs => alpha_global,
                FluxMode::LocalLaxFriedrichs => {
                    wave_speed(m_exp, u_minus.abs()).max(wave_speed(m_exp, u_plus.abs()))
                }
            };
            let f_hat = 0.5 * (self.conv_pow.apply(u_minus) + self.conv_pow.apply(u_plus))
                - 0.5 * alpha * (u_plus - u_minus);
            let q_hat = left_trace(q, jr);
            flux[j] = f_hat + q_hat;
        }

        let scale = 2.0 / g.dx();
        let mut fq_stack = [0.0; MAX_STACK];
        let mut fq_heap = Vec::new();
        let fq: &mut [f64] = if nq <= MAX_STACK {
            &mut fq_stack[..nq]
        } else {
            fq_heap.resize(nq, 0.0);
            &mut fq_heap
        };
        for j in 0..k {
            let uc_j = &uc[j * n..(j + 1) * n];
            for (qi, f) in fq.iter_mut().enumerate() {
                *f = self.conv_pow.apply(dot(&b.interp[qi * n..(qi + 1) * n], uc_j));
            }
            let jl = if j == 0 { k - 1 } else { j - 1 };
            let qc = &q[j * n..(j + 1) * n];
            let (fr, fl) = (flux[j], flux[jl]);
            let rc = &mut res[j * n..(j + 1) * n];
            for i in 0..n {
                let vol_conv = dot(&self.conv_vol[i * nq..(i + 1) * nq], fq);
                let vol_disp = dot(&self.vol[i * n..(i + 1) * n], qc);
                rc[i] = scale * (vol_conv + vol_disp - fr * self.lift_right[i] + fl * self.lift_left[i]);
            }
        }
    }

    /// DG derivative of `v` with interface values `hat[j]` at the right edge of cell `j`.
    #[inline(always)]
    fn derivative(&self, n: usize, v: &[f64], hat: &[f64], out: &mut [f64]) {
        let k = self.grid.num_cells();
        let scale = 2.0 / self.grid.dx();
        for j in 0..k {
            let jl = if j == 0 { k - 1 } else { j - 1 };
            let vc = &v[j * n..(j + 1) * n];
            let (hr, hl) = (hat[j], hat[jl]);
            let oc = &mut out[j * n..(j + 1) * n];
            for i in 0..n {
                let vol = dot(&self.vol[i * n..(i + 1) * n], vc);
                oc[i] = scale * (hr * self.lift_right[i] - hl * self.lift_left[i] - vol);
            }
        }
    }
}

const MAX_STACK: usize = 16;

#[inline(always)]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn wave_speed(p: f64, umax: f64) -> f64 {
    if umax == 0.0 {
        // p ≥ 2, so p|u|^{p-1} vanishes at u = 0
        0.0
    } else {
        p * umax.powf(p - 1.0)
    }
}

/// Exact `−(u^m)_x − (u^n)_xxx` from `[u, u', u'', u''']` at a point.
pub fn exact_kmn_rhs(spec: &EquationSpec, d: [f64; 4]) -> f64 {
    let [u, u1, u2, u3] = d;
    let m = spec.m();
    let n = spec.n();
    let conv = m * u.powf(m - 1.0) * u1;
    let disp = n * (n - 1.0) * (n - 2.0) * u.powf(n - 3.0) * u1.powi(3)
        + 3.0 * n * (n - 1.0) * u.powf(n - 2.0) * u1 * u2
        + n * u.powf(n - 1.0) * u3;
    -conv - disp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equations::{make_kmn, AnalyticSolution, InitialCondition};
    use crate::grid::{project, GridSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn op(m: f64, n: f64, l: f64, r: f64, k: usize) -> LdgOperator {
        let grid = PeriodicGrid::new(GridSpec::new(l, r, k, 3)).unwrap();
        LdgOperator::new(make_kmn(m, n).unwrap(), grid, FluxMode::GlobalLaxFriedrichs).unwrap()
    }

    #[test]
    fn rejects_general_family() {
        let grid = PeriodicGrid::new(GridSpec::new(0.0, 1.0, 4, 3)).unwrap();
        let spec = EquationSpec::new(3.0, 1.0, 2.0).unwrap();
        assert!(LdgOperator::new(spec, grid, FluxMode::default()).is_err());
    }

    #[test]
    fn zero_and_constant_are_steady() {
        let o = op(2.0, 2.0, 0.0, 2.0 * PI, 32);
        let z = GridFunction::zeros(o.grid());
        assert!(o.rhs(&z).unwrap().coeffs().iter().all(|&v| v == 0.0));
        // round-off in the dispersive chain is amplified by (P+1)^6 / dx³
        let amp = 4096.0 / o.grid().dx().powi(3);
        for c in [0.5, 1.0, 3.7] {
            let u = project(o.grid(), |_| c).unwrap();
            let r = o.rhs(&u).unwrap();
            assert!(r.max_abs_nodal() < 1e-14 * amp * c * c, "c = {c}: {}", r.max_abs_nodal());
        }
    }

    #[test]
    fn non_finite_input_is_an_error() {
        let o = op(2.0, 2.0, 0.0, 1.0, 8);
        let mut u = GridFunction::zeros(o.grid());
        u.coeffs_mut()[5] = f64::NAN;
        assert!(matches!(o.rhs(&u), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn wave_speeds() {
        let o = op(2.0, 2.0, 0.0, 1.0, 8);
        assert_eq!(o.max_wave_speeds(&GridFunction::zeros(o.grid())), (0.0, 0.0));
        let one = project(o.grid(), |_| 1.0).unwrap();
        let (c, d) = o.max_wave_speeds(&one);
        assert!((c - 2.0).abs() < 1e-14 && (d - 2.0).abs() < 1e-14);

        let o = op(3.0, 2.0, -8.0 * PI, 8.0 * PI, 400);
        let ic = InitialCondition::cos_cubed_default();
        // interpolation hits the peak node exactly only when a node sits at x = 0
        let u = GridFunction::interpolate(o.grid(), |x| ic.eval(x));
        let peak = u.max_abs_nodal();
        let (c, d) = o.max_wave_speeds(&u);
        assert!((c - 3.0 * peak * peak).abs() < 1e-14);
        assert!((d - 2.0 * peak).abs() < 1e-14);
        assert!((peak - 1.0).abs() < 1e-4);
    }

    #[test]
    fn translation_equivariance() {
        let o = op(2.0, 2.0, -8.0 * PI, 8.0 * PI, 100);
        let ic = InitialCondition::cos_cubed_default();
        let u = project(o.grid(), |x| ic.eval(x - 1.0)).unwrap();
        let lhs = o.rhs(&u.shift_cells(7)).unwrap();
        let rhs = o.rhs(&u).unwrap().shift_cells(7);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn reflection_antisymmetry_up_to_truncation() {
        // The alternating fluxes are mirrored by x ↦ −x, so odd symmetry of L
        // on even data holds only to truncation error.
        let mut defects = Vec::new();
        for k in [40usize, 80, 160] {
            let o = op(2.0, 2.0, 0.0, 2.0 * PI, k);
            let u = project(o.grid(), |x| 2.0 + (x - PI).cos()).unwrap();
            let asym = u.reflect().coeffs().iter().zip(u.coeffs()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(asym < 1e-12);
            let r = o.rhs(&u).unwrap();
            let rr = r.reflect();
            let defect = r.coeffs().iter().zip(rr.coeffs()).fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
            defects.push(defect);
        }
        assert!(defects[0] > defects[1] && defects[1] > defects[2], "{defects:?}");
        assert!((defects[1] / defects[2]).log2() >= 0.9, "{defects:?}");
    }

    /// `(max nodal error, max cell-average error)` of `L(Πu₀)` against the exact operator.
    fn consistency_errors(ks: &[usize]) -> Vec<(f64, f64)> {
        let ic = InitialCondition::Cosine { mean: 2.0, amplitude: 1.0, wavenumber: 1.0 };
        let spec = make_kmn(2.0, 2.0).unwrap();
        let exact = |x: f64| exact_kmn_rhs(&spec, ic.derivatives(x).unwrap());
        ks.iter()
            .map(|&k| {
                let o = op(2.0, 2.0, 0.0, 2.0 * PI, k);
                let u = project(o.grid(), |x| ic.eval(x)).unwrap();
                let mut d = o.rhs(&u).unwrap();
                d.axpby(1.0, -1.0, &project(o.grid(), exact).unwrap());
                let nodal = d.max_abs_nodal();
                let avg = d.cell_averages().into_iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (nodal, avg)
            })
            .collect()
    }

    #[test]
    fn consistency_order_on_smooth_data() {
        let errs = consistency_errors(&[40, 80, 160]);
        for w in errs.windows(2) {
            // conservative (cell-average) truncation error: O(dx^{P-1})
            let avg_order = (w[0].1 / w[1].1).log2();
            assert!(avg_order >= 2.0 - 0.05, "cell-average order {avg_order}: {errs:?}");
            // pointwise, each of the three one-sided derivatives costs an order: O(dx^{P-2})
            let nodal_order = (w[0].0 / w[1].0).log2();
            assert!(nodal_order >= 0.9, "nodal order {nodal_order}: {errs:?}");
        }
    }

    #[test]
    fn compacton_rhs_matches_time_derivative_away_from_edges() {
        let sol = AnalyticSolution::k22(1.0);
        let mut errs = Vec::new();
        for k in [64usize, 128, 256] {
            let o = op(2.0, 2.0, -4.0 * PI, 4.0 * PI, k);
            let u = project(o.grid(), |x| sol.eval(x, 0.0)).unwrap();
            let h = 1e-5;
            let ut = project(o.grid(), |x| (sol.eval(x, h) - sol.eval(x, -h)) / (2.0 * h)).unwrap();
            let mut d = o.rhs(&u).unwrap();
            d.axpby(1.0, -1.0, &ut);
            let avgs = d.cell_averages();
            // cells at least one full cell away from the support edges
            let err = (0..k)
                .filter(|&j| o.grid().cell_center(j).abs() < 2.0 * PI - 2.0 * o.grid().dx())
                .map(|j| avgs[j].abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 2.0 - 0.05, "{errs:?}");
        }
    }

    #[test]
    fn local_flux_mode_also_steady_on_constants() {
        let grid = PeriodicGrid::new(GridSpec::new(0.0, 1.0, 16, 3)).unwrap();
        let o = LdgOperator::new(make_kmn(3.0, 2.0).unwrap(), grid, FluxMode::LocalLaxFriedrichs).unwrap();
        let u = project(o.grid(), |_| 1.5).unwrap();
        let amp = 4096.0 / o.grid().dx().powi(3);
        assert!(o.rhs(&u).unwrap().max_abs_nodal() < 1e-14 * amp * 3.4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rhs_conserves_mass(vals in proptest::collection::vec(-2.0f64..2.0, 24 * 4), local in any::<bool>()) {
            let grid = PeriodicGrid::new(GridSpec::new(-3.0, 5.0, 24, 3)).unwrap();
            let mode = if local { FluxMode::LocalLaxFriedrichs } else { FluxMode::GlobalLaxFriedrichs };
            let o = LdgOperator::new(make_kmn(2.0, 2.0).unwrap(), grid, mode).unwrap();
            let u = GridFunction::from_coeffs(o.grid(), vals).unwrap();
            let r = o.rhs(&u).unwrap();
            let scale = r.max_abs_nodal().max(1.0) * o.grid().length();
            prop_assert!(r.integrate().abs() <= 1e-12 * scale, "mass {}", r.integrate());
        }
    }
}
