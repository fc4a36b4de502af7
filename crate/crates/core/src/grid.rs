//! Uniform periodic cell partition with a nodal Gauss–Legendre basis.
//!
//! Each cell carries `P + 1` nodal values located at the Gauss–Legendre points
//! of the cell, so the nodal mass matrix is diagonal and exact. Nonlinear
//! integrands are evaluated on a separate `Q`-point Gauss–Legendre rule.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, lagrange, lagrange_derivative};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_left: f64,
    pub x_right: f64,
    pub num_cells: usize,
    #[serde(default = "default_poly_order")]
    pub poly_order: usize,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

fn default_poly_order() -> usize {
    3
}

fn default_quad_order() -> usize {
    5
}

impl GridSpec {
    pub fn new(x_left: f64, x_right: f64, num_cells: usize, poly_order: usize) -> Self {
        Self { x_left, x_right, num_cells, poly_order, quad_order: (poly_order + 2).max(5) }
    }
}

/// Reference-cell operators shared by every cell.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Lagrange basis values at ξ = -1 and ξ = +1.
    pub at_left: Vec<f64>,
    pub at_right: Vec<f64>,
    /// `diff[i * N + k] = l_k'(ξ_i)`.
    pub diff: Vec<f64>,
    pub quad_nodes: Vec<f64>,
    pub quad_weights: Vec<f64>,
    /// `interp[q * N + k] = l_k(ζ_q)`.
    pub interp: Vec<f64>,
    /// `interp_diff[q * N + k] = l_k'(ζ_q)`.
    pub interp_diff: Vec<f64>,
}

impl Basis {
    fn new(p: usize, q: usize) -> Self {
        let n = p + 1;
        let (nodes, weights) = gauss_legendre(n);
        let (quad_nodes, quad_weights) = gauss_legendre(q);
        let at_left = (0..n).map(|k| lagrange(&nodes, k, -1.0)).collect();
        let at_right = (0..n).map(|k| lagrange(&nodes, k, 1.0)).collect();
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                diff[i * n + k] = lagrange_derivative(&nodes, k, nodes[i]);
            }
        }
        let mut interp = vec![0.0; q * n];
        let mut interp_diff = vec![0.0; q * n];
        for (qi, &z) in quad_nodes.iter().enumerate() {
            for k in 0..n {
                interp[qi * n + k] = lagrange(&nodes, k, z);
                interp_diff[qi * n + k] = lagrange_derivative(&nodes, k, z);
            }
        }
        Self { nodes, weights, at_left, at_right, diff, quad_nodes, quad_weights, interp, interp_diff }
    }
}

#[derive(Debug, Clone)]
pub struct PeriodicGrid {
    spec: GridSpec,
    dx: f64,
    pub(crate) basis: Basis,
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl PeriodicGrid {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>> {
        let GridSpec { x_left, x_right, num_cells, poly_order, quad_order } = spec;
        if !(x_left.is_finite() && x_right.is_finite() && x_right > x_left) {
            return Err(Error::Domain(format!("need x_left < x_right, got [{x_left}, {x_right}]")));
        }
        if num_cells == 0 {
            return Err(Error::Domain("num_cells must be positive".into()));
        }
        if poly_order < 1 {
            return Err(Error::Domain("poly_order must be >= 1".into()));
        }
        if quad_order < poly_order + 1 {
            return Err(Error::Domain(format!(
                "quad_order must be >= poly_order + 1 = {}, got {quad_order}",
                poly_order + 1
            )));
        }
        let dx = (x_right - x_left) / num_cells as f64;
        Ok(Arc::new(Self { spec, dx, basis: Basis::new(poly_order, quad_order) }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn x_left(&self) -> f64 {
        self.spec.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.spec.x_right
    }

    pub fn length(&self) -> f64 {
        self.spec.x_right - self.spec.x_left
    }

    pub fn num_cells(&self) -> usize {
        self.spec.num_cells
    }

    pub fn poly_order(&self) -> usize {
        self.spec.poly_order
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.spec.poly_order + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn cell_center(&self, cell: usize) -> f64 {
        self.spec.x_left + (cell as f64 + 0.5) * self.dx
    }

    pub fn node_x(&self, cell: usize, node: usize) -> f64 {
        self.cell_center(cell) + 0.5 * self.dx * self.basis.nodes[node]
    }

    /// Physical quadrature point `q` of `cell`.
    pub fn quad_x(&self, cell: usize, q: usize) -> f64 {
        self.cell_center(cell) + 0.5 * self.dx * self.basis.quad_nodes[q]
    }

    /// Cell index and reference coordinate of `x` after periodic wrapping.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let len = self.length();
        let mut s = (x - self.spec.x_left) % len;
        if s < 0.0 {
            s += len;
        }
        let k = self.spec.num_cells;
        let cell = ((s / self.dx) as usize).min(k - 1);
        let xi = 2.0 * (s - cell as f64 * self.dx) / self.dx - 1.0;
        (cell, xi.clamp(-1.0, 1.0))
    }
}

/// A piecewise polynomial field stored as nodal values, `K × (P + 1)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<PeriodicGrid>,
    coeffs: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Arc<PeriodicGrid>) -> Self {
        let len = grid.num_cells() * grid.nodes_per_cell();
        Self { grid: Arc::clone(grid), coeffs: vec![0.0; len] }
    }

    pub fn from_coeffs(grid: &Arc<PeriodicGrid>, coeffs: Vec<f64>) -> Result<Self> {
        let len = grid.num_cells() * grid.nodes_per_cell();
        if coeffs.len() != len {
            return Err(Error::GridMismatch(format!("expected {len} coefficients, got {}", coeffs.len())));
        }
        Ok(Self { grid: Arc::clone(grid), coeffs })
    }

    /// Nodal interpolation of `f` (no quadrature).
    pub fn interpolate<F: Fn(f64) -> f64>(grid: &Arc<PeriodicGrid>, f: F) -> Self {
        let n = grid.nodes_per_cell();
        let coeffs = (0..grid.num_cells() * n).map(|idx| f(grid.node_x(idx / n, idx % n))).collect();
        Self { grid: Arc::clone(grid), coeffs }
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let n = self.grid.nodes_per_cell();
        &self.coeffs[j * n..(j + 1) * n]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn check_finite(&self) -> Result<()> {
        let n = self.grid.nodes_per_cell();
        match self.coeffs.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(idx) => Err(Error::NonFinite {
                x: self.grid.node_x(idx / n, idx % n),
                value: self.coeffs[idx],
            }),
        }
    }

    /// `(x, u)` at every node, cell by cell.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        let n = self.grid.nodes_per_cell();
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(idx, &u)| (idx / n, idx % n, self.grid.node_x(idx / n, idx % n), u))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (cell, xi) = self.grid.locate(x);
        let nodes = &self.grid.basis.nodes;
        self.cell(cell).iter().enumerate().map(|(k, c)| c * lagrange(nodes, k, xi)).sum()
    }

    /// Values at the `Q` quadrature points of `cell`.
    pub(crate) fn cell_quad_values(&self, cell: usize, out: &mut [f64]) {
        let b = &self.grid.basis;
        let n = self.grid.nodes_per_cell();
        let c = self.cell(cell);
        for (q, o) in out.iter_mut().enumerate() {
            let row = &b.interp[q * n..(q + 1) * n];
            *o = row.iter().zip(c).map(|(l, v)| l * v).sum();
        }
    }

    /// Left and right traces of cell `j`.
    pub fn traces(&self, j: usize) -> (f64, f64) {
        let b = &self.grid.basis;
        let c = self.cell(j);
        let left = b.at_left.iter().zip(c).map(|(l, v)| l * v).sum();
        let right = b.at_right.iter().zip(c).map(|(l, v)| l * v).sum();
        (left, right)
    }

    pub fn cell_averages(&self) -> Vec<f64> {
        let w = &self.grid.basis.weights;
        let n = self.grid.nodes_per_cell();
        self.coeffs.chunks_exact(n).map(|c| 0.5 * c.iter().zip(w).map(|(v, w)| v * w).sum::<f64>()).collect()
    }

    pub fn min_nodal(&self) -> f64 {
        self.coeffs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_nodal(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map_nodes<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: Arc::clone(&self.grid), coeffs: self.coeffs.iter().map(|&v| f(v)).collect() }
    }

    /// `self ← a·self + b·other`.
    pub fn axpby(&mut self, a: f64, b: f64, other: &GridFunction) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s = a * *s + b * o;
        }
    }

    /// Cyclic shift by `cells` whole cells to the right.
    pub fn shift_cells(&self, cells: isize) -> Self {
        let k = self.grid.num_cells() as isize;
        let n = self.grid.nodes_per_cell();
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for j in 0..k {
            let dst = (j + cells).rem_euclid(k) as usize;
            coeffs[dst * n..(dst + 1) * n].copy_from_slice(self.cell(j as usize));
        }
        Self { grid: Arc::clone(&self.grid), coeffs }
    }

    /// Mirror image `x ↦ x_left + x_right − x`.
    pub fn reflect(&self) -> Self {
        let k = self.grid.num_cells();
        let n = self.grid.nodes_per_cell();
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for j in 0..k {
            for i in 0..n {
                coeffs[(k - 1 - j) * n + (n - 1 - i)] = self.coeffs[j * n + i];
            }
        }
        Self { grid: Arc::clone(&self.grid), coeffs }
    }

    pub(crate) fn quad_sum<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let g = &self.grid;
        let nq = g.basis.quad_weights.len();
        let mut vals = vec![0.0; nq];
        let mut total = 0.0;
        for j in 0..g.num_cells() {
            self.cell_quad_values(j, &mut vals);
            let mut s = 0.0;
            for q in 0..nq {
                s += g.basis.quad_weights[q] * f(g.quad_x(j, q), vals[q]);
            }
            total += s;
        }
        0.5 * g.dx() * total
    }

    pub fn integrate(&self) -> f64 {
        let g = &self.grid;
        let w = &g.basis.weights;
        let n = g.nodes_per_cell();
        let total: f64 = self.coeffs.chunks_exact(n).map(|c| c.iter().zip(w).map(|(v, w)| v * w).sum::<f64>()).sum();
        0.5 * g.dx() * total
    }

    /// `∫ u^p`; integer `p` keeps the sign of `u`, non-integer `p` clips `u` at zero.
    pub fn integrate_power(&self, p: f64) -> Result<f64> {
        self.integrate_power_with_clip(p).map(|(v, _)| v)
    }

    /// As [`integrate_power`](Self::integrate_power), also returning the largest
    /// magnitude clipped away (zero for integer `p`).
    pub fn integrate_power_with_clip(&self, p: f64) -> Result<(f64, f64)> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("power must be >= 1, got {p}")));
        }
        let clip = if is_integer(p) { 0.0 } else { (-self.min_quad()).max(0.0) };
        Ok((self.quad_sum(|_, u| pow_kmn(u, p)), clip))
    }

    fn min_quad(&self) -> f64 {
        let nq = self.grid.basis.quad_weights.len();
        let mut vals = vec![0.0; nq];
        let mut m = f64::INFINITY;
        for j in 0..self.grid.num_cells() {
            self.cell_quad_values(j, &mut vals);
            m = vals.iter().copied().fold(m, f64::min);
        }
        m
    }

    /// `∫ x^k u`, `k ∈ {0, 1, 2, 3}`.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k > 3 {
            return Err(Error::Domain(format!("moment order must be in 0..=3, got {k}")));
        }
        if k == 0 {
            return Ok(self.integrate());
        }
        Ok(self.quad_sum(|x, u| x.powi(k as i32) * u))
    }

    /// `∫ x u^p` with the same power convention as `integrate_power`.
    pub fn weighted_power_moment(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("power must be >= 1, got {p}")));
        }
        Ok(self.quad_sum(|x, u| x * pow_kmn(u, p)))
    }

    /// `∫ g(u)` for an arbitrary pointwise integrand.
    pub fn integrate_with<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.quad_sum(|_, u| g(u))
    }

    fn derivative_once(&self) -> Self {
        let g = &self.grid;
        let n = g.nodes_per_cell();
        let d = &g.basis.diff;
        let scale = 2.0 / g.dx();
        let mut out = vec![0.0; self.coeffs.len()];
        for (c, o) in self.coeffs.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            for i in 0..n {
                o[i] = scale * d[i * n..(i + 1) * n].iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Self { grid: Arc::clone(g), coeffs: out }
    }

    /// Cell-wise derivative of the given order; nothing is enforced across interfaces.
    pub fn broken_derivative(&self, order: usize) -> Result<Self> {
        let p = self.grid.poly_order();
        if order < 1 || order > p {
            return Err(Error::Domain(format!("derivative order must be in 1..={p}, got {order}")));
        }
        let mut d = self.derivative_once();
        for _ in 1..order {
            d = d.derivative_once();
        }
        Ok(d)
    }

    /// `|left limit − right limit|` of the `order`-th broken derivative at the
    /// right interface of every cell (the last entry is the periodic seam).
    pub fn interface_jumps(&self, order: usize) -> Result<Vec<f64>> {
        let p = self.grid.poly_order();
        if order > p {
            return Err(Error::Domain(format!("jump order must be in 0..={p}, got {order}")));
        }
        let field = if order == 0 { self.clone() } else { self.broken_derivative(order)? };
        let k = self.grid.num_cells();
        Ok((0..k)
            .map(|j| {
                let (_, right) = field.traces(j);
                let (left_next, _) = field.traces((j + 1) % k);
                (right - left_next).abs()
            })
            .collect())
    }
}

/// Cell-wise L² projection of `f` onto degree-`P` polynomials.
pub fn project<F: Fn(f64) -> f64>(grid: &Arc<PeriodicGrid>, f: F) -> Result<GridFunction> {
    let b = &grid.basis;
    let n = grid.nodes_per_cell();
    let nq = b.quad_weights.len();
    let mut coeffs = vec![0.0; grid.num_cells() * n];
    let mut fq = vec![0.0; nq];
    for j in 0..grid.num_cells() {
        for (q, v) in fq.iter_mut().enumerate() {
            let x = grid.quad_x(j, q);
            *v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { x, value: *v });
            }
        }
        for i in 0..n {
            let mut s = 0.0;
            for q in 0..nq {
                s += b.quad_weights[q] * fq[q] * b.interp[q * n + i];
            }
            coeffs[j * n + i] = s / b.weights[i];
        }
    }
    Ok(GridFunction { grid: Arc::clone(grid), coeffs })
}

pub(crate) fn is_integer(p: f64) -> bool {
    p.fract() == 0.0 && p.abs() < i32::MAX as f64
}

/// `u^p` with the K(m, n) convention: signed for integer `p`, clipped at zero otherwise.
#[inline]
pub fn pow_kmn(u: f64, p: f64) -> f64 {
    if is_integer(p) {
        u.powi(p as i32)
    } else {
        u.max(0.0).powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equations::{AnalyticSolution, InitialCondition};
    use crate::quadrature::composite;
    use std::f64::consts::PI;

    fn grid(l: f64, r: f64, k: usize, p: usize) -> Arc<PeriodicGrid> {
        PeriodicGrid::new(GridSpec::new(l, r, k, p)).unwrap()
    }

    fn bump_grid() -> Arc<PeriodicGrid> {
        grid(-8.0 * PI, 8.0 * PI, 400, 3)
    }

    fn bump() -> GridFunction {
        let ic = InitialCondition::cos_cubed_default();
        project(&bump_grid(), |x| ic.eval(x)).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(PeriodicGrid::new(GridSpec::new(1.0, 0.0, 4, 3)).is_err());
        assert!(PeriodicGrid::new(GridSpec::new(0.0, 1.0, 0, 3)).is_err());
        assert!(PeriodicGrid::new(GridSpec::new(0.0, 1.0, 4, 0)).is_err());
        let mut s = GridSpec::new(0.0, 1.0, 4, 3);
        s.quad_order = 3;
        assert!(PeriodicGrid::new(s).is_err());
    }

    #[test]
    fn nodes_increase_within_cells() {
        let g = grid(0.0, 1.0, 5, 4);
        for j in 0..5 {
            for i in 1..5 {
                assert!(g.node_x(j, i) > g.node_x(j, i - 1));
            }
            assert!(g.node_x(j, 0) > j as f64 * g.dx());
        }
    }

    #[test]
    fn project_constant_integrates_to_length() {
        let g = grid(-2.0, 3.5, 17, 3);
        let u = project(&g, |_| 1.0).unwrap();
        assert!((u.integrate() - 5.5).abs() < 1e-13);
        assert!(u.coeffs().iter().all(|c| (c - 1.0).abs() < 1e-14));
    }

    #[test]
    fn project_rejects_non_finite() {
        let g = grid(0.0, 1.0, 4, 2);
        assert!(matches!(project(&g, |x| if x > 0.5 { f64::NAN } else { 0.0 }), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn project_reproduces_polynomials() {
        let g = grid(-1.0, 2.0, 3, 3);
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3);
        let u = project(&g, f).unwrap();
        for x in [-0.9, -0.2, 0.33, 1.7] {
            assert!((u.eval(x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn bump_mass() {
        // ∫cos³(x/10) over |x| ≤ 5π = 10·4/3
        let oracle = composite(|x| InitialCondition::cos_cubed_default().eval(x), -5.0 * PI, 5.0 * PI, 4096, 8);
        assert!((oracle - 40.0 / 3.0).abs() < 1e-10);
        assert!((bump().integrate() - 40.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn first_moment_of_identity() {
        let g = grid(-1.0, 1.0, 8, 3);
        let u = project(&g, |x| x).unwrap();
        assert!((u.moment(1).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn k22_compacton_mass() {
        let sol = AnalyticSolution::k22(1.0);
        let u = project(&bump_grid(), |x| sol.eval(x, 0.0)).unwrap();
        assert!((u.integrate() - 8.0 * PI / 3.0).abs() < 1e-6);
    }

    #[test]
    fn power_integrals() {
        let g = grid(0.0, 1.0, 3, 3);
        let two = project(&g, |_| 2.0).unwrap();
        assert!((two.integrate_power(3.0).unwrap() - 8.0).abs() < 1e-13);
        assert!(two.integrate_power(0.5).is_err());

        // Wallis: ∫cos⁹ over [−π/2, π/2] = 2·(8·6·4·2)/(9·7·5·3) = 2·384/945
        let u = bump();
        let wallis9 = 10.0 * 2.0 * 384.0 / 945.0;
        let wallis6 = 10.0 * PI * 15.0 / 48.0;
        assert!((u.integrate_power(3.0).unwrap() - wallis9).abs() < 1e-5);
        assert!((u.integrate_power(2.0).unwrap() - wallis6).abs() < 1e-5);
        assert!((u.integrate_power(1.0).unwrap() - u.integrate()).abs() < 1e-12);
    }

    #[test]
    fn non_integer_power_clips_negative_part() {
        let g = grid(0.0, 2.0, 2, 2);
        let u = project(&g, |x| if x < 1.0 { -1.0 } else { 4.0 }).unwrap();
        let (v, clip) = u.integrate_power_with_clip(1.5).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
        assert!((clip - 1.0).abs() < 1e-12);
        // integer powers keep the sign
        assert!((u.integrate_power(3.0).unwrap() - (64.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn odd_moments_of_symmetric_bump_vanish() {
        let u = bump();
        assert!(u.moment(1).unwrap().abs() < 1e-10);
        assert!(u.moment(3).unwrap().abs() < 1e-8);
        assert_eq!(u.moment(0).unwrap(), u.integrate());
        assert!(u.moment(4).is_err());
    }

    #[test]
    fn box_first_moment() {
        let g = grid(-2.0, 2.0, 16, 3);
        let ic = InitialCondition::Box { x0: 0.0, x1: 1.0, height: 1.0 };
        let u = project(&g, |x| ic.eval(x)).unwrap();
        assert!((u.moment(1).unwrap() - 0.5).abs() < 1e-14);
        assert!((u.integrate() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn derivatives() {
        let g = grid(0.0, 1.0, 4, 3);
        let c = project(&g, |_| 3.0).unwrap().broken_derivative(1).unwrap();
        assert!(c.max_abs_nodal() < 1e-12);

        let sq = project(&g, |x| x * x).unwrap().broken_derivative(2).unwrap();
        assert!(sq.coeffs().iter().all(|v| (v - 2.0).abs() < 1e-10));
        assert!(project(&g, |x| x).unwrap().broken_derivative(4).is_err());
        assert!(project(&g, |x| x).unwrap().broken_derivative(0).is_err());

        let g = grid(0.0, 2.0 * PI, 200, 3);
        let d = project(&g, f64::sin).unwrap().broken_derivative(1).unwrap();
        let err = d.nodes().map(|(_, _, x, v)| (v - x.cos()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "err {err}");
    }

    #[test]
    fn polynomial_fields_have_no_jumps() {
        let g = grid(-1.0, 1.0, 10, 3);
        let u = project(&g, |x| 0.3 + x - x.powi(2) + 2.0 * x.powi(3)).unwrap();
        for order in 0..=2 {
            let jumps = u.interface_jumps(order).unwrap();
            // the periodic seam is a genuine discontinuity
            assert!(jumps[..9].iter().all(|j| *j < 1e-11), "order {order}: {jumps:?}");
        }
        assert!(u.interface_jumps(4).is_err());
    }

    #[test]
    fn compacton_second_derivative_jump_at_edge() {
        // interface at x = 2π, u'' one-sided limit (λ/6)
        let sol = AnalyticSolution::k22(1.0);
        let mut prev = f64::NAN;
        for k in [64usize, 128, 256] {
            let g = grid(-4.0 * PI, 4.0 * PI, k, 3);
            let u = project(&g, |x| sol.eval(x, 0.0)).unwrap();
            let j = u.interface_jumps(2).unwrap()[3 * k / 4 - 1];
            assert!((j - 1.0 / 6.0).abs() < 0.02, "k {k}: {j}");
            prev = j;
        }
        assert!((prev - 1.0 / 6.0).abs() < 2e-3);
    }

    #[test]
    fn smooth_field_jumps_decay() {
        let f = |x: f64| (-(x * x)).exp();
        let mut errs = Vec::new();
        for k in [80usize, 160, 320] {
            let g = grid(-6.0, 6.0, k, 3);
            let u = project(&g, f).unwrap();
            errs.push(u.interface_jumps(2).unwrap().into_iter().fold(0.0, f64::max));
        }
        // odd P: neighbouring error modes cancel to leading order, leaving O(dx^P)
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate >= 2.9, "rate {rate} from {errs:?}");
        }
    }

    #[test]
    fn shift_and_reflect() {
        let g = grid(0.0, 1.0, 10, 2);
        let u = project(&g, |x| x * x).unwrap();
        let s = u.shift_cells(3).shift_cells(-3);
        assert_eq!(s, u);
        let r = u.reflect().reflect();
        assert_eq!(r, u);
        assert!((u.reflect().eval(0.25) - u.eval(0.75)).abs() < 1e-12);
    }

    #[test]
    fn locate_wraps_periodically() {
        let g = grid(0.0, 1.0, 10, 2);
        let (c, xi) = g.locate(1.05);
        assert_eq!(c, 0);
        assert!((xi - 0.0).abs() < 1e-12);
        let (c, _) = g.locate(-0.01);
        assert_eq!(c, 9);
    }
}
