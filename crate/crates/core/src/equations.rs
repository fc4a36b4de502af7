//! The C₁(m, a, b) family, its K(m, n) subfamily, closed-form compactons and
//! the library of initial conditions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents of `u_t + (u^m)_x + (1/b)[u^a (u^b)_xx]_x = 0`.
///
/// For `a = 0` the dispersive term is taken as `(u^n)_xxx` without the `1/b`
/// factor, i.e. the K(m, n) equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct EquationSpec {
    m: f64,
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    m: f64,
    #[serde(default)]
    a: f64,
    b: f64,
}

impl TryFrom<RawSpec> for EquationSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        EquationSpec::new(raw.m, raw.a, raw.b)
    }
}

impl From<EquationSpec> for RawSpec {
    fn from(s: EquationSpec) -> Self {
        RawSpec { m: s.m, a: s.a, b: s.b }
    }
}

impl EquationSpec {
    pub fn new(m: f64, a: f64, b: f64) -> Result<Self> {
        if !(m.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("non-finite exponents m={m}, a={a}, b={b}")));
        }
        if m < 2.0 {
            return Err(Error::Domain(format!("m must be >= 2, got {m}")));
        }
        if b < 2.0 {
            return Err(Error::Domain(format!("b must be >= 2, got {b}")));
        }
        if a < 0.0 {
            return Err(Error::Domain(format!("a must be >= 0, got {a}")));
        }
        Ok(Self { m, a, b })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> f64 {
        self.a + self.b
    }

    pub fn omega(&self) -> f64 {
        self.b + 1.0 - self.a
    }

    pub fn is_kmn(&self) -> bool {
        self.a == 0.0
    }

    /// K(n+1, n): the subfamily where `∫u^m` is itself conserved.
    pub fn is_k_n_plus_1_n(&self) -> bool {
        self.is_kmn() && self.m == self.n() + 1.0
    }
}

impl fmt::Display for EquationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_kmn() {
            write!(f, "K({}, {})", self.m, self.n())
        } else {
            write!(f, "C1({}, {}, {})", self.m, self.a, self.b)
        }
    }
}

/// K(m, n) with `a = 0`, `b = n`.
pub fn make_kmn(m: f64, n: f64) -> Result<EquationSpec> {
    if n < 2.0 {
        return Err(Error::Domain(format!("n must be >= 2, got {n}")));
    }
    EquationSpec::new(m, 0.0, n)
}

/// Predicted power law `(x - x_c)^{2/(n-1)}` of a compacton at its edge.
pub fn edge_exponent(n: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Error::Domain(format!("edge exponent needs n > 1, got {n}")));
    }
    Ok(2.0 / (n - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticKind {
    /// K(2,2): `±(4λ/3) cos²((x ∓ λt)/4)` on `|x ∓ λt| ≤ 2π`.
    K22Compacton,
    /// C₁(2,1,1): `2λ cos²((x − λt)/2)` on `|x − λt| ≤ π`.
    C211Compacton,
    /// C₁(4,3,1): stationary `u₀ cos x` on `|x| ≤ π/2`.
    C431Stationary,
    /// K(3/2,3/2): `(36λ²/25) cos⁴((x − λt)/6)` on `|x − λt| ≤ 3π`.
    K3HalfCompacton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    Compacton,
    Anticompacton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSolution {
    pub kind: AnalyticKind,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub sign: Branch,
}

impl AnalyticSolution {
    pub fn k22(lambda: f64) -> Self {
        Self { kind: AnalyticKind::K22Compacton, lambda, amplitude: 0.0, sign: Branch::Compacton }
    }

    pub fn k22_anti(lambda: f64) -> Self {
        Self { sign: Branch::Anticompacton, ..Self::k22(lambda) }
    }

    pub fn c211(lambda: f64) -> Self {
        Self { kind: AnalyticKind::C211Compacton, lambda, amplitude: 0.0, sign: Branch::Compacton }
    }

    pub fn c431(amplitude: f64) -> Self {
        Self { kind: AnalyticKind::C431Stationary, lambda: 0.0, amplitude, sign: Branch::Compacton }
    }

    pub fn k3half(lambda: f64) -> Self {
        Self { kind: AnalyticKind::K3HalfCompacton, lambda, amplitude: 0.0, sign: Branch::Compacton }
    }

    /// Signed translation speed of the profile.
    pub fn velocity(&self) -> f64 {
        match (self.kind, self.sign) {
            (AnalyticKind::C431Stationary, _) => 0.0,
            (AnalyticKind::K22Compacton, Branch::Anticompacton) => -self.lambda,
            _ => self.lambda,
        }
    }

    /// Half-width of the support around the moving center.
    pub fn half_width(&self) -> f64 {
        match self.kind {
            AnalyticKind::K22Compacton => 2.0 * PI,
            AnalyticKind::C211Compacton => PI,
            AnalyticKind::C431Stationary => 0.5 * PI,
            AnalyticKind::K3HalfCompacton => 3.0 * PI,
        }
    }

    pub fn support(&self, t: f64) -> (f64, f64) {
        let c = self.velocity() * t;
        (c - self.half_width(), c + self.half_width())
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let s = x - self.velocity() * t;
        if s.abs() > self.half_width() {
            return 0.0;
        }
        let l = self.lambda;
        match self.kind {
            AnalyticKind::K22Compacton => {
                let v = 4.0 * l / 3.0 * (s / 4.0).cos().powi(2);
                match self.sign {
                    Branch::Compacton => v,
                    Branch::Anticompacton => -v,
                }
            }
            AnalyticKind::C211Compacton => 2.0 * l * (s / 2.0).cos().powi(2),
            AnalyticKind::C431Stationary => self.amplitude * x.cos(),
            AnalyticKind::K3HalfCompacton => 36.0 * l * l / 25.0 * (s / 6.0).cos().powi(4),
        }
    }
}

/// Closed-form value of a compacton; see [`AnalyticSolution::eval`].
pub fn eval_analytic(sol: &AnalyticSolution, x: f64, t: f64) -> f64 {
    sol.eval(x, t)
}

/// Pointwise initial profile backed by an arbitrary function.
#[derive(Clone)]
pub struct Pointwise {
    pub support: (f64, f64),
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Pointwise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pointwise").field("support", &self.support).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `scale · cos³(π(x − center)/(2 half_width))` on `|x − center| ≤ half_width`.
    CosCubedBump {
        center: f64,
        half_width: f64,
        scale: f64,
    },
    /// `height` on `[x0, x1]`.
    Box { x0: f64, x1: f64, height: f64 },
    /// A compacton evaluated at `t = 0`.
    Analytic { solution: AnalyticSolution },
    /// `mean + amplitude · cos(wavenumber · x)`; smooth and not compactly supported.
    Cosine {
        mean: f64,
        amplitude: f64,
        wavenumber: f64,
    },
    /// Samples interpolated by a clamped cubic spline, zero outside `[xs[0], xs[last]]`.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
    #[serde(skip)]
    Pointwise(Pointwise),
}

impl PartialEq for InitialCondition {
    fn eq(&self, other: &Self) -> bool {
        use InitialCondition::*;
        match (self, other) {
            (
                CosCubedBump { center: c1, half_width: h1, scale: s1 },
                CosCubedBump { center: c2, half_width: h2, scale: s2 },
            ) => c1 == c2 && h1 == h2 && s1 == s2,
            (Box { x0: a0, x1: a1, height: ah }, Box { x0: b0, x1: b1, height: bh }) => {
                a0 == b0 && a1 == b1 && ah == bh
            }
            (Analytic { solution: a }, Analytic { solution: b }) => a == b,
            (
                Cosine { mean: m1, amplitude: a1, wavenumber: k1 },
                Cosine { mean: m2, amplitude: a2, wavenumber: k2 },
            ) => m1 == m2 && a1 == a2 && k1 == k2,
            (Tabulated { xs: x1, values: v1 }, Tabulated { xs: x2, values: v2 }) => x1 == x2 && v1 == v2,
            (Pointwise(a), Pointwise(b)) => Arc::ptr_eq(&a.f, &b.f) && a.support == b.support,
            _ => false,
        }
    }
}

impl InitialCondition {
    /// The bump `cos³(x/10) H(5π − |x|)`.
    pub fn cos_cubed_default() -> Self {
        InitialCondition::CosCubedBump { center: 0.0, half_width: 5.0 * PI, scale: 1.0 }
    }

    pub fn pointwise<F>(support: (f64, f64), f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        InitialCondition::Pointwise(Pointwise { support, f: Arc::new(f) })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialCondition::CosCubedBump { half_width, scale, center } => {
                if !(half_width.is_finite() && *half_width > 0.0) {
                    return Err(Error::Domain(format!("bump half_width must be > 0, got {half_width}")));
                }
                if !scale.is_finite() || !center.is_finite() {
                    return Err(Error::Domain("bump center/scale must be finite".into()));
                }
            }
            InitialCondition::Box { x0, x1, height } => {
                if !(x0 < x1) || !height.is_finite() {
                    return Err(Error::Domain(format!("box needs x0 < x1, got [{x0}, {x1}]")));
                }
            }
            InitialCondition::Tabulated { xs, values } => {
                if xs.len() < 2 || xs.len() != values.len() {
                    return Err(Error::Domain("tabulated data needs >= 2 matching samples".into()));
                }
                if !xs.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Domain("tabulated abscissae must be strictly increasing".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("tabulated values must be finite".into()));
                }
            }
            InitialCondition::Cosine { mean, amplitude, wavenumber } => {
                if !(mean.is_finite() && amplitude.is_finite() && wavenumber.is_finite()) {
                    return Err(Error::Domain("cosine parameters must be finite".into()));
                }
            }
            InitialCondition::Analytic { .. } | InitialCondition::Pointwise(_) => {}
        }
        Ok(())
    }

    /// Declared support, or `None` when the profile fills the whole domain.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            InitialCondition::CosCubedBump { center, half_width, .. } => {
                Some((center - half_width, center + half_width))
            }
            InitialCondition::Box { x0, x1, .. } => Some((*x0, *x1)),
            InitialCondition::Analytic { solution } => Some(solution.support(0.0)),
            InitialCondition::Cosine { .. } => None,
            InitialCondition::Tabulated { xs, .. } => Some((xs[0], xs[xs.len() - 1])),
            InitialCondition::Pointwise(p) => Some(p.support),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialCondition::CosCubedBump { center, half_width, scale } => {
                let s = x - center;
                if s.abs() > *half_width {
                    0.0
                } else {
                    scale * (0.5 * PI * s / half_width).cos().powi(3)
                }
            }
            InitialCondition::Box { x0, x1, height } => {
                if x >= *x0 && x <= *x1 {
                    *height
                } else {
                    0.0
                }
            }
            InitialCondition::Analytic { solution } => solution.eval(x, 0.0),
            InitialCondition::Cosine { mean, amplitude, wavenumber } => {
                mean + amplitude * (wavenumber * x).cos()
            }
            InitialCondition::Tabulated { xs, values } => clamped_spline(xs, values, x),
            InitialCondition::Pointwise(p) => {
                if x < p.support.0 || x > p.support.1 {
                    0.0
                } else {
                    (p.f)(x)
                }
            }
        }
    }

    /// First three derivatives where a closed form exists (smooth periodic profiles only).
    pub fn derivatives(&self, x: f64) -> Option<[f64; 4]> {
        match self {
            InitialCondition::Cosine { mean, amplitude, wavenumber: k } => {
                let (s, c) = (k * x).sin_cos();
                Some([
                    mean + amplitude * c,
                    -amplitude * k * s,
                    -amplitude * k * k * c,
                    amplitude * k * k * k * s,
                ])
            }
            _ => None,
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, InitialCondition::Cosine { .. })
    }
}

/// Pointwise value of an initial condition.
pub fn eval_initial(ic: &InitialCondition, x: f64) -> f64 {
    ic.eval(x)
}

/// Cubic spline through `(xs, ys)` with zero end slopes; zero outside `[xs[0], xs[last]]`.
fn clamped_spline(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    let m = spline_second_derivatives(xs, ys);
    let k = match xs.partition_point(|&xi| xi <= x) {
        0 => 0,
        i if i >= n => n - 2,
        i => i - 1,
    };
    let h = xs[k + 1] - xs[k];
    let a = (xs[k + 1] - x) / h;
    let b = (x - xs[k]) / h;
    a * ys[k] + b * ys[k + 1] + ((a.powi(3) - a) * m[k] + (b.powi(3) - b) * m[k + 1]) * h * h / 6.0
}

fn spline_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // tridiagonal system for clamped ends (y' = 0 at both ends)
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let h0 = xs[1] - xs[0];
    diag[0] = h0 / 3.0;
    upper[0] = h0 / 6.0;
    rhs[0] = (ys[1] - ys[0]) / h0;
    for i in 1..n - 1 {
        let hl = xs[i] - xs[i - 1];
        let hr = xs[i + 1] - xs[i];
        diag[i] = (hl + hr) / 3.0;
        upper[i] = hr / 6.0;
        rhs[i] = (ys[i + 1] - ys[i]) / hr - (ys[i] - ys[i - 1]) / hl;
    }
    let hn = xs[n - 1] - xs[n - 2];
    diag[n - 1] = hn / 3.0;
    rhs[n - 1] = -(ys[n - 1] - ys[n - 2]) / hn;
    // symmetric: lower[i] = upper[i-1]
    for i in 1..n {
        let w = upper[i - 1] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}
