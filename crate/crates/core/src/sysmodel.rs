//! Continuous control systems with disturbances, their stability envelopes,
//! and the parameter conditions under which a symbolic model is guaranteed to
//! be alternatingly approximately bisimilar to the sampled system.

use std::fmt;
use std::sync::Arc;

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{mat_exp, vec_inf_dist, vec_inf_norm, Matrix};

/// Axis-aligned box `{x : lower ≤ x ≤ upper}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxDef", into = "BoxDef")]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BoxDef {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<BoxDef> for BoxRegion {
    type Error = Error;
    fn try_from(d: BoxDef) -> Result<Self> {
        BoxRegion::new(d.lower, d.upper)
    }
}

impl From<BoxRegion> for BoxDef {
    fn from(b: BoxRegion) -> Self {
        BoxDef {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch(format!(
                "box bounds have dimensions {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(Error::DimensionMismatch("box of dimension 0".into()));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box bounds".into()));
        }
        for (axis, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l > u {
                return Err(Error::DegenerateBox {
                    axis,
                    lower: *l,
                    upper: *u,
                });
            }
        }
        Ok(BoxRegion { lower, upper })
    }

    /// The single point `{p}`.
    pub fn point(p: &[f64]) -> Result<Self> {
        BoxRegion::new(p.to_vec(), p.to_vec())
    }

    /// Same interval on every axis.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        BoxRegion::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn radius(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (u - l)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect()
    }

    /// Infinity-norm distance from `x` to the box (0 inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        vec_inf_dist(x, &self.clamp(x))
    }

    /// All `2^dim` corners; degenerate axes contribute one value.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(self.dim())];
        for (l, u) in self.lower.iter().zip(&self.upper) {
            let vals: Vec<f64> = if l == u { vec![*l] } else { vec![*l, *u] };
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// Points `lower + k·spacing` per axis up to `upper`, lexicographic order.
    /// Used for input-value grids, which are anchored at the lower corner.
    pub fn anchored_grid(&self, spacing: &[f64]) -> Result<Vec<Vec<f64>>> {
        if spacing.len() != self.dim() {
            return Err(Error::DimensionMismatch("grid spacing".into()));
        }
        let mut axes = Vec::with_capacity(self.dim());
        for ((l, u), h) in self.lower.iter().zip(&self.upper).zip(spacing) {
            if !(*h > 0.0) {
                return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {h}")));
            }
            let count = ((u - l) / h + 1e-9).floor() as usize;
            axes.push((0..=count).map(|k| crate::lattice::canonical(l + k as f64 * h)).collect::<Vec<_>>());
        }
        Ok(cartesian(&axes))
    }
}

pub(crate) fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for v in axis {
                let mut p = prefix.clone();
                p.push(*v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Anything that can evaluate `f(x, u, v)` over declared input boxes.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>>;
    fn u_box(&self) -> &BoxRegion;
    fn v_box(&self) -> &BoxRegion;
    fn region(&self) -> &BoxRegion;
}

/// `ẋ = A x + B u + G v`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub g: Matrix,
    pub u_box: BoxRegion,
    pub v_box: BoxRegion,
    pub region: BoxRegion,
}

impl LinearSystem {
    pub fn new(
        a: Matrix,
        b: Matrix,
        g: Matrix,
        u_box: BoxRegion,
        v_box: BoxRegion,
        region: BoxRegion,
    ) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        if b.rows() != n || g.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {n}x{n} but B has {} rows and G has {} rows",
                b.rows(),
                g.rows()
            )));
        }
        if u_box.dim() != b.cols() {
            return Err(Error::DimensionMismatch(format!(
                "u_box has dimension {} but B has {} columns",
                u_box.dim(),
                b.cols()
            )));
        }
        if v_box.dim() != g.cols() {
            return Err(Error::DimensionMismatch(format!(
                "v_box has dimension {} but G has {} columns",
                v_box.dim(),
                g.cols()
            )));
        }
        if region.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "region has dimension {} but the state has dimension {n}",
                region.dim()
            )));
        }
        Ok(LinearSystem {
            a,
            b,
            g,
            u_box,
            v_box,
            region,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn kl_bound(&self) -> KLBound {
        KLBound::LinearNorm { a: self.a.clone() }
    }
}

impl VectorField for LinearSystem {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn eval(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() || u.len() != self.b.cols() || v.len() != self.g.cols() {
            return Err(Error::DimensionMismatch("linear vector field arguments".into()));
        }
        let ax = self.a.mul_vec(x);
        let bu = self.b.mul_vec(u);
        let gv = self.g.mul_vec(v);
        Ok((0..ax.len()).map(|i| ax[i] + bu[i] + gv[i]).collect())
    }

    fn u_box(&self) -> &BoxRegion {
        &self.u_box
    }

    fn v_box(&self) -> &BoxRegion {
        &self.v_box
    }

    fn region(&self) -> &BoxRegion {
        &self.region
    }
}

pub type FieldFn = dyn Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync;

/// `ẋ = f(x, u, v)` with a deterministic evaluator.
#[derive(Clone)]
pub struct NonlinearSystem {
    dim: usize,
    field: Arc<FieldFn>,
    pub lipschitz: f64,
    pub u_box: BoxRegion,
    pub v_box: BoxRegion,
    pub region: BoxRegion,
    /// Declared, never checked.
    pub forward_complete: bool,
    /// Source expressions, when the field was built from text.
    pub expressions: Option<Vec<String>>,
}

impl fmt::Debug for NonlinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearSystem")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("u_box", &self.u_box)
            .field("v_box", &self.v_box)
            .field("region", &self.region)
            .field("forward_complete", &self.forward_complete)
            .field("expressions", &self.expressions)
            .finish()
    }
}

impl NonlinearSystem {
    pub fn new<F>(
        dim: usize,
        field: F,
        lipschitz: f64,
        u_box: BoxRegion,
        v_box: BoxRegion,
        region: BoxRegion,
        forward_complete: bool,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be finite and nonnegative, got {lipschitz}"
            )));
        }
        if region.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "region has dimension {} but the state has dimension {dim}",
                region.dim()
            )));
        }
        Ok(NonlinearSystem {
            dim,
            field: Arc::new(field),
            lipschitz,
            u_box,
            v_box,
            region,
            forward_complete,
            expressions: None,
        })
    }

    /// Builds the vector field from one expression per state component.
    /// Variables are `x0..`, `u0..`, `v0..`; `math::exp` and friends are available.
    pub fn from_expressions(
        exprs: &[String],
        lipschitz: f64,
        u_box: BoxRegion,
        v_box: BoxRegion,
        region: BoxRegion,
        forward_complete: bool,
    ) -> Result<Self> {
        let dim = exprs.len();
        let trees: Vec<Node<DefaultNumericTypes>> = exprs
            .iter()
            .map(|e| evalexpr::build_operator_tree(e).map_err(|err| Error::Parse(format!("{e}: {err}"))))
            .collect::<Result<_>>()?;
        let (m, s) = (u_box.dim(), v_box.dim());
        let field = move |x: &[f64], u: &[f64], v: &[f64]| -> Result<Vec<f64>> {
            if x.len() != dim || u.len() != m || v.len() != s {
                return Err(Error::DimensionMismatch("vector field arguments".into()));
            }
            let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
            let vars = x
                .iter()
                .enumerate()
                .map(|(i, val)| (format!("x{i}"), *val))
                .chain(u.iter().enumerate().map(|(i, val)| (format!("u{i}"), *val)))
                .chain(v.iter().enumerate().map(|(i, val)| (format!("v{i}"), *val)));
            for (name, val) in vars {
                ctx.set_value(name, Value::Float(val))
                    .map_err(|e| Error::Evaluator(e.to_string()))?;
            }
            trees
                .iter()
                .map(|t| {
                    t.eval_number_with_context(&ctx)
                        .map_err(|e| Error::Evaluator(e.to_string()))
                })
                .collect()
        };
        let mut sys = NonlinearSystem::new(dim, field, lipschitz, u_box, v_box, region, forward_complete)?;
        sys.expressions = Some(exprs.to_vec());
        Ok(sys)
    }
}

impl VectorField for NonlinearSystem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let out = (self.field)(x, u, v)?;
        if out.len() != self.dim {
            return Err(Error::Evaluator(format!(
                "vector field returned {} components, expected {}",
                out.len(),
                self.dim
            )));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluator("vector field returned a non-finite value".into()));
        }
        Ok(out)
    }

    fn u_box(&self) -> &BoxRegion {
        &self.u_box
    }

    fn v_box(&self) -> &BoxRegion {
        &self.v_box
    }

    fn region(&self) -> &BoxRegion {
        &self.region
    }
}

#[derive(Clone, Debug)]
pub enum ControlSystem {
    Linear(LinearSystem),
    Nonlinear(NonlinearSystem),
}

impl VectorField for ControlSystem {
    fn dim(&self) -> usize {
        match self {
            ControlSystem::Linear(s) => s.dim(),
            ControlSystem::Nonlinear(s) => VectorField::dim(s),
        }
    }

    fn eval(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        match self {
            ControlSystem::Linear(s) => s.eval(x, u, v),
            ControlSystem::Nonlinear(s) => s.eval(x, u, v),
        }
    }

    fn u_box(&self) -> &BoxRegion {
        match self {
            ControlSystem::Linear(s) => &s.u_box,
            ControlSystem::Nonlinear(s) => &s.u_box,
        }
    }

    fn v_box(&self) -> &BoxRegion {
        match self {
            ControlSystem::Linear(s) => &s.v_box,
            ControlSystem::Nonlinear(s) => &s.v_box,
        }
    }

    fn region(&self) -> &BoxRegion {
        match self {
            ControlSystem::Linear(s) => &s.region,
            ControlSystem::Nonlinear(s) => &s.region,
        }
    }
}

/// Class-KL envelope `β(r, t)` bounding the distance between two trajectories
/// driven by the same input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KLBound {
    /// `β(r,t) = ‖e^{At}‖∞ · r`.
    LinearNorm { a: Matrix },
    /// `β(r,t) = c · e^{−λt} · r`.
    Exponential { c: f64, lambda: f64 },
}

impl KLBound {
    pub fn exponential(c: f64, lambda: f64) -> Result<Self> {
        if !(c >= 1.0) || !(lambda > 0.0) || !c.is_finite() || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponential KL bound needs c >= 1 and lambda > 0, got c={c}, lambda={lambda}"
            )));
        }
        Ok(KLBound::Exponential { c, lambda })
    }

    pub fn eval(&self, r: f64, t: f64) -> Result<f64> {
        if r < 0.0 || t < 0.0 {
            return Err(Error::InvalidParameter(format!("beta needs r, t >= 0, got r={r}, t={t}")));
        }
        match self {
            KLBound::LinearNorm { a } => Ok(linear_beta(a, t)? * r),
            KLBound::Exponential { c, lambda } => Ok(c * (-lambda * t).exp() * r),
        }
    }
}

/// `‖e^{At}‖∞`, the growth factor of the linear KL envelope.
pub fn linear_beta(a: &Matrix, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    Ok(mat_exp(a, t)?.inf_norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterCheck {
    pub satisfied: bool,
    /// `ε − (β(ε,τ) + μ + η/2)`; positive iff satisfied.
    pub margin: f64,
    pub beta: f64,
}

/// Checks `β(ε,τ) + μ + η/2 < ε`.
pub fn validate_parameters(beta: &KLBound, epsilon: f64, tau: f64, mu: f64, eta: f64) -> Result<ParameterCheck> {
    for (name, v) in [("epsilon", epsilon), ("tau", tau), ("mu", mu), ("eta", eta)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let b = beta.eval(epsilon, tau)?;
    let lhs = b + mu + eta / 2.0;
    Ok(ParameterCheck {
        satisfied: lhs < epsilon,
        margin: epsilon - lhs,
        beta: b,
    })
}

/// `a · r^p` with `a > 0`, `p ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBound {
    pub coef: f64,
    pub power: f64,
}

impl PowerBound {
    pub fn new(coef: f64, power: f64) -> Result<Self> {
        if !(coef > 0.0) || !(power >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "class-K∞ power bound needs coef > 0 and power >= 1, got {coef}, {power}"
            )));
        }
        Ok(PowerBound { coef, power })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.coef * r.powf(self.power)
    }
}

/// Quadratic incremental Lyapunov candidate `V(x1,x2) = (x1−x2)ᵀ P (x1−x2)`
/// with power-function bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSampleCertificate {
    pub p: Matrix,
    pub alpha1: PowerBound,
    pub alpha2: PowerBound,
    pub rho: PowerBound,
}

impl LyapunovSampleCertificate {
    pub fn new(p: Matrix, alpha1: PowerBound, alpha2: PowerBound, rho: PowerBound) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::NotSquare {
                rows: p.rows(),
                cols: p.cols(),
            });
        }
        if p.max_abs_diff(&p.transpose()) > 1e-12 * p.inf_norm().max(1.0) {
            return Err(Error::InvalidParameter("P must be symmetric".into()));
        }
        Ok(LyapunovSampleCertificate { p, alpha1, alpha2, rho })
    }

    fn value(&self, d: &[f64]) -> f64 {
        let pd = self.p.mul_vec(d);
        d.iter().zip(&pd).map(|(a, b)| a * b).sum()
    }
}

/// Sampling of `region × region × input corners`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub points_per_axis: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DgasReport {
    pub pass: bool,
    /// Worst `max(α1(r) − V, V − α2(r))`; condition (i) holds on samples iff ≤ 0.
    pub bound_violation: f64,
    /// Worst `V̇ + ρ(r)`; condition (ii) holds on samples iff < 0.
    pub decrease_violation: f64,
    pub samples: usize,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
}

/// Falsification check of an incremental Lyapunov certificate on a finite
/// sample grid. A pass is evidence only.
pub fn check_dgas_samples<S: VectorField + ?Sized>(
    sys: &S,
    cert: &LyapunovSampleCertificate,
    grid: SampleGrid,
) -> Result<DgasReport> {
    let n = sys.dim();
    if cert.p.rows() != n {
        return Err(Error::DimensionMismatch("certificate P does not match state dimension".into()));
    }
    if grid.points_per_axis == 0 {
        return Err(Error::Empty("sample grid".into()));
    }
    let region = sys.region();
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (l, u) = (region.lower()[i], region.upper()[i]);
            let k = grid.points_per_axis;
            if k == 1 || l == u {
                vec![0.5 * (l + u)]
            } else {
                (0..k).map(|j| l + (u - l) * j as f64 / (k - 1) as f64).collect()
            }
        })
        .collect();
    let states = cartesian(&axes);
    let inputs: Vec<(Vec<f64>, Vec<f64>)> = sys
        .u_box()
        .corners()
        .into_iter()
        .flat_map(|u| sys.v_box().corners().into_iter().map(move |v| (u.clone(), v)))
        .collect();

    let mut bound_violation = f64::NEG_INFINITY;
    let mut decrease_violation = f64::NEG_INFINITY;
    let mut worst_pair = None;
    let mut samples = 0;
    for x1 in &states {
        for x2 in &states {
            let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
            let r = vec_inf_norm(&d);
            if r == 0.0 {
                continue;
            }
            let v = cert.value(&d);
            let bv = (cert.alpha1.eval(r) - v).max(v - cert.alpha2.eval(r));
            bound_violation = bound_violation.max(bv);
            // ∂V/∂x1 f(x1,w) + ∂V/∂x2 f(x2,w) = 2 dᵀP (f(x1,w) − f(x2,w)).
            let pd = cert.p.mul_vec(&d);
            for (u, w) in &inputs {
                let f1 = sys.eval(x1, u, w)?;
                let f2 = sys.eval(x2, u, w)?;
                let vdot: f64 = 2.0 * pd.iter().zip(f1.iter().zip(&f2)).map(|(p, (a, b))| p * (a - b)).sum::<f64>();
                let dv = vdot + cert.rho.eval(r);
                samples += 1;
                if dv > decrease_violation {
                    decrease_violation = dv;
                    worst_pair = Some((x1.clone(), x2.clone()));
                }
            }
        }
    }
    if samples == 0 {
        return Err(Error::Empty("sample grid has no off-diagonal pairs".into()));
    }
    Ok(DgasReport {
        pass: bound_violation <= 0.0 && decrease_violation < 0.0,
        bound_violation,
        decrease_violation,
        samples,
        worst_pair,
    })
}

/// Solves `AᵀP + PA = −Q` through the Kronecker-product linear system.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    if !a.is_square() || !q.is_square() || a.rows() != q.rows() {
        return Err(Error::DimensionMismatch("lyapunov equation operands".into()));
    }
    let n = a.rows();
    let mut k = Matrix::zeros(n * n, n * n);
    // Unknown P[i][j] sits at index i*n + j.
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for l in 0..n {
                // (AᵀP)[i][j] = Σ_l A[l][i] P[l][j]
                k[(row, l * n + j)] += a[(l, i)];
                // (PA)[i][j] = Σ_l P[i][l] A[l][j]
                k[(row, i * n + l)] += a[(l, j)];
            }
        }
    }
    let rhs: Vec<f64> = q.as_slice().iter().map(|v| -v).collect();
    let sol = k.solve(&Matrix::column(&rhs))?;
    let p = Matrix::from_row_major(n, n, sol.as_slice().to_vec())?;
    Ok(p.add(&p.transpose()).scale(0.5))
}

/// JSON system definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemDef {
    pub kind: SystemKind,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
    /// Nonlinear only: one expression per state component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<String>>,
    pub u_box: BoxDefRaw,
    pub v_box: BoxDefRaw,
    pub region: BoxDefRaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward_complete: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaDef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Linear,
    Nonlinear,
}

/// Unvalidated box as read from JSON, so validation can report instead of
/// failing inside the deserializer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxDefRaw {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl From<&BoxRegion> for BoxDefRaw {
    fn from(b: &BoxRegion) -> Self {
        BoxDefRaw {
            lower: b.lower.clone(),
            upper: b.upper.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BetaDef {
    LinearNorm,
    Exponential { c: f64, lambda: f64 },
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub system: ControlSystem,
    pub beta: KLBound,
    pub warnings: Vec<String>,
}

fn make_box(name: &str, raw: &BoxDefRaw) -> Result<BoxRegion> {
    BoxRegion::new(raw.lower.clone(), raw.upper.clone()).map_err(|e| match e {
        Error::DegenerateBox { axis, lower, upper } => Error::DegenerateBox { axis, lower, upper },
        Error::DimensionMismatch(m) => Error::DimensionMismatch(format!("{name}: {m}")),
        other => other,
    })
}

/// Validates a system definition and returns the normalized system with its
/// KL envelope.
pub fn validate_system(def: &SystemDef) -> Result<ValidationReport> {
    let u_box = make_box("u_box", &def.u_box)?;
    let v_box = make_box("v_box", &def.v_box)?;
    let region = make_box("region", &def.region)?;
    let mut warnings = Vec::new();
    match def.kind {
        SystemKind::Linear => {
            let need = |m: &Option<Vec<Vec<f64>>>, name: &str| {
                m.as_ref()
                    .ok_or_else(|| Error::DimensionMismatch(format!("linear system is missing matrix {name}")))
                    .and_then(|rows| Matrix::from_rows(rows))
            };
            let a = need(&def.a, "A")?;
            let b = need(&def.b, "B")?;
            let g = need(&def.g, "G")?;
            if def.f.is_some() {
                warnings.push("expression field `f` ignored for a linear system".into());
            }
            let sys = LinearSystem::new(a, b, g, u_box, v_box, region)?;
            let beta = match &def.beta {
                None | Some(BetaDef::LinearNorm) => sys.kl_bound(),
                Some(BetaDef::Exponential { c, lambda }) => KLBound::exponential(*c, *lambda)?,
            };
            Ok(ValidationReport {
                system: ControlSystem::Linear(sys),
                beta,
                warnings,
            })
        }
        SystemKind::Nonlinear => {
            let exprs = def
                .f
                .as_ref()
                .ok_or_else(|| Error::DimensionMismatch("nonlinear system is missing `f`".into()))?;
            if exprs.len() != region.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "{} field expressions for a region of dimension {}",
                    exprs.len(),
                    region.dim()
                )));
            }
            let lipschitz = def.lipschitz.ok_or(Error::MissingLipschitz)?;
            let forward_complete = def.forward_complete.unwrap_or(false);
            if !forward_complete {
                warnings.push("system is not declared forward complete".into());
            }
            let sys = NonlinearSystem::from_expressions(exprs, lipschitz, u_box, v_box, region, forward_complete)?;
            // Probe the evaluator once so malformed expressions fail here.
            sys.eval(&sys.region.center(), &sys.u_box.center(), &sys.v_box.center())?;
            let beta = match &def.beta {
                Some(BetaDef::Exponential { c, lambda }) => KLBound::exponential(*c, *lambda)?,
                Some(BetaDef::LinearNorm) => {
                    return Err(Error::InvalidParameter(
                        "linear-norm KL bound requires a linear system".into(),
                    ))
                }
                None => {
                    return Err(Error::InvalidParameter(
                        "nonlinear systems must declare a KL bound".into(),
                    ))
                }
            };
            Ok(ValidationReport {
                system: ControlSystem::Nonlinear(sys),
                beta,
                warnings,
            })
        }
    }
}

impl SystemDef {
    pub fn from_linear(sys: &LinearSystem) -> Self {
        SystemDef {
            kind: SystemKind::Linear,
            a: Some(sys.a.to_rows()),
            b: Some(sys.b.to_rows()),
            g: Some(sys.g.to_rows()),
            f: None,
            u_box: (&sys.u_box).into(),
            v_box: (&sys.v_box).into(),
            region: (&sys.region).into(),
            lipschitz: None,
            forward_complete: None,
            beta: Some(BetaDef::LinearNorm),
        }
    }
}

/// Physical constants of the armature-controlled DC motor.
#[derive(Clone, Copy, Debug)]
pub struct DcMotorParams {
    pub resistance: f64,
    pub inductance: f64,
    pub back_emf: f64,
    pub torque_const: f64,
    pub friction: f64,
    pub inertia: f64,
}

impl Default for DcMotorParams {
    fn default() -> Self {
        DcMotorParams {
            resistance: 2.0,
            inductance: 0.5,
            back_emf: 0.1,
            torque_const: 0.1,
            friction: 0.2,
            inertia: 0.4,
        }
    }
}

/// DC motor with state (current, angular velocity), voltage input and load
/// torque disturbance, on `X = [0,0.6]²`, `U = [0.3,0.7]`, `V = [−0.02,0.02]`.
pub fn dc_motor(p: DcMotorParams) -> Result<LinearSystem> {
    let a = Matrix::from_rows(&[
        vec![-p.resistance / p.inductance, -p.back_emf * p.torque_const / p.inductance],
        vec![1.0 / p.inertia, -p.friction / p.inertia],
    ])?;
    let b = Matrix::from_rows(&[vec![p.torque_const / p.inductance], vec![0.0]])?;
    let g = Matrix::from_rows(&[vec![0.0], vec![1.0 / p.inertia]])?;
    LinearSystem::new(
        a,
        b,
        g,
        BoxRegion::new(vec![0.3], vec![0.7])?,
        BoxRegion::new(vec![-0.02], vec![0.02])?,
        BoxRegion::cube(2, 0.0, 0.6)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_def(f: &str) -> SystemDef {
        serde_json::from_value(serde_json::json!({
            "kind": "nonlinear",
            "f": [f],
            "u_box": {"lower": [1.0], "upper": [2.0]},
            "v_box": {"lower": [0.4], "upper": [1.0]},
            "region": {"lower": [0.0], "upper": [2.0]},
            "lipschitz": 2.0,
            "forward_complete": true,
            "beta": {"kind": "exponential", "c": 1.0, "lambda": 2.0}
        }))
        .unwrap()
    }

    #[test]
    fn dc_motor_matrices() {
        let sys = dc_motor(DcMotorParams::default()).unwrap();
        let def = SystemDef::from_linear(&sys);
        let report = validate_system(&def).unwrap();
        let ControlSystem::Linear(s) = report.system else { panic!() };
        let expect_a = [[-4.0, -0.02], [2.5, -0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.a[(i, j)] - expect_a[i][j]).abs() < 1e-15);
            }
        }
        assert!((s.b[(0, 0)] - 0.2).abs() < 1e-15 && s.b[(1, 0)] == 0.0);
        assert!(s.g[(0, 0)] == 0.0 && (s.g[(1, 0)] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_box_rejected() {
        let mut def = SystemDef::from_linear(&dc_motor(DcMotorParams::default()).unwrap());
        def.u_box = BoxDefRaw {
            lower: vec![0.7],
            upper: vec![0.3],
        };
        assert!(matches!(validate_system(&def), Err(Error::DegenerateBox { axis: 0, .. })));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut def = SystemDef::from_linear(&dc_motor(DcMotorParams::default()).unwrap());
        def.b = Some(vec![vec![0.2]]);
        assert!(matches!(validate_system(&def), Err(Error::DimensionMismatch(_))));
        let mut def = SystemDef::from_linear(&dc_motor(DcMotorParams::default()).unwrap());
        def.u_box = BoxDefRaw {
            lower: vec![0.3, 0.0],
            upper: vec![0.7, 1.0],
        };
        assert!(matches!(validate_system(&def), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn scalar_nonlinear_accepted() {
        let report = validate_system(&scalar_def("-2*x0 + u0*v0")).unwrap();
        let sys = report.system;
        assert_eq!(sys.dim(), 1);
        assert_eq!(sys.u_box().dim(), 1);
        assert_eq!(sys.v_box().dim(), 1);
        let f = sys.eval(&[0.5], &[2.0], &[1.0]).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn missing_lipschitz_rejected() {
        let mut def = scalar_def("-2*x0");
        def.lipschitz = None;
        assert!(matches!(validate_system(&def), Err(Error::MissingLipschitz)));
    }

    #[test]
    fn bad_expression_rejected() {
        assert!(validate_system(&scalar_def("-2*x0 + ")).is_err());
        assert!(validate_system(&scalar_def("y + 1")).is_err());
    }

    #[test]
    fn linear_beta_examples() {
        assert_eq!(linear_beta(&Matrix::zeros(2, 2), 3.0).unwrap(), 1.0);
        let a = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        assert!((linear_beta(&a, 1.0).unwrap() - 0.367879).abs() < 1e-6);
        let dc = dc_motor(DcMotorParams::default()).unwrap();
        let b = linear_beta(&dc.a, 5.0).unwrap();
        assert!((b - 0.13).abs() < 0.005, "{b}");
        assert!(linear_beta(&Matrix::zeros(2, 3), 1.0).is_err());
    }

    #[test]
    fn parameter_conditions() {
        let dc = dc_motor(DcMotorParams::default()).unwrap();
        let r = validate_parameters(&dc.kl_bound(), 0.5, 5.0, 0.3, 0.15).unwrap();
        assert!(r.satisfied);
        assert!((r.margin - (0.5 - (0.5 * 0.131744741223 + 0.3 + 0.075))).abs() < 1e-9);

        let r = validate_parameters(&dc.kl_bound(), 0.5, 5.0, 0.5, 0.15).unwrap();
        assert!(!r.satisfied);

        let exp = KLBound::exponential(1.0, 1.0).unwrap();
        let r = validate_parameters(&exp, 1.0, 3.0, 0.5, 0.5).unwrap();
        assert!(r.satisfied);
        assert!((r.margin - (0.25 - (-3f64).exp())).abs() < 1e-15);

        assert!(validate_parameters(&exp, 1.0, 0.0, 0.5, 0.5).is_err());
        assert!(validate_parameters(&exp, -1.0, 1.0, 0.5, 0.5).is_err());
    }

    fn scalar_linear(a: f64) -> LinearSystem {
        LinearSystem::new(
            Matrix::from_rows(&[vec![a]]).unwrap(),
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            BoxRegion::new(vec![-1.0], vec![1.0]).unwrap(),
            BoxRegion::new(vec![-0.1], vec![0.1]).unwrap(),
            BoxRegion::new(vec![-2.0], vec![2.0]).unwrap(),
        )
        .unwrap()
    }

    fn unit_cert() -> LyapunovSampleCertificate {
        let sq = PowerBound::new(1.0, 2.0).unwrap();
        LyapunovSampleCertificate::new(Matrix::identity(1), sq, sq, sq).unwrap()
    }

    #[test]
    fn dgas_stable_scalar_passes() {
        let sys = scalar_linear(-1.0);
        for k in [2, 7, 25] {
            let r = check_dgas_samples(&sys, &unit_cert(), SampleGrid { points_per_axis: k }).unwrap();
            assert!(r.pass, "{r:?}");
            // V̇ + ρ = −2d² + d² = −d²
            assert!(r.decrease_violation < 0.0);
        }
    }

    #[test]
    fn dgas_unstable_scalar_fails() {
        let sys = scalar_linear(1.0);
        let r = check_dgas_samples(&sys, &unit_cert(), SampleGrid { points_per_axis: 5 }).unwrap();
        assert!(!r.pass);
        assert!(r.decrease_violation > 0.0);
        assert!(r.worst_pair.is_some());
    }

    #[test]
    fn dgas_empty_grid() {
        let sys = scalar_linear(-1.0);
        assert!(check_dgas_samples(&sys, &unit_cert(), SampleGrid { points_per_axis: 0 }).is_err());
        assert!(check_dgas_samples(&sys, &unit_cert(), SampleGrid { points_per_axis: 1 }).is_err());
    }

    #[test]
    fn dgas_dc_motor_with_lyapunov_solution() {
        let sys = dc_motor(DcMotorParams::default()).unwrap();
        let p = solve_lyapunov(&sys.a, &Matrix::identity(2)).unwrap();
        // Residual of AᵀP + PA + I.
        let res = sys.a.transpose().matmul(&p).add(&p.matmul(&sys.a)).add(&Matrix::identity(2));
        assert!(res.inf_norm() < 1e-12);
        // For ‖d‖∞ = r: λmin r² ≤ dᵀPd ≤ 2 λmax r², and V̇ = −‖d‖₂² ≤ −r².
        let (p00, p01, p11) = (p[(0, 0)], p[(0, 1)], p[(1, 1)]);
        let tr = p00 + p11;
        let disc = ((p00 - p11).powi(2) + 4.0 * p01 * p01).sqrt();
        let (lmin, lmax) = (0.5 * (tr - disc), 0.5 * (tr + disc));
        assert!(lmin > 0.0);
        let cert = LyapunovSampleCertificate::new(
            p,
            PowerBound::new(lmin * 0.999, 2.0).unwrap(),
            PowerBound::new(2.0 * lmax * 1.001, 2.0).unwrap(),
            PowerBound::new(0.5, 2.0).unwrap(),
        )
        .unwrap();
        let r = check_dgas_samples(&sys, &cert, SampleGrid { points_per_axis: 10 }).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.samples, 100 * 99 * 4);
    }

    #[test]
    fn anchored_grid_includes_bounds() {
        let b = BoxRegion::new(vec![0.4], vec![1.0]).unwrap();
        assert_eq!(b.anchored_grid(&[0.3]).unwrap(), vec![vec![0.4], vec![0.7], vec![1.0]]);
        let b = BoxRegion::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(b.anchored_grid(&[0.5]).unwrap(), vec![vec![1.0], vec![1.5], vec![2.0]]);
    }

    #[test]
    fn box_corners_and_distance() {
        let b = BoxRegion::cube(2, 0.0, 0.3).unwrap();
        assert_eq!(b.corners().len(), 4);
        assert!((b.distance(&[0.15, 0.6]) - 0.3).abs() < 1e-15);
        assert_eq!(b.distance(&[0.1, 0.1]), 0.0);
        assert_eq!(BoxRegion::point(&[1.0, 2.0]).unwrap().corners().len(), 1);
    }
}
