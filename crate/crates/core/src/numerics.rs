//! Dense matrices, the matrix exponential, exact constant-input flows of
//! linear systems and fixed-step RK4 for nonlinear vector fields.
//!
//! Everything here is deterministic: no threading, no adaptive step control,
//! fixed evaluation order. Two runs on the same inputs produce the same bits.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sysmodel::{LinearSystem, NonlinearSystem, VectorField};

/// Row-major dense real matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Matrix::from_row_major(r, c, rows.concat())
    }

    /// Column vector.
    pub fn column(v: &[f64]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    /// Induced infinity norm: maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm: maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Solves `self * X = rhs` by LU decomposition with partial pivoting.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if rhs.rows != self.rows {
            return Err(Error::DimensionMismatch("solve: rhs rows".into()));
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut x = rhs.clone();
        let scale = self.inf_norm().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= scale * 1e-14 {
                return Err(Error::Singular);
            }
            if piv != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, piv * n + j);
                }
                for j in 0..x.cols {
                    x.data.swap(k * x.cols + j, piv * x.cols + j);
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                if f == 0.0 {
                    continue;
                }
                lu[(i, k)] = 0.0;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
                for j in 0..x.cols {
                    let v = x[(k, j)];
                    x[(i, j)] -= f * v;
                }
            }
        }
        for k in (0..n).rev() {
            let d = lu[(k, k)];
            for j in 0..x.cols {
                let mut s = x[(k, j)];
                for i in k + 1..n {
                    s -= lu[(k, i)] * x[(i, j)];
                }
                x[(k, j)] = s / d;
            }
        }
        Ok(x)
    }

    /// Minimum-norm solution of the underdetermined system `self * x = b`
    /// (full row rank assumed), i.e. `x = Mᵀ (M Mᵀ)⁻¹ b`.
    pub fn min_norm_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch("min_norm_solve: rhs".into()));
        }
        let gram = self.matmul(&self.transpose());
        let y = gram.solve(&Matrix::column(b))?;
        Ok(self.transpose().mul_vec(y.as_slice()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Infinity norm of a matrix (maximum absolute row sum).
pub fn inf_norm(m: &Matrix) -> f64 {
    m.inf_norm()
}

/// Infinity norm of a vector.
pub fn vec_inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn vec_inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

// Degree-13 Padé coefficients and the 1-norm threshold below which no
// squaring is needed (Higham 2005). Frozen: every exponential in the crate
// uses exactly this kernel.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `e^{A t}` by scaling and squaring with a fixed degree-13 Padé kernel.
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("time".into()));
    }
    let n = a.rows();
    let at = a.scale(t);
    let norm = at.one_norm();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let x = at.scale(2f64.powi(-s));
    let b = &PADE13;
    let id = Matrix::identity(n);
    let x2 = x.matmul(&x);
    let x4 = x2.matmul(&x2);
    let x6 = x4.matmul(&x2);
    let u_inner = x6
        .scale(b[13])
        .add(&x4.scale(b[11]))
        .add(&x2.scale(b[9]));
    let u_poly = x6
        .matmul(&u_inner)
        .add(&x6.scale(b[7]))
        .add(&x4.scale(b[5]))
        .add(&x2.scale(b[3]))
        .add(&id.scale(b[1]));
    let u = x.matmul(&u_poly);
    let v_inner = x6
        .scale(b[12])
        .add(&x4.scale(b[10]))
        .add(&x2.scale(b[8]));
    let v = x6
        .matmul(&v_inner)
        .add(&x6.scale(b[6]))
        .add(&x4.scale(b[4]))
        .add(&x2.scale(b[2]))
        .add(&id.scale(b[0]));
    let mut r = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if r.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential overflow".into()));
    }
    Ok(r)
}

/// `∫₀ʰ e^{A s} ds`, read off the exponential of the block matrix `[[A, I], [0, 0]]`.
pub fn exp_integral(a: &Matrix, h: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut aug = Matrix::zeros(2 * n, 2 * n);
    aug.set_block(0, 0, a);
    aug.set_block(0, n, &Matrix::identity(n));
    let e = mat_exp(&aug, h)?;
    Ok(e.block(0, n, n, n))
}

/// Exact one-interval map of `ẋ = Ax + Bu + Gv` for inputs held constant over
/// a duration `h`: `x(h) = Φ x0 + Γ_u u + Γ_v v`.
#[derive(Clone, Debug)]
pub struct DiscreteFlow {
    pub duration: f64,
    pub phi: Matrix,
    pub gamma_u: Matrix,
    pub gamma_v: Matrix,
}

impl DiscreteFlow {
    pub fn new(sys: &LinearSystem, h: f64) -> Result<Self> {
        let n = sys.dim();
        let m = sys.b.cols();
        let s = sys.g.cols();
        let size = n + m + s;
        let mut aug = Matrix::zeros(size, size);
        aug.set_block(0, 0, &sys.a);
        aug.set_block(0, n, &sys.b);
        aug.set_block(0, n + m, &sys.g);
        let e = mat_exp(&aug, h)?;
        Ok(DiscreteFlow {
            duration: h,
            phi: e.block(0, 0, n, n),
            gamma_u: e.block(0, n, n, m),
            gamma_v: e.block(0, n + m, n, s),
        })
    }

    pub fn step(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = self.phi.mul_vec(x);
        for (o, (gu, gv)) in out
            .iter_mut()
            .zip(self.gamma_u.mul_vec(u).into_iter().zip(self.gamma_v.mul_vec(v)))
        {
            *o += gu + gv;
        }
        out
    }
}

/// Endpoint `x(τ)` of the linear system from `x0` under constant `u`, `v`.
pub fn linear_flow(sys: &LinearSystem, x0: &[f64], u: &[f64], v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if x0.len() != sys.dim() || u.len() != sys.b.cols() || v.len() != sys.g.cols() {
        return Err(Error::DimensionMismatch(format!(
            "linear_flow: x0 {} / u {} / v {} against n={} m={} s={}",
            x0.len(),
            u.len(),
            v.len(),
            sys.dim(),
            sys.b.cols(),
            sys.g.cols()
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    Ok(DiscreteFlow::new(sys, tau)?.step(x0, u, v))
}

/// Default RK4 step count: `max(100, ceil(τ·L·20))`.
pub fn default_rk4_steps(tau: f64, lipschitz: f64) -> usize {
    let by_l = (tau * lipschitz * 20.0).ceil();
    if by_l.is_finite() && by_l > 100.0 {
        by_l as usize
    } else {
        100
    }
}

/// Classical fixed-step RK4 on an autonomous right-hand side.
pub fn rk4_integrate<F>(rhs: F, x0: &[f64], tau: f64, steps: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    let h = tau / steps as f64;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut tmp = vec![0.0; n];
    for _ in 0..steps {
        let k1 = rhs(&x)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        let k2 = rhs(&tmp)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        let k3 = rhs(&tmp)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        let k4 = rhs(&tmp)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rk4Endpoint {
    pub point: Vec<f64>,
    /// The start or end point lies outside the system's working region.
    pub left_region: bool,
    /// Step-halving estimate `‖x_h − x_{h/2}‖∞ / 15`, when requested.
    pub local_error: Option<f64>,
}

/// RK4 endpoint of a nonlinear system under constant inputs.
pub fn rk4_trajectory(
    sys: &NonlinearSystem,
    x0: &[f64],
    u: &[f64],
    v: &[f64],
    tau: f64,
    steps: usize,
) -> Result<Rk4Endpoint> {
    rk4_endpoint(sys, x0, u, v, tau, steps, false)
}

/// As [`rk4_trajectory`], additionally integrating with `2·steps` to estimate the error.
pub fn rk4_trajectory_with_error(
    sys: &NonlinearSystem,
    x0: &[f64],
    u: &[f64],
    v: &[f64],
    tau: f64,
    steps: usize,
) -> Result<Rk4Endpoint> {
    rk4_endpoint(sys, x0, u, v, tau, steps, true)
}

fn rk4_endpoint(
    sys: &NonlinearSystem,
    x0: &[f64],
    u: &[f64],
    v: &[f64],
    tau: f64,
    steps: usize,
    estimate: bool,
) -> Result<Rk4Endpoint> {
    if x0.len() != sys.dim() {
        return Err(Error::DimensionMismatch("rk4: initial state".into()));
    }
    let rhs = |x: &[f64]| sys.eval(x, u, v);
    let point = rk4_integrate(rhs, x0, tau, steps)?;
    let local_error = if estimate {
        let fine = rk4_integrate(rhs, x0, tau, 2 * steps)?;
        Some(vec_inf_dist(&point, &fine) / 15.0)
    } else {
        None
    };
    let left_region = !sys.region.contains(x0) || !sys.region.contains(&point);
    Ok(Rk4Endpoint {
        point,
        left_region,
        local_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Truncated Taylor series with Kahan-compensated accumulation; the
    // independent oracle for `mat_exp`. The argument is halved until its
    // norm is below 1/2 so the series has no cancellation, then squared back.
    pub(crate) fn series_exp(a: &Matrix, t: f64, terms: usize) -> Matrix {
        let n = a.rows();
        let mut halvings = 0;
        while a.inf_norm() * t.abs() / 2f64.powi(halvings) > 0.5 {
            halvings += 1;
        }
        let at = a.scale(t / 2f64.powi(halvings));
        let mut sum = Matrix::identity(n);
        let mut comp = Matrix::zeros(n, n);
        let mut term = Matrix::identity(n);
        for k in 1..terms {
            term = term.matmul(&at).scale(1.0 / k as f64);
            for idx in 0..n * n {
                let (i, j) = (idx / n, idx % n);
                let y = term[(i, j)] - comp[(i, j)];
                let s = sum[(i, j)] + y;
                comp[(i, j)] = (s - sum[(i, j)]) - y;
                sum[(i, j)] = s;
            }
        }
        for _ in 0..halvings {
            sum = sum.matmul(&sum);
        }
        sum
    }

    fn dc_motor_a() -> Matrix {
        Matrix::from_rows(&[vec![-4.0, -0.02], vec![2.5, -0.5]]).unwrap()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = mat_exp(&Matrix::zeros(3, 3), 2.0).unwrap();
        assert_eq!(e, Matrix::identity(3));
    }

    #[test]
    fn exp_of_diagonal() {
        let e = mat_exp(&Matrix::from_diag(&[-1.0, -2.0]), 1.0).unwrap();
        assert!((e[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(e[(0, 1)], 0.0);
        assert!((e[(0, 0)] - 0.367879).abs() < 1e-6);
        assert!((e[(1, 1)] - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn exp_matches_series_on_dc_motor() {
        let a = dc_motor_a();
        let e = mat_exp(&a, 5.0).unwrap();
        let s = series_exp(&a, 5.0, 200);
        assert!(e.max_abs_diff(&s) < 1e-10, "{:?} vs {:?}", e, s);
        // 40-digit reference for the (0,0) and (1,1) entries and the norm.
        assert!((e[(0, 0)] + 0.000315721429753187689).abs() < 1e-14);
        assert!((e[(1, 1)] - 0.076719548451077559833).abs() < 1e-14);
        let norm = inf_norm(&e);
        assert!((norm - 0.131744741223099522).abs() < 1e-13, "{norm}");
    }

    #[test]
    fn exp_rejects_non_square() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(mat_exp(&m, 1.0), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn inf_norm_examples() {
        assert_eq!(inf_norm(&Matrix::identity(2)), 1.0);
        let m = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(inf_norm(&m), 7.0);
    }

    #[test]
    fn matrix_rejects_nan() {
        assert!(Matrix::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(Matrix::from_row_major(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let x = a.solve(&Matrix::column(&[4.0, 3.0])).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((x[(1, 0)] - 2.0).abs() < 1e-15);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(sing.solve(&Matrix::column(&[1.0, 1.0])), Err(Error::Singular)));
    }

    #[test]
    fn min_norm_solution() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let x = m.min_norm_solve(&[2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exp_integral_scalar() {
        let a = Matrix::from_rows(&[vec![-2.0]]).unwrap();
        let g = exp_integral(&a, 1.0).unwrap();
        assert!((g[(0, 0)] - (1.0 - (-2f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rk4_decay() {
        let x = rk4_integrate(|x| Ok(vec![-x[0]]), &[1.0], 1.0, 100).unwrap();
        assert!((x[0] - (-1f64).exp()).abs() < 1e-8);
        let z = rk4_integrate(|_| Ok(vec![0.0, 0.0]), &[0.3, -1.0], 7.0, 3).unwrap();
        assert_eq!(z, vec![0.3, -1.0]);
        assert!(rk4_integrate(|x| Ok(x.to_vec()), &[1.0], 1.0, 0).is_err());
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |steps| {
            let x = rk4_integrate(|x| Ok(vec![-x[0]]), &[1.0], 1.0, steps).unwrap();
            (x[0] - (-1f64).exp()).abs()
        };
        for steps in [10, 20, 40] {
            let ratio = err(steps) / err(2 * steps);
            assert!((ratio - 16.0).abs() < 1.5, "steps {steps}: ratio {ratio}");
        }
    }

    #[test]
    fn default_steps() {
        assert_eq!(default_rk4_steps(1.0, 2.0), 100);
        assert_eq!(default_rk4_steps(5.0, 3.0), 300);
    }
}
