//! Outer approximations of the input-reachable sets of linear systems as
//! zonotopes, with a rigorous Hausdorff error bound, plus vertex and point
//! conversions of the result.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{canonical, fmt_g12, PointSet};
use crate::numerics::{exp_integral, mat_exp, vec_inf_dist, vec_inf_norm, Matrix};
use crate::sysmodel::{BoxRegion, LinearSystem};

/// Default number of time steps in the Minkowski-sum discretization.
pub const DEFAULT_REACH_STEPS: usize = 500;

const MERGE_TOL: f64 = 1e-12;

/// `{c + Σ ξ_i g_i : ξ_i ∈ [−1, 1]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zonotope {
    pub center: Vec<f64>,
    pub generators: Vec<Vec<f64>>,
}

impl Zonotope {
    pub fn new(center: Vec<f64>, generators: Vec<Vec<f64>>) -> Result<Self> {
        let n = center.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("zonotope of dimension 0".into()));
        }
        if generators.iter().any(|g| g.len() != n) {
            return Err(Error::DimensionMismatch("generator dimension differs from center".into()));
        }
        if center.iter().chain(generators.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("zonotope".into()));
        }
        Ok(Zonotope { center, generators })
    }

    pub fn point(c: &[f64]) -> Self {
        Zonotope {
            center: c.to_vec(),
            generators: Vec::new(),
        }
    }

    pub fn from_box(b: &BoxRegion) -> Self {
        let r = b.radius();
        let generators = (0..b.dim())
            .filter(|&i| r[i] > 0.0)
            .map(|i| {
                let mut g = vec![0.0; b.dim()];
                g[i] = r[i];
                g
            })
            .collect();
        Zonotope {
            center: b.center(),
            generators,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn linear_map(&self, m: &Matrix) -> Zonotope {
        Zonotope {
            center: m.mul_vec(&self.center),
            generators: self.generators.iter().map(|g| m.mul_vec(g)).collect(),
        }
    }

    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("Minkowski sum of zonotopes".into()));
        }
        let mut generators = self.generators.clone();
        generators.extend(other.generators.iter().cloned());
        Ok(Zonotope {
            center: self.center.iter().zip(&other.center).map(|(a, b)| a + b).collect(),
            generators,
        })
    }

    /// Smallest enclosing box.
    pub fn interval_hull(&self) -> BoxRegion {
        let r = self.box_radius();
        let lower = self.center.iter().zip(&r).map(|(c, r)| c - r).collect();
        let upper = self.center.iter().zip(&r).map(|(c, r)| c + r).collect();
        BoxRegion::new(lower, upper).expect("finite zonotope has a valid hull")
    }

    fn box_radius(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.generators.iter().map(|g| g[i].abs()).sum())
            .collect()
    }

    /// Support function `max_{x ∈ Z} d·x`.
    pub fn support(&self, d: &[f64]) -> f64 {
        dot(d, &self.center) + self.generators.iter().map(|g| dot(d, g).abs()).sum::<f64>()
    }

    /// Generators with parallel ones merged and zero ones dropped.
    pub fn reduced_generators(&self) -> Vec<Vec<f64>> {
        let scale = self
            .generators
            .iter()
            .map(|g| vec_inf_norm(g))
            .fold(0.0, f64::max);
        let mut merged: Vec<Vec<f64>> = Vec::new();
        for g in &self.generators {
            if vec_inf_norm(g) <= MERGE_TOL * scale.max(f64::MIN_POSITIVE) {
                continue;
            }
            // Orient so the first nonzero entry is positive.
            let lead = g.iter().find(|v| v.abs() > 0.0).copied().unwrap_or(1.0);
            let g: Vec<f64> = if lead < 0.0 { g.iter().map(|v| -v).collect() } else { g.clone() };
            match merged.iter_mut().find(|m| parallel(m, &g)) {
                Some(m) => m.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => merged.push(g),
            }
        }
        merged
    }

    /// Membership test for `n ≤ 3`, exact up to `tol` in every tested direction.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch("point vs zonotope".into()));
        }
        let dirs = self.facet_directions()?;
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        Ok(dirs.iter().all(|d| {
            let reach: f64 = self.generators.iter().map(|g| dot(d, g).abs()).sum();
            dot(d, &diff).abs() <= reach + tol * vec_inf_norm(d).max(1.0) * 2.0
        }))
    }

    /// A direction set containing every facet normal (for `n ≤ 3`).
    fn facet_directions(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        if n > 3 {
            return Err(Error::Unsupported(format!(
                "exact zonotope operations are limited to dimension 3 (got {n}); use surface_sample"
            )));
        }
        let mut dirs: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        let gens = self.reduced_generators();
        dirs.extend(gens.iter().cloned());
        match n {
            2 => dirs.extend(gens.iter().map(|g| vec![-g[1], g[0]])),
            3 => {
                let basis = orthonormal_span(&gens);
                match basis.len() {
                    1 => {
                        let g = &basis[0];
                        let helper = if g[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                        let p1 = cross(g, &helper);
                        let p2 = cross(g, &p1);
                        dirs.push(p1);
                        dirs.push(p2);
                    }
                    2 => {
                        let normal = cross(&basis[0], &basis[1]);
                        dirs.extend(gens.iter().map(|g| cross(&normal, g)));
                        dirs.push(normal);
                    }
                    _ => {
                        for i in 0..gens.len() {
                            for j in i + 1..gens.len() {
                                let c = cross(&gens[i], &gens[j]);
                                if vec_inf_norm(&c) > MERGE_TOL * vec_inf_norm(&gens[i]) * vec_inf_norm(&gens[j]) {
                                    dirs.push(c);
                                }
                            }
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(dirs)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn parallel(a: &[f64], b: &[f64]) -> bool {
    let (na, nb) = (norm2(a), norm2(b));
    (dot(a, b) - na * nb).abs() <= MERGE_TOL * na * nb
}

fn orthonormal_span(gens: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for g in gens {
        let mut v = g.clone();
        for b in &basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let nv = norm2(&v);
        if nv > 1e-10 * norm2(g) {
            basis.push(v.iter().map(|x| x / nv).collect());
        }
    }
    basis
}

/// Vertices of a 2-D zonotope in counter-clockwise order.
fn polygon_vertices(center: &[f64], gens: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut g: Vec<Vec<f64>> = gens
        .iter()
        .map(|g| {
            // Angle in [0, π).
            if g[1] < 0.0 || (g[1] == 0.0 && g[0] < 0.0) {
                vec![-g[0], -g[1]]
            } else {
                g.clone()
            }
        })
        .collect();
    g.sort_by(|a, b| a[1].atan2(a[0]).partial_cmp(&b[1].atan2(b[0])).unwrap());
    let mut v = vec![
        center[0] - g.iter().map(|g| g[0]).sum::<f64>(),
        center[1] - g.iter().map(|g| g[1]).sum::<f64>(),
    ];
    let mut out = vec![v.clone()];
    for sign in [2.0, -2.0] {
        for gi in &g {
            v = vec![v[0] + sign * gi[0], v[1] + sign * gi[1]];
            out.push(v.clone());
        }
    }
    if !g.is_empty() {
        out.pop();
    }
    dedup_close(out)
}

fn dedup_close(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let scale = points.iter().map(|p| vec_inf_norm(p)).fold(1.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !out.iter().any(|q| vec_inf_dist(q, &p) <= MERGE_TOL * scale) {
            out.push(p);
        }
    }
    out
}

/// V-representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    vertices: Vec<Vec<f64>>,
}

impl Polytope {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices.first().ok_or_else(|| Error::Empty("polytope without vertices".into()))?.len();
        if n == 0 || vertices.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch("polytope vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polytope vertices".into()));
        }
        Ok(Polytope { vertices })
    }

    /// Convex hull of 2-D points, counter-clockwise, collinear points dropped.
    pub fn hull_2d(points: &[Vec<f64>]) -> Result<Self> {
        if points.iter().any(|p| p.len() != 2) {
            return Err(Error::DimensionMismatch("hull_2d needs planar points".into()));
        }
        let mut pts = dedup_close(points.to_vec());
        if pts.len() <= 2 {
            return Polytope::new(pts);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let turn = |o: &[f64], a: &[f64], b: &[f64]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        let mut lower: Vec<Vec<f64>> = Vec::new();
        for p in &pts {
            while lower.len() >= 2 && turn(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p.clone());
        }
        let mut upper: Vec<Vec<f64>> = Vec::new();
        for p in pts.iter().rev() {
            while upper.len() >= 2 && turn(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p.clone());
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Polytope::new(lower)
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let cells: Vec<String> = v.iter().map(|x| fmt_g12(*x)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Polytope::new(PointSet::from_csv(text)?.into_points())
    }

    /// Bounding box of the vertices.
    pub fn bounds(&self) -> BoxRegion {
        let n = self.dim();
        let lower = (0..n).map(|i| self.vertices.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)).collect();
        let upper = (0..n)
            .map(|i| self.vertices.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        BoxRegion::new(lower, upper).expect("finite vertices")
    }
}

/// Exact vertex list of a zonotope of dimension ≤ 3.
pub fn to_vertices(z: &Zonotope) -> Result<Polytope> {
    let n = z.dim();
    if n > 3 {
        return Err(Error::Unsupported(format!(
            "vertex enumeration is limited to dimension 3 (got {n}); use surface_sample"
        )));
    }
    let gens = z.reduced_generators();
    let verts = match n {
        1 => {
            let r: f64 = gens.iter().map(|g| g[0].abs()).sum();
            dedup_close(vec![vec![z.center[0] - r], vec![z.center[0] + r]])
        }
        2 => polygon_vertices(&z.center, &gens),
        _ => vertices_3d(&z.center, &gens),
    };
    Polytope::new(verts)
}

/// Vertices of a generator set living in a plane of R^3, mapped back.
fn planar_vertices_3d(center: &[f64], gens: &[Vec<f64>], basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let proj: Vec<Vec<f64>> = gens.iter().map(|g| vec![dot(g, &basis[0]), dot(g, &basis[1])]).collect();
    polygon_vertices(&[0.0, 0.0], &proj)
        .into_iter()
        .map(|p| (0..3).map(|i| center[i] + p[0] * basis[0][i] + p[1] * basis[1][i]).collect())
        .collect()
}

fn vertices_3d(center: &[f64], gens: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let basis = orthonormal_span(gens);
    match basis.len() {
        0 => vec![center.to_vec()],
        1 => {
            let r: f64 = gens.iter().map(|g| dot(g, &basis[0]).abs()).sum();
            dedup_close(vec![
                (0..3).map(|i| center[i] - r * basis[0][i]).collect(),
                (0..3).map(|i| center[i] + r * basis[0][i]).collect(),
            ])
        }
        2 => dedup_close(planar_vertices_3d(center, gens, &basis)),
        _ => {
            let mut out = Vec::new();
            for i in 0..gens.len() {
                for j in i + 1..gens.len() {
                    let nrm = cross(&gens[i], &gens[j]);
                    let scale = norm2(&gens[i]) * norm2(&gens[j]);
                    if norm2(&nrm) <= MERGE_TOL * scale {
                        continue;
                    }
                    let (mut coplanar, mut shift) = (Vec::new(), vec![0.0; 3]);
                    for g in gens {
                        let s = dot(&nrm, g);
                        if s.abs() <= 1e-10 * norm2(&nrm) * norm2(g) {
                            coplanar.push(g.clone());
                        } else {
                            let sg = s.signum();
                            shift.iter_mut().zip(g).for_each(|(a, b)| *a += sg * b);
                        }
                    }
                    let plane = orthonormal_span(&coplanar);
                    for sign in [1.0, -1.0] {
                        let fc: Vec<f64> = (0..3).map(|k| center[k] + sign * shift[k]).collect();
                        out.extend(planar_vertices_3d(&fc, &coplanar, &plane));
                    }
                }
            }
            dedup_close(out)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachResult {
    /// Outer approximation: discretized set bloated by the per-axis error box.
    pub set: Zonotope,
    /// Discretized set, reachable by piecewise-constant inputs (inner).
    pub inner: Zonotope,
    /// Hausdorff distance between `set` and the true reach set is at most this.
    pub error_bound: f64,
    pub steps: usize,
    pub tau: f64,
    /// Set when a requested cap was not met.
    pub exceeds_cap: bool,
}

/// Reach set from the origin in time `τ` of `ẋ = Ax + B w`, `w ∈ input_box`.
///
/// With `δ = τ/N`, every interval contributes `e^{Ajδ}(M_δ·input_box)` where
/// `M_δ = ∫₀^δ e^{Aσ}dσ·B` is the exact constant-input response. Replacing a
/// measurable input on one interval by its mean moves the endpoint by at most
/// `r = 2·((e^{δ‖A‖}−1−δ‖A‖)/‖A‖)·max_w ‖B(w−w_c)‖`, which is propagated as a box.
pub fn input_reach(a: &Matrix, binp: &Matrix, input_box: &BoxRegion, tau: f64, steps: usize) -> Result<ReachResult> {
    input_reach_capped(a, binp, input_box, tau, steps, None)
}

pub fn input_reach_capped(
    a: &Matrix,
    binp: &Matrix,
    input_box: &BoxRegion,
    tau: f64,
    steps: usize,
    cap: Option<f64>,
) -> Result<ReachResult> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if binp.rows() != a.rows() || binp.cols() != input_box.dim() {
        return Err(Error::DimensionMismatch("input matrix vs state or input box".into()));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("reach steps must be at least 1".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let n = a.rows();
    let delta = tau / steps as f64;
    let phi = mat_exp(a, delta)?;
    let m_delta = exp_integral(a, delta)?.matmul(binp);
    let uc = input_box.center();
    let ur = input_box.radius();

    // max_w ‖B(w − w_c)‖∞ over the box = max_i Σ_j |B_ij| r_j.
    let spread = (0..n)
        .map(|i| (0..binp.cols()).map(|j| binp[(i, j)].abs() * ur[j]).sum::<f64>())
        .fold(0.0, f64::max);
    let an = a.inf_norm();
    let remainder = if an * delta < 1e-3 {
        // Series of (e^{x}−1−x)/a with x = aδ.
        let x = an * delta;
        delta * x * (0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0)
    } else {
        ((an * delta).exp() - 1.0 - an * delta) / an
    };
    let r = 2.0 * remainder * spread;

    let step_center = m_delta.mul_vec(&uc);
    let step_gens: Vec<Vec<f64>> = (0..ur.len())
        .filter(|&j| ur[j] > 0.0)
        .map(|j| m_delta.col(j).iter().map(|v| v * ur[j]).collect())
        .collect();

    let mut center = vec![0.0; n];
    let mut generators: Vec<Vec<f64>> = Vec::with_capacity(steps * step_gens.len());
    let mut rho = vec![0.0; n];
    let mut error_bound = 0.0;
    let mut power = Matrix::identity(n);
    for _ in 0..steps {
        center.iter_mut().zip(power.mul_vec(&step_center)).for_each(|(c, d)| *c += d);
        for g in &step_gens {
            generators.push(power.mul_vec(g));
        }
        for (i, rho_i) in rho.iter_mut().enumerate() {
            *rho_i += r * power.row(i).iter().map(|v| v.abs()).sum::<f64>();
        }
        error_bound += r * power.inf_norm();
        power = power.matmul(&phi);
    }
    let inner = Zonotope::new(center.clone(), generators.clone())?;
    for (i, rho_i) in rho.iter().enumerate() {
        if *rho_i > 0.0 {
            let mut g = vec![0.0; n];
            g[i] = *rho_i;
            generators.push(g);
        }
    }
    let set = Zonotope::new(center, generators)?;
    Ok(ReachResult {
        set,
        inner,
        error_bound,
        steps,
        tau,
        exceeds_cap: cap.is_some_and(|c| error_bound > c),
    })
}

/// Control reach set `R_{A_τ}` of a linear system.
pub fn control_reach(sys: &LinearSystem, tau: f64, steps: usize) -> Result<ReachResult> {
    input_reach(&sys.a, &sys.b, &sys.u_box, tau, steps)
}

/// Disturbance reach set `R_{B_τ}` of a linear system.
pub fn disturbance_reach(sys: &LinearSystem, tau: f64, steps: usize) -> Result<ReachResult> {
    input_reach(&sys.a, &sys.g, &sys.v_box, tau, steps)
}

/// Upper bound on the number of points `surface_sample` will produce.
pub const SAMPLE_CAP: usize = 2_000_000;

/// Deterministic sampling of a zonotope whose every point lies within
/// `density` (infinity norm) of some sample.
pub fn surface_sample(z: &Zonotope, density: f64) -> Result<PointSet> {
    if !(density > 0.0) {
        return Err(Error::InvalidParameter(format!("sampling density must be positive, got {density}")));
    }
    let gens = z.reduced_generators();
    if gens.is_empty() {
        return PointSet::new(vec![z.center.clone()]);
    }
    let pts = match z.dim() {
        1 => {
            let r: f64 = gens.iter().map(|g| g[0].abs()).sum();
            segment_points(&[z.center[0] - r], &[z.center[0] + r], density)
        }
        2 => sample_polygon(&polygon_vertices(&z.center, &gens), density),
        _ => sample_coefficients(z, &gens, density)?,
    };
    PointSet::dedup(pts.into_iter().map(|p| p.into_iter().map(canonical_sample).collect()).collect())
}

// Collapse -0.0 only; sampling keeps full precision otherwise.
fn canonical_sample(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn segment_points(a: &[f64], b: &[f64], spacing: f64) -> Vec<Vec<f64>> {
    let len = vec_inf_dist(a, b);
    let k = (len / spacing).ceil().max(1.0) as usize;
    (0..=k)
        .map(|j| {
            let t = j as f64 / k as f64;
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        })
        .collect()
}

/// Boundary at spacing `d/2` plus interior grid at spacing `d/2`: a point of
/// the polygon is within `d/2` of a grid point inside it, or within `d/2` of
/// the boundary and so within `3d/4` of a boundary sample.
fn sample_polygon(verts: &[Vec<f64>], density: f64) -> Vec<Vec<f64>> {
    let h = density / 2.0;
    let mut out = Vec::new();
    let k = verts.len();
    for i in 0..k {
        let (a, b) = (&verts[i], &verts[(i + 1) % k]);
        out.extend(segment_points(a, b, h));
    }
    if k >= 3 {
        let poly = Polytope {
            vertices: verts.to_vec(),
        };
        let bounds = poly.bounds();
        let lo = bounds.lower();
        let hi = bounds.upper();
        let nx = ((hi[0] - lo[0]) / h).floor() as usize;
        let ny = ((hi[1] - lo[1]) / h).floor() as usize;
        for ix in 0..=nx {
            for iy in 0..=ny {
                let p = vec![lo[0] + ix as f64 * h, lo[1] + iy as f64 * h];
                if convex_polygon_contains(verts, &p, 0.0) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Coefficient grid: snapping each `ξ_i` to a grid of step `s` moves the
/// point by at most `(s/2)·Σ‖g_i‖∞`.
fn sample_coefficients(z: &Zonotope, gens: &[Vec<f64>], density: f64) -> Result<Vec<Vec<f64>>> {
    let total: f64 = gens.iter().map(|g| vec_inf_norm(g)).sum();
    let per_axis = ((total / density).ceil() as usize + 1).max(2);
    let count = (per_axis as f64).powi(gens.len() as i32);
    if count > SAMPLE_CAP as f64 {
        return Err(Error::Unsupported(format!(
            "sampling would need {count:.3e} points; reduce generators or coarsen the density"
        )));
    }
    let coeffs: Vec<f64> = (0..per_axis).map(|j| -1.0 + 2.0 * j as f64 / (per_axis - 1) as f64).collect();
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; gens.len()];
    loop {
        let mut p = z.center.clone();
        for (g, &j) in gens.iter().zip(&idx) {
            p.iter_mut().zip(g).for_each(|(a, b)| *a += coeffs[j] * b);
        }
        out.push(p);
        let mut axis = gens.len();
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Point-in-convex-polygon for counter-clockwise vertices.
fn convex_polygon_contains(verts: &[Vec<f64>], p: &[f64], tol: f64) -> bool {
    let k = verts.len();
    (0..k).all(|i| {
        let (a, b) = (&verts[i], &verts[(i + 1) % k]);
        let cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        cr >= -tol * vec_inf_dist(a, b).max(1e-300)
    })
}

/// Infinity-norm distance from `p` to the segment `[a, b]`.
fn point_segment_dist(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let w = [p[0] - a[0], p[1] - a[1]];
    let f = |t: f64| (w[0] - t * d[0]).abs().max((w[1] - t * d[1]).abs());
    // f is convex piecewise linear; its minimum sits at a breakpoint.
    let mut cands = vec![0.0, 1.0];
    for i in 0..2 {
        if d[i] != 0.0 {
            cands.push(w[i] / d[i]);
        }
    }
    for s in [1.0, -1.0] {
        let den = d[0] - s * d[1];
        if den != 0.0 {
            cands.push((w[0] - s * w[1]) / den);
        }
    }
    cands
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .map(f)
        .fold(f64::INFINITY, f64::min)
}

/// Infinity-norm distance from `p` to a convex polygon (CCW vertices).
pub fn point_polygon_dist(p: &[f64], poly: &Polytope) -> f64 {
    let v = &poly.vertices;
    match v.len() {
        1 => vec_inf_dist(p, &v[0]),
        2 => point_segment_dist(p, &v[0], &v[1]),
        k => {
            if convex_polygon_contains(v, p, 0.0) {
                return 0.0;
            }
            (0..k)
                .map(|i| point_segment_dist(p, &v[i], &v[(i + 1) % k]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Exact infinity-norm Hausdorff distance between two convex polygons given
/// in hull form. The directed distance of a convex set is attained at a vertex.
pub fn polygon_hausdorff(p: &Polytope, q: &Polytope) -> Result<f64> {
    if p.dim() != 2 || q.dim() != 2 {
        return Err(Error::DimensionMismatch("polygon_hausdorff needs planar polytopes".into()));
    }
    let p = Polytope::hull_2d(&p.vertices)?;
    let q = Polytope::hull_2d(&q.vertices)?;
    let d1 = p.vertices.iter().map(|v| point_polygon_dist(v, &q)).fold(0.0, f64::max);
    let d2 = q.vertices.iter().map(|v| point_polygon_dist(v, &p)).fold(0.0, f64::max);
    Ok(d1.max(d2))
}

/// Layer of an SVG plot: a filled polygon or a set of dots.
pub enum SvgLayer<'a> {
    Polygon { poly: &'a Polytope, fill: &'a str },
    Points { points: &'a [Vec<f64>], color: &'a str },
}

/// Static SVG of 2-D hulls with overlaid points, each panel framed separately.
pub fn render_svg(panels: &[(&str, Vec<SvgLayer<'_>>)]) -> Result<String> {
    const W: f64 = 320.0;
    const PAD: f64 = 30.0;
    let mut out = String::new();
    let total_w = W * panels.len() as f64;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{}" font-family="sans-serif" font-size="11">"#,
        W + 20.0
    );
    for (k, (title, layers)) in panels.iter().enumerate() {
        let pts: Vec<&Vec<f64>> = layers
            .iter()
            .flat_map(|l| match l {
                SvgLayer::Polygon { poly, .. } => poly.vertices.iter().collect::<Vec<_>>(),
                SvgLayer::Points { points, .. } => points.iter().collect(),
            })
            .collect();
        if pts.iter().any(|p| p.len() != 2) {
            return Err(Error::DimensionMismatch("SVG plots are 2-D only".into()));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pts {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let span = (0..2).map(|i| hi[i] - lo[i]).fold(1e-9, f64::max);
        let x0 = k as f64 * W;
        let map = |p: &[f64]| {
            let sx = x0 + PAD + (p[0] - lo[0]) / span * (W - 2.0 * PAD);
            let sy = W - PAD - (p[1] - lo[1]) / span * (W - 2.0 * PAD);
            (sx, sy)
        };
        let _ = writeln!(out, r#"<text x="{}" y="16">{title}</text>"#, x0 + PAD);
        for layer in layers {
            match layer {
                SvgLayer::Polygon { poly, fill } => {
                    let coords: Vec<String> = poly
                        .vertices
                        .iter()
                        .map(|v| {
                            let (x, y) = map(v);
                            format!("{x:.2},{y:.2}")
                        })
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polygon points="{}" fill="{fill}" fill-opacity="0.5" stroke="black" stroke-width="1"/>"#,
                        coords.join(" ")
                    );
                }
                SvgLayer::Points { points, color } => {
                    for p in points.iter() {
                        let (x, y) = map(p);
                        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                    }
                }
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Exports a polytope's vertices with `%.12g` formatting after rounding.
pub fn polytope_csv(p: &Polytope) -> String {
    let rounded = Polytope {
        vertices: p.vertices.iter().map(|v| v.iter().map(|x| canonical(*x)).collect()).collect(),
    };
    rounded.to_csv()
}
