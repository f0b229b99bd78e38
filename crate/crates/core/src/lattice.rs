//! Lattice quantization `[R^n]_η`, enumeration over boxes, Hausdorff
//! distances between finite point sets, and lattice coverings.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::vec_inf_dist;
use crate::sysmodel::BoxRegion;

/// Slack used when comparing distances against a radius.
pub const DIST_TOL: f64 = 1e-12;

/// Rounds to 12 significant digits so `3 * 0.2` and `0.6` coincide.
pub fn canonical(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// `%.12g` formatting used by every file writer.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').unwrap();
        let e: i32 = e.parse().unwrap();
        format!("{}e{}{:02}", trim_zeros(mant), if e < 0 { '-' } else { '+' }, e.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `[R^n]_η`, optionally clipped to a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub spacing: f64,
    pub dim: usize,
    pub clip: Option<BoxRegion>,
}

impl Lattice {
    pub fn new(spacing: f64, dim: usize) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("lattice spacing must be positive, got {spacing}")));
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch("lattice of dimension 0".into()));
        }
        Ok(Lattice { spacing, dim, clip: None })
    }

    pub fn with_clip(mut self, clip: BoxRegion) -> Result<Self> {
        if clip.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "clip region has dimension {} for a lattice of dimension {}",
                clip.dim(),
                self.dim
            )));
        }
        if self.index_range(&clip).iter().any(|(lo, hi)| lo > hi) {
            return Err(Error::Empty("clip region contains no lattice point".into()));
        }
        self.clip = Some(clip);
        Ok(self)
    }

    /// Integer index range per axis of lattice points inside `b`.
    pub fn index_range(&self, b: &BoxRegion) -> Vec<(i64, i64)> {
        b.lower()
            .iter()
            .zip(b.upper())
            .map(|(l, u)| {
                let lo = (l / self.spacing - 1e-9).ceil() as i64;
                let hi = (u / self.spacing + 1e-9).floor() as i64;
                (lo, hi)
            })
            .collect()
    }

    pub fn point_of(&self, k: &[i64]) -> Vec<f64> {
        k.iter().map(|k| canonical(*k as f64 * self.spacing)).collect()
    }

    /// Integer coordinates of the nearest lattice point (ties toward +∞),
    /// clamped into the clip region when one is set.
    pub fn quantize_index(&self, x: &[f64]) -> Result<Vec<i64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} for a lattice of dimension {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point to quantize".into()));
        }
        // Decimal halfway points are not exact in binary, so distances within
        // 1e-9·η count as ties, which go to the larger index.
        let mut k: Vec<i64> = x
            .iter()
            .map(|v| {
                let k0 = (v / self.spacing + 0.5).floor() as i64;
                let dist = |k: i64| (canonical(k as f64 * self.spacing) - v).abs();
                [k0 + 1, k0, k0 - 1]
                    .into_iter()
                    .fold((k0 + 1, dist(k0 + 1)), |best, k| {
                        let d = dist(k);
                        if d < best.1 - 1e-9 * self.spacing {
                            (k, d)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect();
        if let Some(clip) = &self.clip {
            for (ki, (lo, hi)) in k.iter_mut().zip(self.index_range(clip)) {
                *ki = (*ki).clamp(lo, hi);
            }
        }
        Ok(k)
    }

    pub fn quantize(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.point_of(&self.quantize_index(x)?))
    }

    /// All lattice points inside `b`, first coordinate varying slowest.
    pub fn enumerate(&self, b: &BoxRegion) -> Result<PointSet> {
        if b.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "box of dimension {} for a lattice of dimension {}",
                b.dim(),
                self.dim
            )));
        }
        let ranges = self.index_range(b);
        let mut points = Vec::new();
        if ranges.iter().all(|(lo, hi)| lo <= hi) {
            let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            loop {
                points.push(self.point_of(&k));
                let mut axis = self.dim;
                loop {
                    if axis == 0 {
                        return PointSet::new(points);
                    }
                    axis -= 1;
                    if k[axis] < ranges[axis].1 {
                        k[axis] += 1;
                        break;
                    }
                    k[axis] = ranges[axis].0;
                }
            }
        }
        PointSet::new(points)
    }
}

/// Finite set of same-dimension points, no duplicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ids: Option<Vec<String>>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let n = first.len();
            if points.iter().any(|p| p.len() != n) {
                return Err(Error::DimensionMismatch("points of different dimensions".into()));
            }
            if points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("point set".into()));
            }
            let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter("duplicate point in point set".into()));
            }
        }
        Ok(PointSet { points, ids: None })
    }

    /// Drops exact duplicates, keeping first occurrences.
    pub fn dedup(points: Vec<Vec<f64>>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let kept: Vec<Vec<f64>> = points
            .into_iter()
            .filter(|p| seen.insert(p.iter().map(|v| v.to_bits()).collect::<Vec<_>>()))
            .collect();
        PointSet::new(kept)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.points.len() {
            return Err(Error::DimensionMismatch("one identifier per point required".into()));
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.len())
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.points.iter().enumerate() {
            let mut cells: Vec<String> = Vec::new();
            if let Some(ids) = &self.ids {
                cells.push(ids[i].clone());
            }
            cells.extend(p.iter().map(|v| fmt_g12(*v)));
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Reads one point per row. A non-numeric first column is taken as the id.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut ids = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let (id, nums) = match cells[0].parse::<f64>() {
                Ok(_) => (None, &cells[..]),
                Err(_) => (Some(cells[0].to_string()), &cells[1..]),
            };
            let p = nums
                .iter()
                .map(|c| c.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {c}: {e}", lineno + 1))))
                .collect::<Result<Vec<f64>>>()?;
            points.push(p);
            if let Some(id) = id {
                ids.push(id);
            }
        }
        let set = PointSet::new(points)?;
        if ids.is_empty() {
            Ok(set)
        } else {
            set.with_ids(ids)
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn check_pair(x1: &[Vec<f64>], x2: &[Vec<f64>]) -> Result<()> {
    if x1.is_empty() || x2.is_empty() {
        return Err(Error::Empty("Hausdorff distance of an empty set".into()));
    }
    if x1[0].len() != x2[0].len() {
        return Err(Error::DimensionMismatch("point sets of different dimensions".into()));
    }
    Ok(())
}

/// `sup_{x1} inf_{x2} ‖x1 − x2‖∞`.
pub fn directed_hausdorff_points(x1: &[Vec<f64>], x2: &[Vec<f64>]) -> Result<f64> {
    check_pair(x1, x2)?;
    let nearest = |p: &Vec<f64>| x2.iter().map(|q| vec_inf_dist(p, q)).fold(f64::INFINITY, f64::min);
    let work = x1.len().saturating_mul(x2.len());
    Ok(if work > 1 << 16 {
        x1.par_iter().map(nearest).reduce(|| 0.0, f64::max)
    } else {
        x1.iter().map(nearest).fold(0.0, f64::max)
    })
}

pub fn directed_hausdorff(x1: &PointSet, x2: &PointSet) -> Result<f64> {
    directed_hausdorff_points(&x1.points, &x2.points)
}

pub fn hausdorff(x1: &PointSet, x2: &PointSet) -> Result<f64> {
    Ok(directed_hausdorff(x1, x2)?.max(directed_hausdorff(x2, x1)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub radius: f64,
    /// `d⃗_h(result, target)`.
    pub result_to_target: f64,
    /// `d⃗_h(target, result)`.
    pub target_to_result: f64,
    pub pass: bool,
}

impl CoverCertificate {
    /// Recomputes both directed distances from scratch.
    pub fn check(result: &[Vec<f64>], target: &[Vec<f64>], radius: f64) -> Result<Self> {
        let fwd = directed_hausdorff_points(result, target)?;
        let bwd = directed_hausdorff_points(target, result)?;
        let slack = DIST_TOL * radius.max(1.0);
        Ok(CoverCertificate {
            radius,
            result_to_target: fwd,
            target_to_result: bwd,
            pass: fwd <= radius + slack && bwd <= radius + slack,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cover {
    pub points: PointSet,
    pub certificate: CoverCertificate,
}

/// Lattice points within `radius` of the target, greedily pruned (farthest
/// first) while every target point stays covered.
pub fn lattice_cover(target: &PointSet, spacing: f64, radius: f64) -> Result<Cover> {
    if target.is_empty() {
        return Err(Error::Empty("covering target".into()));
    }
    if !(radius >= spacing / 2.0) {
        return Err(Error::CoveringImpossible { radius, spacing });
    }
    let n = target.dim().unwrap_or(0);
    let lat = Lattice::new(spacing, n)?;
    let pts = target.points();
    let lower: Vec<f64> = (0..n).map(|i| pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min) - radius).collect();
    let upper: Vec<f64> = (0..n)
        .map(|i| pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max) + radius)
        .collect();
    let bbox = BoxRegion::new(lower, upper)?;
    let slack = DIST_TOL * radius.max(1.0);

    // covers[c] = indices of target points within radius of candidate c.
    let (candidates, covers): (Vec<Vec<f64>>, Vec<Vec<usize>>) = lat
        .enumerate(&bbox)?
        .into_points()
        .into_par_iter()
        .filter_map(|c| {
            let hit: Vec<usize> = pts
                .iter()
                .enumerate()
                .filter(|(_, p)| vec_inf_dist(&c, p) <= radius + slack)
                .map(|(i, _)| i)
                .collect();
            (!hit.is_empty()).then_some((c, hit))
        })
        .unzip();

    let mut count = vec![0usize; pts.len()];
    for hit in &covers {
        for &i in hit {
            count[i] += 1;
        }
    }
    // Candidates farthest from the target go first; ties in lexicographic order.
    let gap: Vec<f64> = candidates
        .iter()
        .map(|c| pts.iter().map(|p| vec_inf_dist(c, p)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&x, &y| gap[y].total_cmp(&gap[x]).then(x.cmp(&y)));
    let mut keep = vec![true; candidates.len()];
    for c in order {
        let hit = &covers[c];
        if hit.iter().all(|&i| count[i] >= 2) {
            keep[c] = false;
            for &i in hit {
                count[i] -= 1;
            }
        }
    }
    let result: Vec<Vec<f64>> = candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect();
    let certificate = CoverCertificate::check(&result, pts, radius)?;
    Ok(Cover {
        points: PointSet::new(result)?,
        certificate,
    })
}
