//! Growth analysis of transformed maps: slice area-power integrals, the
//! box-subdivision pipeline with per-box comparison ratios and both bound
//! chains, volume-versus-increment comparison, quasisymmetry diagnostics,
//! slice-size (rectifiability) proxies, and asymptotic representatives.

use crate::geometry::{
    generalized_cross, lp_power_bound, quotient_distance, subdivide_slice, BeamPoint, BoxP,
};
use crate::mapzoo::QCMap;
use crate::radius::{mean_radius, CurvePoint, MeanRadiusCurve};
use crate::rng::{derive_seed, substream};
use crate::transform::TransformedMap;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Central-difference step used when no explicit step is supplied.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

const QS_BINS: usize = 10;

/// Shared closure type for maps of the unit sphere.
pub type BoundaryFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Rough magnitude bound for slice tangents, used as the branch-jump
/// threshold scale in finite differences.
fn partials_hint(tm: &TransformedMap) -> f64 {
    4.0 * tm.plane_map().dilatation_hint.unwrap_or(1.0).clamp(1.0, 16.0)
}

fn require_below_cap(map: &QCMap, t: f64, what: &str) -> Result<()> {
    if let Some(m) = map.height_cap {
        if !(t < m) {
            return Err(Error::domain(format!(
                "{what} = {t} must stay below the height cap {m} of {}",
                map.label
            )));
        }
    }
    Ok(())
}

/// Base cell of the quotient at fixed height: an (n-1)-box of volume 2.
fn base_ranges(n: usize) -> Vec<(f64, f64)> {
    match n {
        2 => vec![(0.0, 2.0)],
        _ => vec![(0.0, 1.0), (0.0, 2.0)],
    }
}

fn det_abs(cols: &[Vec<f64>]) -> f64 {
    match cols.len() {
        1 => cols[0][0].abs(),
        2 => (cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0]).abs(),
        _ => {
            let m = cols;
            (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[1][0] * (m[0][1] * m[2][2] - m[0][2] * m[2][1])
                + m[2][0] * (m[0][1] * m[1][2] - m[0][2] * m[1][1]))
                .abs()
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

// ---------------------------------------------------------------------------
// Slice area-power integrals ("bounded integral parameterization" check).
// ---------------------------------------------------------------------------

/// One slice integral `∫_Q ||Pi(d gamma_t)||^{n/(n-1)} dV` by the midpoint rule.
#[derive(Debug, Clone, Serialize)]
pub struct BipIntegral {
    /// Height of the slice.
    pub t: f64,
    /// Integral at the doubled grid (the reported value).
    pub value: f64,
    /// |fine - coarse| between the base grid and its doubling.
    pub refinement_delta: f64,
    /// Cells dropped because the tangent estimate found a branch jump.
    pub excluded_cells: usize,
    /// Base per-axis resolution.
    pub grid: usize,
}

/// Per-slice area-power integrals with a supremum estimate and a trend verdict.
#[derive(Debug, Clone, Serialize)]
pub struct BipReport {
    pub t_samples: Vec<f64>,
    pub integrals: Vec<f64>,
    pub sup_estimate: f64,
    pub verdict: Verdict,
    pub excluded_cells: usize,
    pub max_refinement_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Growing,
    Inconclusive,
}

fn bip_grid_pass(
    tm: &TransformedMap,
    t: f64,
    counts: &[usize],
    fd_step: f64,
) -> Result<(f64, usize)> {
    let n = tm.dim();
    let ranges = base_ranges(n);
    let hint = partials_hint(tm);
    let exponent = n as f64 / (n as f64 - 1.0);
    let cell_vol: f64 = ranges
        .iter()
        .zip(counts)
        .map(|((lo, hi), &c)| (hi - lo) / c as f64)
        .product();
    // Odometer over midpoint nodes of the base grid.
    let total: usize = counts.iter().product();
    let node = |flat: usize| -> BeamPoint {
        let mut rem = flat;
        let mut base = Vec::with_capacity(n - 1);
        for (axis, (lo, hi)) in ranges.iter().enumerate() {
            let c = counts[axis];
            let i = rem % c;
            rem /= c;
            base.push(lo + (hi - lo) * (i as f64 + 0.5) / c as f64);
        }
        BeamPoint { base, height: t }
    };
    let cells: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let p = node(flat);
            match tm.slice_partials(&p, fd_step, hint) {
                Ok(parts) => match generalized_cross(&parts) {
                    Ok(pi) if pi.norm().is_finite() => (pi.norm().powf(exponent), 0),
                    _ => (0.0, 1),
                },
                Err(_) => (0.0, 1),
            }
        })
        .collect();
    let mut sum = 0.0;
    let mut excluded = 0;
    for (v, e) in cells {
        sum += v;
        excluded += e;
    }
    Ok((sum * cell_vol, excluded))
}

/// Midpoint-rule integral of the slice area-power integrand over the base
/// cell, reported at the doubled grid together with the refinement delta.
pub fn bip_integral(
    tm: &TransformedMap,
    t: f64,
    quad_grid: usize,
    fd_step: f64,
) -> Result<BipIntegral> {
    if quad_grid < 8 {
        return Err(Error::invalid("quadrature grid must be at least 8 per axis"));
    }
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::invalid("difference step must be positive"));
    }
    require_below_cap(tm.plane_map(), t, "slice height")?;
    let n = tm.dim();
    // Square-ish cells: the long base axis gets twice the count.
    let counts = |g: usize| -> Vec<usize> {
        if n == 2 {
            vec![g]
        } else {
            vec![g, 2 * g]
        }
    };
    let (coarse, _) = bip_grid_pass(tm, t, &counts(quad_grid), fd_step)?;
    let (fine, excluded) = bip_grid_pass(tm, t, &counts(2 * quad_grid), fd_step)?;
    Ok(BipIntegral {
        t,
        value: fine,
        refinement_delta: (fine - coarse).abs(),
        excluded_cells: excluded,
        grid: quad_grid,
    })
}

/// Theil-Sen slope of (t, value) pairs: median of all pairwise slopes.
fn theil_sen_slope(ts: &[f64], values: &[f64]) -> f64 {
    let mut slopes = Vec::new();
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            if (ts[j] - ts[i]).abs() > 1e-12 {
                slopes.push((values[j] - values[i]) / (ts[j] - ts[i]));
            }
        }
    }
    if slopes.is_empty() {
        0.0
    } else {
        median(&mut slopes)
    }
}

/// Slice integrals over a height sample, with `sup_estimate` their maximum.
/// Verdict: `bounded` when the spread is under 10% of the median, `growing`
/// when a robust trend (Theil-Sen slope over twice the median absolute
/// deviation across the height span) fires, `inconclusive` otherwise.
pub fn bip_sup(tm: &TransformedMap, t_samples: &[f64], quad_grid: usize) -> Result<BipReport> {
    if t_samples.is_empty() {
        return Err(Error::invalid("need at least one slice height"));
    }
    let mut integrals = Vec::with_capacity(t_samples.len());
    let mut excluded = 0;
    let mut max_delta: f64 = 0.0;
    for &t in t_samples {
        let one = bip_integral(tm, t, quad_grid, DEFAULT_FD_STEP)?;
        integrals.push(one.value);
        excluded += one.excluded_cells;
        max_delta = max_delta.max(one.refinement_delta);
    }
    let sup_estimate = integrals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lo = integrals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let med = median(&mut integrals.clone());
    let verdict = if sup_estimate - lo < 0.1 * med {
        Verdict::Bounded
    } else {
        let slope = theil_sen_slope(t_samples, &integrals);
        let span = t_samples.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - t_samples.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let mut residuals: Vec<f64> = integrals.iter().map(|v| (v - med).abs()).collect();
        let mad = median(&mut residuals).max(1e-12);
        if slope.abs() * span > 2.0 * mad {
            Verdict::Growing
        } else {
            Verdict::Inconclusive
        }
    };
    Ok(BipReport {
        t_samples: t_samples.to_vec(),
        integrals,
        sup_estimate,
        verdict,
        excluded_cells: excluded,
        max_refinement_delta: max_delta,
    })
}

// ---------------------------------------------------------------------------
// Box subdivision pipeline.
// ---------------------------------------------------------------------------

/// Sampling budgets for the subdivision pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct SubdivisionSampling {
    /// Points per axis on each box face (faces get `face_grid^{n-1}` points).
    pub face_grid: usize,
    /// Rejection samples per box for the image volume.
    pub volume_samples: u64,
    /// Midpoint nodes per axis for the base-surface integral.
    pub base_quad: usize,
    /// Central-difference step for slice tangents.
    pub fd_step: f64,
    /// Samples for the independent slab-volume integral.
    pub slab_budget: u64,
}

impl Default for SubdivisionSampling {
    fn default() -> Self {
        SubdivisionSampling {
            face_grid: 16,
            volume_samples: 4096,
            base_quad: 8,
            fd_step: DEFAULT_FD_STEP,
            slab_budget: 1 << 14,
        }
    }
}

/// Per-box image statistics.
#[derive(Debug, Clone, Serialize)]
pub struct BoxStats {
    pub index: usize,
    /// Max pairwise distance over sampled boundary images.
    pub diam: f64,
    /// Min distance between sampled images of opposite face pairs.
    pub nu: f64,
    /// Image volume by rejection sampling in the covering box.
    pub vol: f64,
    pub vol_err: f64,
    /// (n-1)-volume of the image of the box base, by the area integral.
    pub base_vol: f64,
    /// Exact (n-1)-volume of the base itself.
    pub base_exact: f64,
    /// (n-1)-volume of the orthogonal projection of the image onto the base.
    pub proj_vol: f64,
    /// Largest tangent cross-product norm seen over the base nodes.
    pub pi_norm: f64,
    /// Set when a sample could not be branch-resolved.
    pub flagged: bool,
}

/// Subdivision of one slab `Q x [t0, t0 + t]` with per-box image statistics
/// and the aggregated comparison-ratio ranges.
#[derive(Debug, Clone, Serialize)]
pub struct SubdivisionReport {
    pub dim: usize,
    pub t0: f64,
    pub t: f64,
    /// Box count N (equals `2 floor(1/t)^{n-1}`).
    pub n_boxes: usize,
    pub per_box: Vec<BoxStats>,
    /// Slab image volume, estimated independently of the per-box sums.
    pub vt: f64,
    pub vt_err: f64,
    pub sum_box_vol: f64,
    pub sum_box_vol_err: f64,
    /// Range of vol / diam^n per box.
    pub ratio_c1: (f64, f64),
    /// Range of diam / nu per box.
    pub ratio_c2: (f64, f64),
    /// Range of nu^{n-1} / base image volume per box.
    pub ratio_c3: (f64, f64),
    /// Sum of projected base volumes (covers the base cell, so >= 2).
    pub projection_sum: f64,
    pub flagged_boxes: usize,
    /// Face sample count actually used per face.
    pub face_points: usize,
}

/// Uniform face grid of a box: `grid` points per axis, endpoints included,
/// on the two faces orthogonal to `axis` (axis `n-1` is the height).
fn face_points(bx: &BoxP, axis: usize, grid: usize) -> (Vec<BeamPoint>, Vec<BeamPoint>) {
    let n = bx.corner.len() + 1;
    let mut lo_face = Vec::new();
    let mut hi_face = Vec::new();
    let free: Vec<usize> = (0..n).filter(|a| *a != axis).collect();
    let total = grid.pow(free.len() as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut coords = vec![0.0; n];
        for &a in &free {
            let i = rem % grid;
            rem /= grid;
            let s = i as f64 / (grid - 1) as f64;
            coords[a] = if a < n - 1 {
                bx.corner[a] + s * bx.side
            } else {
                bx.t0 + s * bx.t
            };
        }
        let (lo, ext) = if axis < n - 1 {
            (bx.corner[axis], bx.side)
        } else {
            (bx.t0, bx.t)
        };
        coords[axis] = lo;
        lo_face.push(BeamPoint {
            base: coords[..n - 1].to_vec(),
            height: coords[n - 1],
        });
        coords[axis] = lo + ext;
        hi_face.push(BeamPoint {
            base: coords[..n - 1].to_vec(),
            height: coords[n - 1],
        });
    }
    (lo_face, hi_face)
}

fn point_coords(p: &BeamPoint) -> Vec<f64> {
    let mut v = p.base.clone();
    v.push(p.height);
    v
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Projection (n-1)-volume from projected boundary samples: exact interval
/// spread in one base dimension, hit-cell counting over the sample bounding
/// box in two. Coordinates are unwrapped when the spread exceeds half a cell.
fn projection_volume(bases: &[Vec<f64>], grid: usize) -> f64 {
    if bases.is_empty() {
        return 0.0;
    }
    let dims = bases[0].len();
    let unwrap_axis = |vals: Vec<f64>| -> Vec<f64> {
        let lo = vals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if hi - lo <= 1.0 {
            return vals;
        }
        // Spread beyond half the period: shift the low representatives up.
        vals.into_iter()
            .map(|v| if v < lo + 1.0 { v + 2.0 } else { v })
            .collect()
    };
    let cols: Vec<Vec<f64>> = (0..dims)
        .map(|a| unwrap_axis(bases.iter().map(|b| b[a]).collect()))
        .collect();
    if dims == 1 {
        let lo = cols[0].iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = cols[0].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        return hi - lo;
    }
    let lo: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().fold(f64::INFINITY, |a, &b| a.min(b)))
        .collect();
    let hi: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)))
        .collect();
    let mut hit = vec![false; grid * grid];
    for k in 0..bases.len() {
        let mut cell = 0;
        for a in 0..2 {
            let w = hi[a] - lo[a];
            if w <= 0.0 {
                return 0.0;
            }
            let i = (((cols[a][k] - lo[a]) / w * grid as f64) as usize).min(grid - 1);
            cell = cell * grid + i;
        }
        hit[cell] = true;
    }
    let cell_vol = (hi[0] - lo[0]) * (hi[1] - lo[1]) / (grid * grid) as f64;
    hit.iter().filter(|h| **h).count() as f64 * cell_vol
}

/// |Jacobian| of the transformed map at `p` by hinted central differences.
fn transformed_jacobian_fd(tm: &TransformedMap, p: &BeamPoint, step: f64) -> Result<f64> {
    let n = tm.dim();
    let center = tm.eval_hinted(p, None)?;
    let mut cols = Vec::with_capacity(n);
    for axis in 0..n {
        let shift = |s: f64| -> Result<Vec<f64>> {
            let mut q = p.clone();
            if axis < n - 1 {
                q.base[axis] += s;
            } else {
                q.height += s;
            }
            Ok(point_coords(&tm.eval_hinted(&q, Some(&center))?))
        };
        let fwd = shift(step)?;
        let bwd = shift(-step)?;
        cols.push(
            fwd.iter()
                .zip(&bwd)
                .map(|(f, b)| (f - b) / (2.0 * step))
                .collect(),
        );
    }
    Ok(det_abs(&cols))
}

/// |Jacobian| of the transformed map, exact in the plane-of-rotation case
/// (the conformal factors of the wrap cancel to `e^{2(h_in - h_out)}`).
fn transformed_jacobian(tm: &TransformedMap, p: &BeamPoint, step: f64) -> Result<f64> {
    if tm.dim() == 2 && tm.plane_map().has_jacobian() {
        let y = tm.zorich().apply(p)?;
        let jf = tm.plane_map().jacobian(&y).unwrap();
        let img = tm.eval_hinted(p, None)?;
        return Ok(jf.abs() * (2.0 * (p.height - img.height)).exp());
    }
    transformed_jacobian_fd(tm, p, step)
}

/// Image volume of the slab `Q x [t0, t0 + t]` as the integral of the
/// transformed Jacobian, by plain Monte Carlo over the slab.
pub fn slab_image_volume(
    tm: &TransformedMap,
    t0: f64,
    t: f64,
    budget: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if budget < 2 {
        return Err(Error::invalid("slab budget must be at least 2"));
    }
    let ranges = base_ranges(tm.dim());
    let mut rng = substream(seed, 0);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..budget {
        let base: Vec<f64> = ranges
            .iter()
            .map(|(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
            .collect();
        let p = BeamPoint {
            base,
            height: t0 + t * rng.gen::<f64>(),
        };
        let j = transformed_jacobian(tm, &p, DEFAULT_FD_STEP)?;
        sum += j;
        sumsq += j * j;
    }
    let m = budget as f64;
    let mean = sum / m;
    let var = (sumsq / m - mean * mean).max(0.0) / (m - 1.0).max(1.0);
    let slab_vol = 2.0 * t;
    Ok((slab_vol * mean, slab_vol * var.sqrt()))
}

fn compute_box(
    tm: &TransformedMap,
    bx: &BoxP,
    sampling: &SubdivisionSampling,
    seed: u64,
) -> Result<BoxStats> {
    let n = tm.dim();
    let map = tm.plane_map();
    let zorich = tm.zorich();
    let mut flagged = false;
    let center = bx.center();
    let center_img = tm.eval_hinted(&center, None)?;

    // Boundary images, grouped per face, all on the branch of the center.
    let mut faces: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = Vec::with_capacity(n);
    for axis in 0..n {
        let (lo_face, hi_face) = face_points(bx, axis, sampling.face_grid);
        let eval_face = |pts: &[BeamPoint], flagged: &mut bool| -> Vec<Vec<f64>> {
            pts.iter()
                .filter_map(|p| match tm.eval_hinted(p, Some(&center_img)) {
                    Ok(img) => Some(point_coords(&img)),
                    Err(_) => {
                        *flagged = true;
                        None
                    }
                })
                .collect()
        };
        let lo = eval_face(&lo_face, &mut flagged);
        let hi = eval_face(&hi_face, &mut flagged);
        faces.push((lo, hi));
    }
    let boundary: Vec<&Vec<f64>> = faces
        .iter()
        .flat_map(|(lo, hi)| lo.iter().chain(hi.iter()))
        .collect();
    if boundary.len() < 2 {
        return Err(Error::degenerate(format!(
            "box {} produced no resolvable boundary images",
            bx.index
        )));
    }

    let mut diam: f64 = 0.0;
    for i in 0..boundary.len() {
        for j in i + 1..boundary.len() {
            diam = diam.max(euclid(boundary[i], boundary[j]));
        }
    }
    let mut nu = f64::INFINITY;
    for (lo, hi) in &faces {
        for a in lo {
            for b in hi {
                let d = euclid(a, b);
                if d < nu {
                    nu = d;
                }
            }
        }
    }

    // Rejection sampling in the covering box of the image boundary.
    let pad = 1e-9 * (1.0 + diam);
    let mut lo_bb = vec![f64::INFINITY; n];
    let mut hi_bb = vec![f64::NEG_INFINITY; n];
    for p in &boundary {
        for a in 0..n {
            lo_bb[a] = lo_bb[a].min(p[a] - pad);
            hi_bb[a] = hi_bb[a].max(p[a] + pad);
        }
    }
    let bbox_vol: f64 = lo_bb.iter().zip(&hi_bb).map(|(l, h)| h - l).product();
    let mut rng = substream(seed, 0);
    let mut hits = 0u64;
    for _ in 0..sampling.volume_samples {
        let y: Vec<f64> = lo_bb
            .iter()
            .zip(&hi_bb)
            .map(|(l, h)| l + (h - l) * rng.gen::<f64>())
            .collect();
        let beam = BeamPoint {
            base: y[..n - 1].to_vec(),
            height: y[n - 1],
        };
        let plane = match zorich.apply(&beam) {
            Ok(v) => v,
            Err(_) => {
                flagged = true;
                continue;
            }
        };
        let pre_plane = match map.inverse(&plane) {
            Some(v) if v.iter().all(|c| c.is_finite()) => v,
            _ => {
                flagged = true;
                continue;
            }
        };
        match zorich.invert(&pre_plane, Some(&center)) {
            Ok(pre) => {
                if bx.contains(&pre) {
                    hits += 1;
                }
            }
            Err(_) => flagged = true,
        }
    }
    let m = sampling.volume_samples as f64;
    let p_hit = hits as f64 / m;
    let vol = bbox_vol * p_hit;
    let vol_err = bbox_vol * (p_hit * (1.0 - p_hit) / m).sqrt();

    // Base-surface (n-1)-volume by the midpoint area integral over the base,
    // tracking the largest node value as the sup estimate of ||Pi||.
    let hint = partials_hint(tm);
    let g = sampling.base_quad;
    let mut base_vol = 0.0;
    let mut pi_norm = f64::NEG_INFINITY;
    let base_cell = (bx.side / g as f64).powi(n as i32 - 1);
    for flat in 0..g.pow(n as u32 - 1) {
        let mut rem = flat;
        let mut base = Vec::with_capacity(n - 1);
        for a in 0..n - 1 {
            let i = rem % g;
            rem /= g;
            base.push(bx.corner[a] + bx.side * (i as f64 + 0.5) / g as f64);
        }
        let node = BeamPoint {
            base,
            height: bx.t0,
        };
        match tm
            .slice_partials(&node, sampling.fd_step, hint)
            .and_then(|parts| generalized_cross(&parts))
        {
            Ok(pi) => {
                base_vol += pi.norm() * base_cell;
                pi_norm = pi_norm.max(pi.norm());
            }
            Err(_) => flagged = true,
        }
    }
    match tm
        .slice_partials(&bx.base_center(), sampling.fd_step, hint)
        .and_then(|parts| generalized_cross(&parts))
    {
        Ok(pi) => pi_norm = pi_norm.max(pi.norm()),
        Err(_) => {
            flagged = true;
            if !pi_norm.is_finite() {
                pi_norm = f64::NAN;
            }
        }
    }

    // Projection of the image onto the base: boundary samples suffice since
    // every vertical line through the image exits through its boundary. Half
    // the face resolution keeps samples strictly inside the hit cells.
    let proj_bases: Vec<Vec<f64>> = boundary.iter().map(|p| p[..n - 1].to_vec()).collect();
    let proj_vol = projection_volume(&proj_bases, (sampling.face_grid / 2).max(4));

    Ok(BoxStats {
        index: bx.index,
        diam,
        nu,
        vol,
        vol_err,
        base_vol,
        base_exact: bx.side.powi(n as i32 - 1),
        proj_vol,
        pi_norm,
        flagged,
    })
}

/// Subdivide the slab `Q x [t0, t0 + t]` into N congruent boxes and measure
/// each image: diameter, opposite-face gap, volume, base-surface volume and
/// base projection, plus the aggregated comparison-ratio ranges.
pub fn subdivision_analysis(
    tm: &TransformedMap,
    t0: f64,
    t: f64,
    sampling: &SubdivisionSampling,
    seed: u64,
) -> Result<SubdivisionReport> {
    let n = tm.dim();
    if !(t > 0.0 && t < 0.5) {
        return Err(Error::invalid("slab thickness must lie in (0, 1/2)"));
    }
    if let Some(m) = tm.plane_map().height_cap {
        if !(t0 < m - 1.0) {
            return Err(Error::domain(format!(
                "slab base {t0} must stay below the height cap {m} minus one"
            )));
        }
    }
    if sampling.face_grid < 16 {
        return Err(Error::invalid("face sampling needs at least 16 points per axis"));
    }
    if !tm.plane_map().has_inverse() {
        return Err(Error::invalid(
            "subdivision volume sampling needs an invertible map",
        ));
    }
    let boxes = subdivide_slice(t0, t, n)?;
    let per_box: Vec<BoxStats> = boxes
        .par_iter()
        .map(|bx| compute_box(tm, bx, sampling, derive_seed(seed, bx.index as u64)))
        .collect::<Result<Vec<_>>>()?;

    let (vt, vt_err) = slab_image_volume(tm, t0, t, sampling.slab_budget, derive_seed(seed, 0xbeef))?;
    let mut sum_vol = 0.0;
    let mut sum_var = 0.0;
    let mut c1 = (f64::INFINITY, f64::NEG_INFINITY);
    let mut c2 = (f64::INFINITY, f64::NEG_INFINITY);
    let mut c3 = (f64::INFINITY, f64::NEG_INFINITY);
    let mut proj_sum = 0.0;
    let mut flagged_boxes = 0;
    for s in &per_box {
        sum_vol += s.vol;
        sum_var += s.vol_err * s.vol_err;
        proj_sum += s.proj_vol;
        if s.flagged {
            flagged_boxes += 1;
            continue;
        }
        let r1 = s.vol / s.diam.powi(n as i32);
        let r2 = s.diam / s.nu;
        let r3 = s.nu.powi(n as i32 - 1) / s.base_vol;
        c1 = (c1.0.min(r1), c1.1.max(r1));
        c2 = (c2.0.min(r2), c2.1.max(r2));
        c3 = (c3.0.min(r3), c3.1.max(r3));
    }
    Ok(SubdivisionReport {
        dim: n,
        t0,
        t,
        n_boxes: boxes.len(),
        per_box,
        vt,
        vt_err,
        sum_box_vol: sum_vol,
        sum_box_vol_err: sum_var.sqrt(),
        ratio_c1: c1,
        ratio_c2: c2,
        ratio_c3: c3,
        projection_sum: proj_sum,
        flagged_boxes,
        face_points: sampling.face_grid.pow(n as u32 - 1),
    })
}

/// Both inequality chains evaluated with the empirical per-box constants.
#[derive(Debug, Clone, Serialize)]
pub struct BoundChains {
    /// Lower chain: `vt >= (1/c1) N^{1/(1-n)} (sum diam^{n-1})^{n/(n-1)}`.
    pub lower_lhs: f64,
    pub lower_rhs: f64,
    /// Upper chain: `vt <= c1 c2^n c3^{n/(n-1)} sum base_vol^{n/(n-1)}`.
    pub upper_lhs: f64,
    pub upper_rhs: f64,
    /// Power-sum step on the diameter vector: `lp_lhs >= lp_rhs` exactly.
    pub lp_lhs: f64,
    pub lp_rhs: f64,
    /// Min over boxes of `2 ||Pi|| base_exact - base_vol` (>= 0 when the
    /// per-box tangent bound on the base-surface volume holds).
    pub pi_margin: f64,
    /// Empirical constants backing the chains.
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Interval overlap with a small relative slack, so point-like empirical
/// ranges are compared up to estimator noise.
pub fn ranges_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    let eps = 1e-4 * a.1.abs().max(b.1.abs()).max(1e-12);
    a.0 - eps <= b.1 && b.0 - eps <= a.1
}

/// Evaluate both bound chains of the volume comparison on a finished report.
pub fn bound_chains(report: &SubdivisionReport) -> Result<BoundChains> {
    let n = report.dim;
    let active: Vec<&BoxStats> = report.per_box.iter().filter(|s| !s.flagged).collect();
    if active.is_empty() {
        return Err(Error::degenerate("no resolvable boxes in the report"));
    }
    let c1 = report.ratio_c1.1.max(1.0 / report.ratio_c1.0);
    let c2 = report.ratio_c2.1;
    let c3 = report.ratio_c3.1;
    let diams: Vec<f64> = active.iter().map(|s| s.diam).collect();
    let (lp_lhs, lp_rhs) = lp_power_bound(&diams, n as u32)?;
    let q_exp = n as f64 / (n as f64 - 1.0);
    let sum_q: f64 = active.iter().map(|s| s.base_vol.powf(q_exp)).sum();
    let pi_margin = active
        .iter()
        .map(|s| 2.0 * s.pi_norm * s.base_exact - s.base_vol)
        .fold(f64::INFINITY, f64::min);
    Ok(BoundChains {
        lower_lhs: report.vt,
        lower_rhs: lp_rhs / c1,
        upper_lhs: report.vt,
        upper_rhs: c1 * c2.powi(n as i32) * c3.powf(q_exp) * sum_q,
        lp_lhs,
        lp_rhs,
        pi_margin,
        c1,
        c2,
        c3,
    })
}

// ---------------------------------------------------------------------------
// Volume comparison: curve increments against slab image volumes.
// ---------------------------------------------------------------------------

/// Logarithmic curve increment over `[t0, t0 + t]` against the slab image
/// volume, with their ratio (flat maps give exactly 1/2).
#[derive(Debug, Clone, Serialize)]
pub struct VolumeComparison {
    pub t0: f64,
    pub t: f64,
    pub dq_increment: f64,
    pub dq_err: f64,
    pub vt: f64,
    pub vt_err: f64,
    pub ratio: f64,
}

/// Compare the growth increment of the logarithmic mean-radius curve with
/// the image volume of the corresponding slab. Both radii share one sample
/// stream so scale-covariant maps cancel their noise exactly.
pub fn volume_comparison(
    map: &QCMap,
    t0: f64,
    t: f64,
    budget: u64,
    seed: u64,
) -> Result<VolumeComparison> {
    if !(t > 0.0 && t <= 0.25) {
        return Err(Error::invalid("increment length must lie in (0, 1/4]"));
    }
    require_below_cap(map, t0 + t, "upper slab height")?;
    let center = vec![0.0; map.dim];
    let crn_seed = derive_seed(seed, 11);
    let lo = mean_radius(map, &center, t0.exp(), budget, crn_seed)?;
    let hi = mean_radius(map, &center, (t0 + t).exp(), budget, crn_seed)?;
    let dq_increment = hi.rho.ln() - lo.rho.ln();
    let dq_err = ((hi.rho_err / hi.rho).powi(2) + (lo.rho_err / lo.rho).powi(2)).sqrt();
    let tm = TransformedMap::new(map)?;
    let (vt, vt_err) = slab_image_volume(&tm, t0, t, budget, derive_seed(seed, 13))?;
    if !(vt > 0.0) {
        return Err(Error::degenerate("slab image volume vanished"));
    }
    Ok(VolumeComparison {
        t0,
        t,
        dq_increment,
        dq_err,
        vt,
        vt_err,
        ratio: dq_increment / vt,
    })
}

// ---------------------------------------------------------------------------
// Weak quasisymmetry diagnostics.
// ---------------------------------------------------------------------------

/// Axis-aligned sampling region inside the beam.
#[derive(Debug, Clone, Serialize)]
pub struct Region {
    pub corner: Vec<f64>,
    pub sides: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Region {
    pub fn new(corner: Vec<f64>, sides: Vec<f64>, t_lo: f64, t_hi: f64) -> Result<Self> {
        if corner.len() != sides.len() || corner.is_empty() {
            return Err(Error::invalid("region corner/sides dimension mismatch"));
        }
        if sides.iter().any(|s| !(*s > 0.0)) || !(t_lo < t_hi) {
            return Err(Error::invalid("region extents must be positive"));
        }
        Ok(Region {
            corner,
            sides,
            t_lo,
            t_hi,
        })
    }

    fn dim(&self) -> usize {
        self.corner.len() + 1
    }

    fn min_extent(&self) -> f64 {
        self.sides
            .iter()
            .fold(self.t_hi - self.t_lo, |a, &b| a.min(b))
    }

    /// Uniform point of the region shrunk by `margin` on every side.
    fn sample<R: Rng>(&self, rng: &mut R, margin: f64) -> BeamPoint {
        let base = self
            .corner
            .iter()
            .zip(&self.sides)
            .map(|(c, s)| c + margin + (s - 2.0 * margin) * rng.gen::<f64>())
            .collect();
        BeamPoint {
            base,
            height: self.t_lo + margin + (self.t_hi - self.t_lo - 2.0 * margin) * rng.gen::<f64>(),
        }
    }
}

/// Empirical weak-quasisymmetry report in the quotient metric.
#[derive(Debug, Clone, Serialize)]
pub struct QSReport {
    /// Upper edges of the preimage distance-ratio buckets.
    pub ratio_bins: Vec<f64>,
    /// Sup of image ratios over triples with preimage ratio below each edge.
    pub h_curve: Vec<f64>,
    /// Sup over all triples with `d(x, a) <= d(x, b)`.
    pub weak_h: f64,
    pub triples: usize,
}

fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

fn offset_point(p: &BeamPoint, dir: &[f64], scale: f64) -> BeamPoint {
    let n = p.dim();
    BeamPoint {
        base: (0..n - 1).map(|a| p.base[a] + scale * dir[a]).collect(),
        height: p.height + scale * dir[n - 1],
    }
}

/// Sample triples `(x, a, b)` with `d(x, a) <= d(x, b)` in the quotient
/// metric and record the sup of image distance ratios, both overall and per
/// preimage-ratio bucket. Mixes free triples with equal-distance pairs so the
/// sup is attained by maps that are quotient isometries.
pub fn weak_qs_estimate(
    tm: &TransformedMap,
    region: &Region,
    triple_count: usize,
    seed: u64,
) -> Result<QSReport> {
    let n = tm.dim();
    if region.dim() != n {
        return Err(Error::invalid("region dimension mismatch"));
    }
    if triple_count < 16 {
        return Err(Error::invalid("need at least 16 triples"));
    }
    if let Some(m) = tm.plane_map().height_cap {
        if !(region.t_hi < m) {
            return Err(Error::domain("region must keep a positive margin below the cap"));
        }
    }
    let group = tm.zorich().group();
    let delta = 0.2 * region.min_extent();
    let mut rng = substream(seed, 0);
    let mut bucket_sup = vec![0.0f64; QS_BINS];
    let mut used = 0usize;
    for k in 0..triple_count {
        let (x, mut a, mut b) = match k % 4 {
            // Antipodal pair: equal distances on both sides, exactly.
            2 => {
                let x = region.sample(&mut rng, delta);
                let dir = unit_vector(&mut rng, n);
                let s = delta * rng.gen::<f64>();
                (x.clone(), offset_point(&x, &dir, s), offset_point(&x, &dir, -s))
            }
            // Equal-length independent directions.
            3 => {
                let x = region.sample(&mut rng, delta);
                let s = delta * rng.gen::<f64>();
                let u = unit_vector(&mut rng, n);
                let w = unit_vector(&mut rng, n);
                (x.clone(), offset_point(&x, &u, s), offset_point(&x, &w, s))
            }
            // Free triples.
            _ => (
                region.sample(&mut rng, 0.0),
                region.sample(&mut rng, 0.0),
                region.sample(&mut rng, 0.0),
            ),
        };
        let mut da = quotient_distance(&x, &a, &group)?;
        let mut db = quotient_distance(&x, &b, &group)?;
        if da > db {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut da, &mut db);
        }
        if !(db > 0.0) {
            continue;
        }
        let fx = tm.eval_hinted(&x, None)?;
        let fa = tm.eval_hinted(&a, Some(&fx))?;
        let fb = tm.eval_hinted(&b, Some(&fx))?;
        let ia = quotient_distance(&fx, &fa, &group)?;
        let ib = quotient_distance(&fx, &fb, &group)?;
        if !(ib > 0.0) {
            continue;
        }
        let s = da / db;
        let ratio = ia / ib;
        let bin = ((s * QS_BINS as f64).ceil() as usize).clamp(1, QS_BINS) - 1;
        bucket_sup[bin] = bucket_sup[bin].max(ratio);
        used += 1;
    }
    let ratio_bins: Vec<f64> = (1..=QS_BINS).map(|k| k as f64 / QS_BINS as f64).collect();
    let mut h_curve = Vec::with_capacity(QS_BINS);
    let mut acc = 0.0f64;
    for s in bucket_sup {
        acc = acc.max(s);
        h_curve.push(acc);
    }
    Ok(QSReport {
        ratio_bins,
        h_curve,
        weak_h: acc,
        triples: used,
    })
}

// ---------------------------------------------------------------------------
// Slice size (rectifiability proxy).
// ---------------------------------------------------------------------------

/// (n-1)-volume of the image slice at height `t0`: polyline length in the
/// planar case, area of a branch-coherent triangulated grid otherwise.
/// Nested (dyadic) resolutions give nondecreasing values.
pub fn slice_size(tm: &TransformedMap, t0: f64, resolution: usize) -> Result<f64> {
    require_below_cap(tm.plane_map(), t0, "slice height")?;
    if resolution < 2 {
        return Err(Error::invalid("resolution must be at least 2"));
    }
    let n = tm.dim();
    if n == 2 {
        let poly = tm.slice_image_polyline(t0, resolution)?;
        return Ok(poly.windows(2).map(|w| w[0].dist(&w[1])).sum());
    }
    // Vertex grid over the base cell, each vertex hinted by its predecessor.
    let (g0, g1) = (resolution, 2 * resolution);
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(g0 + 1);
    let mut row_anchor: Option<BeamPoint> = None;
    for i in 0..=g0 {
        let mut row = Vec::with_capacity(g1 + 1);
        let mut prev: Option<BeamPoint> = row_anchor.clone();
        for j in 0..=g1 {
            let p = BeamPoint {
                base: vec![i as f64 / g0 as f64, 2.0 * j as f64 / g1 as f64],
                height: t0,
            };
            let img = tm.eval_hinted(&p, prev.as_ref())?;
            if j == 0 {
                row_anchor = Some(img.clone());
            }
            prev = Some(img.clone());
            row.push(point_coords(&img));
        }
        rows.push(row);
    }
    let tri_area = |a: &[f64], b: &[f64], c: &[f64]| -> f64 {
        let u: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let v: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
        let cx = u[1] * v[2] - u[2] * v[1];
        let cy = u[2] * v[0] - u[0] * v[2];
        let cz = u[0] * v[1] - u[1] * v[0];
        0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
    };
    let mut area = 0.0;
    for i in 0..g0 {
        for j in 0..g1 {
            let a = &rows[i][j];
            let b = &rows[i + 1][j];
            let c = &rows[i + 1][j + 1];
            let d = &rows[i][j + 1];
            area += tri_area(a, b, c) + tri_area(a, c, d);
        }
    }
    Ok(area)
}

// ---------------------------------------------------------------------------
// Asymptotic representative and generalized derivative.
// ---------------------------------------------------------------------------

/// A map `D(x) = rho(|x|) g(x/|x|)` splitting radial growth from a boundary
/// direction field, packaged as an ordinary map.
#[derive(Serialize)]
pub struct AsymptoticRep {
    pub rho_curve: MeanRadiusCurve,
    pub d_exponent: f64,
    #[serde(skip)]
    pub map: QCMap,
}

/// Build the split representative of `map`: the mean-radius curve is sampled
/// on `t_grid` with one shared sample stream and interpolated log-linearly;
/// `g` supplies the boundary direction field.
pub fn asymptotic_representative(
    map: &QCMap,
    g: BoundaryFn,
    d_exponent: f64,
    t_grid: &[f64],
    budget: u64,
    seed: u64,
) -> Result<AsymptoticRep> {
    let n = map.dim;
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("height grid must be increasing with length >= 2"));
    }
    require_below_cap(map, t_grid[t_grid.len() - 1], "top of the height grid")?;
    for dir in sphere_directions(n, 64) {
        let img = g(&dir);
        let norm = img.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 1e-9 && norm.is_finite()) {
            return Err(Error::degenerate(
                "boundary field vanishes or blows up on the sphere",
            ));
        }
    }
    let center = vec![0.0; n];
    let crn_seed = derive_seed(seed, 0xa5);
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let est = mean_radius(map, &center, t.exp(), budget, crn_seed)?;
        points.push(CurvePoint {
            t,
            r: est.r,
            rho: est.rho,
            rho_err: est.rho_err,
            rho_tilde: est.rho.ln(),
            rho_tilde_err: est.rho_err / est.rho,
            samples: est.volume.samples,
        });
    }
    let curve = MeanRadiusCurve {
        label: map.label.clone(),
        dim: n,
        points,
    };
    let knots: Arc<Vec<(f64, f64)>> = Arc::new(
        curve
            .points
            .iter()
            .map(|p| (p.t, p.rho_tilde))
            .collect(),
    );
    let g_eval = g.clone();
    let knots_eval = knots.clone();
    let eval = move |x: &[f64]| -> Vec<f64> {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(r > 0.0) {
            return vec![0.0; x.len()];
        }
        let rho = log_linear_rho(&knots_eval, r.ln());
        let dir: Vec<f64> = x.iter().map(|c| c / r).collect();
        g_eval(&dir).into_iter().map(|c| c * rho).collect()
    };
    let rep = QCMap::new(format!("asym_{}", map.label), n, Box::new(eval));
    let rep = match map.height_cap {
        Some(m) => rep.with_height_cap(m),
        None => rep,
    };
    Ok(AsymptoticRep {
        rho_curve: curve,
        d_exponent,
        map: rep,
    })
}

/// Interpolate the logarithmic curve linearly in `t` (linear extrapolation
/// with the edge slopes outside the grid) and exponentiate.
fn log_linear_rho(knots: &[(f64, f64)], t: f64) -> f64 {
    let k = knots.len();
    let seg = if t <= knots[0].0 {
        0
    } else if t >= knots[k - 1].0 {
        k - 2
    } else {
        knots.partition_point(|&(kt, _)| kt <= t) - 1
    };
    let (t0, v0) = knots[seg];
    let (t1, v1) = knots[seg + 1];
    let s = (t - t0) / (t1 - t0);
    (v0 + s * (v1 - v0)).exp()
}

/// Scaled restrictions `f(r_k x) / rho(r_k)` evaluated on a deterministic
/// sphere sample, with sup distances between consecutive scales.
#[derive(Debug, Clone, Serialize)]
pub struct GenDerivative {
    pub directions: Vec<Vec<f64>>,
    /// Final rescaled boundary values, one per direction.
    pub values: Vec<Vec<f64>>,
    /// Sup distance between consecutive rescalings.
    pub sup_distances: Vec<f64>,
    /// Mean radius at each scale.
    pub rho: Vec<f64>,
    /// Whether the rescalings settled (distances became negligible).
    pub simple: bool,
}

/// Estimate the boundary direction field as the limit of rescaled maps along
/// a decreasing radius sequence. One shared sample stream across scales makes
/// scale-covariant maps settle exactly.
pub fn gen_derivative(
    map: &QCMap,
    r_sequence: &[f64],
    sphere_samples: usize,
    budget: u64,
    seed: u64,
) -> Result<GenDerivative> {
    let n = map.dim;
    if r_sequence.len() < 2
        || r_sequence
            .windows(2)
            .any(|w| !(w[0] > w[1] && w[1] > 0.0))
    {
        return Err(Error::invalid(
            "radius sequence must decrease strictly toward zero",
        ));
    }
    if let Some(m) = map.height_cap {
        if !(r_sequence[0].ln() < m) {
            return Err(Error::domain("radius sequence must start below the cap"));
        }
    }
    let directions = sphere_directions(n, sphere_samples.max(8));
    let center = vec![0.0; n];
    let crn_seed = derive_seed(seed, 0x6d);
    let mut rho = Vec::with_capacity(r_sequence.len());
    let mut prev: Option<Vec<Vec<f64>>> = None;
    let mut sup_distances = Vec::with_capacity(r_sequence.len() - 1);
    let mut last = Vec::new();
    for &r in r_sequence {
        let est = mean_radius(map, &center, r, budget, crn_seed)?;
        let vals: Vec<Vec<f64>> = directions
            .iter()
            .map(|dir| {
                let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
                map.eval(&x).into_iter().map(|c| c / est.rho).collect()
            })
            .collect();
        if let Some(p) = &prev {
            let d = p
                .iter()
                .zip(&vals)
                .map(|(a, b)| euclid(a, b))
                .fold(0.0f64, f64::max);
            sup_distances.push(d);
        }
        rho.push(est.rho);
        prev = Some(vals.clone());
        last = vals;
    }
    let first = sup_distances.first().copied().unwrap_or(0.0);
    let tail = sup_distances.last().copied().unwrap_or(0.0);
    let simple = tail < 1e-9 || tail <= 0.5 * first;
    Ok(GenDerivative {
        directions,
        values: last,
        sup_distances,
        rho,
        simple,
    })
}

impl GenDerivative {
    /// Interpolating closure over the sampled directions: angular blending of
    /// the bracketing samples in the plane, an inverse-angle blend of the
    /// three nearest samples on the sphere.
    pub fn boundary_map(&self) -> BoundaryFn {
        let dirs = self.directions.clone();
        let vals = self.values.clone();
        let n = dirs.first().map(|d| d.len()).unwrap_or(0);
        if n == 2 {
            let mut keyed: Vec<(f64, Vec<f64>)> = dirs
                .iter()
                .zip(&vals)
                .map(|(d, v)| (d[1].atan2(d[0]), v.clone()))
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(move |x: &[f64]| {
                let theta = x[1].atan2(x[0]);
                let k = keyed.len();
                let hi = keyed.partition_point(|(a, _)| *a <= theta) % k;
                let lo = (hi + k - 1) % k;
                let (a0, v0) = &keyed[lo];
                let (a1, v1) = &keyed[hi];
                let mut span = a1 - a0;
                if span <= 0.0 {
                    span += std::f64::consts::TAU;
                }
                let mut off = theta - a0;
                if off < 0.0 {
                    off += std::f64::consts::TAU;
                }
                let s = (off / span).clamp(0.0, 1.0);
                v0.iter().zip(v1).map(|(p, q)| p + s * (q - p)).collect()
            })
        } else {
            let data: Vec<(Vec<f64>, Vec<f64>)> =
                dirs.into_iter().zip(vals).collect();
            Arc::new(move |x: &[f64]| {
                let mut best: Vec<(f64, usize)> = data
                    .iter()
                    .enumerate()
                    .map(|(i, (d, _))| {
                        let dot: f64 = d.iter().zip(x).map(|(a, b)| a * b).sum();
                        (dot.clamp(-1.0, 1.0).acos(), i)
                    })
                    .collect();
                best.sort_by(|a, b| a.0.total_cmp(&b.0));
                let picks = &best[..3.min(best.len())];
                let mut weights: Vec<f64> = picks.iter().map(|(a, _)| 1.0 / (a + 1e-9)).collect();
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                let dim_out = data[picks[0].1].1.len();
                let mut out = vec![0.0; dim_out];
                for ((_, i), w) in picks.iter().zip(&weights) {
                    for (o, v) in out.iter_mut().zip(&data[*i].1) {
                        *o += w * v;
                    }
                }
                out
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Linear distortion.
// ---------------------------------------------------------------------------

/// Sphere-sampled distortion at one radius.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionPoint {
    pub r: f64,
    pub max_stretch: f64,
    pub min_stretch: f64,
    pub h: f64,
}

/// Deterministic unit directions: a uniform angle grid through the axes in
/// the plane, a Fibonacci lattice plus the coordinate axes on the sphere.
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        let m = count.max(8).div_ceil(4) * 4;
        (0..m)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / m as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    } else {
        let m = count.max(32);
        let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        let mut out: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let z = 1.0 - (2.0 * j as f64 + 1.0) / m as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let a = golden * j as f64;
                vec![r * a.cos(), r * a.sin(), z]
            })
            .collect();
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; 3];
                v[axis] = sign;
                out.push(v);
            }
        }
        out
    }
}

/// Max/min image magnitude over sphere directions per radius, with their
/// ratio (the linear distortion at the origin).
pub fn linear_distortion(
    map: &QCMap,
    r_grid: &[f64],
    sphere_samples: usize,
) -> Result<Vec<DistortionPoint>> {
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("radius grid must be positive"));
    }
    let dirs = sphere_directions(map.dim, sphere_samples.max(8));
    let mut out = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        require_below_cap(map, r.ln(), "distortion radius (log)")?;
        let mut max_s = f64::NEG_INFINITY;
        let mut min_s = f64::INFINITY;
        for dir in &dirs {
            let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            let norm = map
                .eval(&x)
                .iter()
                .map(|c| c * c)
                .sum::<f64>()
                .sqrt();
            max_s = max_s.max(norm);
            min_s = min_s.min(norm);
        }
        if !(min_s > 0.0) {
            return Err(Error::degenerate(format!(
                "image collapses on the sphere of radius {r}"
            )));
        }
        out.push(DistortionPoint {
            r,
            max_stretch: max_s,
            min_stretch: min_s,
            h: max_s / min_s,
        });
    }
    Ok(out)
}
