//! Mean-radius estimation.
//!
//! The mean radius of a map at scale `r` is the radius of the ball whose
//! volume matches `vol f(B(x0, r))`. Image volumes are computed as
//! `Omega_n r^n * mean |J_f|` over uniform ball samples, drawn from
//! deterministic chunked substreams and reduced in chunk order, so every
//! estimate is bit-reproducible for a fixed `(seed, budget)` regardless of
//! thread count.

use crate::geometry::unit_ball_volume;
use crate::mapzoo::QCMap;
use crate::rng::{chunk_count, chunk_len, derive_seed, substream, CHUNK};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Monte Carlo volume with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Mean radius at one scale.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusEstimate {
    pub r: f64,
    pub rho: f64,
    pub rho_err: f64,
    pub volume: VolumeEstimate,
}

/// One point of a mean-radius curve in logarithmic coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    /// Height `t = ln r`.
    pub t: f64,
    pub r: f64,
    pub rho: f64,
    pub rho_err: f64,
    /// Logarithmic transform `ln rho(e^t)`.
    pub rho_tilde: f64,
    pub rho_tilde_err: f64,
    pub samples: u64,
}

/// Mean-radius curve of one map over a height grid.
#[derive(Debug, Clone, Serialize)]
pub struct MeanRadiusCurve {
    pub label: String,
    pub dim: usize,
    pub points: Vec<CurvePoint>,
}

/// One difference quotient of the logarithmic curve.
#[derive(Debug, Clone, Serialize)]
pub struct DqPoint {
    /// Right endpoint height.
    pub t: f64,
    pub lag: f64,
    pub value: f64,
    pub err: f64,
}

/// Slope summary of a logarithmic curve.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    pub min_slope: f64,
    pub max_slope: f64,
    pub overall_slope: f64,
}

/// Empirical bi-Lipschitz bracket of a logarithmic curve.
#[derive(Debug, Clone, Serialize)]
pub struct BiLipschitz {
    /// Smallest difference quotient over the lag set.
    pub l_min: f64,
    /// Largest difference quotient over the lag set.
    pub l_max: f64,
    /// Empirical constant `max(l_max, 1/l_min)`.
    pub constant: f64,
}

/// Homogeneity diagnostic at one height.
#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityPoint {
    pub t: f64,
    /// `rho(s r) / (s^degree rho(r))` for the configured scale `s`.
    pub ratio: f64,
    pub err: f64,
}

/// Central-difference Jacobian determinant magnitude (n = 2, 3) for maps
/// without an exact Jacobian.
pub fn numeric_jacobian(map: &QCMap, x: &[f64], step: f64) -> f64 {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        let (fp, fm) = (map.eval(&xp), map.eval(&xm));
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect::<Vec<f64>>(),
        );
    }
    match n {
        2 => (cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0]).abs(),
        3 => {
            let m = &cols;
            (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[1][0] * (m[0][1] * m[2][2] - m[0][2] * m[2][1])
                + m[2][0] * (m[0][1] * m[1][2] - m[0][2] * m[1][1]))
                .abs()
        }
        _ => f64::NAN,
    }
}

fn jacobian_at(map: &QCMap, x: &[f64]) -> f64 {
    match map.jacobian(x) {
        Some(j) => j,
        None => {
            let scale = x.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-3);
            numeric_jacobian(map, x, 1e-6 * scale)
        }
    }
}

fn check_domain(map: &QCMap, center: &[f64], r: f64) -> Result<()> {
    if let Some(cap) = map.height_cap {
        let reach = center.iter().map(|c| c * c).sum::<f64>().sqrt() + r;
        if reach.ln() >= cap {
            return Err(Error::domain(format!(
                "ball of radius {r} reaches past the map's height cap {cap}"
            )));
        }
    }
    Ok(())
}

/// Volume of `f(B(center, r))` by Jacobian integration over uniform ball
/// samples.
pub fn image_volume(
    map: &QCMap,
    center: &[f64],
    r: f64,
    budget: u64,
    seed: u64,
) -> Result<VolumeEstimate> {
    let n = map.dim;
    if center.len() != n {
        return Err(Error::invalid("center dimension mismatch"));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    if budget < 2 {
        return Err(Error::invalid("sample budget must be at least 2"));
    }
    check_domain(map, center, r)?;
    let omega = unit_ball_volume(n)?;
    let chunks = chunk_count(budget);
    let stats: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = substream(seed, ci);
            let len = chunk_len(budget, ci);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut x = vec![0.0; n];
            for _ in 0..len {
                // Uniform ball point: normal direction, radius r * u^{1/n}.
                let mut norm2: f64 = 0.0;
                while norm2 < 1e-24 {
                    norm2 = 0.0;
                    for c in x.iter_mut() {
                        *c = rng.sample(StandardNormal);
                        norm2 += *c * *c;
                    }
                }
                let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let scale = r * u.powf(1.0 / n as f64) / norm2.sqrt();
                for (c, x0) in x.iter_mut().zip(center) {
                    *c = *c * scale + x0;
                }
                let j = jacobian_at(map, &x);
                if !j.is_finite() || j < 0.0 {
                    return Err(Error::estimation(format!(
                        "non-finite Jacobian sample for {}",
                        map.label
                    )));
                }
                sum += j;
                sumsq += j * j;
            }
            Ok((sum, sumsq))
        })
        .collect();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for s in stats {
        let (a, b) = s?;
        sum += a;
        sumsq += b;
    }
    let nf = budget as f64;
    let mean = sum / nf;
    let var = ((sumsq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    let se = (var / nf).sqrt();
    let factor = omega * r.powi(n as i32);
    Ok(VolumeEstimate {
        value: factor * mean,
        std_error: factor * se,
        samples: budget,
    })
}

/// Mean radius `(vol f(B(center, r)) / Omega_n)^{1/n}` with a delta-method
/// standard error.
pub fn mean_radius(
    map: &QCMap,
    center: &[f64],
    r: f64,
    budget: u64,
    seed: u64,
) -> Result<RadiusEstimate> {
    let n = map.dim;
    let omega = unit_ball_volume(n)?;
    let vol = image_volume(map, center, r, budget, seed)?;
    if !(vol.value > 0.0) {
        return Err(Error::degenerate(format!(
            "image volume vanished for {} at r = {r}",
            map.label
        )));
    }
    let ratio = vol.value / omega;
    let rho = ratio.powf(1.0 / n as f64);
    let drho_dv = ratio.powf(1.0 / n as f64 - 1.0) / (n as f64 * omega);
    Ok(RadiusEstimate {
        r,
        rho,
        rho_err: drho_dv * vol.std_error,
        volume: vol,
    })
}

/// Evenly spaced height grid, inclusive of both ends.
pub fn height_grid(t_min: f64, t_max: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(t_min < t_max) {
        return Err(Error::invalid("height grid needs t_min < t_max and count >= 2"));
    }
    let step = (t_max - t_min) / (count - 1) as f64;
    Ok((0..count).map(|k| t_min + step * k as f64).collect())
}

/// Mean-radius curve at the origin over a height grid, with the logarithmic
/// transform `rho~(t) = ln rho(e^t)` attached to every point.
pub fn mean_radius_curve(
    map: &QCMap,
    heights: &[f64],
    budget: u64,
    seed: u64,
) -> Result<MeanRadiusCurve> {
    if heights.is_empty() {
        return Err(Error::invalid("empty height grid"));
    }
    let center = vec![0.0; map.dim];
    let mut points = Vec::with_capacity(heights.len());
    for (i, &t) in heights.iter().enumerate() {
        let est = mean_radius(map, &center, t.exp(), budget, derive_seed(seed, i as u64))?;
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
    Ok(MeanRadiusCurve {
        label: map.label.clone(),
        dim: map.dim,
        points,
    })
}

/// Difference quotients of the logarithmic curve over a set of lags. A pair
/// of grid points contributes when its height gap matches a lag to 1e-9.
pub fn difference_quotients(curve: &MeanRadiusCurve, lags: &[f64]) -> Result<Vec<DqPoint>> {
    if lags.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::invalid("lags must be positive"));
    }
    let pts = &curve.points;
    let mut out = Vec::new();
    for &lag in lags {
        for i in 0..pts.len() {
            for j in 0..i {
                let gap = pts[i].t - pts[j].t;
                if (gap - lag).abs() <= 1e-9 {
                    let value = (pts[i].rho_tilde - pts[j].rho_tilde) / gap;
                    let err = (pts[i].rho_tilde_err.powi(2) + pts[j].rho_tilde_err.powi(2))
                        .sqrt()
                        / gap;
                    out.push(DqPoint {
                        t: pts[i].t,
                        lag,
                        value,
                        err,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Bi-Lipschitz bracket from the difference quotients over a lag set.
pub fn bi_lipschitz_estimate(curve: &MeanRadiusCurve, lags: &[f64]) -> Result<BiLipschitz> {
    let dqs = difference_quotients(curve, lags)?;
    if dqs.is_empty() {
        return Err(Error::invalid("no difference quotients for the lag set"));
    }
    let l_min = dqs.iter().map(|d| d.value).fold(f64::INFINITY, f64::min);
    let l_max = dqs.iter().map(|d| d.value).fold(f64::NEG_INFINITY, f64::max);
    if l_min <= 0.0 {
        return Err(Error::estimation("nonpositive difference quotient"));
    }
    Ok(BiLipschitz {
        l_min,
        l_max,
        constant: l_max.max(1.0 / l_min),
    })
}

/// Consecutive-point slopes of the logarithmic curve.
pub fn slope_report(curve: &MeanRadiusCurve) -> Result<SlopeReport> {
    let pts = &curve.points;
    if pts.len() < 2 {
        return Err(Error::invalid("slope report needs at least two points"));
    }
    let mut min_slope = f64::INFINITY;
    let mut max_slope = f64::NEG_INFINITY;
    for w in pts.windows(2) {
        let s = (w[1].rho_tilde - w[0].rho_tilde) / (w[1].t - w[0].t);
        min_slope = min_slope.min(s);
        max_slope = max_slope.max(s);
    }
    let overall = (pts[pts.len() - 1].rho_tilde - pts[0].rho_tilde)
        / (pts[pts.len() - 1].t - pts[0].t);
    Ok(SlopeReport {
        min_slope,
        max_slope,
        overall_slope: overall,
    })
}

/// Homogeneity diagnostic: `rho(s r) / (s^degree rho(r))` with `s = e^log_scale`,
/// using common random numbers for the two estimates so that exactly
/// homogeneous maps give ratio 1 to near machine precision.
pub fn homogeneity_check(
    map: &QCMap,
    degree: f64,
    heights: &[f64],
    log_scale: f64,
    budget: u64,
    seed: u64,
) -> Result<Vec<HomogeneityPoint>> {
    if !(log_scale.is_finite() && log_scale > 0.0) {
        return Err(Error::invalid("log scale must be positive"));
    }
    let center = vec![0.0; map.dim];
    let mut out = Vec::with_capacity(heights.len());
    for (i, &t) in heights.iter().enumerate() {
        let s = derive_seed(seed, i as u64);
        let base = mean_radius(map, &center, t.exp(), budget, s)?;
        let scaled = mean_radius(map, &center, (t + log_scale).exp(), budget, s)?;
        let ratio = scaled.rho / ((degree * log_scale).exp() * base.rho);
        let err = ratio
            * ((base.rho_err / base.rho).powi(2) + (scaled.rho_err / scaled.rho).powi(2)).sqrt();
        out.push(HomogeneityPoint { t, ratio, err });
    }
    Ok(out)
}

/// Sampled extrema `(min |f|, max |f|)` over the sphere of radius `r`.
pub fn sphere_extrema(
    map: &QCMap,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = map.dim;
    check_domain(map, &vec![0.0; n], r)?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sphere sample"));
    }
    let chunks = chunk_count(samples);
    let extrema: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = substream(seed, ci);
            let len = chunk_len(samples, ci);
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            let mut x = vec![0.0; n];
            for _ in 0..len {
                let mut norm2: f64 = 0.0;
                while norm2 < 1e-24 {
                    norm2 = 0.0;
                    for c in x.iter_mut() {
                        *c = rng.sample(StandardNormal);
                        norm2 += *c * *c;
                    }
                }
                let scale = r / norm2.sqrt();
                let y = map.eval(&x.iter().map(|c| c * scale).collect::<Vec<f64>>());
                let m = y.iter().map(|c| c * c).sum::<f64>().sqrt();
                lo = lo.min(m);
                hi = hi.max(m);
            }
            (lo, hi)
        })
        .collect();
    let lo = extrema.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let hi = extrema.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok((lo, hi))
}

/// Number of chunk substreams an estimate of the given budget consumes
/// (exposed for callers that pre-partition budgets).
pub fn chunks_for(budget: u64) -> u64 {
    chunk_count(budget.max(CHUNK))
}
