//! Catalog of test mappings: linear maps, radial stretches, a spiral, and a
//! snowflake-type map built from piecewise-affine square homeomorphisms whose
//! midline converges to a Koch curve.
//!
//! Every entry is packaged as a [`QCMap`]: an evaluation closure plus optional
//! exact Jacobian, exact inverse, a height cap for maps only meaningful near
//! the origin, and a dilatation hint when a closed form is known.

use crate::geometry::BeamPoint;
use crate::zorich::ZorichMap;
use crate::{Error, Result};
use std::sync::Arc;

type EvalFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A mapping of punctured n-space with optional exact helpers.
pub struct QCMap {
    pub label: String,
    pub dim: usize,
    /// Heights below this cap are meaningful for asymptotic statistics
    /// (`None` = the whole space).
    pub height_cap: Option<f64>,
    /// Closed-form dilatation (or an upper bound) when known.
    pub dilatation_hint: Option<f64>,
    eval: EvalFn,
    jacobian: Option<ScalarFn>,
    inverse: Option<EvalFn>,
}

impl QCMap {
    pub fn new(label: impl Into<String>, dim: usize, eval: EvalFn) -> Self {
        QCMap {
            label: label.into(),
            dim,
            height_cap: None,
            dilatation_hint: None,
            eval,
            jacobian: None,
            inverse: None,
        }
    }

    pub fn with_jacobian(mut self, j: ScalarFn) -> Self {
        self.jacobian = Some(j);
        self
    }

    pub fn with_inverse(mut self, inv: EvalFn) -> Self {
        self.inverse = Some(inv);
        self
    }

    pub fn with_height_cap(mut self, m: f64) -> Self {
        self.height_cap = Some(m);
        self
    }

    pub fn with_dilatation_hint(mut self, k: f64) -> Self {
        self.dilatation_hint = Some(k);
        self
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    /// Exact Jacobian determinant magnitude, when available.
    pub fn jacobian(&self, x: &[f64]) -> Option<f64> {
        self.jacobian.as_ref().map(|j| j(x))
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Exact inverse, when available.
    pub fn inverse(&self, y: &[f64]) -> Option<Vec<f64>> {
        self.inverse.as_ref().map(|inv| inv(y))
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// The identity map.
pub fn identity_map(n: usize) -> QCMap {
    QCMap::new("identity", n, Box::new(|x: &[f64]| x.to_vec()))
        .with_jacobian(Box::new(|_| 1.0))
        .with_inverse(Box::new(|y: &[f64]| y.to_vec()))
        .with_dilatation_hint(1.0)
}

/// Uniform scaling `x -> lambda x`.
pub fn scaling_map(n: usize, lambda: f64) -> Result<QCMap> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid("scaling factor must be positive"));
    }
    let jac = lambda.powi(n as i32);
    let label = if (lambda - 0.5).abs() < 1e-15 {
        "half".to_string()
    } else {
        format!("scale_{lambda}")
    };
    Ok(QCMap::new(
        label,
        n,
        Box::new(move |x: &[f64]| x.iter().map(|c| c * lambda).collect()),
    )
    .with_jacobian(Box::new(move |_| jac))
    .with_inverse(Box::new(move |y: &[f64]| {
        y.iter().map(|c| c / lambda).collect()
    }))
    .with_dilatation_hint(1.0))
}

/// Diagonal linear map with positive entries.
pub fn diagonal_map(entries: &[f64]) -> Result<QCMap> {
    if entries.len() < 2 || entries.iter().any(|e| !e.is_finite() || *e <= 0.0) {
        return Err(Error::invalid("diagonal entries must be positive"));
    }
    let d: Vec<f64> = entries.to_vec();
    let jac: f64 = d.iter().product();
    let hint = d.iter().cloned().fold(f64::MIN, f64::max)
        / d.iter().cloned().fold(f64::MAX, f64::min);
    let label = format!(
        "diag_{}",
        d.iter()
            .map(|e| format!("{e}"))
            .collect::<Vec<_>>()
            .join("_")
    );
    let d2 = d.clone();
    let d3 = d.clone();
    Ok(QCMap::new(
        label,
        d.len(),
        Box::new(move |x: &[f64]| x.iter().zip(&d2).map(|(c, e)| c * e).collect()),
    )
    .with_jacobian(Box::new(move |_| jac))
    .with_inverse(Box::new(move |y: &[f64]| {
        y.iter().zip(&d3).map(|(c, e)| c / e).collect()
    }))
    .with_dilatation_hint(hint))
}

/// Radial profile `h` defining the stretch `x -> h(|x|) x / |x|`.
#[derive(Debug, Clone, Copy)]
pub enum RadialProfile {
    /// `h(r) = r^d`, d > 0.
    Power { d: f64 },
    /// `h(r) = r^d / ln(1/r)` on `r < 1/e` (height cap -1).
    LogPower { d: f64 },
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        let d = match self {
            RadialProfile::Power { d } | RadialProfile::LogPower { d } => *d,
        };
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid("radial exponent must be positive"));
        }
        Ok(())
    }

    /// Heights below this value are inside the profile's domain.
    pub fn height_cap(&self) -> Option<f64> {
        match self {
            RadialProfile::Power { .. } => None,
            RadialProfile::LogPower { .. } => Some(-1.0),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Power { d } => r.powf(*d),
            RadialProfile::LogPower { d } => r.powf(*d) / -r.ln(),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Power { d } => d * r.powf(d - 1.0),
            RadialProfile::LogPower { d } => {
                let u = -r.ln();
                r.powf(d - 1.0) * (d * u + 1.0) / (u * u)
            }
        }
    }

    /// `ln h(e^t)`: the profile in logarithmic coordinates.
    pub fn log_value(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Power { d } => d * t,
            RadialProfile::LogPower { d } => d * t - (-t).ln(),
        }
    }

    /// Derivative of [`Self::log_value`], equal to `r h'(r) / h(r)`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Power { d } => *d,
            RadialProfile::LogPower { d } => d - 1.0 / t,
        }
    }

    /// Planar Beltrami-coefficient magnitude `(k - 1) / (k + 1)` with
    /// `k = r h' / h`.
    pub fn beltrami(&self, r: f64) -> f64 {
        let k = self.log_derivative(r.ln());
        (k - 1.0) / (k + 1.0)
    }

    /// Jacobian determinant magnitude of the radial stretch in R^n.
    pub fn jacobian(&self, r: f64, n: usize) -> f64 {
        self.derivative(r) * (self.value(r) / r).powi(n as i32 - 1)
    }

    /// Invert `h` (monotone on its domain): the radius `r` with `h(r) = v`.
    pub fn invert_value(&self, v: f64) -> Result<f64> {
        match self {
            RadialProfile::Power { d } => {
                if v < 0.0 {
                    return Err(Error::domain("radial values are non-negative"));
                }
                Ok(v.powf(1.0 / d))
            }
            RadialProfile::LogPower { d } => {
                // Solve d t - ln(-t) = ln v by safeguarded Newton; the left
                // side is increasing and convex on t < -1.
                if !(v > 0.0) {
                    return Err(Error::domain("radial values are positive"));
                }
                let target = v.ln();
                if target >= -d {
                    return Err(Error::domain("value outside the profile range"));
                }
                let mut t = (target / d).min(-1.0 - 1e-12);
                for _ in 0..60 {
                    let f = d * t - (-t).ln() - target;
                    let fp = d - 1.0 / t;
                    let step = f / fp;
                    t = (t - step).min(-1.0 - 1e-12);
                    if step.abs() < 1e-15 * t.abs().max(1.0) {
                        break;
                    }
                }
                Ok(t.exp())
            }
        }
    }

    fn label(&self) -> String {
        match self {
            RadialProfile::Power { d } => format!("power_d{d}"),
            RadialProfile::LogPower { d } => format!("logpower_d{d}"),
        }
    }
}

/// Radial stretch `x -> h(|x|) x / |x|` in R^n.
pub fn radial_map(profile: RadialProfile, n: usize) -> Result<QCMap> {
    profile.validate()?;
    if n < 2 {
        return Err(Error::invalid("radial maps need n >= 2"));
    }
    let p = profile;
    let mut map = QCMap::new(
        p.label(),
        n,
        Box::new(move |x: &[f64]| {
            let r = norm(x);
            if r == 0.0 {
                return vec![0.0; x.len()];
            }
            let s = p.value(r) / r;
            x.iter().map(|c| c * s).collect()
        }),
    )
    .with_jacobian(Box::new(move |x: &[f64]| {
        let r = norm(x).max(f64::MIN_POSITIVE);
        p.jacobian(r, n)
    }))
    .with_inverse(Box::new(move |y: &[f64]| {
        let v = norm(y);
        if v == 0.0 {
            return vec![0.0; y.len()];
        }
        let r = p.invert_value(v).unwrap_or(f64::NAN);
        y.iter().map(|c| c * r / v).collect()
    }));
    if let Some(m) = p.height_cap() {
        map = map.with_height_cap(m);
    }
    Ok(map)
}

/// Planar logarithmic spiral `r e^{i a} -> r e^{i (a + c ln r)}`
/// (volume preserving).
pub fn spiral_map(c: f64) -> Result<QCMap> {
    if !c.is_finite() {
        return Err(Error::invalid("spiral twist must be finite"));
    }
    let fwd = move |x: &[f64], sign: f64| -> Vec<f64> {
        let r = norm(x);
        if r == 0.0 {
            return vec![0.0, 0.0];
        }
        let turn = sign * c * r.ln();
        let (s, co) = turn.sin_cos();
        vec![co * x[0] - s * x[1], s * x[0] + co * x[1]]
    };
    Ok(QCMap::new(
        format!("spiral_c{c}"),
        2,
        Box::new(move |x: &[f64]| fwd(x, 1.0)),
    )
    .with_jacobian(Box::new(|_| 1.0))
    .with_inverse(Box::new(move |y: &[f64]| fwd(y, -1.0))))
}

// ---------------------------------------------------------------------------
// Piecewise-affine square homeomorphisms with a Koch-curve midline.
// ---------------------------------------------------------------------------

/// Affine piece of one deformation stage: a source triangle mapped onto a
/// target triangle by `x -> lin x + off`.
#[derive(Debug, Clone)]
struct AffinePiece {
    src: [[f64; 2]; 3],
    dst: [[f64; 2]; 3],
    lin: [[f64; 2]; 2],
    off: [f64; 2],
    inv_lin: [[f64; 2]; 2],
    inv_off: [f64; 2],
    det: f64,
    src_bbox: [f64; 4],
    dst_bbox: [f64; 4],
}

fn bbox_of(tri: &[[f64; 2]; 3]) -> [f64; 4] {
    let xs = [tri[0][0], tri[1][0], tri[2][0]];
    let ys = [tri[0][1], tri[1][1], tri[2][1]];
    [
        xs.iter().cloned().fold(f64::MAX, f64::min),
        xs.iter().cloned().fold(f64::MIN, f64::max),
        ys.iter().cloned().fold(f64::MAX, f64::min),
        ys.iter().cloned().fold(f64::MIN, f64::max),
    ]
}

fn in_bbox(b: &[f64; 4], p: [f64; 2], tol: f64) -> bool {
    p[0] >= b[0] - tol && p[0] <= b[1] + tol && p[1] >= b[2] - tol && p[1] <= b[3] + tol
}

fn tri_signed_area(t: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1])
        - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]))
}

fn in_triangle(t: &[[f64; 2]; 3], p: [f64; 2], tol: f64) -> bool {
    for i in 0..3 {
        let a = t[i];
        let b = t[(i + 1) % 3];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross < -tol {
            return false;
        }
    }
    true
}

fn apply_affine(lin: &[[f64; 2]; 2], off: &[f64; 2], p: [f64; 2]) -> [f64; 2] {
    [
        lin[0][0] * p[0] + lin[0][1] * p[1] + off[0],
        lin[1][0] * p[0] + lin[1][1] * p[1] + off[1],
    ]
}

impl AffinePiece {
    fn new(src: [[f64; 2]; 3], dst: [[f64; 2]; 3]) -> Result<Self> {
        let sa = tri_signed_area(&src);
        let da = tri_signed_area(&dst);
        if sa <= 0.0 || da <= 0.0 {
            return Err(Error::construction(
                "degenerate or orientation-reversing stage triangle",
            ));
        }
        // Solve lin [b - a, c - a] = [B - A, C - A].
        let e1 = [src[1][0] - src[0][0], src[1][1] - src[0][1]];
        let e2 = [src[2][0] - src[0][0], src[2][1] - src[0][1]];
        let f1 = [dst[1][0] - dst[0][0], dst[1][1] - dst[0][1]];
        let f2 = [dst[2][0] - dst[0][0], dst[2][1] - dst[0][1]];
        let det_e = e1[0] * e2[1] - e1[1] * e2[0];
        let inv_e = [
            [e2[1] / det_e, -e2[0] / det_e],
            [-e1[1] / det_e, e1[0] / det_e],
        ];
        let lin = [
            [
                f1[0] * inv_e[0][0] + f2[0] * inv_e[1][0],
                f1[0] * inv_e[0][1] + f2[0] * inv_e[1][1],
            ],
            [
                f1[1] * inv_e[0][0] + f2[1] * inv_e[1][0],
                f1[1] * inv_e[0][1] + f2[1] * inv_e[1][1],
            ],
        ];
        let off = [
            dst[0][0] - lin[0][0] * src[0][0] - lin[0][1] * src[0][1],
            dst[0][1] - lin[1][0] * src[0][0] - lin[1][1] * src[0][1],
        ];
        let det = lin[0][0] * lin[1][1] - lin[0][1] * lin[1][0];
        let inv_lin = [
            [lin[1][1] / det, -lin[0][1] / det],
            [-lin[1][0] / det, lin[0][0] / det],
        ];
        let inv_off = [
            -(inv_lin[0][0] * off[0] + inv_lin[0][1] * off[1]),
            -(inv_lin[1][0] * off[0] + inv_lin[1][1] * off[1]),
        ];
        Ok(AffinePiece {
            src,
            dst,
            lin,
            off,
            inv_lin,
            inv_off,
            det,
            src_bbox: bbox_of(&src),
            dst_bbox: bbox_of(&dst),
        })
    }

    /// Dilatation of the linear part: ratio of its singular values.
    fn dilatation(&self) -> f64 {
        let m = &self.lin;
        let a = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
        let d = self.det.abs();
        // Singular values from ||M||_F^2 and det M.
        let disc = (a * a - 4.0 * d * d).max(0.0).sqrt();
        let s_max = ((a + disc) / 2.0).sqrt();
        let s_min = ((a - disc) / 2.0).max(f64::MIN_POSITIVE).sqrt();
        s_max / s_min
    }
}

/// One deformation stage: affine pieces over the kites of the current
/// polyline edges, identity elsewhere.
#[derive(Debug, Clone)]
struct KochStage {
    pieces: Vec<AffinePiece>,
    /// Kite corner lists (for diagnostics): [Q1, Uo, Q2, Ui] per edge.
    #[cfg_attr(not(test), allow(dead_code))]
    kites: Vec<[[f64; 2]; 4]>,
    src_bbox: [f64; 4],
    dst_bbox: [f64; 4],
}

const ETA_OUT: f64 = 0.35;
const ETA_IN: f64 = 0.15;

impl KochStage {
    /// Build the stage deforming each edge of `polyline` into the Koch
    /// generator: inside the kite `[Q1, Uo, Q2, Ui]` of an edge the midpoint
    /// is carried to the apex, fanned from the kite tips.
    fn new(polyline: &[[f64; 2]]) -> Result<Self> {
        let apex_h = 3f64.sqrt() / 6.0;
        let mut pieces = Vec::new();
        let mut kites = Vec::new();
        for w in polyline.windows(2) {
            let (p0, p1) = (w[0], w[1]);
            let e = [p1[0] - p0[0], p1[1] - p0[1]];
            let nl = [-e[1], e[0]]; // left normal scaled by edge length
            let at = |f: f64, g: f64| [p0[0] + f * e[0] + g * nl[0], p0[1] + f * e[1] + g * nl[1]];
            let q1 = at(1.0 / 3.0, 0.0);
            let q2 = at(2.0 / 3.0, 0.0);
            let mid = at(0.5, 0.0);
            let uo = at(0.5, ETA_OUT);
            let ui = at(0.5, -ETA_IN);
            let apex = at(0.5, apex_h);
            pieces.push(AffinePiece::new([q1, mid, uo], [q1, apex, uo])?);
            pieces.push(AffinePiece::new([mid, q2, uo], [apex, q2, uo])?);
            pieces.push(AffinePiece::new([mid, q1, ui], [apex, q1, ui])?);
            pieces.push(AffinePiece::new([q2, mid, ui], [q2, apex, ui])?);
            kites.push([q1, uo, q2, ui]);
        }
        let merge = |sel: fn(&AffinePiece) -> &[f64; 4]| -> [f64; 4] {
            let mut b = [f64::MAX, f64::MIN, f64::MAX, f64::MIN];
            for p in &pieces {
                let pb = sel(p);
                b[0] = b[0].min(pb[0]);
                b[1] = b[1].max(pb[1]);
                b[2] = b[2].min(pb[2]);
                b[3] = b[3].max(pb[3]);
            }
            b
        };
        let src_bbox = merge(|p| &p.src_bbox);
        let dst_bbox = merge(|p| &p.dst_bbox);
        Ok(KochStage {
            pieces,
            kites,
            src_bbox,
            dst_bbox,
        })
    }

    /// Forward map with the Jacobian determinant of the piece used (1 outside).
    fn eval_with_det(&self, p: [f64; 2]) -> ([f64; 2], f64) {
        if in_bbox(&self.src_bbox, p, 0.0) {
            for piece in &self.pieces {
                if in_bbox(&piece.src_bbox, p, 0.0) && in_triangle(&piece.src, p, 1e-14) {
                    return (apply_affine(&piece.lin, &piece.off, p), piece.det);
                }
            }
        }
        (p, 1.0)
    }

    fn inverse(&self, q: [f64; 2]) -> [f64; 2] {
        if in_bbox(&self.dst_bbox, q, 0.0) {
            for piece in &self.pieces {
                if in_bbox(&piece.dst_bbox, q, 0.0) && in_triangle(&piece.dst, q, 1e-14) {
                    return apply_affine(&piece.inv_lin, &piece.inv_off, q);
                }
            }
        }
        q
    }

    fn max_dilatation(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.dilatation())
            .fold(1.0, f64::max)
    }
}

/// Koch-generator refinement of a polyline (each edge becomes four legs).
pub fn koch_refine(polyline: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let apex_h = 3f64.sqrt() / 6.0;
    let mut out = vec![polyline[0]];
    for w in polyline.windows(2) {
        let (p, q) = (w[0], w[1]);
        let e = [q[0] - p[0], q[1] - p[1]];
        let nl = [-e[1], e[0]];
        out.push([p[0] + e[0] / 3.0, p[1] + e[1] / 3.0]);
        out.push([
            p[0] + e[0] / 2.0 + apex_h * nl[0],
            p[1] + e[1] / 2.0 + apex_h * nl[1],
        ]);
        out.push([p[0] + 2.0 * e[0] / 3.0, p[1] + 2.0 * e[1] / 3.0]);
        out.push(q);
    }
    out
}

/// Homeomorphism of `[-1,1]^2` fixing the boundary and carrying the
/// horizontal midline onto the level-L Koch polyline. Built as a composition
/// of L piecewise-affine stages with disjoint kite supports per stage.
#[derive(Debug, Clone)]
pub struct SquareHomeo {
    levels: usize,
    stages: Vec<KochStage>,
    koch: Vec<[f64; 2]>,
    params: Vec<f64>,
}

impl SquareHomeo {
    pub fn new(levels: usize) -> Result<Self> {
        if levels > 8 {
            return Err(Error::invalid("midline refinement depth is capped at 8"));
        }
        let mut stages = Vec::with_capacity(levels);
        let mut koch: Vec<[f64; 2]> = vec![[-1.0, 0.0], [1.0, 0.0]];
        let mut params: Vec<f64> = vec![-1.0, 1.0];
        for _ in 0..levels {
            stages.push(KochStage::new(&koch)?);
            koch = koch_refine(&koch);
            params = refine_params(&params);
        }
        Ok(SquareHomeo {
            levels,
            stages,
            koch,
            params,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Vertices of the image of the midline: the level-L Koch polyline.
    pub fn koch_vertices(&self) -> &[[f64; 2]] {
        &self.koch
    }

    /// Midline abscissas mapped onto [`Self::koch_vertices`] in order.
    pub fn midline_parameters(&self) -> &[f64] {
        &self.params
    }

    /// Exact midline image length `2 (4/3)^L`.
    pub fn midline_length(&self) -> f64 {
        2.0 * (4.0f64 / 3.0).powi(self.levels as i32)
    }

    pub fn eval(&self, p: [f64; 2]) -> [f64; 2] {
        self.eval_with_det(p).0
    }

    /// Forward map together with the Jacobian determinant at the input point
    /// (product of the stage piece determinants along the orbit).
    pub fn eval_with_det(&self, p: [f64; 2]) -> ([f64; 2], f64) {
        let mut q = p;
        let mut det = 1.0;
        for stage in &self.stages {
            let (next, d) = stage.eval_with_det(q);
            q = next;
            det *= d;
        }
        (q, det)
    }

    pub fn inverse(&self, q: [f64; 2]) -> [f64; 2] {
        let mut p = q;
        for stage in self.stages.iter().rev() {
            p = stage.inverse(p);
        }
        p
    }

    /// Largest piece dilatation of a single stage (scale invariant, so the
    /// same for every stage).
    pub fn stage_dilatation(&self) -> f64 {
        self.stages
            .iter()
            .map(|s| s.max_dilatation())
            .fold(1.0, f64::max)
    }

    /// Composition bound: (stage dilatation)^levels.
    pub fn dilatation_bound(&self) -> f64 {
        self.stage_dilatation().powi(self.levels as i32)
    }

    #[cfg(test)]
    fn stage_kites(&self, k: usize) -> &[[[f64; 2]; 4]] {
        &self.stages[k].kites
    }
}

/// Parameter refinement matching `koch_refine`: the four generator legs of an
/// edge come from the sub-intervals split at 1/3, 1/2, 2/3.
fn refine_params(params: &[f64]) -> Vec<f64> {
    let mut out = vec![params[0]];
    for w in params.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = b - a;
        out.push(a + d / 3.0);
        out.push(a + d / 2.0);
        out.push(a + 2.0 * d / 3.0);
        out.push(b);
    }
    out
}

// ---------------------------------------------------------------------------
// Snowflake beam map.
// ---------------------------------------------------------------------------

/// Beam automorphism that is the identity outside a chain of squares
/// `S_d` (center `(1, d)`, side `1/|d|`, integer `d <= -3`) and a rescaled
/// copy of a [`SquareHomeo`] inside each, so every slice through `S_d` picks
/// up a Koch midline of length `(4/3)^L / |d|`.
#[derive(Debug, Clone)]
pub struct SnowflakeBeam {
    pub levels: usize,
    /// Most negative square index (squares run d = -3, ..., depth_min).
    pub depth_min: i64,
    homeo: SquareHomeo,
}

impl SnowflakeBeam {
    pub fn new(levels: usize, depth_min: i64) -> Result<Self> {
        if depth_min > -3 {
            return Err(Error::invalid("square chain needs depth_min <= -3"));
        }
        Ok(SnowflakeBeam {
            levels,
            depth_min,
            homeo: SquareHomeo::new(levels)?,
        })
    }

    pub fn homeo(&self) -> &SquareHomeo {
        &self.homeo
    }

    pub fn square_center(d: i64) -> [f64; 2] {
        [1.0, d as f64]
    }

    pub fn square_half_side(d: i64) -> f64 {
        0.5 / d.unsigned_abs() as f64
    }

    /// Index of the square containing the canonical point, if any.
    fn locate(&self, x1: f64, t: f64) -> Option<i64> {
        let d = t.round() as i64;
        if d > -3 || d < self.depth_min {
            return None;
        }
        let h = Self::square_half_side(d);
        if (x1 - 1.0).abs() <= h && (t - d as f64).abs() <= h {
            Some(d)
        } else {
            None
        }
    }

    /// Forward beam map with Jacobian determinant.
    pub fn eval_with_det(&self, p: &BeamPoint) -> (BeamPoint, f64) {
        let canon = p.base[0].rem_euclid(2.0);
        let offset = p.base[0] - canon;
        match self.locate(canon, p.height) {
            None => (p.clone(), 1.0),
            Some(d) => {
                let h = Self::square_half_side(d);
                let z = [(canon - 1.0) / h, (p.height - d as f64) / h];
                let (w, det) = self.homeo.eval_with_det(z);
                (
                    BeamPoint {
                        base: vec![w[0] * h + 1.0 + offset],
                        height: w[1] * h + d as f64,
                    },
                    det,
                )
            }
        }
    }

    pub fn eval(&self, p: &BeamPoint) -> BeamPoint {
        self.eval_with_det(p).0
    }

    pub fn inverse(&self, p: &BeamPoint) -> BeamPoint {
        let canon = p.base[0].rem_euclid(2.0);
        let offset = p.base[0] - canon;
        match self.locate(canon, p.height) {
            None => p.clone(),
            Some(d) => {
                let h = Self::square_half_side(d);
                let w = [(canon - 1.0) / h, (p.height - d as f64) / h];
                let z = self.homeo.inverse(w);
                BeamPoint {
                    base: vec![z[0] * h + 1.0 + offset],
                    height: z[1] * h + d as f64,
                }
            }
        }
    }

    /// Exact length of the image of the slice `[0,2] x {d}` through square
    /// `S_d`: the straight parts plus the rescaled Koch midline.
    pub fn expected_slice_length(&self, d: i64) -> f64 {
        let inv = 1.0 / d.unsigned_abs() as f64;
        2.0 - inv + (4.0f64 / 3.0).powi(self.levels as i32) * inv
    }

    /// Vertices of the image polyline of the slice `[0,2] x {d}`.
    pub fn slice_polyline(&self, d: i64) -> Result<Vec<[f64; 2]>> {
        if d > -3 || d < self.depth_min {
            return Err(Error::invalid("slice index outside the square chain"));
        }
        let h = Self::square_half_side(d);
        let mut out = vec![[0.0, d as f64]];
        for v in self.homeo.koch_vertices() {
            out.push([v[0] * h + 1.0, v[1] * h + d as f64]);
        }
        out.push([2.0, d as f64]);
        Ok(out)
    }

    /// Conjugated plane map `Z . f~ . Z^{-1}` with exact Jacobian and inverse.
    pub fn to_plane_map(self) -> QCMap {
        let label = format!("snowflake_l{}", self.levels);
        let beam = Arc::new(self);
        let z = ZorichMap::new(2).expect("n = 2 is valid");
        let b_eval = Arc::clone(&beam);
        let z_eval = z.clone();
        let b_jac = Arc::clone(&beam);
        let z_jac = z.clone();
        let b_inv = Arc::clone(&beam);
        let z_inv = z;
        QCMap::new(
            label,
            2,
            Box::new(move |y: &[f64]| {
                let p = z_eval.invert(y, None).expect("punctured plane point");
                let q = b_eval.eval(&p);
                z_eval.apply(&q).expect("valid beam point")
            }),
        )
        .with_jacobian(Box::new(move |y: &[f64]| {
            let p = z_jac.invert(y, None).expect("punctured plane point");
            let (q, det) = b_jac.eval_with_det(&p);
            (2.0 * (q.height - p.height)).exp() * det
        }))
        .with_inverse(Box::new(move |y: &[f64]| {
            let p = z_inv.invert(y, None).expect("punctured plane point");
            let q = b_inv.inverse(&p);
            z_inv.apply(&q).expect("valid beam point")
        }))
    }
}

/// Snowflake plane map with the default square chain.
pub fn snowflake_map(levels: usize, depth_min: i64) -> Result<QCMap> {
    Ok(SnowflakeBeam::new(levels, depth_min)?.to_plane_map())
}

/// Default catalog for dimension n.
pub fn zoo(n: usize) -> Result<Vec<QCMap>> {
    match n {
        2 => Ok(vec![
            identity_map(2),
            scaling_map(2, 0.5)?,
            diagonal_map(&[1.0, 4.0])?,
            radial_map(RadialProfile::Power { d: 2.0 }, 2)?,
            radial_map(RadialProfile::LogPower { d: 2.0 }, 2)?,
            spiral_map(1.0)?,
            snowflake_map(2, -12)?,
        ]),
        3 => Ok(vec![
            identity_map(3),
            scaling_map(3, 0.5)?,
            diagonal_map(&[1.0, 2.0, 4.0])?,
            radial_map(RadialProfile::Power { d: 2.0 }, 3)?,
            radial_map(RadialProfile::LogPower { d: 2.0 }, 3)?,
        ]),
        _ => Err(Error::invalid("the catalog covers n = 2, 3")),
    }
}
