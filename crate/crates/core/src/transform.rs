//! Conjugation of plane maps into logarithmic beam coordinates.
//!
//! For a map `f` of punctured n-space, the transformed map is
//! `f~ = Z^{-1} . f . Z` on the beam. Because `Z` is a covering, `Z^{-1}`
//! needs a branch choice; evaluation therefore takes a hint (or a running
//! path context) and picks the representative nearest to it, which keeps
//! finite differences and sampled paths on one continuous branch.

use crate::geometry::{BeamPoint, VecN};
use crate::mapzoo::QCMap;
use crate::zorich::ZorichMap;
use crate::{Error, Result};

/// Running branch state for walks along curves or grids.
#[derive(Debug, Clone, Default)]
pub struct PathContext {
    last: Option<BeamPoint>,
}

impl PathContext {
    pub fn new() -> Self {
        PathContext { last: None }
    }

    pub fn reset(&mut self) {
        self.last = None;
    }

    pub fn last(&self) -> Option<&BeamPoint> {
        self.last.as_ref()
    }
}

/// A plane map viewed in beam coordinates.
pub struct TransformedMap<'a> {
    map: &'a QCMap,
    zorich: ZorichMap,
}

impl<'a> TransformedMap<'a> {
    pub fn new(map: &'a QCMap) -> Result<Self> {
        Ok(TransformedMap {
            map,
            zorich: ZorichMap::new(map.dim)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.map.dim
    }

    pub fn plane_map(&self) -> &QCMap {
        self.map
    }

    pub fn zorich(&self) -> &ZorichMap {
        &self.zorich
    }

    /// Evaluate `f~` choosing the image branch nearest to `hint`
    /// (the input point itself when no hint is given).
    pub fn eval_hinted(&self, p: &BeamPoint, hint: Option<&BeamPoint>) -> Result<BeamPoint> {
        let y = self.zorich.apply(p)?;
        let fy = self.map.eval(&y);
        if fy.iter().any(|c| !c.is_finite()) {
            return Err(Error::degenerate(format!(
                "map produced a non-finite image at height {}",
                p.height
            )));
        }
        self.zorich.invert(&fy, Some(hint.unwrap_or(p)))
    }

    /// Evaluate `f~` continuing the branch of the previous call.
    pub fn eval_on_path(&self, p: &BeamPoint, ctx: &mut PathContext) -> Result<BeamPoint> {
        let hint = ctx.last.clone();
        let q = self.eval_hinted(p, hint.as_ref())?;
        ctx.last = Some(q.clone());
        Ok(q)
    }

    /// Image of the planar slice `[0,2] x {t}` as a continuous polyline of
    /// `samples + 1` points.
    pub fn slice_image_polyline(&self, t: f64, samples: usize) -> Result<Vec<BeamPoint>> {
        if self.dim() != 2 {
            return Err(Error::invalid("slice polylines are planar"));
        }
        if samples < 1 {
            return Err(Error::invalid("need at least one sample interval"));
        }
        let mut ctx = PathContext::new();
        let mut out = Vec::with_capacity(samples + 1);
        for k in 0..=samples {
            let x1 = 2.0 * k as f64 / samples as f64;
            let p = BeamPoint::new(vec![x1], t)?;
            out.push(self.eval_on_path(&p, &mut ctx)?);
        }
        Ok(out)
    }

    /// Partial derivatives of `f~` along the base directions at fixed height
    /// (tangent vectors of the image slice), by branch-consistent central
    /// differences with a one-sided fallback across creases.
    ///
    /// `bound_hint` is a rough bound on the derivative magnitude; differences
    /// exceeding `10 * step * bound_hint` are treated as crease jumps.
    pub fn slice_partials(
        &self,
        p: &BeamPoint,
        step: f64,
        bound_hint: f64,
    ) -> Result<Vec<VecN>> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("difference step must be positive"));
        }
        let n = self.dim();
        let center = self.eval_hinted(p, Some(p))?;
        let threshold = 10.0 * step * bound_hint.max(1.0);
        let as_vec = |b: &BeamPoint| {
            let mut v = b.base.clone();
            v.push(b.height);
            v
        };
        let c = as_vec(&center);
        let mut out = Vec::with_capacity(n - 1);
        for axis in 0..n - 1 {
            let shifted = |s: f64| -> Result<Vec<f64>> {
                let mut q = p.clone();
                q.base[axis] += s;
                Ok(as_vec(&self.eval_hinted(&q, Some(&center))?))
            };
            let fwd = shifted(step)?;
            let bwd = shifted(-step)?;
            let gap: f64 = fwd
                .iter()
                .zip(&bwd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let deriv: Vec<f64> = if gap <= threshold {
                fwd.iter()
                    .zip(&bwd)
                    .map(|(a, b)| (a - b) / (2.0 * step))
                    .collect()
            } else {
                // Crease: pick the side with the smaller curvature residual.
                let fwd2 = shifted(2.0 * step)?;
                let bwd2 = shifted(-2.0 * step)?;
                let resid = |far: &[f64], near: &[f64]| -> f64 {
                    far.iter()
                        .zip(near)
                        .zip(&c)
                        .map(|((f2, f1), c0)| {
                            let r = f2 - 2.0 * f1 + c0;
                            r * r
                        })
                        .sum::<f64>()
                        .sqrt()
                };
                let rf = resid(&fwd2, &fwd);
                let rb = resid(&bwd2, &bwd);
                if rf <= rb {
                    fwd.iter().zip(&c).map(|(a, b)| (a - b) / step).collect()
                } else {
                    c.iter().zip(&bwd).map(|(a, b)| (a - b) / step).collect()
                }
            };
            out.push(VecN::new(deriv)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapzoo::{
        diagonal_map, identity_map, radial_map, scaling_map, snowflake_map, spiral_map, zoo,
        RadialProfile,
    };
    use rand::Rng;

    fn beam_norm(p: &BeamPoint, q: &BeamPoint) -> f64 {
        p.dist(q)
    }

    #[test]
    fn functional_equation_holds_across_the_zoo() {
        for n in [2usize, 3] {
            for map in zoo(n).unwrap() {
                let tr = TransformedMap::new(&map).unwrap();
                let mut rng = crate::rng::substream(61, n as u64);
                let cap = map.height_cap.unwrap_or(0.0) - 0.2;
                for _ in 0..(10_000 / n) {
                    let base: Vec<f64> =
                        (0..n - 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    let t = cap - rng.gen_range(0.0..10.0);
                    let p = BeamPoint::new(base, t).unwrap();
                    let q = tr.eval_on_path(&p, &mut PathContext::new()).unwrap();
                    let lhs = tr.zorich().apply(&q).unwrap();
                    let rhs = map.eval(&tr.zorich().apply(&p).unwrap());
                    let scale = rhs.iter().map(|c| c * c).sum::<f64>().sqrt();
                    let err = lhs
                        .iter()
                        .zip(&rhs)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    assert!(
                        err <= 1e-8 * scale.max(1e-12),
                        "{} (n={n}): defect {err} at t={t}",
                        map.label
                    );
                }
            }
        }
    }

    #[test]
    fn identity_transforms_to_identity() {
        for n in [2usize, 3] {
            let map = identity_map(n);
            let tr = TransformedMap::new(&map).unwrap();
            let mut rng = crate::rng::substream(62, n as u64);
            for _ in 0..300 {
                let base: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-4.0..4.0)).collect();
                let p = BeamPoint::new(base, rng.gen_range(-3.0..3.0)).unwrap();
                let q = tr.eval_hinted(&p, Some(&p)).unwrap();
                assert!(beam_norm(&p, &q) < 1e-10, "identity moved {p:?} -> {q:?}");
            }
        }
    }

    #[test]
    fn scaling_transforms_to_height_shift() {
        let map = scaling_map(2, 0.5).unwrap();
        let tr = TransformedMap::new(&map).unwrap();
        let mut rng = crate::rng::substream(63, 0);
        for _ in 0..300 {
            let p = BeamPoint::new(vec![rng.gen_range(-2.0..2.0)], rng.gen_range(-3.0..1.0))
                .unwrap();
            let q = tr.eval_hinted(&p, Some(&p)).unwrap();
            assert!((q.base[0] - p.base[0]).abs() < 1e-10);
            assert!((q.height - (p.height - 2f64.ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_powers_scale_heights() {
        for n in [2usize, 3] {
            let map = radial_map(RadialProfile::Power { d: 2.0 }, n).unwrap();
            let tr = TransformedMap::new(&map).unwrap();
            let mut rng = crate::rng::substream(64, n as u64);
            for _ in 0..300 {
                let base: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..2.0)).collect();
                let t = rng.gen_range(-3.0..-0.1);
                let p = BeamPoint::new(base, t).unwrap();
                let q = tr.eval_hinted(&p, Some(&p)).unwrap();
                for (a, b) in q.base.iter().zip(&p.base) {
                    assert!((a - b).abs() < 1e-9, "base moved under a radial map");
                }
                assert!((q.height - 2.0 * t).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log_power_heights_follow_the_profile() {
        let profile = RadialProfile::LogPower { d: 2.0 };
        let map = radial_map(profile, 2).unwrap();
        let tr = TransformedMap::new(&map).unwrap();
        for t in [-1.5, -2.0, -5.0, -11.0, -30.0] {
            let p = BeamPoint::new(vec![0.7], t).unwrap();
            let q = tr.eval_hinted(&p, Some(&p)).unwrap();
            assert!((q.base[0] - 0.7).abs() < 1e-9);
            assert!(
                (q.height - profile.log_value(t)).abs() < 1e-10,
                "t={t}: height {} vs {}",
                q.height,
                profile.log_value(t)
            );
        }
    }

    #[test]
    fn spiral_transforms_to_a_shear() {
        let c = 1.0;
        let map = spiral_map(c).unwrap();
        let tr = TransformedMap::new(&map).unwrap();
        let mut rng = crate::rng::substream(65, 0);
        for _ in 0..300 {
            let p = BeamPoint::new(vec![rng.gen_range(0.0..2.0)], rng.gen_range(-6.0..0.0))
                .unwrap();
            let q = tr.eval_hinted(&p, Some(&p)).unwrap();
            let want = p.base[0] + c * p.height / std::f64::consts::PI;
            // Hint selection may fold the shear back near the input; compare
            // modulo the deck translations.
            let diff = (q.base[0] - want).rem_euclid(2.0).min(
                (want - q.base[0]).rem_euclid(2.0),
            );
            assert!(diff < 1e-10, "shear defect {diff}");
            assert!((q.height - p.height).abs() < 1e-12);
        }
    }

    #[test]
    fn spiral_slice_polyline_is_an_exact_translate() {
        let c = 10.0;
        let map = spiral_map(c).unwrap();
        let tr = TransformedMap::new(&map).unwrap();
        let t = -5.0;
        let poly = tr.slice_image_polyline(t, 400).unwrap();
        let shift = c * t / std::f64::consts::PI;
        // Path continuity pins the whole curve to a single branch: points sit
        // at x1 + shift up to one global deck translation.
        let offset = poly[0].base[0] - shift;
        let k = (offset / 2.0).round() * 2.0;
        for (i, q) in poly.iter().enumerate() {
            let x1 = 2.0 * i as f64 / 400.0;
            assert!(
                (q.base[0] - (x1 + shift + k)).abs() < 1e-9,
                "point {i} off the translate"
            );
            assert!((q.height - t).abs() < 1e-12);
        }
        // Total length is exactly the slice length 2.
        let len: f64 = poly.windows(2).map(|w| w[0].dist(&w[1])).sum();
        assert!((len - 2.0).abs() < 1e-9, "slice image length {len}");
    }

    #[test]
    fn slice_partials_match_closed_forms() {
        // Identity: the x1-tangent is e_1.
        let id = identity_map(2);
        let tr = TransformedMap::new(&id).unwrap();
        let p = BeamPoint::new(vec![0.3], -1.0).unwrap();
        let d = tr.slice_partials(&p, 1e-5, 1.0).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].get(0) - 1.0).abs() < 1e-9 && d[0].get(1).abs() < 1e-9);
        // Power map: still e_1 (heights scale, bases are fixed).
        let pw = radial_map(RadialProfile::Power { d: 2.0 }, 2).unwrap();
        let tr = TransformedMap::new(&pw).unwrap();
        let d = tr.slice_partials(&p, 1e-5, 2.0).unwrap();
        assert!((d[0].get(0) - 1.0).abs() < 1e-8 && d[0].get(1).abs() < 1e-8);
        // Spiral: the shear has slice tangent e_1 as well.
        let sp = spiral_map(2.0).unwrap();
        let tr = TransformedMap::new(&sp).unwrap();
        let d = tr.slice_partials(&p, 1e-5, 2.0).unwrap();
        assert!((d[0].get(0) - 1.0).abs() < 1e-8 && d[0].get(1).abs() < 1e-8);
        // Diagonal map in R^3: partials stay finite and the cross product is
        // a sound normal (orthogonality check).
        let dg = diagonal_map(&[1.0, 2.0, 4.0]).unwrap();
        let tr = TransformedMap::new(&dg).unwrap();
        let p3 = BeamPoint::new(vec![0.3, 0.8], -1.5).unwrap();
        let parts = tr.slice_partials(&p3, 1e-5, 4.0).unwrap();
        let normal = crate::geometry::generalized_cross(&parts).unwrap();
        for v in &parts {
            assert!(normal.dot(v).abs() < 1e-6 * normal.norm() * v.norm());
        }
    }

    #[test]
    fn slice_partials_survive_creases() {
        // Snowflake map: probe across kite boundaries on a slice through a
        // square; derivatives must stay finite and bounded.
        let map = snowflake_map(2, -12).unwrap();
        let tr = TransformedMap::new(&map).unwrap();
        let d = -4i64;
        let mut rng = crate::rng::substream(66, 0);
        for _ in 0..200 {
            let x1 = 1.0 + rng.gen_range(-0.13..0.13);
            let p = BeamPoint::new(vec![x1], d as f64 + rng.gen_range(-0.1..0.1)).unwrap();
            let parts = tr.slice_partials(&p, 1e-6, 4.0).unwrap();
            let norm = parts[0].norm();
            assert!(norm.is_finite() && norm > 0.05 && norm < 20.0, "tangent norm {norm}");
        }
    }
}
