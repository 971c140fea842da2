//! Zorich-type covering maps from the beam onto punctured space.
//!
//! `Z(x, t) = e^t psi(x)`: the height sets the radius, the base sets a
//! direction on the unit sphere. The direction map `psi` is invariant under a
//! discrete group of base isometries, so `Z` descends to the beam quotient,
//! and it covers `R^n \ {0}` with an explicit inverse.
//!
//! For n = 2 the direction is `(cos pi x, sin pi x)` with period 2. For n = 3
//! the base plane is folded onto the unit square by coordinatewise tent maps,
//! the square is carried onto the upper hemisphere (radial squash of the
//! square onto the disk, then an equidistant azimuthal lift), and a
//! checkerboard parity decides upper versus lower hemisphere. The invariance
//! group is generated by even translations together with `u -> -u`.

use crate::geometry::{BeamPoint, LatticeGroup};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Covering map of the punctured plane (n = 2) or punctured space (n = 3).
#[derive(Debug, Clone)]
pub struct ZorichMap {
    n: usize,
}

/// Tent fold with period 2 mapping R onto [0, 1].
fn tent(v: f64) -> f64 {
    let w = v.rem_euclid(2.0);
    if w <= 1.0 {
        w
    } else {
        2.0 - w
    }
}

/// Checkerboard parity of the unit base cell containing `u`.
fn cell_parity(u: &[f64]) -> bool {
    let s = u[0].floor() as i64 + u[1].floor() as i64;
    s.rem_euclid(2) == 1
}

/// Homeomorphism of the unit square onto the closed upper hemisphere.
///
/// Recentre to `[-1,1]^2`, squash radially onto the unit disk (sup-norm
/// spheres go to circles), then lift by the equidistant azimuthal map, which
/// is linear in the polar radius. The square boundary lands on the equator.
fn square_to_hemisphere(s0: f64, s1: f64) -> [f64; 3] {
    let v = [2.0 * s0 - 1.0, 2.0 * s1 - 1.0];
    let sup = v[0].abs().max(v[1].abs());
    if sup == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    let eu = v[0].hypot(v[1]);
    let theta = 0.5 * PI * sup;
    let (sin_t, cos_t) = theta.sin_cos();
    [sin_t * v[0] / eu, sin_t * v[1] / eu, cos_t]
}

/// Inverse of [`square_to_hemisphere`] on the closed upper hemisphere.
fn hemisphere_to_square(y: &[f64; 3]) -> [f64; 2] {
    let theta = y[2].clamp(-1.0, 1.0).acos();
    let sup = 2.0 * theta / PI;
    let pr = y[0].hypot(y[1]);
    if sup <= 0.0 || pr == 0.0 {
        return [0.5, 0.5];
    }
    let dir = [y[0] / pr, y[1] / pr];
    let dsup = dir[0].abs().max(dir[1].abs());
    let v = [dir[0] * sup / dsup, dir[1] * sup / dsup];
    [0.5 * (v[0] + 1.0), 0.5 * (v[1] + 1.0)]
}

impl ZorichMap {
    pub fn new(n: usize) -> Result<Self> {
        if n == 2 || n == 3 {
            Ok(ZorichMap { n })
        } else {
            Err(Error::invalid("Zorich maps are provided for n = 2, 3"))
        }
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Invariance group acting on beam points.
    pub fn group(&self) -> LatticeGroup {
        LatticeGroup::for_dim(self.n).expect("n was validated")
    }

    /// Unit direction `psi(base)` on the sphere.
    pub fn direction(&self, base: &[f64]) -> Result<Vec<f64>> {
        if base.len() != self.n - 1 {
            return Err(Error::invalid("base dimension mismatch"));
        }
        match self.n {
            2 => {
                let a = PI * base[0];
                Ok(vec![a.cos(), a.sin()])
            }
            _ => {
                let folded = (tent(base[0]), tent(base[1]));
                let mut y = square_to_hemisphere(folded.0, folded.1);
                if cell_parity(base) {
                    y[2] = -y[2];
                }
                Ok(y.to_vec())
            }
        }
    }

    /// Evaluate `Z(x, t) = e^t psi(x)`.
    pub fn apply(&self, p: &BeamPoint) -> Result<Vec<f64>> {
        let dir = self.direction(&p.base)?;
        let r = p.height.exp();
        Ok(dir.into_iter().map(|c| c * r).collect())
    }

    /// Jacobian determinant magnitude, available in closed form for n = 2:
    /// `|J_Z(x, t)| = pi e^{2t}`.
    pub fn jacobian_det(&self, p: &BeamPoint) -> Option<f64> {
        match self.n {
            2 => Some(PI * (2.0 * p.height).exp()),
            _ => None,
        }
    }

    /// Canonical representative in the fundamental cell
    /// `[0,1]^{n-2} x [0,2)` (same height).
    pub fn canonicalize(&self, p: &BeamPoint) -> BeamPoint {
        match self.n {
            2 => BeamPoint {
                base: vec![p.base[0].rem_euclid(2.0)],
                height: p.height,
            },
            _ => {
                let mut u0 = p.base[0].rem_euclid(2.0);
                let mut u1 = p.base[1].rem_euclid(2.0);
                if u0 > 1.0 {
                    u0 = 2.0 - u0;
                    u1 = (2.0 - u1).rem_euclid(2.0);
                }
                BeamPoint {
                    base: vec![u0, u1],
                    height: p.height,
                }
            }
        }
    }

    /// Preimage of `y`. Without a hint the canonical representative is
    /// returned; with a hint, the group representative whose base is
    /// Euclidean-nearest to the hint's base.
    pub fn invert(&self, y: &[f64], hint: Option<&BeamPoint>) -> Result<BeamPoint> {
        if y.len() != self.n {
            return Err(Error::invalid("image point dimension mismatch"));
        }
        let r = y.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain("the puncture at the origin is not covered"));
        }
        let t = r.ln();
        let canon: Vec<f64> = match self.n {
            2 => vec![(y[1].atan2(y[0]) / PI).rem_euclid(2.0)],
            _ => {
                let unit = [y[0] / r, y[1] / r, y[2] / r];
                let lower = unit[2] < 0.0;
                let up = if lower {
                    [unit[0], unit[1], -unit[2]]
                } else {
                    unit
                };
                let s = hemisphere_to_square(&up);
                if lower {
                    vec![s[0], 2.0 - s[1]]
                } else {
                    vec![s[0], s[1]]
                }
            }
        };
        let base = match hint {
            None => canon,
            Some(h) => nearest_representative(self.n, &canon, &h.base),
        };
        BeamPoint::new(base, t)
    }

    /// Maximum of `|Z(g x) - Z(x)| / e^t` over random points and random group
    /// elements; zero for an exactly automorphic map.
    pub fn automorphy_defect(&self, samples: usize, seed: u64) -> f64 {
        use rand::Rng;
        let group = self.group();
        let mut rng = crate::rng::substream(seed, 9001);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let base: Vec<f64> = (0..self.n - 1).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let height = rng.gen_range(-2.0..2.0);
            let p = BeamPoint { base, height };
            let g = &group.elements[rng.gen_range(0..group.elements.len())];
            let q = g.apply(&p);
            let a = self.apply(&p).expect("valid point");
            let b = self.apply(&q).expect("valid point");
            let d = a
                .iter()
                .zip(&b)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(d / height.exp());
        }
        worst
    }

    /// Measured bracket `(min, max)` of the slice comparability ratio
    /// `|Z(x) - Z(y)| / (e^t d(x, y))` over random same-height pairs, where
    /// `d` is the quotient distance. For n = 2 the exact range is `[2, pi]`.
    pub fn slice_ratio_report(&self, t: f64, pairs: usize, seed: u64) -> Result<(f64, f64)> {
        use rand::Rng;
        let group = self.group();
        let mut rng = crate::rng::substream(seed, 9002);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let scale = t.exp();
        for _ in 0..pairs {
            let sample = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
                match self.n {
                    2 => vec![rng.gen_range(0.0..2.0)],
                    _ => vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0)],
                }
            };
            let p = BeamPoint {
                base: sample(&mut rng),
                height: t,
            };
            let q = BeamPoint {
                base: sample(&mut rng),
                height: t,
            };
            let d = crate::geometry::quotient_distance(&p, &q, &group)?;
            if d < 1e-6 {
                continue;
            }
            let a = self.apply(&p)?;
            let b = self.apply(&q)?;
            let img = a
                .iter()
                .zip(&b)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            let ratio = img / (scale * d);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        if !lo.is_finite() {
            return Err(Error::estimation("no usable slice pairs were sampled"));
        }
        Ok((lo, hi))
    }
}

/// Base of the group representative of `canon` nearest to `hint`.
fn nearest_representative(n: usize, canon: &[f64], hint: &[f64]) -> Vec<f64> {
    match n {
        2 => {
            let k0 = ((hint[0] - canon[0]) / 2.0).round();
            let mut best = canon[0] + 2.0 * k0;
            for dk in [-1.0, 1.0] {
                let c = canon[0] + 2.0 * (k0 + dk);
                if (c - hint[0]).abs() < (best - hint[0]).abs() {
                    best = c;
                }
            }
            vec![best]
        }
        _ => {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for sign in [1.0, -1.0] {
                let b = [sign * canon[0], sign * canon[1]];
                let j0 = ((hint[0] - b[0]) / 2.0).round();
                let k0 = ((hint[1] - b[1]) / 2.0).round();
                for dj in -1..=1 {
                    for dk in -1..=1 {
                        let c = vec![
                            b[0] + 2.0 * (j0 + dj as f64),
                            b[1] + 2.0 * (k0 + dk as f64),
                        ];
                        let d = (c[0] - hint[0]).powi(2) + (c[1] - hint[1]).powi(2);
                        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                            best = Some((d, c));
                        }
                    }
                }
            }
            best.expect("candidate set is non-empty").1
        }
    }
}
