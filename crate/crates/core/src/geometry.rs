//! Exact-geometry kernel shared by every other module.
//!
//! Contents: dense vectors with dimension checks, beam points and slice boxes,
//! the generalized cross product of n-1 vectors in R^n, the power-sum
//! inequality used by the volume lower bound, unit-ball volumes, subdivision
//! of a beam slab into congruent boxes, and the quotient metric induced by a
//! discrete group of base isometries.

use crate::{Error, Result};

/// Dense vector in R^n, n >= 2, finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct VecN {
    coords: Vec<f64>,
}

impl VecN {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid("VecN needs dimension >= 2"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("VecN entries must be finite"));
        }
        Ok(VecN { coords })
    }

    /// Zero vector of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        VecN { coords: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn dot(&self, other: &VecN) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, other: &VecN) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> VecN {
        VecN {
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &VecN) -> VecN {
        VecN {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &VecN) -> VecN {
        VecN {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Point of the beam `R^{n-1} x R`: base coordinates plus a height.
///
/// The base is unrestricted (arbitrary representatives are allowed); the
/// canonical fundamental cell is `[0,1]^{n-2} x [0,2]`, see
/// [`crate::zorich::ZorichMap::canonicalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPoint {
    pub base: Vec<f64>,
    pub height: f64,
}

impl BeamPoint {
    pub fn new(base: Vec<f64>, height: f64) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::invalid("beam base must have >= 1 coordinate"));
        }
        if base.iter().any(|c| !c.is_finite()) || !height.is_finite() {
            return Err(Error::invalid("beam coordinates must be finite"));
        }
        Ok(BeamPoint { base, height })
    }

    /// Ambient dimension n (base dimension + 1).
    pub fn dim(&self) -> usize {
        self.base.len() + 1
    }

    /// Euclidean distance between representatives (not the quotient metric).
    pub fn dist(&self, other: &BeamPoint) -> f64 {
        let mut s = (self.height - other.height).powi(2);
        for (a, b) in self.base.iter().zip(&other.base) {
            s += (a - b) * (a - b);
        }
        s.sqrt()
    }

    /// True if the height lies below the cap `m` (membership in the half-beam).
    pub fn in_half_beam(&self, m: f64) -> bool {
        self.height < m
    }
}

/// One box `T_i x [t0, t0 + t]` of a subdivided slab.
#[derive(Debug, Clone)]
pub struct BoxP {
    /// Index in the subdivision enumeration.
    pub index: usize,
    /// Minimal corner of the base cube `T_i` (n-1 coordinates).
    pub corner: Vec<f64>,
    /// Side length of the base cube.
    pub side: f64,
    /// Lower height of the slab.
    pub t0: f64,
    /// Height extent of the slab.
    pub t: f64,
}

impl BoxP {
    pub fn center(&self) -> BeamPoint {
        BeamPoint {
            base: self.corner.iter().map(|c| c + 0.5 * self.side).collect(),
            height: self.t0 + 0.5 * self.t,
        }
    }

    /// Base-cell center at the lower slab height (used for midpoint sums).
    pub fn base_center(&self) -> BeamPoint {
        BeamPoint {
            base: self.corner.iter().map(|c| c + 0.5 * self.side).collect(),
            height: self.t0,
        }
    }

    pub fn contains(&self, p: &BeamPoint) -> bool {
        if p.height < self.t0 || p.height > self.t0 + self.t {
            return false;
        }
        self.corner
            .iter()
            .zip(&p.base)
            .all(|(c, x)| *x >= *c && *x <= *c + self.side)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.corner.len() as i32) * self.t
    }
}

/// Determinant by LU decomposition with partial pivoting (small dense m x m).
fn det_lu(mut a: Vec<Vec<f64>>) -> f64 {
    let m = a.len();
    let mut det = 1.0;
    for col in 0..m {
        let (mut pivot, mut pv) = (col, a[col][col].abs());
        for (r, row) in a.iter().enumerate().skip(col + 1) {
            if row[col].abs() > pv {
                pivot = r;
                pv = row[col].abs();
            }
        }
        if pv == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for c in col..m {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    det
}

/// Determinant of the minor obtained by deleting column `skip` from the
/// (n-1) x n matrix whose rows are `rows`.
fn minor_det(rows: &[VecN], skip: usize) -> f64 {
    let m = rows.len();
    match m {
        1 => {
            let keep = if skip == 0 { 1 } else { 0 };
            rows[0].get(keep)
        }
        2 => {
            let cols: Vec<usize> = (0..3).filter(|&c| c != skip).collect();
            rows[0].get(cols[0]) * rows[1].get(cols[1])
                - rows[0].get(cols[1]) * rows[1].get(cols[0])
        }
        3 => {
            let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
            let e = |r: usize, c: usize| rows[r].get(cols[c]);
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        }
        _ => {
            let cols: Vec<usize> = (0..m + 1).filter(|&c| c != skip).collect();
            let a: Vec<Vec<f64>> = rows
                .iter()
                .map(|row| cols.iter().map(|&c| row.get(c)).collect())
                .collect();
            det_lu(a)
        }
    }
}

/// Generalized cross product of n-1 vectors in R^n.
///
/// Defined by cofactor expansion along a symbolic top row `e_1 ... e_n`; the
/// result is orthogonal to every input and its Euclidean norm equals the
/// (n-1)-volume of the spanned parallelepiped.
pub fn generalized_cross(vectors: &[VecN]) -> Result<VecN> {
    if vectors.is_empty() {
        return Err(Error::invalid("generalized cross product needs >= 1 vector"));
    }
    let n = vectors[0].dim() .max(2);
    if vectors.len() != n - 1 {
        return Err(Error::invalid(format!(
            "generalized cross product in R^{n} needs exactly {} vectors, got {}",
            n - 1,
            vectors.len()
        )));
    }
    if vectors.iter().any(|v| v.dim() != n) {
        return Err(Error::invalid("mixed dimensions in generalized cross product"));
    }
    let mut out = vec![0.0; n];
    for (j, o) in out.iter_mut().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *o = sign * minor_det(vectors, j);
    }
    VecN::new(out)
}

/// Power-sum inequality: for non-negative `x` and integer `n >= 2`,
/// `sum x_i^n >= N^{1/(1-n)} (sum x_i^{n-1})^{n/(n-1)}`.
///
/// Returns `(lhs, rhs)` so callers can assert the orientation themselves.
pub fn lp_power_bound(x: &[f64], n: u32) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::invalid("lp_power_bound needs n >= 2"));
    }
    if x.is_empty() {
        return Err(Error::invalid("lp_power_bound needs a non-empty sample"));
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("lp_power_bound needs finite non-negative entries"));
    }
    let big_n = x.len() as f64;
    let p = n as f64;
    let lhs: f64 = x.iter().map(|v| v.powf(p)).sum();
    let lower: f64 = x.iter().map(|v| v.powf(p - 1.0)).sum();
    let rhs = big_n.powf(1.0 / (1.0 - p)) * lower.powf(p / (p - 1.0));
    Ok((lhs, rhs))
}

/// Volume of the unit ball in R^n via the two-step recurrence
/// `V_n = V_{n-2} * 2 pi / n` (exact for the gamma-function formula).
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("unit_ball_volume needs n >= 2"));
    }
    let mut even = 1.0; // V_0
    let mut odd = 2.0; // V_1
    for k in 2..=n {
        let next = 2.0 * std::f64::consts::PI / k as f64;
        if k % 2 == 0 {
            even *= next;
        } else {
            odd *= next;
        }
    }
    Ok(if n % 2 == 0 { even } else { odd })
}

/// Subdivide the slab `Q x [t0, t0+t]` (base `[0,1]^{n-2} x [0,2]`) into
/// congruent boxes with base cubes of side `1/floor(1/t)`.
///
/// The side `s` satisfies `t <= s <= 2t` for `t` in `(0, 1/2]`, the box count
/// is `N = 2 floor(1/t)^{n-1}`, and `N * s^{n-1} = 2` exactly.
pub fn subdivide_slice(t0: f64, t: f64, n: usize) -> Result<Vec<BoxP>> {
    if n < 2 {
        return Err(Error::invalid("subdivide_slice needs n >= 2"));
    }
    if !(t.is_finite() && t > 0.0 && t <= 0.5) {
        return Err(Error::invalid("subdivide_slice needs 0 < t <= 1/2"));
    }
    if !t0.is_finite() {
        return Err(Error::invalid("subdivide_slice needs finite t0"));
    }
    let k = (1.0 / t).floor() as usize; // cells per unit length
    let side = 1.0 / k as f64;
    // Axis cell counts: n-2 axes of length 1, one axis of length 2.
    let mut counts = vec![k; n - 1];
    counts[n - 2] = 2 * k;
    let total: usize = counts.iter().product();
    let mut boxes = Vec::with_capacity(total);
    let mut idx = vec![0usize; n - 1];
    for index in 0..total {
        let corner: Vec<f64> = idx.iter().map(|&i| i as f64 * side).collect();
        boxes.push(BoxP {
            index,
            corner,
            side,
            t0,
            t,
        });
        // Odometer increment.
        for axis in 0..n - 1 {
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
    Ok(boxes)
}

/// One element of the discrete automorphy group acting on beam points:
/// an orthogonal action on the base followed by a base translation.
/// Heights are always preserved.
#[derive(Debug, Clone)]
pub struct LatticeGroupElement {
    /// Row-major orthogonal matrix on the base, `None` meaning identity.
    pub orthogonal: Option<Vec<Vec<f64>>>,
    /// Base translation applied after the orthogonal part.
    pub translation: Vec<f64>,
}

impl LatticeGroupElement {
    pub fn identity(base_dim: usize) -> Self {
        LatticeGroupElement {
            orthogonal: None,
            translation: vec![0.0; base_dim],
        }
    }

    pub fn apply(&self, p: &BeamPoint) -> BeamPoint {
        let base = match &self.orthogonal {
            None => p
                .base
                .iter()
                .zip(&self.translation)
                .map(|(x, t)| x + t)
                .collect(),
            Some(m) => m
                .iter()
                .zip(&self.translation)
                .map(|(row, t)| {
                    row.iter().zip(&p.base).map(|(a, x)| a * x).sum::<f64>() + t
                })
                .collect(),
        };
        BeamPoint {
            base,
            height: p.height,
        }
    }
}

/// A bounded enumeration of group elements, sufficient to realize quotient
/// distances between points within a couple of fundamental cells.
#[derive(Debug, Clone)]
pub struct LatticeGroup {
    pub base_dim: usize,
    pub elements: Vec<LatticeGroupElement>,
}

impl LatticeGroup {
    /// Group of the planar beam: translations by multiples of 2 in the single
    /// base coordinate (enumerated within +/- 2 periods).
    pub fn planar() -> Self {
        let elements = (-2i32..=2)
            .map(|j| LatticeGroupElement {
                orthogonal: None,
                translation: vec![2.0 * j as f64],
            })
            .collect();
        LatticeGroup {
            base_dim: 1,
            elements,
        }
    }

    /// Group of the spatial beam: even translations of the 2-d base combined
    /// with the point rotation `u -> -u` (checkerboard parity symmetry of the
    /// folding), enumerated within +/- 2 periods per axis.
    pub fn spatial() -> Self {
        let mut elements = Vec::new();
        for &neg in &[false, true] {
            for j in -2i32..=2 {
                for k in -2i32..=2 {
                    let orthogonal = if neg {
                        Some(vec![vec![-1.0, 0.0], vec![0.0, -1.0]])
                    } else {
                        None
                    };
                    elements.push(LatticeGroupElement {
                        orthogonal,
                        translation: vec![2.0 * j as f64, 2.0 * k as f64],
                    });
                }
            }
        }
        LatticeGroup {
            base_dim: 2,
            elements,
        }
    }

    /// Standard group for ambient dimension `n` (2 or 3).
    pub fn for_dim(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Self::planar()),
            3 => Ok(Self::spatial()),
            _ => Err(Error::invalid("lattice groups are provided for n = 2, 3")),
        }
    }
}

/// Quotient (beam) distance: minimum of `|x - g(y)|` over the bounded group
/// enumeration. Symmetric for representatives within the enumerated range.
pub fn quotient_distance(x: &BeamPoint, y: &BeamPoint, group: &LatticeGroup) -> Result<f64> {
    if x.base.len() != group.base_dim || y.base.len() != group.base_dim {
        return Err(Error::invalid("beam point dimension mismatch with group"));
    }
    let mut best = f64::INFINITY;
    for g in &group.elements {
        let gy = g.apply(y);
        let d = x.dist(&gy);
        if d < best {
            best = d;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Independent log-gamma via the Lanczos series (test oracle only).
    fn ln_gamma(x: f64) -> f64 {
        const G: [f64; 9] = [
            0.999_999_999_999_809_93,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_13,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = G[0];
        let t = x + 7.5;
        for (i, g) in G.iter().enumerate().skip(1) {
            a += g / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }

    #[test]
    fn cross_product_planar_rotation() {
        // Single vector in R^2: quarter-turn clockwise.
        let v = VecN::new(vec![1.0, 0.0]).unwrap();
        let out = generalized_cross(&[v]).unwrap();
        assert_eq!(out.as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn cross_product_spatial_basis() {
        let e1 = VecN::new(vec![1.0, 0.0, 0.0]).unwrap();
        let e2 = VecN::new(vec![0.0, 1.0, 0.0]).unwrap();
        let out = generalized_cross(&[e1, e2]).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0, 1.0]);
    }

    /// Gram-determinant oracle via Cholesky (independent of the cofactor path).
    fn gram_volume(vectors: &[VecN]) -> f64 {
        let m = vectors.len();
        let mut g = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                g[i][j] = vectors[i].dot(&vectors[j]);
            }
        }
        // Cholesky: det(G) = prod l_kk^2.
        let mut det = 1.0;
        let mut l = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let mut s = g[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= 0.0 {
                        return 0.0;
                    }
                    l[i][i] = s.sqrt();
                    det *= s;
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        det.sqrt()
    }

    #[test]
    fn cross_product_orthogonality_and_norm() {
        let mut rng = crate::rng::substream(11, 0);
        for n in 2..=5 {
            for _ in 0..200 {
                let vs: Vec<VecN> = (0..n - 1)
                    .map(|_| {
                        VecN::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
                    })
                    .collect();
                let pi = generalized_cross(&vs).unwrap();
                for v in &vs {
                    let scale = v.norm() * pi.norm().max(1.0);
                    assert!(
                        pi.dot(v).abs() <= 1e-10 * scale.max(1.0),
                        "orthogonality violated in R^{n}"
                    );
                }
                let vol = gram_volume(&vs);
                assert!(
                    (pi.norm() - vol).abs() <= 1e-8 * vol.max(1.0),
                    "norm {} != parallelepiped volume {} in R^{n}",
                    pi.norm(),
                    vol
                );
            }
        }
    }

    #[test]
    fn cross_product_rejects_bad_counts() {
        let e1 = VecN::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(generalized_cross(&[e1]).is_err());
    }

    #[test]
    fn lp_power_bound_example() {
        let (lhs, rhs) = lp_power_bound(&[3.0, 4.0], 2).unwrap();
        assert_eq!(lhs, 25.0);
        assert!((rhs - 24.5).abs() < 1e-12);
    }

    #[test]
    fn lp_power_bound_orientation_random() {
        let mut rng = crate::rng::substream(12, 0);
        for _ in 0..1000 {
            let len = rng.gen_range(1..40);
            let n = rng.gen_range(2u32..6);
            let x: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..10.0)).collect();
            let (lhs, rhs) = lp_power_bound(&x, n).unwrap();
            assert!(lhs >= rhs - 1e-9 * lhs.abs().max(1.0), "lhs {lhs} < rhs {rhs}");
        }
    }

    #[test]
    fn lp_power_bound_rejects_negative() {
        assert!(lp_power_bound(&[1.0, -0.5], 2).is_err());
    }

    #[test]
    fn unit_ball_volumes_match_gamma_formula() {
        // Frozen low-dimensional values.
        assert!((unit_ball_volume(2).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!(
            (unit_ball_volume(3).unwrap() - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14
        );
        let pi2_over_2 = std::f64::consts::PI * std::f64::consts::PI / 2.0;
        assert!((unit_ball_volume(4).unwrap() - pi2_over_2).abs() < 1e-14);
        // Gamma-function oracle for general n.
        for n in 2..=12 {
            let expect = (0.5 * n as f64 * std::f64::consts::PI.ln()
                - ln_gamma(0.5 * n as f64 + 1.0))
            .exp();
            let got = unit_ball_volume(n).unwrap();
            assert!(
                (got - expect).abs() <= 1e-10 * expect,
                "V_{n}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn subdivision_counts_and_exact_cover() {
        // Planar beam: t = 0.1 gives 20 boxes of side 0.1.
        let boxes = subdivide_slice(-1.0, 0.1, 2).unwrap();
        assert_eq!(boxes.len(), 20);
        for b in &boxes {
            assert!((b.side - 0.1).abs() < 1e-15);
        }
        // Spatial beam: t = 0.5 gives 8 boxes of side 0.5.
        let boxes = subdivide_slice(0.0, 0.5, 3).unwrap();
        assert_eq!(boxes.len(), 8);
        // N * side^{n-1} = 2 exactly (base area of Q).
        for n in 2..=4 {
            for t in [0.5, 0.3, 0.1, 0.07] {
                let boxes = subdivide_slice(0.0, t, n).unwrap();
                let total: f64 = boxes
                    .iter()
                    .map(|b| b.side.powi((n - 1) as i32))
                    .sum();
                assert!((total - 2.0).abs() < 1e-9, "n={n} t={t} total={total}");
            }
        }
    }

    #[test]
    fn subdivision_side_brackets() {
        for t in [0.4, 0.25, 0.1, 0.05, 0.02, 0.013] {
            let boxes = subdivide_slice(0.0, t, 2).unwrap();
            let s = boxes[0].side;
            assert!(t <= s + 1e-15 && s <= 2.0 * t + 1e-15, "t={t} side={s}");
        }
    }

    #[test]
    fn subdivision_boxes_tile_without_overlap() {
        let boxes = subdivide_slice(0.0, 0.26, 3).unwrap();
        // Distinct corners, all inside the base Q.
        for b in &boxes {
            assert!(b.corner[0] >= -1e-12 && b.corner[0] + b.side <= 1.0 + 1e-12);
            assert!(b.corner[1] >= -1e-12 && b.corner[1] + b.side <= 2.0 + 1e-12);
        }
        let volume: f64 = boxes.iter().map(|b| b.volume()).sum();
        assert!((volume - 2.0 * 0.26).abs() < 1e-12);
    }

    #[test]
    fn quotient_distance_wraps_around() {
        let g = LatticeGroup::planar();
        let x = BeamPoint::new(vec![0.1], 0.0).unwrap();
        let y = BeamPoint::new(vec![1.9], 0.0).unwrap();
        let d = quotient_distance(&x, &y, &g).unwrap();
        assert!((d - 0.2).abs() < 1e-12);
    }

    #[test]
    fn quotient_distance_is_group_invariant() {
        let g = LatticeGroup::spatial();
        let mut rng = crate::rng::substream(13, 0);
        for _ in 0..200 {
            let x = BeamPoint::new(
                vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0)],
                rng.gen_range(-1.0..1.0),
            )
            .unwrap();
            let y = BeamPoint::new(
                vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0)],
                rng.gen_range(-1.0..1.0),
            )
            .unwrap();
            let d = quotient_distance(&x, &y, &g).unwrap();
            // Moving y by a small group element must not change the distance
            // (small enough that the bounded enumeration still covers it).
            for e in [
                LatticeGroupElement {
                    orthogonal: None,
                    translation: vec![2.0, 0.0],
                },
                LatticeGroupElement {
                    orthogonal: Some(vec![vec![-1.0, 0.0], vec![0.0, -1.0]]),
                    translation: vec![2.0, 2.0],
                },
            ] {
                let y2 = e.apply(&y);
                let d2 = quotient_distance(&x, &y2, &g).unwrap();
                assert!((d - d2).abs() < 1e-12, "d={d} d2={d2}");
            }
            // Quotient distance never exceeds the representative distance.
            assert!(d <= x.dist(&y) + 1e-15);
        }
    }

    #[test]
    fn box_center_and_membership() {
        let b = BoxP {
            index: 0,
            corner: vec![0.2, 0.4],
            side: 0.1,
            t0: -1.0,
            t: 0.05,
        };
        let c = b.center();
        assert!(b.contains(&c));
        assert!((c.base[0] - 0.25).abs() < 1e-15);
        assert!((c.height + 0.975).abs() < 1e-15);
        let outside = BeamPoint::new(vec![0.35, 0.45], -0.99).unwrap();
        assert!(!b.contains(&outside));
    }
}
