//! Acceptance suite: one test per shipped guarantee. Every test prints a
//! single `CRITERION NN PASS/FAIL` line (visible with `--nocapture`, or in
//! the captured output when a test fails) and then asserts that each check
//! behind the verdict holds. Tolerances are pinned here, next to the checks.

use qcbeam::analysis::{
    asymptotic_representative, bip_sup, bound_chains, gen_derivative, ranges_overlap, slice_size,
    sphere_directions, subdivision_analysis, volume_comparison, weak_qs_estimate, Region,
    SubdivisionSampling, Verdict,
};
use qcbeam::geometry::{quotient_distance, subdivide_slice, BeamPoint};
use qcbeam::mapzoo::{
    diagonal_map, identity_map, radial_map, scaling_map, snowflake_map, spiral_map, QCMap,
    RadialProfile,
};
use qcbeam::radius::{
    bi_lipschitz_estimate, difference_quotients, height_grid, homogeneity_check,
    mean_radius_curve,
};
use qcbeam::transform::TransformedMap;
use qcbeam::zorich::ZorichMap;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::LN_2;

const SEED: u64 = 0xC0FFEE;

/// Accumulates named checks; `report` prints the one verdict line and fails
/// the test when any check is false.
struct Checks(Vec<(String, bool)>);

impl Checks {
    fn new() -> Self {
        Checks(Vec::new())
    }

    fn is(&mut self, what: impl Into<String>, ok: bool) {
        self.0.push((what.into(), ok));
    }

    fn close(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        self.is(
            format!("{what}: {value} vs {target} tol {tol}"),
            (value - target).abs() <= tol,
        );
    }
}

fn report(num: u32, label: &str, checks: Checks) {
    let failed: Vec<&(String, bool)> = checks.0.iter().filter(|c| !c.1).collect();
    let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
    println!("CRITERION {num:02} {verdict}: {label}");
    for (what, _) in &failed {
        println!("  failed check: {what}");
    }
    assert!(
        failed.is_empty(),
        "criterion {num} failed {} of {} checks",
        failed.len(),
        checks.0.len()
    );
}

fn power_map(n: usize) -> QCMap {
    radial_map(RadialProfile::Power { d: 2.0 }, n).unwrap()
}

fn log_power_map(n: usize) -> QCMap {
    radial_map(RadialProfile::LogPower { d: 2.0 }, n).unwrap()
}

/// The smooth catalog maps whose slice parameterizations have bounded
/// integrals: everything except the snowflake family, in the plane.
fn smooth_plane_maps() -> Vec<QCMap> {
    vec![
        identity_map(2),
        scaling_map(2, 0.5).unwrap(),
        diagonal_map(&[1.0, 4.0]).unwrap(),
        power_map(2),
        log_power_map(2),
        spiral_map(1.0).unwrap(),
    ]
}

fn max_abs_dev(curve: &qcbeam::radius::MeanRadiusCurve, expected: impl Fn(f64) -> f64) -> f64 {
    curve
        .points
        .iter()
        .map(|p| (p.rho_tilde - expected(p.t)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_01_exact_curves_for_identity_and_half_scaling() {
    let mut c = Checks::new();
    let grid = height_grid(-10.0, -1.0, 10).unwrap();
    for n in [2usize, 3] {
        let curve = mean_radius_curve(&identity_map(n), &grid, 1 << 12, SEED).unwrap();
        let dev = max_abs_dev(&curve, |t| t);
        c.is(format!("identity n={n}: max |rho~(t) - t| = {dev:e} < 1e-9"), dev < 1e-9);
        let half = scaling_map(n, 0.5).unwrap();
        let curve = mean_radius_curve(&half, &grid, 1 << 12, SEED).unwrap();
        let dev = max_abs_dev(&curve, |t| t - LN_2);
        c.is(
            format!("x/2 n={n}: max |rho~(t) - (t - ln 2)| = {dev:e} < 1e-9"),
            dev < 1e-9,
        );
    }
    report(1, "identity and half-scaling log curves are exact", c);
}

#[test]
fn criterion_02_diagonal_curve_within_monte_carlo_error() {
    let mut c = Checks::new();
    let diag = diagonal_map(&[1.0, 4.0]).unwrap();
    let grid = height_grid(-10.0, -1.0, 10).unwrap();
    let curve = mean_radius_curve(&diag, &grid, 1_000_000, SEED).unwrap();
    for p in &curve.points {
        // Constant Jacobian gives a zero-variance estimate; the 1e-12 term
        // absorbs float rounding on top of the 3-sigma band.
        let dev = (p.rho_tilde - (p.t + LN_2)).abs();
        c.is(
            format!("t={}: |rho~ - (t + ln 2)| = {dev:e} <= 3 se + 1e-12", p.t),
            dev <= 3.0 * p.rho_tilde_err + 1e-12,
        );
    }
    for dq in difference_quotients(&curve, &[1.0]).unwrap() {
        c.close(&format!("quotient at t={}", dq.t), dq.value, 1.0, 1e-3);
    }
    report(2, "diag(1,4) curve is t + ln 2 within MC error, quotients 1", c);
}

#[test]
fn criterion_03_power_map_quotients_bilipschitz_and_flat_integrals() {
    let mut c = Checks::new();
    let map = power_map(2);
    let grid = height_grid(-10.0, -1.0, 10).unwrap();
    let curve = mean_radius_curve(&map, &grid, 4_000_000, SEED).unwrap();
    for dq in difference_quotients(&curve, &[1.0, 2.0]).unwrap() {
        c.close(
            &format!("quotient at t={} lag={}", dq.t, dq.lag),
            dq.value,
            2.0,
            1e-3,
        );
    }
    let bl = bi_lipschitz_estimate(&curve, &[1.0, 2.0]).unwrap();
    c.close("bi-Lipschitz constant", bl.constant, 2.0, 1e-3);
    let tm = TransformedMap::new(&map).unwrap();
    let rep = bip_sup(&tm, &[-3.0, -4.0, -5.0], 16).unwrap();
    for (t, v) in rep.t_samples.iter().zip(&rep.integrals) {
        c.close(&format!("slice integral at t={t}"), *v, 2.0, 1e-6);
    }
    report(3, "power map r^2: quotients and bi-Lipschitz 2, integrals 2", c);
}

#[test]
fn criterion_04_log_corrected_map_breaks_homogeneity_but_not_quotients() {
    let mut c = Checks::new();
    let map = log_power_map(2);
    let pts = homogeneity_check(&map, 2.0, &[-3.0, -40.0], 0.25, 1 << 16, SEED).unwrap();
    let near = (pts[0].ratio - 1.0).abs();
    let far = (pts[1].ratio - 1.0).abs();
    c.is(format!("scaling ratio at t=-3 deviates: |{}-1| > 0.05", pts[0].ratio), near > 0.05);
    c.is(format!("scaling ratio at t=-40 settles: |{}-1| <= 0.01", pts[1].ratio), far <= 0.01);
    let grid = height_grid(-24.5, -20.0, 10).unwrap();
    let curve = mean_radius_curve(&map, &grid, 1 << 20, SEED).unwrap();
    for dq in difference_quotients(&curve, &[0.5, 1.0]).unwrap() {
        c.is(
            format!("quotient {} at t={} lag={} in [2, 2.06]", dq.value, dq.t, dq.lag),
            (2.0..=2.06).contains(&dq.value),
        );
    }
    report(4, "log-corrected map: homogeneity drifts, quotients stay near 2", c);
}

#[test]
fn criterion_05_spiral_is_volume_flat_with_plain_slices() {
    let mut c = Checks::new();
    let map = spiral_map(1.0).unwrap();
    let grid = height_grid(-10.0, -1.0, 10).unwrap();
    let curve = mean_radius_curve(&map, &grid, 1 << 12, SEED).unwrap();
    let dev = max_abs_dev(&curve, |t| t);
    c.is(format!("unit-Jacobian curve: max |rho~ - t| = {dev:e} < 1e-9"), dev < 1e-9);
    let tm = TransformedMap::new(&map).unwrap();
    // The lifted spiral shifts each slice sideways, so the image of the
    // horizontal slice is a straight segment of length exactly 2.
    let len = slice_size(&tm, -5.0, 10_000).unwrap();
    c.close("slice image length", len, 2.0, 0.002);
    let rep = bip_sup(&tm, &[-3.0, -5.0, -7.0], 16).unwrap();
    let lo = rep.integrals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = rep.integrals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mid = rep.integrals[1];
    c.is(
        format!("integral spread ({hi} - {lo}) / {mid} < 0.01"),
        (hi - lo) / mid < 0.01,
    );
    report(5, "spiral: exact curve, slice length 2, height-free integrals", c);
}

#[test]
fn criterion_06_covering_map_invariants_on_random_points() {
    let mut c = Checks::new();
    for n in [2usize, 3] {
        let z = ZorichMap::new(n).unwrap();
        let mut rng = StdRng::seed_from_u64(SEED ^ n as u64);
        let mut worst_norm = 0.0f64;
        let mut worst_scale = 0.0f64;
        let mut worst_trip = 0.0f64;
        for _ in 0..10_000 {
            let mut base = vec![0.02 + 0.96 * rng.gen::<f64>()];
            if n == 3 {
                base.push(0.02 + 1.96 * rng.gen::<f64>());
            } else {
                base[0] = 0.02 + 1.96 * rng.gen::<f64>();
            }
            let t = -8.0 * rng.gen::<f64>();
            let p = BeamPoint::new(base.clone(), t).unwrap();
            let y = z.apply(&p).unwrap();
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst_norm = worst_norm.max((norm / t.exp() - 1.0).abs());
            let y0 = z.apply(&BeamPoint::new(base, 0.0).unwrap()).unwrap();
            let scale_dev = y
                .iter()
                .zip(&y0)
                .map(|(a, b)| (a - b * t.exp()).abs())
                .fold(0.0f64, f64::max)
                / t.exp();
            worst_scale = worst_scale.max(scale_dev);
            let back = z.invert(&y, None).unwrap();
            worst_trip = worst_trip.max(quotient_distance(&back, &p, &z.group()).unwrap());
        }
        c.is(format!("n={n} norm identity |Z| = e^t rel {worst_norm:e} < 1e-12"), worst_norm < 1e-12);
        c.is(format!("n={n} slice scaling rel {worst_scale:e} < 1e-12"), worst_scale < 1e-12);
        c.is(format!("n={n} round trip quotient dist {worst_trip:e} < 1e-9"), worst_trip < 1e-9);
        let defect = z.automorphy_defect(10_000, SEED);
        c.is(format!("n={n} automorphy defect {defect:e} < 1e-9"), defect < 1e-9);
    }
    report(6, "covering maps: norm, scaling, automorphy, round trip", c);
}

fn sampling_for(n: usize) -> SubdivisionSampling {
    SubdivisionSampling {
        volume_samples: if n == 2 { 1 << 14 } else { 1 << 12 },
        slab_budget: if n == 2 { 1 << 16 } else { 1 << 15 },
        ..SubdivisionSampling::default()
    }
}

#[test]
fn criterion_07_subdivision_counts_ranges_and_projections() {
    let mut c = Checks::new();
    for n in [2usize, 3] {
        for t in [0.05, 0.02, 0.01] {
            let count = subdivide_slice(-5.0, t, n).unwrap().len() as f64;
            let scaled = count * t.powi(n as i32 - 1);
            c.is(
                format!("n={n} t={t}: box count x t^(n-1) = {scaled} in [1.9, 2.1]"),
                (1.9..=2.1).contains(&scaled),
            );
        }
    }
    let cases: Vec<(QCMap, usize)> = vec![
        (identity_map(2), 2),
        (identity_map(3), 3),
        (diagonal_map(&[1.0, 4.0]).unwrap(), 2),
    ];
    for (map, n) in cases {
        let tm = TransformedMap::new(&map).unwrap();
        let samp = sampling_for(n);
        let coarse = subdivision_analysis(&tm, -5.0, 0.1, &samp, SEED).unwrap();
        let fine = subdivision_analysis(&tm, -5.0, 0.05, &samp, SEED + 1).unwrap();
        for (name, a, b) in [
            ("volume/diam^n", coarse.ratio_c1, fine.ratio_c1),
            ("diam/base-diam", coarse.ratio_c2, fine.ratio_c2),
            ("base-diam^(n-1)/base-vol", coarse.ratio_c3, fine.ratio_c3),
        ] {
            c.is(
                format!("{} n={n}: {name} ranges {a:?} and {b:?} overlap", map.label),
                ranges_overlap(a, b),
            );
        }
        for rep in [&coarse, &fine] {
            c.is(
                format!(
                    "{} n={n} t={}: projected base volumes {} >= 2",
                    map.label, rep.t, rep.projection_sum
                ),
                rep.projection_sum >= 2.0 - 1e-6,
            );
        }
    }
    report(7, "box counts scale as 2 t^(1-n); ratio ranges overlap; projections cover", c);
}

#[test]
fn criterion_08_bound_chains_hold_and_bracket_the_quotient() {
    let mut c = Checks::new();
    let samp = sampling_for(2);
    for (mi, map) in smooth_plane_maps().into_iter().enumerate() {
        let tm = TransformedMap::new(&map).unwrap();
        for (ti, t) in [0.2, 0.1, 0.05].into_iter().enumerate() {
            let seed = SEED + (8 * mi + ti) as u64;
            let rep = subdivision_analysis(&tm, -5.0, t, &samp, seed).unwrap();
            let ch = bound_chains(&rep).unwrap();
            let tag = format!("{} t={t}", map.label);
            // Relative slack 1e-3 keeps exactly-tight chains (identity-like
            // maps) from flipping on estimator noise.
            c.is(
                format!("{tag}: lower chain {} >= {}", ch.lower_lhs, ch.lower_rhs),
                ch.lower_lhs >= ch.lower_rhs * (1.0 - 1e-3),
            );
            c.is(
                format!("{tag}: upper chain {} <= {}", ch.upper_lhs, ch.upper_rhs),
                ch.upper_lhs <= ch.upper_rhs * (1.0 + 1e-3),
            );
            c.is(
                format!("{tag}: power-sum step {} >= {}", ch.lp_lhs, ch.lp_rhs),
                ch.lp_lhs >= ch.lp_rhs * (1.0 - 1e-9),
            );
            c.is(
                format!("{tag}: projection margin {} >= 0", ch.pi_margin),
                ch.pi_margin >= -1e-6,
            );
            c.is(format!("{tag}: lower bound positive"), ch.lower_rhs > 0.0);
            c.is(
                format!("{tag}: projected base volumes {} >= 2", rep.projection_sum),
                rep.projection_sum >= 2.0 - 1e-6,
            );
            let vc = volume_comparison(&map, -5.0, t, 1 << 17, seed ^ 0x55).unwrap();
            let measured = vc.dq_increment / t;
            let lo = vc.ratio * ch.lower_rhs / t;
            let hi = vc.ratio * ch.upper_rhs / t;
            c.is(format!("{tag}: quotient bound {lo} positive"), lo > 0.0);
            c.is(
                format!("{tag}: quotient {measured} in [{lo}, {hi}]"),
                lo * (1.0 - 1e-3) <= measured && measured <= hi * (1.0 + 1e-3),
            );
        }
    }
    report(8, "both volume chains orient correctly and bracket the quotient", c);
}

#[test]
fn criterion_09_increment_to_slab_volume_ratio() {
    let mut c = Checks::new();
    let vc = volume_comparison(&identity_map(2), -5.0, 0.2, 1 << 16, SEED).unwrap();
    c.close("identity increment/slab ratio", vc.ratio, 0.5, 1e-3);
    for map in smooth_plane_maps() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, t) in [0.2, 0.1, 0.05, 0.025].into_iter().enumerate() {
            let r = volume_comparison(&map, -5.0, t, 1 << 17, SEED + i as u64)
                .unwrap()
                .ratio;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        c.is(
            format!("{}: ratio spread {lo}..{hi} within 20%", map.label),
            hi <= 1.2 * lo,
        );
    }
    report(9, "curve increment over slab volume: 1/2 for identity, stable", c);
}

#[test]
fn criterion_10_snowflake_levels_grow_in_every_diagnostic() {
    let mut c = Checks::new();
    // Slice length at the square crossing height -3: the straight part
    // contributes 5/3, the refined midline the rest.
    let mut koch_parts = Vec::new();
    for level in 0..=4usize {
        let map = snowflake_map(level, -12).unwrap();
        let tm = TransformedMap::new(&map).unwrap();
        let len = slice_size(&tm, -3.0, 1 << 18).unwrap();
        koch_parts.push(len - 5.0 / 3.0);
    }
    for l in 1..=4usize {
        let ratio = koch_parts[l] / koch_parts[l - 1];
        c.is(
            format!("level {l}: slice growth {ratio} = 4/3 within 2%"),
            (ratio * 3.0 / 4.0 - 1.0).abs() <= 0.02,
        );
    }
    // Difference quotients on a grid straddling the crossing height.
    let grid = height_grid(-3.3, -2.7, 5).unwrap();
    let lags = [0.15, 0.3, 0.45, 0.6];
    let mut max_dq = Vec::new();
    for level in 0..=4usize {
        let map = snowflake_map(level, -12).unwrap();
        let curve = mean_radius_curve(&map, &grid, 1 << 18, 9).unwrap();
        let peak = difference_quotients(&curve, &lags)
            .unwrap()
            .into_iter()
            .map(|d| d.value)
            .fold(f64::NEG_INFINITY, f64::max);
        max_dq.push(peak);
    }
    for l in 1..=4usize {
        c.is(
            format!("level {l}: max quotient {} > {}", max_dq[l], max_dq[l - 1]),
            max_dq[l] > max_dq[l - 1],
        );
    }
    // Integral trend verdicts at the two ends of the level range.
    let ts = [-3.0, -4.0, -5.0, -6.0, -7.0, -8.0];
    let flat = snowflake_map(0, -12).unwrap();
    let rep = bip_sup(&TransformedMap::new(&flat).unwrap(), &ts, 64).unwrap();
    c.is(
        format!("level 0 verdict {:?} = Bounded", rep.verdict),
        matches!(rep.verdict, Verdict::Bounded),
    );
    let rough = snowflake_map(4, -12).unwrap();
    let rep = bip_sup(&TransformedMap::new(&rough).unwrap(), &ts, 64).unwrap();
    c.is(
        format!("level 4 verdict {:?} = Growing", rep.verdict),
        matches!(rep.verdict, Verdict::Growing),
    );
    report(10, "snowflake levels: slice x4/3, quotients rise, trend flips", c);
}

#[test]
fn criterion_11_asymptotic_representative_pipeline() {
    let mut c = Checks::new();
    for map in [diagonal_map(&[1.0, 4.0]).unwrap(), power_map(2)] {
        let radii: Vec<f64> = [-4.0f64, -6.0, -8.0, -10.0, -12.0]
            .iter()
            .map(|t| t.exp())
            .collect();
        let gd = gen_derivative(&map, &radii, 64, 1 << 20, SEED).unwrap();
        let k = gd.rho.len();
        let d_exp = (gd.rho[k - 2].ln() - gd.rho[k - 1].ln()) / 2.0;
        let grid = height_grid(-12.0, -2.0, 11).unwrap();
        let rep =
            asymptotic_representative(&map, gd.boundary_map(), d_exp, &grid, 1 << 20, SEED ^ 1)
                .unwrap();
        let r = (-10.0f64).exp();
        // 128 probe directions interleave the 64 sampled boundary knots.
        let mut worst = 0.0f64;
        for dir in sphere_directions(2, 128) {
            let x: Vec<f64> = dir.iter().map(|d| d * r).collect();
            let fx = map.eval(&x);
            let dx = rep.map.eval(&x);
            let diff: f64 = fx
                .iter()
                .zip(&dx)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let fn_ = fx.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dn = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(diff / (fn_ + dn));
        }
        c.is(
            format!("{}: worst relative residual {worst:e} < 0.01", map.label),
            worst < 0.01,
        );
        let h7 = height_grid(-9.0, -3.0, 7).unwrap();
        let base = bi_lipschitz_estimate(
            &mean_radius_curve(&rep.map, &h7, 1 << 15, SEED ^ 2).unwrap(),
            &[1.0],
        )
        .unwrap()
        .constant;
        let doubled = bi_lipschitz_estimate(
            &mean_radius_curve(&rep.map, &h7, 1 << 16, SEED ^ 2).unwrap(),
            &[1.0],
        )
        .unwrap()
        .constant;
        c.is(format!("{}: constant {base} finite", map.label), base.is_finite());
        c.is(
            format!("{}: constants {base} vs {doubled} within 10%", map.label),
            (base - doubled).abs() <= 0.1 * base.max(doubled),
        );
    }
    report(11, "split representative: small residual, stable constant", c);
}

#[test]
fn criterion_12_weak_quasisymmetry_estimates() {
    let mut c = Checks::new();
    let region = Region::new(vec![0.0], vec![2.0], -6.0, -4.0).unwrap();
    let id = identity_map(2);
    let q = weak_qs_estimate(&TransformedMap::new(&id).unwrap(), &region, 4096, SEED).unwrap();
    c.is(
        format!("identity weak-H {} = 1 within 1e-12", q.weak_h),
        (q.weak_h - 1.0).abs() < 1e-12,
    );
    // The sup statistic needs enough triples to saturate; below ~2^15 it is
    // still climbing for the diagonal map.
    let diag = diagonal_map(&[1.0, 4.0]).unwrap();
    let tm = TransformedMap::new(&diag).unwrap();
    let a = weak_qs_estimate(&tm, &region, 32_768, SEED).unwrap().weak_h;
    let b = weak_qs_estimate(&tm, &region, 65_536, SEED).unwrap().weak_h;
    c.is(
        format!("diag(1,4) weak-H {a} vs {b} stable within 10%"),
        (a - b).abs() <= 0.1 * a.max(b),
    );
    report(12, "weak quasisymmetry: identity exact, diagonal stable", c);
}
