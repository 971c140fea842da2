//! One runner per subcommand: build the map, execute the library operation,
//! and shape the result into CSV rows plus a JSON value.

use serde_json::json;

use qcbeam::analysis::{
    asymptotic_representative, bip_sup, bound_chains, gen_derivative, slice_size,
    sphere_directions, subdivision_analysis, weak_qs_estimate, Region, SubdivisionSampling,
    Verdict,
};
use qcbeam::mapzoo::{zoo, QCMap};
use qcbeam::radius::{
    bi_lipschitz_estimate, difference_quotients, mean_radius, slope_report, CurvePoint,
    MeanRadiusCurve,
};
use qcbeam::rng::derive_seed;
use qcbeam::transform::TransformedMap;

use crate::config::{
    section_grid, AsymSection, BipSection, CurveSection, DqSection, GenSection, QsSection,
    Resolved, SliceSection, SubdivideSection,
};
use crate::output::{fmt, Artifact, RunOutput};
use crate::CliError;

/// Catalog listing: one line per built-in map plus the builder families.
pub fn run_zoo() -> Result<String, CliError> {
    let mut s = String::from("built-in maps (label, dimension, height cap, dilatation hint):\n");
    for n in [2usize, 3] {
        for map in zoo(n)? {
            let cap = map
                .height_cap
                .map(|m| fmt(m))
                .unwrap_or_else(|| "+inf".to_string());
            let hint = map
                .dilatation_hint
                .map(|k| format!("K<={}", fmt(k)))
                .unwrap_or_else(|| "K unknown".to_string());
            s.push_str(&format!("  {:<16} n={n}  M={cap:<6} {hint}\n", map.label));
        }
    }
    s.push_str(
        "\nbuilder families for the [map] config section (label + parameters):\n\
         \x20 identity                                   n=2,3\n\
         \x20 half                                       n=2,3\n\
         \x20 scaling    lambda > 0                      n=2,3\n\
         \x20 diag       diag = [a1, ..., an], ai > 0    n=2,3\n\
         \x20 power      d > 0                           n=2,3\n\
         \x20 log-power  d > 0                           n=2,3\n\
         \x20 spiral     c finite                        n=2\n\
         \x20 snowflake  levels 0..=8, depth-min <= -3   n=2\n",
    );
    Ok(s)
}

/// Curve points over a height grid with the same per-point seed schedule as
/// the library curve builder, collecting per-point failures instead of
/// aborting.
fn curve_points(
    map: &QCMap,
    heights: &[f64],
    budget: u64,
    seed: u64,
) -> (Vec<CurvePoint>, Vec<String>) {
    let center = vec![0.0; map.dim];
    let mut points = Vec::with_capacity(heights.len());
    let mut failures = Vec::new();
    for (i, &t) in heights.iter().enumerate() {
        match mean_radius(map, &center, t.exp(), budget, derive_seed(seed, i as u64)) {
            Ok(est) => points.push(CurvePoint {
                t,
                r: est.r,
                rho: est.rho,
                rho_err: est.rho_err,
                rho_tilde: est.rho.ln(),
                rho_tilde_err: est.rho_err / est.rho,
                samples: est.volume.samples,
            }),
            Err(e) => failures.push(format!("t={t}: {e}")),
        }
    }
    (points, failures)
}

fn curve_rows(points: &[CurvePoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                fmt(p.t),
                fmt(p.rho_tilde),
                fmt(p.rho_tilde_err),
                fmt(p.rho),
                p.samples.to_string(),
            ]
        })
        .collect()
}

pub fn run_rho_curve(resolved: &Resolved, section: &CurveSection) -> Result<RunOutput, CliError> {
    let map = resolved.map.build()?;
    let heights = section_grid(section.t_min, section.t_max, section.points)?;
    resolved.check_heights(&map, &heights)?;
    let seed = resolved.require_seed()?;
    let (points, failures) = curve_points(&map, &heights, resolved.budget, seed);
    let curve = MeanRadiusCurve {
        label: map.label.clone(),
        dim: map.dim,
        points,
    };
    let artifact = Artifact {
        name: "rho-curve".to_string(),
        header: vec!["t", "rhoTilde", "stdError", "rho", "samples"],
        rows: curve_rows(&curve.points),
        summary: vec![],
        json: serde_json::to_value(&curve).unwrap_or(serde_json::Value::Null),
    };
    Ok(RunOutput {
        artifacts: vec![artifact],
        failures,
    })
}

pub fn run_dq(resolved: &Resolved, section: &DqSection) -> Result<RunOutput, CliError> {
    let map = resolved.map.build()?;
    let heights = section_grid(section.t_min, section.t_max, section.points)?;
    resolved.check_heights(&map, &heights)?;
    let seed = resolved.require_seed()?;
    let (points, failures) = curve_points(&map, &heights, resolved.budget, seed);
    let curve = MeanRadiusCurve {
        label: map.label.clone(),
        dim: map.dim,
        points,
    };
    let dqs = difference_quotients(&curve, &section.lags)?;
    let mut summary = Vec::new();
    let mut json_extra = json!({});
    if curve.points.len() >= 2 {
        let slopes = slope_report(&curve)?;
        summary.push(("overallSlope".to_string(), fmt(slopes.overall_slope)));
        if let Ok(bl) = bi_lipschitz_estimate(&curve, &section.lags) {
            summary.push(("lMin".to_string(), fmt(bl.l_min)));
            summary.push(("lMax".to_string(), fmt(bl.l_max)));
            summary.push(("biLipschitz".to_string(), fmt(bl.constant)));
            json_extra = json!({ "slopes": slopes, "biLipschitz": bl });
        } else {
            json_extra = json!({ "slopes": slopes });
        }
    }
    let artifact = Artifact {
        name: "dq".to_string(),
        header: vec!["t", "lag", "value", "stdError"],
        rows: dqs
            .iter()
            .map(|p| vec![fmt(p.t), fmt(p.lag), fmt(p.value), fmt(p.err)])
            .collect(),
        summary,
        json: json!({
            "curve": curve,
            "quotients": dqs,
            "summary": json_extra,
        }),
    };
    Ok(RunOutput {
        artifacts: vec![artifact],
        failures,
    })
}

pub fn run_bip(resolved: &Resolved, section: &BipSection) -> Result<RunOutput, CliError> {
    let map = resolved.map.build()?;
    let tm = TransformedMap::new(&map)?;
    resolved.check_heights(&map, &section.t_samples)?;
    let report = bip_sup(&tm, &section.t_samples, section.quad_grid)?;
    let verdict = match report.verdict {
        Verdict::Bounded => "bounded",
        Verdict::Growing => "growing",
        Verdict::Inconclusive => "inconclusive",
    };
    let artifact = Artifact {
        name: "bip".to_string(),
        header: vec!["t", "integral"],
        rows: report
            .t_samples
            .iter()
            .zip(&report.integrals)
            .map(|(t, v)| vec![fmt(*t), fmt(*v)])
            .collect(),
        summary: vec![
            ("supEstimate".to_string(), fmt(report.sup_estimate)),
            ("verdict".to_string(), verdict.to_string()),
            ("excludedCells".to_string(), report.excluded_cells.to_string()),
            (
                "maxRefinementDelta".to_string(),
                fmt(report.max_refinement_delta),
            ),
        ],
        json: serde_json::to_value(&report).unwrap_or(serde_json::Value::Null),
    };
    Ok(RunOutput {
        artifacts: vec![artifact],
        failures: vec![],
    })
}

pub fn run_subdivide(
    resolved: &Resolved,
    section: &SubdivideSection,
) -> Result<RunOutput, CliError> {
    let map = resolved.map.build()?;
    let tm = TransformedMap::new(&map)?;
    resolved.check_heights(&map, &[section.t0 + 1.0 + section.t])?;
    let seed = resolved.require_seed()?;
    let sampling = SubdivisionSampling {
        face_grid: section.face_grid,
        volume_samples: resolved.budget,
        base_quad: section.base_quad,
        fd_step: section.fd_step,
        slab_budget: resolved.budget.saturating_mul(4),
    };
    let report = subdivision_analysis(&tm, section.t0, section.t, &sampling, seed)?;
    let chains = bound_chains(&report)?;
    let rows = report
        .per_box
        .iter()
        .map(|b| {
            vec![
                b.index.to_string(),
                fmt(b.diam),
                fmt(b.nu),
                fmt(b.vol),
                fmt(b.vol_err),
                fmt(b.base_vol),
                fmt(b.proj_vol),
                (b.flagged as u8).to_string(),
            ]
        })
        .collect();
    let artifact = Artifact {
        name: "subdivide".to_string(),
        header: vec![
            "boxIndex", "diam", "nu", "vol", "volErr", "baseVol", "projVol", "flagged",
        ],
        rows,
        summary: vec![
            ("nBoxes".to_string(), report.n_boxes.to_string()),
            ("vt".to_string(), fmt(report.vt)),
            ("vtErr".to_string(), fmt(report.vt_err)),
            ("sumBoxVol".to_string(), fmt(report.sum_box_vol)),
            ("c1Lo".to_string(), fmt(report.ratio_c1.0)),
            ("c1Hi".to_string(), fmt(report.ratio_c1.1)),
            ("c2Lo".to_string(), fmt(report.ratio_c2.0)),
            ("c2Hi".to_string(), fmt(report.ratio_c2.1)),
            ("c3Lo".to_string(), fmt(report.ratio_c3.0)),
            ("c3Hi".to_string(), fmt(report.ratio_c3.1)),
            ("projectionSum".to_string(), fmt(report.projection_sum)),
            ("lowerLhs".to_string(), fmt(chains.lower_lhs)),
            ("lowerRhs".to_string(), fmt(chains.lower_rhs)),
            ("upperLhs".to_string(), fmt(chains.upper_lhs)),
            ("upperRhs".to_string(), fmt(chains.upper_rhs)),
            ("piMargin".to_string(), fmt(chains.pi_margin)),
        ],
        json: json!({ "report": report, "chains": chains }),
    };
    Ok(RunOutput {
        artifacts: vec![artifact],
        failures: vec![],
    })
}

pub fn run_qs(resolved: &Resolved, section: &QsSection) -> Result<RunOutput, CliError> {
    let map = resolved.map.build()?;
    let tm = TransformedMap::new(&map)?;
    let n = map.dim;
    resolved.check_heights(&map, &[section.t_hi])?;
    let seed = resolved.require_seed()?;
    let corner = section.corner.clone().unwrap_or_else(|| vec![0.0; n - 1]);
    let sides = section.sides.clone().unwrap_or_else(|| {
        let mut s = vec![1.0; n - 1];
        s[n - 2] = 2.0;
        s
    });
    let region = Region::new(corner, sides, section.t_lo, section.t_hi)?;
    let triples = (resolved.budget as usize).max(16);
    let report = weak_qs_estimate(&tm, &region, triples, seed)?;
    let artifact = Artifact {
        name: "qs".to_string(),
        header: vec!["ratioBin", "hCurve"],
        rows: report
            .ratio_bins
            .iter()
            .zip(&report.h_curve)
            .map(|(b, h)| vec![fmt(*b), fmt(*h)])
            .collect(),
        summary: vec![
            ("weakH".to_string(), fmt(report.weak_h)),
            ("triples".to_string(), report.triples.to_string()),
        ],
        json: serde_json::to_value(&report).unwrap_or(serde_json::Value::Null),
    };
    Ok(RunOutput {
        artifacts: vec![artifact],
        failures: vec![],
    })
}

pub fn run_slice_size(
    resolved: &Resolved,
    section: &SliceSection,
) -> Result<RunOutput, CliError> {
    let map = resolved.map.build()?;
    let tm = TransformedMap::new(&map)?;
    resolved.check_heights(&map, &[section.t0])?;
    let mut rows = Vec::new();
    let mut lengths = Vec::new();
    let mut failures = Vec::new();
    for &res in &section.resolutions {
        match slice_size(&tm, section.t0, res) {
            Ok(len) => {
                rows.push(vec![res.to_string(), fmt(len)]);
                lengths.push(json!({ "resolution": res, "length": len }));
            }
            Err(e) => failures.push(format!("resolution={res}: {e}")),
        }
    }
    let artifact = Artifact {
        name: "slice-size".to_string(),
        header: vec!["resolution", "length"],
        rows,
        summary: vec![("t0".to_string(), fmt(section.t0))],
        json: json!({ "t0": section.t0, "lengths": lengths }),
    };
    Ok(RunOutput {
        artifacts: vec![artifact],
        failures,
    })
}

pub fn run_asym_rep(resolved: &Resolved, section: &AsymSection) -> Result<RunOutput, CliError> {
    let map = resolved.map.build()?;
    let n = map.dim;
    let seed = resolved.require_seed()?;
    if section.g_heights.len() < 2 {
        return Err(CliError::Config("need at least two rescaling heights".to_string()));
    }
    let t_grid = section_grid(section.t_min, section.t_max, section.points)?;
    let mut all_heights = section.g_heights.clone();
    all_heights.extend_from_slice(&t_grid);
    all_heights.push(section.probe_t);
    resolved.check_heights(&map, &all_heights)?;

    // Boundary field from the deepest rescalings.
    let r_seq: Vec<f64> = section.g_heights.iter().map(|t| t.exp()).collect();
    let gd = gen_derivative(&map, &r_seq, section.sphere_samples, resolved.budget, seed)?;
    let k = gd.rho.len();
    let d_exponent = section.d_exponent.unwrap_or_else(|| {
        let dt = section.g_heights[k - 2] - section.g_heights[k - 1];
        (gd.rho[k - 2].ln() - gd.rho[k - 1].ln()) / dt
    });
    let g = gd.boundary_map();
    let rep = asymptotic_representative(&map, g, d_exponent, &t_grid, resolved.budget, seed)?;

    // Relative residual on the probe sphere.
    let probe_r = section.probe_t.exp();
    let mut residuals = Vec::new();
    for dir in sphere_directions(n, section.probe_dirs) {
        let x: Vec<f64> = dir.iter().map(|c| c * probe_r).collect();
        let fx = map.eval(&x);
        let dx = rep.map.eval(&x);
        let diff = fx
            .iter()
            .zip(&dx)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = fx.iter().map(|c| c * c).sum::<f64>().sqrt()
            + dx.iter().map(|c| c * c).sum::<f64>().sqrt();
        residuals.push(if scale > 0.0 { diff / scale } else { 0.0 });
    }
    let max_residual = residuals.iter().cloned().fold(0.0f64, f64::max);
    let mean_residual = residuals.iter().sum::<f64>() / residuals.len().max(1) as f64;

    let knots = Artifact {
        name: "asym-rep".to_string(),
        header: vec!["t", "rhoTilde", "stdError"],
        rows: rep
            .rho_curve
            .points
            .iter()
            .map(|p| vec![fmt(p.t), fmt(p.rho_tilde), fmt(p.rho_tilde_err)])
            .collect(),
        summary: vec![
            ("dExponent".to_string(), fmt(d_exponent)),
            ("probeT".to_string(), fmt(section.probe_t)),
            ("maxResidual".to_string(), fmt(max_residual)),
            ("meanResidual".to_string(), fmt(mean_residual)),
            ("settled".to_string(), gd.simple.to_string()),
        ],
        json: json!({
            "representative": rep,
            "residuals": residuals,
            "maxResidual": max_residual,
            "meanResidual": mean_residual,
        }),
    };
    let residual_rows = Artifact {
        name: "asym-rep-residuals".to_string(),
        header: vec!["direction", "residual"],
        rows: residuals
            .iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), fmt(*r)])
            .collect(),
        summary: vec![],
        json: json!({ "probeT": section.probe_t, "residuals": residuals }),
    };
    Ok(RunOutput {
        artifacts: vec![knots, residual_rows],
        failures: vec![],
    })
}

pub fn run_gen_derivative(
    resolved: &Resolved,
    section: &GenSection,
) -> Result<RunOutput, CliError> {
    let map = resolved.map.build()?;
    resolved.check_heights(&map, &section.heights)?;
    let seed = resolved.require_seed()?;
    let r_seq: Vec<f64> = section.heights.iter().map(|t| t.exp()).collect();
    let gd = gen_derivative(&map, &r_seq, section.sphere_samples, resolved.budget, seed)?;
    let rows = r_seq
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let sup = if i == 0 {
                String::new()
            } else {
                fmt(gd.sup_distances[i - 1])
            };
            vec![fmt(*r), fmt(gd.rho[i]), sup]
        })
        .collect();
    let artifact = Artifact {
        name: "gen-derivative".to_string(),
        header: vec!["r", "rho", "supDistance"],
        rows,
        summary: vec![("settled".to_string(), gd.simple.to_string())],
        json: serde_json::to_value(&gd).unwrap_or(serde_json::Value::Null),
    };
    Ok(RunOutput {
        artifacts: vec![artifact],
        failures: vec![],
    })
}
