//! The eight subcommand implementations. Each handler receives fully merged
//! arguments (command line plus config file) and returns the artifact text;
//! the caller decides between stdout and `--output`.

use std::path::Path;

use serde_json::{json, Value};

use contextlab_core::gpt::{
    fcf_fixture_models, fcf_polygon, fcf_witness_exact, fixture_to_secondary, run_fcf_pipeline,
    synthesize_raw_data, FcfPipelineReport, FcfSynthesisConfig, RawDataMatrix,
};
use contextlab_core::jm::{
    clifford_jm_threshold, construct_pairwise_joint, find_minimal_incompatible_sets,
    n_wise_necessary, n_wise_necessary_threshold, n_wise_sufficient, n_wise_sufficient_threshold,
    optimal_joint_params, pairwise_compatible, realize_hypergraph_capped, HypergraphRealization,
    JmHypergraph, NoisySpinObservable,
};
use contextlab_core::ks::{
    assignment_polytope, classify_vertices, depolarizing_a, depolarizing_a_exact, ks_colourable,
    noise_threshold, EventHypergraph,
};
use contextlab_core::linalg::CMatrix;
use contextlab_core::polytope::{enumerate_vertices_capped, rat_int, rat_to_f64, Rat};
use contextlab_core::quantum::{
    chsh_value, pauli, DensityOperator, Effect, HermitianOperator, Povm,
};
use contextlab_core::specker::{
    cmax_coplanar, eta0_upper_bound, fine_joint_distribution, ks_inequalities, lsw_bound,
    nc_bounds_r0r1r2, no_state_independent_violation_check, optimize_qviol, qviol_closed_form,
    quantum_witness_ncycle, r3_quantum_trine, specker_vertices, FineOutcome, NCycleQuantumConfig,
    PairwiseStats, KS_INEQUALITY_NAMES,
};

use crate::cli::{
    usage, Caps, ChshArgs, CliResult, CommonOpts, FcfArgs, Format, JmArgs, KsArgs, KsReport,
    NcycleArgs, QviolTableArgs, RealizeArgs, SpeckerArgs,
};
use crate::data;
use crate::io::{
    f64_str, fcf_prep_labels, jnum, jnum_list, json_artifact, parse_raw_data_csv, rat_str,
    raw_data_csv, vertex_set_csv, vertex_set_json, CsvBuilder, EventHypergraphDto,
    JmHypergraphDto, MatrixDto, PovmDto,
};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Inclusive linear grid with `steps + 1` points.
fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|k| start + (stop - start) * k as f64 / steps as f64)
        .collect()
}

/// Parse a `"start:stop:steps"` range into an inclusive grid.
fn parse_range(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("range {spec:?}: expected start:stop:steps")));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|e| usage(format!("range {spec:?}: bad start: {e}")))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|e| usage(format!("range {spec:?}: bad stop: {e}")))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|e| usage(format!("range {spec:?}: bad step count: {e}")))?;
    if !start.is_finite() || !stop.is_finite() {
        return Err(usage(format!("range {spec:?}: endpoints must be finite")));
    }
    if steps == 0 {
        return Err(usage(format!("range {spec:?}: need at least one step")));
    }
    Ok(linspace(start, stop, steps))
}

/// A sweep range that may be the per-command default `"auto"`.
fn resolve_range(spec: &str, auto_stop: f64) -> CliResult<Vec<f64>> {
    if spec == "auto" {
        Ok(linspace(0.0, auto_stop, 100))
    } else {
        parse_range(spec)
    }
}

fn parse_comma_f64(spec: &str, want: usize, what: &str) -> CliResult<Vec<f64>> {
    let vals: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| usage(format!("{what} {spec:?}: bad number {s:?}: {e}")))
        })
        .collect::<CliResult<_>>()?;
    if vals.len() != want {
        return Err(usage(format!(
            "{what} {spec:?}: expected {want} comma-separated numbers, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("malformed {what} {}: {e}", path.display())))
}

fn load_jm_hypergraph(path: &Path) -> CliResult<JmHypergraph> {
    let dto: JmHypergraphDto = read_json_file(path, "hypergraph file")?;
    Ok(JmHypergraph::new(dto.n_vertices, &dto.edges)?)
}

/// Reject `--format csv` for reports that only exist as JSON.
fn require_json(common: &CommonOpts, what: &str) -> CliResult<()> {
    if common.format_or(Format::Json) == Format::Csv {
        return Err(usage(format!("{what} is JSON-only; drop --format csv")));
    }
    Ok(())
}

fn realization_json(r: &HypergraphRealization) -> Value {
    json!({
        "dim": r.povms.first().map_or(0, Povm::dim),
        "blocks": r.blocks.iter().map(|b| json!({
            "vertices": b.vertices,
            "eta": jnum(b.eta),
            "dim": b.dim,
        })).collect::<Vec<_>>(),
        "povms": r.povms.iter().map(PovmDto::from_povm).collect::<Vec<_>>(),
    })
}

/// The trine axes in the x–z plane (mutual angle 120 degrees).
fn trine_axes() -> [[f64; 3]; 3] {
    let s = 3.0f64.sqrt() / 2.0;
    [[0.0, 0.0, 1.0], [s, 0.0, -0.5], [-s, 0.0, -0.5]]
}

/// Largest common sharpness at which the trine is pairwise compatible.
fn trine_eta_limit() -> f64 {
    3.0f64.sqrt() - 1.0
}

// ---------------------------------------------------------------------------
// jm
// ---------------------------------------------------------------------------

fn parse_axes(spec: &str) -> CliResult<Vec<[f64; 3]>> {
    let raw: Vec<[f64; 3]> = match spec {
        "trine" => return Ok(trine_axes().to_vec()),
        "orthogonal" => return Ok(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        path => read_json_file(Path::new(path), "axes file")?,
    };
    if raw.is_empty() {
        return Err(usage(format!("axes file {spec}: need at least one axis")));
    }
    raw.into_iter()
        .map(|a| {
            let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
            if n < 1e-12 {
                Err(usage(format!("axes file {spec}: zero axis")))
            } else {
                Ok([a[0] / n, a[1] / n, a[2] / n])
            }
        })
        .collect()
}

pub fn jm(args: &JmArgs, caps: Caps) -> CliResult<String> {
    match (&args.hypergraph, &args.axes) {
        (Some(_), Some(_)) => Err(usage("--hypergraph and --axes are mutually exclusive")),
        (None, None) => Err(usage("jm needs --hypergraph PATH or --axes SPEC with --eta")),
        (Some(path), None) => jm_hypergraph_mode(args, caps, path),
        (None, Some(spec)) => jm_axes_mode(args, spec),
    }
}

fn jm_hypergraph_mode(args: &JmArgs, caps: Caps, path: &Path) -> CliResult<String> {
    require_json(&args.common, "the hypergraph report")?;
    if args.eta.is_some() || args.axes.is_some() {
        return Err(usage("--eta/--axes apply to axes mode, not --hypergraph"));
    }
    let h = load_jm_hypergraph(path)?;
    let mut report = json!({
        "n_vertices": h.n_vertices(),
        "edges": h.edges(),
        "minimal_incompatible_sets": find_minimal_incompatible_sets(&h),
        "realization": Value::Null,
    });
    if args.realize {
        let r = realize_hypergraph_capped(&h, args.max_dim.unwrap_or(caps.hilbert))?;
        report["realization"] = realization_json(&r);
    }
    Ok(json_artifact(&report))
}

fn jm_axes_mode(args: &JmArgs, spec: &str) -> CliResult<String> {
    require_json(&args.common, "the axes report")?;
    if args.realize {
        return Err(usage("--realize applies to hypergraph mode, not --axes"));
    }
    let eta = args.eta.ok_or_else(|| usage("axes mode needs --eta"))?;
    let axes = parse_axes(spec)?;
    let n = axes.len();
    let obs: Vec<NoisySpinObservable> = axes
        .iter()
        .map(|&a| NoisySpinObservable::new(eta, a))
        .collect::<Result<_, _>>()?;

    let mut matrix = vec![vec![true; n]; n];
    let mut all_pairwise = true;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = pairwise_compatible(&obs[i], &obs[j])?;
            matrix[i][j] = c;
            matrix[j][i] = c;
            all_pairwise &= c;
        }
    }

    let mut report = json!({
        "eta": jnum(eta),
        "n": n,
        "axes": axes.iter().map(|a| jnum_list(a)).collect::<Vec<_>>(),
        "pairwise_compatible": matrix,
        "all_pairwise_compatible": all_pairwise,
        "n_wise_necessary_threshold": jnum(n_wise_necessary_threshold(&axes)),
        "n_wise_sufficient_threshold": jnum(n_wise_sufficient_threshold(&axes)),
        "n_wise_necessary": n_wise_necessary(eta, &axes),
        "n_wise_sufficient": n_wise_sufficient(eta, &axes),
        "clifford_threshold": jnum(clifford_jm_threshold(n)),
        "joint": Value::Null,
    });
    if n == 2 && all_pairwise {
        let params = optimal_joint_params(&obs[0], &obs[1])?;
        let joint = construct_pairwise_joint(&obs[0], &obs[1], &params)?;
        report["joint"] = json!({
            "alpha": jnum(params.alpha),
            "a_vec": jnum_list(&params.a_vec),
            "povm": PovmDto::from_povm(&joint),
        });
    }
    Ok(json_artifact(&report))
}

// ---------------------------------------------------------------------------
// realize
// ---------------------------------------------------------------------------

pub fn realize(args: &RealizeArgs, caps: Caps) -> CliResult<String> {
    require_json(&args.common, "the realization report")?;
    let path = args
        .hypergraph
        .as_ref()
        .ok_or_else(|| usage("realize needs --hypergraph PATH"))?;
    let h = load_jm_hypergraph(path)?;
    let r = realize_hypergraph_capped(&h, args.max_dim.unwrap_or(caps.hilbert))?;
    let report = json!({
        "n_vertices": h.n_vertices(),
        "edges": h.edges(),
        "minimal_incompatible_sets": find_minimal_incompatible_sets(&h),
        "realization": realization_json(&r),
    });
    Ok(json_artifact(&report))
}

// ---------------------------------------------------------------------------
// ks
// ---------------------------------------------------------------------------

pub fn ks(args: &KsArgs, caps: Caps) -> CliResult<String> {
    let (h, builtin) = match (&args.builtin, &args.hypergraph) {
        (Some(_), Some(_)) => {
            return Err(usage("--builtin and --hypergraph are mutually exclusive"))
        }
        (Some(name), None) => {
            if name != "cega18" {
                return Err(usage(format!("unknown builtin {name:?}; available: cega18")));
            }
            (EventHypergraph::cega18(), true)
        }
        (None, Some(path)) => {
            let dto: EventHypergraphDto = read_json_file(path, "event-hypergraph file")?;
            (EventHypergraph::new(dto.n_classes, dto.measurements)?, false)
        }
        (None, None) => (EventHypergraph::cega18(), true),
    };

    if let Some(range) = &args.noise_curve {
        if !builtin {
            return Err(usage("--noise-curve applies to the builtin hypergraph only"));
        }
        if args.rays || args.report.is_some() {
            return Err(usage("--noise-curve cannot be combined with --report or --rays"));
        }
        return ks_noise_curve(args, range);
    }
    if args.rays && !builtin {
        return Err(usage("--rays applies to the builtin hypergraph only"));
    }

    match args.report.unwrap_or(KsReport::Summary) {
        KsReport::Colourability => {
            require_json(&args.common, "the colourability report")?;
            let colouring = ks_colourable(&h)?;
            let mut report = json!({
                "n_classes": h.n_classes(),
                "n_measurements": h.measurements().len(),
                "colourable": colouring.is_some(),
                "colouring": colouring,
            });
            attach_rays(&mut report, args.rays)?;
            Ok(json_artifact(&report))
        }
        KsReport::Summary => {
            require_json(&args.common, "the summary report")?;
            let colouring = ks_colourable(&h)?;
            let (vs, classes) = enumerate_and_classify(&h, caps)?;
            let (histogram, max_exact) = vertex_histogram(&classes);
            let mut report = json!({
                "n_classes": h.n_classes(),
                "n_measurements": h.measurements().len(),
                "measurements": h.measurements(),
                "colourable": colouring.is_some(),
                "colouring": colouring,
                "n_vertices": vs.len(),
                "histogram": histogram,
                "max_avg_predictability": rat_str(&max_exact),
                "max_avg_predictability_f64": jnum(rat_to_f64(&max_exact)),
            });
            attach_rays(&mut report, args.rays)?;
            Ok(json_artifact(&report))
        }
        KsReport::Vertices => {
            let (vs, classes) = enumerate_and_classify(&h, caps)?;
            if args.common.format_or(Format::Json) == Format::Csv {
                if args.rays {
                    return Err(usage("--rays is JSON-only; drop --format csv"));
                }
                return Ok(vertex_set_csv(&vs));
            }
            let (histogram, max_exact) = vertex_histogram(&classes);
            let vertices: Vec<Value> = vs
                .iter()
                .zip(classes.iter())
                .map(|(v, c)| {
                    json!({
                        "weights": v.iter().map(rat_str).collect::<Vec<_>>(),
                        "weights_f64": jnum_list(&v.iter().map(rat_to_f64).collect::<Vec<_>>()),
                        "type": c.type_id,
                        "avg_predictability": rat_str(&c.avg_predictability),
                        "witness_cycle": c.witness_cycle,
                    })
                })
                .collect();
            let mut report = json!({
                "n_classes": h.n_classes(),
                "n_vertices": vs.len(),
                "histogram": histogram,
                "max_avg_predictability": rat_str(&max_exact),
                "max_avg_predictability_f64": jnum(rat_to_f64(&max_exact)),
                "vertices": vertices,
            });
            attach_rays(&mut report, args.rays)?;
            Ok(json_artifact(&report))
        }
    }
}

fn enumerate_and_classify(
    h: &EventHypergraph,
    caps: Caps,
) -> CliResult<(
    contextlab_core::polytope::VertexSet,
    Vec<contextlab_core::ks::VertexClass>,
)> {
    let vs = enumerate_vertices_capped(&assignment_polytope(h), caps.polytope)?;
    let classes = classify_vertices(h, &vs)?;
    Ok((vs, classes))
}

/// Histogram rows `{type, avg_predictability, count}` in increasing type
/// order, plus the largest average (type 1).
fn vertex_histogram(classes: &[contextlab_core::ks::VertexClass]) -> (Vec<Value>, Rat) {
    let mut by_type: std::collections::BTreeMap<usize, (Rat, usize)> =
        std::collections::BTreeMap::new();
    for c in classes {
        by_type
            .entry(c.type_id)
            .and_modify(|(_, n)| *n += 1)
            .or_insert_with(|| (c.avg_predictability.clone(), 1));
    }
    let max_exact = by_type
        .values()
        .map(|(avg, _)| avg.clone())
        .max()
        .unwrap_or_else(|| rat_int(0));
    let rows = by_type
        .iter()
        .map(|(type_id, (avg, count))| {
            json!({
                "type": type_id,
                "avg_predictability": rat_str(avg),
                "avg_predictability_f64": jnum(rat_to_f64(avg)),
                "count": count,
            })
        })
        .collect();
    (rows, max_exact)
}

fn attach_rays(report: &mut Value, want: bool) -> CliResult<()> {
    if !want {
        return Ok(());
    }
    let rays = data::cega18_rays()?;
    let pvms = data::cega18_pvms()?;
    report["rays"] = json!({
        "dim": 4,
        "rays": rays.rays,
        "measurements": rays.measurements,
        "projective": pvms.iter().all(|p| p.is_projective(1e-12)),
    });
    Ok(())
}

fn ks_noise_curve(args: &KsArgs, range: &str) -> CliResult<String> {
    let grid = parse_range(range)?;
    let tol = args.common.tol();
    let bound_exact = depolarizing_a_exact(&noise_threshold(), &rat_int(1))?;
    let bound = rat_to_f64(&bound_exact);
    let mut rows: Vec<(f64, f64, bool)> = Vec::with_capacity(grid.len());
    for p in grid {
        let a = depolarizing_a(p, 1.0)?;
        rows.push((p, a, a > bound + tol));
    }
    match args.common.format_or(Format::Csv) {
        Format::Csv => {
            let mut csv = CsvBuilder::new(&["p", "a", "nc_bound", "violated"]);
            for (p, a, violated) in rows {
                csv.row(&[f64_str(p), f64_str(a), f64_str(bound), violated.to_string()]);
            }
            Ok(csv.finish())
        }
        Format::Json => {
            let report = json!({
                "nc_bound": rat_str(&bound_exact),
                "nc_bound_f64": jnum(bound),
                "noise_threshold": rat_str(&noise_threshold()),
                "rows": rows.iter().map(|(p, a, violated)| json!({
                    "p": jnum(*p),
                    "a": jnum(*a),
                    "violated": violated,
                })).collect::<Vec<_>>(),
            });
            Ok(json_artifact(&report))
        }
    }
}

// ---------------------------------------------------------------------------
// specker
// ---------------------------------------------------------------------------

pub fn specker(args: &SpeckerArgs) -> CliResult<String> {
    match (&args.stats, &args.sweep) {
        (Some(_), Some(_)) => Err(usage("--stats and --sweep are mutually exclusive")),
        (Some(spec), None) => {
            if args.eta.is_some() {
                return Err(usage("--eta applies to the bound report, not --stats"));
            }
            specker_stats(args, spec)
        }
        (None, Some(range)) => {
            if args.eta.is_some() {
                return Err(usage("--eta applies to the bound report, not --sweep"));
            }
            specker_sweep(args, range)
        }
        (None, None) => specker_report(args),
    }
}

/// The quantum quantities of the trine construction at sharpness `eta`, or
/// `None` beyond the pairwise-compatibility limit.
fn trine_quantities(eta: f64) -> CliResult<Option<(f64, f64)>> {
    if eta > trine_eta_limit() + 1e-12 {
        return Ok(None);
    }
    let r3 = r3_quantum_trine(eta)?;
    let cmax = cmax_coplanar(eta, [-0.5, -0.5, -0.5])?;
    Ok(Some((r3, cmax)))
}

fn specker_report(args: &SpeckerArgs) -> CliResult<String> {
    require_json(&args.common, "the Specker report")?;
    let eta = args.eta.unwrap_or(0.4566);
    let tol = args.common.tol();

    let vs = specker_vertices();
    let deterministic: Vec<bool> = vs
        .iter()
        .map(|v| v.iter().all(|x| x.is_integer()))
        .collect();
    let n_det = deterministic.iter().filter(|&&d| d).count();

    let lsw = lsw_bound(eta)?;
    let ncb = nc_bounds_r0r1r2(eta)?;
    let trine = match trine_quantities(eta)? {
        Some((r3, cmax)) => json!({
            "compatible": true,
            "r3_quantum": jnum(r3),
            "cmax": jnum(cmax),
            "s_violation": jnum(cmax / 6.0),
            "violated": cmax > tol,
        }),
        None => json!({
            "compatible": false,
            "r3_quantum": Value::Null,
            "cmax": Value::Null,
            "s_violation": Value::Null,
            "violated": Value::Null,
        }),
    };

    let vertices: Vec<Value> = vs
        .iter()
        .zip(deterministic.iter())
        .map(|(v, &det)| {
            json!({
                "weights": v.iter().map(rat_str).collect::<Vec<_>>(),
                "deterministic": det,
            })
        })
        .collect();

    let report = json!({
        "eta": jnum(eta),
        "polytope": {
            "columns": ["w12", "w23", "w13", "p1", "p2", "p3"],
            "n_vertices": vs.len(),
            "n_deterministic": n_det,
            "n_indeterministic": vs.len() - n_det,
            "vertices": vertices,
        },
        "lsw_bound": { "summed": jnum(lsw.summed), "averaged": jnum(lsw.averaged) },
        "nc_bound_r0r1r2": { "summed": jnum(ncb.summed), "averaged": jnum(ncb.averaged) },
        "trine": trine,
        "state_independent_violation_possible": no_state_independent_violation_check(&trine_axes())?,
    });
    Ok(json_artifact(&report))
}

fn specker_stats(args: &SpeckerArgs, spec: &str) -> CliResult<String> {
    require_json(&args.common, "the statistics report")?;
    let v = parse_comma_f64(spec, 6, "--stats")?;
    let s = PairwiseStats::specker(v[0], v[1], v[2], v[3], v[4], v[5])?;
    let residuals = ks_inequalities(&s)?;
    let tol = args.common.tol();
    let inequalities: Vec<Value> = KS_INEQUALITY_NAMES
        .iter()
        .zip(residuals.iter())
        .map(|(name, &r)| json!({ "name": name, "residual": jnum(r), "violated": r > tol }))
        .collect();
    let fine = match fine_joint_distribution(&s)? {
        FineOutcome::Joint(q) => json!({
            "exists": true,
            "joint": jnum_list(&q),
            "violated": Value::Null,
        }),
        FineOutcome::NoJoint { violated } => json!({
            "exists": false,
            "joint": Value::Null,
            "violated": violated,
        }),
    };
    let report = json!({
        "stats": {
            "w12": jnum(v[0]), "w23": jnum(v[1]), "w13": jnum(v[2]),
            "p1": jnum(v[3]), "p2": jnum(v[4]), "p3": jnum(v[5]),
        },
        "ks_inequalities": inequalities,
        "fine_joint": fine,
    });
    Ok(json_artifact(&report))
}

fn specker_sweep(args: &SpeckerArgs, range: &str) -> CliResult<String> {
    let grid = resolve_range(range, trine_eta_limit())?;
    let tol = args.common.tol();
    struct Row {
        eta: f64,
        lsw_summed: f64,
        lsw_averaged: f64,
        r_bound_summed: f64,
        trine: Option<(f64, f64)>,
    }
    let mut rows = Vec::with_capacity(grid.len());
    for eta in grid {
        let lsw = lsw_bound(eta)?;
        let ncb = nc_bounds_r0r1r2(eta)?;
        rows.push(Row {
            eta,
            lsw_summed: lsw.summed,
            lsw_averaged: lsw.averaged,
            r_bound_summed: ncb.summed,
            trine: trine_quantities(eta)?,
        });
    }
    match args.common.format_or(Format::Csv) {
        Format::Csv => {
            let mut csv = CsvBuilder::new(&[
                "eta",
                "lsw_summed",
                "lsw_averaged",
                "r_bound_summed",
                "r3_quantum",
                "cmax",
                "s_violation",
                "violated",
            ]);
            for row in rows {
                let (r3, cmax, s, violated) = match row.trine {
                    Some((r3, cmax)) => (
                        f64_str(r3),
                        f64_str(cmax),
                        f64_str(cmax / 6.0),
                        (cmax > tol).to_string(),
                    ),
                    None => (String::new(), String::new(), String::new(), String::new()),
                };
                csv.row(&[
                    f64_str(row.eta),
                    f64_str(row.lsw_summed),
                    f64_str(row.lsw_averaged),
                    f64_str(row.r_bound_summed),
                    r3,
                    cmax,
                    s,
                    violated,
                ]);
            }
            Ok(csv.finish())
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let (r3, cmax, s, violated) = match row.trine {
                        Some((r3, cmax)) => {
                            (jnum(r3), jnum(cmax), jnum(cmax / 6.0), json!(cmax > tol))
                        }
                        None => (Value::Null, Value::Null, Value::Null, Value::Null),
                    };
                    json!({
                        "eta": jnum(row.eta),
                        "lsw_summed": jnum(row.lsw_summed),
                        "lsw_averaged": jnum(row.lsw_averaged),
                        "r_bound_summed": jnum(row.r_bound_summed),
                        "r3_quantum": r3,
                        "cmax": cmax,
                        "s_violation": s,
                        "violated": violated,
                    })
                })
                .collect();
            Ok(json_artifact(&json!({ "rows": rows })))
        }
    }
}

// ---------------------------------------------------------------------------
// ncycle
// ---------------------------------------------------------------------------

pub fn ncycle(args: &NcycleArgs) -> CliResult<String> {
    let n = args.n.ok_or_else(|| usage("ncycle needs --n"))?;
    match &args.sweep {
        Some(range) => ncycle_sweep(args, n, range),
        None => ncycle_report(args, n),
    }
}

fn ncycle_report(args: &NcycleArgs, n: usize) -> CliResult<String> {
    require_json(&args.common, "the cycle report")?;
    let opt = optimize_qviol(n)?;
    let eta0 = args.eta0.unwrap_or(opt.optimal_eta0);
    let cfg = NCycleQuantumConfig::default_for(n, eta0)?;
    let rep = quantum_witness_ncycle(&cfg)?;
    let tol = args.common.tol();
    let report = json!({
        "n": n,
        "eta0": jnum(eta0),
        "witness_value": jnum(rep.witness_value),
        "nc_bound": jnum(rep.nc_bound),
        "eta_ave": jnum(rep.eta_ave),
        "violated": rep.witness_value > rep.nc_bound + tol,
        "qviol": jnum(rep.witness_value - rep.nc_bound),
        "qviol_closed_form": jnum(qviol_closed_form(n, eta0)),
        "optimum": {
            "optimal_eta0": jnum(opt.optimal_eta0),
            "max_qviol": jnum(opt.max_qviol),
            "critical_eta0": jnum(opt.critical_eta0),
            "eta0_upper_bound": jnum(opt.eta0_upper),
        },
        "axes": cfg.axes().iter().map(|a| jnum_list(a)).collect::<Vec<_>>(),
        "star_axis": jnum_list(&cfg.star_axis()),
    });
    Ok(json_artifact(&report))
}

fn ncycle_sweep(args: &NcycleArgs, n: usize, range: &str) -> CliResult<String> {
    let grid = resolve_range(range, eta0_upper_bound(n))?;
    let tol = args.common.tol();
    let mut rows: Vec<(f64, contextlab_core::specker::ContextualityReport, f64)> =
        Vec::with_capacity(grid.len());
    for eta0 in grid {
        let cfg = NCycleQuantumConfig::default_for(n, eta0)?;
        let rep = quantum_witness_ncycle(&cfg)?;
        rows.push((eta0, rep, qviol_closed_form(n, eta0)));
    }
    match args.common.format_or(Format::Csv) {
        Format::Csv => {
            let mut csv = CsvBuilder::new(&[
                "eta0",
                "witness_value",
                "nc_bound",
                "eta_ave",
                "qviol",
                "qviol_closed_form",
                "violated",
            ]);
            for (eta0, rep, closed) in rows {
                csv.row(&[
                    f64_str(eta0),
                    f64_str(rep.witness_value),
                    f64_str(rep.nc_bound),
                    f64_str(rep.eta_ave),
                    f64_str(rep.witness_value - rep.nc_bound),
                    f64_str(closed),
                    (rep.witness_value > rep.nc_bound + tol).to_string(),
                ]);
            }
            Ok(csv.finish())
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(eta0, rep, closed)| {
                    json!({
                        "eta0": jnum(*eta0),
                        "witness_value": jnum(rep.witness_value),
                        "nc_bound": jnum(rep.nc_bound),
                        "eta_ave": jnum(rep.eta_ave),
                        "qviol": jnum(rep.witness_value - rep.nc_bound),
                        "qviol_closed_form": jnum(*closed),
                        "violated": rep.witness_value > rep.nc_bound + tol,
                    })
                })
                .collect();
            Ok(json_artifact(&json!({ "n": n, "rows": rows })))
        }
    }
}

// ---------------------------------------------------------------------------
// fcf
// ---------------------------------------------------------------------------

pub fn fcf(args: &FcfArgs) -> CliResult<String> {
    let active = usize::from(args.synthesize.is_some())
        + usize::from(args.input.is_some())
        + usize::from(args.fixtures)
        + usize::from(args.polygon)
        + usize::from(args.ideal);
    if active != 1 {
        return Err(usage(
            "fcf needs exactly one of --synthesize, --input, --fixtures, --polygon, --ideal",
        ));
    }
    if args.m_t.is_some() && args.input.is_none() && !args.ideal {
        return Err(usage("--m-t applies to --input and --ideal"));
    }

    if let Some(spec) = &args.synthesize {
        if args.common.format_or(Format::Csv) == Format::Json {
            return Err(usage("synthetic raw data is CSV-only; drop --format json"));
        }
        let raw = synthesize_raw_data(&parse_synthesis(spec)?, args.common.seed())?;
        return Ok(raw_data_csv(
            raw.frequencies(),
            raw.uncertainties(),
            &fcf_prep_labels(),
        ));
    }
    if let Some(path) = &args.input {
        require_json(&args.common, "the pipeline report")?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read raw-data file {}: {e}", path.display())))?;
        let (f, df, _labels) = parse_raw_data_csv(&text)
            .map_err(|e| usage(format!("malformed raw-data file {}: {e}", path.display())))?;
        let raw = RawDataMatrix::new(f, df)?;
        let m_t = args.m_t.unwrap_or(3);
        let rep = run_fcf_pipeline(&raw, m_t)?;
        return Ok(json_artifact(&pipeline_json(&rep, m_t, args.common.tol())));
    }
    if args.fixtures {
        require_json(&args.common, "the fixtures report")?;
        return fcf_fixtures();
    }
    if args.polygon {
        let vs = fcf_polygon()?;
        return Ok(match args.common.format_or(Format::Json) {
            Format::Json => json_artifact(&json!({
                "columns": ["s1", "s2", "s3"],
                "polygon": vertex_set_json(&vs),
            })),
            Format::Csv => vertex_set_csv(&vs),
        });
    }
    // --ideal
    require_json(&args.common, "the pipeline report")?;
    let config = FcfSynthesisConfig { p1: 1.0, p2: 1.0, counts: None };
    let raw = synthesize_raw_data(&config, args.common.seed())?;
    let m_t = args.m_t.unwrap_or(3);
    let rep = run_fcf_pipeline(&raw, m_t)?;
    Ok(json_artifact(&pipeline_json(&rep, m_t, args.common.tol())))
}

fn parse_synthesis(spec: &str) -> CliResult<FcfSynthesisConfig> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(usage(format!(
            "--synthesize {spec:?}: expected \"p1,p2\" or \"p1,p2,counts\""
        )));
    }
    let p1: f64 = parts[0]
        .parse()
        .map_err(|e| usage(format!("--synthesize {spec:?}: bad p1: {e}")))?;
    let p2: f64 = parts[1]
        .parse()
        .map_err(|e| usage(format!("--synthesize {spec:?}: bad p2: {e}")))?;
    let counts = match parts.get(2) {
        Some(raw) => Some(
            raw.parse::<u64>()
                .map_err(|e| usage(format!("--synthesize {spec:?}: bad count: {e}")))?,
        ),
        None => None,
    };
    Ok(FcfSynthesisConfig { p1, p2, counts })
}

fn pipeline_json(rep: &FcfPipelineReport, m_t: usize, tol: f64) -> Value {
    json!({
        "m_t": m_t,
        "chi2": jnum(rep.chi2),
        "hyperplanes": rep.model.hyperplanes().iter().map(|h| jnum_list(h)).collect::<Vec<_>>(),
        "is_generic": rep.model.is_generic(),
        "A_prime": jnum(rep.a_prime),
        "nc_bound": jnum(rep.nc_bound),
        "violated": rep.a_prime > rep.nc_bound + tol,
        "C_P": jnum(rep.c_p),
        "C_M": jnum(rep.c_m),
        "C_P_exact": rat_str(rep.secondary.c_p()),
        "C_M_exact": rat_str(rep.secondary.c_m()),
        "primary": rep.primary.probabilities().iter().map(|r| jnum_list(r)).collect::<Vec<_>>(),
        "secondary": {
            "s": rep.secondary.s_f64().iter().map(|r| jnum_list(r)).collect::<Vec<_>>(),
            "s_exact": rep.secondary.s().iter()
                .map(|r| r.iter().map(rat_str).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        },
    })
}

fn fcf_fixtures() -> CliResult<String> {
    let (boundary, contextual) = fcf_fixture_models();
    let fixture = |table: &[Vec<Rat>]| -> CliResult<Value> {
        let s = fixture_to_secondary(table)?;
        let (a_prime, violated) = fcf_witness_exact(&s)?;
        Ok(json!({
            "table": table.iter()
                .map(|row| row.iter().map(rat_str).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "a_prime": rat_str(&a_prime),
            "a_prime_f64": jnum(rat_to_f64(&a_prime)),
            "violated": violated,
        }))
    };
    let report = json!({
        "nc_bound": "5/6",
        "nc_bound_f64": jnum(contextlab_core::gpt::FCF_NC_BOUND),
        "noncontextual_boundary_model": fixture(&boundary)?,
        "contextual_model": fixture(&contextual)?,
    });
    Ok(json_artifact(&report))
}

// ---------------------------------------------------------------------------
// qviol-table
// ---------------------------------------------------------------------------

fn parse_n_list(spec: &str) -> CliResult<Vec<usize>> {
    let mut out = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|e| usage(format!("--n {spec:?}: bad range start {a:?}: {e}")))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|e| usage(format!("--n {spec:?}: bad range end {b:?}: {e}")))?;
            if a > b {
                return Err(usage(format!("--n {spec:?}: empty range {a}..{b}")));
            }
            out.extend(a..=b);
        } else {
            out.push(
                item.parse()
                    .map_err(|e| usage(format!("--n {spec:?}: bad entry {item:?}: {e}")))?,
            );
        }
    }
    if out.is_empty() {
        return Err(usage(format!("--n {spec:?}: no cycle lengths")));
    }
    Ok(out)
}

pub fn qviol_table(args: &QviolTableArgs) -> CliResult<String> {
    let spec = args.n.as_deref().unwrap_or("3..14,99,100,199,200");
    let ns = parse_n_list(spec)?;
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        rows.push((n, optimize_qviol(n)?));
    }
    match args.common.format_or(Format::Csv) {
        Format::Csv => {
            let mut csv =
                CsvBuilder::new(&["n", "qviol", "optimal_eta0", "critical_eta0", "upper_bound"]);
            for (n, opt) in rows {
                csv.row(&[
                    n.to_string(),
                    f64_str(opt.max_qviol),
                    f64_str(opt.optimal_eta0),
                    f64_str(opt.critical_eta0),
                    f64_str(opt.eta0_upper),
                ]);
            }
            Ok(csv.finish())
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(n, opt)| {
                    json!({
                        "n": n,
                        "qviol": jnum(opt.max_qviol),
                        "optimal_eta0": jnum(opt.optimal_eta0),
                        "critical_eta0": jnum(opt.critical_eta0),
                        "upper_bound": jnum(opt.eta0_upper),
                    })
                })
                .collect();
            Ok(json_artifact(&json!({ "rows": rows })))
        }
    }
}

// ---------------------------------------------------------------------------
// chsh
// ---------------------------------------------------------------------------

/// The projective binary measurement of a qubit observable with eigenvalues
/// in [-1, 1]: effects `(I ± O)/2`.
pub(crate) fn binary_observable_povm(obs: &CMatrix) -> contextlab_core::Result<Povm> {
    let id = CMatrix::identity(2);
    let plus = Effect::new(HermitianOperator::new(id.add(obs).scale_re(0.5))?)?;
    let minus = Effect::new(HermitianOperator::new(id.sub(obs).scale_re(0.5))?)?;
    Povm::binary(plus, minus)
}

pub(crate) fn bell_phi_plus() -> contextlab_core::Result<DensityOperator> {
    let mut m = CMatrix::zeros(4);
    let half = contextlab_core::linalg::C64::new(0.5, 0.0);
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m.set(i, j, half);
    }
    DensityOperator::new(HermitianOperator::new(m)?)
}

/// Bob's settings at analyzer angle `theta`:
/// `B0 = cos θ σz + sin θ σx`, `B1 = cos θ σz − sin θ σx`.
pub(crate) fn bob_settings(theta: f64) -> contextlab_core::Result<(Povm, Povm)> {
    let [sx, _, sz] = pauli();
    let b0 = sz.scale_re(theta.cos()).add(&sx.scale_re(theta.sin()));
    let b1 = sz.scale_re(theta.cos()).sub(&sx.scale_re(theta.sin()));
    Ok((binary_observable_povm(&b0)?, binary_observable_povm(&b1)?))
}

pub fn chsh(args: &ChshArgs) -> CliResult<String> {
    let tol = args.common.tol();
    let [sx, _, sz] = pauli();
    let state = bell_phi_plus()?;
    let a0 = binary_observable_povm(&sz)?;
    let a1 = binary_observable_povm(&sx)?;

    if let Some(range) = &args.sweep {
        let grid = resolve_range(range, std::f64::consts::PI)?;
        let mut rows = Vec::with_capacity(grid.len());
        for theta in grid {
            let (b0, b1) = bob_settings(theta)?;
            let v = chsh_value(&state, (&a0, &a1), (&b0, &b1))?;
            rows.push((theta, v));
        }
        return Ok(match args.common.format_or(Format::Csv) {
            Format::Csv => {
                let mut csv = CsvBuilder::new(&["theta", "chsh", "violated"]);
                for (theta, v) in rows {
                    csv.row(&[f64_str(theta), f64_str(v), (v > 2.0 + tol).to_string()]);
                }
                csv.finish()
            }
            Format::Json => {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|(theta, v)| {
                        json!({ "theta": jnum(*theta), "chsh": jnum(*v), "violated": *v > 2.0 + tol })
                    })
                    .collect();
                json_artifact(&json!({ "rows": rows }))
            }
        });
    }

    require_json(&args.common, "the CHSH report")?;
    let (b0, b1) = bob_settings(std::f64::consts::FRAC_PI_4)?;
    let v = chsh_value(&state, (&a0, &a1), (&b0, &b1))?;
    let report = json!({
        "chsh": jnum(v),
        "classical_bound": 2.0,
        "tsirelson_bound": jnum(2.0 * 2.0f64.sqrt()),
        "violated": v > 2.0 + tol,
        "state": MatrixDto::from_matrix(state.matrix()),
        "alice": [PovmDto::from_povm(&a0), PovmDto::from_povm(&a1)],
        "bob": [PovmDto::from_povm(&b0), PovmDto::from_povm(&b1)],
    });
    Ok(json_artifact(&report))
}
