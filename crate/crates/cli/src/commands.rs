//! One function per subcommand: `plan` lists the cells, `run` computes and
//! writes artifacts, returning whether the experiment-level checks passed.

use cloudlap::concentration::{
    annulus_count_check, ball_count_check, degree_uniformity_sweep, double_convolution_check,
};
use cloudlap::coupling::{coupling_statistics, default_max_steps, start_point, tau_scaling, WalkConfig};
use cloudlap::io::{self, fmt_f64};
use cloudlap::nonlocal_ops::{consistency_sweep, TestFunction};
use cloudlap::spectral::{
    analytic_eigenpairs, eigen_convergence_experiment, eigen_regularity_sweep, graph_eigenpairs,
    ConvergenceReport, ExperimentSpec, Solver,
};
use cloudlap::{build_eps_graph, sample_cloud, stats, KernelModel, Manifold, Point};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::output::Artifacts;
use crate::CliError;

fn kernel(m: &Manifold, kind: cloudlap::KernelKind) -> Result<KernelModel, CliError> {
    Ok(KernelModel::new(kind, m.intrinsic_dim())?)
}

fn point_from_angles(m: &Manifold, angles: &[f64]) -> Result<Point, CliError> {
    match angles {
        [a] => Ok(m.from_angles([*a, 0.0])),
        [a, b] => Ok(m.from_angles([*a, *b])),
        _ => Err(CliError::Usage("a point takes one or two angles".into())),
    }
}

fn cells(pairs: impl IntoIterator<Item = (usize, f64)>) -> Value {
    Value::Array(
        pairs
            .into_iter()
            .map(|(n, eps)| json!({ "n": n, "eps": eps }))
            .collect(),
    )
}

fn spec_of(
    manifold: ManifoldKind,
    density: &cloudlap::DensityModel,
    kind: cloudlap::KernelKind,
    n_list: &[usize],
    eps_rule: cloudlap::spectral::EpsRule,
    k: usize,
    seeds: usize,
    seed: u64,
) -> Result<ExperimentSpec, CliError> {
    let m = Manifold::new(manifold);
    Ok(ExperimentSpec {
        kernel: kernel(&m, kind)?,
        manifold: m,
        density: *density,
        n_list: n_list.to_vec(),
        eps_rule,
        k,
        seeds,
        base_seed: seed,
    })
}

use cloudlap::ManifoldKind;

// ---------------------------------------------------------------- sample

pub fn plan_sample(c: &SampleConfig) -> Value {
    json!({ "cells": [{ "n": c.n }], "seed": c.seed })
}

pub fn run_sample(c: &SampleConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let m = Manifold::new(c.manifold);
    if c.n == 0 {
        return Err(CliError::Usage("n must be positive".into()));
    }
    let pts = sample_cloud(&m, &c.density, c.n, c.seed);
    out.with("cloud.csv", |p| io::write_cloud(p, &m, &pts, c.seed))?;
    Ok(true)
}

// ---------------------------------------------------------------- graph

pub fn plan_graph(c: &GraphConfig) -> Value {
    json!({ "cells": cells([(c.n, c.eps)]), "seed": c.seed })
}

#[derive(Serialize)]
struct GraphSummary {
    n: usize,
    eps: f64,
    edges: usize,
    connected: bool,
    degree_min: f64,
    degree_max: f64,
    degree_mean: f64,
}

pub fn run_graph(c: &GraphConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let m = Manifold::new(c.manifold);
    let k = kernel(&m, c.kernel)?;
    let pts = sample_cloud(&m, &c.density, c.n, c.seed);
    let g = build_eps_graph(&m, pts, c.eps, &k)?;
    out.with("cloud.csv", |p| io::write_cloud(p, &m, &g.points, c.seed))?;
    let csv = out.path("graph.csv");
    out.with("graph.json", |side| g.write_csv(&csv, side))?;
    let deg: Vec<f64> = g.points.iter().map(|x| g.discrete_degree(x)).collect();
    out.table(
        "degrees.csv",
        &["index", "degree"],
        &deg.iter()
            .enumerate()
            .map(|(i, d)| vec![i.to_string(), fmt_f64(*d)])
            .collect::<Vec<_>>(),
    )?;
    let mut sorted = deg.clone();
    sorted.sort_by(f64::total_cmp);
    let rank: Vec<f64> = (0..sorted.len()).map(|i| i as f64).collect();
    out.curve(
        "degree_sorted",
        "sorted vertex degrees",
        "rank",
        "degree",
        &rank,
        &sorted,
        false,
    )?;
    out.json(
        "summary.json",
        &GraphSummary {
            n: g.n(),
            eps: g.eps,
            edges: g.weights.nnz() / 2,
            connected: g.connected,
            degree_min: stats::min(&deg),
            degree_max: stats::max(&deg),
            degree_mean: stats::mean(&deg),
        },
    )?;
    Ok(true)
}

// ---------------------------------------------------------------- eigs

pub fn plan_eigs(c: &EigsConfig) -> Value {
    json!({ "cells": cells([(c.n, c.eps)]), "k": c.k, "seed": c.seed })
}

#[derive(Serialize)]
struct EigsSummary {
    n: usize,
    eps: f64,
    k: usize,
    solver: Solver,
    connected: bool,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    orthogonality_defect: f64,
    /// Closed-form eigenvalues by index (uniform density only).
    analytic: Option<Vec<f64>>,
}

pub fn run_eigs(c: &EigsConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let m = Manifold::new(c.manifold);
    let k = kernel(&m, c.kernel)?;
    let pts = sample_cloud(&m, &c.density, c.n, c.seed);
    let g = build_eps_graph(&m, pts, c.eps, &k)?;
    let solver = match c.solver {
        SolverArg::Lanczos => Solver::Lanczos,
        SolverArg::Dense => Solver::Dense,
    };
    let sr = graph_eigenpairs(&g, c.k, c.seed, solver)?;
    let analytic = if c.density.is_uniform() {
        let pairs = analytic_eigenpairs(&m, &c.density, &k, c.k)?;
        let vals: Vec<f64> = pairs
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.eigenvalue, p.multiplicity))
            .take(c.k)
            .collect();
        Some(vals)
    } else {
        None
    };
    let rows: Vec<Vec<String>> = (0..sr.len())
        .map(|i| {
            vec![
                i.to_string(),
                fmt_f64(sr.eigenvalues[i]),
                fmt_f64(sr.residuals[i]),
                analytic.as_ref().map_or("nan".into(), |a| fmt_f64(a[i])),
            ]
        })
        .collect();
    out.table(
        "eigenvalues.csv",
        &["index", "lambda", "residual", "analytic"],
        &rows,
    )?;
    let header: Vec<String> = (0..sr.len()).map(|i| format!("f{i}")).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let vec_rows: Vec<Vec<String>> = (0..g.n())
        .map(|p| sr.eigenvectors.iter().map(|f| fmt_f64(f[p])).collect())
        .collect();
    out.table("eigenvectors.csv", &header_refs, &vec_rows)?;
    out.with("cloud.csv", |p| io::write_cloud(p, &m, &g.points, c.seed))?;
    let idx: Vec<f64> = (0..sr.len()).map(|i| i as f64).collect();
    out.curve(
        "eigenvalues",
        "graph Laplacian eigenvalues",
        "index",
        "lambda",
        &idx,
        &sr.eigenvalues,
        false,
    )?;
    if let Some(a) = &analytic {
        out.curve(
            "analytic_eigenvalues",
            "closed-form eigenvalues",
            "index",
            "lambda",
            &idx,
            a,
            false,
        )?;
    }
    out.json(
        "summary.json",
        &EigsSummary {
            n: g.n(),
            eps: g.eps,
            k: c.k,
            solver,
            connected: g.connected,
            orthogonality_defect: sr.orthogonality_defect(),
            eigenvalues: sr.eigenvalues.clone(),
            residuals: sr.residuals.clone(),
            analytic,
        },
    )?;
    Ok(true)
}

// ---------------------------------------------------------------- regularity

fn regularity_spec(c: &RegularityConfig) -> Result<ExperimentSpec, CliError> {
    spec_of(
        c.manifold, &c.density, c.kernel, &c.n_list, c.eps_rule, c.k, c.seeds, c.seed,
    )
}

pub fn plan_regularity(c: &RegularityConfig) -> Result<Value, CliError> {
    let spec = regularity_spec(c)?;
    Ok(json!({ "cells": cells(spec.plan()), "seeds": c.seeds }))
}

pub fn run_regularity(c: &RegularityConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let spec = regularity_spec(c)?;
    let sw = eigen_regularity_sweep(&spec, c.cap)?;
    let rows: Vec<Vec<String>> = sw
        .cells
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.eps),
                r.seed.to_string(),
                r.vectors.to_string(),
                fmt_f64(r.max_lipschitz_stat),
                fmt_f64(r.max_sup_stat),
                r.connected.to_string(),
            ]
        })
        .collect();
    out.table(
        "regularity.csv",
        &[
            "n",
            "eps",
            "seed",
            "vectors",
            "lipschitz_stat",
            "sup_stat",
            "connected",
        ],
        &rows,
    )?;
    let ns: Vec<f64> = sw.n_list.iter().map(|&n| n as f64).collect();
    out.curve(
        "lipschitz_stat",
        "median Lipschitz statistic",
        "n",
        "stat",
        &ns,
        &sw.median_lipschitz_stat,
        true,
    )?;
    out.curve(
        "sup_stat",
        "median sup statistic",
        "n",
        "stat",
        &ns,
        &sw.median_sup_stat,
        true,
    )?;
    let pass = sw.lipschitz_slope.slope.abs() <= c.slope_band && sw.sup_slope.slope.abs() <= c.slope_band;
    out.json(
        "summary.json",
        &json!({
            "cap": sw.cap,
            "n": sw.n_list,
            "eps": spec.plan().iter().map(|p| p.1).collect::<Vec<_>>(),
            "median_lipschitz_stat": sw.median_lipschitz_stat,
            "median_sup_stat": sw.median_sup_stat,
            "lipschitz_slope": sw.lipschitz_slope,
            "sup_slope": sw.sup_slope,
            "slope_band": c.slope_band,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

// ---------------------------------------------------------------- converge

fn converge_spec(c: &ConvergeConfig) -> Result<ExperimentSpec, CliError> {
    spec_of(
        c.manifold, &c.density, c.kernel, &c.n_list, c.eps_rule, c.k, c.seeds, c.seed,
    )
}

pub fn plan_converge(c: &ConvergeConfig) -> Result<Value, CliError> {
    let spec = converge_spec(c)?;
    Ok(json!({ "cells": cells(spec.plan()), "seeds": c.seeds, "k": c.k }))
}

pub fn run_converge(c: &ConvergeConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let spec = converge_spec(c)?;
    let rep = eigen_convergence_experiment(&spec)?;
    out.table("rates.csv", &ConvergenceReport::CSV_HEADER, &rep.csv_rows())?;
    for s in &rep.slopes {
        let i = s.index;
        out.curve(
            &format!("lambda_err_{i}"),
            &format!("median eigenvalue error, index {i}"),
            "eps",
            "err",
            &s.eps,
            &s.median_lambda_err,
            true,
        )?;
        out.curve(
            &format!("linf_err_{i}"),
            &format!("median sup error, index {i}"),
            "eps",
            "err",
            &s.eps,
            &s.median_linf_err,
            true,
        )?;
        out.curve(
            &format!("lip_err_{i}"),
            &format!("median Lipschitz error, index {i}"),
            "eps",
            "err",
            &s.eps,
            &s.median_lip_err,
            true,
        )?;
    }
    let in_band = |v: f64| v >= c.slope_min && v <= c.slope_max;
    let pass = match rep.slopes_for(c.check_index) {
        Some(s) => in_band(s.lambda_slope.slope) && in_band(s.linf_slope.slope) && in_band(s.lip_slope.slope),
        None => false,
    };
    out.json(
        "summary.json",
        &json!({
            "manifold": rep.manifold.to_string(),
            "kernel": rep.kernel,
            "n": rep.n_list,
            "eps_rule": rep.eps_rule.to_string(),
            "k": rep.k,
            "seeds": rep.seeds,
            "failed_cells": rep.failed_cells,
            "slopes": rep.slopes,
            "check_index": c.check_index,
            "slope_range": [c.slope_min, c.slope_max],
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

// ---------------------------------------------------------------- nonlocal

fn test_function(f: FunctionArg) -> TestFunction {
    let a = [0.6, -0.3, 0.5, 0.2];
    let b = [0.1, 0.7, -0.4, 0.3];
    match f {
        FunctionArg::Linear => TestFunction::Linear { a },
        FunctionArg::Quadratic => TestFunction::Quadratic { a, b },
        FunctionArg::Ridge => TestFunction::Ridge { a, k: 1.5 },
        FunctionArg::Angle => TestFunction::Angle {
            axis: 0,
            j: 2.0,
            phase: 0.3,
        },
    }
}

pub fn plan_nonlocal(c: &NonlocalConfig) -> Value {
    json!({ "eps": c.eps_list, "function": c.function })
}

pub fn run_nonlocal(c: &NonlocalConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let m = Manifold::new(c.manifold);
    let k = kernel(&m, c.kernel)?;
    let x = point_from_angles(&m, &c.x)?;
    let f = test_function(c.function);
    let sw = consistency_sweep(&m, &c.density, &k, &f, &x, &c.eps_list)?;
    let write = |out: &mut Artifacts, name: &str, res: &[f64], run: &[f64]| {
        let rows: Vec<Vec<String>> = (0..res.len())
            .map(|i| vec![fmt_f64(sw.eps[i]), fmt_f64(res[i]), fmt_f64(run[i])])
            .collect();
        out.table(name, &["epsilon", "residual", "slope_running"], &rows)
    };
    write(out, "residual_a.csv", &sw.residual_a, &sw.running_slopes_a())?;
    write(
        out,
        "residual_abar.csv",
        &sw.residual_abar,
        &sw.running_slopes_abar(),
    )?;
    out.curve(
        "residual_a",
        "A_eps consistency residual",
        "eps",
        "residual",
        &sw.eps,
        &sw.residual_a,
        true,
    )?;
    out.curve(
        "residual_abar",
        "Abar_eps consistency residual",
        "eps",
        "residual",
        &sw.eps,
        &sw.residual_abar,
        true,
    )?;
    let pass = sw.slope_a >= c.slope_min && sw.slope_abar >= c.slope_min;
    out.json(
        "sweep.json",
        &json!({
            "manifold": c.manifold.to_string(),
            "kernel": c.kernel.to_string(),
            "density": c.density.to_string(),
            "function": sw.function,
            "x": x,
            "slope_a": sw.slope_a,
            "slope_abar": sw.slope_abar,
            "a_abar_ratio": sw.a_abar_ratio,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

// ---------------------------------------------------------------- couple

fn walk(c: &CoupleConfig) -> Result<WalkConfig, CliError> {
    let m = Manifold::new(c.manifold);
    let cfg = WalkConfig {
        kernel: kernel(&m, c.kernel)?,
        x0: point_from_angles(&m, &c.x0)?,
        manifold: m,
        density: c.density,
        eps: c.eps,
        r: c.r,
        seed: c.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn plan_couple(c: &CoupleConfig) -> Result<Value, CliError> {
    let cfg = walk(c)?;
    let steps = c.max_steps.unwrap_or_else(|| default_max_steps(&cfg, c.d0));
    Ok(json!({ "eps": c.eps, "trials": c.trials, "max_steps": steps, "tau_eps": c.tau_eps }))
}

pub fn run_couple(c: &CoupleConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let cfg = walk(c)?;
    let y0 = start_point(&cfg, c.d0);
    let steps = c.max_steps.unwrap_or_else(|| default_max_steps(&cfg, c.d0));
    let st = coupling_statistics(&cfg, &y0, c.trials, steps)?;
    out.with("trials.csv", |p| st.write_trials_csv(p))?;
    out.json("statistics.json", &st)?;
    let mut pass = st.all_pass();
    if !c.tau_eps.is_empty() {
        let ts = tau_scaling(&cfg, c.d0, &c.tau_eps, c.trials)?;
        let ok = (ts.slope + 2.0).abs() <= c.tau_slope_band;
        pass &= ok;
        out.curve(
            "tau_scaling",
            "mean stopping time",
            "eps",
            "E[tau]",
            &ts.eps,
            &ts.mean_tau,
            true,
        )?;
        out.json(
            "tau_scaling.json",
            &json!({ "scaling": ts, "target": -2.0, "band": c.tau_slope_band, "pass": ok }),
        )?;
    }
    Ok(pass)
}

// ---------------------------------------------------------------- concentration

pub fn plan_concentration(c: &ConcentrationConfig) -> Value {
    json!({ "cells": cells(c.n_list.iter().map(|&n| (n, c.eps))), "seeds": c.seeds })
}

pub fn run_concentration(c: &ConcentrationConfig, out: &mut Artifacts) -> Result<bool, CliError> {
    let m = Manifold::new(c.manifold);
    let k = kernel(&m, c.kernel)?;
    let sweep = degree_uniformity_sweep(&m, &c.density, &k, &c.n_list, c.eps, c.seeds, c.seed)?;
    let ns: Vec<f64> = c.n_list.iter().map(|&n| n as f64).collect();
    let medians: Vec<f64> = sweep.reports.iter().map(|r| r.median).collect();
    out.table(
        "degree_uniformity.csv",
        &["n", "eps", "median", "sup"],
        &sweep
            .reports
            .iter()
            .map(|r| vec![r.n.to_string(), fmt_f64(r.eps), fmt_f64(r.median), fmt_f64(r.sup)])
            .collect::<Vec<_>>(),
    )?;
    out.curve(
        "degree_uniformity",
        "median degree deviation",
        "n",
        "sup deviation",
        &ns,
        &medians,
        true,
    )?;

    let mut count_rows = Vec::new();
    let mut counts_ok = true;
    let mut ratio_reports = Vec::new();
    for &n in &c.n_list {
        let ball = ball_count_check(&m, &c.density, n, c.eps, c.seeds, c.seed)?;
        let ann = annulus_count_check(&m, &c.density, n, c.eps, c.t, c.seeds, c.seed)?;
        for r in [&ball, &ann] {
            counts_ok &= r.pass;
            for s in 0..r.min_per_seed.len() {
                count_rows.push(vec![
                    r.statistic.clone(),
                    n.to_string(),
                    s.to_string(),
                    fmt_f64(r.min_per_seed[s]),
                    fmt_f64(r.max_per_seed[s]),
                ]);
            }
        }
        ratio_reports.push(ball);
        ratio_reports.push(ann);
    }
    out.table(
        "counts.csv",
        &["statistic", "n", "seed", "min", "max"],
        &count_rows,
    )?;

    let mut dc = Vec::new();
    if !c.skip_double_convolution {
        for &n in &c.n_list {
            dc.push(double_convolution_check(
                &m, &c.density, &k, n, c.eps, c.seeds, c.seed,
            )?);
        }
        let med: Vec<f64> = dc.iter().map(|r| r.median).collect();
        out.curve(
            "double_convolution",
            "median double convolution deviation",
            "n",
            "sup deviation",
            &ns,
            &med,
            true,
        )?;
    }
    let dc_decreasing = dc.windows(2).all(|w| w[1].median < w[0].median);
    let slope_ok = (sweep.slope.slope - c.slope_target).abs() <= c.slope_band;
    let pass = slope_ok && sweep.monotone && counts_ok && dc_decreasing;
    out.json(
        "summary.json",
        &json!({
            "degree_uniformity": sweep,
            "slope_target": c.slope_target,
            "slope_band": c.slope_band,
            "counts": ratio_reports,
            "double_convolution": dc,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}
