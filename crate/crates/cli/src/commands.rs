//! One function per subcommand. Each writes its data files into a [`Sink`]
//! and returns a JSON summary that ends up in the manifest.

use std::fmt::Write as _;

use serde_json::{json, Value};

use sensoralloc::contour::equivalence_contours;
use sensoralloc::foundations::{
    cosine_expansion, emulate_sampler, independence_sweep, max_entropy_check, EmulationWindow, SamplerKernel,
};
use sensoralloc::io::{curve_to_csv, curves_to_csv, expansion_to_csv, field_to_csv, fmt_num, render_svg, SvgOptions};
use sensoralloc::optimal::{
    asymptotes, blend_optimal_set, integral_optimal_set, local_optimal_set, log_samples, CurveMeta,
};
use sensoralloc::sensitivity::{
    adaptation_change_map, max_sensitivity_set, preference_field, regime_classify, regime_field, sensitivity_map,
    AdaptationConfig, RegimeLabel,
};
use sensoralloc::tuning::run_simulation;
use sensoralloc::uncertainty::{equilibrium_1d, evaluate_field, global_minimum, joint_uncertainty_1d};
use sensoralloc::{Curve, CurveKind, ScalarField, UncertaintyWeights};

use crate::config::{OptimalMode, RunConfig};
use crate::error::CliError;
use crate::output::Sink;

type Outcome = Result<Value, CliError>;

/// Integral-set speeds swept by the prior-shift figure.
pub const PRIOR_SHIFT_SPEEDS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn svg_opts(title: &str, log_color: bool) -> SvgOptions<'_> {
    SvgOptions {
        title,
        log_color,
        ..Default::default()
    }
}

fn point_curve(t: f64, s: f64) -> Curve {
    Curve {
        kind: CurveKind::EquivalenceContour,
        points: vec![(t, s)],
        meta: CurveMeta::default(),
    }
}

fn minimum_json(w: &UncertaintyWeights) -> Value {
    let m = global_minimum(w);
    json!({ "t": m.t, "s": m.s, "u": m.u })
}

pub fn minimum(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let m = global_minimum(&cfg.weights);
    println!("T*={} S*={} U={}", m.t, m.s, m.u);
    sink.json("minimum", &m)?;
    Ok(minimum_json(&cfg.weights))
}

pub fn surface(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let field = evaluate_field(&cfg.grid, &cfg.weights)?;
    sink.csv("surface", || field_to_csv(&field))?;
    sink.json("surface", &field)?;
    sink.svg("surface", || {
        render_svg(Some(&field), &[], &svg_opts("Uncertainty U(T, S)", true))
    })?;
    Ok(json!({
        "minimum": minimum_json(&cfg.weights),
        "field_min": field.min(),
        "field_max": field.max(),
    }))
}

fn levels(cfg: &RunConfig) -> Vec<f64> {
    cfg.levels.clone().unwrap_or_default()
}

pub fn contours(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let field = evaluate_field(&cfg.grid, &cfg.weights)?;
    let curves = equivalence_contours(&field, &levels(cfg));
    sink.csv("contours", || curves_to_csv(&curves))?;
    sink.json("contours", &curves)?;
    sink.svg("contours", || {
        render_svg(Some(&field), &curves, &svg_opts("Equivalence contours", true))
    })?;
    let table: Vec<Value> = curves
        .iter()
        .enumerate()
        .map(|(k, c)| {
            json!({
                "curve": k,
                "level": c.meta.level,
                "points": c.points.len(),
                "closed": c.meta.closed,
                "flag": c.meta.flag,
            })
        })
        .collect();
    Ok(json!({ "minimum": minimum_json(&cfg.weights), "curves": table }))
}

/// Coupling / tradeoff label counts along one curve.
pub fn regime_counts(curve: &Curve, w: &UncertaintyWeights) -> Result<(usize, usize), CliError> {
    let mut coupling = 0;
    let mut tradeoff = 0;
    for &(t, s) in &curve.points {
        match regime_classify(t, s, w)? {
            RegimeLabel::Coupling => coupling += 1,
            RegimeLabel::Tradeoff => tradeoff += 1,
            _ => {}
        }
    }
    Ok((coupling, tradeoff))
}

pub fn regimes(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let labels = regime_field(&cfg.grid, &cfg.weights)?;
    let field = evaluate_field(&cfg.grid, &cfg.weights)?;
    let curves = equivalence_contours(&field, &levels(cfg));
    sink.csv("regimes", || field_to_csv(&labels))?;
    sink.json("regimes", &labels)?;
    sink.svg("regimes", || {
        render_svg(
            Some(&labels),
            &curves,
            &svg_opts("Regimes: tradeoff (dark) / coupling (light)", false),
        )
    })?;
    let count = |code: f64| labels.values.iter().filter(|&&v| v == code).count();
    let mut per_contour = Vec::new();
    for c in curves.iter().filter(|c| c.meta.closed) {
        let (coupling, tradeoff) = regime_counts(c, &cfg.weights)?;
        per_contour.push(json!({ "level": c.meta.level, "coupling": coupling, "tradeoff": tradeoff }));
    }
    Ok(json!({
        "cells": { "coupling": count(1.0), "tradeoff": count(-1.0), "other": count(0.0) },
        "closed_contours": per_contour,
    }))
}

fn mode_name(mode: OptimalMode) -> &'static str {
    match mode {
        OptimalMode::Local => "local",
        OptimalMode::Integral => "integral",
        OptimalMode::Blend => "blend",
    }
}

pub fn optimal_curve(cfg: &RunConfig, mode: OptimalMode, v_e: f64) -> Result<Curve, CliError> {
    let ts = log_samples(cfg.grid.t_min, cfg.grid.t_max, cfg.optimal.t_samples);
    Ok(match mode {
        OptimalMode::Local => local_optimal_set(&cfg.weights, &ts)?,
        OptimalMode::Integral => integral_optimal_set(&cfg.weights, v_e, &ts)?,
        OptimalMode::Blend => blend_optimal_set(&cfg.weights, v_e, cfg.optimal.gamma, &ts)?,
    })
}

fn curve_summary(c: &Curve) -> Value {
    json!({
        "points": c.points.len(),
        "omitted": c.meta.omitted,
        "residual_max": c.meta.residual_max,
    })
}

pub fn optimal_set(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let mode = cfg.optimal.mode;
    let name = format!("optimal_{}", mode_name(mode));
    let curve = optimal_curve(cfg, mode, cfg.optimal.v_e)?;
    let m = global_minimum(&cfg.weights);
    sink.csv(&name, || curve_to_csv(&curve, false))?;
    sink.json(&name, &curve)?;
    sink.svg(&name, || {
        let field = evaluate_field(&cfg.grid, &cfg.weights).expect("validated grid");
        render_svg(
            Some(&field),
            &[curve.clone(), point_curve(m.t, m.s)],
            &svg_opts(&format!("{} optimal set", mode_name(mode)), true),
        )
    })?;
    let mut summary = json!({
        "mode": mode_name(mode),
        "curve": curve_summary(&curve),
        "minimum": minimum_json(&cfg.weights),
    });
    if mode != OptimalMode::Local {
        let (t_min, s_inf) = asymptotes(&cfg.weights, cfg.optimal.v_e)?;
        summary["asymptotes"] = json!({ "t_min": t_min, "s_inf": s_inf });
    }
    Ok(summary)
}

fn field_extrema(f: &ScalarField) -> Value {
    let (i, j) = f.argmax();
    let (t, s) = f.point(i, j);
    json!({ "min": f.min(), "max": f.max(), "argmax": { "i": i, "j": j, "t": t, "s": s } })
}

pub fn sensitivity(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let map = sensitivity_map(&cfg.prior, &cfg.grid, &cfg.weights, &cfg.model)?;
    sink.csv("sensitivity", || field_to_csv(&map))?;
    sink.json("sensitivity", &map)?;
    sink.svg("sensitivity", || {
        render_svg(Some(&map), &[], &svg_opts("Sensitivity", true))
    })?;
    Ok(field_extrema(&map))
}

pub fn adapt(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let ac = AdaptationConfig {
        prior_a: cfg.prior_a.clone(),
        prior_b: cfg.prior_b.clone(),
        model: cfg.model,
        grid: cfg.grid,
        weights: cfg.weights,
    };
    let map = adaptation_change_map(&ac)?;
    sink.csv("adapt", || field_to_csv(&map))?;
    sink.json("adapt", &map)?;
    sink.svg("adapt", || {
        render_svg(Some(&map), &[], &svg_opts("Adaptation change (%)", true))
    })?;
    let mut summary = field_extrema(&map);
    summary["cells_above_100"] = json!(map.values.iter().filter(|&&v| v > 100.0).count());
    summary["cells_below_100"] = json!(map.values.iter().filter(|&&v| v < 100.0).count());
    Ok(summary)
}

pub fn maxset(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let curve = max_sensitivity_set(&cfg.prior, &cfg.grid, &cfg.weights, &cfg.model)?;
    sink.csv("maxset", || curve_to_csv(&curve, true))?;
    sink.json("maxset", &curve)?;
    sink.svg("maxset", || {
        let map = sensitivity_map(&cfg.prior, &cfg.grid, &cfg.weights, &cfg.model).expect("validated inputs");
        render_svg(
            Some(&map),
            std::slice::from_ref(&curve),
            &svg_opts("Maximal-sensitivity set", true),
        )
    })?;
    Ok(curve_summary(&curve))
}

pub fn simulate(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let sim = cfg.simulation_config();
    let summary = run_simulation(&sim)?;
    sink.csv("simulate_density", || field_to_csv(&summary.final_density))?;
    sink.csv("simulate_stats", || {
        let mut out = String::from("epoch,median_uncertainty,mean_uncertainty\n");
        for s in &summary.stats {
            let _ = writeln!(
                out,
                "{},{},{}",
                s.epoch,
                fmt_num(s.median_uncertainty),
                fmt_num(s.mean_uncertainty)
            );
        }
        out
    })?;
    sink.csv("simulate_population", || {
        let mut out = String::from("T,S\n");
        for st in &summary.final_population {
            let _ = writeln!(out, "{},{}", fmt_num(st.t), fmt_num(st.s));
        }
        out
    })?;
    sink.json("simulate", &summary)?;
    sink.svg("simulate_density", || {
        render_svg(
            Some(&summary.final_density),
            &[],
            &svg_opts("Final sensor density", false),
        )
    })?;
    let (first, last) = (summary.first(), summary.last());
    println!(
        "median uncertainty {} -> {}, spearman rho {:.4}",
        first.median_uncertainty, last.median_uncertainty, summary.comparison.spearman_rho
    );
    Ok(json!({
        "median_first": first.median_uncertainty,
        "median_last": last.median_uncertainty,
        "mean_first": first.mean_uncertainty,
        "mean_last": last.mean_uncertainty,
        "comparison": summary.comparison,
    }))
}

pub fn expand(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let x = &cfg.expansion;
    let kernel = SamplerKernel::gaussian(x.base_width)?;
    let e = cosine_expansion(x.omega0, &kernel, x.n_points, x.half_range)?;
    let err = e.sup_error(-x.eval_half_width, x.eval_half_width, 2001);
    let meta = json!({
        "kernel": kernel,
        "omega0": x.omega0,
        "n_points": x.n_points,
        "half_range": x.half_range,
        "eval_interval": [-x.eval_half_width, x.eval_half_width],
        "sup_error": err,
    });
    sink.csv("expand", || expansion_to_csv(&e))?;
    sink.json("expand", &meta)?;
    println!("sup error {err:e} over {} replicas", e.coefficients.len());
    Ok(meta)
}

pub fn emulate(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let x = &cfg.expansion;
    let target = SamplerKernel::gaussian(x.target_width)?;
    let base = SamplerKernel::gaussian(x.base_width)?;
    let window = EmulationWindow {
        series_half_width: x.series_half_width,
        eval_half_width: x.emulation_eval_half_width,
    };
    let (e, err) = emulate_sampler(
        &target,
        &base,
        x.n_harmonics,
        x.n_points,
        x.emulation_half_range,
        window,
    )?;
    let meta = json!({
        "target": target,
        "base": base,
        "n_harmonics": x.n_harmonics,
        "n_points": x.n_points,
        "half_range": x.emulation_half_range,
        "window": window,
        "replicas": e.coefficients.len(),
        "sup_error": err,
    });
    sink.csv("emulate", || expansion_to_csv(&e))?;
    sink.json("emulate", &meta)?;
    println!("sup error {err:e} over {} replicas", e.coefficients.len());
    Ok(meta)
}

pub fn entropy_check(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let h = &cfg.entropy;
    let reports = log_samples(h.sigma_min, h.sigma_max, h.n_sigmas)
        .into_iter()
        .map(max_entropy_check)
        .collect::<Result<Vec<_>, _>>()?;
    let sweep = independence_sweep(h.n_joints, h.joint_size, h.joint_size, cfg.seed)?;
    sink.csv("entropy", || {
        let mut out =
            String::from("sigma,gaussian,uniform,laplace,gaussian_quadrature,uniform_quadrature,laplace_quadrature\n");
        for r in &reports {
            let row = [
                r.sigma,
                r.gaussian,
                r.uniform,
                r.laplace,
                r.gaussian_quadrature,
                r.uniform_quadrature,
                r.laplace_quadrature,
            ];
            let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    })?;
    let gaussian_largest = reports.iter().all(|r| r.gaussian_is_largest());
    let max_err = reports.iter().map(|r| r.max_quadrature_error()).fold(0.0, f64::max);
    let summary = json!({
        "gaussian_largest_everywhere": gaussian_largest,
        "max_quadrature_error": max_err,
        "independence": sweep,
    });
    sink.json("entropy", &json!({ "max_entropy": reports, "independence": sweep }))?;
    println!(
        "gaussian largest: {gaussian_largest}, quadrature error {max_err:e}, min slack {:e}",
        sweep.min_slack
    );
    Ok(summary)
}

/// One-dimensional uncertainty and preference over the spatial interval,
/// with the preference after the frequency weight is quadrupled.
fn figure_2c(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let w = cfg.weights.spatial();
    let mut shifted = w;
    shifted.freq *= 4.0;
    let xs = log_samples(cfg.grid.s_min, cfg.grid.s_max, cfg.grid.n_s);
    let mut rows = String::from("x,uncertainty,preference,preference_shifted\n");
    for &x in &xs {
        let u = joint_uncertainty_1d(x, w)?;
        let u2 = joint_uncertainty_1d(x, shifted)?;
        let _ = writeln!(
            rows,
            "{},{},{},{}",
            fmt_num(x),
            fmt_num(u),
            fmt_num(1.0 / u),
            fmt_num(1.0 / u2)
        );
    }
    sink.csv("preference_1d", || rows)?;
    let (x0, u0) = equilibrium_1d(w);
    let (x1, u1) = equilibrium_1d(shifted);
    Ok(json!({
        "equilibrium": { "x": x0, "u": u0 },
        "equilibrium_shifted": { "x": x1, "u": u1 },
    }))
}

fn figure_4(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let field = evaluate_field(&cfg.grid, &cfg.weights)?;
    let pref = preference_field(&field)?;
    sink.csv("preference", || field_to_csv(&pref))?;
    let regimes = regimes(cfg, sink)?;
    Ok(json!({ "regimes": regimes }))
}

fn figure_5c_6c(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let local = optimal_curve(cfg, OptimalMode::Local, cfg.optimal.v_e)?;
    let integral = optimal_curve(cfg, OptimalMode::Integral, cfg.optimal.v_e)?;
    let m = global_minimum(&cfg.weights);
    sink.csv("optimal_local", || curve_to_csv(&local, false))?;
    sink.csv("optimal_integral", || curve_to_csv(&integral, false))?;
    sink.svg("optimal_sets", || {
        let field = evaluate_field(&cfg.grid, &cfg.weights).expect("validated grid");
        render_svg(
            Some(&field),
            &[local.clone(), integral.clone(), point_curve(m.t, m.s)],
            &svg_opts("Local (red) and integral (blue) optimal sets", true),
        )
    })?;
    Ok(json!({
        "v_e": cfg.optimal.v_e,
        "local": curve_summary(&local),
        "integral": curve_summary(&integral),
        "minimum": minimum_json(&cfg.weights),
    }))
}

fn figure_7(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let mut table = String::from("v_e,t_min,s_inf\n");
    let mut curves = Vec::new();
    let mut rows = Vec::new();
    for &v in &PRIOR_SHIFT_SPEEDS {
        let curve = optimal_curve(cfg, OptimalMode::Integral, v)?;
        let (t_min, s_inf) = asymptotes(&cfg.weights, v)?;
        let _ = writeln!(table, "{},{},{}", fmt_num(v), fmt_num(t_min), fmt_num(s_inf));
        sink.csv(&format!("integral_ve_{v}"), || curve_to_csv(&curve, false))?;
        rows.push(json!({ "v_e": v, "t_min": t_min, "s_inf": s_inf }));
        curves.push(curve);
    }
    sink.csv("asymptotes", || table)?;
    sink.svg("prior_shift", || {
        render_svg(
            None,
            &curves,
            &svg_opts("Integral optimal sets by expected speed", false),
        )
    })?;
    Ok(json!({ "asymptotes": rows }))
}

fn figure_9(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
    let a = sensitivity_map(&cfg.prior_a, &cfg.grid, &cfg.weights, &cfg.model)?;
    let b = sensitivity_map(&cfg.prior_b, &cfg.grid, &cfg.weights, &cfg.model)?;
    sink.csv("sensitivity_a", || field_to_csv(&a))?;
    sink.csv("sensitivity_b", || field_to_csv(&b))?;
    adapt(cfg, sink)
}

/// Runs the figure pipelines into one subdirectory each.
pub fn reproduce_figures(cfg: &RunConfig, sink: &mut Sink, with_simulation: bool) -> Outcome {
    type Figure = fn(&RunConfig, &mut Sink) -> Outcome;
    fn fig_3b(cfg: &RunConfig, sink: &mut Sink) -> Outcome {
        Ok(json!({ "surface": surface(cfg, sink)?, "contours": contours(cfg, sink)? }))
    }
    let mut figures: Vec<(&str, Figure)> = vec![
        ("fig2c", figure_2c),
        ("fig3b", fig_3b),
        ("fig4", figure_4),
        ("fig5c_6c", figure_5c_6c),
        ("fig7", figure_7),
        ("fig8", maxset),
        ("fig9", figure_9),
    ];
    if with_simulation {
        figures.push(("simulation", simulate));
    }
    let mut index = serde_json::Map::new();
    for (name, run) in figures {
        let mut sub = sink.subdir(name, cfg)?;
        let summary = run(cfg, &mut sub)?;
        sub.finish(name, cfg, &summary)?;
        index.insert(name.to_string(), summary);
    }
    println!("figures written to {}", sink.dir().display());
    Ok(Value::Object(index))
}
