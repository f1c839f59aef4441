//! Single-run orchestration: solve, post-process, write artifacts, manifest.

use std::fs;
use std::path::Path as FsPath;
use std::time::Instant;

use olim2d::field::ScalarField;
use olim2d::io::{write_field_atomic, write_scalar_csv, FieldData};
use olim2d::models::binding_table;
use olim2d::postproc::{
    default_map_steps, error_report, gradient_field, hj_residual, trace_map, MapStatus, MapTrace,
};
use olim2d::rates::{find_saddle, transition_time, RateRequest};
use olim2d::solver::{solve, SolveResult, SolverConfig};
use olim2d::{Model, Vec2};

use crate::config::{ModelSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::{write_text_atomic, RunManifest};

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        nx: cfg.nx,
        ny: cfg.ny,
        k: cfg.k,
        domain: cfg.domain,
        boundary_policy: cfg.boundary,
    }
}

fn ensure_output_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::runtime("output-dir", e))
}

fn run_solver(model: &dyn Model, cfg: &RunConfig) -> Result<SolveResult> {
    solve(model, &solver_config(cfg)).map_err(|e| CliError::runtime("solve", e))
}

fn record_solve_stats(manifest: &mut RunManifest, result: &SolveResult) {
    manifest.stat("accepted_nodes", result.accept_order.len());
    manifest.stat("max_u", result.max_u());
    manifest.stat("heap_inserts", result.stats.heap_inserts);
    manifest.stat("heap_extracts", result.stats.heap_extracts);
    manifest.stat("one_point_updates", result.stats.one_point_updates);
    manifest.stat("triangle_solves", result.stats.triangle_solves);
    manifest.stat("solve_wall_time_s", result.stats.wall_time.as_secs_f64());
}

/// Write the artifacts requested by `cfg.outputs` for a solved field.
fn write_requested_outputs(
    model: &dyn Model,
    cfg: &RunConfig,
    result: &SolveResult,
    manifest: &mut RunManifest,
) -> Result<()> {
    let dir = &cfg.output_dir;
    let stage = |e: olim2d::Error| CliError::runtime("outputs", e);
    let u = result.u_field();
    if cfg.outputs.u_field {
        write_field_atomic(&dir.join("u.qpf"), &FieldData::Scalar(u.clone())).map_err(stage)?;
    }
    if cfg.outputs.u_csv {
        let mut text = Vec::new();
        write_scalar_csv(&mut text, &u).map_err(stage)?;
        write_text_atomic(&dir.join("u.csv"), &String::from_utf8_lossy(&text))
            .map_err(|e| CliError::runtime("outputs", e))?;
    }
    if cfg.outputs.labels {
        let data = result.label.iter().map(|&l| l as u8 as f64).collect();
        let field = ScalarField::from_data(result.grid, data).map_err(stage)?;
        write_field_atomic(&dir.join("labels.qpf"), &FieldData::Scalar(field)).map_err(stage)?;
    }
    if cfg.outputs.gradient {
        let grad = gradient_field(&u);
        write_field_atomic(&dir.join("gradient.qpf"), &FieldData::Vector(grad)).map_err(stage)?;
    }
    if cfg.outputs.residual {
        let res = hj_residual(&u, model);
        write_field_atomic(&dir.join("residual.qpf"), &FieldData::Scalar(res)).map_err(stage)?;
    }
    if cfg.outputs.error_report {
        let report = error_report(result, model).map_err(|e| CliError::runtime("error-report", e))?;
        let text = format!(
            "max_abs={}\nrms={}\nnormalized_max_abs={}\nn_valid_nodes={}\n",
            report.max_abs, report.rms, report.normalized_max_abs, report.n_valid_nodes
        );
        write_text_atomic(&dir.join("error_report.txt"), &text)
            .map_err(|e| CliError::runtime("error-report", e))?;
        manifest.stat("normalized_max_abs_error", report.normalized_max_abs);
    }
    Ok(())
}

/// `solve`: one sweep plus the requested artifacts.
pub fn run_single(cfg: &RunConfig) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = RunManifest::new("solve");
    ensure_output_dir(cfg)?;
    let model = cfg.model.build().map_err(|e| CliError::runtime("model", e))?;
    let result = run_solver(model.as_ref(), cfg)?;
    record_solve_stats(&mut manifest, &result);
    write_requested_outputs(model.as_ref(), cfg, &result, &mut manifest)?;
    manifest.wall_time = t0.elapsed();
    manifest.checksum_dir(&cfg.output_dir)?;
    manifest.write(&cfg.output_dir, cfg)
}

/// The saddle a MAP or rate run descends from, Newton-refined.
fn resolve_saddle(model: &dyn Model, cfg: &RunConfig) -> Result<Vec2> {
    let seed = cfg.map_start.or_else(|| cfg.model.saddle_seed()).ok_or_else(|| {
        CliError::usage(format!(
            "model '{}' has no default saddle; give map.start_x and map.start_y",
            cfg.model.name()
        ))
    })?;
    find_saddle(model, seed).map_err(|e| CliError::runtime("saddle", e))
}

/// Trace the MAP from just off the saddle down to the attractor.
fn trace_from_saddle(
    model: &dyn Model,
    cfg: &RunConfig,
    result: &SolveResult,
    saddle: Vec2,
) -> Result<(MapTrace, Vec2)> {
    let attractor = result
        .attractor_point
        .ok_or_else(|| CliError::runtime("map", "the attractor is not a single point"))?;
    let u = result.u_field();
    let grad = gradient_field(&u);
    let h = u.grid.h;
    let dir = (attractor - saddle) / (attractor - saddle).norm();
    let start = saddle + 1.95 * h * dir;
    let trace = trace_map(
        model,
        &grad,
        attractor,
        start,
        0.5 * h,
        default_map_steps(cfg.nx, cfg.ny),
    )
    .map_err(|e| CliError::runtime("map", e))?;
    Ok((trace, attractor))
}

fn status_name(status: MapStatus) -> &'static str {
    match status {
        MapStatus::ReachedAttractor => "reached-attractor",
        MapStatus::MaxSteps => "max-steps",
        MapStatus::LeftComputedRegion => "left-computed-region",
        MapStatus::Stalled => "stalled",
    }
}

fn write_map_csv(dir: &FsPath, trace: &MapTrace) -> Result<()> {
    let mut text = Vec::new();
    trace.path.write_csv(&mut text).map_err(|e| CliError::runtime("map", e))?;
    write_text_atomic(&dir.join("map.csv"), &String::from_utf8_lossy(&text))
        .map_err(|e| CliError::runtime("map", e))
}

/// `map`: solve, then trace the minimum action path saddle-to-attractor.
pub fn run_map(cfg: &RunConfig) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = RunManifest::new("map");
    ensure_output_dir(cfg)?;
    let model = cfg.model.build().map_err(|e| CliError::runtime("model", e))?;
    let result = run_solver(model.as_ref(), cfg)?;
    record_solve_stats(&mut manifest, &result);
    write_requested_outputs(model.as_ref(), cfg, &result, &mut manifest)?;

    let saddle = resolve_saddle(model.as_ref(), cfg)?;
    let (trace, _) = trace_from_saddle(model.as_ref(), cfg, &result, saddle)?;
    write_map_csv(&cfg.output_dir, &trace)?;
    manifest.stat("saddle_x", saddle.x);
    manifest.stat("saddle_y", saddle.y);
    manifest.stat("map_status", status_name(trace.status));
    manifest.stat("map_length", trace.path.total_length());

    manifest.wall_time = t0.elapsed();
    manifest.checksum_dir(&cfg.output_dir)?;
    manifest.write(&cfg.output_dir, cfg)
}

/// `rate`: solve, trace the MAP, evaluate the sharp transition-time
/// estimate at the configured noise strength.
pub fn run_rate(cfg: &RunConfig) -> Result<()> {
    if let ModelSpec::MaierStein { .. } = cfg.model {
        return Err(CliError::usage(
            "rate estimate refused for model 'maier-stein': the prefactor needs a twice \
             differentiable quasi-potential around the minimum action path, and this drift \
             produces a quasi-potential whose derivatives jump across the heteroclinic \
             segment through the saddle",
        ));
    }
    let t0 = Instant::now();
    let mut manifest = RunManifest::new("rate");
    ensure_output_dir(cfg)?;
    let model = cfg.model.build().map_err(|e| CliError::runtime("model", e))?;
    let result = run_solver(model.as_ref(), cfg)?;
    record_solve_stats(&mut manifest, &result);
    write_requested_outputs(model.as_ref(), cfg, &result, &mut manifest)?;

    let saddle = resolve_saddle(model.as_ref(), cfg)?;
    let (trace, attractor) = trace_from_saddle(model.as_ref(), cfg, &result, saddle)?;
    if trace.status != MapStatus::ReachedAttractor {
        return Err(CliError::runtime(
            "map",
            format!("path trace ended with status '{}'", status_name(trace.status)),
        ));
    }
    write_map_csv(&cfg.output_dir, &trace)?;

    let request = RateRequest {
        epsilon: cfg.rate_epsilon,
        saddle,
        equilibrium: attractor,
        map: trace.path.reversed(),
        hessian_stencil_mult: cfg.rate_stencil_mult,
    };
    let estimate = transition_time(&request, &result.u_field(), model.as_ref())
        .map_err(|e| CliError::runtime("rate", e))?;
    let text = format!("epsilon={}\n{}", cfg.rate_epsilon, estimate.to_record());
    write_text_atomic(&cfg.output_dir.join("rate.txt"), &text)
        .map_err(|e| CliError::runtime("rate", e))?;
    manifest.stat("expected_time", estimate.expected_time);
    manifest.stat("rate", estimate.rate);
    manifest.stat("barrier", estimate.barrier);

    manifest.wall_time = t0.elapsed();
    manifest.checksum_dir(&cfg.output_dir)?;
    manifest.write(&cfg.output_dir, cfg)
}

/// `export-tables`: dump the Lambda Phage operator binding table.
pub fn run_export_tables(cfg: &RunConfig) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = RunManifest::new("export-tables");
    ensure_output_dir(cfg)?;
    let mut text = String::from("or3,or2,or1,ci_bound,cro_bound,energy_kcal_per_mol\n");
    for state in binding_table() {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            state.digits[0],
            state.digits[1],
            state.digits[2],
            state.ci_bound,
            state.cro_bound,
            state.energy
        ));
    }
    write_text_atomic(&cfg.output_dir.join("binding_table.csv"), &text)
        .map_err(|e| CliError::runtime("export-tables", e))?;
    manifest.stat("states", 27);
    manifest.wall_time = t0.elapsed();
    manifest.checksum_dir(&cfg.output_dir)?;
    manifest.write(&cfg.output_dir, cfg)
}
