//! Convergence studies: solve over a grid-size list (and diffusion
//! parameter lists), tabulate errors, and fit the decay rate.

use std::time::Instant;

use rayon::prelude::*;

use olim2d::postproc::error_report;
use olim2d::solver::{solve, SolverConfig};

use crate::config::{ModelSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::{write_text_atomic, RunManifest};

#[derive(Debug, Clone)]
struct RowSpec {
    alpha: f64,
    gamma: f64,
    n: usize,
    k: usize,
    model: ModelSpec,
}

#[derive(Debug, Clone)]
struct RowResult {
    spec: RowSpec,
    /// `Ok((normalized max error, rms, wall seconds))` or the failure text.
    outcome: std::result::Result<(f64, f64, f64), String>,
}

fn run_row(spec: &RowSpec, cfg: &RunConfig) -> std::result::Result<(f64, f64, f64), String> {
    let model = spec.model.build().map_err(|e| e.to_string())?;
    let solver = SolverConfig {
        nx: spec.n,
        ny: spec.n,
        k: spec.k,
        domain: cfg.domain,
        boundary_policy: cfg.boundary,
    };
    let t0 = Instant::now();
    let result = solve(model.as_ref(), &solver).map_err(|e| e.to_string())?;
    let wall = t0.elapsed().as_secs_f64();
    let report = error_report(&result, model.as_ref()).map_err(|e| e.to_string())?;
    Ok((report.normalized_max_abs, report.rms, wall))
}

/// Least-squares fit of `E = C n^{-p}` through `(n, E)` pairs.
fn fit_power_law(points: &[(usize, f64)]) -> Option<(f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    Some((intercept.exp(), -slope))
}

/// `sweep`: one row per `(n, k, alpha, gamma)` combination, rows computed
/// in a worker pool, then a power-law fit per `(alpha, gamma)`.
pub fn run_sweep(cfg: &RunConfig) -> Result<()> {
    if !cfg.model.has_exact_u() {
        return Err(CliError::usage(format!(
            "convergence studies need an exact solution; model '{}' provides none",
            cfg.model.name()
        )));
    }
    let parametrized =
        matches!(cfg.model, ModelSpec::Linear { .. } | ModelSpec::MaierStein { .. });
    if !parametrized && (cfg.sweep.alphas != [0.0] || cfg.sweep.gammas != [1.0]) {
        return Err(CliError::usage(format!(
            "model '{}' has no (alpha, gamma) diffusion parameters to sweep",
            cfg.model.name()
        )));
    }

    let mut specs = Vec::new();
    for &alpha in &cfg.sweep.alphas {
        for &gamma in &cfg.sweep.gammas {
            let model = if parametrized {
                cfg.model.with_alpha_gamma(alpha, gamma)?
            } else {
                cfg.model.clone()
            };
            for &n in &cfg.sweep.n_list {
                specs.push(RowSpec { alpha, gamma, n, k: cfg.sweep.k_rule.k_for(n), model: model.clone() });
            }
        }
    }
    if specs.is_empty() {
        return Err(CliError::usage("sweep.n is empty"));
    }

    let t0 = Instant::now();
    let mut manifest = RunManifest::new("sweep");
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::runtime("output-dir", e))?;

    let rows: Vec<RowResult> = specs
        .par_iter()
        .map(|spec| RowResult { spec: spec.clone(), outcome: run_row(spec, cfg) })
        .collect();

    let mut rows_csv =
        String::from("model,alpha,gamma,n,k,normalized_max_error,rms,wall_time_s,status\n");
    for row in &rows {
        let s = &row.spec;
        match &row.outcome {
            Ok((emax, rms, wall)) => rows_csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},ok\n",
                s.model.name(), s.alpha, s.gamma, s.n, s.k, emax, rms, wall
            )),
            Err(msg) => rows_csv.push_str(&format!(
                "{},{},{},{},{},,,,failed: {}\n",
                s.model.name(), s.alpha, s.gamma, s.n, s.k, msg.replace([',', '\n'], ";")
            )),
        }
    }
    write_text_atomic(&cfg.output_dir.join("rows.csv"), &rows_csv)
        .map_err(|e| CliError::runtime("sweep", e))?;

    let mut fits_csv = String::from("alpha,gamma,n_points,c,p,status\n");
    for &alpha in &cfg.sweep.alphas {
        for &gamma in &cfg.sweep.gammas {
            let points: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.spec.alpha == alpha && r.spec.gamma == gamma)
                .filter_map(|r| r.outcome.as_ref().ok().map(|&(e, _, _)| (r.spec.n, e)))
                .filter(|&(_, e)| e.is_finite() && e > 0.0)
                .collect();
            match fit_power_law(&points) {
                Some((c, p)) => fits_csv
                    .push_str(&format!("{},{},{},{},{},ok\n", alpha, gamma, points.len(), c, p)),
                None => fits_csv.push_str(&format!(
                    "{},{},{},,,refused: needs at least 3 points\n",
                    alpha,
                    gamma,
                    points.len()
                )),
            }
        }
    }
    write_text_atomic(&cfg.output_dir.join("fits.csv"), &fits_csv)
        .map_err(|e| CliError::runtime("sweep", e))?;

    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    manifest.stat("rows", rows.len());
    manifest.stat("failed_rows", failed);
    manifest.wall_time = t0.elapsed();
    manifest.checksum_dir(&cfg.output_dir)?;
    manifest.write(&cfg.output_dir, cfg)
}
