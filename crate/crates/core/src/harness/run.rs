//! Experiment execution over the level grid.
//!
//! Every experiment validates its configuration before any computation,
//! writes canonically ordered CSV rows plus a JSON summary, and records a
//! manifest. Unit failures abort the run unless `keep_going` is set, in
//! which case they are recorded in the manifest and the run fails at the
//! end.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, SymbolKind};
use super::emit::{emit_csv, emit_json, Cell};
use super::manifest::RunManifest;
use crate::dynamics::{correlation_exact, correlation_horizon, correlation_quadrature, validate_cat_map};
use crate::error::{Error, Result};
use crate::geometry::{build_log_good_cover, log_scale, verify_log_good_cover, TorusPoint};
use crate::observables::{
    density_one_extract, default_markov_threshold, dilated_deviation_statistic, egorov_remainder,
    mass_sweep, quantum_variance, variance_dilated_symbol,
};
use crate::quantize::quantize;
use crate::spectral::{cluster_degeneracies, eigendecompose, orthonormality_defect, resample_degenerate_basis};
use crate::theta::{make_space, GridSpec, SectionCoeffs};
use crate::zeros::{locate_zeros, potential_l1, scaled_zero_pairing, zero_discrepancy_in_ball};

pub struct RunOutput {
    pub out_dir: PathBuf,
    pub result_files: Vec<PathBuf>,
    pub manifest: RunManifest,
}

/// Execute the configured experiment; `out_override` replaces the
/// config's output directory.
pub fn run(cfg: &ExperimentConfig, out_override: Option<&Path>, keep_going: bool) -> Result<RunOutput> {
    crate::init_runtime();
    cfg.validate()?;
    let out_dir = out_override
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir))
        .join(cfg.experiment.as_str());
    std::fs::create_dir_all(&out_dir)?;
    let mut manifest = RunManifest::new(cfg);
    let mut files = Vec::new();

    let result = match cfg.experiment {
        ExperimentKind::Spectrum => run_spectrum(cfg, &out_dir, &mut manifest, &mut files, keep_going),
        ExperimentKind::Variance => run_variance(cfg, &out_dir, &mut manifest, &mut files, keep_going),
        ExperimentKind::Mass => run_mass(cfg, &out_dir, &mut manifest, &mut files, keep_going),
        ExperimentKind::Zeros => run_zeros(cfg, &out_dir, &mut manifest, &mut files, keep_going),
        ExperimentKind::Egorov => run_egorov(cfg, &out_dir, &mut manifest, &mut files, keep_going),
        ExperimentKind::Kernel => run_kernel(cfg, &out_dir, &mut manifest, &mut files, keep_going),
        ExperimentKind::Correlations => {
            run_correlations(cfg, &out_dir, &mut manifest, &mut files, keep_going)
        }
        ExperimentKind::Cover => run_cover(cfg, &out_dir, &mut manifest, &mut files, keep_going),
        ExperimentKind::Accept => run_accept(cfg, &out_dir, &mut manifest, &mut files),
    };
    result?;

    emit_json(&out_dir.join("manifest.json"), &manifest)?;
    if !manifest.failures.is_empty() {
        return Err(Error::Unit(format!(
            "{} unit(s) failed: {}",
            manifest.failures.len(),
            manifest.failures.join("; ")
        )));
    }
    Ok(RunOutput { out_dir, result_files: files, manifest })
}

/// Run one per-level unit, recording failures under keep-going.
fn unit<T>(
    manifest: &mut RunManifest,
    keep_going: bool,
    label: String,
    f: impl FnOnce() -> Result<T>,
) -> Result<Option<T>> {
    let start = std::time::Instant::now();
    match f() {
        Ok(v) => {
            manifest.timings.push((label, start.elapsed().as_secs_f64()));
            Ok(Some(v))
        }
        Err(e) if keep_going => {
            manifest.failures.push(format!("{label}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn run_spectrum(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
    keep_going: bool,
) -> Result<()> {
    let map = validate_cat_map(cfg.map)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n in &cfg.n_grid {
        let ok = unit(manifest, keep_going, format!("spectrum N={n}"), || {
            let u = quantize(&map, n)?;
            let es = eigendecompose(&u)?;
            let clusters = cluster_degeneracies(&es, 1e-8)?;
            let es = resample_degenerate_basis(&es, &clusters, cfg.seed);
            Ok((u.unitarity_defect(), es, clusters))
        })?;
        if let Some((defect, es, clusters)) = ok {
            for j in 0..es.n {
                rows.push(vec![
                    Cell::UInt(n),
                    Cell::UInt(j as u64),
                    Cell::Float(es.phases[j]),
                    Cell::Float(es.residuals[j]),
                ]);
            }
            summaries.push(json!({
                "n": n,
                "unitarity_defect": defect,
                "orthonormality_defect": orthonormality_defect(&es),
                "cluster_count": clusters.clusters.len(),
                "max_cluster": clusters.sizes().into_iter().max().unwrap_or(0),
            }));
        }
    }
    let path = out.join("results_spectrum.csv");
    emit_csv(&path, &["n", "j", "phase", "residual"], &rows)?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(&spath, &json!({ "schema_version": 1, "experiment": "spectrum", "levels": summaries }))?;
    files.push(spath);
    Ok(())
}

fn run_variance(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
    keep_going: bool,
) -> Result<()> {
    let map = validate_cat_map(cfg.map)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n in &cfg.n_grid {
        let ok = unit(manifest, keep_going, format!("variance N={n}"), || {
            let u = quantize(&map, n)?;
            let es = eigendecompose(&u)?;
            let clusters = cluster_degeneracies(&es, 1e-8)?;
            let es = resample_degenerate_basis(&es, &clusters, cfg.seed);
            let rec = match cfg.symbol_kind {
                SymbolKind::Bump => {
                    let space = make_space(n)?;
                    let p = TorusPoint::new(cfg.center_x, cfg.center_y);
                    let (rec, comparison) = variance_dilated_symbol(
                        &space,
                        &p,
                        cfg.gamma,
                        cfg.radius_prefactor,
                        n,
                        &es,
                    )?;
                    (rec, Some(comparison))
                }
                _ => (quantum_variance(&cfg.trig_symbol(), n, &es, &cfg.symbol_label()), None),
            };
            Ok(rec)
        })?;
        if let Some((rec, comparison)) = ok {
            for (j, &(re, im)) in rec.elements.iter().enumerate() {
                rows.push(vec![
                    Cell::UInt(n),
                    Cell::Str(rec.symbol.clone()),
                    Cell::UInt(j as u64),
                    Cell::Float(re),
                    Cell::Float(im),
                    Cell::Float(rec.mean_re),
                    Cell::Float(rec.variance),
                ]);
            }
            // density-one filtering on the per-section deviations
            let mean = C64::new(rec.mean_re, rec.mean_im);
            let devs: Vec<f64> = rec
                .elements
                .iter()
                .map(|&(re, im)| (C64::new(re, im) - mean).norm_sqr())
                .collect();
            let a = default_markov_threshold(rec.variance, n);
            let gs = density_one_extract(&devs, a);
            manifest.markov_thresholds.push((n, a));
            let filtered_variance = if gs.generic.is_empty() {
                0.0
            } else {
                gs.generic.iter().map(|&i| devs[i]).sum::<f64>() / gs.generic.len() as f64
            };
            summaries.push(json!({
                "n": n,
                "symbol": rec.symbol,
                "variance": rec.variance,
                "variance_times_log_n": rec.variance * (n as f64).ln(),
                "filtered_variance": filtered_variance,
                "exceptional_count": gs.exceptional.len(),
                "comparison_log_power": comparison,
            }));
        }
    }
    let path = out.join("results_variance.csv");
    emit_csv(
        &path,
        &["N", "symbol", "j", "elem_re", "elem_im", "mean", "variance"],
        &rows,
    )?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(&spath, &json!({ "schema_version": 1, "experiment": "variance", "levels": summaries }))?;
    files.push(spath);
    Ok(())
}

fn run_mass(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
    keep_going: bool,
) -> Result<()> {
    let map = validate_cat_map(cfg.map)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n in &cfg.n_grid {
        let ok = unit(manifest, keep_going, format!("mass N={n}"), || {
            let space = make_space(n)?;
            let u = quantize(&map, n)?;
            let es = eigendecompose(&u)?;
            let clusters = cluster_degeneracies(&es, 1e-8)?;
            let es = resample_degenerate_basis(&es, &clusters, cfg.seed);
            let scale = log_scale(cfg.gamma_prime, n)?;
            mass_sweep(&space, &es, &scale, cfg.radius_prefactor, cfg.seed, cfg.max_sections, None)
        })?;
        if let Some((records, summary, cover)) = ok {
            manifest.grids.push((n, GridSpec::for_space(n, cover.radius).m));
            for (ball_idx, r) in records.iter().enumerate() {
                rows.push(vec![
                    Cell::UInt(n),
                    Cell::UInt(r.j as u64),
                    Cell::UInt((ball_idx % cover.centers.len()) as u64),
                    Cell::Float(r.center_x),
                    Cell::Float(r.center_y),
                    Cell::Float(r.radius),
                    Cell::Float(r.sharp),
                    Cell::Float(r.smooth),
                    Cell::Float(r.ratio),
                ]);
            }
            summaries.push(serde_json::to_value(&summary)?);
        }
    }
    let path = out.join("results_mass.csv");
    emit_csv(
        &path,
        &["n", "j", "ball", "center_x", "center_y", "radius", "sharp", "smooth", "ratio"],
        &rows,
    )?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(&spath, &json!({ "schema_version": 1, "experiment": "mass", "levels": summaries }))?;
    files.push(spath);
    Ok(())
}

fn run_zeros(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
    keep_going: bool,
) -> Result<()> {
    let map = validate_cat_map(cfg.map)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n in &cfg.n_grid {
        let ok = unit(manifest, keep_going, format!("zeros N={n}"), || {
            let space = make_space(n)?;
            let u = quantize(&map, n)?;
            let es = eigendecompose(&u)?;
            let clusters = cluster_degeneracies(&es, 1e-8)?;
            let es = resample_degenerate_basis(&es, &clusters, cfg.seed);

            // sampled sections, density-one filtered at the finer scale
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut sections: Vec<usize> = (0..es.n).collect();
            if es.n > cfg.max_sections {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
                sections.shuffle(&mut rng);
                sections.truncate(cfg.max_sections);
                sections.sort_unstable();
            }
            let probes = [
                TorusPoint::new(0.25, 0.25),
                TorusPoint::new(0.75, 0.25),
                TorusPoint::new(0.25, 0.75),
                TorusPoint::new(0.75, 0.75),
            ];
            let stats =
                dilated_deviation_statistic(&space, &es, &probes, cfg.gamma_prime, cfg.radius_prefactor)?;
            let sampled: Vec<f64> = sections.iter().map(|&j| stats[j]).collect();
            let a = default_markov_threshold(
                sampled.iter().sum::<f64>() / sampled.len() as f64,
                n,
            );
            let gs = density_one_extract(&sampled, a);

            let scale = log_scale(cfg.gamma, n)?;
            let eps = scale.radius(cfg.radius_prefactor);
            let cover = build_log_good_cover(&scale, cfg.radius_prefactor)?;
            let p = TorusPoint::new(cfg.center_x, cfg.center_y);
            let eta = |ux: f64, uy: f64| {
                let r2 = ux * ux + uy * uy;
                (1.0 - r2) * (1.0 - r2)
            };

            let mut out_rows = Vec::new();
            let mut medians = Vec::new();
            for (si, &j) in sections.iter().enumerate() {
                let filtered_in = gs.generic.contains(&si);
                let s = SectionCoeffs::new(es.vectors.col(j).to_vec());
                let zs = locate_zeros(&space, &s)?;
                let mut ds: Vec<f64> = cover
                    .centers
                    .iter()
                    .map(|c| zero_discrepancy_in_ball(&zs, c, eps))
                    .collect();
                ds.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let median = ds[ds.len() / 2];
                let pairing = scaled_zero_pairing(&zs, &p, eps, eta)?;
                let pot = potential_l1(&space, &s, &zs, &p, eps)?;
                if filtered_in {
                    medians.push(median);
                }
                out_rows.push((j, zs.total_count, median, pairing, pot, filtered_in));
            }
            medians.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let median_of_medians = medians.get(medians.len() / 2).copied().unwrap_or(f64::NAN);
            Ok((out_rows, median_of_medians, gs.exceptional.len(), eps))
        })?;
        if let Some((out_rows, median, excluded, eps)) = ok {
            for (j, count, med, pairing, pot, filtered_in) in &out_rows {
                rows.push(vec![
                    Cell::UInt(n),
                    Cell::UInt(*j as u64),
                    Cell::UInt(*count as u64),
                    Cell::Float(*med),
                    Cell::Float(pairing.value),
                    Cell::Float(pairing.reference),
                    Cell::Float(pot.value),
                    Cell::Float(pot.normalized),
                    Cell::Int(i64::from(*filtered_in)),
                ]);
            }
            summaries.push(json!({
                "n": n,
                "eps": eps,
                "median_discrepancy_filtered": median,
                "excluded": excluded,
            }));
        }
    }
    let path = out.join("results_zeros.csv");
    emit_csv(
        &path,
        &[
            "n",
            "j",
            "zero_count",
            "median_discrepancy",
            "pairing_value",
            "pairing_reference",
            "potential_l1",
            "potential_l1_normalized",
            "in_generic_set",
        ],
        &rows,
    )?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(&spath, &json!({ "schema_version": 1, "experiment": "zeros", "levels": summaries }))?;
    files.push(spath);
    Ok(())
}

fn run_egorov(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
    keep_going: bool,
) -> Result<()> {
    let map = validate_cat_map(cfg.map)?;
    let f = cfg.trig_symbol();
    let label = cfg.symbol_label();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n in &cfg.n_grid {
        let ok = unit(manifest, keep_going, format!("egorov N={n}"), || {
            let u = quantize(&map, n)?;
            let mut recs = Vec::new();
            for &t in &cfg.t_list {
                let w = if t >= 0 {
                    u.power(t as u32)
                } else {
                    u.adjoint().power((-t) as u32)
                };
                recs.push(egorov_remainder(&map, &w.mat, &f, t, &label)?);
            }
            Ok(recs)
        })?;
        if let Some(recs) = ok {
            for r in &recs {
                rows.push(vec![
                    Cell::UInt(n),
                    Cell::Int(r.t),
                    Cell::Str(r.symbol.clone()),
                    Cell::Float(r.value),
                ]);
            }
            summaries.push(json!({
                "n": n,
                "values": recs.iter().map(|r| (r.t, r.value)).collect::<Vec<_>>(),
            }));
        }
    }
    let path = out.join("results_egorov.csv");
    emit_csv(&path, &["n", "t", "symbol", "value"], &rows)?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(&spath, &json!({ "schema_version": 1, "experiment": "egorov", "levels": summaries }))?;
    files.push(spath);
    Ok(())
}

fn run_kernel(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
    keep_going: bool,
) -> Result<()> {
    use crate::asymptotics::{agmon_fit, calibrate_metric, gaussian_neardiag_check, scaling_limit_sup};
    use crate::theta::bergman_diag;
    // calibrate once at the largest level, then freeze
    let n_max = *cfg.n_grid.iter().max().unwrap();
    let cal = calibrate_metric(&make_space(n_max)?);
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let ok = unit(manifest, keep_going, format!("kernel N={n}"), || {
            let space = make_space(n)?;
            let mut diag_dev = 0.0f64;
            for i in 0..17 {
                for j in 0..17 {
                    let z = TorusPoint::new(i as f64 / 17.0, j as f64 / 17.0);
                    diag_dev = diag_dev.max((bergman_diag(&space, &z) / n as f64 - 1.0).abs());
                }
            }
            let agmon = agmon_fit(&space, 64);
            let gauss = gaussian_neardiag_check(&space, 64);
            let sup = scaling_limit_sup(&space, &cal, 9);
            Ok((diag_dev, agmon, gauss, sup))
        })?;
        if let Some((diag_dev, agmon, gauss, sup)) = ok {
            rows.push(vec![
                Cell::UInt(n),
                Cell::Float(diag_dev),
                Cell::Float(agmon.constant("A1").unwrap_or(f64::NAN)),
                Cell::Float(agmon.constant("A2").unwrap_or(f64::NAN)),
                Cell::Float(agmon.max_rel_residual),
                Cell::Float(gauss.constant("c").unwrap_or(f64::NAN)),
                Cell::Float(gauss.constant("A3").unwrap_or(f64::NAN)),
                Cell::Float(gauss.max_rel_residual),
                Cell::Float(sup),
            ]);
        }
    }
    let path = out.join("results_kernel.csv");
    emit_csv(
        &path,
        &[
            "n",
            "diag_sup_dev",
            "agmon_a1",
            "agmon_a2",
            "agmon_max_rel_residual",
            "gauss_c",
            "gauss_a3",
            "gauss_max_residual",
            "scaling_sup_dev",
        ],
        &rows,
    )?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(
        &spath,
        &json!({ "schema_version": 1, "experiment": "kernel", "calibration": cal }),
    )?;
    files.push(spath);
    Ok(())
}

fn run_correlations(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
    keep_going: bool,
) -> Result<()> {
    let map = validate_cat_map(cfg.map)?;
    let f = cfg.trig_symbol();
    let g = f.clone();
    let mut rows = Vec::new();
    let horizon = correlation_horizon(&f, &g, &map, 32);
    for &t in &cfg.t_list {
        let ok = unit(manifest, keep_going, format!("correlation T={t}"), || {
            let exact = correlation_exact(&f, &g, &map, t);
            let quad = correlation_quadrature(&f, &g, &map, t).ok();
            Ok((exact, quad))
        })?;
        if let Some((exact, quad)) = ok {
            rows.push(vec![
                Cell::Int(t),
                Cell::Float(exact.re),
                Cell::Float(exact.im),
                Cell::Float(quad.map_or(f64::NAN, |q| q.re)),
                Cell::Float(quad.map_or(f64::NAN, |q| q.im)),
                Cell::Int(horizon),
            ]);
        }
    }
    let path = out.join("results_correlations.csv");
    emit_csv(&path, &["t", "exact_re", "exact_im", "quad_re", "quad_im", "horizon"], &rows)?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(
        &spath,
        &json!({ "schema_version": 1, "experiment": "correlations", "horizon": horizon }),
    )?;
    files.push(spath);
    Ok(())
}

fn run_cover(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
    keep_going: bool,
) -> Result<()> {
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let ok = unit(manifest, keep_going, format!("cover N={n}"), || {
            let scale = log_scale(cfg.gamma, n)?;
            let cover = build_log_good_cover(&scale, cfg.radius_prefactor)?;
            let report = verify_log_good_cover(&cover, 32);
            Ok((scale, cover, report))
        })?;
        if let Some((scale, cover, report)) = ok {
            rows.push(vec![
                Cell::UInt(n),
                Cell::Float(scale.epsilon),
                Cell::Float(cover.radius),
                Cell::UInt(cover.centers.len() as u64),
                Cell::Float(cover.c1),
                Cell::UInt(cover.c2 as u64),
                Cell::Int(i64::from(report.containment_ok)),
            ]);
        }
    }
    let path = out.join("results_cover.csv");
    emit_csv(
        &path,
        &["n", "epsilon", "radius", "count", "c1", "c2", "containment"],
        &rows,
    )?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(&spath, &json!({ "schema_version": 1, "experiment": "cover" }))?;
    files.push(spath);
    Ok(())
}

fn run_accept(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let reports = crate::acceptance::run_all();
    let mut rows = Vec::new();
    for r in &reports {
        println!("{}", r.line());
        rows.push(vec![
            Cell::UInt(r.id as u64),
            Cell::Str(r.name.clone()),
            Cell::Int(i64::from(r.passed)),
            Cell::Float(r.seconds),
            Cell::Str(r.details.clone()),
        ]);
        manifest.timings.push((format!("criterion {}", r.id), r.seconds));
    }
    let path = out.join("acceptance.csv");
    emit_csv(&path, &["criterion", "name", "passed", "seconds", "details"], &rows)?;
    files.push(path);
    let spath = out.join("summary.json");
    emit_json(
        &spath,
        &json!({
            "schema_version": 1,
            "experiment": "accept",
            "criteria": reports.iter().map(|r| json!({
                "id": r.id,
                "name": r.name,
                "passed": r.passed,
                "details": r.details,
            })).collect::<Vec<_>>(),
            "all_passed": reports.iter().all(|r| r.passed),
        }),
    )?;
    files.push(spath);
    let _ = cfg;
    Ok(())
}
