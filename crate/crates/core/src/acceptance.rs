//! Acceptance suite: the ten release criteria, each with pinned
//! tolerances, each reporting one pass/fail line.
//!
//! Trend criteria that bottom out at numerical resolution carry explicit
//! measurement floors (the compared quantities here converge
//! exponentially, so past a point the data is roundoff); each floor is
//! stated in the criterion details. Criterion 3's slope window encodes a
//! first-order remainder law; the generator-exact quantization built here
//! satisfies a second-order one (the measured log-log slope sits near -2,
//! consistently below the first-order envelope), so that clause fails by
//! construction and is reported honestly rather than loosened.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{validate_cat_map, CatMap, CharacterIndex, TrigPoly};
use crate::geometry::{build_log_good_cover, log_scale, TorusPoint, DEFAULT_RADIUS_PREFACTOR};
use crate::linalg::CMat;
use crate::observables::{
    default_markov_threshold, density_one_extract, dilated_deviation_statistic, egorov_remainder,
    mass_sweep, quantum_variance, szego_trace_check, variance_dilated_symbol,
    VarianceRecord,
};
use crate::quantize::{heisenberg_translation, quantize};
use crate::spectral::{cluster_degeneracies, eigendecompose, orthonormality_defect, resample_degenerate_basis};
use crate::theta::{bergman_diag, make_space, SectionCoeffs};
use crate::zeros::{locate_zeros, scaled_zero_pairing, zero_discrepancy_in_ball};

pub const ACCEPT_MAP: [[i64; 2]; 2] = [[1, 2], [2, 5]];
pub const ACCEPT_SEED: u64 = 20240601;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

fn report(id: u32, name: &str, start: std::time::Instant, passed: bool, details: String) -> CriterionReport {
    CriterionReport {
        id,
        name: name.to_string(),
        passed,
        details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn accept_map() -> CatMap {
    validate_cat_map(ACCEPT_MAP).unwrap()
}

/// Run every criterion in order.
pub fn run_all() -> Vec<CriterionReport> {
    crate::init_runtime();
    vec![
        criterion_1_unitarity(),
        criterion_2_exact_egorov(),
        criterion_3_egorov_scaling(),
        criterion_4_szego(),
        criterion_5_variance_decay(),
        criterion_6_bergman(),
        criterion_7_zero_counting(),
        criterion_8_zero_equidistribution(),
        criterion_9_mass_band(),
        criterion_10_determinism(),
    ]
}

/// Criterion 1: unitarity and spectral hygiene at N in {64, 256, 1024}.
pub fn criterion_1_unitarity() -> CriterionReport {
    let start = std::time::Instant::now();
    let map = accept_map();
    let mut worst_unit = 0.0f64;
    let mut worst_resid = 0.0f64;
    let mut worst_orth = 0.0f64;
    let mut ok = true;
    for n in [64u64, 256, 1024] {
        match quantize(&map, n).and_then(|u| {
            let defect = u.unitarity_defect();
            let es = eigendecompose(&u)?;
            Ok((defect, es))
        }) {
            Ok((defect, es)) => {
                worst_unit = worst_unit.max(defect);
                worst_resid =
                    worst_resid.max(es.residuals.iter().cloned().fold(0.0, f64::max));
                worst_orth = worst_orth.max(orthonormality_defect(&es));
            }
            Err(e) => {
                return report(1, "unitarity & spectral hygiene", start, false, format!("error: {e}"));
            }
        }
    }
    ok &= worst_unit < 1e-10 && worst_resid < 1e-9 && worst_orth < 1e-10;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    report(
        1,
        "unitarity & spectral hygiene",
        start,
        ok,
        format!(
            "max |U*U - I| = {worst_unit:.2e} (<1e-10), max residual = {worst_resid:.2e} (<1e-9), max orthonormality defect = {worst_orth:.2e} (<1e-10), {secs:.1}s (<120s)"
        ),
    )
}

/// Criterion 2: exact intertwining of translations at N = 128 for
/// |k|_inf <= 4: `U T(k) U^H = phase * T(A^T k)` with entrywise
/// deviation below 1e-8.
pub fn criterion_2_exact_egorov() -> CriterionReport {
    let start = std::time::Instant::now();
    let map = accept_map();
    let n = 128usize;
    let u = match quantize(&map, n as u64) {
        Ok(u) => u,
        Err(e) => return report(2, "exact-Egorov oracle", start, false, format!("error: {e}")),
    };
    let uh = u.adjoint();
    let at = [[map.a[0][0], map.a[1][0]], [map.a[0][1], map.a[1][1]]];
    let mut worst = 0.0f64;
    for k1 in -4i64..=4 {
        for k2 in -4i64..=4 {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let kt = CharacterIndex(
                at[0][0] * k1 + at[0][1] * k2,
                at[1][0] * k1 + at[1][1] * k2,
            );
            let lhs = u.mat.mul(&heisenberg_translation(n, CharacterIndex(k1, k2)).mat).mul(&uh.mat);
            let rhs = heisenberg_translation(n, kt);
            // optimal unit phase by HS projection
            let mut c = C64::new(0.0, 0.0);
            for (a, b) in lhs.data().iter().zip(rhs.mat.data()) {
                c += b.conj() * a;
            }
            c /= n as f64;
            let phase = c / c.norm();
            let mut expect = rhs.mat.clone();
            expect.scale(phase);
            worst = worst.max(lhs.max_abs_diff(&expect));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst < 1e-8 && secs < 60.0;
    report(
        2,
        "exact-Egorov oracle",
        start,
        ok,
        format!("max entrywise deviation = {worst:.2e} (<1e-8) over |k|_inf<=4 at N=128, {secs:.1}s (<60s)"),
    )
}

/// Criterion 3: Egorov remainder scaling. Clause (a): log-log slope of
/// `(1/N) ||R||_HS^2` vs `N` over {64..2048} within -1 +- 0.2. Clause
/// (b): the value at N = 256 is nondecreasing in T for T = 1..6 (within
/// 1e-12 relative slack; values saturate once the transported damping
/// underflows).
pub fn criterion_3_egorov_scaling() -> CriterionReport {
    let start = std::time::Instant::now();
    let map = accept_map();
    let f = TrigPoly::cosine(CharacterIndex(1, 0));
    let ns = [64u64, 128, 256, 512, 1024, 2048];
    let mut lnx = Vec::new();
    let mut lny = Vec::new();
    let mut values = Vec::new();
    for &n in &ns {
        let u = match quantize(&map, n) {
            Ok(u) => u,
            Err(e) => return report(3, "Egorov remainder scaling", start, false, format!("error: {e}")),
        };
        match egorov_remainder(&map, &u.mat, &f, 1, "cos2pix") {
            Ok(rec) => {
                values.push((n, rec.value));
                lnx.push((n as f64).ln());
                lny.push(rec.value.ln());
            }
            Err(e) => return report(3, "Egorov remainder scaling", start, false, format!("error: {e}")),
        }
    }
    let slope = {
        let n = lnx.len() as f64;
        let sx: f64 = lnx.iter().sum();
        let sy: f64 = lny.iter().sum();
        let sxx: f64 = lnx.iter().map(|x| x * x).sum();
        let sxy: f64 = lnx.iter().zip(&lny).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    let slope_ok = (-1.2..=-0.8).contains(&slope);

    let mut mono_ok = true;
    let mut tvals = Vec::new();
    let u256 = quantize(&map, 256).unwrap();
    let mut w = CMat::identity(256);
    for t in 1..=6i64 {
        w = u256.mat.mul(&w);
        match egorov_remainder(&map, &w, &f, t, "cos2pix") {
            Ok(rec) => tvals.push(rec.value),
            Err(e) => return report(3, "Egorov remainder scaling", start, false, format!("error: {e}")),
        }
    }
    for i in 1..tvals.len() {
        if tvals[i] < tvals[i - 1] - 1e-12 * tvals[i - 1].max(1.0) {
            mono_ok = false;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = slope_ok && mono_ok && secs < 1200.0;
    report(
        3,
        "Egorov remainder scaling",
        start,
        ok,
        format!(
            "slope = {slope:.3} (target -1 +- 0.2{}), T-sweep nondecreasing: {mono_ok}, values {:?}, {secs:.1}s (<1200s)",
            if slope_ok { "" } else { "; exact metaplectic intertwining leaves only the Gaussian damping mismatch, a second-order remainder" },
            values
        ),
    )
}

/// Criterion 4: Szego limit first-order decay for f = cos 2 pi x: the
/// trace deviation at N = 1024 is below 0.6 times its value at N = 512.
pub fn criterion_4_szego() -> CriterionReport {
    let start = std::time::Instant::now();
    let map = accept_map();
    let f = TrigPoly::cosine(CharacterIndex(1, 0));
    let run = || -> crate::error::Result<(f64, f64)> {
        let (l512, r) = szego_trace_check(&f, &map, 512, 0)?;
        let (l1024, _) = szego_trace_check(&f, &map, 1024, 0)?;
        Ok(((l512 - r).abs(), (l1024 - r).abs()))
    };
    match run() {
        Ok((e512, e1024)) => {
            let secs = start.elapsed().as_secs_f64();
            let ok = e1024 < 0.6 * e512 && secs < 300.0;
            report(
                4,
                "Szego limit",
                start,
                ok,
                format!("|lhs-rhs|: N=512: {e512:.3e}, N=1024: {e1024:.3e}, ratio {:.3} (<0.6), {secs:.1}s (<300s)", e1024 / e512),
            )
        }
        Err(e) => report(4, "Szego limit", start, false, format!("error: {e}")),
    }
}

fn filtered_variance(rec: &VarianceRecord) -> f64 {
    let mean = C64::new(rec.mean_re, rec.mean_im);
    let devs: Vec<f64> = rec
        .elements
        .iter()
        .map(|&(re, im)| (C64::new(re, im) - mean).norm_sqr())
        .collect();
    let a = default_markov_threshold(rec.variance, rec.n);
    let gs = density_one_extract(&devs, a);
    if gs.generic.is_empty() {
        0.0
    } else {
        gs.generic.iter().map(|&i| devs[i]).sum::<f64>() / gs.generic.len() as f64
    }
}

/// Criterion 5: variance decay. Clause (a): `V_N(cos 2 pi x) log N` stays
/// below the pilot envelope `max(2 * pilot max, 1e-18)` over the full
/// grid (the map commutes with the order-two translations, which
/// anticommute with this symbol, so the true variance is exactly zero and
/// the measurement floor 1e-18 guards the roundoff residue). Clause (b):
/// the dilated-bump variance at gamma = 0.1 on the density-one-filtered
/// set decreases from N = 128 to N = 2048.
pub fn criterion_5_variance_decay() -> CriterionReport {
    let start = std::time::Instant::now();
    let map = accept_map();
    let f = TrigPoly::cosine(CharacterIndex(1, 0));
    let ns = [64u64, 128, 256, 512, 1024, 2048];
    let mut vlog = Vec::new();
    let mut dilated = std::collections::BTreeMap::new();
    for &n in &ns {
        let run = || -> crate::error::Result<(f64, Option<f64>)> {
            let u = quantize(&map, n)?;
            let es = eigendecompose(&u)?;
            let clusters = cluster_degeneracies(&es, 1e-8)?;
            let es = resample_degenerate_basis(&es, &clusters, ACCEPT_SEED);
            let rec = quantum_variance(&f, n, &es, "cos2pix");
            let v = rec.variance * (n as f64).ln();
            let dil = if n == 128 || n == 2048 {
                let space = make_space(n)?;
                let p = TorusPoint::new(0.5, 0.5);
                let (drec, _) =
                    variance_dilated_symbol(&space, &p, 0.1, DEFAULT_RADIUS_PREFACTOR, n, &es)?;
                Some(filtered_variance(&drec))
            } else {
                None
            };
            Ok((v, dil))
        };
        match run() {
            Ok((v, dil)) => {
                vlog.push((n, v));
                if let Some(d) = dil {
                    dilated.insert(n, d);
                }
            }
            Err(e) => return report(5, "variance decay", start, false, format!("error: {e}")),
        }
    }
    let pilot_max = vlog
        .iter()
        .filter(|(n, _)| [64, 128, 256].contains(n))
        .map(|&(_, v)| v)
        .fold(0.0f64, f64::max);
    let envelope = (2.0 * pilot_max).max(1e-18);
    let env_ok = vlog.iter().all(|&(_, v)| v <= envelope);
    let d128 = dilated[&128];
    let d2048 = dilated[&2048];
    let dil_ok = d2048 < d128;
    let secs = start.elapsed().as_secs_f64();
    let ok = env_ok && dil_ok && secs < 1800.0;
    report(
        5,
        "variance decay",
        start,
        ok,
        format!(
            "V log N <= {envelope:.3e} for all N: {env_ok} (max {:.3e}); dilated filtered variance {d2048:.3e} (N=2048) < {d128:.3e} (N=128): {dil_ok}; {secs:.1}s (<1800s)",
            vlog.iter().map(|&(_, v)| v).fold(0.0f64, f64::max),
        ),
    )
}

/// Criterion 6: Bergman kernel. Diagonal flatness below 1% for N >= 32;
/// Agmon fit with positive decay constant and per-sample relative
/// residual below 0.1; scaling-limit sup-deviation halves from N = 64 to
/// N = 1024 or is already converged below the 1e-6 calibration floor.
pub fn criterion_6_bergman() -> CriterionReport {
    use crate::asymptotics::{agmon_fit, calibrate_metric, scaling_limit_sup};
    let start = std::time::Instant::now();
    let mut diag_worst = 0.0f64;
    for n in [32u64, 64, 256] {
        let space = make_space(n).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                let z = TorusPoint::new(i as f64 / 17.0, j as f64 / 17.0);
                diag_worst = diag_worst.max((bergman_diag(&space, &z) / n as f64 - 1.0).abs());
            }
        }
    }
    let diag_ok = diag_worst < 0.01;

    let mut agmon_ok = true;
    let mut agmon_detail = String::new();
    for n in [64u64, 256, 1024] {
        let fit = agmon_fit(&make_space(n).unwrap(), 64);
        let a2 = fit.constant("A2").unwrap();
        agmon_ok &= a2 > 0.0 && fit.max_rel_residual < 0.1;
        agmon_detail.push_str(&format!("N={n}: A2={a2:.2}, rel_res={:.3}; ", fit.max_rel_residual));
    }

    let cal = calibrate_metric(&make_space(1024).unwrap());
    let dev64 = scaling_limit_sup(&make_space(64).unwrap(), &cal, 9);
    let dev1024 = scaling_limit_sup(&make_space(1024).unwrap(), &cal, 9);
    let floor = 1e-6;
    let scaling_ok = dev1024 <= (0.5 * dev64).max(floor);

    let secs = start.elapsed().as_secs_f64();
    let ok = diag_ok && agmon_ok && scaling_ok && secs < 600.0;
    report(
        6,
        "Bergman kernel",
        start,
        ok,
        format!(
            "diag sup dev = {diag_worst:.2e} (<0.01); {agmon_detail}scaling sup dev {dev64:.2e} -> {dev1024:.2e} (halving or below floor {floor:.0e}), {secs:.1}s (<600s)"
        ),
    )
}

/// Criterion 7: zero counting is integer-exact for 20 random and 20
/// eigensections at each N in {16, 64, 256}.
pub fn criterion_7_zero_counting() -> CriterionReport {
    let start = std::time::Instant::now();
    let map = accept_map();
    let mut checked = 0usize;
    for n in [16u64, 64, 256] {
        let space = make_space(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(ACCEPT_SEED + n);
        for draw in 0..20 {
            let s = SectionCoeffs::random_gaussian(n as usize, &mut rng);
            match locate_zeros(&space, &s) {
                Ok(zs) if zs.total_count == n as usize => checked += 1,
                Ok(zs) => {
                    return report(
                        7,
                        "zero counting exactness",
                        start,
                        false,
                        format!("random section {draw} at N={n}: counted {} != {n}", zs.total_count),
                    )
                }
                Err(e) => {
                    return report(7, "zero counting exactness", start, false, format!("N={n}: {e}"))
                }
            }
        }
        let u = quantize(&map, n).unwrap();
        let es = eigendecompose(&u).unwrap();
        let clusters = cluster_degeneracies(&es, 1e-8).unwrap();
        let es = resample_degenerate_basis(&es, &clusters, ACCEPT_SEED);
        for j in 0..20usize.min(n as usize) {
            let s = SectionCoeffs::new(es.vectors.col(j).to_vec());
            match locate_zeros(&space, &s) {
                Ok(zs) if zs.total_count == n as usize => checked += 1,
                Ok(zs) => {
                    return report(
                        7,
                        "zero counting exactness",
                        start,
                        false,
                        format!("eigensection {j} at N={n}: counted {} != {n}", zs.total_count),
                    )
                }
                Err(e) => {
                    return report(7, "zero counting exactness", start, false, format!("N={n}: {e}"))
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = secs < 600.0;
    report(
        7,
        "zero counting exactness",
        start,
        ok,
        format!("{checked} sections, all totals integer-exact, {secs:.1}s (<600s)"),
    )
}

/// Criterion 8: zero equidistribution trend at gamma = 0.1 (median ball
/// discrepancy on the filtered set strictly decreases from N = 128 to
/// N = 1024) and the Gaussian-random pairing matches the flat reference
/// within 3 standard errors (200 draws at N = 256).
pub fn criterion_8_zero_equidistribution() -> CriterionReport {
    let start = std::time::Instant::now();
    let map = accept_map();
    let eta = |ux: f64, uy: f64| {
        let r2 = ux * ux + uy * uy;
        (1.0 - r2) * (1.0 - r2)
    };

    let median_for = |n: u64, max_sections: usize| -> crate::error::Result<f64> {
        let space = make_space(n)?;
        let u = quantize(&map, n)?;
        let es = eigendecompose(&u)?;
        let clusters = cluster_degeneracies(&es, 1e-8)?;
        let es = resample_degenerate_basis(&es, &clusters, ACCEPT_SEED);
        use rand::seq::SliceRandom;
        let mut sections: Vec<usize> = (0..es.n).collect();
        if es.n > max_sections {
            let mut rng = ChaCha8Rng::seed_from_u64(ACCEPT_SEED + 31 + n);
            sections.shuffle(&mut rng);
            sections.truncate(max_sections);
            sections.sort_unstable();
        }
        let probes = [
            TorusPoint::new(0.25, 0.25),
            TorusPoint::new(0.75, 0.25),
            TorusPoint::new(0.25, 0.75),
            TorusPoint::new(0.75, 0.75),
        ];
        let stats =
            dilated_deviation_statistic(&space, &es, &probes, 0.15, DEFAULT_RADIUS_PREFACTOR)?;
        let sampled: Vec<f64> = sections.iter().map(|&j| stats[j]).collect();
        let a = default_markov_threshold(sampled.iter().sum::<f64>() / sampled.len() as f64, n);
        let gs = density_one_extract(&sampled, a);
        let scale = log_scale(0.1, n)?;
        let eps = scale.radius(DEFAULT_RADIUS_PREFACTOR);
        let cover = build_log_good_cover(&scale, DEFAULT_RADIUS_PREFACTOR)?;
        use rayon::prelude::*;
        let all: Vec<Vec<f64>> = gs
            .generic
            .par_iter()
            .map(|&si| {
                let j = sections[si];
                let s = SectionCoeffs::new(es.vectors.col(j).to_vec());
                let zs = locate_zeros(&space, &s)?;
                Ok(cover
                    .centers
                    .iter()
                    .map(|c| zero_discrepancy_in_ball(&zs, c, eps))
                    .collect())
            })
            .collect::<crate::error::Result<_>>()?;
        let mut pooled: Vec<f64> = all.into_iter().flatten().collect();
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(pooled[pooled.len() / 2])
    };

    let m128 = match median_for(128, 128) {
        Ok(v) => v,
        Err(e) => return report(8, "zero equidistribution", start, false, format!("error: {e}")),
    };
    let m1024 = match median_for(1024, 24) {
        Ok(v) => v,
        Err(e) => return report(8, "zero equidistribution", start, false, format!("error: {e}")),
    };
    let trend_ok = m1024 < m128;

    // Gaussian-random pairing against the flat reference
    let n = 256u64;
    let space = make_space(n).unwrap();
    let scale = log_scale(0.1, n).unwrap();
    let eps = scale.radius(DEFAULT_RADIUS_PREFACTOR);
    let p = TorusPoint::new(0.5, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPT_SEED + 8);
    let mut vals = Vec::with_capacity(200);
    let mut reference = 0.0;
    for _ in 0..200 {
        let s = SectionCoeffs::random_gaussian(n as usize, &mut rng);
        let zs = match locate_zeros(&space, &s) {
            Ok(z) => z,
            Err(e) => return report(8, "zero equidistribution", start, false, format!("error: {e}")),
        };
        let st = scaled_zero_pairing(&zs, &p, eps, eta).unwrap();
        vals.push(st.value);
        reference = st.reference;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (vals.len() - 1) as f64)
        .sqrt();
    let se = sd / (vals.len() as f64).sqrt();
    let pairing_ok = (mean - reference).abs() <= 3.0 * se;

    let secs = start.elapsed().as_secs_f64();
    let ok = trend_ok && pairing_ok && secs < 2400.0;
    report(
        8,
        "zero equidistribution",
        start,
        ok,
        format!(
            "median discrepancy {m128:.4e} (N=128) -> {m1024:.4e} (N=1024), decreasing: {trend_ok}; pairing mean {mean:.4} vs reference {reference:.4} within 3 SE ({:.4}): {pairing_ok}; {secs:.1}s (<2400s)",
            3.0 * se
        ),
    )
}

/// Criterion 9: two-sided mass comparison at gamma' = 0.15. The pilot
/// band is `[0.5 min, 2 max]` of the pooled N = 128 mass ratios; the
/// fraction of sampled eigensections whose every-cover-ball ratio lies in
/// the band must reach 0.9 at N = 1024 and be nondecreasing over
/// {128, 256, 512, 1024}.
pub fn criterion_9_mass_band() -> CriterionReport {
    let start = std::time::Instant::now();
    let map = accept_map();
    let mut band = (0.0, 0.0);
    let mut fractions = Vec::new();
    for &n in &[128u64, 256, 512, 1024] {
        let mut run = || -> crate::error::Result<f64> {
            let space = make_space(n)?;
            let u = quantize(&map, n)?;
            let es = eigendecompose(&u)?;
            let clusters = cluster_degeneracies(&es, 1e-8)?;
            let es = resample_degenerate_basis(&es, &clusters, ACCEPT_SEED);
            let scale = log_scale(0.15, n)?;
            if n == 128 {
                let (_, summary, _) = mass_sweep(
                    &space,
                    &es,
                    &scale,
                    DEFAULT_RADIUS_PREFACTOR,
                    ACCEPT_SEED,
                    64,
                    None,
                )?;
                band = (0.5 * summary.ratio_min, 2.0 * summary.ratio_max);
            }
            let (_, summary, _) = mass_sweep(
                &space,
                &es,
                &scale,
                DEFAULT_RADIUS_PREFACTOR,
                ACCEPT_SEED,
                64,
                Some(band),
            )?;
            Ok(summary.in_band_fraction)
        };
        match run() {
            Ok(frac) => fractions.push((n, frac)),
            Err(e) => return report(9, "mass comparison band", start, false, format!("error: {e}")),
        }
    }
    let at_1024 = fractions.last().unwrap().1;
    let mut nondecreasing = true;
    for i in 1..fractions.len() {
        if fractions[i].1 < fractions[i - 1].1 {
            nondecreasing = false;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = at_1024 >= 0.9 && nondecreasing && secs < 1800.0;
    report(
        9,
        "mass comparison band",
        start,
        ok,
        format!(
            "band [{:.3}, {:.3}], fractions {:?}, at N=1024: {at_1024:.3} (>=0.9), nondecreasing: {nondecreasing}, {secs:.1}s (<1800s)",
            band.0, band.1, fractions
        ),
    )
}

/// Criterion 10: determinism. Every experiment kind runs twice at reduced
/// level with fixed seeds; result files must be byte-identical and
/// manifests identical after dropping wall-clock timings.
pub fn criterion_10_determinism() -> CriterionReport {
    use crate::harness::config::{ExperimentConfig, ExperimentKind, SymbolKind};
    let start = std::time::Instant::now();
    let base = std::env::temp_dir().join(format!("catmap_qe_determinism_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);

    let kinds = [
        ExperimentKind::Spectrum,
        ExperimentKind::Variance,
        ExperimentKind::Egorov,
        ExperimentKind::Kernel,
        ExperimentKind::Cover,
        ExperimentKind::Correlations,
        ExperimentKind::Zeros,
        ExperimentKind::Mass,
    ];
    let mut detail = String::new();
    for kind in kinds {
        let mut cfg = ExperimentConfig {
            experiment: kind,
            ..ExperimentConfig::default()
        };
        cfg.seed = ACCEPT_SEED;
        cfg.n_grid = match kind {
            ExperimentKind::Zeros => vec![16],
            ExperimentKind::Mass => vec![32],
            _ => vec![64],
        };
        cfg.t_list = vec![-2, -1, 0, 1, 2];
        cfg.max_sections = 8;
        if kind == ExperimentKind::Variance {
            cfg.symbol_kind = SymbolKind::Cosine;
        }
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = base.join(format!("{}_{rep}", kind.as_str()));
            match crate::harness::run(&cfg, Some(&dir), false) {
                Ok(out) => outputs.push(out),
                Err(e) => {
                    return report(
                        10,
                        "determinism",
                        start,
                        false,
                        format!("{} run {rep} failed: {e}", kind.as_str()),
                    )
                }
            }
        }
        let (a, b) = (&outputs[0], &outputs[1]);
        for (fa, fb) in a.result_files.iter().zip(&b.result_files) {
            let ba = std::fs::read(fa).unwrap_or_default();
            let bb = std::fs::read(fb).unwrap_or_default();
            if ba != bb {
                return report(
                    10,
                    "determinism",
                    start,
                    false,
                    format!("{}: {} differs between runs", kind.as_str(), fa.display()),
                );
            }
        }
        // manifests agree modulo timings
        let ma = strip_timings(&a.out_dir.join("manifest.json"));
        let mb = strip_timings(&b.out_dir.join("manifest.json"));
        if ma != mb {
            return report(
                10,
                "determinism",
                start,
                false,
                format!("{}: manifest differs beyond timings", kind.as_str()),
            );
        }
        detail.push_str(kind.as_str());
        detail.push(' ');
    }
    let _ = std::fs::remove_dir_all(&base);
    let secs = start.elapsed().as_secs_f64();
    report(
        10,
        "determinism",
        start,
        true,
        format!("byte-identical result files for: {detail}({secs:.1}s)"),
    )
}

fn strip_timings(path: &std::path::Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).unwrap_or_default();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap_or(serde_json::Value::Null);
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timings");
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::matrix_elements;
    use crate::quantize::toeplitz_of_trig;

    #[test]
    fn criterion_reports_format() {
        let r = CriterionReport {
            id: 1,
            name: "x".into(),
            passed: true,
            details: "d".into(),
            seconds: 0.5,
        };
        assert!(r.line().contains("PASS"));
    }

    #[test]
    fn matrix_elements_reexported_path_compiles() {
        // keep the public surface the suite relies on in one place
        let map = accept_map();
        let u = quantize(&map, 16).unwrap();
        let es = eigendecompose(&u).unwrap();
        let tf = toeplitz_of_trig(16, &TrigPoly::constant(1.0));
        let elems = matrix_elements(&tf, &es);
        assert_eq!(elems.len(), 16);
    }
}
