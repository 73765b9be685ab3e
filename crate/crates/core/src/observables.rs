//! Eigensection statistics: matrix elements, quantum variance (plain and
//! for dilated bump symbols), Szego-limit traces, Egorov remainders, mass
//! sweeps over ball covers, and density-one extraction via Markov's
//! inequality.

use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CatMap, TrigPoly};
use crate::error::Result;
use crate::geometry::{build_log_good_cover, Ball, LogGoodCover, LogScale, TorusPoint};
use crate::linalg::CMat;
use crate::quantize::{toeplitz_of_dilated_bump, toeplitz_of_trig, ToeplitzMatrix};
use crate::spectral::EigenSystem;
use crate::theta::{hnorm_grid, mass_from_grid, GridSpec, MassMode, SectionCoeffs, ThetaSpace};

/// Diagonal matrix elements `<T_f v_j, v_j>` for every eigenvector.
pub fn matrix_elements(tf: &ToeplitzMatrix, es: &EigenSystem) -> Vec<C64> {
    assert_eq!(tf.n, es.n);
    let tv = tf.mat.mul(&es.vectors);
    (0..es.n)
        .map(|j| {
            es.vectors
                .col(j)
                .iter()
                .zip(tv.col(j))
                .map(|(v, w)| v.conj() * w)
                .sum()
        })
        .collect()
}

/// Quantum variance record: per-eigensection matrix elements and their
/// mean-square deviation from the classical mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceRecord {
    pub n: u64,
    pub symbol: String,
    pub mean_re: f64,
    pub mean_im: f64,
    pub elements: Vec<(f64, f64)>,
    pub variance: f64,
}

impl VarianceRecord {
    fn build(n: u64, symbol: String, mean: C64, elements: Vec<C64>) -> Self {
        let variance = elements
            .iter()
            .map(|e| (e - mean).norm_sqr())
            .sum::<f64>()
            / elements.len() as f64;
        Self {
            n,
            symbol,
            mean_re: mean.re,
            mean_im: mean.im,
            elements: elements.iter().map(|e| (e.re, e.im)).collect(),
            variance,
        }
    }

    /// Recompute the variance from the stored fields.
    pub fn recompute(&self) -> f64 {
        let mean = C64::new(self.mean_re, self.mean_im);
        self.elements
            .iter()
            .map(|&(re, im)| (C64::new(re, im) - mean).norm_sqr())
            .sum::<f64>()
            / self.elements.len() as f64
    }
}

/// Variance of a trigonometric-polynomial observable over the eigenbasis.
pub fn quantum_variance(f: &TrigPoly, n: u64, es: &EigenSystem, symbol: &str) -> VarianceRecord {
    let tf = toeplitz_of_trig(n as usize, f);
    let elems = matrix_elements(&tf, es);
    VarianceRecord::build(n, symbol.to_string(), f.mean(), elems)
}

/// Variance of the dilated bump symbol centered at `p` at the scale
/// `prefactor * |log N|^{-gamma}`; also returns the trend comparison value
/// `|log N|^{2 gamma beta - 1}` at the reported Holder exponent
/// `beta = 1/2`.
pub fn variance_dilated_symbol(
    space: &ThetaSpace,
    p: &TorusPoint,
    gamma: f64,
    prefactor: f64,
    n: u64,
    es: &EigenSystem,
) -> Result<(VarianceRecord, f64)> {
    let scale = crate::geometry::log_scale(gamma, n)?;
    let eps = scale.radius(prefactor);
    let tf = toeplitz_of_dilated_bump(space, p, eps)?;
    let elems = matrix_elements(&tf, es);
    let beta = 0.5;
    let comparison = (n as f64).ln().powf(2.0 * gamma * beta - 1.0);
    let rec = VarianceRecord::build(
        n,
        format!("bump_p{}_{}_gamma{gamma}_eps{eps}", p.x(), p.y()),
        tf.mean,
        elems,
    );
    Ok((rec, comparison))
}

/// Szego-limit check: `lhs = (1/N) tr(T_g^H T_g)` for the exactly
/// transported symbol `g = f o chi^T`, against `rhs = int |f|^2 dV`.
pub fn szego_trace_check(f: &TrigPoly, map: &CatMap, n: u64, t: i64) -> Result<(f64, f64)> {
    let g = f.compose_iterate(map, t)?;
    let tg = toeplitz_of_trig(n as usize, &g);
    let lhs = tg.mat.hs_norm_sq() / n as f64;
    // the map is measure preserving: int |f o chi^T|^2 = int |f|^2
    let rhs = f.l2_norm_sq();
    Ok((lhs, rhs))
}

/// Egorov remainder record: `(1/N) || U^T T_f U^{-T} - T_{f o chi^T} ||_HS^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EgorovRecord {
    pub n: u64,
    pub t: i64,
    pub symbol: String,
    pub value: f64,
}

/// Compute the remainder for `W = U^T` supplied as a dense unitary.
///
/// Uses `tr(R^H R) = ||T_f||^2 + ||T_g||^2 - 2 Re tr(W T_f^H W^H T_g)`,
/// with the cross trace evaluated through the sparse translation algebra
/// so no dense-dense product is formed.
pub fn egorov_remainder(
    map: &CatMap,
    w: &CMat,
    f: &TrigPoly,
    t: i64,
    symbol: &str,
) -> Result<EgorovRecord> {
    assert!(t.abs() <= 16, "remainders are measured for |T| <= 16");
    let n = w.rows();
    let tf = toeplitz_of_trig(n, f);
    let g = f.compose_iterate(map, t)?;
    let tg = toeplitz_of_trig(n, &g);

    // tr(W T_f^H W^H T_g) = sum_{ij} (W T_f^H)_ij (W^H T_g)_ji
    let p = right_mul_damped(w, &conj_poly(f), n);
    let wh = w.adjoint();
    let q = right_mul_damped(&wh, &g, n);
    let cross = p.trace_mul(&q);
    let value =
        (tf.mat.hs_norm_sq() + tg.mat.hs_norm_sq() - 2.0 * cross.re) / n as f64;
    Ok(EgorovRecord { n: n as u64, t, symbol: symbol.to_string(), value: value.max(0.0) })
}

/// Coefficients of `T_f^H`: conjugate coefficients at negated indices
/// (translations satisfy `T(k)^H = T(-k)`).
fn conj_poly(f: &TrigPoly) -> TrigPoly {
    let mut out = TrigPoly::zero();
    for (k, c) in &f.coeffs {
        out.insert(crate::dynamics::CharacterIndex(-k.0, -k.1), c.conj());
    }
    out
}

/// `M * sum_k c_k d_k T(k)`: column `l` of each term is column
/// `(l + k1) mod N` of `M` times the translation entry.
fn right_mul_damped(m: &CMat, f: &TrigPoly, n: usize) -> CMat {
    let nn = n as i64;
    let mut out = CMat::zeros(n, n);
    let cols: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut col = vec![C64::new(0.0, 0.0); n];
            for (k, c) in &f.coeffs {
                let damp = (-std::f64::consts::PI * ((k.0 * k.0 + k.1 * k.1) as f64)
                    / (2.0 * n as f64))
                    .exp();
                if (c * damp).norm() < 1e-18 {
                    continue;
                }
                let src = ((l as i64 + k.0).rem_euclid(nn)) as usize;
                let entry = c
                    * damp
                    * C64::from_polar(
                        1.0,
                        -std::f64::consts::PI * (k.0 * k.1) as f64 / n as f64
                            - std::f64::consts::TAU * (k.1 * l as i64) as f64 / n as f64,
                    );
                for (o, &mv) in col.iter_mut().zip(m.col(src)) {
                    *o += mv * entry;
                }
            }
            col
        })
        .collect();
    for (l, col) in cols.into_iter().enumerate() {
        out.col_mut(l).copy_from_slice(&col);
    }
    out
}

/// Mass of one eigensection in one cover ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassRecord {
    pub n: u64,
    pub j: usize,
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub sharp: f64,
    pub smooth: f64,
    /// `sharp / (pi radius^2)`, the ratio to the flat volume fraction.
    pub ratio: f64,
}

/// Summary of a mass sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassSummary {
    pub n: u64,
    pub radius: f64,
    pub sections: Vec<usize>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_q01: f64,
    pub ratio_q99: f64,
    /// Fraction of sampled sections whose every-ball ratio stays in the
    /// supplied band (NaN when no band given).
    pub in_band_fraction: f64,
}

/// Sweep sharp and smooth masses of eigensections over a log-good cover.
///
/// All eigensections are used when `N <= 512`; otherwise a seeded sample
/// of `max_sections`.
pub fn mass_sweep(
    space: &ThetaSpace,
    es: &EigenSystem,
    scale: &LogScale,
    prefactor: f64,
    seed: u64,
    max_sections: usize,
    band: Option<(f64, f64)>,
) -> Result<(Vec<MassRecord>, MassSummary, LogGoodCover)> {
    let n = es.n;
    let cover = build_log_good_cover(scale, prefactor)?;
    let radius = cover.radius;
    let grid = GridSpec::for_space(n as u64, radius);

    let mut sections: Vec<usize> = (0..n).collect();
    if n > 512 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sections.shuffle(&mut rng);
        sections.truncate(max_sections);
        sections.sort_unstable();
    }

    let records: Vec<Vec<MassRecord>> = sections
        .par_iter()
        .map(|&j| {
            let s = SectionCoeffs::new(es.vectors.col(j).to_vec());
            let h = hnorm_grid(space, &s, &grid);
            let vol = std::f64::consts::PI * radius * radius;
            cover
                .centers
                .iter()
                .map(|c| {
                    let ball = Ball { center: *c, radius };
                    let sharp = mass_from_grid(&h, &ball, MassMode::Sharp, &grid);
                    let smooth = mass_from_grid(&h, &ball, MassMode::Smooth, &grid);
                    MassRecord {
                        n: n as u64,
                        j,
                        center_x: c.x(),
                        center_y: c.y(),
                        radius,
                        sharp,
                        smooth,
                        ratio: sharp / vol,
                    }
                })
                .collect()
        })
        .collect();
    let records: Vec<MassRecord> = records.into_iter().flatten().collect();

    let mut ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| ratios[(p * (ratios.len() - 1) as f64).round() as usize];
    let in_band_fraction = match band {
        None => f64::NAN,
        Some((lo, hi)) => {
            let ok = sections
                .iter()
                .filter(|&&j| {
                    records
                        .iter()
                        .filter(|r| r.j == j)
                        .all(|r| r.ratio >= lo && r.ratio <= hi)
                })
                .count();
            ok as f64 / sections.len() as f64
        }
    };
    let summary = MassSummary {
        n: n as u64,
        radius,
        sections,
        ratio_min: ratios[0],
        ratio_max: *ratios.last().unwrap(),
        ratio_q01: q(0.01),
        ratio_q99: q(0.99),
        in_band_fraction,
    };
    Ok((records, summary, cover))
}

/// Per-level fixed-point mass statistic: density-one-filtered mean of
/// `|mass - Vol(B)| * |log N|^{2 gamma}` over eigensections.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointMassRecord {
    pub n: u64,
    pub radius: f64,
    pub unfiltered_mean: f64,
    pub filtered_mean: f64,
    pub excluded: usize,
}

pub fn fixed_point_mass(
    space: &ThetaSpace,
    es: &EigenSystem,
    p: &TorusPoint,
    gamma: f64,
    prefactor: f64,
    seed: u64,
    max_sections: usize,
) -> Result<FixedPointMassRecord> {
    let n = es.n as u64;
    // the fixed-point statement admits the wider range gamma < 1/4
    let scale = crate::geometry::log_scale_bounded(gamma, n, 0.25)?;
    let radius = scale.radius(prefactor);
    let ball = Ball::new(*p, radius)?;
    let grid = GridSpec::for_space(n, radius);
    let weight = (n as f64).ln().powf(2.0 * gamma);
    let vol = ball.volume();

    let mut sections: Vec<usize> = (0..es.n).collect();
    if es.n > 512 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sections.shuffle(&mut rng);
        sections.truncate(max_sections);
        sections.sort_unstable();
    }
    let deviations: Vec<f64> = sections
        .par_iter()
        .map(|&j| {
            let s = SectionCoeffs::new(es.vectors.col(j).to_vec());
            let h = hnorm_grid(space, &s, &grid);
            let mass = mass_from_grid(&h, &ball, MassMode::Sharp, &grid);
            (mass - vol).abs() * weight
        })
        .collect();
    let unfiltered_mean = deviations.iter().sum::<f64>() / deviations.len() as f64;
    let a = default_markov_threshold(unfiltered_mean, n);
    let rec = density_one_extract(&deviations, a);
    let filtered: Vec<f64> = rec.generic.iter().map(|&i| deviations[i]).collect();
    let filtered_mean = if filtered.is_empty() {
        0.0
    } else {
        filtered.iter().sum::<f64>() / filtered.len() as f64
    };
    Ok(FixedPointMassRecord {
        n,
        radius,
        unfiltered_mean,
        filtered_mean,
        excluded: rec.exceptional.len(),
    })
}

/// Default Markov threshold `a = mean * sqrt(log N)`.
pub fn default_markov_threshold(mean: f64, n: u64) -> f64 {
    let a = mean * (n as f64).ln().sqrt();
    if a > 0.0 {
        a
    } else {
        f64::MIN_POSITIVE
    }
}

/// Markov extraction of exceptional and generic index sets at threshold
/// `a`; the recorded bound `|Lambda|/count <= mean/a` is re-verified on
/// every call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenericSetRecord {
    pub threshold: f64,
    pub mean: f64,
    pub exceptional: Vec<usize>,
    pub generic: Vec<usize>,
    pub exceptional_density: f64,
    pub markov_bound: f64,
}

pub fn density_one_extract(values: &[f64], a: f64) -> GenericSetRecord {
    assert!(a > 0.0, "Markov threshold must be positive");
    assert!(values.iter().all(|&v| v >= 0.0), "values must be nonnegative");
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let mut exceptional = Vec::new();
    let mut generic = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v >= a {
            exceptional.push(i);
        } else {
            generic.push(i);
        }
    }
    let density = exceptional.len() as f64 / values.len().max(1) as f64;
    let bound = mean / a;
    assert!(
        density <= bound * (1.0 + 1e-12) + f64::EPSILON,
        "Markov bound violated: {density} > {bound}"
    );
    GenericSetRecord {
        threshold: a,
        mean,
        exceptional,
        generic,
        exceptional_density: density,
        markov_bound: bound,
    }
}

/// Per-eigensection deviations of dilated-bump matrix elements from the
/// symbol mean, summed over probe centers; the filtering statistic used
/// by the zero and mass pipelines at the finer scale.
pub fn dilated_deviation_statistic(
    space: &ThetaSpace,
    es: &EigenSystem,
    centers: &[TorusPoint],
    gamma: f64,
    prefactor: f64,
) -> Result<Vec<f64>> {
    let n = es.n as u64;
    let scale = crate::geometry::log_scale(gamma, n)?;
    let eps = scale.radius(prefactor);
    let mut out = vec![0.0f64; es.n];
    for c in centers {
        let tf = toeplitz_of_dilated_bump(space, c, eps)?;
        let elems = matrix_elements(&tf, es);
        for (o, e) in out.iter_mut().zip(&elems) {
            *o += (e - tf.mean).norm_sqr();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{validate_cat_map, CharacterIndex};
    use crate::quantize::quantize;
    use crate::spectral::eigendecompose;
    use crate::theta::make_space;

    fn setup(n: u64) -> (CatMap, EigenSystem) {
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        let u = quantize(&map, n).unwrap();
        let es = eigendecompose(&u).unwrap();
        (map, es)
    }

    #[test]
    fn elements_of_identity_symbol() {
        let (_, es) = setup(32);
        let tf = toeplitz_of_trig(32, &TrigPoly::constant(1.0));
        let elems = matrix_elements(&tf, &es);
        for e in elems {
            assert!((e - C64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn element_sum_is_trace() {
        let (_, es) = setup(48);
        let f = TrigPoly::cosine(CharacterIndex(2, 0));
        let tf = toeplitz_of_trig(48, &f);
        let elems = matrix_elements(&tf, &es);
        let sum: C64 = elems.iter().sum();
        let tr = tf.mat.trace();
        assert!((sum - tr).norm() < 1e-8);
    }

    #[test]
    fn trace_density_approaches_mean() {
        let n = 256u64;
        let f = TrigPoly::cosine(CharacterIndex(1, 0));
        let tf = toeplitz_of_trig(n as usize, &f);
        let tr = tf.mat.trace();
        assert!(tr.norm() / (n as f64) < 0.02);
        let g = TrigPoly::constant(0.7);
        let tg = toeplitz_of_trig(n as usize, &g);
        assert!((tg.mat.trace() / n as f64 - C64::new(0.7, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn variance_of_constant_is_zero() {
        let (_, es) = setup(32);
        let rec = quantum_variance(&TrigPoly::constant(2.0), 32, &es, "const");
        assert!(rec.variance < 1e-12);
        assert!((rec.recompute() - rec.variance).abs() < 1e-12);
    }

    #[test]
    fn variance_elementwise_bound() {
        let (_, es) = setup(40);
        let f = TrigPoly::cosine(CharacterIndex(2, 2));
        let rec = quantum_variance(&f, 40, &es, "cos");
        let bound = (f.sup_bound() + f.mean().norm()).powi(2);
        assert!(rec.variance <= bound);
        assert!(rec.variance >= 0.0);
    }

    #[test]
    fn szego_constant_symbol_exact() {
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        for n in [32u64, 64] {
            let (lhs, rhs) = szego_trace_check(&TrigPoly::constant(1.0), &map, n, 0).unwrap();
            assert!((lhs - 1.0).abs() < 1e-10);
            assert!((rhs - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn szego_first_order_decay() {
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        let f = TrigPoly::cosine(CharacterIndex(1, 0));
        let (l512, r) = szego_trace_check(&f, &map, 512, 0).unwrap();
        let (l1024, _) = szego_trace_check(&f, &map, 1024, 0).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        // frozen closed form: lhs = (1/2) e^{-pi/N}
        assert!((l512 - 0.5 * (-std::f64::consts::PI / 512.0).exp()).abs() < 1e-12);
        let e512 = (l512 - r).abs();
        let e1024 = (l1024 - r).abs();
        assert!(e1024 < 0.6 * e512);
        // first-order decay: deviation halves (within a factor-2 band)
        // at every doubling across the grid
        let mut prev = (szego_trace_check(&f, &map, 64, 0).unwrap().0 - r).abs();
        for n in [128u64, 256, 512, 1024] {
            let e = (szego_trace_check(&f, &map, n, 0).unwrap().0 - r).abs();
            let ratio = e / prev;
            assert!((0.25..=0.6).contains(&ratio), "N={n}: ratio {ratio}");
            prev = e;
        }
        // T = 1 converges to the same rhs
        let (l512_t1, r_t1) = szego_trace_check(&f, &map, 512, 1).unwrap();
        assert!((r_t1 - r).abs() < 1e-15);
        assert!((l512_t1 - r).abs() < 0.1);
    }

    #[test]
    fn egorov_zero_cases() {
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        let n = 64u64;
        let u = quantize(&map, n).unwrap();
        let w = CMat::identity(n as usize);
        let f = TrigPoly::cosine(CharacterIndex(1, 0));
        let rec = egorov_remainder(&map, &w, &f, 0, "cos2pix").unwrap();
        assert!(rec.value < 1e-12, "T=0 remainder {}", rec.value);
        let one = TrigPoly::constant(1.0);
        let rec = egorov_remainder(&map, &u.mat, &one, 1, "one").unwrap();
        assert!(rec.value < 1e-12, "constant-symbol remainder {}", rec.value);
    }

    #[test]
    fn egorov_matches_damping_mismatch_oracle() {
        // with exact intertwining the only remainder is the damping
        // mismatch: value = sum_k |f_k|^2 (d_k - d_{A^T k})^2
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        for n in [64u64, 128] {
            let u = quantize(&map, n).unwrap();
            let f = TrigPoly::cosine(CharacterIndex(1, 0));
            let rec = egorov_remainder(&map, &u.mat, &f, 1, "cos2pix").unwrap();
            let d = |k: f64| (-std::f64::consts::PI * k / (2.0 * n as f64)).exp();
            let oracle = 0.5 * (d(1.0) - d(5.0)).powi(2);
            assert!(
                (rec.value - oracle).abs() < 1e-10,
                "N={n}: {} vs oracle {oracle}",
                rec.value
            );
        }
    }

    #[test]
    fn markov_extraction() {
        let rec = density_one_extract(&[0.0, 0.0, 0.0], 1.0);
        assert!(rec.exceptional.is_empty());
        let rec = density_one_extract(&[1.0, 2.0, 3.0], 0.5);
        assert!(rec.generic.is_empty());
        let vals: Vec<f64> = (0..100).map(|i| (i as f64 * 0.77).sin().abs()).collect();
        let rec = density_one_extract(&vals, 0.9);
        assert_eq!(rec.exceptional.len() + rec.generic.len(), 100);
        assert!(rec.exceptional_density <= rec.markov_bound + 1e-12);
    }

    #[test]
    fn time_average_diagonal_matches_symbol_diagonal() {
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        let n = 48u64;
        let u = quantize(&map, n).unwrap();
        let es = eigendecompose(&u).unwrap();
        let f = TrigPoly::cosine(CharacterIndex(2, 0));
        let tf = toeplitz_of_trig(n as usize, &f);
        let avg = crate::quantize::time_average_operator(&u, &tf, 3);
        let avg_t = ToeplitzMatrix {
            n: n as usize,
            symbol: crate::quantize::SymbolSpec::Trig(f.clone()),
            mat: avg,
            mean: f.mean(),
        };
        let ea = matrix_elements(&avg_t, &es);
        let ef = matrix_elements(&tf, &es);
        for (a, b) in ea.iter().zip(&ef) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn phase_invariance_of_records() {
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        let n = 48u64;
        let u = quantize(&map, n).unwrap();
        let mut u2 = u.clone();
        u2.mat.scale(C64::from_polar(1.0, 1.234567));
        let es1 = eigendecompose(&u).unwrap();
        let es2 = eigendecompose(&u2).unwrap();
        let f = TrigPoly::cosine(CharacterIndex(2, 0));
        let v1 = quantum_variance(&f, n, &es1, "c").variance;
        let v2 = quantum_variance(&f, n, &es2, "c").variance;
        assert!((v1 - v2).abs() < 1e-10, "{v1} vs {v2}");
        let r1 = egorov_remainder(&map, &u.mat, &f, 1, "c").unwrap().value;
        let r2 = egorov_remainder(&map, &u2.mat, &f, 1, "c").unwrap().value;
        assert!((r1 - r2).abs() < 1e-10);
    }

    #[test]
    fn dilated_bump_toeplitz_consistency() {
        // quadrature route vs FFT-character route for the bump symbol
        let n = 24u64;
        let space = make_space(n).unwrap();
        let p = TorusPoint::new(0.5, 0.5);
        let eps = 0.11;
        let tb = toeplitz_of_dilated_bump(&space, &p, eps).unwrap();
        assert!(tb.hermitian_defect() < 1e-10);
        let cut = crate::geometry::bump_cutoff(crate::geometry::BumpProfile, &p, eps).unwrap();
        let grid = GridSpec::for_space(n, eps);
        let tq = crate::quantize::toeplitz_of_function(&space, &grid, "bump", |x, y| {
            cut.eval(&TorusPoint::new(x, y))
        });
        let dev = tb.mat.max_abs_diff(&tq.mat);
        assert!(dev < 1e-8, "bump Toeplitz routes disagree by {dev}");
        assert!((tb.mean - tq.mean).norm() < 1e-9);
    }

    #[test]
    fn dilated_variance_continuous_at_small_gamma() {
        // gamma -> 0+: the scale |log N|^(-gamma) -> 1, so the dilated
        // symbol approaches the fixed bump of radius = prefactor
        let n = 32u64;
        let space = make_space(n).unwrap();
        let (_, es) = setup(n);
        let p = TorusPoint::new(0.5, 0.5);
        let (rec, _) = variance_dilated_symbol(&space, &p, 1e-9, 0.1, n, &es).unwrap();
        let tb = toeplitz_of_dilated_bump(&space, &p, 0.1).unwrap();
        let elems = matrix_elements(&tb, &es);
        let direct = elems
            .iter()
            .map(|e| (e - tb.mean).norm_sqr())
            .sum::<f64>()
            / elems.len() as f64;
        assert!(
            (rec.variance - direct).abs() < 1e-6 * direct.max(1e-12),
            "{} vs {}",
            rec.variance,
            direct
        );
        // bounded symbol: variance <= 1
        assert!(rec.variance <= 1.0);
    }

    #[test]
    fn fixed_point_mass_basics() {
        let n = 64u64;
        let space = make_space(n).unwrap();
        let (_, es) = setup(n);
        let p = TorusPoint::new(0.3, 0.7);
        let rec = fixed_point_mass(&space, &es, &p, 0.2, 0.1, 5, 64).unwrap();
        assert!(rec.unfiltered_mean >= 0.0);
        // Markov removes the largest values, so the filtered mean cannot
        // exceed the unfiltered one
        assert!(rec.filtered_mean <= rec.unfiltered_mean + 1e-15);
    }

    #[test]
    fn mass_sweep_smoke() {
        let n = 64u64;
        let space = make_space(n).unwrap();
        let (_, es) = setup(n);
        let scale = crate::geometry::log_scale(0.15, n).unwrap();
        let (records, summary, cover) =
            mass_sweep(&space, &es, &scale, 0.1, 7, 64, None).unwrap();
        assert_eq!(records.len(), cover.centers.len() * es.n);
        assert!(records.iter().all(|r| r.sharp >= 0.0 && r.sharp <= 1.0 + 1e-6));
        assert!(records.iter().all(|r| r.ratio > 0.0));
        assert!(summary.ratio_min > 0.0);
        // mean mass over all j at a fixed ball equals the Bergman average:
        // (1/N) sum_j mass_j ~ vol(B) since the diagonal density is ~N
        let c0 = cover.centers[0];
        let b0: Vec<&MassRecord> = records
            .iter()
            .filter(|r| r.center_x == c0.x() && r.center_y == c0.y())
            .collect();
        let mean_mass: f64 = b0.iter().map(|r| r.sharp).sum::<f64>() / b0.len() as f64;
        let vol = std::f64::consts::PI * summary.radius * summary.radius;
        assert!(
            (mean_mass / vol - 1.0).abs() < 0.02,
            "mean mass {mean_mass} vs vol {vol}"
        );
        // trace identity: the all-j mean equals the quadrature of the
        // Bergman diagonal density over the ball
        let grid = GridSpec::for_space(n, summary.radius);
        let m = grid.m;
        let mut diag_mass = 0.0;
        for iy in 0..m {
            for ix in 0..m {
                let z = grid.point(ix, iy);
                if crate::geometry::torus_distance(&z, &c0) < summary.radius {
                    diag_mass += crate::theta::bergman_diag(&space, &z);
                }
            }
        }
        diag_mass *= grid.cell_area() / n as f64;
        assert!(
            (mean_mass - diag_mass).abs() < 1e-6,
            "mean mass {mean_mass} vs diagonal quadrature {diag_mass}"
        );
    }
}
