//! Metaplectic quantization of integer symplectic matrices, discrete
//! Heisenberg translations, and Toeplitz operators.
//!
//! A word in the generators `S = [[0,-1],[1,0]]`, upper shears `U^m` and
//! lower shears `L^m` (all shear exponents even) is quantized generator by
//! generator:
//!
//! * `S`   -> inverse DFT `F^H` (entries `e^{2 pi i j l / N} / sqrt(N)`),
//! * `U^m` -> `diag(e^{-i pi m j^2 / N})`,
//! * `L^m` -> `F diag(e^{+i pi m j^2 / N}) F^H`,
//!
//! and a word `A = G_1 G_2 ... G_r` maps to the operator product
//! `U_A = U_{G_r} ... U_{G_1}`. With these conventions the translation
//! algebra intertwines exactly:
//!
//! ```text
//! U_A T(k) U_A^H = T(A^T k)        (no phase, machine precision)
//! ```
//!
//! and the Toeplitz operator of a character is exactly a damped
//! translation, `T_{e_k} = e^{-pi |k|^2 / (2N)} T(k)`. Both identities are
//! pinned by tests rather than asserted: they fix every sign convention in
//! this module.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{imat_det, imat_mul, CatMap, CharacterIndex, IMat2, TrigPoly};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::theta::{GridSpec, ThetaSpace};

/// One generator of the factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gen {
    /// `S` or `S^{-1}` depending on the sign.
    S(i8),
    /// Upper shear by an even integer.
    Upper(i64),
    /// Lower shear by an even integer.
    Lower(i64),
}

impl Gen {
    pub fn matrix(&self) -> IMat2 {
        match *self {
            Gen::S(1) => [[0, -1], [1, 0]],
            Gen::S(_) => [[0, 1], [-1, 0]],
            Gen::Upper(m) => [[1, m], [0, 1]],
            Gen::Lower(m) => [[1, 0], [m, 1]],
        }
    }
}

/// Ordered generator word; multiplying the matrices in order reproduces
/// the factored matrix exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sl2Word(pub Vec<Gen>);

impl Sl2Word {
    pub fn matrix(&self) -> IMat2 {
        let mut acc = [[1, 0], [0, 1]];
        for g in &self.0 {
            acc = imat_mul(&acc, &g.matrix());
        }
        acc
    }
}

/// Factor a symplectic integer matrix into `{S, U^even, L^even}` by a
/// parity-constrained Euclidean reduction; errors if the matrix is not in
/// the even-shear (theta) group or if reduction does not terminate within
/// depth 64.
pub fn factor_sl2z(a: &IMat2) -> Result<Sl2Word> {
    let det = imat_det(a);
    if det != 1 {
        return Err(Error::NotSymplectic { det });
    }
    let m2 = |v: i64| v.rem_euclid(2);
    let parity = [[m2(a[0][0]), m2(a[0][1])], [m2(a[1][0]), m2(a[1][1])]];
    if parity != [[1, 0], [0, 1]] && parity != [[0, 1], [1, 0]] {
        return Err(Error::InadmissibleParity {
            m00: parity[0][0],
            m01: parity[0][1],
            m10: parity[1][0],
            m11: parity[1][1],
        });
    }

    // reduce W * A = I by left-multiplications; then A = W^{-1}
    let mut cur = *a;
    let mut left: Vec<Gen> = Vec::new();
    let mut depth = 0usize;
    loop {
        depth += 1;
        if depth > 64 {
            return Err(Error::FactorizationDepth { depth: 64 });
        }
        let [[p, q], [r, _s]] = cur;
        if r == 0 {
            // det 1 and r = 0: p = s = +-1
            if p == 1 {
                if q != 0 {
                    // cur = U^q; q is even here by parity
                    left.push(Gen::Upper(-q));
                }
                break;
            } else {
                // cur = [[-1, q], [0, -1]]: U^q cur = -I, then S S (-I) = I
                left.push(Gen::Upper(q));
                left.push(Gen::S(1));
                left.push(Gen::S(1));
                break;
            }
        }
        if p == 0 {
            // swap rows: S^{-1} * cur has top-left r
            left.push(Gen::S(-1));
            cur = imat_mul(&Gen::S(-1).matrix(), &cur);
            continue;
        }
        if p.abs() >= r.abs() {
            // kill top-left with an even multiple of the bottom row
            let quot = nearest_even(p, r);
            if quot != 0 {
                left.push(Gen::Upper(-quot));
                cur = imat_mul(&Gen::Upper(-quot).matrix(), &cur);
            } else {
                left.push(Gen::S(-1));
                cur = imat_mul(&Gen::S(-1).matrix(), &cur);
            }
        } else {
            // reduce bottom-left with an even multiple of the top row
            let quot = nearest_even(r, p);
            if quot != 0 {
                left.push(Gen::Lower(-quot));
                cur = imat_mul(&Gen::Lower(-quot).matrix(), &cur);
            } else {
                left.push(Gen::S(-1));
                cur = imat_mul(&Gen::S(-1).matrix(), &cur);
            }
        }
    }

    // A = (left_k ... left_1)^{-1} = left_1^{-1} ... left_k^{-1}
    let word: Vec<Gen> = left
        .iter()
        .map(|g| match *g {
            Gen::S(s) => Gen::S(-s),
            Gen::Upper(m) => Gen::Upper(-m),
            Gen::Lower(m) => Gen::Lower(-m),
        })
        .collect();
    let w = Sl2Word(word);
    if w.matrix() != *a {
        return Err(Error::FactorizationDepth { depth });
    }
    for g in &w.0 {
        match g {
            Gen::Upper(m) | Gen::Lower(m) => {
                if m.rem_euclid(2) != 0 {
                    return Err(Error::InadmissibleParity { m00: 9, m01: 9, m10: 9, m11: 9 });
                }
            }
            Gen::S(_) => {}
        }
    }
    Ok(w)
}

/// Even integer nearest to `p/r`, preferring smaller remainder `|p - q r|`.
fn nearest_even(p: i64, r: i64) -> i64 {
    let q0 = (p as f64 / r as f64 / 2.0).round() as i64 * 2;
    let cands = [q0, q0 - 2, q0 + 2];
    *cands
        .iter()
        .min_by_key(|&&q| (p - q * r).abs())
        .unwrap()
}

/// A unitary on the section space.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    pub n: usize,
    pub mat: CMat,
}

impl UnitaryMatrix {
    pub fn unitarity_defect(&self) -> f64 {
        self.mat.unitarity_defect()
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix { n: self.n, mat: self.mat.adjoint() }
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix { n: self.n, mat: self.mat.mul(&other.mat) }
    }

    /// `self^t` for `t >= 0` by repeated multiplication.
    pub fn power(&self, t: u32) -> UnitaryMatrix {
        let mut acc = UnitaryMatrix { n: self.n, mat: CMat::identity(self.n) };
        for _ in 0..t {
            acc = self.mul(&acc);
        }
        acc
    }
}

/// Apply the quantized generator on the left of `m` in place.
fn apply_gen_left(g: &Gen, m: &mut CMat, planner: &mut FftPlanner<f64>) {
    let n = m.rows();
    match *g {
        Gen::S(sign) => {
            // S -> F^H = inverse DFT (normalized); S^{-1} -> F
            let fft = if sign == 1 {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            };
            let scale = 1.0 / (n as f64).sqrt();
            for c in 0..m.cols() {
                let col = m.col_mut(c);
                fft.process(col);
                for v in col.iter_mut() {
                    *v *= scale;
                }
            }
        }
        Gen::Upper(k) => {
            let phases = quadratic_phases(n, -k);
            scale_rows(m, &phases);
        }
        Gen::Lower(k) => {
            // F D_{+k} F^H
            let fwd = planner.plan_fft_forward(n);
            let inv = planner.plan_fft_inverse(n);
            let phases = quadratic_phases(n, k);
            let scale = 1.0 / n as f64;
            for c in 0..m.cols() {
                let col = m.col_mut(c);
                inv.process(col);
                for (v, p) in col.iter_mut().zip(&phases) {
                    *v *= p;
                }
                fwd.process(col);
                for v in col.iter_mut() {
                    *v *= scale;
                }
            }
        }
    }
}

/// `e^{i pi m j^2 / N}` for `j = 0..N`; well defined on `Z/N` since `m` is
/// even.
fn quadratic_phases(n: usize, m: i64) -> Vec<C64> {
    (0..n)
        .map(|j| {
            let jj = (j * j) as f64;
            C64::from_polar(1.0, std::f64::consts::PI * m as f64 * jj / n as f64)
        })
        .collect()
}

fn scale_rows(m: &mut CMat, phases: &[C64]) {
    let rows = m.rows();
    for c in 0..m.cols() {
        let col = m.col_mut(c);
        for r in 0..rows {
            col[r] *= phases[r];
        }
    }
}

/// Quantize an admissible map at level `N`.
///
/// The result is unitary to machine precision and satisfies the exact
/// intertwining `U T(k) U^H = T(A^T k)`; it is canonical up to the global
/// phase conventions fixed in this module.
pub fn quantize(map: &CatMap, n: u64) -> Result<UnitaryMatrix> {
    let space_n = n as usize;
    if n < 1 || n > crate::theta::N_MAX {
        return Err(Error::LevelOutOfRange { n, lo: 1, hi: crate::theta::N_MAX });
    }
    let mut m = CMat::identity(space_n);
    let mut planner = FftPlanner::new();
    for g in &map.word.0 {
        apply_gen_left(g, &mut m, &mut planner);
    }
    Ok(UnitaryMatrix { n: space_n, mat: m })
}

/// Discrete Heisenberg translation
/// `(T(k) v)_j = e^{-i pi k1 k2 / N} e^{-2 pi i k2 (j - k1)/N} v_{j - k1}`,
/// satisfying `T(k) T(l) = e^{i pi (k1 l2 - k2 l1)/N} T(k+l)` and
/// `T(k)^H = T(-k)`.
pub fn heisenberg_translation(n: usize, k: CharacterIndex) -> UnitaryMatrix {
    let mut m = CMat::zeros(n, n);
    apply_translation_accumulate(&mut m, n, k, C64::new(1.0, 0.0));
    UnitaryMatrix { n, mat: m }
}

/// Add `coeff * T(k)` into dense `m`.
fn apply_translation_accumulate(m: &mut CMat, n: usize, k: CharacterIndex, coeff: C64) {
    let nn = n as i64;
    let base = C64::from_polar(1.0, -std::f64::consts::PI * (k.0 * k.1) as f64 / n as f64);
    for l in 0..n {
        let j = ((l as i64 + k.0).rem_euclid(nn)) as usize;
        let ph = C64::from_polar(1.0, -std::f64::consts::TAU * (k.1 * l as i64) as f64 / n as f64);
        m[(j, l)] += coeff * base * ph;
    }
}

/// Symbol provenance of a Toeplitz operator.
#[derive(Debug, Clone)]
pub enum SymbolSpec {
    Trig(TrigPoly),
    Grid(String),
}

/// Compression of multiplication by a symbol to the section space.
#[derive(Debug, Clone)]
pub struct ToeplitzMatrix {
    pub n: usize,
    pub symbol: SymbolSpec,
    pub mat: CMat,
    /// Mean of the symbol, `int f dV`.
    pub mean: C64,
}

impl ToeplitzMatrix {
    pub fn hermitian_defect(&self) -> f64 {
        self.mat.max_abs_diff(&self.mat.adjoint())
    }
}

/// Exact Toeplitz operator of a trigonometric polynomial:
/// `T_f = sum_k f_k e^{-pi |k|^2/(2N)} T(k)` (a closed-form Gaussian
/// integral in this basis; cross-validated against quadrature).
pub fn toeplitz_of_trig(n: usize, f: &TrigPoly) -> ToeplitzMatrix {
    let mut m = CMat::zeros(n, n);
    for (k, c) in &f.coeffs {
        let damp = (-std::f64::consts::PI * ((k.0 * k.0 + k.1 * k.1) as f64) / (2.0 * n as f64))
            .exp();
        apply_translation_accumulate(&mut m, n, *k, c * damp);
    }
    ToeplitzMatrix { n, symbol: SymbolSpec::Trig(f.clone()), mat: m, mean: f.mean() }
}

/// Quadrature Toeplitz operator of an arbitrary grid-sampled symbol:
/// `(T_f)_{jl} = sum_grid f(z) theta_hat_l(z) conj(theta_hat_j(z)) e^{-2 pi N y^2} h^2`.
///
/// Independent code path from [`toeplitz_of_trig`]; tests pin their
/// agreement on characters.
pub fn toeplitz_of_function(
    space: &ThetaSpace,
    grid: &GridSpec,
    label: &str,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> ToeplitzMatrix {
    use rayon::prelude::*;
    let n = space.dim();
    let m = grid.m;
    // B: grid x n basis matrix, F B: rows scaled by symbol values
    let mut b = CMat::zeros(m * m, n);
    let mut fb = CMat::zeros(m * m, n);
    let rows: Vec<(Vec<C64>, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|iy| {
            let y = iy as f64 / m as f64;
            let mut vals = Vec::with_capacity(m * n);
            let mut fv = Vec::with_capacity(m);
            for ix in 0..m {
                let x = ix as f64 / m as f64;
                vals.extend(space.all_basis_weighted(x, y));
                fv.push(f(x, y));
            }
            (vals, fv)
        })
        .collect();
    let mut mean = 0.0f64;
    for (iy, (vals, fv)) in rows.iter().enumerate() {
        for ix in 0..m {
            let r = iy * m + ix;
            for j in 0..n {
                let v = vals[ix * n + j];
                b[(r, j)] = v;
                fb[(r, j)] = v * fv[ix];
            }
            mean += fv[ix];
        }
    }
    mean /= (m * m) as f64;
    let mut t = b.adjoint_mul(&fb);
    t.scale(C64::new(grid.cell_area(), 0.0));
    ToeplitzMatrix {
        n,
        symbol: SymbolSpec::Grid(label.to_string()),
        mat: t,
        mean: C64::new(mean, 0.0),
    }
}

/// Toeplitz operator of the dilated radial bump `z -> profile(d(z,p)/eps)`
/// (1 on `B(p,eps)`, supported in `B(p,2eps)`).
///
/// The symbol's Fourier coefficients are taken from a 1024x1024 FFT of
/// its samples; indices are then assembled exactly through the damped
/// translation algebra. The Gaussian damping kills every index beyond
/// `|k| ~ 4.6 sqrt(N)`, which the FFT band covers for all supported `N`,
/// and the smooth bump's own coefficient decay keeps FFT aliasing below
/// 1e-12.
pub fn toeplitz_of_dilated_bump(
    space: &ThetaSpace,
    center: &crate::geometry::TorusPoint,
    eps: f64,
) -> Result<ToeplitzMatrix> {
    use crate::geometry::{bump_cutoff, BumpProfile, TorusPoint};
    let cut = bump_cutoff(BumpProfile, center, eps)?;
    let n = space.dim();
    const G: usize = 1024;
    let mut samples: Vec<C64> = Vec::with_capacity(G * G);
    for iy in 0..G {
        for ix in 0..G {
            let z = TorusPoint::new(ix as f64 / G as f64, iy as f64 / G as f64);
            samples.push(C64::new(cut.eval(&z), 0.0));
        }
    }
    fft2_inplace(&mut samples, G);
    let scale = 1.0 / (G * G) as f64;

    // keep |k| within both the FFT band and the damping support
    let k_cut = (4.8 * (n as f64).sqrt()).ceil() as i64;
    let k_cut = k_cut.min(G as i64 / 2 - 1);
    let mut mean = C64::new(0.0, 0.0);
    let mut terms: Vec<(CharacterIndex, C64)> = Vec::new();
    for k2 in -k_cut..=k_cut {
        for k1 in -k_cut..=k_cut {
            let idx = (k2.rem_euclid(G as i64) as usize) * G + k1.rem_euclid(G as i64) as usize;
            let coeff = samples[idx] * scale;
            if k1 == 0 && k2 == 0 {
                mean = coeff;
            }
            let damp = (-std::f64::consts::PI * ((k1 * k1 + k2 * k2) as f64)
                / (2.0 * n as f64))
                .exp();
            let c = coeff * damp;
            if c.norm() >= 1e-15 {
                terms.push((CharacterIndex(k1, k2), c));
            }
        }
    }

    // dense assembly, parallel over columns
    use rayon::prelude::*;
    let mut m = CMat::zeros(n, n);
    let nn = n as i64;
    let cols: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut col = vec![C64::new(0.0, 0.0); n];
            for (k, c) in &terms {
                let j = ((l as i64 + k.0).rem_euclid(nn)) as usize;
                let ph = C64::from_polar(
                    1.0,
                    -std::f64::consts::PI * (k.0 * k.1) as f64 / n as f64
                        - std::f64::consts::TAU * (k.1 * l as i64) as f64 / n as f64,
                );
                col[j] += c * ph;
            }
            col
        })
        .collect();
    for (l, col) in cols.into_iter().enumerate() {
        m.col_mut(l).copy_from_slice(&col);
    }
    Ok(ToeplitzMatrix {
        n,
        symbol: SymbolSpec::Grid(format!(
            "bump(center=({},{}), eps={eps})",
            center.x(),
            center.y()
        )),
        mat: m,
        mean,
    })
}

/// In-place 2D FFT of row-major `G x G` samples.
fn fft2_inplace(data: &mut [C64], g: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(g);
    for row in data.chunks_mut(g) {
        fft.process(row);
    }
    // columns via transpose, fft, transpose back
    let mut tmp = vec![C64::new(0.0, 0.0); g * g];
    for r in 0..g {
        for c in 0..g {
            tmp[c * g + r] = data[r * g + c];
        }
    }
    for row in tmp.chunks_mut(g) {
        fft.process(row);
    }
    for r in 0..g {
        for c in 0..g {
            data[r * g + c] = tmp[c * g + r];
        }
    }
}

/// Time average `(2T+1)^{-1} sum_{t=-T}^{T} U^t T_f U^{-t}`.
pub fn time_average_operator(u: &UnitaryMatrix, tf: &ToeplitzMatrix, t_max: u32) -> CMat {
    let mut acc = tf.mat.clone();
    let mut fwd = tf.mat.clone();
    let mut bwd = tf.mat.clone();
    let uh = u.adjoint();
    for _ in 1..=t_max {
        fwd = u.mat.mul(&fwd).mul(&uh.mat);
        bwd = uh.mat.mul(&bwd).mul(&u.mat);
        for (a, (f, b)) in acc
            .data_mut()
            .iter_mut()
            .zip(fwd.data().iter().zip(bwd.data()))
        {
            *a += f + b;
        }
    }
    acc.scale(C64::new(1.0 / (2.0 * t_max as f64 + 1.0), 0.0));
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::validate_cat_map;
    use rand::Rng;
    use rand::SeedableRng;

    fn arnold_like() -> CatMap {
        validate_cat_map([[1, 2], [2, 5]]).unwrap()
    }

    #[test]
    fn factorization_multiplies_back() {
        let w = factor_sl2z(&[[1, 2], [2, 5]]).unwrap();
        assert_eq!(w.matrix(), [[1, 2], [2, 5]]);
        let w = factor_sl2z(&[[1, 0], [0, 1]]).unwrap();
        assert_eq!(w.matrix(), [[1, 0], [0, 1]]);
        assert!(w.0.is_empty());
        assert!(factor_sl2z(&[[2, 1], [1, 1]]).is_err());
    }

    #[test]
    fn factorization_round_trip_random_products() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let mut a = [[1i64, 0], [0, 1]];
            for _ in 0..4 {
                let k = 2 * rng.gen_range(-3i64..=3);
                let g = if rng.gen_bool(0.5) { Gen::Upper(k) } else { Gen::Lower(k) };
                a = imat_mul(&a, &g.matrix());
                if rng.gen_bool(0.3) {
                    a = imat_mul(&a, &Gen::S(1).matrix());
                }
            }
            let w = factor_sl2z(&a).expect("random even-shear product must factor");
            assert_eq!(w.matrix(), a);
        }
    }

    #[test]
    fn quantize_n1_is_scalar() {
        let map = arnold_like();
        let u = quantize(&map, 1).unwrap();
        assert_eq!(u.n, 1);
        assert!((u.mat[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantize_unitary() {
        let map = arnold_like();
        for n in [64u64, 256] {
            let u = quantize(&map, n).unwrap();
            assert!(u.unitarity_defect() < 1e-10, "N={n}");
        }
    }

    #[test]
    fn translations_projective_algebra() {
        let n = 24;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        assert!(
            heisenberg_translation(n, CharacterIndex(0, 0))
                .mat
                .max_abs_diff(&CMat::identity(n))
                < 1e-14
        );
        for _ in 0..10 {
            let k = CharacterIndex(rng.gen_range(-5..=5), rng.gen_range(-5..=5));
            let l = CharacterIndex(rng.gen_range(-5..=5), rng.gen_range(-5..=5));
            let tk = heisenberg_translation(n, k);
            let tl = heisenberg_translation(n, l);
            let prod = tk.mat.mul(&tl.mat);
            let sum = heisenberg_translation(n, CharacterIndex(k.0 + l.0, k.1 + l.1));
            let phase = C64::from_polar(
                1.0,
                std::f64::consts::PI * ((k.0 * l.1 - k.1 * l.0) as f64) / n as f64,
            );
            let mut expect = sum.mat.clone();
            expect.scale(phase);
            assert!(prod.max_abs_diff(&expect) < 1e-13);
            // group inverse up to phase; with this convention exactly
            let tmk = heisenberg_translation(n, CharacterIndex(-k.0, -k.1));
            assert!(tk.mat.mul(&tmk.mat).max_abs_diff(&CMat::identity(n)) < 1e-13);
        }
    }

    #[test]
    fn exact_egorov_for_translations() {
        let map = arnold_like();
        let n = 128usize;
        let u = quantize(&map, n as u64).unwrap();
        let uh = u.adjoint();
        let at = [[map.a[0][0], map.a[1][0]], [map.a[0][1], map.a[1][1]]];
        let mut worst = 0.0f64;
        for k1 in -4i64..=4 {
            for k2 in -4i64..=4 {
                let k = CharacterIndex(k1, k2);
                let kt = CharacterIndex(at[0][0] * k1 + at[0][1] * k2, at[1][0] * k1 + at[1][1] * k2);
                let lhs = u.mat.mul(&heisenberg_translation(n, k).mat).mul(&uh.mat);
                let rhs = heisenberg_translation(n, kt);
                worst = worst.max(lhs.max_abs_diff(&rhs.mat));
            }
        }
        assert!(worst < 1e-8, "intertwining deviation {worst}");
    }

    #[test]
    fn projective_cocycle() {
        // composition is contravariant (the quantization conjugates like a
        // Koopman operator): U_A U_B = phase * U_{BA}, so the cocycle trace
        // pairs the product with quantize(B A)
        let n = 64u64;
        let a = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        let b = validate_cat_map([[1, 4], [4, 17]]).unwrap();
        let ba = validate_cat_map(imat_mul(&b.a, &a.a)).unwrap();
        let ua = quantize(&a, n).unwrap();
        let ub = quantize(&b, n).unwrap();
        let uba = quantize(&ba, n).unwrap();
        let prod = ua.mat.mul(&ub.mat);
        let tr = uba.mat.adjoint_mul(&prod).trace();
        assert!(
            (tr.norm() - n as f64).abs() < 1e-6,
            "cocycle trace |{tr}| vs {n}"
        );
    }

    #[test]
    fn toeplitz_of_constant_is_scalar_identity() {
        let n = 32;
        let t = toeplitz_of_trig(n, &TrigPoly::constant(1.0));
        assert!(t.mat.max_abs_diff(&CMat::identity(n)) < 1e-12);
        let t = toeplitz_of_trig(n, &TrigPoly::constant(2.5));
        let mut expect = CMat::identity(n);
        expect.scale(C64::new(2.5, 0.0));
        assert!(t.mat.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn toeplitz_quadrature_matches_damped_translation() {
        // the independent quadrature route reproduces the closed form, and
        // the fitted scalar is the Gaussian damping
        let n = 16u64;
        let space = crate::theta::make_space(n).unwrap();
        let grid = GridSpec::for_space(n, 1.0);
        for (k1, k2) in [(1i64, 0i64), (0, 1), (2, 3), (-1, 2)] {
            let tq = toeplitz_of_function(&space, &grid, "char", |x, y| {
                (std::f64::consts::TAU * (k1 as f64 * x + k2 as f64 * y)).cos()
            });
            // real part of character: (e_k + e_{-k})/2
            let mut f = TrigPoly::zero();
            f.insert(CharacterIndex(k1, k2), C64::new(0.5, 0.0));
            f.insert(CharacterIndex(-k1, -k2), C64::new(0.5, 0.0));
            let tc = toeplitz_of_trig(n as usize, &f);
            assert!(
                tq.mat.max_abs_diff(&tc.mat) < 1e-9,
                "k=({k1},{k2}): quadrature vs closed form"
            );
            assert!(tq.hermitian_defect() < 1e-12);
        }
        // least-squares scalar fit against the bare translation:
        // c = <T(k), Tq>_HS / ||T(k)||^2 picks out the +k half of the
        // cosine, so the fitted damping is 2c
        let k = CharacterIndex(1, 2);
        let tq = toeplitz_of_function(&space, &grid, "char", |x, y| {
            (std::f64::consts::TAU * (x + 2.0 * y)).cos()
        });
        let tk = heisenberg_translation(n as usize, k);
        let mut c = C64::new(0.0, 0.0);
        for l in 0..n as usize {
            let j = ((l as i64 + k.0).rem_euclid(n as i64)) as usize;
            c += tq.mat[(j, l)] * tk.mat[(j, l)].conj();
        }
        c /= n as f64;
        let damp = (-std::f64::consts::PI * 5.0 / (2.0 * n as f64)).exp();
        assert!(
            (2.0 * c - C64::new(damp, 0.0)).norm() < 1e-7,
            "fitted {} vs damping {damp}",
            2.0 * c
        );
    }

    #[test]
    fn damping_increases_to_one_with_n() {
        let k = CharacterIndex(2, 1);
        let d = |n: u64| {
            (-std::f64::consts::PI * ((k.0 * k.0 + k.1 * k.1) as f64) / (2.0 * n as f64)).exp()
        };
        assert!(d(64) < d(256) && d(256) < d(1024));
        assert!(d(1024) > 0.99);
    }

    #[test]
    fn toeplitz_operator_norm_contraction() {
        let n = 48usize;
        let mut f = TrigPoly::cosine(CharacterIndex(1, 0));
        f.insert(CharacterIndex(0, 0), C64::new(0.25, 0.0));
        let t = toeplitz_of_trig(n, &f);
        let sup = f.sup_bound();
        // power iteration for the operator norm
        let mut v = vec![C64::new(1.0, 0.0); n];
        for it in 0..60 {
            let w = t.mat.mul_vec(&v);
            let nrm = (w.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt();
            v = w.into_iter().map(|x| x / nrm).collect();
            if it == 59 {
                assert!(nrm <= sup + 1e-6, "||T_f|| = {nrm} vs sup bound {sup}");
            }
        }
    }

    #[test]
    fn time_average_basics() {
        let map = arnold_like();
        let n = 32u64;
        let u = quantize(&map, n).unwrap();
        let tf = toeplitz_of_trig(n as usize, &TrigPoly::cosine(CharacterIndex(1, 0)));
        let avg0 = time_average_operator(&u, &tf, 0);
        assert!(avg0.max_abs_diff(&tf.mat) < 1e-14);
        let tone = toeplitz_of_trig(n as usize, &TrigPoly::constant(1.0));
        let avg = time_average_operator(&u, &tone, 3);
        assert!(avg.max_abs_diff(&CMat::identity(n as usize)) < 1e-11);
    }
}
