//! Hyperbolic toral automorphisms: admissibility, iteration, growth rate,
//! and exact correlation decay on the character algebra.
//!
//! Observables are real trigonometric polynomials. Their pullback under an
//! integer symplectic matrix is exact integer transport of the character
//! lattice, so correlations can be evaluated in closed form and compared
//! against grid quadrature.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantize::{factor_sl2z, Sl2Word};

/// Integer 2x2 matrix, row-major.
pub type IMat2 = [[i64; 2]; 2];

pub fn imat_mul(a: &IMat2, b: &IMat2) -> IMat2 {
    let mut c = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn imat_det(a: &IMat2) -> i64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Frequency vector of a character `e^{2 pi i (k1 x + k2 y)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharacterIndex(pub i64, pub i64);

impl CharacterIndex {
    /// Pullback index under `z -> A z`: `k -> A^T k`.
    pub fn transport(&self, a: &IMat2) -> CharacterIndex {
        CharacterIndex(
            a[0][0] * self.0 + a[1][0] * self.1,
            a[0][1] * self.0 + a[1][1] * self.1,
        )
    }

    pub fn norm(&self) -> f64 {
        ((self.0 * self.0 + self.1 * self.1) as f64).sqrt()
    }
}

/// A validated hyperbolic symplectic integer matrix together with its
/// growth constant and its even-shear generator word.
#[derive(Debug, Clone)]
pub struct CatMap {
    pub a: IMat2,
    /// Log of the spectral radius.
    pub delta0: f64,
    pub word: Sl2Word,
}

/// Validate determinant, hyperbolicity and quantizability, and factor the
/// matrix into Fourier and even-shear generators.
pub fn validate_cat_map(a: IMat2) -> Result<CatMap> {
    let det = imat_det(&a);
    if det != 1 {
        return Err(Error::NotSymplectic { det });
    }
    let t = a[0][0] + a[1][1];
    if t.abs() <= 2 {
        return Err(Error::NotHyperbolic { trace_abs: t.abs() });
    }
    let m = |v: i64| v.rem_euclid(2);
    let parity = [[m(a[0][0]), m(a[0][1])], [m(a[1][0]), m(a[1][1])]];
    let id = parity == [[1, 0], [0, 1]];
    let anti = parity == [[0, 1], [1, 0]];
    if !id && !anti {
        return Err(Error::InadmissibleParity {
            m00: parity[0][0],
            m01: parity[0][1],
            m10: parity[1][0],
            m11: parity[1][1],
        });
    }
    let word = factor_sl2z(&a)?;
    let tt = t.abs() as f64;
    let delta0 = ((tt + (tt * tt - 4.0).sqrt()) / 2.0).ln();
    Ok(CatMap { a, delta0, word })
}

impl CatMap {
    pub fn inverse_matrix(&self) -> IMat2 {
        let a = &self.a;
        [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
    }

    /// `A^T` with exact big-integer arithmetic (`T` may be negative).
    pub fn power_big(&self, t: i64) -> [[BigInt; 2]; 2] {
        let base = if t >= 0 { self.a } else { self.inverse_matrix() };
        let mut acc = [
            [BigInt::from(1), BigInt::from(0)],
            [BigInt::from(0), BigInt::from(1)],
        ];
        for _ in 0..t.unsigned_abs() {
            let mut next = [
                [BigInt::from(0), BigInt::from(0)],
                [BigInt::from(0), BigInt::from(0)],
            ];
            for (i, row) in next.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = &acc[i][0] * base[0][j] + &acc[i][1] * base[1][j];
                }
            }
            acc = next;
        }
        acc
    }

    /// Pullback transport of a character by `(A^T)^t`, exact.
    pub fn transport_big(&self, k: &CharacterIndex, t: i64) -> (BigInt, BigInt) {
        let p = self.power_big(t);
        (
            &p[0][0] * k.0 + &p[1][0] * k.1,
            &p[0][1] * k.0 + &p[1][1] * k.1,
        )
    }
}

/// Operator 2-norm of `A^T`; for a linear map this is the `C^2` norm since
/// second derivatives vanish.
pub fn c2_growth(map: &CatMap, t: i64) -> f64 {
    assert!(t.abs() <= 64, "growth computed for |T| <= 64");
    let p = big_to_f64_mat(&map.power_big(t));
    spectral_norm_2x2(&p)
}

fn big_to_f64_mat(a: &[[BigInt; 2]; 2]) -> [[f64; 2]; 2] {
    let f = |v: &BigInt| -> f64 {
        use num_bigint::Sign;
        let (sign, digits) = v.to_u64_digits();
        let mut x = 0.0f64;
        for d in digits.iter().rev() {
            x = x * 1.8446744073709552e19 + *d as f64;
        }
        if sign == Sign::Minus {
            -x
        } else {
            x
        }
    };
    [[f(&a[0][0]), f(&a[0][1])], [f(&a[1][0]), f(&a[1][1])]]
}

fn spectral_norm_2x2(a: &[[f64; 2]; 2]) -> f64 {
    // largest singular value via the 2x2 Gram matrix
    let g11 = a[0][0] * a[0][0] + a[1][0] * a[1][0];
    let g22 = a[0][1] * a[0][1] + a[1][1] * a[1][1];
    let g12 = a[0][0] * a[0][1] + a[1][0] * a[1][1];
    let tr = g11 + g22;
    let disc = ((g11 - g22) * (g11 - g22) + 4.0 * g12 * g12).sqrt();
    ((tr + disc) / 2.0).sqrt()
}

/// Real trigonometric polynomial `sum_k c_k e^{2 pi i k . z}` with finite
/// spectrum; real-valuedness means `c_{-k} = conj(c_k)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPoly {
    pub coeffs: BTreeMap<CharacterIndex, C64>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(CharacterIndex(0, 0), C64::new(c, 0.0));
        Self { coeffs }
    }

    /// `cos(2 pi k . z)` as a hermitian pair of characters.
    pub fn cosine(k: CharacterIndex) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(k, C64::new(0.5, 0.0));
        coeffs.insert(CharacterIndex(-k.0, -k.1), C64::new(0.5, 0.0));
        Self { coeffs }
    }

    pub fn character(k: CharacterIndex) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(k, C64::new(1.0, 0.0));
        Self { coeffs }
    }

    pub fn insert(&mut self, k: CharacterIndex, c: C64) {
        if c != C64::new(0.0, 0.0) {
            self.coeffs.insert(k, c);
        }
    }

    pub fn mean(&self) -> C64 {
        self.coeffs.get(&CharacterIndex(0, 0)).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// `integral |f|^2 dV` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn sup_bound(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    pub fn eval(&self, x: f64, y: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (k, c) in &self.coeffs {
            let ph = std::f64::consts::TAU * (k.0 as f64 * x + k.1 as f64 * y);
            acc += c * C64::from_polar(1.0, ph);
        }
        acc
    }

    /// Exact pullback `f o chi^t`: every index transported by `(A^T)^t`.
    ///
    /// Errors if a transported index leaves the `i64` range.
    pub fn compose_iterate(&self, map: &CatMap, t: i64) -> Result<TrigPoly> {
        let mut out = TrigPoly::zero();
        for (k, c) in &self.coeffs {
            let (k1, k2) = map.transport_big(k, t);
            let k1 = i64::try_from(k1)
                .map_err(|_| Error::AliasingGuard { max_entry: f64::INFINITY })?;
            let k2 = i64::try_from(k2)
                .map_err(|_| Error::AliasingGuard { max_entry: f64::INFINITY })?;
            let entry = out.coeffs.entry(CharacterIndex(k1, k2)).or_insert(C64::new(0.0, 0.0));
            *entry += c;
        }
        Ok(out)
    }
}

/// Exact correlation `int (g o chi^t) f dV - int f int g` via lattice
/// transport; returns exactly zero once supports separate.
pub fn correlation_exact(f: &TrigPoly, g: &TrigPoly, map: &CatMap, t: i64) -> C64 {
    // int e_q e_l = delta_{q = -l}; so int (g o chi^t) f = sum_k g_k f_{-(A^T)^t k}
    let mut acc = C64::new(0.0, 0.0);
    for (k, gc) in &g.coeffs {
        let (k1, k2) = map.transport_big(k, t);
        let (k1, k2) = match (i64::try_from(k1), i64::try_from(k2)) {
            (Ok(a), Ok(b)) => (a, b),
            // beyond i64 the index is far outside any finite support
            _ => continue,
        };
        if let Some(fc) = f.coeffs.get(&CharacterIndex(-k1, -k2)) {
            acc += gc * fc;
        }
    }
    acc - g.mean() * f.mean()
}

/// Smallest horizon past which [`correlation_exact`] vanishes for all
/// `|t| > t0`, computed by explicit orbit enumeration.
pub fn correlation_horizon(f: &TrigPoly, g: &TrigPoly, map: &CatMap, t_max: i64) -> i64 {
    let mut t0 = 0i64;
    for t in -t_max..=t_max {
        let c = correlation_exact(f, g, map, t);
        if c.norm() > 0.0 && t != 0 {
            t0 = t0.max(t.abs());
        }
    }
    t0
}

/// Grid-quadrature correlation: samples `(g o chi^t)(z) f(z)` with the
/// composition done in exact integer arithmetic at rational grid points.
///
/// The grid size is chosen collision-free for the two spectra so the
/// rectangle rule is exact up to roundoff.
pub fn correlation_quadrature(f: &TrigPoly, g: &TrigPoly, map: &CatMap, t: i64) -> Result<C64> {
    let p = map.power_big(t);
    let pf = big_to_f64_mat(&p);
    let max_entry = pf.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_entry >= 1e6 {
        return Err(Error::AliasingGuard { max_entry });
    }
    let p64 = [
        [i64::try_from(p[0][0].clone()).unwrap(), i64::try_from(p[0][1].clone()).unwrap()],
        [i64::try_from(p[1][0].clone()).unwrap(), i64::try_from(p[1][1].clone()).unwrap()],
    ];

    // find a grid with no aliasing collisions: (A^t)^T k + l == 0 mod G only
    // when exactly zero
    let mut grid = 512usize;
    'search: loop {
        for (k, _) in &g.coeffs {
            let kt = CharacterIndex(
                p64[0][0] * k.0 + p64[1][0] * k.1,
                p64[0][1] * k.0 + p64[1][1] * k.1,
            );
            for (l, _) in &f.coeffs {
                let s1 = kt.0 + l.0;
                let s2 = kt.1 + l.1;
                let g_ = grid as i64;
                if (s1.rem_euclid(g_) == 0 && s2.rem_euclid(g_) == 0) && !(s1 == 0 && s2 == 0) {
                    grid += 1;
                    continue 'search;
                }
            }
        }
        break;
    }

    let gsz = grid as i64;
    let mut acc = C64::new(0.0, 0.0);
    for iy in 0..gsz {
        for ix in 0..gsz {
            // exact rational composition: A^t (ix, iy)/G mod 1
            let jx = (p64[0][0] * ix + p64[0][1] * iy).rem_euclid(gsz);
            let jy = (p64[1][0] * ix + p64[1][1] * iy).rem_euclid(gsz);
            let x = ix as f64 / grid as f64;
            let y = iy as f64 / grid as f64;
            let gx = jx as f64 / grid as f64;
            let gy = jy as f64 / grid as f64;
            acc += g.eval(gx, gy) * f.eval(x, y);
        }
    }
    acc /= (grid * grid) as f64;
    Ok(acc - g.mean() * f.mean())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arnold_like() -> CatMap {
        validate_cat_map([[1, 2], [2, 5]]).unwrap()
    }

    #[test]
    fn validates_the_standard_example() {
        let m = arnold_like();
        let expect = (3.0 + 2.0 * (2.0f64).sqrt()).ln();
        assert!((m.delta0 - expect).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(
            validate_cat_map([[1, 1], [0, 1]]),
            Err(Error::NotHyperbolic { .. })
        ));
        assert!(matches!(
            validate_cat_map([[2, 1], [1, 1]]),
            Err(Error::InadmissibleParity { .. })
        ));
        assert!(matches!(
            validate_cat_map([[2, 0], [0, 2]]),
            Err(Error::NotSymplectic { .. })
        ));
    }

    #[test]
    fn growth_at_zero_is_one() {
        let m = arnold_like();
        assert!((c2_growth(&m, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn growth_rate_approaches_delta0() {
        let m = arnold_like();
        for t in [20i64, 30] {
            let rate = c2_growth(&m, t).ln() / t as f64;
            assert!(
                (rate / m.delta0 - 1.0).abs() < 0.01,
                "rate {rate} vs delta0 {}",
                m.delta0
            );
        }
    }

    #[test]
    fn growth_symmetric_directions() {
        // A symmetric here, so ||A^-T|| = ||A^T||
        let m = arnold_like();
        for t in [1i64, 5, 12] {
            let fwd = c2_growth(&m, t);
            let bwd = c2_growth(&m, -t);
            assert!((fwd / bwd - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn growth_submultiplicative() {
        let m = arnold_like();
        for (t1, t2) in [(3i64, 4i64), (5, 7), (-3, 9), (10, -2)] {
            let lhs = c2_growth(&m, t1 + t2);
            let rhs = c2_growth(&m, t1) * c2_growth(&m, t2);
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn delta0_of_inverse_agrees() {
        let m = arnold_like();
        let inv = validate_cat_map(m.inverse_matrix()).unwrap();
        assert!((m.delta0 - inv.delta0).abs() < 1e-12);
    }

    #[test]
    fn correlation_escapes_support() {
        let m = arnold_like();
        let f = TrigPoly::character(CharacterIndex(1, 0));
        // T = 0: pairing of e_k with itself
        let c0 = correlation_exact(&f, &f, &m, 0);
        // int e_k e_k = 0 for k != 0; the nonzero pairing is with e_{-k}
        assert_eq!(c0, C64::new(0.0, 0.0));
        let fbar = TrigPoly::character(CharacterIndex(-1, 0));
        let c0 = correlation_exact(&fbar, &f, &m, 0);
        assert!((c0 - C64::new(1.0, 0.0)).norm() < 1e-15);
        // the orbit of (1,0) leaves {(-1,0)} immediately
        for t in 1..=8 {
            assert_eq!(correlation_exact(&f, &f, &m, t), C64::new(0.0, 0.0));
            assert_eq!(correlation_exact(&f, &f, &m, -t), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn correlation_vanishes_past_horizon() {
        let m = arnold_like();
        let mut f = TrigPoly::cosine(CharacterIndex(1, 0));
        f.insert(CharacterIndex(2, 1), C64::new(0.25, 0.0));
        f.insert(CharacterIndex(-2, -1), C64::new(0.25, 0.0));
        let g = TrigPoly::cosine(CharacterIndex(0, 1));
        let t0 = correlation_horizon(&f, &g, &m, 24);
        assert!(t0 <= 4, "horizon unexpectedly large: {t0}");
        for t in (t0 + 1)..=(t0 + 8) {
            assert_eq!(correlation_exact(&f, &g, &m, t), C64::new(0.0, 0.0));
            assert_eq!(correlation_exact(&f, &g, &m, -t), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn quadrature_matches_exact() {
        let m = arnold_like();
        let mut f = TrigPoly::cosine(CharacterIndex(1, 0));
        f.insert(CharacterIndex(0, 0), C64::new(0.3, 0.0));
        let g = TrigPoly::cosine(CharacterIndex(1, 1));
        for t in -3..=3 {
            let exact = correlation_exact(&f, &g, &m, t);
            let quad = correlation_quadrature(&f, &g, &m, t).unwrap();
            assert!(
                (exact - quad).norm() < 1e-9,
                "t={t}: exact {exact} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn quadrature_guard_trips() {
        let m = arnold_like();
        let f = TrigPoly::cosine(CharacterIndex(1, 0));
        assert!(matches!(
            correlation_quadrature(&f, &f, &m, 12),
            Err(Error::AliasingGuard { .. })
        ));
    }
}
