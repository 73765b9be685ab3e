//! The `N`-dimensional space of holomorphic sections of the `N`th theta
//! bundle over the unit torus.
//!
//! Conventions: volume form `dx dy`, Kahler potential `phi = 2 pi y^2`,
//! pointwise norm `||s||^2 = |f(z)|^2 e^{-2 pi N y^2}` where `f` is the
//! represented entire function with quasi-periods `f(z+1) = f(z)` and
//! `f(z+i) = e^{pi N - 2 pi i N z} f(z)`. The orthonormal basis is
//!
//! ```text
//! theta_hat_j(z) = (2N)^(1/4) sum_n exp(-pi N (n + j/N)^2) exp(2 pi i N (n + j/N) z)
//! ```
//!
//! whose raw norm `(2N)^(-1/4)` is independent of `j` (an exact Gaussian
//! integral; re-verified by quadrature in the tests).
//!
//! Everything evaluates through the *weighted* section value
//! `f(z) e^{-pi N y^2}`, a perfectly conditioned lattice sum whose terms
//! have magnitude at most one, so no intermediate quantity overflows at
//! any supported `N`. Lattice sums are truncated where terms drop below
//! `~1e-18` of the peak.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Ball, ShellCutoff, TorusPoint};

/// Largest supported level.
pub const N_MAX: u64 = 8192;

/// Half-width of the truncation window in units of `1/sqrt(N)`:
/// `exp(-pi w^2) ~ 1e-18`.
const WINDOW: f64 = 3.67;

/// The model of the section space at level `N`.
#[derive(Debug, Clone)]
pub struct ThetaSpace {
    n: usize,
    /// `(2N)^(1/4)`, the per-vector normalization constant (j-independent).
    norm_const: f64,
}

/// Build the space; the dimension equals `N`.
pub fn make_space(n: u64) -> Result<ThetaSpace> {
    if n < 1 || n > N_MAX {
        return Err(Error::LevelOutOfRange { n, lo: 1, hi: N_MAX });
    }
    Ok(ThetaSpace { n: n as usize, norm_const: (2.0 * n as f64).powf(0.25) })
}

impl ThetaSpace {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> f64 {
        self.n as f64
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    fn window_bounds(&self, y: f64) -> (i64, i64) {
        let nf = self.n as f64;
        let half = (nf).sqrt() * WINDOW + 1.0;
        let center = -nf * y;
        ((center - half).floor() as i64, (center + half).ceil() as i64)
    }

    /// Weighted value of the normalized basis vector `j`:
    /// `theta_hat_j(z) e^{-pi N y^2}`. Accepts unwrapped coordinates.
    pub fn basis_weighted(&self, j: usize, x: f64, y: f64) -> C64 {
        let nf = self.n as f64;
        let (p_lo, p_hi) = self.window_bounds(y);
        let mut acc = C64::new(0.0, 0.0);
        let mut p = p_lo + (j as i64 - p_lo).rem_euclid(self.n as i64);
        while p <= p_hi {
            let a = p as f64 / nf;
            let amp = (-std::f64::consts::PI * nf * (a + y) * (a + y)).exp();
            acc += amp * C64::from_polar(1.0, std::f64::consts::TAU * p as f64 * x);
            p += self.n as i64;
        }
        self.norm_const * acc
    }

    /// Weighted values of every basis vector at one point.
    pub fn all_basis_weighted(&self, x: f64, y: f64) -> Vec<C64> {
        let nf = self.n as f64;
        let (p_lo, p_hi) = self.window_bounds(y);
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for p in p_lo..=p_hi {
            let a = p as f64 / nf;
            let amp = (-std::f64::consts::PI * nf * (a + y) * (a + y)).exp();
            let term = amp * C64::from_polar(1.0, std::f64::consts::TAU * p as f64 * x);
            out[p.rem_euclid(self.n as i64) as usize] += term;
        }
        for v in &mut out {
            *v *= self.norm_const;
        }
        out
    }
}

/// A section as a coefficient vector over the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionCoeffs {
    pub coeffs: Vec<C64>,
}

impl SectionCoeffs {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn basis_vector(n: usize, j: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        coeffs[j] = C64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sq().sqrt();
        if n > 0.0 {
            for c in &mut self.coeffs {
                *c /= n;
            }
        }
    }

    /// Seeded standard complex Gaussian coefficients, unit-normalized.
    pub fn random_gaussian(n: usize, rng: &mut impl rand::Rng) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let mut coeffs = Vec::with_capacity(n);
        for _ in 0..n {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            coeffs.push(C64::new(re, im));
        }
        let mut s = Self { coeffs };
        s.normalize();
        s
    }
}

/// Weighted section value `f(z) e^{-pi N y^2}`; unwrapped coordinates are
/// fine (the value follows the quasi-periodic continuation).
pub fn eval_weighted(space: &ThetaSpace, s: &SectionCoeffs, x: f64, y: f64) -> C64 {
    debug_assert_eq!(s.coeffs.len(), space.n);
    let nf = space.n as f64;
    let (p_lo, p_hi) = space.window_bounds(y);
    let mut acc = C64::new(0.0, 0.0);
    for p in p_lo..=p_hi {
        let c = s.coeffs[p.rem_euclid(space.n as i64) as usize];
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let a = p as f64 / nf;
        let amp = (-std::f64::consts::PI * nf * (a + y) * (a + y)).exp();
        acc += c * amp * C64::from_polar(1.0, std::f64::consts::TAU * p as f64 * x);
    }
    space.norm_const * acc
}

/// Weighted derivative `f'(z) e^{-pi N y^2}`; the ratio with
/// [`eval_weighted`] is the logarithmic derivative `f'/f` used by Newton
/// polishing.
pub fn eval_weighted_deriv(space: &ThetaSpace, s: &SectionCoeffs, x: f64, y: f64) -> C64 {
    let nf = space.n as f64;
    let (p_lo, p_hi) = space.window_bounds(y);
    let mut acc = C64::new(0.0, 0.0);
    for p in p_lo..=p_hi {
        let c = s.coeffs[p.rem_euclid(space.n as i64) as usize];
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let a = p as f64 / nf;
        let amp = (-std::f64::consts::PI * nf * (a + y) * (a + y)).exp();
        let rot = C64::from_polar(1.0, std::f64::consts::TAU * p as f64 * x);
        acc += c * amp * rot * C64::new(0.0, std::f64::consts::TAU * p as f64);
    }
    space.norm_const * acc
}

/// Pointwise squared norm `||s(z)||^2_{h^N}`.
pub fn hnorm_sq(space: &ThetaSpace, s: &SectionCoeffs, z: &TorusPoint) -> f64 {
    eval_weighted(space, s, z.x(), z.y()).norm_sqr()
}

/// Entire-function value `f(z)`; overflows to infinity for
/// `pi N y^2 > ~700`, so callers at large `N` should stay with the
/// weighted evaluation.
pub fn section_eval(space: &ThetaSpace, s: &SectionCoeffs, z: &TorusPoint) -> C64 {
    let w = eval_weighted(space, s, z.x(), z.y());
    let log_weight = std::f64::consts::PI * space.level() * z.y() * z.y();
    w * log_weight.exp()
}

/// Uniform full-torus quadrature grid of spacing `1/m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub m: usize,
}

impl GridSpec {
    /// Resolution rule: at least 8 points per `N^{-1/2}` oscillation and
    /// 64 cells across the smallest experiment ball.
    pub fn for_space(n: u64, eps_min: f64) -> Self {
        let a = 8.0 * (n as f64).sqrt();
        let b = 64.0 / eps_min;
        Self { m: a.max(b).ceil() as usize }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    pub fn point(&self, ix: usize, iy: usize) -> TorusPoint {
        TorusPoint::new(ix as f64 / self.m as f64, iy as f64 / self.m as f64)
    }
}

/// `||s||^2_{h^N}` sampled on the full grid, row-parallel.
/// Layout: `out[iy * m + ix]`.
pub fn hnorm_grid(space: &ThetaSpace, s: &SectionCoeffs, grid: &GridSpec) -> Vec<f64> {
    let m = grid.m;
    let mut out = vec![0.0f64; m * m];
    out.par_chunks_mut(m).enumerate().for_each(|(iy, row)| {
        let y = iy as f64 / m as f64;
        let vals = row_weighted(space, s, y, 0.0, 1.0 / m as f64, m);
        for (o, v) in row.iter_mut().zip(vals) {
            *o = v.norm_sqr();
        }
    });
    out
}

/// Weighted section values along a horizontal run
/// `x = x0 + i*dx, i = 0..count` at height `y`, via per-frequency phase
/// rotation (no per-point sincos).
pub fn row_weighted(
    space: &ThetaSpace,
    s: &SectionCoeffs,
    y: f64,
    x0: f64,
    dx: f64,
    count: usize,
) -> Vec<C64> {
    let nf = space.n as f64;
    let (p_lo, p_hi) = space.window_bounds(y);
    let mut out = vec![C64::new(0.0, 0.0); count];
    for p in p_lo..=p_hi {
        let c = s.coeffs[p.rem_euclid(space.n as i64) as usize];
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let a = p as f64 / nf;
        let amp = (-std::f64::consts::PI * nf * (a + y) * (a + y)).exp();
        if amp < 1e-19 {
            continue;
        }
        let coeff = c * amp;
        let step = C64::from_polar(1.0, std::f64::consts::TAU * p as f64 * dx);
        let mut rot = C64::from_polar(1.0, std::f64::consts::TAU * p as f64 * x0);
        for (i, o) in out.iter_mut().enumerate() {
            *o += coeff * rot;
            rot *= step;
            if i % 256 == 255 {
                rot /= rot.norm();
            }
        }
    }
    for v in &mut out {
        *v *= space.norm_const;
    }
    out
}

/// Point-pair evaluation of the Bergman kernel with the metric weight
/// contracted into both slots:
/// `value = sum_j theta_hat_j(z) conj(theta_hat_j(w)) e^{-pi N (y_z^2 + y_w^2)}`.
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub z: TorusPoint,
    pub w: TorusPoint,
    pub value: C64,
    /// `|value|`, the metric-contracted magnitude `|Pi(z,w)|_h`.
    pub hnorm_value: f64,
}

/// Exact basis summation of the kernel.
pub fn bergman_kernel(space: &ThetaSpace, z: &TorusPoint, w: &TorusPoint) -> KernelEval {
    let bz = space.all_basis_weighted(z.x(), z.y());
    let bw = space.all_basis_weighted(w.x(), w.y());
    let value: C64 = bz.iter().zip(&bw).map(|(a, b)| a * b.conj()).sum();
    KernelEval { z: *z, w: *w, value, hnorm_value: value.norm() }
}

/// Diagonal density `Pi(z,z)` (metric-contracted); real and nonnegative,
/// asymptotically `N`.
pub fn bergman_diag(space: &ThetaSpace, z: &TorusPoint) -> f64 {
    space
        .all_basis_weighted(z.x(), z.y())
        .iter()
        .map(|v| v.norm_sqr())
        .sum()
}

/// Raw (pre-normalization) squared norm of basis vector `j` by quadrature;
/// equals `(2N)^{-1/2}` analytically.
pub fn raw_basis_norm_sq(space: &ThetaSpace, j: usize, grid: &GridSpec) -> f64 {
    let m = grid.m;
    let mut acc = 0.0;
    for iy in 0..m {
        let y = iy as f64 / m as f64;
        for ix in 0..m {
            let x = ix as f64 / m as f64;
            acc += space.basis_weighted(j, x, y).norm_sqr();
        }
    }
    acc * grid.cell_area() / (space.norm_const * space.norm_const)
}

/// Quadrature Gram matrix of the orthonormalized basis.
pub fn gram_matrix(space: &ThetaSpace, grid: &GridSpec) -> crate::linalg::CMat {
    let m = grid.m;
    let n = space.n;
    // B: (m*m) x n, column j = basis vector j on the grid
    let mut b = crate::linalg::CMat::zeros(m * m, n);
    let cols: Vec<Vec<C64>> = (0..m)
        .into_par_iter()
        .map(|iy| {
            let y = iy as f64 / m as f64;
            let mut rows: Vec<C64> = Vec::with_capacity(m * n);
            for ix in 0..m {
                let x = ix as f64 / m as f64;
                rows.extend(space.all_basis_weighted(x, y));
            }
            rows
        })
        .collect();
    for (iy, rows) in cols.iter().enumerate() {
        for ix in 0..m {
            for j in 0..n {
                b[(iy * m + ix, j)] = rows[ix * n + j];
            }
        }
    }
    let mut g = b.adjoint_mul(&b);
    g.scale(C64::new(grid.cell_area(), 0.0));
    g
}

/// Mass integration mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MassMode {
    /// Riemann sum of `||s||^2` over grid points strictly inside the ball.
    Sharp,
    /// Quadrature against the smooth cutoff equal to 1 on the ball and
    /// supported in the doubled ball.
    Smooth,
}

/// `int_B ||s||^2 dV` by grid quadrature.
pub fn mass_integral(
    space: &ThetaSpace,
    s: &SectionCoeffs,
    ball: &Ball,
    mode: MassMode,
    grid: &GridSpec,
) -> Result<f64> {
    if ball.radius < 4.0 * grid.spacing() {
        return Err(Error::BallBelowResolution { radius: ball.radius, spacing: grid.spacing() });
    }
    let h = hnorm_grid(space, s, grid);
    Ok(mass_from_grid(&h, ball, mode, grid))
}

/// Same as [`mass_integral`] but reusing a precomputed [`hnorm_grid`].
pub fn mass_from_grid(hgrid: &[f64], ball: &Ball, mode: MassMode, grid: &GridSpec) -> f64 {
    let m = grid.m;
    let outer = match mode {
        MassMode::Sharp => ball.radius,
        MassMode::Smooth => 2.0 * ball.radius,
    };
    let cut = match mode {
        MassMode::Sharp => None,
        MassMode::Smooth => {
            Some(ShellCutoff { center: ball.center, inner: ball.radius, outer, profile: Default::default() })
        }
    };
    let cx = ball.center.x();
    let cy = ball.center.y();
    let lo_x = ((cx - outer) * m as f64).floor() as i64;
    let hi_x = ((cx + outer) * m as f64).ceil() as i64;
    let lo_y = ((cy - outer) * m as f64).floor() as i64;
    let hi_y = ((cy + outer) * m as f64).ceil() as i64;
    let mut acc = 0.0;
    for iy in lo_y..=hi_y {
        let y = iy as f64 / m as f64;
        let row = (iy.rem_euclid(m as i64) as usize) * m;
        let dy = y - cy;
        for ix in lo_x..=hi_x {
            let x = ix as f64 / m as f64;
            let dx = x - cx;
            let d = (dx * dx + dy * dy).sqrt();
            if d >= outer {
                continue;
            }
            let v = hgrid[row + ix.rem_euclid(m as i64) as usize];
            match &cut {
                None => acc += v,
                Some(c) => {
                    let w = if d <= c.inner {
                        1.0
                    } else {
                        c.eval(&TorusPoint::new(x, y))
                    };
                    acc += w * v;
                }
            }
        }
    }
    acc * grid.cell_area()
}

/// `int f ||s||^2 dV` over the full torus.
pub fn full_integral(
    space: &ThetaSpace,
    s: &SectionCoeffs,
    grid: &GridSpec,
    f: impl Fn(&TorusPoint) -> f64 + Sync,
) -> f64 {
    let m = grid.m;
    let h = hnorm_grid(space, s, grid);
    let per_row: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|iy| {
            let mut acc = 0.0;
            for ix in 0..m {
                acc += f(&grid.point(ix, iy)) * h[iy * m + ix];
            }
            acc
        })
        .collect();
    per_row.iter().sum::<f64>() * grid.cell_area()
}
