//! Flat geometry of the unit 2-torus: distances, balls, logarithmic
//! scales, dilation charts, smooth cutoffs, and ball covers with bounded
//! overlap.
//!
//! The metric is the flat quotient metric of `R^2 / Z^2` with volume form
//! `dx dy` (total volume 1), so Kahler normal coordinates are globally
//! exact and the dilation maps below are exact chart maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Admissible exponent bound for the logarithmic scale in one complex
/// dimension.
pub const GAMMA_BOUND: f64 = 1.0 / 6.0;

/// Default prefactor applied to `|log N|^(-gamma)` when a scale is used as
/// a concrete ball radius.
///
/// The decay law in `N` is untouched; the prefactor keeps radii inside the
/// injectivity radius and the chart bounds of [`dilate`], [`bump_cutoff`]
/// and [`build_log_good_cover`] over the whole experiment grid, where the
/// raw scale `|log N|^(-gamma)` stays near 0.8 for any reachable `N`. It is
/// recorded in every run manifest.
pub const DEFAULT_RADIUS_PREFACTOR: f64 = 0.1;

/// A point of the unit torus, stored by its canonical representative in
/// `[0,1)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    x: f64,
    y: f64,
}

fn wrap(v: f64) -> f64 {
    let f = v - v.floor();
    // v slightly below an integer can round to 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

fn dist_1d(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x: wrap(x), y: wrap(y) }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Coordinate difference `self - other` mapped to `[-1/2, 1/2)^2`.
    pub fn delta(&self, other: &TorusPoint) -> (f64, f64) {
        let mut dx = self.x - other.x;
        let mut dy = self.y - other.y;
        if dx < -0.5 {
            dx += 1.0;
        } else if dx >= 0.5 {
            dx -= 1.0;
        }
        if dy < -0.5 {
            dy += 1.0;
        } else if dy >= 0.5 {
            dy -= 1.0;
        }
        (dx, dy)
    }
}

/// Geodesic distance on the flat unit torus; at most `sqrt(2)/2`.
pub fn torus_distance(a: &TorusPoint, b: &TorusPoint) -> f64 {
    let dx = dist_1d(a.x, b.x);
    let dy = dist_1d(a.y, b.y);
    (dx * dx + dy * dy).sqrt()
}

/// Metric ball on the torus.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Ball {
    pub center: TorusPoint,
    pub radius: f64,
}

impl Ball {
    /// Experiment balls must fit inside the injectivity radius.
    pub fn new(center: TorusPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || radius >= 0.5 {
            return Err(Error::ScaleTooLarge {
                epsilon: radius,
                bound: 0.5,
                what: "ball radius (injectivity radius of the unit torus)",
            });
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &TorusPoint) -> bool {
        torus_distance(&self.center, p) < self.radius
    }

    /// Euclidean area; the flat volume fraction since `Vol(T^2) = 1`.
    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// Logarithmic scale `epsilon = |log N|^(-gamma)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogScale {
    pub gamma: f64,
    pub n: u64,
    pub epsilon: f64,
}

/// Build the scale, enforcing `0 < gamma < 1/6` (open interval) and `N >= 3`.
pub fn log_scale(gamma: f64, n: u64) -> Result<LogScale> {
    log_scale_bounded(gamma, n, GAMMA_BOUND)
}

/// Same as [`log_scale`] with an explicit exponent bound; the fixed-point
/// mass statistics admit the wider range `gamma < 1/4`.
pub fn log_scale_bounded(gamma: f64, n: u64, bound: f64) -> Result<LogScale> {
    if !(gamma > 0.0 && gamma < bound) {
        return Err(Error::GammaOutOfRange { gamma, bound });
    }
    if n < 3 {
        return Err(Error::LevelOutOfRange { n, lo: 3, hi: u64::MAX });
    }
    let epsilon = (n as f64).ln().powf(-gamma);
    Ok(LogScale { gamma, n, epsilon })
}

impl LogScale {
    /// Scale times the experiment radius prefactor: the concrete ball
    /// radius used at level `N`.
    pub fn radius(&self, prefactor: f64) -> f64 {
        prefactor * self.epsilon
    }
}

/// Map a point `w` of the unit disk into the chart at `p` dilated by
/// `epsilon`: `p + epsilon * w`.
pub fn dilate(p: &TorusPoint, epsilon: f64, w: (f64, f64)) -> Result<TorusPoint> {
    if epsilon >= 0.25 {
        return Err(Error::ScaleTooLarge { epsilon, bound: 0.25, what: "dilation chart" });
    }
    let r = (w.0 * w.0 + w.1 * w.1).sqrt();
    if r >= 1.0 {
        return Err(Error::OutsideChart { dist: r, radius: 1.0 });
    }
    Ok(TorusPoint::new(p.x + epsilon * w.0, p.y + epsilon * w.1))
}

/// Inverse of [`dilate`]: pull `z` near `p` back to the unit disk.
pub fn inverse_dilate(p: &TorusPoint, epsilon: f64, z: &TorusPoint) -> Result<(f64, f64)> {
    if epsilon >= 0.25 {
        return Err(Error::ScaleTooLarge { epsilon, bound: 0.25, what: "dilation chart" });
    }
    let (dx, dy) = z.delta(p);
    let d = (dx * dx + dy * dy).sqrt();
    if d >= epsilon {
        return Err(Error::OutsideChart { dist: d, radius: epsilon });
    }
    Ok((dx / epsilon, dy / epsilon))
}

/// Fixed smooth radial profile: 1 on `[0,1]`, 0 on `[2,infty)`, with a
/// `C^infty` monotone transition `q(2-r) / (q(2-r) + q(r-1))` where
/// `q(t) = exp(-1/t)` for `t > 0`.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct BumpProfile;

fn q(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

impl BumpProfile {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 1.0 {
            1.0
        } else if r >= 2.0 {
            0.0
        } else {
            let a = q(2.0 - r);
            let b = q(r - 1.0);
            a / (a + b)
        }
    }
}

/// Smooth cutoff `z -> profile(d(z,p)/epsilon)`: identically 1 on
/// `B(p, epsilon)`, supported in `B(p, 2 epsilon)`.
pub struct BumpCutoff {
    pub center: TorusPoint,
    pub epsilon: f64,
    profile: BumpProfile,
}

pub fn bump_cutoff(profile: BumpProfile, p: &TorusPoint, epsilon: f64) -> Result<BumpCutoff> {
    if 2.0 * epsilon >= 0.5 {
        return Err(Error::SupportWraps { support: 2.0 * epsilon });
    }
    Ok(BumpCutoff { center: *p, epsilon, profile })
}

impl BumpCutoff {
    pub fn eval(&self, z: &TorusPoint) -> f64 {
        self.profile.eval(torus_distance(&self.center, z) / self.epsilon)
    }
}

/// A two-radius cutoff: 1 inside `inner`, 0 outside `outer`.
pub struct ShellCutoff {
    pub center: TorusPoint,
    pub inner: f64,
    pub outer: f64,
    pub profile: BumpProfile,
}

pub fn shell_cutoff(p: &TorusPoint, inner: f64, outer: f64) -> Result<ShellCutoff> {
    assert!(inner > 0.0 && outer > inner);
    if outer >= 0.5 {
        return Err(Error::SupportWraps { support: outer });
    }
    Ok(ShellCutoff { center: *p, inner, outer, profile: BumpProfile })
}

impl ShellCutoff {
    pub fn eval(&self, z: &TorusPoint) -> f64 {
        let d = torus_distance(&self.center, z);
        if d <= self.inner {
            1.0
        } else if d >= self.outer {
            0.0
        } else {
            self.profile.eval(1.0 + (d - self.inner) / (self.outer - self.inner))
        }
    }
}

/// Ball cover of the torus at scale `epsilon` with the three properties
/// checked by [`verify_log_good_cover`]: cardinality `<= c1 epsilon^-2`,
/// bounded overlap, and the shrunken-ball containment property.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogGoodCover {
    pub scale: LogScale,
    /// Radius actually used for the cover balls (scale times prefactor).
    pub radius: f64,
    pub centers: Vec<TorusPoint>,
    /// Empirical cardinality constant `R * radius^2`.
    pub c1: f64,
    /// Empirical overlap bound: max number of cover balls meeting a probe
    /// ball, over the verification grid.
    pub c2: u32,
}

/// Lattice-of-centers construction with spacing `radius / 3`.
pub fn build_log_good_cover(scale: &LogScale, prefactor: f64) -> Result<LogGoodCover> {
    let radius = scale.radius(prefactor);
    if radius >= 0.125 {
        return Err(Error::ScaleTooLarge { epsilon: radius, bound: 0.125, what: "log-good cover" });
    }
    let m = (3.0 / radius).ceil() as usize;
    let mut centers = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            centers.push(TorusPoint::new(i as f64 / m as f64, j as f64 / m as f64));
        }
    }
    let c1 = centers.len() as f64 * radius * radius;
    let mut cover = LogGoodCover { scale: *scale, radius, centers, c1, c2: 0 };
    let report = verify_log_good_cover(&cover, 32);
    if !(report.containment_ok && report.multiplicity_max > 0) {
        return Err(Error::Unit("log-good cover verification failed".into()));
    }
    cover.c2 = report.multiplicity_max;
    Ok(cover)
}

/// Result of probing a cover on a `probes x probes` grid of ball centers.
#[derive(Debug, Clone, Copy)]
pub struct CoverReport {
    /// Every probe ball contains some shrunken cover ball.
    pub containment_ok: bool,
    /// Max number of cover balls meeting a probe ball.
    pub multiplicity_max: u32,
}

pub fn verify_log_good_cover(cover: &LogGoodCover, probes: usize) -> CoverReport {
    let eps = cover.radius;
    let mut containment_ok = true;
    let mut mult_max = 0u32;
    for i in 0..probes {
        for j in 0..probes {
            let p = TorusPoint::new(
                (i as f64 + 0.37) / probes as f64,
                (j as f64 + 0.61) / probes as f64,
            );
            let mut mult = 0u32;
            let mut contained = false;
            for c in &cover.centers {
                let d = torus_distance(&p, c);
                // probe ball B(p,eps) meets B(c,eps)
                if d < 2.0 * eps {
                    mult += 1;
                }
                // B(c, eps/3) inside B(p, eps)
                if d + eps / 3.0 <= eps {
                    contained = true;
                }
            }
            containment_ok &= contained;
            mult_max = mult_max.max(mult);
        }
    }
    CoverReport { containment_ok, multiplicity_max: mult_max }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_distance(a: &TorusPoint, b: &TorusPoint) -> f64 {
        let mut best = f64::INFINITY;
        for sx in -1..=1 {
            for sy in -1..=1 {
                let dx = a.x() - b.x() + sx as f64;
                let dy = a.y() - b.y() + sy as f64;
                best = best.min((dx * dx + dy * dy).sqrt());
            }
        }
        best
    }

    #[test]
    fn distance_identity_and_wraparound() {
        let o = TorusPoint::new(0.0, 0.0);
        assert_eq!(torus_distance(&o, &o), 0.0);
        let a = TorusPoint::new(0.1, 0.0);
        let b = TorusPoint::new(0.9, 0.0);
        assert!((torus_distance(&a, &b) - 0.2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn distance_matches_lattice_minimum(ax in 0.0..1.0f64, ay in 0.0..1.0f64,
                                            bx in 0.0..1.0f64, by in 0.0..1.0f64) {
            let a = TorusPoint::new(ax, ay);
            let b = TorusPoint::new(bx, by);
            let d = torus_distance(&a, &b);
            prop_assert!((d - brute_force_distance(&a, &b)).abs() < 1e-12);
            prop_assert!((d - torus_distance(&b, &a)).abs() < 1e-15);
            prop_assert!(d <= std::f64::consts::SQRT_2 / 2.0 + 1e-15);
        }

        #[test]
        fn triangle_inequality(ax in 0.0..1.0f64, ay in 0.0..1.0f64,
                               bx in 0.0..1.0f64, by in 0.0..1.0f64,
                               cx in 0.0..1.0f64, cy in 0.0..1.0f64) {
            let a = TorusPoint::new(ax, ay);
            let b = TorusPoint::new(bx, by);
            let c = TorusPoint::new(cx, cy);
            prop_assert!(torus_distance(&a, &c)
                <= torus_distance(&a, &b) + torus_distance(&b, &c) + 1e-12);
        }

        #[test]
        fn dilate_round_trip(px in 0.0..1.0f64, py in 0.0..1.0f64,
                             wx in -0.7..0.7f64, wy in -0.7..0.7f64,
                             eps in 0.01..0.24f64) {
            prop_assume!(wx * wx + wy * wy < 1.0);
            let p = TorusPoint::new(px, py);
            let z = dilate(&p, eps, (wx, wy)).unwrap();
            let (ux, uy) = inverse_dilate(&p, eps, &z).unwrap();
            prop_assert!((ux - wx).abs() < 1e-12 && (uy - wy).abs() < 1e-12);
        }
    }

    #[test]
    fn log_scale_values() {
        // (ln 15)^(-0.1), cross-checked against exp(-gamma ln ln N) and a
        // 30-digit reference value
        let s = log_scale(0.1, 15).unwrap();
        let alt = (-0.1 * (15.0f64).ln().ln()).exp();
        assert!((s.epsilon - alt).abs() < 1e-15);
        assert!((s.epsilon - 0.905178706260136).abs() < 1e-14);

        // gamma -> 0+ limit: epsilon -> 1
        let s = log_scale(1e-9, 15).unwrap();
        assert!((s.epsilon - 1.0).abs() < 1e-8);

        // closed endpoint rejected
        assert!(log_scale(GAMMA_BOUND, 15).is_err());
        assert!(log_scale(0.0, 15).is_err());
        assert!(log_scale(0.1, 2).is_err());
    }

    #[test]
    fn dilate_center_and_linear_image() {
        let p = TorusPoint::new(0.5, 0.5);
        let z = dilate(&p, 0.1, (0.0, 0.0)).unwrap();
        assert!((z.x() - 0.5).abs() < 1e-15 && (z.y() - 0.5).abs() < 1e-15);
        let z = dilate(&p, 0.1, (0.9, 0.0)).unwrap();
        assert!((z.x() - 0.59).abs() < 1e-15 && (z.y() - 0.5).abs() < 1e-15);
        assert!(dilate(&p, 0.1, (1.0, 0.0)).is_err());
        assert!(dilate(&p, 0.3, (0.0, 0.0)).is_err());
    }

    #[test]
    fn bump_profile_shape() {
        let f = BumpProfile;
        assert_eq!(f.eval(0.3), 1.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(2.0), 0.0);
        assert_eq!(f.eval(2.5), 0.0);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = f.eval(1.0 + i as f64 / 100.0);
            assert!(v <= prev + 1e-15, "profile must be nonincreasing");
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn bump_cutoff_support() {
        let p = TorusPoint::new(0.3, 0.7);
        let eps = 0.1;
        let cut = bump_cutoff(BumpProfile, &p, eps).unwrap();
        assert_eq!(cut.eval(&p), 1.0);
        // d = 2.5 eps: outside support
        let z = TorusPoint::new(0.3 + 2.5 * eps, 0.7);
        assert_eq!(cut.eval(&z), 0.0);
        for i in 0..400 {
            let th = i as f64 / 400.0 * std::f64::consts::TAU;
            let inner = TorusPoint::new(p.x() + 0.99 * eps * th.cos(), p.y() + 0.99 * eps * th.sin());
            assert_eq!(cut.eval(&inner), 1.0);
            let outer = TorusPoint::new(p.x() + 2.01 * eps * th.cos(), p.y() + 2.01 * eps * th.sin());
            assert_eq!(cut.eval(&outer), 0.0);
        }
        assert!(bump_cutoff(BumpProfile, &p, 0.25).is_err());
    }

    #[test]
    fn dilated_bump_holder_seminorm_grows() {
        // beta = 1/2 seminorm on a probe grid scales like eps^(-beta)
        let beta = 0.5;
        let p = TorusPoint::new(0.5, 0.5);
        let seminorm = |eps: f64| {
            let cut = bump_cutoff(BumpProfile, &p, eps).unwrap();
            let m = 160;
            let mut best = 0.0f64;
            for i in 0..m {
                let x0 = 0.5 - 2.2 * eps + 4.4 * eps * i as f64 / m as f64;
                let z0 = TorusPoint::new(x0, 0.5);
                let z1 = TorusPoint::new(x0 + 4.4 * eps / m as f64, 0.5);
                let num = (cut.eval(&z0) - cut.eval(&z1)).abs();
                let den = torus_distance(&z0, &z1).powf(beta);
                best = best.max(num / den);
            }
            best
        };
        let s1 = seminorm(0.2);
        let s2 = seminorm(0.05);
        let expect = (0.2f64 / 0.05).powf(beta);
        let ratio = s2 / s1;
        assert!(
            (ratio / expect - 1.0).abs() < 0.35,
            "seminorm ratio {ratio} vs eps^-beta prediction {expect}"
        );
    }

    #[test]
    fn cover_properties_on_probe_grid() {
        let scale = log_scale(0.1, 1024).unwrap();
        // effective radius 0.1 * eps ~ 0.079
        let cover = build_log_good_cover(&scale, 0.1).unwrap();
        let report = verify_log_good_cover(&cover, 32);
        assert!(report.containment_ok);
        assert!(report.multiplicity_max <= cover.c2);
        assert!(cover.c1 <= 16.0, "cardinality constant c1 = {}", cover.c1);
        // spec'd cardinality form: R <= c1 eps^-2 with the recorded constant
        assert!(
            (cover.centers.len() as f64) <= cover.c1 * cover.radius.powi(-2) + 1e-9
        );
    }

    #[test]
    fn cover_rejects_large_radius() {
        let scale = log_scale(0.1, 64).unwrap();
        assert!(build_log_good_cover(&scale, 1.0).is_err());
    }
}
