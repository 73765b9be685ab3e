//! Eigendecomposition of quantized maps, eigenphase clustering, and
//! seeded resampling of orthonormal bases inside degenerate eigenspaces.
//!
//! A unitary matrix is normal, so its complex Schur form is diagonal and
//! the Schur basis is an orthonormal eigenbasis; this avoids the
//! within-cluster orthogonality loss of a generic eigensolver.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{schur, CMat};
use crate::quantize::UnitaryMatrix;

/// Full eigensystem: phases in `[0, 2 pi)` sorted ascending, orthonormal
/// eigenvector columns, and per-column residuals.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub n: usize,
    pub phases: Vec<f64>,
    pub vectors: CMat,
    pub residuals: Vec<f64>,
}

pub const RESIDUAL_TOL: f64 = 1e-9;

/// Tighter-than-clustering tolerance below which eigenvalues are treated
/// as exactly degenerate and their basis canonicalized.
const CANONICAL_TOL: f64 = 1e-11;

/// Decompose a unitary.
///
/// The returned basis is canonical: within exactly degenerate eigenspaces
/// (circular phase diameter below `1e-11`) the Schur basis is replaced by
/// the eigenbasis of a fixed generic diagonal observable restricted to
/// the eigenspace, and every column's phase is normalized. The output is
/// then a deterministic function of the eigenspaces alone, so downstream
/// statistics are invariant under a global phase rotation of `U`.
pub fn eigendecompose(u: &UnitaryMatrix) -> Result<EigenSystem> {
    let n = u.n;
    let s = schur(&u.mat)?;
    let mut phases: Vec<f64> = (0..n)
        .map(|j| {
            let th = s.t[(j, j)].arg();
            let th = if th < 0.0 { th + std::f64::consts::TAU } else { th };
            // a tiny negative arg rounds up to exactly 2 pi
            if th >= std::f64::consts::TAU {
                0.0
            } else {
                th
            }
        })
        .collect();

    // canonical order: sort by phase, stable
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phases[a].partial_cmp(&phases[b]).unwrap());
    let mut vectors = CMat::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vectors.col_mut(new).copy_from_slice(s.q.col(old));
    }
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap());

    canonicalize_degenerate(&phases, &mut vectors);

    let residuals = residual_norms(u, &phases, &vectors);
    let sys = EigenSystem { n, phases, vectors, residuals };
    if let Some((idx, &worst)) = sys
        .residuals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
    {
        if worst >= RESIDUAL_TOL {
            return Err(Error::EigenResidual { index: idx, residual: worst, tol: RESIDUAL_TOL });
        }
    }
    Ok(sys)
}

/// Replace the basis of each exactly degenerate eigenspace by the
/// eigenbasis of a fixed quasi-random diagonal observable restricted to
/// it, then normalize every column's phase (largest-magnitude entry made
/// real positive). Clusters split by the 0/2pi wrap are merged first so
/// the result does not depend on where the eigenvalue circle is cut.
fn canonicalize_degenerate(phases: &[f64], vectors: &mut CMat) {
    let n = phases.len();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut start = 0usize;
    while start < n {
        let mut end = start + 1;
        while end < n && phases[end] - phases[start] < CANONICAL_TOL {
            end += 1;
        }
        clusters.push((start..end).collect());
        start = end;
    }
    if clusters.len() > 1 && phases[0] + std::f64::consts::TAU - phases[n - 1] < CANONICAL_TOL {
        let last = clusters.pop().unwrap();
        clusters[0].splice(0..0, last);
    }

    let observable: Vec<f64> = (0..n)
        .map(|j| (std::f64::consts::TAU * (j as f64 * 0.618_033_988_75 + 0.1318)).sin())
        .collect();
    for cluster in &clusters {
        let d = cluster.len();
        if d < 2 {
            continue;
        }
        // b = V^H diag(observable) V restricted to the cluster; its
        // eigenbasis depends only on the spanned eigenspace
        let mut b = CMat::zeros(d, d);
        for (cb, &jc) in cluster.iter().enumerate() {
            for (rb, &jr) in cluster.iter().enumerate() {
                let va = vectors.col(jr);
                let vb = vectors.col(jc);
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..n {
                    acc += va[r].conj() * observable[r] * vb[r];
                }
                b[(rb, cb)] = acc;
            }
        }
        let w = jacobi_hermitian(&mut b);
        let mut block = CMat::zeros(n, d);
        for (bi, &col) in cluster.iter().enumerate() {
            block.col_mut(bi).copy_from_slice(vectors.col(col));
        }
        let mixed = block.mul(&w);
        for (bi, &col) in cluster.iter().enumerate() {
            vectors.col_mut(col).copy_from_slice(mixed.col(bi));
        }
    }

    for c in 0..n {
        let col = vectors.col_mut(c);
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for (r, v) in col.iter().enumerate() {
            let m = v.norm();
            if m > best_mag * (1.0 + 1e-12) {
                best_mag = m;
                best = r;
            }
        }
        if best_mag > 0.0 {
            let rot = col[best].conj() / best_mag;
            for v in col.iter_mut() {
                *v *= rot;
            }
        }
    }
}

/// Eigenvectors of a small Hermitian matrix by cyclic Jacobi rotations;
/// deterministic sweep order, eigenvalues sorted ascending.
fn jacobi_hermitian(b: &mut CMat) -> CMat {
    let d = b.rows();
    let mut w = CMat::identity(d);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for q in 0..d {
            for p in 0..q {
                off = off.max(b[(p, q)].norm());
            }
        }
        if off < 1e-14 {
            break;
        }
        for q in 1..d {
            for p in 0..q {
                let bpq = b[(p, q)];
                if bpq.norm() < 1e-16 {
                    continue;
                }
                let app = b[(p, p)].re;
                let aqq = b[(q, q)].re;
                let phase = bpq / bpq.norm();
                let theta = 0.5 * (2.0 * bpq.norm()).atan2(aqq - app);
                let c = theta.cos();
                let s = theta.sin();
                // columns of the rotation: [c, -s e^{i phi}; s e^{-i phi}, c]
                for r in 0..d {
                    let brp = b[(r, p)];
                    let brq = b[(r, q)];
                    b[(r, p)] = brp * c - brq * s * phase.conj();
                    b[(r, q)] = brp * s * phase + brq * c;
                }
                for cidx in 0..d {
                    let bpc = b[(p, cidx)];
                    let bqc = b[(q, cidx)];
                    b[(p, cidx)] = bpc * c - bqc * s * phase;
                    b[(q, cidx)] = bpc * s * phase.conj() + bqc * c;
                }
                for r in 0..d {
                    let wrp = w[(r, p)];
                    let wrq = w[(r, q)];
                    w[(r, p)] = wrp * c - wrq * s * phase.conj();
                    w[(r, q)] = wrp * s * phase + wrq * c;
                }
            }
        }
    }
    // sort columns by eigenvalue
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &bb| b[(a, a)].re.partial_cmp(&b[(bb, bb)].re).unwrap());
    let mut out = CMat::zeros(d, d);
    for (new, &old) in order.iter().enumerate() {
        out.col_mut(new).copy_from_slice(w.col(old));
    }
    out
}

fn residual_norms(u: &UnitaryMatrix, phases: &[f64], vectors: &CMat) -> Vec<f64> {
    let n = u.n;
    let uv = u.mat.mul(vectors);
    (0..n)
        .map(|j| {
            let lam = C64::from_polar(1.0, phases[j]);
            let col = uv.col(j);
            let v = vectors.col(j);
            col.iter()
                .zip(v)
                .map(|(a, b)| (a - lam * b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Max deviation from orthonormality of the eigenvector columns.
pub fn orthonormality_defect(es: &EigenSystem) -> f64 {
    es.vectors.unitarity_defect()
}

/// Partition of eigenphase indices into clusters of circular diameter
/// below the tolerance.
#[derive(Debug, Clone)]
pub struct DegeneracyClusters {
    pub tol: f64,
    /// Each cluster lists indices into the sorted phase vector.
    pub clusters: Vec<Vec<usize>>,
}

/// Cluster sorted phases by gap thresholding, circularly.
pub fn cluster_degeneracies(es: &EigenSystem, tol: f64) -> Result<DegeneracyClusters> {
    if !(1e-10..=1e-6).contains(&tol) {
        return Err(Error::Config(format!("tol_cluster {tol} outside [1e-10, 1e-6]")));
    }
    let n = es.n;
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = vec![0];
    for j in 1..n {
        if es.phases[j] - es.phases[j - 1] < tol {
            cur.push(j);
        } else {
            clusters.push(std::mem::take(&mut cur));
            cur.push(j);
        }
    }
    clusters.push(cur);
    // circular wrap: merge last into first if the wrap gap is small
    if clusters.len() > 1 {
        let first = &clusters[0];
        let last = clusters.last().unwrap();
        let wrap_gap = es.phases[first[0]] + std::f64::consts::TAU
            - es.phases[*last.last().unwrap()];
        if wrap_gap < tol {
            let last = clusters.pop().unwrap();
            clusters[0].splice(0..0, last);
        }
    }
    Ok(DegeneracyClusters { tol, clusters })
}

impl DegeneracyClusters {
    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.len()).collect()
    }

    pub fn total(&self) -> usize {
        self.clusters.iter().map(|c| c.len()).sum()
    }
}

/// Replace the basis of every degenerate eigenspace by a seeded
/// Haar-random orthonormal recombination; phases and residual guarantees
/// are preserved, singleton clusters are untouched.
pub fn resample_degenerate_basis(
    es: &EigenSystem,
    clusters: &DegeneracyClusters,
    seed: u64,
) -> EigenSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = es.vectors.clone();
    for cluster in &clusters.clusters {
        let d = cluster.len();
        if d < 2 {
            continue;
        }
        let q = haar_unitary(d, &mut rng);
        // new_cols = old_cols * q
        let n = es.n;
        let mut block = CMat::zeros(n, d);
        for (bi, &j) in cluster.iter().enumerate() {
            block.col_mut(bi).copy_from_slice(vectors.col(j));
        }
        let mixed = block.mul(&q);
        for (bi, &j) in cluster.iter().enumerate() {
            vectors.col_mut(j).copy_from_slice(mixed.col(bi));
        }
    }
    EigenSystem {
        n: es.n,
        phases: es.phases.clone(),
        vectors,
        residuals: es.residuals.clone(),
    }
}

/// Haar-distributed unitary by QR of a complex Ginibre matrix with the
/// standard phase fix; deterministic given the rng state.
fn haar_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut g = CMat::zeros(d, d);
    for c in 0..d {
        for r in 0..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g[(r, c)] = C64::new(re, im);
        }
    }
    // modified Gram-Schmidt, twice for orthogonality
    for pass in 0..2 {
        for c in 0..d {
            for prev in 0..c {
                let mut dot = C64::new(0.0, 0.0);
                for r in 0..d {
                    dot += g[(r, prev)].conj() * g[(r, c)];
                }
                for r in 0..d {
                    let sub = dot * g[(r, prev)];
                    g[(r, c)] -= sub;
                }
            }
            let nrm = (0..d).map(|r| g[(r, c)].norm_sqr()).sum::<f64>().sqrt();
            for r in 0..d {
                g[(r, c)] /= nrm;
            }
        }
        let _ = pass;
    }
    // fix column phases so the diagonal is real positive
    for c in 0..d {
        let ph = g[(c, c)].arg();
        let rot = C64::from_polar(1.0, -ph);
        for r in 0..d {
            g[(r, c)] *= rot;
        }
    }
    g
}

/// Re-verify residuals of a (possibly resampled) system against a unitary.
pub fn verify_residuals(u: &UnitaryMatrix, es: &EigenSystem) -> f64 {
    residual_norms(u, &es.phases, &es.vectors)
        .into_iter()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::validate_cat_map;
    use crate::quantize::quantize;

    fn diag_unitary(phases: &[f64]) -> UnitaryMatrix {
        let n = phases.len();
        let mut m = CMat::zeros(n, n);
        for (j, &ph) in phases.iter().enumerate() {
            m[(j, j)] = C64::from_polar(1.0, ph);
        }
        UnitaryMatrix { n, mat: m }
    }

    #[test]
    fn identity_decomposes_with_zero_phases() {
        let u = UnitaryMatrix { n: 6, mat: CMat::identity(6) };
        let es = eigendecompose(&u).unwrap();
        assert!(es.phases.iter().all(|&p| p.abs() < 1e-12));
        assert!(es.residuals.iter().all(|&r| r < 1e-12));
        assert!(orthonormality_defect(&es) < 1e-12);
    }

    #[test]
    fn diagonal_unitary_recovers_phases() {
        let n = 8;
        let phases: Vec<f64> = (0..n)
            .map(|j| std::f64::consts::TAU * j as f64 / n as f64)
            .collect();
        let es = eigendecompose(&diag_unitary(&phases)).unwrap();
        for (a, b) in es.phases.iter().zip(&phases) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cat_map_eigensystem_invariants() {
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        let u = quantize(&map, 256).unwrap();
        let es = eigendecompose(&u).unwrap();
        assert!(es.residuals.iter().all(|&r| r < 1e-9));
        assert!(orthonormality_defect(&es) < 1e-10);
        // phase multiset is invariant under a global phase rotation of U
        let mut rotated = u.clone();
        rotated.mat.scale(C64::from_polar(1.0, 0.731));
        let es2 = eigendecompose(&rotated).unwrap();
        let mut shifted: Vec<f64> = es
            .phases
            .iter()
            .map(|p| (p + 0.731).rem_euclid(std::f64::consts::TAU))
            .collect();
        shifted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in es2.phases.iter().zip(&shifted) {
            let mut d = (a - b).abs();
            d = d.min((d - std::f64::consts::TAU).abs());
            assert!(d < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn clustering_singletons_and_identity() {
        let phases: Vec<f64> = (0..10).map(|j| 0.1 + j as f64 * 0.3).collect();
        let es = eigendecompose(&diag_unitary(&phases)).unwrap();
        let cl = cluster_degeneracies(&es, 1e-8).unwrap();
        assert_eq!(cl.clusters.len(), 10);
        assert_eq!(cl.total(), 10);

        let u = UnitaryMatrix { n: 7, mat: CMat::identity(7) };
        let es = eigendecompose(&u).unwrap();
        let cl = cluster_degeneracies(&es, 1e-8).unwrap();
        assert_eq!(cl.clusters.len(), 1);
        assert_eq!(cl.clusters[0].len(), 7);
    }

    #[test]
    fn cluster_sizes_sum_to_n() {
        let map = validate_cat_map([[1, 2], [2, 5]]).unwrap();
        for n in [64u64, 128] {
            let u = quantize(&map, n).unwrap();
            let es = eigendecompose(&u).unwrap();
            let cl = cluster_degeneracies(&es, 1e-8).unwrap();
            assert_eq!(cl.total(), n as usize);
        }
    }

    #[test]
    fn resampling_preserves_invariants_and_is_deterministic() {
        let u = UnitaryMatrix { n: 9, mat: CMat::identity(9) };
        let es = eigendecompose(&u).unwrap();
        let cl = cluster_degeneracies(&es, 1e-8).unwrap();
        let r1 = resample_degenerate_basis(&es, &cl, 42);
        let r2 = resample_degenerate_basis(&es, &cl, 42);
        assert_eq!(r1.vectors, r2.vectors, "equal seeds must be bitwise identical");
        assert!(verify_residuals(&u, &r1) < 1e-9);
        assert!(orthonormality_defect(&r1) < 1e-10);
        let r3 = resample_degenerate_basis(&es, &cl, 43);
        assert!(r1.vectors != r3.vectors);
    }

    #[test]
    fn jacobi_diagonalizes_hermitian() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for d in [2usize, 3, 5, 8] {
            let mut m = CMat::zeros(d, d);
            for c in 0..d {
                for r in 0..=c {
                    let v = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                    if r == c {
                        m[(r, c)] = C64::new(v.re, 0.0);
                    } else {
                        m[(r, c)] = v;
                        m[(c, r)] = v.conj();
                    }
                }
            }
            let m0 = m.clone();
            let w = jacobi_hermitian(&mut m);
            assert!(w.unitarity_defect() < 1e-12);
            let diag = w.adjoint_mul(&m0).mul(&w);
            for c in 0..d {
                for r in 0..d {
                    if r != c {
                        assert!(diag[(r, c)].norm() < 1e-12, "offdiag {r},{c}");
                    }
                }
            }
            // ascending eigenvalues
            for c in 1..d {
                assert!(diag[(c, c)].re >= diag[(c - 1, c - 1)].re - 1e-12);
            }
        }
    }

    #[test]
    fn canonical_basis_is_phase_invariant() {
        // eigendecompose(e^{i phi} U) returns the same eigenvector for the
        // correspondingly rotated eigenphase, including inside degenerate
        // clusters (the canonical basis depends only on the eigenspace)
        let map = crate::dynamics::validate_cat_map([[1, 2], [2, 5]]).unwrap();
        let u = crate::quantize::quantize(&map, 48).unwrap();
        let phi = 0.918273;
        let mut u2 = u.clone();
        u2.mat.scale(C64::from_polar(1.0, phi));
        let e1 = eigendecompose(&u).unwrap();
        let e2 = eigendecompose(&u2).unwrap();
        // stable argsort of the shifted phases maps e1 columns to e2 columns
        let shifted: Vec<f64> = e1
            .phases
            .iter()
            .map(|p| (p + phi).rem_euclid(std::f64::consts::TAU))
            .collect();
        let mut order: Vec<usize> = (0..e1.n).collect();
        order.sort_by(|&a, &b| shifted[a].partial_cmp(&shifted[b]).unwrap());
        let mut dev = 0.0f64;
        for (rank, &j) in order.iter().enumerate() {
            let d: f64 = e1
                .vectors
                .col(j)
                .iter()
                .zip(e2.vectors.col(rank))
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            dev = dev.max(d);
        }
        assert!(dev < 1e-8, "canonical bases differ by {dev}");
    }

    #[test]
    fn resampling_on_singletons_is_identity_up_to_phase() {
        let phases: Vec<f64> = (0..6).map(|j| 0.2 + 0.9 * j as f64).collect();
        let es = eigendecompose(&diag_unitary(&phases)).unwrap();
        let cl = cluster_degeneracies(&es, 1e-8).unwrap();
        let r = resample_degenerate_basis(&es, &cl, 1);
        for j in 0..6 {
            let a = es.vectors.col(j);
            let b = r.vectors.col(j);
            // b = phase * a
            let dot: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            assert!((dot.norm() - 1.0).abs() < 1e-12);
        }
    }
}
