//! Zero sets of holomorphic sections via the argument principle, scaled
//! zero-current pairings, ball-count discrepancies, and the L^1 statistic
//! of logarithmically dilated potentials.
//!
//! A section of the level-`N` space has exactly `N` zeros per fundamental
//! domain. The fundamental domain is tiled by cells of side at most
//! `1/(4 sqrt(N))`, winding numbers are accumulated over shared cell
//! edges with adaptive refinement (so the per-cell integers sum exactly
//! to the count over the whole domain), and every unit of winding is
//! polished by Newton iterations on the entire function.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{inverse_dilate, torus_distance, TorusPoint};
use crate::theta::{eval_weighted, eval_weighted_deriv, SectionCoeffs, ThetaSpace};

/// All zeros of a section with multiplicities; total equals `N` exactly.
#[derive(Debug, Clone)]
pub struct ZeroSet {
    pub n: usize,
    /// Canonically sorted by `(x, y)`.
    pub zeros: Vec<(TorusPoint, u32)>,
    pub total_count: usize,
    /// Winding number of each grid cell, row-major.
    pub cell_windings: Vec<i32>,
}

struct Frame<'a> {
    space: &'a ThetaSpace,
    s: &'a SectionCoeffs,
    floor: f64,
    rms: f64,
}

impl Frame<'_> {
    fn eval(&self, x: f64, y: f64) -> C64 {
        eval_weighted(self.space, self.s, x, y)
    }

    /// Total argument increment along the straight segment, adaptively
    /// halved until stable; `None` when the budget is exhausted or the
    /// values dip below the safety floor.
    fn edge_delta(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Option<f64> {
        let mut pts = 16usize;
        let mut prev: Option<f64> = None;
        while pts <= 1024 {
            let mut delta = 0.0;
            let mut last = self.eval(x0, y0);
            let mut min_abs = last.norm();
            let mut ok = true;
            for i in 1..=pts {
                let t = i as f64 / pts as f64;
                let v = self.eval(x0 + t * (x1 - x0), y0 + t * (y1 - y0));
                min_abs = min_abs.min(v.norm());
                let step = (v * last.conj()).arg();
                if step.abs() > 2.6 {
                    // nearly a half turn in one sample: refine
                    ok = false;
                    break;
                }
                delta += step;
                last = v;
            }
            if ok && min_abs > self.floor {
                if let Some(p) = prev {
                    if (delta - p).abs() < 0.002 * std::f64::consts::TAU {
                        return Some(delta);
                    }
                }
                prev = Some(delta);
            } else {
                prev = None;
            }
            pts *= 2;
        }
        None
    }
}

/// Locate all zeros of `s`; errors rather than silently missing any.
pub fn locate_zeros(space: &ThetaSpace, s: &SectionCoeffs) -> Result<ZeroSet> {
    let n = space.dim();
    assert!(s.norm_sq() > 0.0, "zero section has no zero divisor");
    let mc = (4.0 * (n as f64).sqrt()).ceil() as usize;
    // deterministic irrational offset against zeros sitting on edges;
    // retries rescale it
    let mut last_err = None;
    for attempt in 0..4 {
        let ox = (2.0f64).sqrt() / 1000.0 * (1.0 + 0.37 * attempt as f64);
        let oy = (3.0f64).sqrt() / 1000.0 * (1.0 + 0.29 * attempt as f64);
        match try_locate(space, s, mc, ox, oy) {
            Ok(zs) => return Ok(zs),
            Err(e @ Error::WindingBudget { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

fn try_locate(
    space: &ThetaSpace,
    s: &SectionCoeffs,
    mc: usize,
    ox: f64,
    oy: f64,
) -> Result<ZeroSet> {
    let n = space.dim();
    let side = 1.0 / mc as f64;

    // global scale from the grid vertices
    let vertex_vals: Vec<f64> = (0..=mc)
        .into_par_iter()
        .flat_map_iter(|j| (0..=mc).map(move |i| (i, j)))
        .map(|(i, j)| {
            eval_weighted(space, s, ox + i as f64 * side, oy + j as f64 * side).norm()
        })
        .collect();
    let rms =
        (vertex_vals.iter().map(|v| v * v).sum::<f64>() / vertex_vals.len() as f64).sqrt();
    let floor = 1e-9 * rms;
    if vertex_vals.iter().any(|&v| v <= floor) {
        return Err(Error::WindingBudget { x: ox, y: oy, refinements: 0 });
    }
    let frame = Frame { space, s, floor, rms };

    // h[j][i]: (i,j) -> (i+1,j); v[j][i]: (i,j) -> (i,j+1); shared edges
    // are computed once so the cell sums telescope exactly
    let h_edges: Vec<Option<f64>> = (0..(mc + 1) * mc)
        .into_par_iter()
        .map(|idx| {
            let j = idx / mc;
            let i = idx % mc;
            let x0 = ox + i as f64 * side;
            let y0 = oy + j as f64 * side;
            frame.edge_delta(x0, y0, x0 + side, y0)
        })
        .collect();
    let v_edges: Vec<Option<f64>> = (0..mc * (mc + 1))
        .into_par_iter()
        .map(|idx| {
            let j = idx / (mc + 1);
            let i = idx % (mc + 1);
            let x0 = ox + i as f64 * side;
            let y0 = oy + j as f64 * side;
            frame.edge_delta(x0, y0, x0, y0 + side)
        })
        .collect();
    if let Some(idx) = h_edges.iter().position(|e| e.is_none()) {
        return Err(Error::WindingBudget {
            x: ox + (idx % mc) as f64 * side,
            y: oy + (idx / mc) as f64 * side,
            refinements: 6,
        });
    }
    if let Some(idx) = v_edges.iter().position(|e| e.is_none()) {
        return Err(Error::WindingBudget {
            x: ox + (idx % (mc + 1)) as f64 * side,
            y: oy + (idx / (mc + 1)) as f64 * side,
            refinements: 6,
        });
    }

    let mut windings = vec![0i32; mc * mc];
    let mut total = 0i64;
    for j in 0..mc {
        for i in 0..mc {
            let bottom = h_edges[j * mc + i].unwrap();
            let top = h_edges[(j + 1) * mc + i].unwrap();
            let left = v_edges[j * (mc + 1) + i].unwrap();
            let right = v_edges[j * (mc + 1) + i + 1].unwrap();
            let sum = bottom + right - top - left;
            let w = (sum / std::f64::consts::TAU).round();
            if (sum / std::f64::consts::TAU - w).abs() > 0.01 {
                return Err(Error::WindingBudget {
                    x: ox + i as f64 * side,
                    y: oy + j as f64 * side,
                    refinements: 7,
                });
            }
            windings[j * mc + i] = w as i32;
            total += w as i64;
        }
    }
    if total != n as i64 {
        return Err(Error::ZeroCountMismatch { found: total, expected: n as i64 });
    }

    // polish one seed per unit of winding
    let cells: Vec<(usize, usize, i32)> = (0..mc * mc)
        .filter_map(|idx| {
            let w = windings[idx];
            (w != 0).then_some((idx % mc, idx / mc, w))
        })
        .collect();
    let polished: Vec<Result<Vec<(f64, f64, u32)>>> = cells
        .par_iter()
        .map(|&(i, j, w)| {
            let x0 = ox + i as f64 * side;
            let y0 = oy + j as f64 * side;
            resolve_cell(&frame, x0, y0, side, w, 0)
        })
        .collect();
    let mut zeros: Vec<(TorusPoint, u32)> = Vec::with_capacity(n);
    for r in polished {
        for (x, y, m) in r? {
            zeros.push((TorusPoint::new(x, y), m));
        }
    }
    zeros.sort_by(|a, b| (a.0.x(), a.0.y()).partial_cmp(&(b.0.x(), b.0.y())).unwrap());
    let total_count: usize = zeros.iter().map(|z| z.1 as usize).sum();
    if total_count != n {
        return Err(Error::ZeroCountMismatch {
            found: total_count as i64,
            expected: n as i64,
        });
    }

    // residual verification against the local scale
    let tol = 1e-10 * (n as f64).sqrt();
    for (z, _) in &zeros {
        let local = local_scale(&frame, z.x(), z.y(), side);
        let resid = frame.eval(z.x(), z.y()).norm() / local;
        if resid > tol {
            return Err(Error::WindingBudget { x: z.x(), y: z.y(), refinements: 8 });
        }
    }

    Ok(ZeroSet { n, zeros, total_count, cell_windings: windings })
}

fn local_scale(frame: &Frame, x: f64, y: f64, side: f64) -> f64 {
    let mut m = 0.0f64;
    for (dx, dy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
        m = m.max(frame.eval(x + dx * side, y + dy * side).norm());
    }
    // near-cluster corners can themselves be small; floor by the global scale
    m.max(1e-3 * frame.rms)
}

/// Resolve one cell carrying winding `w`: polish when the Newton
/// iteration stays inside the cell's basin, otherwise subdivide by
/// winding until it does (or until a genuine multiple zero remains at the
/// resolution floor).
fn resolve_cell(
    frame: &Frame,
    x0: f64,
    y0: f64,
    side: f64,
    w: i32,
    depth: usize,
) -> Result<Vec<(f64, f64, u32)>> {
    if w < 0 {
        // holomorphic sections cannot wind negatively
        return Err(Error::WindingBudget { x: x0, y: y0, refinements: 9 });
    }
    if w == 1 {
        if let Some(z) = newton_polish(frame, x0, y0, side, 1.0) {
            return Ok(vec![(z.0, z.1, 1)]);
        }
    }
    if depth >= 24 || side < 1e-6 {
        // resolution floor: either a genuine multiple zero (cluster that
        // never separates) or a zero the capped Newton can now reach from
        // a seed this close
        let z = newton_polish(frame, x0, y0, side, w as f64)
            .unwrap_or((x0 + side / 2.0, y0 + side / 2.0));
        return Ok(vec![(z.0, z.1, w as u32)]);
    }
    let half = side / 2.0;
    let mut out = Vec::new();
    let mut assigned = 0i32;
    for (qi, qj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let cx = x0 + qi as f64 * half;
        let cy = y0 + qj as f64 * half;
        let bottom = frame.edge_delta(cx, cy, cx + half, cy);
        let top = frame.edge_delta(cx, cy + half, cx + half, cy + half);
        let left = frame.edge_delta(cx, cy, cx, cy + half);
        let right = frame.edge_delta(cx + half, cy, cx + half, cy + half);
        let (Some(b), Some(t), Some(l), Some(r)) = (bottom, top, left, right) else {
            // a zero sits on a subdivision edge; nudge the split point
            return resolve_cell_offset(frame, x0, y0, side, w, depth);
        };
        let sum = b + r - t - l;
        let wq = (sum / std::f64::consts::TAU).round() as i32;
        assigned += wq;
        if wq > 0 {
            out.extend(resolve_cell(frame, cx, cy, half, wq, depth + 1)?);
        }
    }
    if assigned != w {
        return Err(Error::WindingBudget { x: x0, y: y0, refinements: 10 + depth });
    }
    Ok(out)
}

/// Subdivide with an off-center split (3/8) when the midline hits a zero.
fn resolve_cell_offset(
    frame: &Frame,
    x0: f64,
    y0: f64,
    side: f64,
    w: i32,
    depth: usize,
) -> Result<Vec<(f64, f64, u32)>> {
    let fx = 0.375 * side;
    let fy = 0.375 * side;
    let xs = [x0, x0 + fx, x0 + side];
    let ys = [y0, y0 + fy, y0 + side];
    let mut out = Vec::new();
    let mut assigned = 0i32;
    for qj in 0..2 {
        for qi in 0..2 {
            let (xa, xb) = (xs[qi], xs[qi + 1]);
            let (ya, yb) = (ys[qj], ys[qj + 1]);
            let bottom = frame.edge_delta(xa, ya, xb, ya);
            let top = frame.edge_delta(xa, yb, xb, yb);
            let left = frame.edge_delta(xa, ya, xa, yb);
            let right = frame.edge_delta(xb, ya, xb, yb);
            let (Some(b), Some(t), Some(l), Some(r)) = (bottom, top, left, right) else {
                return Err(Error::WindingBudget { x: xa, y: ya, refinements: 20 + depth });
            };
            let sum = b + r - t - l;
            let wq = (sum / std::f64::consts::TAU).round() as i32;
            assigned += wq;
            if wq > 0 {
                out.extend(resolve_cell(frame, xa, ya, (xb - xa).max(yb - ya), wq, depth + 1)?);
            }
        }
    }
    if assigned != w {
        return Err(Error::WindingBudget { x: x0, y: y0, refinements: 15 + depth });
    }
    Ok(out)
}

/// Newton iteration seeded at the cell center; succeeds only if it
/// converges while staying inside the cell padded by half a side (escape
/// means the seed was outside the zero's basin and the caller subdivides
/// instead). Steps bottom out at the evaluation noise floor around
/// `1e-14`, so convergence is declared at `1e-12`; a detected two-cycle
/// (the signature of polishing a tight simple pair with the cluster
/// multiplicity) resolves to the cycle midpoint.
fn newton_polish(frame: &Frame, x0: f64, y0: f64, side: f64, mult: f64) -> Option<(f64, f64)> {
    let mut x = x0 + side / 2.0;
    let mut y = y0 + side / 2.0;
    let (lo_x, hi_x) = (x0 - 0.5 * side, x0 + 1.5 * side);
    let (lo_y, hi_y) = (y0 - 0.5 * side, y0 + 1.5 * side);
    let mut prev = (x, y);
    let mut prev2 = (x, y);
    for it in 0..60 {
        let f = frame.eval(x, y);
        let df = eval_weighted_deriv(frame.space, frame.s, x, y);
        if df.norm() == 0.0 {
            return None;
        }
        let step = -mult.max(1.0) * f / df;
        let cap = 0.6 * side;
        let sn = step.norm();
        let (sx, sy) = if sn > cap {
            (step.re * cap / sn, step.im * cap / sn)
        } else {
            (step.re, step.im)
        };
        prev2 = prev;
        prev = (x, y);
        x += sx;
        y += sy;
        if !(lo_x..=hi_x).contains(&x) || !(lo_y..=hi_y).contains(&y) {
            return None;
        }
        if sn < 1e-12 {
            return Some((x, y));
        }
        if it > 40 {
            let cyc = ((x - prev2.0).powi(2) + (y - prev2.1).powi(2)).sqrt();
            if cyc < 1e-12 {
                return Some(((x + prev.0) / 2.0, (y + prev.1) / 2.0));
            }
        }
    }
    None
}

/// Pairing of the dilated zero set against a test function on the unit
/// disk:
/// `value = (1/(N eps^2)) sum_{zeros in B(p,eps)} mult * eta((z-p)/eps)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingStatistic {
    pub n: u64,
    pub eps: f64,
    pub value: f64,
    /// `int_{B(0,1)} eta du`, the flat reference measure.
    pub reference: f64,
}

pub fn scaled_zero_pairing(
    zs: &ZeroSet,
    p: &TorusPoint,
    eps: f64,
    eta: impl Fn(f64, f64) -> f64,
) -> Result<PairingStatistic> {
    let mut value = 0.0;
    let mut count2 = 0usize;
    for (z, m) in &zs.zeros {
        let d = torus_distance(z, p);
        if d < 2.0 * eps {
            count2 += *m as usize;
        }
        if d < eps {
            let (ux, uy) = inverse_dilate(p, eps, z)?;
            value += *m as f64 * eta(ux, uy);
        }
    }
    let nf = zs.n as f64;
    value /= nf * eps * eps;
    let reference = disk_integral(&eta);
    let sup_eta = sup_on_disk(&eta);
    assert!(
        value.abs() <= sup_eta * count2 as f64 / (nf * eps * eps) + 1e-12,
        "pairing bound violated"
    );
    Ok(PairingStatistic { n: zs.n as u64, eps, value, reference })
}

/// Midpoint quadrature of `eta` over the unit disk (the flat reference).
pub fn disk_integral(eta: &impl Fn(f64, f64) -> f64) -> f64 {
    let m = 400usize;
    let h = 2.0 / m as f64;
    let mut acc = 0.0;
    for iy in 0..m {
        let y = -1.0 + (iy as f64 + 0.5) * h;
        for ix in 0..m {
            let x = -1.0 + (ix as f64 + 0.5) * h;
            if x * x + y * y < 1.0 {
                acc += eta(x, y);
            }
        }
    }
    acc * h * h
}

fn sup_on_disk(eta: &impl Fn(f64, f64) -> f64) -> f64 {
    let m = 100usize;
    let mut sup = 0.0f64;
    for iy in 0..=m {
        let y = -1.0 + 2.0 * iy as f64 / m as f64;
        for ix in 0..=m {
            let x = -1.0 + 2.0 * ix as f64 / m as f64;
            if x * x + y * y <= 1.0 {
                sup = sup.max(eta(x, y).abs());
            }
        }
    }
    sup
}

/// `|count(B(p,eps))/N - pi eps^2|`: deviation of the zero-count fraction
/// from the flat volume fraction.
pub fn zero_discrepancy_in_ball(zs: &ZeroSet, p: &TorusPoint, eps: f64) -> f64 {
    let count: usize = zs
        .zeros
        .iter()
        .filter(|(z, _)| torus_distance(z, p) < eps)
        .map(|(_, m)| *m as usize)
        .sum();
    let vol_fraction = std::f64::consts::PI * eps * eps;
    (count as f64 / zs.n as f64 - vol_fraction).abs()
}

/// `L^1(B(p,1))` norm of the dilated potential
/// `u(w) = (1/N) log ||s(p + eps w)||^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialL1Record {
    pub n: u64,
    pub eps: f64,
    pub value: f64,
    pub normalized: f64,
    /// Analytic bound on the excised near-zero contribution.
    pub excised_bound: f64,
}

pub fn potential_l1(
    space: &ThetaSpace,
    s: &SectionCoeffs,
    zs: &ZeroSet,
    p: &TorusPoint,
    eps: f64,
) -> Result<PotentialL1Record> {
    let nf = space.level();
    let m = 256usize;
    let h = 2.0 / m as f64;
    let excise = 1e-4;
    let mapped: Vec<(f64, f64, u32)> = zs
        .zeros
        .iter()
        .filter(|(z, _)| torus_distance(z, p) < eps * 1.05)
        .map(|(z, mult)| {
            let (dx, dy) = z.delta(p);
            (dx / eps, dy / eps, *mult)
        })
        .collect();
    let rows: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|iy| {
            let wy = -1.0 + (iy as f64 + 0.5) * h;
            let mut acc = 0.0;
            for ix in 0..m {
                let wx = -1.0 + (ix as f64 + 0.5) * h;
                if wx * wx + wy * wy >= 1.0 {
                    continue;
                }
                if mapped
                    .iter()
                    .any(|&(zx, zy, _)| (wx - zx).powi(2) + (wy - zy).powi(2) < excise * excise)
                {
                    continue;
                }
                let x = p.x() + eps * wx;
                let y = p.y() + eps * wy;
                let val = eval_weighted(space, s, x, y).norm_sqr();
                acc += (val.ln() / nf).abs();
            }
            acc
        })
        .collect();
    let value = rows.iter().sum::<f64>() * h * h;
    // each excised disc of radius delta contributes (2 mult / N) times
    // 2 pi int_0^delta |log r| r dr = pi delta^2 (|log delta| + 1/2),
    // plus a bounded smooth part
    let total_mult: f64 = mapped.iter().map(|&(_, _, mult)| mult as f64).sum();
    let excised_bound = total_mult
        * (2.0 / nf)
        * std::f64::consts::PI
        * excise
        * excise
        * (-(excise.ln()) + 0.5 + 1.0);
    Ok(PotentialL1Record {
        n: space.dim() as u64,
        eps,
        value,
        normalized: value / (eps * eps),
        excised_bound,
    })
}
