//! The one-dimensional reduced functional, stripe energy densities, the
//! optimal width and the chessboard lower bound.

use crate::energy::{g1d_deficit_with_error, oriented_jumps};
use crate::error::{Error, Result};
use crate::kernels::{k_hat_tau, KernelFamily, KernelSpec};
use crate::lattice::Slice1D;
use crate::quad;
use crate::special::{hurwitz_zeta, image_sum};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Periodic union of intervals `a_1 < b_1 < a_2 < ... < b_m <= a_1 + L`, `a_1` in `[0, L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDConfig {
    pub period: f64,
    pub intervals: Vec<(f64, f64)>,
}

impl OneDConfig {
    pub fn new(period: f64, intervals: Vec<(f64, f64)>) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Precondition("period must be positive".into()));
        }
        if let Some(&(a0, _)) = intervals.first() {
            if !(0.0..period).contains(&a0) {
                return Err(Error::Precondition("first interval must start in [0, L)".into()));
            }
            let mut prev = f64::NEG_INFINITY;
            for &(a, b) in &intervals {
                if !(a > prev && b > a) {
                    return Err(Error::Precondition("intervals must be disjoint and increasing".into()));
                }
                prev = b;
            }
            if prev > a0 + period {
                return Err(Error::Precondition("intervals overlap across the period".into()));
            }
        }
        Ok(Self { period, intervals })
    }

    /// Periodic stripes of width h on the period 2h.
    pub fn stripes(h: f64) -> Self {
        Self { period: 2.0 * h, intervals: vec![(0.0, h)] }
    }

    /// Random configuration with 1..=max_intervals intervals, gaps at least `min_gap`.
    pub fn random<R: Rng>(rng: &mut R, period: f64, max_intervals: usize, min_gap: f64) -> Self {
        loop {
            let m = rng.gen_range(1..=max_intervals);
            let mut pts: Vec<f64> = (0..2 * m).map(|_| rng.gen_range(0.0..period)).collect();
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut ok = true;
            for k in 0..2 * m {
                let next = if k + 1 < 2 * m { pts[k + 1] } else { pts[0] + period };
                if next - pts[k] < min_gap {
                    ok = false;
                }
            }
            if ok {
                let intervals = (0..m).map(|i| (pts[2 * i], pts[2 * i + 1])).collect();
                return Self { period, intervals };
            }
        }
    }

    /// Measure of the set in one period.
    pub fn mass(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Number of boundary points per period.
    pub fn perimeter(&self) -> usize {
        self.to_slice().jumps.len()
    }

    pub fn to_slice(&self) -> Slice1D {
        let l = self.period;
        let mut jumps: Vec<f64> = Vec::new();
        for &(a, b) in &self.intervals {
            jumps.push(a.rem_euclid(l));
            jumps.push(b.rem_euclid(l));
        }
        jumps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // intervals that touch cancel their shared endpoint
        let mut merged: Vec<f64> = Vec::new();
        for x in jumps {
            if merged.last().is_some_and(|&y| (x - y).abs() < 1e-15 * l) {
                merged.pop();
            } else {
                merged.push(x);
            }
        }
        if merged.len() >= 2 && (merged[0] + l - merged[merged.len() - 1]).abs() < 1e-15 * l {
            merged.pop();
            merged.remove(0);
        }
        let first_positive = merged.iter().copied().find(|&x| x > 0.0).unwrap_or(l);
        let probe = 0.5 * first_positive;
        let starts_inside = self.intervals.iter().any(|&(a, b)| (probe - a).rem_euclid(l) < b - a);
        Slice1D { period: l, jumps: merged, starts_inside }
    }

    pub fn from_slice(sl: &Slice1D) -> Self {
        let mut iv: Vec<(f64, f64)> = sl.intervals();
        iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self { period: sl.period, intervals: iv }
    }
}

fn require_one_norm(spec: &KernelSpec) -> Result<()> {
    if spec.family != KernelFamily::OneNorm {
        return Err(Error::Precondition("the one-dimensional functional uses the one-norm family".into()));
    }
    Ok(())
}

/// `(1/L)(-Per + int Khat(z)[Per |z| - int_0^L |chi(x) - chi(x+z)| dx] dz)`.
pub fn f1_energy(cfg: &OneDConfig, spec: &KernelSpec) -> Result<f64> {
    require_one_norm(spec)?;
    let sl = cfg.to_slice();
    let (g, _) = g1d_deficit_with_error(&sl, spec)?;
    Ok((-(sl.perimeter() as f64) + g) / cfg.period)
}

/// `int_0^L |chi(x) - chi(x+z)| dx` by exact interval overlaps.
pub fn shift_disagreement(cfg: &OneDConfig, z: f64) -> f64 {
    let l = cfg.period;
    let m = cfg.mass();
    let mut overlap = 0.0;
    let z = z.rem_euclid(l);
    for &(a, b) in &cfg.intervals {
        for &(c, d) in &cfg.intervals {
            // [c - z, d - z] and its images against [a, b]
            for t in -2..=2 {
                let lo = a.max(c - z + t as f64 * l);
                let hi = b.min(d - z + t as f64 * l);
                if hi > lo {
                    overlap += hi - lo;
                }
            }
        }
    }
    2.0 * (m - overlap)
}

/// Quadrature version of [`f1_energy`]; slow, used as an independent check.
pub fn f1_energy_quadrature(cfg: &OneDConfig, spec: &KernelSpec, tol: f64) -> Result<f64> {
    require_one_norm(spec)?;
    let sl = cfg.to_slice();
    let per = sl.perimeter() as f64;
    if per == 0.0 {
        return Ok(0.0);
    }
    let l = cfg.period;
    let ends: Vec<f64> = sl.jumps.clone();
    let mut diffs: Vec<f64> = Vec::new();
    for &x in &ends {
        for &y in &ends {
            diffs.push((x - y).rem_euclid(l));
        }
    }
    diffs.push(l);
    let images = 200usize;
    let mut breaks: Vec<f64> = Vec::new();
    for t in 0..images {
        for &dd in &diffs {
            let b = dd + t as f64 * l;
            if b > 0.0 {
                breaks.push(b);
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * l);
    let zmax = images as f64 * l;
    let khat = |z: f64| k_hat_tau(z, spec).unwrap_or(0.0);
    let phi = |z: f64| per * z - shift_disagreement(cfg, z);
    let f = |z: f64| if z <= 0.0 { 0.0 } else { khat(z) * phi(z) };
    // the bracket vanishes identically below the smallest gap
    let mut lo = breaks[0];
    let mut total = 0.0;
    let pieces = breaks.len() as f64;
    for &b in breaks.iter().skip(1).filter(|&&b| b <= zmax) {
        total += quad::integrate(&f, lo, b, tol / pieces)?.0;
        lo = b;
    }
    // tail: the disagreement is periodic with mean 2 m (L - m) / L
    let m = cfg.mass();
    let mean = 2.0 * m * (l - m) / l;
    let a = spec.offset();
    let q = spec.q();
    let cq = spec.c_q();
    let first = cq * ((a + lo).powf(2.0 - q) / (q - 2.0) - a * (a + lo).powf(1.0 - q) / (q - 1.0));
    let zeroth = cq * (a + lo).powf(1.0 - q) / (q - 1.0);
    total += per * first - mean * zeroth;
    Ok((-per + 2.0 * total) / l)
}

/// Stripe energy density, through the two-interval period.
pub fn e_inf_tau(h: f64, spec: &KernelSpec) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Precondition("width must be positive".into()));
    }
    f1_energy(&OneDConfig::stripes(h), spec)
}

/// Alternating sum `sum_{m>=1} (-1)^(m+1) (a + m h)^(-s)`.
fn alternating(a: f64, h: f64, s: f64) -> f64 {
    image_sum(&[(1.0, a + h), (-1.0, a + 2.0 * h)], s, 2.0 * h).0
}

/// `A(h) = int_h^inf (z-h) Khat + sum_k int_0^h int_{2kh}^{(2k+1)h} Khat(x-y)`,
/// equal to `2 sum_{m>=1} (-1)^(m+1) Q(m h)`.
pub fn a_tau(h: f64, spec: &KernelSpec) -> Result<f64> {
    require_one_norm(spec)?;
    if !(h > 0.0) {
        return Err(Error::Precondition("width must be positive".into()));
    }
    let q = spec.q();
    let c = spec.c_q() / ((q - 1.0) * (q - 2.0));
    Ok(2.0 * c * alternating(spec.offset(), h, q - 2.0))
}

/// (A'(h), A''(h)).
pub fn a_tau_derivatives(h: f64, spec: &KernelSpec) -> Result<(f64, f64)> {
    require_one_norm(spec)?;
    if !(h > 0.0) {
        return Err(Error::Precondition("width must be positive".into()));
    }
    let q = spec.q();
    let a = spec.offset();
    let cq = spec.c_q();
    // m = ((a + m h) - a) / h
    let s = |e: f64| alternating(a, h, e);
    let m1 = (s(q - 2.0) - a * s(q - 1.0)) / h;
    let m2 = (s(q - 2.0) - 2.0 * a * s(q - 1.0) + a * a * s(q)) / (h * h);
    let d1 = -2.0 * cq / (q - 1.0) * m1;
    let d2 = 2.0 * cq * m2;
    Ok((d1, d2))
}

/// Stripe density through A: `-1/h + (2/h) A(h)`.
pub fn e_inf_via_a(h: f64, spec: &KernelSpec) -> Result<f64> {
    Ok(-1.0 / h + 2.0 / h * a_tau(h, spec)?)
}

/// (e, e', e'') of the stripe density.
pub fn e_inf_derivatives(h: f64, spec: &KernelSpec) -> Result<(f64, f64, f64)> {
    let a = a_tau(h, spec)?;
    let (a1, a2) = a_tau_derivatives(h, spec)?;
    let e = -1.0 / h + 2.0 * a / h;
    let e1 = 1.0 / (h * h) + 2.0 * a1 / h - 2.0 * a / (h * h);
    let e2 = -2.0 / h.powi(3) + 2.0 * a2 / h - 4.0 * a1 / (h * h) + 4.0 * a / h.powi(3);
    Ok((e, e1, e2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeOptimum {
    pub h_star: f64,
    pub c_star: f64,
    pub second_derivative: f64,
    pub bracket: (f64, f64),
    /// Every local minimum found on the scan, (h, e(h)).
    pub local_minima: Vec<(f64, f64)>,
}

pub const SCAN_RANGE: (f64, f64) = (1e-2, 1e4);
const SCAN_POINTS: usize = 600;

fn golden<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimizer of the stripe density over widths in [`SCAN_RANGE`].
pub fn optimal_h(spec: &KernelSpec) -> Result<StripeOptimum> {
    optimal_h_in(spec, SCAN_RANGE)
}

/// Minimizer of the stripe density over widths in `[lo, hi]` (log-spaced scan, then refinement).
pub fn optimal_h_in(spec: &KernelSpec, (lo, hi): (f64, f64)) -> Result<StripeOptimum> {
    require_one_norm(spec)?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Precondition(format!("invalid width bracket [{lo}, {hi}]")));
    }
    let grid: Vec<f64> =
        (0..SCAN_POINTS).map(|i| lo * (hi / lo).powf(i as f64 / (SCAN_POINTS - 1) as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&h| e_inf_tau(h, spec)).collect::<Result<_>>()?;
    let f = |h: f64| e_inf_tau(h, spec).unwrap_or(f64::INFINITY);
    let mut minima = Vec::new();
    for i in 1..SCAN_POINTS - 1 {
        if vals[i] <= vals[i - 1] && vals[i] < vals[i + 1] {
            let mut h = golden(&f, grid[i - 1], grid[i + 1], 1e-12);
            // polish on the derivative when it brackets a sign change
            let de = |x: f64| e_inf_derivatives(x, spec).map(|t| t.1).unwrap_or(f64::NAN);
            let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
            if de(a) < 0.0 && de(b) > 0.0 {
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if de(m) < 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-15 * b {
                        break;
                    }
                }
                h = 0.5 * (a + b);
            }
            minima.push((h, f(h)));
        }
    }
    let best = minima
        .iter()
        .cloned()
        .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
        .ok_or_else(|| Error::Tolerance {
            what: format!("no interior minimum of the stripe density in [{lo}, {hi}]"),
            tol: 0.0,
            achieved: 0.0,
        })?;
    let k = grid.iter().position(|&g| g >= best.0).unwrap_or(SCAN_POINTS - 1).max(1);
    let (_, _, e2) = e_inf_derivatives(best.0, spec)?;
    Ok(StripeOptimum {
        h_star: best.0,
        c_star: best.1,
        second_derivative: e2,
        bracket: (grid[k - 1], grid[(k + 1).min(SCAN_POINTS - 1)]),
        local_minima: minima,
    })
}

/// Power-law fit of `e(h) + 1/h = C h^(-gamma)` at tau = 0 from the given widths.
/// Returns (C, gamma).
pub fn fit_tau0_constant(spec: &KernelSpec, widths: &[f64]) -> Result<(f64, f64)> {
    if spec.tau != 0.0 {
        return Err(Error::Precondition("the power-law fit needs tau = 0".into()));
    }
    if widths.len() < 2 {
        return Err(Error::Precondition("need at least two widths".into()));
    }
    let pts: Vec<(f64, f64)> = widths
        .iter()
        .map(|&h| Ok((h.ln(), (e_inf_tau(h, spec)? + 1.0 / h).ln())))
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let c = (my - slope * mx).exp();
    Ok((c, -slope))
}

/// `((q-1) C)^(1/(q-2))`.
pub fn closed_form_h_bar(c_bar: f64, q: f64) -> f64 {
    ((q - 1.0) * c_bar).powf(1.0 / (q - 2.0))
}

/// `(1/2L) sum_x (x^+ - x) e(x^+ - x) + (x - x^-) e(x - x^-)` over boundary points.
pub fn chessboard_bound(cfg: &OneDConfig, spec: &KernelSpec) -> Result<f64> {
    let sl = cfg.to_slice();
    if sl.jumps.is_empty() {
        return Err(Error::Precondition("chessboard bound needs a nontrivial set".into()));
    }
    let gaps = sl.gaps();
    let m = gaps.len();
    let mut s = 0.0;
    for k in 0..m {
        let fwd = gaps[k];
        let back = gaps[(k + m - 1) % m];
        s += fwd * e_inf_tau(fwd, spec)? + back * e_inf_tau(back, spec)?;
    }
    Ok(s / (2.0 * cfg.period))
}

/// `int_{s^-}^{s} int_0^inf |chi(u+rho) - chi(u)| Khat(rho)` minus half the first moment,
/// for the window left of jump index `k` (the divergent parts cancel).
fn window_deficit(jumps: &[f64], k: usize, period: f64, spec: &KernelSpec) -> f64 {
    let m = jumps.len();
    let prev = (k + m - 1) % m;
    let origin = jumps[prev];
    let rel = |j: usize| -> f64 {
        let r = (jumps[j] - origin).rem_euclid(period);
        if r == 0.0 { period } else { r }
    };
    let g = rel(k);
    // opposite-phase intervals [b, e] relative to s^-: starting at s, every other gap
    let mut offsets: Vec<f64> = (0..m).map(|i| rel((prev + 1 + i) % m)).collect();
    offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let a = spec.offset();
    let q = spec.q();
    let c = spec.c_q() / ((q - 1.0) * (q - 2.0));
    let mut terms: Vec<(f64, f64)> = Vec::new();
    for i in (0..m).step_by(2) {
        let b = offsets[i];
        let e = offsets[i + 1];
        // Q(b - g) - Q(b) - Q(e - g) + Q(e); the first image of the leading Q(0) is dropped
        let bg = if i == 0 { period } else { b - g };
        terms.push((1.0, a + bg));
        terms.push((-1.0, a + b));
        terms.push((-1.0, a + e - g));
        terms.push((1.0, a + e));
    }
    -c * image_sum(&terms, q - 2.0, period).0
}

/// Local contribution of boundary point `s`:
/// `-1 + int |rho| Khat - (forward window left of s) - (backward window right of s)`.
pub fn r_tau_1d(cfg: &OneDConfig, s: f64, spec: &KernelSpec) -> Result<f64> {
    require_one_norm(spec)?;
    let sl = cfg.to_slice();
    if sl.jumps.is_empty() {
        return Err(Error::Precondition("no boundary points".into()));
    }
    let l = sl.period;
    let tol = 1e-9 * l;
    let k = sl
        .jumps
        .iter()
        .position(|&x| (x - s.rem_euclid(l)).abs() <= tol || (x - s.rem_euclid(l)).abs() >= l - tol)
        .ok_or_else(|| Error::Precondition(format!("{s} is not a boundary point")))?;
    let forward = window_deficit(&sl.jumps, k, l, spec);
    // mirror image: the window right of s becomes the window left of -s
    let mut mirrored: Vec<f64> = sl.jumps.iter().map(|&x| (l - x).rem_euclid(l)).collect();
    let target = mirrored[k];
    mirrored.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let km = mirrored.iter().position(|&x| x == target).expect("mirrored jump");
    let backward = window_deficit(&mirrored, km, l, spec);
    Ok(-1.0 + forward + backward)
}

/// Sum of [`r_tau_1d`] over all boundary points in one period.
pub fn r_tau_1d_sum(cfg: &OneDConfig, spec: &KernelSpec) -> Result<f64> {
    let sl = cfg.to_slice();
    sl.jumps.iter().map(|&s| r_tau_1d(cfg, s, spec)).sum()
}

/// `sum_{m' in Z^(d-1)} kappa^d (kappa (j + |m'|_1) + tau^(1/beta))^(-p)` for the one-norm family.
pub fn reduced_lattice_kernel(j: u64, spec: &KernelSpec, spacing: f64) -> Result<f64> {
    require_one_norm(spec)?;
    let p = spec.p;
    let x = j as f64 + spec.offset() / spacing;
    let pre = spacing.powf(spec.d as f64 - p);
    if x == 0.0 {
        return Err(Error::Domain("reduced lattice kernel singular at zero".into()));
    }
    let v = match spec.d {
        1 => x.powf(-p),
        2 => 2.0 * hurwitz_zeta(p, x).0 - x.powf(-p),
        3 => x.powf(-p) + 4.0 * (hurwitz_zeta(p - 1.0, x + 1.0).0 - x * hurwitz_zeta(p, x + 1.0).0),
        _ => return Err(Error::Precondition("reduced lattice kernel implemented for d <= 3".into())),
    };
    Ok(pre * v)
}

/// Discrete stripe energy density for stripes `k` cells wide (one-norm lattice weights),
/// summed directly along the stripe normal.
pub fn e_inf_dsc(k: usize, spec: &KernelSpec, spacing: f64) -> Result<f64> {
    require_one_norm(spec)?;
    if k == 0 {
        return Err(Error::Precondition("width must be at least one cell".into()));
    }
    let h = k as f64 * spacing;
    let cut: u64 = 200_000;
    let period = 2 * k as u64;
    let mut s = 0.0;
    for j in (1..=cut).rev() {
        let r = j % period;
        let tri = r.min(period - r) as f64;
        s += reduced_lattice_kernel(j, spec, spacing)? * (j as f64 - tri);
    }
    // tail from the continuum reduction, tri replaced by its mean k/2
    let q = spec.q();
    let b = spec.offset() / spacing;
    let pre = spacing.powf(spec.d as f64 - spec.p) * spec.c_q();
    let x0 = cut as f64 + 0.5 + b;
    let shift = b + 0.5 * k as f64;
    s += pre * (x0.powf(2.0 - q) / (q - 2.0) - shift * x0.powf(1.0 - q) / (q - 1.0));
    Ok((-4.0 + 4.0 * spacing * s) / (2.0 * h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub p: f64,
    pub d: usize,
    pub h_star: f64,
    pub c_star: f64,
    pub second_derivative: f64,
}

/// Optimal widths over a (tau, p) grid, in parallel.
pub fn sweep(d: usize, taus: &[f64], ps: &[f64], range: (f64, f64)) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(f64, f64)> = ps.iter().flat_map(|&p| taus.iter().map(move |&t| (t, p))).collect();
    jobs.par_iter()
        .map(|&(tau, p)| {
            let spec = KernelSpec::one_norm(d, p, tau)?;
            let opt = optimal_h_in(&spec, range)?;
            Ok(SweepRow { tau, p, d, h_star: opt.h_star, c_star: opt.c_star, second_derivative: opt.second_derivative })
        })
        .collect()
}

/// Signed boundary points of a configuration, for callers that need orientations.
pub fn boundary_points(cfg: &OneDConfig) -> Vec<(f64, f64)> {
    oriented_jumps(&cfg.to_slice())
}
