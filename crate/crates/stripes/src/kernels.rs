//! Interaction kernels, their one-dimensional reduction, lattice weights and
//! periodized torus tables.

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{binom, hurwitz_zeta, l1_sphere_count, sphere_area};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `1/(|z|_1 + tau^(1/beta))^p`
    OneNorm,
    /// `1/|z|^p`, the lattice kernel
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub d: usize,
    pub p: f64,
    pub tau: f64,
    pub family: KernelFamily,
}

impl KernelSpec {
    pub fn new(d: usize, p: f64, tau: f64, family: KernelFamily) -> Result<Self> {
        if d < 1 {
            return Err(Error::Precondition("dimension must be at least 1".into()));
        }
        if !(p >= d as f64 + 2.0) {
            return Err(Error::Precondition(format!("p = {p} < d + 2 = {}", d + 2)));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::Precondition(format!("tau must be finite and nonnegative, got {tau}")));
        }
        Ok(Self { d, p, tau, family })
    }

    pub fn one_norm(d: usize, p: f64, tau: f64) -> Result<Self> {
        Self::new(d, p, tau, KernelFamily::OneNorm)
    }

    pub fn euclidean(d: usize, p: f64, tau: f64) -> Result<Self> {
        Self::new(d, p, tau, KernelFamily::Euclidean)
    }

    /// beta = p - d - 1
    pub fn beta(&self) -> f64 {
        self.p - self.d as f64 - 1.0
    }

    /// q = p - d + 1, decay exponent of the reduced kernel
    pub fn q(&self) -> f64 {
        self.p - self.d as f64 + 1.0
    }

    /// tau^(1/beta): the kernel offset and the natural lattice spacing.
    pub fn offset(&self) -> f64 {
        if self.tau == 0.0 {
            0.0
        } else {
            self.tau.powf(1.0 / self.beta())
        }
    }

    /// Reduction constant: integrating out each perpendicular coordinate of
    /// `(c + |t|)^(-e)` gives `2 c^(1-e)/(e-1)`.
    pub fn c_q(&self) -> f64 {
        let mut c = 1.0;
        let mut e = self.p;
        for _ in 1..self.d {
            c *= 2.0 / (e - 1.0);
            e -= 1.0;
        }
        c
    }

    fn require_one_norm(&self) -> Result<()> {
        if self.family != KernelFamily::OneNorm {
            return Err(Error::Precondition("operation needs the one-norm kernel family".into()));
        }
        Ok(())
    }
}

/// `1/(|z|_1 + tau^(1/beta))^p`; +inf at the origin when tau = 0.
pub fn k_tau(zeta: &[f64], spec: &KernelSpec) -> Result<f64> {
    spec.require_one_norm()?;
    if zeta.len() != spec.d {
        return Err(Error::Precondition("zeta has wrong dimension".into()));
    }
    let r: f64 = zeta.iter().map(|x| x.abs()).sum::<f64>() + spec.offset();
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(r.powf(-spec.p))
}

/// Same as [`k_tau`] but a domain error instead of the infinity sentinel.
pub fn k_tau_finite(zeta: &[f64], spec: &KernelSpec) -> Result<f64> {
    let v = k_tau(zeta, spec)?;
    if v.is_infinite() {
        return Err(Error::Domain("kernel is singular at the origin for tau = 0".into()));
    }
    Ok(v)
}

/// `|z|^(-p)` for nonzero z.
pub fn k_dsc(zeta: &[f64], p: f64) -> Result<f64> {
    let r2: f64 = zeta.iter().map(|x| x * x).sum();
    if r2 == 0.0 {
        return Err(Error::Domain("discrete kernel undefined at zero".into()));
    }
    Ok(r2.powf(-p / 2.0))
}

/// Reduced kernel `C_q / (tau^(1/beta) + |z|)^q`.
pub fn k_hat_tau(z: f64, spec: &KernelSpec) -> Result<f64> {
    spec.require_one_norm()?;
    let r = spec.offset() + z.abs();
    if r == 0.0 {
        return Err(Error::Domain("reduced kernel singular at z = 0 for tau = 0".into()));
    }
    Ok(spec.c_q() * r.powf(-spec.q()))
}

/// Density f with `int_0^inf f(a) e^(-a s) da = k_hat_tau(s)`.
pub fn inverse_laplace_density(alpha: f64, spec: &KernelSpec) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::Precondition("alpha must be nonnegative".into()));
    }
    let q = spec.q();
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let lg = statrs::function::gamma::ln_gamma(q);
    Ok(spec.c_q() * ((q - 1.0) * alpha.ln() - alpha * spec.offset() - lg).exp())
}

/// Lattice weights `w(kappa m)` for integer offsets m, written as
/// `prefactor * (rho(m) + shift)^(-p)`.
#[derive(Debug, Clone, Copy)]
pub struct LatticeKernel {
    pub family: KernelFamily,
    pub d: usize,
    pub p: f64,
    pub prefactor: f64,
    pub shift: f64,
}

impl LatticeKernel {
    /// Weights `kappa^d K(kappa m)`: Euclidean uses `kappa^d/|kappa m|^p`,
    /// one-norm uses `kappa^d/(kappa |m|_1 + tau^(1/beta))^p`.
    pub fn new(spec: &KernelSpec, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Precondition("spacing must be positive".into()));
        }
        let prefactor = spacing.powf(spec.d as f64 - spec.p);
        let shift = match spec.family {
            KernelFamily::Euclidean => 0.0,
            KernelFamily::OneNorm => spec.offset() / spacing,
        };
        Ok(Self { family: spec.family, d: spec.d, p: spec.p, prefactor, shift })
    }

    /// Unscaled `(rho(m) + shift)^(-p)`; infinite at m = 0 without shift.
    #[inline]
    pub fn g(&self, m: &[i64]) -> f64 {
        match self.family {
            KernelFamily::Euclidean => {
                let r2: f64 = m.iter().map(|&x| (x * x) as f64).sum();
                if r2 == 0.0 {
                    return f64::INFINITY;
                }
                r2.powf(-0.5 * self.p)
            }
            KernelFamily::OneNorm => {
                let r: f64 = m.iter().map(|&x| x.unsigned_abs() as f64).sum::<f64>() + self.shift;
                if r == 0.0 {
                    return f64::INFINITY;
                }
                r.powf(-self.p)
            }
        }
    }

    #[inline]
    pub fn weight(&self, m: &[i64]) -> f64 {
        self.prefactor * self.g(m)
    }

    /// Constant in `||Hess g(x)|| <= c |x|^(-p-2)` away from kinks.
    fn hessian_const(&self) -> f64 {
        match self.family {
            KernelFamily::Euclidean => self.p * (self.p + 2.0),
            KernelFamily::OneNorm => self.d as f64 * self.p * (self.p + 1.0),
        }
    }

    /// Gradient jump constant across coordinate planes (one-norm only).
    fn kink_const(&self) -> f64 {
        match self.family {
            KernelFamily::Euclidean => 0.0,
            KernelFamily::OneNorm => self.p,
        }
    }

    /// Integral of the unscaled g over `{|x|_inf > b}`.
    pub fn exterior_integral(&self, b: f64) -> f64 {
        let d = self.d;
        let p = self.p;
        match self.family {
            KernelFamily::Euclidean => {
                b.powf(d as f64 - p) / (p - d as f64) * 2.0 * d as f64 * cube_face_integral(d - 1, p)
            }
            KernelFamily::OneNorm => {
                // orthant integral by inclusion-exclusion on Phi(t) = t^(d-p)/prod_{k=1..d}(k-p)
                let denom: f64 = (1..=d).map(|k| k as f64 - p).product();
                let phi = |t: f64| t.powf(d as f64 - p) / denom;
                let mut orth = 0.0;
                for j in 1..=d {
                    let sign = if (d - j) % 2 == 0 { 1.0 } else { -1.0 };
                    orth -= binom(d as u64, j as u64) * sign * phi(j as f64 * b + self.shift);
                }
                2f64.powi(d as i32) * orth
            }
        }
    }
}

/// `int_{[-1,1]^m} (1 + |u|^2)^(-p/2) du`
pub fn cube_face_integral(m: usize, p: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => {
            let f = |u: f64| (1.0 + u * u).powf(-p / 2.0);
            2.0 * panels(&f, 0.0, 1.0)
        }
        2 => {
            let inner = |u: f64| {
                let g = |v: f64| (1.0 + u * u + v * v).powf(-p / 2.0);
                panels(&g, 0.0, 1.0)
            };
            4.0 * panels(&inner, 0.0, 1.0)
        }
        _ => panic!("cube face integrals implemented for d <= 3"),
    }
}

/// Four-panel 21-point Gauss-Legendre on [a, b]; plenty for analytic integrands.
fn panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let h = (b - a) / 4.0;
    (0..4).map(|i| quad::fixed(f, a + i as f64 * h, a + (i + 1) as f64 * h, 21)).sum()
}

/// Bound on `sum_{k in Z^dim, |k|_inf > r} |k|^(-s)` for s > dim.
pub fn power_tail_bound(dim: usize, s: f64, r: f64) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let dimf = dim as f64;
    (1.0 + dimf.sqrt() / (2.0 * (r + 1.0))).powf(s) * sphere_area(dim) * (r + 0.5).powf(dimf - s)
        / (s - dimf)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodizedKernel {
    pub d: usize,
    pub n: usize,
    pub spacing: f64,
    pub side: f64,
    pub family: KernelFamily,
    pub p: f64,
    /// W(delta) for delta in [0,n)^d, row-major, excluding the zero offset itself.
    pub table: Vec<f64>,
    /// Certified bound on the error of every table entry.
    pub tail_error: f64,
    /// Images used: |k|_inf <= image_radius.
    pub image_radius: usize,
    /// Per row index delta_0: (positive images) - (negative images) along axis 0,
    /// summed over the other coordinates (box truncation only).
    pub axis_split: Vec<f64>,
}

/// Largest number of (image, offset) pairs evaluated while periodizing.
pub const MAX_IMAGE_POINTS: f64 = 4.0e8;

/// Periodized lattice kernel on the torus of the given side, to absolute tolerance `tol`.
pub fn periodize(spec: &KernelSpec, side: f64, spacing: f64, tol: f64) -> Result<PeriodizedKernel> {
    if !(spacing > 0.0) || !(side > 0.0) {
        return Err(Error::Precondition("side and spacing must be positive".into()));
    }
    let nf = side / spacing;
    let n = nf.round() as usize;
    if n == 0 || (nf - n as f64).abs() > 1e-9 * nf.max(1.0) {
        return Err(Error::Precondition(format!("side {side} is not a multiple of spacing {spacing}")));
    }
    periodize_cells(spec, n, spacing, tol)
}

/// Certified error of the box-plus-exterior-integral approximation, unscaled.
fn periodization_bound(lk: &LatticeKernel, n: usize, r: usize) -> f64 {
    let d = lk.d as f64;
    let p = lk.p;
    let nf = n as f64;
    let rf = r as f64;
    let sd = d.sqrt();
    if rf + 1.0 <= sd + 0.5 {
        return f64::INFINITY;
    }
    let ch = lk.hessian_const();
    let cg = lk.kink_const();
    let shrink = |e: f64| (1.0 - sd / (rf + 1.0)).powf(-e);
    // midpoint error on smooth cells
    let mut e = d * nf * nf / 24.0 * ch * nf.powf(-p - 2.0) * shrink(p + 2.0) * power_tail_bound(lk.d, p + 2.0, rf);
    // cells cut by a coordinate plane
    if cg > 0.0 && lk.d > 1 {
        e += d * nf * cg * nf.powf(-p - 1.0) * shrink(p + 1.0) * power_tail_bound(lk.d - 1, p + 1.0, rf);
    }
    // shift of the exterior region by the offset
    let b = nf * (rf + 0.5);
    let sh = |e: f64| (1.0 - sd / (2.0 * rf + 1.0)).powf(-e);
    e += nf.powf(-d) * 0.5 * (d * nf * nf / 4.0) * ch * sh(p + 2.0) * sphere_area(lk.d) * b.powf(d - p - 2.0)
        / (p + 2.0 - d);
    if cg > 0.0 && lk.d > 1 {
        e += nf.powf(-d) * d * (nf * nf / 4.0) * cg * sh(p + 1.0) * sphere_area(lk.d - 1) * b.powf(d - p - 2.0)
            / (p + 2.0 - d);
    }
    e
}

pub fn periodize_cells(spec: &KernelSpec, n: usize, spacing: f64, tol: f64) -> Result<PeriodizedKernel> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    if spec.d > 3 {
        return Err(Error::Precondition("periodization implemented for d <= 3".into()));
    }
    let lk = LatticeKernel::new(spec, spacing)?;
    let d = spec.d;
    let cells = n.pow(d as u32);
    let mut r = ((d as f64).sqrt().ceil() as usize).max(1) + 1;
    let mut bound = periodization_bound(&lk, n, r);
    let mut guard = 0;
    while bound * lk.prefactor > tol {
        let ratio = bound * lk.prefactor / tol;
        let expo = 1.0 / (spec.p + 2.0 - d as f64);
        let next = ((r as f64 + 0.5) * ratio.powf(expo) * 1.05).ceil() as usize;
        r = next.max(r + 1);
        let points = ((2 * r + 1) as f64).powi(d as i32) * cells as f64;
        if points > MAX_IMAGE_POINTS {
            return Err(Error::Tolerance {
                what: format!("periodization needs image radius {r} beyond budget"),
                tol,
                achieved: periodization_bound(&lk, n, (MAX_IMAGE_POINTS / cells as f64).powf(1.0 / d as f64) as usize / 2)
                    * lk.prefactor,
            });
        }
        bound = periodization_bound(&lk, n, r);
        guard += 1;
        if guard > 100 {
            break;
        }
    }
    let (table, split) = image_box_sum(&lk, n, r);
    let b = n as f64 * (r as f64 + 0.5);
    let tail = lk.exterior_integral(b) / (n as f64).powi(d as i32);
    let mut table: Vec<f64> = table.into_iter().map(|v| lk.prefactor * (v + tail)).collect();
    let wmax = table.iter().cloned().fold(0.0, f64::max);
    let rounding = 1e-14 * wmax + 1e-14 * lk.prefactor * tail.abs();
    let tail_error = bound * lk.prefactor + rounding;
    // exact symmetry: average over sign flips removes rounding asymmetry
    symmetrize(&mut table, n, d);
    let axis_split = split.into_iter().map(|v| v * lk.prefactor).collect();
    Ok(PeriodizedKernel {
        d,
        n,
        spacing,
        side: n as f64 * spacing,
        family: spec.family,
        p: spec.p,
        table,
        tail_error,
        image_radius: r,
        axis_split,
    })
}

/// Plain image sums over |k|_inf <= r for every offset; also the axis-0 split.
fn image_box_sum(lk: &LatticeKernel, n: usize, r: usize) -> (Vec<f64>, Vec<f64>) {
    let d = lk.d;
    let cells = n.pow(d as u32);
    let ni = n as i64;
    let ri = r as i64;
    let side = 2 * r + 1;
    let images = side.pow(d as u32);
    let results: Vec<(f64, f64)> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let delta = unravel(idx, n, d);
            // centered representative
            let dc: Vec<i64> = delta.iter().map(|&x| if 2 * x as i64 >= ni { x as i64 - ni } else { x as i64 }).collect();
            let mut m = vec![0i64; d];
            let mut sum = 0.0;
            let mut split = 0.0;
            let mut comp = 0.0;
            for im in 0..images {
                let mut rem = im;
                let mut zero = true;
                for j in 0..d {
                    let k = (rem % side) as i64 - ri;
                    rem /= side;
                    m[j] = dc[j] + ni * k;
                    if m[j] != 0 {
                        zero = false;
                    }
                }
                if zero {
                    continue;
                }
                let v = lk.g(&m);
                // Kahan summation keeps the long sums accurate
                let y = v - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
                if m[0] > 0 {
                    split += v;
                } else if m[0] < 0 {
                    split -= v;
                }
            }
            (sum, split)
        })
        .collect();
    let table: Vec<f64> = results.iter().map(|x| x.0).collect();
    let mut split_row = vec![0.0; n];
    for (idx, &(_, s)) in results.iter().enumerate() {
        split_row[idx % n] += s;
    }
    (table, split_row)
}

fn symmetrize(table: &mut [f64], n: usize, d: usize) {
    let cells = table.len();
    let mut out = vec![0.0; cells];
    let flips = 1usize << d;
    for idx in 0..cells {
        let c = unravel(idx, n, d);
        let mut acc = 0.0;
        for f in 0..flips {
            let mut c2 = c.clone();
            for j in 0..d {
                if f >> j & 1 == 1 {
                    c2[j] = (n - c2[j]) % n;
                }
            }
            acc += table[ravel(&c2, n)];
        }
        out[idx] = acc / flips as f64;
    }
    table.copy_from_slice(&out);
}

/// Row-major index -> coordinates, coordinate 0 fastest.
pub fn unravel(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut c = vec![0; d];
    for x in c.iter_mut() {
        *x = idx % n;
        idx /= n;
    }
    c
}

pub fn ravel(c: &[usize], n: usize) -> usize {
    let mut idx = 0;
    for &x in c.iter().rev() {
        idx = idx * n + x;
    }
    idx
}

impl PeriodizedKernel {
    pub fn at(&self, delta: &[usize]) -> f64 {
        self.table[ravel(delta, self.n)]
    }

    /// Sum of the table over all offsets except zero's own entry is included
    /// (it holds only the images of the origin).
    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }

    /// Two-sided reduced periodization along one axis: sum over the other coordinates.
    pub fn reduced_row(&self) -> Vec<f64> {
        let mut row = vec![0.0; self.n];
        for (idx, &w) in self.table.iter().enumerate() {
            row[idx % self.n] += w;
        }
        row
    }

    /// One-sided reduced periodization: images with positive axis coordinate only.
    pub fn one_sided_row(&self) -> Vec<f64> {
        self.reduced_row().iter().zip(&self.axis_split).map(|(a, s)| 0.5 * (a + s)).collect()
    }
}

/// `sum_{y_1 > 0, y' in Z^(d-1)} y_1 |y|^(-p)` with a certified bound. Returns (value, bound).
pub fn euclid_half_moment(d: usize, p: f64, tol: f64) -> Result<(f64, f64)> {
    if !(p >= d as f64 + 2.0) {
        return Err(Error::Precondition(format!("p = {p} < d + 2")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    match d {
        1 => {
            let (v, e) = hurwitz_zeta(p - 1.0, 1.0);
            Ok((v, e))
        }
        2 | 3 => {
            let bound = |a: usize| half_moment_bound(d, p, a);
            let mut a = 16usize;
            while bound(a) > tol {
                let ratio = bound(a) / tol;
                let next = (a as f64 * ratio.powf(1.0 / (p + 1.0 - d as f64)) * 1.05).ceil() as usize;
                a = next.max(a + 1);
                let pts = (a as f64) * (2.0 * a as f64 + 1.0).powi(d as i32 - 1);
                if pts > 2.0e9 {
                    return Err(Error::Tolerance {
                        what: "critical-constant lattice sum beyond budget".into(),
                        tol,
                        achieved: bound(a),
                    });
                }
            }
            let v = half_moment_box(d, p, a) + half_moment_tail(d, p, a);
            Ok((v, bound(a)))
        }
        _ => Err(Error::Precondition("lattice sums implemented for d <= 3".into())),
    }
}

fn half_moment_box(d: usize, p: f64, a: usize) -> f64 {
    let ai = a as i64;
    let e = -0.5 * p;
    let rows: Vec<f64> = (1..=ai)
        .into_par_iter()
        .map(|m1| {
            let x = (m1 * m1) as f64;
            let mut s = 0.0;
            match d {
                2 => {
                    for m2 in -ai..=ai {
                        s += (x + (m2 * m2) as f64).powf(e);
                    }
                }
                _ => {
                    for m2 in -ai..=ai {
                        let y = x + (m2 * m2) as f64;
                        for m3 in -ai..=ai {
                            s += (y + (m3 * m3) as f64).powf(e);
                        }
                    }
                }
            }
            m1 as f64 * s
        })
        .collect();
    // sum small terms first
    rows.iter().rev().sum()
}

fn side_face_integral(d: usize, p: f64) -> f64 {
    // int_0^1 u1 int_{[-1,1]^(d-2)} (1 + u1^2 + |v|^2)^(-p/2) dv du1
    match d {
        2 => panels(&|u: f64| u * (1.0 + u * u).powf(-p / 2.0), 0.0, 1.0),
        3 => panels(
            &|u: f64| {
                let g = |v: f64| (1.0 + u * u + v * v).powf(-p / 2.0);
                u * 2.0 * panels(&g, 0.0, 1.0)
            },
            0.0,
            1.0,
        ),
        _ => unreachable!(),
    }
}

fn half_moment_tail(d: usize, p: f64, a: usize) -> f64 {
    let b = a as f64 + 0.5;
    let df = d as f64;
    let half = b.powf(df + 1.0 - p) / (p - df - 1.0)
        * (cube_face_integral(d - 1, p) + 2.0 * (df - 1.0) * side_face_integral(d, p));
    let slab_hi = 0.125 * slab_exterior(d, p, b);
    let slab_lo = slab_hi * (1.0 + 0.25 / (b * b)).powf(-0.5 * p);
    half - 0.5 * (slab_hi + slab_lo)
}

/// `int_{|x'|_inf > b} |x'|^(-p)` over R^(d-1).
fn slab_exterior(d: usize, p: f64, b: f64) -> f64 {
    let m = d - 1;
    b.powf(m as f64 - p) / (p - m as f64) * 2.0 * m as f64 * cube_face_integral(m - 1, p)
}

fn half_moment_bound(d: usize, p: f64, a: usize) -> f64 {
    let df = d as f64;
    let af = a as f64;
    let b = af + 0.5;
    let shrink = (1.0 - df.sqrt() / (2.0 * (af + 1.0))).powf(-(p + 1.0));
    let midpoint = df / 24.0 * p * (p + 3.0) * shrink * power_tail_bound(d, p + 1.0, af);
    let slab_hi = 0.125 * slab_exterior(d, p, b);
    let slab_lo = slab_hi * (1.0 + 0.25 / (b * b)).powf(-0.5 * p);
    midpoint + 0.5 * (slab_hi - slab_lo) + 1e-15 * b.powf(df + 1.0 - p)
}

/// First moment `sum_{zeta in kappa Z^d} w(zeta) |zeta_1|` of the lattice weights.
/// Returns (value, bound).
pub fn lattice_first_moment(spec: &KernelSpec, spacing: f64, tol: f64) -> Result<(f64, f64)> {
    let lk = LatticeKernel::new(spec, spacing)?;
    let scale = 2.0 * spacing * lk.prefactor;
    match spec.family {
        KernelFamily::Euclidean => {
            let (v, e) = euclid_half_moment(spec.d, spec.p, tol / scale)?;
            Ok((scale * v, scale * e))
        }
        KernelFamily::OneNorm => {
            let (v, e) = one_norm_half_moment(spec.d, spec.p, lk.shift)?;
            Ok((scale * v, scale * e))
        }
    }
}

/// `sum_{m_1 >= 1, m'} m_1 (|m|_1 + b)^(-p)` grouped by t = |m|_1.
fn one_norm_half_moment(d: usize, p: f64, b: f64) -> Result<(f64, f64)> {
    let weight = |t: u64| -> f64 { (1..=t).map(|m1| m1 as f64 * l1_sphere_count(d - 1, t - m1)).sum() };
    let t0 = (d + 2) as u64;
    let mut direct = 0.0;
    for t in 1..=t0 {
        direct += weight(t) * (t as f64 + b).powf(-p);
    }
    // weight(t) is a polynomial of degree d; expand in u = t + b
    let k = d + 1;
    let us: Vec<f64> = (0..k).map(|i| (t0 + 1 + i as u64) as f64 + b).collect();
    let ys: Vec<f64> = (0..k).map(|i| weight(t0 + 1 + i as u64)).collect();
    let coef = solve_vandermonde(&us, &ys);
    let mut tail = 0.0;
    let mut err = 0.0;
    for (j, c) in coef.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let (z, e) = hurwitz_zeta(p - j as f64, (t0 + 1) as f64 + b);
        tail += c * z;
        err += c.abs() * e;
    }
    let v = direct + tail;
    Ok((v, err + 1e-13 * v.abs()))
}

/// Coefficients c with sum_j c_j u_i^j = y_i.
fn solve_vandermonde(u: &[f64], y: &[f64]) -> Vec<f64> {
    let k = u.len();
    let mut a: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| u[i].powi(j as i32)).chain([y[i]]).collect()).collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, piv);
        for row in 0..k {
            if row != col {
                let f = a[row][col] / a[col][col];
                for c in col..=k {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}
