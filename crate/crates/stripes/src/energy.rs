//! Critical constants, the discrete functional, its rescaling and the
//! perimeter / G / I decomposition.

use crate::error::{Error, Result};
use crate::kernels::{
    euclid_half_moment, lattice_first_moment, periodize_cells, unravel, KernelFamily, KernelSpec, PeriodizedKernel,
};
use crate::lattice::{perimeter_1, Slice1D, TorusConfig};
use crate::special::image_sum;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Largest cell count evaluated by direct convolution.
pub const DIRECT_CONVOLUTION_MAX: usize = 4096;

/// Relative accuracy of periodized tables built here (in units of the nearest-neighbour weight).
pub const DEFAULT_TABLE_TOL: f64 = 1e-11;

/// `sum_{y_1>0, y'} y_1 |y|^(-p)`; returns (value, certified error).
pub fn jc_dsc(d: usize, p: f64, tol: f64) -> Result<(f64, f64)> {
    euclid_half_moment(d, p, tol)
}

/// `int |z_1| (|z|_1 + 1)^(-p) dz = 2 C_q / ((q-1)(q-2))`.
pub fn jc_continuum(d: usize, p: f64) -> Result<f64> {
    let spec = KernelSpec::one_norm(d, p, 1.0)?;
    let q = spec.q();
    Ok(2.0 * spec.c_q() / ((q - 1.0) * (q - 2.0)))
}

/// `phi(x) = sum_delta W(delta) a(x + delta)` on the torus.
pub fn periodic_field(table: &[f64], a: &[f64], n: usize, d: usize) -> Vec<f64> {
    if a.len() <= DIRECT_CONVOLUTION_MAX {
        direct_field(table, a, n, d)
    } else {
        fft_field(table, a, n, d)
    }
}

fn shifted_index(x: &[usize], delta: &[usize], n: usize) -> usize {
    let mut idx = 0;
    for j in (0..x.len()).rev() {
        let mut c = x[j] + delta[j];
        if c >= n {
            c -= n;
        }
        idx = idx * n + c;
    }
    idx
}

pub fn direct_field(table: &[f64], a: &[f64], n: usize, d: usize) -> Vec<f64> {
    let len = a.len();
    let coords: Vec<Vec<usize>> = (0..len).map(|i| unravel(i, n, d)).collect();
    (0..len)
        .map(|x| {
            let mut s = 0.0;
            for (k, &w) in table.iter().enumerate() {
                let y = shifted_index(&coords[x], &coords[k], n);
                s += w * a[y];
            }
            s
        })
        .collect()
}

fn fft_axes(data: &mut [Complex<f64>], n: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let len = data.len();
    let mut line = vec![Complex::new(0.0, 0.0); n];
    let mut stride = 1;
    for _ in 0..d {
        for start in 0..len {
            // visit each line once: the coordinate along this axis must be zero
            if (start / stride) % n != 0 {
                continue;
            }
            for (j, v) in line.iter_mut().enumerate() {
                *v = data[start + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[start + j * stride] = *v;
            }
        }
        stride *= n;
    }
}

/// FFT path; W is symmetric so convolution and correlation coincide.
pub fn fft_field(table: &[f64], a: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut fw: Vec<Complex<f64>> = table.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_axes(&mut fa, n, d, false);
    fft_axes(&mut fw, n, d, false);
    for (x, w) in fa.iter_mut().zip(&fw) {
        *x *= w;
    }
    fft_axes(&mut fa, n, d, true);
    let scale = 1.0 / a.len() as f64;
    fa.iter().map(|c| c.re * scale).collect()
}

/// `sum_x sum_delta W(delta) |chi(x) - chi(x+delta)|`, via the field of the complement.
pub fn nonlocal_sum(cfg: &TorusConfig, kernel: &PeriodizedKernel) -> f64 {
    let outside: Vec<f64> = cfg.cells.iter().map(|&c| if c { 0.0 } else { 1.0 }).collect();
    let psi = periodic_field(&kernel.table, &outside, cfg.n, cfg.d);
    2.0 * cfg.cells.iter().zip(&psi).filter(|(c, _)| **c).map(|(_, v)| v).sum::<f64>()
}

/// Same sum by explicit double loop over cell pairs.
pub fn nonlocal_sum_direct(cfg: &TorusConfig, kernel: &PeriodizedKernel) -> f64 {
    let n = cfg.n;
    let d = cfg.d;
    let len = cfg.len();
    let coords: Vec<Vec<usize>> = (0..len).map(|i| unravel(i, n, d)).collect();
    let mut s = 0.0;
    for x in 0..len {
        for y in 0..len {
            if cfg.cells[x] == cfg.cells[y] {
                continue;
            }
            let delta: Vec<usize> = (0..d).map(|j| (coords[y][j] + n - coords[x][j]) % n).collect();
            s += kernel.at(&delta);
        }
    }
    s
}

fn check_torus(cfg: &TorusConfig, kernel: &PeriodizedKernel) -> Result<()> {
    if cfg.n != kernel.n || cfg.d != kernel.d {
        return Err(Error::Precondition("kernel table does not match the torus".into()));
    }
    Ok(())
}

/// `(1/L^d)(J Per - sum_x sum_{y != x} |chi(x) - chi(y)| |x-y|^(-p))` on the unit lattice.
pub fn energy_dsc(cfg: &TorusConfig, j: f64, kernel: &PeriodizedKernel) -> Result<f64> {
    check_torus(cfg, kernel)?;
    if kernel.family != KernelFamily::Euclidean || (kernel.spacing - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition("energy_dsc needs the Euclidean kernel on the unit lattice".into()));
    }
    let vol = (cfg.n as f64).powi(cfg.d as i32);
    Ok((j * perimeter_1(cfg) - nonlocal_sum(cfg, kernel)) / vol)
}

/// Double-loop variant of [`energy_dsc`].
pub fn energy_dsc_direct(cfg: &TorusConfig, j: f64, kernel: &PeriodizedKernel) -> Result<f64> {
    check_torus(cfg, kernel)?;
    let vol = (cfg.n as f64).powi(cfg.d as i32);
    Ok((j * perimeter_1(cfg) - nonlocal_sum_direct(cfg, kernel)) / vol)
}

/// Interface facets normal to each axis, weighted by kappa^(d-1) (each facet once).
pub fn facet_areas(cfg: &TorusConfig) -> Vec<f64> {
    let n = cfg.n;
    let area = cfg.spacing.powi(cfg.d as i32 - 1);
    let mut out = vec![0.0; cfg.d];
    let mut stride = 1;
    for slot in out.iter_mut() {
        let mut count = 0usize;
        for (idx, &c) in cfg.cells.iter().enumerate() {
            let coord = (idx / stride) % n;
            let fwd = if coord + 1 == n { idx + stride - n * stride } else { idx + stride };
            count += (cfg.cells[fwd] != c) as usize;
        }
        *slot = count as f64 * area;
        stride *= n;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Ordered-pair perimeter (not divided by the volume).
    pub perimeter_term: f64,
    pub g: Vec<f64>,
    pub i_cross: Vec<f64>,
    pub total: f64,
    pub lower_bound: f64,
    pub residual: f64,
}

impl EnergyBreakdown {
    /// Flat record with fixed field names.
    pub fn record(&self) -> Vec<(String, f64)> {
        let mut r = vec![("perimeter_term".to_string(), self.perimeter_term)];
        for (i, v) in self.g.iter().enumerate() {
            r.push((format!("g_{}", i + 1), *v));
        }
        for (i, v) in self.i_cross.iter().enumerate() {
            r.push((format!("i_{}", i + 1), *v));
        }
        r.push(("total".into(), self.total));
        r.push(("lower_bound".into(), self.lower_bound));
        r.push(("residual".into(), self.residual));
        r
    }
}

/// Everything needed to evaluate the rescaled functional on one torus.
#[derive(Debug, Clone)]
pub struct EnergyContext {
    pub spec: KernelSpec,
    pub n: usize,
    pub spacing: f64,
    pub kernel: PeriodizedKernel,
    /// `sum_zeta w(zeta) |zeta_1|` over the infinite lattice.
    pub moment: f64,
    pub moment_error: f64,
    /// Two-sided reduced periodization along one axis.
    pub reduced: Vec<f64>,
}

impl EnergyContext {
    pub fn new(spec: &KernelSpec, n: usize, spacing: f64) -> Result<Self> {
        Self::with_tol(spec, n, spacing, DEFAULT_TABLE_TOL)
    }

    /// `rel_tol` is relative to the nearest-neighbour weight `kappa^(d-p)`.
    pub fn with_tol(spec: &KernelSpec, n: usize, spacing: f64, rel_tol: f64) -> Result<Self> {
        let unit = spacing.powf(spec.d as f64 - spec.p);
        let kernel = periodize_cells(spec, n, spacing, rel_tol * unit)?;
        let (moment, moment_error) = lattice_first_moment(spec, spacing, 1e-10 * unit * spacing)?;
        let reduced = kernel.reduced_row();
        Ok(Self { spec: *spec, n, spacing, kernel, moment, moment_error, reduced })
    }

    pub fn volume(&self) -> f64 {
        (self.n as f64 * self.spacing).powi(self.spec.d as i32)
    }

    fn check(&self, cfg: &TorusConfig) -> Result<()> {
        if cfg.n != self.n || cfg.d != self.spec.d || (cfg.spacing - self.spacing).abs() > 1e-12 * self.spacing {
            return Err(Error::Precondition("configuration does not match the energy context".into()));
        }
        Ok(())
    }

    /// Rescaled functional value.
    pub fn total(&self, cfg: &TorusConfig) -> Result<f64> {
        self.check(cfg)?;
        Ok(self.total_unchecked(cfg))
    }

    pub fn total_unchecked(&self, cfg: &TorusConfig) -> f64 {
        let kd = self.spacing.powi(self.spec.d as i32);
        let facets: f64 = facet_areas(cfg).iter().sum();
        (-perimeter_1(cfg) + self.moment * facets - kd * nonlocal_sum(cfg, &self.kernel)) / self.volume()
    }

    /// Same value through the double-loop nonlocal sum.
    pub fn total_direct(&self, cfg: &TorusConfig) -> Result<f64> {
        self.check(cfg)?;
        let kd = self.spacing.powi(self.spec.d as i32);
        let facets: f64 = facet_areas(cfg).iter().sum();
        Ok((-perimeter_1(cfg) + self.moment * facets - kd * nonlocal_sum_direct(cfg, &self.kernel)) / self.volume())
    }

    /// `kappa^d sum_delta Khat_per(delta) sum_x |chi(x) - chi(x + delta e_axis)|`
    pub fn axis_interaction(&self, cfg: &TorusConfig, axis: usize) -> f64 {
        let n = self.n;
        let stride = n.pow(axis as u32);
        let mut s = 0.0;
        for delta in 1..n {
            let mut count = 0usize;
            for (idx, &c) in cfg.cells.iter().enumerate() {
                let coord = (idx / stride) % n;
                let t = coord + delta;
                let y = if t >= n { idx + delta * stride - n * stride } else { idx + delta * stride };
                count += (cfg.cells[y] != c) as usize;
            }
            s += self.reduced[delta] * count as f64;
        }
        s * self.spacing.powi(self.spec.d as i32)
    }

    /// Per cell x: `sum_delta W(delta) |chi(x)-chi(x+delta_i)| |chi(x)-chi(x+delta_perp)|`.
    pub fn cross_density(&self, cfg: &TorusConfig, axis: usize) -> Vec<f64> {
        let n = self.n;
        let d = self.spec.d;
        let len = cfg.len();
        let mut out = vec![0.0; len];
        if d == 1 {
            return out;
        }
        let coords: Vec<Vec<usize>> = (0..len).map(|i| unravel(i, n, d)).collect();
        for (k, &w) in self.kernel.table.iter().enumerate() {
            let delta = &coords[k];
            let mut along = vec![0; d];
            along[axis] = delta[axis];
            let mut perp = delta.clone();
            perp[axis] = 0;
            if delta[axis] == 0 || perp.iter().all(|&v| v == 0) {
                continue;
            }
            for x in 0..len {
                let c = cfg.cells[x];
                if cfg.cells[shifted_index(&coords[x], &along, n)] != c
                    && cfg.cells[shifted_index(&coords[x], &perp, n)] != c
                {
                    out[x] += w;
                }
            }
        }
        out
    }

    /// Cross-interaction `(2/d) kappa^d sum_x (cross density)`.
    fn cross_interaction(&self, cfg: &TorusConfig, axis: usize) -> f64 {
        let d = self.spec.d;
        2.0 / d as f64 * self.spacing.powi(d as i32) * self.cross_density(cfg, axis).iter().sum::<f64>()
    }

    pub fn decompose(&self, cfg: &TorusConfig) -> Result<EnergyBreakdown> {
        self.check(cfg)?;
        let d = self.spec.d;
        let per = perimeter_1(cfg);
        let facets = facet_areas(cfg);
        let g: Vec<f64> =
            (0..d).map(|i| facets[i] * self.moment - self.axis_interaction(cfg, i)).collect();
        let i_cross: Vec<f64> = (0..d).map(|i| self.cross_interaction(cfg, i)).collect();
        let total = self.total_unchecked(cfg);
        let lower_bound = (-per + g.iter().sum::<f64>() + i_cross.iter().sum::<f64>()) / self.volume();
        Ok(EnergyBreakdown { perimeter_term: per, g, i_cross, total, lower_bound, residual: total - lower_bound })
    }
}

/// Rescaled discrete functional; the spacing of `cfg` must equal `tau^(1/beta)`.
pub fn energy_rescaled_dsc(cfg: &TorusConfig, spec: &KernelSpec) -> Result<f64> {
    let kappa = spec.offset();
    if !(kappa > 0.0) || (cfg.spacing - kappa).abs() > 1e-9 * kappa {
        return Err(Error::Precondition(format!(
            "spacing {} must equal tau^(1/beta) = {kappa}",
            cfg.spacing
        )));
    }
    EnergyContext::new(spec, cfg.n, cfg.spacing)?.total(cfg)
}

/// Decomposition with the spacing taken from the configuration.
pub fn decompose(cfg: &TorusConfig, spec: &KernelSpec) -> Result<EnergyBreakdown> {
    EnergyContext::new(spec, cfg.n, cfg.spacing)?.decompose(cfg)
}

/// `C_q (a + x)^(2-q) / ((q-1)(q-2))`: the even antiderivative pair of the reduced kernel.
pub fn reduced_potential(x: f64, spec: &KernelSpec) -> f64 {
    let q = spec.q();
    spec.c_q() * (spec.offset() + x).powf(2.0 - q) / ((q - 1.0) * (q - 2.0))
}

/// Boundary points with orientation (+1 entering the set, -1 leaving).
pub fn oriented_jumps(sl: &Slice1D) -> Vec<(f64, f64)> {
    if sl.jumps.is_empty() {
        return vec![];
    }
    let first_enters = if sl.jumps[0] > 0.0 { !sl.starts_inside } else { sl.starts_inside };
    sl.jumps
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, if (k % 2 == 0) == first_enters { 1.0 } else { -1.0 }))
        .collect()
}

/// `int Khat(z) [Per |z| - int_0^L |chi(x) - chi(x+z)| dx] dz` for a periodic 1D set.
///
/// The bracket vanishes near z = 0 and has second derivative
/// `-2 sum sigma_j sigma_k delta(z - (s_k - s_j))`, so two integrations by parts
/// against the potential `Q` leave lattice-image sums of `Q`.
pub fn g1d_deficit(sl: &Slice1D, spec: &KernelSpec) -> Result<f64> {
    Ok(g1d_deficit_with_error(sl, spec)?.0)
}

pub fn g1d_deficit_with_error(sl: &Slice1D, spec: &KernelSpec) -> Result<(f64, f64)> {
    if spec.family != KernelFamily::OneNorm {
        return Err(Error::Precondition("the continuum deficit uses the one-norm family".into()));
    }
    let pts = oriented_jumps(sl);
    if pts.is_empty() {
        return Ok((0.0, 0.0));
    }
    let q = spec.q();
    let a = spec.offset();
    let c = spec.c_q() / ((q - 1.0) * (q - 2.0));
    let period = sl.period;
    let mut total = 0.0;
    let mut err = 0.0;
    let mut terms = Vec::with_capacity(2 * pts.len());
    for &(sj, wj) in &pts {
        terms.clear();
        for &(sk, wk) in &pts {
            let fwd = (sk - sj).rem_euclid(period);
            let back = (sj - sk).rem_euclid(period);
            terms.push((wk, a + if fwd == 0.0 { period } else { fwd }));
            terms.push((wk, a + if back == 0.0 { period } else { back }));
        }
        let (v, e) = image_sum(&terms, q - 2.0, period);
        total += wj * v;
        err += e;
    }
    Ok((-2.0 * c * total, 2.0 * c * err))
}
