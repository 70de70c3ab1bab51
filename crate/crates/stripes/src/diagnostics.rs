//! Local energy contributions on sub-cubes, the averaging identity, the stripe
//! distance `D_eta`, the region decomposition and report-only inequality checks.

use crate::energy::EnergyContext;
use crate::error::{Error, Result};
use crate::kernels::{unravel, KernelSpec};
use crate::lattice::{StripeSpec, TorusConfig};
use crate::search::{stripe_scan, Objective};
use crate::energy::g1d_deficit;
use crate::stripes1d::{e_inf_dsc, f1_energy, optimal_h, r_tau_1d, OneDConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// A boundary point of a lattice slice, in doubled coordinates (faces even, centers odd).
#[derive(Debug, Clone)]
struct JumpPoint {
    axis: usize,
    pos: Vec<usize>,
    r: f64,
    v: f64,
}

/// Per-jump and per-cell local densities of one configuration.
#[derive(Debug, Clone)]
pub struct LocalField {
    d: usize,
    n: usize,
    spacing: f64,
    jumps: Vec<JumpPoint>,
    /// `w[axis][cell]`, already integrated over the cell.
    w: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergy {
    pub cube_center: Vec<f64>,
    pub side: f64,
    /// Per direction.
    pub f_bar: Vec<f64>,
    pub total: f64,
    pub r_sum: Vec<f64>,
    pub v_sum: Vec<f64>,
    pub w_int: Vec<f64>,
}

fn line_cells(cfg: &TorusConfig, axis: usize, base: usize) -> Vec<bool> {
    let stride = cfg.n.pow(axis as u32);
    (0..cfg.n).map(|u| cfg.cells[base + u * stride]).collect()
}

fn line_bases(d: usize, n: usize, axis: usize) -> Vec<usize> {
    (0..n.pow(d as u32)).filter(|&idx| unravel(idx, n, d)[axis] == 0).collect()
}

impl LocalField {
    pub fn new(ctx: &EnergyContext, cfg: &TorusConfig) -> Result<Self> {
        if cfg.n != ctx.n || cfg.d != ctx.spec.d {
            return Err(Error::Precondition("configuration does not match the energy context".into()));
        }
        let d = cfg.d;
        let n = cfg.n;
        let kappa = ctx.spacing;
        let kd = kappa.powi(d as i32);
        let area = kappa.powi(d as i32 - 1);
        let one_sided = ctx.kernel.one_sided_row();
        let w: Vec<Vec<f64>> = (0..d)
            .map(|i| ctx.cross_density(cfg, i).into_iter().map(|c| kd * c / d as f64).collect())
            .collect();
        let mut jumps = Vec::new();
        for axis in 0..d {
            let stride = n.pow(axis as u32);
            for base in line_bases(d, n, axis) {
                let chi = line_cells(cfg, axis, base);
                let faces: Vec<usize> = (0..n).filter(|&j| chi[(j + n - 1) % n] != chi[j]).collect();
                if faces.is_empty() {
                    continue;
                }
                let fwd: Vec<f64> = (0..n)
                    .map(|u| (1..n).filter(|&dl| chi[(u + dl) % n] != chi[u]).map(|dl| one_sided[dl]).sum())
                    .collect();
                let back: Vec<f64> = (0..n)
                    .map(|u| (1..n).filter(|&dl| chi[(u + n - dl) % n] != chi[u]).map(|dl| one_sided[dl]).sum())
                    .collect();
                let m = faces.len();
                let perp = unravel(base, n, d);
                for k in 0..m {
                    let s = faces[k];
                    let prev = faces[(k + m - 1) % m];
                    let next = faces[(k + 1) % m];
                    let left = (s + n - prev - 1) % n + 1;
                    let right = (next + n - s - 1) % n + 1;
                    let deficit: f64 = (0..left).map(|t| fwd[(prev + t) % n]).sum::<f64>()
                        + (0..right).map(|t| back[(s + t) % n]).sum::<f64>();
                    let r = area * (ctx.moment - 2.0 - kappa * deficit);
                    let v = 0.5
                        * (0..left + right).map(|t| w[axis][base + ((prev + t) % n) * stride]).sum::<f64>();
                    let mut pos: Vec<usize> = perp.iter().map(|&c| 2 * c + 1).collect();
                    pos[axis] = 2 * s;
                    jumps.push(JumpPoint { axis, pos, r, v });
                }
            }
        }
        Ok(Self { d, n, spacing: kappa, jumps, w })
    }

    fn in_cube(&self, pos: &[usize], z: &[usize], m: usize) -> bool {
        let nn = 2 * self.n;
        pos.iter().zip(z).all(|(&p, &zc)| (p + nn + m - (2 * zc + 1) % nn) % nn < 2 * m)
    }

    /// Local energy on the cube of `m` cells per side centred at cell `z`.
    pub fn local_energy(&self, z: &[usize], m: usize) -> LocalEnergy {
        let d = self.d;
        let mut r_sum = vec![0.0; d];
        let mut v_sum = vec![0.0; d];
        let mut w_int = vec![0.0; d];
        for j in &self.jumps {
            if self.in_cube(&j.pos, z, m) {
                r_sum[j.axis] += j.r;
                v_sum[j.axis] += j.v;
            }
        }
        for idx in 0..self.n.pow(d as u32) {
            let pos: Vec<usize> = unravel(idx, self.n, d).iter().map(|&c| 2 * c + 1).collect();
            if self.in_cube(&pos, z, m) {
                for (i, wi) in w_int.iter_mut().enumerate() {
                    *wi += self.w[i][idx];
                }
            }
        }
        let side = m as f64 * self.spacing;
        let vol = side.powi(d as i32);
        let f_bar: Vec<f64> = (0..d).map(|i| (r_sum[i] + v_sum[i] + w_int[i]) / vol).collect();
        LocalEnergy {
            cube_center: z.iter().map(|&c| (c as f64 + 0.5) * self.spacing).collect(),
            side,
            total: f_bar.iter().sum(),
            f_bar,
            r_sum,
            v_sum,
            w_int,
        }
    }

    /// Local energies for every cell-centred cube, indexed like the cells.
    pub fn all_cubes(&self, m: usize) -> Vec<LocalEnergy> {
        (0..self.n.pow(self.d as u32))
            .into_par_iter()
            .map(|idx| self.local_energy(&unravel(idx, self.n, self.d), m))
            .collect()
    }

    /// `(1/L^d) int F_bar(Q_l(z)) dz`, exact through the cell-centred cubes.
    pub fn average(&self, m: usize) -> f64 {
        let all = self.all_cubes(m);
        all.iter().map(|e| e.total).sum::<f64>() / all.len() as f64
    }
}

/// Local energy of one cube.
pub fn local_energy(ctx: &EnergyContext, cfg: &TorusConfig, z: &[usize], m: usize) -> Result<LocalEnergy> {
    Ok(LocalField::new(ctx, cfg)?.local_energy(z, m))
}

fn cube_start(z: usize, m: usize, n: usize) -> usize {
    (z + n - m / 2) % n
}

/// Fraction of each axis-`axis` layer of the cube that lies in the set.
fn layer_profile(cfg: &TorusConfig, z: &[usize], m: usize, axis: usize) -> Vec<f64> {
    let d = cfg.d;
    let n = cfg.n;
    let starts: Vec<usize> = z.iter().map(|&c| cube_start(c, m, n)).collect();
    let mut filled = vec![0usize; m];
    let total = m.pow(d as u32);
    for k in 0..total {
        let off = unravel(k, m, d);
        let mut idx = 0;
        for j in (0..d).rev() {
            idx = idx * n + (starts[j] + off[j]) % n;
        }
        if cfg.cells[idx] {
            filled[off[axis]] += 1;
        }
    }
    let layer = (total / m) as f64;
    filled.iter().map(|&f| f as f64 / layer).collect()
}

/// Minimal mismatch of the half-cell slots against in/out labels whose inner runs
/// are at least `min_run` slots long.
fn stripe_dp(slots: &[f64], min_run: usize) -> f64 {
    let g = min_run.max(1);
    // state: (label, run capped at g, boundary seen)
    let idx = |lab: usize, run: usize, seen: usize| (lab * (g + 1) + run) * 2 + seen;
    let size = 2 * (g + 1) * 2;
    let mut cost = vec![f64::INFINITY; size];
    let slot_cost = |c: f64, lab: usize| if lab == 1 { 1.0 - c } else { c };
    for lab in 0..2 {
        cost[idx(lab, 1, 0)] = slot_cost(slots[0], lab);
    }
    for &c in &slots[1..] {
        let mut next = vec![f64::INFINITY; size];
        for lab in 0..2 {
            for run in 1..=g {
                for seen in 0..2 {
                    let cur = cost[idx(lab, run, seen)];
                    if !cur.is_finite() {
                        continue;
                    }
                    let keep = idx(lab, (run + 1).min(g), seen);
                    next[keep] = next[keep].min(cur + slot_cost(c, lab));
                    if seen == 0 || run >= g {
                        let sw = idx(1 - lab, 1, 1);
                        next[sw] = next[sw].min(cur + slot_cost(c, 1 - lab));
                    }
                }
            }
        }
        cost = next;
    }
    cost.into_iter().fold(f64::INFINITY, f64::min)
}

/// `D^i_eta` on the cube of `m` cells centred at cell `z`; stripe boundaries on the half-cell grid.
pub fn stripe_distance(cfg: &TorusConfig, z: &[usize], m: usize, axis: usize, eta: f64) -> Result<f64> {
    if m == 0 || m > cfg.n || axis >= cfg.d || z.len() != cfg.d {
        return Err(Error::Precondition("cube must fit in the torus and axis must exist".into()));
    }
    let profile = layer_profile(cfg, z, m, axis);
    let slots: Vec<f64> = profile.iter().flat_map(|&c| [c, c]).collect();
    let min_run = ((2.0 * eta / cfg.spacing) - 1e-9).ceil().max(1.0) as usize;
    Ok(stripe_dp(&slots, min_run) / slots.len() as f64)
}

/// `D_eta = min_i D^i_eta`.
pub fn stripe_distance_min(cfg: &TorusConfig, z: &[usize], m: usize, eta: f64) -> Result<f64> {
    (0..cfg.d).map(|i| stripe_distance(cfg, z, m, i, eta)).try_fold(f64::INFINITY, |a, b| Ok(a.min(b?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    MinusOne,
    Zero,
    /// Close to stripes varying along this axis only.
    Axis(usize),
}

impl Label {
    pub fn to_char(self) -> char {
        match self {
            Label::MinusOne => '-',
            Label::Zero => '0',
            Label::Axis(i) => char::from_digit(i as u32 + 1, 10).unwrap_or('?'),
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '-' => Some(Label::MinusOne),
            '0' => Some(Label::Zero),
            _ => c.to_digit(10).filter(|&v| v >= 1).map(|v| Label::Axis(v as usize - 1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    /// Cube side in cells.
    pub l_cells: usize,
    pub eta: f64,
    pub delta: f64,
    pub rho: f64,
    /// Threshold expected for the local energy on `A_0` (reported only).
    pub big_m: f64,
}

impl RegionParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.l_cells == 0 || self.l_cells >= n {
            return Err(Error::Precondition(format!("cube side {} must be in [1, {n})", self.l_cells)));
        }
        if !(self.eta > 0.0) || !(self.delta > 0.0 && self.delta < 0.5) || !(self.rho >= 0.0) {
            return Err(Error::Precondition("need eta > 0, 0 < delta < 1/2 and rho >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub d: usize,
    pub n: usize,
    pub spacing: f64,
    pub labels: Vec<Label>,
    pub params: RegionParams,
    /// `D^i_eta` per cell and axis.
    pub distances: Vec<Vec<f64>>,
}

impl RegionMap {
    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

fn dilate(mask: &[bool], d: usize, n: usize, radius: usize) -> Vec<bool> {
    let mut out = mask.to_vec();
    let r = radius.min(n / 2) as i64;
    if r == 0 {
        return out;
    }
    let mut cur = mask.to_vec();
    for axis in 0..d {
        let stride = n.pow(axis as u32);
        for (idx, o) in out.iter_mut().enumerate() {
            let c = (idx / stride) % n;
            *o = (-r..=r).any(|t| {
                let cc = (c as i64 + t).rem_euclid(n as i64) as usize;
                cur[idx + cc * stride - c * stride]
            });
        }
        cur = out.clone();
    }
    out
}

/// Labels every cell centre by the behaviour of the set on the surrounding cube.
pub fn region_decompose(cfg: &TorusConfig, params: &RegionParams) -> Result<RegionMap> {
    params.validate(cfg.n)?;
    let d = cfg.d;
    let n = cfg.n;
    let len = cfg.len();
    let m = params.l_cells;
    let distances: Vec<Vec<f64>> = (0..len)
        .into_par_iter()
        .map(|idx| {
            let z = unravel(idx, n, d);
            (0..d).map(|i| stripe_distance(cfg, &z, m, i, params.eta)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let far: Vec<bool> = distances.iter().map(|ds| ds.iter().cloned().fold(f64::INFINITY, f64::min) >= params.delta).collect();
    let double: Vec<bool> = distances.iter().map(|ds| ds.iter().filter(|&&v| v <= params.delta).count() >= 2).collect();
    let cells_of = |len: f64| (len / cfg.spacing + 1e-9).floor() as usize;
    let a0 = dilate(&far, d, n, cells_of(params.rho));
    let am1 = dilate(&double, d, n, cells_of(1.0));
    let labels = (0..len)
        .map(|idx| {
            if a0[idx] {
                Label::Zero
            } else if am1[idx] {
                Label::MinusOne
            } else {
                let close: Vec<usize> = (0..d).filter(|&i| distances[idx][i] <= params.delta).collect();
                match close.as_slice() {
                    [i] => Label::Axis(*i),
                    _ => Label::Zero,
                }
            }
        })
        .collect();
    Ok(RegionMap { d, n, spacing: cfg.spacing, labels, params: *params, distances })
}

/// Two half-tori of orthogonal stripes of `width` cells, meeting along two grain boundaries.
pub fn grain_boundary_fixture(n: usize, width: usize, spacing: f64) -> TorusConfig {
    let mut cfg = TorusConfig::empty(2, n, spacing);
    for idx in 0..cfg.len() {
        let c = unravel(idx, n, 2);
        let along = if c[0] < n / 2 { c[1] } else { c[0] };
        cfg.cells[idx] = (along / width) % 2 == 0;
    }
    cfg
}

/// Cell checkerboard.
pub fn checkerboard(d: usize, n: usize, spacing: f64) -> TorusConfig {
    let mut cfg = TorusConfig::empty(d, n, spacing);
    for idx in 0..cfg.len() {
        cfg.cells[idx] = unravel(idx, n, d).iter().sum::<usize>() % 2 == 0;
    }
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardReport {
    pub checkerboard_energy: f64,
    pub stripe_energy: f64,
    pub stripe_spec: Option<StripeSpec>,
    /// Sum of the cross terms on the checkerboard, per unit volume.
    pub cross_term: f64,
    /// The same at half the spacing on the same physical torus.
    pub cross_term_refined: f64,
}

/// Checkerboard against the best stripe on the same torus.
pub fn checkerboard_report(d: usize, n: usize, spacing: f64, spec: &KernelSpec) -> Result<CheckerboardReport> {
    if d < 2 || n % 2 != 0 {
        return Err(Error::Precondition("checkerboard needs d >= 2 and even n".into()));
    }
    let ctx = EnergyContext::new(spec, n, spacing)?;
    let board = checkerboard(d, n, spacing);
    let br = ctx.decompose(&board)?;
    let scan = stripe_scan(&Objective::Rescaled(ctx.clone()))?;
    let fine_ctx = EnergyContext::new(spec, 2 * n, spacing / 2.0)?;
    let fine = fine_ctx.decompose(&checkerboard(d, 2 * n, spacing / 2.0))?;
    Ok(CheckerboardReport {
        checkerboard_energy: br.total,
        stripe_energy: scan.best_energy,
        stripe_spec: scan.stripe_spec,
        cross_term: br.i_cross.iter().sum::<f64>() / ctx.volume(),
        cross_term_refined: fine.i_cross.iter().sum::<f64>() / fine_ctx.volume(),
    })
}

/// `int_x^inf rho Khat(rho) d rho`.
pub fn first_moment_tail(x: f64, spec: &KernelSpec) -> f64 {
    let a = spec.offset();
    let q = spec.q();
    spec.c_q() * ((a + x).powf(2.0 - q) / (q - 2.0) - a * (a + x).powf(1.0 - q) / (q - 1.0))
}

/// Largest gap `eta` for which `-1 + int_{2 eta}^inf rho Khat >= 0`; below it every jump has `r > 0`.
pub fn eta0_certified(spec: &KernelSpec) -> f64 {
    let f = |x: f64| first_moment_tail(2.0 * x, spec) - 1.0;
    let (mut lo, mut hi) = (1e-12, 1.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    if f(lo) <= 0.0 {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sign change of `r` at a jump with one gap `g` and the others of size `far`, by bisection.
pub fn eta0_bisection(spec: &KernelSpec, far: f64) -> Result<f64> {
    let r_at = |g: f64| -> Result<f64> {
        let cfg = OneDConfig::new(2.0 * far + 2.0 * g, vec![(0.0, g), (g + far, 2.0 * g + far)])?;
        r_tau_1d(&cfg, g, spec)
    };
    let (mut lo, mut hi) = (1e-9 * far, far);
    if r_at(hi)? > 0.0 || r_at(lo)? <= 0.0 {
        return Err(Error::Tolerance { what: "no sign change of r in the gap range".into(), tol: 0.0, achieved: far });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if r_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticItem {
    pub name: String,
    pub inequality: String,
    pub constant: f64,
    /// Smallest slack of the inequality over the samples, with the fitted constant.
    pub margin: f64,
    pub samples: usize,
}

impl DiagnosticItem {
    pub fn ok(&self) -> bool {
        self.samples > 0 && self.margin > 0.0 && self.constant.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub header: Vec<(String, String)>,
    pub items: Vec<DiagnosticItem>,
}

impl VerificationReport {
    pub fn all_ok(&self) -> bool {
        self.items.iter().all(DiagnosticItem::ok)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("verification report\n");
        for (k, v) in &self.header {
            let _ = writeln!(s, "  {k}: {v}");
        }
        for it in &self.items {
            let _ = writeln!(
                s,
                "[{}] {}\n    {}\n    fitted constant {:.6e}, margin {:.6e}, samples {}",
                if it.ok() { "ok" } else { "FAIL" },
                it.name,
                it.inequality,
                it.constant,
                it.margin,
                it.samples
            );
        }
        s
    }
}

/// Lower-bound shape `lhs >= c * rhs` with `c` half the smallest observed ratio.
fn fit_lower(name: &str, ineq: &str, pairs: &[(f64, f64)]) -> DiagnosticItem {
    let ratio = pairs.iter().filter(|p| p.1 > 0.0).map(|p| p.0 / p.1).fold(f64::INFINITY, f64::min);
    let c = 0.5 * ratio;
    let margin = pairs.iter().map(|p| p.0 - c * p.1).fold(f64::INFINITY, f64::min);
    DiagnosticItem { name: name.into(), inequality: ineq.into(), constant: c, margin, samples: pairs.len() }
}

/// Loss shape `lhs >= base - C * weight` over samples `(lhs, base, weight)`, with `C`
/// twice the largest observed deficit. Zero-weight samples must hold outright.
fn fit_loss(name: &str, ineq: &str, samples: &[(f64, f64, f64)]) -> DiagnosticItem {
    const SLACK: f64 = 1e-12;
    let worst = samples.iter().filter(|t| t.2 > 0.0).map(|t| (t.1 - t.0) / t.2).fold(0.0, f64::max);
    let c = 2.0 * worst + SLACK;
    let margin = samples
        .iter()
        .map(|t| if t.2 > 0.0 { t.0 - t.1 + c * t.2 } else { t.0 - t.1 + 1e-9 * t.1.abs().max(1.0) })
        .fold(f64::INFINITY, f64::min);
    DiagnosticItem { name: name.into(), inequality: ineq.into(), constant: c, margin, samples: samples.len() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub p: f64,
    pub tau: f64,
    pub n: usize,
    pub region: RegionParams,
    pub seed: u64,
    pub samples: usize,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            p: 4.0,
            tau: 0.25,
            n: 16,
            region: RegionParams { l_cells: 4, eta: 0.25, delta: 0.1, rho: 0.25, big_m: 0.0 },
            seed: 7,
            samples: 40,
        }
    }
}

fn random_torus(rng: &mut ChaCha8Rng, d: usize, n: usize, spacing: f64, fill: f64) -> TorusConfig {
    let cells = (0..n.pow(d as u32)).map(|_| rng.gen::<f64>() < fill).collect();
    TorusConfig { d, n, spacing, cells }
}

/// Runs every report-only diagnostic on the standard fixtures (d = 2 lattice, 1D continuum).
pub fn verification_report(params: &ReportParams) -> Result<VerificationReport> {
    let d = 2;
    let spec2 = KernelSpec::one_norm(d, params.p, params.tau)?;
    let spec1 = KernelSpec::one_norm(1, params.p - 1.0, params.tau)?;
    let kappa = spec2.offset();
    let n = params.n;
    let rp = params.region;
    rp.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut items = Vec::new();
    let beta = spec1.beta();

    // 1D continuum
    let opt = optimal_h(&spec1)?;
    let eta_cert = eta0_certified(&spec1);
    let eta_bis = eta0_bisection(&spec1, 4.0 * opt.h_star)?;
    let mut configs: Vec<OneDConfig> = (0..params.samples)
        .map(|_| OneDConfig::random(&mut rng, 4.0 * opt.h_star, 4, 1e-3 * opt.h_star))
        .collect();
    for _ in 0..params.samples / 4 {
        let g = rng.gen_range(0.05..1.0) * eta_cert;
        let u: Vec<f64> = (0..3).map(|_| rng.gen_range(eta_cert..2.0 * opt.h_star)).collect();
        configs.push(OneDConfig::new(g + u[0] + u[1] + u[2], vec![(0.0, g), (g + u[0], g + u[0] + u[1])])?);
    }
    let mut boundg = Vec::new();
    let mut perg = Vec::new();
    let mut tight = Vec::new();
    let mut interval = Vec::new();
    for cfg in &configs {
        let sl = cfg.to_slice();
        let g = g1d_deficit(&sl, &spec1)?;
        let gaps = sl.gaps();
        let k = gaps.len();
        let rhs: f64 = (0..k)
            .map(|j| {
                let cap = |x: f64| x.powf(-beta).min(1.0 / params.tau.max(1e-300));
                cap(gaps[j]) + cap(gaps[(j + k - 1) % k])
            })
            .sum();
        boundg.push((g, rhs));
        let delta = spec1.offset();
        perg.push((sl.perimeter() as f64 - 1.0, cfg.period / delta + delta.powf(beta) * g));
        let rs: Vec<f64> = sl.jumps.iter().map(|&s| r_tau_1d(cfg, s, &spec1)).collect::<Result<_>>()?;
        for (j, &s) in sl.jumps.iter().enumerate() {
            let (left, right) = sl.neighbor_gaps(s)?;
            if left.min(right) < eta_cert {
                tight.push(rs[j]);
            }
        }
        // windows of consecutive jumps starting anywhere, lengths up to the full period
        let l = cfg.period;
        for start in 0..k {
            let mut acc = 0.0;
            for len in 1..=k {
                acc += rs[(start + len - 1) % k];
                let a = sl.jumps[start] - 1e-9;
                let b = sl.jumps[(start + len - 1) % k] + if start + len - 1 >= k { l } else { 0.0 } + 1e-9;
                interval.push((acc, opt.c_star * (b - a), 1.0));
            }
        }
    }
    items.push(fit_lower(
        "slice deficit lower bound",
        "G1d(E) >= c * sum_x [min((x+ - x)^-beta, 1/tau) + min((x - x-)^-beta, 1/tau)]",
        &boundg,
    ));
    let worst_perg = perg.iter().map(|p| p.0 / p.1).fold(0.0, f64::max);
    let c_perg = 2.0 * worst_perg + 1e-12;
    items.push(DiagnosticItem {
        name: "perimeter control".into(),
        inequality: "Per - 1 <= C (L / delta + delta^beta G1d), delta = tau^(1/beta)".into(),
        constant: c_perg,
        margin: perg.iter().map(|p| c_perg * p.1 - p.0).fold(f64::INFINITY, f64::min),
        samples: perg.len(),
    });
    items.push(DiagnosticItem {
        name: "tight gaps give positive r".into(),
        inequality: format!("min gap < eta0 = {eta_cert:.6e} implies r > 0 (sign change on the test family at {eta_bis:.6e})"),
        constant: eta_cert,
        margin: if tight.is_empty() { eta_bis - eta_cert } else { tight.iter().cloned().fold(f64::INFINITY, f64::min) },
        samples: tight.len().max(1),
    });
    items.push(fit_loss("one-dimensional interval bound", "sum_{s in I} r(s) >= C* |I| - C0", &interval));

    // d = 2 lattice
    let ctx = EnergyContext::new(&spec2, n, kappa)?;
    let c_dsc = (1..=n / 2).filter_map(|k| e_inf_dsc(k, &spec2, kappa).ok()).fold(f64::INFINITY, f64::min);
    let m = rp.l_cells;
    let l = m as f64 * kappa;
    let mut fixtures: Vec<(String, TorusConfig)> = vec![
        ("grain boundary".into(), grain_boundary_fixture(n, 2, kappa)),
        ("stripes".into(), crate::lattice::make_stripes(&StripeSpec { direction: 0, width: 2.0 * kappa, phase: 0.0 }, d, n, kappa)?),
    ];
    for k in 0..4 {
        fixtures.push((format!("random {k}"), random_torus(&mut rng, d, n, kappa, 0.5)));
    }
    for k in 0..2 {
        fixtures.push((format!("near full {k}"), random_torus(&mut rng, d, n, kappa, 0.97)));
    }
    let mut avg_err: f64 = 0.0;
    let mut near_full = Vec::new();
    let mut lip = Vec::new();
    let mut line20 = Vec::new();
    let mut line27 = Vec::new();
    let mut line36 = Vec::new();
    let mut integral = Vec::new();
    let mut rigid = Vec::new();
    for (_, cfg) in &fixtures {
        let field = LocalField::new(&ctx, cfg)?;
        let cubes = field.all_cubes(m);
        let lb = ctx.decompose(cfg)?.lower_bound;
        let avg = cubes.iter().map(|c| c.total).sum::<f64>() / cubes.len() as f64;
        avg_err = avg_err.max((avg - lb).abs());
        let map = region_decompose(cfg, &rp)?;
        // near-full cubes
        for (idx, cube) in cubes.iter().enumerate() {
            let z = unravel(idx, n, d);
            let prof = layer_profile(cfg, &z, m, 0);
            let fill = prof.iter().sum::<f64>() / m as f64;
            let dl = fill.min(1.0 - fill);
            if dl <= 0.2 {
                // faces on the cube boundary see one layer outside
                near_full.push((cube.total, 0.0, dl + 1.0 / m as f64));
            }
            if map.labels[idx] == Label::Zero {
                rigid.push(cube.total);
            }
        }
        // Lipschitz in the centre
        for idx in 0..cfg.len() {
            let z = unravel(idx, n, d);
            for axis in 0..d {
                let mut z2 = z.clone();
                z2[axis] = (z2[axis] + 1) % n;
                let i2 = z2[0] + n * z2[1];
                for i in 0..d {
                    lip.push((map.distances[idx][i] - map.distances[i2][i]).abs() * l / kappa);
                }
            }
        }
        // line integrals of F_bar_i
        for axis in 0..d {
            let other = 1 - axis;
            for perp in 0..n {
                let at = |s: usize| if axis == 0 { s + n * perp } else { perp + n * s };
                let fvals: Vec<f64> = (0..n).map(|s| cubes[at(s)].f_bar[axis]).collect();
                let close: Vec<bool> = (0..n).map(|s| map.distances[at(s)][other] <= rp.delta).collect();
                for a in 0..n {
                    let mut acc = 0.0;
                    let mut all_close = true;
                    for len in 1..n {
                        let s = (a + len - 1) % n;
                        acc += kappa * fvals[s];
                        all_close &= close[s];
                        let jl = len as f64 * kappa;
                        if all_close {
                            line20.push((acc, 0.0, 1.0 / l));
                        }
                        if close[a] && close[(a + len) % n] {
                            line27.push((acc, c_dsc * jl, 1.0 / l));
                        } else {
                            line36.push((acc, c_dsc * jl, l));
                        }
                    }
                }
            }
        }
        // integral claim over the region decomposition
        let a_mask: Vec<bool> = map.labels.iter().map(|lb| matches!(lb, Label::Zero | Label::MinusOne)).collect();
        let a_size = a_mask.iter().filter(|&&b| b).count() as f64 * kappa.powi(d as i32);
        {
            for i in 0..d {
                let mut lhs = 0.0;
                for (idx, cube) in cubes.iter().enumerate() {
                    let cell = kappa.powi(d as i32);
                    if a_mask[idx] {
                        lhs += cell * cube.total / d as f64;
                    } else {
                        lhs += cell * cube.f_bar[i];
                    }
                }
                let ai = map.labels.iter().filter(|&&lb| lb == Label::Axis(i)).count() as f64 * kappa.powi(d as i32);
                integral.push((lhs, c_dsc * ai, a_size / l));
            }
        }
    }
    items.push(DiagnosticItem {
        name: "averaging identity".into(),
        inequality: "(1/L^d) int F_bar(Q_l(z)) dz = lower bound".into(),
        constant: avg_err,
        margin: 1e-8 - avg_err,
        samples: fixtures.len(),
    });
    items.push(fit_loss(
        "near-full cube",
        &format!("min(|Q \\ E|, |Q n E|) <= delta l^d implies F_bar >= -C (delta + kappa/l) (shape constant d/eta0 = {:.4})", d as f64 / eta_cert),
        &near_full,
    ));
    let lhat = lip.iter().cloned().fold(0.0, f64::max);
    items.push(DiagnosticItem {
        name: "Lipschitz stripe distance".into(),
        inequality: "|D(z) - D(z')| <= L_hat |z - z'| / l".into(),
        constant: 2.0 * lhat + 1e-12,
        margin: lip.iter().map(|v| 2.0 * lhat + 1e-12 - v).fold(f64::INFINITY, f64::min),
        samples: lip.len(),
    });
    items.push(fit_loss("line estimate near orthogonal stripes", "int_J F_bar_i >= -M0 / l", &line20));
    items.push(fit_loss("line estimate, close ends", "int_J F_bar_i >= |J| C* - M0 / l", &line27));
    items.push(fit_loss("line estimate, general ends", "int_J F_bar_i >= |J| C* - M0 l", &line36));
    items.push(fit_loss(
        "integral claim on the decomposition",
        "int_B F_bar_i + (1/d) int_A F_bar >= C* |A_i| - C_d |A| / l",
        &integral,
    ));
    let rigid_min = rigid.iter().cloned().fold(f64::INFINITY, f64::min);
    let m_fit = rigid_min - rigid_min.abs();
    items.push(DiagnosticItem {
        name: "local rigidity".into(),
        inequality: format!(
            "F_bar >= M on A_0 cells; smallest value {rigid_min:.6}, requested M = {} {}",
            rp.big_m,
            if rigid_min > rp.big_m { "exceeded" } else { "NOT exceeded at this tau and l" }
        ),
        constant: m_fit,
        margin: rigid_min - m_fit,
        samples: rigid.len(),
    });
    let board = checkerboard_report(d, n, kappa, &spec2)?;
    items.push(DiagnosticItem {
        name: "checkerboard exclusion".into(),
        inequality: format!(
            "checkerboard {:.6} > best stripe {:.6}; cross term {:.4} -> {:.4} at half spacing",
            board.checkerboard_energy, board.stripe_energy, board.cross_term, board.cross_term_refined
        ),
        constant: board.checkerboard_energy - board.stripe_energy,
        margin: board.checkerboard_energy - board.stripe_energy,
        samples: 1,
    });
    let header = vec![
        ("lattice".into(), format!("d = 2, p = {}, tau = {}, n = {n}, kappa = {kappa:.6}", params.p, params.tau)),
        ("continuum".into(), format!("d = 1, p = {}, h* = {:.6}, C* = {:.6}", params.p - 1.0, opt.h_star, opt.c_star)),
        ("discrete stripe optimum".into(), format!("{c_dsc:.6}")),
        ("cube".into(), format!("l = {l:.6} ({m} cells), eta = {}, delta = {}, rho = {}", rp.eta, rp.delta, rp.rho)),
        ("sample check".into(), format!("f1 of first sample = {:.6}", f1_energy(&configs[0], &spec1)?)),
    ];
    Ok(VerificationReport { header, items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_stripes;

    fn brute_distance(profile: &[f64], min_run: usize) -> f64 {
        let slots: Vec<f64> = profile.iter().flat_map(|&c| [c, c]).collect();
        let k = slots.len();
        let mut best = f64::INFINITY;
        for bits in 0u32..(1 << k) {
            let lab: Vec<usize> = (0..k).map(|j| (bits >> j & 1) as usize).collect();
            let bounds: Vec<usize> = (1..k).filter(|&j| lab[j] != lab[j - 1]).collect();
            if bounds.windows(2).any(|w| w[1] - w[0] < min_run) {
                continue;
            }
            let c: f64 = (0..k).map(|j| if lab[j] == 1 { 1.0 - slots[j] } else { slots[j] }).sum();
            best = best.min(c / k as f64);
        }
        best
    }

    #[test]
    fn dp_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let prof: Vec<f64> = (0..5).map(|_| rng.gen_range(0..5) as f64 / 4.0).collect();
            for g in 1..5 {
                let slots: Vec<f64> = prof.iter().flat_map(|&c| [c, c]).collect();
                let dp = stripe_dp(&slots, g) / slots.len() as f64;
                assert!((dp - brute_distance(&prof, g)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn checkerboard_distance_is_one_half() {
        let board = checkerboard(2, 8, 1.0);
        for i in 0..2 {
            let v = stripe_distance(&board, &[3, 3], 4, i, 0.5).unwrap();
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn stripes_and_empty_have_zero_distance() {
        let s = make_stripes(&StripeSpec { direction: 1, width: 2.0, phase: 0.0 }, 2, 8, 1.0).unwrap();
        assert_eq!(stripe_distance(&s, &[2, 5], 4, 1, 1.5).unwrap(), 0.0);
        let e = TorusConfig::empty(2, 8, 1.0);
        assert_eq!(stripe_distance(&e, &[0, 0], 4, 0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn regions_of_simple_fixtures() {
        let p = RegionParams { l_cells: 4, eta: 0.5, delta: 0.1, rho: 0.0, big_m: 0.0 };
        let s = make_stripes(&StripeSpec { direction: 0, width: 2.0, phase: 0.0 }, 2, 8, 1.0).unwrap();
        let map = region_decompose(&s, &p).unwrap();
        assert_eq!(map.count(Label::Axis(0)), 64);
        let map = region_decompose(&TorusConfig::empty(2, 8, 1.0), &p).unwrap();
        assert_eq!(map.count(Label::MinusOne), 64);
    }

    #[test]
    fn averaging_identity_on_random_config() {
        let spec = KernelSpec::one_norm(2, 4.0, 0.3).unwrap();
        let ctx = EnergyContext::new(&spec, 6, spec.offset()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = random_torus(&mut rng, 2, 6, spec.offset(), 0.5);
        let field = LocalField::new(&ctx, &cfg).unwrap();
        let lb = ctx.decompose(&cfg).unwrap().lower_bound;
        for m in [1, 2, 3] {
            assert!((field.average(m) - lb).abs() < 1e-9, "{} {lb}", field.average(m));
        }
    }
}
