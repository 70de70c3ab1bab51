//! Ground-state search: exhaustive enumeration, stripe-width scans and simulated annealing.

use crate::energy::{energy_dsc, EnergyContext};
use crate::error::{Error, Result};
use crate::kernels::{unravel, PeriodizedKernel};
use crate::lattice::{make_stripes, StripeSpec, SymmetryGroup, TorusConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Energies closer than this (relative to `max(1, |best|)`) count as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exhaustive,
    Anneal,
    StripeScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub method: Method,
    pub best_energy: f64,
    /// Canonical forms, sorted lexicographically.
    pub minimizers: Vec<TorusConfig>,
    pub is_stripe: Vec<bool>,
    pub stripe_spec: Option<StripeSpec>,
    /// Configurations evaluated.
    pub visited: u64,
    /// Minimizing configurations before symmetry reduction (exhaustive search only).
    pub raw_minimizer_count: u64,
}

/// What is being minimized.
#[derive(Debug, Clone)]
pub enum Objective {
    /// The rescaled functional on a torus of spacing kappa.
    Rescaled(EnergyContext),
    /// The unscaled discrete functional with coupling J on the unit lattice.
    Discrete { j: f64, kernel: PeriodizedKernel },
}

impl Objective {
    pub fn d(&self) -> usize {
        match self {
            Objective::Rescaled(c) => c.spec.d,
            Objective::Discrete { kernel, .. } => kernel.d,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Objective::Rescaled(c) => c.n,
            Objective::Discrete { kernel, .. } => kernel.n,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Objective::Rescaled(c) => c.spacing,
            Objective::Discrete { kernel, .. } => kernel.spacing,
        }
    }

    pub fn energy(&self, cfg: &TorusConfig) -> f64 {
        match self {
            Objective::Rescaled(c) => c.total_unchecked(cfg),
            Objective::Discrete { j, kernel } => energy_dsc(cfg, *j, kernel).unwrap_or(f64::NAN),
        }
    }
}

/// Largest number of cells enumerated by default for each dimension.
pub fn default_max_cells(d: usize) -> usize {
    match d {
        1 => 20,
        2 => 25,
        _ => 8,
    }
}

fn is_tie(e: f64, best: f64) -> bool {
    e <= best + TIE_TOL * best.abs().max(1.0)
}

fn finish(method: Method, best: f64, raw: Vec<TorusConfig>, visited: u64) -> SearchReport {
    let raw_count = raw.len() as u64;
    let mut minimizers: Vec<TorusConfig> = Vec::new();
    if let Some(first) = raw.first() {
        let group = SymmetryGroup::new(first.d, first.n);
        let mut forms: Vec<Vec<bool>> = raw.iter().map(|c| group.canonical(&c.cells)).collect();
        forms.sort();
        forms.dedup();
        minimizers = forms.into_iter().map(|cells| TorusConfig { cells, ..first.clone() }).collect();
    }
    let is_stripe: Vec<bool> = minimizers.iter().map(|c| c.stripe_axis().is_some()).collect();
    let stripe_spec = minimizers.iter().find_map(|c| c.stripe_spec());
    SearchReport { method, best_energy: best, minimizers, is_stripe, stripe_spec, visited, raw_minimizer_count: raw_count }
}

/// Exact global minimizers over all `2^(n^d)` configurations.
pub fn enumerate(obj: &Objective, max_cells: Option<usize>) -> Result<SearchReport> {
    let d = obj.d();
    let n = obj.n();
    let cells = n.pow(d as u32);
    let limit = max_cells.unwrap_or_else(|| default_max_cells(d));
    if cells > limit || cells > 40 {
        return Err(Error::Budget(format!("{cells} cells exceed the enumeration budget of {limit}")));
    }
    let total: u64 = 1 << cells;
    let spacing = obj.spacing();
    let chunk = (total / 256).max(1);
    let partial: Vec<(f64, Vec<u64>, u64)> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            let mut best = f64::INFINITY;
            let mut hits: Vec<u64> = Vec::new();
            let mut cfg = TorusConfig::empty(d, n, spacing);
            for bits in lo..hi {
                for (k, cell) in cfg.cells.iter_mut().enumerate() {
                    *cell = bits >> k & 1 == 1;
                }
                let e = obj.energy(&cfg);
                if e < best && !is_tie(e, best) {
                    best = e;
                    hits.clear();
                }
                if is_tie(e, best) {
                    hits.push(bits);
                    best = best.min(e);
                }
            }
            (best, hits, hi - lo)
        })
        .collect();
    let best = partial.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let visited: u64 = partial.iter().map(|p| p.2).sum();
    // recheck ties against the global best
    let raw: Vec<TorusConfig> = partial
        .iter()
        .filter(|p| is_tie(p.0, best))
        .flat_map(|p| p.1.iter().copied())
        .map(|bits| TorusConfig::from_bits(d, n, spacing, bits))
        .filter(|c| is_tie(obj.energy(c), best))
        .collect();
    Ok(finish(Method::Exhaustive, best, raw, visited))
}

/// Widths `k kappa` with `2k | n`.
pub fn admissible_widths(n: usize) -> Vec<usize> {
    (1..=n / 2).filter(|k| n % (2 * k) == 0).collect()
}

/// Best periodic stripe on the torus, over all admissible widths.
pub fn stripe_scan(obj: &Objective) -> Result<SearchReport> {
    let d = obj.d();
    let n = obj.n();
    let spacing = obj.spacing();
    let widths = admissible_widths(n);
    if widths.is_empty() {
        return Err(Error::Precondition(format!("no stripe width fits a torus of {n} cells")));
    }
    let mut scored = Vec::new();
    for &k in &widths {
        let spec = StripeSpec { direction: 0, width: k as f64 * spacing, phase: 0.0 };
        let cfg = make_stripes(&spec, d, n, spacing)?;
        let e = obj.energy(&cfg);
        scored.push((e, cfg));
    }
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let raw: Vec<TorusConfig> = scored.iter().filter(|s| is_tie(s.0, best)).map(|s| s.1.clone()).collect();
    Ok(finish(Method::StripeScan, best, raw, widths.len() as u64))
}

/// Energy of every admissible stripe width, as (width in cells, energy).
pub fn stripe_profile(obj: &Objective) -> Result<Vec<(usize, f64)>> {
    let d = obj.d();
    let n = obj.n();
    let spacing = obj.spacing();
    admissible_widths(n)
        .into_iter()
        .map(|k| {
            let spec = StripeSpec { direction: 0, width: k as f64 * spacing, phase: 0.0 };
            Ok((k, obj.energy(&make_stripes(&spec, d, n, spacing)?)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t0: f64,
    /// Temperature factor applied after every sweep of `n^d` proposals.
    pub cooling: f64,
    pub steps: u64,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { t0: 0.3, cooling: 0.998, steps: 3_000_000, seed: 1 }
    }
}

/// Metropolis state with the field `phi = W * chi` kept current.
pub struct Annealer<'a> {
    ctx: &'a EnergyContext,
    pub cfg: TorusConfig,
    phi: Vec<f64>,
    coords: Vec<Vec<usize>>,
    /// Energy times volume, updated incrementally.
    scaled_energy: f64,
    kernel_sum: f64,
    self_weight: f64,
}

impl<'a> Annealer<'a> {
    pub fn new(ctx: &'a EnergyContext, start: TorusConfig) -> Result<Self> {
        if start.n != ctx.n || start.d != ctx.spec.d {
            return Err(Error::Precondition("start configuration does not match the context".into()));
        }
        let len = start.len();
        let coords = (0..len).map(|i| unravel(i, ctx.n, ctx.spec.d)).collect();
        let mut a = Self {
            ctx,
            cfg: start,
            phi: vec![0.0; len],
            coords,
            scaled_energy: 0.0,
            kernel_sum: ctx.kernel.total(),
            self_weight: ctx.kernel.table[0],
        };
        a.resync();
        Ok(a)
    }

    /// Recompute the field and energy from scratch.
    pub fn resync(&mut self) {
        let chi: Vec<f64> = self.cfg.cells.iter().map(|&c| c as u8 as f64).collect();
        self.phi = crate::energy::periodic_field(&self.ctx.kernel.table, &chi, self.ctx.n, self.ctx.spec.d);
        self.scaled_energy = self.ctx.total_unchecked(&self.cfg) * self.ctx.volume();
    }

    pub fn energy(&self) -> f64 {
        self.scaled_energy / self.ctx.volume()
    }

    fn neighbor(&self, x: usize, axis: usize, forward: bool) -> usize {
        let n = self.ctx.n;
        let stride = n.pow(axis as u32);
        let c = self.coords[x][axis];
        let t = if forward { (c + 1) % n } else { (c + n - 1) % n };
        x + t * stride - c * stride
    }

    /// Energy change of flipping cell `x`, times the volume.
    pub fn scaled_delta(&self, x: usize) -> f64 {
        let ctx = self.ctx;
        let d = ctx.spec.d;
        let inside = self.cfg.cells[x];
        let mut dfacets = 0.0;
        for axis in 0..d {
            for fwd in [true, false] {
                let y = self.neighbor(x, axis, fwd);
                if y == x {
                    continue;
                }
                dfacets += if self.cfg.cells[y] == inside { 1.0 } else { -1.0 };
            }
        }
        let area = ctx.spacing.powi(d as i32 - 1);
        let dnl = if inside {
            2.0 * (-self.kernel_sum + 2.0 * self.phi[x] - self.self_weight)
        } else {
            2.0 * (self.kernel_sum - 2.0 * self.phi[x] - self.self_weight)
        };
        (ctx.moment - 2.0) * area * dfacets - ctx.spacing.powi(d as i32) * dnl
    }

    pub fn flip(&mut self, x: usize) {
        let delta = self.scaled_delta(x);
        let sign = if self.cfg.cells[x] { -1.0 } else { 1.0 };
        self.cfg.cells[x] = !self.cfg.cells[x];
        let n = self.ctx.n;
        let d = self.ctx.spec.d;
        let xc = &self.coords[x];
        for (y, phi) in self.phi.iter_mut().enumerate() {
            let yc = &self.coords[y];
            let mut idx = 0;
            for j in (0..d).rev() {
                idx = idx * n + (yc[j] + n - xc[j]) % n;
            }
            *phi += sign * self.ctx.kernel.table[idx];
        }
        self.scaled_energy += delta;
    }

    /// Flip cells greedily until no single flip lowers the energy.
    pub fn descend(&mut self) -> u64 {
        let mut flips = 0;
        loop {
            let mut improved = false;
            for x in 0..self.cfg.len() {
                if self.scaled_delta(x) < -1e-12 * self.scaled_energy.abs().max(1.0) {
                    self.flip(x);
                    flips += 1;
                    improved = true;
                }
            }
            if !improved {
                return flips;
            }
        }
    }
}

/// One Metropolis chain followed by a zero-temperature descent.
pub fn anneal(start: &TorusConfig, ctx: &EnergyContext, schedule: &Schedule) -> Result<SearchReport> {
    if !(schedule.t0 >= 0.0) || !(schedule.cooling > 0.0 && schedule.cooling <= 1.0) {
        return Err(Error::Precondition("need t0 >= 0 and cooling in (0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut state = Annealer::new(ctx, start.clone())?;
    let len = start.len();
    let vol = ctx.volume();
    let mut temp = schedule.t0;
    let mut best = (state.energy(), state.cfg.clone());
    for step in 0..schedule.steps {
        let x = rng.gen_range(0..len);
        let de = state.scaled_delta(x) / vol;
        let accept = de <= 0.0 || (temp > 0.0 && rng.gen::<f64>() < (-de / temp).exp());
        if accept {
            state.flip(x);
            if state.energy() < best.0 {
                best = (state.energy(), state.cfg.clone());
            }
        }
        if (step + 1) % len as u64 == 0 {
            temp *= schedule.cooling;
        }
        if (step + 1) % (64 * len as u64) == 0 {
            state.resync();
        }
    }
    state.cfg = best.1;
    state.resync();
    state.descend();
    state.resync();
    let e = state.energy();
    Ok(finish(Method::Anneal, e, vec![state.cfg], schedule.steps))
}

/// Uniformly random configuration from a seed.
pub fn random_config(d: usize, n: usize, spacing: f64, seed: u64) -> TorusConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = (0..n.pow(d as u32)).map(|_| rng.gen::<bool>()).collect();
    TorusConfig { d, n, spacing, cells }
}

/// Independent chains from random starts with seeds `seed, seed+1, ...`; keeps the best.
pub fn anneal_restarts(ctx: &EnergyContext, schedule: &Schedule, restarts: usize) -> Result<SearchReport> {
    let reports: Vec<SearchReport> = (0..restarts as u64)
        .into_par_iter()
        .map(|k| {
            let seed = schedule.seed.wrapping_add(k);
            let start = random_config(ctx.spec.d, ctx.n, ctx.spacing, seed ^ 0x9e37_79b9_7f4a_7c15);
            anneal(&start, ctx, &Schedule { seed, ..*schedule })
        })
        .collect::<Result<_>>()?;
    let best = reports.iter().map(|r| r.best_energy).fold(f64::INFINITY, f64::min);
    let raw: Vec<TorusConfig> = reports
        .iter()
        .filter(|r| is_tie(r.best_energy, best))
        .flat_map(|r| r.minimizers.iter().cloned())
        .collect();
    let visited = reports.iter().map(|r| r.visited).sum();
    Ok(finish(Method::Anneal, best, raw, visited))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    fn ctx(d: usize, n: usize, p: f64, tau: f64) -> EnergyContext {
        let spec = KernelSpec::one_norm(d, p, tau).unwrap();
        EnergyContext::new(&spec, n, spec.offset()).unwrap()
    }

    #[test]
    fn widths_divide_the_torus() {
        assert_eq!(admissible_widths(8), vec![1, 2, 4]);
        assert_eq!(admissible_widths(12), vec![1, 2, 3, 6]);
        assert!(admissible_widths(7).is_empty());
    }

    #[test]
    fn incremental_delta_matches_recompute() {
        let c = ctx(2, 6, 4.0, 0.3);
        let start = random_config(2, 6, c.spacing, 5);
        let mut a = Annealer::new(&c, start).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let x = rng.gen_range(0..36);
            a.flip(x);
            let exact = c.total_unchecked(&a.cfg);
            assert!((a.energy() - exact).abs() < 1e-10, "{} {}", a.energy(), exact);
        }
    }

    #[test]
    fn enumeration_counts_every_configuration() {
        let c = ctx(1, 8, 3.0, 0.5);
        let r = enumerate(&Objective::Rescaled(c), None).unwrap();
        assert_eq!(r.visited, 256);
        assert!(r.raw_minimizer_count >= r.minimizers.len() as u64);
    }

    #[test]
    fn anneal_is_deterministic() {
        let c = ctx(2, 6, 4.0, 0.3);
        let s = Schedule { t0: 0.5, cooling: 0.9, steps: 3000, seed: 4 };
        let start = random_config(2, 6, c.spacing, 1);
        let a = anneal(&start, &c, &s).unwrap();
        let b = anneal(&start, &c, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn descent_never_raises_energy() {
        let c = ctx(2, 6, 4.0, 0.3);
        let mut a = Annealer::new(&c, random_config(2, 6, c.spacing, 3)).unwrap();
        let before = a.energy();
        a.descend();
        assert!(a.energy() <= before + 1e-12);
    }
}
