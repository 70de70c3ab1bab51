//! Periodic cell configurations on the lattice torus, slices and boundary gaps.

use crate::error::{Error, Result};
use crate::kernels::{ravel, unravel};
use serde::{Deserialize, Serialize};

/// A periodic union of cells on `(kappa Z / n kappa Z)^d`, axis 0 fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusConfig {
    pub d: usize,
    pub n: usize,
    pub spacing: f64,
    pub cells: Vec<bool>,
}

impl TorusConfig {
    pub fn new(d: usize, n: usize, spacing: f64, cells: Vec<bool>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::Precondition("d and n must be positive".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Precondition("spacing must be positive".into()));
        }
        if cells.len() != n.pow(d as u32) {
            return Err(Error::Precondition(format!("expected {} cells, got {}", n.pow(d as u32), cells.len())));
        }
        Ok(Self { d, n, spacing, cells })
    }

    pub fn empty(d: usize, n: usize, spacing: f64) -> Self {
        Self { d, n, spacing, cells: vec![false; n.pow(d as u32)] }
    }

    pub fn full(d: usize, n: usize, spacing: f64) -> Self {
        Self { d, n, spacing, cells: vec![true; n.pow(d as u32)] }
    }

    /// Cells from the low bits of `bits`, cell i = bit i.
    pub fn from_bits(d: usize, n: usize, spacing: f64, bits: u64) -> Self {
        let len = n.pow(d as u32);
        Self { d, n, spacing, cells: (0..len).map(|i| bits >> i & 1 == 1).collect() }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Torus side L = n kappa.
    pub fn side(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_trivial(&self) -> bool {
        let m = self.count();
        m == 0 || m == self.len()
    }

    pub fn get(&self, coords: &[usize]) -> bool {
        self.cells[ravel(coords, self.n)]
    }

    /// Value at integer coordinates reduced periodically.
    pub fn get_wrapped(&self, coords: &[i64]) -> bool {
        let n = self.n as i64;
        let c: Vec<usize> = coords.iter().map(|&x| x.rem_euclid(n) as usize).collect();
        self.get(&c)
    }

    pub fn coords(&self, idx: usize) -> Vec<usize> {
        unravel(idx, self.n, self.d)
    }

    pub fn complement(&self) -> Self {
        Self { cells: self.cells.iter().map(|c| !c).collect(), ..self.clone() }
    }

    /// Shift every cell by `shift` (cell x goes to x + shift).
    pub fn translate(&self, shift: &[i64]) -> Self {
        let n = self.n as i64;
        let mut out = vec![false; self.len()];
        for (idx, &c) in self.cells.iter().enumerate() {
            let x = self.coords(idx);
            let y: Vec<usize> = x.iter().zip(shift).map(|(&a, &s)| (a as i64 + s).rem_euclid(n) as usize).collect();
            out[ravel(&y, self.n)] = c;
        }
        Self { cells: out, ..self.clone() }
    }

    /// New axis j takes old axis perm[j].
    pub fn permute_axes(&self, perm: &[usize]) -> Self {
        let mut out = vec![false; self.len()];
        for (idx, &c) in self.cells.iter().enumerate() {
            let x = self.coords(idx);
            let y: Vec<usize> = perm.iter().map(|&a| x[a]).collect();
            out[ravel(&y, self.n)] = c;
        }
        Self { cells: out, ..self.clone() }
    }

    pub fn reflect(&self, axis: usize) -> Self {
        let mut out = vec![false; self.len()];
        for (idx, &c) in self.cells.iter().enumerate() {
            let mut x = self.coords(idx);
            x[axis] = (self.n - x[axis]) % self.n;
            out[ravel(&x, self.n)] = c;
        }
        Self { cells: out, ..self.clone() }
    }

    /// Axis along which the set is a (nontrivial) union of stripes, if any.
    pub fn stripe_axis(&self) -> Option<usize> {
        if self.is_trivial() {
            return None;
        }
        (0..self.d).find(|&axis| {
            self.cells.iter().enumerate().all(|(idx, &c)| {
                let x = self.coords(idx);
                let mut base = vec![0; self.d];
                base[axis] = x[axis];
                self.get(&base) == c
            })
        })
    }

    /// The stripe spec if the set is periodic stripes of equal width.
    pub fn stripe_spec(&self) -> Option<StripeSpec> {
        let axis = self.stripe_axis()?;
        let sl = slice(self, axis, &vec![0; self.d - 1]).ok()?;
        let gaps = sl.gaps();
        let h = gaps[0];
        if gaps.iter().any(|g| (g - h).abs() > 1e-9 * h) {
            return None;
        }
        // phase: start of a filled interval, lattice point of its first cell
        let k = (0..self.n).find(|&j| {
            let mut c = vec![0; self.d];
            c[axis] = j;
            let mut p = c.clone();
            p[axis] = (j + self.n - 1) % self.n;
            self.get(&c) && !self.get(&p)
        })?;
        Some(StripeSpec { direction: axis, width: h, phase: k as f64 * self.spacing })
    }
}

/// One-dimensional periodic slice: jumps sorted in [0, period).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice1D {
    pub period: f64,
    pub jumps: Vec<f64>,
    /// Value just to the right of t = 0; for jump-free slices this
    /// distinguishes empty from full.
    pub starts_inside: bool,
}

impl Slice1D {
    pub fn new(period: f64, mut jumps: Vec<f64>, starts_inside: bool) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Precondition("period must be positive".into()));
        }
        if jumps.len() % 2 != 0 {
            return Err(Error::Precondition("a periodic set has an even number of jumps".into()));
        }
        jumps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if jumps.iter().any(|&s| !(0.0..period).contains(&s)) {
            return Err(Error::Precondition("jumps must lie in [0, period)".into()));
        }
        if jumps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("jumps must be distinct".into()));
        }
        Ok(Self { period, jumps, starts_inside })
    }

    /// Number of boundary points per period.
    pub fn perimeter(&self) -> usize {
        self.jumps.len()
    }

    pub fn value_at(&self, t: f64) -> bool {
        let t = t.rem_euclid(self.period);
        let crossed = self.jumps.iter().filter(|&&s| s > 0.0 && s <= t).count();
        self.starts_inside ^ (crossed % 2 == 1)
    }

    /// Gap from jump k to jump k+1 (cyclically).
    pub fn gaps(&self) -> Vec<f64> {
        let m = self.jumps.len();
        (0..m)
            .map(|k| {
                let next = if k + 1 < m { self.jumps[k + 1] } else { self.jumps[0] + self.period };
                next - self.jumps[k]
            })
            .collect()
    }

    fn jump_index(&self, s: f64) -> Result<usize> {
        if self.jumps.is_empty() {
            return Err(Error::Precondition("slice has no boundary points".into()));
        }
        let tol = 1e-9 * self.period;
        self.jumps
            .iter()
            .position(|&x| (x - s).abs() <= tol || (x - s).abs() >= self.period - tol)
            .ok_or_else(|| Error::Precondition(format!("{s} is not a boundary point")))
    }

    /// (s - s^-, s^+ - s) for the boundary point s.
    pub fn neighbor_gaps(&self, s: f64) -> Result<(f64, f64)> {
        let k = self.jump_index(s)?;
        let g = self.gaps();
        let m = g.len();
        Ok((g[(k + m - 1) % m], g[k]))
    }

    /// Filled intervals (start, end) with start in [0, period), end possibly past it.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        if self.jumps.is_empty() {
            return if self.starts_inside { vec![(0.0, self.period)] } else { vec![] };
        }
        let m = self.jumps.len();
        let g = self.gaps();
        (0..m)
            .filter(|&k| self.value_at(self.jumps[k] + 0.5 * g[k]))
            .map(|k| (self.jumps[k], self.jumps[k] + g[k]))
            .collect()
    }
}

/// Cell j covers `[kappa (j - 1/2), kappa (j + 1/2))`; jumps sit at half-integers.
pub fn slice(cfg: &TorusConfig, axis: usize, index: &[usize]) -> Result<Slice1D> {
    if axis >= cfg.d || index.len() + 1 != cfg.d || index.iter().any(|&i| i >= cfg.n) {
        return Err(Error::Precondition("slice index out of range".into()));
    }
    let line = line_values(cfg, axis, index);
    Ok(slice_from_line(&line, cfg.spacing))
}

fn line_values(cfg: &TorusConfig, axis: usize, index: &[usize]) -> Vec<bool> {
    let mut c = Vec::with_capacity(cfg.d);
    c.extend_from_slice(&index[..axis]);
    c.push(0);
    c.extend_from_slice(&index[axis..]);
    (0..cfg.n)
        .map(|j| {
            c[axis] = j;
            cfg.get(&c)
        })
        .collect()
}

pub fn slice_from_line(line: &[bool], spacing: f64) -> Slice1D {
    let n = line.len();
    let period = n as f64 * spacing;
    let mut jumps = Vec::new();
    for j in 0..n {
        if line[j] != line[(j + n - 1) % n] {
            let pos = (j as f64 - 0.5) * spacing;
            jumps.push(if pos < 0.0 { pos + period } else { pos });
        }
    }
    jumps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Slice1D { period, jumps, starts_inside: line[0] }
}

/// Perpendicular index tuples for slices along `axis`, in row-major order.
pub fn slice_indices(d: usize, n: usize) -> Vec<Vec<usize>> {
    let count = n.pow(d as u32 - 1);
    (0..count).map(|k| unravel(k, n, d - 1)).collect()
}

pub fn slices_along(cfg: &TorusConfig, axis: usize) -> Vec<Slice1D> {
    slice_indices(cfg.d, cfg.n).iter().map(|ix| slice(cfg, axis, ix).expect("valid index")).collect()
}

/// Rebuild a configuration from all slices along one axis.
pub fn from_slices(d: usize, n: usize, spacing: f64, axis: usize, slices: &[Slice1D]) -> Result<TorusConfig> {
    let idx = slice_indices(d, n);
    if slices.len() != idx.len() {
        return Err(Error::Precondition("wrong number of slices".into()));
    }
    let mut cfg = TorusConfig::empty(d, n, spacing);
    for (ix, sl) in idx.iter().zip(slices) {
        let mut c = Vec::with_capacity(d);
        c.extend_from_slice(&ix[..axis]);
        c.push(0);
        c.extend_from_slice(&ix[axis..]);
        for j in 0..n {
            c[axis] = j;
            let k = ravel(&c, n);
            cfg.cells[k] = sl.value_at(j as f64 * spacing);
        }
    }
    Ok(cfg)
}

/// Ordered-pair perimeter: every interface facet counts twice, weighted kappa^(d-1).
pub fn perimeter_1(cfg: &TorusConfig) -> f64 {
    let n = cfg.n;
    let mut count = 0usize;
    for (idx, &c) in cfg.cells.iter().enumerate() {
        let mut stride = 1;
        for _ in 0..cfg.d {
            let coord = (idx / stride) % n;
            let fwd = if coord + 1 == n { idx + stride - n * stride } else { idx + stride };
            let bwd = if coord == 0 { idx + (n - 1) * stride } else { idx - stride };
            count += (cfg.cells[fwd] != c) as usize + (cfg.cells[bwd] != c) as usize;
            stride *= n;
        }
    }
    count as f64 * cfg.spacing.powi(cfg.d as i32 - 1)
}

/// `min(z_+, s - s^-) + min(z_-, s^+ - s)`.
pub fn eta(sl: &Slice1D, s: f64, z: f64) -> Result<f64> {
    let (back, fwd) = sl.neighbor_gaps(s)?;
    Ok(z.max(0.0).min(back) + (-z).max(0.0).min(fwd))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripeSpec {
    pub direction: usize,
    pub width: f64,
    pub phase: f64,
}

/// Cells whose lattice coordinate along the stripe axis lies in `[2kh + phase, (2k+1)h + phase)`.
pub fn make_stripes(spec: &StripeSpec, d: usize, n: usize, spacing: f64) -> Result<TorusConfig> {
    if spec.direction >= d {
        return Err(Error::Precondition("stripe direction out of range".into()));
    }
    let ratio = 2.0 * spec.width / spacing;
    let r = ratio.round();
    if r < 1.0 || (ratio - r).abs() > 1e-9 * ratio || n % (r as usize) != 0 {
        return Err(Error::Precondition(format!(
            "2h/kappa = {ratio} must be an integer dividing n = {n}"
        )));
    }
    let period = 2.0 * spec.width;
    let mut cfg = TorusConfig::empty(d, n, spacing);
    for idx in 0..cfg.len() {
        let x = unravel(idx, n, d)[spec.direction] as f64 * spacing;
        let t = (x - spec.phase).rem_euclid(period);
        // snap to tolerate rounding of the phase
        let t = if (period - t) < 1e-12 * period { 0.0 } else { t };
        cfg.cells[idx] = t < spec.width - 1e-12 * period;
    }
    Ok(cfg)
}

/// Index maps of the symmetry group (translations, axis permutations, reflections).
pub struct SymmetryGroup {
    pub maps: Vec<Vec<usize>>,
}

impl SymmetryGroup {
    pub fn new(d: usize, n: usize) -> Self {
        let len = n.pow(d as u32);
        let mut maps = Vec::new();
        for perm in permutations(d) {
            for flips in 0..(1usize << d) {
                for t in 0..len {
                    let shift = unravel(t, n, d);
                    let map: Vec<usize> = (0..len)
                        .map(|idx| {
                            let x = unravel(idx, n, d);
                            let y: Vec<usize> = (0..d)
                                .map(|j| {
                                    let v = x[perm[j]];
                                    let v = if flips >> j & 1 == 1 { (n - v) % n } else { v };
                                    (v + shift[j]) % n
                                })
                                .collect();
                            ravel(&y, n)
                        })
                        .collect();
                    maps.push(map);
                }
            }
        }
        maps.sort();
        maps.dedup();
        Self { maps }
    }

    /// Lexicographically minimal image (cell 0 first, false < true), including complements.
    pub fn canonical(&self, cells: &[bool]) -> Vec<bool> {
        let mut best: Option<Vec<bool>> = None;
        let mut img = vec![false; cells.len()];
        for map in &self.maps {
            for (src, &dst) in map.iter().enumerate() {
                img[dst] = cells[src];
            }
            for flip in [false, true] {
                let cand: Vec<bool> = img.iter().map(|&c| c ^ flip).collect();
                if best.as_ref().is_none_or(|b| cand < *b) {
                    best = Some(cand);
                }
            }
        }
        best.unwrap_or_default()
    }
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, d - 1);
            out.push(q);
        }
    }
    out
}

pub fn canonical_form(cfg: &TorusConfig) -> TorusConfig {
    let g = SymmetryGroup::new(cfg.d, cfg.n);
    TorusConfig { cells: g.canonical(&cfg.cells), ..cfg.clone() }
}

pub fn complement(cfg: &TorusConfig) -> TorusConfig {
    cfg.complement()
}
