//! Hurwitz zeta sums and shifted power series.
//!
//! Everything here evaluates sums of the form `sum_{t>=0} (x + t*period)^(-s)`
//! by Euler-Maclaurin summation. For `s <= 1` only zero-weight combinations
//! converge; those go through the regularized function [`hurwitz_zeta_reg`].

/// B_{2j} for j = 1..=12.
const BERNOULLI_2J: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

const EM_TERMS: usize = 10;
const EM_SHIFT: f64 = 12.0;

/// expm1(y) / y, continuous at 0.
fn exprel(y: f64) -> f64 {
    if y.abs() < 1e-8 {
        1.0 + y / 2.0 + y * y / 6.0
    } else {
        y.exp_m1() / y
    }
}

/// Tail `sum_{k>=0} (x+k)^(-s)`, with the divergent `1/(s-1)` removed when `regularized`.
/// Returns (value, error bound).
fn em_tail(s: f64, x: f64, regularized: bool) -> (f64, f64) {
    let lx = x.ln();
    let mut v = if regularized {
        // (x^(1-s) - 1)/(s-1)
        -lx * exprel((1.0 - s) * lx)
    } else {
        (-(s - 1.0) * lx).exp() / (s - 1.0)
    };
    let xs = (-s * lx).exp();
    v += 0.5 * xs;
    // Pochhammer (s)_{2j-1} and x^(-s-2j+1)
    let mut poch = s;
    let mut pw = xs / x;
    let mut fact = 2.0;
    for j in 0..EM_TERMS {
        v += BERNOULLI_2J[j] / fact * poch * pw;
        // advance to j+1
        poch *= (s + 2.0 * j as f64 + 1.0) * (s + 2.0 * j as f64 + 2.0);
        pw /= x * x;
        fact *= (2.0 * j as f64 + 3.0) * (2.0 * j as f64 + 4.0);
    }
    let err = (BERNOULLI_2J[EM_TERMS] / fact * poch * pw).abs();
    (v, err)
}

/// Regularized Hurwitz zeta: `zeta(s, a) - 1/(s-1)` for `s != 1`, `-digamma(a)` at `s = 1`.
/// Valid for `s > 0`, `a > 0`. Returns (value, error bound).
pub fn hurwitz_zeta_reg(s: f64, a: f64) -> (f64, f64) {
    assert!(s > 0.0 && a > 0.0, "hurwitz_zeta_reg needs s > 0, a > 0");
    euler_maclaurin(s, a, true)
}

fn euler_maclaurin(s: f64, a: f64, regularized: bool) -> (f64, f64) {
    let n = if a >= EM_SHIFT { 0 } else { (EM_SHIFT - a).ceil() as usize };
    let mut direct = 0.0;
    for k in (0..n).rev() {
        direct += (a + k as f64).powf(-s);
    }
    let (tail, err) = em_tail(s, a + n as f64, regularized);
    (direct + tail, err + 4.0 * f64::EPSILON * (direct.abs() + tail.abs()))
}

/// Hurwitz zeta `sum_{k>=0} (k + a)^(-s)` for `s > 1`. Returns (value, error bound).
pub fn hurwitz_zeta(s: f64, a: f64) -> (f64, f64) {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    euler_maclaurin(s, a, false)
}

/// Riemann zeta for s > 1.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0).0
}

/// `sum_j c_j sum_{t>=0} (x_j + t*period)^(-s)`.
///
/// All offsets must be positive. When `s <= 1` the weights must sum to zero,
/// otherwise the series diverges. Returns (value, error bound).
pub fn image_sum(terms: &[(f64, f64)], s: f64, period: f64) -> (f64, f64) {
    assert!(period > 0.0);
    let wsum: f64 = terms.iter().map(|t| t.0).sum();
    let wabs: f64 = terms.iter().map(|t| t.0.abs()).sum();
    let scale = period.powf(-s);
    let mut v = 0.0;
    let mut err = 0.0;
    for &(c, x) in terms {
        assert!(x > 0.0, "image_sum offset must be positive, got {x}");
        let (z, e) = if s > 1.0 + 1e-14 { hurwitz_zeta(s, x / period) } else { hurwitz_zeta_reg(s, x / period) };
        v += c * z;
        err += c.abs() * e;
    }
    if s <= 1.0 + 1e-14 {
        assert!(wsum.abs() <= 1e-12 * wabs.max(1.0), "divergent image sum");
    }
    (scale * v, scale * (err + 8.0 * f64::EPSILON * wabs * v.abs().max(1.0)))
}

/// Number of points of Z^m with 1-norm exactly j.
pub fn l1_sphere_count(m: usize, j: u64) -> f64 {
    if m == 0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    if j == 0 {
        return 1.0;
    }
    // sum_k 2^k C(m,k) C(j-1,k-1)
    let mut total = 0.0;
    for k in 1..=m.min(j as usize) {
        total += 2f64.powi(k as i32) * binom(m as u64, k as u64) * binom(j - 1, k as u64 - 1);
    }
    total
}

pub fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Surface area of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn riemann_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(3.0) - 1.2020569031595942).abs() < 1e-14);
    }

    #[test]
    fn regularized_at_one_is_minus_digamma() {
        // -psi(1) = Euler-Mascheroni
        let (v, _) = hurwitz_zeta_reg(1.0, 1.0);
        assert!((v - 0.5772156649015329).abs() < 1e-13);
        let (v, _) = hurwitz_zeta_reg(1.0, 0.5);
        // psi(1/2) = -gamma - 2 ln 2
        assert!((v - (0.5772156649015329 + 2.0 * 2f64.ln())).abs() < 1e-13);
    }

    #[test]
    fn alternating_harmonic_through_images() {
        // sum (-1)^(m+1)/m = ln 2, as odd minus even images of period 2
        let (v, _) = image_sum(&[(1.0, 1.0), (-1.0, 2.0)], 1.0, 2.0);
        assert!((v - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn image_sum_matches_direct() {
        let mut direct = 0.0;
        for t in 0..200000 {
            let t = t as f64;
            direct += (0.3 + 2.5 * t).powf(-4.0) - 2.0 * (1.1 + 2.5 * t).powf(-4.0);
        }
        let (v, e) = image_sum(&[(1.0, 0.3), (-2.0, 1.1)], 4.0, 2.5);
        assert!((v - direct).abs() < 1e-13 * direct.abs(), "{v} {direct}");
        assert!(e < 1e-12);
    }

    #[test]
    fn l1_counts() {
        assert_eq!(l1_sphere_count(1, 3), 2.0);
        assert_eq!(l1_sphere_count(2, 3), 12.0);
        assert_eq!(l1_sphere_count(3, 1), 6.0);
        assert_eq!(l1_sphere_count(3, 2), 18.0);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }
}
