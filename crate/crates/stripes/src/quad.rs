//! Adaptive Gauss-Legendre quadrature by interval bisection.

use crate::error::{Error, Result};
use gauss_quad::GaussLegendre;
use std::sync::OnceLock;

fn rule(deg: usize) -> &'static [(f64, f64)] {
    static R10: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static R21: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let cell = match deg {
        10 => &R10,
        21 => &R21,
        _ => unreachable!("unsupported rule"),
    };
    cell.get_or_init(|| {
        GaussLegendre::new(deg)
            .expect("valid degree")
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Fixed Gauss-Legendre rule on [a, b].
pub fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, deg: usize) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule(deg).iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Gauss-Legendre nodes and weights mapped to [a, b].
pub fn nodes(a: f64, b: f64, deg: usize) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let pairs: Vec<(f64, f64)> = if deg == 10 || deg == 21 {
        rule(deg).to_vec()
    } else {
        GaussLegendre::new(deg).expect("valid degree").as_node_weight_pairs().to_vec()
    };
    pairs.into_iter().map(|(x, w)| (mid + half * x, w * half)).collect()
}

/// Adaptive integral of `f` over [a, b] to absolute tolerance `tol`.
/// Returns (value, estimated error).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut stack = vec![(a, b, 0usize)];
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        let coarse = fixed(f, lo, hi, 10);
        let fine = fixed(f, lo, hi, 21);
        evals += 31;
        let e = (fine - coarse).abs();
        let local_tol = tol * (hi - lo).abs() / (b - a).abs();
        if e <= local_tol.max(1e-15 * fine.abs()) || depth >= 60 {
            if depth >= 60 && e > local_tol {
                return Err(Error::Tolerance {
                    what: "adaptive quadrature depth".into(),
                    tol,
                    achieved: e,
                });
            }
            total += fine;
            err += e;
        } else {
            let m = 0.5 * (lo + hi);
            stack.push((m, hi, depth + 1));
            stack.push((lo, m, depth + 1));
        }
        if evals > 50_000_000 {
            return Err(Error::Tolerance { what: "quadrature evaluation budget".into(), tol, achieved: err });
        }
    }
    Ok((total, err))
}

/// Adaptive integral of `f` over [a, inf), via x = a + t/(1-t).
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: &F, a: f64, tol: f64) -> Result<(f64, f64)> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - t;
        f(a + t / u) / (u * u)
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Integral over [a, inf) split at the given breakpoints (all > a).
pub fn integrate_to_inf_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<(f64, f64)> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a).collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let pieces = pts.len() + 1;
    let mut lo = a;
    let mut total = 0.0;
    let mut err = 0.0;
    for &p in &pts {
        let (v, e) = integrate(f, lo, p, tol / pieces as f64)?;
        total += v;
        err += e;
        lo = p;
    }
    let (v, e) = integrate_to_inf(f, lo, tol / pieces as f64)?;
    Ok((total + v, err + e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let (v, _) = integrate(&|x: f64| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn power_tail() {
        let (v, _) = integrate_to_inf(&|x: f64| (1.0 + x).powi(-4), 0.0, 1e-12).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn kinked_integrand_with_breaks() {
        let f = |x: f64| (x - 1.0).abs() * (-x).exp();
        let (v, _) = integrate_to_inf_with_breaks(&f, 0.0, &[1.0], 1e-12).unwrap();
        // int_0^1 (1-x)e^{-x} + int_1^inf (x-1) e^{-x} = e^{-1} + e^{-1}
        assert!((v - 2.0 * (-1f64).exp()).abs() < 1e-11);
    }
}
