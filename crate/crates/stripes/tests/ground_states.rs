use stripes::diagnostics::checkerboard;
use stripes::energy::{jc_dsc, EnergyContext};
use stripes::kernels::{periodize_cells, KernelSpec};
use stripes::search::{anneal_restarts, enumerate, stripe_scan, Objective, Schedule, SearchReport};

fn rescaled(d: usize, n: usize, p: f64, tau: f64) -> EnergyContext {
    let spec = KernelSpec::one_norm(d, p, tau).unwrap();
    EnergyContext::new(&spec, n, spec.offset()).unwrap()
}

fn width_cells(r: &SearchReport, kappa: f64) -> usize {
    (r.stripe_spec.expect("stripe minimizer").width / kappa).round() as usize
}

#[test]
fn one_dimensional_minimizers_are_the_best_stripes() {
    for tau in [0.15, 0.25, 0.5, 1.0] {
        for n in [8, 12, 16] {
            let ctx = rescaled(1, n, 3.0, tau);
            let obj = Objective::Rescaled(ctx.clone());
            let full = enumerate(&obj, None).unwrap();
            let scan = stripe_scan(&obj).unwrap();
            assert_eq!(full.visited, 1 << n);
            assert!(full.is_stripe.iter().all(|&s| s), "tau {tau} n {n}: non-stripe minimizer");
            assert!((full.best_energy - scan.best_energy).abs() < 1e-12);
            assert_eq!(width_cells(&full, ctx.spacing), width_cells(&scan, ctx.spacing));
            for m in &full.minimizers {
                let b = ctx.decompose(m).unwrap();
                assert!(b.residual.abs() < 1e-9);
            }
        }
    }
}

#[test]
fn two_dimensional_minimizers_at_small_tau_are_stripes() {
    let ctx = rescaled(2, 4, 4.0, 0.15);
    let obj = Objective::Rescaled(ctx.clone());
    let full = enumerate(&obj, None).unwrap();
    assert_eq!(full.visited, 1 << 16);
    assert!(!full.minimizers.is_empty() && full.is_stripe.iter().all(|&s| s));
    assert_eq!(width_cells(&full, ctx.spacing), 2);
    assert!((full.best_energy - -0.317080).abs() < 1e-6, "{}", full.best_energy);
    let board = ctx.total(&checkerboard(2, 4, ctx.spacing)).unwrap();
    assert!(board > full.best_energy + 1e-3);
}

/// On the 4x4 torus the width-2 stripe stops winning once tau^(1/beta) is a
/// sizeable fraction of the optimal width.
#[test]
fn small_torus_at_larger_tau_prefers_non_stripes() {
    let obj = Objective::Rescaled(rescaled(2, 4, 4.0, 0.5));
    let full = enumerate(&obj, None).unwrap();
    let scan = stripe_scan(&obj).unwrap();
    assert!(full.best_energy < scan.best_energy - 1e-6);
    assert!(full.is_stripe.iter().all(|&s| !s));
}

#[test]
fn above_the_critical_coupling_only_trivial_sets_minimize() {
    let n = 12;
    let p = 3.0;
    let (jc, _) = jc_dsc(1, p, 1e-12).unwrap();
    let kernel = periodize_cells(&KernelSpec::euclidean(1, p, 0.0).unwrap(), n, 1.0, 1e-13).unwrap();
    let above = enumerate(&Objective::Discrete { j: jc + 0.05, kernel: kernel.clone() }, None).unwrap();
    assert!(above.best_energy.abs() < 1e-12);
    assert!(above.minimizers.iter().all(|m| m.is_trivial()));
    let below = enumerate(&Objective::Discrete { j: jc - 0.5, kernel }, None).unwrap();
    assert!(below.best_energy < 0.0);
    assert!(below.minimizers.iter().all(|m| !m.is_trivial()));
}

#[test]
fn annealing_finds_the_stripe_on_a_16_by_16_torus() {
    let ctx = rescaled(2, 16, 4.0, 0.1);
    let scan = stripe_scan(&Objective::Rescaled(ctx.clone())).unwrap();
    let best = anneal_restarts(&ctx, &Schedule::default(), 20).unwrap();
    assert!(best.best_energy <= scan.best_energy + 1e-9, "{} vs {}", best.best_energy, scan.best_energy);
    assert!(best.is_stripe[0]);
}

/// Widths must satisfy 2h | L on the torus; at tau = 0.23 tilted staircase stripes fit better.
#[test]
fn tilted_patterns_beat_commensurate_stripes_at_moderate_tau() {
    let ctx = rescaled(2, 16, 4.0, 0.23);
    let scan = stripe_scan(&Objective::Rescaled(ctx.clone())).unwrap();
    let best = anneal_restarts(&ctx, &Schedule { steps: 1_000_000, ..Schedule::default() }, 8).unwrap();
    assert!(best.best_energy < scan.best_energy - 1e-3);
    assert!(!best.is_stripe[0]);
}
