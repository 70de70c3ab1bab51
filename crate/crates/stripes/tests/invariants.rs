use proptest::prelude::*;
use std::sync::OnceLock;
use stripes::energy::EnergyContext;
use stripes::io;
use stripes::kernels::KernelSpec;
use stripes::lattice::{canonical_form, TorusConfig};
use stripes::stripes1d::{chessboard_bound, f1_energy, r_tau_1d_sum, OneDConfig};

/// Contexts shared across cases: (d, n, p, tau).
const MODELS: [(usize, usize, f64, f64); 3] = [(1, 12, 3.0, 0.3), (2, 6, 4.0, 0.2), (3, 4, 7.0, 0.5)];

fn contexts() -> &'static [EnergyContext] {
    static CELL: OnceLock<Vec<EnergyContext>> = OnceLock::new();
    CELL.get_or_init(|| {
        MODELS
            .iter()
            .map(|&(d, n, p, tau)| {
                let spec = KernelSpec::one_norm(d, p, tau).unwrap();
                EnergyContext::new(&spec, n, spec.offset()).unwrap()
            })
            .collect()
    })
}

fn torus() -> impl Strategy<Value = (usize, TorusConfig)> {
    (0..MODELS.len()).prop_flat_map(|k| {
        let (d, n, _, _) = MODELS[k];
        let ctx = &contexts()[k];
        let spacing = ctx.spacing;
        proptest::collection::vec(any::<bool>(), n.pow(d as u32))
            .prop_map(move |cells| (k, TorusConfig { d, n, spacing, cells }))
    })
}

/// Periodic union of intervals from alternating gap lengths and a phase.
fn one_d() -> impl Strategy<Value = OneDConfig> {
    (1usize..5)
        .prop_flat_map(|m| (proptest::collection::vec(0.05f64..3.0, 2 * m), 0.0f64..1.0))
        .prop_map(|(gaps, phase)| {
            let period: f64 = gaps.iter().sum();
            let mut x = phase * gaps[0];
            let mut intervals = Vec::new();
            for pair in gaps.chunks(2) {
                intervals.push((x, x + pair[0]));
                x += pair[0] + pair[1];
            }
            OneDConfig::new(period, intervals).unwrap()
        })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_is_symmetric((k, cfg) in torus(), shift in proptest::collection::vec(-7i64..7, 3)) {
        let ctx = &contexts()[k];
        let e = ctx.total(&cfg).unwrap();
        prop_assert!(close(e, ctx.total(&cfg.complement()).unwrap(), 1e-11));
        prop_assert!(close(e, ctx.total(&cfg.translate(&shift[..cfg.d])).unwrap(), 1e-11));
        prop_assert!(close(e, ctx.total(&cfg.reflect(0)).unwrap(), 1e-11));
        let perm: Vec<usize> = (0..cfg.d).rev().collect();
        prop_assert!(close(e, ctx.total(&cfg.permute_axes(&perm)).unwrap(), 1e-11));
        prop_assert!(close(e, ctx.total(&canonical_form(&cfg)).unwrap(), 1e-11));
    }

    #[test]
    fn convolution_matches_double_sum((k, cfg) in torus()) {
        let ctx = &contexts()[k];
        prop_assert!(close(ctx.total(&cfg).unwrap(), ctx.total_direct(&cfg).unwrap(), 1e-10));
    }

    #[test]
    fn decomposition_residual_is_nonnegative((k, cfg) in torus()) {
        let b = contexts()[k].decompose(&cfg).unwrap();
        prop_assert!(b.residual >= -1e-9, "residual {}", b.residual);
        prop_assert!(b.i_cross.iter().all(|&i| i >= -1e-9));
        prop_assert!(close(b.total, contexts()[k].total(&cfg).unwrap(), 1e-12));
    }

    #[test]
    fn grid_files_round_trip((_k, cfg) in torus()) {
        let back = io::grid_from_str(&io::grid_to_string(&cfg)).unwrap();
        prop_assert_eq!(back.cells, cfg.cells);
        prop_assert!(close(back.spacing, cfg.spacing, 1e-15));
    }

    #[test]
    fn chessboard_bound_holds(cfg in one_d(), tau in 0.0f64..1.0) {
        let spec = KernelSpec::one_norm(1, 3.0, tau).unwrap();
        let f = f1_energy(&cfg, &spec).unwrap();
        let c = chessboard_bound(&cfg, &spec).unwrap();
        prop_assert!(f >= c - 1e-9, "f1 {f} < bound {c}");
    }

    #[test]
    fn local_terms_telescope(cfg in one_d(), tau in 0.0f64..1.0, p in 3.0f64..5.0) {
        let spec = KernelSpec::one_norm(1, p, tau).unwrap();
        let lhs = r_tau_1d_sum(&cfg, &spec).unwrap();
        let rhs = cfg.period * f1_energy(&cfg, &spec).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn slices_round_trip(cfg in one_d()) {
        let back = OneDConfig::from_slice(&cfg.to_slice());
        prop_assert!((back.mass() - cfg.mass()).abs() < 1e-12);
        prop_assert_eq!(back.perimeter(), cfg.perimeter());
    }
}

#[test]
fn chessboard_is_tight_on_stripes() {
    for tau in [0.0, 0.1, 0.5] {
        let spec = KernelSpec::one_norm(1, 3.0, tau).unwrap();
        for h in [0.3, 1.0, 2.7] {
            let cfg = OneDConfig::stripes(h);
            let gap = f1_energy(&cfg, &spec).unwrap() - chessboard_bound(&cfg, &spec).unwrap();
            assert!(gap.abs() < 1e-9, "tau {tau} h {h}: gap {gap}");
        }
    }
}
