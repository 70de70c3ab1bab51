use stripes::energy::{energy_dsc, energy_rescaled_dsc, jc_dsc};
use stripes::kernels::{periodize_cells, KernelSpec, PeriodizedKernel};
use stripes::lattice::TorusConfig;
use stripes::search::random_config;

struct Unscaled {
    jc: f64,
    kernel: PeriodizedKernel,
}

impl Unscaled {
    fn new(d: usize, n: usize, p: f64) -> Self {
        let (jc, _) = jc_dsc(d, p, 1e-12).unwrap();
        let kernel = periodize_cells(&KernelSpec::euclidean(d, p, 0.0).unwrap(), n, 1.0, 1e-13).unwrap();
        Self { jc, kernel }
    }

    /// (rescaled value, tau^(-(p-d)/beta) times the unscaled value at J = J_c - tau)
    fn both(&self, cells: &TorusConfig, p: f64, tau: f64) -> (f64, f64) {
        let d = cells.d;
        let spec = KernelSpec::euclidean(d, p, tau).unwrap();
        let unit = TorusConfig { spacing: 1.0, ..cells.clone() };
        let scaled = TorusConfig { spacing: spec.offset(), ..cells.clone() };
        let direct = energy_dsc(&unit, self.jc - tau, &self.kernel).unwrap();
        (energy_rescaled_dsc(&scaled, &spec).unwrap(), tau.powf(-(p - d as f64) / spec.beta()) * direct)
    }
}

#[test]
fn rescaled_functional_matches_change_of_variables() {
    for &(p, tau) in &[(3.0, 0.3), (3.5, 0.1), (4.0, 0.05)] {
        let u = Unscaled::new(1, 8, p);
        for seed in 0..20 {
            let (a, b) = u.both(&random_config(1, 8, 1.0, seed), p, tau);
            assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "seed {seed} p {p} tau {tau}: {a} vs {b}");
        }
    }
}

#[test]
fn rescaling_in_two_dimensions() {
    let u = Unscaled::new(2, 6, 4.5);
    for seed in 0..5 {
        let (a, b) = u.both(&random_config(2, 6, 1.0, seed), 4.5, 0.2);
        assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "seed {seed}: {a} vs {b}");
    }
}
