use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use stripes::diagnostics::{region_decompose, verification_report, RegionParams, ReportParams};
use stripes::energy::{jc_continuum, jc_dsc, EnergyContext};
use stripes::kernels::{KernelFamily, KernelSpec};
use stripes::lattice::{canonical_form, make_stripes, StripeSpec, TorusConfig};
use stripes::search::{self, Objective, Schedule};
use stripes::stripes1d::{self, OneDConfig};
use stripes::{io, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Tolerance { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for stripes::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Kernel family and parameters: `Kernel(d, p, tau, family="one_norm")`.
#[pyclass(name = "Kernel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel {
    inner: KernelSpec,
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (d, p, tau, family = "one_norm"))]
    fn new(d: usize, p: f64, tau: f64, family: &str) -> PyResult<Self> {
        let family = match family {
            "one_norm" => KernelFamily::OneNorm,
            "euclidean" => KernelFamily::Euclidean,
            other => return Err(PyValueError::new_err(format!("unknown kernel family `{other}`"))),
        };
        Ok(Self { inner: KernelSpec::new(d, p, tau, family).py()? })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }
    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }
    /// Natural lattice spacing tau^(1/beta).
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.offset()
    }

    fn __repr__(&self) -> String {
        format!("Kernel(d={}, p={}, tau={}, family={:?})", self.inner.d, self.inner.p, self.inner.tau, self.inner.family)
    }
}

/// Binary configuration on the periodic lattice of `n^d` cells with spacing `kappa`.
#[pyclass(name = "Torus", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTorus {
    inner: TorusConfig,
}

#[pymethods]
impl PyTorus {
    #[new]
    fn new(d: usize, n: usize, kappa: f64, cells: Vec<bool>) -> PyResult<Self> {
        Ok(Self { inner: TorusConfig::new(d, n, kappa, cells).py()? })
    }

    #[staticmethod]
    fn from_grid(text: &str) -> PyResult<Self> {
        Ok(Self { inner: io::grid_from_str(text).py()? })
    }

    /// Periodic stripes normal to `axis` with width `width` and offset `phase`.
    #[staticmethod]
    #[pyo3(signature = (d, n, kappa, axis, width, phase = 0.0))]
    fn stripes(d: usize, n: usize, kappa: f64, axis: usize, width: f64, phase: f64) -> PyResult<Self> {
        let spec = StripeSpec { direction: axis, width, phase };
        Ok(Self { inner: make_stripes(&spec, d, n, kappa).py()? })
    }

    #[staticmethod]
    #[pyo3(signature = (d, n, kappa, seed = 0))]
    fn random(d: usize, n: usize, kappa: f64, seed: u64) -> Self {
        Self { inner: search::random_config(d, n, kappa, seed) }
    }

    fn to_grid(&self) -> String {
        io::grid_to_string(&self.inner)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.spacing
    }
    #[getter]
    fn cells(&self) -> Vec<bool> {
        self.inner.cells.clone()
    }

    fn count(&self) -> usize {
        self.inner.count()
    }

    fn complement(&self) -> Self {
        Self { inner: self.inner.complement() }
    }

    fn translate(&self, shift: Vec<i64>) -> Self {
        Self { inner: self.inner.translate(&shift) }
    }

    /// Canonical representative under translations, axis permutations, reflections and complement.
    fn canonical(&self) -> Self {
        Self { inner: canonical_form(&self.inner) }
    }

    fn is_stripe(&self) -> bool {
        self.inner.stripe_spec().is_some()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Torus(d={}, n={}, kappa={}, filled={})", self.inner.d, self.inner.n, self.inner.spacing, self.inner.count())
    }
}

/// Precomputed periodized kernel for repeated energy evaluations on one torus size.
#[pyclass(name = "Energy", frozen)]
struct PyEnergy {
    inner: EnergyContext,
}

#[pymethods]
impl PyEnergy {
    #[new]
    #[pyo3(signature = (kernel, n, kappa = None))]
    fn new(kernel: PyRef<'_, PyKernel>, n: usize, kappa: Option<f64>) -> PyResult<Self> {
        let kappa = kappa.unwrap_or_else(|| kernel.inner.offset());
        Ok(Self { inner: EnergyContext::new(&kernel.inner, n, kappa).py()? })
    }

    fn total(&self, cfg: PyRef<'_, PyTorus>) -> PyResult<f64> {
        self.inner.total(&cfg.inner).py()
    }

    fn total_direct(&self, cfg: PyRef<'_, PyTorus>) -> PyResult<f64> {
        self.inner.total_direct(&cfg.inner).py()
    }

    /// Dict with perimeter_term, g_i, i_i, total, lower_bound, residual.
    fn decompose<'py>(&self, py: Python<'py>, cfg: PyRef<'_, PyTorus>) -> PyResult<Bound<'py, PyDict>> {
        let b = self.inner.decompose(&cfg.inner).py()?;
        let out = PyDict::new(py);
        for (k, v) in b.record() {
            out.set_item(k, v)?;
        }
        Ok(out)
    }

    /// Exhaustive search; returns the report as a JSON string.
    #[pyo3(signature = (max_cells = None))]
    fn search(&self, py: Python<'_>, max_cells: Option<usize>) -> PyResult<String> {
        let obj = Objective::Rescaled(self.inner.clone());
        let report = py.detach(|| search::enumerate(&obj, max_cells)).py()?;
        io::report_json(&report).py()
    }

    fn stripe_scan(&self) -> PyResult<String> {
        let report = search::stripe_scan(&Objective::Rescaled(self.inner.clone())).py()?;
        io::report_json(&report).py()
    }

    /// Simulated annealing with `restarts` independent chains; returns the best configuration and energy.
    #[pyo3(signature = (seed = 1, steps = 3_000_000, t0 = 0.3, cooling = 0.998, restarts = 1))]
    fn anneal(
        &self,
        py: Python<'_>,
        seed: u64,
        steps: u64,
        t0: f64,
        cooling: f64,
        restarts: usize,
    ) -> PyResult<(PyTorus, f64)> {
        let schedule = Schedule { t0, cooling, steps, seed };
        let report = py.detach(|| search::anneal_restarts(&self.inner, &schedule, restarts.max(1))).py()?;
        let best = report.minimizers.into_iter().next().ok_or_else(|| PyValueError::new_err("no minimizer"))?;
        Ok((PyTorus { inner: best }, report.best_energy))
    }
}

/// Discrete critical coupling with its certified error.
#[pyfunction]
#[pyo3(signature = (d, p, tol = 1e-10))]
fn jc(d: usize, p: f64, tol: f64) -> PyResult<(f64, f64)> {
    KernelSpec::euclidean(d, p, 0.0).py()?;
    jc_dsc(d, p, tol).py()
}

#[pyfunction]
fn jc_cont(d: usize, p: f64) -> PyResult<f64> {
    jc_continuum(d, p).py()
}

/// Energy density of periodic stripes of width `h`.
#[pyfunction]
fn stripe_density(kernel: PyRef<'_, PyKernel>, h: f64) -> PyResult<f64> {
    stripes1d::e_inf_tau(h, &kernel.inner).py()
}

/// `(h_star, c_star, second_derivative)` of the stripe density.
#[pyfunction]
fn optimal_width(kernel: PyRef<'_, PyKernel>) -> PyResult<(f64, f64, f64)> {
    let o = stripes1d::optimal_h(&kernel.inner).py()?;
    Ok((o.h_star, o.c_star, o.second_derivative))
}

fn one_d(period: f64, intervals: Vec<(f64, f64)>) -> PyResult<OneDConfig> {
    OneDConfig::new(period, intervals).py()
}

/// One-dimensional energy per unit length of a periodic union of intervals.
#[pyfunction]
fn f1_energy(kernel: PyRef<'_, PyKernel>, period: f64, intervals: Vec<(f64, f64)>) -> PyResult<f64> {
    stripes1d::f1_energy(&one_d(period, intervals)?, &kernel.inner).py()
}

#[pyfunction]
fn chessboard_bound(kernel: PyRef<'_, PyKernel>, period: f64, intervals: Vec<(f64, f64)>) -> PyResult<f64> {
    stripes1d::chessboard_bound(&one_d(period, intervals)?, &kernel.inner).py()
}

/// Region labels as a grid string (`-`, `0`, axis digits).
#[pyfunction]
#[pyo3(signature = (cfg, l = 4, eta = 0.25, delta = 0.1, rho = 0.25))]
fn regions(cfg: PyRef<'_, PyTorus>, l: usize, eta: f64, delta: f64, rho: f64) -> PyResult<String> {
    let params = RegionParams { l_cells: l, eta, delta, rho, big_m: 0.0 };
    Ok(io::regions_to_string(&region_decompose(&cfg.inner, &params).py()?))
}

/// Text of the report-only diagnostic suite with default parameters.
#[pyfunction]
fn diagnostics_report(py: Python<'_>) -> PyResult<String> {
    let report = py.detach(|| verification_report(&ReportParams::default())).py()?;
    Ok(report.to_text())
}

#[pymodule]
fn stripes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyTorus>()?;
    m.add_class::<PyEnergy>()?;
    m.add_function(wrap_pyfunction!(jc, m)?)?;
    m.add_function(wrap_pyfunction!(jc_cont, m)?)?;
    m.add_function(wrap_pyfunction!(stripe_density, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_width, m)?)?;
    m.add_function(wrap_pyfunction!(f1_energy, m)?)?;
    m.add_function(wrap_pyfunction!(chessboard_bound, m)?)?;
    m.add_function(wrap_pyfunction!(regions, m)?)?;
    m.add_function(wrap_pyfunction!(diagnostics_report, m)?)?;
    Ok(())
}
