//! Python bindings: `import pysnn`.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use nalgebra::DMatrix;
use snn_tmvn::censored::{build_censored_problem, sample_censored_posterior, CensoredDataset, SiteStatus};
use snn_tmvn::eval::{crps_ensemble, ks_statistic, score};
use snn_tmvn::geometry::OrderingKind;
use snn_tmvn::kernel::{CovarianceModel, LocationSet, Metric, Smoothness};
use snn_tmvn::lowdim::{sample_lowdim_tmvn, LowDimTarget, SamplerPolicy, SamplerStats};
use snn_tmvn::rng::{substream, Domain};
use snn_tmvn::snn::{precompute, sample, SnnOptions, SnnPlan, TruncationProblem};

create_exception!(pysnn, NumericalError, PyException);

fn to_py(e: snn_tmvn::Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn ordering(name: &str) -> PyResult<OrderingKind> {
    match name {
        "coordinate" => Ok(OrderingKind::Coordinate),
        "random" => Ok(OrderingKind::Random),
        "maximin" => Ok(OrderingKind::Maximin),
        _ => Err(PyValueError::new_err(format!("unknown ordering {name:?}"))),
    }
}

fn metric(name: &str) -> PyResult<Metric> {
    match name {
        "euclidean" => Ok(Metric::Euclidean),
        "chordal" => Ok(Metric::Chordal),
        _ => Err(PyValueError::new_err(format!("unknown metric {name:?}"))),
    }
}

fn square(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("covariance must be a square list of rows"));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

/// Matérn covariance with smoothness 0.5, 1.5 or 2.5.
#[pyclass(name = "Kernel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKernel {
    inner: CovarianceModel,
}

#[pymethods]
impl PyKernel {
    /// `ranges` holds one isotropic range or one range per dimension.
    #[new]
    #[pyo3(signature = (variance, ranges, smoothness = 1.5, nugget = 0.0))]
    fn new(variance: f64, ranges: Vec<f64>, smoothness: f64, nugget: f64) -> PyResult<Self> {
        let nu = Smoothness::from_value(smoothness).map_err(to_py)?;
        Ok(Self { inner: CovarianceModel::new(variance, ranges, nu, nugget).map_err(to_py)? })
    }

    /// Covariance between two points (nugget included when `same_index`).
    #[pyo3(signature = (s, t, metric = "euclidean", same_index = false))]
    fn value(&self, s: Vec<f64>, t: Vec<f64>, metric: &str, same_index: bool) -> PyResult<f64> {
        Ok(self.inner.value(&s, &t, self::metric(metric)?, same_index))
    }

    fn __repr__(&self) -> String {
        format!(
            "Kernel(variance={}, ranges={:?}, smoothness={}, nugget={})",
            self.inner.variance(),
            self.inner.ranges(),
            self.inner.smoothness().value(),
            self.inner.nugget()
        )
    }
}

/// Precomputed SNN factors for one truncation problem.
#[pyclass(name = "Plan", frozen)]
struct PyPlan {
    inner: SnnPlan,
}

#[pymethods]
impl PyPlan {
    /// Plan for `TN(lower, upper; 0, covariance)` with an explicit matrix.
    #[staticmethod]
    #[pyo3(signature = (covariance, lower, upper, m = 30, ordering = "random", seed = 0, locations = None))]
    #[allow(clippy::too_many_arguments)]
    fn dense(
        py: Python<'_>,
        covariance: Vec<Vec<f64>>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        m: usize,
        ordering: &str,
        seed: u64,
        locations: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let matrix = square(covariance)?;
        let locations = locations.map(|p| LocationSet::new(&p, Metric::Euclidean)).transpose().map_err(to_py)?;
        let problem = TruncationProblem::from_dense(matrix, locations, lower, upper).map_err(to_py)?;
        let options = SnnOptions { ordering: self::ordering(ordering)?, ..SnnOptions::with_m(m) };
        let inner = py.detach(|| precompute(&problem, &options, seed)).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Plan for a kernel covariance over `locations`.
    #[staticmethod]
    #[pyo3(signature = (kernel, locations, lower, upper, m = 30, ordering = "random", seed = 0, metric = "euclidean"))]
    #[allow(clippy::too_many_arguments)]
    fn kernel(
        py: Python<'_>,
        kernel: &PyKernel,
        locations: Vec<Vec<f64>>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        m: usize,
        ordering: &str,
        seed: u64,
        metric: &str,
    ) -> PyResult<Self> {
        let locations = LocationSet::new(&locations, self::metric(metric)?).map_err(to_py)?;
        let problem = TruncationProblem::from_kernel(kernel.inner.clone(), locations, lower, upper).map_err(to_py)?;
        let options = SnnOptions { ordering: self::ordering(ordering)?, ..SnnOptions::with_m(m) };
        let inner = py.detach(|| precompute(&problem, &options, seed)).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// `n` joint samples as a list of rows in the original index order.
    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        Ok(py.detach(|| sample(&self.inner, n, seed)).map_err(to_py)?.samples)
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn max_jitter(&self) -> f64 {
        self.inner.max_jitter()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// One draw of a zero-mean Gaussian field at `locations`.
#[pyfunction]
#[pyo3(signature = (kernel, locations, seed = 0, metric = "euclidean"))]
fn simulate_field(kernel: &PyKernel, locations: Vec<Vec<f64>>, seed: u64, metric: &str) -> PyResult<Vec<f64>> {
    let locations = LocationSet::new(&locations, self::metric(metric)?).map_err(to_py)?;
    snn_tmvn::field::simulate_field(&kernel.inner, &locations, seed).map_err(to_py)
}

/// Posterior draws of a partially censored field. `values[i]` is `None`
/// at censored sites, whose intervals are `[lower[i], upper[i]]`.
#[pyfunction]
#[pyo3(signature = (kernel, locations, values, lower, upper, n_samples, m = 30, ordering = "random", seed = 0, full_field = false))]
#[allow(clippy::too_many_arguments)]
fn censored_posterior(
    py: Python<'_>,
    kernel: &PyKernel,
    locations: Vec<Vec<f64>>,
    values: Vec<Option<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    n_samples: usize,
    m: usize,
    ordering: &str,
    seed: u64,
    full_field: bool,
) -> PyResult<Vec<Vec<f64>>> {
    let locations = LocationSet::new(&locations, Metric::Euclidean).map_err(to_py)?;
    let status = values.iter().map(|v| if v.is_some() { SiteStatus::Observed } else { SiteStatus::Censored }).collect();
    let data = CensoredDataset::new(locations, status, values, lower, upper).map_err(to_py)?;
    let options = SnnOptions { ordering: self::ordering(ordering)?, ..SnnOptions::with_m(m) };
    let ens = py
        .detach(|| {
            let plan = build_censored_problem(&data, &kernel.inner, &options, seed)?;
            sample_censored_posterior(&plan, n_samples, seed, full_field)
        })
        .map_err(to_py)?;
    Ok(ens.samples)
}

/// Exact draws from a low-dimensional `TN(lower, upper; 0, covariance)`.
#[pyfunction]
#[pyo3(signature = (covariance, lower, upper, n, seed = 0))]
fn sample_lowdim(
    covariance: Vec<Vec<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    n: usize,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let target = LowDimTarget::from_covariance(lower, upper, square(covariance)?).map_err(to_py)?;
    let policy = SamplerPolicy::default();
    let mut stats = SamplerStats::default();
    let mut rng = substream(seed, Domain::Sampling, 0);
    (0..n).map(|_| sample_lowdim_tmvn(&target, &policy, &mut rng, &mut stats).map_err(to_py)).collect()
}

/// Ensemble CRPS of draws `xs` for outcome `y`.
#[pyfunction]
fn crps(xs: Vec<f64>, y: f64) -> PyResult<f64> {
    crps_ensemble(&xs, y).map_err(to_py)
}

/// `(rmse, crps)` of sample rows against `truth` over all coordinates.
#[pyfunction]
fn rmse_crps(samples: Vec<Vec<f64>>, truth: Vec<f64>) -> PyResult<(f64, f64)> {
    let idx: Vec<usize> = (0..truth.len()).collect();
    let r = score(&samples, &truth, &idx, false).map_err(to_py)?;
    Ok((r.rmse, r.crps))
}

/// Two-sample Kolmogorov-Smirnov `(statistic, p_value)`.
#[pyfunction]
fn ks_test(a: Vec<f64>, b: Vec<f64>) -> (f64, f64) {
    let t = ks_statistic(&a, &b);
    (t.statistic, t.p_value)
}

#[pymodule]
fn pysnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(simulate_field, m)?)?;
    m.add_function(wrap_pyfunction!(censored_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(sample_lowdim, m)?)?;
    m.add_function(wrap_pyfunction!(crps, m)?)?;
    m.add_function(wrap_pyfunction!(rmse_crps, m)?)?;
    m.add_function(wrap_pyfunction!(ks_test, m)?)?;
    Ok(())
}
