//! Python bindings for `disagg-core`.
//!
//! ```python
//! import disagg
//! ds = disagg.Dataset.from_csv("answers.csv", outcome="accepted")
//! report = disagg.scan(ds, min_bin_size=100)
//! print(report.to_markdown())
//! ```

use std::collections::BTreeMap;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use disagg_core as core;
use disagg_core::{ReportFormat, ScanConfig, SchemaConfig};

fn to_py_err(err: core::Error) -> PyErr {
    match err {
        core::Error::File { .. } | core::Error::Io(_) => PyOSError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: core::Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    #[pyo3(signature = (path, outcome, include=None, exclude=None))]
    fn from_csv(
        path: &str,
        outcome: &str,
        include: Option<Vec<String>>,
        exclude: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let schema = SchemaConfig {
            outcome: outcome.to_string(),
            include,
            exclude: exclude.unwrap_or_default(),
        };
        core::load_csv(path, &schema)
            .map(|inner| Self { inner })
            .map_err(to_py_err)
    }

    /// Build from an outcome list and a `{name: values}` mapping; columns are
    /// ordered by name. `nan` marks a missing value.
    #[staticmethod]
    #[pyo3(signature = (outcome, covariates, outcome_name="y"))]
    fn from_columns(outcome: Vec<u8>, covariates: BTreeMap<String, Vec<f64>>, outcome_name: &str) -> PyResult<Self> {
        core::Dataset::from_columns(outcome_name, outcome, covariates.into_iter().collect())
            .map(|inner| Self { inner })
            .map_err(to_py_err)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn covariate_names(&self) -> Vec<String> {
        self.inner.covariate_names().into_iter().map(String::from).collect()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(|e| PyOSError::new_err(e.to_string()))?;
        self.inner.write_csv(file).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_rows={}, covariates={:?})",
            self.inner.n_rows(),
            self.inner.covariate_names()
        )
    }
}

#[pyclass(name = "ScanReport", frozen)]
struct PyScanReport {
    inner: core::ScanReport,
}

#[pymethods]
impl PyScanReport {
    #[getter]
    fn pairs_examined(&self) -> usize {
        self.inner.pairs_examined
    }

    #[getter]
    fn pairs_significant(&self) -> usize {
        self.inner.pairs_significant
    }

    /// `(x_j, x_c, pseudo_r2, disagg_p, simpson_flag)` per ranked result.
    fn results(&self) -> Vec<(String, String, f64, f64, bool)> {
        self.inner
            .results
            .iter()
            .map(|r| (r.x_j.clone(), r.x_c.clone(), r.pseudo_r2, r.disagg_p, r.simpson_flag))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.emit(ReportFormat::Json)
    }

    fn to_markdown(&self) -> PyResult<String> {
        self.emit(ReportFormat::Markdown)
    }

    fn to_csv(&self) -> PyResult<String> {
        self.emit(ReportFormat::Csv)
    }

    fn __len__(&self) -> usize {
        self.inner.results.len()
    }
}

impl PyScanReport {
    fn emit(&self, format: ReportFormat) -> PyResult<String> {
        let bytes = core::emit_report(&self.inner, format).map_err(to_py_err)?;
        String::from_utf8(bytes).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

#[pyfunction]
#[pyo3(signature = (dataset, alpha=0.05, min_bin_size=100, max_bins=20, require_reversal=false, bh=false, top_k=None, threads=None))]
#[allow(clippy::too_many_arguments)]
fn scan(
    py: Python<'_>,
    dataset: &PyDataset,
    alpha: f64,
    min_bin_size: usize,
    max_bins: usize,
    require_reversal: bool,
    bh: bool,
    top_k: Option<usize>,
    threads: Option<usize>,
) -> PyResult<PyScanReport> {
    let mut config = ScanConfig {
        alpha_level: alpha,
        top_k,
        require_reversal,
        bh_correction: bh,
        threads,
        ..ScanConfig::default()
    };
    config.partition.min_bin_size = min_bin_size;
    config.partition.max_bins = max_bins;
    let report = py
        .detach(|| core::scan(&dataset.inner, &config))
        .map_err(to_py_err)?;
    Ok(PyScanReport { inner: report })
}

#[pyfunction]
fn fit_logistic<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let fit = core::fit_logistic(&x, &y, &core::FitConfig::default()).map_err(to_py_err)?;
    let status = serde_json::to_value(fit.status)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    let out = PyDict::new(py);
    out.set_item("alpha", fit.alpha)?;
    out.set_item("beta", fit.beta)?;
    out.set_item("loglik", fit.loglik)?;
    out.set_item("se_alpha", fit.se_alpha)?;
    out.set_item("se_beta", fit.se_beta)?;
    out.set_item("iterations", fit.iterations)?;
    out.set_item("status", status)?;
    Ok(out)
}

/// Returns `(split_values, r2, bin_counts)`.
#[pyfunction]
#[pyo3(signature = (x_c, y, max_bins=20, min_bin_size=100))]
fn build_partition(x_c: Vec<f64>, y: Vec<f64>, max_bins: usize, min_bin_size: usize) -> PyResult<(Vec<f64>, f64, Vec<usize>)> {
    let config = core::PartitionConfig {
        max_bins,
        min_bin_size,
        ..core::PartitionConfig::default()
    };
    let p = core::build_partition(&x_c, &y, &config).map_err(to_py_err)?;
    let counts = p.bins.iter().map(|b| b.count).collect();
    Ok((p.splits, p.r2, counts))
}

#[pyfunction]
fn chi2_sf(x: f64, df: u32) -> PyResult<f64> {
    core::chi2_sf(x, df).map_err(to_py_err)
}

/// The two-group reversal construction; returns `(dataset, pooled_beta)`.
#[pyfunction]
#[pyo3(signature = (total_n, noise_count=3, seed=0))]
fn planted_paradox(total_n: usize, noise_count: usize, seed: u64) -> PyResult<(PyDataset, f64)> {
    let spec = core::PlantedSpec::two_group_paradox(total_n, noise_count, seed);
    let (inner, truth) = core::generate(&spec).map_err(to_py_err)?;
    Ok((PyDataset { inner }, truth.pooled_beta))
}

/// Generate from a JSON spec (same schema as `disagg synth --spec`).
#[pyfunction]
fn synthesize(spec_json: &str) -> PyResult<PyDataset> {
    let spec: core::PlantedSpec = serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let (inner, _) = core::generate(&spec).map_err(to_py_err)?;
    Ok(PyDataset { inner })
}

#[pymodule]
fn disagg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyScanReport>()?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(fit_logistic, m)?)?;
    m.add_function(wrap_pyfunction!(build_partition, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_sf, m)?)?;
    m.add_function(wrap_pyfunction!(planted_paradox, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
