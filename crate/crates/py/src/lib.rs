//! Python module `fellerdep_py`.

use fellerdep::dependence::{self, DependenceReport, SampleMatrix, TestKind};
use fellerdep::json::{self, SpecDoc};
use fellerdep::levy::{self, Observable, SamplingOptions, SmoothFunction, TestFunction};
use fellerdep::processes::{self, presets, PathEnsemble};
use fellerdep::quadrature::QuadOptions;
use fellerdep::semigroup;
use fellerdep::smalltime::{self, RegionSpec};
use fellerdep::{levy::OpenBox, FellerError};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: FellerError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A process or a bare triplet, as accepted in experiment configs.
#[pyclass(name = "Spec", frozen)]
struct PySpec {
    doc: SpecDoc,
    process: Option<processes::ProcessSpec>,
}

impl PySpec {
    fn process(&self) -> PyResult<&processes::ProcessSpec> {
        self.process.as_ref().ok_or_else(|| {
            PyValueError::new_err("this spec is a bare triplet and cannot be simulated")
        })
    }
}

#[pymethods]
impl PySpec {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Self::from_doc(SpecDoc::preset(name))
    }

    /// Parses the JSON object used under `spec` in a config file.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::from_doc(json::from_str(text).map_err(err)?)
    }

    #[getter]
    fn id(&self) -> String {
        self.doc.id()
    }

    #[getter]
    fn dim(&self) -> PyResult<usize> {
        self.doc.dim().map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.doc).expect("spec serializes")
    }

    #[pyo3(signature = (x, grid, n_paths, seed=0))]
    fn simulate(
        &self,
        x: Vec<f64>,
        grid: Vec<f64>,
        n_paths: usize,
        seed: u64,
    ) -> PyResult<PyPaths> {
        let inner = processes::simulate(self.process()?, &x, &grid, n_paths, seed).map_err(err)?;
        Ok(PyPaths { inner })
    }

    /// Monte Carlo `E^x f(X_t)`; returns `(value, std_error)`.
    #[pyo3(signature = (f, x, t, n_paths, seed=0))]
    fn semigroup(
        &self,
        f: &PyFunction,
        x: Vec<f64>,
        t: f64,
        n_paths: usize,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let e = semigroup::semigroup_apply(self.process()?, &f.inner, &x, t, n_paths, seed)
            .map_err(err)?;
        Ok((e.value, e.std_error))
    }

    /// `(direct, reduced)` Liggett gap at `x`.
    fn liggett_gap(&self, f: &PyFunction, g: &PyFunction, x: Vec<f64>) -> PyResult<(f64, f64)> {
        let triplet = self.doc.triplet_at(&x).map_err(err)?;
        let gap = levy::liggett_gap(&triplet, &f.inner, &g.inner, &x, &QuadOptions::default())
            .map_err(err)?;
        Ok((gap.direct, gap.reduced))
    }

    /// `(value, std_error)` of the off-orthant jump mass at `x`.
    #[pyo3(signature = (x, n_samples=100_000, seed=0))]
    fn offorthant_mass(&self, x: Vec<f64>, n_samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let triplet = self.doc.triplet_at(&x).map_err(err)?;
        let m = levy::resnick_offorthant_mass(&triplet, &x, &SamplingOptions { n_samples, seed })
            .map_err(err)?;
        Ok((m.value, m.std_error))
    }

    /// Rows `(t, rate, se, nu_value)` and the fitted intercept for one box.
    #[pyo3(signature = (x, lower, upper, t_list, path_scale, seed=0))]
    fn smalltime_rate(
        &self,
        x: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        t_list: Vec<f64>,
        path_scale: f64,
        seed: u64,
    ) -> PyResult<(Vec<(f64, f64, f64, f64)>, Option<f64>)> {
        let region =
            RegionSpec::new("region", OpenBox::new(lower, upper).map_err(err)?).map_err(err)?;
        let table =
            smalltime::smalltime_rate(self.process()?, &x, &[region], &t_list, path_scale, seed)
                .map_err(err)?;
        let rows = table
            .rows
            .iter()
            .map(|r| (r.t, r.rate.value, r.rate.std_error, r.nu_value))
            .collect();
        Ok((rows, table.fit_for("region").and_then(|f| f.intercept())))
    }

    fn __repr__(&self) -> String {
        format!("Spec({})", self.doc.id())
    }
}

impl PySpec {
    fn from_doc(doc: SpecDoc) -> PyResult<Self> {
        let process = match doc.process {
            Some(_) => Some(doc.process().map_err(err)?),
            None => doc.process().ok(),
        };
        doc.dim().map_err(err)?;
        Ok(Self { doc, process })
    }
}

/// Paths on a time grid.
#[pyclass(name = "Paths", frozen)]
struct PyPaths {
    inner: PathEnsemble,
}

#[pymethods]
impl PyPaths {
    #[getter]
    fn n_paths(&self) -> usize {
        self.inner.n_paths()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    fn state(&self, path: usize, k: usize) -> PyResult<Vec<f64>> {
        if path >= self.inner.n_paths() || k >= self.inner.grid().len() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.state(path, k).to_vec())
    }

    /// All states at grid index `k`, one row per path.
    fn snapshot(&self, k: usize) -> PyResult<Vec<Vec<f64>>> {
        if k >= self.inner.grid().len() {
            return Err(PyValueError::new_err("grid index out of range"));
        }
        Ok(self.inner.snapshot(k).rows().map(<[f64]>::to_vec).collect())
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(err)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }
}

/// A test function from the shipped families.
#[pyclass(name = "TestFunction", frozen)]
struct PyFunction {
    inner: TestFunction,
}

#[pymethods]
impl PyFunction {
    #[staticmethod]
    #[pyo3(signature = (weights, shift=0.0, scale=1.0))]
    fn logistic(weights: Vec<f64>, shift: f64, scale: f64) -> Self {
        Self {
            inner: TestFunction::logistic(weights, shift, scale),
        }
    }

    #[staticmethod]
    fn coordinate_logistic(dim: usize, i: usize) -> PyResult<Self> {
        if i >= dim {
            return Err(PyValueError::new_err("coordinate out of range"));
        }
        Ok(Self {
            inner: TestFunction::coordinate_logistic(dim, i),
        })
    }

    #[staticmethod]
    fn upper_orthant(thresholds: Vec<f64>) -> Self {
        Self {
            inner: TestFunction::upper_orthant(thresholds),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: json::from_str(text).map_err(err)?,
        })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "expected {} coordinates",
                self.inner.dim()
            )));
        }
        Ok(self.inner.eval(&x))
    }
}

/// Result of one dependence test.
#[pyclass(name = "DependenceReport", frozen)]
struct PyReport {
    inner: DependenceReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn test(&self) -> &'static str {
        self.inner.test.label()
    }

    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict.label()
    }

    /// `(id, estimate, se, verdict)` per instance.
    #[getter]
    fn rows(&self) -> Vec<(String, f64, f64, &'static str)> {
        self.inner
            .rows
            .iter()
            .map(|r| (r.id.clone(), r.estimate, r.se, r.verdict.label()))
            .collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!("DependenceReport({}, {})", self.test(), self.verdict())
    }
}

fn test_kind(label: &str) -> PyResult<TestKind> {
    TestKind::SPATIAL
        .into_iter()
        .find(|k| k.label() == label)
        .ok_or_else(|| PyValueError::new_err(format!("unknown spatial test `{label}`")))
}

/// Runs one spatial test on samples given as rows.
#[pyfunction]
#[pyo3(signature = (kind, samples, bank_size=32, seed=0, thresholds=None))]
fn dependence_test(
    kind: &str,
    samples: Vec<Vec<f64>>,
    bank_size: usize,
    seed: u64,
    thresholds: Option<Vec<Vec<f64>>>,
) -> PyResult<PyReport> {
    let m = SampleMatrix::from_rows(&samples).map_err(err)?;
    let inner =
        dependence::spatial_test(test_kind(kind)?, &m, bank_size, seed, thresholds.as_deref())
            .map_err(err)?;
    Ok(PyReport { inner })
}

/// Association of the stacked vector `(X_{t_1}, …, X_{t_m})`.
#[pyfunction]
#[pyo3(signature = (spec, x, grid, n_paths, seed=0, bank_size=32))]
fn temporal_test(
    spec: &PySpec,
    x: Vec<f64>,
    grid: Vec<f64>,
    n_paths: usize,
    seed: u64,
    bank_size: usize,
) -> PyResult<PyReport> {
    let inner =
        dependence::temporal_assoc_test(spec.process()?, &x, &grid, n_paths, seed, bank_size)
            .map_err(err)?;
    Ok(PyReport { inner })
}

/// `(name, family, summary)` for each shipped preset.
#[pyfunction]
fn list_presets() -> Vec<(&'static str, &'static str, &'static str)> {
    presets::PRESETS
        .iter()
        .map(|p| (p.name, p.family, p.summary))
        .collect()
}

#[pymodule]
fn fellerdep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_class::<PyPaths>()?;
    m.add_class::<PyFunction>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(dependence_test, m)?)?;
    m.add_function(wrap_pyfunction!(temporal_test, m)?)?;
    m.add_function(wrap_pyfunction!(list_presets, m)?)?;
    Ok(())
}
