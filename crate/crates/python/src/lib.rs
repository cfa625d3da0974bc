//! Python bindings for `kondolab`.

use std::path::PathBuf;

use kondolab::bath::{BathSpec, Units};
use kondolab::lifetimes::{self, CodePoint, JzStar, Preset};
use kondolab::rg::{self, CouplingVector, FlowOptions, FlowTrace, Terminal};
use kondolab::surface_code::{self, ErrorChain, Pauli, SurfaceCode, TieBreak};
use kondolab::sweep::{self, parse_rational, RunOverrides, SweepError};
use kondolab::wick::{self, MatchingProblem};
use kondolab::Error;
use num_rational::Rational64;
use pyo3::exceptions::{PyFileExistsError, PyMemoryError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ResourceLimit(msg) => PyMemoryError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn sweep_to_py(e: SweepError) -> PyErr {
    match &e {
        SweepError::Config { .. } => PyValueError::new_err(e.to_string()),
        SweepError::Resource(_) => PyMemoryError::new_err(e.to_string()),
        SweepError::OutputExists(_) => PyFileExistsError::new_err(e.to_string()),
        SweepError::Io(_) => PyOSError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?
        .call_method1("loads", (value.to_string(),))
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational64> {
    if let Ok(text) = obj.extract::<String>() {
        return parse_rational(&text).map_err(PyValueError::new_err);
    }
    if let Ok(i) = obj.extract::<i64>() {
        return Ok(Rational64::from_integer(i));
    }
    let x: f64 = obj.extract()?;
    parse_rational(&format!("{x}")).map_err(PyValueError::new_err)
}

fn pauli(kind: &str) -> PyResult<Pauli> {
    match kind {
        "X" | "x" => Ok(Pauli::X),
        "Z" | "z" => Ok(Pauli::Z),
        other => Err(PyValueError::new_err(format!(
            "unknown Pauli '{other}' (expected X or Z)"
        ))),
    }
}

fn tie_break(rule: &str) -> PyResult<TieBreak> {
    rule.parse().map_err(to_py)
}

/// Planar surface code of even distance `L`.
#[pyclass(name = "SurfaceCode", module = "kondolab_py", frozen)]
struct PySurfaceCode {
    inner: SurfaceCode,
}

#[pymethods]
impl PySurfaceCode {
    #[new]
    fn new(distance: usize) -> PyResult<Self> {
        Ok(PySurfaceCode {
            inner: surface_code::build_code(distance).map_err(to_py)?,
        })
    }

    #[getter]
    fn distance(&self) -> usize {
        self.inner.distance()
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    #[getter]
    fn stars(&self) -> Vec<Vec<usize>> {
        self.inner.stars().to_vec()
    }

    #[getter]
    fn plaquettes(&self) -> Vec<Vec<usize>> {
        self.inner.plaquettes().to_vec()
    }

    #[getter]
    fn logical_x(&self) -> Vec<usize> {
        self.inner.logical_x().to_vec()
    }

    #[getter]
    fn logical_z(&self) -> Vec<usize> {
        self.inner.logical_z().to_vec()
    }

    /// Indices of the stabilizers flipped by a Pauli chain.
    fn syndrome(&self, kind: &str, support: Vec<usize>) -> PyResult<Vec<usize>> {
        let chain = ErrorChain::new(pauli(kind)?, support);
        let s = surface_code::syndrome_of(&self.inner, &chain).map_err(to_py)?;
        Ok(s.defects.into_iter().collect())
    }

    fn __repr__(&self) -> String {
        format!("SurfaceCode(distance={})", self.inner.distance())
    }
}

/// Decodes a Z chain on a length-`l` contour; returns status, correction and ambiguity.
#[pyfunction]
#[pyo3(signature = (l, support, rule = "report"))]
fn decode_contour<'py>(
    py: Python<'py>,
    l: usize,
    support: Vec<usize>,
    rule: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let truth = ErrorChain::z(support);
    let syndrome = surface_code::contour_syndrome(l, &truth).map_err(to_py)?;
    let out =
        surface_code::decode_contour(l, &syndrome, &truth, tie_break(rule)?).map_err(to_py)?;
    let d = PyDict::new(py);
    let status = match out.status {
        surface_code::DecodeStatus::Success => "success",
        surface_code::DecodeStatus::LogicalError => "logical_error",
        surface_code::DecodeStatus::Tie => "tie",
    };
    d.set_item("status", status)?;
    d.set_item(
        "correction",
        out.correction.support.into_iter().collect::<Vec<_>>(),
    )?;
    d.set_item("ambiguous", out.ambiguous)?;
    d.set_item("syndrome", syndrome.defects.into_iter().collect::<Vec<_>>())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (l, weight, rule = "report"))]
fn failure_census<'py>(
    py: Python<'py>,
    l: usize,
    weight: usize,
    rule: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| surface_code::failure_census(l, weight, rule.parse::<TieBreak>()?))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("L", r.l)?;
    d.set_item("weight", r.weight)?;
    d.set_item("rule", r.rule.as_str())?;
    d.set_item("n_success", r.n_success)?;
    d.set_item("n_logical", r.n_logical)?;
    d.set_item("n_tie", r.n_tie)?;
    Ok(d)
}

/// Sum over perfect matchings of `prod |x_i - x_j|^{-2z}`.
#[pyfunction]
fn matching_sum(py: Python<'_>, positions: Vec<i64>, z: f64) -> PyResult<f64> {
    let problem = MatchingProblem::new(positions, z).map_err(to_py)?;
    py.detach(|| wick::matching_sum(&problem)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n_values, z, allow_large = false))]
fn matching_scaling_probe<'py>(
    py: Python<'py>,
    n_values: Vec<usize>,
    z: f64,
    allow_large: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let probe = py
        .detach(|| wick::matching_scaling_probe(&n_values, z, allow_large))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("z", probe.z)?;
    d.set_item("n", probe.samples.iter().map(|s| s.n).collect::<Vec<_>>())?;
    d.set_item(
        "matching_sum",
        probe
            .samples
            .iter()
            .map(|s| s.matching_sum)
            .collect::<Vec<_>>(),
    )?;
    d.set_item("per_pair_weight", probe.weights())?;
    d.set_item("local_slopes", probe.local_slopes.clone())?;
    d.set_item("trend", probe.trend.label())?;
    d.set_item("loglog_slope", probe.loglog_slope())?;
    Ok(d)
}

/// Exact path count `L * C(L, L/2)` as a Python int.
#[pyfunction]
fn n_paths<'py>(py: Python<'py>, l: usize) -> PyResult<Bound<'py, PyAny>> {
    let n = wick::n_paths(l).map_err(to_py)?;
    py.import("builtins")?
        .getattr("int")?
        .call1((n.to_string(),))
}

#[pyfunction]
fn n_paths_stirling(l: usize) -> PyResult<f64> {
    wick::n_paths_stirling(l).map_err(to_py)
}

#[pyfunction]
fn stirling_ratio(l: usize) -> PyResult<f64> {
    wick::stirling_ratio(l).map_err(to_py)
}

#[pyfunction]
fn classify_regime(z: f64, s: f64) -> &'static str {
    wick::classify_regime(z, s).as_str()
}

#[pyfunction]
fn threshold_exists(z: f64, s: f64) -> bool {
    lifetimes::threshold_exists(z, s)
}

/// Bath and cycle parameters. `z` and `alpha` accept numbers or `"p/q"` strings.
#[pyclass(name = "BathSpec", module = "kondolab_py", frozen)]
struct PyBathSpec {
    inner: BathSpec,
}

#[pymethods]
impl PyBathSpec {
    #[new]
    #[pyo3(signature = (z = None, s = 1.0, lambda_ = 0.01, v = 1.0, a = 1.0, a0 = 1.0, d_dim = 2, alpha = None, temperature = 0.0, tau_qec = 1.0, si_units = false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        z: Option<&Bound<'_, PyAny>>,
        s: f64,
        lambda_: f64,
        v: f64,
        a: f64,
        a0: f64,
        d_dim: u32,
        alpha: Option<&Bound<'_, PyAny>>,
        temperature: f64,
        tau_qec: f64,
        si_units: bool,
    ) -> PyResult<Self> {
        let inner = BathSpec {
            z: z.map(rational)
                .transpose()?
                .unwrap_or(Rational64::from_integer(1)),
            s,
            lambda: lambda_,
            v,
            a,
            a0,
            d_dim,
            alpha: alpha
                .map(rational)
                .transpose()?
                .unwrap_or(Rational64::from_integer(0)),
            temperature,
            tau_qec,
            units: if si_units { Units::SI } else { Units::NATURAL },
        };
        inner.validate().map_err(to_py)?;
        Ok(PyBathSpec { inner })
    }

    #[getter]
    fn z(&self) -> String {
        self.inner.z.to_string()
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn tau_qec(&self) -> f64 {
        self.inner.tau_qec
    }

    fn ohmic_constraint_holds(&self) -> bool {
        kondolab::bath::ohmic_constraint_holds(&self.inner)
    }

    fn temporal_correlator(&self, t1: f64, t2: f64) -> PyResult<f64> {
        kondolab::bath::temporal_correlator(&self.inner, t1, t2).map_err(to_py)
    }

    fn spatial_correlator(&self, x1: f64, x2: f64) -> PyResult<f64> {
        kondolab::bath::spatial_correlator(&self.inner, x1, x2).map_err(to_py)
    }

    fn thermal_correlator(&self, t: f64) -> PyResult<f64> {
        kondolab::bath::thermal_correlator(&self.inner, t).map_err(to_py)
    }

    fn lambda_bar_sq(&self, l: usize) -> PyResult<f64> {
        wick::lambda_bar_sq(&self.inner, l).map_err(to_py)
    }

    fn j_of_l(&self, l: usize) -> PyResult<f64> {
        lifetimes::j_of_l(&self.inner, l).map_err(to_py)
    }

    fn critical_coupling(&self, l: usize) -> PyResult<f64> {
        Ok(lifetimes::critical_coupling(&self.inner, l)
            .map_err(to_py)?
            .lambda_c)
    }

    /// Full lifetime report as a dict; pass `jz_star` for the ferromagnetic phase.
    #[pyo3(signature = (l, epsilon = 0.01, jz_star = None))]
    fn lifetime_report<'py>(
        &self,
        py: Python<'py>,
        l: usize,
        epsilon: f64,
        jz_star: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut point = CodePoint::new(l, epsilon, self.inner.clone());
        if let Some(v) = jz_star {
            point = point.ferromagnetic(JzStar::user(v));
        }
        let report = lifetimes::evaluate(&point).map_err(to_py)?;
        json_to_py(py, &report.to_json())
    }

    fn __repr__(&self) -> String {
        format!(
            "BathSpec(z={}, s={}, lambda_={}, tau_qec={})",
            self.inner.z, self.inner.s, self.inner.lambda, self.inner.tau_qec
        )
    }
}

/// Integrated RG trajectory.
#[pyclass(name = "FlowTrace", module = "kondolab_py", frozen)]
struct PyFlowTrace {
    inner: FlowTrace,
}

#[pymethods]
impl PyFlowTrace {
    #[getter]
    fn terminal(&self) -> &'static str {
        self.inner.terminal.label()
    }

    /// Terminal scale: extrapolated pole, localization point, or cutoff.
    #[getter]
    fn l_terminal(&self) -> f64 {
        self.inner.terminal.scale()
    }

    #[getter]
    fn l_star(&self) -> Option<f64> {
        match self.inner.terminal {
            Terminal::StrongCoupling { l_star, .. } => Some(l_star),
            _ => None,
        }
    }

    #[getter]
    fn jz_star(&self) -> Option<f64> {
        match self.inner.terminal {
            Terminal::Localized { j_star, .. } => Some(j_star.jz),
            _ => None,
        }
    }

    #[getter]
    fn invariant_drift(&self) -> f64 {
        self.inner.invariant_drift
    }

    #[getter]
    fn l(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.l).collect()
    }

    /// Samples as `(jx, jy, jz)` tuples.
    #[getter]
    fn couplings(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .samples
            .iter()
            .map(|s| (s.j.jx, s.j.jy, s.j.jz))
            .collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }
}

fn flow_options(
    j_max: f64,
    j_min: f64,
    l_max: f64,
    abs_tol: f64,
    rel_tol: f64,
    sample_stride: usize,
) -> FlowOptions {
    FlowOptions {
        j_max,
        j_min,
        l_max,
        abs_tol,
        rel_tol,
        sample_stride,
        ..FlowOptions::default()
    }
}

#[pyfunction]
#[pyo3(signature = (jx, jy, jz, j_max = 1.0, j_min = 1e-8, l_max = 1e3, abs_tol = 1e-10, rel_tol = 1e-10, sample_stride = 1))]
#[allow(clippy::too_many_arguments)]
fn integrate_flow(
    py: Python<'_>,
    jx: f64,
    jy: f64,
    jz: f64,
    j_max: f64,
    j_min: f64,
    l_max: f64,
    abs_tol: f64,
    rel_tol: f64,
    sample_stride: usize,
) -> PyResult<PyFlowTrace> {
    let opts = flow_options(j_max, j_min, l_max, abs_tol, rel_tol, sample_stride);
    let inner = py
        .detach(|| rg::integrate_flow(CouplingVector::new(jx, jy, jz), &opts))
        .map_err(to_py)?;
    Ok(PyFlowTrace { inner })
}

/// "FM" or "AFM" for a bare coupling vector.
#[pyfunction]
fn classify_phase(jx: f64, jy: f64, jz: f64) -> PyResult<&'static str> {
    let v = rg::classify_phase(CouplingVector::new(jx, jy, jz), &FlowOptions::default())
        .map_err(to_py)?;
    Ok(v.phase.as_str())
}

#[pyfunction]
fn t_comp_from_coupling(epsilon: f64, tau: f64, j: f64) -> f64 {
    lifetimes::t_comp_from_coupling(epsilon, tau, j)
}

#[pyfunction]
fn t_comp_subohmic(epsilon: f64, tau: f64, j: f64, s: f64) -> PyResult<f64> {
    lifetimes::t_comp_subohmic_from_coupling(epsilon, tau, j, s).map_err(to_py)
}

/// `(exact, approx)` ferromagnetic memory time.
#[pyfunction]
fn memory_time(epsilon: f64, tau: f64, jz_star: f64) -> PyResult<(f64, f64)> {
    let m = lifetimes::memory_time(epsilon, tau, jz_star).map_err(to_py)?;
    Ok((m.exact, m.approx))
}

#[pyfunction]
fn thermal_t2(jz_star: f64, thermal_rate: f64) -> f64 {
    lifetimes::thermal_t2(jz_star, thermal_rate)
}

#[pyfunction]
fn korringa_rate(j: f64, thermal_rate: f64) -> f64 {
    lifetimes::korringa_rate(j, thermal_rate)
}

#[pyfunction]
#[pyo3(signature = (name, l_grid = None))]
fn preset_report<'py>(
    py: Python<'py>,
    name: &str,
    l_grid: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let preset: Preset = name.parse().map_err(to_py)?;
    let grid = l_grid.unwrap_or_else(|| lifetimes::SUPERCONDUCTING_DEFAULT_L.to_vec());
    let grid = if preset == Preset::NeutralAtom {
        Vec::new()
    } else {
        grid
    };
    let report = lifetimes::preset_report(preset, &grid).map_err(to_py)?;
    json_to_py(py, &report.to_json())
}

/// Runs a JSON sweep configuration and returns `(task, output_path, records)`.
#[pyfunction]
#[pyo3(signature = (config_json, output_path = None, workers = None, force = false))]
fn run_sweep(
    py: Python<'_>,
    config_json: &str,
    output_path: Option<PathBuf>,
    workers: Option<usize>,
    force: bool,
) -> PyResult<(String, String, usize)> {
    let cfg = sweep::parse_config(config_json).map_err(sweep_to_py)?;
    let overrides = RunOverrides {
        output_path,
        workers,
        force,
    };
    let summary = py
        .detach(|| sweep::run(&cfg, &overrides))
        .map_err(sweep_to_py)?;
    Ok((
        summary.task.as_str().to_string(),
        summary.output_path.display().to_string(),
        summary.records,
    ))
}

/// Phase-portrait CSV for `(j_perp, j_z)` starts.
#[pyfunction]
#[pyo3(signature = (starts, workers = 1))]
fn phase_portrait(py: Python<'_>, starts: Vec<(f64, f64)>, workers: usize) -> PyResult<String> {
    py.detach(|| sweep::emit_phase_portrait(&starts, &FlowOptions::default(), workers))
        .map_err(sweep_to_py)
}

#[pymodule]
fn kondolab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySurfaceCode>()?;
    m.add_class::<PyBathSpec>()?;
    m.add_class::<PyFlowTrace>()?;
    m.add_function(wrap_pyfunction!(decode_contour, m)?)?;
    m.add_function(wrap_pyfunction!(failure_census, m)?)?;
    m.add_function(wrap_pyfunction!(matching_sum, m)?)?;
    m.add_function(wrap_pyfunction!(matching_scaling_probe, m)?)?;
    m.add_function(wrap_pyfunction!(n_paths, m)?)?;
    m.add_function(wrap_pyfunction!(n_paths_stirling, m)?)?;
    m.add_function(wrap_pyfunction!(stirling_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(classify_regime, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_exists, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_flow, m)?)?;
    m.add_function(wrap_pyfunction!(classify_phase, m)?)?;
    m.add_function(wrap_pyfunction!(t_comp_from_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(t_comp_subohmic, m)?)?;
    m.add_function(wrap_pyfunction!(memory_time, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_t2, m)?)?;
    m.add_function(wrap_pyfunction!(korringa_rate, m)?)?;
    m.add_function(wrap_pyfunction!(preset_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(phase_portrait, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
