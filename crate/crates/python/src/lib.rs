//! Python bindings for `sope-kernel`.
//!
//! Positions cross the boundary as `PositionIndex` objects, vectors as lists
//! of floats. Library errors surface as `ValueError` (`OSError` for file
//! access).

use std::path::PathBuf;

use ndarray::Array2;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kernel::attention::{attend, AttentionOptions, AttentionReport};
use kernel::commands::{cmd_ablate, cmd_analyze, default_ablation_ratios};
use kernel::config::{load_config, Settings};
use kernel::io::{load_tokens, TokenFormat};
use kernel::sope::{component_scores, phases_for};
use kernel::synthetic::synthetic_scene;
use kernel::{Component, Modality, Scheme, Token, TokenSequence};

fn err(e: kernel::Error) -> PyErr {
    match e {
        kernel::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn modality(tag: &str) -> PyResult<Modality> {
    Modality::from_tag(tag).ok_or_else(|| PyValueError::new_err(format!("unknown modality tag {tag:?}")))
}

fn component(name: &str) -> PyResult<Component> {
    Component::BAND_ORDER
        .into_iter()
        .find(|c| c.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown component {name:?}")))
}

#[pyclass(name = "PositionIndex", frozen, from_py_object)]
#[derive(Clone)]
struct PyPositionIndex {
    inner: kernel::PositionIndex,
}

#[pymethods]
impl PyPositionIndex {
    /// Builds an index from Cartesian coordinates; text tokens must sit at the origin.
    #[new]
    #[pyo3(signature = (t, x=0.0, y=0.0, z=0.0, modality="p"))]
    fn new(t: f64, x: f64, y: f64, z: f64, modality: &str) -> PyResult<Self> {
        let inner = kernel::index_from_cartesian(t, x, y, z, self::modality(modality)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (t, r, theta, phi, modality="p"))]
    fn from_spherical(t: f64, r: f64, theta: f64, phi: f64, modality: &str) -> PyResult<Self> {
        Ok(Self {
            inner: kernel::PositionIndex::from_spherical(t, r, theta, phi, self::modality(modality)?),
        })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }
    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }
    #[getter]
    fn y(&self) -> f64 {
        self.inner.y
    }
    #[getter]
    fn z(&self) -> f64 {
        self.inner.z
    }
    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }
    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }
    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi
    }
    #[getter]
    fn modality(&self) -> String {
        self.inner.modality.tag().to_string()
    }

    fn __repr__(&self) -> String {
        let i = &self.inner;
        format!(
            "PositionIndex(t={}, r={}, theta={}, phi={}, modality='{}')",
            i.t,
            i.r,
            i.theta,
            i.phi,
            i.modality.tag()
        )
    }
}

#[pyclass(name = "EncodingConfig", frozen)]
struct PyEncodingConfig {
    inner: kernel::EncodingConfig,
}

fn sequence(features: Vec<Vec<f64>>, indices: &[PyPositionIndex]) -> PyResult<TokenSequence> {
    if features.len() != indices.len() {
        return Err(PyValueError::new_err(format!(
            "{} feature vectors for {} positions",
            features.len(),
            indices.len()
        )));
    }
    Ok(TokenSequence::new(
        indices
            .iter()
            .zip(features)
            .map(|(i, features)| Token {
                index: i.inner,
                features,
            })
            .collect(),
    ))
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn report_dict<'py>(py: Python<'py>, rep: &AttentionReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("attention", rows(&rep.scores))?;
    d.set_item("row_entropy", rep.row_entropy.clone())?;
    d.set_item("topk_mass", rep.topk_mass.clone())?;
    d.set_item("topk", rep.topk)?;
    d.set_item("cross_modal_mass", rep.cross_modal_mass)?;
    d.set_item("mean_row_entropy", rep.mean_row_entropy())?;
    d.set_item("mean_topk_mass", rep.mean_topk_mass())?;
    Ok(d)
}

#[pymethods]
impl PyEncodingConfig {
    /// `ratio` is `(t, r, theta, phi)`; `periods` likewise. Mixing applies to SoPE only.
    #[new]
    #[pyo3(signature = (scheme="sope", d=128, base=10000.0, ratio=None, mixing=true, periods=None, bases=None, wrap_azimuth=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        scheme: &str,
        d: usize,
        base: f64,
        ratio: Option<[usize; 4]>,
        mixing: bool,
        periods: Option<[f64; 4]>,
        bases: Option<[f64; 3]>,
        wrap_azimuth: bool,
    ) -> PyResult<Self> {
        let scheme: Scheme = scheme.parse().map_err(err)?;
        let mut scale = kernel::ScaleConfig {
            enabled: mixing,
            bases,
            ..Default::default()
        };
        if let Some(p) = periods {
            scale.periods = p;
        }
        let inner = kernel::EncodingConfig::new(scheme, d, base, ratio, scale, wrap_azimuth).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn scheme(&self) -> String {
        self.inner.scheme().name().to_string()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn ratio(&self) -> [usize; 4] {
        self.inner.allocation().ratio()
    }

    /// Pair range `(start, end)` owned by component `"t"`, `"r"`, `"theta"` or `"phi"`.
    fn band(&self, name: &str) -> PyResult<(usize, usize)> {
        let r = self.inner.allocation().range(component(name)?);
        Ok((r.start, r.end))
    }

    fn phases(&self, idx: &PyPositionIndex) -> Vec<f64> {
        phases_for(&idx.inner, &self.inner).into_phases()
    }

    fn score(&self, q: Vec<f64>, k: Vec<f64>, idx1: &PyPositionIndex, idx2: &PyPositionIndex) -> PyResult<f64> {
        kernel::score(&q, &k, &idx1.inner, &idx2.inner, &self.inner).map_err(err)
    }

    /// Per-band score contributions ordered `(t, r, theta, phi)`.
    fn component_scores(
        &self,
        q: Vec<f64>,
        k: Vec<f64>,
        idx1: &PyPositionIndex,
        idx2: &PyPositionIndex,
    ) -> PyResult<[f64; 4]> {
        component_scores(&q, &k, &idx1.inner, &idx2.inner, &self.inner).map_err(err)
    }

    fn encode(&self, features: Vec<Vec<f64>>, indices: Vec<PyPositionIndex>) -> PyResult<Vec<Vec<f64>>> {
        let seq = sequence(features, &indices)?;
        let out = kernel::encode(&seq, &self.inner, kernel::Role::Query).map_err(err)?;
        Ok(out.tokens.into_iter().map(|t| t.features).collect())
    }

    /// Raw logits plus softmax attention and bias metrics, as a dict.
    #[pyo3(signature = (queries, keys, query_indices, key_indices, scale=true, causal=false, topk_frac=0.05))]
    #[allow(clippy::too_many_arguments)]
    fn attend<'py>(
        &self,
        py: Python<'py>,
        queries: Vec<Vec<f64>>,
        keys: Vec<Vec<f64>>,
        query_indices: Vec<PyPositionIndex>,
        key_indices: Vec<PyPositionIndex>,
        scale: bool,
        causal: bool,
        topk_frac: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let q = sequence(queries, &query_indices)?;
        let k = sequence(keys, &key_indices)?;
        let opts = AttentionOptions {
            scale_by_sqrt_d: scale,
            causal,
            topk_frac,
        };
        let (raw, rep) = attend(&q, &k, &self.inner, &opts).map_err(err)?;
        let d = report_dict(py, &rep)?;
        d.set_item("raw", rows(&raw))?;
        Ok(d)
    }
}

#[pyfunction]
#[pyo3(signature = (d, base=10000.0))]
fn base_angles(d: usize, base: f64) -> PyResult<Vec<f64>> {
    Ok(kernel::base_angles(d, base).map_err(err)?.as_slice().to_vec())
}

/// Pair ranges keyed by component name.
#[pyfunction]
fn allocate_bands<'py>(py: Python<'py>, ratio: [usize; 4], d: usize) -> PyResult<Bound<'py, PyDict>> {
    let alloc = kernel::allocate_bands(ratio, d).map_err(err)?;
    let out = PyDict::new(py);
    for c in Component::BAND_ORDER {
        let r = alloc.range(c);
        out.set_item(c.name(), (r.start, r.end))?;
    }
    Ok(out)
}

#[pyfunction]
fn cart_to_sph(x: f64, y: f64, z: f64) -> PyResult<(f64, f64, f64)> {
    kernel::cart_to_sph(x, y, z).map_err(err)
}

#[pyfunction]
fn sph_to_cart(r: f64, theta: f64, phi: f64) -> PyResult<(f64, f64, f64)> {
    kernel::sph_to_cart(r, theta, phi).map_err(err)
}

/// `a - b` as `(dt, dr, dtheta, dphi)`.
#[pyfunction]
#[pyo3(signature = (a, b, wrap_azimuth=false))]
fn displacement(a: &PyPositionIndex, b: &PyPositionIndex, wrap_azimuth: bool) -> (f64, f64, f64, f64) {
    let d = kernel::displacement(&a.inner, &b.inner, wrap_azimuth);
    (d.dt, d.dr, d.dtheta, d.dphi)
}

#[pyfunction]
#[pyo3(signature = (t, d, base=10000.0))]
fn rope_phases(t: f64, d: usize, base: f64) -> PyResult<Vec<f64>> {
    let a = kernel::base_angles(d, base).map_err(err)?;
    Ok(kernel::rope_phases(t, &a).into_phases())
}

#[pyfunction]
fn apply_rotation(v: Vec<f64>, phases: Vec<f64>) -> PyResult<Vec<f64>> {
    kernel::apply_rotation(&v, &kernel::RotationPlan::new(phases)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (q, k, t1, t2, base=10000.0))]
fn rope_score(q: Vec<f64>, k: Vec<f64>, t1: f64, t2: f64, base: f64) -> PyResult<f64> {
    let a = kernel::base_angles(q.len(), base).map_err(err)?;
    kernel::rope_score(&q, &k, t1, t2, &a).map_err(err)
}

#[pyfunction]
fn dense_score(q: Vec<f64>, k: Vec<f64>, phases_q: Vec<f64>, phases_k: Vec<f64>) -> PyResult<f64> {
    kernel::dense_score(
        &q,
        &k,
        &kernel::RotationPlan::new(phases_q),
        &kernel::RotationPlan::new(phases_k),
    )
    .map_err(err)
}

#[pyfunction]
fn g_lin(u: f64) -> f64 {
    kernel::g_lin(u)
}

#[pyfunction]
fn g_log(u: f64) -> f64 {
    kernel::g_log(u)
}

#[pyfunction]
fn g_per(u: f64, period: f64) -> PyResult<f64> {
    kernel::g_per(u, period).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (u, k, d, component, base=10000.0, periods=None))]
fn mixed_phase(u: f64, k: usize, d: usize, component: &str, base: f64, periods: Option<[f64; 4]>) -> PyResult<f64> {
    let a = kernel::base_angles(d, base).map_err(err)?;
    if k >= a.pairs() {
        return Err(PyValueError::new_err(format!("pair {k} out of range for d={d}")));
    }
    let mut cfg = kernel::ScaleConfig::default();
    if let Some(p) = periods {
        cfg.periods = p;
    }
    cfg.validate().map_err(err)?;
    Ok(kernel::mixed_phase(u, k, &a, &cfg, self::component(component)?))
}

/// Metrics of a row-stochastic matrix given per-row and per-column modality tags.
#[pyfunction]
#[pyo3(signature = (p, query_modalities, key_modalities, topk_frac=0.05))]
fn bias_metrics<'py>(
    py: Python<'py>,
    p: Vec<Vec<f64>>,
    query_modalities: Vec<String>,
    key_modalities: Vec<String>,
    topk_frac: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let n = p.len();
    let m = p.first().map_or(0, Vec::len);
    if p.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    let arr = Array2::from_shape_vec((n, m), p.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let qm = query_modalities.iter().map(|s| modality(s)).collect::<PyResult<Vec<_>>>()?;
    let km = key_modalities.iter().map(|s| modality(s)).collect::<PyResult<Vec<_>>>()?;
    let rep = kernel::bias_metrics(&arr, &qm, &km, topk_frac).map_err(err)?;
    report_dict(py, &rep)
}

fn load_inputs(
    tokens: Option<PathBuf>,
    synthetic: Option<usize>,
    format: &str,
    config: Option<PathBuf>,
    seed: Option<u64>,
) -> PyResult<(TokenSequence, Settings)> {
    let mut settings = match config {
        Some(p) => load_config(&p).map_err(err)?,
        None => Settings::default(),
    };
    if let Some(s) = seed {
        settings.seed = s;
    }
    let seq = match (tokens, synthetic) {
        (Some(path), None) => load_tokens(&path, format.parse::<TokenFormat>().map_err(err)?).map_err(err)?,
        (None, Some(n)) => TokenSequence::new(
            synthetic_scene(n, settings.seed)
                .map_err(err)?
                .into_iter()
                .map(|index| Token {
                    index,
                    features: Vec::new(),
                })
                .collect(),
        ),
        _ => return Err(PyValueError::new_err("pass exactly one of tokens or synthetic")),
    };
    Ok((seq, settings))
}

/// Scheme comparison report, identical to `sope-kernel analyze`.
#[pyfunction]
#[pyo3(signature = (tokens=None, synthetic=None, format="xyz", config=None, seed=None))]
fn analyze(
    tokens: Option<PathBuf>,
    synthetic: Option<usize>,
    format: &str,
    config: Option<PathBuf>,
    seed: Option<u64>,
) -> PyResult<String> {
    let (seq, settings) = load_inputs(tokens, synthetic, format, config, seed)?;
    cmd_analyze(&seq, &settings, &AttentionOptions::default()).map_err(err)
}

/// Ratio sweep report, identical to `sope-kernel ablate`.
#[pyfunction]
#[pyo3(signature = (tokens=None, synthetic=None, ratios=None, format="xyz", config=None, seed=None))]
fn ablate(
    tokens: Option<PathBuf>,
    synthetic: Option<usize>,
    ratios: Option<Vec<String>>,
    format: &str,
    config: Option<PathBuf>,
    seed: Option<u64>,
) -> PyResult<String> {
    let (seq, settings) = load_inputs(tokens, synthetic, format, config, seed)?;
    let ratios = ratios.unwrap_or_else(default_ablation_ratios);
    cmd_ablate(&seq, &settings, &ratios, &AttentionOptions::default()).map_err(err)
}

#[pymodule]
fn sope_kernel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPositionIndex>()?;
    m.add_class::<PyEncodingConfig>()?;
    m.add_function(wrap_pyfunction!(base_angles, m)?)?;
    m.add_function(wrap_pyfunction!(allocate_bands, m)?)?;
    m.add_function(wrap_pyfunction!(cart_to_sph, m)?)?;
    m.add_function(wrap_pyfunction!(sph_to_cart, m)?)?;
    m.add_function(wrap_pyfunction!(displacement, m)?)?;
    m.add_function(wrap_pyfunction!(rope_phases, m)?)?;
    m.add_function(wrap_pyfunction!(apply_rotation, m)?)?;
    m.add_function(wrap_pyfunction!(rope_score, m)?)?;
    m.add_function(wrap_pyfunction!(dense_score, m)?)?;
    m.add_function(wrap_pyfunction!(g_lin, m)?)?;
    m.add_function(wrap_pyfunction!(g_log, m)?)?;
    m.add_function(wrap_pyfunction!(g_per, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_phase, m)?)?;
    m.add_function(wrap_pyfunction!(bias_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(ablate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
