//! Python bindings for the `hardcore` crate.

use std::collections::BTreeSet;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

use hardcore::assumption::{verify_assumption, AssumptionParams, Mode};
use hardcore::boundary::{xi_sharp, XiOptions};
use hardcore::constants::{build_system, compute_constants, ModelConstants};
use hardcore::contour::extract_gfcs;
use hardcore::corpus::{round_trip, small_rational};
use hardcore::enumerate::box_region;
use hardcore::expansion::polymer_identity;
use hardcore::lattice::{PeriodicGraph, Region, Site};
use hardcore::local::{max_local_configs as local_search, DEFAULT_LOCAL_BUDGET};
use hardcore::montecarlo::{run, RunOptions};
use hardcore::rational::{fmt_big, fmt_q, parse_big};
use hardcore::shape::{Shape, ShapeDescriptor};
use hardcore::system::Patch;
use hardcore::voronoi::Voronoi;

fn err(e: hardcore::Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.kind()))
}

fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<PyObject> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import_bound("json")?.call_method1("loads", (text,))?.unbind())
}

fn mode(s: &str) -> PyResult<Mode> {
    s.parse::<Mode>().map_err(err)
}

fn site(p: &[i32], cell: u16) -> Site {
    let mut t = [0; 3];
    t[..p.len().min(3)].copy_from_slice(&p[..p.len().min(3)]);
    Site::new(t, cell)
}

fn window(g: &PeriodicGraph, width: i32, height: i32) -> PyResult<Region> {
    if width <= 0 || height <= 0 {
        return Err(PyValueError::new_err("window sides must be positive"));
    }
    Ok(box_region([0, 0, 0], [width - 1, height - 1, 0], g.num_cells()))
}

fn fugacities(z: Vec<String>) -> PyResult<Vec<num_rational::BigRational>> {
    z.iter().map(|s| parse_big(s).map_err(err)).collect()
}

/// A model file: lattice, particle shape and search settings.
#[pyclass(module = "hardcore_py")]
struct Model {
    inner: hardcore::model::Model,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model { inner: hardcore::model::Model::load(&path).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Model { inner: hardcore::model::Model::from_json(text).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.graph.dim
    }

    /// Assumption verdicts and derived radii as a dict.
    #[pyo3(signature = (mode = "paper-compat"))]
    fn verify_assumption(&self, py: Python<'_>, mode: &str) -> PyResult<PyObject> {
        let m = self::mode(mode)?;
        let r = py.allow_threads(|| verify_assumption(&self.inner, &AssumptionParams::for_model(&self.inner, m))).map_err(err)?;
        let mut j = r.to_json(self.inner.graph.dim);
        j["passed"] = r.passed().into();
        to_py(py, &j)
    }

    /// Exact constants chain; rationals are returned as strings.
    #[pyo3(signature = (mode = "paper-compat"))]
    fn constants(&self, py: Python<'_>, mode: &str) -> PyResult<PyObject> {
        let m = self::mode(mode)?;
        let c = py.allow_threads(|| -> hardcore::Result<ModelConstants> {
            let r = verify_assumption(&self.inner, &AssumptionParams::for_model(&self.inner, m))?;
            compute_constants(&self.inner, &r, m)
        });
        to_py(py, &c.map_err(err)?.to_json())
    }

    /// Inverse local density of each particle of a finite configuration; None for unbounded cells.
    fn inverse_densities(&self, particles: Vec<Vec<i32>>) -> PyResult<Vec<(Vec<i32>, Option<String>)>> {
        let set: BTreeSet<Site> = particles.iter().map(|p| site(p, 0)).collect();
        let vor = Voronoi::new(&self.inner.graph, &self.inner.shape, &set, self.inner.shape.reach() + 2);
        let dim = self.inner.graph.dim;
        Ok((0..vor.particles.len()).map(|i| (vor.particles[i].t[..dim].to_vec(), vor.inv_density(i).ok().map(|q| fmt_q(&q)))).collect())
    }

    fn __repr__(&self) -> String {
        format!("Model({:?})", self.inner.name())
    }
}

/// A model together with its ground states and constants, ready for contour work.
#[pyclass(module = "hardcore_py")]
struct System {
    sys: hardcore::system::System,
    constants: ModelConstants,
}

#[pymethods]
impl System {
    #[new]
    #[pyo3(signature = (model, mode = "paper-compat"))]
    fn new(py: Python<'_>, model: &Model, mode: &str) -> PyResult<Self> {
        let m = self::mode(mode)?;
        let model = &model.inner;
        let (sys, constants) = py
            .allow_threads(|| -> hardcore::Result<_> {
                let r = verify_assumption(model, &AssumptionParams::for_model(model, m))?;
                let c = compute_constants(model, &r, m)?;
                Ok((build_system(model, &r, &c)?, c))
            })
            .map_err(err)?;
        Ok(System { sys, constants })
    }

    #[getter]
    fn ground_state_count(&self) -> usize {
        self.sys.grounds.len()
    }

    #[getter]
    fn r2(&self) -> u32 {
        self.sys.r2
    }

    #[getter]
    fn rho_max(&self) -> String {
        fmt_q(&self.sys.rho_max)
    }

    #[getter]
    fn rho0(&self) -> String {
        fmt_big(&self.constants.rho0)
    }

    /// Contours of ground state `base` with `removed` sites emptied and `added` sites occupied.
    #[pyo3(signature = (base, removed, added = Vec::new()))]
    fn contours(&self, py: Python<'_>, base: usize, removed: Vec<Vec<i32>>, added: Vec<Vec<i32>>) -> PyResult<PyObject> {
        if base >= self.sys.grounds.len() {
            return Err(PyValueError::new_err(format!("ground state {base} out of range")));
        }
        let gs = self.sys.ground(base);
        let removed: Vec<Site> = removed.iter().map(|p| site(p, 0)).collect();
        let added: Vec<Site> = added.iter().map(|p| site(p, 0)).collect();
        let region: Region = removed.iter().chain(&added).copied().collect();
        let inside: BTreeSet<Site> = region.iter().filter(|s| added.contains(s) || (gs.contains(s) && !removed.contains(s))).copied().collect();
        let patch = Patch::new(base, region, inside).map_err(err)?;
        if !patch.is_valid(&self.sys) {
            return Err(PyValueError::new_err("invalid_configuration: particles overlap"));
        }
        let found = extract_gfcs(&self.sys, &patch).map_err(err)?;
        let dim = self.sys.g.dim;
        to_py(py, &serde_json::Value::Array(found.iter().map(|g| g.to_json(dim)).collect()))
    }

    /// Exact partition function on a `width x height` box under ground state `ground_state`.
    #[pyo3(signature = (width, height, z = vec!["1".to_string()], ground_state = 0, forced = true))]
    fn xi(&self, py: Python<'_>, width: i32, height: i32, z: Vec<String>, ground_state: usize, forced: bool) -> PyResult<PyObject> {
        let lambda = window(&self.sys.g, width, height)?;
        let zs = fugacities(z)?;
        let opts = XiOptions { cap: 128, forced, ..Default::default() };
        let x = py.allow_threads(|| xi_sharp(&self.sys, ground_state, &lambda, &opts)).map_err(err)?;
        let values: Vec<serde_json::Value> =
            zs.iter().map(|z| serde_json::json!({"z": fmt_big(z), "xi": fmt_big(&x.poly.eval(z))})).collect();
        to_py(
            py,
            &serde_json::json!({
                "coefficients": x.poly.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "ground_count": x.ground_count,
                "k_max": x.poly.k_max(),
                "values": values,
            }),
        )
    }

    /// Both sides of the polymer representation on a box, exact rationals as strings.
    #[pyo3(signature = (width, height, z = vec!["1".to_string(), "10".to_string(), "100".to_string()]))]
    fn polymer_identity(&self, py: Python<'_>, width: i32, height: i32, z: Vec<String>) -> PyResult<PyObject> {
        let lambda = window(&self.sys.g, width, height)?;
        let zs = fugacities(z)?;
        let opts = XiOptions { cap: 128, ..Default::default() };
        let v = py.allow_threads(|| polymer_identity(&self.sys, 0, &lambda, &zs, &opts)).map_err(err)?;
        let out: Vec<serde_json::Value> = v
            .iter()
            .map(|p| serde_json::json!({"z": fmt_big(&p.z), "lhs": fmt_big(&p.lhs), "rhs": fmt_big(&p.rhs), "holds": p.holds(), "contours": p.contours}))
            .collect();
        to_py(py, &serde_json::Value::Array(out))
    }

    /// Extract, rebuild and re-extract contours of random defect configurations.
    #[pyo3(signature = (trials = 100, seed = 1, radius = 3))]
    fn round_trip(&self, py: Python<'_>, trials: usize, seed: u64, radius: i32) -> PyResult<PyObject> {
        let rho0 = small_rational(&self.constants.rho0).map_err(err)?;
        let rep = py.allow_threads(|| round_trip(&self.sys, trials, seed, radius, rho0));
        to_py(py, &rep.to_json())
    }

    /// Grand-canonical sampling on a box with the ground state frozen outside.
    #[pyo3(signature = (width, height, z, sweeps, seed = 1))]
    fn monte_carlo(&self, py: Python<'_>, width: i32, height: i32, z: f64, sweeps: u64, seed: u64) -> PyResult<PyObject> {
        let lambda = window(&self.sys.g, width, height)?;
        let o = py.allow_threads(|| run(&self.sys, 0, &lambda, &RunOptions::new(z, sweeps, seed))).map_err(err)?;
        to_py(py, &o.to_json())
    }
}

fn descriptor(shape: &Bound<'_, PyAny>) -> PyResult<ShapeDescriptor> {
    if let Ok(n) = shape.extract::<i32>() {
        if n < 1 {
            return Err(PyValueError::new_err("staircase size must be positive"));
        }
        return Ok(Shape::staircase_descriptor(n));
    }
    let cells: Vec<Vec<i32>> = shape.extract()?;
    Ok(ShapeDescriptor::Polyomino(cells.iter().map(|c| site(c, 0).t).collect()))
}

/// Optimal local configurations on Z^2 for an n-staircase (int) or a polyomino (list of cells).
#[pyfunction]
#[pyo3(signature = (shape, radius))]
fn max_local_configs(py: Python<'_>, shape: &Bound<'_, PyAny>, radius: u32) -> PyResult<PyObject> {
    let g = PeriodicGraph::z2();
    let s = Shape::build(&g, descriptor(shape)?).map_err(err)?;
    let o = py.allow_threads(|| local_search(&g, &s, radius, DEFAULT_LOCAL_BUDGET)).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "optimum": fmt_q(&o.optimum),
            "gap": o.gap.map(|q| fmt_q(&q)),
            "optima": o.optima.iter().map(|c| c.occupied.iter().map(|s| [s.t[0], s.t[1]]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "nodes": o.nodes,
        }),
    )
}

#[pymodule]
fn hardcore_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(max_local_configs, m)?)?;
    Ok(())
}
