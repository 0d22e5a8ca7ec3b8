//! Python bindings for the non-conforming DG acoustics solver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ncdg::config::{RunConfig, Scenario};
use ncdg::diagnostics::RegionSelector;
use ncdg::flux::TraceState;
use ncdg::material::{BoundaryCondition, Material, PressureData};
use ncdg::meshgen::{
    build_embedded_rect_mesh, build_overlap_mesh, build_overset_mesh, build_rect_mesh,
    build_split_mesh, EmbeddedRectSpec, OverlapMeshSpec, OversetMeshSpec, SplitRectSpec,
};
use ncdg::nci::CouplingScheme;
use ncdg::scenarios::{self, Simulation};
use ncdg::time::Control;

fn err(e: ncdg::Error) -> PyErr {
    match e {
        ncdg::Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// n-point Gauss-Legendre rule on [-1, 1].
#[pyfunction]
fn gauss_legendre_rule(n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    ncdg::gauss_legendre_rule(n).map_err(err)
}

/// k+1 Legendre-Gauss-Lobatto nodes on [-1, 1].
#[pyfunction]
fn lgl_nodes(k: usize) -> PyResult<Vec<f64>> {
    ncdg::lgl_nodes(k).map_err(err)
}

/// Vibrating-membrane exact solution (p, (u1, u2)) at (x, y, t).
#[pyfunction]
fn membrane_exact(modes: usize, x: f64, y: f64, t: f64) -> (f64, (f64, f64)) {
    let (p, u) = ncdg::diagnostics::membrane_exact(modes, [x, y], t);
    (p, (u[0], u[1]))
}

/// Normal-incidence pressure reflection/transmission coefficients.
#[pyfunction]
fn transmission_coefficients(rho1: f64, c1: f64, rho2: f64, c2: f64) -> (f64, f64) {
    ncdg::diagnostics::transmission_coefficients(rho1, c1, rho2, c2)
}

/// Resolution criterion (satisfied, lhs, rhs) for degree k, mesh size h, wave number omega.
#[pyfunction]
fn resolution_check(k: usize, h_max: f64, omega: f64) -> (bool, f64, f64) {
    ncdg::resolution_check(k, h_max, omega)
}

/// Lax-Friedrichs flux (p*, (u1*, u2*)).
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn lax_friedrichs_flux(
    p_minus: f64,
    u_minus: (f64, f64),
    p_plus: f64,
    u_plus: (f64, f64),
    tau: f64,
    gamma: f64,
    normal: (f64, f64),
) -> (f64, (f64, f64)) {
    let (p, u) = ncdg::lax_friedrichs_flux(
        TraceState::new(p_minus, [u_minus.0, u_minus.1]),
        TraceState::new(p_plus, [u_plus.0, u_plus.1]),
        tau,
        gamma,
        [normal.0, normal.1],
    );
    (p, (u[0], u[1]))
}

/// LDG flux with self-adapting upwinding across a material jump.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn ldg_nci_flux(
    p_minus: f64,
    u_minus: (f64, f64),
    p_plus: f64,
    u_plus: (f64, f64),
    rho_minus: f64,
    c_minus: f64,
    rho_plus: f64,
    c_plus: f64,
    normal: (f64, f64),
) -> PyResult<(f64, (f64, f64))> {
    let (p, u) = ncdg::ldg_nci_flux(
        TraceState::new(p_minus, [u_minus.0, u_minus.1]),
        TraceState::new(p_plus, [u_plus.0, u_plus.1]),
        Material::new(rho_minus, c_minus).map_err(err)?,
        Material::new(rho_plus, c_plus).map_err(err)?,
        [normal.0, normal.1],
    );
    Ok((p, (u[0], u[1])))
}

/// Multi-region quadrilateral mesh.
#[pyclass(name = "Mesh")]
#[derive(Clone)]
struct PyMesh {
    inner: ncdg::Mesh,
}

#[pymethods]
impl PyMesh {
    /// Uniform rectangle mesh with nx-by-ny cells.
    #[staticmethod]
    fn rect(min: (f64, f64), max: (f64, f64), nx: usize, ny: usize) -> PyResult<Self> {
        let mat = Material::new(1.0, 1.0).map_err(err)?;
        Ok(Self {
            inner: build_rect_mesh([min.0, min.1], [max.0, max.1], nx, ny, mat).map_err(err)?,
        })
    }

    /// Rectangle with an independently meshed rectangular inner region.
    #[staticmethod]
    #[pyo3(signature = (outer_min, outer_max, hole_min, hole_max, h_outer, h_inner))]
    fn embedded_rect(
        outer_min: (f64, f64),
        outer_max: (f64, f64),
        hole_min: (f64, f64),
        hole_max: (f64, f64),
        h_outer: f64,
        h_inner: f64,
    ) -> PyResult<Self> {
        let mat = Material::new(1.0, 1.0).map_err(err)?;
        Ok(Self {
            inner: build_embedded_rect_mesh(&EmbeddedRectSpec {
                outer_min: [outer_min.0, outer_min.1],
                outer_max: [outer_max.0, outer_max.1],
                hole_min: [hole_min.0, hole_min.1],
                hole_max: [hole_max.0, hole_max.1],
                h_outer,
                h_inner,
                outer_material: mat,
                inner_material: mat,
            })
            .map_err(err)?,
        })
    }

    /// Polygonal disc embedded through a slightly smaller hole.
    #[staticmethod]
    #[pyo3(signature = (domain_min, domain_max, radius, overlap_depth, disc_core=6, disc_layers=3, ring_sectors=32, ring_layers=2))]
    #[allow(clippy::too_many_arguments)]
    fn overlap(
        domain_min: (f64, f64),
        domain_max: (f64, f64),
        radius: f64,
        overlap_depth: f64,
        disc_core: usize,
        disc_layers: usize,
        ring_sectors: usize,
        ring_layers: usize,
    ) -> PyResult<Self> {
        let mat = Material::new(1.0, 1.0).map_err(err)?;
        Ok(Self {
            inner: build_overlap_mesh(&OverlapMeshSpec {
                domain_min: [domain_min.0, domain_min.1],
                domain_max: [domain_max.0, domain_max.1],
                radius,
                overlap_depth,
                disc_core,
                disc_layers,
                ring_sectors,
                ring_layers,
                outer_material: mat,
                inner_material: mat,
            })
            .map_err(err)?,
        })
    }

    /// Disc mesh over a background grid (overset).
    #[staticmethod]
    #[pyo3(signature = (domain_min, domain_max, radius, grid_n=12, disc_core=6, disc_layers=3))]
    fn overset(
        domain_min: (f64, f64),
        domain_max: (f64, f64),
        radius: f64,
        grid_n: usize,
        disc_core: usize,
        disc_layers: usize,
    ) -> PyResult<Self> {
        let mat = Material::new(1.0, 1.0).map_err(err)?;
        Ok(Self {
            inner: build_overset_mesh(&OversetMeshSpec {
                domain_min: [domain_min.0, domain_min.1],
                domain_max: [domain_max.0, domain_max.1],
                radius,
                disc_core,
                disc_layers,
                grid_n,
                outer_material: mat,
                inner_material: mat,
            })
            .map_err(err)?,
        })
    }

    /// Two regions with different materials meeting at x = split_x.
    #[staticmethod]
    #[pyo3(signature = (min, max, split_x, h_left, h_right, rho_left=1.0, c_left=1.0, rho_right=1.0, c_right=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn split(
        min: (f64, f64),
        max: (f64, f64),
        split_x: f64,
        h_left: f64,
        h_right: f64,
        rho_left: f64,
        c_left: f64,
        rho_right: f64,
        c_right: f64,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: build_split_mesh(&SplitRectSpec {
                min: [min.0, min.1],
                max: [max.0, max.1],
                split_x,
                h_left,
                h_right,
                left_material: Material::new(rho_left, c_left).map_err(err)?,
                right_material: Material::new(rho_right, c_right).map_err(err)?,
            })
            .map_err(err)?,
        })
    }

    fn n_elements(&self) -> usize {
        self.inner.n_elements()
    }

    fn n_nci_faces(&self) -> usize {
        self.inner.nci_faces.len()
    }

    fn h_min(&self) -> f64 {
        self.inner.h_min()
    }

    fn h_max(&self) -> f64 {
        self.inner.h_max()
    }

    fn refine_uniform(&self, r: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.refine_uniform(r).map_err(err)? })
    }

    /// Elements containing the point, as (element id, (xi, eta)) pairs.
    fn locate_point(&self, x: f64, y: f64) -> Vec<(usize, (f64, f64))> {
        self.inner
            .locate_point([x, y])
            .into_iter()
            .map(|(e, xi)| (e, (xi[0], xi[1])))
            .collect()
    }

    fn dump_csv(&self, path: String) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        self.inner.dump_csv(std::io::BufWriter::new(f)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// DG solver bound to one mesh, degree and coupling scheme.
#[pyclass(name = "Solver", unsendable)]
struct PySolver {
    sim: Simulation,
    modes: usize,
}

#[pymethods]
impl PySolver {
    /// boundary: "pressure-zero" | "pressure-membrane" | "reflecting" | "absorbing"
    #[new]
    #[pyo3(signature = (mesh, degree, coupling="mortar", scheme="rkc84", courant=0.2, boundary="pressure-zero", modes=120, parallel=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mesh: PyMesh,
        degree: usize,
        coupling: &str,
        scheme: &str,
        courant: f64,
        boundary: &str,
        modes: usize,
        parallel: bool,
    ) -> PyResult<Self> {
        let coupling = match coupling {
            "mortar" => CouplingScheme::Mortaring,
            "p2p" => CouplingScheme::PointToPoint,
            other => return Err(PyValueError::new_err(format!("unknown coupling '{other}'"))),
        };
        let scheme: ncdg::RkScheme = scheme.parse().map_err(err)?;
        let bc = match boundary {
            "pressure-zero" => BoundaryCondition::PressureDirichlet(PressureData::Zero),
            "pressure-membrane" => {
                BoundaryCondition::PressureDirichlet(PressureData::Membrane { modes })
            }
            "reflecting" => BoundaryCondition::Admittance(0.0),
            "absorbing" => BoundaryCondition::Admittance(1.0),
            other => return Err(PyValueError::new_err(format!("unknown boundary '{other}'"))),
        };
        let bcs = mesh
            .inner
            .boundary_tag_names()
            .iter()
            .map(|t| (t.clone(), bc.clone()))
            .collect();
        let sim =
            Simulation::build(mesh.inner, degree, coupling, &bcs, None, courant, scheme, parallel)
                .map_err(err)?;
        Ok(Self { sim, modes })
    }

    fn set_membrane_initial(&mut self) {
        let modes = self.modes;
        self.sim.set_initial(|x| ncdg::diagnostics::membrane_exact(modes, x, 0.0));
    }

    #[pyo3(signature = (center, width, planar=false))]
    fn set_pulse_initial(&mut self, center: (f64, f64), width: f64, planar: bool) {
        self.sim.set_initial(move |x| {
            let r2 = if planar {
                (x[0] - center.0) * (x[0] - center.0)
            } else {
                (x[0] - center.0) * (x[0] - center.0) + (x[1] - center.1) * (x[1] - center.1)
            };
            ((-width * r2).exp(), [0.0, 0.0])
        });
    }

    fn dt(&self) -> f64 {
        self.sim.dt
    }

    fn t(&self) -> f64 {
        self.sim.state.t
    }

    fn dofs(&self) -> usize {
        self.sim.dofs()
    }

    fn energy(&self) -> f64 {
        self.sim.energy()
    }

    /// Advance to the given time; returns the number of steps taken.
    fn run_to(&mut self, t_end: f64) -> PyResult<usize> {
        self.sim.run_to(t_end, |_, _, _| Ok(Control::Continue)).map_err(err)
    }

    /// Relative L2 errors (eps_p, eps_u) against the membrane solution;
    /// region -1 means the whole domain.
    #[pyo3(signature = (region=-1))]
    fn membrane_errors(&self, region: i64) -> PyResult<(f64, f64)> {
        let sel = if region < 0 {
            RegionSelector::Global
        } else {
            RegionSelector::Region(region as usize)
        };
        self.sim.membrane_errors(self.modes, sel).map_err(err)
    }

    fn probe(&self, points: Vec<(f64, f64)>) -> Vec<Option<f64>> {
        let pts: Vec<[f64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
        self.sim.probe(&pts)
    }

    fn dump_field(&self, path: String) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| err(e.into()))?;
        scenarios::dump_field(
            &self.sim.mesh,
            &self.sim.re,
            &self.sim.state,
            std::io::BufWriter::new(f),
        )
        .map_err(err)
    }
}

/// Built-in TOML configuration of a named scenario.
#[pyfunction]
fn default_config(scenario: &str) -> PyResult<String> {
    let s = match scenario {
        "solve" => Scenario::Solve,
        "membrane-convergence" => Scenario::MembraneConvergence,
        "instability" => Scenario::Instability,
        "overlap" => Scenario::Overlap,
        "heterogeneous" => Scenario::Heterogeneous,
        "conforming-check" => Scenario::ConformingCheck,
        other => return Err(PyValueError::new_err(format!("unknown scenario '{other}'"))),
    };
    scenarios::default_config(s).to_toml_string().map_err(err)
}

/// Run a scenario from TOML configuration text.
#[pyfunction]
fn run_scenario(config_text: &str) -> PyResult<()> {
    let cfg = RunConfig::from_toml_str(config_text).map_err(err)?;
    scenarios::run(&cfg).map_err(err)
}

#[pymodule]
fn ncdg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gauss_legendre_rule, m)?)?;
    m.add_function(wrap_pyfunction!(lgl_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(membrane_exact, m)?)?;
    m.add_function(wrap_pyfunction!(transmission_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(resolution_check, m)?)?;
    m.add_function(wrap_pyfunction!(lax_friedrichs_flux, m)?)?;
    m.add_function(wrap_pyfunction!(ldg_nci_flux, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolver>()?;
    Ok(())
}
