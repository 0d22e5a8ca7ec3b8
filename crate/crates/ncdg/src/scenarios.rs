//! Scenario drivers for the study configurations, plus all file output.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::basis::ReferenceElement;
use crate::config::{MeshConfig, ProbeConfig, RunConfig, Scenario};
use crate::diagnostics::{
    l2_relative_error, line_probe, membrane_exact, observed_order, sound_energy,
    transmission_coefficients, write_probe_csv, write_timeseries_csv, DiagnosticsRecord,
    OverIntegration, RegionSelector,
};
use crate::error::{Error, Result};
use crate::geometry::map_to_physical;
use crate::material::BoundaryCondition;
use crate::mesh::Mesh;
use crate::meshgen::{
    build_embedded_rect_mesh, build_overlap_mesh, build_overset_mesh, build_rect_mesh,
    build_split_mesh, EmbeddedRectSpec, OverlapMeshSpec, OversetMeshSpec, SplitRectSpec,
};
use crate::nci::CouplingScheme;
use crate::operator::{DgOperator, SourceTerm};
use crate::state::FieldState;
use crate::time::{cfl_timestep, integrate, Control, RkScheme};

/// A mesh paired with everything needed to advance it in time.
pub struct Simulation {
    pub mesh: Mesh,
    pub re: ReferenceElement,
    pub oi: OverIntegration,
    pub op: DgOperator,
    pub state: FieldState,
    pub dt: f64,
    pub scheme: RkScheme,
}

impl Simulation {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        mesh: Mesh,
        degree: usize,
        coupling: CouplingScheme,
        bcs: &HashMap<String, BoundaryCondition>,
        source: Option<SourceTerm>,
        courant: f64,
        scheme: RkScheme,
        parallel: bool,
    ) -> Result<Self> {
        let re = ReferenceElement::new(degree)?;
        let op = DgOperator::new(&mesh, &re, coupling, bcs, source, parallel)?;
        let dt = cfl_timestep(&mesh, degree, courant)?;
        let oi = OverIntegration::new(&re);
        let state = FieldState::zeros(mesh.n_elements(), re.n_loc());
        Ok(Self { mesh, re, oi, op, state, dt, scheme })
    }

    pub fn set_initial(&mut self, f: impl Fn([f64; 2]) -> (f64, [f64; 2])) {
        self.state = FieldState::interpolate(&self.mesh, &self.re, 0.0, f);
    }

    pub fn energy(&self) -> f64 {
        sound_energy(&self.mesh, &self.state, &self.oi, RegionSelector::Global)
    }

    pub fn energy_of(&self, region: RegionSelector) -> f64 {
        sound_energy(&self.mesh, &self.state, &self.oi, region)
    }

    pub fn membrane_errors(&self, modes: usize, region: RegionSelector) -> Result<(f64, f64)> {
        let t = self.state.t;
        l2_relative_error(
            &self.mesh,
            &self.state,
            &self.oi,
            &|x| membrane_exact(modes, x, t),
            region,
        )
    }

    pub fn probe(&self, points: &[[f64; 2]]) -> Vec<Option<f64>> {
        line_probe(&self.mesh, &self.re, &self.state, points)
    }

    pub fn run_to(
        &mut self,
        t_end: f64,
        on_step: impl FnMut(usize, f64, &FieldState) -> Result<Control>,
    ) -> Result<usize> {
        integrate(&self.op, &mut self.state, t_end, self.dt, self.scheme, on_step)
    }

    pub fn dofs(&self) -> usize {
        self.mesh.n_elements() * self.re.n_loc() * 3
    }
}

/// Build the mesh described by the configuration, including refinement.
pub fn build_mesh(cfg: &RunConfig) -> Result<Mesh> {
    let base = build_base_mesh(cfg, &cfg.mesh)?;
    if cfg.refinement > 0 {
        base.refine_uniform(cfg.refinement)
    } else {
        Ok(base)
    }
}

fn require(v: Option<f64>, what: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("mesh.{what} is required for this mesh kind")))
}

fn build_base_mesh(cfg: &RunConfig, m: &MeshConfig) -> Result<Mesh> {
    match m.kind.as_str() {
        "rect" => {
            let h = require(m.h, "h")?;
            let nx = cells(m.max[0] - m.min[0], h)?;
            let ny = cells(m.max[1] - m.min[1], h)?;
            build_rect_mesh(m.min, m.max, nx, ny, cfg.material(0)?)
        }
        "embedded-rect" => build_embedded_rect_mesh(&EmbeddedRectSpec {
            outer_min: m.min,
            outer_max: m.max,
            hole_min: m.hole_min.unwrap_or([1.0 / 30.0, 1.0 / 30.0]),
            hole_max: m.hole_max.unwrap_or([2.0 / 30.0, 2.0 / 30.0]),
            h_outer: require(m.h_outer, "h_outer")?,
            h_inner: require(m.h_inner, "h_inner")?,
            outer_material: cfg.material(0)?,
            inner_material: cfg.material(1)?,
        }),
        "overlap" => build_overlap_mesh(&OverlapMeshSpec {
            domain_min: m.min,
            domain_max: m.max,
            radius: m.radius.unwrap_or(0.05),
            overlap_depth: m.overlap_depth.unwrap_or(2e-3),
            disc_core: m.disc_core,
            disc_layers: m.disc_layers,
            ring_sectors: m.ring_sectors,
            ring_layers: m.ring_layers,
            outer_material: cfg.material(0)?,
            inner_material: cfg.material(1)?,
        }),
        "overset" => build_overset_mesh(&OversetMeshSpec {
            domain_min: m.min,
            domain_max: m.max,
            radius: m.radius.unwrap_or(0.05),
            disc_core: m.disc_core,
            disc_layers: m.disc_layers,
            grid_n: m.grid_n,
            outer_material: cfg.material(0)?,
            inner_material: cfg.material(1)?,
        }),
        "split" => build_split_mesh(&SplitRectSpec {
            min: m.min,
            max: m.max,
            split_x: require(m.split_x, "split_x")?,
            h_left: require(m.h_left, "h_left")?,
            h_right: require(m.h_right, "h_right")?,
            left_material: cfg.material(0)?,
            right_material: cfg.material(1)?,
        }),
        other => Err(Error::Config(format!("unknown mesh kind '{other}'"))),
    }
}

fn cells(len: f64, h: f64) -> Result<usize> {
    let n = (len / h).round();
    if n < 1.0 || (n * h - len).abs() > 1e-12 {
        return Err(Error::Config(format!("spacing {h} does not divide length {len}")));
    }
    Ok(n as usize)
}

fn build_sim(cfg: &RunConfig, mesh: Mesh, degree: usize, coupling: CouplingScheme) -> Result<Simulation> {
    let bcs = cfg.boundary_conditions(&mesh.boundary_tag_names().to_vec())?;
    Simulation::build(
        mesh,
        degree,
        coupling,
        &bcs,
        None,
        cfg.courant,
        cfg.rk_scheme()?,
        cfg.threads > 1,
    )
}

fn pulse_initial(cfg: &RunConfig) -> impl Fn([f64; 2]) -> (f64, [f64; 2]) {
    let c = cfg.pulse.center;
    let w = cfg.pulse.width;
    let planar = cfg.pulse.planar;
    move |x: [f64; 2]| {
        let r2 = if planar {
            (x[0] - c[0]) * (x[0] - c[0])
        } else {
            (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1])
        };
        ((-w * r2).exp(), [0.0, 0.0])
    }
}

/// Create the output directory and write the resolved configuration into it.
pub fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("resolved_config.toml"), cfg.to_toml_string()?)?;
    Ok(dir)
}

/// Field dump: one row per nodal point, deterministic ordering.
pub fn dump_field<W: Write>(
    mesh: &Mesh,
    re: &ReferenceElement,
    state: &FieldState,
    mut w: W,
) -> Result<()> {
    writeln!(w, "element,region,x1,x2,p,u1,u2")?;
    for (e, geom) in mesh.elements.iter().enumerate() {
        let base = e * state.n_loc;
        for (i, &node) in re.nodes_2d.iter().enumerate() {
            let x = map_to_physical(geom, node);
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                e,
                mesh.region_of[e],
                x[0],
                x[1],
                state.p[base + i],
                state.u0[base + i],
                state.u1[base + i]
            )?;
        }
    }
    Ok(())
}

/// Re-read a field dump produced by [`dump_field`].
pub fn read_field_csv(path: &Path, n_loc: usize) -> Result<FieldState> {
    let text = fs::read_to_string(path)?;
    let mut p = Vec::new();
    let mut u0 = Vec::new();
    let mut u1 = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Diagnostics(format!("bad field row: {line}")));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Diagnostics(e.to_string()));
        p.push(parse(cols[4])?);
        u0.push(parse(cols[5])?);
        u1.push(parse(cols[6])?);
    }
    if p.len() % n_loc != 0 {
        return Err(Error::Diagnostics("field dump length mismatch".into()));
    }
    Ok(FieldState { n_loc, p, u0, u1, t: 0.0 })
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

pub struct SolveOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub final_energy: f64,
}

pub fn run_solve(cfg: &RunConfig) -> Result<SolveOutcome> {
    let dir = prepare_output(cfg)?;
    let mesh = build_mesh(cfg)?;
    write_file(&dir.join("mesh.csv"), |w| mesh.dump_csv(w))?;
    let mut sim = build_sim(cfg, mesh, cfg.degree, cfg.coupling_scheme()?)?;
    write_file(&dir.join("nci_points.csv"), |w| sim.op.nci_map().dump_points_csv(w))?;
    write_file(&dir.join("nci_patches.csv"), |w| sim.op.nci_map().dump_patches_csv(w))?;

    let modes = cfg.modes;
    match cfg.init.as_str() {
        "membrane" => sim.set_initial(|x| membrane_exact(modes, x, 0.0)),
        "pulse" => {
            let f = pulse_initial(cfg);
            sim.set_initial(f);
        }
        "zero" => {}
        other => return Err(Error::Config(format!("unknown init '{other}'"))),
    }

    let has_regions = sim.mesh.n_regions() > 1;
    let with_errors = cfg.init == "membrane";
    let record = |sim: &Simulation| -> Result<DiagnosticsRecord> {
        let mut r = DiagnosticsRecord {
            t: sim.state.t,
            energy: sim.energy(),
            ..Default::default()
        };
        if with_errors {
            let (ep, eu) = sim.membrane_errors(modes, RegionSelector::Global)?;
            r.eps_p_global = Some(ep);
            r.eps_u_global = Some(eu);
            if has_regions {
                let (ep, eu) = sim.membrane_errors(modes, RegionSelector::Region(1))?;
                r.eps_p_inner = Some(ep);
                r.eps_u_inner = Some(eu);
                let (ep, eu) = sim.membrane_errors(modes, RegionSelector::Region(0))?;
                r.eps_p_outer = Some(ep);
                r.eps_u_outer = Some(eu);
            }
        }
        Ok(r)
    };

    let mut records = vec![record(&sim)?];
    let e0 = records[0].energy.max(f64::MIN_POSITIVE);
    let cadence = cfg.cadence;
    let mut blown_up: Option<(f64, f64)> = None;
    {
        let mesh_ref = &sim.mesh;
        let oi = &sim.oi;
        let op = &sim.op;
        let state = &mut sim.state;
        let dt = sim.dt;
        let scheme = sim.scheme;
        integrate(op, state, cfg.end_time, dt, scheme, |step, t, s| {
            if step % cadence == 0 || (t - cfg.end_time).abs() < 1e-14 {
                let energy = sound_energy(mesh_ref, s, oi, RegionSelector::Global);
                records.push(DiagnosticsRecord { t, energy, ..Default::default() });
                if energy > 100.0 * e0 {
                    blown_up = Some((t, energy));
                    return Ok(Control::Stop);
                }
            }
            Ok(Control::Continue)
        })?;
    }
    if blown_up.is_none() && with_errors {
        let last = record(&sim)?;
        records.pop();
        records.push(last);
    }

    write_file(&dir.join("timeseries.csv"), |w| write_timeseries_csv(w, &records))?;
    write_file(&dir.join("field_final.csv"), |w| dump_field(&sim.mesh, &sim.re, &sim.state, w))?;
    if let Some(probe_cfg) = cfg.probe.first() {
        let points = probe_cfg.points();
        let values = sim.probe(&points);
        write_file(&dir.join("probe_final.csv"), |w| write_probe_csv(w, &points, &values))?;
    }
    if let Some((t, energy)) = blown_up {
        return Err(Error::BlowUp {
            t,
            step: records.len(),
            detail: format!("sound energy {energy:.3e} exceeds 100 x E0 = {:.3e}", 100.0 * e0),
        });
    }
    let final_energy = records.last().map(|r| r.energy).unwrap_or(0.0);
    Ok(SolveOutcome { records, final_energy })
}

// ---------------------------------------------------------------------------
// membrane-convergence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConvergenceEntry {
    pub degree: usize,
    pub refinement: usize,
    pub h_outer: f64,
    /// (eps_p, eps_u) for global, inner, outer; None when the run blew up.
    pub errors: Option<[(f64, f64); 3]>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceResults {
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceResults {
    /// Observed orders over the refinement sequence of one degree,
    /// per region index (0 global, 1 inner, 2 outer).
    pub fn rates(&self, degree: usize, region: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let rows: Vec<&ConvergenceEntry> = self
            .entries
            .iter()
            .filter(|e| e.degree == degree && e.errors.is_some())
            .collect();
        let h: Vec<f64> = rows.iter().map(|e| e.h_outer).collect();
        let ep: Vec<f64> = rows.iter().map(|e| e.errors.unwrap()[region].0).collect();
        let eu: Vec<f64> = rows.iter().map(|e| e.errors.unwrap()[region].1).collect();
        Ok((observed_order(&ep, &h)?, observed_order(&eu, &h)?))
    }
}

pub fn run_membrane_convergence(cfg: &RunConfig) -> Result<ConvergenceResults> {
    let dir = prepare_output(cfg)?;
    let base = build_base_mesh(cfg, &cfg.mesh)?;
    let h_outer0 = require(cfg.mesh.h_outer, "h_outer")?;
    let coupling = cfg.coupling_scheme()?;
    let mut entries = Vec::new();
    for &k in &cfg.convergence.degrees {
        for &r in &cfg.convergence.refinements {
            let mesh = base.refine_uniform(r)?;
            let run = (|| -> Result<[(f64, f64); 3]> {
                let mut sim = build_sim(cfg, mesh, k, coupling)?;
                let modes = cfg.modes;
                sim.set_initial(|x| membrane_exact(modes, x, 0.0));
                let e0 = sim.energy().max(f64::MIN_POSITIVE);
                let oi = &sim.oi;
                let mesh_ref = &sim.mesh;
                let op = &sim.op;
                let state = &mut sim.state;
                let (dt, scheme, cadence) = (sim.dt, sim.scheme, cfg.cadence);
                integrate(op, state, cfg.end_time, dt, scheme, |step, t, s| {
                    if step % (cadence * 10) == 0 {
                        let e = sound_energy(mesh_ref, s, oi, RegionSelector::Global);
                        if e > 100.0 * e0 {
                            return Err(Error::BlowUp {
                                t,
                                step,
                                detail: "convergence run unstable".into(),
                            });
                        }
                    }
                    Ok(Control::Continue)
                })?;
                Ok([
                    sim.membrane_errors(cfg.modes, RegionSelector::Global)?,
                    sim.membrane_errors(cfg.modes, RegionSelector::Region(1))?,
                    sim.membrane_errors(cfg.modes, RegionSelector::Region(0))?,
                ])
            })();
            let errors = match run {
                Ok(e) => Some(e),
                Err(Error::BlowUp { t, .. }) => {
                    log::warn!("convergence cell k={k} r={r} blew up at t={t:.4e}");
                    None
                }
                Err(e) => return Err(e),
            };
            entries.push(ConvergenceEntry {
                degree: k,
                refinement: r,
                h_outer: h_outer0 / f64::powi(2.0, r as i32),
                errors,
            });
        }
    }
    let results = ConvergenceResults { entries };

    write_file(&dir.join("convergence.csv"), |w| {
        writeln!(
            w,
            "k,r,h_outer,eps_p_global,eps_u_global,eps_p_inner,eps_u_inner,eps_p_outer,eps_u_outer"
        )?;
        for e in &results.entries {
            match &e.errors {
                Some(err) => writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    e.degree,
                    e.refinement,
                    e.h_outer,
                    err[0].0,
                    err[0].1,
                    err[1].0,
                    err[1].1,
                    err[2].0,
                    err[2].1
                )?,
                None => writeln!(w, "{},{},{},,,,,,", e.degree, e.refinement, e.h_outer)?,
            }
        }
        Ok(())
    })?;
    write_file(&dir.join("rates.csv"), |w| {
        writeln!(w, "k,region,interval,rate_p,rate_u")?;
        for &k in &cfg.convergence.degrees {
            for (ri, name) in ["global", "inner", "outer"].iter().enumerate() {
                if let Ok((rp, ru)) = results.rates(k, ri) {
                    for (i, (a, b)) in rp.iter().zip(&ru).enumerate() {
                        writeln!(w, "{k},{name},{i},{a},{b}")?;
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(results)
}

// ---------------------------------------------------------------------------
// instability
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct InstabilityRun {
    pub coupling: CouplingScheme,
    pub degree: usize,
    pub e0: f64,
    pub series: Vec<(f64, f64)>,
    pub max_ratio: f64,
    /// Time at which E first exceeded the stop ratio (or went non-finite).
    pub blow_up: Option<f64>,
}

pub fn run_instability_study(cfg: &RunConfig) -> Result<Vec<InstabilityRun>> {
    let dir = prepare_output(cfg)?;
    let mut runs = Vec::new();
    let combos: Vec<(CouplingScheme, usize)> = cfg
        .instability
        .mortar_degrees
        .iter()
        .map(|&k| (CouplingScheme::Mortaring, k))
        .chain(cfg.instability.p2p_degrees.iter().map(|&k| (CouplingScheme::PointToPoint, k)))
        .collect();
    for (coupling, k) in combos {
        let run = run_instability_single(cfg, coupling, k, cfg.instability.horizon)?;
        write_file(&dir.join(format!("energy_{}_k{}.csv", coupling, k)), |w| {
            writeln!(w, "t,E")?;
            for (t, e) in &run.series {
                writeln!(w, "{t},{e}")?;
            }
            Ok(())
        })?;
        log::info!(
            "instability {} k={}: max E/E0 = {:.3e}{}",
            coupling,
            k,
            run.max_ratio,
            run.blow_up.map(|t| format!(", blow-up at t={t:.4}")).unwrap_or_default()
        );
        runs.push(run);
    }
    Ok(runs)
}

pub fn run_instability_single(
    cfg: &RunConfig,
    coupling: CouplingScheme,
    degree: usize,
    horizon: f64,
) -> Result<InstabilityRun> {
    let mesh = build_mesh(cfg)?;
    let mut sim = build_sim(cfg, mesh, degree, coupling)?;
    let modes = cfg.modes;
    sim.set_initial(|x| membrane_exact(modes, x, 0.0));
    let e0 = sim.energy();
    let stop_ratio = cfg.instability.stop_ratio;
    let mut series = vec![(0.0, e0)];
    let mut max_ratio: f64 = 1.0;
    let mut blow_up = None;
    let status = {
        let mesh_ref = &sim.mesh;
        let oi = &sim.oi;
        let op = &sim.op;
        let state = &mut sim.state;
        let (dt, scheme, cadence) = (sim.dt, sim.scheme, cfg.cadence);
        integrate(op, state, horizon, dt, scheme, |step, t, s| {
            if step % cadence == 0 || (t - horizon).abs() < 1e-14 {
                let e = sound_energy(mesh_ref, s, oi, RegionSelector::Global);
                series.push((t, e));
                max_ratio = max_ratio.max(e / e0);
                if e > stop_ratio * e0 || !e.is_finite() {
                    blow_up = Some(t);
                    return Ok(Control::Stop);
                }
            }
            Ok(Control::Continue)
        })
    };
    match status {
        Ok(_) => {}
        Err(Error::NonFinite { t, .. }) => {
            // the run destabilized so fast that the state left f64 range
            max_ratio = f64::INFINITY;
            blow_up = Some(t);
            series.push((t, f64::INFINITY));
        }
        Err(e) => return Err(e),
    }
    Ok(InstabilityRun { coupling, degree, e0, series, max_ratio, blow_up })
}

// ---------------------------------------------------------------------------
// overlap / overset
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OverlapRow {
    pub variant: &'static str,
    pub degree: usize,
    pub dofs: usize,
    pub eps_p: f64,
    pub eps_u: f64,
}

impl OverlapRow {
    pub fn total(&self) -> f64 {
        self.eps_p + self.eps_u
    }
}

pub fn run_overlap_study(cfg: &RunConfig) -> Result<Vec<OverlapRow>> {
    let dir = prepare_output(cfg)?;
    let mut rows = Vec::new();
    for variant in ["overlap", "overset"] {
        let mut mesh_cfg = cfg.mesh.clone();
        mesh_cfg.kind = variant.to_string();
        for &k in &cfg.overlap_study.degrees {
            let mesh = build_base_mesh(cfg, &mesh_cfg)?;
            let mut sim = build_sim(cfg, mesh, k, cfg.coupling_scheme()?)?;
            let modes = cfg.modes;
            sim.set_initial(|x| membrane_exact(modes, x, 0.0));
            sim.run_to(cfg.end_time, |_, _, _| Ok(Control::Continue))?;
            let (eps_p, eps_u) = sim.membrane_errors(cfg.modes, RegionSelector::Global)?;
            rows.push(OverlapRow { variant, degree: k, dofs: sim.dofs(), eps_p, eps_u });
            log::info!(
                "overlap study {variant} k={k}: dofs={} eps={:.3e}",
                rows.last().unwrap().dofs,
                rows.last().unwrap().total()
            );
        }
    }
    write_file(&dir.join("overlap_errors.csv"), |w| {
        writeln!(w, "variant,k,dofs,eps_p,eps_u,eps_total")?;
        for r in &rows {
            writeln!(w, "{},{},{},{},{},{}", r.variant, r.degree, r.dofs, r.eps_p, r.eps_u, r.total())?;
        }
        Ok(())
    })?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// heterogeneous application
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HeterogeneousResults {
    pub points: Vec<[f64; 2]>,
    pub probe_nci: Vec<Option<f64>>,
    pub probe_fine: Option<Vec<Option<f64>>>,
    pub probe_coarse: Option<Vec<Option<f64>>>,
    pub dofs_nci: usize,
    pub dofs_fine: Option<usize>,
    /// max |p_nci - p_fine| / max |p_fine| over the probe line.
    pub max_deviation: Option<f64>,
    pub max_deviation_coarse: Option<f64>,
    pub rt: Option<RtMeasurement>,
}

#[derive(Debug, Clone)]
pub struct RtMeasurement {
    pub r_measured: f64,
    pub t_measured: f64,
    pub r_theory: f64,
    pub t_theory: f64,
    pub incident_amplitude: f64,
}

fn deviation(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    let peak = b
        .iter()
        .flatten()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some((x - y).abs()),
            _ => None,
        })
        .fold(0.0f64, f64::max)
        / peak
}

pub fn run_heterogeneous_application(cfg: &RunConfig) -> Result<HeterogeneousResults> {
    let dir = prepare_output(cfg)?;
    let probe_cfg = cfg.probe.first().cloned().unwrap_or(ProbeConfig {
        start: [cfg.mesh.min[0], 0.0],
        end: [cfg.mesh.max[0], 0.0],
        count: 1000,
    });
    let points = probe_cfg.points();

    let run_variant = |mesh: Mesh, degree: usize| -> Result<(Vec<Option<f64>>, usize)> {
        let mut sim = build_sim(cfg, mesh, degree, cfg.coupling_scheme()?)?;
        let f = pulse_initial(cfg);
        sim.set_initial(f);
        sim.run_to(cfg.end_time, |_, _, _| Ok(Control::Continue))?;
        Ok((sim.probe(&points), sim.dofs()))
    };

    let (probe_nci, dofs_nci) = run_variant(build_mesh(cfg)?, cfg.degree)?;
    write_file(&dir.join("probe_nci.csv"), |w| write_probe_csv(w, &points, &probe_nci))?;

    let mut probe_fine = None;
    let mut probe_coarse = None;
    let mut dofs_fine = None;
    let mut max_deviation = None;
    let mut max_deviation_coarse = None;
    if cfg.heterogeneous.run_references {
        let h_left = require(cfg.mesh.h_left, "h_left")?;
        let h_right = require(cfg.mesh.h_right, "h_right")?;
        let mut fine_cfg = cfg.mesh.clone();
        fine_cfg.h_right = Some(h_left);
        let (pf, df) = run_variant(build_base_mesh(cfg, &fine_cfg)?, cfg.degree)?;
        write_file(&dir.join("probe_fine.csv"), |w| write_probe_csv(w, &points, &pf))?;
        let mut coarse_cfg = cfg.mesh.clone();
        coarse_cfg.h_left = Some(h_right);
        let (pc, _) = run_variant(build_base_mesh(cfg, &coarse_cfg)?, cfg.degree)?;
        write_file(&dir.join("probe_coarse.csv"), |w| write_probe_csv(w, &points, &pc))?;
        max_deviation = Some(deviation(&probe_nci, &pf));
        max_deviation_coarse = Some(deviation(&pc, &pf));
        write_file(&dir.join("dof_report.csv"), |w| {
            writeln!(w, "mesh,dofs,reduction_vs_fine")?;
            writeln!(w, "nci,{},{}", dofs_nci, 1.0 - dofs_nci as f64 / df as f64)?;
            writeln!(w, "fine,{},0", df)?;
            Ok(())
        })?;
        probe_fine = Some(pf);
        probe_coarse = Some(pc);
        dofs_fine = Some(df);
    }

    let rt = if cfg.heterogeneous.rt_check { Some(run_rt_check(cfg, &dir)?) } else { None };

    Ok(HeterogeneousResults {
        points,
        probe_nci,
        probe_fine,
        probe_coarse,
        dofs_nci,
        dofs_fine,
        max_deviation,
        max_deviation_coarse,
        rt,
    })
}

/// Planar-pulse reflection/transmission measurement on a thin strip: the
/// planar wave stays one-dimensional between rigid walls, so window maxima
/// give the amplitude ratios directly.
fn run_rt_check(cfg: &RunConfig, dir: &Path) -> Result<RtMeasurement> {
    let h_left = require(cfg.mesh.h_left, "h_left")?;
    let h_right = require(cfg.mesh.h_right, "h_right")?;
    let offset = cfg.heterogeneous.rt_offset;
    let t_end = cfg.heterogeneous.rt_end_time;
    let split_x = require(cfg.mesh.split_x, "split_x")?;
    // strip height: smallest common multiple of the two spacings times a few rows
    let rows = (h_right / h_left).round() as usize;
    let height = 4.0 * h_right.max(h_left * rows as f64);
    let mesh = build_split_mesh(&SplitRectSpec {
        min: [cfg.mesh.min[0], -0.5 * height],
        max: [cfg.mesh.max[0], 0.5 * height],
        split_x,
        h_left,
        h_right,
        left_material: cfg.material(0)?,
        right_material: cfg.material(1)?,
    })?;
    let mut bcs: HashMap<String, BoundaryCondition> = HashMap::new();
    bcs.insert("left".into(), BoundaryCondition::PressureDirichlet(crate::material::PressureData::Zero));
    bcs.insert("right".into(), BoundaryCondition::PressureDirichlet(crate::material::PressureData::Zero));
    bcs.insert("bottom".into(), BoundaryCondition::Admittance(0.0));
    bcs.insert("top".into(), BoundaryCondition::Admittance(0.0));
    let mut sim = Simulation::build(
        mesh,
        cfg.degree,
        cfg.coupling_scheme()?,
        &bcs,
        None,
        cfg.courant,
        cfg.rk_scheme()?,
        cfg.threads > 1,
    )?;
    let width = cfg.heterogeneous.rt_width;
    let x0 = split_x - offset;
    sim.set_initial(move |x| ((-width * (x[0] - x0) * (x[0] - x0)).exp(), [0.0, 0.0]));
    sim.run_to(t_end, |_, _, _| Ok(Control::Continue))?;

    let probe = ProbeConfig { start: [cfg.mesh.min[0], 0.0], end: [cfg.mesh.max[0], 0.0], count: 2000 };
    let points = probe.points();
    let values = sim.probe(&points);
    write_file(&dir.join("rt_probe.csv"), |w| write_probe_csv(w, &points, &values))?;

    let mats = (cfg.material(0)?, cfg.material(1)?);
    let (r_theory, t_theory) = transmission_coefficients(mats.0.rho, mats.0.c, mats.1.rho, mats.1.c);
    let window_max = |lo: f64, hi: f64| -> f64 {
        points
            .iter()
            .zip(&values)
            .filter(|(x, _)| x[0] >= lo && x[0] <= hi)
            .filter_map(|(_, v)| v.map(f64::abs))
            .fold(0.0, f64::max)
    };
    // wavefront positions after t_end: the other half of the initial pulse
    // travels left at c1 (incident amplitude), the reflection sits at
    // split + (t_end - offset/c1) * (-c1), the transmission at +c2 (t - offset/c1)
    let c1 = mats.0.c;
    let c2 = mats.1.c;
    let t_hit = offset / c1;
    let x_inc = x0 - c1 * t_end;
    let x_ref = split_x - c1 * (t_end - t_hit);
    let x_trn = split_x + c2 * (t_end - t_hit);
    let half_w = 3.0 / width.sqrt();
    let wi = (2.0 * half_w).max(0.075);
    let incident = window_max(x_inc - wi, x_inc + wi);
    let reflected = window_max(x_ref - wi, x_ref + wi);
    let transmitted = window_max(x_trn - wi * c2 / c1, x_trn + wi * c2 / c1);
    if incident <= 0.0 {
        return Err(Error::Diagnostics("R/T check: incident window is empty".into()));
    }
    let meas = RtMeasurement {
        r_measured: reflected / incident,
        t_measured: transmitted / incident,
        r_theory: r_theory.abs(),
        t_theory,
        incident_amplitude: incident,
    };
    write_file(&dir.join("rt_check.csv"), |w| {
        writeln!(w, "quantity,measured,theory")?;
        writeln!(w, "R,{},{}", meas.r_measured, meas.r_theory)?;
        writeln!(w, "T,{},{}", meas.t_measured, meas.t_theory)?;
        Ok(())
    })?;
    Ok(meas)
}

// ---------------------------------------------------------------------------
// conforming-check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConformingCheckResult {
    pub steps: usize,
    pub max_diff: f64,
}

/// Run the same membrane problem on a matched-interface two-region mesh with
/// mortaring and on the merged fully conforming mesh, for `steps` CFL steps,
/// and compare all nodal coefficients element by element.
pub fn run_conforming_check(cfg: &RunConfig, steps: usize) -> Result<ConformingCheckResult> {
    let dir = prepare_output(cfg)?;
    let h = require(cfg.mesh.h_outer, "h_outer")?;
    let hi = require(cfg.mesh.h_inner, "h_inner")?;
    if (h - hi).abs() > 1e-15 {
        return Err(Error::Config("conforming check requires h_inner = h_outer".into()));
    }
    let nci_mesh = build_base_mesh(cfg, &cfg.mesh)?;
    let mut conf_cfg = cfg.mesh.clone();
    conf_cfg.kind = "rect".into();
    conf_cfg.h = Some(h);
    let conf_mesh = build_base_mesh(cfg, &conf_cfg)?;

    let run = |mesh: Mesh| -> Result<(Simulation, f64)> {
        let mut sim = build_sim(cfg, mesh, cfg.degree, cfg.coupling_scheme()?)?;
        let modes = cfg.modes;
        sim.set_initial(|x| membrane_exact(modes, x, 0.0));
        let t_end = steps as f64 * sim.dt;
        sim.run_to(t_end, |_, _, _| Ok(Control::Continue))?;
        Ok((sim, t_end))
    };
    let (sim_nci, t1) = run(nci_mesh)?;
    let (sim_conf, t2) = run(conf_mesh)?;
    if (t1 - t2).abs() > 1e-15 {
        return Err(Error::Diagnostics("conforming check: time step mismatch".into()));
    }

    // match elements of the two meshes by their centers
    let quant = |x: f64| (x / (0.01 * h)).round() as i64;
    let mut by_center: HashMap<(i64, i64), usize> = HashMap::new();
    for (e, g) in sim_conf.mesh.elements.iter().enumerate() {
        let c = g.center();
        by_center.insert((quant(c[0]), quant(c[1])), e);
    }
    let n = sim_nci.re.n_loc();
    let mut max_diff: f64 = 0.0;
    for (e, g) in sim_nci.mesh.elements.iter().enumerate() {
        let c = g.center();
        let e2 = *by_center
            .get(&(quant(c[0]), quant(c[1])))
            .ok_or_else(|| Error::Diagnostics("no matching conforming element".into()))?;
        for i in 0..n {
            max_diff = max_diff
                .max((sim_nci.state.p[e * n + i] - sim_conf.state.p[e2 * n + i]).abs())
                .max((sim_nci.state.u0[e * n + i] - sim_conf.state.u0[e2 * n + i]).abs())
                .max((sim_nci.state.u1[e * n + i] - sim_conf.state.u1[e2 * n + i]).abs());
        }
    }
    write_file(&dir.join("conforming_check.csv"), |w| {
        writeln!(w, "steps,max_diff")?;
        writeln!(w, "{steps},{max_diff}")?;
        Ok(())
    })?;
    Ok(ConformingCheckResult { steps, max_diff })
}

// ---------------------------------------------------------------------------
// defaults and dispatch
// ---------------------------------------------------------------------------

/// Built-in configuration of each scenario, at desk scale, with the study
/// parameters documented by the field defaults.
pub fn default_config(scenario: Scenario) -> RunConfig {
    let text = match scenario {
        Scenario::Solve => {
            r#"
scenario = "solve"
degree = 3
end_time = 0.05
modes = 10
cadence = 10
output_dir = "out/solve"

[mesh]
kind = "embedded-rect"
max = [0.1, 0.1]
h_outer = 0.016666666666666666
h_inner = 0.011111111111111112

[[boundary]]
tag = "all"
kind = "pressure"
data = "zero"
"#
        }
        Scenario::MembraneConvergence => {
            // convergence geometry with initial spacings 1/60 and 1/90,
            // desk-scaled mode count M = 6, errors at t = 0.25 s
            r#"
scenario = "membrane-convergence"
degree = 3
end_time = 0.25
modes = 6
cadence = 50
output_dir = "out/membrane_convergence"

[mesh]
kind = "embedded-rect"
max = [0.1, 0.1]
h_outer = 0.016666666666666666
h_inner = 0.011111111111111112

[[boundary]]
tag = "all"
kind = "pressure"
data = "membrane"

[convergence]
degrees = [1, 2, 3]
refinements = [0, 1, 2, 3]
"#
        }
        Scenario::Instability => {
            // 13/7 faces-per-side interface, M = 120 modes
            r#"
scenario = "instability"
degree = 3
end_time = 2.0
modes = 120
cadence = 25
output_dir = "out/instability"

[mesh]
kind = "embedded-rect"
max = [0.1, 0.1]
h_outer = 0.004761904761904762
h_inner = 0.002564102564102564

[[boundary]]
tag = "all"
kind = "pressure"
data = "zero"

[instability]
mortar_degrees = [3]
p2p_degrees = [2, 3, 4, 5]
horizon = 2.0
"#
        }
        Scenario::Overlap => {
            // polygonal disc of radius 0.05 embedded in the unit-tenth square,
            // M = 5 membrane with analytical pressure Dirichlet data
            r#"
scenario = "overlap"
degree = 3
end_time = 0.25
modes = 5
cadence = 50
output_dir = "out/overlap"

[mesh]
kind = "overlap"
max = [0.1, 0.1]
radius = 0.05
overlap_depth = 0.002
disc_core = 6
disc_layers = 3
ring_sectors = 32
ring_layers = 2
grid_n = 12

[[boundary]]
tag = "all"
kind = "pressure"
data = "membrane"

[overlap_study]
degrees = [1, 2, 3, 4]
"#
        }
        Scenario::Heterogeneous => {
            // pressure pulse between fluids with c = 1 and c = 3; the right
            // region uses elements three times as large
            r#"
scenario = "heterogeneous"
degree = 3
end_time = 0.2
modes = 1
cadence = 100
output_dir = "out/heterogeneous"

[mesh]
kind = "split"
min = [-1.0, -1.0]
max = [1.0, 1.0]
split_x = 0.0
h_left = 0.016666666666666666
h_right = 0.05

[[region]]
id = 0
rho = 1.0
c = 1.0

[[region]]
id = 1
rho = 1.0
c = 3.0

[[boundary]]
tag = "all"
kind = "pressure"
data = "zero"

[[probe]]
start = [-1.0, 0.0]
end = [1.0, 0.0]
count = 1000

[pulse]
center = [0.0, 0.0]
width = 1e4
"#
        }
        Scenario::ConformingCheck => {
            r#"
scenario = "conforming-check"
degree = 3
end_time = 1.0
modes = 10
cadence = 10
output_dir = "out/conforming_check"

[mesh]
kind = "embedded-rect"
max = [0.1, 0.1]
h_outer = 0.016666666666666666
h_inner = 0.016666666666666666

[[boundary]]
tag = "all"
kind = "pressure"
data = "zero"
"#
        }
    };
    RunConfig::from_toml_str(text).expect("built-in config must parse")
}

/// Dispatch a configuration to its scenario driver.
pub fn run(cfg: &RunConfig) -> Result<()> {
    match cfg.scenario {
        Scenario::Solve => run_solve(cfg).map(|_| ()),
        Scenario::MembraneConvergence => run_membrane_convergence(cfg).map(|_| ()),
        Scenario::Instability => run_instability_study(cfg).map(|_| ()),
        Scenario::Overlap => run_overlap_study(cfg).map(|_| ()),
        Scenario::Heterogeneous => run_heterogeneous_application(cfg).map(|_| ()),
        Scenario::ConformingCheck => run_conforming_check(cfg, 100).and_then(|r| {
            if r.max_diff > 1e-11 {
                Err(Error::Diagnostics(format!(
                    "conforming check failed: max diff {:.3e} after {} steps",
                    r.max_diff, r.steps
                )))
            } else {
                Ok(())
            }
        }),
    }
}
