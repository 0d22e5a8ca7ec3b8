//! Analytical reference solutions, error norms, sound energy, observed
//! convergence orders, line probes and the transmission/reflection oracle.

use std::io::Write;

use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::geometry::map_to_physical;
use crate::mesh::{Mesh, RegionId};
use crate::quadrature::gauss_legendre_rule;
use crate::state::FieldState;

/// Analytical vibrating-membrane solution for rho = c = 1:
/// p = cos(M sqrt(2) pi t) sin(M pi x) sin(M pi y) and the matching velocity.
pub fn membrane_exact(modes: usize, x: [f64; 2], t: f64) -> (f64, [f64; 2]) {
    let m = modes as f64;
    let om = m * std::f64::consts::SQRT_2 * std::f64::consts::PI;
    let (sx, cx) = (m * std::f64::consts::PI * x[0]).sin_cos();
    let (sy, cy) = (m * std::f64::consts::PI * x[1]).sin_cos();
    let p = (om * t).cos() * sx * sy;
    let amp = -(om * t).sin() / std::f64::consts::SQRT_2;
    (p, [amp * cx * sy, amp * sx * cy])
}

/// Subset of mesh elements a diagnostic integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSelector {
    Global,
    Region(RegionId),
}

impl RegionSelector {
    pub fn contains(&self, mesh: &Mesh, elem: usize) -> bool {
        match self {
            RegionSelector::Global => true,
            RegionSelector::Region(r) => mesh.region_of[elem] == *r,
        }
    }
}

/// Over-integration tables: k+3 Gauss points per direction with the degree-k
/// basis tabulated there. Shared by the error and energy integrals to
/// suppress quadrature bias from squared fields.
pub struct OverIntegration {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Basis values at the over-integration points, `[q][i]`.
    pub vals: Vec<Vec<f64>>,
}

impl OverIntegration {
    pub fn new(re: &ReferenceElement) -> Self {
        let n1 = re.degree + 3;
        let (qp, qw) = gauss_legendre_rule(n1).expect("n >= 1");
        let mut points = Vec::with_capacity(n1 * n1);
        let mut weights = Vec::with_capacity(n1 * n1);
        for j in 0..n1 {
            for i in 0..n1 {
                points.push([qp[i], qp[j]]);
                weights.push(qw[i] * qw[j]);
            }
        }
        let vals = re.tabulate(&points);
        Self { points, weights, vals }
    }
}

/// Region-wise relative L2 errors of pressure and velocity against an exact
/// field, eps = ||f_h - f_exact|| / ||f_exact||. The velocity norm sums both
/// components. Errors out if the exact field has zero norm on the region.
pub fn l2_relative_error(
    mesh: &Mesh,
    state: &FieldState,
    oi: &OverIntegration,
    exact: &dyn Fn([f64; 2]) -> (f64, [f64; 2]),
    region: RegionSelector,
) -> Result<(f64, f64)> {
    let mut num_p = 0.0;
    let mut den_p = 0.0;
    let mut num_u = 0.0;
    let mut den_u = 0.0;
    for (e, geom) in mesh.elements.iter().enumerate() {
        if !region.contains(mesh, e) {
            continue;
        }
        let base = e * state.n_loc;
        for (q, &xi) in oi.points.iter().enumerate() {
            let wj = oi.weights[q] * geom.jacobian_det(xi);
            let x = map_to_physical(geom, xi);
            let vals = &oi.vals[q];
            let mut ph = 0.0;
            let mut u0h = 0.0;
            let mut u1h = 0.0;
            for (i, &v) in vals.iter().enumerate() {
                ph += v * state.p[base + i];
                u0h += v * state.u0[base + i];
                u1h += v * state.u1[base + i];
            }
            let (pe, ue) = exact(x);
            num_p += wj * (ph - pe) * (ph - pe);
            den_p += wj * pe * pe;
            num_u += wj * ((u0h - ue[0]).powi(2) + (u1h - ue[1]).powi(2));
            den_u += wj * (ue[0] * ue[0] + ue[1] * ue[1]);
        }
    }
    if den_p <= 0.0 || den_u <= 0.0 {
        return Err(Error::Diagnostics(
            "relative L2 error undefined: exact field has zero norm on the region".into(),
        ));
    }
    Ok(((num_p / den_p).sqrt(), (num_u / den_u).sqrt()))
}

/// Sound energy of the discrete state over a region,
/// E = integral of p^2/(2 rho c^2) + rho |u|^2 / 2.
pub fn sound_energy(
    mesh: &Mesh,
    state: &FieldState,
    oi: &OverIntegration,
    region: RegionSelector,
) -> f64 {
    let mut e_tot = 0.0;
    for (e, geom) in mesh.elements.iter().enumerate() {
        if !region.contains(mesh, e) {
            continue;
        }
        let mat = mesh.material_of_elem(e);
        let pc = 1.0 / (2.0 * mat.rho * mat.c * mat.c);
        let uc = 0.5 * mat.rho;
        let base = e * state.n_loc;
        for (q, &xi) in oi.points.iter().enumerate() {
            let wj = oi.weights[q] * geom.jacobian_det(xi);
            let vals = &oi.vals[q];
            let mut ph = 0.0;
            let mut u0h = 0.0;
            let mut u1h = 0.0;
            for (i, &v) in vals.iter().enumerate() {
                ph += v * state.p[base + i];
                u0h += v * state.u0[base + i];
                u1h += v * state.u1[base + i];
            }
            e_tot += wj * (pc * ph * ph + uc * (u0h * u0h + u1h * u1h));
        }
    }
    e_tot
}

/// Sound energy of an analytic field over a region, by per-element quadrature
/// with `n1` Gauss points per direction.
pub fn sound_energy_exact(
    mesh: &Mesh,
    region: RegionSelector,
    n1: usize,
    f: &dyn Fn([f64; 2]) -> (f64, [f64; 2]),
) -> f64 {
    let (qp, qw) = gauss_legendre_rule(n1).expect("n >= 1");
    let mut e_tot = 0.0;
    for (e, geom) in mesh.elements.iter().enumerate() {
        if !region.contains(mesh, e) {
            continue;
        }
        let mat = mesh.material_of_elem(e);
        let pc = 1.0 / (2.0 * mat.rho * mat.c * mat.c);
        let uc = 0.5 * mat.rho;
        for j in 0..n1 {
            for i in 0..n1 {
                let xi = [qp[i], qp[j]];
                let wj = qw[i] * qw[j] * geom.jacobian_det(xi);
                let (p, u) = f(map_to_physical(geom, xi));
                e_tot += wj * (pc * p * p + uc * (u[0] * u[0] + u[1] * u[1]));
            }
        }
    }
    e_tot
}

/// Observed convergence rates log2(eps_i / eps_{i+1}) for errors measured on a
/// strictly halving h sequence.
pub fn observed_order(errors: &[f64], h_values: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != h_values.len() || errors.len() < 2 {
        return Err(Error::Diagnostics("observed_order needs >= 2 matching samples".into()));
    }
    for w in h_values.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-9 {
            return Err(Error::Diagnostics(format!(
                "h sequence must halve: got {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Pressure samples at the given points; `None` where a point lies outside
/// all elements. Points found in several elements average the values.
pub fn line_probe(
    mesh: &Mesh,
    re: &ReferenceElement,
    state: &FieldState,
    points: &[[f64; 2]],
) -> Vec<Option<f64>> {
    points
        .iter()
        .map(|&x| {
            let hits = mesh.locate_point(x);
            if hits.is_empty() {
                return None;
            }
            let mut acc = 0.0;
            for &(e, xi) in &hits {
                let (vals, _) = re.shape_at(xi);
                let base = e * state.n_loc;
                acc += vals.iter().enumerate().map(|(i, v)| v * state.p[base + i]).sum::<f64>();
            }
            Some(acc / hits.len() as f64)
        })
        .collect()
}

/// Normal-incidence pressure reflection/transmission coefficients between two
/// media, R = (Z2 - Z1)/(Z2 + Z1), T = 2 Z2/(Z2 + Z1) with Z = rho c.
pub fn transmission_coefficients(rho1: f64, c1: f64, rho2: f64, c2: f64) -> (f64, f64) {
    let z1 = rho1 * c1;
    let z2 = rho2 * c2;
    ((z2 - z1) / (z2 + z1), 2.0 * z2 / (z2 + z1))
}

/// One diagnostics row of the time-series CSV.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub eps_p_global: Option<f64>,
    pub eps_u_global: Option<f64>,
    pub eps_p_inner: Option<f64>,
    pub eps_u_inner: Option<f64>,
    pub eps_p_outer: Option<f64>,
    pub eps_u_outer: Option<f64>,
}

pub fn write_timeseries_csv<W: Write>(mut w: W, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(
        w,
        "t,E,eps_p_global,eps_u_global,eps_p_inner,eps_u_inner,eps_p_outer,eps_u_outer"
    )?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.energy,
            opt(r.eps_p_global),
            opt(r.eps_u_global),
            opt(r.eps_p_inner),
            opt(r.eps_u_inner),
            opt(r.eps_p_outer),
            opt(r.eps_u_outer)
        )?;
    }
    Ok(())
}

pub fn write_probe_csv<W: Write>(
    mut w: W,
    points: &[[f64; 2]],
    pressures: &[Option<f64>],
) -> Result<()> {
    writeln!(w, "x1,x2,p")?;
    for (x, p) in points.iter().zip(pressures) {
        writeln!(w, "{},{},{}", x[0], x[1], p.map(|v| v.to_string()).unwrap_or_default())?;
    }
    Ok(())
}
