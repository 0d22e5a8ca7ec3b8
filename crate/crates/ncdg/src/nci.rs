//! Non-conforming interface couplings: point-to-point interpolation and
//! Nitsche-type mortaring.
//!
//! Point-to-point places the quadrature points of the primary face and
//! interpolates exterior traces wherever those points land in secondary
//! elements; integration is inexact when secondary element boundaries cross a
//! face. Mortaring first intersects each primary face with the secondary
//! volume elements and collects a quadrature rule per intersection, which
//! integrates element-wise polynomial traces exactly and handles overlapping
//! elements without a special path.

use std::io::Write;

use crate::basis::{face_point, ReferenceElement};
use crate::error::{Error, Result};
use crate::flux::{ldg_nci_flux, TraceState};
use crate::geometry::{clip_segment_param, contains_ref, map_to_physical, map_to_reference, REF_TOL};
use crate::material::Material;
use crate::mesh::Mesh;
use crate::state::FieldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingScheme {
    PointToPoint,
    Mortaring,
}

impl std::fmt::Display for CouplingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CouplingScheme::PointToPoint => write!(f, "p2p"),
            CouplingScheme::Mortaring => write!(f, "mortar"),
        }
    }
}

/// One secondary element holding an interface quadrature point.
#[derive(Debug, Clone)]
pub struct NciBinding {
    pub elem: usize,
    pub xi: [f64; 2],
    /// Basis values of the secondary element at xi.
    pub vals: Vec<f64>,
}

/// One interface quadrature point of a primary face.
#[derive(Debug, Clone)]
pub struct NciQuadPoint {
    /// Index into `mesh.nci_faces`.
    pub face: usize,
    pub x: [f64; 2],
    /// Quadrature weight times face (point-to-point) or mortar Jacobian.
    pub weight_jac: f64,
    /// Outward normal of the primary face; the secondary side uses its negative.
    pub normal: [f64; 2],
    /// Basis values of the primary element at this point.
    pub interior_vals: Vec<f64>,
    /// Secondary elements containing the point; values are averaged.
    pub bindings: Vec<NciBinding>,
    pub secondary_material: Material,
}

/// Intersection of a primary face with one secondary element.
#[derive(Debug, Clone)]
pub struct MortarPatch {
    pub face: usize,
    pub secondary: usize,
    pub endpoints: ([f64; 2], [f64; 2]),
    pub length: f64,
}

/// Precomputed exterior-trace evaluation data for one coupling scheme.
#[derive(Debug, Clone)]
pub struct NciMap {
    pub scheme: CouplingScheme,
    pub points: Vec<NciQuadPoint>,
    /// Point range of each NCI face, aligned with `mesh.nci_faces`.
    pub face_ranges: Vec<std::ops::Range<usize>>,
    /// Mortar patches (empty for point-to-point).
    pub patches: Vec<MortarPatch>,
    /// Covered length fraction per face; 1 for non-overlapping interfaces,
    /// possibly less on declared overlap configurations.
    pub covered_fraction: Vec<f64>,
}

impl NciMap {
    pub fn build(mesh: &Mesh, re: &ReferenceElement, scheme: CouplingScheme) -> Result<Self> {
        match scheme {
            CouplingScheme::PointToPoint => build_p2p_map(mesh, re),
            CouplingScheme::Mortaring => build_mortar_map(mesh, re),
        }
    }

    /// Diagnostic dump: one row per quadrature point.
    pub fn dump_points_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "face,x1,x2,weight_jac,bindings")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{},{}", p.face, p.x[0], p.x[1], p.weight_jac, p.bindings.len())?;
        }
        Ok(())
    }

    /// Diagnostic dump: one row per mortar patch.
    pub fn dump_patches_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "face,secondary,ax1,ax2,bx1,bx2,length")?;
        for p in &self.patches {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                p.face, p.secondary, p.endpoints.0[0], p.endpoints.0[1], p.endpoints.1[0],
                p.endpoints.1[1], p.length
            )?;
        }
        Ok(())
    }
}

fn face_segment(mesh: &Mesh, fi: usize) -> ([f64; 2], [f64; 2], f64, [f64; 2], usize, usize) {
    let nf = mesh.nci_faces[fi];
    let g = &mesh.elements[nf.elem];
    let (a, b) = g.face_endpoints(nf.face);
    let len = g.face_length(nf.face);
    let normal = g.face_normal(nf.face);
    (a, b, len, normal, nf.elem, nf.face)
}

/// Bind one physical point to the secondary elements containing it.
fn bind_point(
    mesh: &Mesh,
    re: &ReferenceElement,
    fi: usize,
    x: [f64; 2],
    primary_region: usize,
    face_len: f64,
) -> Result<(Vec<NciBinding>, Material)> {
    let hits = mesh.locate_point_filtered(x, |e| mesh.region_of[e] != primary_region);
    if hits.is_empty() {
        return Err(Error::UnboundQuadPoint { face: fi, x: x[0], y: x[1] });
    }
    let region = mesh.region_of[hits[0].0];
    if hits.iter().any(|&(e, _)| mesh.region_of[e] != region) {
        return Err(Error::CouplingMap(format!(
            "point ({}, {}) of face {fi} binds to elements of different secondary regions",
            x[0], x[1]
        )));
    }
    let mut bindings = Vec::with_capacity(hits.len());
    for (e, xi) in hits {
        let mapped = map_to_physical(&mesh.elements[e], xi);
        let dist = ((mapped[0] - x[0]).powi(2) + (mapped[1] - x[1]).powi(2)).sqrt();
        if dist > 1e-9 * face_len {
            return Err(Error::CouplingMap(format!(
                "binding of point ({}, {}) to element {e} misses by {dist:.3e}",
                x[0], x[1]
            )));
        }
        let (vals, _) = re.shape_at(xi);
        bindings.push(NciBinding { elem: e, xi, vals });
    }
    Ok((bindings, mesh.material(region)))
}

/// Quadrature dictated by the primary faces; every face point is located in
/// the secondary elements, a point found in none is a hard error.
pub fn build_p2p_map(mesh: &Mesh, re: &ReferenceElement) -> Result<NciMap> {
    let mut points = Vec::new();
    let mut face_ranges = Vec::with_capacity(mesh.nci_faces.len());
    for fi in 0..mesh.nci_faces.len() {
        let (a, b, len, normal, elem, local_face) = face_segment(mesh, fi);
        let region = mesh.region_of[elem];
        let start = points.len();
        for (q, &s) in re.quad_points_1d.iter().enumerate() {
            let t = 0.5 * (s + 1.0);
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let (bindings, secondary_material) = bind_point(mesh, re, fi, x, region, len)?;
            points.push(NciQuadPoint {
                face: fi,
                x,
                weight_jac: re.quad_weights_1d[q] * 0.5 * len,
                normal,
                interior_vals: re.face_val[local_face][q].clone(),
                bindings,
                secondary_material,
            });
        }
        face_ranges.push(start..points.len());
    }
    let covered_fraction = vec![1.0; mesh.nci_faces.len()];
    Ok(NciMap { scheme: CouplingScheme::PointToPoint, points, face_ranges, patches: Vec::new(), covered_fraction })
}

/// Quadrature collected on the intersections between primary faces and
/// secondary volume elements.
pub fn build_mortar_map(mesh: &Mesh, re: &ReferenceElement) -> Result<NciMap> {
    const COVER_TOL: f64 = 1e-8;
    let mut points = Vec::new();
    let mut patches = Vec::new();
    let mut face_ranges = Vec::with_capacity(mesh.nci_faces.len());
    let mut covered_fraction = Vec::with_capacity(mesh.nci_faces.len());
    for fi in 0..mesh.nci_faces.len() {
        let (a, b, len, normal, elem, local_face) = face_segment(mesh, fi);
        let region = mesh.region_of[elem];
        let primary = &mesh.elements[elem];

        // candidate secondary elements near the face
        let mut intervals: Vec<(f64, f64, usize)> = Vec::new();
        for (e, g) in mesh.elements.iter().enumerate() {
            if mesh.region_of[e] == region {
                continue;
            }
            let (lo, hi) = g.bbox();
            let infl = 1e-9 * g.diameter();
            let fx = (a[0].min(b[0]), a[0].max(b[0]));
            let fy = (a[1].min(b[1]), a[1].max(b[1]));
            if fx.1 < lo[0] - infl || fx.0 > hi[0] + infl || fy.1 < lo[1] - infl || fy.0 > hi[1] + infl {
                continue;
            }
            if let Some((t0, t1)) = clip_segment_param(a, b, g) {
                if t1 - t0 > crate::geometry::CLIP_LEN_TOL {
                    intervals.push((t0, t1, e));
                }
            }
        }
        if intervals.is_empty() {
            return Err(Error::CouplingMap(format!(
                "no intersections found for NCI face {fi} (element {elem}, local face {local_face})"
            )));
        }
        intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // resolve shared-vertex ties half-open to the right; genuine double
        // coverage beyond tolerance is a mesh inconsistency
        let mut cursor = intervals[0].0;
        let mut covered = 0.0;
        let start = points.len();
        for &(t0, t1, e) in &intervals {
            let t0 = if t0 < cursor {
                if cursor - t0 > COVER_TOL {
                    return Err(Error::CouplingMap(format!(
                        "NCI face {fi}: duplicate mortar coverage near t = {t0:.12} (overlap {:.3e})",
                        cursor - t0
                    )));
                }
                cursor
            } else {
                t0
            };
            if t1 - t0 <= CLIP_LEN_REL() {
                continue;
            }
            cursor = t1;
            covered += t1 - t0;
            let patch_len = (t1 - t0) * len;
            let pa = [a[0] + t0 * (b[0] - a[0]), a[1] + t0 * (b[1] - a[1])];
            let pb = [a[0] + t1 * (b[0] - a[0]), a[1] + t1 * (b[1] - a[1])];
            patches.push(MortarPatch { face: fi, secondary: e, endpoints: (pa, pb), length: patch_len });
            for (q, &s) in re.quad_points_1d.iter().enumerate() {
                let t = t0 + 0.5 * (s + 1.0) * (t1 - t0);
                let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                // interior trace at the face parameter (straight face: affine)
                let xi_face = face_point(local_face, 2.0 * t - 1.0);
                let (interior_vals, _) = re.shape_at(xi_face);
                debug_assert!({
                    let xp = map_to_physical(primary, xi_face);
                    ((xp[0] - x[0]).powi(2) + (xp[1] - x[1]).powi(2)).sqrt() < 1e-9 * len
                });
                let xi_sec = map_to_reference(&mesh.elements[e], x)
                    .map_err(|_| Error::UnboundQuadPoint { face: fi, x: x[0], y: x[1] })?;
                if !contains_ref(xi_sec, 1e2 * REF_TOL) {
                    return Err(Error::CouplingMap(format!(
                        "mortar point ({}, {}) of face {fi} maps outside secondary element {e}",
                        x[0], x[1]
                    )));
                }
                let (vals, _) = re.shape_at(xi_sec);
                points.push(NciQuadPoint {
                    face: fi,
                    x,
                    weight_jac: re.quad_weights_1d[q] * 0.5 * patch_len,
                    normal,
                    interior_vals,
                    bindings: vec![NciBinding { elem: e, xi: xi_sec, vals }],
                    secondary_material: mesh.material_of_elem(e),
                });
            }
        }
        if points.len() == start {
            return Err(Error::CouplingMap(format!("NCI face {fi}: all intersections degenerate")));
        }
        let uncovered = 1.0 - covered;
        if !mesh.is_overlapping() && uncovered > COVER_TOL {
            return Err(Error::CouplingMap(format!(
                "NCI face {fi} is only {:.12} covered by secondary elements",
                covered
            )));
        }
        covered_fraction.push(covered.min(1.0));
        face_ranges.push(start..points.len());
    }
    Ok(NciMap { scheme: CouplingScheme::Mortaring, points, face_ranges, patches, covered_fraction })
}

#[allow(non_snake_case)]
fn CLIP_LEN_REL() -> f64 {
    crate::geometry::CLIP_LEN_TOL
}

/// Exterior traces at every map point, averaging over multiple bindings.
pub fn evaluate_exterior_traces(state: &FieldState, map: &NciMap) -> Vec<TraceState> {
    map.points.iter().map(|p| exterior_trace(state, p)).collect()
}

#[inline]
pub fn exterior_trace(state: &FieldState, point: &NciQuadPoint) -> TraceState {
    let mut p = 0.0;
    let mut u0 = 0.0;
    let mut u1 = 0.0;
    for b in &point.bindings {
        let base = b.elem * state.n_loc;
        let mut bp = 0.0;
        let mut b0 = 0.0;
        let mut b1 = 0.0;
        for (i, &v) in b.vals.iter().enumerate() {
            bp += v * state.p[base + i];
            b0 += v * state.u0[base + i];
            b1 += v * state.u1[base + i];
        }
        p += bp;
        u0 += b0;
        u1 += b1;
    }
    let inv = 1.0 / point.bindings.len() as f64;
    TraceState::new(p * inv, [u0 * inv, u1 * inv])
}

#[inline]
pub fn interior_trace(state: &FieldState, elem: usize, point: &NciQuadPoint) -> TraceState {
    let base = elem * state.n_loc;
    let mut p = 0.0;
    let mut u0 = 0.0;
    let mut u1 = 0.0;
    for (i, &v) in point.interior_vals.iter().enumerate() {
        p += v * state.p[base + i];
        u0 += v * state.u0[base + i];
        u1 += v * state.u1[base + i];
    }
    TraceState::new(p, [u0, u1])
}

/// Add the tested NCI flux integrals of one primary face into the primary
/// element's pre-mass-inverse surface accumulators:
/// out_u_d += w|J| (1/rho) N_i n_d p*, out_p += w|J| rho c^2 N_i (n . u*).
pub fn accumulate_nci_face(
    map: &NciMap,
    face_idx: usize,
    state: &FieldState,
    elem: usize,
    mat_minus: Material,
    out_p: &mut [f64],
    out_u0: &mut [f64],
    out_u1: &mut [f64],
) {
    let inv_rho = 1.0 / mat_minus.rho;
    let rc2 = mat_minus.rho * mat_minus.c * mat_minus.c;
    for point in &map.points[map.face_ranges[face_idx].clone()] {
        let minus = interior_trace(state, elem, point);
        let plus = exterior_trace(state, point);
        let (p_star, u_star) =
            ldg_nci_flux(minus, plus, mat_minus, point.secondary_material, point.normal);
        let un_star = u_star[0] * point.normal[0] + u_star[1] * point.normal[1];
        let wp = point.weight_jac * rc2 * un_star;
        let w0 = point.weight_jac * inv_rho * point.normal[0] * p_star;
        let w1 = point.weight_jac * inv_rho * point.normal[1] * p_star;
        for (i, &v) in point.interior_vals.iter().enumerate() {
            out_p[i] += v * wp;
            out_u0[i] += v * w0;
            out_u1[i] += v * w1;
        }
    }
}

/// Tested NCI flux integrals of one primary face, as fresh vectors
/// (surface contributions before the mass inverse).
pub fn integrate_nci_face(
    map: &NciMap,
    face_idx: usize,
    mesh: &Mesh,
    state: &FieldState,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let elem = mesh.nci_faces[face_idx].elem;
    let mat = mesh.material_of_elem(elem);
    let n = state.n_loc;
    let mut out_p = vec![0.0; n];
    let mut out_u0 = vec![0.0; n];
    let mut out_u1 = vec![0.0; n];
    accumulate_nci_face(map, face_idx, state, elem, mat, &mut out_p, &mut out_u0, &mut out_u1);
    (out_p, out_u0, out_u1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::Material;
    use crate::meshgen::{
        build_embedded_rect_mesh, build_overlap_mesh, build_overset_mesh, EmbeddedRectSpec,
        OverlapMeshSpec, OversetMeshSpec,
    };

    fn unit_mat() -> Material {
        Material::new(1.0, 1.0).unwrap()
    }

    fn embedded(h_outer: f64, h_inner: f64) -> Mesh {
        build_embedded_rect_mesh(&EmbeddedRectSpec {
            outer_min: [0.0, 0.0],
            outer_max: [0.1, 0.1],
            hole_min: [1.0 / 30.0, 1.0 / 30.0],
            hole_max: [2.0 / 30.0, 2.0 / 30.0],
            h_outer,
            h_inner,
            outer_material: unit_mat(),
            inner_material: unit_mat(),
        })
        .unwrap()
    }

    #[test]
    fn p2p_on_matched_interface_binds_single_elements() {
        let mesh = embedded(1.0 / 60.0, 1.0 / 60.0);
        let re = ReferenceElement::new(3).unwrap();
        let map = build_p2p_map(&mesh, &re).unwrap();
        assert_eq!(map.points.len(), mesh.nci_faces.len() * 4);
        for p in &map.points {
            assert_eq!(p.bindings.len(), 1, "matched interface point with {} bindings", p.bindings.len());
            // the point lies on the secondary element's boundary edge
            let xi = p.bindings[0].xi;
            assert!((xi[0].abs() - 1.0).abs() < 1e-9 || (xi[1].abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn p2p_aliasing_premise_on_13_7_mesh() {
        // the coarse-face quadrature only sees a connected fine element if one
        // of its points lands there; on the 13/7 interface the narrowest
        // sub-segment is 1/13 of a face, which the 3-point rule (k = 2) skips
        let mesh = embedded(1.0 / 210.0, 1.0 / 390.0);
        let unsampled_for_k = |k: usize| -> usize {
            let re = ReferenceElement::new(k).unwrap();
            let map = build_p2p_map(&mesh, &re).unwrap();
            let mut unsampled = 0;
            for (fi, nf) in mesh.nci_faces.iter().enumerate() {
                if mesh.region_of[nf.elem] != 0 {
                    continue; // coarse (outer) primary faces only
                }
                let (a, b) = mesh.elements[nf.elem].face_endpoints(nf.face);
                // all fine elements geometrically intersecting this face
                let mut overlapping = std::collections::HashSet::new();
                for (e, g) in mesh.elements.iter().enumerate() {
                    if mesh.region_of[e] != 1 {
                        continue;
                    }
                    if let Some((t0, t1)) = clip_segment_param(a, b, g) {
                        if t1 - t0 > 1e-6 {
                            overlapping.insert(e);
                        }
                    }
                }
                let bound: std::collections::HashSet<usize> = map.points
                    [map.face_ranges[fi].clone()]
                .iter()
                .flat_map(|p| p.bindings.iter().map(|b| b.elem))
                .collect();
                assert!(bound.iter().all(|e| overlapping.contains(e)));
                unsampled += overlapping.len() - bound.len();
            }
            unsampled
        };
        assert!(unsampled_for_k(2) > 0, "k=2 must leave fine elements unsampled");
        let any: usize = (1..=6).map(unsampled_for_k).sum();
        assert!(any > 0);
    }

    #[test]
    fn mortar_on_matched_interface_is_one_full_patch_per_face() {
        let mesh = embedded(1.0 / 60.0, 1.0 / 60.0);
        let re = ReferenceElement::new(2).unwrap();
        let map = build_mortar_map(&mesh, &re).unwrap();
        assert_eq!(map.patches.len(), mesh.nci_faces.len());
        for (fi, nf) in mesh.nci_faces.iter().enumerate() {
            let len = mesh.elements[nf.elem].face_length(nf.face);
            let patch = &map.patches[fi];
            assert!((patch.length - len).abs() < 1e-12);
            let wsum: f64 =
                map.points[map.face_ranges[fi].clone()].iter().map(|p| p.weight_jac).sum();
            assert!((wsum - len).abs() < 1e-12);
        }
    }

    #[test]
    fn mortar_coverage_partitions_every_face_on_13_7_mesh() {
        let mesh = embedded(1.0 / 210.0, 1.0 / 390.0);
        let re = ReferenceElement::new(3).unwrap();
        let map = build_mortar_map(&mesh, &re).unwrap();
        for (fi, nf) in mesh.nci_faces.iter().enumerate() {
            let len = mesh.elements[nf.elem].face_length(nf.face);
            let total: f64 = map
                .patches
                .iter()
                .filter(|p| p.face == fi)
                .map(|p| p.length)
                .sum();
            assert!((total - len).abs() <= 1e-10 * len.max(1.0), "face {fi}: {total} vs {len}");
            assert!((map.covered_fraction[fi] - 1.0).abs() <= 1e-8);
        }
        // coarse faces split over fine elements: 13/7 ratio means 2 or 3 patches
        let coarse_faces: Vec<usize> = (0..mesh.nci_faces.len())
            .filter(|&fi| mesh.region_of[mesh.nci_faces[fi].elem] == 0)
            .collect();
        for fi in coarse_faces {
            let n_patches = map.patches.iter().filter(|p| p.face == fi).count();
            assert!((2..=3).contains(&n_patches), "face {fi} has {n_patches} patches");
        }
    }

    #[test]
    fn mortar_split_ratio_40_60() {
        // one primary cell above, two secondary cells below split at 40 %
        use crate::mesh::RawMesh;
        use std::sync::Arc;
        let vertices = vec![
            [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], // top cell (region 0)
            [0.0, -1.0], [0.4, -1.0], [1.0, -1.0], [0.0, 0.0], [0.4, 0.0], [1.0, 0.0],
        ];
        let cells = vec![[0, 1, 2, 3], [4, 5, 8, 7], [5, 6, 9, 8]];
        let raw = RawMesh {
            vertices,
            cells,
            cell_region: vec![0, 1, 1],
            materials: vec![unit_mat(), unit_mat()],
            boundary_tag_names: vec!["outer".into()],
            tagger: Arc::new(|a: [f64; 2], b: [f64; 2]| {
                // everything except the shared line y = 0 is outer boundary
                if a[1].abs() < 1e-12 && b[1].abs() < 1e-12 {
                    None
                } else {
                    Some(0)
                }
            }),
            overlapping: false,
        };
        let mesh = Mesh::build(raw).unwrap();
        assert_eq!(mesh.nci_faces.len(), 3);
        let re = ReferenceElement::new(2).unwrap();
        let map = build_mortar_map(&mesh, &re).unwrap();
        let top_face = (0..3)
            .find(|&fi| mesh.region_of[mesh.nci_faces[fi].elem] == 0)
            .unwrap();
        let mut lens: Vec<f64> = map
            .patches
            .iter()
            .filter(|p| p.face == top_face)
            .map(|p| p.length)
            .collect();
        lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(lens.len(), 2);
        assert!((lens[0] - 0.4).abs() < 1e-12);
        assert!((lens[1] - 0.6).abs() < 1e-12);
        let wsum: f64 = map.points[map.face_ranges[top_face].clone()]
            .iter()
            .map(|p| p.weight_jac)
            .sum();
        assert!((wsum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_points_bind_to_element_interiors() {
        let mesh = build_overlap_mesh(&OverlapMeshSpec {
            domain_min: [0.0, 0.0],
            domain_max: [0.1, 0.1],
            radius: 0.05,
            overlap_depth: 2e-3,
            disc_core: 6,
            disc_layers: 3,
            ring_sectors: 32,
            ring_layers: 2,
            outer_material: unit_mat(),
            inner_material: unit_mat(),
        })
        .unwrap();
        let re = ReferenceElement::new(2).unwrap();
        for map in [build_p2p_map(&mesh, &re).unwrap(), build_mortar_map(&mesh, &re).unwrap()] {
            // hole faces (primary on region 0) sample the disc interior
            for p in &map.points {
                if mesh.region_of[mesh.nci_faces[p.face].elem] != 0 {
                    continue;
                }
                for b in &p.bindings {
                    assert!(
                        b.xi[0].abs() < 1.0 - 1e-7 && b.xi[1].abs() < 1.0 - 1e-7,
                        "expected strictly interior binding, got {:?}",
                        b.xi
                    );
                }
            }
        }
    }

    #[test]
    fn overset_coverage_is_complete() {
        let mesh = build_overset_mesh(&OversetMeshSpec {
            domain_min: [0.0, 0.0],
            domain_max: [0.1, 0.1],
            radius: 0.05,
            disc_core: 6,
            disc_layers: 3,
            grid_n: 12,
            outer_material: unit_mat(),
            inner_material: unit_mat(),
        })
        .unwrap();
        let re = ReferenceElement::new(2).unwrap();
        let map = build_mortar_map(&mesh, &re).unwrap();
        for (fi, frac) in map.covered_fraction.iter().enumerate() {
            assert!((frac - 1.0).abs() <= 1e-8, "face {fi} covered {frac}");
        }
        // sum of mortar lengths equals the face length on every primary face
        for (fi, nf) in mesh.nci_faces.iter().enumerate() {
            let len = mesh.elements[nf.elem].face_length(nf.face);
            let total: f64 =
                map.patches.iter().filter(|p| p.face == fi).map(|p| p.length).sum();
            assert!((total - len).abs() <= 1e-10 * len.max(1.0));
        }
    }

    #[test]
    fn traces_reproduce_constant_and_linear_fields() {
        let mesh = embedded(1.0 / 210.0, 1.0 / 390.0);
        let re = ReferenceElement::new(2).unwrap();
        let lin = |x: [f64; 2]| (3.0 * x[0] - 2.0 * x[1] + 0.25, [x[1], -0.5 * x[0]]);
        let state = FieldState::interpolate(&mesh, &re, 0.0, lin);
        for map in [build_p2p_map(&mesh, &re).unwrap(), build_mortar_map(&mesh, &re).unwrap()] {
            let traces = evaluate_exterior_traces(&state, &map);
            for (p, tr) in map.points.iter().zip(&traces) {
                let (pe, ue) = lin(p.x);
                assert!((tr.p - pe).abs() <= 1e-12, "{} vs {}", tr.p, pe);
                assert!((tr.u[0] - ue[0]).abs() <= 1e-12);
                assert!((tr.u[1] - ue[1]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn multi_binding_points_average() {
        let re = ReferenceElement::new(1).unwrap();
        let n = re.n_loc();
        let mut state = FieldState::zeros(2, n);
        let delta = 0.6;
        for i in 0..n {
            state.p[i] = 1.0; // element 0 carries p = 1
            state.p[n + i] = 1.0 + delta; // element 1 carries p = 1 + delta
        }
        let vals_center = re.shape_at([0.0, 0.0]).0;
        let point = NciQuadPoint {
            face: 0,
            x: [0.0, 0.0],
            weight_jac: 1.0,
            normal: [1.0, 0.0],
            interior_vals: vals_center.clone(),
            bindings: vec![
                NciBinding { elem: 0, xi: [0.0, 0.0], vals: vals_center.clone() },
                NciBinding { elem: 1, xi: [0.0, 0.0], vals: vals_center },
            ],
            secondary_material: unit_mat(),
        };
        let tr = exterior_trace(&state, &point);
        assert!((tr.p - (1.0 + 0.5 * delta)).abs() < 1e-14);
    }

    #[test]
    fn mortar_integration_exact_p2p_aliased_for_dg_traces() {
        // element-wise polynomial (discontinuous) data on the 13/7 mesh:
        // mortaring integrates the flux terms exactly, point-to-point does not
        let mesh = embedded(1.0 / 210.0, 1.0 / 390.0);
        let k = 3;
        let re = ReferenceElement::new(k).unwrap();
        // seeded pseudo-random nodal coefficients
        let mut seed = 0x1234_5678_9abc_def0u64;
        let mut rng = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut state = FieldState::zeros(mesh.n_elements(), re.n_loc());
        for v in state.p.iter_mut().chain(state.u0.iter_mut()).chain(state.u1.iter_mut()) {
            *v = rng();
        }

        let mortar = build_mortar_map(&mesh, &re).unwrap();
        let p2p = build_p2p_map(&mesh, &re).unwrap();

        // oracle: composite Gauss quadrature split exactly at the fine-grid lines
        let oracle_face = |fi: usize| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            let nf = mesh.nci_faces[fi];
            let g = &mesh.elements[nf.elem];
            let (a, b) = g.face_endpoints(nf.face);
            let len = g.face_length(nf.face);
            let normal = g.face_normal(nf.face);
            let mat = mesh.material_of_elem(nf.elem);
            let region = mesh.region_of[nf.elem];
            // split points: all secondary element boundaries crossing the face
            let mut cuts = vec![0.0, 1.0];
            for (e, ge) in mesh.elements.iter().enumerate() {
                if mesh.region_of[e] == region {
                    continue;
                }
                if let Some((t0, t1)) = clip_segment_param(a, b, ge) {
                    cuts.push(t0);
                    cuts.push(t1);
                }
            }
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
            let (qp, qw) = crate::quadrature::gauss_legendre_rule(2 * k + 4).unwrap();
            let n = re.n_loc();
            let (mut op, mut o0, mut o1) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for w in cuts.windows(2) {
                for (i, &s) in qp.iter().enumerate() {
                    let t = w[0] + 0.5 * (s + 1.0) * (w[1] - w[0]);
                    let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let wj = qw[i] * 0.5 * (w[1] - w[0]) * len;
                    let xi_face = face_point(nf.face, 2.0 * t - 1.0);
                    let (ivals, _) = re.shape_at(xi_face);
                    let base = nf.elem * state.n_loc;
                    let mut minus = TraceState::new(0.0, [0.0, 0.0]);
                    for (ii, &v) in ivals.iter().enumerate() {
                        minus.p += v * state.p[base + ii];
                        minus.u[0] += v * state.u0[base + ii];
                        minus.u[1] += v * state.u1[base + ii];
                    }
                    // exterior: locate in the secondary region
                    let hits = mesh.locate_point_filtered(x, |e| mesh.region_of[e] != region);
                    let mut plus = TraceState::new(0.0, [0.0, 0.0]);
                    for &(e, xi) in &hits {
                        let (vals, _) = re.shape_at(xi);
                        let base = e * state.n_loc;
                        for (ii, &v) in vals.iter().enumerate() {
                            plus.p += v * state.p[base + ii];
                            plus.u[0] += v * state.u0[base + ii];
                            plus.u[1] += v * state.u1[base + ii];
                        }
                    }
                    let inv = 1.0 / hits.len() as f64;
                    plus.p *= inv;
                    plus.u[0] *= inv;
                    plus.u[1] *= inv;
                    let mat_plus = mesh.material_of_elem(hits[0].0);
                    let (ps, us) = ldg_nci_flux(minus, plus, mat, mat_plus, normal);
                    let un = us[0] * normal[0] + us[1] * normal[1];
                    for (ii, &v) in ivals.iter().enumerate() {
                        op[ii] += wj * mat.rho * mat.c * mat.c * v * un;
                        o0[ii] += wj / mat.rho * v * normal[0] * ps;
                        o1[ii] += wj / mat.rho * v * normal[1] * ps;
                    }
                }
            }
            (op, o0, o1)
        };

        let mut worst_p2p: f64 = 0.0;
        for fi in 0..mesh.nci_faces.len() {
            let (op, o0, o1) = oracle_face(fi);
            let scale = op
                .iter()
                .chain(&o0)
                .chain(&o1)
                .map(|v| v.abs())
                .fold(0.0f64, f64::max)
                .max(1e-12);
            let (mp, m0, m1) = integrate_nci_face(&mortar, fi, &mesh, &state);
            let mortar_err = op
                .iter()
                .zip(&mp)
                .chain(o0.iter().zip(&m0))
                .chain(o1.iter().zip(&m1))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(
                mortar_err <= 1e-12 * scale.max(1.0),
                "face {fi}: mortar error {mortar_err:.3e} (scale {scale:.3e})"
            );
            let (pp, p0, p1) = integrate_nci_face(&p2p, fi, &mesh, &state);
            let p2p_err = op
                .iter()
                .zip(&pp)
                .chain(o0.iter().zip(&p0))
                .chain(o1.iter().zip(&p1))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            worst_p2p = worst_p2p.max(p2p_err / scale);
        }
        assert!(
            worst_p2p > 1e-3,
            "point-to-point unexpectedly integrated discontinuous traces exactly ({worst_p2p:.3e})"
        );
    }

    #[test]
    fn constant_state_contribution_matches_dirichlet_face() {
        // for a globally constant state the NCI contribution equals that of a
        // boundary face with matching Dirichlet data: flux reduces to (p0, u0)
        let mesh = embedded(1.0 / 60.0, 1.0 / 90.0);
        let re = ReferenceElement::new(2).unwrap();
        let p0 = 2.5;
        let state = FieldState::interpolate(&mesh, &re, 0.0, |_| (p0, [0.3, -0.1]));
        let map = build_mortar_map(&mesh, &re).unwrap();
        for fi in 0..mesh.nci_faces.len() {
            let nf = mesh.nci_faces[fi];
            let g = &mesh.elements[nf.elem];
            let n = g.face_normal(nf.face);
            let len = g.face_length(nf.face);
            let mat = mesh.material_of_elem(nf.elem);
            let (op, o0, o1) = integrate_nci_face(&map, fi, &mesh, &state);
            // expected: w|J| rho c^2 N_i (n.u0) and w|J|/rho N_i n_d p0 integrated
            // over the face; sum over i of N_i = 1 so totals are simple
            let tot_p: f64 = op.iter().sum();
            let un = 0.3 * n[0] - 0.1 * n[1];
            assert!((tot_p - len * mat.rho * mat.c * mat.c * un).abs() < 1e-12);
            let tot_0: f64 = o0.iter().sum();
            assert!((tot_0 - len / mat.rho * n[0] * p0).abs() < 1e-12);
            let tot_1: f64 = o1.iter().sum();
            assert!((tot_1 - len / mat.rho * n[1] * p0).abs() < 1e-11);
        }
    }
}
