//! Straight-edged quadrilateral geometry: bilinear reference mapping, its
//! Newton inversion, face normals, and the segment–quad clipping kernel used
//! to build mortar patches.

use crate::basis::FACE_VERTS;
use crate::error::{Error, Result};

/// Containment tolerance in reference coordinates.
pub const REF_TOL: f64 = 1e-10;

/// Sub-segments shorter than this fraction of the input segment are discarded.
pub const CLIP_LEN_TOL: f64 = 1e-12;

const NEWTON_MAX_ITER: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    /// Physical vertex coordinates, counterclockwise.
    pub verts: [[f64; 2]; 4],
}

impl ElementGeometry {
    pub fn new(verts: [[f64; 2]; 4]) -> Self {
        Self { verts }
    }

    pub fn center(&self) -> [f64; 2] {
        let mut c = [0.0, 0.0];
        for v in &self.verts {
            c[0] += 0.25 * v[0];
            c[1] += 0.25 * v[1];
        }
        c
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                d = d.max(dist(self.verts[i], self.verts[j]));
            }
        }
        d
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.verts {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Jacobian matrix dx/dxi at a reference point; column e is dx/dxi_e.
    pub fn jacobian(&self, xi: [f64; 2]) -> [[f64; 2]; 2] {
        let [v0, v1, v2, v3] = self.verts;
        let (s, t) = (xi[0], xi[1]);
        let mut j = [[0.0; 2]; 2];
        for d in 0..2 {
            j[d][0] = 0.25
                * (-(1.0 - t) * v0[d] + (1.0 - t) * v1[d] + (1.0 + t) * v2[d] - (1.0 + t) * v3[d]);
            j[d][1] = 0.25
                * (-(1.0 - s) * v0[d] - (1.0 + s) * v1[d] + (1.0 + s) * v2[d] + (1.0 - s) * v3[d]);
        }
        j
    }

    pub fn jacobian_det(&self, xi: [f64; 2]) -> f64 {
        let j = self.jacobian(xi);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// The Jacobian is constant iff the element is a parallelogram.
    pub fn is_parallelogram(&self) -> bool {
        let [v0, v1, v2, v3] = self.verts;
        let tol = 1e-13 * self.diameter();
        (v0[0] - v1[0] + v2[0] - v3[0]).abs() <= tol && (v0[1] - v1[1] + v2[1] - v3[1]).abs() <= tol
    }

    /// The Jacobian determinant of a bilinear map is affine in (xi, eta), so
    /// positivity at the four corners implies positivity (and convexity) everywhere.
    pub fn is_valid(&self) -> bool {
        const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        CORNERS.iter().all(|&c| self.jacobian_det(c) > 0.0)
    }

    /// Physical endpoints (start, end) of a local face, counterclockwise.
    pub fn face_endpoints(&self, face: usize) -> ([f64; 2], [f64; 2]) {
        let [a, b] = FACE_VERTS[face];
        (self.verts[a], self.verts[b])
    }

    pub fn face_length(&self, face: usize) -> f64 {
        let (a, b) = self.face_endpoints(face);
        dist(a, b)
    }

    /// Outward unit normal of a local face (constant along straight faces).
    pub fn face_normal(&self, face: usize) -> [f64; 2] {
        let (a, b) = self.face_endpoints(face);
        let e = [b[0] - a[0], b[1] - a[1]];
        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
        [e[1] / len, -e[0] / len]
    }

    pub fn shortest_edge(&self) -> f64 {
        (0..4).map(|f| self.face_length(f)).fold(f64::INFINITY, f64::min)
    }

    pub fn longest_edge(&self) -> f64 {
        (0..4).map(|f| self.face_length(f)).fold(0.0, f64::max)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Bilinear interpolation of the four vertices.
pub fn map_to_physical(geom: &ElementGeometry, xi: [f64; 2]) -> [f64; 2] {
    let [v0, v1, v2, v3] = geom.verts;
    let (s, t) = (xi[0], xi[1]);
    let w = [
        0.25 * (1.0 - s) * (1.0 - t),
        0.25 * (1.0 + s) * (1.0 - t),
        0.25 * (1.0 + s) * (1.0 + t),
        0.25 * (1.0 - s) * (1.0 + t),
    ];
    [
        w[0] * v0[0] + w[1] * v1[0] + w[2] * v2[0] + w[3] * v3[0],
        w[0] * v0[1] + w[1] * v1[1] + w[2] * v2[1] + w[3] * v3[1],
    ]
}

/// Invert the bilinear map by Newton iteration.
///
/// Starts from the affine approximation through the element center and
/// iterates until the physical residual drops below 1e-12 of the element
/// diameter. Returns the reference point without a containment check; combine
/// with [`contains_ref`] to decide whether `x` lies inside.
pub fn map_to_reference(geom: &ElementGeometry, x: [f64; 2]) -> Result<[f64; 2]> {
    let diam = geom.diameter();
    let tol = 1e-12 * diam;
    let center = geom.center();
    let jc = geom.jacobian([0.0, 0.0]);
    let mut xi = solve2(jc, [x[0] - center[0], x[1] - center[1]]);
    for _ in 0..NEWTON_MAX_ITER {
        let xp = map_to_physical(geom, xi);
        let r = [xp[0] - x[0], xp[1] - x[1]];
        if (r[0] * r[0] + r[1] * r[1]).sqrt() <= tol {
            return Ok(xi);
        }
        let j = geom.jacobian(xi);
        let d = solve2(j, r);
        xi[0] -= d[0];
        xi[1] -= d[1];
    }
    let xp = map_to_physical(geom, xi);
    let r = ((xp[0] - x[0]).powi(2) + (xp[1] - x[1]).powi(2)).sqrt();
    if r <= tol {
        Ok(xi)
    } else {
        Err(Error::PointNotInElement { elem: usize::MAX, x: x[0], y: x[1] })
    }
}

pub fn contains_ref(xi: [f64; 2], tol: f64) -> bool {
    xi[0].abs() <= 1.0 + tol && xi[1].abs() <= 1.0 + tol
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ]
}

/// Clip the segment a->b against a convex quad; returns the parameter interval
/// (t0, t1) of the part inside, or None.
///
/// Successive half-plane clipping against the four edges. The inside test uses
/// a small negative distance tolerance so segments lying exactly on an element
/// edge (flush interfaces) are kept.
pub fn clip_segment_param(
    a: [f64; 2],
    b: [f64; 2],
    quad: &ElementGeometry,
) -> Option<(f64, f64)> {
    let seg_len = dist(a, b);
    let dist_tol = 1e-12 * quad.diameter().max(seg_len);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for f in 0..4 {
        let (va, vb) = quad.face_endpoints(f);
        let e = [vb[0] - va[0], vb[1] - va[1]];
        let elen = (e[0] * e[0] + e[1] * e[1]).sqrt();
        // signed distance to the edge line, positive inside (left of CCW edge)
        let d = |p: [f64; 2]| (e[0] * (p[1] - va[1]) - e[1] * (p[0] - va[0])) / elen;
        let da = d(a);
        let db = d(b);
        let (ina, inb) = (da >= -dist_tol, db >= -dist_tol);
        match (ina, inb) {
            (true, true) => {}
            (false, false) => return None,
            _ => {
                let tc = da / (da - db);
                if ina {
                    t1 = t1.min(tc);
                } else {
                    t0 = t0.max(tc);
                }
            }
        }
    }
    if t1 - t0 > CLIP_LEN_TOL {
        Some((t0, t1))
    } else {
        None
    }
}

/// Portion of the segment a->b inside the quad, as physical endpoints.
pub fn segment_quad_clip(
    a: [f64; 2],
    b: [f64; 2],
    quad: &ElementGeometry,
) -> Result<Option<([f64; 2], [f64; 2])>> {
    let seg_len = dist(a, b);
    if seg_len == 0.0 {
        return Err(Error::Mesh("segment_quad_clip: zero-length segment".into()));
    }
    Ok(clip_segment_param(a, b, quad).map(|(t0, t1)| {
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        (at(t0), at(t1))
    }))
}
