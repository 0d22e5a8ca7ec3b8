//! Semi-discrete DG spatial operator for the acoustic conservation equations:
//! weak-form volume terms, Lax–Friedrichs fluxes on conforming interior faces,
//! mirror-principle boundary closures, LDG fluxes on non-conforming interface
//! faces, and the per-element consistent mass inverse.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::flux::{lax_friedrichs_flux, mirror_exterior_state, TraceState};
use crate::geometry::{map_to_physical, ElementGeometry};
use crate::material::{BoundaryCondition, Material};
use crate::mesh::Mesh;
use crate::nci::{accumulate_nci_face, CouplingScheme, NciMap};
use crate::state::FieldState;

/// Mass-equation source F(x, t); enters the rate as (c^2 q, F).
#[derive(Clone)]
pub struct SourceTerm(pub Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>);

enum ElemKind {
    /// Constant-Jacobian element (parallelogram); shares the reference tables.
    Affine { inv_jt: [[f64; 2]; 2], det: f64 },
    /// General bilinear element with per-quadrature-point tables.
    General {
        /// a_d[i * n_q + q] = w_q |J_q| (J_q^{-T} grad N_i(q))_d
        a0: Vec<f64>,
        a1: Vec<f64>,
        /// w_q |J_q|
        wj: Vec<f64>,
        minv: Vec<f64>,
    },
}

#[derive(Clone, Copy)]
struct FaceGeom {
    normal: [f64; 2],
    half_len: f64,
    a: [f64; 2],
    b: [f64; 2],
}

#[derive(Clone, Copy)]
enum FaceLink {
    Conforming { nbr: u32, nbr_face: u8 },
    Boundary { tag: u16 },
    Nci { idx: u32 },
}

struct ElemData {
    geom: ElementGeometry,
    mat: Material,
    kind: ElemKind,
    faces: [FaceGeom; 4],
    links: [FaceLink; 4],
}

struct Scratch {
    p_q: Vec<f64>,
    u0_q: Vec<f64>,
    u1_q: Vec<f64>,
    z0: Vec<f64>,
    z1: Vec<f64>,
    tmp0: Vec<f64>,
    tmp1: Vec<f64>,
    b_p: Vec<f64>,
    b_u0: Vec<f64>,
    b_u1: Vec<f64>,
    s_p: Vec<f64>,
    s_u0: Vec<f64>,
    s_u1: Vec<f64>,
}

impl Scratch {
    fn new(n_loc: usize, n_q: usize) -> Self {
        Self {
            p_q: vec![0.0; n_q],
            u0_q: vec![0.0; n_q],
            u1_q: vec![0.0; n_q],
            z0: vec![0.0; n_q],
            z1: vec![0.0; n_q],
            tmp0: vec![0.0; n_loc],
            tmp1: vec![0.0; n_loc],
            b_p: vec![0.0; n_loc],
            b_u0: vec![0.0; n_loc],
            b_u1: vec![0.0; n_loc],
            s_p: vec![0.0; n_loc],
            s_u0: vec![0.0; n_loc],
            s_u1: vec![0.0; n_loc],
        }
    }
}

pub struct DgOperator {
    pub re: ReferenceElement,
    n_loc: usize,
    n_q: usize,
    n_fq: usize,
    parallel: bool,
    /// Basis values at volume quadrature points, [q * n_loc + i].
    val: Vec<f64>,
    /// w_q dN_i/dxi_e at volume points, [i * n_q + q].
    dte: [Vec<f64>; 2],
    /// Inverse reference mass matrix, [i * n_loc + j].
    minv_ref: Vec<f64>,
    /// Basis values at face quadrature points, [face][q * n_loc + i].
    face_val: [Vec<f64>; 4],
    elems: Vec<ElemData>,
    map: NciMap,
    bcs: Vec<Option<BoundaryCondition>>,
    source: Option<SourceTerm>,
}

impl DgOperator {
    pub fn new(
        mesh: &Mesh,
        re: &ReferenceElement,
        coupling: CouplingScheme,
        boundary_conditions: &HashMap<String, BoundaryCondition>,
        source: Option<SourceTerm>,
        parallel: bool,
    ) -> Result<Self> {
        let map = NciMap::build(mesh, re, coupling)?;
        Self::with_map(mesh, re, map, boundary_conditions, source, parallel)
    }

    pub fn with_map(
        mesh: &Mesh,
        re: &ReferenceElement,
        map: NciMap,
        boundary_conditions: &HashMap<String, BoundaryCondition>,
        source: Option<SourceTerm>,
        parallel: bool,
    ) -> Result<Self> {
        let n_loc = re.n_loc();
        let n_q = re.vol_points.len();
        let n_fq = re.quad_points_1d.len();

        let mut val = vec![0.0; n_q * n_loc];
        for q in 0..n_q {
            val[q * n_loc..(q + 1) * n_loc].copy_from_slice(&re.val_vol[q]);
        }
        let mut dte = [vec![0.0; n_loc * n_q], vec![0.0; n_loc * n_q]];
        for q in 0..n_q {
            let w = re.vol_weights[q];
            for i in 0..n_loc {
                dte[0][i * n_q + q] = w * re.grad_vol[q][i][0];
                dte[1][i * n_q + q] = w * re.grad_vol[q][i][1];
            }
        }
        let minv_ref = {
            let mut m = nalgebra::DMatrix::<f64>::zeros(n_loc, n_loc);
            for q in 0..n_q {
                let w = re.vol_weights[q];
                for i in 0..n_loc {
                    for j in 0..n_loc {
                        m[(i, j)] += w * re.val_vol[q][i] * re.val_vol[q][j];
                    }
                }
            }
            let inv = m.try_inverse().ok_or_else(|| {
                Error::Mesh("reference mass matrix is singular".into())
            })?;
            inv.transpose().as_slice().to_vec() // row-major
        };
        let face_val = std::array::from_fn(|f| {
            let mut t = vec![0.0; n_fq * n_loc];
            for q in 0..n_fq {
                t[q * n_loc..(q + 1) * n_loc].copy_from_slice(&re.face_val[f][q]);
            }
            t
        });

        // face links
        let mut links = vec![[None::<FaceLink>; 4]; mesh.n_elements()];
        for f in &mesh.interior_faces {
            links[f.left][f.left_face] =
                Some(FaceLink::Conforming { nbr: f.right as u32, nbr_face: f.right_face as u8 });
            links[f.right][f.right_face] =
                Some(FaceLink::Conforming { nbr: f.left as u32, nbr_face: f.left_face as u8 });
        }
        for f in &mesh.boundary_faces {
            links[f.elem][f.face] = Some(FaceLink::Boundary { tag: f.tag as u16 });
        }
        for (idx, f) in mesh.nci_faces.iter().enumerate() {
            links[f.elem][f.face] = Some(FaceLink::Nci { idx: idx as u32 });
        }

        let bcs: Vec<Option<BoundaryCondition>> = mesh
            .boundary_tag_names()
            .iter()
            .map(|name| boundary_conditions.get(name).cloned())
            .collect();
        for f in &mesh.boundary_faces {
            if bcs[f.tag].is_none() {
                return Err(Error::Config(format!(
                    "no boundary condition given for tag '{}'",
                    mesh.boundary_tag_names()[f.tag]
                )));
            }
        }

        let mut elems = Vec::with_capacity(mesh.n_elements());
        for (e, geom) in mesh.elements.iter().enumerate() {
            let kind = if geom.is_parallelogram() {
                let j = geom.jacobian([0.0, 0.0]);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                // (J^{-T})[d][e] = (J^{-1})[e][d]
                let inv = [
                    [j[1][1] / det, -j[0][1] / det],
                    [-j[1][0] / det, j[0][0] / det],
                ];
                let inv_jt = [[inv[0][0], inv[1][0]], [inv[0][1], inv[1][1]]];
                ElemKind::Affine { inv_jt, det }
            } else {
                let mut a0 = vec![0.0; n_loc * n_q];
                let mut a1 = vec![0.0; n_loc * n_q];
                let mut wj = vec![0.0; n_q];
                let mut m = nalgebra::DMatrix::<f64>::zeros(n_loc, n_loc);
                for (q, &xi) in re.vol_points.iter().enumerate() {
                    let j = geom.jacobian(xi);
                    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                    let w = re.vol_weights[q] * det;
                    wj[q] = w;
                    let inv = [
                        [j[1][1] / det, -j[0][1] / det],
                        [-j[1][0] / det, j[0][0] / det],
                    ];
                    for i in 0..n_loc {
                        let g = re.grad_vol[q][i];
                        // physical gradient: J^{-T} grad_ref
                        let gx = inv[0][0] * g[0] + inv[1][0] * g[1];
                        let gy = inv[0][1] * g[0] + inv[1][1] * g[1];
                        a0[i * n_q + q] = w * gx;
                        a1[i * n_q + q] = w * gy;
                        for jj in 0..n_loc {
                            m[(i, jj)] += w * re.val_vol[q][i] * re.val_vol[q][jj];
                        }
                    }
                }
                let minv = m
                    .try_inverse()
                    .ok_or_else(|| Error::Mesh(format!("mass matrix of element {e} is singular")))?
                    .transpose()
                    .as_slice()
                    .to_vec();
                ElemKind::General { a0, a1, wj, minv }
            };
            let faces = std::array::from_fn(|f| {
                let (a, b) = geom.face_endpoints(f);
                FaceGeom {
                    normal: geom.face_normal(f),
                    half_len: 0.5 * geom.face_length(f),
                    a,
                    b,
                }
            });
            let links = std::array::from_fn(|f| {
                links[e][f].unwrap_or_else(|| {
                    panic!("element {e} face {f} is unclassified");
                })
            });
            elems.push(ElemData { geom: *geom, mat: mesh.material_of_elem(e), kind, faces, links });
        }

        Ok(Self {
            re: re.clone(),
            n_loc,
            n_q,
            n_fq,
            parallel,
            val,
            dte,
            minv_ref,
            face_val,
            elems,
            map,
            bcs,
            source,
        })
    }

    pub fn nci_map(&self) -> &NciMap {
        &self.map
    }

    pub fn n_elements(&self) -> usize {
        self.elems.len()
    }

    /// Evaluate the semi-discrete rate d/dt (u, p) = M^{-1} r(state, t).
    pub fn apply(&self, state: &FieldState, t: f64, rate: &mut FieldState) {
        rate.t = state.t;
        let n = self.n_loc;
        if self.parallel {
            let p = rate.p.par_chunks_mut(n);
            let u0 = rate.u0.par_chunks_mut(n);
            let u1 = rate.u1.par_chunks_mut(n);
            (p, u0, u1).into_par_iter().enumerate().for_each_init(
                || Scratch::new(self.n_loc, self.n_q),
                |scratch, (e, (rp, ru0, ru1))| {
                    self.element_rate(e, state, t, scratch, rp, ru0, ru1);
                },
            );
        } else {
            let mut scratch = Scratch::new(self.n_loc, self.n_q);
            for e in 0..self.elems.len() {
                let range = e * n..(e + 1) * n;
                // split disjoint output slices
                let (rp, ru0, ru1) = unsafe {
                    let p = &mut *(rate.p.get_unchecked_mut(range.clone()) as *mut [f64]);
                    let u0 = &mut *(rate.u0.get_unchecked_mut(range.clone()) as *mut [f64]);
                    let u1 = &mut *(rate.u1.get_unchecked_mut(range) as *mut [f64]);
                    (p, u0, u1)
                };
                self.element_rate(e, state, t, &mut scratch, rp, ru0, ru1);
            }
        }
    }

    fn element_rate(
        &self,
        e: usize,
        state: &FieldState,
        t: f64,
        s: &mut Scratch,
        rp: &mut [f64],
        ru0: &mut [f64],
        ru1: &mut [f64],
    ) {
        let n = self.n_loc;
        let n_q = self.n_q;
        let ed = &self.elems[e];
        let base = e * n;
        let p_e = &state.p[base..base + n];
        let u0_e = &state.u0[base..base + n];
        let u1_e = &state.u1[base..base + n];

        // field values at volume quadrature points
        for q in 0..n_q {
            let row = &self.val[q * n..(q + 1) * n];
            let mut vp = 0.0;
            let mut v0 = 0.0;
            let mut v1 = 0.0;
            for i in 0..n {
                vp += row[i] * p_e[i];
                v0 += row[i] * u0_e[i];
                v1 += row[i] * u1_e[i];
            }
            s.p_q[q] = vp;
            s.u0_q[q] = v0;
            s.u1_q[q] = v1;
        }

        let inv_rho = 1.0 / ed.mat.rho;
        let rc2 = ed.mat.rho * ed.mat.c * ed.mat.c;

        // volume terms
        match &ed.kind {
            ElemKind::Affine { inv_jt, det } => {
                for q in 0..n_q {
                    s.z0[q] = inv_jt[0][0] * s.u0_q[q] + inv_jt[1][0] * s.u1_q[q];
                    s.z1[q] = inv_jt[0][1] * s.u0_q[q] + inv_jt[1][1] * s.u1_q[q];
                }
                let (d0, d1) = (&self.dte[0], &self.dte[1]);
                for i in 0..n {
                    let r0 = &d0[i * n_q..(i + 1) * n_q];
                    let r1 = &d1[i * n_q..(i + 1) * n_q];
                    let mut t0 = 0.0;
                    let mut t1 = 0.0;
                    let mut zp = 0.0;
                    for q in 0..n_q {
                        t0 += r0[q] * s.p_q[q];
                        t1 += r1[q] * s.p_q[q];
                        zp += r0[q] * s.z0[q] + r1[q] * s.z1[q];
                    }
                    s.tmp0[i] = t0;
                    s.tmp1[i] = t1;
                    s.b_p[i] = rc2 * det * zp;
                }
                for i in 0..n {
                    s.b_u0[i] = inv_rho * det * (inv_jt[0][0] * s.tmp0[i] + inv_jt[0][1] * s.tmp1[i]);
                    s.b_u1[i] = inv_rho * det * (inv_jt[1][0] * s.tmp0[i] + inv_jt[1][1] * s.tmp1[i]);
                }
            }
            ElemKind::General { a0, a1, .. } => {
                for i in 0..n {
                    let r0 = &a0[i * n_q..(i + 1) * n_q];
                    let r1 = &a1[i * n_q..(i + 1) * n_q];
                    let mut bu0 = 0.0;
                    let mut bu1 = 0.0;
                    let mut bp = 0.0;
                    for q in 0..n_q {
                        bu0 += r0[q] * s.p_q[q];
                        bu1 += r1[q] * s.p_q[q];
                        bp += r0[q] * s.u0_q[q] + r1[q] * s.u1_q[q];
                    }
                    s.b_u0[i] = inv_rho * bu0;
                    s.b_u1[i] = inv_rho * bu1;
                    s.b_p[i] = rc2 * bp;
                }
            }
        }

        // source term (c^2 q, F)
        if let Some(src) = &self.source {
            let c2 = ed.mat.c * ed.mat.c;
            for q in 0..n_q {
                let wj = match &ed.kind {
                    ElemKind::Affine { det, .. } => self.re.vol_weights[q] * det,
                    ElemKind::General { wj, .. } => wj[q],
                };
                let x = map_to_physical(&ed.geom, self.re.vol_points[q]);
                let f = (src.0)(x, t);
                if f != 0.0 {
                    let row = &self.val[q * n..(q + 1) * n];
                    let w = c2 * wj * f;
                    for i in 0..n {
                        s.b_p[i] += w * row[i];
                    }
                }
            }
        }

        // surface terms
        s.s_p.iter_mut().for_each(|v| *v = 0.0);
        s.s_u0.iter_mut().for_each(|v| *v = 0.0);
        s.s_u1.iter_mut().for_each(|v| *v = 0.0);
        for f in 0..4 {
            let fg = &ed.faces[f];
            match ed.links[f] {
                FaceLink::Nci { idx } => {
                    accumulate_nci_face(
                        &self.map,
                        idx as usize,
                        state,
                        e,
                        ed.mat,
                        &mut s.s_p,
                        &mut s.s_u0,
                        &mut s.s_u1,
                    );
                }
                link => {
                    let fv = &self.face_val[f];
                    for q in 0..self.n_fq {
                        let row = &fv[q * n..(q + 1) * n];
                        let mut minus = TraceState::new(0.0, [0.0, 0.0]);
                        for i in 0..n {
                            minus.p += row[i] * p_e[i];
                            minus.u[0] += row[i] * u0_e[i];
                            minus.u[1] += row[i] * u1_e[i];
                        }
                        let plus = match link {
                            FaceLink::Conforming { nbr, nbr_face } => {
                                let nb = nbr as usize * n;
                                let q2 = self.n_fq - 1 - q;
                                let row2 =
                                    &self.face_val[nbr_face as usize][q2 * n..(q2 + 1) * n];
                                let mut tr = TraceState::new(0.0, [0.0, 0.0]);
                                let np = &state.p[nb..nb + n];
                                let n0 = &state.u0[nb..nb + n];
                                let n1 = &state.u1[nb..nb + n];
                                for i in 0..n {
                                    tr.p += row2[i] * np[i];
                                    tr.u[0] += row2[i] * n0[i];
                                    tr.u[1] += row2[i] * n1[i];
                                }
                                tr
                            }
                            FaceLink::Boundary { tag } => {
                                let sq = self.re.quad_points_1d[q];
                                let tq = 0.5 * (sq + 1.0);
                                let x = [
                                    fg.a[0] + tq * (fg.b[0] - fg.a[0]),
                                    fg.a[1] + tq * (fg.b[1] - fg.a[1]),
                                ];
                                let bc = self.bcs[tag as usize].as_ref().unwrap();
                                mirror_exterior_state(bc, minus, fg.normal, x, t, ed.mat)
                            }
                            FaceLink::Nci { .. } => unreachable!(),
                        };
                        let (p_star, u_star) = lax_friedrichs_flux(
                            minus,
                            plus,
                            ed.mat.tau(),
                            ed.mat.gamma(),
                            fg.normal,
                        );
                        let wj = self.re.quad_weights_1d[q] * fg.half_len;
                        let un = u_star[0] * fg.normal[0] + u_star[1] * fg.normal[1];
                        let wp = wj * rc2 * un;
                        let w0 = wj * inv_rho * fg.normal[0] * p_star;
                        let w1 = wj * inv_rho * fg.normal[1] * p_star;
                        for i in 0..n {
                            s.s_p[i] += row[i] * wp;
                            s.s_u0[i] += row[i] * w0;
                            s.s_u1[i] += row[i] * w1;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            s.b_p[i] -= s.s_p[i];
            s.b_u0[i] -= s.s_u0[i];
            s.b_u1[i] -= s.s_u1[i];
        }

        // apply the mass inverse
        match &ed.kind {
            ElemKind::Affine { det, .. } => {
                let inv_det = 1.0 / det;
                for i in 0..n {
                    let row = &self.minv_ref[i * n..(i + 1) * n];
                    let mut vp = 0.0;
                    let mut v0 = 0.0;
                    let mut v1 = 0.0;
                    for j in 0..n {
                        vp += row[j] * s.b_p[j];
                        v0 += row[j] * s.b_u0[j];
                        v1 += row[j] * s.b_u1[j];
                    }
                    rp[i] = vp * inv_det;
                    ru0[i] = v0 * inv_det;
                    ru1[i] = v1 * inv_det;
                }
            }
            ElemKind::General { minv, .. } => {
                for i in 0..n {
                    let row = &minv[i * n..(i + 1) * n];
                    let mut vp = 0.0;
                    let mut v0 = 0.0;
                    let mut v1 = 0.0;
                    for j in 0..n {
                        vp += row[j] * s.b_p[j];
                        v0 += row[j] * s.b_u0[j];
                        v1 += row[j] * s.b_u1[j];
                    }
                    rp[i] = vp;
                    ru0[i] = v0;
                    ru1[i] = v1;
                }
            }
        }
    }

    /// out = M_e x for the consistent mass matrix of element e.
    pub fn mass_apply(&self, e: usize, x: &[f64], out: &mut [f64]) {
        let n = self.n_loc;
        out.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..self.n_q {
            let wj = match &self.elems[e].kind {
                ElemKind::Affine { det, .. } => self.re.vol_weights[q] * det,
                ElemKind::General { wj, .. } => wj[q],
            };
            let row = &self.val[q * n..(q + 1) * n];
            let mut sq = 0.0;
            for i in 0..n {
                sq += row[i] * x[i];
            }
            let w = wj * sq;
            for i in 0..n {
                out[i] += w * row[i];
            }
        }
    }

    /// Discrete energy rate dE/dt = sum_e p^T M dp/dt / (rho c^2)
    /// + rho (u0^T M du0/dt + u1^T M du1/dt).
    pub fn energy_rate(&self, state: &FieldState, rate: &FieldState) -> f64 {
        let n = self.n_loc;
        let mut buf = vec![0.0; n];
        let mut total = 0.0;
        for e in 0..self.elems.len() {
            let mat = self.elems[e].mat;
            let base = e * n;
            self.mass_apply(e, &rate.p[base..base + n], &mut buf);
            let pp: f64 = state.p[base..base + n].iter().zip(&buf).map(|(a, b)| a * b).sum();
            self.mass_apply(e, &rate.u0[base..base + n], &mut buf);
            let q0: f64 = state.u0[base..base + n].iter().zip(&buf).map(|(a, b)| a * b).sum();
            self.mass_apply(e, &rate.u1[base..base + n], &mut buf);
            let q1: f64 = state.u1[base..base + n].iter().zip(&buf).map(|(a, b)| a * b).sum();
            total += pp / (mat.rho * mat.c * mat.c) + mat.rho * (q0 + q1);
        }
        total
    }
}
