//! Nodal Lagrange basis on Legendre–Gauss–Lobatto points and the reference
//! quadrilateral element with its quadrature rules and shape tables.
//!
//! Nodal points are LGL, quadrature points are Gauss–Legendre with k+1 points
//! per direction, so mass matrices are consistent (non-diagonal) and are
//! factorized once per element at setup.

use crate::error::Result;
use crate::quadrature::{gauss_legendre_rule, lgl_nodes};

/// One-dimensional Lagrange basis on an arbitrary strictly increasing node set.
#[derive(Debug, Clone)]
pub struct Basis1d {
    pub nodes: Vec<f64>,
}

impl Basis1d {
    pub fn new(nodes: Vec<f64>) -> Self {
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Value of the i-th cardinal polynomial at `x` (product formula; exact at nodes).
    pub fn value(&self, i: usize, x: f64) -> f64 {
        let xi = self.nodes[i];
        let mut v = 1.0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            if j != i {
                v *= (x - xj) / (xi - xj);
            }
        }
        v
    }

    /// Derivative of the i-th cardinal polynomial at `x`.
    ///
    /// Sum-of-products form, valid at and away from nodes (no division by x - x_j).
    pub fn deriv(&self, i: usize, x: f64) -> f64 {
        let xi = self.nodes[i];
        let mut d = 0.0;
        for (m, &xm) in self.nodes.iter().enumerate() {
            if m == i {
                continue;
            }
            let mut term = 1.0 / (xi - xm);
            for (j, &xj) in self.nodes.iter().enumerate() {
                if j != i && j != m {
                    term *= (x - xj) / (xi - xj);
                }
            }
            d += term;
        }
        d
    }

    pub fn eval_all(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut vals = Vec::with_capacity(n);
        let mut ders = Vec::with_capacity(n);
        for i in 0..n {
            vals.push(self.value(i, x));
            ders.push(self.deriv(i, x));
        }
        (vals, ders)
    }
}

/// Tensor-product shape functions of degree `k` at a reference point.
///
/// Returns (k+1)^2 values and reference-space gradients, node index running
/// x-fastest. Evaluation outside [-1,1]^2 extrapolates the polynomials.
pub fn shape_eval(k: usize, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let basis = Basis1d::new(lgl_nodes(k).expect("k >= 1"));
    shape_eval_with(&basis, xi)
}

pub fn shape_eval_with(basis: &Basis1d, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let (vx, dx) = basis.eval_all(xi[0]);
    let (vy, dy) = basis.eval_all(xi[1]);
    let n1 = basis.len();
    let mut values = Vec::with_capacity(n1 * n1);
    let mut grads = Vec::with_capacity(n1 * n1);
    for b in 0..n1 {
        for a in 0..n1 {
            values.push(vx[a] * vy[b]);
            grads.push([dx[a] * vy[b], vx[a] * dy[b]]);
        }
    }
    (values, grads)
}

/// Reference coordinates of a point on local face `f` at face parameter `s` in [-1,1].
///
/// Faces follow the counterclockwise vertex order v0(-1,-1), v1(1,-1), v2(1,1),
/// v3(-1,1): face 0 runs v0->v1, face 1 v1->v2, face 2 v2->v3, face 3 v3->v0.
pub fn face_point(face: usize, s: f64) -> [f64; 2] {
    match face {
        0 => [s, -1.0],
        1 => [1.0, s],
        2 => [-s, 1.0],
        3 => [-1.0, -s],
        _ => panic!("local face index out of range"),
    }
}

/// Local vertex indices (start, end) of each face, counterclockwise.
pub const FACE_VERTS: [[usize; 2]; 4] = [[0, 1], [1, 2], [2, 3], [3, 0]];

/// Degree-k reference quadrilateral: nodes, quadrature rules and shape tables.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub degree: usize,
    /// LGL nodal points, one direction.
    pub nodes_1d: Vec<f64>,
    /// Tensor-product nodal points, x-fastest.
    pub nodes_2d: Vec<[f64; 2]>,
    /// 1D Gauss–Legendre rule with k+1 points (also the face rule).
    pub quad_points_1d: Vec<f64>,
    pub quad_weights_1d: Vec<f64>,
    /// Tensor-product volume rule with (k+1)^2 points.
    pub vol_points: Vec<[f64; 2]>,
    pub vol_weights: Vec<f64>,
    /// Shape values at volume quadrature points, `[q][i]`.
    pub val_vol: Vec<Vec<f64>>,
    /// Reference-space shape gradients at volume quadrature points, `[q][i]`.
    pub grad_vol: Vec<Vec<[f64; 2]>>,
    /// Shape values at face quadrature points, `[face][q][i]`; q follows the
    /// counterclockwise face parameter.
    pub face_val: [Vec<Vec<f64>>; 4],
    basis: Basis1d,
}

impl ReferenceElement {
    pub fn new(k: usize) -> Result<Self> {
        let nodes_1d = lgl_nodes(k)?;
        let basis = Basis1d::new(nodes_1d.clone());
        let (qp, qw) = gauss_legendre_rule(k + 1)?;
        let n1 = k + 1;

        let mut nodes_2d = Vec::with_capacity(n1 * n1);
        for b in 0..n1 {
            for a in 0..n1 {
                nodes_2d.push([nodes_1d[a], nodes_1d[b]]);
            }
        }

        let mut vol_points = Vec::with_capacity(n1 * n1);
        let mut vol_weights = Vec::with_capacity(n1 * n1);
        for j in 0..n1 {
            for i in 0..n1 {
                vol_points.push([qp[i], qp[j]]);
                vol_weights.push(qw[i] * qw[j]);
            }
        }

        let mut val_vol = Vec::with_capacity(vol_points.len());
        let mut grad_vol = Vec::with_capacity(vol_points.len());
        for &p in &vol_points {
            let (v, g) = shape_eval_with(&basis, p);
            val_vol.push(v);
            grad_vol.push(g);
        }

        let face_val = std::array::from_fn(|f| {
            qp.iter()
                .map(|&s| shape_eval_with(&basis, face_point(f, s)).0)
                .collect()
        });

        Ok(Self {
            degree: k,
            nodes_1d,
            nodes_2d,
            quad_points_1d: qp,
            quad_weights_1d: qw,
            vol_points,
            vol_weights,
            val_vol,
            grad_vol,
            face_val,
            basis,
        })
    }

    /// Number of local shape functions, (k+1)^2.
    pub fn n_loc(&self) -> usize {
        self.nodes_2d.len()
    }

    pub fn shape_at(&self, xi: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        shape_eval_with(&self.basis, xi)
    }

    /// Tabulate shape values at an arbitrary point list (used for over-integration).
    pub fn tabulate(&self, points: &[[f64; 2]]) -> Vec<Vec<f64>> {
        points.iter().map(|&p| self.shape_at(p).0).collect()
    }
}
