//! Per-element nodal coefficients of pressure and velocity.

use crate::basis::ReferenceElement;
use crate::geometry::map_to_physical;
use crate::mesh::Mesh;

/// Nodal DG state: (k+1)^2 coefficients per element for p, u1, u2, stored as
/// flat per-field arrays, plus the global time.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub n_loc: usize,
    pub p: Vec<f64>,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn zeros(n_elements: usize, n_loc: usize) -> Self {
        let n = n_elements * n_loc;
        Self { n_loc, p: vec![0.0; n], u0: vec![0.0; n], u1: vec![0.0; n], t: 0.0 }
    }

    pub fn n_elements(&self) -> usize {
        self.p.len() / self.n_loc
    }

    pub fn elem_range(&self, e: usize) -> std::ops::Range<usize> {
        e * self.n_loc..(e + 1) * self.n_loc
    }

    /// Nodal interpolation of analytic fields at the mapped LGL nodes.
    pub fn interpolate(
        mesh: &Mesh,
        re: &ReferenceElement,
        t: f64,
        f: impl Fn([f64; 2]) -> (f64, [f64; 2]),
    ) -> Self {
        let mut s = Self::zeros(mesh.n_elements(), re.n_loc());
        s.t = t;
        for (e, geom) in mesh.elements.iter().enumerate() {
            let base = e * s.n_loc;
            for (i, &node) in re.nodes_2d.iter().enumerate() {
                let x = map_to_physical(geom, node);
                let (p, u) = f(x);
                s.p[base + i] = p;
                s.u0[base + i] = u[0];
                s.u1[base + i] = u[1];
            }
        }
        s
    }

    pub fn fill_zero(&mut self) {
        self.p.iter_mut().for_each(|v| *v = 0.0);
        self.u0.iter_mut().for_each(|v| *v = 0.0);
        self.u1.iter_mut().for_each(|v| *v = 0.0);
    }

    /// self += a * other (coefficients only; time is managed by the integrator).
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (x, y) in self.p.iter_mut().zip(&other.p) {
            *x += a * y;
        }
        for (x, y) in self.u0.iter_mut().zip(&other.u0) {
            *x += a * y;
        }
        for (x, y) in self.u1.iter_mut().zip(&other.u1) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.p.iter_mut().for_each(|v| *v *= a);
        self.u0.iter_mut().for_each(|v| *v *= a);
        self.u1.iter_mut().for_each(|v| *v *= a);
    }

    /// Index of the first element carrying a non-finite coefficient.
    pub fn first_non_finite_element(&self) -> Option<usize> {
        let bad = |v: &[f64]| v.iter().position(|x| !x.is_finite());
        [&self.p, &self.u0, &self.u1]
            .iter()
            .filter_map(|f| bad(f))
            .min()
            .map(|i| i / self.n_loc)
    }

    /// Max-norm distance to another state with identical layout.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max)
        };
        d(&self.p, &other.p).max(d(&self.u0, &other.u0)).max(d(&self.u1, &other.u1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::Material;
    use crate::meshgen::build_rect_mesh;

    #[test]
    fn interpolation_reproduces_nodal_values() {
        let mesh =
            build_rect_mesh([0.0, 0.0], [1.0, 1.0], 2, 2, Material::new(1.0, 1.0).unwrap()).unwrap();
        let re = ReferenceElement::new(2).unwrap();
        let s = FieldState::interpolate(&mesh, &re, 0.0, |x| (x[0] + 2.0 * x[1], [x[1], -x[0]]));
        // a degree-1 field is reproduced exactly at the nodes
        for (e, geom) in mesh.elements.iter().enumerate() {
            for (i, &node) in re.nodes_2d.iter().enumerate() {
                let x = map_to_physical(geom, node);
                assert!((s.p[e * s.n_loc + i] - (x[0] + 2.0 * x[1])).abs() < 1e-14);
            }
        }
        assert_eq!(s.first_non_finite_element(), None);
    }

    #[test]
    fn non_finite_detection_reports_element() {
        let mut s = FieldState::zeros(3, 4);
        s.u1[9] = f64::NAN;
        assert_eq!(s.first_non_finite_element(), Some(2));
    }
}
