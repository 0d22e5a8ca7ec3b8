//! Multi-region quadrilateral meshes: face classification (interior /
//! boundary / non-conforming interface), uniform refinement, point location
//! through a bounding-box index, and the mesh resolution criterion.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{contains_ref, map_to_reference, ElementGeometry, REF_TOL};
use crate::material::Material;

pub type RegionId = usize;

/// Decides whether a straight face with the given endpoints lies on a tagged
/// domain boundary; returns the tag index.
pub type BoundaryTagger = dyn Fn([f64; 2], [f64; 2]) -> Option<usize> + Send + Sync;

/// Conforming face between two elements of the same region.
#[derive(Debug, Clone, Copy)]
pub struct InteriorFace {
    pub left: usize,
    pub left_face: usize,
    pub right: usize,
    pub right_face: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub elem: usize,
    pub face: usize,
    pub tag: usize,
}

/// Primary face on a non-conforming interface. Both sides of an NCI appear
/// here, each owning its own faces.
#[derive(Debug, Clone, Copy)]
pub struct NciFace {
    pub elem: usize,
    pub face: usize,
}

/// Raw cell soup a mesh is built from; kept around so refinement can rebuild
/// the classification with the original boundary tagger.
#[derive(Clone)]
pub struct RawMesh {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 4]>,
    pub cell_region: Vec<RegionId>,
    pub materials: Vec<Material>,
    pub boundary_tag_names: Vec<String>,
    pub tagger: Arc<BoundaryTagger>,
    /// Declared overlap configuration: regions may cover common area and
    /// partial mortar coverage of a primary face is legitimate.
    pub overlapping: bool,
}

#[derive(Clone)]
pub struct Mesh {
    raw: RawMesh,
    pub elements: Vec<ElementGeometry>,
    pub region_of: Vec<RegionId>,
    pub interior_faces: Vec<InteriorFace>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub nci_faces: Vec<NciFace>,
    index: BboxIndex,
}

impl fmt::Debug for Mesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mesh")
            .field("elements", &self.elements.len())
            .field("regions", &self.raw.materials.len())
            .field("interior_faces", &self.interior_faces.len())
            .field("boundary_faces", &self.boundary_faces.len())
            .field("nci_faces", &self.nci_faces.len())
            .field("overlapping", &self.raw.overlapping)
            .finish()
    }
}

impl Mesh {
    pub fn build(raw: RawMesh) -> Result<Self> {
        let elements: Vec<ElementGeometry> = raw
            .cells
            .iter()
            .map(|c| ElementGeometry::new([raw.vertices[c[0]], raw.vertices[c[1]], raw.vertices[c[2]], raw.vertices[c[3]]]))
            .collect();
        for (e, g) in elements.iter().enumerate() {
            if !g.is_valid() {
                return Err(Error::Mesh(format!(
                    "element {e} is inverted or degenerate (non-positive Jacobian)"
                )));
            }
        }
        if raw.cell_region.iter().any(|&r| r >= raw.materials.len()) {
            return Err(Error::Mesh("cell references undefined region".into()));
        }

        // Pair faces by shared vertex ids within each region. Faces between
        // regions never share ids, so region interfaces classify as NCI even
        // when the grids happen to match.
        let mut edge_map: HashMap<(usize, usize, usize), (usize, usize)> = HashMap::new();
        let mut interior_faces = Vec::new();
        let mut pending: Vec<(usize, usize)> = Vec::new();
        for (e, cell) in raw.cells.iter().enumerate() {
            for f in 0..4 {
                let [a, b] = crate::basis::FACE_VERTS[f];
                let (va, vb) = (cell[a], cell[b]);
                let key = (raw.cell_region[e], va.min(vb), va.max(vb));
                match edge_map.remove(&key) {
                    Some((e2, f2)) => interior_faces.push(InteriorFace {
                        left: e2,
                        left_face: f2,
                        right: e,
                        right_face: f,
                    }),
                    None => {
                        edge_map.insert(key, (e, f));
                        pending.push((e, f));
                    }
                }
            }
        }

        let mut boundary_faces = Vec::new();
        let mut nci_faces = Vec::new();
        for (e, f) in pending {
            let [a, b] = crate::basis::FACE_VERTS[f];
            let key = {
                let (va, vb) = (raw.cells[e][a], raw.cells[e][b]);
                (raw.cell_region[e], va.min(vb), va.max(vb))
            };
            if !edge_map.contains_key(&key) {
                continue; // got paired
            }
            let (pa, pb) = (raw.vertices[raw.cells[e][a]], raw.vertices[raw.cells[e][b]]);
            match (raw.tagger)(pa, pb) {
                Some(tag) => {
                    if tag >= raw.boundary_tag_names.len() {
                        return Err(Error::Mesh(format!("boundary tag {tag} out of range")));
                    }
                    boundary_faces.push(BoundaryFace { elem: e, face: f, tag });
                }
                None => nci_faces.push(NciFace { elem: e, face: f }),
            }
        }

        let index = BboxIndex::build(&elements);
        Ok(Self {
            raw,
            elements,
            region_of: Vec::new(),
            interior_faces,
            boundary_faces,
            nci_faces,
            index,
        }
        .finish())
    }

    fn finish(mut self) -> Self {
        self.region_of = self.raw.cell_region.clone();
        self
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_regions(&self) -> usize {
        self.raw.materials.len()
    }

    pub fn material(&self, region: RegionId) -> Material {
        self.raw.materials[region]
    }

    pub fn material_of_elem(&self, elem: usize) -> Material {
        self.raw.materials[self.region_of[elem]]
    }

    pub fn materials(&self) -> &[Material] {
        &self.raw.materials
    }

    pub fn set_materials(&mut self, materials: Vec<Material>) -> Result<()> {
        if materials.len() != self.raw.materials.len() {
            return Err(Error::Config("material count must match region count".into()));
        }
        self.raw.materials = materials;
        Ok(())
    }

    pub fn boundary_tag_names(&self) -> &[String] {
        &self.raw.boundary_tag_names
    }

    pub fn is_overlapping(&self) -> bool {
        self.raw.overlapping
    }

    /// Minimum edge length over all elements.
    pub fn h_min(&self) -> f64 {
        self.elements.iter().map(|g| g.shortest_edge()).fold(f64::INFINITY, f64::min)
    }

    /// Maximum edge length over all elements.
    pub fn h_max(&self) -> f64 {
        self.elements.iter().map(|g| g.longest_edge()).fold(0.0, f64::max)
    }

    pub fn max_sound_speed(&self) -> f64 {
        self.raw.materials.iter().map(|m| m.c).fold(0.0, f64::max)
    }

    /// Element indices of one region.
    pub fn region_elements(&self, region: RegionId) -> impl Iterator<Item = usize> + '_ {
        self.region_of
            .iter()
            .enumerate()
            .filter(move |(_, &r)| r == region)
            .map(|(e, _)| e)
    }

    /// Replace each cell by four children, `r` times. Face classification and
    /// boundary tags are rebuilt with the original tagger.
    pub fn refine_uniform(&self, r: usize) -> Result<Mesh> {
        let mut raw = self.raw.clone();
        for _ in 0..r {
            raw = refine_once(&raw);
        }
        Mesh::build(raw)
    }

    /// All elements containing `x` within reference tolerance, with reference
    /// coordinates. Multiple hits occur on shared edges and in overlap zones.
    pub fn locate_point(&self, x: [f64; 2]) -> Vec<(usize, [f64; 2])> {
        self.locate_point_filtered(x, |_| true)
    }

    pub fn locate_point_filtered(
        &self,
        x: [f64; 2],
        keep: impl Fn(usize) -> bool,
    ) -> Vec<(usize, [f64; 2])> {
        let mut hits = Vec::new();
        for &e in self.index.candidates(x) {
            let e = e as usize;
            if !keep(e) {
                continue;
            }
            let g = &self.elements[e];
            let (lo, hi) = g.bbox();
            let infl = 1e-9 * g.diameter();
            if x[0] < lo[0] - infl || x[0] > hi[0] + infl || x[1] < lo[1] - infl || x[1] > hi[1] + infl {
                continue;
            }
            if let Ok(xi) = map_to_reference(g, x) {
                if contains_ref(xi, REF_TOL) {
                    hits.push((e, xi));
                }
            }
        }
        hits.sort_by_key(|&(e, _)| e);
        hits
    }

    /// One row per element: id, region, four vertex coordinate pairs.
    pub fn dump_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "element,region,x0,y0,x1,y1,x2,y2,x3,y3")?;
        for (e, g) in self.elements.iter().enumerate() {
            write!(w, "{},{}", e, self.region_of[e])?;
            for v in &g.verts {
                write!(w, ",{},{}", v[0], v[1])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn refine_once(raw: &RawMesh) -> RawMesh {
    let mut vertices = raw.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let (pa, pb) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            vertices.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(4 * raw.cells.len());
    let mut cell_region = Vec::with_capacity(4 * raw.cells.len());
    for (c, cell) in raw.cells.iter().enumerate() {
        let [v0, v1, v2, v3] = *cell;
        let m01 = mid(v0, v1, &mut vertices);
        let m12 = mid(v1, v2, &mut vertices);
        let m23 = mid(v2, v3, &mut vertices);
        let m30 = mid(v3, v0, &mut vertices);
        let center = {
            let p: Vec<[f64; 2]> = cell.iter().map(|&v| vertices[v]).collect();
            vertices.push([
                0.25 * (p[0][0] + p[1][0] + p[2][0] + p[3][0]),
                0.25 * (p[0][1] + p[1][1] + p[2][1] + p[3][1]),
            ]);
            vertices.len() - 1
        };
        cells.push([v0, m01, center, m30]);
        cells.push([m01, v1, m12, center]);
        cells.push([center, m12, v2, m23]);
        cells.push([m30, center, m23, v3]);
        cell_region.extend([raw.cell_region[c]; 4]);
    }
    RawMesh {
        vertices,
        cells,
        cell_region,
        materials: raw.materials.clone(),
        boundary_tag_names: raw.boundary_tag_names.clone(),
        tagger: raw.tagger.clone(),
        overlapping: raw.overlapping,
    }
}

/// Mesh resolution criterion k + 1/2 > wh/2 + (wh)^(1/3) with C = 1.
///
/// Returns (satisfied, lhs, rhs); the inequality is strict.
pub fn resolution_check(k: usize, h_max: f64, omega: f64) -> (bool, f64, f64) {
    let wh = omega * h_max;
    let lhs = k as f64 + 0.5;
    let rhs = 0.5 * wh + wh.cbrt();
    (lhs > rhs, lhs, rhs)
}

/// Uniform-grid spatial index over inflated element bounding boxes.
#[derive(Clone)]
struct BboxIndex {
    lo: [f64; 2],
    inv_cell: [f64; 2],
    dims: [usize; 2],
    cells: Vec<Vec<u32>>,
}

impl BboxIndex {
    fn build(elements: &[ElementGeometry]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for g in elements {
            let (l, h) = g.bbox();
            for d in 0..2 {
                lo[d] = lo[d].min(l[d]);
                hi[d] = hi[d].max(h[d]);
            }
        }
        let n = elements.len().max(1);
        let ext = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let target = (n as f64).sqrt().ceil() as usize;
        let aspect = ext[0] / ext[1];
        let nx = ((target as f64 * aspect.sqrt()).round() as usize).clamp(1, 4 * target);
        let ny = ((target as f64 / aspect.sqrt()).round() as usize).clamp(1, 4 * target);
        let dims = [nx, ny];
        let inv_cell = [dims[0] as f64 / ext[0], dims[1] as f64 / ext[1]];
        let mut cells = vec![Vec::new(); dims[0] * dims[1]];
        for (e, g) in elements.iter().enumerate() {
            let (l, h) = g.bbox();
            let infl = 1e-9 * g.diameter();
            let c0 = Self::cell_of_static(lo, inv_cell, dims, [l[0] - infl, l[1] - infl]);
            let c1 = Self::cell_of_static(lo, inv_cell, dims, [h[0] + infl, h[1] + infl]);
            for j in c0[1]..=c1[1] {
                for i in c0[0]..=c1[0] {
                    cells[j * dims[0] + i].push(e as u32);
                }
            }
        }
        Self { lo, inv_cell, dims, cells }
    }

    fn cell_of_static(lo: [f64; 2], inv: [f64; 2], dims: [usize; 2], x: [f64; 2]) -> [usize; 2] {
        let mut c = [0usize; 2];
        for d in 0..2 {
            let f = ((x[d] - lo[d]) * inv[d]).floor();
            c[d] = (f.max(0.0) as usize).min(dims[d] - 1);
        }
        c
    }

    fn candidates(&self, x: [f64; 2]) -> impl Iterator<Item = &u32> {
        let c = Self::cell_of_static(self.lo, self.inv_cell, self.dims, x);
        self.cells[c[1] * self.dims[0] + c[0]].iter()
    }
}
