//! Mesh builders for the study configurations: embedded rectangles, the
//! polygonal-disc overlap and overset variants, and the two-region split mesh.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::material::Material;
use crate::mesh::{BoundaryTagger, Mesh, RawMesh, RegionId};

/// Perimeter tags used by all rectangular-domain builders.
pub const SIDE_TAGS: [&str; 4] = ["left", "right", "bottom", "top"];

fn side_tag_names() -> Vec<String> {
    SIDE_TAGS.iter().map(|s| s.to_string()).collect()
}

/// Tagger matching faces that lie on one of the four sides of a rectangle.
fn rect_perimeter_tagger(min: [f64; 2], max: [f64; 2]) -> Arc<BoundaryTagger> {
    let tol = 1e-12 * (max[0] - min[0]).max(max[1] - min[1]).max(1.0);
    Arc::new(move |a: [f64; 2], b: [f64; 2]| {
        let on = |va: f64, vb: f64, line: f64| (va - line).abs() <= tol && (vb - line).abs() <= tol;
        if on(a[0], b[0], min[0]) {
            Some(0)
        } else if on(a[0], b[0], max[0]) {
            Some(1)
        } else if on(a[1], b[1], min[1]) {
            Some(2)
        } else if on(a[1], b[1], max[1]) {
            Some(3)
        } else {
            None
        }
    })
}

/// Number of cells of size `h` along `len`; errors unless `h` divides `len`
/// to within 1e-12.
fn divide_exactly(len: f64, h: f64, what: &str) -> Result<usize> {
    let n = (len / h).round();
    if n < 1.0 || (n * h - len).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "spacing {h} does not divide {what} length {len} (remainder {:.3e})",
            (n * h - len).abs()
        )));
    }
    Ok(n as usize)
}

struct RawBuilder {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 4]>,
    cell_region: Vec<RegionId>,
}

impl RawBuilder {
    fn new() -> Self {
        Self { vertices: Vec::new(), cells: Vec::new(), cell_region: Vec::new() }
    }

    fn push_vertex(&mut self, v: [f64; 2]) -> usize {
        self.vertices.push(v);
        self.vertices.len() - 1
    }

    fn push_cell(&mut self, c: [usize; 4], region: RegionId) {
        self.cells.push(c);
        self.cell_region.push(region);
    }

    /// Structured grid over a rectangle; `keep` decides per cell (i, j).
    fn add_grid(
        &mut self,
        min: [f64; 2],
        max: [f64; 2],
        nx: usize,
        ny: usize,
        region: RegionId,
        keep: impl Fn(usize, usize) -> bool,
    ) {
        let base = self.vertices.len();
        for j in 0..=ny {
            for i in 0..=nx {
                let x = min[0] + (max[0] - min[0]) * i as f64 / nx as f64;
                let y = min[1] + (max[1] - min[1]) * j as f64 / ny as f64;
                self.push_vertex([x, y]);
            }
        }
        let vid = |i: usize, j: usize| base + j * (nx + 1) + i;
        for j in 0..ny {
            for i in 0..nx {
                if keep(i, j) {
                    self.push_cell([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)], region);
                }
            }
        }
    }

    fn into_raw(
        self,
        materials: Vec<Material>,
        tagger: Arc<BoundaryTagger>,
        overlapping: bool,
    ) -> RawMesh {
        RawMesh {
            vertices: self.vertices,
            cells: self.cells,
            cell_region: self.cell_region,
            materials,
            boundary_tag_names: side_tag_names(),
            tagger,
            overlapping,
        }
    }
}

/// Uniform single-region rectangle mesh with nx-by-ny cells.
pub fn build_rect_mesh(
    min: [f64; 2],
    max: [f64; 2],
    nx: usize,
    ny: usize,
    material: Material,
) -> Result<Mesh> {
    let mut b = RawBuilder::new();
    b.add_grid(min, max, nx, ny, 0, |_, _| true);
    Mesh::build(b.into_raw(vec![material], rect_perimeter_tagger(min, max), false))
}

#[derive(Debug, Clone)]
pub struct EmbeddedRectSpec {
    pub outer_min: [f64; 2],
    pub outer_max: [f64; 2],
    pub hole_min: [f64; 2],
    pub hole_max: [f64; 2],
    pub h_outer: f64,
    pub h_inner: f64,
    pub outer_material: Material,
    pub inner_material: Material,
}

/// Rectangular domain with a rectangular hole holding an independently meshed
/// inner region; the four hole sides become the non-conforming interface.
pub fn build_embedded_rect_mesh(spec: &EmbeddedRectSpec) -> Result<Mesh> {
    let EmbeddedRectSpec { outer_min, outer_max, hole_min, hole_max, h_outer, h_inner, .. } = *spec;
    for d in 0..2 {
        if !(outer_min[d] < hole_min[d] && hole_min[d] < hole_max[d] && hole_max[d] < outer_max[d]) {
            return Err(Error::Config("hole must lie strictly inside the outer extent".into()));
        }
    }
    let nx = divide_exactly(outer_max[0] - outer_min[0], h_outer, "outer x")?;
    let ny = divide_exactly(outer_max[1] - outer_min[1], h_outer, "outer y")?;
    // the hole must land on outer grid lines
    let i0 = divide_exactly(hole_min[0] - outer_min[0], h_outer, "left flank")?;
    let i1 = divide_exactly(hole_max[0] - outer_min[0], h_outer, "hole x end")?;
    let j0 = divide_exactly(hole_min[1] - outer_min[1], h_outer, "bottom flank")?;
    let j1 = divide_exactly(hole_max[1] - outer_min[1], h_outer, "hole y end")?;
    let mx = divide_exactly(hole_max[0] - hole_min[0], h_inner, "hole x")?;
    let my = divide_exactly(hole_max[1] - hole_min[1], h_inner, "hole y")?;

    let mut b = RawBuilder::new();
    b.add_grid(outer_min, outer_max, nx, ny, 0, |i, j| {
        !(i >= i0 && i < i1 && j >= j0 && j < j1)
    });
    b.add_grid(hole_min, hole_max, mx, my, 1, |_, _| true);
    Mesh::build(b.into_raw(
        vec![spec.outer_material, spec.inner_material],
        rect_perimeter_tagger(outer_min, outer_max),
        false,
    ))
}

#[derive(Debug, Clone)]
pub struct SplitRectSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
    /// Interface position; the mesh is split into x < split and x > split.
    pub split_x: f64,
    pub h_left: f64,
    pub h_right: f64,
    pub left_material: Material,
    pub right_material: Material,
}

/// Two regions side by side, meeting in a straight NCI at `split_x`.
pub fn build_split_mesh(spec: &SplitRectSpec) -> Result<Mesh> {
    let SplitRectSpec { min, max, split_x, h_left, h_right, .. } = *spec;
    if !(min[0] < split_x && split_x < max[0]) {
        return Err(Error::Config("split_x must lie inside the extent".into()));
    }
    let nxl = divide_exactly(split_x - min[0], h_left, "left x")?;
    let nyl = divide_exactly(max[1] - min[1], h_left, "left y")?;
    let nxr = divide_exactly(max[0] - split_x, h_right, "right x")?;
    let nyr = divide_exactly(max[1] - min[1], h_right, "right y")?;
    let mut b = RawBuilder::new();
    b.add_grid(min, [split_x, max[1]], nxl, nyl, 0, |_, _| true);
    b.add_grid([split_x, min[1]], max, nxr, nyr, 1, |_, _| true);
    Mesh::build(b.into_raw(
        vec![spec.left_material, spec.right_material],
        rect_perimeter_tagger(min, max),
        false,
    ))
}

/// Butterfly mesh of a disc: a square core surrounded by blended ring layers
/// whose outermost vertices lie on the circle, giving a polygonal boundary
/// with 4*core cells per ring.
fn add_disc(
    b: &mut RawBuilder,
    center: [f64; 2],
    radius: f64,
    n_core: usize,
    n_layers: usize,
    region: RegionId,
) -> Vec<usize> {
    let a = 0.5 * radius;
    let core_min = [center[0] - a, center[1] - a];
    let core_max = [center[0] + a, center[1] + a];
    let core_base = b.vertices.len();
    b.add_grid(core_min, core_max, n_core, n_core, region, |_, _| true);
    let core_vid = |i: usize, j: usize| core_base + j * (n_core + 1) + i;

    let peri = 4 * n_core;
    // perimeter index -> core boundary vertex, counterclockwise from the
    // bottom-right corner (angle -45 degrees)
    let boundary_vid = |j: usize| -> usize {
        let j = j % peri;
        let (q, m) = (j / n_core, j % n_core);
        match q {
            0 => core_vid(n_core, m),
            1 => core_vid(n_core - m, n_core),
            2 => core_vid(0, n_core - m),
            _ => core_vid(m, 0),
        }
    };
    let angle = |j: usize| -> f64 {
        -std::f64::consts::FRAC_PI_4 + std::f64::consts::TAU * j as f64 / peri as f64
    };

    // ring vertices, layers 1..=n_layers (layer 0 is the core boundary)
    let ring_base = b.vertices.len();
    for l in 1..=n_layers {
        let t = l as f64 / n_layers as f64;
        for j in 0..peri {
            let th = angle(j);
            let circ = [center[0] + radius * th.cos(), center[1] + radius * th.sin()];
            let sq = b.vertices[boundary_vid(j)];
            b.push_vertex([sq[0] + t * (circ[0] - sq[0]), sq[1] + t * (circ[1] - sq[1])]);
        }
    }
    let ring_vid = |l: usize, j: usize| -> usize {
        if l == 0 {
            boundary_vid(j)
        } else {
            ring_base + (l - 1) * peri + (j % peri)
        }
    };
    for l in 0..n_layers {
        for j in 0..peri {
            b.push_cell(
                [ring_vid(l, j), ring_vid(l + 1, j), ring_vid(l + 1, j + 1), ring_vid(l, j + 1)],
                region,
            );
        }
    }
    (0..peri).map(|j| ring_vid(n_layers, j)).collect()
}

#[derive(Debug, Clone)]
pub struct OverlapMeshSpec {
    pub domain_min: [f64; 2],
    pub domain_max: [f64; 2],
    /// Radius of the polygonal disc region.
    pub radius: f64,
    /// The hole in the outer mesh has radius `radius - overlap_depth`.
    pub overlap_depth: f64,
    pub disc_core: usize,
    pub disc_layers: usize,
    /// Sectors of the outer ring mesh around the hole; must be a multiple of 4.
    pub ring_sectors: usize,
    pub ring_layers: usize,
    pub outer_material: Material,
    pub inner_material: Material,
}

/// Disc embedded in a rectangle through a polygonal hole. With depth 0 the
/// interface is flush; with positive depth the hole is smaller than the disc
/// and the interface quadrature points fall inside the overlapping elements.
pub fn build_overlap_mesh(spec: &OverlapMeshSpec) -> Result<Mesh> {
    let OverlapMeshSpec {
        domain_min: dmin,
        domain_max: dmax,
        radius,
        overlap_depth,
        disc_core,
        disc_layers,
        ring_sectors,
        ring_layers,
        ..
    } = *spec;
    let half = [0.5 * (dmax[0] - dmin[0]), 0.5 * (dmax[1] - dmin[1])];
    if (half[0] - half[1]).abs() > 1e-12 * half[0] {
        return Err(Error::Config("overlap mesh requires a square domain".into()));
    }
    let center = [dmin[0] + half[0], dmin[1] + half[1]];
    if radius > half[0] * (1.0 + 1e-12) {
        return Err(Error::Config("disc radius exceeds the domain half-width".into()));
    }
    if overlap_depth < 0.0 || overlap_depth >= radius {
        return Err(Error::Config("overlap depth must lie in [0, radius)".into()));
    }
    if ring_sectors % 4 != 0 || ring_sectors == 0 {
        return Err(Error::Config("ring_sectors must be a positive multiple of 4".into()));
    }
    let hole_radius = radius - overlap_depth;
    if overlap_depth == 0.0 && ring_sectors != 4 * disc_core {
        return Err(Error::Config(
            "flush interface (depth 0) requires ring_sectors = 4 * disc_core so the polygons match"
                .into(),
        ));
    }
    let ring_thickness_min = (half[0] - hole_radius) / ring_layers as f64;
    if ring_thickness_min <= 0.0 {
        return Err(Error::Config("hole radius leaves no room for the outer ring".into()));
    }
    if overlap_depth > ring_thickness_min {
        log::warn!(
            "overlap depth {overlap_depth} exceeds one background element ({ring_thickness_min:.3e}); \
             redundant work is done in the overlap zone"
        );
    }

    let mut b = RawBuilder::new();
    // outer ring between the hole polygon and the square perimeter
    let peri = ring_sectors;
    let angle = |j: usize| -> f64 {
        -std::f64::consts::FRAC_PI_4 + std::f64::consts::TAU * (j % peri) as f64 / peri as f64
    };
    let ring_base = b.vertices.len();
    for l in 0..=ring_layers {
        let t = l as f64 / ring_layers as f64;
        for j in 0..peri {
            let th = angle(j);
            let (c, s) = (th.cos(), th.sin());
            let inner = [center[0] + hole_radius * c, center[1] + hole_radius * s];
            let rsq = half[0] / c.abs().max(s.abs());
            let outer = [center[0] + rsq * c, center[1] + rsq * s];
            b.push_vertex([inner[0] + t * (outer[0] - inner[0]), inner[1] + t * (outer[1] - inner[1])]);
        }
    }
    let vid = |l: usize, j: usize| ring_base + l * peri + (j % peri);
    for l in 0..ring_layers {
        for j in 0..peri {
            b.push_cell([vid(l, j), vid(l + 1, j), vid(l + 1, j + 1), vid(l, j + 1)], 0);
        }
    }
    add_disc(&mut b, center, radius, disc_core, disc_layers, 1);

    Mesh::build(b.into_raw(
        vec![spec.outer_material, spec.inner_material],
        rect_perimeter_tagger(dmin, dmax),
        overlap_depth > 0.0,
    ))
}

#[derive(Debug, Clone)]
pub struct OversetMeshSpec {
    pub domain_min: [f64; 2],
    pub domain_max: [f64; 2],
    pub radius: f64,
    pub disc_core: usize,
    pub disc_layers: usize,
    /// Background grid resolution (cells per side).
    pub grid_n: usize,
    pub outer_material: Material,
    pub inner_material: Material,
}

/// Disc mesh laid over a background grid; background cells fully covered by
/// the disc polygon are deleted and both staircase and disc boundaries couple
/// through overlapping elements.
pub fn build_overset_mesh(spec: &OversetMeshSpec) -> Result<Mesh> {
    let OversetMeshSpec {
        domain_min: dmin,
        domain_max: dmax,
        radius,
        disc_core,
        disc_layers,
        grid_n,
        ..
    } = *spec;
    let half = [0.5 * (dmax[0] - dmin[0]), 0.5 * (dmax[1] - dmin[1])];
    let center = [dmin[0] + half[0], dmin[1] + half[1]];
    if radius > half[0].min(half[1]) * (1.0 + 1e-12) {
        return Err(Error::Config("disc radius exceeds the domain half-width".into()));
    }

    // disc boundary polygon, for the covered-cell test
    let peri = 4 * disc_core;
    let poly: Vec<[f64; 2]> = (0..peri)
        .map(|j| {
            let th = -std::f64::consts::FRAC_PI_4 + std::f64::consts::TAU * j as f64 / peri as f64;
            [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
        })
        .collect();
    let strictly_inside = |p: [f64; 2]| -> bool {
        let margin = 1e-10 * radius;
        (0..peri).all(|j| {
            let a = poly[j];
            let bb = poly[(j + 1) % peri];
            let e = [bb[0] - a[0], bb[1] - a[1]];
            let elen = (e[0] * e[0] + e[1] * e[1]).sqrt();
            (e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0])) / elen > margin
        })
    };

    let mut b = RawBuilder::new();
    let hx = (dmax[0] - dmin[0]) / grid_n as f64;
    let hy = (dmax[1] - dmin[1]) / grid_n as f64;
    b.add_grid(dmin, dmax, grid_n, grid_n, 0, |i, j| {
        let corners = [
            [dmin[0] + i as f64 * hx, dmin[1] + j as f64 * hy],
            [dmin[0] + (i + 1) as f64 * hx, dmin[1] + j as f64 * hy],
            [dmin[0] + (i + 1) as f64 * hx, dmin[1] + (j + 1) as f64 * hy],
            [dmin[0] + i as f64 * hx, dmin[1] + (j + 1) as f64 * hy],
        ];
        !corners.iter().all(|&c| strictly_inside(c))
    });
    add_disc(&mut b, center, radius, disc_core, disc_layers, 1);

    Mesh::build(b.into_raw(
        vec![spec.outer_material, spec.inner_material],
        rect_perimeter_tagger(dmin, dmax),
        true,
    ))
}
