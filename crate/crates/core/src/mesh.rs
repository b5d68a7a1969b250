//! Structured triangulations of axis-aligned rectangles.
//!
//! Each rectangle cell is split into two right triangles whose diagonal
//! alternates in a checkerboard ("union jack") pattern, so that for even cell
//! counts the mesh is mirror symmetric about both midlines. The nodal basis is
//! piecewise linear: gradients are constant per triangle and are integrated
//! with one point per cell (exact). Zeroth-order terms such as `|u|^p` are
//! integrated with the vertex (tensor trapezoidal) rule, whose points are the
//! mesh nodes. Boundary integrals use the trapezoidal rule on boundary edges,
//! again with the boundary nodes as quadrature points.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Mirror axis of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Reflection `x -> lx - x`.
    X,
    /// Reflection `y -> ly - y`.
    Y,
}

/// Geometric signature used to decide whether two objects live on the same mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshShape {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone)]
pub struct MeshDomain {
    shape: MeshShape,
    nodes: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    cell_areas: Vec<f64>,
    /// Gradients of the three local hat functions on each cell.
    cell_gradients: Vec<[[f64; 2]; 3]>,
    boundary_facets: Vec<[usize; 2]>,
    facet_cells: Vec<usize>,
    node_weights: Vec<f64>,
    boundary_nodes: Vec<usize>,
    boundary_weights: Vec<f64>,
    /// Position of a node in `boundary_nodes`, if it lies on the boundary.
    boundary_slot: Vec<Option<usize>>,
}

/// Builds the checkerboard triangulation of `[0, lx] x [0, ly]` with `nx * ny` cells.
pub fn build_rectangle_mesh(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<MeshDomain> {
    if !(lx.is_finite() && lx > 0.0 && ly.is_finite() && ly > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "side lengths must be positive and finite, got lx = {lx}, ly = {ly}"
        )));
    }
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidMesh(format!(
            "need at least 2 cells per direction, got nx = {nx}, ny = {ny}"
        )));
    }
    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    let stride = nx + 1;
    let node = |ix: usize, iy: usize| iy * stride + ix;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for iy in 0..=ny {
        for ix in 0..=nx {
            // Pin the far edges exactly so reflections map nodes onto nodes.
            let x = if ix == nx { lx } else { ix as f64 * hx };
            let y = if iy == ny { ly } else { iy as f64 * hy };
            nodes.push([x, y]);
        }
    }

    let mut cells = Vec::with_capacity(2 * nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let n00 = node(ix, iy);
            let n10 = node(ix + 1, iy);
            let n01 = node(ix, iy + 1);
            let n11 = node(ix + 1, iy + 1);
            if (ix + iy) % 2 == 0 {
                cells.push([n00, n10, n11]);
                cells.push([n00, n11, n01]);
            } else {
                cells.push([n00, n10, n01]);
                cells.push([n10, n11, n01]);
            }
        }
    }

    let mut cell_areas = Vec::with_capacity(cells.len());
    let mut cell_gradients = Vec::with_capacity(cells.len());
    for cell in &cells {
        let [a, b, c] = cell.map(|i| nodes[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        cell_areas.push(0.5 * det.abs());
        // grad(phi_i) = rot90(opposite edge) / det
        let grad = |p: [f64; 2], q: [f64; 2]| [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
        cell_gradients.push([grad(b, c), grad(c, a), grad(a, b)]);
    }

    // counterclockwise walk: bottom, right, top, left
    let mut boundary_facets = Vec::with_capacity(2 * (nx + ny));
    for ix in 0..nx {
        boundary_facets.push([node(ix, 0), node(ix + 1, 0)]);
    }
    for iy in 0..ny {
        boundary_facets.push([node(nx, iy), node(nx, iy + 1)]);
    }
    for ix in (0..nx).rev() {
        boundary_facets.push([node(ix + 1, ny), node(ix, ny)]);
    }
    for iy in (0..ny).rev() {
        boundary_facets.push([node(0, iy + 1), node(0, iy)]);
    }

    let facet_cells = boundary_facets
        .iter()
        .map(|&[a, b]| {
            cells
                .iter()
                .position(|c| c.contains(&a) && c.contains(&b))
                .expect("every boundary facet lies on a cell")
        })
        .collect();

    let mut node_weights = vec![0.0; nodes.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            let quarter = 0.25 * hx * hy;
            for n in [node(ix, iy), node(ix + 1, iy), node(ix, iy + 1), node(ix + 1, iy + 1)] {
                node_weights[n] += quarter;
            }
        }
    }

    let mut boundary_slot = vec![None; nodes.len()];
    let mut boundary_nodes = Vec::with_capacity(2 * (nx + ny));
    let mut boundary_weights = Vec::with_capacity(2 * (nx + ny));
    for &[a, b] in &boundary_facets {
        let len = distance(nodes[a], nodes[b]);
        for n in [a, b] {
            let slot = *boundary_slot[n].get_or_insert_with(|| {
                boundary_nodes.push(n);
                boundary_weights.push(0.0);
                boundary_nodes.len() - 1
            });
            boundary_weights[slot] += 0.5 * len;
        }
    }

    Ok(MeshDomain {
        shape: MeshShape { lx, ly, nx, ny },
        nodes,
        cells,
        cell_areas,
        cell_gradients,
        boundary_facets,
        facet_cells,
        node_weights,
        boundary_nodes,
        boundary_weights,
        boundary_slot,
    })
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl MeshDomain {
    pub fn shape(&self) -> MeshShape {
        self.shape
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn cell_areas(&self) -> &[f64] {
        &self.cell_areas
    }

    pub fn cell_gradients(&self) -> &[[[f64; 2]; 3]] {
        &self.cell_gradients
    }

    pub fn boundary_facets(&self) -> &[[usize; 2]] {
        &self.boundary_facets
    }

    /// Index of the unique cell containing each boundary facet.
    pub fn facet_cells(&self) -> &[usize] {
        &self.facet_cells
    }

    /// Volume quadrature weights; the quadrature points are the mesh nodes.
    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    /// Boundary quadrature points, as node indices.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.boundary_slot[node].is_some()
    }

    pub fn volume_quadrature(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.nodes.iter().copied().zip(self.node_weights.iter().copied())
    }

    pub fn boundary_quadrature(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.boundary_nodes
            .iter()
            .map(|&n| self.nodes[n])
            .zip(self.boundary_weights.iter().copied())
    }

    /// One-point cell quadrature (centroid, area) used for gradient terms.
    pub fn cell_quadrature(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.cells.iter().zip(&self.cell_areas).map(|(c, &a)| {
            let [p, q, r] = c.map(|i| self.nodes[i]);
            ([(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0], a)
        })
    }

    pub fn area(&self) -> f64 {
        self.node_weights.iter().sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_weights.iter().sum()
    }

    /// Constant gradient of the nodal interpolant of `values` on `cell`.
    #[inline]
    pub fn cell_gradient(&self, values: &[f64], cell: usize) -> [f64; 2] {
        let c = &self.cells[cell];
        let g = &self.cell_gradients[cell];
        let mut out = [0.0; 2];
        for a in 0..3 {
            let v = values[c[a]];
            out[0] += v * g[a][0];
            out[1] += v * g[a][1];
        }
        out
    }

    /// Value of the nodal interpolant at the cell centroid.
    #[inline]
    pub fn cell_mean(&self, values: &[f64], cell: usize) -> f64 {
        let c = &self.cells[cell];
        (values[c[0]] + values[c[1]] + values[c[2]]) / 3.0
    }

    pub fn sample_nodes<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|&[x, y]| f(x, y)).collect()
    }

    pub fn sample_boundary<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.boundary_nodes.iter().map(|&n| f(self.nodes[n][0], self.nodes[n][1])).collect()
    }

    /// Largest band offset `|i - j|` among nodes sharing a cell.
    pub(crate) fn half_bandwidth(&self) -> usize {
        self.shape.nx + 2
    }

    /// Image of `node` under the reflection about the given midline.
    pub fn mirror_node(&self, node: usize, axis: Axis) -> usize {
        let stride = self.shape.nx + 1;
        let (ix, iy) = (node % stride, node / stride);
        match axis {
            Axis::X => iy * stride + (self.shape.nx - ix),
            Axis::Y => (self.shape.ny - iy) * stride + ix,
        }
    }

    /// Whether the triangulation is invariant under the reflection.
    pub fn is_mirror_symmetric(&self, axis: Axis) -> bool {
        match axis {
            Axis::X => self.shape.nx % 2 == 0,
            Axis::Y => self.shape.ny % 2 == 0,
        }
    }

    pub fn reflect(&self, values: &[f64], axis: Axis) -> Vec<f64> {
        (0..values.len()).map(|i| values[self.mirror_node(i, axis)]).collect()
    }
}

/// Quadrature of samples taken at the volume quadrature points (the nodes).
pub fn integrate_volume(m: &MeshDomain, f: &[f64]) -> Result<f64> {
    weighted_sum(m.node_weights(), f, "volume")
}

/// Quadrature of samples taken at the boundary quadrature points.
pub fn integrate_boundary(m: &MeshDomain, g: &[f64]) -> Result<f64> {
    weighted_sum(m.boundary_weights(), g, "boundary")
}

fn weighted_sum(weights: &[f64], f: &[f64], what: &str) -> Result<f64> {
    if weights.len() != f.len() {
        return Err(Error::MeshMismatch(format!(
            "{} {what} samples for {} quadrature points",
            f.len(),
            weights.len()
        )));
    }
    let mut sum = 0.0;
    for (index, (&w, &value)) in weights.iter().zip(f).enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        sum += w * value;
    }
    Ok(sum)
}

pub const FIELD_DUMP_MAGIC: &str = "pq-field v1";

/// Writes nodal values in the `pq-field v1` format: a header line
/// `pq-field v1 nx ny lx ly` (cell counts and side lengths), optional
/// `#` comment lines, then one value per line in row-major node order.
pub fn write_field_dump<W: Write>(
    mut out: W,
    mesh: &MeshDomain,
    values: &[f64],
    comment: Option<&str>,
) -> Result<()> {
    if values.len() != mesh.num_nodes() {
        return Err(Error::MeshMismatch(format!(
            "{} values for {} nodes",
            values.len(),
            mesh.num_nodes()
        )));
    }
    let s = mesh.shape();
    writeln!(out, "{FIELD_DUMP_MAGIC} {} {} {:e} {:e}", s.nx, s.ny, s.lx, s.ly)?;
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    for v in values {
        writeln!(out, "{v:e}")?;
    }
    Ok(())
}

/// Parsed `pq-field v1` dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub shape: MeshShape,
    pub values: Vec<f64>,
}

pub fn read_field_dump<R: BufRead>(input: R) -> Result<FieldDump> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::FieldDump("empty input".into()))?;
    let header = header?;
    let rest = header
        .strip_prefix(FIELD_DUMP_MAGIC)
        .ok_or_else(|| Error::FieldDump(format!("bad header `{header}`")))?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::FieldDump(format!("bad header `{header}`")));
    }
    let bad = |what: &str| Error::FieldDump(format!("bad {what} in header `{header}`"));
    let shape = MeshShape {
        nx: parts[0].parse().map_err(|_| bad("nx"))?,
        ny: parts[1].parse().map_err(|_| bad("ny"))?,
        lx: parts[2].parse().map_err(|_| bad("lx"))?,
        ly: parts[3].parse().map_err(|_| bad("ly"))?,
    };
    let mut values = Vec::with_capacity((shape.nx + 1) * (shape.ny + 1));
    for (lineno, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::FieldDump(format!("line {}: not a number: `{t}`", lineno + 1)))?;
        values.push(v);
    }
    if values.len() != (shape.nx + 1) * (shape.ny + 1) {
        return Err(Error::FieldDump(format!(
            "expected {} values, found {}",
            (shape.nx + 1) * (shape.ny + 1),
            values.len()
        )));
    }
    Ok(FieldDump { shape, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_square_geometry() {
        let m = build_rectangle_mesh(1.0, 1.0, 2, 2).unwrap();
        assert_relative_eq!(m.area(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(m.perimeter(), 4.0, max_relative = 1e-12);
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.num_cells(), 8);
    }

    #[test]
    fn rectangle_geometry() {
        let m = build_rectangle_mesh(2.0, 1.0, 4, 2).unwrap();
        assert_relative_eq!(m.area(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(m.perimeter(), 6.0, max_relative = 1e-12);
        let cells: f64 = m.cell_areas().iter().sum();
        assert_relative_eq!(cells, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn fine_mesh_weights_sum_to_area() {
        let m = build_rectangle_mesh(1.0, 1.0, 32, 32).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-12);
        assert!(m.node_weights().iter().all(|&w| w > 0.0));
        assert!(m.boundary_weights().iter().all(|&w| w > 0.0));
        assert!(m.cell_areas().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_rectangle_mesh(1.0, 1.0, 1, 4).is_err());
        assert!(build_rectangle_mesh(1.0, 1.0, 4, 1).is_err());
        assert!(build_rectangle_mesh(0.0, 1.0, 4, 4).is_err());
        assert!(build_rectangle_mesh(1.0, -2.0, 4, 4).is_err());
        assert!(build_rectangle_mesh(f64::NAN, 1.0, 4, 4).is_err());
    }

    #[test]
    fn boundary_facets_belong_to_exactly_one_cell() {
        let m = build_rectangle_mesh(1.5, 1.0, 6, 4).unwrap();
        for &[a, b] in m.boundary_facets() {
            let owners = m.cells().iter().filter(|c| c.contains(&a) && c.contains(&b)).count();
            assert_eq!(owners, 1);
        }
        assert_eq!(m.boundary_facets().len(), 2 * (6 + 4));
        assert_eq!(m.boundary_nodes().len(), 2 * (6 + 4));
    }

    #[test]
    fn volume_integrals() {
        let m = build_rectangle_mesh(1.0, 1.0, 32, 32).unwrap();
        let ones = vec![1.0; m.num_nodes()];
        assert_relative_eq!(integrate_volume(&m, &ones).unwrap(), 1.0, max_relative = 1e-12);
        let c = vec![3.5; m.num_nodes()];
        assert_relative_eq!(integrate_volume(&m, &c).unwrap(), 3.5, max_relative = 1e-12);
        let x = m.sample_nodes(|x, _| x);
        assert!((integrate_volume(&m, &x).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn boundary_integrals() {
        let m = build_rectangle_mesh(1.0, 1.0, 8, 8).unwrap();
        let n = m.boundary_nodes().len();
        assert_relative_eq!(integrate_boundary(&m, &vec![1.0; n]).unwrap(), 4.0, max_relative = 1e-12);
        assert_eq!(integrate_boundary(&m, &vec![0.0; n]).unwrap(), 0.0);
        assert_relative_eq!(integrate_boundary(&m, &vec![0.3; n]).unwrap(), 1.2, max_relative = 1e-12);
    }

    #[test]
    fn non_finite_sample_is_located() {
        let m = build_rectangle_mesh(1.0, 1.0, 2, 2).unwrap();
        let mut f = vec![1.0; m.num_nodes()];
        f[4] = f64::NAN;
        match integrate_volume(&m, &f) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 4),
            other => panic!("unexpected {other:?}"),
        }
        let mut g = vec![1.0; m.boundary_nodes().len()];
        g[2] = f64::INFINITY;
        assert!(matches!(integrate_boundary(&m, &g), Err(Error::NonFinite { index: 2, .. })));
    }

    #[test]
    fn gradients_of_linear_functions_are_exact() {
        let m = build_rectangle_mesh(2.0, 1.0, 6, 4).unwrap();
        let u = m.sample_nodes(|x, y| 3.0 * x - 2.0 * y + 1.0);
        for c in 0..m.num_cells() {
            let g = m.cell_gradient(&u, c);
            assert_relative_eq!(g[0], 3.0, epsilon = 1e-12);
            assert_relative_eq!(g[1], -2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn even_meshes_are_mirror_symmetric() {
        let m = build_rectangle_mesh(1.0, 2.0, 4, 6).unwrap();
        for axis in [Axis::X, Axis::Y] {
            assert!(m.is_mirror_symmetric(axis));
            let mut cells: Vec<[usize; 3]> = m
                .cells()
                .iter()
                .map(|c| {
                    let mut t = c.map(|n| m.mirror_node(n, axis));
                    t.sort();
                    t
                })
                .collect();
            cells.sort();
            let mut orig: Vec<[usize; 3]> = m
                .cells()
                .iter()
                .map(|c| {
                    let mut t = *c;
                    t.sort();
                    t
                })
                .collect();
            orig.sort();
            assert_eq!(cells, orig);
        }
        let odd = build_rectangle_mesh(1.0, 1.0, 5, 4).unwrap();
        assert!(!odd.is_mirror_symmetric(Axis::X));
    }

    #[test]
    fn field_dump_format() {
        let m = build_rectangle_mesh(2.0, 1.0, 2, 2).unwrap();
        let v: Vec<f64> = (0..m.num_nodes()).map(|i| i as f64 * 0.5 - 1.0).collect();
        let mut buf = Vec::new();
        write_field_dump(&mut buf, &m, &v, Some("config abc")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("pq-field v1 2 2 2e0 1e0\n# config abc\n"));
        let back = read_field_dump(buf.as_slice()).unwrap();
        assert_eq!(back.shape, m.shape());
        assert_eq!(back.values, v);
        assert!(read_field_dump("pq-field v2 2 2 1 1\n".as_bytes()).is_err());
        assert!(read_field_dump("pq-field v1 2 2 1 1\n1\n".as_bytes()).is_err());
    }
}
