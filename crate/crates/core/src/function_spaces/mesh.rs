use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::phi::conditions::halton;
use crate::phi::{Ball, SamplePlan};
use crate::{Error, Point, Result};

/// The meshed region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    /// `[origin, origin + side]²`.
    Square { origin: Point, side: f64 },
    Disk { center: Point, radius: f64 },
    Annulus { center: Point, inner: f64, outer: f64 },
}

/// Serialized mesh description, e.g. `{"shape": {"kind": "disk", ...}, "h": 0.03125}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub shape: Shape,
    pub h: f64,
}

impl Shape {
    pub fn unit_square() -> Self {
        Shape::Square {
            origin: [0.0, 0.0],
            side: 1.0,
        }
    }

    pub fn unit_disk() -> Self {
        Shape::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    /// Signed distance to the boundary, negative inside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        match *self {
            Shape::Square { origin, side } => {
                let dx = (origin[0] - x[0]).max(x[0] - origin[0] - side);
                let dy = (origin[1] - x[1]).max(x[1] - origin[1] - side);
                dx.max(dy)
            }
            Shape::Disk { center, radius } => math::dist(x, center) - radius,
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = math::dist(x, center);
                (r - outer).max(inner - r)
            }
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        self.signed_distance(x) <= 0.0
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Square { side, .. } => side * side,
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Annulus { inner, outer, .. } => PI * (outer * outer - inner * inner),
        }
    }

    fn bounding_box(&self) -> (Point, f64) {
        match *self {
            Shape::Square { origin, side } => (origin, side),
            Shape::Disk { center, radius } => ([center[0] - radius, center[1] - radius], 2.0 * radius),
            Shape::Annulus { center, outer, .. } => {
                ([center[0] - outer, center[1] - outer], 2.0 * outer)
            }
        }
    }

    /// Nearest point of the analytic boundary.
    pub fn project_to_boundary(&self, x: Point) -> Point {
        match *self {
            Shape::Square { origin, side } => {
                let lo = origin;
                let hi = [origin[0] + side, origin[1] + side];
                let c = [x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1])];
                let d = [c[0] - lo[0], hi[0] - c[0], c[1] - lo[1], hi[1] - c[1]];
                let k = (0..4).min_by(|a, b| d[*a].total_cmp(&d[*b])).unwrap();
                match k {
                    0 => [lo[0], c[1]],
                    1 => [hi[0], c[1]],
                    2 => [c[0], lo[1]],
                    _ => [c[0], hi[1]],
                }
            }
            Shape::Disk { center, radius } => radial_projection(x, center, radius),
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = math::dist(x, center);
                let target = if (r - inner).abs() < (outer - r).abs() { inner } else { outer };
                radial_projection(x, center, target)
            }
        }
    }

    /// Quasi-random interior points plus points on each boundary component.
    pub fn sample_points(&self, plan: &SamplePlan) -> Vec<Point> {
        match *self {
            Shape::Disk { center, radius } => Ball::new(center, radius).sample_points(plan),
            Shape::Square { origin, side } => {
                let mut out = Vec::new();
                if plan.include_center {
                    out.push([origin[0] + 0.5 * side, origin[1] + 0.5 * side]);
                }
                for i in 1..=plan.interior {
                    out.push([origin[0] + side * halton(i, 2), origin[1] + side * halton(i, 3)]);
                }
                for k in 0..plan.boundary {
                    let s = 4.0 * k as f64 / plan.boundary as f64;
                    let (e, f) = (math::floor(s) as usize, s - math::floor(s));
                    let p = match e {
                        0 => [f, 0.0],
                        1 => [1.0, f],
                        2 => [1.0 - f, 1.0],
                        _ => [0.0, 1.0 - f],
                    };
                    out.push([origin[0] + side * p[0], origin[1] + side * p[1]]);
                }
                out
            }
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let mut out = Vec::new();
                for i in 1..=plan.interior {
                    let u = halton(i, 2);
                    let rho = math::sqrt(inner * inner + u * (outer * outer - inner * inner));
                    let theta = 2.0 * PI * halton(i, 3);
                    out.push([center[0] + rho * math::cos(theta), center[1] + rho * math::sin(theta)]);
                }
                for radius in [inner, outer] {
                    for k in 0..plan.boundary {
                        let theta = 2.0 * PI * k as f64 / plan.boundary as f64;
                        out.push([
                            center[0] + radius * math::cos(theta),
                            center[1] + radius * math::sin(theta),
                        ]);
                    }
                }
                out
            }
        }
    }
}

fn radial_projection(x: Point, center: Point, radius: f64) -> Point {
    let r = math::dist(x, center);
    if r == 0.0 {
        return [center[0] + radius, center[1]];
    }
    let s = radius / r;
    [center[0] + s * (x[0] - center[0]), center[1] + s * (x[1] - center[1])]
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// A triangulation of a [`Shape`] with P1 data precomputed.
#[derive(Clone, Debug)]
pub struct TriangulatedDomain {
    shape: Shape,
    h: f64,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    areas: Vec<f64>,
    centroids: Vec<Point>,
    shape_grads: Vec<[[f64; 2]; 3]>,
    lumped_mass: Vec<f64>,
    locator: Locator,
}

impl TriangulatedDomain {
    pub fn from_descriptor(desc: &MeshDescriptor) -> Result<Self> {
        Self::build(desc.shape, desc.h)
    }

    /// Crossed structured mesh of the bounding box, clipped to the shape.
    ///
    /// Each square cell gets its center as an extra vertex and is split
    /// into four triangles. For curved shapes the triangles with every
    /// vertex inside the shape are kept and the vertices of the outer
    /// layer are moved radially onto the boundary; triangles that would
    /// degenerate are peeled off first.
    pub fn build(shape: Shape, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidMesh(format!("mesh size h = {h}")));
        }
        let (origin, side) = shape.bounding_box();
        let n = math::round(side / h).max(1.0) as usize;
        let step = side / n as f64;
        let corner = |i: usize, j: usize| i * (n + 1) + j;
        let center = |i: usize, j: usize| (n + 1) * (n + 1) + i * n + j;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n);
        for i in 0..=n {
            for j in 0..=n {
                vertices.push([origin[0] + j as f64 * step, origin[1] + i as f64 * step]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                vertices.push([
                    origin[0] + (j as f64 + 0.5) * step,
                    origin[1] + (i as f64 + 0.5) * step,
                ]);
            }
        }
        let mut triangles = Vec::with_capacity(4 * n * n);
        for i in 0..n {
            for j in 0..n {
                let a = corner(i, j);
                let b = corner(i, j + 1);
                let c = corner(i + 1, j + 1);
                let d = corner(i + 1, j);
                let m = center(i, j);
                triangles.extend_from_slice(&[[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
            }
        }
        let curved = !matches!(shape, Shape::Square { .. });
        if !curved {
            let (vertices, triangles) = compact(vertices, triangles);
            let mut boundary = boundary_from_edges(vertices.len(), &triangles);
            // boundary edges of the box are exact already
            for (v, b) in vertices.iter().zip(boundary.iter_mut()) {
                *b = *b && shape.signed_distance(*v).abs() <= 1e-12 * side;
            }
            return Self::assemble(shape, h, vertices, triangles, boundary);
        }
        let tol = 1e-12 * side;
        let inside: Vec<bool> = vertices.iter().map(|v| shape.signed_distance(*v) <= tol).collect();
        triangles.retain(|t| t.iter().all(|v| inside[*v]));
        let (vertices, mut triangles) = compact(vertices, triangles);
        // Triangles with all three vertices on the outer layer, or that fold
        // over after projection, are removed and the layer recomputed.
        let min_area = 0.05 * step * step;
        let moved = loop {
            let boundary = boundary_from_edges(vertices.len(), &triangles);
            let moved: Vec<Point> = vertices
                .iter()
                .zip(&boundary)
                .map(|(v, b)| if *b { shape.project_to_boundary(*v) } else { *v })
                .collect();
            let before = triangles.len();
            triangles.retain(|t| {
                let all_boundary = t.iter().all(|v| boundary[*v]);
                let area = signed_area(moved[t[0]], moved[t[1]], moved[t[2]]);
                !all_boundary && area > min_area
            });
            if triangles.len() == before {
                break moved;
            }
        };
        let (vertices, triangles) = compact(moved, triangles);
        let boundary = boundary_from_edges(vertices.len(), &triangles);
        Self::assemble(shape, h, vertices, triangles, boundary)
    }

    /// Builds a domain from explicit data; triangles are reoriented
    /// counter-clockwise.
    pub fn from_parts(
        shape: Shape,
        h: f64,
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        if boundary.len() != vertices.len() {
            return Err(Error::InvalidMesh("boundary mask length".into()));
        }
        for t in triangles.iter_mut() {
            if t.iter().any(|v| *v >= vertices.len()) {
                return Err(Error::InvalidMesh("triangle index out of range".into()));
            }
            if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
                t.swap(1, 2);
            }
        }
        Self::assemble(shape, h, vertices, triangles, boundary)
    }

    fn assemble(
        shape: Shape,
        h: f64,
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut shape_grads = Vec::with_capacity(triangles.len());
        let mut lumped_mass = vec![0.0; vertices.len()];
        for (k, t) in triangles.iter().enumerate() {
            let [a, b, c] = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let area = signed_area(a, b, c);
            if !(area > 1e-6 * h * h) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {k} has area {area} after boundary projection"
                )));
            }
            areas.push(area);
            centroids.push([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]);
            // ∇λ_i = rot90(opposite edge) / (2·area)
            let g = |p: Point, q: Point| [(p[1] - q[1]) / (2.0 * area), (q[0] - p[0]) / (2.0 * area)];
            shape_grads.push([g(b, c), g(c, a), g(a, b)]);
            for v in t {
                lumped_mass[*v] += area / 3.0;
            }
        }
        let locator = Locator::new(&vertices, &triangles, h);
        Ok(TriangulatedDomain {
            shape,
            h,
            vertices,
            triangles,
            boundary,
            areas,
            centroids,
            shape_grads,
            lumped_mass,
            locator,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn descriptor(&self) -> MeshDescriptor {
        MeshDescriptor {
            shape: self.shape,
            h: self.h,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn centroids(&self) -> &[Point] {
        &self.centroids
    }

    /// Gradients of the three barycentric coordinates on triangle `t`.
    pub fn shape_gradients(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.shape_grads[t]
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }

    pub fn total_area(&self) -> f64 {
        math::tree_sum(&self.areas)
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(move |v| !self.boundary[*v])
    }

    /// Triangle containing `x` with the barycentric coordinates of `x`.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        self.locator.locate(x, &self.vertices, &self.triangles)
    }

    /// Fraction of each triangle's area inside the ball, estimated at the
    /// centroids of a uniform `10 × 10` subdivision. Triangles entirely
    /// inside get exactly 1.
    pub fn ball_weights(&self, ball: &Ball) -> Vec<f64> {
        const N: usize = 10;
        let mut out = Vec::with_capacity(self.triangles.len());
        for t in &self.triangles {
            let p = [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]];
            let inside = p.iter().filter(|v| ball.contains(**v)).count();
            let far = p.iter().all(|v| math::dist(*v, ball.center) > ball.radius + 2.0 * self.h);
            if inside == 3 {
                out.push(1.0);
                continue;
            }
            if far {
                out.push(0.0);
                continue;
            }
            let mut hits = 0usize;
            let mut total = 0usize;
            for i in 0..N {
                for j in 0..N - i {
                    // upward and downward sub-triangle centroids
                    let mut cells = vec![[i as f64 + 1.0 / 3.0, j as f64 + 1.0 / 3.0]];
                    if i + j + 1 < N {
                        cells.push([i as f64 + 2.0 / 3.0, j as f64 + 2.0 / 3.0]);
                    }
                    for c in cells {
                        let (l1, l2) = (c[0] / N as f64, c[1] / N as f64);
                        let l0 = 1.0 - l1 - l2;
                        let x = [
                            l0 * p[0][0] + l1 * p[1][0] + l2 * p[2][0],
                            l0 * p[0][1] + l1 * p[1][1] + l2 * p[2][1],
                        ];
                        total += 1;
                        if ball.contains(x) {
                            hits += 1;
                        }
                    }
                }
            }
            out.push(hits as f64 / total as f64);
        }
        out
    }

    /// Vertices inside the closed ball.
    pub fn vertices_in_ball(&self, ball: &Ball) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|v| ball.contains(self.vertices[*v]))
            .collect()
    }
}

fn compact(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> (Vec<Point>, Vec<[usize; 3]>) {
    let mut used = vec![false; vertices.len()];
    for t in &triangles {
        for v in t {
            used[*v] = true;
        }
    }
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut out = Vec::new();
    for (old, v) in vertices.iter().enumerate() {
        if used[old] {
            remap[old] = out.len();
            out.push(*v);
        }
    }
    let tris = triangles
        .into_iter()
        .map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]])
        .collect();
    (out, tris)
}

fn boundary_from_edges(nv: usize, triangles: &[[usize; 3]]) -> Vec<bool> {
    let mut count: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut boundary = vec![false; nv];
    for ((a, b), c) in count {
        if c == 1 {
            boundary[a] = true;
            boundary[b] = true;
        }
    }
    boundary
}

/// Uniform bucket grid over the mesh bounding box.
#[derive(Clone, Debug)]
struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new(vertices: &[Point], triangles: &[[usize; 3]], h: f64) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let cell = h.max(1e-12);
        let nx = (math::floor((hi[0] - lo[0]) / cell) as usize + 1).max(1);
        let ny = (math::floor((hi[1] - lo[1]) / cell) as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let index = |x: f64, o: f64, n: usize| (math::floor((x - o) / cell).max(0.0) as usize).min(n - 1);
        for (k, t) in triangles.iter().enumerate() {
            let pts = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let bx0 = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let bx1 = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let by0 = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
            let by1 = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
            for i in index(by0, lo[1], ny)..=index(by1, lo[1], ny) {
                for j in index(bx0, lo[0], nx)..=index(bx1, lo[0], nx) {
                    buckets[i * nx + j].push(k);
                }
            }
        }
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn locate(&self, x: Point, vertices: &[Point], triangles: &[[usize; 3]]) -> Option<(usize, [f64; 3])> {
        let fx = math::floor((x[0] - self.origin[0]) / self.cell);
        let fy = math::floor((x[1] - self.origin[1]) / self.cell);
        if fx < -1.0 || fy < -1.0 || fx > self.nx as f64 || fy > self.ny as f64 {
            return None;
        }
        let j = (fx.max(0.0) as usize).min(self.nx - 1);
        let i = (fy.max(0.0) as usize).min(self.ny - 1);
        let mut best: Option<(usize, [f64; 3])> = None;
        let mut best_min = f64::NEG_INFINITY;
        for k in &self.buckets[i * self.nx + j] {
            let t = triangles[*k];
            let [a, b, c] = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let area = signed_area(a, b, c);
            let l0 = signed_area(x, b, c) / area;
            let l1 = signed_area(a, x, c) / area;
            let l2 = 1.0 - l0 - l1;
            let m = l0.min(l1).min(l2);
            if m > best_min {
                best_min = m;
                best = Some((*k, [l0, l1, l2]));
            }
        }
        match best {
            Some(found) if best_min >= -1e-10 => Some(found),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_quality(shape: Shape, h: f64) {
        let d = TriangulatedDomain::build(shape, h).unwrap();
        let defect = (d.total_area() - shape.area()).abs();
        assert!(defect <= 4.0 * h * h, "{shape:?} h={h}: area defect {defect}");
        for (v, b) in d.vertices().iter().zip(d.boundary_mask()) {
            if *b {
                assert!(shape.signed_distance(*v).abs() <= h * h, "{v:?}");
            }
        }
    }

    #[test]
    fn square_mesh_counts() {
        let d = TriangulatedDomain::build(Shape::unit_square(), 0.25).unwrap();
        assert_eq!(d.num_vertices(), 25 + 16);
        assert_eq!(d.num_triangles(), 64);
        assert_eq!(d.boundary_mask().iter().filter(|b| **b).count(), 16);
        assert!((d.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn curved_meshes_are_valid() {
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            check_quality(Shape::unit_disk(), h);
            check_quality(
                Shape::Annulus {
                    center: [0.0, 0.0],
                    inner: 0.25,
                    outer: 1.0,
                },
                h,
            );
        }
    }

    #[test]
    fn locate_recovers_barycentric_coordinates() {
        let d = TriangulatedDomain::build(Shape::unit_disk(), 0.1).unwrap();
        for x in [[0.0, 0.0], [0.31, -0.42], [-0.7, 0.1]] {
            let (t, l) = d.locate(x).unwrap();
            let tri = d.triangles()[t];
            let mut y = [0.0; 2];
            for k in 0..3 {
                y[0] += l[k] * d.vertices()[tri[k]][0];
                y[1] += l[k] * d.vertices()[tri[k]][1];
            }
            assert!(math::dist(x, y) < 1e-12);
        }
        assert!(d.locate([3.0, 3.0]).is_none());
    }

    #[test]
    fn ball_weights_integrate_ball_area() {
        let d = TriangulatedDomain::build(Shape::unit_square(), 1.0 / 32.0).unwrap();
        let ball = Ball::new([0.5, 0.5], 0.3);
        let w = d.ball_weights(&ball);
        let area: f64 = w.iter().zip(d.areas()).map(|(w, a)| w * a).sum();
        assert!((area - ball.area()).abs() < 2e-3 * ball.area(), "{area}");
    }
}
