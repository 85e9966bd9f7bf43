//! Triangulated surfaces, parametric generators and RWG basis enumeration.
//!
//! Each RWG function lives on one interior edge and the two triangles that
//! share it; its index is the MoM "port" the loads attach to. Bases are
//! ordered by the sorted vertex pair of their edge so that matrix files are
//! reproducible.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::consts::C0;
use crate::{Error, Result};

pub type Point = Vector3<f64>;

/// An undirected edge keyed by its sorted vertex pair.
pub type EdgeKey = (usize, usize);

fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSlot {
    pub triangle: usize,
    /// Local index (0..3) of the triangle vertex opposite this edge.
    pub free_local: usize,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    normals: Vec<Point>,
    edges: BTreeMap<EdgeKey, Vec<EdgeSlot>>,
}

impl Mesh {
    /// Build and validate a mesh.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut areas = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        let mut seen: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        let mut edges: BTreeMap<EdgeKey, Vec<EdgeSlot>> = BTreeMap::new();

        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::invalid(format!(
                    "triangle {t} references vertex {v}, mesh has {nv}"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    area: 0.0,
                });
            }
            let mut sorted = *tri;
            sorted.sort_unstable();
            if let Some(&first) = seen.get(&sorted) {
                return Err(Error::NonManifold {
                    triangle: t,
                    msg: format!("repeats triangle {first}"),
                });
            }
            seen.insert(sorted, t);

            let [a, b, c] = tri.map(|i| vertices[i]);
            let cr = (b - a).cross(&(c - a));
            let area = 0.5 * cr.norm();
            let longest = (b - a).norm().max((c - b).norm()).max((a - c).norm());
            if !(area > 1e-12 * longest * longest) {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
            areas.push(area);
            normals.push(cr / (2.0 * area));

            for local in 0..3 {
                let key = edge_key(tri[(local + 1) % 3], tri[(local + 2) % 3]);
                let slots = edges.entry(key).or_default();
                slots.push(EdgeSlot {
                    triangle: t,
                    free_local: local,
                });
                if slots.len() > 2 {
                    return Err(Error::NonManifold {
                        triangle: t,
                        msg: format!(
                            "edge ({}, {}) shared by more than two triangles",
                            key.0, key.1
                        ),
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            triangles,
            areas,
            normals,
            edges,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn normal(&self, t: usize) -> Point {
        self.normals[t]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_vertices(t);
        (a + b + c) / 3.0
    }

    pub fn edges(&self) -> &BTreeMap<EdgeKey, Vec<EdgeSlot>> {
        &self.edges
    }

    pub fn interior_edge_count(&self) -> usize {
        self.edges.values().filter(|s| s.len() == 2).count()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edges.values().filter(|s| s.len() == 1).count()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Serialize in the plain-text mesh format read by [`load_mesh`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            s.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
        }
        for t in &self.triangles {
            s.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        s
    }
}

/// Parse the plain-text mesh format: a `V T` header line, `V` vertex lines
/// `x y z` in meters, then `T` lines of zero-based vertex indices.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let perr = |line: usize, msg: &str| Error::MeshParse {
        line,
        msg: msg.to_string(),
    };

    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| perr(hl, "header must be two integers `V T`"))?;
    let [nv, nt] = counts[..] else {
        return Err(perr(hl, "header must be two integers `V T`"));
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(hl, "unexpected end of file in vertices"))?;
        let xyz: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(ln, "vertex line must be `x y z`"))?;
        match xyz[..] {
            [x, y, z] if x.is_finite() && y.is_finite() && z.is_finite() => {
                vertices.push(Point::new(x, y, z))
            }
            _ => return Err(perr(ln, "vertex line must be three finite numbers")),
        }
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| perr(hl, "unexpected end of file in triangles"))?;
        let ijk: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(ln, "triangle line must be `i j k`"))?;
        match ijk[..] {
            [i, j, k] => triangles.push([i, j, k]),
            _ => return Err(perr(ln, "triangle line must be three indices")),
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing content after triangles"));
    }
    Mesh::new(vertices, triangles)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_mesh(&fs::read_to_string(path)?)
}

/// A generated mesh plus named edges useful as load or feed ports.
#[derive(Clone, Debug)]
pub struct GeneratedMesh {
    pub mesh: Mesh,
    pub ports: BTreeMap<String, EdgeKey>,
}

/// Structured plate in the z = 0 plane centred at the origin, length along x.
///
/// Each of the `nx × ny` cells is split along its rising diagonal. Named
/// ports `xmid{j}` are the edges on x = 0 (present when `nx` is even).
pub fn gen_plate(length: f64, width: f64, nx: usize, ny: usize) -> Result<GeneratedMesh> {
    if !(length > 0.0 && width > 0.0) || nx == 0 || ny == 0 {
        return Err(Error::invalid(
            "plate needs length, width > 0 and nx, ny >= 1",
        ));
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(
                -0.5 * length + length * i as f64 / nx as f64,
                -0.5 * width + width * j as f64 / ny as f64,
                0.0,
            ));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut ports = BTreeMap::new();
    if nx % 2 == 0 {
        for j in 0..ny {
            ports.insert(
                format!("xmid{j}"),
                edge_key(idx(nx / 2, j), idx(nx / 2, j + 1)),
            );
        }
    }
    Ok(GeneratedMesh {
        mesh: Mesh::new(vertices, triangles)?,
        ports,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BowtieParams {
    /// Tip-to-tip length (m).
    pub length: f64,
    /// Angle between the two arms (degrees); each fin opens by `180 - flare`.
    pub flare_angle_deg: f64,
    /// Mesh density in edges per wavelength at `ref_freq_hz`.
    pub edges_per_wavelength: f64,
    pub ref_freq_hz: f64,
    /// Width of the single central edge joining the fins (m). Defaults to the
    /// target edge length.
    pub feed_width: Option<f64>,
}

/// Bowtie in the x = 0 plane with its long axis along z. Two trapezoidal fins
/// meet at one central edge, exposed as port `center`.
pub fn gen_bowtie(p: &BowtieParams) -> Result<GeneratedMesh> {
    if !(p.flare_angle_deg > 0.0 && p.flare_angle_deg < 180.0) {
        return Err(Error::invalid(format!(
            "bowtie flare angle must lie in (0, 180) degrees, got {}",
            p.flare_angle_deg
        )));
    }
    if !(p.length > 0.0 && p.edges_per_wavelength > 0.0 && p.ref_freq_hz > 0.0) {
        return Err(Error::invalid(
            "bowtie needs positive length, density and reference frequency",
        ));
    }
    let h = C0 / p.ref_freq_hz / p.edges_per_wavelength;
    let half = 0.5 * p.length;
    if h > half {
        return Err(Error::invalid(format!(
            "bowtie density too low to form a center edge: edge length {h:e} m exceeds fin length {half:e} m"
        )));
    }
    let feed = p.feed_width.unwrap_or(h);
    if !(feed > 0.0) {
        return Err(Error::invalid("bowtie feed width must be positive"));
    }
    let tan_b = ((180.0 - p.flare_angle_deg) * 0.5).to_radians().tan();
    let nz = (half / h).ceil().max(1.0) as usize;

    let mut vertices: Vec<Point> = Vec::new();
    let row = |vertices: &mut Vec<Point>, z: f64, m: usize| -> Vec<usize> {
        let hw = 0.5 * feed + z.abs() * tan_b;
        (0..=m)
            .map(|i| {
                vertices.push(Point::new(0.0, -hw + 2.0 * hw * i as f64 / m as f64, z));
                vertices.len() - 1
            })
            .collect()
    };
    let center = row(&mut vertices, 0.0, 1);
    let mut triangles = Vec::new();
    for sign in [1.0, -1.0] {
        let mut below = center.clone();
        for j in 1..=nz {
            let z = half * j as f64 / nz as f64;
            let hw = 0.5 * feed + z * tan_b;
            let m = ((2.0 * hw / h).round() as usize).max(1);
            let above = row(&mut vertices, sign * z, m);
            for mut t in zip_rows(&below, &above) {
                if sign < 0.0 {
                    t.swap(1, 2);
                }
                triangles.push(t);
            }
            below = above;
        }
    }
    let mut ports = BTreeMap::new();
    ports.insert("center".to_string(), edge_key(center[0], center[1]));
    Ok(GeneratedMesh {
        mesh: Mesh::new(vertices, triangles)?,
        ports,
    })
}

/// Triangulate the band between two monotone vertex rows spanning the same
/// parameter range, `lower` below `upper`, counter-clockwise in (y, z).
fn zip_rows(lower: &[usize], upper: &[usize]) -> Vec<[usize; 3]> {
    let (a, b) = (lower.len() - 1, upper.len() - 1);
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a + b);
    while i < a || j < b {
        let advance_lower =
            j == b || (i < a && (i + 1) as f64 / a as f64 <= (j + 1) as f64 / b as f64);
        if advance_lower {
            out.push([lower[i], lower[i + 1], upper[j]]);
            i += 1;
        } else {
            out.push([lower[i], upper[j + 1], upper[j]]);
            j += 1;
        }
    }
    out
}

/// Closed square strip loop in the z = 0 plane, centreline side `side`,
/// strip width `4 · wire_radius` (equivalent-radius rule).
///
/// Every side is cut into `segments_per_side` cells. Transverse edges are named
/// `station{i}` in counter-clockwise order starting at corner (−a, −a); the
/// midside ones are also named `mid0`..`mid3`.
pub fn gen_strip_loop(
    side: f64,
    wire_radius: f64,
    segments_per_side: usize,
) -> Result<GeneratedMesh> {
    let w = 4.0 * wire_radius;
    if !(wire_radius > 0.0 && side > w) {
        return Err(Error::invalid(
            "strip loop needs side > 4 * wire_radius > 0",
        ));
    }
    let n = segments_per_side;
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "strip loop needs an even number (>= 2) of segments per side to host midside ports, got {n}"
        )));
    }
    let a_in = 0.5 * (side - w);
    let a_out = 0.5 * (side + w);
    let corners = |a: f64| [(-a, -a), (a, -a), (a, a), (-a, a)];
    let (ci, co) = (corners(a_in), corners(a_out));
    let stations = 4 * n;
    let mut vertices = Vec::with_capacity(2 * stations);
    for s in 0..stations {
        let (k, f) = (s / n, (s % n) as f64 / n as f64);
        let lerp = |c: &[(f64, f64); 4]| {
            let (p, q) = (c[k], c[(k + 1) % 4]);
            Point::new(p.0 + f * (q.0 - p.0), p.1 + f * (q.1 - p.1), 0.0)
        };
        vertices.push(lerp(&ci));
        vertices.push(lerp(&co));
    }
    let inner = |s: usize| 2 * (s % stations);
    let outer = |s: usize| 2 * (s % stations) + 1;
    let mut triangles = Vec::with_capacity(2 * stations);
    for s in 0..stations {
        triangles.push([inner(s), outer(s), outer(s + 1)]);
        triangles.push([inner(s), outer(s + 1), inner(s + 1)]);
    }
    let mut ports = BTreeMap::new();
    for s in 0..stations {
        ports.insert(format!("station{s}"), edge_key(inner(s), outer(s)));
    }
    for k in 0..4 {
        let s = k * n + n / 2;
        ports.insert(format!("mid{k}"), edge_key(inner(s), outer(s)));
    }
    Ok(GeneratedMesh {
        mesh: Mesh::new(vertices, triangles)?,
        ports,
    })
}

/// One half of an RWG function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Half {
    pub triangle: usize,
    /// Local index of the free vertex (opposite the shared edge).
    pub free_local: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rwg {
    pub edge: EdgeKey,
    pub plus: Half,
    pub minus: Half,
    pub length: f64,
}

/// Support of a basis on one triangle: `ψ = sign · l / (2A) · (r − v_free)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleSupport {
    pub basis: usize,
    pub sign: f64,
    pub free_local: usize,
}

#[derive(Clone, Debug)]
pub struct BasisSet {
    mesh: Mesh,
    functions: Vec<Rwg>,
    by_triangle: Vec<Vec<TriangleSupport>>,
    index: BTreeMap<EdgeKey, usize>,
}

impl BasisSet {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[Rwg] {
        &self.functions
    }

    pub fn get(&self, i: usize) -> &Rwg {
        &self.functions[i]
    }

    /// Bases with support on triangle `t`.
    pub fn on_triangle(&self, t: usize) -> &[TriangleSupport] {
        &self.by_triangle[t]
    }

    /// Basis index of the interior edge `(a, b)`, in either vertex order.
    pub fn index_of_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&edge_key(a, b)).copied()
    }
}

/// One RWG function per interior edge, ordered by sorted edge vertex pair.
/// The plus half is the lower-numbered triangle.
pub fn build_basis(mesh: Mesh) -> BasisSet {
    let mut functions = Vec::new();
    let mut index = BTreeMap::new();
    for (&key, slots) in mesh.edges() {
        if let [s0, s1] = slots[..] {
            let (p, m) = if s0.triangle < s1.triangle {
                (s0, s1)
            } else {
                (s1, s0)
            };
            let length = (mesh.vertices[key.0] - mesh.vertices[key.1]).norm();
            index.insert(key, functions.len());
            functions.push(Rwg {
                edge: key,
                plus: Half {
                    triangle: p.triangle,
                    free_local: p.free_local,
                },
                minus: Half {
                    triangle: m.triangle,
                    free_local: m.free_local,
                },
                length,
            });
        }
    }
    let mut by_triangle = vec![Vec::new(); mesh.triangles.len()];
    for (n, f) in functions.iter().enumerate() {
        by_triangle[f.plus.triangle].push(TriangleSupport {
            basis: n,
            sign: 1.0,
            free_local: f.plus.free_local,
        });
        by_triangle[f.minus.triangle].push(TriangleSupport {
            basis: n,
            sign: -1.0,
            free_local: f.minus.free_local,
        });
    }
    BasisSet {
        mesh,
        functions,
        by_triangle,
        index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_census(m: &Mesh) -> (usize, usize, usize) {
        let mut count: BTreeMap<EdgeKey, usize> = BTreeMap::new();
        for t in m.triangles() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *count.entry(edge_key(a, b)).or_insert(0) += 1;
            }
        }
        let interior = count.values().filter(|&&c| c == 2).count();
        let boundary = count.values().filter(|&&c| c == 1).count();
        (count.len(), interior, boundary)
    }

    const ONE: &str = "3 1\n0 0 0\n1 0 0\n0 1 0\n0 1 2\n";
    const TWO: &str = "4 2\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n0 1 2\n0 2 3\n";

    #[test]
    fn single_triangle() {
        let m = parse_mesh(ONE).unwrap();
        assert_eq!(m.vertices().len(), 3);
        assert_eq!(m.triangles().len(), 1);
        assert_eq!(m.interior_edge_count(), 0);
        assert!(build_basis(m).is_empty());
    }

    #[test]
    fn two_triangles_share_one_edge() {
        let m = parse_mesh(TWO).unwrap();
        assert_eq!(m.interior_edge_count(), 1);
        let b = build_basis(m);
        assert_eq!(b.len(), 1);
        assert_eq!(b.get(0).edge, (0, 2));
        assert!((b.get(0).length - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn repeated_triangle_is_non_manifold() {
        let text = "3 2\n0 0 0\n1 0 0\n0 1 0\n0 1 2\n2 1 0\n";
        let err = parse_mesh(text).unwrap_err();
        assert!(err.to_string().contains("non-manifold"), "{err}");
        assert!(matches!(err, Error::NonManifold { triangle: 1, .. }));
    }

    #[test]
    fn three_triangles_on_one_edge_is_non_manifold() {
        let text = "5 3\n0 0 0\n1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 1 2\n1 0 3\n0 1 4\n";
        assert!(matches!(
            parse_mesh(text),
            Err(Error::NonManifold { triangle: 2, .. })
        ));
    }

    #[test]
    fn degenerate_and_parse_errors_carry_location() {
        let flat = "3 1\n0 0 0\n1 0 0\n2 0 0\n0 1 2\n";
        assert!(matches!(
            parse_mesh(flat),
            Err(Error::DegenerateTriangle { triangle: 0, .. })
        ));
        let bad = "3 1\n0 0 0\n1 x 0\n0 1 0\n0 1 2\n";
        assert!(matches!(
            parse_mesh(bad),
            Err(Error::MeshParse { line: 3, .. })
        ));
        let short = "3 1\n0 0 0\n1 0 0\n";
        assert!(matches!(parse_mesh(short), Err(Error::MeshParse { .. })));
    }

    #[test]
    fn text_round_trip() {
        let g = gen_plate(2.0, 1.0, 3, 2).unwrap();
        let m2 = parse_mesh(&g.mesh.to_text()).unwrap();
        assert_eq!(m2.triangles(), g.mesh.triangles());
        assert_eq!(m2.vertices(), g.mesh.vertices());
    }

    #[test]
    fn plate_2_by_1_census() {
        let a = 0.3;
        let m = gen_plate(2.0 * a, a, 2, 1).unwrap().mesh;
        assert_eq!(m.triangles().len(), 4);
        let (total, interior, boundary) = brute_force_census(&m);
        assert_eq!((total, interior, boundary), (9, 3, 6));
        assert_eq!(m.interior_edge_count(), interior);
        assert_eq!(build_basis(m).len(), 3);
    }

    #[test]
    fn unit_plate() {
        let m = gen_plate(1.0, 1.0, 1, 1).unwrap().mesh;
        assert_eq!(m.triangles().len(), 2);
        assert_eq!(m.interior_edge_count(), 1);
    }

    #[test]
    fn plate_normals_point_up() {
        let m = gen_plate(2.0, 1.0, 4, 2).unwrap().mesh;
        for t in 0..m.triangles().len() {
            assert!((m.normal(t).z - 1.0).abs() < 1e-15);
        }
    }

    fn bowtie() -> BowtieParams {
        BowtieParams {
            length: 0.036,
            flare_angle_deg: 155.0,
            edges_per_wavelength: 66.0,
            ref_freq_hz: 3e9,
            feed_width: None,
        }
    }

    #[test]
    fn bowtie_geometry() {
        let g = gen_bowtie(&bowtie()).unwrap();
        let (lo, hi) = g.mesh.bounding_box();
        let ext = hi - lo;
        assert!((ext.z - 0.036).abs() < 1e-12);
        assert!(ext.y < ext.z && ext.x == 0.0);
        let (a, b) = g.ports["center"];
        let basis = build_basis(g.mesh);
        assert!(basis.index_of_edge(a, b).is_some());
    }

    #[test]
    fn bowtie_rejects_straight_flare() {
        let mut p = bowtie();
        p.flare_angle_deg = 180.0;
        assert!(gen_bowtie(&p).is_err());
    }

    #[test]
    fn bowtie_minimal_density() {
        let mut p = bowtie();
        // target edge exactly the fin length: one row per fin
        p.edges_per_wavelength = C0 / 3e9 / 0.018 * 1.0001;
        let g = gen_bowtie(&p).unwrap();
        let m = &g.mesh;
        let upper = (0..m.triangles().len())
            .filter(|&t| m.centroid(t).z > 0.0)
            .count();
        let lower = m.triangles().len() - upper;
        assert!(upper >= 2 && lower >= 2, "{upper} {lower}");
        let (a, b) = g.ports["center"];
        assert!(build_basis(g.mesh).index_of_edge(a, b).is_some());
        p.edges_per_wavelength *= 0.9;
        assert!(gen_bowtie(&p).is_err());
    }

    #[test]
    fn bowtie_normals_consistent() {
        let m = gen_bowtie(&bowtie()).unwrap().mesh;
        for t in 0..m.triangles().len() {
            assert!((m.normal(t).x - 1.0).abs() < 1e-12, "triangle {t}");
        }
    }

    #[test]
    fn strip_loop() {
        let g = gen_strip_loop(0.0828, 0.001, 8).unwrap();
        let m = &g.mesh;
        let (lo, hi) = m.bounding_box();
        assert!(((hi - lo).x - (0.0828 + 0.004)).abs() < 1e-12);
        let (total, interior, boundary) = brute_force_census(m);
        assert_eq!(boundary, 2 * 32);
        assert_eq!(interior, total - boundary);
        // the closing seam (station 0) is a transverse interior edge
        let seam = g.ports["station0"];
        assert_eq!(m.edges()[&seam].len(), 2);
        let basis = build_basis(g.mesh.clone());
        assert_eq!(basis.len(), interior);
        for k in 0..4 {
            let (a, b) = g.ports[&format!("mid{k}")];
            assert!(basis.index_of_edge(a, b).is_some());
        }
        // strip width
        let (a, b) = g.ports["mid0"];
        let w = (m.vertices()[a] - m.vertices()[b]).norm();
        assert!((w - 0.004).abs() < 1e-15);
    }

    #[test]
    fn strip_loop_rejects_bad_input() {
        assert!(gen_strip_loop(0.0828, 0.001, 1).is_err());
        assert!(gen_strip_loop(0.0828, 0.001, 3).is_err());
        assert!(gen_strip_loop(0.004, 0.001, 4).is_err());
    }

    #[test]
    fn basis_is_deterministic() {
        let text = gen_bowtie(&bowtie()).unwrap().mesh.to_text();
        let b1 = build_basis(parse_mesh(&text).unwrap());
        let b2 = build_basis(parse_mesh(&text).unwrap());
        assert_eq!(b1.functions(), b2.functions());
        let keys: Vec<_> = b1.functions().iter().map(|f| f.edge).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    fn check_census(m: &Mesh) {
        let (total, interior, boundary) = brute_force_census(m);
        assert_eq!(total, interior + boundary);
        assert_eq!(2 * interior + boundary, 3 * m.triangles().len());
        assert_eq!(m.interior_edge_count(), interior);
        assert_eq!(m.boundary_edge_count(), boundary);
    }

    proptest! {
        #[test]
        fn plate_census_and_area(l in 0.1f64..5.0, w in 0.1f64..5.0, nx in 1usize..9, ny in 1usize..9) {
            let m = gen_plate(l, w, nx, ny).unwrap().mesh;
            check_census(&m);
            prop_assert_eq!(m.triangles().len(), 2 * nx * ny);
            prop_assert_eq!(m.interior_edge_count(), 3 * nx * ny - nx - ny);
            prop_assert!((m.total_area() - l * w).abs() <= 1e-12 * l * w);
            let (lo, hi) = m.bounding_box();
            prop_assert!(((hi - lo).x / (hi - lo).y - l / w).abs() < 1e-12 * l / w);
        }

        #[test]
        fn bowtie_census(flare in 60.0f64..175.0, density in 10.0f64..80.0) {
            let p = BowtieParams { flare_angle_deg: flare, edges_per_wavelength: density, ..bowtie() };
            let g = gen_bowtie(&p).unwrap();
            check_census(&g.mesh);
        }

        #[test]
        fn loop_census(half_n in 1usize..8, r in 0.0005f64..0.003) {
            let g = gen_strip_loop(0.0828, r, 2 * half_n).unwrap();
            check_census(&g.mesh);
        }
    }
}
