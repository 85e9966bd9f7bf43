//! Single-frequency EFIE operators on an RWG basis.
//!
//! Mixed-potential Galerkin impedance matrix with `e^{+jωt}` time dependence,
//!
//! `Z_mn = jωμ ∬ ψ_m·ψ_n G + (1/(jωε)) ∬ (∇·ψ_m)(∇'·ψ_n) G`,
//! `G = e^{-jkR} / (4πR)`.
//!
//! Near triangle pairs split `G` into `1/(4πR)`, integrated in closed form over
//! the source triangle, plus a bounded remainder handled by 7-point quadrature.
//! Far pairs use a 3-point rule (configurable).

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::Mat;

use crate::consts::{wavenumber, EPS0, ETA0, MU0};
use crate::exec;
use crate::linalg::{CMat, RMat};
use crate::mesh::{BasisSet, Point};
use crate::{Error, Result, C64};

const J: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Symmetric triangle rule in barycentric coordinates; weights sum to one.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Degree-2, 3 points.
    pub fn degree2() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
        }
    }

    /// Degree-5, 7 points (Dunavant).
    pub fn degree5() -> Self {
        let t = 1.0 / 3.0;
        let (a1, b1, w1) = (
            0.059_715_871_789_770,
            0.470_142_064_105_115,
            0.132_394_152_788_506,
        );
        let (a2, b2, w2) = (
            0.797_426_985_353_087,
            0.101_286_507_323_456,
            0.125_939_180_544_827,
        );
        Self {
            points: vec![
                [t, t, t],
                [a1, b1, b1],
                [b1, a1, b1],
                [b1, b1, a1],
                [a2, b2, b2],
                [b2, a2, b2],
                [b2, b2, a2],
            ],
            weights: vec![0.225, w1, w1, w1, w2, w2, w2],
        }
    }

    pub fn by_points(n: usize) -> Result<Self> {
        match n {
            3 => Ok(Self::degree2()),
            7 => Ok(Self::degree5()),
            _ => Err(Error::invalid(format!(
                "no {n}-point triangle rule; use 3 or 7"
            ))),
        }
    }
}

/// Quadrature and near-field settings for [`assemble_z`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfieOptions {
    /// Pairs whose centroid distance is below `near_factor × max diameter`
    /// get singularity extraction and the 7-point rule.
    pub near_factor: f64,
    /// Points per triangle for far pairs (3 or 7).
    pub far_points: usize,
}

impl Default for EfieOptions {
    fn default() -> Self {
        Self {
            near_factor: 3.0,
            far_points: 3,
        }
    }
}

/// Per-triangle geometry and quadrature nodes.
#[derive(Clone, Debug)]
struct TriGeom {
    v: [Point; 3],
    area: f64,
    normal: Point,
    centroid: Point,
    diameter: f64,
    near_pts: Vec<Point>,
    near_w: Vec<f64>,
    far_pts: Vec<Point>,
    far_w: Vec<f64>,
}

impl TriGeom {
    fn new(
        v: [Point; 3],
        area: f64,
        normal: Point,
        near: &TriangleRule,
        far: &TriangleRule,
    ) -> Self {
        let nodes = |r: &TriangleRule| -> (Vec<Point>, Vec<f64>) {
            let pts = r
                .points
                .iter()
                .map(|b| v[0] * b[0] + v[1] * b[1] + v[2] * b[2])
                .collect();
            let w = r.weights.iter().map(|w| w * area).collect();
            (pts, w)
        };
        let (near_pts, near_w) = nodes(near);
        let (far_pts, far_w) = nodes(far);
        let diameter = (v[1] - v[0])
            .norm()
            .max((v[2] - v[1]).norm())
            .max((v[0] - v[2]).norm());
        Self {
            v,
            area,
            normal,
            centroid: (v[0] + v[1] + v[2]) / 3.0,
            diameter,
            near_pts,
            near_w,
            far_pts,
            far_w,
        }
    }
}

fn geometry(basis: &BasisSet, far_points: usize) -> Result<Vec<TriGeom>> {
    let mesh = basis.mesh();
    let near = TriangleRule::degree5();
    let far = TriangleRule::by_points(far_points)?;
    Ok((0..mesh.triangles().len())
        .map(|t| {
            TriGeom::new(
                mesh.triangle_vertices(t),
                mesh.area(t),
                mesh.normal(t),
                &near,
                &far,
            )
        })
        .collect())
}

/// Closed-form `∫_T 1/R dS'` and `∫_T (r' − ρ)/R dS'` for observation point
/// `r`, where `ρ` is the projection of `r` onto the plane of `T`.
///
/// Vertices are taken counter-clockwise about `normal`.
pub fn potential_integrals(v: &[Point; 3], normal: &Point, r: &Point) -> (f64, Point) {
    let d = normal.dot(&(r - v[0]));
    let rho = r - normal * d;
    let ad = d.abs();
    let scale = (v[1] - v[0])
        .norm()
        .max((v[2] - v[1]).norm())
        .max((v[0] - v[2]).norm());
    let tiny = 1e-14 * scale;

    let mut scalar = 0.0;
    let mut vector = Point::zeros();
    for i in 0..3 {
        let a = v[i];
        let b = v[(i + 1) % 3];
        let len = (b - a).norm();
        let lhat = (b - a) / len;
        let uhat = lhat.cross(normal);
        let lp = (b - rho).dot(&lhat);
        let lm = (a - rho).dot(&lhat);
        let t = (a - rho).dot(&uhat);
        let r0sq = t * t + d * d;
        let rp = (r0sq + lp * lp).sqrt();
        let rm = (r0sq + lm * lm).sqrt();
        let log = if r0sq.sqrt() > tiny {
            if lp + lm >= 0.0 {
                ((rp + lp) / (rm + lm)).ln()
            } else {
                ((rm - lm) / (rp - lp)).ln()
            }
        } else {
            0.0
        };
        if t.abs() > tiny {
            scalar += t * log;
            if ad > tiny {
                scalar -=
                    ad * ((t * lp / (r0sq + ad * rp)).atan() - (t * lm / (r0sq + ad * rm)).atan());
            }
        }
        vector += uhat * (0.5 * (r0sq * log + lp * rp - lm * rm));
    }
    (scalar, vector)
}

/// `(e^{-jkR} − 1) / (4πR)` without cancellation near `R = 0`.
fn smooth_green(k: f64, r: f64) -> C64 {
    let x = k * r;
    if x < 1e-8 {
        return C64::new(-0.5 * k * x, -k) / (4.0 * PI);
    }
    let s = (0.5 * x).sin();
    C64::new(-2.0 * s * s, -x.sin()) * (k / (4.0 * PI * x))
}

fn green(k: f64, r: f64) -> C64 {
    C64::from_polar(1.0 / (4.0 * PI * r), -k * r)
}

/// Triangle-pair integrals with local free-vertex offsets:
/// `a[i][j] = ∬ (r − v_i)·(r' − v'_j) G`, `s = ∬ G`.
#[derive(Clone, Copy, Debug)]
struct PairTerms {
    a: [[C64; 3]; 3],
    s: C64,
}

fn far_pair(p: &TriGeom, q: &TriGeom, k: f64) -> PairTerms {
    // centroid-relative moments keep the expansion well conditioned
    let mut s0 = ZERO;
    let mut sx = [ZERO; 3];
    let mut sy = [ZERO; 3];
    let mut sxy = ZERO;
    for (ra, wa) in p.far_pts.iter().zip(&p.far_w) {
        let x = ra - p.centroid;
        for (rb, wb) in q.far_pts.iter().zip(&q.far_w) {
            let y = rb - q.centroid;
            let g = green(k, (ra - rb).norm()) * (wa * wb);
            s0 += g;
            for c in 0..3 {
                sx[c] += g * x[c];
                sy[c] += g * y[c];
            }
            sxy += g * x.dot(&y);
        }
    }
    let mut a = [[ZERO; 3]; 3];
    for (i, ai) in a.iter_mut().enumerate() {
        let di = p.v[i] - p.centroid;
        for (j, aij) in ai.iter_mut().enumerate() {
            let ej = q.v[j] - q.centroid;
            let dsy: C64 = (0..3).map(|c| sy[c] * di[c]).sum();
            let esx: C64 = (0..3).map(|c| sx[c] * ej[c]).sum();
            *aij = sxy - dsy - esx + s0 * di.dot(&ej);
        }
    }
    PairTerms { a, s: s0 }
}

fn near_pair(p: &TriGeom, q: &TriGeom, k: f64) -> PairTerms {
    let mut a = [[ZERO; 3]; 3];
    let mut s = ZERO;
    let inv4pi = 1.0 / (4.0 * PI);
    for (ra, wa) in p.near_pts.iter().zip(&p.near_w) {
        let (i1, ivec) = potential_integrals(&q.v, &q.normal, ra);
        let rho = ra - q.normal * q.normal.dot(&(ra - q.v[0]));
        // ∫ g_s (r' − o) with o = q centroid, then shift to each vertex
        let mut gs0 = ZERO;
        let mut gs1 = [ZERO; 3];
        for (rb, wb) in q.near_pts.iter().zip(&q.near_w) {
            let g = smooth_green(k, (ra - rb).norm()) * *wb;
            gs0 += g;
            let y = rb - q.centroid;
            for c in 0..3 {
                gs1[c] += g * y[c];
            }
        }
        let inner_s = gs0 + C64::new(i1 * inv4pi, 0.0);
        s += inner_s * *wa;
        for j in 0..3 {
            let off = q.centroid - q.v[j];
            let shift = rho - q.v[j];
            let mut inner = [ZERO; 3];
            for c in 0..3 {
                inner[c] =
                    gs1[c] + gs0 * off[c] + C64::new((ivec[c] + shift[c] * i1) * inv4pi, 0.0);
            }
            for (i, ai) in a.iter_mut().enumerate() {
                let x = ra - p.v[i];
                ai[j] += (inner[0] * x[0] + inner[1] * x[1] + inner[2] * x[2]) * *wa;
            }
        }
    }
    PairTerms { a, s }
}

/// Dense impedance matrix at angular frequency `omega`.
#[derive(Clone, Debug)]
pub struct ImpedanceMatrix {
    pub omega: f64,
    pub z: CMat,
}

impl ImpedanceMatrix {
    pub fn dim(&self) -> usize {
        self.z.nrows()
    }
}

pub fn assemble_z(basis: &BasisSet, omega: f64) -> Result<ImpedanceMatrix> {
    assemble_z_with(basis, omega, &EfieOptions::default())
}

pub fn assemble_z_with(
    basis: &BasisSet,
    omega: f64,
    opts: &EfieOptions,
) -> Result<ImpedanceMatrix> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!(
            "EFIE frequency must be positive, got ω = {omega}"
        )));
    }
    let geo = geometry(basis, opts.far_points)?;
    let nt = geo.len();
    let k = wavenumber(omega);

    let rows: Vec<Vec<PairTerms>> = exec::map_indexed(nt, |p| {
        (p..nt)
            .map(|q| {
                let (gp, gq) = (&geo[p], &geo[q]);
                let dist = (gp.centroid - gq.centroid).norm();
                let mut t = if dist < opts.near_factor * gp.diameter.max(gq.diameter) {
                    near_pair(gp, gq, k)
                } else {
                    far_pair(gp, gq, k)
                };
                if p == q {
                    for i in 0..3 {
                        for j in 0..i {
                            let m = (t.a[i][j] + t.a[j][i]) * 0.5;
                            t.a[i][j] = m;
                            t.a[j][i] = m;
                        }
                    }
                }
                t
            })
            .collect()
    });

    let n = basis.len();
    let vec_coef = J * omega * MU0;
    let sca_coef = C64::new(1.0, 0.0) / (J * omega * EPS0);
    let mut z: CMat = Mat::zeros(n, n);
    for p in 0..nt {
        for q in p..nt {
            let t = &rows[p][q - p];
            let inv_area = 1.0 / (geo[p].area * geo[q].area);
            for sm in basis.on_triangle(p) {
                let lm = basis.get(sm.basis).length;
                for sn in basis.on_triangle(q) {
                    let ln = basis.get(sn.basis).length;
                    let c = sm.sign * sn.sign * lm * ln * inv_area;
                    let v = vec_coef * t.a[sm.free_local][sn.free_local] * (0.25 * c)
                        + sca_coef * t.s * c;
                    z[(sm.basis, sn.basis)] += v;
                    if p != q {
                        z[(sn.basis, sm.basis)] += v;
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            let m = (z[(i, j)] + z[(j, i)]) * 0.5;
            z[(i, j)] = m;
            z[(j, i)] = m;
        }
    }
    for j in 0..n {
        for i in 0..n {
            let v = z[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(ImpedanceMatrix { omega, z })
}

/// Real symmetric basis overlap matrix `∫ ψ_α·ψ_β dS`.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub g: RMat,
}

/// 2×2 tensor in a triangle's local `(u, v)` frame, `u` along its first edge
/// and `v = n × u`.
pub type SurfaceTensor = [[f64; 2]; 2];

/// Local `(u, v)` frame of triangle `t`.
pub fn local_frame(basis: &BasisSet, t: usize) -> (Point, Point) {
    let mesh = basis.mesh();
    let v = mesh.triangle_vertices(t);
    let u = (v[1] - v[0]).normalize();
    (u, mesh.normal(t).cross(&u))
}

pub fn assemble_gram(basis: &BasisSet) -> GramMatrix {
    let identity = vec![[[1.0, 0.0], [0.0, 1.0]]; basis.mesh().triangles().len()];
    GramMatrix {
        g: overlap(basis, &identity),
    }
}

/// `∫ ψ_α · T · ψ_β dS` with a piecewise-constant tensor per triangle.
pub fn assemble_anisotropic_overlap(basis: &BasisSet, tensors: &[SurfaceTensor]) -> Result<RMat> {
    let nt = basis.mesh().triangles().len();
    if tensors.len() != nt {
        return Err(Error::Dimension(format!(
            "tensor field has {} samples for {nt} triangles",
            tensors.len()
        )));
    }
    Ok(overlap(basis, tensors))
}

fn overlap(basis: &BasisSet, tensors: &[SurfaceTensor]) -> RMat {
    let mesh = basis.mesh();
    let n = basis.len();
    let rule = TriangleRule::degree2();
    let mut g: RMat = Mat::zeros(n, n);
    for (t, tensor) in tensors.iter().enumerate() {
        let v = mesh.triangle_vertices(t);
        let area = mesh.area(t);
        let (u, w) = local_frame(basis, t);
        let e = [u, w];
        let apply = |x: &Point| -> Point {
            let mut y = Point::zeros();
            for a in 0..2 {
                for b in 0..2 {
                    y += e[a] * (tensor[a][b] * e[b].dot(x));
                }
            }
            y
        };
        let sup = basis.on_triangle(t);
        for sm in sup {
            for sn in sup {
                let lm = basis.get(sm.basis).length;
                let ln = basis.get(sn.basis).length;
                let mut acc = 0.0;
                for (bary, wq) in rule.points.iter().zip(&rule.weights) {
                    let r = v[0] * bary[0] + v[1] * bary[1] + v[2] * bary[2];
                    acc += wq * (r - v[sm.free_local]).dot(&apply(&(r - v[sn.free_local])));
                }
                g[(sm.basis, sn.basis)] += sm.sign * sn.sign * lm * ln / (4.0 * area) * acc;
            }
        }
    }
    g
}

/// Phasor reference for the incident wave: `Cosine` means `E₀ cos ωt`, `Sine`
/// means `E₀ sin ωt` (phasor `−jE₀`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    #[default]
    Cosine,
    Sine,
}

impl PhaseConvention {
    pub fn phasor(self, amplitude: f64) -> C64 {
        match self {
            PhaseConvention::Cosine => C64::new(amplitude, 0.0),
            PhaseConvention::Sine => C64::new(0.0, -amplitude),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Excitation {
    PlaneWave {
        direction: Point,
        polarization: Point,
        amplitude: f64,
        phase: PhaseConvention,
    },
    DeltaGap {
        port: usize,
        voltage: f64,
        phase: PhaseConvention,
    },
}

impl Excitation {
    pub fn plane_wave(
        direction: Point,
        polarization: Point,
        amplitude: f64,
        phase: PhaseConvention,
    ) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-9 || (polarization.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "plane-wave direction and polarization must be unit vectors",
            ));
        }
        if direction.dot(&polarization).abs() > 1e-9 {
            return Err(Error::invalid(
                "plane-wave polarization must be orthogonal to propagation",
            ));
        }
        Ok(Excitation::PlaneWave {
            direction,
            polarization,
            amplitude,
            phase,
        })
    }

    /// Tested excitation vector `V⁰` at angular frequency `omega`.
    pub fn vector(&self, basis: &BasisSet, omega: f64) -> Result<Vec<C64>> {
        match *self {
            Excitation::PlaneWave {
                direction,
                polarization,
                amplitude,
                phase,
            } => Ok(excite_planewave(
                basis,
                omega,
                &direction,
                &polarization,
                phase.phasor(amplitude),
            )),
            Excitation::DeltaGap {
                port,
                voltage,
                phase,
            } => excite_deltagap(basis, port, phase.phasor(voltage)),
        }
    }

    /// Incident field magnitude (V/m) for plane waves.
    pub fn field_magnitude(&self) -> Option<f64> {
        match *self {
            Excitation::PlaneWave { amplitude, .. } => Some(amplitude.abs()),
            Excitation::DeltaGap { .. } => None,
        }
    }
}

/// `V_α = ∫ ψ_α · E₀ ê e^{-jk k̂·r} dS` with the 7-point rule.
pub fn excite_planewave(
    basis: &BasisSet,
    omega: f64,
    direction: &Point,
    polarization: &Point,
    e0: C64,
) -> Vec<C64> {
    let mesh = basis.mesh();
    let rule = TriangleRule::degree5();
    let k = wavenumber(omega);
    let mut v = vec![ZERO; basis.len()];
    if e0 == ZERO {
        return v;
    }
    for t in 0..mesh.triangles().len() {
        let tv = mesh.triangle_vertices(t);
        let area = mesh.area(t);
        for sup in basis.on_triangle(t) {
            let coef = sup.sign * basis.get(sup.basis).length / (2.0 * area);
            let mut acc = ZERO;
            for (bary, wq) in rule.points.iter().zip(&rule.weights) {
                let r = tv[0] * bary[0] + tv[1] * bary[1] + tv[2] * bary[2];
                let phase = C64::from_polar(1.0, -k * direction.dot(&r));
                acc += phase * ((r - tv[sup.free_local]).dot(polarization) * wq * area);
            }
            v[sup.basis] += acc * coef * e0;
        }
    }
    v
}

/// Delta-gap source: `V0 · l` at the port basis, zero elsewhere.
pub fn excite_deltagap(basis: &BasisSet, port: usize, v0: C64) -> Result<Vec<C64>> {
    let n = basis.len();
    if port >= n {
        return Err(Error::PortOutOfRange { port, n });
    }
    let mut v = vec![ZERO; n];
    v[port] = v0 * basis.get(port).length;
    Ok(v)
}

/// Surface current sampled at the 7-point nodes of every triangle.
#[derive(Clone, Debug)]
pub struct CurrentSamples {
    points: Vec<Point>,
    /// weight × current density (A·m)
    moments: Vec<[C64; 3]>,
}

impl CurrentSamples {
    pub fn new(basis: &BasisSet, currents: &[C64]) -> Self {
        assert_eq!(currents.len(), basis.len());
        let mesh = basis.mesh();
        let rule = TriangleRule::degree5();
        let mut points = Vec::new();
        let mut moments = Vec::new();
        for t in 0..mesh.triangles().len() {
            let tv = mesh.triangle_vertices(t);
            let area = mesh.area(t);
            for (bary, wq) in rule.points.iter().zip(&rule.weights) {
                let r = tv[0] * bary[0] + tv[1] * bary[1] + tv[2] * bary[2];
                let mut jv = [ZERO; 3];
                for sup in basis.on_triangle(t) {
                    let coef = currents[sup.basis]
                        * (sup.sign * basis.get(sup.basis).length / (2.0 * area));
                    let rho = r - tv[sup.free_local];
                    for c in 0..3 {
                        jv[c] += coef * rho[c];
                    }
                }
                for x in jv.iter_mut() {
                    *x *= wq * area;
                }
                points.push(r);
                moments.push(jv);
            }
        }
        Self { points, moments }
    }

    /// `r·E` as `r → ∞` in unit direction `dir` (phase `e^{-jkr}` removed).
    pub fn radiate(&self, omega: f64, dir: &Point) -> [C64; 3] {
        let k = wavenumber(omega);
        let mut f = [ZERO; 3];
        for (r, m) in self.points.iter().zip(&self.moments) {
            let ph = C64::from_polar(1.0, k * dir.dot(r));
            for c in 0..3 {
                f[c] += m[c] * ph;
            }
        }
        let radial: C64 = (0..3).map(|c| f[c] * dir[c]).sum();
        let pre = -J * omega * MU0 / (4.0 * PI);
        let mut out = [ZERO; 3];
        for c in 0..3 {
            out[c] = (f[c] - radial * dir[c]) * pre;
        }
        out
    }
}

pub fn far_field(
    basis: &BasisSet,
    currents: &[C64],
    omega: f64,
    direction: &Point,
) -> Result<[C64; 3]> {
    if (direction.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("far-field direction must be a unit vector"));
    }
    Ok(CurrentSamples::new(basis, currents).radiate(omega, direction))
}

pub fn field_norm(f: &[C64; 3]) -> f64 {
    f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Total radiated power `∮ |r·E|² / (2η₀) dΩ` by Gauss-Legendre in `cos θ`
/// and a uniform grid in `φ`.
pub fn radiated_power(samples: &CurrentSamples, omega: f64, n_theta: usize, n_phi: usize) -> f64 {
    let (x, w) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut total = 0.0;
    for (ct, wt) in x.iter().zip(&w) {
        let st = (1.0 - ct * ct).sqrt();
        for ip in 0..n_phi {
            let ph = (ip as f64 + 0.5) * dphi;
            let dir = Point::new(st * ph.cos(), st * ph.sin(), *ct);
            let f = samples.radiate(omega, &dir);
            total += wt * dphi * field_norm(&f).powi(2);
        }
    }
    total / (2.0 * ETA0)
}

/// Gauss-Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    // (P_n(z), P_n'(z)) by the three-term recurrence
    let legendre = |z: f64| {
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Multi-harmonic backscatter `Ψ = 4π |r·E^sc|² / |E^inc|²` (m²).
pub fn backscatter_psi(scattered: &[C64; 3], incident_magnitude: f64) -> Result<f64> {
    if !(incident_magnitude > 0.0) {
        return Err(Error::invalid("incident field magnitude must be positive"));
    }
    Ok(4.0 * PI * field_norm(scattered).powi(2) / (incident_magnitude * incident_magnitude))
}

/// Floor applied to every dB value written to result files.
pub const DB_FLOOR: f64 = -200.0;

/// `10 log10(Ψ / 1 m²)`, floored at [`DB_FLOOR`].
pub fn dbsm(psi: f64) -> f64 {
    if psi > 0.0 {
        (10.0 * psi.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

const MAGIC: &[u8; 4] = b"CMOM";

/// Write a square complex matrix: `"CMOM"`, u32 N, u64 frequency in μHz,
/// then N² little-endian f64 pairs (re, im) in row-major order.
pub fn write_matrix(path: impl AsRef<Path>, m: &CMat, freq_hz: f64) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension("matrix files hold square matrices".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&((freq_hz * 1e6).round() as u64).to_le_bytes())?;
    for i in 0..n {
        for j in 0..n {
            w.write_all(&m[(i, j)].re.to_le_bytes())?;
            w.write_all(&m[(i, j)].im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a matrix written by [`write_matrix`]; returns it with its frequency (Hz).
pub fn read_matrix(path: impl AsRef<Path>) -> Result<(CMat, f64)> {
    let path = path.as_ref();
    let ferr = |msg: &str| Error::MatrixFile {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 16];
    r.read_exact(&mut head)
        .map_err(|_| ferr("truncated header"))?;
    if &head[0..4] != MAGIC {
        return Err(ferr("bad magic"));
    }
    let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let micro_hz = u64::from_le_bytes(head[8..16].try_into().unwrap());
    let mut buf = vec![0u8; n * n * 16];
    r.read_exact(&mut buf)
        .map_err(|_| ferr("truncated payload"))?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(ferr("trailing bytes"));
    }
    let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let m = Mat::from_fn(n, n, |i, j| {
        let o = (i * n + j) * 16;
        C64::new(f(o), f(o + 8))
    });
    Ok((m, micro_hz as f64 * 1e-6))
}
