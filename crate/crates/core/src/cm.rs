//! Conversion-matrix algebra for periodically time-varying elements.
//!
//! A real `T₀`-periodic waveform `g(t) = Σ c_p e^{jpω₀t}` acting on a signal
//! carried by the comb `ω_k = ω_c + kω₀` mixes harmonic `ℓ` into `k` with
//! weight `c_{k−ℓ}`. Stacking the comb gives a banded (Toeplitz) matrix; for
//! `N` ports every scalar becomes an `N × N` block.
//!
//! Composite loads are reduced to a single impedance-form matrix per port.

use std::f64::consts::PI;

use faer::Mat;
use rustfft::FftPlanner;

use crate::linalg::{inverse, CMat, RMat};
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// The frequency comb `ω_k = ω_c + kω₀`, `k ∈ [−K, K]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicGrid {
    omega_c: f64,
    omega_0: f64,
    k_max: usize,
}

impl HarmonicGrid {
    /// Every comb frequency must be strictly positive.
    pub fn new(omega_c: f64, omega_0: f64, k_max: usize) -> Result<Self> {
        if !(omega_c.is_finite() && omega_0.is_finite() && omega_0 > 0.0) {
            return Err(Error::invalid(format!(
                "harmonic grid needs finite ω_c and ω₀ > 0 (got ω_c = {omega_c}, ω₀ = {omega_0})"
            )));
        }
        let lowest = omega_c - k_max as f64 * omega_0;
        if !(lowest > 0.0) {
            return Err(Error::invalid(format!(
                "harmonic grid reaches non-positive frequency: ω_c − Kω₀ = {lowest:e} rad/s (K = {k_max})"
            )));
        }
        Ok(Self {
            omega_c,
            omega_0,
            k_max,
        })
    }

    pub fn from_hz(f_c: f64, f_0: f64, k_max: usize) -> Result<Self> {
        Self::new(2.0 * PI * f_c, 2.0 * PI * f_0, k_max)
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn omega_0(&self) -> f64 {
        self.omega_0
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `N_f = 2K + 1`
    pub fn n_f(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn harmonics(&self) -> impl Iterator<Item = i64> {
        let k = self.k_max as i64;
        -k..=k
    }

    /// Position of harmonic `k` in the comb (0 for `k = −K`).
    pub fn index(&self, k: i64) -> usize {
        debug_assert!(k.unsigned_abs() as usize <= self.k_max);
        (k + self.k_max as i64) as usize
    }

    pub fn harmonic(&self, index: usize) -> i64 {
        index as i64 - self.k_max as i64
    }

    pub fn omega(&self, k: i64) -> f64 {
        self.omega_c + k as f64 * self.omega_0
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.harmonics().map(|k| self.omega(k)).collect()
    }
}

/// Physical unit of a waveform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    Ohm,
    Siemens,
    Farad,
    Henry,
    Dimensionless,
}

/// How a waveform was specified; the defining signal (not the truncated
/// series) decides positivity checks.
#[derive(Clone, Debug, PartialEq)]
pub enum WaveShape {
    Constant(f64),
    Cosine {
        mean: f64,
        amplitude: f64,
        phase: f64,
    },
    /// `high` during `[(1 − duty)T₀, T₀)`, `low` otherwise.
    Square {
        low: f64,
        high: f64,
        duty: f64,
    },
    Samples(Vec<f64>),
    Series,
}

/// Fourier coefficients `c_p`, `p ∈ [−P, P]`, of a real periodic waveform.
/// Only `p ≥ 0` is stored; `c_{−p} = conj(c_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierWaveform {
    coeffs: Vec<C64>,
    unit: Unit,
    shape: WaveShape,
}

impl FourierWaveform {
    pub fn constant(value: f64, unit: Unit) -> Self {
        Self {
            coeffs: vec![C64::new(value, 0.0)],
            unit,
            shape: WaveShape::Constant(value),
        }
    }

    /// `mean + amplitude·cos(ω₀t + phase)`
    pub fn cosine(mean: f64, amplitude: f64, phase: f64, unit: Unit) -> Self {
        Self {
            coeffs: vec![C64::new(mean, 0.0), C64::from_polar(0.5 * amplitude, phase)],
            unit,
            shape: WaveShape::Cosine {
                mean,
                amplitude,
                phase,
            },
        }
    }

    /// `x₀(1 + γ cos ω₀t)`
    pub fn modulated(x0: f64, gamma: f64, unit: Unit) -> Self {
        Self::cosine(x0, x0 * gamma, 0.0, unit)
    }

    /// Analytic square-wave series truncated at `order`.
    pub fn square(low: f64, high: f64, duty: f64, order: usize, unit: Unit) -> Result<Self> {
        if !(duty > 0.0 && duty < 1.0) {
            return Err(Error::Waveform(format!(
                "square-wave duty must lie in (0, 1), got {duty}"
            )));
        }
        let swing = high - low;
        let mut coeffs = vec![C64::new(low + swing * duty, 0.0)];
        for p in 1..=order {
            let x = 2.0 * PI * p as f64;
            let num = C64::new(1.0, 0.0) - C64::from_polar(1.0, -x * (1.0 - duty));
            coeffs.push(num / C64::new(0.0, -x) * swing);
        }
        Ok(Self {
            coeffs,
            unit,
            shape: WaveShape::Square { low, high, duty },
        })
    }

    /// Discrete Fourier analysis of one period of uniform samples
    /// (`t_n = nT₀/M`), keeping orders up to `order`.
    pub fn from_samples(samples: &[f64], order: usize, unit: Unit) -> Result<Self> {
        let m = samples.len();
        if m < 4 * order + 1 {
            return Err(Error::Waveform(format!(
                "order {order} needs at least {} samples, got {m}",
                4 * order + 1
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Waveform("non-finite waveform sample".into()));
        }
        let mut buf: Vec<C64> = samples.iter().map(|&s| C64::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let scale = 1.0 / m as f64;
        let mut coeffs: Vec<C64> = buf[..=order].iter().map(|c| c * scale).collect();
        coeffs[0].im = 0.0;
        Ok(Self {
            coeffs,
            unit,
            shape: WaveShape::Samples(samples.to_vec()),
        })
    }

    /// Coefficients `c_0, c_1, …` given directly; `c_0` must be real.
    pub fn from_coefficients(coeffs: Vec<C64>, unit: Unit) -> Result<Self> {
        match coeffs.first() {
            None => Err(Error::Waveform("waveform needs at least c_0".into())),
            Some(c0) if c0.im != 0.0 => Err(Error::Waveform(
                "c_0 of a real waveform must be real".into(),
            )),
            _ if coeffs
                .iter()
                .any(|c| !(c.re.is_finite() && c.im.is_finite())) =>
            {
                Err(Error::Waveform("non-finite Fourier coefficient".into()))
            }
            _ => Ok(Self {
                coeffs,
                unit,
                shape: WaveShape::Series,
            }),
        }
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn shape(&self) -> &WaveShape {
        &self.shape
    }

    /// Highest stored order `P`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `c_p` for any integer `p` (zero beyond the stored order).
    pub fn coefficient(&self, p: i64) -> C64 {
        let a = p.unsigned_abs() as usize;
        match self.coeffs.get(a) {
            None => ZERO,
            Some(c) if p < 0 => c.conj(),
            Some(c) => *c,
        }
    }

    /// True when the waveform has no AC content.
    pub fn is_static(&self) -> bool {
        self.coeffs[1..].iter().all(|c| *c == ZERO)
    }

    /// Truncated series at phase `θ = ω₀t`.
    pub fn evaluate(&self, theta: f64) -> f64 {
        let mut v = self.coeffs[0].re;
        for (p, c) in self.coeffs.iter().enumerate().skip(1) {
            v += 2.0 * (c * C64::from_polar(1.0, p as f64 * theta)).re;
        }
        v
    }

    /// Minimum of the defining signal over one period.
    pub fn min_value(&self) -> f64 {
        match &self.shape {
            WaveShape::Constant(v) => *v,
            WaveShape::Cosine {
                mean, amplitude, ..
            } => mean - amplitude.abs(),
            WaveShape::Square { low, high, .. } => low.min(*high),
            WaveShape::Samples(s) => s.iter().cloned().fold(f64::INFINITY, f64::min),
            WaveShape::Series => {
                let m = 64 * (self.order() + 1);
                (0..m)
                    .map(|i| self.evaluate(2.0 * PI * i as f64 / m as f64))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// `s·g(t)`
    pub fn scaled(&self, s: f64) -> Self {
        let shape = match &self.shape {
            WaveShape::Constant(v) => WaveShape::Constant(v * s),
            WaveShape::Cosine {
                mean,
                amplitude,
                phase,
            } => WaveShape::Cosine {
                mean: mean * s,
                amplitude: amplitude * s,
                phase: *phase,
            },
            WaveShape::Samples(v) => WaveShape::Samples(v.iter().map(|x| x * s).collect()),
            _ => WaveShape::Series,
        };
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            unit: self.unit,
            shape,
        }
    }

    /// Pointwise sum as a coefficient series.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.unit != other.unit {
            return Err(Error::Waveform(format!(
                "cannot add {:?} and {:?} waveforms",
                self.unit, other.unit
            )));
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n as i64)
            .map(|p| self.coefficient(p) + other.coefficient(p))
            .collect();
        Ok(Self {
            coeffs,
            unit: self.unit,
            shape: WaveShape::Series,
        })
    }
}

/// Banded matrix with entry `(k, ℓ) = c_{k−ℓ}` over the comb.
pub fn small_cm(w: &FourierWaveform, grid: &HarmonicGrid) -> CMat {
    let n_f = grid.n_f();
    Mat::from_fn(n_f, n_f, |i, j| w.coefficient(i as i64 - j as i64))
}

/// Diagonal comb matrix `Ω = diag(ω_k)`.
pub fn omega_matrix(grid: &HarmonicGrid) -> CMat {
    let om = grid.omegas();
    Mat::from_fn(om.len(), om.len(), |i, j| {
        if i == j {
            C64::new(om[i], 0.0)
        } else {
            ZERO
        }
    })
}

fn expect_unit(w: &FourierWaveform, unit: Unit, what: &str) -> Result<()> {
    if w.unit != unit {
        return Err(Error::Waveform(format!(
            "{what} waveform must be in {unit:?}, got {:?}",
            w.unit
        )));
    }
    Ok(())
}

fn expect_positive(w: &FourierWaveform, what: &str) -> Result<()> {
    let m = w.min_value();
    if !(m > 0.0) {
        return Err(Error::Waveform(format!(
            "{what} waveform must stay positive, minimum is {m:e}"
        )));
    }
    Ok(())
}

/// Impedance form of a time-varying resistance. The waveform must never reach
/// zero, since its conductance series would diverge.
pub fn cm_resistor(w: &FourierWaveform, grid: &HarmonicGrid) -> Result<CMat> {
    expect_unit(w, Unit::Ohm, "resistor")?;
    expect_positive(w, "resistance")?;
    Ok(small_cm(w, grid))
}

/// Admittance form of a time-varying conductance.
pub fn cm_conductor(w: &FourierWaveform, grid: &HarmonicGrid) -> Result<CMat> {
    expect_unit(w, Unit::Siemens, "conductor")?;
    expect_positive(w, "conductance")?;
    Ok(small_cm(w, grid))
}

/// Impedance form of a switch: a resistance that may touch zero (ideal short).
pub fn cm_switch(w: &FourierWaveform, grid: &HarmonicGrid) -> Result<CMat> {
    expect_unit(w, Unit::Ohm, "switch")?;
    let m = w.min_value();
    if !(m >= 0.0) {
        return Err(Error::Waveform(format!(
            "switch resistance must be nonnegative, minimum is {m:e}"
        )));
    }
    Ok(small_cm(w, grid))
}

/// Admittance form `jΩC` of a time-varying capacitance.
pub fn cm_capacitor(w: &FourierWaveform, grid: &HarmonicGrid) -> Result<CMat> {
    expect_unit(w, Unit::Farad, "capacitor")?;
    expect_positive(w, "capacitance")?;
    Ok(j_omega_left(grid, small_cm(w, grid)))
}

/// Impedance form `jΩL` of a time-varying inductance.
pub fn cm_inductor(w: &FourierWaveform, grid: &HarmonicGrid) -> Result<CMat> {
    expect_unit(w, Unit::Henry, "inductor")?;
    expect_positive(w, "inductance")?;
    Ok(j_omega_left(grid, small_cm(w, grid)))
}

fn j_omega_left(grid: &HarmonicGrid, mut m: CMat) -> CMat {
    for (i, om) in grid.omegas().into_iter().enumerate() {
        let s = C64::new(0.0, om);
        for j in 0..m.ncols() {
            m[(i, j)] *= s;
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Resistor,
    Conductor,
    Switch,
    Capacitor,
    Inductor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    pub waveform: FourierWaveform,
}

impl Element {
    pub fn new(kind: ElementKind, waveform: FourierWaveform) -> Self {
        Self { kind, waveform }
    }

    /// Impedance-form conversion matrix.
    pub fn impedance(&self, grid: &HarmonicGrid) -> Result<CMat> {
        let w = &self.waveform;
        match self.kind {
            ElementKind::Resistor => cm_resistor(w, grid),
            ElementKind::Switch => cm_switch(w, grid),
            ElementKind::Inductor => cm_inductor(w, grid),
            ElementKind::Conductor => {
                inverse(cm_conductor(w, grid)?.as_ref(), "conductor impedance form")
            }
            ElementKind::Capacitor => {
                inverse(cm_capacitor(w, grid)?.as_ref(), "capacitor impedance form")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combination {
    Series,
    Parallel,
}

/// Series: `a + b`. Parallel: `(a⁻¹ + b⁻¹)⁻¹`. Operands are impedance form.
pub fn combine(how: Combination, a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "combining {}x{} with {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    match how {
        Combination::Series => Ok(a + b),
        Combination::Parallel => {
            let ya = inverse(a.as_ref(), "parallel operand")?;
            let yb = inverse(b.as_ref(), "parallel operand")?;
            inverse((ya + yb).as_ref(), "parallel combination")
        }
    }
}

/// A load network: elements combined in series and parallel.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadNode {
    Element(Element),
    Series(Vec<LoadNode>),
    Parallel(Vec<LoadNode>),
}

impl LoadNode {
    pub fn element(kind: ElementKind, waveform: FourierWaveform) -> Self {
        LoadNode::Element(Element::new(kind, waveform))
    }

    /// Reduce the tree to one impedance-form matrix.
    pub fn impedance(&self, grid: &HarmonicGrid) -> Result<CMat> {
        let (how, children) = match self {
            LoadNode::Element(e) => return e.impedance(grid),
            LoadNode::Series(c) => (Combination::Series, c),
            LoadNode::Parallel(c) => (Combination::Parallel, c),
        };
        let mut it = children.iter();
        let mut acc = it
            .next()
            .ok_or_else(|| Error::invalid("series/parallel node with no children"))?
            .impedance(grid)?;
        for child in it {
            acc = combine(how, &acc, &child.impedance(grid)?)?;
        }
        Ok(acc)
    }

    pub fn is_static(&self) -> bool {
        match self {
            LoadNode::Element(e) => e.waveform.is_static(),
            LoadNode::Series(c) | LoadNode::Parallel(c) => c.iter().all(LoadNode::is_static),
        }
    }
}

/// A load attached to one port.
#[derive(Clone, Debug, PartialEq)]
pub struct PortLoad {
    pub port: usize,
    pub load: LoadNode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockOrdering {
    /// global index `(k + K)·N + α`
    FrequencyMajor,
    /// global index `α·N_f + (k + K)`
    PortMajor,
}

/// Dense `(N·N_f)²` block matrix over a harmonic grid.
#[derive(Clone, Debug)]
pub struct ConversionMatrix {
    grid: HarmonicGrid,
    n: usize,
    ordering: BlockOrdering,
    data: CMat,
}

impl ConversionMatrix {
    pub fn zeros(grid: HarmonicGrid, n: usize) -> Self {
        let dim = n * grid.n_f();
        Self {
            grid,
            n,
            ordering: BlockOrdering::FrequencyMajor,
            data: Mat::zeros(dim, dim),
        }
    }

    /// Wrap an existing frequency-major matrix.
    pub fn from_matrix(grid: HarmonicGrid, n: usize, data: CMat) -> Result<Self> {
        let dim = n * grid.n_f();
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::Dimension(format!(
                "conversion matrix for N = {n}, N_f = {} must be {dim}x{dim}",
                grid.n_f()
            )));
        }
        Ok(Self {
            grid,
            n,
            ordering: BlockOrdering::FrequencyMajor,
            data,
        })
    }

    pub fn grid(&self) -> &HarmonicGrid {
        &self.grid
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn ordering(&self) -> BlockOrdering {
        self.ordering
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    /// Global index of `(harmonic k, port α)` under the current ordering.
    pub fn index(&self, k: i64, alpha: usize) -> usize {
        global_index(self.ordering, &self.grid, self.n, k, alpha)
    }

    pub fn get(&self, k: i64, alpha: usize, l: i64, beta: usize) -> C64 {
        self.data[(self.index(k, alpha), self.index(l, beta))]
    }

    pub fn set(&mut self, k: i64, alpha: usize, l: i64, beta: usize, v: C64) {
        let (i, j) = (self.index(k, alpha), self.index(l, beta));
        self.data[(i, j)] = v;
    }

    /// Copy of block `(k, ℓ)`.
    pub fn block(&self, k: i64, l: i64) -> CMat {
        Mat::from_fn(self.n, self.n, |a, b| self.get(k, a, l, b))
    }

    /// True when every off-diagonal block is exactly zero.
    pub fn is_block_diagonal(&self) -> bool {
        for k in self.grid.harmonics() {
            for l in self.grid.harmonics() {
                if k != l {
                    for a in 0..self.n {
                        for b in 0..self.n {
                            if self.get(k, a, l, b) != ZERO {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Similarity permutation into `to` ordering.
    pub fn reorder(&self, to: BlockOrdering) -> Self {
        if to == self.ordering {
            return self.clone();
        }
        let dim = self.dim();
        let mut perm = vec![0usize; dim];
        for k in self.grid.harmonics() {
            for a in 0..self.n {
                perm[self.index(k, a)] = global_index(to, &self.grid, self.n, k, a);
            }
        }
        let mut data = Mat::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..dim {
                data[(perm[i], perm[j])] = self.data[(i, j)];
            }
        }
        Self {
            grid: self.grid,
            n: self.n,
            ordering: to,
            data,
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.grid != other.grid || self.ordering != other.ordering {
            return Err(Error::Dimension(
                "adding conversion matrices on different grids or orderings".into(),
            ));
        }
        Ok(Self {
            grid: self.grid,
            n: self.n,
            ordering: self.ordering,
            data: &self.data + &other.data,
        })
    }
}

/// Index map for either ordering.
pub fn global_index(
    ordering: BlockOrdering,
    grid: &HarmonicGrid,
    n: usize,
    k: i64,
    alpha: usize,
) -> usize {
    let ki = grid.index(k);
    match ordering {
        BlockOrdering::FrequencyMajor => ki * n + alpha,
        BlockOrdering::PortMajor => alpha * grid.n_f() + ki,
    }
}

/// Block-diagonal matrix with `Z(ω_k)` at block `k`.
pub fn assemble_static<F>(grid: &HarmonicGrid, provider: F) -> Result<ConversionMatrix>
where
    F: Fn(f64) -> Result<CMat> + Sync,
{
    let omegas = grid.omegas();
    let blocks = crate::exec::try_map_indexed(omegas.len(), |i| provider(omegas[i]))?;
    let n = blocks[0].nrows();
    let mut cm = ConversionMatrix::zeros(*grid, n);
    for (i, z) in blocks.iter().enumerate() {
        if z.nrows() != n || z.ncols() != n {
            return Err(Error::Dimension(format!(
                "block at harmonic {} is {}x{}, expected {n}x{n}",
                grid.harmonic(i),
                z.nrows(),
                z.ncols()
            )));
        }
        cm.data
            .as_mut()
            .submatrix_mut(i * n, i * n, n, n)
            .copy_from(z.as_ref());
    }
    Ok(cm)
}

/// Reduce each port load to its `N_f × N_f` impedance form, rejecting
/// collisions and out-of-range ports.
pub fn port_matrices(
    grid: &HarmonicGrid,
    loads: &[PortLoad],
    n: usize,
) -> Result<Vec<(usize, CMat)>> {
    let mut seen = std::collections::BTreeSet::new();
    for l in loads {
        if l.port >= n {
            return Err(Error::PortOutOfRange { port: l.port, n });
        }
        if !seen.insert(l.port) {
            return Err(Error::PortCollision(l.port));
        }
    }
    crate::exec::try_map_indexed(loads.len(), |i| {
        Ok((loads[i].port, loads[i].load.impedance(grid)?))
    })
}

/// Frequency-major load matrix: block `(k, ℓ)` is diagonal with each port's
/// composite `(k, ℓ)` entry.
pub fn assemble_lumped_loads(
    grid: &HarmonicGrid,
    loads: &[PortLoad],
    n: usize,
) -> Result<ConversionMatrix> {
    let mut cm = ConversionMatrix::zeros(*grid, n);
    for (port, m) in port_matrices(grid, loads, n)? {
        embed_port(&mut cm, port, &m);
    }
    Ok(cm)
}

/// Add an `N_f × N_f` port matrix at `(port, port)` of every block.
pub fn embed_port(cm: &mut ConversionMatrix, port: usize, m: &CMat) {
    let grid = cm.grid;
    for k in grid.harmonics() {
        for l in grid.harmonics() {
            let (i, j) = (cm.index(k, port), cm.index(l, port));
            cm.data[(i, j)] += m[(grid.index(k), grid.index(l))];
        }
    }
}

/// One component of a distributed material: a waveform weighting an overlap
/// matrix (the Gram matrix for isotropic sheets).
#[derive(Clone, Debug)]
pub struct OverlapTerm {
    pub waveform: FourierWaveform,
    pub overlap: RMat,
}

/// Block `(k, ℓ) = Σ_t c^t_{k−ℓ} M_t`.
pub fn assemble_distributed(
    grid: &HarmonicGrid,
    terms: &[OverlapTerm],
) -> Result<ConversionMatrix> {
    let first = terms
        .first()
        .ok_or_else(|| Error::invalid("distributed material has no coefficient fields"))?;
    let n = first.overlap.nrows();
    for t in terms {
        if t.overlap.nrows() != n || t.overlap.ncols() != n {
            return Err(Error::Dimension(format!(
                "overlap matrix {}x{} does not match N = {n}",
                t.overlap.nrows(),
                t.overlap.ncols()
            )));
        }
    }
    let mut cm = ConversionMatrix::zeros(*grid, n);
    let n_f = grid.n_f();
    for bj in 0..n_f {
        for bi in 0..n_f {
            let p = bi as i64 - bj as i64;
            for t in terms {
                let c = t.waveform.coefficient(p);
                if c == ZERO {
                    continue;
                }
                let mut blk = cm.data.as_mut().submatrix_mut(bi * n, bj * n, n, n);
                for b in 0..n {
                    for a in 0..n {
                        blk[(a, b)] += c * t.overlap[(a, b)];
                    }
                }
            }
        }
    }
    Ok(cm)
}

/// Lorentz-Drude sheet `jΩA + B − jKΩ⁻¹`, with `Ω` scaling block rows on the
/// left and `Ω⁻¹` block columns on the right. Empty term lists contribute zero.
pub fn assemble_lorentz_drude(
    grid: &HarmonicGrid,
    n: usize,
    alpha: &[OverlapTerm],
    beta: &[OverlapTerm],
    kappa: &[OverlapTerm],
) -> Result<ConversionMatrix> {
    let part = |terms: &[OverlapTerm]| -> Result<ConversionMatrix> {
        if terms.is_empty() {
            Ok(ConversionMatrix::zeros(*grid, n))
        } else {
            let cm = assemble_distributed(grid, terms)?;
            if cm.n != n {
                return Err(Error::Dimension(format!(
                    "overlap size {} does not match N = {n}",
                    cm.n
                )));
            }
            Ok(cm)
        }
    };
    let a = part(alpha)?;
    let b = part(beta)?;
    let k = part(kappa)?;
    let om = grid.omegas();
    let dim = n * grid.n_f();
    let data = Mat::from_fn(dim, dim, |i, j| {
        let (wi, wj) = (om[i / n], om[j / n]);
        a.data[(i, j)] * C64::new(0.0, wi) + b.data[(i, j)]
            - k.data[(i, j)] * C64::new(0.0, 1.0 / wj)
    });
    ConversionMatrix::from_matrix(*grid, n, data)
}
