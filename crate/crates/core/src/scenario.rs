//! Declarative JSON scenarios: geometry, comb, loads, material, excitation and
//! requested outputs, plus the pipeline that turns one into result files.
//!
//! Every dimensional key carries its unit as a suffix (`f_c_hz`, `side_m`,
//! `e0_vpm`). Unknown keys are rejected. A minimal scenario:
//!
//! ```json
//! {
//!   "name": "dipole",
//!   "geometry": { "type": "plate", "length_m": 0.5, "width_m": 0.005, "nx": 20, "ny": 1 },
//!   "grid": { "f_c_hz": 3.0e8, "f_0_hz": 1.0e7, "k_max": 2 },
//!   "loads": [
//!     { "port": "xmid0",
//!       "element": { "kind": "resistor",
//!                    "waveform": { "type": "cosine", "mean": 50.0, "gamma": 0.5, "unit": "ohm" } } }
//!   ],
//!   "excitation": { "type": "delta_gap", "port": "xmid0", "v0_v": 1.0 },
//!   "outputs": { "spectra": { "direction": [0.0, 1.0, 0.0] } }
//! }
//! ```
//!
//! Ports are named generator edges (`"center"`, `"xmid0"`, `"mid2"`), raw basis
//! indices, or `{"edge": [a, b]}` vertex pairs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cm::{
    assemble_distributed, assemble_lorentz_drude, ConversionMatrix, ElementKind, FourierWaveform,
    HarmonicGrid, LoadNode, OverlapTerm, PortLoad, Unit,
};
use crate::consts::C0;
use crate::efie::{
    assemble_anisotropic_overlap, assemble_gram, assemble_z, backscatter_psi, dbsm, field_norm,
    CurrentSamples, Excitation, PhaseConvention, SurfaceTensor, DB_FLOOR,
};
use crate::linalg::CMat;
use crate::mesh::{
    build_basis, gen_bowtie, gen_plate, gen_strip_loop, load_mesh, BasisSet, BowtieParams, EdgeKey,
    Point,
};
use crate::power::{power_report, PowerReport};
use crate::solver::{
    solve, HarmonicSolution, LoadOperator, Method, SolveMode, SolveOptions, SystemSpec,
};
use crate::{exec, Error, Result, C64};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Free text carried along for the reader; ignored by the pipeline.
    #[serde(default)]
    pub notes: Vec<String>,
    pub geometry: Geometry,
    pub grid: GridSpec,
    #[serde(default)]
    pub loads: Vec<LoadSpec>,
    #[serde(default)]
    pub material: Option<MaterialSpec>,
    pub excitation: ExcitationSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    /// Alternative load/material sets solved on the same structure, each
    /// written to its own subdirectory.
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub static_reference: Option<StaticReference>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    Plate {
        length_m: f64,
        width_m: f64,
        nx: usize,
        ny: usize,
    },
    Bowtie {
        length_m: f64,
        flare_angle_deg: f64,
        edges_per_wavelength: f64,
        ref_freq_hz: f64,
        #[serde(default)]
        feed_width_m: Option<f64>,
    },
    StripLoop {
        side_m: f64,
        wire_radius_m: f64,
        segments_per_side: usize,
    },
    MeshFile {
        path: PathBuf,
        #[serde(default)]
        ports: BTreeMap<String, [usize; 2]>,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub f_c_hz: f64,
    pub f_0_hz: f64,
    pub k_max: usize,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PortRef {
    Index(usize),
    Name(String),
    Edge { edge: [usize; 2] },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    pub port: PortRef,
    pub element: ElementSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementSpec {
    Resistor { waveform: WaveformSpec },
    Conductor { waveform: WaveformSpec },
    Switch { waveform: WaveformSpec },
    Capacitor { waveform: WaveformSpec },
    Inductor { waveform: WaveformSpec },
    Series { children: Vec<ElementSpec> },
    Parallel { children: Vec<ElementSpec> },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum UnitSpec {
    Ohm,
    Siemens,
    Farad,
    Henry,
    Dimensionless,
}

impl From<UnitSpec> for Unit {
    fn from(u: UnitSpec) -> Self {
        match u {
            UnitSpec::Ohm => Unit::Ohm,
            UnitSpec::Siemens => Unit::Siemens,
            UnitSpec::Farad => Unit::Farad,
            UnitSpec::Henry => Unit::Henry,
            UnitSpec::Dimensionless => Unit::Dimensionless,
        }
    }
}

/// Periodic waveform over one load period. Series orders default to `2K`.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveformSpec {
    Constant {
        value: f64,
        unit: UnitSpec,
    },
    /// `mean (1 + gamma cos(ω₀t + phase))`
    Cosine {
        mean: f64,
        gamma: f64,
        #[serde(default)]
        phase_deg: f64,
        unit: UnitSpec,
    },
    /// `high` for the last `duty` fraction of the period, `low` otherwise.
    Square {
        low: f64,
        high: f64,
        duty: f64,
        #[serde(default)]
        order: Option<usize>,
        unit: UnitSpec,
    },
    /// Uniform samples over one period, starting at t = 0.
    Samples {
        values: Vec<f64>,
        #[serde(default)]
        order: Option<usize>,
        unit: UnitSpec,
    },
    /// `c_p` for `p = 0 … P`; `im[0]` must be zero.
    Coefficients {
        re: Vec<f64>,
        im: Vec<f64>,
        unit: UnitSpec,
    },
}

impl WaveformSpec {
    pub fn build(&self, grid: &HarmonicGrid) -> Result<FourierWaveform> {
        let full = 2 * grid.k_max();
        match self {
            WaveformSpec::Constant { value, unit } => {
                Ok(FourierWaveform::constant(*value, (*unit).into()))
            }
            WaveformSpec::Cosine {
                mean,
                gamma,
                phase_deg,
                unit,
            } => Ok(FourierWaveform::cosine(
                *mean,
                mean * gamma,
                phase_deg.to_radians(),
                (*unit).into(),
            )),
            WaveformSpec::Square {
                low,
                high,
                duty,
                order,
                unit,
            } => FourierWaveform::square(*low, *high, *duty, order.unwrap_or(full), (*unit).into()),
            WaveformSpec::Samples {
                values,
                order,
                unit,
            } => {
                let order = order.unwrap_or_else(|| full.min(values.len().saturating_sub(1) / 4));
                FourierWaveform::from_samples(values, order, (*unit).into())
            }
            WaveformSpec::Coefficients { re, im, unit } => {
                if re.len() != im.len() {
                    return Err(Error::Schema(format!(
                        "waveform coefficients: {} real parts but {} imaginary parts",
                        re.len(),
                        im.len()
                    )));
                }
                let c = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
                FourierWaveform::from_coefficients(c, (*unit).into())
            }
        }
    }
}

impl ElementSpec {
    pub fn build(&self, grid: &HarmonicGrid) -> Result<LoadNode> {
        let leaf = |kind, w: &WaveformSpec| Ok(LoadNode::element(kind, w.build(grid)?));
        let children = |c: &[ElementSpec], what: &str| -> Result<Vec<LoadNode>> {
            if c.is_empty() {
                return Err(Error::Schema(format!("{what} combination has no children")));
            }
            c.iter().map(|e| e.build(grid)).collect()
        };
        match self {
            ElementSpec::Resistor { waveform } => leaf(ElementKind::Resistor, waveform),
            ElementSpec::Conductor { waveform } => leaf(ElementKind::Conductor, waveform),
            ElementSpec::Switch { waveform } => leaf(ElementKind::Switch, waveform),
            ElementSpec::Capacitor { waveform } => leaf(ElementKind::Capacitor, waveform),
            ElementSpec::Inductor { waveform } => leaf(ElementKind::Inductor, waveform),
            ElementSpec::Series { children: c } => Ok(LoadNode::Series(children(c, "series")?)),
            ElementSpec::Parallel { children: c } => {
                Ok(LoadNode::Parallel(children(c, "parallel")?))
            }
        }
    }
}

/// Distributed surface loading over the whole mesh.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    /// Isotropic sheet resistance `R_s(t)` (Ω/sq) weighting the Gram matrix.
    SheetResistance { waveform: WaveformSpec },
    /// Tensor sheet impedance in each triangle's local `(u, v)` frame.
    Anisotropic {
        #[serde(default)]
        uu: Option<WaveformSpec>,
        #[serde(default)]
        uv: Option<WaveformSpec>,
        #[serde(default)]
        vu: Option<WaveformSpec>,
        #[serde(default)]
        vv: Option<WaveformSpec>,
    },
    /// Isotropic `jωA + B − jK/ω` sheet.
    LorentzDrude {
        #[serde(default)]
        alpha: Option<WaveformSpec>,
        #[serde(default)]
        beta: Option<WaveformSpec>,
        #[serde(default)]
        kappa: Option<WaveformSpec>,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSpec {
    #[default]
    Cosine,
    Sine,
}

impl From<PhaseSpec> for PhaseConvention {
    fn from(p: PhaseSpec) -> Self {
        match p {
            PhaseSpec::Cosine => PhaseConvention::Cosine,
            PhaseSpec::Sine => PhaseConvention::Sine,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExcitationSpec {
    /// `direction` is the propagation direction.
    PlaneWave {
        direction: [f64; 3],
        polarization: [f64; 3],
        e0_vpm: f64,
        #[serde(default)]
        phase: PhaseSpec,
    },
    DeltaGap {
        port: PortRef,
        v0_v: f64,
        #[serde(default)]
        phase: PhaseSpec,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_mode")]
    pub mode: SolveMode,
    #[serde(default = "default_crossover")]
    pub crossover: f64,
}

fn default_mode() -> SolveMode {
    SolveMode::Auto
}

fn default_crossover() -> f64 {
    SolveOptions::default().crossover
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            crossover: default_crossover(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_spectra")]
    pub spectra: Option<SpectraSpec>,
    #[serde(default)]
    pub pattern: Option<PatternSpec>,
    #[serde(default)]
    pub currents: bool,
    #[serde(default = "yes")]
    pub powers: bool,
    #[serde(default = "yes")]
    pub timings: bool,
}

fn yes() -> bool {
    true
}

fn default_spectra() -> Option<SpectraSpec> {
    Some(SpectraSpec::default())
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            spectra: default_spectra(),
            pattern: None,
            currents: false,
            powers: true,
            timings: true,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraSpec {
    /// Observation direction; defaults to backscatter for plane waves and is
    /// required for transmitting scenarios.
    #[serde(default)]
    pub direction: Option<[f64; 3]>,
    #[serde(default = "one_metre")]
    pub reference_distance_m: f64,
}

fn one_metre() -> f64 {
    1.0
}

impl Default for SpectraSpec {
    fn default() -> Self {
        Self {
            direction: None,
            reference_distance_m: one_metre(),
        }
    }
}

/// Constant-φ cut, `θ` from start to stop inclusive.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    #[serde(default)]
    pub phi_deg: f64,
    #[serde(default)]
    pub theta_start_deg: f64,
    #[serde(default = "half_turn")]
    pub theta_stop_deg: f64,
    #[serde(default = "pattern_points")]
    pub points: usize,
    /// Harmonics to tabulate; all by default.
    #[serde(default)]
    pub harmonics: Option<Vec<i64>>,
}

fn half_turn() -> f64 {
    180.0
}

fn pattern_points() -> usize {
    181
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    #[serde(default)]
    pub loads: Option<Vec<LoadSpec>>,
    #[serde(default)]
    pub material: Option<MaterialSpec>,
}

/// Rescale the sheet-resistance waveform so its mean takes each listed value.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub r0_ohm: SweepValues,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SweepValues {
    List(Vec<f64>),
    Log {
        start: f64,
        stop: f64,
        points: usize,
    },
}

impl SweepValues {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            SweepValues::List(v) => v.clone(),
            SweepValues::Log {
                start,
                stop,
                points,
            } => {
                if !(*start > 0.0 && *stop > 0.0) || *points < 2 {
                    return Err(Error::Schema(
                        "log sweep needs positive bounds and at least 2 points".into(),
                    ));
                }
                let (a, b) = (start.log10(), stop.log10());
                (0..*points)
                    .map(|i| 10f64.powf(a + (b - a) * i as f64 / (*points - 1) as f64))
                    .collect()
            }
        };
        if v.is_empty() || v.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Schema("sweep values must be positive".into()));
        }
        Ok(v)
    }
}

/// Static configuration solved at the carrier alone for comparison.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StaticReference {
    /// All loads removed (continuous conductor).
    Unloaded,
    /// Every waveform replaced by its mean.
    Mean,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> Result<()> {
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Schema("variant names must be unique".into()));
        }
        for v in &self.variants {
            if v.name.is_empty()
                || !v
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::Schema(format!(
                    "variant name {:?} must be [A-Za-z0-9_-]+",
                    v.name
                )));
            }
        }
        if let Some(p) = &self.outputs.pattern {
            if p.points < 2 {
                return Err(Error::Schema("pattern needs at least 2 points".into()));
            }
        }
        if let Some(s) = &self.outputs.spectra {
            if !(s.reference_distance_m > 0.0) {
                return Err(Error::Schema(
                    "reference_distance_m must be positive".into(),
                ));
            }
            if s.direction.is_none() && matches!(self.excitation, ExcitationSpec::DeltaGap { .. }) {
                return Err(Error::Schema(
                    "transmitting scenarios need outputs.spectra.direction".into(),
                ));
            }
        }
        if self.sweep.is_some() {
            self.sweep.as_ref().unwrap().r0_ohm.values()?;
            if !matches!(self.material, Some(MaterialSpec::SheetResistance { .. })) {
                return Err(Error::Schema(
                    "r0 sweep needs a sheet_resistance material".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Structure, comb and excitation shared by every case of a scenario.
pub struct Model {
    pub basis: BasisSet,
    pub ports: BTreeMap<String, EdgeKey>,
    pub grid: HarmonicGrid,
    pub excitation: Excitation,
    pub v0: Vec<C64>,
    observe: Option<Point>,
}

fn unit_vector(v: [f64; 3], what: &str) -> Result<Point> {
    let p = Point::new(v[0], v[1], v[2]);
    let n = p.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Schema(format!("{what} must be a nonzero vector")));
    }
    Ok(p / n)
}

impl Model {
    /// Mesh, basis and comb; relative mesh paths resolve against `base_dir`.
    pub fn build(s: &Scenario, base_dir: &Path) -> Result<Self> {
        let (mesh, ports) = match &s.geometry {
            Geometry::Plate {
                length_m,
                width_m,
                nx,
                ny,
            } => {
                let g = gen_plate(*length_m, *width_m, *nx, *ny)?;
                (g.mesh, g.ports)
            }
            Geometry::Bowtie {
                length_m,
                flare_angle_deg,
                edges_per_wavelength,
                ref_freq_hz,
                feed_width_m,
            } => {
                let g = gen_bowtie(&BowtieParams {
                    length: *length_m,
                    flare_angle_deg: *flare_angle_deg,
                    edges_per_wavelength: *edges_per_wavelength,
                    ref_freq_hz: *ref_freq_hz,
                    feed_width: *feed_width_m,
                })?;
                (g.mesh, g.ports)
            }
            Geometry::StripLoop {
                side_m,
                wire_radius_m,
                segments_per_side,
            } => {
                let g = gen_strip_loop(*side_m, *wire_radius_m, *segments_per_side)?;
                (g.mesh, g.ports)
            }
            Geometry::MeshFile { path, ports } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let mesh = load_mesh(&full)?;
                (
                    mesh,
                    ports
                        .iter()
                        .map(|(k, v)| (k.clone(), (v[0].min(v[1]), v[0].max(v[1]))))
                        .collect(),
                )
            }
        };
        let basis = build_basis(mesh);
        if basis.is_empty() {
            return Err(Error::Schema("geometry has no interior edges".into()));
        }
        let grid = HarmonicGrid::from_hz(s.grid.f_c_hz, s.grid.f_0_hz, s.grid.k_max)?;
        let mut model = Model {
            basis,
            ports,
            grid,
            excitation: Excitation::DeltaGap {
                port: 0,
                voltage: 0.0,
                phase: PhaseConvention::Cosine,
            },
            v0: Vec::new(),
            observe: None,
        };
        let (excitation, backscatter) = match &s.excitation {
            ExcitationSpec::PlaneWave {
                direction,
                polarization,
                e0_vpm,
                phase,
            } => {
                let d = unit_vector(*direction, "plane-wave direction")?;
                let p = unit_vector(*polarization, "plane-wave polarization")?;
                (
                    Excitation::plane_wave(d, p, *e0_vpm, (*phase).into())?,
                    Some(-d),
                )
            }
            ExcitationSpec::DeltaGap { port, v0_v, phase } => (
                Excitation::DeltaGap {
                    port: model.resolve(port)?,
                    voltage: *v0_v,
                    phase: (*phase).into(),
                },
                None,
            ),
        };
        model.v0 = excitation.vector(&model.basis, grid.omega_c())?;
        model.excitation = excitation;
        model.observe = match s.outputs.spectra.as_ref().and_then(|sp| sp.direction) {
            Some(d) => Some(unit_vector(d, "observation direction")?),
            None => backscatter,
        };
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.basis.len()
    }

    pub fn resolve(&self, port: &PortRef) -> Result<usize> {
        let n = self.basis.len();
        match port {
            PortRef::Index(i) if *i < n => Ok(*i),
            PortRef::Index(i) => Err(Error::PortOutOfRange { port: *i, n }),
            PortRef::Name(name) => {
                let (a, b) = self.ports.get(name).ok_or_else(|| {
                    let known: Vec<&str> = self.ports.keys().map(String::as_str).collect();
                    let shown = if known.len() > 12 {
                        format!("{} names", known.len())
                    } else {
                        known.join(", ")
                    };
                    Error::Schema(format!("unknown port {name:?} (available: {shown})"))
                })?;
                self.basis
                    .index_of_edge(*a, *b)
                    .ok_or_else(|| Error::Schema(format!("port {name:?} is not an interior edge")))
            }
            PortRef::Edge { edge: [a, b] } => self
                .basis
                .index_of_edge(*a, *b)
                .ok_or_else(|| Error::Schema(format!("edge ({a}, {b}) is not an interior edge"))),
        }
    }

    /// Port loads mapped onto the moment system, `Z_L l²` at a port of edge
    /// length `l`.
    pub fn load_operator(
        &self,
        grid: HarmonicGrid,
        ports: &[PortLoad],
        distributed: Option<ConversionMatrix>,
    ) -> Result<LoadOperator> {
        LoadOperator::weighted(grid, self.n(), ports, distributed, |p| {
            self.basis.get(p).length.powi(2)
        })
    }

    pub fn port_loads(&self, loads: &[LoadSpec], grid: &HarmonicGrid) -> Result<Vec<PortLoad>> {
        loads
            .iter()
            .map(|l| {
                Ok(PortLoad {
                    port: self.resolve(&l.port)?,
                    load: l.element.build(grid)?,
                })
            })
            .collect()
    }

    /// Overlap terms of a distributed material; `scale` multiplies every
    /// waveform.
    pub fn material_operator(
        &self,
        m: &MaterialSpec,
        grid: &HarmonicGrid,
        scale: f64,
    ) -> Result<ConversionMatrix> {
        let n = self.n();
        let wave =
            |w: &WaveformSpec| -> Result<FourierWaveform> { Ok(w.build(grid)?.scaled(scale)) };
        match m {
            MaterialSpec::SheetResistance { waveform } => {
                let g = assemble_gram(&self.basis).g;
                assemble_distributed(
                    grid,
                    &[OverlapTerm {
                        waveform: wave(waveform)?,
                        overlap: g,
                    }],
                )
            }
            MaterialSpec::Anisotropic { uu, uv, vu, vv } => {
                let n_t = self.basis.mesh().triangles().len();
                let mut terms = Vec::new();
                for (comp, (a, b)) in [(uu, (0, 0)), (uv, (0, 1)), (vu, (1, 0)), (vv, (1, 1))] {
                    if let Some(w) = comp {
                        let mut t: SurfaceTensor = [[0.0; 2]; 2];
                        t[a][b] = 1.0;
                        let overlap = assemble_anisotropic_overlap(&self.basis, &vec![t; n_t])?;
                        terms.push(OverlapTerm {
                            waveform: wave(w)?,
                            overlap,
                        });
                    }
                }
                if terms.is_empty() {
                    return Err(Error::Schema(
                        "anisotropic material sets no tensor component".into(),
                    ));
                }
                assemble_distributed(grid, &terms)
            }
            MaterialSpec::LorentzDrude { alpha, beta, kappa } => {
                let g = assemble_gram(&self.basis).g;
                let term = |w: &Option<WaveformSpec>| -> Result<Vec<OverlapTerm>> {
                    w.as_ref()
                        .map(|w| {
                            Ok(OverlapTerm {
                                waveform: wave(w)?,
                                overlap: g.clone(),
                            })
                        })
                        .into_iter()
                        .collect()
                };
                let (a, b, k) = (term(alpha)?, term(beta)?, term(kappa)?);
                if a.is_empty() && b.is_empty() && k.is_empty() {
                    return Err(Error::Schema(
                        "lorentz_drude material sets no coefficient".into(),
                    ));
                }
                assemble_lorentz_drude(grid, n, &a, &b, &k)
            }
        }
    }

    /// Vacuum EFIE blocks `Z(ω_k)` over a comb.
    pub fn impedance_blocks(&self, grid: &HarmonicGrid) -> Result<Vec<CMat>> {
        let omegas = grid.omegas();
        exec::try_map_indexed(omegas.len(), |i| -> Result<CMat> {
            Ok(assemble_z(&self.basis, omegas[i])?.z)
        })
    }

    fn observation(&self) -> Option<Point> {
        self.observe
    }
}

/// One line of a spectrum file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumRecord {
    pub k: i64,
    pub f_obs_hz: f64,
    #[serde(flatten)]
    pub value: SpectrumValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SpectrumValue {
    Scattering { psi_m2: f64, psi_dbsm: f64 },
    Transmit { e_vpm: f64 },
}

impl SpectrumValue {
    /// Decibel value used in patterns: dBsm or dB(V/m).
    pub fn db(&self) -> f64 {
        match *self {
            SpectrumValue::Scattering { psi_dbsm, .. } => psi_dbsm,
            SpectrumValue::Transmit { e_vpm } => {
                if e_vpm > 0.0 {
                    (20.0 * e_vpm.log10()).max(DB_FLOOR)
                } else {
                    DB_FLOOR
                }
            }
        }
    }
}

fn observe_value(
    samples: &CurrentSamples,
    omega: f64,
    dir: &Point,
    excitation: &Excitation,
    r_ref: f64,
) -> Result<SpectrumValue> {
    let f = samples.radiate(omega, dir);
    Ok(match excitation.field_magnitude() {
        Some(e0) => {
            let psi = backscatter_psi(&f, e0)?;
            SpectrumValue::Scattering {
                psi_m2: psi,
                psi_dbsm: dbsm(psi),
            }
        }
        None => SpectrumValue::Transmit {
            e_vpm: field_norm(&f) / r_ref,
        },
    })
}

/// Per-harmonic observation along `dir`.
pub fn observe_spectrum(
    basis: &BasisSet,
    sol: &HarmonicSolution,
    excitation: &Excitation,
    dir: &Point,
    r_ref: f64,
) -> Result<Vec<SpectrumRecord>> {
    let grid = *sol.grid();
    exec::try_map_indexed(grid.n_f(), |ki| -> Result<SpectrumRecord> {
        let k = grid.harmonic(ki);
        let omega = grid.omega(k);
        let samples = CurrentSamples::new(basis, &sol.currents()[ki]);
        let value = observe_value(&samples, omega, dir, excitation, r_ref)?;
        Ok(SpectrumRecord {
            k,
            f_obs_hz: omega / (2.0 * std::f64::consts::PI),
            value,
        })
    })
}

/// Pattern cut: `theta_deg` and one dB column per harmonic.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub phi_deg: f64,
    pub theta_deg: Vec<f64>,
    pub harmonics: Vec<i64>,
    /// `values[i][j]`: angle `i`, harmonic `j`.
    pub values: Vec<Vec<f64>>,
    pub scattering: bool,
}

impl Pattern {
    pub fn to_csv(&self) -> String {
        let unit = if self.scattering { "dbsm" } else { "dbvpm" };
        let mut out = String::from("theta_deg");
        for k in &self.harmonics {
            out += &format!(",k{k}_{unit}");
        }
        out.push('\n');
        for (t, row) in self.theta_deg.iter().zip(&self.values) {
            out += &fmt(*t);
            for v in row {
                out.push(',');
                out += &fmt(*v);
            }
            out.push('\n');
        }
        out
    }
}

/// `θ_i = start + i (stop − start)/(points − 1)`, endpoints exact.
pub fn theta_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            if i == 0 {
                start
            } else if i + 1 == points {
                stop
            } else {
                start + (stop - start) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

pub fn direction(theta_deg: f64, phi_deg: f64) -> Point {
    let (st, ct) = theta_deg.to_radians().sin_cos();
    let (sp, cp) = phi_deg.to_radians().sin_cos();
    Point::new(st * cp, st * sp, ct)
}

pub fn emit_pattern(
    basis: &BasisSet,
    sol: &HarmonicSolution,
    excitation: &Excitation,
    cut: &PatternSpec,
    r_ref: f64,
) -> Result<Pattern> {
    let grid = *sol.grid();
    let harmonics = match &cut.harmonics {
        Some(h) => {
            for &k in h {
                if k.unsigned_abs() as usize > grid.k_max() {
                    return Err(Error::Schema(format!(
                        "pattern harmonic {k} outside the comb ±{}",
                        grid.k_max()
                    )));
                }
            }
            h.clone()
        }
        None => grid.harmonics().collect(),
    };
    let theta = theta_grid(cut.theta_start_deg, cut.theta_stop_deg, cut.points);
    let samples: Vec<CurrentSamples> = harmonics
        .iter()
        .map(|&k| CurrentSamples::new(basis, sol.current(k)))
        .collect();
    let values = exec::try_map_indexed(theta.len(), |i| -> Result<Vec<f64>> {
        let dir = direction(theta[i], cut.phi_deg);
        harmonics
            .iter()
            .zip(&samples)
            .map(|(&k, s)| Ok(observe_value(s, grid.omega(k), &dir, excitation, r_ref)?.db()))
            .collect()
    })?;
    Ok(Pattern {
        phi_deg: cut.phi_deg,
        theta_deg: theta,
        harmonics,
        values,
        scattering: excitation.field_magnitude().is_some(),
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn spectrum_csv(rows: &[SpectrumRecord]) -> String {
    let scattering = rows
        .first()
        .is_some_and(|r| matches!(r.value, SpectrumValue::Scattering { .. }));
    let mut out = String::from(if scattering {
        "k,f_obs_hz,psi_m2,psi_dbsm\n"
    } else {
        "k,f_obs_hz,e_vpm\n"
    });
    for r in rows {
        match r.value {
            SpectrumValue::Scattering { psi_m2, psi_dbsm } => {
                out += &format!(
                    "{},{},{},{}\n",
                    r.k,
                    fmt(r.f_obs_hz),
                    fmt(psi_m2),
                    fmt(psi_dbsm)
                )
            }
            SpectrumValue::Transmit { e_vpm } => {
                out += &format!("{},{},{}\n", r.k, fmt(r.f_obs_hz), fmt(e_vpm))
            }
        }
    }
    out
}

pub fn currents_csv(sol: &HarmonicSolution) -> String {
    let mut out = String::from("k,basis,re_a,im_a\n");
    for (ki, cur) in sol.currents().iter().enumerate() {
        let k = sol.grid().harmonic(ki);
        for (a, i) in cur.iter().enumerate() {
            out += &format!("{k},{a},{},{}\n", fmt(i.re), fmt(i.im));
        }
    }
    out
}

/// Result of solving one load/material set.
#[derive(Clone, Debug)]
pub struct CaseResult {
    pub label: Option<String>,
    pub solution: HarmonicSolution,
    pub power: PowerReport,
    pub spectrum: Option<Vec<SpectrumRecord>>,
    pub pattern: Option<Pattern>,
    pub static_reference: Option<SpectrumRecord>,
    pub sweep: Vec<SweepPoint>,
    pub timings: CaseTimings,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub r0_ohm: f64,
    pub method: Method,
    pub residual: f64,
    pub powers: PowerReport,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct CaseTimings {
    pub impedance_s: f64,
    pub construct_s: f64,
    pub invert_s: f64,
    pub sweep_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, Serialize)]
struct Summary<'a> {
    name: &'a str,
    variant: Option<&'a str>,
    n_basis: usize,
    n_triangles: usize,
    k_max: usize,
    n_f: usize,
    f_c_hz: f64,
    f_0_hz: f64,
    loaded_ports: Vec<usize>,
    distributed: bool,
    method: Method,
    residual: f64,
    backward_error: f64,
    balance_residual_rel: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    static_reference: Option<SpectrumRecord>,
}

/// Everything a run produced, one entry per case (the base case or each
/// variant).
pub struct RunOutput {
    pub model: Model,
    pub cases: Vec<CaseResult>,
    pub files: Vec<PathBuf>,
}

fn solve_options(s: &Scenario, mode: Option<SolveMode>) -> SolveOptions {
    SolveOptions {
        mode: mode.unwrap_or(s.solver.mode),
        crossover: s.solver.crossover,
    }
}

fn static_loads(
    loads: &[LoadSpec],
    model: &Model,
    grid: &HarmonicGrid,
    which: StaticReference,
) -> Result<Vec<PortLoad>> {
    match which {
        StaticReference::Unloaded => Ok(Vec::new()),
        StaticReference::Mean => {
            fn mean(node: &LoadNode) -> LoadNode {
                match node {
                    LoadNode::Element(e) => {
                        let c0 = e.waveform.coefficient(0).re;
                        LoadNode::element(e.kind, FourierWaveform::constant(c0, e.waveform.unit()))
                    }
                    LoadNode::Series(c) => LoadNode::Series(c.iter().map(mean).collect()),
                    LoadNode::Parallel(c) => LoadNode::Parallel(c.iter().map(mean).collect()),
                }
            }
            Ok(model
                .port_loads(loads, grid)?
                .into_iter()
                .map(|p| PortLoad {
                    port: p.port,
                    load: mean(&p.load),
                })
                .collect())
        }
    }
}

/// Cases of a scenario: `(label, loads, material)`.
fn cases(s: &Scenario) -> Vec<(Option<String>, Vec<LoadSpec>, Option<MaterialSpec>)> {
    if s.variants.is_empty() {
        return vec![(None, s.loads.clone(), s.material.clone())];
    }
    s.variants
        .iter()
        .map(|v| {
            (
                Some(v.name.clone()),
                v.loads.clone().unwrap_or_else(|| s.loads.clone()),
                v.material.clone().or_else(|| s.material.clone()),
            )
        })
        .collect()
}

/// Build the model and every case's load operator without solving.
pub fn validate(s: &Scenario, base_dir: &Path) -> Result<Model> {
    let model = Model::build(s, base_dir)?;
    for (_, loads, material) in cases(s) {
        let ports = model.port_loads(&loads, &model.grid)?;
        let distributed = material
            .as_ref()
            .map(|m| model.material_operator(m, &model.grid, 1.0))
            .transpose()?;
        model.load_operator(model.grid, &ports, distributed)?;
    }
    if let Some(p) = &s.outputs.pattern {
        for &k in p.harmonics.iter().flatten() {
            if k.unsigned_abs() as usize > model.grid.k_max() {
                return Err(Error::Schema(format!(
                    "pattern harmonic {k} outside the comb ±{}",
                    model.grid.k_max()
                )));
            }
        }
    }
    Ok(model)
}

fn solve_case(
    model: &Model,
    grid: HarmonicGrid,
    z: &[CMat],
    ports: &[PortLoad],
    distributed: Option<ConversionMatrix>,
    opts: &SolveOptions,
) -> Result<(SystemSpec, HarmonicSolution)> {
    let op = model.load_operator(grid, ports, distributed)?;
    let spec = SystemSpec::new(grid, z.to_vec(), op, model.v0.clone())?;
    let sol = solve(&spec, opts)?;
    Ok((spec, sol))
}

/// Solve every case of a scenario in memory.
pub fn solve_scenario(
    s: &Scenario,
    base_dir: &Path,
    mode: Option<SolveMode>,
) -> Result<(Model, Vec<CaseResult>)> {
    let model = validate(s, base_dir)?;
    let opts = solve_options(s, mode);
    let t0 = Instant::now();
    let z = model.impedance_blocks(&model.grid)?;
    let impedance_s = t0.elapsed().as_secs_f64();
    let observe = model.observation();
    let r_ref = s
        .outputs
        .spectra
        .as_ref()
        .map_or(1.0, |sp| sp.reference_distance_m);

    let mut results = Vec::new();
    for (label, loads, material) in cases(s) {
        let start = Instant::now();
        let ports = model.port_loads(&loads, &model.grid)?;
        let distributed = material
            .as_ref()
            .map(|m| model.material_operator(m, &model.grid, 1.0))
            .transpose()?;
        let (spec, solution) = solve_case(&model, model.grid, &z, &ports, distributed, &opts)?;
        let power = power_report(&spec, &solution)?;
        let spectrum = match (&s.outputs.spectra, &observe) {
            (Some(_), Some(dir)) => Some(observe_spectrum(
                &model.basis,
                &solution,
                &model.excitation,
                dir,
                r_ref,
            )?),
            _ => None,
        };
        let pattern = s
            .outputs
            .pattern
            .as_ref()
            .map(|cut| emit_pattern(&model.basis, &solution, &model.excitation, cut, r_ref))
            .transpose()?;

        let static_reference = match (s.static_reference, &observe) {
            (Some(which), Some(dir)) => {
                let g0 = HarmonicGrid::new(model.grid.omega_c(), model.grid.omega_0(), 0)?;
                let z0 = vec![z[model.grid.index(0)].clone()];
                let p0 = static_loads(&loads, &model, &g0, which)?;
                // a one-harmonic comb keeps only c₀ of each material waveform
                let d0 = match (which, &material) {
                    (StaticReference::Mean, Some(m)) => Some(model.material_operator(m, &g0, 1.0)?),
                    _ => None,
                };
                let (_, sol0) = solve_case(
                    &model,
                    g0,
                    &z0,
                    &p0,
                    d0,
                    &SolveOptions {
                        mode: SolveMode::Auto,
                        ..opts
                    },
                )?;
                Some(observe_spectrum(&model.basis, &sol0, &model.excitation, dir, r_ref)?[0])
            }
            _ => None,
        };

        let t_sweep = Instant::now();
        let mut sweep = Vec::new();
        if let (Some(sw), Some(MaterialSpec::SheetResistance { waveform })) = (&s.sweep, &material)
        {
            let mean = waveform.build(&model.grid)?.coefficient(0).re;
            if !(mean > 0.0) {
                return Err(Error::Schema(
                    "swept sheet resistance must have a positive mean".into(),
                ));
            }
            for r0 in sw.r0_ohm.values()? {
                let m =
                    model.material_operator(material.as_ref().unwrap(), &model.grid, r0 / mean)?;
                let (spec, sol) = solve_case(&model, model.grid, &z, &ports, Some(m), &opts)?;
                sweep.push(SweepPoint {
                    r0_ohm: r0,
                    method: sol.method,
                    residual: sol.residual,
                    powers: power_report(&spec, &sol)?,
                });
            }
        }
        let timings = CaseTimings {
            impedance_s,
            construct_s: solution.timings.construct_s,
            invert_s: solution.timings.invert_s,
            sweep_s: t_sweep.elapsed().as_secs_f64(),
            total_s: impedance_s + start.elapsed().as_secs_f64(),
        };
        results.push(CaseResult {
            label,
            solution,
            power,
            spectrum,
            pattern,
            static_reference,
            sweep,
            timings,
        });
    }
    Ok((model, results))
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("result serializes") + "\n"
}

/// Write one case's files into `dir`.
pub fn write_case(
    s: &Scenario,
    model: &Model,
    case: &CaseResult,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let summary = Summary {
        name: &s.name,
        variant: case.label.as_deref(),
        n_basis: model.n(),
        n_triangles: model.basis.mesh().triangles().len(),
        k_max: model.grid.k_max(),
        n_f: model.grid.n_f(),
        f_c_hz: s.grid.f_c_hz,
        f_0_hz: s.grid.f_0_hz,
        loaded_ports: {
            let mut p: Vec<usize> = cases(s)
                .into_iter()
                .find(|c| c.0 == case.label)
                .map(|c| {
                    c.1.iter()
                        .filter_map(|l| model.resolve(&l.port).ok())
                        .collect()
                })
                .unwrap_or_default();
            p.sort_unstable();
            p
        },
        distributed: cases(s)
            .into_iter()
            .find(|c| c.0 == case.label)
            .is_some_and(|c| c.2.is_some()),
        method: case.solution.method,
        residual: case.solution.residual,
        backward_error: case.solution.backward_error,
        balance_residual_rel: case.power.balance_residual_rel,
        static_reference: case.static_reference,
    };
    write(dir.join("summary.json"), &json(&summary), &mut files)?;
    if let Some(rows) = &case.spectrum {
        write(dir.join("spectra.csv"), &spectrum_csv(rows), &mut files)?;
    }
    if let Some(p) = &case.pattern {
        write(dir.join("pattern.csv"), &p.to_csv(), &mut files)?;
    }
    if s.outputs.currents {
        write(
            dir.join("currents.csv"),
            &currents_csv(&case.solution),
            &mut files,
        )?;
    }
    if s.outputs.powers {
        write(dir.join("powers.json"), &case.power.to_json(), &mut files)?;
    }
    if !case.sweep.is_empty() {
        write(
            dir.join("sweep_powers.json"),
            &json(&case.sweep),
            &mut files,
        )?;
    }
    if s.outputs.timings {
        write(dir.join("timings.json"), &json(&case.timings), &mut files)?;
    }
    Ok(files)
}

/// Parse, solve and write a scenario file. Output goes to `out_dir`, one
/// subdirectory per variant.
pub fn run(path: &Path, out_dir: &Path, mode: Option<SolveMode>) -> Result<RunOutput> {
    let s = Scenario::from_path(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let (model, cases) = solve_scenario(&s, base, mode)?;
    let mut files = Vec::new();
    for case in &cases {
        let dir = match &case.label {
            Some(l) => out_dir.join(l),
            None => out_dir.to_path_buf(),
        };
        files.extend(write_case(&s, &model, case, &dir)?);
    }
    Ok(RunOutput {
        model,
        cases,
        files,
    })
}

/// Wavelength at the carrier (m).
pub fn carrier_wavelength(s: &Scenario) -> f64 {
    C0 / s.grid.f_c_hz
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIPOLE: &str = r#"{
      "name": "dipole",
      "geometry": { "type": "plate", "length_m": 0.5, "width_m": 0.01, "nx": 10, "ny": 1 },
      "grid": { "f_c_hz": 3.0e8, "f_0_hz": 2.0e7, "k_max": 2 },
      "loads": [
        { "port": "xmid0",
          "element": { "kind": "resistor",
                       "waveform": { "type": "cosine", "mean": 50.0, "gamma": 0.5, "unit": "ohm" } } }
      ],
      "excitation": { "type": "delta_gap", "port": "xmid0", "v0_v": 1.0 },
      "outputs": { "spectra": { "direction": [0.0, 1.0, 0.0] }, "currents": true,
                   "pattern": { "phi_deg": 90.0, "points": 7 } }
    }"#;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let s = Scenario::from_json(DIPOLE).unwrap();
        assert_eq!(s.loads.len(), 1);
        let bad = DIPOLE.replace("\"v0_v\"", "\"v0\"");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
        let bad = DIPOLE.replace("\"nx\": 10", "\"nx\": 10, \"colour\": 1");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
        let bad = DIPOLE.replace("\"unit\": \"ohm\"", "\"unit\": \"ohms\"");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
    }

    #[test]
    fn transmit_needs_direction() {
        let bad = DIPOLE.replace(
            "\"direction\": [0.0, 1.0, 0.0]",
            "\"reference_distance_m\": 2.0",
        );
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
    }

    #[test]
    fn port_references() {
        let s = Scenario::from_json(DIPOLE).unwrap();
        let m = Model::build(&s, Path::new(".")).unwrap();
        let by_name = m.resolve(&PortRef::Name("xmid0".into())).unwrap();
        let (a, b) = m.ports["xmid0"];
        assert_eq!(m.resolve(&PortRef::Edge { edge: [b, a] }).unwrap(), by_name);
        assert_eq!(m.resolve(&PortRef::Index(by_name)).unwrap(), by_name);
        assert!(matches!(
            m.resolve(&PortRef::Index(m.n())),
            Err(Error::PortOutOfRange { .. })
        ));
        assert!(matches!(
            m.resolve(&PortRef::Name("nope".into())),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn waveform_specs() {
        let grid = HarmonicGrid::from_hz(1e9, 1e8, 3).unwrap();
        let w: WaveformSpec =
            serde_json::from_str(r#"{"type":"square","low":0,"high":1,"duty":0.5,"unit":"ohm"}"#)
                .unwrap();
        assert_eq!(w.build(&grid).unwrap().order(), 6);
        let c: WaveformSpec =
            serde_json::from_str(r#"{"type":"cosine","mean":2,"gamma":0.5,"unit":"farad"}"#)
                .unwrap();
        let c = c.build(&grid).unwrap();
        assert!((c.evaluate(0.0) - 3.0).abs() < 1e-14);
        assert_eq!(c.unit(), Unit::Farad);
        let bad: WaveformSpec =
            serde_json::from_str(r#"{"type":"coefficients","re":[1,2],"im":[0],"unit":"ohm"}"#)
                .unwrap();
        assert!(bad.build(&grid).is_err());
    }

    #[test]
    fn theta_endpoints_exact() {
        let t = theta_grid(0.0, 180.0, 7);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[6], 180.0);
        assert_eq!(t[3], 90.0);
    }

    #[test]
    fn run_writes_deterministic_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dipole.json");
        fs::write(&path, DIPOLE).unwrap();
        let a = run(&path, &dir.path().join("a"), None).unwrap();
        let b = run(&path, &dir.path().join("b"), None).unwrap();
        let spectra = fs::read_to_string(dir.path().join("a/spectra.csv")).unwrap();
        assert_eq!(spectra.lines().count(), 1 + 5);
        assert_eq!(spectra.lines().next().unwrap(), "k,f_obs_hz,e_vpm");
        for f in &a.files {
            let name = f.file_name().unwrap();
            if name == "timings.json" {
                continue;
            }
            let other = dir.path().join("b").join(name);
            assert_eq!(fs::read(f).unwrap(), fs::read(other).unwrap(), "{name:?}");
        }
        assert_eq!(a.files.len(), b.files.len());
        let case = &a.cases[0];
        assert!(case.power.balance_residual_rel < 1e-10);
        // broadside pattern entry equals the spectrum at the same direction
        let p = case.pattern.as_ref().unwrap();
        let spec = case.spectrum.as_ref().unwrap();
        let row = p.theta_deg.iter().position(|&t| t == 90.0).unwrap();
        for (j, rec) in spec.iter().enumerate() {
            assert!((p.values[row][j] - rec.value.db()).abs() < 1e-9);
        }
    }

    #[test]
    fn variants_and_static_reference() {
        let text = r#"{
          "name": "pw",
          "geometry": { "type": "plate", "length_m": 0.5, "width_m": 0.02, "nx": 10, "ny": 1 },
          "grid": { "f_c_hz": 3.0e8, "f_0_hz": 3.0e7, "k_max": 2 },
          "excitation": { "type": "plane_wave", "direction": [0, 0, -1], "polarization": [1, 0, 0], "e0_vpm": 1.0 },
          "variants": [
            { "name": "open", "loads": [ { "port": "xmid0", "element": { "kind": "switch",
                "waveform": { "type": "square", "low": 0.0, "high": 1.0e4, "duty": 0.5, "unit": "ohm" } } } ] },
            { "name": "pec" }
          ],
          "static_reference": "unloaded"
        }"#;
        let s = Scenario::from_json(text).unwrap();
        let (_, cases) = solve_scenario(&s, Path::new("."), None).unwrap();
        assert_eq!(cases.len(), 2);
        let pec = &cases[1];
        let st = pec.static_reference.unwrap();
        let spec = pec.spectrum.as_ref().unwrap();
        let k0 = spec.iter().find(|r| r.k == 0).unwrap();
        // unloaded case at the carrier is the static reference itself
        assert!((k0.value.db() - st.value.db()).abs() < 1e-9);
        assert!(spec
            .iter()
            .filter(|r| r.k != 0)
            .all(|r| r.value.db() == DB_FLOOR));
        let sw = &cases[0];
        assert_eq!(sw.solution.method, Method::Compressed);
        assert!(sw
            .spectrum
            .as_ref()
            .unwrap()
            .iter()
            .any(|r| r.k == 1 && r.value.db() > DB_FLOOR));
    }

    #[test]
    fn sheet_resistance_sweep() {
        let text = r#"{
          "name": "plate",
          "geometry": { "type": "plate", "length_m": 2.0, "width_m": 1.0, "nx": 4, "ny": 2 },
          "grid": { "f_c_hz": 2.0e7, "f_0_hz": 2.0e6, "k_max": 2 },
          "material": { "type": "sheet_resistance",
                        "waveform": { "type": "cosine", "mean": 1.0, "gamma": 0.9, "unit": "ohm" } },
          "excitation": { "type": "plane_wave", "direction": [0, 0, -1], "polarization": [1, 0, 0], "e0_vpm": 1.0 },
          "sweep": { "r0_ohm": { "start": 0.1, "stop": 10.0, "points": 3 } }
        }"#;
        let s = Scenario::from_json(text).unwrap();
        let (_, cases) = solve_scenario(&s, Path::new("."), None).unwrap();
        let sweep = &cases[0].sweep;
        assert_eq!(sweep.len(), 3);
        assert!((sweep[1].r0_ohm - 1.0).abs() < 1e-12);
        assert_eq!(sweep[1].powers, cases[0].power);
        assert!(sweep
            .iter()
            .all(|p| p.method == Method::Full && p.powers.balance_residual_rel < 1e-10));
    }
}
