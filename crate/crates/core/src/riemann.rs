//! Step (Riemann) problems: classification into the twelve wave patterns, edge speeds,
//! region assembly and pointwise sampling of the self-similar solution.

use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::hydro::{
    char_velocities, invariants_from_state, invert_simple_wave, state_from_invariants, Branch,
    DispersionlessPair, HydroError, HydroState,
};
use crate::onephase::{
    density_at_phase, envelope, modulus, modulus_and_wavelength, turning_point_roots, velocity_field,
    wave_params, Interval, ModulationState, SignSet,
};
use crate::roots::scan_bisect;
use crate::whitham::{harmonic_limit_high, harmonic_limit_low, soliton_limit, whitham_velocities};

/// Invariants closer than this are treated as equal when classifying.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiemannError {
    #[error(transparent)]
    Hydro(#[from] HydroError),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("root not bracketed for z = {z} on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NotBracketed { z: f64, lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("time must be positive, got {0}")]
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepData {
    pub left: HydroState,
    pub right: HydroState,
    pub left_pair: DispersionlessPair,
    pub right_pair: DispersionlessPair,
    pub left_branch: Branch,
    pub right_branch: Branch,
}

impl StepData {
    pub fn new(left: HydroState, right: HydroState) -> Result<Self, RiemannError> {
        let left_pair = invariants_from_state(left)?;
        let right_pair = invariants_from_state(right)?;
        Ok(Self {
            left,
            right,
            left_pair,
            right_pair,
            left_branch: left.branch(),
            right_branch: right.branch(),
        })
    }

    /// Step data given directly by invariants and branches.
    pub fn from_invariants(
        left: DispersionlessPair,
        left_branch: Branch,
        right: DispersionlessPair,
        right_branch: Branch,
    ) -> Self {
        Self {
            left: state_from_invariants(left, left_branch),
            right: state_from_invariants(right, right_branch),
            left_pair: left,
            right_pair: right,
            left_branch,
            right_branch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseLetter {
    A,
    B,
    C,
    D,
    E,
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    SameSide,
    CrossSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PatternCase {
    pub letter: CaseLetter,
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RarefactionFamily {
    /// l₊ varies, l₋ fixed
    Plus,
    /// l₋ varies, l₊ fixed
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DswFamily {
    /// l2 varies between l₋^L and l₋^R
    I,
    /// l3 varies between l₊^L and l₊^R
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "family")]
pub enum RegionKind {
    Plateau,
    Rarefaction(RarefactionFamily),
    /// Fan with l₊ = l₋; a vacuum in the lower density mapping.
    Vacuum,
    CnoidalDsw(DswFamily),
    /// Unmodulated cnoidal wave between two DSWs.
    PeriodicWave,
    ContactDsw,
}

/// How the invariants depend on z inside a region. Ranges run from the left edge to the right edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Shape {
    Constant { pair: DispersionlessPair },
    SimpleWave { family: RarefactionFamily, fixed: f64, from: f64, to: f64 },
    DegenerateFan { from: f64, to: f64 },
    /// `l[index]` varies from `from` to `to`, the others are fixed.
    Modulated { l: [f64; 4], index: usize, from: f64, to: f64 },
    Periodic { l: [f64; 4] },
    /// l1 = l2 = X varies from `from` to `to`.
    Contact { c: f64, d: f64, from: f64, to: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Upper,
    Lower,
}

/// Map from invariants to (ρ, ν) used for a region in one output column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Mapping {
    Pair { branch: Branch },
    Wave { signs: SignSet, interval: Interval },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct VacuumFlags {
    pub upper: bool,
    pub lower: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct PhaseTable {
    z: Vec<f64>,
    phi: Vec<f64>,
    k: Vec<f64>,
}

impl PhaseTable {
    fn eval(&self, z: f64) -> f64 {
        let n = self.z.len();
        let z = z.clamp(self.z[0], self.z[n - 1]);
        let j = match self.z.partition_point(|&v| v <= z) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.z[j + 1] - self.z[j];
        if h <= 0.0 {
            return self.phi[j];
        }
        let s = (z - self.z[j]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.phi[j] + h10 * h * self.k[j] + h01 * self.phi[j + 1] + h11 * h * self.k[j + 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub kind: RegionKind,
    pub z_left: f64,
    pub z_right: f64,
    pub shape: Shape,
    pub upper: Mapping,
    pub lower: Mapping,
    pub vacuum: VacuumFlags,
}

impl Region {
    pub fn mapping(&self, col: Column) -> Mapping {
        match col {
            Column::Upper => self.upper,
            Column::Lower => self.lower,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavePattern {
    pub case: PatternCase,
    pub step: StepData,
    pub regions: Vec<Region>,
    /// s¹..s⁴, plus s⁵ for cross-side data.
    pub edge_speeds: Vec<f64>,
    pub plateaus: Vec<DispersionlessPair>,
    pub vacuum_flags: VacuumFlags,
    #[serde(skip)]
    phases: OnceLock<Result<Vec<Option<PhaseTable>>, RiemannError>>,
}

/// Local invariants at a sample point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Invariants {
    Pair { l_minus: f64, l_plus: f64 },
    Wave { l: [f64; 4] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColumnSample {
    pub rho: f64,
    pub nu: f64,
    pub envelope_min: f64,
    pub envelope_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub region: usize,
    pub invariants: Invariants,
    pub upper: ColumnSample,
    pub lower: ColumnSample,
}

impl Sample {
    pub fn column(&self, col: Column) -> ColumnSample {
        match col {
            Column::Upper => self.upper,
            Column::Lower => self.lower,
        }
    }
}

fn vp(lm: f64, lp: f64) -> f64 {
    char_velocities(DispersionlessPair { l_minus: lm, l_plus: lp }).1
}

fn vm(lm: f64, lp: f64) -> f64 {
    char_velocities(DispersionlessPair { l_minus: lm, l_plus: lp }).0
}

fn abcd(sd: &StepData) -> (f64, f64, f64, f64) {
    (sd.left_pair.l_minus, sd.left_pair.l_plus, sd.right_pair.l_minus, sd.right_pair.l_plus)
}

pub fn classify(sd: &StepData) -> PatternCase {
    let (a, b, c, d) = abcd(sd);
    let tol = TIE_TOL;
    let letter = if d <= a + tol {
        CaseLetter::A
    } else if c <= a + tol {
        if d <= b + tol {
            CaseLetter::B
        } else {
            CaseLetter::D
        }
    } else if d <= b + tol {
        CaseLetter::C
    } else if c <= b + tol {
        CaseLetter::E
    } else {
        CaseLetter::F
    };
    let side = if sd.left_branch == sd.right_branch {
        Side::SameSide
    } else {
        Side::CrossSide
    };
    PatternCase { letter, side }
}

fn low_limit(l1: f64, l3: f64, l4: f64) -> Result<f64, RiemannError> {
    if (4.0 * l1 - 2.0 * (l3 + l4)).abs() <= TIE_TOL * (1.0 + l4) {
        return Err(RiemannError::Singular(format!(
            "4 l1 = 2 (l3 + l4) at l1 = {l1}, l3 = {l3}, l4 = {l4}"
        )));
    }
    Ok(harmonic_limit_low(l1, l3, l4))
}

pub fn edge_speeds(pc: PatternCase, sd: &StepData) -> Result<Vec<f64>, RiemannError> {
    let (a, b, c, d) = abcd(sd);
    let mut s = match pc.letter {
        CaseLetter::A => vec![vp(a, b), -12.0 * a * a, -12.0 * d * d, vm(c, d)],
        CaseLetter::B => vec![vp(a, b), vp(a, d), vm(a, d), vm(c, d)],
        CaseLetter::C => vec![vp(a, b), vp(a, d), soliton_limit(a, c, d), low_limit(a, c, d)?],
        CaseLetter::D => vec![harmonic_limit_high(a, b, d), soliton_limit(a, b, d), vm(a, d), vm(c, d)],
        CaseLetter::E => vec![
            harmonic_limit_high(a, b, d),
            soliton_limit(a, b, d),
            soliton_limit(a, c, d),
            low_limit(a, c, d)?,
        ],
        CaseLetter::F => {
            let v = whitham_velocities([a, b, c, d]).map_err(|e| RiemannError::Singular(e.to_string()))?;
            vec![harmonic_limit_high(a, b, d), v[2], v[1], low_limit(a, c, d)?]
        }
    };
    if pc.side == Side::CrossSide {
        s.push(-1.5 * (c - d) * (c - d));
    }
    Ok(s)
}

fn other(b: Branch) -> Branch {
    match b {
        Branch::Upper => Branch::Lower,
        Branch::Lower => Branch::Upper,
    }
}

fn column_branch(col: Column) -> Branch {
    match col {
        Column::Upper => Branch::Upper,
        Column::Lower => Branch::Lower,
    }
}

fn column_signs(col: Column) -> SignSet {
    match col {
        Column::Upper => SignSet::Upper,
        Column::Lower => SignSet::Lower,
    }
}

/// Interval of the oscillation used for a modulated region in one column.
fn wave_interval(kind: RegionKind, col: Column, feeds_contact: bool) -> Interval {
    match (kind, col) {
        (RegionKind::ContactDsw, Column::Upper) => Interval::Low,
        (RegionKind::ContactDsw, Column::Lower) => Interval::High,
        (RegionKind::CnoidalDsw(DswFamily::I), Column::Upper) => {
            if feeds_contact {
                Interval::Low
            } else {
                Interval::High
            }
        }
        (RegionKind::CnoidalDsw(DswFamily::I), Column::Lower) => {
            if feeds_contact {
                Interval::High
            } else {
                Interval::Low
            }
        }
        _ => Interval::Low,
    }
}

fn solve_scan<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, z: f64) -> Result<f64, RiemannError> {
    scan_bisect(f, lo, hi, 64, z.abs()).map_err(|(f_lo, f_hi)| RiemannError::NotBracketed { z, lo, hi, f_lo, f_hi })
}

fn modulated_l(l: [f64; 4], index: usize, p: f64) -> [f64; 4] {
    let mut l = l;
    l[index] = p;
    l
}

fn whitham_or_nan(l: [f64; 4]) -> [f64; 4] {
    whitham_velocities(l).unwrap_or([f64::NAN; 4])
}

fn invariants_at(shape: &Shape, z: f64) -> Result<Invariants, RiemannError> {
    let pair = |lm: f64, lp: f64| Invariants::Pair { l_minus: lm, l_plus: lp };
    Ok(match *shape {
        Shape::Constant { pair: p } => pair(p.l_minus, p.l_plus),
        Shape::SimpleWave { family, fixed, from, to } => {
            let (lo, hi) = (from.min(to), from.max(to));
            let v = invert_simple_wave(z, fixed).unwrap_or(lo).clamp(lo, hi);
            match family {
                RarefactionFamily::Plus => pair(fixed, v),
                RarefactionFamily::Minus => pair(v, fixed),
            }
        }
        Shape::DegenerateFan { from, to } => {
            let (lo, hi) = (from.min(to), from.max(to));
            let l = (-z / 12.0).max(0.0).sqrt().clamp(lo, hi);
            pair(l, l)
        }
        Shape::Modulated { l, index, from, to } => {
            let vel = if index == 1 { 1 } else { 2 };
            let p = solve_scan(|p| whitham_or_nan(modulated_l(l, index, p))[vel] - z, from, to, z)?;
            Invariants::Wave { l: modulated_l(l, index, p) }
        }
        Shape::Periodic { l } => Invariants::Wave { l },
        Shape::Contact { c, d, from, to } => {
            let x = solve_scan(|x| harmonic_limit_low(x, c, d) - z, from, to, z)?;
            Invariants::Wave { l: [x, x, c, d] }
        }
    })
}

fn wavenumber(l: [f64; 4]) -> f64 {
    let ms = ModulationState { l, signs: SignSet::Upper };
    match modulus_and_wavelength(&ms) {
        Ok((_, len)) if len.is_finite() && len > 0.0 => 2.0 * std::f64::consts::PI / len,
        Ok(_) => 0.0,
        // fully collapsed: harmonic wavelength of the linear limit
        Err(_) => f64::NAN,
    }
}

fn wavenumber_at(shape: &Shape, z: f64) -> Result<f64, RiemannError> {
    match invariants_at(shape, z)? {
        Invariants::Wave { l } => Ok(wavenumber(l)),
        Invariants::Pair { .. } => Ok(0.0),
    }
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Cumulative phase Φ(z) with Φ = `start` at the anchor; `anchor_right` puts the anchor at z_right.
fn build_phase(shape: &Shape, za: f64, zb: f64, start: f64, anchor_right: bool, graded: bool) -> Result<PhaseTable, RiemannError> {
    const N: usize = 256;
    let grid = |u: f64| -> f64 {
        let g = if !graded {
            u
        } else if anchor_right {
            1.0 - (1.0 - u) * (1.0 - u)
        } else {
            u * u
        };
        za + (zb - za) * g
    };
    let z: Vec<f64> = (0..=N).map(|j| grid(j as f64 / N as f64)).collect();
    let mut k = Vec::with_capacity(N + 1);
    for &zj in &z {
        let kj = wavenumber_at(shape, zj)?;
        k.push(if kj.is_finite() { kj } else { 0.0 });
    }
    let mut phi = vec![0.0; N + 1];
    for j in 0..N {
        let (z0, z1) = (z[j], z[j + 1]);
        let mut acc = 0.0;
        for (xg, wg) in GL4 {
            let zm = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * xg;
            let kv = wavenumber_at(shape, zm)?;
            acc += wg * if kv.is_finite() { kv } else { 0.0 };
        }
        phi[j + 1] = phi[j] + 0.5 * (z1 - z0) * acc;
    }
    let shift = if anchor_right { start - phi[N] } else { start };
    for p in phi.iter_mut() {
        *p += shift;
    }
    Ok(PhaseTable { z, phi, k })
}

fn pair_vacuum(shape: &Shape) -> bool {
    let tol = 1e-12;
    match *shape {
        Shape::Constant { pair } => (pair.l_plus - pair.l_minus).abs() <= tol * (1.0 + pair.l_plus),
        Shape::SimpleWave { fixed, from, to, .. } => {
            (fixed - from).abs() <= tol * (1.0 + fixed) || (fixed - to).abs() <= tol * (1.0 + fixed)
        }
        Shape::DegenerateFan { .. } => true,
        _ => false,
    }
}

fn wave_vacuum(shape: &Shape, signs: SignSet, interval: Interval) -> bool {
    let idx = match interval {
        Interval::Low => 0,
        Interval::High => 2,
    };
    let ends: [[f64; 4]; 2] = match *shape {
        Shape::Modulated { l, index, from, to } => [modulated_l(l, index, from), modulated_l(l, index, to)],
        Shape::Periodic { l } => [l, l],
        Shape::Contact { c, d, from, to } => [[from, from, c, d], [to, to, c, d]],
        _ => return false,
    };
    let r0 = turning_point_roots(ends[0], signs)[idx];
    let r1 = turning_point_roots(ends[1], signs)[idx];
    let tol = 1e-12 * ends[0][3].sqrt().max(1.0);
    r0 * r1 <= 0.0 || r0.abs() <= tol || r1.abs() <= tol
}

fn region_vacuum(shape: &Shape, m: Mapping) -> bool {
    match m {
        Mapping::Pair { branch: Branch::Lower } => pair_vacuum(shape),
        Mapping::Pair { branch: Branch::Upper } => {
            // ρ = (√l₊ + √l₋)² vanishes only at the zero state
            matches!(*shape, Shape::Constant { pair } if pair.l_plus == 0.0)
        }
        Mapping::Wave { signs, interval } => wave_vacuum(shape, signs, interval),
    }
}

struct Builder {
    regions: Vec<Region>,
    cross: bool,
}

impl Builder {
    fn push(&mut self, kind: RegionKind, z_left: f64, z_right: f64, shape: Shape, right_of_contact: bool, feeds_contact: bool) -> Result<(), RiemannError> {
        // only the two outer plateaus are kept when they have zero width
        let outer = z_left.is_infinite() || z_right.is_infinite();
        if !outer && z_right <= z_left {
            return Ok(());
        }
        if let (RegionKind::Plateau, Shape::Constant { pair }) = (kind, shape) {
            if let Some(prev) = self.regions.last_mut() {
                if prev.shape == (Shape::Constant { pair }) && !(right_of_contact && self.cross) {
                    prev.z_right = z_right;
                    return Ok(());
                }
            }
        }
        let mapping = |col: Column| -> Mapping {
            let wave = matches!(kind, RegionKind::CnoidalDsw(_) | RegionKind::PeriodicWave | RegionKind::ContactDsw);
            if wave {
                Mapping::Wave {
                    signs: column_signs(col),
                    interval: wave_interval(kind, col, feeds_contact),
                }
            } else {
                let b = column_branch(col);
                Mapping::Pair {
                    branch: if right_of_contact && self.cross { other(b) } else { b },
                }
            }
        };
        let (upper, lower) = (mapping(Column::Upper), mapping(Column::Lower));
        let vacuum = VacuumFlags {
            upper: region_vacuum(&shape, upper),
            lower: region_vacuum(&shape, lower),
        };
        self.regions.push(Region {
            kind,
            z_left,
            z_right,
            shape,
            upper,
            lower,
            vacuum,
        });
        Ok(())
    }
}

pub fn build_pattern(sd: &StepData) -> Result<WavePattern, RiemannError> {
    let case = classify(sd);
    let s = edge_speeds(case, sd)?;
    let (a, b, c, d) = abcd(sd);
    let cross = case.side == Side::CrossSide;
    let mut bl = Builder { regions: Vec::new(), cross };
    let pair = |lm: f64, lp: f64| DispersionlessPair { l_minus: lm, l_plus: lp };
    let ninf = f64::NEG_INFINITY;
    let rar = RegionKind::Rarefaction;
    let mut plateaus = Vec::new();

    bl.push(RegionKind::Plateau, ninf, s[0], Shape::Constant { pair: sd.left_pair }, false, false)?;
    // DSW(i) feeds the contact when it is the last wave of a cross-side pattern
    let fc = cross;
    match case.letter {
        CaseLetter::A => {
            bl.push(rar(RarefactionFamily::Plus), s[0], s[1], Shape::SimpleWave { family: RarefactionFamily::Plus, fixed: a, from: b, to: a }, false, false)?;
            bl.push(RegionKind::Vacuum, s[1], s[2], Shape::DegenerateFan { from: a, to: d }, false, false)?;
            bl.push(rar(RarefactionFamily::Minus), s[2], s[3], Shape::SimpleWave { family: RarefactionFamily::Minus, fixed: d, from: d, to: c }, false, false)?;
        }
        CaseLetter::B => {
            plateaus.push(pair(a, d));
            bl.push(rar(RarefactionFamily::Plus), s[0], s[1], Shape::SimpleWave { family: RarefactionFamily::Plus, fixed: a, from: b, to: d }, false, false)?;
            bl.push(RegionKind::Plateau, s[1], s[2], Shape::Constant { pair: pair(a, d) }, false, false)?;
            bl.push(rar(RarefactionFamily::Minus), s[2], s[3], Shape::SimpleWave { family: RarefactionFamily::Minus, fixed: d, from: a, to: c }, false, false)?;
        }
        CaseLetter::C => {
            plateaus.push(pair(a, d));
            bl.push(rar(RarefactionFamily::Plus), s[0], s[1], Shape::SimpleWave { family: RarefactionFamily::Plus, fixed: a, from: b, to: d }, false, false)?;
            bl.push(RegionKind::Plateau, s[1], s[2], Shape::Constant { pair: pair(a, d) }, false, false)?;
            bl.push(RegionKind::CnoidalDsw(DswFamily::I), s[2], s[3], Shape::Modulated { l: [a, c, c, d], index: 1, from: c, to: a }, false, fc)?;
        }
        CaseLetter::D => {
            plateaus.push(pair(a, d));
            bl.push(RegionKind::CnoidalDsw(DswFamily::II), s[0], s[1], Shape::Modulated { l: [a, b, d, d], index: 2, from: d, to: b }, false, false)?;
            bl.push(RegionKind::Plateau, s[1], s[2], Shape::Constant { pair: pair(a, d) }, false, false)?;
            bl.push(rar(RarefactionFamily::Minus), s[2], s[3], Shape::SimpleWave { family: RarefactionFamily::Minus, fixed: d, from: a, to: c }, false, false)?;
        }
        CaseLetter::E => {
            plateaus.push(pair(a, d));
            bl.push(RegionKind::CnoidalDsw(DswFamily::II), s[0], s[1], Shape::Modulated { l: [a, b, d, d], index: 2, from: d, to: b }, false, false)?;
            bl.push(RegionKind::Plateau, s[1], s[2], Shape::Constant { pair: pair(a, d) }, false, false)?;
            bl.push(RegionKind::CnoidalDsw(DswFamily::I), s[2], s[3], Shape::Modulated { l: [a, c, c, d], index: 1, from: c, to: a }, false, fc)?;
        }
        CaseLetter::F => {
            bl.push(RegionKind::CnoidalDsw(DswFamily::II), s[0], s[1], Shape::Modulated { l: [a, b, d, d], index: 2, from: d, to: c }, false, false)?;
            bl.push(RegionKind::PeriodicWave, s[1], s[2], Shape::Periodic { l: [a, b, c, d] }, false, false)?;
            bl.push(RegionKind::CnoidalDsw(DswFamily::I), s[2], s[3], Shape::Modulated { l: [a, b, c, d], index: 1, from: b, to: a }, false, fc)?;
        }
    }
    let last = if cross {
        let x0 = match case.letter {
            CaseLetter::A | CaseLetter::B | CaseLetter::D => c,
            _ => a,
        };
        bl.push(RegionKind::ContactDsw, s[3], s[4], Shape::Contact { c, d, from: x0, to: 0.0 }, false, false)?;
        s[4]
    } else {
        s[3]
    };
    bl.push(RegionKind::Plateau, last, f64::INFINITY, Shape::Constant { pair: sd.right_pair }, true, false)?;

    let vacuum_flags = VacuumFlags {
        upper: bl.regions.iter().any(|r| r.vacuum.upper),
        lower: bl.regions.iter().any(|r| r.vacuum.lower),
    };
    Ok(WavePattern {
        case,
        step: *sd,
        regions: bl.regions,
        edge_speeds: s,
        plateaus,
        vacuum_flags,
        phases: OnceLock::new(),
    })
}

/// Phase tables of the oscillatory regions, chained so the phase is continuous between
/// adjacent oscillatory regions. DSW(ii) is anchored at its soliton edge on the right;
/// every other oscillatory region continues from its left neighbour or starts at zero.
fn compute_phases(regions: &[Region]) -> Result<Vec<Option<PhaseTable>>, RiemannError> {
    let mut out: Vec<Option<PhaseTable>> = Vec::with_capacity(regions.len());
    for r in regions {
        let prev = out.last().and_then(|p| p.as_ref().map(|t| *t.phi.last().unwrap()));
        let (za, zb, sh) = (r.z_left, r.z_right, &r.shape);
        let table = match r.kind {
            RegionKind::CnoidalDsw(DswFamily::II) => Some(build_phase(sh, za, zb, 0.0, true, true)?),
            RegionKind::CnoidalDsw(DswFamily::I) => {
                Some(build_phase(sh, za, zb, prev.unwrap_or(0.0), false, prev.is_none())?)
            }
            RegionKind::PeriodicWave | RegionKind::ContactDsw => {
                Some(build_phase(sh, za, zb, prev.unwrap_or(0.0), false, false)?)
            }
            _ => None,
        };
        out.push(table);
    }
    Ok(out)
}

fn column_sample(region: &Region, inv: Invariants, col: Column, theta: f64) -> ColumnSample {
    match (inv, region.mapping(col)) {
        (Invariants::Pair { l_minus, l_plus }, Mapping::Pair { branch }) => {
            let st = state_from_invariants(DispersionlessPair { l_minus, l_plus }, branch);
            ColumnSample { rho: st.rho, nu: st.nu, envelope_min: st.rho, envelope_max: st.rho }
        }
        (Invariants::Wave { l }, Mapping::Wave { signs, interval }) => {
            let ms = ModulationState { l, signs };
            let wp = wave_params(&ms, interval);
            let rho = density_at_phase(theta, &wp, modulus(l));
            let (lo, hi) = envelope(&wp);
            ColumnSample { rho, nu: velocity_field(rho, &ms), envelope_min: lo, envelope_max: hi }
        }
        _ => unreachable!("region mapping always matches its shape"),
    }
}

impl WavePattern {
    /// Local invariants of region `idx` at z, without reconstructing the oscillation.
    pub fn region_invariants(&self, idx: usize, z: f64) -> Result<Invariants, RiemannError> {
        let r = &self.regions[idx];
        invariants_at(&r.shape, z.clamp(r.z_left, r.z_right))
    }

    pub fn region_index(&self, z: f64) -> usize {
        self.regions
            .iter()
            .position(|r| z <= r.z_right)
            .unwrap_or(self.regions.len() - 1)
    }

    /// Samples region `idx` at self-similar coordinate z (clamped to the region) and time t.
    pub fn sample_region(&self, idx: usize, z: f64, t: f64) -> Result<Sample, RiemannError> {
        let r = &self.regions[idx];
        let z = z.clamp(r.z_left, r.z_right);
        let inv = invariants_at(&r.shape, z)?;
        let theta = match inv {
            Invariants::Wave { .. } => {
                let phases = self.phases.get_or_init(|| compute_phases(&self.regions)).as_ref().map_err(Clone::clone)?;
                phases[idx].as_ref().map_or(0.0, |p| t * p.eval(z))
            }
            Invariants::Pair { .. } => 0.0,
        };
        Ok(Sample {
            region: idx,
            invariants: inv,
            upper: column_sample(r, inv, Column::Upper, theta),
            lower: column_sample(r, inv, Column::Lower, theta),
        })
    }

    pub fn sample(&self, x: f64, t: f64) -> Result<Sample, RiemannError> {
        if !(t > 0.0) {
            return Err(RiemannError::Time(t));
        }
        let z = x / t;
        self.sample_region(self.region_index(z), z, t)
    }

    /// The column whose plateaus match the branches of the step data.
    pub fn physical_column(&self) -> Column {
        match self.step.left_branch {
            Branch::Upper => Column::Upper,
            Branch::Lower => Column::Lower,
        }
    }
}

/// Reduces degenerate four-invariant states to the dispersionless pair they collapse to.
pub fn reduce_invariants(inv: Invariants, tol: f64) -> Invariants {
    match inv {
        Invariants::Wave { l } => {
            let s = tol * (1.0 + l[3]);
            if (l[2] - l[1]).abs() <= s {
                Invariants::Pair { l_minus: l[0], l_plus: l[3] }
            } else if (l[1] - l[0]).abs() <= s {
                Invariants::Pair { l_minus: l[2], l_plus: l[3] }
            } else if (l[3] - l[2]).abs() <= s {
                Invariants::Pair { l_minus: l[0], l_plus: l[1] }
            } else {
                inv
            }
        }
        p => p,
    }
}

/// Dispersionless pairs a degenerate four-invariant state collapses to within `tol`.
fn collapsed_pairs(l: [f64; 4], tol: f64) -> Vec<(f64, f64)> {
    let s = tol * (1.0 + l[3]);
    let mut out = Vec::new();
    if (l[2] - l[1]).abs() <= s {
        out.push((l[0], l[3]));
    }
    if (l[1] - l[0]).abs() <= s {
        out.push((l[2], l[3]));
    }
    if (l[3] - l[2]).abs() <= s {
        out.push((l[0], l[1]));
    }
    out
}

/// Largest difference between two invariant sets after degenerate reduction.
///
/// When a state is degenerate in more than one way the closest reading is used.
pub fn invariant_distance(a: Invariants, b: Invariants, tol: f64) -> f64 {
    let gap = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).abs().max((p.1 - q.1).abs());
    match (a, b) {
        (Invariants::Wave { l: x }, Invariants::Wave { l: y }) => {
            x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        }
        (Invariants::Pair { l_minus: a1, l_plus: a2 }, Invariants::Pair { l_minus: b1, l_plus: b2 }) => {
            gap((a1, a2), (b1, b2))
        }
        (Invariants::Wave { l }, Invariants::Pair { l_minus, l_plus })
        | (Invariants::Pair { l_minus, l_plus }, Invariants::Wave { l }) => collapsed_pairs(l, tol)
            .into_iter()
            .map(|p| gap(p, (l_minus, l_plus)))
            .fold(f64::INFINITY, f64::min),
    }
}
