//! One-phase periodic solutions: turning points, modulus, wavelength,
//! density profiles on either oscillation interval and the velocity field.

use serde::Serialize;
use thiserror::Error;

use crate::specfun::EllipticModulus;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OnePhaseError {
    #[error("Riemann invariants must satisfy 0 <= l1 <= l2 <= l3 <= l4, got {0:?}")]
    Unordered([f64; 4]),
    #[error("degenerate configuration {0:?}: wavelength undefined")]
    Degenerate([f64; 4]),
    #[error("turning points {0:?} do not have the degeneracy required by this limit")]
    LimitPrecondition([f64; 4]),
}

/// Which sign pattern maps invariants to turning points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSet {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationState {
    pub l: [f64; 4],
    pub signs: SignSet,
}

impl ModulationState {
    pub fn new(l: [f64; 4], signs: SignSet) -> Result<Self, OnePhaseError> {
        let ok = l.iter().all(|x| x.is_finite())
            && l[0] >= 0.0
            && l[0] <= l[1]
            && l[1] <= l[2]
            && l[2] <= l[3];
        if ok {
            Ok(Self { l, signs })
        } else {
            Err(OnePhaseError::Unordered(l))
        }
    }
}

/// Oscillation interval of the density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interval {
    /// ρ ∈ [ρ1, ρ2]
    Low,
    /// ρ ∈ [ρ3, ρ4]
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveParams {
    pub rho: [f64; 4],
    pub interval: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    Soliton,
    Trig,
}

/// Signed square-root combinations whose squares are the turning points, unsorted.
pub fn turning_point_roots(l: [f64; 4], signs: SignSet) -> [f64; 4] {
    let [a, b, c, d] = l.map(|x| x.max(0.0).sqrt());
    match signs {
        SignSet::Upper => [a + b + c - d, a + b - c + d, a - b + c + d, -a + b + c + d],
        SignSet::Lower => [-a + b + c - d, a - b + c - d, a + b - c - d, a + b + c + d],
    }
}

/// Turning points ρ1 ≤ ρ2 ≤ ρ3 ≤ ρ4.
pub fn turning_points(ms: &ModulationState) -> [f64; 4] {
    let mut r = turning_point_roots(ms.l, ms.signs).map(|x| x * x);
    r.sort_by(f64::total_cmp);
    r
}

pub fn wave_params(ms: &ModulationState, interval: Interval) -> WaveParams {
    WaveParams {
        rho: turning_points(ms),
        interval,
    }
}

/// Elliptic parameter of the state with its complement computed from differences.
pub fn modulus(l: [f64; 4]) -> EllipticModulus {
    let [l1, l2, l3, l4] = l;
    let den = (l3 - l1) * (l4 - l2);
    if den <= 0.0 {
        // all four gaps close together; the trigonometric end is the natural value
        return EllipticModulus { m: 0.0, mc: 1.0 };
    }
    let m = (l2 - l1) * (l4 - l3) / den;
    let mc = (l3 - l2) * (l4 - l1) / den;
    EllipticModulus {
        m: m.clamp(0.0, 1.0),
        mc: mc.clamp(0.0, 1.0),
    }
}

/// Modulus and wavelength L = 2K(m)/√((l3 − l1)(l4 − l2)).
pub fn modulus_and_wavelength(ms: &ModulationState) -> Result<(EllipticModulus, f64), OnePhaseError> {
    let [l1, l2, l3, l4] = ms.l;
    if l3 <= l1 || l4 <= l2 {
        return Err(OnePhaseError::Degenerate(ms.l));
    }
    let md = modulus(ms.l);
    let len = match md.integrals() {
        Some(ci) => 2.0 * ci.k / ((l3 - l1) * (l4 - l2)).sqrt(),
        None => f64::INFINITY,
    };
    Ok((md, len))
}

/// Elliptic argument ω as a function of the phase coordinate ξ.
pub fn omega_of_xi(xi: f64, rho: &[f64; 4]) -> f64 {
    0.25 * ((rho[2] - rho[0]) * (rho[3] - rho[1])).max(0.0).sqrt() * xi
}

fn profile_from_sn_cn(sn: f64, cn: f64, wp: &WaveParams) -> f64 {
    let [r1, r2, r3, r4] = wp.rho;
    let (s2, c2) = (sn * sn, cn * cn);
    match wp.interval {
        Interval::Low => {
            let den = r4 - r2 + (r2 - r1) * s2;
            if den.abs() <= f64::EPSILON * r4.max(1.0) {
                return if c2 > 0.5 { r1 } else { r2 };
            }
            (r2 * (r4 - r1) - r4 * (r2 - r1) * c2) / den
        }
        Interval::High => {
            let den = r1 - r3 + (r3 - r4) * s2;
            if den.abs() <= f64::EPSILON * r4.max(1.0) {
                return if c2 > 0.5 { r4 } else { r3 };
            }
            (r3 * (r1 - r4) + r1 * (r4 - r3) * c2) / den
        }
    }
}

/// Density of the periodic wave at phase coordinate ξ.
///
/// Low interval starts at ρ1 for ξ = 0, High interval starts at ρ4.
pub fn density_profile(xi: f64, wp: &WaveParams, m: EllipticModulus) -> f64 {
    let (sn, cn, _) = m.sn_cn_dn(omega_of_xi(xi, &wp.rho));
    profile_from_sn_cn(sn, cn, wp)
}

/// Density at phase angle θ (period 2π); θ = 0 is the same point as ξ = 0.
///
/// At m = 1 the wavelength is infinite; θ = 0 gives the soliton centre and
/// every other θ the background.
pub fn density_at_phase(theta: f64, wp: &WaveParams, m: EllipticModulus) -> f64 {
    match m.integrals() {
        Some(ci) => {
            let (sn, cn, _) = m.sn_cn_dn(ci.k * theta / std::f64::consts::PI);
            profile_from_sn_cn(sn, cn, wp)
        }
        None => {
            let t = theta.rem_euclid(2.0 * std::f64::consts::PI);
            if t == 0.0 {
                profile_from_sn_cn(0.0, 1.0, wp)
            } else {
                profile_from_sn_cn(1.0, 0.0, wp)
            }
        }
    }
}

/// Oscillation range (min, max) of the density on the chosen interval.
pub fn envelope(wp: &WaveParams) -> (f64, f64) {
    match wp.interval {
        Interval::Low => (wp.rho[0], wp.rho[1]),
        Interval::High => (wp.rho[2], wp.rho[3]),
    }
}

/// Direct m → 1 (Soliton) or m → 0 (Trig) limit of the periodic profile.
pub fn limit_profile(xi: f64, wp: &WaveParams, kind: LimitKind) -> Result<f64, OnePhaseError> {
    let [r1, r2, r3, r4] = wp.rho;
    let tol = 1e-8 * r4.max(1.0);
    let w = omega_of_xi(xi, &wp.rho);
    match kind {
        LimitKind::Soliton => {
            if (r3 - r2).abs() > tol {
                return Err(OnePhaseError::LimitPrecondition(wp.rho));
            }
            let sech = 1.0 / w.cosh();
            Ok(profile_from_sn_cn(w.tanh(), sech, wp))
        }
        LimitKind::Trig => {
            if (r2 - r1).abs() > tol && (r4 - r3).abs() > tol {
                return Err(OnePhaseError::LimitPrecondition(wp.rho));
            }
            Ok(profile_from_sn_cn(w.sin(), w.cos(), wp))
        }
    }
}

/// R(ρ) = Π (ρ − ρi).
pub fn quartic_r(rho: f64, wp: &WaveParams) -> f64 {
    wp.rho.iter().map(|r| rho - r).product()
}

fn symmetric_sums(l: [f64; 4]) -> (f64, f64) {
    let s1 = l.iter().sum();
    let mut s2 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            s2 += l[i] * l[j];
        }
    }
    (s1, s2)
}

/// Phase velocity V = 2 s2 − (3/2) s1².
pub fn phase_velocity(l: [f64; 4]) -> f64 {
    let (s1, s2) = symmetric_sums(l);
    2.0 * s2 - 1.5 * s1 * s1
}

/// Velocity ν as a function of the local density inside the periodic wave.
pub fn velocity_field(rho: f64, ms: &ModulationState) -> f64 {
    let (s1, s2) = symmetric_sums(ms.l);
    let p = ms.l.iter().product::<f64>().max(0.0).sqrt();
    let f0 = match ms.signs {
        SignSet::Upper => -p,
        SignSet::Lower => p,
    };
    0.5 * s1 - 0.25 * rho + (s1 * s1 - 4.0 * s2 + 8.0 * f0) / (4.0 * rho)
}
