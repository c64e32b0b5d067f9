//! Madelung variables, dispersionless Riemann invariants and characteristic speeds.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HydroError {
    #[error("state outside the hyperbolicity domain: rho = {rho}, nu = {nu}")]
    OutsideDomain { rho: f64, nu: f64 },
    #[error("invalid Riemann invariants: l_minus = {l_minus}, l_plus = {l_plus}")]
    InvalidPair { l_minus: f64, l_plus: f64 },
}

/// Density and velocity (phase gradient).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HydroState {
    pub rho: f64,
    pub nu: f64,
}

impl HydroState {
    pub fn new(rho: f64, nu: f64) -> Result<Self, HydroError> {
        if rho.is_finite() && nu.is_finite() && rho >= 0.0 && nu >= 0.0 {
            Ok(Self { rho, nu })
        } else {
            Err(HydroError::OutsideDomain { rho, nu })
        }
    }

    pub fn branch(&self) -> Branch {
        if self.rho >= 2.0 * self.nu {
            Branch::Upper
        } else {
            Branch::Lower
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionlessPair {
    pub l_minus: f64,
    pub l_plus: f64,
}

impl DispersionlessPair {
    pub fn new(l_minus: f64, l_plus: f64) -> Result<Self, HydroError> {
        if l_minus.is_finite() && l_plus.is_finite() && l_minus >= 0.0 && l_plus >= l_minus {
            Ok(Self { l_minus, l_plus })
        } else {
            Err(HydroError::InvalidPair { l_minus, l_plus })
        }
    }
}

/// Side of the line ρ = 2ν on which a state lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// ρ ≥ 2ν
    Upper,
    /// ρ ≤ 2ν
    Lower,
}

pub fn invariants_from_state(s: HydroState) -> Result<DispersionlessPair, HydroError> {
    let s = HydroState::new(s.rho, s.nu)?;
    let a = s.rho.sqrt();
    let b = (2.0 * s.nu).sqrt();
    let lp = 0.25 * (a + b) * (a + b);
    let lm = 0.25 * (a - b) * (a - b);
    Ok(DispersionlessPair {
        l_minus: lm.min(lp),
        l_plus: lp,
    })
}

pub fn state_from_invariants(p: DispersionlessPair, branch: Branch) -> HydroState {
    let sp = p.l_plus.sqrt();
    let sm = p.l_minus.sqrt();
    match branch {
        Branch::Upper => HydroState {
            rho: (sp + sm) * (sp + sm),
            nu: 0.5 * (sp - sm) * (sp - sm),
        },
        Branch::Lower => HydroState {
            rho: (sp - sm) * (sp - sm),
            nu: 0.5 * (sp + sm) * (sp + sm),
        },
    }
}

/// Characteristic speeds `(v_minus, v_plus)` of the dispersionless system.
pub fn char_velocities(p: DispersionlessPair) -> (f64, f64) {
    let (lm, lp) = (p.l_minus, p.l_plus);
    (
        -1.5 * (5.0 * lm * lm + 2.0 * lp * lm + lp * lp),
        -1.5 * (5.0 * lp * lp + 2.0 * lp * lm + lm * lm),
    )
}

/// Speed of a single invariant `own` when the other one equals `other`.
pub fn simple_wave_speed(own: f64, other: f64) -> f64 {
    -1.5 * (5.0 * own * own + 2.0 * own * other + other * other)
}

/// Inverts `simple_wave_speed(l, other) = z` on the admissible root l ≥ 0.
///
/// Returns `None` when no admissible root exists.
pub fn invert_simple_wave(z: f64, other: f64) -> Option<f64> {
    // 5l² + 2 l o + o² + 2z/3 = 0
    let disc = -4.0 * other * other - 10.0 * z / 3.0;
    if disc < 0.0 {
        return None;
    }
    let l = (-other + disc.sqrt()) / 5.0;
    if l < 0.0 {
        None
    } else {
        Some(l)
    }
}
