//! Whitham characteristic velocities of the one-phase modulation system.

use thiserror::Error;

use crate::hydro::{char_velocities, DispersionlessPair};
use crate::onephase::{modulus, phase_velocity};
use crate::specfun::complete_integrals_comp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhithamError {
    #[error("Riemann invariants must satisfy 0 <= l1 <= l2 <= l3 <= l4, got {0:?}")]
    Unordered([f64; 4]),
}

/// Relative gap below which a closed-form degenerate limit replaces the general formula.
pub const GAP_TOL: f64 = 1e-8;

fn chars(lm: f64, lp: f64) -> (f64, f64) {
    char_velocities(DispersionlessPair {
        l_minus: lm,
        l_plus: lp,
    })
}

/// v2 = v3 at the soliton limit l2 = l3.
pub fn soliton_limit(l1: f64, l3: f64, l4: f64) -> f64 {
    0.5 * (-3.0 * l1 * l1 - 8.0 * l3 * l3 - 4.0 * l3 * l4 - 3.0 * l4 * l4 - 2.0 * l1 * (2.0 * l3 + l4))
}

/// v1 = v2 at the harmonic limit l2 = l1.
pub fn harmonic_limit_low(l1: f64, l3: f64, l4: f64) -> f64 {
    let d2 = (l3 - l4) * (l3 - l4);
    let num = 48.0 * l1 * l1 * l1 - 6.0 * l1 * d2 - 24.0 * l1 * l1 * (l3 + l4) - 3.0 * d2 * (l3 + l4);
    let den = 4.0 * l1 - 2.0 * (l3 + l4);
    if den == 0.0 {
        return -12.0 * l1 * l1;
    }
    -num / den
}

/// v3 = v4 at the harmonic limit l3 = l4.
///
/// This is the value the general formula tends to. The closed form usually quoted
/// has the opposite sign on the rational term; see [`quoted_harmonic_limit_high`].
pub fn harmonic_limit_high(l1: f64, l2: f64, l4: f64) -> f64 {
    let v = phase_velocity([l1, l2, l4, l4]);
    let den = 2.0 * l4 - l1 - l2;
    if den == 0.0 {
        return -12.0 * l4 * l4;
    }
    v - 4.0 * (l4 - l2) * (l4 - l1) * (l1 + l2 + 4.0 * l4) / den
}

/// The l3 = l4 limit with the rational correction term of the opposite sign.
///
/// Kept only to report how far it is from the actual limit of the general formula.
pub fn quoted_harmonic_limit_high(l1: f64, l2: f64, l4: f64) -> f64 {
    let v = 0.5
        * (-3.0 * l1 * l1 - 3.0 * l2 * l2 - 4.0 * l2 * l4 - 8.0 * l4 * l4 - 2.0 * l1 * (2.0 * l4 + l2));
    v + 4.0 * (l1 - l4) * (l4 - l2) * (l1 + l2 + 4.0 * l4) / (l1 + l2 - 2.0 * l4)
}

/// The general elliptic expressions with no degeneracy handling.
///
/// Returns non-finite values at exact degeneracies.
pub fn general_velocities(l: [f64; 4]) -> [f64; 4] {
    let [l1, l2, l3, l4] = l;
    let md = modulus(l);
    let ci = complete_integrals_comp(md.m, md.mc);
    let (k, kme) = (ci.k, ci.k_minus_e);
    let v = phase_velocity(l);
    // denominators rewritten so that no two large terms cancel near m = 0
    let d1 = -(l4 - l2) * kme - (l2 - l1) * k;
    let d2 = (l3 - l1) * kme - (l2 - l1) * k;
    let d3 = (l4 - l3) * k - (l4 - l2) * kme;
    let d4 = -(l3 - l1) * kme - (l4 - l3) * k;
    [
        v - 2.0 * (l1 - l2) * (l1 - l4) * (3.0 * l1 + l2 + l3 + l4) * k / d1,
        v - 2.0 * (l1 - l2) * (l2 - l3) * (l1 + 3.0 * l2 + l3 + l4) * k / d2,
        v - 2.0 * (l3 - l4) * (l2 - l3) * (l1 + l2 + 3.0 * l3 + l4) * k / d3,
        v - 2.0 * (l1 - l4) * (l4 - l3) * (l1 + l2 + l3 + 3.0 * l4) * k / d4,
    ]
}

fn ordered(l: &[f64; 4]) -> bool {
    l.iter().all(|x| x.is_finite()) && l[0] >= 0.0 && l[0] <= l[1] && l[1] <= l[2] && l[2] <= l[3]
}

/// The four Whitham velocities, switching to closed-form limits near degeneracies.
pub fn whitham_velocities(l: [f64; 4]) -> Result<[f64; 4], WhithamError> {
    if !ordered(&l) {
        return Err(WhithamError::Unordered(l));
    }
    let [l1, l2, l3, l4] = l;
    let width = l4 - l1;
    if width <= GAP_TOL * l4.max(f64::MIN_POSITIVE) || width == 0.0 {
        let mean = 0.25 * (l1 + l2 + l3 + l4);
        return Ok([-12.0 * mean * mean; 4]);
    }
    if (l2 - l1) / width < GAP_TOL {
        let lim = harmonic_limit_low(l1, l3, l4);
        let (v3, v4) = chars(l3, l4);
        return Ok([lim, lim, v3, v4]);
    }
    if (l4 - l3) / width < GAP_TOL {
        let lim = harmonic_limit_high(l1, l2, l4);
        let (v1, v2) = chars(l1, l2);
        return Ok([v1, v2, lim, lim]);
    }
    let md = modulus(l);
    if md.mc < GAP_TOL {
        let lim = soliton_limit(l1, l3, l4);
        if md.mc == 0.0 {
            let (v1, v4) = chars(l1, l4);
            return Ok([v1, lim, lim, v4]);
        }
        let g = general_velocities(l);
        return Ok([g[0], lim, lim, g[3]]);
    }
    Ok(general_velocities(l))
}
