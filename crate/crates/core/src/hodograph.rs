//! Hodograph solution of the Whitham equations for a cubic-root breaking profile.
//!
//! The left medium is l₋ = `l_minus`, l₊ = `l_plus`. Inside the DSW l1 = l₋ and l2 = l₊
//! are frozen while l3, l4 solve x − v_i t = ω_i for i = 3, 4.

use thiserror::Error;

use crate::hydro::{simple_wave_speed, DispersionlessPair};
use crate::onephase::{modulus, ModulationState, SignSet};
use crate::roots::{bisect, scan_bisect};
use crate::specfun::complete_integrals_comp;
use crate::whitham::{harmonic_limit_high, whitham_velocities};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HodographError {
    #[error("need 0 <= l_minus < l_plus, got ({0}, {1})")]
    InvalidData(f64, f64),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("degenerate modulation state {0:?}")]
    Degenerate([f64; 4]),
    #[error("x = {x} is outside the DSW fan [{x_left}, {x_right}] at t = {t}")]
    OutOfFan { x: f64, t: f64, x_left: f64, x_right: f64 },
    #[error("x = {x} at t = {t} lies where the dispersionless solution is multivalued")]
    OutOfRegion { x: f64, t: f64 },
    #[error("solver failed: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBreakData {
    pub l_minus: f64,
    pub l_plus: f64,
}

impl CubicBreakData {
    pub fn new(l_minus: f64, l_plus: f64) -> Result<Self, HodographError> {
        if l_minus.is_finite() && l_plus.is_finite() && 0.0 <= l_minus && l_minus < l_plus {
            Ok(Self { l_minus, l_plus })
        } else {
            Err(HodographError::InvalidData(l_minus, l_plus))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HodographCoeffs {
    pub c: [f64; 4],
}

pub fn hodograph_coefficients(d: &CubicBreakData) -> HodographCoeffs {
    let (m, p) = (d.l_minus, d.l_plus);
    HodographCoeffs {
        c: [
            -(35.0 * p * p * p + 35.0 * p * p * m - 7.0 * p * m * m + m * m * m) / 35.0,
            2.0 / 35.0 * (35.0 * p * p + 14.0 * p * m - m * m),
            -8.0 / 35.0 * (7.0 * p + m),
            16.0 / 35.0,
        ],
    }
}

fn sym(l: &[f64; 4]) -> (f64, f64, f64) {
    let [a, b, c, d] = *l;
    let e1 = a + b + c + d;
    let e2 = c * d + b * (c + d) + a * (b + c + d);
    let e3 = (a + b) * c * d + a * b * (c + d);
    (e1, e2, e3)
}

/// Expansion coefficients W⁽⁰⁾..W⁽³⁾ of the generating function.
pub fn w_terms(l: &[f64; 4]) -> [f64; 4] {
    let (e1, e2, e3) = sym(l);
    [
        1.0,
        0.5 * e1,
        0.375 * e1 * e1 - 0.5 * e2,
        0.5 * e3 + 5.0 / 16.0 * e1 * e1 * e1 - 0.75 * e1 * e2,
    ]
}

/// ∂W⁽ᵏ⁾/∂l_i.
pub fn w_terms_grad(l: &[f64; 4], i: usize) -> [f64; 4] {
    let (e1, e2, _) = sym(l);
    let li = l[i];
    let de2 = e1 - li;
    let de3 = e2 - li * (e1 - li);
    [
        0.0,
        0.5,
        0.75 * e1 - 0.5 * de2,
        0.5 * de3 + 15.0 / 16.0 * e1 * e1 - 0.75 * (e2 + e1 * de2),
    ]
}

/// ∂_i ln L for the wavelength L = 2K(m)/√((l3 − l1)(l4 − l2)).
pub fn dlog_wavelength(l: &[f64; 4]) -> Result<[f64; 4], HodographError> {
    let [l1, l2, l3, l4] = *l;
    let (a, b) = (l3 - l1, l4 - l2);
    if a <= 0.0 || b <= 0.0 {
        return Err(HodographError::Degenerate(*l));
    }
    let md = modulus(*l);
    if md.mc <= 0.0 {
        return Err(HodographError::Degenerate(*l));
    }
    let ci = complete_integrals_comp(md.m, md.mc);
    let kk = ci.dk_dm / ci.k;
    let dm = [
        -(l4 - l3) * (l3 - l2) / (a * a * b),
        (l4 - l3) * (l4 - l1) / (a * b * b),
        -(l2 - l1) * (l4 - l1) / (a * a * b),
        (l2 - l1) * (l3 - l2) / (a * b * b),
    ];
    let dpre = [-1.0 / a, -1.0 / b, 1.0 / a, 1.0 / b];
    Ok(std::array::from_fn(|i| kk * dm[i] - 0.5 * dpre[i]))
}

/// All four ω_i = Σ C⁽ᵏ⁾ (1 − (L/∂_iL) ∂_i) W⁽ᵏ⁾.
pub fn omegas(l: &[f64; 4], d: &CubicBreakData) -> Result<[f64; 4], HodographError> {
    let c = hodograph_coefficients(d).c;
    let dl = dlog_wavelength(l)?;
    let w = w_terms(l);
    let wt: f64 = c.iter().zip(w).map(|(a, b)| a * b).sum();
    Ok(std::array::from_fn(|i| {
        let g = w_terms_grad(l, i);
        let gt: f64 = c.iter().zip(g).map(|(a, b)| a * b).sum();
        wt - gt / dl[i]
    }))
}

/// ω_i for i in 1..=4.
pub fn omega(i: usize, ms: &ModulationState, d: &CubicBreakData) -> Result<f64, HodographError> {
    Ok(omegas(&ms.l, d)?[i - 1])
}

/// l4 at the soliton edge.
pub fn soliton_edge_l4(t: f64, d: &CubicBreakData) -> f64 {
    let (m, p) = (d.l_minus, d.l_plus);
    p + 3.5 * t + 0.5 * (7.0f64 / 3.0).sqrt() * (t * (4.0 * m + 20.0 * p + 21.0 * t)).sqrt()
}

/// Position of the soliton edge.
pub fn soliton_edge_x(t: f64, d: &CubicBreakData) -> f64 {
    let (m, p) = (d.l_minus, d.l_plus);
    let q = t * (4.0 * m + 20.0 * p + 21.0 * t);
    -49.0 * t * t * t / 4.0
        - t * (1.5 * m * m + 3.0 * m * p + 7.5 * p * p + (7.0 * m * t + 35.0 * p * t) / 2.0)
        - (7.0f64 / 3.0).sqrt() / 12.0 * q.powf(1.5)
}

fn harmonic_den(l4: f64, d: &CubicBreakData) -> f64 {
    let (m, p) = (d.l_minus, d.l_plus);
    16.0 * l4 * l4 * l4 - 16.0 * l4 * l4 * (m + p) + (m - p) * (m - p) * (m + p) + 4.0 * l4 * (m + p) * (m + p)
}

/// Time at which the harmonic edge carries l3 = l4 = `l4`.
///
/// The overall sign is the opposite of the form usually quoted, which gives t < 0.
pub fn harmonic_edge_time(l4: f64, d: &CubicBreakData) -> f64 {
    -quoted_harmonic_edge_time(l4, d)
}

/// The harmonic-edge time law with its quoted sign, kept for diagnostics.
pub fn quoted_harmonic_edge_time(l4: f64, d: &CubicBreakData) -> f64 {
    let (m, p) = (d.l_minus, d.l_plus);
    let num = 16.0 * l4 * l4 + 7.0 * m * m + 6.0 * m * p + 3.0 * p * p - 4.0 * l4 * (5.0 * m + 3.0 * p);
    -8.0 * (l4 - p) * (l4 - p) * num / (35.0 * harmonic_den(l4, d))
}

/// Position of the harmonic edge when it carries l3 = l4 = `l4`.
pub fn harmonic_edge_x(l4: f64, d: &CubicBreakData) -> f64 {
    let (m, p) = (d.l_minus, d.l_plus);
    let poly = 128.0 * l4 * l4 * l4 * (l4 - m + p)
        + 8.0 * l4 * l4 * (m * m - 30.0 * p * m - 19.0 * p * p)
        + (m - p) * (m - p) * (21.0 * m * m + 46.0 * m * p + 13.0 * p * p)
        - 4.0 * l4 * (m * m * m - 23.0 * m * m * p - 45.0 * m * p * p + 3.0 * p * p * p);
    -4.0 * (l4 - p) * (l4 - p) / (35.0 * harmonic_den(l4, d)) * poly
}

/// Residual of x − v_h t = −16(l4 − l₊)³(8l4 − 7l₋ − l₊)/(35(l₋ + l₊ − 2l4)) with v_h
/// the l3 = l4 Whitham velocity.
pub fn harmonic_edge_residual(x: f64, t: f64, l4: f64, d: &CubicBreakData) -> f64 {
    let (m, p) = (d.l_minus, d.l_plus);
    let v = harmonic_limit_high(m, p, l4);
    let rhs = -16.0 * (l4 - p).powi(3) * (8.0 * l4 - 7.0 * m - p) / (35.0 * (-2.0 * l4 + m + p));
    x - v * t - rhs
}

/// Residual of the harmonic-edge relation with the velocity coefficient as usually quoted.
pub fn quoted_harmonic_edge_residual(x: f64, t: f64, l4: f64, d: &CubicBreakData) -> f64 {
    let (m, p) = (d.l_minus, d.l_plus);
    let rhs = -16.0 * (l4 - p).powi(3) * (8.0 * l4 - 7.0 * m - p) / (35.0 * (-2.0 * l4 + m + p));
    x + (12.0 * l4 * l4 - 2.0 / 3.0 * (m - p) * (m - p)) * t - rhs
}

/// l3 = l4 at the harmonic edge at time t.
pub fn harmonic_edge_l4(t: f64, d: &CubicBreakData) -> Result<f64, HodographError> {
    if t < 0.0 {
        return Err(HodographError::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(d.l_plus);
    }
    let p = d.l_plus;
    let mut hi = p + 1.0 + 4.0 * t;
    while harmonic_edge_time(hi, d) < t {
        hi = p + 2.0 * (hi - p);
        if hi > 1e8 * (1.0 + p) {
            return Err(HodographError::Solver(format!("harmonic edge time not reached for t = {t}")));
        }
    }
    scan_bisect(|l| harmonic_edge_time(l, d) - t, p, hi, 64, t)
        .map_err(|_| HodographError::Solver(format!("harmonic edge bracket failed at t = {t}")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeLaws {
    pub x_left: f64,
    pub x_right: f64,
    pub l4_soliton: f64,
    pub l4_harmonic: f64,
}

pub fn edge_laws(t: f64, d: &CubicBreakData) -> Result<EdgeLaws, HodographError> {
    if t < 0.0 {
        return Err(HodographError::NegativeTime(t));
    }
    let lh = harmonic_edge_l4(t, d)?;
    Ok(EdgeLaws {
        x_left: harmonic_edge_x(lh, d),
        x_right: soliton_edge_x(t, d),
        l4_soliton: soliton_edge_l4(t, d),
        l4_harmonic: lh,
    })
}

/// Residuals x − v_i t − ω_i for i = 3, 4.
pub fn hodograph_residuals(x: f64, t: f64, l3: f64, l4: f64, d: &CubicBreakData) -> Result<[f64; 2], HodographError> {
    let l = [d.l_minus, d.l_plus, l3, l4];
    let om = omegas(&l, d)?;
    let v = whitham_velocities(l).map_err(|_| HodographError::Degenerate(l))?;
    Ok([x - v[2] * t - om[2], x - v[3] * t - om[3]])
}

/// (v4 − v3)t − (ω3 − ω4) divided by (l4 − l3) to remove the trivial root l4 = l3.
fn reduced_gap(l3: f64, l4: f64, t: f64, d: &CubicBreakData) -> f64 {
    let l = [d.l_minus, d.l_plus, l3, l4];
    match (omegas(&l, d), whitham_velocities(l)) {
        (Ok(om), Ok(v)) => ((v[3] - v[2]) * t - (om[2] - om[3])) / (l4 - l3),
        _ => f64::NAN,
    }
}

/// l4 on the fan curve at time t for a given l3 ∈ (l₊, l_h].
fn fan_l4(l3: f64, t: f64, lh: f64, ls: f64, d: &CubicBreakData) -> Result<f64, HodographError> {
    let lo = lh.max(l3 + 1e-12 * (1.0 + l3));
    let hi = ls + 0.05 * (ls - d.l_plus) + 1e-9;
    scan_bisect(|l4| reduced_gap(l3, l4, t, d), lo, hi, 32, 0.0)
        .map_err(|(a, b)| HodographError::Solver(format!("fan curve not bracketed at l3 = {l3}, t = {t}: ({a}, {b})")))
}

/// Solves the i = 3, 4 hodograph relations for (l3, l4) at (x, t) inside the fan.
pub fn solve_cubic_modulation(x: f64, t: f64, d: &CubicBreakData) -> Result<ModulationState, HodographError> {
    if t < 0.0 {
        return Err(HodographError::NegativeTime(t));
    }
    let p = d.l_plus;
    if t == 0.0 {
        if x == 0.0 {
            return Ok(ModulationState { l: [d.l_minus, p, p, p], signs: SignSet::Upper });
        }
        return Err(HodographError::OutOfFan { x, t, x_left: 0.0, x_right: 0.0 });
    }
    let e = edge_laws(t, d)?;
    if x < e.x_left || x > e.x_right {
        return Err(HodographError::OutOfFan { x, t, x_left: e.x_left, x_right: e.x_right });
    }
    let (lh, ls) = (e.l4_harmonic, e.l4_soliton);
    let x_of = |l3: f64| -> f64 {
        match fan_l4(l3, t, lh, ls, d) {
            Ok(l4) => {
                let l = [d.l_minus, p, l3, l4];
                match (omegas(&l, d), whitham_velocities(l)) {
                    (Ok(om), Ok(v)) => om[2] + v[2] * t,
                    _ => f64::NAN,
                }
            }
            Err(_) => f64::NAN,
        }
    };
    // l3 → l₊ is the soliton edge, l3 → l_h the harmonic edge
    let l3_lo = p + 1e-12 * (1.0 + p);
    let f = |l3: f64| x_of(l3) - x;
    let (f_lo, f_hi) = (f(l3_lo), e.x_left - x);
    let l3 = if f_lo == 0.0 {
        l3_lo
    } else if f_hi == 0.0 || (f_hi.abs() < 1e-12 * (1.0 + x.abs())) {
        lh
    } else if f_lo * f_hi < 0.0 {
        bisect(&f, l3_lo, lh, f_lo)
    } else if f_lo.abs() < 1e-9 * (1.0 + x.abs()) {
        l3_lo
    } else {
        return Err(HodographError::Solver(format!("l3 not bracketed at x = {x}, t = {t}: ({f_lo}, {f_hi})")));
    };
    let mut l4 = if l3 >= lh { lh } else { fan_l4(l3, t, lh, ls, d)? };
    let mut l3 = l3;
    polish(x, t, &mut l3, &mut l4, d);
    Ok(ModulationState { l: [d.l_minus, p, l3, l4], signs: SignSet::Upper })
}

fn polish(x: f64, t: f64, l3: &mut f64, l4: &mut f64, d: &CubicBreakData) {
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let Ok(mut r) = hodograph_residuals(x, t, *l3, *l4, d) else { return };
    for _ in 0..4 {
        if norm(r) < 1e-14 {
            return;
        }
        let h3 = 1e-7 * (1.0 + l3.abs());
        let h4 = 1e-7 * (1.0 + l4.abs());
        let (Ok(a), Ok(b)) = (
            hodograph_residuals(x, t, *l3 + h3, *l4, d),
            hodograph_residuals(x, t, *l3, *l4 + h4, d),
        ) else {
            return;
        };
        let j = [[(a[0] - r[0]) / h3, (b[0] - r[0]) / h4], [(a[1] - r[1]) / h3, (b[1] - r[1]) / h4]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return;
        }
        let d3 = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let d4 = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let (n3, n4) = (*l3 - d3, *l4 - d4);
        if !(n3 > d.l_plus && n4 >= n3) {
            return;
        }
        match hodograph_residuals(x, t, n3, n4, d) {
            Ok(nr) if norm(nr) < norm(r) => {
                *l3 = n3;
                *l4 = n4;
                r = nr;
            }
            _ => return,
        }
    }
}

/// l₊ from x − v₊(l₊) t = (l₊ − l₊^L)³ with l₋ = l₋^L, where it has a single real root.
pub fn dispersionless_profile(x: f64, t: f64, d: &CubicBreakData) -> Result<DispersionlessPair, HodographError> {
    let (m, p) = (d.l_minus, d.l_plus);
    let f = |l: f64| (l - p).powi(3) + simple_wave_speed(l, m) * t - x;
    // f'(l) = 3(l − p)² − 1.5 t (10 l + 2 m); only roots with l ≥ l₋ are physical
    let (qa, qb, qc) = (3.0, -6.0 * p - 15.0 * t, 3.0 * p * p - 3.0 * t * m);
    let disc = qb * qb - 4.0 * qa * qc;
    let mut knots = Vec::new();
    if disc > 0.0 {
        knots.push((-qb - disc.sqrt()) / (2.0 * qa));
        knots.push((-qb + disc.sqrt()) / (2.0 * qa));
    }
    let mut w = 1.0 + x.abs().cbrt() + 10.0 * t.abs() + p + knots.iter().fold(0.0f64, |a, k| a.max(k.abs()));
    while f(-w) > 0.0 || f(w) < 0.0 {
        w *= 2.0;
        if !w.is_finite() {
            return Err(HodographError::Solver(format!("cubic root not bracketed at x = {x}, t = {t}")));
        }
    }
    knots.insert(0, -w);
    knots.push(w);
    let mut roots = Vec::new();
    for k in knots.windows(2) {
        let (fa, fb) = (f(k[0]), f(k[1]));
        if fa == 0.0 {
            roots.push(k[0]);
        } else if fa * fb < 0.0 {
            roots.push(bisect(&f, k[0], k[1], fa));
        }
    }
    let physical: Vec<f64> = roots.iter().copied().filter(|&l| l >= m).collect();
    let l = match physical[..] {
        [] => return Err(HodographError::OutOfRegion { x, t }),
        [l] => l,
        _ if t <= 0.0 => physical[physical.len() - 1],
        _ => {
            // the far-field branch: largest root right of the fan, smallest left of it
            let e = edge_laws(t, d)?;
            if x > e.x_right {
                physical[physical.len() - 1]
            } else if x < e.x_left {
                physical[0]
            } else {
                return Err(HodographError::OutOfRegion { x, t });
            }
        }
    };
    Ok(DispersionlessPair { l_minus: m, l_plus: l })
}

/// One-sided breaking profile at t = 0: l₊ = l₊^L for x ≤ 0 and l₊^L + x^{1/3} for x > 0.
pub fn one_sided_initial_profile(x: f64, d: &CubicBreakData) -> f64 {
    if x <= 0.0 {
        d.l_plus
    } else {
        d.l_plus + x.cbrt()
    }
}
