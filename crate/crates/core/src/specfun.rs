//! Complete elliptic integrals and Jacobi elliptic functions.
//!
//! Everything is parametrized by the parameter `m` (not the modulus `k = √m`).
//! The `_comp` variants take the complementary parameter `mc = 1 − m` directly,
//! which keeps full relative accuracy when `m` is within rounding of 1.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum SpecFunError {
    #[error("elliptic parameter m = {0} is outside the admissible range")]
    Domain(f64),
}

/// Elliptic parameter together with its complement `mc = 1 − m`.
///
/// Carrying `mc` separately keeps it exact when it is computed from
/// differences of Riemann invariants rather than as `1.0 - m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    pub m: f64,
    pub mc: f64,
}

impl EllipticModulus {
    pub fn new(m: f64) -> Result<Self, SpecFunError> {
        if !(0.0..=1.0).contains(&m) {
            return Err(SpecFunError::Domain(m));
        }
        Ok(Self { m, mc: 1.0 - m })
    }

    /// Builds from the complement; `mc` is clamped into [0, 1].
    pub fn from_complement(mc: f64) -> Self {
        let mc = mc.clamp(0.0, 1.0);
        Self { m: 1.0 - mc, mc }
    }

    pub fn integrals(&self) -> Option<CompleteIntegrals> {
        (self.mc > 0.0).then(|| complete_integrals_comp(self.m, self.mc))
    }

    pub fn sn_cn_dn(&self, u: f64) -> (f64, f64, f64) {
        jacobi_sn_cn_dn_comp(u, self.mc)
    }
}

/// K(m), E(m) and the derived quantities needed downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteIntegrals {
    pub k: f64,
    pub e: f64,
    /// K − E, accurate also for small m where the subtraction would cancel.
    pub k_minus_e: f64,
    /// dK/dm; equals π/8 at m = 0.
    pub dk_dm: f64,
}

const AGM_TOL: f64 = 1e-17;

/// AGM evaluation from `m` and `mc = 1 − m`; both must be supplied consistently.
pub fn complete_integrals_comp(m: f64, mc: f64) -> CompleteIntegrals {
    debug_assert!(mc > 0.0);
    let mut a = 1.0_f64;
    let mut b = mc.sqrt();
    let mut c = m.sqrt();
    // s = (K − E)/(m K) = Σ 2^{n−1} c_n² / m, accumulated without dividing by m
    let mut q = 1.0_f64;
    let mut w = 0.5_f64;
    let mut s = 0.5_f64;
    for _ in 0..64 {
        if c <= AGM_TOL * a {
            break;
        }
        let a1 = 0.5 * (a + b);
        let c1 = c * c / (4.0 * a1);
        q *= c * c / (16.0 * a1 * a1);
        w *= 2.0;
        s += w * q;
        b = (a * b).sqrt();
        a = a1;
        c = c1;
    }
    let k = FRAC_PI_2 / a;
    let k_minus_e = k * m * s;
    let e = k - k_minus_e;
    let dk_dm = if m < 0.5 {
        0.5 * k * (1.0 - s) / mc
    } else {
        (e - mc * k) / (2.0 * m * mc)
    };
    CompleteIntegrals {
        k,
        e,
        k_minus_e,
        dk_dm,
    }
}

/// K(m), E(m), K − E and dK/dm for 0 ≤ m < 1.
pub fn complete_integrals(m: f64) -> Result<CompleteIntegrals, SpecFunError> {
    if !(0.0..1.0).contains(&m) {
        return Err(SpecFunError::Domain(m));
    }
    Ok(complete_integrals_comp(m, 1.0 - m))
}

/// Complete elliptic integral of the first kind.
pub fn ellip_k(m: f64) -> Result<f64, SpecFunError> {
    complete_integrals(m).map(|ci| ci.k)
}

/// Complete elliptic integral of the second kind, defined on the closed range 0 ≤ m ≤ 1.
pub fn ellip_e(m: f64) -> Result<f64, SpecFunError> {
    if m == 1.0 {
        return Ok(1.0);
    }
    complete_integrals(m).map(|ci| ci.e)
}

/// dK/dm = (E − (1 − m)K) / (2m(1 − m)).
pub fn ellip_dk_dm(m: f64) -> Result<f64, SpecFunError> {
    complete_integrals(m).map(|ci| ci.dk_dm)
}

/// Jacobi sn, cn, dn.
pub fn jacobi_sn_cn_dn(u: f64, m: f64) -> Result<(f64, f64, f64), SpecFunError> {
    if !(0.0..=1.0).contains(&m) || !u.is_finite() {
        return Err(SpecFunError::Domain(m));
    }
    Ok(jacobi_sn_cn_dn_comp(u, 1.0 - m))
}

/// Jacobi sn, cn, dn from the complementary parameter, by descending Landen/AGM.
pub fn jacobi_sn_cn_dn_comp(u: f64, mc: f64) -> (f64, f64, f64) {
    if mc <= 0.0 {
        let sech = 1.0 / u.cosh();
        return (u.tanh(), sech, sech);
    }
    const CA: f64 = 1e-9;
    let mut em = [0.0_f64; 16];
    let mut en = [0.0_f64; 16];
    let mut a = 1.0_f64;
    let mut emc = mc;
    let mut c = 1.0_f64;
    let mut l = 0;
    for i in 0..16 {
        l = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= CA * a {
            break;
        }
        emc *= a;
        a = c;
    }
    let v = c * u;
    let mut sn = v.sin();
    let mut cn = v.cos();
    let mut dn = 1.0_f64;
    if sn != 0.0 {
        let mut a = cn / sn;
        c *= a;
        for ii in (0..=l).rev() {
            let b = em[ii];
            a *= c;
            c *= dn;
            dn = (en[ii] + a) / (b + a);
            a = c / b;
        }
        let r = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { r } else { -r };
        cn = c * sn;
    }
    (sn, cn, dn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    // Independent oracle: the integrands are smooth and even-periodic in θ,
    // so the trapezoid rule converges geometrically.
    fn quad_k_e(m: f64) -> (f64, f64) {
        let n = 4000;
        let h = FRAC_PI_2 / n as f64;
        let (mut k, mut e) = (0.0, 0.0);
        for j in 0..=n {
            let th = j as f64 * h;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            let d = (1.0 - m * th.sin().powi(2)).sqrt();
            k += w / d;
            e += w * d;
        }
        (k * h, e * h)
    }

    const K_HALF: f64 = 1.8540746773013719;
    const E_HALF: f64 = 1.3506438810476755;

    #[test]
    fn frozen_values_match_quadrature_oracle() {
        let (k, e) = quad_k_e(0.5);
        assert!((k - K_HALF).abs() < 1e-14 * K_HALF);
        assert!((e - E_HALF).abs() < 1e-14 * E_HALF);
    }

    #[test]
    fn k_and_e_at_half() {
        assert!((ellip_k(0.5).unwrap() - K_HALF).abs() <= 1e-14 * K_HALF);
        assert!((ellip_e(0.5).unwrap() - E_HALF).abs() <= 1e-14 * E_HALF);
    }

    #[test]
    fn endpoint_values() {
        assert_eq!(ellip_k(0.0).unwrap(), FRAC_PI_2);
        assert_eq!(ellip_e(0.0).unwrap(), FRAC_PI_2);
        assert_eq!(ellip_e(1.0).unwrap(), 1.0);
        assert!(matches!(ellip_k(1.0), Err(SpecFunError::Domain(_))));
        assert!(ellip_k(-0.1).is_err());
        assert!(ellip_e(1.1).is_err());
        let ci = complete_integrals(0.0).unwrap();
        assert_eq!(ci.k_minus_e, 0.0);
        assert!((ci.dk_dm - PI / 8.0).abs() < 1e-16);
    }

    #[test]
    fn oracle_agreement_on_a_sweep() {
        for i in 1..20 {
            let m = i as f64 / 20.0;
            let (k, e) = quad_k_e(m);
            let ci = complete_integrals(m).unwrap();
            assert!((ci.k - k).abs() < 1e-13 * k, "K at {m}");
            assert!((ci.e - e).abs() < 1e-13 * e, "E at {m}");
        }
    }

    #[test]
    fn k_minus_e_small_parameter_series() {
        // K − E = (π/4) m (1 + 3m/8 + ...)
        let m = 1e-9;
        let ci = complete_integrals(m).unwrap();
        let series = PI / 4.0 * m * (1.0 + 3.0 * m / 8.0);
        assert!((ci.k_minus_e - series).abs() < 1e-15 * series);
    }

    #[test]
    fn near_one_uses_complement() {
        // K ≈ ln(4/√mc) + (mc/4)(ln(4/√mc) − 1) for tiny mc
        let mc = 1e-12;
        let ci = complete_integrals_comp(1.0 - mc, mc);
        let lam = (4.0 / mc.sqrt()).ln();
        let approx = lam + 0.25 * mc * (lam - 1.0);
        assert!((ci.k - approx).abs() < 1e-14 * approx);
        assert!((ci.e - 1.0).abs() < 1e-10);
    }

    #[test]
    fn jacobi_special_points() {
        assert_eq!(jacobi_sn_cn_dn(0.0, 0.7).unwrap(), (0.0, 1.0, 1.0));
        let (s, c, d) = jacobi_sn_cn_dn(0.9, 0.0).unwrap();
        assert!((s - 0.9_f64.sin()).abs() < 1e-15);
        assert!((c - 0.9_f64.cos()).abs() < 1e-15);
        assert!((d - 1.0).abs() < 1e-15);
        for &m in &[0.1, 0.5, 0.9, 0.999999] {
            let k = ellip_k(m).unwrap();
            let (s, c, d) = jacobi_sn_cn_dn(k, m).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(c.abs() < 1e-7, "cn(K) at m={m}: {c}");
            assert!((d - (1.0 - m).sqrt()).abs() < 1e-12);
        }
        let (s, c, d) = jacobi_sn_cn_dn(1.3, 1.0).unwrap();
        assert!((s - 1.3_f64.tanh()).abs() < 1e-16);
        assert!((c - 1.0 / 1.3_f64.cosh()).abs() < 1e-16);
        assert_eq!(c, d);
    }

    #[test]
    fn dk_dm_matches_finite_differences() {
        for i in 1..=18 {
            let m = 0.05 * i as f64 - 0.0;
            let m = m.min(0.95);
            let h = 1e-5;
            let fd = (ellip_k(m + h).unwrap() - ellip_k(m - h).unwrap()) / (2.0 * h);
            let an = ellip_dk_dm(m).unwrap();
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "m={m}");
        }
    }

    proptest! {
        #[test]
        fn legendre_relation(m in 1e-6f64..(1.0 - 1e-6)) {
            let a = complete_integrals(m).unwrap();
            let b = complete_integrals(1.0 - m).unwrap();
            let lhs = a.e * b.k + b.e * a.k - a.k * b.k;
            prop_assert!((lhs - FRAC_PI_2).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_m(m in 0.0f64..0.98, dm in 1e-4f64..0.02) {
            prop_assert!(ellip_k(m + dm).unwrap() > ellip_k(m).unwrap());
            prop_assert!(ellip_e(m + dm).unwrap() < ellip_e(m).unwrap());
            prop_assert!(ellip_k(m).unwrap() >= FRAC_PI_2);
        }

        #[test]
        fn jacobi_identities(u in -30.0f64..30.0, m in 0.0f64..=1.0) {
            let (s, c, d) = jacobi_sn_cn_dn(u, m).unwrap();
            prop_assert!((s * s + c * c - 1.0).abs() < 1e-12);
            prop_assert!((d * d + m * s * s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sn_period(u in -5.0f64..5.0, m in 0.0f64..0.999) {
            let k = ellip_k(m).unwrap();
            let a = jacobi_sn_cn_dn(u, m).unwrap();
            let b = jacobi_sn_cn_dn(u + 4.0 * k, m).unwrap();
            prop_assert!((a.0 - b.0).abs() < 1e-10);
            prop_assert!((a.1 - b.1).abs() < 1e-10);
        }
    }
}
