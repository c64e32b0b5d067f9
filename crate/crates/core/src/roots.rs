//! Scalar root bracketing shared by the self-similar and hodograph solvers.

/// Root of `f` on [lo, hi] (either order): scan `n` subintervals for a sign change, then bisect.
///
/// When no sign change exists but an endpoint value is within 1e-9 of the function scale
/// (`scale` is an extra floor for it), that endpoint is returned. Otherwise the endpoint
/// values are returned as the error.
pub(crate) fn scan_bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, scale: f64) -> Result<f64, (f64, f64)> {
    let ps: Vec<f64> = (0..=n)
        .map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 })
        .collect();
    let fs: Vec<f64> = ps.iter().map(|&p| f(p)).collect();
    if let Some(i) = fs.iter().position(|&v| v == 0.0) {
        return Ok(ps[i]);
    }
    for i in 0..n {
        if fs[i].is_finite() && fs[i + 1].is_finite() && fs[i] * fs[i + 1] < 0.0 {
            return Ok(bisect(&f, ps[i], ps[i + 1], fs[i]));
        }
    }
    let scale = fs.iter().filter(|v| v.is_finite()).fold(scale, |m, v| m.max(v.abs())).max(1.0);
    let (f_lo, f_hi) = (fs[0], fs[n]);
    if f_lo.abs() <= f_hi.abs() && f_lo.abs() <= 1e-9 * scale {
        return Ok(lo);
    }
    if f_hi.abs() <= 1e-9 * scale {
        return Ok(hi);
    }
    Err((f_lo, f_hi))
}

/// Bisection to machine precision given a sign change between x0 and x1 (f(x0) = f0).
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: &F, mut x0: f64, mut x1: f64, mut f0: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (x0 + x1);
        if mid == x0 || mid == x1 {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm * f0 < 0.0 {
            x1 = mid;
        } else {
            x0 = mid;
            f0 = fm;
        }
    }
    0.5 * (x0 + x1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_root() {
        let r = scan_bisect(|x| x * x - 2.0, 0.0, 3.0, 16, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let r = scan_bisect(|x| x * x - 2.0, 3.0, 0.0, 16, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn endpoint_roots_and_failures() {
        assert_eq!(scan_bisect(|x| x - 1.0, 0.0, 1.0, 8, 0.0), Ok(1.0));
        assert_eq!(scan_bisect(|x| x - 1.0 - 1e-12, 0.0, 1.0, 8, 0.0), Ok(1.0));
        assert!(scan_bisect(|x| x + 1.0, 0.0, 1.0, 8, 0.0).is_err());
    }
}
