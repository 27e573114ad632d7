use crate::error::{Error, Result};

/// Brent's method on a bracket `[a, b]` with `f(a) * f(b) <= 0`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Root(format!(
            "no sign change on [{a}, {b}]: f = {fa:e}, {fb:e}"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..400 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Root(format!("Brent did not converge near {b}")))
}

/// Grows `hi` geometrically from `lo` until `f` changes sign.
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    max_hi: f64,
) -> Result<(f64, f64)> {
    let flo = f(lo);
    let mut a = lo;
    let mut b = hi;
    while b <= max_hi {
        let fb = f(b);
        if fb == 0.0 || fb.signum() != flo.signum() {
            return Ok((a, b));
        }
        a = b;
        b *= 2.0;
    }
    Err(Error::Root(format!("no sign change found up to {max_hi}")))
}
