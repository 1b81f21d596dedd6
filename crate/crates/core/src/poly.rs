//! Polynomial helpers in root and coefficient form.

use crate::error::{Error, Result};
use crate::C;
use faer::Mat;

/// Evaluates the monic polynomial with the given roots.
pub fn eval_roots(roots: &[C], x: C) -> C {
    roots.iter().fold(C::new(1.0, 0.0), |acc, r| acc * (x - r))
}

/// Horner evaluation of ascending coefficients.
pub fn eval_coeffs(c: &[C], x: C) -> C {
    c.iter().rev().fold(C::new(0.0, 0.0), |acc, &ck| acc * x + ck)
}

/// Ascending coefficients of the monic polynomial with the given roots.
pub fn coeffs_from_roots(roots: &[C]) -> Vec<C> {
    let mut c = vec![C::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![C::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= r * ck;
        }
        c = next;
    }
    c
}

/// Derivative coefficients.
pub fn derivative(c: &[C]) -> Vec<C> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| ck * k as f64)
        .collect()
}

/// Roots of a polynomial given by ascending coefficients, via the companion
/// matrix followed by a few Newton steps on each root.
pub fn roots_of(c: &[C]) -> Result<Vec<C>> {
    let mut deg = c.len().saturating_sub(1);
    while deg > 0 && c[deg].norm() == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let monic: Vec<C> = c[..=deg].iter().map(|&x| x / lead).collect();
    let comp = Mat::<C>::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -monic[deg - 1 - j]
        } else if i == j + 1 {
            C::new(1.0, 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    });
    let mut roots = comp
        .eigenvalues()
        .map_err(|e| Error::NoConvergence(format!("companion eigenvalues: {e:?}")))?;
    let dc = derivative(&monic);
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let f = eval_coeffs(&monic, *r);
            let df = eval_coeffs(&dc, *r);
            if df.norm() == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *r -= step;
            if step.norm() <= 1e-16 * (1.0 + r.norm()) {
                break;
            }
        }
    }
    Ok(roots)
}

/// Re-expands `p(z) = sum_j s_j z^j` with `z = (x - center) / scale` into
/// ascending coefficients in `x`.
pub fn unshift(s: &[C], center: C, scale: f64) -> Vec<C> {
    let lin = [-center / scale, C::new(1.0 / scale, 0.0)];
    let mut out = vec![C::new(0.0, 0.0)];
    for &sj in s.iter().rev() {
        let mut next = vec![C::new(0.0, 0.0); out.len() + 1];
        for (k, &ok) in out.iter().enumerate() {
            next[k] += ok * lin[0];
            next[k + 1] += ok * lin[1];
        }
        next[0] += sj;
        out = next;
    }
    while out.len() > 1 && out.last().is_some_and(|x| x.norm() == 0.0) {
        out.pop();
    }
    out
}

/// Ascending coefficients of the degree-`(n-1)` interpolant through values
/// on `center + scale * exp(2 pi i k / n)`.
pub fn interpolate_on_circle(values: &[C], center: C, scale: f64) -> Vec<C> {
    let n = values.len();
    let s: Vec<C> = (0..n)
        .map(|j| {
            values
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let ang = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
                    v * C::from_polar(1.0, ang)
                })
                .sum::<C>()
                / n as f64
        })
        .collect();
    unshift(&s, center, scale)
}

/// The interpolation nodes used by [`interpolate_on_circle`].
pub fn circle_nodes(n: usize, center: C, scale: f64) -> Vec<C> {
    (0..n)
        .map(|k| center + C::from_polar(scale, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}
