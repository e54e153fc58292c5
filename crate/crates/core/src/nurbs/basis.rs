//! Cox–de Boor basis values and their parametric derivatives.
//!
//! Only the `d+1` functions `N_{span-d..=span}` that can be nonzero on the
//! span are computed. Zero-length knot intervals make some recursion terms
//! `0/0`; those terms are taken as 0.

use super::knots::KnotVector;

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub(crate) fn basis_raw(span: usize, u: f64, degree: usize, knots: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), degree + 1);
    let mut left = [0.0f64; 16];
    let mut right = [0.0f64; 16];
    assert!(degree < 16, "degree {degree} is not supported");
    out[0] = 1.0;
    for j in 1..=degree {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = ratio(out[r], right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Values `N_{span-d}^d(u) ..= N_{span}^d(u)`.
pub fn basis_funs(span: usize, u: f64, knots: &KnotVector) -> Vec<f64> {
    let mut out = vec![0.0; knots.degree() + 1];
    basis_raw(span, u, knots.degree(), knots.knots(), &mut out);
    out
}

pub(crate) fn basis_du_raw(span: usize, u: f64, degree: usize, knots: &[f64], out: &mut [f64]) {
    if degree == 0 {
        out[0] = 0.0;
        return;
    }
    // N'_{i,p} = p/(u_{i+p}-u_i) N_{i,p-1} - p/(u_{i+p+1}-u_{i+1}) N_{i+1,p-1}
    let mut lower = [0.0f64; 16];
    basis_raw(span, u, degree - 1, knots, &mut lower[..degree]);
    let p = degree as f64;
    for r in 0..=degree {
        let i = span - degree + r;
        let mut d = 0.0;
        if r >= 1 {
            d += p * ratio(lower[r - 1], knots[i + degree] - knots[i]);
        }
        if r < degree {
            d -= p * ratio(lower[r], knots[i + degree + 1] - knots[i + 1]);
        }
        out[r] = d;
    }
}

/// Parametric derivatives `dN/du` of the same `d+1` functions as [`basis_funs`].
pub fn basis_funs_du(span: usize, u: f64, knots: &KnotVector) -> Vec<f64> {
    let mut out = vec![0.0; knots.degree() + 1];
    basis_du_raw(span, u, knots.degree(), knots.knots(), &mut out);
    out
}
