use crate::error::{Error, Result};

/// Equally spaced nodes `-1 = ξ_0 < ... < ξ_d = 1`.
pub fn lagrange_nodes(d: usize) -> Vec<f64> {
    if d == 0 {
        return vec![0.0];
    }
    (0..=d).map(|j| -1.0 + 2.0 * j as f64 / d as f64).collect()
}

/// Values and derivatives at `xi` of the `d+1` Lagrange polynomials on the
/// equally spaced nodes of `[-1, 1]`.
pub fn lagrange_basis_1d(d: usize, xi: f64) -> (Vec<f64>, Vec<f64>) {
    let nodes = lagrange_nodes(d);
    let mut vals = vec![0.0; d + 1];
    let mut ders = vec![0.0; d + 1];
    for j in 0..=d {
        let mut v = 1.0;
        for m in (0..=d).filter(|&m| m != j) {
            v *= (xi - nodes[m]) / (nodes[j] - nodes[m]);
        }
        vals[j] = v;
        // product rule: sum over the dropped factor
        let mut dv = 0.0;
        for k in (0..=d).filter(|&k| k != j) {
            let mut t = 1.0 / (nodes[j] - nodes[k]);
            for m in (0..=d).filter(|&m| m != j && m != k) {
                t *= (xi - nodes[m]) / (nodes[j] - nodes[m]);
            }
            dv += t;
        }
        ders[j] = dv;
    }
    (vals, ders)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss–Legendre points (ascending) and weights on `[-1, 1]`, exact for
/// polynomials of degree `2 npts - 1`.
pub fn gauss_quadrature(npts: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=5).contains(&npts) {
        return Err(Error::Config(format!("gauss rule with {npts} points is not supported (1..=5)")));
    }
    let n = npts;
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        if 2 * i + 1 == n {
            x = 0.0;
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        pts[i] = -x;
        pts[n - 1 - i] = x;
        wts[i] = w;
        wts[n - 1 - i] = w;
    }
    Ok((pts, wts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_examples() {
        assert_eq!(lagrange_basis_1d(1, 0.0), (vec![0.5, 0.5], vec![-0.5, 0.5]));
        assert_eq!(lagrange_basis_1d(2, 0.0).0, vec![0.0, 1.0, 0.0]);
        for d in 1..=3 {
            for (j, &x) in lagrange_nodes(d).iter().enumerate() {
                let (v, _) = lagrange_basis_1d(d, x);
                for (k, &vk) in v.iter().enumerate() {
                    assert!((vk - if j == k { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn lagrange_derivatives_match_finite_differences() {
        for d in 1..=3 {
            for &x in &[-0.9, -0.31, 0.2, 0.77] {
                let (_, der) = lagrange_basis_1d(d, x);
                let h = 1e-6;
                let (hi, _) = lagrange_basis_1d(d, x + h);
                let (lo, _) = lagrange_basis_1d(d, x - h);
                for j in 0..=d {
                    assert!(((hi[j] - lo[j]) / (2.0 * h) - der[j]).abs() < 1e-8);
                }
                assert!(der.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_examples() {
        assert_eq!(gauss_quadrature(1).unwrap(), (vec![0.0], vec![2.0]));
        let (p, w) = gauss_quadrature(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((p[0] + r).abs() < 1e-15 && (p[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
        let (p, w) = gauss_quadrature(3).unwrap();
        let i4: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((i4 - 0.4).abs() < 1e-15);
        assert!(matches!(gauss_quadrature(0), Err(Error::Config(_))));
        assert!(matches!(gauss_quadrature(6), Err(Error::Config(_))));
    }

    #[test]
    fn gauss_rules_are_exact_to_their_degree() {
        for n in 1..=5 {
            let (p, w) = gauss_quadrature(n).unwrap();
            for k in 0..2 * n {
                let got: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((got - want).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }
}
