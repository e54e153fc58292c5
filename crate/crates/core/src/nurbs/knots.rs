use std::ops::Range;

use crate::error::{Error, Result};

/// Non-decreasing knot sequence together with the spline degree.
///
/// For `t + 1` control points the sequence holds `t + d + 2` knots. The
/// valid parametric range is `[knots[d], knots[t + 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Config(format!("{} knots cannot carry a degree-{degree} spline", knots.len())));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Config("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config(format!("knots {knots:?} are not non-decreasing")));
        }
        let kv = Self { degree, knots };
        let (lo, hi) = kv.domain();
        if lo >= hi {
            return Err(Error::Config("knot vector has an empty parametric range".into()));
        }
        Ok(kv)
    }

    /// Clamped knots on `[0, 1]` with equally spaced interior knots.
    pub fn clamped_uniform(num_ctrl: usize, degree: usize) -> Result<Self> {
        if num_ctrl < degree + 1 {
            return Err(Error::Config(format!("{num_ctrl} control points are too few for degree {degree}")));
        }
        let interior = num_ctrl - degree - 1;
        let mut knots = vec![0.0; degree + 1];
        knots.extend((1..=interior).map(|i| i as f64 / (interior + 1) as f64));
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn num_ctrl(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.knots.len() - self.degree - 1])
    }

    /// Indices of the knots strictly between the clamped end groups.
    pub fn interior_range(&self) -> Range<usize> {
        self.degree + 1..self.knots.len() - self.degree - 1
    }

    pub fn is_clamped(&self) -> bool {
        let d = self.degree;
        let n = self.knots.len();
        self.knots[..=d].iter().all(|&k| k == self.knots[0])
            && self.knots[n - d - 1..].iter().all(|&k| k == self.knots[n - 1])
    }

    /// Span index `i` with `u ∈ [u_i, u_{i+1})`. At the right end of the
    /// range the last non-degenerate span is returned.
    pub fn find_span(&self, u: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&u) {
            return Err(Error::Domain(format!("parameter {u} outside [{lo}, {hi}]")));
        }
        let last = self.num_ctrl() - 1;
        let k = &self.knots;
        if u == hi {
            let mut i = last;
            while k[i] == k[i + 1] {
                i -= 1;
            }
            return Ok(i);
        }
        let (mut low, mut high) = (self.degree, last + 1);
        // invariant: k[low] <= u < k[high]
        while high - low > 1 {
            let mid = (low + high) / 2;
            if u < k[mid] {
                high = mid;
            } else {
                low = mid;
            }
        }
        Ok(low)
    }

    /// `count` equally spaced parameters covering the closed range.
    pub fn uniform_params(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = self.domain();
        if count == 1 {
            return vec![lo];
        }
        (0..count).map(|i| if i == count - 1 { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> KnotVector {
        KnotVector::new(3, vec![0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn span_examples() {
        let kv = cubic();
        assert_eq!(kv.find_span(0.25).unwrap(), 3);
        assert_eq!(kv.find_span(0.0).unwrap(), 3);
        assert_eq!(kv.find_span(1.0).unwrap(), 4);
        assert_eq!(kv.find_span(0.5).unwrap(), 4);
        assert!(matches!(kv.find_span(1.0 + 1e-12), Err(Error::Domain(_))));
        assert!(matches!(kv.find_span(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn span_brackets_parameter() {
        let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.2, 0.2, 0.7, 1.0, 1.0, 1.0]).unwrap();
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let s = kv.find_span(u).unwrap();
            let k = kv.knots();
            assert!(k[s] < k[s + 1]);
            assert!(k[s] <= u && (u < k[s + 1] || u == 1.0));
        }
    }

    #[test]
    fn validation() {
        assert!(KnotVector::new(2, vec![0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.5, 0.4, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.0, 0.0]).is_err());
        let kv = KnotVector::clamped_uniform(8, 3).unwrap();
        assert_eq!(kv.len(), 12);
        assert!(kv.is_clamped());
        assert_eq!(kv.interior_range(), 4..8);
        assert_eq!(kv.knots()[4], 0.2);
    }
}
