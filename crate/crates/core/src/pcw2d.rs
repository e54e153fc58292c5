//! Piecewise-constant image layer.
//!
//! The forward pass labels the 4-connected regions of a thresholded image and
//! replaces every pixel by the mean of its region. The weak Jacobian has
//! entry `1/|I|` for every pixel pair inside the same region `I` and zero
//! elsewhere, so its product with a vector is again a per-region average.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Disjoint-set forest with union by size and path compression.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self { parent: (0..len).collect(), size: vec![1; len] }
    }

    pub fn find(&mut self, mut id: usize) -> usize {
        let mut root = id;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[id] != root {
            let next = self.parent[id];
            self.parent[id] = root;
            id = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }
}

/// Component label per pixel, ids contiguous in row-major first-visit order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    rows: usize,
    cols: usize,
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl LabelGrid {
    /// Builds a label grid from arbitrary ids, relabeling them to `0..k` in
    /// row-major order of first appearance.
    pub fn from_labels(rows: usize, cols: usize, raw: &[usize]) -> Result<Self> {
        if rows == 0 || cols == 0 || raw.len() != rows * cols {
            return Err(Error::Dimension(format!("label grid {rows}x{cols} with {} labels", raw.len())));
        }
        let mut remap = std::collections::HashMap::new();
        let mut sizes = Vec::new();
        let labels = raw
            .iter()
            .map(|&id| {
                let next = remap.len();
                let l = *remap.entry(id).or_insert(next);
                if l == sizes.len() {
                    sizes.push(0);
                }
                sizes[l] += 1;
                l
            })
            .collect();
        Ok(Self { rows, cols, labels, sizes })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn label(&self, r: usize, c: usize) -> usize {
        self.labels[r * self.cols + c]
    }

    fn check_shape(&self, grid: &Grid) -> Result<()> {
        if grid.shape() != (self.rows, self.cols) {
            return Err(Error::Dimension(format!(
                "grid {}x{} vs labels {}x{}",
                grid.rows(),
                grid.cols(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }

    /// Per-component average of `values`; a component whose values are all
    /// identical keeps that value exactly.
    fn component_means(&self, values: &[f64]) -> Vec<f64> {
        let k = self.sizes.len();
        let mut sum = vec![0.0; k];
        let mut first: Vec<Option<f64>> = vec![None; k];
        let mut uniform = vec![true; k];
        for (&l, &v) in self.labels.iter().zip(values) {
            match first[l] {
                None => first[l] = Some(v),
                Some(f) if f != v => uniform[l] = false,
                Some(_) => {}
            }
            sum[l] += v;
        }
        (0..k)
            .map(|l| match first[l] {
                Some(f) if uniform[l] => f,
                _ => sum[l] / self.sizes[l] as f64,
            })
            .collect()
    }

    fn spread(&self, per_component: &[f64]) -> Grid {
        let data = self.labels.iter().map(|&l| per_component[l]).collect();
        Grid::new(self.rows, self.cols, data).expect("label grid shape is valid")
    }
}

/// Labels the 4-connected regions of `image` binarized as `value >= threshold`.
/// Both classes form components.
pub fn connected_components(image: &Grid, threshold: f64) -> Result<LabelGrid> {
    let (rows, cols) = image.shape();
    if image.is_empty() {
        return Err(Error::Dimension("empty image".into()));
    }
    if let Some(i) = image.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("pixel {i} is not finite")));
    }
    let class: Vec<bool> = image.as_slice().iter().map(|&v| v >= threshold).collect();
    let mut uf = UnionFind::new(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols && class[i] == class[i + 1] {
                uf.union(i, i + 1);
            }
            if r + 1 < rows && class[i] == class[i + cols] {
                uf.union(i, i + cols);
            }
        }
    }
    let roots: Vec<usize> = (0..rows * cols).map(|i| uf.find(i)).collect();
    LabelGrid::from_labels(rows, cols, &roots)
}

/// Replaces every pixel by the mean of `image` over its component.
pub fn pcw2d_forward(image: &Grid, labels: &LabelGrid) -> Result<Grid> {
    labels.check_shape(image)?;
    Ok(labels.spread(&labels.component_means(image.as_slice())))
}

/// Vector-Jacobian product of the forward pass: per-component average of
/// `upstream`.
pub fn pcw2d_vjp(labels: &LabelGrid, upstream: &Grid) -> Result<Grid> {
    labels.check_shape(upstream)?;
    let k = labels.num_components();
    let mut sum = vec![0.0; k];
    for (&l, &v) in labels.labels.iter().zip(upstream.as_slice()) {
        sum[l] += v;
    }
    for (s, &n) in sum.iter_mut().zip(&labels.sizes) {
        *s /= n as f64;
    }
    Ok(labels.spread(&sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(rows: usize, cols: usize, v: &[f64]) -> Grid {
        Grid::new(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn component_counts() {
        let l = connected_components(&grid(2, 2, &[1.0; 4]), 0.5).unwrap();
        assert_eq!(l.num_components(), 1);

        let l = connected_components(&grid(2, 2, &[1.0, 0.0, 0.0, 1.0]), 0.5).unwrap();
        assert_eq!(l.num_components(), 4);
        assert_eq!(l.labels(), &[0, 1, 2, 3]);

        let l = connected_components(&grid(1, 4, &[1.0, 1.0, 0.0, 0.0]), 0.5).unwrap();
        assert_eq!(l.sizes(), &[2, 2]);
    }

    #[test]
    fn labels_follow_first_visit_order() {
        // U-shaped foreground joined through the bottom row
        let img = grid(3, 3, &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let l = connected_components(&img, 0.5).unwrap();
        assert_eq!(l.labels(), &[0, 1, 0, 0, 1, 0, 0, 0, 0]);
        assert_eq!(l.sizes(), &[7, 2]);
    }

    #[test]
    fn empty_image_is_rejected() {
        assert!(Grid::new(0, 3, vec![]).is_err());
        assert!(LabelGrid::from_labels(0, 0, &[]).is_err());
    }

    #[test]
    fn forward_examples() {
        let l = LabelGrid::from_labels(1, 4, &[0, 0, 1, 1]).unwrap();
        let out = pcw2d_forward(&grid(1, 4, &[1.0, 3.0, 10.0, 20.0]), &l).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 2.0, 15.0, 15.0]);

        let l = LabelGrid::from_labels(2, 2, &[5, 5, 5, 5]).unwrap();
        let out = pcw2d_forward(&grid(2, 2, &[0.1; 4]), &l).unwrap();
        assert_eq!(out.as_slice(), &[0.1; 4]);

        let l = LabelGrid::from_labels(2, 2, &[0, 1, 2, 3]).unwrap();
        let img = grid(2, 2, &[0.3, -1.0, 7.5, 2.0]);
        assert_eq!(pcw2d_forward(&img, &l).unwrap(), img);

        let bad = grid(1, 3, &[1.0, 2.0, 3.0]);
        assert!(matches!(pcw2d_forward(&bad, &l), Err(Error::Dimension(_))));
    }

    #[test]
    fn vjp_examples() {
        let l = LabelGrid::from_labels(2, 2, &[0; 4]).unwrap();
        assert_eq!(pcw2d_vjp(&l, &grid(2, 2, &[1.0; 4])).unwrap().as_slice(), &[1.0; 4]);
        assert_eq!(pcw2d_vjp(&l, &grid(2, 2, &[0.0; 4])).unwrap().as_slice(), &[0.0; 4]);
    }

    #[test]
    fn vjp_matches_dense_jacobian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = Grid::from_fn(4, 4, |_, _| rng.gen_range(0.0..1.0));
        let labels = connected_components(&img, 0.5).unwrap();
        let n = 16;
        let dense: Vec<f64> = (0..n * n)
            .map(|st| {
                let (s, t) = (st / n, st % n);
                let (ls, lt) = (labels.labels()[s], labels.labels()[t]);
                if ls == lt {
                    1.0 / labels.sizes()[ls] as f64
                } else {
                    0.0
                }
            })
            .collect();
        let up = Grid::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let fast = pcw2d_vjp(&labels, &up).unwrap();
        for t in 0..n {
            let want: f64 = (0..n).map(|s| dense[s * n + t] * up.as_slice()[s]).sum();
            assert!((fast.as_slice()[t] - want).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn forward_is_idempotent_and_piecewise_constant(
            rows in 1usize..7, cols in 1usize..7, seed in any::<u64>()
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = Grid::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0));
            let labels = connected_components(&img, 0.0).unwrap();
            let once = pcw2d_forward(&img, &labels).unwrap();
            let twice = pcw2d_forward(&once, &labels).unwrap();
            prop_assert_eq!(&once, &twice);
            for (i, &l) in labels.labels().iter().enumerate() {
                let j = labels.labels().iter().position(|&m| m == l).unwrap();
                prop_assert_eq!(once.as_slice()[i], once.as_slice()[j]);
            }
        }

        #[test]
        fn vjp_is_self_adjoint(rows in 1usize..7, cols in 1usize..7, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = Grid::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
            let labels = connected_components(&img, 0.0).unwrap();
            let a = Grid::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
            let b = Grid::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
            let dot = |x: &Grid, y: &Grid| -> f64 {
                x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| p * q).sum()
            };
            let lhs = dot(&pcw2d_vjp(&labels, &a).unwrap(), &b);
            let rhs = dot(&a, &pcw2d_vjp(&labels, &b).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
