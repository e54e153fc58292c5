use crate::error::{Error, Result};

/// Dense row-major grid of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty grid {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "grid {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn check_same_shape(&self, other: &Grid, what: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Row-major grid of 3D points, e.g. an evaluated surface or a fitting target.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGrid {
    rows: usize,
    cols: usize,
    points: Vec<[f64; 3]>,
}

impl PointGrid {
    pub fn new(rows: usize, cols: usize, points: Vec<[f64; 3]>) -> Result<Self> {
        if rows == 0 || cols == 0 || points.len() != rows * cols {
            return Err(Error::Dimension(format!("point grid {rows}x{cols} with {} points", points.len())));
        }
        Ok(Self { rows, cols, points })
    }

    /// Assembles a point grid from three coordinate grids of equal shape.
    pub fn from_components(x: &Grid, y: &Grid, z: &Grid) -> Result<Self> {
        x.check_same_shape(y, "x/y component grids")?;
        x.check_same_shape(z, "x/z component grids")?;
        let points = x.as_slice().iter().zip(y.as_slice()).zip(z.as_slice()).map(|((&a, &b), &c)| [a, b, c]).collect();
        Ok(Self { rows: x.rows(), cols: x.cols(), points })
    }

    /// Splits into x, y and z coordinate grids.
    pub fn components(&self) -> [Grid; 3] {
        let comp =
            |k: usize| Grid { rows: self.rows, cols: self.cols, data: self.points.iter().map(|p| p[k]).collect() };
        [comp(0), comp(1), comp(2)]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> [f64; 3] {
        self.points[r * self.cols + c]
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.points
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}
