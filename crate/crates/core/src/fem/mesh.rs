use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// `nx x ny` square elements of degree `d` on the unit square. Nodes form
/// an `(nx d + 1) x (ny d + 1)` equispaced grid; node `(ix, iy)` has index
/// `iy * nodes_x + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuredMesh {
    nx: usize,
    ny: usize,
    degree: usize,
}

impl StructuredMesh {
    pub fn new(nx: usize, ny: usize, degree: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!("mesh needs at least one element per axis, got {nx}x{ny}")));
        }
        if !(1..=3).contains(&degree) {
            return Err(Error::Config(format!("element degree {degree} is not supported (1..=3)")));
        }
        Ok(Self { nx, ny, degree })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes_x(&self) -> usize {
        self.nx * self.degree + 1
    }

    pub fn nodes_y(&self) -> usize {
        self.ny * self.degree + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes_x() * self.nodes_y()
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Nodes per element.
    pub fn local_len(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nodes_x() + ix
    }

    pub fn node_coords(&self, node: usize) -> (f64, f64) {
        let (ix, iy) = (node % self.nodes_x(), node / self.nodes_x());
        (ix as f64 / (self.nodes_x() - 1) as f64, iy as f64 / (self.nodes_y() - 1) as f64)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.side_of(node).is_some()
    }

    /// First side (left, right, bottom, top) the node lies on.
    pub(crate) fn side_of(&self, node: usize) -> Option<Side> {
        let (ix, iy) = (node % self.nodes_x(), node / self.nodes_x());
        if ix == 0 {
            Some(Side::Left)
        } else if ix == self.nodes_x() - 1 {
            Some(Side::Right)
        } else if iy == 0 {
            Some(Side::Bottom)
        } else if iy == self.nodes_y() - 1 {
            Some(Side::Top)
        } else {
            None
        }
    }

    /// Global node of local node `(a, b)` of element `(ex, ey)`; the local
    /// index is `b * (d + 1) + a`.
    pub fn element_node(&self, ex: usize, ey: usize, a: usize, b: usize) -> usize {
        self.node_index(ex * self.degree + a, ey * self.degree + b)
    }

    /// Physical coordinates of reference point `(ξ, η)` of element `(ex, ey)`.
    pub fn to_physical(&self, ex: usize, ey: usize, xi: f64, eta: f64) -> (f64, f64) {
        ((ex as f64 + 0.5 * (xi + 1.0)) / self.nx as f64, (ey as f64 + 0.5 * (eta + 1.0)) / self.ny as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Condition imposed on one side of the square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideCondition {
    /// Nodal values fixed to the given constant.
    Dirichlet(f64),
    /// Zero normal flux; the nodes stay free in the energy minimization.
    ZeroNeumann,
}

/// Conditions on the left (`x=0`), right (`x=1`), bottom (`y=0`) and top
/// (`y=1`) sides. Corner nodes follow the first Dirichlet side in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub left: SideCondition,
    pub right: SideCondition,
    pub bottom: SideCondition,
    pub top: SideCondition,
}

impl Default for Boundary {
    fn default() -> Self {
        Self::dirichlet(0.0)
    }
}

impl Boundary {
    pub fn dirichlet(g: f64) -> Self {
        let d = SideCondition::Dirichlet(g);
        Self { left: d, right: d, bottom: d, top: d }
    }

    /// Fixed value of `node`, or `None` if it is free.
    pub fn fixed_value(&self, mesh: &StructuredMesh, node: usize) -> Option<f64> {
        let (ix, iy) = (node % mesh.nodes_x(), node / mesh.nodes_x());
        let sides = [
            (ix == 0, self.left),
            (ix == mesh.nodes_x() - 1, self.right),
            (iy == 0, self.bottom),
            (iy == mesh.nodes_y() - 1, self.top),
        ];
        sides.into_iter().find_map(|(on, c)| match (on, c) {
            (true, SideCondition::Dirichlet(g)) => Some(g),
            _ => None,
        })
    }

    /// `true` for nodes whose value is imposed.
    pub fn mask(&self, mesh: &StructuredMesh) -> Vec<bool> {
        (0..mesh.num_nodes()).map(|k| self.fixed_value(mesh, k).is_some()).collect()
    }
}

/// Nodal coefficients of a finite-element function on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    mesh: StructuredMesh,
    coeffs: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(mesh: StructuredMesh) -> Self {
        Self { mesh, coeffs: vec![0.0; mesh.num_nodes()] }
    }

    pub fn new(mesh: StructuredMesh, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.num_nodes() {
            return Err(Error::Dimension(format!("{} coefficients for {} nodes", coeffs.len(), mesh.num_nodes())));
        }
        Ok(Self { mesh, coeffs })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: StructuredMesh, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let coeffs = (0..mesh.num_nodes())
            .map(|k| {
                let (x, y) = mesh.node_coords(k);
                f(x, y)
            })
            .collect();
        Self { mesh, coeffs }
    }

    pub fn mesh(&self) -> &StructuredMesh {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Node grid with rows along `y` and columns along `x`.
    pub fn to_grid(&self) -> Grid {
        Grid::new(self.mesh.nodes_y(), self.mesh.nodes_x(), self.coeffs.clone()).expect("node grid is nonempty")
    }

    pub fn from_grid(mesh: StructuredMesh, grid: &Grid) -> Result<Self> {
        if grid.shape() != (mesh.nodes_y(), mesh.nodes_x()) {
            return Err(Error::Dimension(format!(
                "grid {:?} does not match the {}x{} node grid",
                grid.shape(),
                mesh.nodes_y(),
                mesh.nodes_x()
            )));
        }
        Self::new(mesh, grid.as_slice().to_vec())
    }
}

/// Sets every boundary node to `g`, leaving interior nodes untouched.
pub fn apply_dirichlet(field: &mut ScalarField2D, g: f64) {
    apply_boundary(field, &Boundary::dirichlet(g));
}

/// Sets the nodes fixed by `boundary` to their imposed values.
pub fn apply_boundary(field: &mut ScalarField2D, boundary: &Boundary) {
    let mesh = field.mesh;
    for (k, c) in field.coeffs.iter_mut().enumerate() {
        if let Some(g) = boundary.fixed_value(&mesh, k) {
            *c = g;
        }
    }
}

/// Extends a node grid (rows along `y`) by one ring of ghost values copied
/// from the adjacent nodes, the discrete form of a zero normal derivative.
pub fn neumann_pad(grid: &Grid) -> Grid {
    let (rows, cols) = grid.shape();
    Grid::from_fn(rows + 2, cols + 2, |r, c| {
        grid.get(r.saturating_sub(1).min(rows - 1), c.saturating_sub(1).min(cols - 1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_layout() {
        let m = StructuredMesh::new(2, 3, 2).unwrap();
        assert_eq!((m.nodes_x(), m.nodes_y(), m.num_nodes()), (5, 7, 35));
        assert_eq!(m.node_coords(m.node_index(4, 6)), (1.0, 1.0));
        assert_eq!(m.element_node(1, 2, 2, 1), m.node_index(4, 5));
        assert_eq!(m.to_physical(1, 0, -1.0, 1.0), (0.5, 1.0 / 3.0));
        assert!(m.is_boundary(0) && !m.is_boundary(m.node_index(2, 3)));
        assert!(StructuredMesh::new(0, 1, 1).is_err() && StructuredMesh::new(1, 1, 4).is_err());
    }

    #[test]
    fn dirichlet_examples() {
        let m = StructuredMesh::new(3, 3, 1).unwrap();
        let mut f = ScalarField2D::interpolate(m, |x, y| 1.0 + x + y);
        let interior: Vec<f64> = (0..16).filter(|&k| !m.is_boundary(k)).map(|k| f.coeffs()[k]).collect();
        apply_dirichlet(&mut f, 0.0);
        assert!((0..16).filter(|&k| m.is_boundary(k)).all(|k| f.coeffs()[k] == 0.0));
        apply_dirichlet(&mut f, 2.5);
        let once = f.clone();
        apply_dirichlet(&mut f, 2.5);
        assert_eq!(f, once);
        assert!((0..16).filter(|&k| m.is_boundary(k)).all(|k| f.coeffs()[k] == 2.5));
        let after: Vec<f64> = (0..16).filter(|&k| !m.is_boundary(k)).map(|k| f.coeffs()[k]).collect();
        assert_eq!(interior, after);
    }

    #[test]
    fn neumann_sides_stay_free() {
        let m = StructuredMesh::new(2, 2, 1).unwrap();
        let b = Boundary { top: SideCondition::ZeroNeumann, ..Boundary::default() };
        let mask = b.mask(&m);
        // top row: corners fixed by left/right, middle node free
        assert_eq!(&mask[6..9], &[true, false, true]);
        assert!(!mask[4]);
    }

    #[test]
    fn padding_copies_edges() {
        let g = Grid::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = neumann_pad(&g);
        assert_eq!(p.shape(), (4, 4));
        assert_eq!(p.as_slice(), &[1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 3.0, 3.0, 4.0, 4.0]);
    }
}
