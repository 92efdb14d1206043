use nalgebra::{DMatrix, DVector};

use super::filter::{atom_mix, default_fine_grid, orthogonalize_filters, Atom, FilterSpec};
use super::grid::SamplingGrid;
use super::modulator::Modulator;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Convolution,
    ProductConvolution,
}

/// A linearly parametrized operator family `H(gamma) = sum_i gamma_i H_i`
/// sampled on a grid. The response of a unit point source at `x` is the
/// `M x I` matrix `E(x)`.
///
/// Convolution: column `j` is `e_j(z_m - x)`.
/// Product-convolution: column `k * J + j` is `f_k(x) e_j(z_m - x)`.
///
/// Samples carry a factor `sqrt(cell volume)` on regular grids so that `E^T E`
/// approximates the `L^2` Gram matrix of the filters.
#[derive(Clone, Debug)]
pub struct OperatorFamily {
    kind: FamilyKind,
    grid: SamplingGrid,
    filters: Vec<FilterSpec>,
    modulators: Vec<Modulator>,
    atoms: Vec<Atom>,
    mix: DMatrix<f64>,
    support: Option<f64>,
    scale: f64,
}

impl OperatorFamily {
    pub fn convolution(grid: SamplingGrid, filters: Vec<FilterSpec>) -> Result<Self> {
        Self::build(FamilyKind::Convolution, grid, filters, Vec::new())
    }

    pub fn product_convolution(
        grid: SamplingGrid,
        filters: Vec<FilterSpec>,
        modulators: Vec<Modulator>,
    ) -> Result<Self> {
        if modulators.is_empty() {
            return invalid("product-convolution needs at least one modulator");
        }
        Self::build(FamilyKind::ProductConvolution, grid, filters, modulators)
    }

    fn build(
        kind: FamilyKind,
        grid: SamplingGrid,
        filters: Vec<FilterSpec>,
        modulators: Vec<Modulator>,
    ) -> Result<Self> {
        if filters.is_empty() {
            return invalid("family needs at least one filter");
        }
        for f in &filters {
            f.validate(grid.dim())?;
        }
        let (atom_specs, mix) = atom_mix(&filters);
        let mut support = Some(0.0f64);
        for f in &filters {
            support = match (support, f.support_radius()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
        Ok(Self {
            kind,
            scale: grid.cell_volume().sqrt(),
            grid,
            atoms: atom_specs.iter().map(Atom::compile).collect(),
            mix,
            filters,
            modulators,
            support,
        })
    }

    /// Same family with filters replaced by their orthonormalized combinations,
    /// computed on the default quadrature grid.
    pub fn orthogonalized(self) -> Result<Self> {
        let fine = default_fine_grid(&self.filters, &self.grid)?;
        let filters = orthogonalize_filters(&self.filters, &fine)?;
        Self::build(self.kind, self.grid, filters, self.modulators)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn filters(&self) -> &[FilterSpec] {
        &self.filters
    }

    pub fn modulators(&self) -> &[Modulator] {
        &self.modulators
    }

    pub fn num_filters(&self) -> usize {
        self.filters.len()
    }

    pub fn num_modulators(&self) -> usize {
        match self.kind {
            FamilyKind::Convolution => 1,
            FamilyKind::ProductConvolution => self.modulators.len(),
        }
    }

    /// Number of operator coordinates `I`.
    pub fn num_coords(&self) -> usize {
        self.num_filters() * self.num_modulators()
    }

    pub fn num_samples(&self) -> usize {
        self.grid.len()
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support
    }

    /// Response matrix `E(x)`.
    pub fn response(&self, x: &[f64]) -> Result<ResponseMatrix> {
        if x.len() != self.dim() {
            return invalid(format!("position has dimension {}, grid has {}", x.len(), self.dim()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("position must be finite");
        }
        let rows = self.grid.rows_near(x, self.support);
        let j = self.num_filters();
        let weights: Vec<f64> = match self.kind {
            FamilyKind::Convolution => vec![1.0],
            FamilyKind::ProductConvolution => self.modulators.iter().map(|f| f.eval(x)).collect(),
        };
        let n = rows.len();
        let mut values = vec![0.0; n * j * weights.len()];
        let mut atom_vals = vec![0.0; self.atoms.len()];
        let mut offset = vec![0.0; self.dim()];
        for (r, &m) in rows.iter().enumerate() {
            for (o, (z, xd)) in offset.iter_mut().zip(self.grid.point(m).iter().zip(x)) {
                *o = z - xd;
            }
            for (v, atom) in atom_vals.iter_mut().zip(&self.atoms) {
                *v = atom.eval(&offset);
            }
            for jj in 0..j {
                let e = self.scale * atom_vals.iter().enumerate().map(|(a, v)| self.mix[(jj, a)] * v).sum::<f64>();
                for (k, w) in weights.iter().enumerate() {
                    values[(k * j + jj) * n + r] = w * e;
                }
            }
        }
        let values = DMatrix::from_vec(n, j * weights.len(), values);
        Ok(ResponseMatrix { num_samples: self.grid.len(), rows, values })
    }
}

/// Free-function form of [`OperatorFamily::response`].
pub fn assemble_response(family: &OperatorFamily, x: &[f64]) -> Result<ResponseMatrix> {
    family.response(x)
}

/// `E(x)` stored on the rows where it can be nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMatrix {
    pub num_samples: usize,
    /// Sorted sample indices of the stored rows.
    pub rows: Vec<usize>,
    /// `rows.len() x I` block.
    pub values: DMatrix<f64>,
}

impl ResponseMatrix {
    pub fn num_coords(&self) -> usize {
        self.values.ncols()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.num_samples, self.values.ncols());
        for (r, &m) in self.rows.iter().enumerate() {
            out.set_row(m, &self.values.row(r));
        }
        out
    }

    /// `E^T E`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.values.tr_mul(&self.values)
    }

    /// `E gamma` as a length-`M` vector.
    pub fn apply(&self, gamma: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_samples];
        self.apply_add(gamma, 1.0, &mut out);
        out
    }

    /// `out += w * E gamma`.
    pub fn apply_add(&self, gamma: &[f64], w: f64, out: &mut [f64]) {
        let g = DVector::from_column_slice(gamma);
        let local = &self.values * g;
        for (r, &m) in self.rows.iter().enumerate() {
            out[m] += w * local[r];
        }
    }

    /// `E^T y`.
    pub fn adjoint(&self, y: &[f64]) -> DVector<f64> {
        let local = self.restrict(y);
        self.values.tr_mul(&local)
    }

    /// `y` restricted to the stored rows.
    pub fn restrict(&self, y: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&m| y[m]))
    }
}
