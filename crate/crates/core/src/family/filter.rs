use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::grid::SamplingGrid;
use crate::error::{invalid, Error, Result};

/// Gaussian filters are cut off at this many standard deviations
/// (`exp(-40.5)` relative amplitude).
pub const GAUSSIAN_TRUNCATION: f64 = 9.0;

/// Relative eigenvalue tolerance on the filter Gram matrix below which a family
/// is declared rank deficient.
pub const GRAM_RANK_TOL: f64 = 1e-12;

/// A filter `e(x)` on `R^D`. The response of a point source at `x` sampled at
/// `z` is `e(z - x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    /// `exp(-|x|^2 / (2 std^2))`.
    Gaussian { std: f64 },
    /// `exp(-x^T C^{-1} x / 2)` for a symmetric positive definite `C`.
    AnisotropicGaussian { covariance: Vec<Vec<f64>> },
    /// Product over axes of `psi(x_d / scale)` with `psi(t) = (1 - |t - 1|)_+`.
    Hat { scale: f64 },
    /// Product over axes of `sinc(x_d / scale) / sqrt(scale)`,
    /// `sinc(t) = sin(pi t) / (pi t)`.
    Sinc { scale: f64 },
    /// Multilinear interpolation of samples on a regular grid, zero outside.
    Tabulated {
        origin: Vec<f64>,
        step: Vec<f64>,
        counts: Vec<usize>,
        values: Vec<f64>,
    },
    /// `sum_t coeffs[t] * terms[t]`.
    Combination { terms: Vec<FilterSpec>, coeffs: Vec<f64> },
}

impl FilterSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            FilterSpec::Gaussian { std } => positive("gaussian std", *std),
            FilterSpec::AnisotropicGaussian { covariance } => {
                let c = covariance_matrix(covariance, dim)?;
                let eig = SymmetricEigen::new(c);
                if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
                    return invalid("anisotropic gaussian covariance must be positive definite");
                }
                Ok(())
            }
            FilterSpec::Hat { scale } => positive("hat scale", *scale),
            FilterSpec::Sinc { scale } => positive("sinc scale", *scale),
            FilterSpec::Tabulated { origin, step, counts, values } => {
                if origin.len() != dim || step.len() != dim || counts.len() != dim {
                    return invalid("tabulated filter layout does not match the grid dimension");
                }
                if step.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
                    return invalid("tabulated filter steps must be positive");
                }
                if counts.iter().product::<usize>() != values.len() || values.is_empty() {
                    return invalid("tabulated filter values do not match counts");
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return invalid("tabulated filter values must be finite");
                }
                Ok(())
            }
            FilterSpec::Combination { terms, coeffs } => {
                if terms.len() != coeffs.len() || terms.is_empty() {
                    return invalid("combination needs matching, nonempty terms and coeffs");
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return invalid("combination coefficients must be finite");
                }
                terms.iter().try_for_each(|t| t.validate(dim))
            }
        }
    }

    /// Radius (sup norm) outside of which the filter is zero, or numerically
    /// negligible for Gaussians. `None` for filters with unbounded support.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            FilterSpec::Gaussian { std } => Some(GAUSSIAN_TRUNCATION * std),
            FilterSpec::AnisotropicGaussian { covariance } => {
                let c = DMatrix::from_fn(covariance.len(), covariance.len(), |i, j| covariance[i][j]);
                let lmax = SymmetricEigen::new(c)
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(0.0, f64::max);
                Some(GAUSSIAN_TRUNCATION * lmax.sqrt())
            }
            FilterSpec::Hat { scale } => Some(2.0 * scale),
            FilterSpec::Sinc { .. } => None,
            FilterSpec::Tabulated { origin, step, counts, .. } => Some(
                (0..origin.len())
                    .map(|d| {
                        let lo = origin[d];
                        let hi = origin[d] + (counts[d] - 1) as f64 * step[d];
                        lo.abs().max(hi.abs())
                    })
                    .fold(0.0, f64::max),
            ),
            FilterSpec::Combination { terms, .. } => {
                let mut r = 0.0f64;
                for t in terms {
                    r = r.max(t.support_radius()?);
                }
                Some(r)
            }
        }
    }

    /// Smallest length scale of the filter, used to pick quadrature steps.
    pub fn min_scale(&self) -> f64 {
        match self {
            FilterSpec::Gaussian { std } => *std,
            FilterSpec::AnisotropicGaussian { covariance } => {
                let c = DMatrix::from_fn(covariance.len(), covariance.len(), |i, j| covariance[i][j]);
                SymmetricEigen::new(c)
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            }
            FilterSpec::Hat { scale } | FilterSpec::Sinc { scale } => *scale,
            FilterSpec::Tabulated { step, .. } => step.iter().copied().fold(f64::INFINITY, f64::min),
            FilterSpec::Combination { terms, .. } => {
                terms.iter().map(|t| t.min_scale()).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Evaluate at an offset `x = z - position`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FilterSpec::Combination { terms, coeffs } => {
                terms.iter().zip(coeffs).map(|(t, c)| c * t.eval(x)).sum()
            }
            other => Atom::compile(other).eval(x),
        }
    }

    /// Expand into `(coefficient, atom)` pairs with no nested combinations.
    pub fn flatten(&self) -> Vec<(f64, FilterSpec)> {
        match self {
            FilterSpec::Combination { terms, coeffs } => terms
                .iter()
                .zip(coeffs)
                .flat_map(|(t, &c)| t.flatten().into_iter().map(move |(k, a)| (c * k, a)))
                .collect(),
            other => vec![(1.0, other.clone())],
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{what} must be positive and finite, got {v}"))
    }
}

fn covariance_matrix(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return invalid("covariance must be a D x D matrix");
    }
    let c = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    if (&c - c.transpose()).abs().max() > 1e-12 * c.abs().max() {
        return invalid("covariance must be symmetric");
    }
    Ok(c)
}

pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let a = std::f64::consts::PI * t;
        a.sin() / a
    }
}

/// A non-combination filter with its evaluation constants precomputed.
#[derive(Clone, Debug)]
pub(crate) enum Atom {
    Gaussian { inv_two_var: f64 },
    Anisotropic { precision: Vec<f64>, dim: usize },
    Hat { inv_scale: f64 },
    Sinc { inv_scale: f64, amp: f64 },
    Tabulated { origin: Vec<f64>, step: Vec<f64>, counts: Vec<usize>, values: Vec<f64> },
}

impl Atom {
    pub(crate) fn compile(spec: &FilterSpec) -> Atom {
        match spec {
            FilterSpec::Gaussian { std } => Atom::Gaussian { inv_two_var: 0.5 / (std * std) },
            FilterSpec::AnisotropicGaussian { covariance } => {
                let dim = covariance.len();
                let c = DMatrix::from_fn(dim, dim, |i, j| covariance[i][j]);
                let p = c.try_inverse().expect("validated covariance");
                Atom::Anisotropic { precision: p.as_slice().to_vec(), dim }
            }
            FilterSpec::Hat { scale } => Atom::Hat { inv_scale: 1.0 / scale },
            FilterSpec::Sinc { scale } => Atom::Sinc { inv_scale: 1.0 / scale, amp: 1.0 / scale.sqrt() },
            FilterSpec::Tabulated { origin, step, counts, values } => Atom::Tabulated {
                origin: origin.clone(),
                step: step.clone(),
                counts: counts.clone(),
                values: values.clone(),
            },
            FilterSpec::Combination { .. } => unreachable!("combinations are flattened before compiling"),
        }
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Atom::Gaussian { inv_two_var } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-r2 * inv_two_var).exp()
            }
            Atom::Anisotropic { precision, dim } => {
                let mut q = 0.0;
                for i in 0..*dim {
                    for j in 0..*dim {
                        q += x[i] * precision[i + j * dim] * x[j];
                    }
                }
                (-0.5 * q).exp()
            }
            Atom::Hat { inv_scale } => x
                .iter()
                .map(|&v| (1.0 - (v * inv_scale - 1.0).abs()).max(0.0))
                .product(),
            Atom::Sinc { inv_scale, amp } => x.iter().map(|&v| sinc(v * inv_scale) * amp).product(),
            Atom::Tabulated { origin, step, counts, values } => multilinear(origin, step, counts, values, x),
        }
    }
}

fn multilinear(origin: &[f64], step: &[f64], counts: &[usize], values: &[f64], x: &[f64]) -> f64 {
    let dim = origin.len();
    let mut base = vec![0usize; dim];
    let mut frac = vec![0.0; dim];
    for d in 0..dim {
        let t = (x[d] - origin[d]) / step[d];
        let last = (counts[d] - 1) as f64;
        if !(t >= 0.0 && t <= last) {
            return 0.0;
        }
        if counts[d] == 1 {
            base[d] = 0;
            frac[d] = 0.0;
            continue;
        }
        let i = (t.floor() as usize).min(counts[d] - 2);
        base[d] = i;
        frac[d] = t - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut w = 1.0;
        let mut flat = 0usize;
        let mut stride = 1usize;
        for d in 0..dim {
            let up = (corner >> d) & 1 == 1;
            if up && counts[d] == 1 {
                w = 0.0;
                break;
            }
            w *= if up { frac[d] } else { 1.0 - frac[d] };
            flat += (base[d] + usize::from(up)) * stride;
            stride *= counts[d];
        }
        if w != 0.0 {
            acc += w * values[flat];
        }
    }
    acc
}

/// Quadrature grid used to orthogonalize `filters`: symmetric around the
/// origin, covering every filter support, with a step of
/// `min(measurement step / 10, narrowest filter scale / 20)`.
pub fn default_fine_grid(filters: &[FilterSpec], measurement: &SamplingGrid) -> Result<SamplingGrid> {
    if filters.is_empty() {
        return invalid("no filters given");
    }
    let dim = measurement.dim();
    let min_scale = filters.iter().map(|f| f.min_scale()).fold(f64::INFINITY, f64::min);
    let mut step = min_scale / 20.0;
    if let Some(h) = measurement.min_step() {
        step = step.min(h / 10.0);
    }
    let mut radius = 0.0f64;
    for f in filters {
        match f.support_radius() {
            Some(r) => radius = radius.max(r),
            None => {
                let (lo, hi) = measurement.bounds();
                let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
                radius = radius.max(extent.max(20.0 * min_scale));
            }
        }
    }
    let half = (radius / step).ceil() as usize;
    let n = 2 * half + 1;
    let origin = -(half as f64) * step;
    SamplingGrid::regular(vec![origin; dim], vec![step; dim], vec![n; dim])
}

/// Replace `filters` by orthonormal (in `L^2`, evaluated by quadrature on
/// `fine`) linear combinations spanning the same space. The symmetric
/// (polar) choice is used, so an orthonormal input is returned unchanged.
pub fn orthogonalize_filters(filters: &[FilterSpec], fine: &SamplingGrid) -> Result<Vec<FilterSpec>> {
    let n = filters.len();
    if n == 0 {
        return invalid("no filters given");
    }
    for f in filters {
        f.validate(fine.dim())?;
    }
    let (atoms, mix) = atom_mix(filters);
    let compiled: Vec<Atom> = atoms.iter().map(Atom::compile).collect();
    let vol = fine.cell_volume();
    // Gram of the atoms, then congruence with the mixing matrix.
    let a = atoms.len();
    let mut gram_atoms = DMatrix::<f64>::zeros(a, a);
    let mut row = vec![0.0; a];
    for m in 0..fine.len() {
        let p = fine.point(m);
        for (k, atom) in compiled.iter().enumerate() {
            row[k] = atom.eval(p);
        }
        for i in 0..a {
            if row[i] == 0.0 {
                continue;
            }
            for j in i..a {
                gram_atoms[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..a {
        for j in 0..i {
            gram_atoms[(i, j)] = gram_atoms[(j, i)];
        }
    }
    gram_atoms *= vol;
    let gram = &mix * gram_atoms * mix.transpose();
    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let effective = eig
        .eigenvalues
        .iter()
        .filter(|&&l| lmax > 0.0 && l > GRAM_RANK_TOL * lmax)
        .count();
    if effective < n {
        return Err(Error::RankDeficient { effective, requested: n });
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let c = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    // New filter i = sum_j c[j, i] * filter_j = sum_a (c^T mix)[i, a] * atom_a.
    let coeffs = c.transpose() * mix;
    Ok((0..n)
        .map(|i| FilterSpec::Combination {
            terms: atoms.clone(),
            coeffs: coeffs.row(i).iter().copied().collect(),
        })
        .collect())
}

/// Distinct atoms of a filter list and the `J x A` matrix expressing each
/// filter in terms of them.
pub(crate) fn atom_mix(filters: &[FilterSpec]) -> (Vec<FilterSpec>, DMatrix<f64>) {
    let mut atoms: Vec<FilterSpec> = Vec::new();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (j, f) in filters.iter().enumerate() {
        for (c, atom) in f.flatten() {
            let idx = match atoms.iter().position(|a| *a == atom) {
                Some(i) => i,
                None => {
                    atoms.push(atom);
                    atoms.len() - 1
                }
            };
            entries.push((j, idx, c));
        }
    }
    let mut mix = DMatrix::zeros(filters.len(), atoms.len());
    for (j, a, c) in entries {
        mix[(j, a)] += c;
    }
    (atoms, mix)
}

/// `L^2` Gram matrix of `filters` evaluated by quadrature on `fine`.
pub fn filter_gram(filters: &[FilterSpec], fine: &SamplingGrid) -> DMatrix<f64> {
    let n = filters.len();
    let mut g = DMatrix::zeros(n, n);
    let vol = fine.cell_volume();
    let mut row = vec![0.0; n];
    for m in 0..fine.len() {
        let p = fine.point(m);
        for (k, f) in filters.iter().enumerate() {
            row[k] = f.eval(p);
        }
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] += row[i] * row[j] * vol;
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_shape() {
        let h = FilterSpec::Hat { scale: 0.5 };
        assert_eq!(h.eval(&[0.0]), 0.0);
        assert!((h.eval(&[0.5]) - 1.0).abs() < 1e-15);
        assert!((h.eval(&[0.25]) - 0.5).abs() < 1e-15);
        assert_eq!(h.eval(&[1.2]), 0.0);
    }

    #[test]
    fn tabulated_interpolates_linearly_and_zero_extends() {
        let t = FilterSpec::Tabulated {
            origin: vec![-1.0],
            step: vec![1.0],
            counts: vec![3],
            values: vec![0.0, 2.0, 0.0],
        };
        assert!((t.eval(&[-0.5]) - 1.0).abs() < 1e-15);
        assert!((t.eval(&[0.25]) - 1.5).abs() < 1e-15);
        assert_eq!(t.eval(&[1.5]), 0.0);
    }

    #[test]
    fn tabulated_2d_bilinear() {
        let t = FilterSpec::Tabulated {
            origin: vec![0.0, 0.0],
            step: vec![1.0, 1.0],
            counts: vec![2, 2],
            values: vec![0.0, 1.0, 2.0, 3.0],
        };
        // f(x, y) = x + 2 y on the unit square
        assert!((t.eval(&[0.25, 0.5]) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn orthogonalized_gaussians_are_orthonormal() {
        let filters: Vec<FilterSpec> = [0.03, 0.02, 0.01].iter().map(|&s| FilterSpec::Gaussian { std: s }).collect();
        let meas = SamplingGrid::unit_interval(100).unwrap();
        let fine = default_fine_grid(&filters, &meas).unwrap();
        let ortho = orthogonalize_filters(&filters, &fine).unwrap();
        let g = filter_gram(&ortho, &fine);
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-10);
    }

    #[test]
    fn proportional_filters_are_rank_deficient() {
        let g = FilterSpec::Gaussian { std: 0.02 };
        let twice = FilterSpec::Combination { terms: vec![g.clone()], coeffs: vec![2.0] };
        let meas = SamplingGrid::unit_interval(100).unwrap();
        let fine = default_fine_grid(&[g.clone()], &meas).unwrap();
        match orthogonalize_filters(&[g, twice], &fine) {
            Err(Error::RankDeficient { effective, requested }) => {
                assert_eq!((effective, requested), (1, 2));
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn orthonormal_input_is_unchanged() {
        let filters: Vec<FilterSpec> = [0.03, 0.01].iter().map(|&s| FilterSpec::Gaussian { std: s }).collect();
        let meas = SamplingGrid::unit_interval(100).unwrap();
        let fine = default_fine_grid(&filters, &meas).unwrap();
        let once = orthogonalize_filters(&filters, &fine).unwrap();
        let twice = orthogonalize_filters(&once, &fine).unwrap();
        for m in (0..fine.len()).step_by(37) {
            let p = fine.point(m);
            for (a, b) in once.iter().zip(&twice) {
                assert!((a.eval(p) - b.eval(p)).abs() < 1e-12 * 20.0);
            }
        }
    }
}
