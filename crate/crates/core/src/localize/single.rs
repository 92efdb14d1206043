use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::objective::correlation_field;
use super::Domain;
use crate::error::{invalid, Result};
use crate::family::OperatorFamily;
use crate::geometry::{principal_angle_norm, projector_at, Projector, DEFAULT_RANK_TOL};
use crate::optimize::{golden_section, nelder_mead};

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizeOptions {
    pub coarse_step: f64,
    /// Absolute refinement tolerance; defaults to `1e-12` times the domain
    /// extent.
    pub refine_tol: Option<f64>,
    pub rank_tol: f64,
    pub max_iter: usize,
    /// Refinements are started from up to this many of the strongest coarse
    /// nodes with `H` at least half the coarse maximum; the smallest residual
    /// wins.
    pub starts: usize,
}

impl LocalizeOptions {
    pub fn new(coarse_step: f64) -> Self {
        Self { coarse_step, refine_tol: None, rank_tol: DEFAULT_RANK_TOL, max_iter: 2000, starts: 4 }
    }

    pub(crate) fn tol(&self, domain: &Domain) -> f64 {
        self.refine_tol.unwrap_or(1e-12 * domain.extent())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeStatus {
    Isolated,
    Clustered,
    Weak,
}

/// A localized spike with the coefficients of `y` in `ran E(x_hat)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeEstimate {
    pub position: Vec<f64>,
    /// `H(x_hat)`.
    pub objective: f64,
    /// `|y - Pi y|^2 / 2` at `x_hat`.
    pub residual: f64,
    /// `U^T y` in the orthonormal range basis.
    pub alpha_range: Vec<f64>,
    /// Minimum-norm `alpha` with `E(x_hat) alpha = Pi y`.
    pub alpha: Vec<f64>,
    pub status: SpikeStatus,
    pub warnings: Vec<String>,
}

impl SpikeEstimate {
    pub fn alpha_norm(&self) -> f64 {
        self.alpha.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Range coordinates and ambient coefficients of `y` at `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaEstimate {
    pub range_coords: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `|y - Pi y|`.
    pub residual_norm: f64,
}

fn lift(p: &Projector, coords: &DVector<f64>) -> Vec<f64> {
    let mut alpha = DVector::zeros(p.right.nrows());
    for (k, &s) in p.singular_values.iter().enumerate() {
        alpha += p.right.column(k) * (coords[k] / s);
    }
    alpha.iter().copied().collect()
}

pub fn estimate_alpha(family: &OperatorFamily, x: &[f64], y: &[f64], rank_tol: f64) -> Result<AlphaEstimate> {
    if y.len() != family.num_samples() {
        return invalid("measurement length does not match the grid");
    }
    let p = projector_at(family, x, rank_tol)?;
    let c = p.coords(y);
    Ok(AlphaEstimate {
        range_coords: c.iter().copied().collect(),
        alpha: lift(&p, &c),
        residual_norm: (2.0 * p.residual(y)).sqrt(),
    })
}

/// Minimize the residual `|y - Pi_x y|^2 / 2` near `start`, within one coarse
/// step. Returns the refined point unless `start` is at least as good.
pub(crate) fn refine(
    family: &OperatorFamily,
    y: &[f64],
    domain: &Domain,
    start: &[f64],
    radius: f64,
    opts: &LocalizeOptions,
) -> Result<(Vec<f64>, f64)> {
    let mut err = None;
    let mut residual = |x: &[f64]| -> f64 {
        match projector_at(family, x, opts.rank_tol) {
            Ok(p) => p.residual(y),
            Err(e) => {
                err.get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let r0 = residual(start);
    let tol = opts.tol(domain);
    let (x, r) = if start.len() == 1 {
        let a = (start[0] - radius).max(domain.lower[0]);
        let b = (start[0] + radius).min(domain.upper[0]);
        let (x, r) = golden_section(|t| residual(&[t]), a, b, tol, opts.max_iter);
        (vec![x], r)
    } else {
        let lo: Vec<f64> = start.iter().zip(&domain.lower).map(|(s, l)| (s - radius).max(*l)).collect();
        let hi: Vec<f64> = start.iter().zip(&domain.upper).map(|(s, u)| (s + radius).min(*u)).collect();
        nelder_mead(&mut residual, start, 0.5 * radius, &lo, &hi, tol, opts.max_iter)
    };
    if let Some(e) = err {
        return Err(e);
    }
    Ok(if r <= r0 { (x, r) } else { (start.to_vec(), r0) })
}

pub(crate) fn estimate_at(
    family: &OperatorFamily,
    y: &[f64],
    x: Vec<f64>,
    rank_tol: f64,
    status: SpikeStatus,
    warnings: Vec<String>,
) -> Result<SpikeEstimate> {
    let p = projector_at(family, &x, rank_tol)?;
    let c = p.coords(y);
    Ok(SpikeEstimate {
        objective: 0.5 * c.norm_squared(),
        residual: p.residual(y),
        alpha_range: c.iter().copied().collect(),
        alpha: lift(&p, &c),
        position: x,
        status,
        warnings,
    })
}

/// Single-spike estimate: coarse-grid maximization of `H`, then local
/// minimization of the residual within one coarse step of the strongest
/// coarse nodes (see [`LocalizeOptions::starts`]).
pub fn localize_single(
    family: &OperatorFamily,
    y: &[f64],
    domain: &Domain,
    opts: &LocalizeOptions,
) -> Result<SpikeEstimate> {
    if y.len() != family.num_samples() {
        return invalid("measurement length does not match the grid");
    }
    if domain.dim() != family.dim() {
        return invalid("domain dimension does not match the grid");
    }
    let lattice = domain.lattice(opts.coarse_step)?;
    let field = correlation_field(family, y, &lattice, opts.rank_tol)?;
    finish_single(family, y, domain, opts, &lattice, &field.values)
}

/// Coarse-lattice projectors for one family and domain, reusable across
/// measurements.
pub struct CoarseCache {
    pub lattice: Vec<Vec<f64>>,
    pub projectors: Vec<Projector>,
}

impl CoarseCache {
    pub fn new(family: &OperatorFamily, domain: &Domain, opts: &LocalizeOptions) -> Result<Self> {
        if domain.dim() != family.dim() {
            return invalid("domain dimension does not match the grid");
        }
        let lattice = domain.lattice(opts.coarse_step)?;
        let projectors = lattice
            .iter()
            .map(|x| projector_at(family, x, opts.rank_tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lattice, projectors })
    }
}

/// [`localize_single`] with the coarse projectors taken from `cache`, which
/// must have been built for the same family, domain and options.
pub fn localize_single_cached(
    family: &OperatorFamily,
    y: &[f64],
    domain: &Domain,
    opts: &LocalizeOptions,
    cache: &CoarseCache,
) -> Result<SpikeEstimate> {
    if y.len() != family.num_samples() {
        return invalid("measurement length does not match the grid");
    }
    let values: Vec<f64> = cache.projectors.iter().map(|p| p.energy(y)).collect();
    finish_single(family, y, domain, opts, &cache.lattice, &values)
}

fn finish_single(
    family: &OperatorFamily,
    y: &[f64],
    domain: &Domain,
    opts: &LocalizeOptions,
    lattice: &[Vec<f64>],
    values: &[f64],
) -> Result<SpikeEstimate> {
    if y.len() != family.num_samples() {
        return invalid("measurement length does not match the grid");
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let best = order[0];
    let mut warnings = Vec::new();
    if y.iter().all(|&v| v == 0.0) {
        warnings.push("measurement is zero; objective is flat".to_string());
        return estimate_at(family, y, lattice[best].clone(), opts.rank_tol, SpikeStatus::Isolated, warnings);
    }
    let mut x_best = lattice[best].clone();
    let mut r_best = f64::INFINITY;
    for &i in order.iter().take(opts.starts.max(1)) {
        if i != best && values[i] < 0.5 * values[best] {
            break;
        }
        let (x, r) = refine(family, y, domain, &lattice[i], opts.coarse_step, opts)?;
        if r < r_best {
            x_best = x;
            r_best = r;
        }
    }
    estimate_at(family, y, x_best, opts.rank_tol, SpikeStatus::Isolated, warnings)
}

/// Coarse step at which the decorrelation profile around `reference`
/// reaches `level` (0.25 by default in the harness), capped at a third of
/// the distance where it reaches 0.5 so the main lobe gets at least three
/// coarse samples. The profile is sampled with a twentieth of the grid step
/// up to a quarter of `max_distance`; falls back to the smallest grid step.
pub fn suggest_coarse_step(
    family: &OperatorFamily,
    reference: &[f64],
    level: f64,
    max_distance: f64,
    rank_tol: f64,
) -> Result<f64> {
    let fallback = family.grid().min_step().unwrap_or(max_distance / 100.0);
    let h = fallback / 20.0;
    let p0 = projector_at(family, reference, rank_tol)?;
    let mut run = 0.0f64;
    let mut prev = 0.0f64;
    let mut at_level = None;
    let mut k = 1usize;
    while k as f64 * h <= 0.25 * max_distance {
        let mut worst = f64::INFINITY;
        for d in 0..family.dim() {
            for sign in [1.0, -1.0] {
                let mut x = reference.to_vec();
                x[d] += sign * k as f64 * h;
                let p = projector_at(family, &x, rank_tol)?;
                worst = worst.min(1.0 - principal_angle_norm(&p0, &p));
            }
        }
        run = run.max(worst);
        let crossing = |t: f64| h * ((k - 1) as f64 + if run > prev { (t - prev) / (run - prev) } else { 1.0 });
        if at_level.is_none() && run >= level {
            at_level = Some(crossing(level));
        }
        if run >= 0.5 {
            let lobe = crossing(0.5) / 3.0;
            return Ok(at_level.map_or(lobe, |s: f64| s.min(lobe)));
        }
        prev = run;
        k += 1;
    }
    Ok(at_level.unwrap_or(fallback))
}
