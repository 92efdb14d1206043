use super::objective::{correlation_field, CorrelationField};
use super::single::{estimate_at, refine, LocalizeOptions, SpikeEstimate, SpikeStatus};
use super::Domain;
use crate::error::{invalid, Result};
use crate::family::OperatorFamily;
use crate::geometry::{IsolationRadius, DEFAULT_RANK_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct DetectOptions {
    pub coarse_step: f64,
    /// Detection stops once the best remaining coarse value of `H` drops
    /// below `weak_threshold * |y|^2 / 2`.
    pub weak_threshold: f64,
    /// Radius of the suppression ball around each detection; defaults to
    /// three coarse steps.
    pub exclusion_radius: Option<f64>,
    /// Detections with `H` below this fraction of the strongest detection's
    /// `H` are flagged weak.
    pub weak_relative: f64,
    pub refine_tol: Option<f64>,
    pub rank_tol: f64,
    pub max_peaks: usize,
}

impl DetectOptions {
    pub fn new(coarse_step: f64) -> Self {
        Self {
            coarse_step,
            weak_threshold: 0.1,
            exclusion_radius: None,
            weak_relative: 0.1,
            refine_tol: None,
            rank_tol: DEFAULT_RANK_TOL,
            max_peaks: 10_000,
        }
    }

    /// Use half the minimal separation of an isolation analysis as the
    /// exclusion radius.
    pub fn with_isolation(mut self, iso: &IsolationRadius) -> Self {
        self.exclusion_radius = Some(0.5 * iso.delta_min);
        self
    }

    pub fn exclusion(&self) -> f64 {
        self.exclusion_radius.unwrap_or(3.0 * self.coarse_step)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Greedy multi-spike detection on the coarse field: take the global maximum,
/// refine it, suppress the coarse nodes within the exclusion radius, repeat.
/// Refinements that end inside the ball of an earlier detection are dropped.
/// Pairs closer than twice the exclusion radius are flagged clustered.
/// Returns the detections (in detection order) and the coarse field.
pub fn detect_peaks(
    family: &OperatorFamily,
    y: &[f64],
    domain: &Domain,
    opts: &DetectOptions,
) -> Result<(Vec<SpikeEstimate>, CorrelationField)> {
    if y.len() != family.num_samples() {
        return invalid("measurement length does not match the grid");
    }
    if domain.dim() != family.dim() {
        return invalid("domain dimension does not match the grid");
    }
    let excl = opts.exclusion();
    if !(excl > 0.0) {
        return invalid("exclusion radius must be positive");
    }
    let lattice = domain.lattice(opts.coarse_step)?;
    let field = correlation_field(family, y, &lattice, opts.rank_tol)?;
    let stop = opts.weak_threshold * field.half_norm_sq;
    let local = LocalizeOptions {
        coarse_step: opts.coarse_step,
        refine_tol: opts.refine_tol,
        rank_tol: opts.rank_tol,
        max_iter: 2000,
        starts: 1,
    };
    let mut active = vec![true; lattice.len()];
    let mut found: Vec<SpikeEstimate> = Vec::new();
    while found.len() < opts.max_peaks {
        let mut best: Option<usize> = None;
        for (i, &v) in field.values.iter().enumerate() {
            if active[i] && best.is_none_or(|b| v > field.values[b]) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        if field.values[b] < stop || field.values[b] <= 0.0 {
            break;
        }
        let (x, _) = refine(family, y, domain, &lattice[b], opts.coarse_step, &local)?;
        active[b] = false;
        for (i, p) in lattice.iter().enumerate() {
            if active[i] && dist(p, &x) <= excl {
                active[i] = false;
            }
        }
        // A node just outside a ball can refine back up a suppressed peak.
        if found.iter().any(|f| dist(&f.position, &x) <= excl) {
            continue;
        }
        found.push(estimate_at(family, y, x, opts.rank_tol, SpikeStatus::Isolated, Vec::new())?);
    }
    let strongest = found.iter().map(|s| s.objective).fold(0.0, f64::max);
    for s in found.iter_mut() {
        if s.objective < opts.weak_relative * strongest {
            s.status = SpikeStatus::Weak;
        }
    }
    for i in 0..found.len() {
        for j in (i + 1)..found.len() {
            if dist(&found[i].position, &found[j].position) < 2.0 * excl {
                found[i].status = SpikeStatus::Clustered;
                found[j].status = SpikeStatus::Clustered;
            }
        }
    }
    Ok((found, field))
}
