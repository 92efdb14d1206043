use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, FamilySource, LocalizeMode};
use super::io::{self, fmt};
use super::sweep::{run_sweep, summarize, trials_at, SweepNoise, SweepParams};
use super::{demo, phase, Experiment, RunOptions, RunSummary};
use crate::error::{Error, Result};
use crate::family::{norm, synthesize_measurement, OperatorFamily, SpikeTrain};
use crate::geometry::{
    fit_phi_model, location_error_bound, mc_amplitude, monotone_majorant, monotone_minorant, sample_phi_profile,
    spectral_bounds, Envelope, ProjectorSet, DEFAULT_RANK_TOL,
};
use crate::localize::{
    correlation_field, detect_peaks, localize_single, suggest_coarse_step, DetectOptions, Domain, LocalizeOptions,
    SpikeEstimate,
};
use crate::recover::SolverOptions;
use crate::seeds;

const DESK_TRIALS: usize = 20;
const PAPER_TRIALS: usize = 100;

struct Ctx {
    cfg: ExperimentConfig,
    seed: u64,
    trials: usize,
    paper_scale: bool,
    rank_tol: f64,
    out: PathBuf,
    files: Vec<String>,
    lines: Vec<String>,
    choices: serde_json::Map<String, Value>,
    family: Option<FamilySource>,
}

impl Ctx {
    fn family(&mut self, default: &str) -> Result<OperatorFamily> {
        let src = self.cfg.family_source(default)?;
        let fam = src.build()?;
        self.family = Some(src);
        Ok(fam)
    }

    fn choose(&mut self, key: &str, value: impl Serialize) {
        self.choices.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.out.join(name)
    }

    fn csv<S: AsRef<str>>(&mut self, name: &str, header: &[S], rows: &[Vec<String>]) -> Result<()> {
        let p = self.path(name);
        io::write_csv(&p, header, rows)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        io::write_json(&p, value)
    }

    fn thetas(&self, default: &[f64]) -> Vec<f64> {
        self.cfg.thetas.clone().unwrap_or_else(|| default.to_vec())
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Run `experiment` with an already parsed configuration.
pub fn run_with_config(experiment: Experiment, cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    if let Some(name) = &cfg.experiment {
        match Experiment::from_name(name) {
            Some(e) if e == experiment => {}
            Some(e) => {
                return Err(config_err(format!(
                    "config is for experiment `{}`, not `{}`",
                    e.name(),
                    experiment.name()
                )))
            }
            None => return Err(config_err(format!("unknown experiment `{name}`"))),
        }
    }
    let out = match (&opts.out, &cfg.output_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => cfg.resolve(o),
        (None, None) => Path::new("out").join(experiment.name()),
    };
    std::fs::create_dir_all(&out)?;
    let trials = match (opts.paper_scale, cfg.trials) {
        (true, _) => PAPER_TRIALS,
        (false, Some(t)) => t,
        (false, None) => DESK_TRIALS,
    };
    let mut ctx = Ctx {
        seed: opts.seed.or(cfg.seed).unwrap_or(0),
        rank_tol: cfg.rank_tol.unwrap_or(DEFAULT_RANK_TOL),
        cfg,
        trials,
        paper_scale: opts.paper_scale,
        out,
        files: Vec::new(),
        lines: Vec::new(),
        choices: serde_json::Map::new(),
        family: None,
    };
    match experiment {
        Experiment::PhiProfile => phi_profile(&mut ctx)?,
        Experiment::Localize => localize(&mut ctx)?,
        Experiment::NoiseSweep => noise_sweep(&mut ctx, false)?,
        Experiment::GammaError => noise_sweep(&mut ctx, true)?,
        Experiment::PhaseTransition => phase_transition(&mut ctx)?,
        Experiment::Demo2d => demo2d(&mut ctx)?,
        Experiment::McAmplitude => mc(&mut ctx)?,
    }
    let mut files = ctx.files.clone();
    files.push("run.json".to_string());
    let meta = json!({
        "schema_version": io::SCHEMA_VERSION,
        "experiment": experiment.name(),
        "seed": ctx.seed,
        "trials": ctx.trials,
        "paper_scale": ctx.paper_scale,
        "rank_tol": ctx.rank_tol,
        "family": ctx.family.as_ref().map(FamilySource::describe),
        "config": serde_json::to_value(&ctx.cfg).unwrap_or(Value::Null),
        "choices": Value::Object(ctx.choices.clone()),
        "outputs": files,
    });
    io::write_json(&ctx.out.join("run.json"), &meta)?;
    Ok(RunSummary { experiment, out_dir: ctx.out, files, lines: ctx.lines })
}

fn grid_domain(family: &OperatorFamily) -> Result<Domain> {
    let (lo, hi) = family.grid().bounds();
    Domain::new(lo, hi)
}

fn center(domain: &Domain) -> Vec<f64> {
    domain.lower.iter().zip(&domain.upper).map(|(a, b)| 0.5 * (a + b)).collect()
}

fn pixel(family: &OperatorFamily) -> f64 {
    family.grid().min_step().unwrap_or(1.0)
}

/// Seeded standard normal operator coordinates.
fn default_gamma(family: &OperatorFamily, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 0x9a33a));
    (0..family.num_coords()).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn check_gamma(family: &OperatorFamily, gamma: &[f64]) -> Result<()> {
    if gamma.len() != family.num_coords() {
        return Err(config_err(format!(
            "gamma has {} entries, the family has {} coordinates",
            gamma.len(),
            family.num_coords()
        )));
    }
    Ok(())
}

fn coarse_step(ctx: &mut Ctx, family: &OperatorFamily, domain: &Domain, configured: Option<f64>) -> Result<f64> {
    let step = match configured {
        Some(s) => s,
        None => suggest_coarse_step(family, &center(domain), 0.25, domain.extent(), ctx.rank_tol)?,
    };
    ctx.choose("coarse_step", step);
    Ok(step)
}

fn phi_profile(ctx: &mut Ctx) -> Result<()> {
    let family = ctx.family("gaussian_narrow")?;
    let domain = grid_domain(&family)?;
    let sec = ctx.cfg.phi.clone();
    let reference = sec.reference.clone().unwrap_or_else(|| center(&domain));
    if reference.len() != family.dim() {
        return Err(config_err("phi.reference has the wrong dimension"));
    }
    let step = sec.step.unwrap_or(pixel(&family) / 20.0);
    let k_max = sec.k_max.unwrap_or(((0.25 * domain.extent() / step).ceil() as usize).max(1));
    ctx.choose("reference", &reference);
    ctx.choose("step", step);
    ctx.choose("k_max", k_max);
    let raw = sample_phi_profile(&family, &reference, step, k_max, ctx.rank_tol)?;
    let profile = match sec.envelope {
        Envelope::Majorant => monotone_majorant(&raw, step),
        Envelope::Minorant => monotone_minorant(&raw, step),
    };
    let rows: Vec<Vec<String>> = (0..raw.len())
        .map(|k| vec![k.to_string(), fmt(profile.distance(k)), fmt(raw[k]), fmt(profile.values[k])])
        .collect();
    ctx.csv("phi_profile.csv", io::PHI_PROFILE_HEADER, &rows)?;

    // Probes along the main diagonal of the middle 60% of the domain.
    let probes: Vec<Vec<f64>> = (0..sec.probes.max(1))
        .map(|p| {
            let t = if sec.probes > 1 { p as f64 / (sec.probes - 1) as f64 } else { 0.5 };
            domain.lower.iter().zip(&domain.upper).map(|(a, b)| a + (b - a) * (0.2 + 0.6 * t)).collect()
        })
        .collect();
    let sb = spectral_bounds(&family, &probes, ctx.rank_tol)?;
    let mut warnings = Vec::new();
    let model = match fit_phi_model(&profile, sec.fit_decay) {
        Ok(m) => Some(m),
        Err(e) => {
            warnings.push(format!("phi model fit failed: {e}"));
            None
        }
    };
    let certificate = monotone_minorant(&raw, step);
    let thetas = ctx.thetas(&[0.05, 0.1, 0.2]);
    let location_bounds: Vec<Value> = thetas
        .iter()
        .map(|&t| json!({"theta": t, "bound": location_error_bound(t, &certificate)}))
        .collect();
    ctx.json(
        "bounds.json",
        &json!({
            "sigma_minus": sb.sigma_minus,
            "sigma_plus": sb.sigma_plus,
            "kappa": sb.kappa,
            "lipschitz": sb.lipschitz,
            "probe_step": sb.probe_step,
            "phi_model": model,
            "location_bounds": location_bounds,
            "warnings": warnings,
        }),
    )?;
    ctx.lines.push(format!(
        "phi profile: {} samples, phi({:.4e}) = {:.4}",
        raw.len(),
        profile.distance(k_max),
        profile.values[k_max]
    ));
    ctx.lines.push(format!("sigma- = {:.6e}, sigma+ = {:.6e}", sb.sigma_minus, sb.sigma_plus));
    Ok(())
}

#[derive(Serialize)]
struct DetectionRecord<'a> {
    x: &'a [f64],
    #[serde(rename = "H")]
    h: f64,
    status: crate::localize::SpikeStatus,
    alpha_norm: f64,
    residual: f64,
    warnings: &'a [String],
}

fn detection_records(dets: &[SpikeEstimate]) -> Vec<DetectionRecord<'_>> {
    dets.iter()
        .map(|d| DetectionRecord {
            x: &d.position,
            h: d.objective,
            status: d.status,
            alpha_norm: d.alpha_norm(),
            residual: d.residual,
            warnings: &d.warnings,
        })
        .collect()
}

fn localize(ctx: &mut Ctx) -> Result<()> {
    let family = ctx.family("gaussian_narrow")?;
    let sec = ctx.cfg.localize.clone();
    let y = match (&sec.measurement, &sec.synthesize) {
        (Some(p), None) => io::read_measurement(&ctx.cfg.resolve(p), family.grid())?,
        (None, Some(s)) => {
            let gamma = s.gamma.clone().unwrap_or_else(|| default_gamma(&family, ctx.seed));
            check_gamma(&family, &gamma)?;
            let spikes = SpikeTrain::new(s.positions.clone(), s.weights.clone())?;
            let m = synthesize_measurement(&family, &spikes, &gamma, &s.noise)?;
            ctx.choose("gamma", &gamma);
            let p = ctx.path("measurement.csv");
            io::write_measurement(&p, family.grid(), &m.y)?;
            m.y
        }
        _ => return Err(config_err("localize needs exactly one of `measurement` or `synthesize`")),
    };
    let domain = match sec.domain.clone() {
        Some(d) => d,
        None => grid_domain(&family)?,
    };
    let step = coarse_step(ctx, &family, &domain, sec.coarse_step)?;
    let (dets, field) = match sec.mode {
        LocalizeMode::Single => {
            let opts = LocalizeOptions { rank_tol: ctx.rank_tol, ..LocalizeOptions::new(step) };
            let est = localize_single(&family, &y, &domain, &opts)?;
            let field = correlation_field(&family, &y, &domain.lattice(step)?, ctx.rank_tol)?;
            (vec![est], field)
        }
        LocalizeMode::Peaks => {
            let opts = DetectOptions {
                weak_threshold: sec.weak_threshold,
                weak_relative: sec.weak_relative,
                exclusion_radius: sec.exclusion_radius,
                rank_tol: ctx.rank_tol,
                ..DetectOptions::new(step)
            };
            ctx.choose("exclusion_radius", opts.exclusion());
            detect_peaks(&family, &y, &domain, &opts)?
        }
    };
    ctx.json("detections.json", &detection_records(&dets))?;
    let p = ctx.path("correlation_field.csv");
    io::write_field(&p, &field)?;
    for d in &dets {
        ctx.lines.push(format!("{:?} x = {:?} H = {:.6e}", d.status, d.position, d.objective));
    }
    Ok(())
}

fn noise_sweep(ctx: &mut Ctx, with_gamma: bool) -> Result<()> {
    let family = ctx.family("gaussian_narrow")?;
    if family.dim() != 1 {
        return Err(config_err("noise sweeps need a one-dimensional family"));
    }
    let thetas = ctx.thetas(&[0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0]);
    if thetas.iter().any(|&t| t > 2.0) {
        return Err(config_err("sweep noise levels must lie in [0, 2]"));
    }
    let domain = grid_domain(&family)?;
    let sec = ctx.cfg.sweep.clone();
    let (lo, hi) = (domain.lower[0], domain.upper[0]);
    let range = sec.spike_range.unwrap_or([lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo)]);
    if !(range[0] < range[1] && range[0] >= lo && range[1] <= hi) {
        return Err(config_err("sweep.spike_range must be an increasing interval inside the grid"));
    }
    let gamma = sec.gamma.clone().unwrap_or_else(|| default_gamma(&family, ctx.seed));
    check_gamma(&family, &gamma)?;
    let step = coarse_step(ctx, &family, &domain, sec.coarse_step)?;
    ctx.choose("thetas", &thetas);
    ctx.choose("spike_range", range);
    ctx.choose("gamma", &gamma);
    ctx.choose("spike_weight", 1.0);
    ctx.choose("noise", "white gaussian, sigma = theta |y0| / sqrt(M)");
    ctx.choose("pixel", pixel(&family));
    let params = SweepParams {
        thetas: thetas.clone(),
        trials: ctx.trials,
        seed: ctx.seed,
        spike_range: range,
        gamma,
        coarse_step: step,
        noise: SweepNoise::White,
        with_gamma,
        rank_tol: ctx.rank_tol,
    };
    let trials = run_sweep(&family, &domain, &params)?;
    let mut summary_rows = Vec::new();
    let mut trial_rows = Vec::new();
    for &theta in &thetas {
        let at = trials_at(&trials, theta);
        let errs: Vec<f64> = at.iter().map(|t| t.error_px).collect();
        let s = summarize(&errs);
        if with_gamma {
            let ge: Vec<f64> = at.iter().filter_map(|t| t.gamma_error).collect();
            let g = summarize(&ge);
            summary_rows.push(vec![
                fmt(theta),
                at.len().to_string(),
                fmt(g.min),
                fmt(g.q1),
                fmt(g.median),
                fmt(g.q3),
                fmt(g.max),
                fmt(g.mean),
            ]);
            ctx.lines.push(format!("theta {theta}: median gamma error {:.4e}", g.median));
            for t in &at {
                trial_rows.push(vec![
                    fmt(theta),
                    t.trial.to_string(),
                    fmt(t.error_px),
                    fmt(t.gamma_error.unwrap_or(f64::NAN)),
                ]);
            }
        } else {
            summary_rows.push(vec![
                fmt(theta),
                at.len().to_string(),
                fmt(s.mean),
                fmt(s.q1),
                fmt(s.median),
                fmt(s.q3),
                fmt(s.max),
            ]);
            ctx.lines.push(format!("theta {theta}: mean error {:.4e} px", s.mean));
            for t in &at {
                trial_rows.push(vec![fmt(theta), t.trial.to_string(), fmt(t.x_true), fmt(t.x_hat), fmt(t.error_px)]);
            }
        }
    }
    if with_gamma {
        ctx.csv("gamma_error.csv", io::GAMMA_ERROR_HEADER, &summary_rows)?;
        ctx.csv("gamma_trials.csv", io::GAMMA_TRIALS_HEADER, &trial_rows)?;
    } else {
        ctx.csv("noise_sweep.csv", io::NOISE_SWEEP_HEADER, &summary_rows)?;
        ctx.csv("noise_trials.csv", io::NOISE_TRIALS_HEADER, &trial_rows)?;
    }
    Ok(())
}

fn phase_transition(ctx: &mut Ctx) -> Result<()> {
    let sec = ctx.cfg.phase.clone();
    if sec.k_values.is_empty() || sec.n_values.is_empty() || sec.solvers.is_empty() {
        return Err(config_err("phase needs k_values, n_values and solvers"));
    }
    if sec.k_values.contains(&0) || sec.n_values.contains(&0) {
        return Err(config_err("phase K and N values must be positive"));
    }
    if ctx.cfg.family.is_some() {
        return Err(config_err("phase_transition builds its own families; remove `family`"));
    }
    ctx.choose("family", "smooth_product_convolution: 3 Gaussian filters (stds 0.03, 0.02, 0.01), K smooth modulators");
    ctx.choose("positions", "uniform in [1, 9]");
    ctx.choose("weights", "uniform in [0.5, 1.5]");
    ctx.choose("gamma", "standard normal");
    ctx.choose("success", "matrix relative error < 1e-4");
    let opts = SolverOptions { max_iter: sec.max_iter, ..SolverOptions::default() };
    let trace_dir = ctx.out.join("traces");
    if sec.traces {
        std::fs::create_dir_all(&trace_dir)?;
    }
    let mut rows: Vec<Vec<Vec<String>>> = vec![Vec::new(); sec.solvers.len()];
    let mut trace_files = Vec::new();
    for &k in &sec.k_values {
        for &n in &sec.n_values {
            let wins = phase::run_cell(
                k,
                n,
                ctx.trials,
                sec.samples,
                ctx.seed,
                &sec.solvers,
                &opts,
                sec.nuclear_lambda,
                |t, reports| {
                    if sec.traces {
                        for r in reports {
                            let name = format!("traces/K{k}_N{n}_t{t}_{}.csv", r.solver.name());
                            io::write_solver_trace(&ctx.out.join(&name), r)?;
                            trace_files.push(name);
                        }
                    }
                    Ok(())
                },
            )?;
            for (s, (&solver, &w)) in sec.solvers.iter().zip(&wins).enumerate() {
                let rate = w as f64 / ctx.trials as f64;
                rows[s].push(vec![k.to_string(), n.to_string(), solver.name().to_string(), fmt(rate), ctx.trials.to_string()]);
                ctx.lines.push(format!("K={k} N={n} {}: {w}/{}", solver.name(), ctx.trials));
            }
        }
    }
    ctx.files.extend(trace_files);
    for (s, solver) in sec.solvers.iter().enumerate() {
        ctx.csv(&format!("phase_{}.csv", solver.name()), io::PHASE_HEADER, &rows[s])?;
    }
    Ok(())
}

fn demo2d(ctx: &mut Ctx) -> Result<()> {
    let sec = ctx.cfg.demo.clone();
    let family = if ctx.cfg.family.is_some() {
        ctx.family("astigmatic")?
    } else {
        let src = FamilySource::Preset(super::config::PresetConfig {
            samples: Some(sec.pixels),
            ..super::config::PresetConfig::named("astigmatic")
        });
        let f = src.build()?;
        ctx.family = Some(src);
        f
    };
    if family.dim() != 2 {
        return Err(config_err("demo2d needs a two-dimensional family"));
    }
    let scene = demo::demo_scene(&sec, seeds::derive(ctx.seed, 1))?;
    let gamma = demo::demo_gamma(family.num_filters(), family.num_modulators());
    check_gamma(&family, &gamma)?;
    let thetas = ctx.thetas(&[0.0, 0.5]);
    ctx.choose("gamma", &gamma);
    ctx.choose("thetas", &thetas);
    ctx.choose("noise", "white gaussian, sigma = theta |y0| / sqrt(M)");
    ctx.json("scene.json", &scene)?;
    let gram = demo::operator_gram(&family)?;
    let mut reports = Vec::new();
    for (l, &theta) in thetas.iter().enumerate() {
        let (report, field) =
            demo::run_demo(&family, &scene, &gamma, theta, &sec, demo::noise_seed(ctx.seed, l), &gram)?;
        let p = ctx.path(&format!("correlation_field_{l}.csv"));
        io::write_field(&p, &field)?;
        ctx.json(&format!("detections_{l}.json"), &detection_records(&report.detections))?;
        ctx.lines.push(format!(
            "theta {theta}: {} detections, {} isolated used, localization {:.4e} px, operator error {:.4e}",
            report.detections.len(),
            report.recovered_from,
            report.localization_error_px,
            report.operator_error
        ));
        reports.push(report);
    }
    ctx.json("demo.json", &reports)?;
    Ok(())
}

fn mc(ctx: &mut Ctx) -> Result<()> {
    let family = ctx.family("gaussian_narrow")?;
    let domain = grid_domain(&family)?;
    let sec = ctx.cfg.mc.clone();
    let x_bar = sec.position.clone().unwrap_or_else(|| center(&domain));
    if x_bar.len() != family.dim() {
        return Err(config_err("mc.position has the wrong dimension"));
    }
    let gamma = sec.gamma.clone().unwrap_or_else(|| default_gamma(&family, ctx.seed));
    check_gamma(&family, &gamma)?;
    let eval_step = sec.eval_step.unwrap_or(0.5 * pixel(&family));
    let points = domain.lattice(eval_step)?;
    let eval = ProjectorSet::new(&family, &points, ctx.rank_tol)?;
    let h = pixel(&family) / 20.0;
    let k_max = ((0.25 * domain.extent() / h).ceil() as usize).max(1);
    let profile = monotone_minorant(&sample_phi_profile(&family, &x_bar, h, k_max, ctx.rank_tol)?, h);
    let y0 = family.response(&x_bar)?.apply(&gamma);
    let base = sec.base_theta * norm(&y0) / (family.num_samples() as f64).sqrt();
    ctx.choose("position", &x_bar);
    ctx.choose("gamma", &gamma);
    ctx.choose("base_sigma", base);
    ctx.choose("eval_step", eval_step);
    ctx.choose("eval_points", points.len());
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &f in &sec.sigma_factors {
        let sigma = f * base;
        let r = mc_amplitude(&family, &x_bar, &gamma, sigma, &eval, ctx.trials, ctx.seed, &profile)?;
        rows.push(vec![
            fmt(sigma),
            r.trials.to_string(),
            fmt(r.z1_mean),
            fmt(r.z1_std),
            fmt(r.z2_mean),
            fmt(r.z2_std),
            fmt(r.level),
            fmt(r.bound.value().unwrap_or(f64::NAN)),
        ]);
        ctx.lines.push(format!("sigma {sigma:.4e}: Z1 {:.4e} Z2 {:.4e}", r.z1_mean, r.z2_mean));
        reports.push(r);
    }
    ctx.csv("mc_amplitude.csv", io::MC_HEADER, &rows)?;
    ctx.json("mc_amplitude.json", &reports)?;
    Ok(())
}
