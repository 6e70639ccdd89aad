use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fdrthresh::sim::{
    common_mean_experiment, concentration_check, minimax_ball_experiment, regret_experiment,
    ThetaGenerator, VERSION,
};
use fdrthresh::{
    default_lambda_max, fdr_threshold_estimate_with, fixed_threshold_estimate, optimal_levels,
    population_fdr_levels, risk_curve, sample_mean_estimate, universal_level, EmpiricalPrior,
    EstimateReport, FdrConfig, Functional, OptimalLevels, Theory, ThresholdFamily,
};
use serde::Serialize;

use crate::config::{
    self, CurveKind, CurveSection, EstimateSection, ExperimentKind, ExperimentSection, Method,
    RunConfig,
};
use crate::io::{self, Cell, Table};
use crate::svg::{Plot, Series};
use crate::{
    Command, Common, CurveArgs, ExperimentArgs, FamilyArgs, FamilyName, Format, Invalid, LevelArgs,
};

struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
    quiet: bool,
}

impl Output {
    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn progress(&self, msg: std::fmt::Arguments) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn write(
        &self,
        stem: &str,
        table: &Table,
        json: &impl Serialize,
        plot: Option<&Plot>,
    ) -> Result<()> {
        if self.wants(Format::Csv) {
            table.write(&self.path(&format!("{stem}.csv")))?;
        }
        if self.wants(Format::Json) {
            io::write_json(json, &self.path(&format!("{stem}.json")))?;
        }
        if let (true, Some(plot)) = (self.wants(Format::Svg), plot) {
            let path = self.path(&format!("{stem}.svg"));
            std::fs::write(&path, plot.render())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn run(command: Command, common: &Common) -> Result<()> {
    let mut cfg = config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(r) = common.replicates {
        cfg.replicates = r;
    }
    let out = Output {
        dir: common.out.clone(),
        formats: common.format.clone(),
        quiet: common.quiet,
    };
    std::fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;

    match command {
        Command::Estimate(args) => {
            apply_levels(&mut cfg.fdr, &args.levels)?;
            apply_family(&mut cfg.family, &args.family)?;
            let mut sec = cfg.estimate.take().unwrap_or_default();
            if args.input.is_some() {
                sec.input = args.input;
            }
            if let Some(s) = args.scale {
                sec.scale = s;
            }
            if let Some(m) = args.method {
                sec.method = m;
            }
            if args.lambda.is_some() {
                sec.lambda = args.lambda;
            }
            sec.allow_non_smooth |= args.allow_non_smooth;
            cfg.estimate = Some(sec.clone());
            estimate(&cfg, &sec, &out)?;
        }
        Command::RiskCurve(args) => {
            apply_levels(&mut cfg.fdr, &args.curve.levels)?;
            apply_family(&mut cfg.family, &args.family)?;
            let mut sec = curve_section(&mut cfg, &args.curve);
            if let Some(f) = args.functional {
                sec.functional = f;
            }
            if args.b0.is_some() {
                sec.b0 = args.b0;
            }
            if args.c0.is_some() {
                sec.c0 = args.c0;
            }
            cfg.curve = Some(sec.clone());
            curve(&cfg, &sec, "risk_curve", &out)?;
        }
        Command::FdrCurve(args) => {
            apply_levels(&mut cfg.fdr, &args.levels)?;
            let mut sec = curve_section(&mut cfg, &args);
            sec.functional = CurveKind::Fdr;
            cfg.curve = Some(sec.clone());
            curve(&cfg, &sec, "fdr_curve", &out)?;
        }
        Command::Experiment(args) => {
            apply_levels(&mut cfg.fdr, &args.levels)?;
            apply_family(&mut cfg.family, &args.family)?;
            let sec = experiment_section(&mut cfg, args)?;
            cfg.experiment = Some(sec.clone());
            experiment(&cfg, &sec, &out)?;
        }
    }
    config::save(&cfg, &out.dir)
}

fn apply_levels(fdr: &mut FdrConfig, args: &LevelArgs) -> Result<()> {
    let pairs = [
        (&mut fdr.alpha1, args.alpha1),
        (&mut fdr.alpha2, args.alpha2),
        (&mut fdr.alpha1p, args.alpha1p),
        (&mut fdr.alpha2p, args.alpha2p),
        (&mut fdr.interp, args.interp),
    ];
    for (slot, value) in pairs {
        if let Some(v) = value {
            *slot = v;
        }
    }
    fdr.validate()?;
    Ok(())
}

fn apply_family(family: &mut ThresholdFamily, args: &FamilyArgs) -> Result<()> {
    if let Some(name) = args.family {
        *family = match name {
            FamilyName::Soft => ThresholdFamily::Soft,
            FamilyName::Hard => ThresholdFamily::Hard,
            FamilyName::Firm => ThresholdFamily::firm(args.kappa0)?,
            FamilyName::Interpolated => ThresholdFamily::interpolated(args.weight, args.kappa0)?,
        };
    }
    family.validate()?;
    Ok(())
}

fn curve_section(cfg: &mut RunConfig, args: &CurveArgs) -> CurveSection {
    let mut sec = cfg.curve.take().unwrap_or_default();
    if args.prior.is_some() {
        sec.prior = args.prior.clone();
    }
    if args.lambda_max.is_some() {
        sec.lambda_max = args.lambda_max;
    }
    if let Some(p) = args.points {
        sec.points = p;
    }
    sec
}

fn experiment_section(cfg: &mut RunConfig, args: ExperimentArgs) -> Result<ExperimentSection> {
    let mut sec = match (cfg.experiment.take(), args.kind) {
        (Some(mut s), Some(kind)) => {
            s.kind = kind;
            s
        }
        (Some(s), None) => s,
        (None, Some(kind)) => ExperimentSection::new(kind),
        (None, None) => return Err(Invalid("no experiment kind given".into()).into()),
    };
    if !args.ns.is_empty() {
        sec.ns = args.ns;
    }
    if !args.mus.is_empty() {
        sec.mus = args.mus;
    }
    if let Some(p) = args.p {
        sec.p = p;
    }
    if !args.radii.is_empty() {
        sec.radii = args.radii;
    }
    sec.weak |= args.weak;
    if !args.lambdas.is_empty() {
        sec.lambdas = args.lambdas;
    }
    if sec.ns.is_empty() {
        return Err(Invalid("empty list of dimensions".into()).into());
    }
    Ok(sec)
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    schema: u32,
    version: &'static str,
    method: Method,
    n: usize,
    scale: f64,
    /// λ̂ on the scale of the input, σ·λ̂
    #[serde(with = "fdrthresh::ext_real")]
    lambda_original_units: f64,
    #[serde(flatten)]
    report: &'a EstimateReport,
}

fn estimate(cfg: &RunConfig, sec: &EstimateSection, out: &Output) -> Result<()> {
    let input = sec
        .input
        .as_deref()
        .ok_or_else(|| Invalid("no input vector given".into()))?;
    if !(sec.scale > 0.0 && sec.scale.is_finite()) {
        return Err(Invalid(format!(
            "scale must be positive and finite, got {}",
            sec.scale
        ))
        .into());
    }
    let x = io::read_vector(input)?;
    let z: Vec<f64> = x.iter().map(|v| v / sec.scale).collect();
    let mut report = match sec.method {
        Method::Fdr => {
            let theory = if sec.allow_non_smooth {
                Theory::AllowNonSmooth
            } else {
                Theory::default()
            };
            fdr_threshold_estimate_with(&z, cfg.family, &cfg.fdr, theory)?
        }
        Method::Fixed => {
            let lambda = sec
                .lambda
                .ok_or_else(|| Invalid("method `fixed` needs a level".into()))?;
            fixed_threshold_estimate(&z, cfg.family, lambda)?
        }
        Method::Universal => fixed_threshold_estimate(&z, cfg.family, universal_level(z.len()))?,
        Method::SampleMean => sample_mean_estimate(&z)?,
    };
    for e in &mut report.estimate {
        *e *= sec.scale;
    }

    let mut table = Table::new("estimate", &["index", "x", "estimate"]);
    for (i, (v, e)) in x.iter().zip(&report.estimate).enumerate() {
        table.row(&[i.into(), (*v).into(), (*e).into()]);
    }
    let json = EstimateOutput {
        schema: io::SCHEMA_VERSION,
        version: VERSION,
        method: sec.method,
        n: x.len(),
        scale: sec.scale,
        lambda_original_units: report.lambda_used * sec.scale,
        report: &report,
    };
    out.write("estimate", &table, &json, None)?;
    let kept = report.estimate.iter().filter(|e| **e != 0.0).count();
    println!(
        "n = {}, lambda = {}, nonzero = {kept}",
        x.len(),
        report.lambda_used
    );
    Ok(())
}

fn load_prior(path: &Path) -> Result<EmpiricalPrior> {
    let (atoms, weights) = io::read_prior(path)?;
    Ok(match weights {
        Some(w) => EmpiricalPrior::new(atoms, w)?,
        None => EmpiricalPrior::uniform(&atoms)?,
    })
}

#[derive(Serialize)]
struct PopulationLevels {
    #[serde(with = "fdrthresh::ext_real")]
    xi1_star: f64,
    #[serde(with = "fdrthresh::ext_real")]
    xi2_star: f64,
}

#[derive(Serialize)]
struct CurveOutput {
    schema: u32,
    version: &'static str,
    functional: Functional,
    tag: &'static str,
    atoms: usize,
    degenerate: bool,
    b0: f64,
    c0: f64,
    optimal: OptimalLevels,
    population_levels: PopulationLevels,
    lambdas: Vec<f64>,
    values: Vec<f64>,
}

fn curve(cfg: &RunConfig, sec: &CurveSection, stem: &str, out: &Output) -> Result<()> {
    let path = sec
        .prior
        .as_deref()
        .ok_or_else(|| Invalid("no prior file given".into()))?;
    let prior = load_prior(path)?;
    let c0 = sec.c0.unwrap_or_else(|| cfg.family.risk_constant());
    if !(c0 >= 1.0 && c0.is_finite()) {
        return Err(Invalid(format!(
            "C0 must be finite and >= 1, got {c0} (the hard rule has none)"
        ))
        .into());
    }
    let b0 = sec.b0.unwrap_or_else(|| cfg.fdr.default_b0(c0));
    let floor = default_lambda_max(prior.n());
    let lambda_max = sec.lambda_max.unwrap_or(floor);
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Invalid(format!(
            "lambda_max must be positive and finite, got {lambda_max}"
        ))
        .into());
    }
    if sec.points < 2 {
        return Err(Invalid(format!("need at least 2 grid points, got {}", sec.points)).into());
    }
    let functional = match sec.functional {
        CurveKind::Rg => Functional::BayesRisk,
        CurveKind::Surrogate => Functional::Surrogate { b0 },
        CurveKind::Sg => Functional::RejectionProb,
        CurveKind::Fdr => Functional::FdrCurve,
        CurveKind::Smooth => Functional::SmoothBound { c0 },
    };
    let step = lambda_max / (sec.points - 1) as f64;
    let grid: Vec<f64> = (0..sec.points).map(|i| i as f64 * step).collect();
    let rc = risk_curve(&prior, &grid, functional)?;
    let optimal = optimal_levels(&prior, b0, lambda_max.max(floor))?;
    let (xi1, xi2) = population_fdr_levels(&prior, cfg.fdr.alpha1p, cfg.fdr.alpha2p)?;
    let degenerate = prior.is_degenerate();
    if degenerate {
        eprintln!(
            "warning: the prior puts all its mass at zero; the FDR curve is identically 1 \
             and the population FDR levels are infinite"
        );
    }

    let tag = functional.tag();
    let mut table = Table::new(stem, &["lambda", "value", "functional"]);
    for (l, v) in rc.lambdas.iter().zip(&rc.values) {
        table.row(&[(*l).into(), (*v).into(), tag.to_string().into()]);
    }
    let mut plot = Plot::new(format!("{tag} over λ"), "λ", tag);
    plot.series.push(Series::new(
        tag,
        rc.lambdas
            .iter()
            .copied()
            .zip(rc.values.iter().copied())
            .collect(),
    ));
    let in_range = |x: f64| x.is_finite() && x <= lambda_max;
    let markers: Vec<(&str, f64)> = if functional == Functional::FdrCurve {
        vec![("ξ1*", xi1), ("ξ2*", xi2)]
    } else {
        vec![("λ_G", optimal.lambda_g), ("λ*_G", optimal.lambda_g_star)]
    };
    for (name, x) in markers {
        if in_range(x) {
            plot.markers.push((name.to_string(), x));
        }
    }
    let json = CurveOutput {
        schema: io::SCHEMA_VERSION,
        version: VERSION,
        functional,
        tag,
        atoms: prior.n(),
        degenerate,
        b0,
        c0,
        optimal,
        population_levels: PopulationLevels {
            xi1_star: xi1,
            xi2_star: xi2,
        },
        lambdas: rc.lambdas.clone(),
        values: rc.values.clone(),
    };
    out.write(stem, &table, &json, Some(&plot))?;
    let (arg, min) = rc.argmin();
    println!(
        "{tag}: grid minimum {min} at lambda = {arg}; lambda_G = {}, lambda*_G = {}",
        optimal.lambda_g, optimal.lambda_g_star
    );
    Ok(())
}

fn ratio_cells(r: Option<fdrthresh::sim::Ratio>) -> [Cell; 2] {
    [r.map(|r| r.value).into(), r.map(|r| r.std_error).into()]
}

fn experiment(cfg: &RunConfig, sec: &ExperimentSection, out: &Output) -> Result<()> {
    let (reps, seed) = (cfg.replicates, cfg.seed);
    let name = sec.kind.name();
    match sec.kind {
        ExperimentKind::Regret => {
            let mut table = Table::new(
                name,
                &[
                    "n",
                    "adaptive",
                    "adaptive_se",
                    "optimal_total",
                    "lambda_g",
                    "regret",
                    "regret_se",
                    "ratio",
                    "ratio_se",
                    "ratio_status",
                    "oracle",
                    "oracle_se",
                    "strong_ratio",
                    "strong_ratio_se",
                    "eta_star",
                    "envelope_ratio",
                ],
            );
            let mut reports = Vec::new();
            let mut plot = Plot::new("FDR risk against the best fixed level", "n", "ratio");
            plot.log_x = true;
            let (mut ratio, mut strong) = (Vec::new(), Vec::new());
            for &n in &sec.ns {
                let theta = ThetaGenerator::new(n, sec.theta).generate()?;
                out.progress(format_args!("[{name}] n = {n}: {reps} replicates"));
                let r = regret_experiment(&theta, cfg.family, &cfg.fdr, reps, seed)?;
                let status = if r.ratio.is_some() {
                    "ok"
                } else {
                    "not_applicable"
                };
                if r.ratio.is_none() {
                    println!("n = {n}: the optimal fixed-level risk is zero, so the ratio is not applicable");
                }
                let [rv, rs] = ratio_cells(r.ratio);
                let [sv, ss] = ratio_cells(r.strong_ratio);
                table.row(&[
                    n.into(),
                    r.adaptive.mean.into(),
                    r.adaptive.std_error.into(),
                    r.optimal_total.into(),
                    r.lambda_g.into(),
                    r.regret.into(),
                    r.regret_se.into(),
                    rv,
                    rs,
                    status.to_string().into(),
                    r.oracle.mean.into(),
                    r.oracle.std_error.into(),
                    sv,
                    ss,
                    r.eta_star.into(),
                    r.envelope_ratio.into(),
                ]);
                if let Some(x) = r.ratio {
                    ratio.push((n as f64, x.value));
                }
                if let Some(x) = r.strong_ratio {
                    strong.push((n as f64, x.value));
                }
                reports.push(r);
            }
            let span = sec.ns.iter().map(|n| *n as f64);
            let ends = (
                span.clone().fold(f64::INFINITY, f64::min),
                span.fold(0.0, f64::max),
            );
            plot.series.push(Series::new("vs n·η_G", ratio));
            plot.series.push(Series::new("vs oracle", strong));
            plot.series
                .push(Series::new("1", vec![(ends.0, 1.0), (ends.1, 1.0)]).dashed());
            out.write(name, &table, &reports, Some(&plot))
        }
        ExperimentKind::CommonMean => {
            let mut table = Table::new(
                name,
                &[
                    "n",
                    "mu_sqrt_n",
                    "mu",
                    "fdr_soft",
                    "fdr_soft_se",
                    "fdr_firm",
                    "fdr_firm_se",
                    "sample_mean",
                    "sample_mean_se",
                    "optimal_total",
                ],
            );
            let mut reports = Vec::new();
            let mut plot = Plot::new("Common mean: total risk", "μ√n", "risk");
            for &n in &sec.ns {
                let (mut soft, mut firm, mut mean) = (Vec::new(), Vec::new(), Vec::new());
                for &m in &sec.mus {
                    let mu = m / (n as f64).sqrt();
                    out.progress(format_args!(
                        "[{name}] n = {n}, μ√n = {m}: {reps} replicates"
                    ));
                    let r = common_mean_experiment(n, mu, &cfg.fdr, reps, seed)?;
                    table.row(&[
                        n.into(),
                        m.into(),
                        mu.into(),
                        r.fdr_soft.mean.into(),
                        r.fdr_soft.std_error.into(),
                        r.fdr_firm.mean.into(),
                        r.fdr_firm.std_error.into(),
                        r.sample_mean.mean.into(),
                        r.sample_mean.std_error.into(),
                        r.optimal_total.into(),
                    ]);
                    soft.push((m, r.fdr_soft.mean));
                    firm.push((m, r.fdr_firm.mean));
                    mean.push((m, r.sample_mean.mean));
                    reports.push(r);
                }
                plot.series.push(Series::new(format!("soft, n={n}"), soft));
                plot.series.push(Series::new(format!("firm, n={n}"), firm));
                plot.series
                    .push(Series::new(format!("mean, n={n}"), mean).dashed());
            }
            out.write(name, &table, &reports, Some(&plot))
        }
        ExperimentKind::Minimax => {
            let mut table = Table::new(
                name,
                &[
                    "p",
                    "c",
                    "n",
                    "weak",
                    "ball_level",
                    "nonzero",
                    "sum_of_squares",
                    "formula",
                    "risk",
                    "risk_se",
                    "ratio",
                    "ratio_se",
                ],
            );
            let mut reports = Vec::new();
            let mut plot = Plot::new(
                format!("ℓ_{} ball: risk at the least favorable point", sec.p),
                "C",
                "risk",
            );
            plot.log_x = true;
            for &n in &sec.ns {
                let (mut risk, mut formula) = (Vec::new(), Vec::new());
                for &c in &sec.radii {
                    out.progress(format_args!("[{name}] n = {n}, C = {c}: {reps} replicates"));
                    let r = minimax_ball_experiment(
                        sec.p, c, n, sec.weak, cfg.family, &cfg.fdr, reps, seed,
                    )?;
                    let [rv, rs] = ratio_cells(r.ratio);
                    table.row(&[
                        sec.p.into(),
                        c.into(),
                        n.into(),
                        sec.weak.into(),
                        r.ball_level.into(),
                        r.nonzero.into(),
                        r.sum_of_squares.into(),
                        r.formula.into(),
                        r.risk.mean.into(),
                        r.risk.std_error.into(),
                        rv,
                        rs,
                    ]);
                    risk.push((c, r.risk.mean));
                    formula.push((c, r.formula));
                    reports.push(r);
                }
                plot.series.push(Series::new(format!("FDR, n={n}"), risk));
                plot.series
                    .push(Series::new(format!("formula, n={n}"), formula).dashed());
            }
            out.write(name, &table, &reports, Some(&plot))
        }
        ExperimentKind::Concentration => {
            let mut table = Table::new(
                name,
                &[
                    "n",
                    "lambda",
                    "mean",
                    "variance",
                    "variance_se",
                    "bound",
                    "pass",
                ],
            );
            let mut reports = Vec::new();
            let mut plot = Plot::new("Variance of the normalized loss", "λ", "variance");
            for &n in &sec.ns {
                let theta = ThetaGenerator::new(n, sec.theta).generate()?;
                let (mut var, mut bound) = (Vec::new(), Vec::new());
                for &lambda in &sec.lambdas {
                    out.progress(format_args!(
                        "[{name}] n = {n}, λ = {lambda}: {reps} replicates"
                    ));
                    let r = concentration_check(&theta, cfg.family, lambda, reps, seed)?;
                    table.row(&[
                        n.into(),
                        lambda.into(),
                        r.mean.into(),
                        r.variance.into(),
                        r.variance_se.into(),
                        r.bound.into(),
                        r.pass.into(),
                    ]);
                    var.push((lambda, r.variance));
                    bound.push((lambda, r.bound));
                    reports.push(r);
                }
                plot.series
                    .push(Series::new(format!("variance, n={n}"), var));
                plot.series
                    .push(Series::new(format!("bound, n={n}"), bound).dashed());
            }
            out.write(name, &table, &reports, Some(&plot))
        }
    }
}
