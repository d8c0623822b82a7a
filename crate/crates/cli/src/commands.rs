use std::fs;
use std::io::Write;
use std::path::Path;

use bpsurv::bayes::ProposalKind;
use bpsurv::predict::{cox_snell_residuals, residual_table, survivor_band};
use bpsurv::simulate::write_replications_csv;
use bpsurv::{
    fit_ml, fit_parametric, sample_posterior, survivor, BpPrior, McmcConfig, MlOptions, NormalPrior, PriorSpec,
    Scenario, SurvivalDataset,
};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::args::{
    ApproachArg, DataArgs, FitArgs, FitSource, ModelArgs, ModelChoice, ProposalArg, ReportFormat, ResidualsArgs,
    SimulateArgs, SurvcurveArgs, TableFormat,
};
use crate::artifact::{load_data, Artifact, DataSource, StoredFit};
use crate::report::{self, BayesReport, MlReport, ParametricReport};
use crate::CliError;

pub const PRIOR_WARNING: &str = "Priors are ignored due to mle approach.";

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(bpsurv::Error::from)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(bpsurv::Error::from)?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(bpsurv::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn priors_given(m: &ModelArgs) -> bool {
    m.prior_preset.is_some() || m.prior_beta.is_some() || m.prior_bp.is_some()
}

fn resolve_priors(m: &ModelArgs) -> Result<PriorSpec, CliError> {
    let mut spec: PriorSpec = match &m.prior_preset {
        Some(name) => name.parse()?,
        None => PriorSpec::default(),
    };
    if let Some(b) = &m.prior_beta {
        spec.beta = b.parse::<NormalPrior>()?;
    }
    if let Some(g) = &m.prior_bp {
        spec.bp = g.parse::<BpPrior>()?;
    }
    spec.validate()?;
    Ok(spec)
}

fn mcmc_config(m: &ModelArgs) -> Result<McmcConfig, CliError> {
    let config = McmcConfig {
        chains: m.chains,
        iter: m.iter,
        warmup: m.warmup.unwrap_or(m.iter / 2),
        seed: m.seed,
        steps_per_iter: m.steps_per_iter,
        proposal: match m.proposal {
            ProposalArg::Diagonal => ProposalKind::Diagonal,
            ProposalArg::Dense => ProposalKind::Dense,
        },
        standardize: !m.no_scale,
        ..McmcConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn ml_options(m: &ModelArgs) -> MlOptions {
    MlOptions {
        algorithm: m.algorithm.into(),
        restarts: m.restarts,
        seed: m.seed,
        standardize: !m.no_scale,
        ..MlOptions::default()
    }
}

/// Fits the model described by the flags to `data`.
pub fn fit_model(m: &ModelArgs, data: &SurvivalDataset, quiet: bool) -> Result<StoredFit, CliError> {
    let degree = m.degree.map(|d| d as usize);
    match m.model.choice() {
        ModelChoice::Parametric(family) => {
            if m.approach == Some(ApproachArg::Bayes) {
                return Err(CliError::Usage(format!("{family} models are fitted by maximum likelihood only")));
            }
            if priors_given(m) && !quiet {
                eprintln!("{PRIOR_WARNING}");
            }
            Ok(StoredFit::Parametric(fit_parametric(family, data, &ml_options(m))?))
        }
        ModelChoice::Bp(kind) => match m.approach.unwrap_or(ApproachArg::Bayes) {
            ApproachArg::Mle => {
                if priors_given(m) && !quiet {
                    eprintln!("{PRIOR_WARNING}");
                }
                Ok(StoredFit::Ml(fit_ml(kind, data, degree, &ml_options(m))?))
            }
            ApproachArg::Bayes => {
                let priors = resolve_priors(m)?;
                let config = mcmc_config(m)?;
                Ok(StoredFit::Bayes(sample_posterior(kind, data, &priors, &config, degree)?))
            }
        },
    }
}

fn write_draws(path: &Path, fit: &bpsurv::BayesFit) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(bpsurv::Error::from)?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let names = fit.param_names();
    let mut header = vec!["chain".to_string(), "iteration".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(bpsurv::Error::from)?;
    let columns: Vec<Vec<Vec<f64>>> = (0..names.len()).map(|j| fit.natural_draws(j)).collect();
    for c in 0..fit.chains.len() {
        for s in 0..fit.kept() {
            let mut rec = vec![(c + 1).to_string(), (s + 1).to_string()];
            rec.extend(columns.iter().map(|col| col[c][s].to_string()));
            w.write_record(&rec).map_err(bpsurv::Error::from)?;
        }
    }
    w.flush().map_err(bpsurv::Error::from)?;
    Ok(())
}

pub fn fit(args: &FitArgs, quiet: bool) -> Result<(), CliError> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Usage(format!("--level {} must lie in (0, 1)", args.level)));
    }
    let (data, source) = load_data(&args.data)?;
    let fit = fit_model(&args.model, &data, quiet)?;
    let text = match &fit {
        StoredFit::Ml(f) => {
            let r = MlReport::new(f, args.level)?;
            match args.format {
                ReportFormat::Text => r.text(),
                ReportFormat::Json => json(&r)?,
                ReportFormat::Csv => report::coefficients_csv(&r.coefficients)?,
            }
        }
        StoredFit::Parametric(f) => {
            let r = ParametricReport::new(f, args.level)?;
            match args.format {
                ReportFormat::Text => r.text(),
                ReportFormat::Json => json(&r)?,
                ReportFormat::Csv => report::coefficients_csv(&r.coefficients)?,
            }
        }
        StoredFit::Bayes(f) => {
            if let Some(path) = &args.draws {
                write_draws(path, f)?;
            }
            let r = BayesReport::new(f, args.level)?;
            match args.format {
                ReportFormat::Text => r.text(),
                ReportFormat::Json => json(&r)?,
                ReportFormat::Csv => report::params_csv(&r.summary.params)?,
            }
        }
    };
    if args.draws.is_some() && !matches!(fit, StoredFit::Bayes(_)) && !quiet {
        eprintln!("--draws applies to Bayesian fits only; ignored");
    }
    if let Some(path) = &args.save {
        Artifact::new(source, fit).save(path)?;
    }
    emit(None, &text)
}

fn obtain_fit(src: &FitSource, quiet: bool) -> Result<(StoredFit, DataSource, Option<SurvivalDataset>), CliError> {
    match &src.load {
        Some(path) => {
            let art = Artifact::load(path)?;
            Ok((art.fit, art.source, None))
        }
        None => {
            let (data, source) = load_data(&src.data)?;
            let fit = fit_model(&src.model, &data, quiet)?;
            Ok((fit, source, Some(data)))
        }
    }
}

/// Data flags for evaluating a loaded fit, with unset columns taken from the fit.
fn with_fit_columns(args: &DataArgs, source: &DataSource) -> DataArgs {
    DataArgs {
        time_col: args.time_col.clone().or_else(|| Some(source.time_col.clone())),
        status_col: args.status_col.clone().or_else(|| Some(source.status_col.clone())),
        covariates: args.covariates.clone().or_else(|| Some(source.covariates.clone())),
        ..args.clone()
    }
}

fn parse_times(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::Usage(format!("cannot parse time `{s}`"))))
        .collect()
}

fn grid(max_time: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(CliError::Usage("--grid needs at least 2 points".into()));
    }
    Ok((0..points).map(|i| max_time * i as f64 / (points - 1) as f64).collect())
}

#[derive(Serialize)]
struct CurveRow {
    time: f64,
    profile_id: usize,
    survival: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    hpd_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hpd_hi: Option<f64>,
}

fn table<T: Serialize>(rows: &[T], format: TableFormat) -> Result<String, CliError> {
    match format {
        TableFormat::Json => json(&rows),
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(bpsurv::Error::from)?;
            }
            Ok(report::finish(w)?)
        }
    }
}

pub fn survcurve(args: &SurvcurveArgs, quiet: bool) -> Result<(), CliError> {
    if args.source.load.is_some() && args.source.data.is_given() && !quiet {
        eprintln!("data flags are ignored when --load is given");
    }
    let (fit, source, _) = obtain_fit(&args.source, quiet)?;
    let file = fs::File::open(&args.newdata).map_err(bpsurv::Error::from)?;
    let newdata: DMatrix<f64> = bpsurv::data::encode_newdata(file, &source.encoding)?;
    let times = match &args.times {
        Some(list) => parse_times(list)?,
        None => grid(source.max_time, args.grid)?,
    };
    let mut rows = Vec::with_capacity(newdata.nrows() * times.len());
    match &fit {
        StoredFit::Bayes(f) => {
            let band = survivor_band(f, &newdata, &times, args.band)?;
            for r in 0..newdata.nrows() {
                for (c, &t) in times.iter().enumerate() {
                    rows.push(CurveRow {
                        time: t,
                        profile_id: r + 1,
                        survival: band.mean[(r, c)],
                        hpd_lo: Some(band.lower[(r, c)]),
                        hpd_hi: Some(band.upper[(r, c)]),
                    });
                }
            }
        }
        other => {
            let s = survivor(other.model(), &newdata, &times)?;
            for r in 0..newdata.nrows() {
                for (c, &t) in times.iter().enumerate() {
                    rows.push(CurveRow { time: t, profile_id: r + 1, survival: s[(r, c)], hpd_lo: None, hpd_hi: None });
                }
            }
        }
    }
    emit(args.out.as_deref(), &table(&rows, args.format)?)
}

pub fn residuals(args: &ResidualsArgs, quiet: bool) -> Result<(), CliError> {
    let (fit, source, data) = obtain_fit(&args.source, quiet)?;
    // With --load, data flags select a dataset to evaluate instead of the training data.
    let data = match data {
        Some(d) => d,
        None if args.source.data.is_given() => load_data(&with_fit_columns(&args.source.data, &source))?.0,
        None => source.reload()?,
    };
    let cs = cox_snell_residuals(fit.model(), &data)?;
    let rows = residual_table(&cs)?;
    emit(args.out.as_deref(), &table(&rows, args.format)?)
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    generator: &'a bpsurv::GeneratorSettings,
    replications: usize,
    seed: u64,
    reports: &'a [bpsurv::McReport],
}

fn simulation_text(reports: &[bpsurv::McReport]) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "{} ({} {}): {} of {} replications valid, {} failed, {} not converged",
            r.label, r.model, format!("{:?}", r.approach).to_lowercase(), r.valid, r.replications, r.failed, r.nonconverged
        );
        let _ = writeln!(
            out,
            "  {:8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8}",
            "", "truth", "est", "se", "sde", "rb%", "cover"
        );
        for c in &r.coefficients {
            let _ = writeln!(
                out,
                "  {:8} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>8.4}",
                c.name, c.truth, c.est, c.se, c.sde, c.rb, c.coverage
            );
        }
        let _ = writeln!(
            out,
            "  censoring rate: min {:.4} median {:.4} mean {:.4} max {:.4}",
            r.censoring.min, r.censoring.median, r.censoring.mean, r.censoring.max
        );
        if let Some(f) = r.rhat_below_1_1 {
            let _ = writeln!(out, "  share with max R-hat < 1.1: {f:.4}");
        }
    }
    out
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut scenario = Scenario::from_path(&args.scenario)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.scenario.display())))?;
    if let Some(r) = args.replications {
        scenario.replications = r;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    let (settings, reports) = scenario.run().map_err(|e| match e {
        e @ (bpsurv::Error::Config(_) | bpsurv::Error::OutOfRange(_) | bpsurv::Error::InvalidParameter(_)) => {
            CliError::Usage(e.to_string())
        }
        e => CliError::Core(e),
    })?;
    fs::create_dir_all(&args.out).map_err(bpsurv::Error::from)?;
    let file = fs::File::create(args.out.join("replications.csv")).map_err(bpsurv::Error::from)?;
    write_replications_csv(&reports, std::io::BufWriter::new(file))?;
    let summary =
        SimulationSummary { generator: &settings, replications: scenario.replications, seed: scenario.seed, reports: &reports };
    fs::write(args.out.join("report.json"), json(&summary)?).map_err(bpsurv::Error::from)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "min", "q1", "median", "mean", "q3", "max"]).map_err(bpsurv::Error::from)?;
    for r in &reports {
        let c = r.censoring;
        let mut rec = vec![r.label.clone()];
        rec.extend([c.min, c.q1, c.median, c.mean, c.q3, c.max].iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(bpsurv::Error::from)?;
    }
    fs::write(args.out.join("censoring.csv"), report::finish(w)?).map_err(bpsurv::Error::from)?;
    emit(None, &simulation_text(&reports))
}
