use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{load_config, RunConfig};
use super::report::{eval_entries, eval_table, fmt8, write_block};
use super::suite::{parse_feature_list, parse_suite, SuiteRow, DEFAULT_SUITE};
use super::{Cli, CliError, Command, FitArgs};
use crate::dataset::{kfold_split, parse_csv, select_features, sensor_cost, write_csv, Dataset, DatasetError, FeatureSet, SensorChannel};
use crate::metrics::EvaluationReport;
use crate::models::{cross_validate, decode_model, encode_model, fit, CvResult, Family, ModelError, RegressorConfig, RegressorSpec};
use crate::simulator::{parse_rain_record, simulate, write_truth, SimError};
use crate::soilphys::{estimate_field_capacity, FieldCapacityEstimate, RainEvent, SoilError};

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::UnknownColumn(_) | DatasetError::EmptyFeatureSet | DatasetError::DuplicateFeature(_) | DatasetError::BadK(..) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig(_) => CliError::Config(e.to_string()),
            ModelError::Dataset(d) => d.into(),
            ModelError::Container(_) => CliError::Io(e.to_string()),
            _ => CliError::Training(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<SoilError> for CliError {
    fn from(e: SoilError) -> Self {
        match e {
            SoilError::NoQuiescentWindow => CliError::Estimation(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let text = read_text(path)?;
    parse_csv(&text, &path.display().to_string()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn out(stdout: &mut dyn Write, quiet: bool, text: &str) -> Result<(), CliError> {
    if !quiet {
        stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    }
    Ok(())
}

fn regressor_spec(cfg: &RunConfig, family: Family, allow_partial: bool) -> RegressorSpec {
    let config = match family {
        Family::Svr => RegressorConfig::Svr(cfg.svr),
        Family::RandomForest => RegressorConfig::RandomForest(cfg.rf),
        Family::GradientBoosting => RegressorConfig::GradientBoosting(cfg.gbr),
        Family::Mlp => RegressorConfig::Mlp(cfg.mlp),
    };
    RegressorSpec { config, seed: cfg.seed, allow_partial }
}

fn header(family: Family, fs: &FeatureSet, cfg: &RunConfig, extra: &[&str]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "algorithm: {family}");
    let _ = writeln!(s, "features: {}", fs.to_list());
    let _ = writeln!(s, "sensor cost (EUR): {}", sensor_cost(fs));
    let _ = writeln!(s, "config:");
    let section = format!("{}.", family.as_str());
    let mut prefixes = vec![section.as_str(), "run."];
    prefixes.extend_from_slice(extra);
    for (k, v) in cfg.echo(&prefixes) {
        let _ = writeln!(s, "  {k} = {v}");
    }
    s
}

/// Rain record from `--rain`, else the data file's `.truth` sidecar.
fn load_rains(data: &Path, rain: Option<&PathBuf>) -> Result<(Vec<RainEvent>, String), CliError> {
    let path = match rain {
        Some(p) => p.clone(),
        None => {
            let p = data.with_extension("truth");
            if !p.exists() {
                return Ok((Vec::new(), "none".into()));
            }
            p
        }
    };
    let rains = parse_rain_record(&read_text(&path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((rains, path.display().to_string()))
}

fn require_out<'a>(cli: &'a Cli, verb: &str) -> Result<&'a Path, CliError> {
    cli.out.as_deref().ok_or_else(|| CliError::Config(format!("{verb} needs --out PATH")))
}

pub(super) fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(read_text).transpose()?;
    let cfg = load_config(file.as_deref(), &cli.set, cli.seed)?;
    match &cli.command {
        Command::Simulate => cmd_simulate(cli, &cfg, stdout),
        Command::Train(a) => cmd_train(cli, &cfg, a, stdout),
        Command::Predict { model, data } => cmd_predict(cli, model, data, stdout),
        Command::Crossval { fit, folds, predictions } => cmd_crossval(cli, &cfg, fit, *folds, predictions.as_deref(), stdout),
        Command::Fieldcap { data, model, rain } => cmd_fieldcap(cli, &cfg, data, model.as_deref(), rain.as_ref(), stdout),
        Command::Compare { data, suite, rain, plot_script, allow_partial } => {
            cmd_compare(cli, &cfg, data, suite.as_deref(), rain.as_ref(), plot_script.as_deref(), *allow_partial, stdout)
        }
    }
}

fn cmd_simulate(cli: &Cli, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let path = require_out(cli, "simulate")?;
    let truth_path = path.with_extension("truth");
    if truth_path == path {
        return Err(CliError::Config("--out must not end in .truth".into()));
    }
    let sim = cfg.sim_config()?;
    let (ds, truth) = simulate(&sim)?;
    write_file(path, write_csv(&ds).as_bytes())?;
    write_file(&truth_path, write_truth(&truth).as_bytes())?;
    let mut s = String::new();
    let _ = writeln!(s, "rows: {}", ds.len());
    let _ = writeln!(s, "rain events: {}", truth.rains.len());
    let _ = writeln!(s, "theta_fc: {}", truth.theta_fc);
    let _ = writeln!(s, "wrote {} and {}", path.display(), truth_path.display());
    out(stdout, cli.quiet, &s)
}

fn fit_inputs(a: &FitArgs) -> Result<(Family, FeatureSet, Dataset), CliError> {
    let family: Family = a.model.parse()?;
    let fs = parse_feature_list(&a.features)?;
    let ds = load_dataset(&a.data)?;
    Ok((family, fs, ds))
}

fn cmd_train(cli: &Cli, cfg: &RunConfig, a: &FitArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let path = require_out(cli, "train")?;
    let (family, fs, ds) = fit_inputs(a)?;
    let (x, y) = select_features(&ds, &fs)?;
    let spec = regressor_spec(cfg, family, a.allow_partial);
    let mut model = fit(&spec, &x, &y)?;
    model.features = Some(fs.clone());
    write_file(path, encode_model(&model).as_bytes())?;
    let train = EvaluationReport::compute(&y, &model.predict(&x)?).map_err(ModelError::from)?;
    let mut s = header(family, &fs, cfg, &[]);
    if let Some(v) = model.unconverged_violation {
        let _ = writeln!(s, "warning: SVR solver did not converge (max KKT violation {v:e})");
    }
    let _ = writeln!(s, "training rows: {}", train.n);
    let _ = writeln!(s, "training RMSE: {}", fmt8(train.rmse));
    let _ = writeln!(s, "training MAE: {}", fmt8(train.mae));
    let _ = writeln!(s, "training R: {}", train.pearson_display());
    let _ = writeln!(s, "wrote {}", path.display());
    out(stdout, cli.quiet, &s)
}

fn model_inputs(model: &crate::models::FittedModel, ds: &Dataset) -> Result<crate::dataset::Matrix, CliError> {
    let fs = match &model.features {
        Some(fs) => fs.clone(),
        None if model.n_features() == SensorChannel::ALL.len() => FeatureSet::all(),
        None => return Err(CliError::Config("model does not record its input features".into())),
    };
    Ok(ds.feature_matrix(&fs))
}

fn cmd_predict(cli: &Cli, model_path: &Path, data: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let bytes = std::fs::read(model_path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", model_path.display())))?;
    let model = decode_model(&bytes)?;
    let ds = load_dataset(data)?;
    let pred = model.predict(&model_inputs(&model, &ds)?)?;
    let mut s = String::from("timestamp,predicted\n");
    for (t, p) in ds.timestamps().iter().zip(&pred) {
        let _ = writeln!(s, "{t},{p}");
    }
    match &cli.out {
        Some(p) => write_file(p, s.as_bytes()),
        None => out(stdout, cli.quiet, &s),
    }
}

fn run_cv(cfg: &RunConfig, family: Family, fs: &FeatureSet, ds: &Dataset, k: usize, allow_partial: bool) -> Result<CvResult, CliError> {
    let (x, y) = select_features(ds, fs)?;
    let plan = kfold_split(x.rows(), k, cfg.fold_mode())?;
    Ok(cross_validate(&regressor_spec(cfg, family, allow_partial), &x, &y, &plan)?)
}

fn cmd_crossval(
    cli: &Cli,
    cfg: &RunConfig,
    a: &FitArgs,
    folds: Option<usize>,
    predictions: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (family, fs, ds) = fit_inputs(a)?;
    let k = folds.unwrap_or(cfg.cv_folds);
    let cv = run_cv(cfg, family, &fs, &ds, k, a.allow_partial)?;
    let mut s = header(family, &fs, cfg, &["cv."]);
    let _ = writeln!(s, "data: {} ({} rows)", a.data.display(), ds.len());
    if !cv.unconverged_folds.is_empty() {
        let list: Vec<String> = cv.unconverged_folds.iter().map(|f| (f + 1).to_string()).collect();
        let _ = writeln!(s, "warning: SVR did not converge in folds {}", list.join(","));
    }
    s.push('\n');
    s.push_str(&eval_table(&cv.folds, &cv.pooled));
    s.push('\n');
    let mut entries = vec![
        ("algorithm".to_string(), family.to_string()),
        ("features".to_string(), fs.to_list()),
        ("sensor_cost_eur".to_string(), sensor_cost(&fs).to_string()),
    ];
    entries.extend(eval_entries(&cv.folds, &cv.pooled));
    s.push_str(&write_block(&entries));

    if let Some(p) = predictions {
        let plan = kfold_split(ds.len(), k, cfg.fold_mode())?;
        let mut csv = String::from("timestamp,actual,predicted,fold\n");
        for (i, r) in ds.records().iter().enumerate() {
            let actual = r.vwc_true.expect("select_features checked targets");
            let _ = writeln!(csv, "{},{},{},{}", r.timestamp, actual, cv.predictions[i], plan.assignment()[i] + 1);
        }
        write_file(p, csv.as_bytes())?;
    }
    if let Some(p) = &cli.out {
        write_file(p, s.as_bytes())?;
    }
    out(stdout, cli.quiet, &s)
}

fn fc_lines(est: &FieldCapacityEstimate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "theta_fc: {}", fmt8(est.theta_fc));
    let _ = writeln!(s, "window: {} .. {}", est.window_start, est.window_end);
    let _ = writeln!(s, "samples: {}", est.n_samples);
    let _ = writeln!(s, "dispersion: {}", fmt8(est.dispersion));
    let _ = writeln!(s, "slope (1/s): {:e}", est.slope);
    s
}

fn cmd_fieldcap(
    cli: &Cli,
    cfg: &RunConfig,
    data: &Path,
    model: Option<&Path>,
    rain: Option<&PathBuf>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let ds = load_dataset(data)?;
    let (rains, rain_src) = load_rains(data, rain)?;
    let (series, source) = match model {
        Some(mp) => {
            let bytes = std::fs::read(mp).map_err(|e| CliError::Io(format!("cannot read {}: {e}", mp.display())))?;
            let m = decode_model(&bytes)?;
            let pred = m.predict(&model_inputs(&m, &ds)?)?;
            (ds.timestamps().into_iter().zip(pred).collect::<Vec<_>>(), format!("model {}", mp.display()))
        }
        None => {
            let series = ds.vwc_series().ok_or_else(|| {
                let row = ds.records().iter().position(|r| r.vwc_true.is_none()).unwrap_or(0);
                CliError::from(DatasetError::MissingTarget(row))
            })?;
            (series, "vwc_true column".to_string())
        }
    };
    let est = estimate_field_capacity(&series, &rains, &cfg.fc)?;
    let mut s = format!("source: {source}\nrain record: {rain_src} ({} events)\n", rains.len());
    s.push_str(&fc_lines(&est));
    let entries = vec![
        ("theta_fc".to_string(), est.theta_fc.to_string()),
        ("window_start".to_string(), est.window_start.to_string()),
        ("window_end".to_string(), est.window_end.to_string()),
        ("n_samples".to_string(), est.n_samples.to_string()),
        ("dispersion".to_string(), est.dispersion.to_string()),
        ("slope".to_string(), est.slope.to_string()),
    ];
    s.push_str(&write_block(&entries));
    if let Some(p) = &cli.out {
        write_file(p, s.as_bytes())?;
    }
    out(stdout, cli.quiet, &s)
}

/// Field capacity for the comparison table, or `None` for "Not Possible".
fn table_fc(series: &[(i64, f64)], rains: &[RainEvent], cfg: &RunConfig) -> Option<f64> {
    match estimate_field_capacity(series, rains, &cfg.fc) {
        Ok(e) if e.dispersion <= cfg.dispersion_max => Some(e.theta_fc),
        _ => None,
    }
}

fn family_title(f: Family) -> &'static str {
    match f {
        Family::Svr => "SVR",
        Family::RandomForest => "RF",
        Family::GradientBoosting => "GBR",
        Family::Mlp => "MLP",
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    cli: &Cli,
    cfg: &RunConfig,
    data: &Path,
    suite: Option<&Path>,
    rain: Option<&PathBuf>,
    plot_script: Option<&Path>,
    allow_partial: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let suite_text = match suite {
        Some(p) => read_text(p)?,
        None => DEFAULT_SUITE.to_string(),
    };
    let rows = parse_suite(&suite_text)?;
    if plot_script.is_some() && cli.out.is_none() {
        return Err(CliError::Config("--plot-script needs --out for the tidy CSV".into()));
    }
    let ds = load_dataset(data)?;
    let (rains, rain_src) = load_rains(data, rain)?;
    let truth = ds.vwc_series().ok_or_else(|| {
        let row = ds.records().iter().position(|r| r.vwc_true.is_none()).unwrap_or(0);
        CliError::from(DatasetError::MissingTarget(row))
    })?;
    let fc_actual = table_fc(&truth, &rains, cfg);
    let timestamps = ds.timestamps();

    let results: Vec<Result<CvResult, CliError>> = rows
        .par_iter()
        .map(|r| run_cv(cfg, r.family, &r.features, &ds, cfg.cv_folds, allow_partial))
        .collect();
    if results.iter().all(|r| r.is_err()) {
        let first = results.into_iter().find_map(|r| r.err()).expect("suite is nonempty");
        return Err(CliError::Training(format!("every suite row failed; first: {first}")));
    }

    let fc_text = |v: Option<f64>| v.map_or("Not Possible".to_string(), |x| format!("{x:.4}"));
    let mut s = String::new();
    let _ = writeln!(s, "data: {} ({} rows)", data.display(), ds.len());
    let _ = writeln!(s, "rain record: {rain_src} ({} events)", rains.len());
    let _ = writeln!(s, "folds: {}", cfg.cv_folds);
    let _ = writeln!(s, "config:");
    for (k, v) in cfg.echo(&["run.", "svr.", "rf.", "gbr.", "mlp.", "cv.", "fc.", "compare."]) {
        let _ = writeln!(s, "  {k} = {v}");
    }
    s.push('\n');
    let _ = write!(s, "{:<5}", "Alg");
    for c in SensorChannel::ALL {
        let _ = write!(s, " {:>11}", c.short_label());
    }
    let _ = writeln!(
        s,
        " {:>9} {:>11} {:>11} {:>11} {:>12} {:>12}",
        "Cost(EUR)", "RMSE", "MAE", "R", "FC actual", "FC estimated"
    );
    let mut entries = vec![("rows".to_string(), rows.len().to_string())];
    let mut tidy = String::from("config,timestamp,actual,predicted\n");
    for (i, (row, res)) in rows.iter().zip(&results).enumerate() {
        let _ = write!(s, "{:<5}", family_title(row.family));
        for c in SensorChannel::ALL {
            let _ = write!(s, " {:>11}", if row.features.contains(c) { "x" } else { "-" });
        }
        let cost = sensor_cost(&row.features);
        let _ = write!(s, " {:>9}", cost);
        let p = format!("row.{}", i + 1);
        entries.push((format!("{p}.algorithm"), row.family.to_string()));
        entries.push((format!("{p}.features"), row.features.to_list()));
        entries.push((format!("{p}.sensor_cost_eur"), cost.to_string()));
        match res {
            Ok(cv) => {
                let series: Vec<(i64, f64)> = timestamps.iter().copied().zip(cv.predictions.iter().copied()).collect();
                let fc_est = table_fc(&series, &rains, cfg);
                let r = &cv.pooled;
                let _ = writeln!(
                    s,
                    " {:>11} {:>11} {:>11} {:>12} {:>12}",
                    fmt8(r.rmse),
                    fmt8(r.mae),
                    r.pearson_display(),
                    fc_text(fc_actual),
                    fc_text(fc_est)
                );
                entries.push((format!("{p}.status"), "ok".into()));
                entries.push((format!("{p}.rmse"), r.rmse.to_string()));
                entries.push((format!("{p}.mae"), r.mae.to_string()));
                entries.push((format!("{p}.pearson_r"), r.pearson_r.map_or("n/a".into(), |v| v.to_string())));
                entries.push((format!("{p}.fc_actual"), fc_actual.map_or("not possible".into(), |v| v.to_string())));
                entries.push((format!("{p}.fc_estimated"), fc_est.map_or("not possible".into(), |v| v.to_string())));
                let label = row.label();
                for ((t, a), pr) in truth.iter().zip(&cv.predictions) {
                    let _ = writeln!(tidy, "{label},{t},{a},{pr}");
                }
            }
            Err(e) => {
                let _ = writeln!(s, " failed: {e}");
                entries.push((format!("{p}.status"), format!("failed: {e}")));
            }
        }
    }
    s.push('\n');
    s.push_str(&write_block(&entries));
    if let Some(p) = &cli.out {
        write_file(p, tidy.as_bytes())?;
        if let Some(script) = plot_script {
            write_file(script, gnuplot_script(p, &rows).as_bytes())?;
        }
    }
    out(stdout, cli.quiet, &s)
}

fn gnuplot_script(csv: &Path, rows: &[SuiteRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script: actual vs predicted VWC per suite row");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set xdata time");
    let _ = writeln!(s, "set timefmt '%s'");
    let _ = writeln!(s, "set format x '%m-%d'");
    let _ = writeln!(s, "set ylabel 'VWC'");
    let _ = writeln!(s, "set key outside");
    let _ = writeln!(s, "set terminal pngcairo size 1400,{}", 300 * rows.len().max(1));
    let _ = writeln!(s, "set output '{}'", csv.with_extension("png").display());
    let _ = writeln!(s, "set multiplot layout {},1", rows.len());
    for r in rows {
        let label = r.label();
        let _ = writeln!(s, "set title '{label}'");
        let _ = writeln!(
            s,
            "plot '{0}' using ($1 eq '{1}' ? $2 : 1/0):3 skip 1 with lines title 'actual', '{0}' using ($1 eq '{1}' ? $2 : 1/0):4 skip 1 with lines title 'predicted'",
            csv.display(),
            label
        );
    }
    let _ = writeln!(s, "unset multiplot");
    s
}
