use std::path::Path;

use switchcal::datagen::GeneratorSpec;
use switchcal::eval::{
    grid_run, run_replay, run_rolling, ComparisonTable, MetricsRecord, RunConfig, RunKey, RunReport,
};
use switchcal::forecasters::ExternalForecastTrace;
use switchcal::io;
use switchcal::parallel::Execution;

use crate::config::{base_dir, exit_code, parse_json, read_json, CliError, ConfigFile};

pub fn execution(jobs: Option<usize>) -> Result<Execution, CliError> {
    match jobs {
        Some(0) => Err(CliError::config("--jobs must be at least 1")),
        Some(1) => Ok(Execution::Sequential),
        _ => Ok(Execution::default()),
    }
}

/// Runs `f` inside a pool of `jobs` threads when one was requested.
#[cfg(feature = "parallel")]
pub fn with_jobs<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match jobs {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_jobs<T>(_jobs: Option<usize>, f: impl FnOnce() -> T) -> Result<T, CliError> {
    Ok(f())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn generate(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut spec: GeneratorSpec = read_json(spec_path)?;
    if let Some(seed) = seed {
        spec = spec.with_seed(seed);
    }
    let generated = spec.generate()?;
    create_dir(out)?;
    let series = &generated.series;
    io::write_series_csv(&out.join("series.csv"), series)?;
    match &generated.regimes {
        Some(regimes) => {
            io::write_regimes_csv(&out.join("regimes.csv"), series.start_index(), regimes)?;
            let mut seen: Vec<usize> = regimes.clone();
            seen.sort_unstable();
            seen.dedup();
            let labels: Vec<String> = seen.iter().map(usize::to_string).collect();
            println!(
                "{}: T={}, regimes observed: {} ({})",
                spec.name(),
                series.len(),
                seen.len(),
                labels.join(", ")
            );
        }
        None => println!("{}: T={}", spec.name(), series.len()),
    }
    Ok(())
}

fn summary_line(report: &RunReport) -> String {
    let m = &report.metrics;
    let mut parts = vec![];
    if let Some(c) = m.coverage {
        parts.push(format!("coverage={c:.3}"));
        parts.push(match m.median_width {
            Some(w) => format!("width={w:.4}"),
            None => "width=inf".to_string(),
        });
    }
    parts.push(format!("rmse={:.4}", m.rmse));
    if m.n_infinite > 0 {
        parts.push(format!("infinite={}", m.n_infinite));
    }
    parts.join(" ")
}

fn write_run_outputs(dir: &Path, report: &RunReport) -> Result<(), CliError> {
    create_dir(dir)?;
    io::write_atomic(&dir.join("bands.csv"), report.bands_csv().as_bytes())?;
    report.trace()?.write_csv(&dir.join("trace.csv"))?;
    Ok(())
}

fn run_dir_name(key: &RunKey) -> String {
    format!(
        "{}__{}__{}",
        key.dataset,
        key.forecaster,
        key.method.as_str()
    )
}

pub fn run(
    config_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    exec: Execution,
) -> Result<(), CliError> {
    let file = ConfigFile::load(config_path)?;
    let out = match (out, &file.out_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => base_dir(config_path).join(o),
        (None, None) => {
            return Err(CliError::config(
                "no output directory: pass --out or set `out_dir`",
            ))
        }
    };
    let base = base_dir(config_path);
    let single = file.run.is_some();
    let mut runs = file.into_runs();
    for r in &mut runs {
        if seed.is_some() {
            r.seed = seed;
        }
        r.validate()
            .map_err(|e| CliError::config(format!("run `{}`: {e}", r.dataset.name)))?;
    }

    if single {
        let cfg = &runs[0];
        create_dir(&out)?;
        return match run_rolling(cfg, &base) {
            Ok(report) => {
                write_run_outputs(&out, &report)?;
                io::write_json(
                    &out.join("metrics.json"),
                    &MetricsRecord::from_report(&report),
                )?;
                println!("{}", summary_line(&report));
                Ok(())
            }
            Err(e) => {
                let failed = MetricsRecord::failed(
                    &cfg.key(cfg.forecaster.name()),
                    cfg.alpha,
                    e.to_string(),
                );
                io::write_json(&out.join("metrics.json"), &failed)?;
                Err(e.into())
            }
        };
    }

    let cells = grid_run(&runs, &base, exec);
    create_dir(&out)?;
    let mut records = Vec::with_capacity(cells.len());
    let mut first_failure = None;
    for (cell, cfg) in cells.iter().zip(sorted_configs(&runs)) {
        let label = format!("{} {}", cell.key.dataset, cell.key.column());
        match &cell.outcome {
            Ok(report) => {
                write_run_outputs(&out.join("runs").join(run_dir_name(&cell.key)), report)?;
                records.push(MetricsRecord::from_report(report));
                println!("{label}: {}", summary_line(report));
            }
            Err(failure) => {
                records.push(MetricsRecord::failed(
                    &cell.key,
                    cfg.alpha,
                    failure.message.clone(),
                ));
                eprintln!("{label}: failed: {failure}");
                first_failure.get_or_insert(CliError {
                    code: exit_code(failure.kind),
                    message: format!("{label}: {failure}"),
                });
            }
        }
    }
    io::write_json(&out.join("metrics.json"), &records)?;
    match first_failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Configs in the order `grid_run` reports its cells.
fn sorted_configs(runs: &[RunConfig]) -> Vec<&RunConfig> {
    let mut v: Vec<&RunConfig> = runs.iter().collect();
    v.sort_by_key(|r| r.key(r.forecaster.name()));
    v
}

pub fn wrap(
    trace_path: &Path,
    series_path: &Path,
    config_path: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let mut runs = ConfigFile::load(config_path)?.into_runs();
    if runs.len() != 1 {
        return Err(CliError::config("wrap takes a config with a single `run`"));
    }
    let cfg = runs.remove(0);
    let series = io::read_series_csv(series_path)?;
    let trace = ExternalForecastTrace::read_csv(trace_path)?;
    let report = run_replay(&cfg, &series, &trace)?;
    create_dir(out)?;
    write_run_outputs(out, &report)?;
    io::write_json(
        &out.join("metrics.json"),
        &MetricsRecord::from_report(&report),
    )?;
    println!("{}", summary_line(&report));
    Ok(())
}

/// A metrics file holds one record or a list of them.
fn read_records(path: &Path) -> Result<Vec<MetricsRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        parse_json(&text).map_err(|m| CliError::config(format!("{}: {m}", path.display())))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        one => vec![one],
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v)
                .map_err(|e| CliError::config(format!("{}: record {i}: {e}", path.display())))
        })
        .collect()
}

pub fn report(inputs: &[std::path::PathBuf], out: &Path) -> Result<(), CliError> {
    let mut records = vec![];
    for path in inputs {
        records.extend(read_records(path)?);
    }
    let table = ComparisonTable::from_records(&records)?;
    create_dir(out)?;
    io::write_atomic(&out.join("table.csv"), table.to_csv().as_bytes())?;
    let text = table.to_text();
    io::write_atomic(&out.join("table.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
