use std::io::Write;
use std::path::{Path, PathBuf};

use cavity_scatter::billiard::{
    eigenfunction, enumerate_modes, weyl_mean_counting, xi_image_oracle, GreenEvaluator,
    DEFAULT_MAX_MODES,
};
use cavity_scatter::coupling::{identify_parameters, low_energy_mismatch, point_amplitudes, tube_amplitudes};
use cavity_scatter::resonance::{Resonance, ResonatorSystem};
use cavity_scatter::stats::{
    freq_from_k, k_from_freq, ks_two_sample, nearest_spacings, poisson_compare, run_ensemble,
    unfold_by_mean_spacing, CavityStatus, EnsembleResult, LevelSequence, PoissonComparison,
    Provenance, SpacingHistogram, POISSON_SMALL_S_FRACTION, SMALL_S,
};
use cavity_scatter::Complex;
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, Cell, FileRecord, Format, OutputSet, Table};
use crate::{threads_from_env, Cli, Command, Unit};

pub const RESONANCE_COLUMNS: [&str; 13] = [
    "cavity_id",
    "c1_m",
    "c2_m",
    "x0_x_m",
    "x0_y_m",
    "a_m",
    "re_k_per_m",
    "im_k_per_m",
    "f_GHz",
    "halfwidth_per_m2",
    "residual",
    "seed_n",
    "seed_m",
];
pub const SPACING_COLUMNS: [&str; 2] = ["cavity_id", "s"];
pub const HISTOGRAM_COLUMNS: [&str; 3] = ["bin_lo", "bin_hi", "density"];
pub const LEVEL_COLUMNS: [&str; 1] = ["level_per_m2"];
pub const COMPARE_COLUMNS: [&str; 7] = [
    "reference",
    "sample_count",
    "ks_distance",
    "small_s_fraction",
    "poisson_small_s_fraction",
    "reference_count",
    "reference_small_s_fraction",
];

pub fn dispatch(cli: &Cli, config: &Config) -> CliResult<()> {
    match &cli.command {
        Command::Modes { count, e_max } => emit(cli, "modes", &modes_table(config, *count, *e_max)?),
        Command::Xi { k_min, k_max, points, imaginary, oracle } => {
            let grid = linear_grid(*k_min, *k_max, *points)?;
            emit(cli, "xi", &xi_table(config, &grid, *imaginary, *oracle)?)
        }
        Command::Reflect { k_min, k_max, points } => {
            let grid = linear_grid(*k_min, *k_max, *points)?;
            emit(cli, "reflect", &reflect_table(config, &grid)?)
        }
        Command::Amplitudes { ka_min, ka_max, points, order } => {
            let grid = log_grid(*ka_min, *ka_max, *points)?;
            emit(cli, "amplitudes", &amplitudes_table(config, &grid, *order)?)
        }
        Command::Resonances => resonances(cli, config),
        Command::Ensemble => ensemble(cli, config),
        Command::Compare { against, input } => {
            let table = compare(input, against, config)?;
            emit(cli, "compare", &table)
        }
        Command::Ingest { path, unit } => emit(cli, "levels", &levels_table(&ingest(path, *unit)?)),
    }
}

/// Writes to `<out>/<name>.<ext>` or to stdout.
fn emit(cli: &Cli, name: &str, table: &Table) -> CliResult<()> {
    let bytes = table.encode(cli.format);
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            write_atomic(&dir.join(format!("{name}.{}", cli.format.extension())), &bytes)
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn linear_grid(lo: f64, hi: f64, n: usize) -> CliResult<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) || n == 0 {
        return Err(CliError::Usage(format!("grid [{lo}, {hi}] with {n} points is not valid")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn log_grid(lo: f64, hi: f64, n: usize) -> CliResult<Vec<f64>> {
    if !(lo > 0.0) {
        return Err(CliError::Usage(format!("log grid needs a positive lower end (got {lo})")));
    }
    Ok(linear_grid(lo.ln(), hi.ln(), n)?.into_iter().map(f64::exp).collect())
}

fn modes_table(config: &Config, count: usize, e_max: Option<f64>) -> CliResult<Table> {
    let rect = config.rect()?;
    let x0 = config.x0();
    let mut table = Table::new(&["n", "m", "energy_per_m2", "k_per_m", "f_GHz", "weight", "weyl_count"]);
    let mut cutoff = e_max.unwrap_or(4.0 * std::f64::consts::PI * (count.max(1) as f64 + 10.0) / rect.area());
    let modes = loop {
        let modes = enumerate_modes(&rect, cutoff, DEFAULT_MAX_MODES)?;
        if e_max.is_some() || modes.len() >= count {
            break modes;
        }
        cutoff *= 1.5;
    };
    let take = if e_max.is_some() { modes.len() } else { count };
    for mode in modes.iter().take(take) {
        let phi = eigenfunction(&rect, mode.index, &x0)?;
        let k = mode.energy.sqrt();
        table.push(vec![
            mode.index.n().into(),
            mode.index.m().into(),
            mode.energy.into(),
            k.into(),
            freq_from_k(k).into(),
            (phi * phi).into(),
            weyl_mean_counting(&rect, mode.energy).into(),
        ]);
    }
    Ok(table)
}

fn xi_table(config: &Config, grid: &[f64], imaginary: bool, oracle: bool) -> CliResult<Table> {
    let rect = config.rect()?;
    let x0 = config.x0();
    let top = grid.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let ground = std::f64::consts::PI.powi(2) * (rect.c1().powi(-2) + rect.c2().powi(-2));
    let cutoff = config.cutoff_factor * (top * top).max(4.0 * ground);
    let evaluator = GreenEvaluator::new(rect, x0, cutoff)?;
    let log_a = config.antenna_radius_m.ln() / std::f64::consts::TAU;
    let mut columns = vec![if imaginary { "kappa_per_m" } else { "k_per_m" }, "xi", "z"];
    if oracle {
        columns.extend(["xi_oracle", "abs_diff"]);
    }
    let mut table = Table::new(&columns);
    for &k in grid {
        let ksq = if imaginary { -k * k } else { k * k };
        let xi = match evaluator.xi(Complex::new(ksq, 0.0)) {
            Ok(v) => v.re,
            Err(cavity_scatter::Error::Pole { .. }) => {
                log::warn!("k = {k} sits on an eigenvalue; row skipped");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let mut row: Vec<Cell> = vec![k.into(), xi.into(), (xi - log_a).into()];
        if oracle {
            let reference = xi_image_oracle(&rect, &x0, k)?;
            row.push(reference.into());
            row.push((xi - reference).abs().into());
        }
        table.push(row);
    }
    Ok(table)
}

fn single_system(config: &Config, k_max: f64) -> CliResult<ResonatorSystem<f64>> {
    Ok(ResonatorSystem::for_band(config.rect()?, config.x0(), config.antenna_radius_m, k_max, config.cutoff_factor)?
        .with_condition(config.condition()))
}

fn reflect_table(config: &Config, grid: &[f64]) -> CliResult<Table> {
    let top = grid.iter().fold(0.0_f64, |m, v| m.max(*v));
    let system = single_system(config, top)?;
    let mut table = Table::new(&["k_per_m", "re_r", "im_r", "abs_r", "phase_rad"]);
    for &k in grid {
        let r = match system.reflection(k) {
            Ok(r) => r,
            Err(cavity_scatter::Error::Pole { .. } | cavity_scatter::Error::Domain { .. }) => {
                log::warn!("reflection undefined at k = {k}; row skipped");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        table.push(vec![k.into(), r.re.into(), r.im.into(), r.norm().into(), r.arg().into()]);
    }
    Ok(table)
}

fn amplitudes_table(config: &Config, grid: &[f64], order: u32) -> CliResult<Table> {
    let a = config.antenna_radius_m;
    let params = identify_parameters(a)?;
    let mut table = Table::new(&[
        "ka",
        "re_r_point",
        "im_r_point",
        "re_t_point",
        "im_t_point",
        "re_r_tube",
        "im_r_tube",
        "re_t_tube",
        "im_t_tube",
        "tube_flux",
        "mismatch",
    ]);
    for &ka in grid {
        let k = ka / a;
        let point = point_amplitudes(&params, k)?;
        let tube = tube_amplitudes(a, order, k)?;
        table.push(vec![
            ka.into(),
            point.r.re.into(),
            point.r.im.into(),
            point.t.re.into(),
            point.t.im.into(),
            tube.r.re.into(),
            tube.r.im.into(),
            tube.t.re.into(),
            tube.t.im.into(),
            (tube.r.norm_sqr() + tube.t.norm_sqr()).into(),
            low_energy_mismatch(a, k)?.into(),
        ]);
    }
    Ok(table)
}

struct CavityRow<'a> {
    id: usize,
    c1: f64,
    c2: f64,
    x: f64,
    y: f64,
    a: f64,
    res: &'a Resonance<f64>,
}

fn resonance_row(r: CavityRow<'_>) -> Vec<Cell> {
    let (seed_n, seed_m) = match r.res.seed_mode {
        Some(m) => (Some(m.n()), Some(m.m())),
        None => (None, None),
    };
    vec![
        r.id.into(),
        r.c1.into(),
        r.c2.into(),
        r.x.into(),
        r.y.into(),
        r.a.into(),
        r.res.k.re.into(),
        r.res.k.im.into(),
        r.res.frequency_ghz.into(),
        r.res.halfwidth.into(),
        r.res.residual.into(),
        seed_n.into(),
        seed_m.into(),
    ]
}

#[derive(Debug, Serialize)]
struct CavityEntry {
    cavity_id: usize,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    c1_m: Option<f64>,
    c2_m: Option<f64>,
    x0_x_m: Option<f64>,
    x0_y_m: Option<f64>,
    levels: usize,
    removed: usize,
    spacings: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a Config,
    master_seed: u64,
    format: Format,
    started_utc: String,
    finished_utc: String,
    cavities: Vec<CavityEntry>,
    summary: Value,
    outputs: Vec<FileRecord>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn finish(
    set: OutputSet,
    manifest_base: impl FnOnce(Vec<FileRecord>) -> Manifest<'static>,
) -> CliResult<()> {
    let dir = set.dir().to_path_buf();
    let records = set.commit()?;
    let manifest = manifest_base(records.clone());
    let bytes = serde_json::to_vec_pretty(&manifest).expect("serialisable manifest");
    if let Err(e) = write_atomic(&dir.join("manifest.json"), &bytes) {
        for r in &records {
            let _ = std::fs::remove_file(dir.join(&r.file));
        }
        return Err(e);
    }
    Ok(())
}

fn resonances(cli: &Cli, config: &Config) -> CliResult<()> {
    let started = now();
    let k_max = k_from_freq(config.f_max_ghz);
    let system = single_system(config, k_max)?;
    let found = system.find_resonances((0.0, k_max), &config.search())?;
    let rect = system.rect();
    let x0 = system.x0();
    let mut table = Table::new(&RESONANCE_COLUMNS);
    for res in &found.resonances {
        table.push(resonance_row(CavityRow {
            id: 0,
            c1: rect.c1(),
            c2: rect.c2(),
            x: x0.x,
            y: x0.y,
            a: config.antenna_radius_m,
            res,
        }));
    }
    let Some(dir) = &cli.out else {
        let mut out = std::io::stdout().lock();
        return out.write_all(&table.encode(cli.format)).map_err(|e| CliError::io("<stdout>", e));
    };
    let mut set = OutputSet::create(dir)?;
    set.stage(&format!("resonances.{}", cli.format.extension()), &table.encode(cli.format))?;
    let status = if found.failures.is_empty() { "ok" } else { "partial" };
    let message = (!found.failures.is_empty()).then(|| {
        found.failures.iter().map(|f| format!("{:?}: {}", f.seed_mode, f.reason)).collect::<Vec<_>>().join("; ")
    });
    let cavity = CavityEntry {
        cavity_id: 0,
        status,
        message,
        c1_m: Some(rect.c1()),
        c2_m: Some(rect.c2()),
        x0_x_m: Some(x0.x),
        x0_y_m: Some(x0.y),
        levels: found.resonances.len(),
        removed: 0,
        spacings: 0,
    };
    let summary = json!({
        "resonances": found.resonances.len(),
        "visible_poles": system.visible_count((0.0, k_max)),
        "failed_seeds": found.failures.len(),
    });
    let config = Box::leak(Box::new(config.clone()));
    let format = cli.format;
    finish(set, move |outputs| Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "resonances",
        config,
        master_seed: config.master_seed,
        format,
        started_utc: started,
        finished_utc: now(),
        cavities: vec![cavity],
        summary,
        outputs,
    })
}

/// Data tables of an ensemble run.
pub fn ensemble_tables(result: &EnsembleResult) -> (Table, Table, Table) {
    let mut res = Table::new(&RESONANCE_COLUMNS);
    for r in &result.resonances {
        let g = r.geometry;
        res.push(resonance_row(CavityRow {
            id: r.cavity_id,
            c1: g.rect.c1(),
            c2: g.rect.c2(),
            x: g.x0.x,
            y: g.x0.y,
            a: r.a,
            res: &r.resonance,
        }));
    }
    let mut spacings = Table::new(&SPACING_COLUMNS);
    for &(id, s) in &result.spacings {
        spacings.push(vec![id.into(), s.into()]);
    }
    (res, spacings, histogram_table(&result.histogram))
}

pub fn histogram_table(h: &SpacingHistogram) -> Table {
    let mut table = Table::new(&HISTOGRAM_COLUMNS);
    for (d, w) in h.densities.iter().zip(h.bin_edges.windows(2)) {
        table.push(vec![w[0].into(), w[1].into(), (*d).into()]);
    }
    table
}

fn ensemble(cli: &Cli, config: &Config) -> CliResult<()> {
    let started = now();
    let spec = config.ensemble_spec(threads_from_env()?);
    let result = run_ensemble(&spec)?;
    let (res, spacings, histogram) = ensemble_tables(&result);
    let dir = out_dir(cli);
    let ext = cli.format.extension();
    let mut set = OutputSet::create(&dir)?;
    set.stage(&format!("resonances.{ext}"), &res.encode(cli.format))?;
    set.stage(&format!("spacings.{ext}"), &spacings.encode(cli.format))?;
    set.stage(&format!("histogram.{ext}"), &histogram.encode(cli.format))?;

    let cavities: Vec<CavityEntry> = result
        .report
        .cavities
        .iter()
        .map(|c| {
            let (status, message) = match &c.status {
                CavityStatus::Ok => ("ok", None),
                CavityStatus::Partial { failed_seeds } => ("partial", Some(format!("{failed_seeds} seeds failed"))),
                CavityStatus::Failed(reason) => ("failed", Some(reason.clone())),
            };
            CavityEntry {
                cavity_id: c.cavity_id,
                status,
                message,
                c1_m: c.geometry.map(|g| g.rect.c1()),
                c2_m: c.geometry.map(|g| g.rect.c2()),
                x0_x_m: c.geometry.map(|g| g.x0.x),
                x0_y_m: c.geometry.map(|g| g.x0.y),
                levels: c.levels,
                removed: c.removed,
                spacings: c.spacings,
            }
        })
        .collect();
    let failed = result.report.failed();
    let poisson = result.report.poisson.map(|p| {
        json!({
            "ks_distance": p.ks_distance,
            "small_s_fraction": p.small_s_fraction,
            "poisson_small_s_fraction": p.poisson_small_s_fraction,
        })
    });
    let summary = json!({
        "resonances": result.resonances.len(),
        "spacings": result.spacings.len(),
        "pooled_mean_spacing": finite_or_null(result.report.pooled_mean_spacing),
        "failed_cavities": failed,
        "poisson": poisson,
    });
    let config = Box::leak(Box::new(config.clone()));
    let format = cli.format;
    finish(set, move |outputs| Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "ensemble",
        config,
        master_seed: config.master_seed,
        format,
        started_utc: started,
        finished_utc: now(),
        cavities,
        summary,
        outputs,
    })?;
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} cavities aborted", spec.n_cavities)));
    }
    Ok(())
}

fn finite_or_null(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Columns of a CSV or JSON table file, by name.
pub fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('[');
    if is_json {
        let rows: Vec<serde_json::Map<String, Value>> = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let columns: Vec<String> = rows.first().map(|r| r.keys().cloned().collect()).unwrap_or_default();
        let data = rows
            .iter()
            .map(|r| {
                columns
                    .iter()
                    .map(|c| match r.get(c) {
                        Some(Value::Null) | None => String::new(),
                        Some(Value::String(s)) => s.clone(),
                        Some(v) => v.to_string(),
                    })
                    .collect()
            })
            .collect();
        return Ok((columns, data));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let columns = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((columns, rows))
}

fn column(path: &Path, columns: &[String], rows: &[Vec<String>], name: &str) -> CliResult<Vec<f64>> {
    let idx = columns
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| CliError::Usage(format!("{}: missing column `{name}`", path.display())))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r[idx].trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!("{}: row {}: `{}` is not a number", path.display(), i + 2, r[idx]))
            })
        })
        .collect()
}

/// Histogram stored by a run, in either format.
pub fn read_histogram(path: &Path) -> CliResult<SpacingHistogram> {
    let (columns, rows) = read_table(path)?;
    let lo = column(path, &columns, &rows, "bin_lo")?;
    let hi = column(path, &columns, &rows, "bin_hi")?;
    let density = column(path, &columns, &rows, "density")?;
    if lo.is_empty() {
        return Err(CliError::Usage(format!("{}: empty histogram", path.display())));
    }
    let mut edges = lo.clone();
    edges.push(*hi.last().expect("non-empty"));
    if lo.iter().skip(1).zip(&hi).any(|(l, h)| l != h) {
        return Err(CliError::Usage(format!("{}: bins are not contiguous", path.display())));
    }
    Ok(SpacingHistogram::from_parts(edges, density, 0)?)
}

fn find_run_file(dir: &Path, stem: &str) -> Option<PathBuf> {
    ["csv", "json"].iter().map(|ext| dir.join(format!("{stem}.{ext}"))).find(|p| p.exists())
}

fn small_fraction(s: &[f64]) -> f64 {
    s.iter().filter(|&&x| x < SMALL_S).count() as f64 / s.len().max(1) as f64
}

/// Fraction of histogram mass below `SMALL_S`, interpolating within bins.
fn histogram_small_fraction(h: &SpacingHistogram) -> f64 {
    let mass = h.total_mass();
    let below: f64 = h
        .densities
        .iter()
        .zip(h.bin_edges.windows(2))
        .map(|(d, w)| d * (w[1].min(SMALL_S) - w[0]).max(0.0))
        .sum();
    if mass > 0.0 {
        below / mass
    } else {
        0.0
    }
}

fn compare(input: &Path, against: &str, _config: &Config) -> CliResult<Table> {
    let hist_path = find_run_file(input, "histogram")
        .ok_or_else(|| CliError::Usage(format!("{}: no histogram.csv or histogram.json", input.display())))?;
    let ours = read_histogram(&hist_path)?;
    let spacings = match find_run_file(input, "spacings") {
        Some(p) => {
            let (columns, rows) = read_table(&p)?;
            Some(column(&p, &columns, &rows, "s")?)
        }
        None => None,
    };
    let mut table = Table::new(&COMPARE_COLUMNS);
    let (count, own_small) = match &spacings {
        Some(s) => (s.len(), small_fraction(s)),
        None => (0, histogram_small_fraction(&ours)),
    };

    if against.eq_ignore_ascii_case("poisson") {
        let ks = match &spacings {
            Some(s) => match poisson_compare(s) {
                Ok(PoissonComparison { ks_distance, .. }) => ks_distance,
                Err(e) => return Err(CliError::Numerical(e.to_string())),
            },
            None => ours.ks_to_poisson(),
        };
        table.push(vec![
            "poisson".into(),
            count.into(),
            ks.into(),
            own_small.into(),
            POISSON_SMALL_S_FRACTION.into(),
            Cell::Empty,
            POISSON_SMALL_S_FRACTION.into(),
        ]);
        return Ok(table);
    }

    let path = Path::new(against);
    let (columns, rows) = read_table(path)?;
    let (ks, ref_count, ref_small) = if columns.iter().any(|c| c == "density") {
        let theirs = read_histogram(path)?;
        (ours.ks_between(&theirs)?, Cell::Empty, histogram_small_fraction(&theirs))
    } else {
        let reference = if columns.iter().any(|c| c == "s") {
            column(path, &columns, &rows, "s")?
        } else {
            let levels = column(path, &columns, &rows, LEVEL_COLUMNS[0])?;
            let seq = LevelSequence::new(levels, Provenance::Ingested)?;
            nearest_spacings(&unfold_by_mean_spacing(&seq))
        };
        let own = spacings
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("{}: sample comparison needs spacings", input.display())))?;
        (ks_two_sample(own, &reference)?, Cell::from(reference.len()), small_fraction(&reference))
    };
    table.push(vec![
        Cell::Text(against.to_string()),
        count.into(),
        ks.into(),
        own_small.into(),
        POISSON_SMALL_S_FRACTION.into(),
        ref_count,
        ref_small.into(),
    ]);
    Ok(table)
}

/// Reads the first column of a CSV file (a header line is optional) and
/// converts it to energies in 1/m^2.
pub fn ingest(path: &Path, unit: Unit) -> CliResult<LevelSequence> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let Some(field) = record.get(0).map(str::trim) else { continue };
        if field.is_empty() {
            continue;
        }
        let v: f64 = match field.parse() {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(CliError::Usage(format!("{}: line {}: `{field}` is not a number", path.display(), i + 1)))
            }
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Usage(format!("{}: line {}: level {v} must be positive", path.display(), i + 1)));
        }
        values.push(match unit {
            Unit::Ghz => k_from_freq(v).powi(2),
            Unit::PerM => v * v,
            Unit::PerM2 => v,
        });
    }
    if values.len() < 2 {
        return Err(CliError::Usage(format!("{}: need at least two levels", path.display())));
    }
    Ok(LevelSequence::new(values, Provenance::Ingested)?)
}

pub fn levels_table(levels: &LevelSequence) -> Table {
    let mut table = Table::new(&LEVEL_COLUMNS);
    for &v in levels.values() {
        table.push(vec![v.into()]);
    }
    table
}
