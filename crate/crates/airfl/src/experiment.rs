//! Batch experiment driver.
//!
//! Configuration is a flat `key = value` text file (comma-separated lists,
//! `#` comments). Powers are given in dBm and error thresholds in dB at this
//! boundary and converted to linear scale exactly once at parse time. Every
//! experiment writes CSV with a header row; cells are dispatched to a worker
//! pool and written in deterministic order, so identical specs yield
//! byte-identical files apart from the trailing wall-time column.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::aircomp::AircompInstance;
use crate::channel::{sample_channels, FadingConfig, Geometry};
use crate::fl::{make_task, run_fl, ErrorModel, FlRoundConfig};
use crate::select::{select_devices, Scheme, SelectionConfig, SelectionOutcome};
use crate::{Error, Result};

pub mod validate;

/// Experiment families exposed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// One selection run per (seed, scheme) at fixed parameters.
    Select,
    /// Mean selected-device count versus the error threshold.
    SweepGamma,
    /// ... versus the number of reflecting elements.
    SweepElements,
    /// ... versus the number of receive antennas.
    SweepAntennas,
    /// Federated-learning traces under the selection outcomes.
    Fl,
    /// Self-check oracle suites.
    Validate,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Select => "select",
            ExperimentKind::SweepGamma => "sweep_gamma",
            ExperimentKind::SweepElements => "sweep_elements",
            ExperimentKind::SweepAntennas => "sweep_antennas",
            ExperimentKind::Fl => "fl",
            ExperimentKind::Validate => "validate",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "select" => Some(Self::Select),
            "sweep_gamma" => Some(Self::SweepGamma),
            "sweep_elements" => Some(Self::SweepElements),
            "sweep_antennas" => Some(Self::SweepAntennas),
            "fl" => Some(Self::Fl),
            "validate" => Some(Self::Validate),
            _ => None,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Fully resolved experiment description. dB/dBm inputs are kept for echoing
/// into CSV; the linear fields are what the pipeline consumes.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub p0_dbm: f64,
    pub sigma2_dbm: f64,
    pub p0_w: f64,
    pub sigma2_w: f64,
    pub gamma_db: f64,
    pub gamma_lin: f64,
    pub gamma_db_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub schemes: Vec<Scheme>,
    /// Seeds are `0..num_seeds`.
    pub num_seeds: usize,
    /// Channel realization used by the FL experiment.
    pub channel_seed: u64,
    pub rounds: usize,
    pub local_steps: usize,
    pub learning_rate: f64,
    pub fl_classes: usize,
    pub fl_feature_dim: usize,
    pub fl_samples_per_device: usize,
    pub fl_non_iid: bool,
    pub epsilon: f64,
    pub rho: f64,
    pub max_alt_iters: usize,
    pub randomization_samples: usize,
    pub output_path: PathBuf,
    pub full_scale: bool,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub out: Option<PathBuf>,
    pub seeds: Option<usize>,
    pub full_scale: bool,
}

impl ExperimentSpec {
    /// Desk-scale defaults; the full-scale flag switches the deployment to
    /// K=20, M=20, N=64.
    pub fn defaults(kind: ExperimentKind, full_scale: bool) -> Self {
        let (k, m, n) = if full_scale { (20, 20, 64) } else { (10, 8, 16) };
        let gamma_db = match kind {
            ExperimentKind::SweepAntennas => -22.0,
            ExperimentKind::Fl => -17.0,
            _ => -20.0,
        };
        let p0_dbm = 20.0;
        let sigma2_dbm = -90.0;
        Self {
            kind,
            k,
            m,
            n,
            p0_dbm,
            sigma2_dbm,
            p0_w: dbm_to_watts(p0_dbm),
            sigma2_w: dbm_to_watts(sigma2_dbm),
            gamma_db,
            gamma_lin: db_to_linear(gamma_db),
            gamma_db_list: vec![-30.0, -25.0, -20.0, -15.0, -10.0],
            n_list: vec![4, 8, 16, 32],
            m_list: vec![4, 8, 16],
            schemes: Scheme::all().to_vec(),
            num_seeds: 20,
            channel_seed: 0,
            rounds: 30,
            local_steps: 2,
            learning_rate: 0.15,
            fl_classes: 4,
            fl_feature_dim: 8,
            fl_samples_per_device: 20,
            fl_non_iid: true,
            epsilon: 1e-3,
            rho: 1.0,
            max_alt_iters: 6,
            randomization_samples: 50,
            output_path: PathBuf::from("out"),
            full_scale,
        }
    }

    /// Parse a config file on top of the defaults. `kind_override` comes
    /// from the CLI subcommand and wins over a `kind =` line.
    pub fn parse_str(
        text: &str,
        kind_override: Option<ExperimentKind>,
        cli: &CliOverrides,
    ) -> Result<ExperimentSpec> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `key = value`, got {line:?}"),
                });
            };
            entries.push((line_no, key.trim().to_string(), value.trim().to_string()));
        }

        // the scale flag and the kind decide the defaults, so resolve them first
        let mut full_scale = cli.full_scale;
        let mut kind = kind_override;
        for (line_no, key, value) in &entries {
            match key.as_str() {
                "full_scale" => {
                    full_scale = full_scale || parse_bool(*line_no, key, value)?;
                }
                "kind" => {
                    if kind.is_none() {
                        kind = Some(ExperimentKind::parse(value).ok_or_else(|| Error::Parse {
                            line: *line_no,
                            message: format!("unknown kind {value:?} for key `kind`"),
                        })?);
                    }
                }
                _ => {}
            }
        }
        let kind = kind.ok_or_else(|| Error::Config(
            "experiment kind missing: pass a subcommand or a `kind =` line".into(),
        ))?;
        let mut spec = ExperimentSpec::defaults(kind, full_scale);

        for (line_no, key, value) in &entries {
            let line_no = *line_no;
            let bad = |message: String| Error::Parse { line: line_no, message };
            match key.as_str() {
                "kind" | "full_scale" => {}
                "k" => spec.k = parse_num(line_no, key, value)?,
                "m" => spec.m = parse_num(line_no, key, value)?,
                "n" => spec.n = parse_num(line_no, key, value)?,
                "p0_dbm" => {
                    spec.p0_dbm = parse_num(line_no, key, value)?;
                    spec.p0_w = dbm_to_watts(spec.p0_dbm);
                }
                "sigma2_dbm" => {
                    spec.sigma2_dbm = parse_num(line_no, key, value)?;
                    spec.sigma2_w = dbm_to_watts(spec.sigma2_dbm);
                }
                "gamma_db" => {
                    spec.gamma_db = parse_num(line_no, key, value)?;
                    spec.gamma_lin = db_to_linear(spec.gamma_db);
                }
                "gamma_db_list" => {
                    spec.gamma_db_list = parse_list(line_no, key, value)?;
                }
                "n_list" => spec.n_list = parse_list(line_no, key, value)?,
                "m_list" => spec.m_list = parse_list(line_no, key, value)?,
                "schemes" => {
                    spec.schemes = value
                        .split(',')
                        .map(|s| s.trim().parse::<Scheme>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| bad(format!("key `schemes`: {e}")))?;
                }
                "seeds" => spec.num_seeds = parse_num(line_no, key, value)?,
                "channel_seed" => spec.channel_seed = parse_num(line_no, key, value)?,
                "rounds" => spec.rounds = parse_num(line_no, key, value)?,
                "local_steps" => spec.local_steps = parse_num(line_no, key, value)?,
                "learning_rate" => spec.learning_rate = parse_num(line_no, key, value)?,
                "fl_classes" => spec.fl_classes = parse_num(line_no, key, value)?,
                "fl_feature_dim" => spec.fl_feature_dim = parse_num(line_no, key, value)?,
                "fl_samples_per_device" => {
                    spec.fl_samples_per_device = parse_num(line_no, key, value)?
                }
                "fl_non_iid" => spec.fl_non_iid = parse_bool(line_no, key, value)?,
                "epsilon" => spec.epsilon = parse_num(line_no, key, value)?,
                "rho" => spec.rho = parse_num(line_no, key, value)?,
                "max_alt_iters" => spec.max_alt_iters = parse_num(line_no, key, value)?,
                "randomization_samples" => {
                    spec.randomization_samples = parse_num(line_no, key, value)?
                }
                "out" => spec.output_path = PathBuf::from(value),
                other => {
                    return Err(bad(format!("unknown key `{other}`")));
                }
            }
        }

        if let Some(out) = &cli.out {
            spec.output_path = out.clone();
        }
        if let Some(seeds) = cli.seeds {
            spec.num_seeds = seeds;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_seeds == 0 {
            return Err(Error::Config("seed list must be nonempty".into()));
        }
        if self.k == 0 || self.m == 0 {
            return Err(Error::Config("k and m must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("scheme list must be nonempty".into()));
        }
        if self.kind == ExperimentKind::SweepGamma && self.gamma_db_list.is_empty() {
            return Err(Error::Config("gamma_db_list must be nonempty".into()));
        }
        if self.kind == ExperimentKind::SweepElements && self.n_list.is_empty() {
            return Err(Error::Config("n_list must be nonempty".into()));
        }
        if self.kind == ExperimentKind::SweepAntennas && self.m_list.is_empty() {
            return Err(Error::Config("m_list must be nonempty".into()));
        }
        Ok(())
    }

    fn selection_config(&self, gamma_lin: f64, scheme: Scheme) -> SelectionConfig {
        let mut cfg = SelectionConfig::new(gamma_lin, self.p0_w, self.sigma2_w, scheme);
        cfg.dc.epsilon = self.epsilon;
        cfg.dc.rho = self.rho;
        cfg.max_alt_iters = self.max_alt_iters;
        cfg.randomization_samples = self.randomization_samples;
        cfg
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::Parse {
        line,
        message: format!("key `{key}`: bad value {value:?} ({e})"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Parse {
            line,
            message: format!("key `{key}`: expected a boolean, got {other:?}"),
        }),
    }
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|tok| parse_num(line, key, tok.trim()))
        .collect()
}

/// One selection row of the sweep CSVs.
struct SelectionRow {
    seed: u64,
    scheme: Scheme,
    gamma_db: f64,
    m: usize,
    n: usize,
    k: usize,
    outcome: SelectionOutcome,
    wall_ms: u128,
}

const SELECTION_HEADER: &str =
    "seed,scheme,gamma_db,m,n,k,k_star,achieved_mse_db,total_dc_iters,wall_time_ms\n";

fn selection_row_csv(row: &SelectionRow) -> String {
    let mse_db = if row.outcome.achieved_mse.is_finite() {
        format!("{:.4}", linear_to_db(row.outcome.achieved_mse))
    } else {
        "inf".to_string()
    };
    format!(
        "{},{},{:.4},{},{},{},{},{},{},{}\n",
        row.seed,
        row.scheme,
        row.gamma_db,
        row.m,
        row.n,
        row.k,
        row.outcome.k_star,
        mse_db,
        row.outcome.total_dc_iters,
        row.wall_ms
    )
}

/// Summary of one experiment run: the files written.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub files: Vec<PathBuf>,
    /// Validation outcomes (only for the validate kind).
    pub validation: Vec<validate::CheckResult>,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.validation.iter().all(|c| c.passed)
    }
}

/// Run the experiment described by `spec`, writing CSV artifacts under its
/// output path.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    match spec.kind {
        ExperimentKind::Validate => {
            let validation = validate::run_all();
            Ok(ExperimentReport { files: Vec::new(), validation })
        }
        ExperimentKind::Select => {
            let rows = selection_grid(spec, &[spec.gamma_db], &[spec.n], &[spec.m])?;
            let path = write_csv(spec, "selection.csv", SELECTION_HEADER, &rows)?;
            Ok(ExperimentReport { files: vec![path], validation: Vec::new() })
        }
        ExperimentKind::SweepGamma => {
            let gammas = spec.gamma_db_list.clone();
            let rows = selection_grid(spec, &gammas, &[spec.n], &[spec.m])?;
            let path = write_csv(spec, "sweep_gamma.csv", SELECTION_HEADER, &rows)?;
            Ok(ExperimentReport { files: vec![path], validation: Vec::new() })
        }
        ExperimentKind::SweepElements => {
            let ns = spec.n_list.clone();
            let rows = selection_grid(spec, &[spec.gamma_db], &ns, &[spec.m])?;
            let path = write_csv(spec, "sweep_elements.csv", SELECTION_HEADER, &rows)?;
            Ok(ExperimentReport { files: vec![path], validation: Vec::new() })
        }
        ExperimentKind::SweepAntennas => {
            let ms = spec.m_list.clone();
            let rows = selection_grid(spec, &[spec.gamma_db], &[spec.n], &ms)?;
            let path = write_csv(spec, "sweep_antennas.csv", SELECTION_HEADER, &rows)?;
            Ok(ExperimentReport { files: vec![path], validation: Vec::new() })
        }
        ExperimentKind::Fl => {
            let path = run_fl_experiment(spec)?;
            Ok(ExperimentReport { files: vec![path], validation: Vec::new() })
        }
    }
}

/// Evaluate the selection pipeline over the cell grid. Channels are sampled
/// once per (seed, n, m) so schemes and thresholds are compared on paired
/// realizations; cells run on the worker pool and are collected in grid
/// order.
fn selection_grid(
    spec: &ExperimentSpec,
    gamma_dbs: &[f64],
    ns: &[usize],
    ms: &[usize],
) -> Result<Vec<SelectionRow>> {
    struct Cell {
        seed: u64,
        n: usize,
        m: usize,
    }
    let mut cells = Vec::new();
    for &n in ns {
        for &m in ms {
            for seed in 0..spec.num_seeds {
                cells.push(Cell { seed: seed as u64, n, m });
            }
        }
    }
    let geometry = Geometry::default_deployment(spec.k);
    let fading = FadingConfig::default();

    let nested: Vec<Vec<SelectionRow>> = cells
        .par_iter()
        .map(|cell| -> Result<Vec<SelectionRow>> {
            let channels = sample_channels(&geometry, &fading, cell.m, cell.n, cell.seed)?;
            let mut rows = Vec::new();
            for &gamma_db in gamma_dbs {
                for &scheme in &spec.schemes {
                    let cfg = spec.selection_config(db_to_linear(gamma_db), scheme);
                    let start = Instant::now();
                    let outcome = select_devices(&channels, &cfg, cell.seed)?;
                    rows.push(SelectionRow {
                        seed: cell.seed,
                        scheme,
                        gamma_db,
                        m: cell.m,
                        n: cell.n,
                        k: spec.k,
                        outcome,
                        wall_ms: start.elapsed().as_millis(),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn write_csv(
    spec: &ExperimentSpec,
    name: &str,
    header: &str,
    rows: &[SelectionRow],
) -> Result<PathBuf> {
    let mut text = String::from(header);
    for row in rows {
        text.push_str(&selection_row_csv(row));
    }
    write_file(&spec.output_path, name, &text)
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Selection followed by federated averaging: one channel realization, one
/// selection per scheme, then per-seed training runs with the induced
/// aggregation error. The ideal all-devices run is appended as `benchmark`.
fn run_fl_experiment(spec: &ExperimentSpec) -> Result<PathBuf> {
    let geometry = Geometry::default_deployment(spec.k);
    let fading = FadingConfig::default();
    let channels = sample_channels(&geometry, &fading, spec.m, spec.n, spec.channel_seed)?;

    struct Arm {
        name: String,
        selected: Vec<usize>,
        error_model: ErrorModel,
    }
    let mut arms = Vec::new();
    for &scheme in &spec.schemes {
        let cfg = spec.selection_config(spec.gamma_lin, scheme);
        let outcome = select_devices(&channels, &cfg, spec.channel_seed)?;
        if outcome.k_star == 0 {
            eprintln!(
                "warning: scheme {scheme} selected no devices at gamma = {} dB; skipping its runs",
                spec.gamma_db
            );
            continue;
        }
        let working = match scheme {
            Scheme::NoIrs => channels.without_irs(),
            _ => channels.clone(),
        };
        let instance = AircompInstance::new(
            working,
            outcome.selected.clone(),
            spec.p0_w,
            spec.sigma2_w,
        )?;
        let error_model = ErrorModel::aircomp(&instance, &outcome.m, &outcome.phases)?;
        arms.push(Arm { name: scheme.to_string(), selected: outcome.selected, error_model });
    }
    arms.push(Arm {
        name: "benchmark".into(),
        selected: (0..spec.k).collect(),
        error_model: ErrorModel::Ideal,
    });

    let runs: Vec<(String, u64)> = arms
        .iter()
        .flat_map(|arm| (0..spec.num_seeds).map(move |s| (arm.name.clone(), s as u64)))
        .collect();
    let arm_of = |name: &str| arms.iter().find(|a| a.name == name).unwrap();

    let blocks: Vec<String> = runs
        .par_iter()
        .map(|(name, seed)| -> Result<String> {
            let arm = arm_of(name);
            let task = make_task(
                spec.fl_classes,
                spec.fl_feature_dim,
                spec.k,
                spec.fl_samples_per_device,
                spec.fl_non_iid,
                *seed,
            )?;
            let cfg = FlRoundConfig {
                rounds: spec.rounds,
                local_steps: spec.local_steps,
                learning_rate: spec.learning_rate,
                error_model: arm.error_model.clone(),
                selected: arm.selected.clone(),
            };
            let metrics = run_fl(&task, &cfg, *seed)?;
            let mut block = String::new();
            for round in 0..spec.rounds {
                writeln!(
                    block,
                    "{}-s{},{},{},{:.6},{:.6}",
                    name,
                    seed,
                    name,
                    round,
                    metrics.training_loss[round],
                    metrics.test_accuracy[round]
                )
                .expect("string write");
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut text = String::from("run_id,scheme,round,training_loss,test_accuracy\n");
    for block in blocks {
        text.push_str(&block);
    }
    write_file(&spec.output_path, "fl_metrics.csv", &text)
}
