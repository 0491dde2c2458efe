//! Power sweeps: every (scheme, power, seed) point of the configuration,
//! computed on a worker pool and appended to the CSV in canonical order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::SimError;
use crate::experiment::{Experiment, PointOutcome, SweepRecord};
use crate::plot;

pub const CSV_FILE: &str = "sweep.csv";
/// Physics of the run that produced the CSV; resuming under a different one is refused.
pub const RUN_CONFIG_FILE: &str = "run_config.toml";
pub const CSV_HEADER: [&str; 9] = [
    "scheme",
    "power_dbm",
    "seed",
    "subcarrier",
    "gsnr_db",
    "mi_bits_per_2d",
    "air_n_bits_per_4d",
    "rate_loss_bits_per_amp",
    "runtime_s",
];

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "SIM_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub scheme: String,
    pub power_dbm: f64,
    pub seed: u64,
}

impl SweepPoint {
    fn key(&self) -> (String, String, u64) {
        point_key(&self.scheme, self.power_dbm, self.seed)
    }
}

fn point_key(scheme: &str, power_dbm: f64, seed: u64) -> (String, String, u64) {
    (scheme.to_ascii_lowercase(), format!("{power_dbm}"), seed)
}

/// Points in canonical order: schemes, then powers, then seeds.
pub fn sweep_points(config: &ExperimentConfig) -> Vec<SweepPoint> {
    let s = &config.sweep;
    s.schemes
        .iter()
        .flat_map(|scheme| {
            s.power_dbm.iter().flat_map(move |&power_dbm| {
                s.seeds.iter().map(move |&seed| SweepPoint {
                    scheme: scheme.clone(),
                    power_dbm,
                    seed,
                })
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct SweepSummary {
    pub csv_path: PathBuf,
    pub computed: usize,
    pub skipped: usize,
    pub plots: Vec<PathBuf>,
    /// Information bit errors per computed point, in canonical order.
    pub bit_errors: Vec<(SweepPoint, u64)>,
}

/// Worker count: `requested` (or all cores) capped by `SIM_THREADS`.
pub fn worker_count(requested: Option<usize>) -> usize {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    let wanted = requested.unwrap_or_else(rayon::current_num_threads).max(1);
    match cap {
        Some(c) if c >= 1 => wanted.min(c),
        _ => wanted,
    }
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>, SimError> {
    let mut reader = csv::Reader::from_path(path).map_err(SimError::csv(path))?;
    reader
        .deserialize()
        .collect::<Result<Vec<SweepRecord>, _>>()
        .map_err(SimError::csv(path))
}

/// Sections that determine the numbers in the CSV.
fn physics_fingerprint(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.sweep = Default::default();
    c.output = Default::default();
    c.mapping.scheme = Default::default();
    c.to_toml()
}

fn check_run_config(dir: &Path, config: &ExperimentConfig) -> Result<(), SimError> {
    let path = dir.join(RUN_CONFIG_FILE);
    let fingerprint = physics_fingerprint(config);
    match fs::read_to_string(&path) {
        Ok(existing) if existing != fingerprint => Err(SimError::Results {
            path,
            message: "existing results were produced by a different configuration; use a fresh output directory".into(),
        }),
        Ok(_) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            fs::write(&path, fingerprint).map_err(SimError::io(&path))
        }
        Err(e) => Err(SimError::Io { path, source: e }),
    }
}

/// Runs the configured sweep into `out_dir`, skipping points whose records are
/// already present, then redraws the plots from the complete CSV.
///
/// Records are written in canonical point order whatever the worker count, so
/// identical configurations produce identical files apart from `runtime_s`.
pub fn run_sweep(experiment: &Experiment, out_dir: &Path, jobs: Option<usize>) -> Result<SweepSummary, SimError> {
    let config = experiment.config();
    let points = sweep_points(config);
    if points.is_empty() {
        return Err(SimError::NothingToSweep(
            "the configuration lists no launch powers, schemes or seeds".into(),
        ));
    }
    fs::create_dir_all(out_dir).map_err(SimError::io(out_dir))?;
    check_run_config(out_dir, config)?;

    let csv_path = out_dir.join(CSV_FILE);
    let existing = if csv_path.exists() {
        read_records(&csv_path)?
    } else {
        Vec::new()
    };
    let mut present: HashMap<(String, String, u64), HashSet<usize>> = HashMap::new();
    for r in &existing {
        present
            .entry(point_key(&r.scheme, r.power_dbm, r.seed))
            .or_default()
            .insert(r.subcarrier);
    }
    let n_sc = config.tx.n_subcarriers;
    let (done, pending): (Vec<_>, Vec<_>) = points
        .into_iter()
        .partition(|p| present.get(&p.key()).is_some_and(|s| (1..=n_sc).all(|sc| s.contains(&sc))));
    log::info!("{} points to compute, {} already present", pending.len(), done.len());

    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&csv_path)
        .map_err(SimError::io(&csv_path))?;
    let fresh = file.metadata().map_err(SimError::io(&csv_path))?.len() == 0;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        writer.write_record(CSV_HEADER).map_err(SimError::csv(&csv_path))?;
        writer.flush().map_err(SimError::io(&csv_path))?;
    }

    let workers = worker_count(jobs);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    let (sender, receiver) = mpsc::channel::<(usize, Result<PointOutcome, SimError>)>();

    let mut summary = SweepSummary {
        csv_path: csv_path.clone(),
        skipped: done.len(),
        ..SweepSummary::default()
    };
    let mut first_error = None;
    std::thread::scope(|scope| -> Result<(), SimError> {
        let pending_ref = &pending;
        scope.spawn(move || {
            pool.install(|| {
                pending_ref.par_iter().enumerate().for_each_with(sender, |tx, (i, p)| {
                    let outcome = experiment.run_point(&p.scheme, p.power_dbm, p.seed);
                    // the receiver only disappears after a write failure
                    let _ = tx.send((i, outcome));
                });
            });
        });

        let mut parked: BTreeMap<usize, Result<PointOutcome, SimError>> = BTreeMap::new();
        let mut next = 0;
        for (i, outcome) in receiver {
            parked.insert(i, outcome);
            while let Some(outcome) = parked.remove(&next) {
                let point = &pending_ref[next];
                match outcome {
                    Ok(o) => {
                        for r in &o.records {
                            writer.serialize(r).map_err(SimError::csv(&csv_path))?;
                        }
                        writer.flush().map_err(SimError::io(&csv_path))?;
                        log::info!(
                            "{} @ {} dBm seed {}: {} bit errors, {:.1} s",
                            point.scheme,
                            point.power_dbm,
                            point.seed,
                            o.bit_errors,
                            o.records.first().map_or(0.0, |r| r.runtime_s)
                        );
                        summary.computed += 1;
                        summary.bit_errors.push((point.clone(), o.bit_errors));
                    }
                    Err(e) => {
                        log::error!("{e}");
                        first_error.get_or_insert(e);
                    }
                }
                next += 1;
            }
        }
        Ok(())
    })?;
    if let Some(e) = first_error {
        return Err(e);
    }

    summary.plots = plot::plot_csv(&csv_path, out_dir)?;
    Ok(summary)
}
