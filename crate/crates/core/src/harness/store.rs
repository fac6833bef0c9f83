use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, RunMode, RunResult};
use crate::agent::EpisodeRecord;
use crate::seeding::RNG_ALGORITHM;
use crate::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const HEADER: [&str; 9] = [
    "run_id",
    "mode",
    "solver",
    "n_source",
    "m_target",
    "seed",
    "mean_tour_length",
    "std_tour_length",
    "mean_normalized_perf",
];

/// `printf("%g")`: 6 significant digits, trailing zeros dropped, exponent
/// form outside `1e-4 <= |x| < 1e6`.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{x:.*}", (5 - exp) as usize))
    }
}

fn record(r: &RunResult) -> [String; 9] {
    [
        r.run_id.clone(),
        r.mode.to_string(),
        r.solver.clone(),
        r.n_source.to_string(),
        r.m_target.to_string(),
        r.seed.to_string(),
        fmt_g(r.mean_tour_length),
        fmt_g(r.std_tour_length),
        fmt_g(r.mean_normalized_perf),
    ]
}

/// Rows sorted by `run_id`.
pub fn write_results(path: &Path, rows: &[RunResult]) -> Result<()> {
    let mut sorted: Vec<&RunResult> = rows.iter().collect();
    sorted.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        w.write_record(HEADER)?;
        for r in sorted {
            w.write_record(record(r))?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Parse a results file. A malformed final line (an interrupted append) is
/// dropped with a warning; malformed lines elsewhere are errors.
pub fn read_results(path: &Path) -> Result<Vec<RunResult>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let mut rows = Vec::new();
    let mut pending_err: Option<Error> = None;
    for rec in reader.records() {
        if let Some(e) = pending_err.take() {
            return Err(e);
        }
        let parsed = rec.map_err(Error::from).and_then(|r| parse_row(&r));
        match parsed {
            Ok(row) => rows.push(row),
            Err(e) => pending_err = Some(e),
        }
    }
    if let Some(e) = pending_err {
        log::warn!("{}: dropping truncated last row ({e})", path.display());
    }
    Ok(rows)
}

fn parse_row(r: &csv::StringRecord) -> Result<RunResult> {
    if r.len() != HEADER.len() {
        return Err(Error::InvalidArgument(format!("expected {} fields, got {}", HEADER.len(), r.len())));
    }
    let f = |i: usize| -> Result<f64> {
        r[i].parse()
            .map_err(|_| Error::InvalidArgument(format!("bad number {:?} in {}", &r[i], HEADER[i])))
    };
    let u = |i: usize| -> Result<u64> {
        r[i].parse()
            .map_err(|_| Error::InvalidArgument(format!("bad integer {:?} in {}", &r[i], HEADER[i])))
    };
    let row = RunResult {
        run_id: r[0].to_string(),
        mode: r[1].parse()?,
        solver: r[2].to_string(),
        n_source: u(3)? as usize,
        m_target: u(4)? as usize,
        seed: u(5)?,
        mean_tour_length: f(6)?,
        std_tour_length: f(7)?,
        mean_normalized_perf: f(8)?,
        wallclock_seconds: 0.0,
    };
    row.validate()?;
    Ok(row)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub job: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub rng: String,
    /// TOML of every config that has run against this store, deduplicated.
    pub configs: Vec<String>,
    pub wallclock_seconds: BTreeMap<String, f64>,
    /// Latest failure per job; cleared when the job later succeeds.
    pub failures: BTreeMap<String, String>,
}

/// Results directory with a single writer.
#[derive(Debug)]
pub struct ResultStore {
    dir: PathBuf,
    rows: BTreeMap<String, RunResult>,
    manifest: Manifest,
}

impl ResultStore {
    /// Open or create a store. Existing rows and manifest are loaded.
    pub fn open(dir: &Path) -> Result<Self> {
        for sub in ["", "checkpoints", "telemetry"] {
            let p = dir.join(sub);
            fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        let results = dir.join(RESULTS_FILE);
        let mut rows = BTreeMap::new();
        if results.exists() {
            for r in read_results(&results)? {
                rows.insert(r.run_id.clone(), r);
            }
        }
        let mpath = dir.join(MANIFEST_FILE);
        let manifest = if mpath.exists() {
            let s = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
            serde_json::from_str(&s)?
        } else {
            Manifest::default()
        };
        let mut store = ResultStore {
            dir: dir.to_path_buf(),
            rows,
            manifest,
        };
        for (id, w) in &store.manifest.wallclock_seconds {
            if let Some(r) = store.rows.get_mut(id) {
                r.wallclock_seconds = *w;
            }
        }
        store.manifest.crate_version = env!("CARGO_PKG_VERSION").into();
        store.manifest.rng = RNG_ALGORITHM.into();
        if !results.exists() {
            write_results(&results, &[])?;
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn results_path(&self) -> PathBuf {
        self.dir.join(RESULTS_FILE)
    }

    pub fn checkpoint_path(&self, run_id: &str) -> PathBuf {
        self.dir.join("checkpoints").join(format!("{run_id}.json"))
    }

    pub fn telemetry_path(&self, run_id: &str) -> PathBuf {
        self.dir.join("telemetry").join(format!("{run_id}.csv"))
    }

    pub fn contains(&self, run_id: &str) -> bool {
        self.rows.contains_key(run_id)
    }

    pub fn get(&self, run_id: &str) -> Option<&RunResult> {
        self.rows.get(run_id)
    }

    /// Rows in `run_id` order.
    pub fn rows(&self) -> impl Iterator<Item = &RunResult> {
        self.rows.values()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn register_config(&mut self, cfg: &ExperimentConfig) -> Result<()> {
        let s = cfg.to_toml()?;
        if !self.manifest.configs.contains(&s) {
            self.manifest.configs.push(s);
        }
        self.write_manifest()
    }

    /// Append a row unless its `run_id` is already present. Returns whether
    /// the row was new.
    pub fn insert(&mut self, row: RunResult) -> Result<bool> {
        row.validate()?;
        if self.rows.contains_key(&row.run_id) {
            return Ok(false);
        }
        let path = self.results_path();
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        w.write_record(record(&row))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.manifest
            .wallclock_seconds
            .insert(row.run_id.clone(), row.wallclock_seconds);
        self.rows.insert(row.run_id.clone(), row);
        Ok(true)
    }

    pub fn record_failure(&mut self, failure: &CellFailure) -> Result<()> {
        self.manifest
            .failures
            .insert(failure.job.clone(), failure.error.clone());
        self.write_manifest()
    }

    pub fn clear_failure(&mut self, job: &str) {
        self.manifest.failures.remove(job);
    }

    /// Rewrite `results.csv` in `run_id` order and flush the manifest.
    pub fn finalize(&mut self) -> Result<()> {
        let rows: Vec<RunResult> = self.rows.values().cloned().collect();
        write_results(&self.results_path(), &rows)?;
        self.write_manifest()
    }

    pub fn write_manifest(&self) -> Result<()> {
        let path = self.dir.join(MANIFEST_FILE);
        let tmp = path.with_extension("json.tmp");
        let s = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&tmp, s).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    pub fn write_telemetry(&self, run_id: &str, records: &[EpisodeRecord]) -> Result<()> {
        let path = self.telemetry_path(run_id);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["episode", "tour_length", "normalized_perf", "epsilon", "td_loss_sum"])?;
        for r in records {
            w.write_record([
                r.episode.to_string(),
                fmt_g(r.tour_length),
                fmt_g(r.normalized_perf),
                fmt_g(r.epsilon),
                fmt_g(r.td_loss_sum),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    /// Rows matching a mode and solver, in `run_id` order.
    pub fn select<'a>(&'a self, mode: RunMode, solver: &'a str) -> impl Iterator<Item = &'a RunResult> + 'a {
        self.rows
            .values()
            .filter(move |r| r.mode == mode && r.solver == solver)
    }
}

pub fn read_telemetry(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidArgument(format!("{}: bad telemetry field {i}", path.display())))
        };
        out.push(EpisodeRecord {
            episode: f(0)? as usize,
            tour_length: f(1)?,
            normalized_perf: f(2)?,
            epsilon: f(3)?,
            td_loss_sum: f(4)?,
        });
    }
    Ok(out)
}
