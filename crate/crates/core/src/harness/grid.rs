use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use super::{content_id, mean_std, CellFailure, ExperimentConfig, ResultStore, RunMode, RunResult};
use crate::agent::{self, EvalOutcome, EvalSet};
use crate::ansatz::{AnsatzKind, AnsatzParams, Checkpoint};
use crate::seeding::{self, derive, label};
use crate::tsp::{self, normalize_performance, Tour};
use crate::{Error, Result};

/// Worker-count override for the grid pool.
pub const WORKERS_ENV: &str = "EQCT_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Job {
    /// Train at `k` and evaluate on the `(k, seed)` set.
    Scratch { kind: AnsatzKind, k: usize, seed: u64 },
    /// Christofides, nearest neighbour and the optimum on the `(m, seed)` set.
    Baselines { m: usize, seed: u64 },
    /// Zero-shot and fine-tuned evaluation of the size-`n` checkpoint at `m`.
    Transfer {
        kind: AnsatzKind,
        n: usize,
        m: usize,
        seed: u64,
    },
}

impl Job {
    pub fn key(&self) -> String {
        match *self {
            Job::Scratch { kind, k, seed } => format!("scratch/{kind}/{k}/seed{seed}"),
            Job::Baselines { m, seed } => format!("baselines/{m}/seed{seed}"),
            Job::Transfer { kind, n, m, seed } => format!("transfer/{kind}/{n}->{m}/seed{seed}"),
        }
    }

    /// Ids of the rows this job writes.
    pub fn row_ids(&self, cfg: &ExperimentConfig) -> Vec<String> {
        match *self {
            Job::Scratch { kind, k, seed } => vec![scratch_id(cfg, kind, k, seed)],
            Job::Baselines { m, seed } => [
                RunMode::BaselineChristofides,
                RunMode::BaselineNn,
                RunMode::BaselineOptimal,
            ]
            .iter()
            .map(|&mode| baseline_id(cfg, mode, m, seed))
            .collect(),
            Job::Transfer { kind, n, m, seed } => vec![
                zero_shot_id(cfg, kind, n, m, seed),
                finetune_id(cfg, kind, n, m, seed),
            ],
        }
    }

    fn eval_cell(&self) -> (usize, u64) {
        match *self {
            Job::Scratch { k, seed, .. } => (k, seed),
            Job::Baselines { m, seed } | Job::Transfer { m, seed, .. } => (m, seed),
        }
    }

    fn is_done(&self, cfg: &ExperimentConfig, store: &ResultStore) -> bool {
        let rows = self.row_ids(cfg).iter().all(|id| store.contains(id));
        match *self {
            Job::Scratch { kind, k, seed } => {
                rows && store.checkpoint_path(&scratch_id(cfg, kind, k, seed)).exists()
            }
            _ => rows,
        }
    }
}

fn training_fingerprint(cfg: &ExperimentConfig) -> String {
    let hp = serde_json::to_string(&cfg.scratch_hyperparams()).expect("hyperparams serialize");
    format!(
        "{}|L{}|E{}|{}|V{}",
        cfg.generator.as_str(),
        cfg.layers,
        cfg.episodes_scratch,
        hp,
        cfg.eval_instances
    )
}

pub(crate) fn scratch_id(cfg: &ExperimentConfig, kind: AnsatzKind, k: usize, seed: u64) -> String {
    content_id(&[
        "scratch",
        kind.as_str(),
        &k.to_string(),
        &seed.to_string(),
        &training_fingerprint(cfg),
    ])
}

pub(crate) fn zero_shot_id(cfg: &ExperimentConfig, kind: AnsatzKind, n: usize, m: usize, seed: u64) -> String {
    content_id(&[
        "zero_shot",
        kind.as_str(),
        &n.to_string(),
        &m.to_string(),
        &seed.to_string(),
        &training_fingerprint(cfg),
    ])
}

pub(crate) fn finetune_id(cfg: &ExperimentConfig, kind: AnsatzKind, n: usize, m: usize, seed: u64) -> String {
    content_id(&[
        "finetune",
        kind.as_str(),
        &n.to_string(),
        &m.to_string(),
        &seed.to_string(),
        &training_fingerprint(cfg),
        &cfg.episodes_finetune.to_string(),
        &cfg.finetune_eps_start.to_string(),
    ])
}

pub(crate) fn baseline_id(cfg: &ExperimentConfig, mode: RunMode, m: usize, seed: u64) -> String {
    content_id(&[
        mode.as_str(),
        &m.to_string(),
        &seed.to_string(),
        cfg.generator.as_str(),
        &cfg.eval_instances.to_string(),
    ])
}

/// Every job of the grid, scratch and baseline jobs before transfer jobs.
pub fn enumerate_jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &kind in &cfg.ansatz {
        for k in cfg.scratch_sizes() {
            for &seed in &cfg.seeds {
                jobs.push(Job::Scratch { kind, k, seed });
            }
        }
    }
    if cfg.baselines {
        let mut targets = cfg.targets.clone();
        targets.sort_unstable();
        targets.dedup();
        for m in targets {
            for &seed in &cfg.seeds {
                jobs.push(Job::Baselines { m, seed });
            }
        }
    }
    for &kind in &cfg.ansatz {
        for (n, m) in cfg.transfer_pairs() {
            for &seed in &cfg.seeds {
                jobs.push(Job::Transfer { kind, n, m, seed });
            }
        }
    }
    jobs.dedup();
    jobs
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    /// Every row of this grid present in the store, by `run_id`.
    pub rows: Vec<RunResult>,
    pub new_rows: usize,
    pub skipped_jobs: usize,
    pub failures: Vec<CellFailure>,
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{WORKERS_ENV}={v:?} is not a count")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Run every pending job of `cfg` against the store in `dir`.
///
/// Jobs whose rows already exist are skipped, so rerunning a finished grid
/// adds nothing and an interrupted grid resumes where it stopped. A failing
/// job is recorded in the manifest and the rest of the grid continues.
pub fn run_grid(cfg: &ExperimentConfig, dir: &Path) -> Result<GridOutcome> {
    cfg.validate()?;
    let mut store = ResultStore::open(dir)?;
    store.register_config(cfg)?;
    let jobs = enumerate_jobs(cfg);
    let pending: Vec<Job> = jobs.iter().copied().filter(|j| !j.is_done(cfg, &store)).collect();
    let skipped_jobs = jobs.len() - pending.len();
    let before = store.len();

    let mut cells: Vec<(usize, u64)> = pending.iter().map(Job::eval_cell).collect();
    cells.sort_unstable();
    cells.dedup();

    let pool = worker_pool()?;
    let store = Mutex::new(store);
    let failures = Mutex::new(Vec::new());
    pool.install(|| -> Result<()> {
        let sets: BTreeMap<(usize, u64), EvalSet> = cells
            .par_iter()
            .map(|&(k, seed)| Ok(((k, seed), EvalSet::generate(k, cfg.generator, cfg.eval_instances, seed)?)))
            .collect::<Result<_>>()?;
        let (first, second): (Vec<Job>, Vec<Job>) =
            pending.iter().partition(|j| !matches!(j, Job::Transfer { .. }));
        for phase in [first, second] {
            phase.par_iter().for_each(|job| {
                let started = Instant::now();
                let set = &sets[&job.eval_cell()];
                match execute(job, cfg, set, &store) {
                    Ok(mut rows) => {
                        let secs = started.elapsed().as_secs_f64();
                        let mut st = store.lock().unwrap();
                        let res = rows.drain(..).try_for_each(|mut r| {
                            r.wallclock_seconds = secs;
                            st.insert(r).map(|_| ())
                        });
                        match res {
                            Ok(()) => {
                                st.clear_failure(&job.key());
                                log::info!("{} done in {secs:.1}s", job.key());
                            }
                            Err(e) => fail(&mut st, &failures, job, e),
                        }
                    }
                    Err(e) => fail(&mut store.lock().unwrap(), &failures, job, e),
                }
            });
        }
        Ok(())
    })?;

    let mut store = store.into_inner().unwrap();
    store.finalize()?;
    let new_rows = store.len() - before;
    let rows: Vec<RunResult> = jobs
        .iter()
        .flat_map(|j| j.row_ids(cfg))
        .filter_map(|id| store.get(&id).map(|r| (id, r.clone())))
        .collect::<BTreeMap<_, _>>()
        .into_values()
        .collect();
    Ok(GridOutcome {
        rows,
        new_rows,
        skipped_jobs,
        failures: failures.into_inner().unwrap(),
    })
}

fn fail(store: &mut ResultStore, failures: &Mutex<Vec<CellFailure>>, job: &Job, e: Error) {
    log::warn!("{} failed: {e}", job.key());
    let f = CellFailure {
        job: job.key(),
        error: e.to_string(),
    };
    if let Err(e) = store.record_failure(&f) {
        log::error!("could not record failure: {e}");
    }
    failures.lock().unwrap().push(f);
}

fn execute(job: &Job, cfg: &ExperimentConfig, set: &EvalSet, store: &Mutex<ResultStore>) -> Result<Vec<RunResult>> {
    match *job {
        Job::Scratch { kind, k, seed } => {
            let hp = cfg.scratch_hyperparams();
            let (params, records) = agent::train(cfg.generator, k, &hp, kind, cfg.layers, seed)?;
            let id = scratch_id(cfg, kind, k, seed);
            let outcomes = greedy(&params, set, cfg)?;
            save_checkpoint(store, &id, &params, &hp, seed, cfg, &records)?;
            Ok(vec![policy_row(id, RunMode::Scratch, kind, k, k, seed, &outcomes)])
        }
        Job::Baselines { m, seed } => {
            let mut rows = Vec::with_capacity(3);
            for mode in [
                RunMode::BaselineChristofides,
                RunMode::BaselineNn,
                RunMode::BaselineOptimal,
            ] {
                let mut lengths = Vec::with_capacity(set.len());
                let mut perfs = Vec::with_capacity(set.len());
                for (inst, norm) in set.instances.iter().zip(&set.normalizers) {
                    let tour: Tour = match mode {
                        RunMode::BaselineChristofides => tsp::christofides_like(inst)?,
                        RunMode::BaselineNn => tsp::nearest_neighbor(inst, agent::START_CITY)?,
                        _ => tsp::held_karp(inst)?,
                    };
                    lengths.push(tour.length);
                    perfs.push(normalize_performance(tour.length, norm).value);
                }
                rows.push(summary_row(
                    baseline_id(cfg, mode, m, seed),
                    mode,
                    mode.baseline_solver().unwrap().into(),
                    0,
                    m,
                    seed,
                    &lengths,
                    &perfs,
                ));
            }
            Ok(rows)
        }
        Job::Transfer { kind, n, m, seed } => {
            let source_id = scratch_id(cfg, kind, n, seed);
            let path = store.lock().unwrap().checkpoint_path(&source_id);
            if !path.exists() {
                return Err(Error::Missing(format!("source checkpoint {}", path.display())));
            }
            let params = Checkpoint::load(&path)?.params()?;
            let zs = greedy(&params, set, cfg)?;
            let hp = cfg.finetune_hyperparams();
            let ft_seed = derive(seed, &[label("finetune"), n as u64]);
            let (tuned, records) = agent::train_from(params, cfg.generator, m, &hp, ft_seed)?;
            let ft = greedy(&tuned, set, cfg)?;
            let ft_id = finetune_id(cfg, kind, n, m, seed);
            save_checkpoint(store, &ft_id, &tuned, &hp, ft_seed, cfg, &records)?;
            Ok(vec![
                policy_row(zero_shot_id(cfg, kind, n, m, seed), RunMode::ZeroShot, kind, n, m, seed, &zs),
                policy_row(ft_id, RunMode::Finetune, kind, n, m, seed, &ft),
            ])
        }
    }
}

fn greedy(params: &AnsatzParams, set: &EvalSet, cfg: &ExperimentConfig) -> Result<Vec<EvalOutcome>> {
    agent::evaluate_on(params, set, 0.0, cfg.hyperparams.readout, &mut seeding::rng(0))
}

fn save_checkpoint(
    store: &Mutex<ResultStore>,
    id: &str,
    params: &AnsatzParams,
    hp: &agent::Hyperparams,
    seed: u64,
    cfg: &ExperimentConfig,
    records: &[agent::EpisodeRecord],
) -> Result<()> {
    let st = store.lock().unwrap();
    st.write_telemetry(id, records)?;
    Checkpoint::new(params, hp, seed, Some(cfg.generator)).save(&st.checkpoint_path(id))
}

fn policy_row(
    id: String,
    mode: RunMode,
    kind: AnsatzKind,
    n: usize,
    m: usize,
    seed: u64,
    outcomes: &[EvalOutcome],
) -> RunResult {
    let lengths: Vec<f64> = outcomes.iter().map(|o| o.tour.length).collect();
    let perfs: Vec<f64> = outcomes.iter().map(|o| o.normalized_perf).collect();
    summary_row(id, mode, kind.as_str().into(), n, m, seed, &lengths, &perfs)
}

#[allow(clippy::too_many_arguments)]
fn summary_row(
    run_id: String,
    mode: RunMode,
    solver: String,
    n_source: usize,
    m_target: usize,
    seed: u64,
    lengths: &[f64],
    perfs: &[f64],
) -> RunResult {
    let (mean_tour_length, std_tour_length) = mean_std(lengths);
    RunResult {
        run_id,
        mode,
        solver,
        n_source,
        m_target,
        seed,
        mean_tour_length,
        std_tour_length,
        mean_normalized_perf: mean_std(perfs).0.clamp(0.0, 1.0),
        wallclock_seconds: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            sources: vec![4],
            targets: vec![5],
            seeds: vec![1],
            episodes_scratch: 20,
            episodes_finetune: 5,
            eval_instances: 4,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn one_cell_enumerates_the_expected_rows() {
        let cfg = tiny();
        let jobs = enumerate_jobs(&cfg);
        assert_eq!(jobs.len(), 4);
        let ids: Vec<String> = jobs.iter().flat_map(|j| j.row_ids(&cfg)).collect();
        assert_eq!(ids.len(), 7);
        let mut uniq = ids.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 7);
    }

    #[test]
    fn scratch_at_a_source_size_is_shared() {
        let cfg = ExperimentConfig {
            sources: vec![4, 6],
            targets: vec![6],
            seeds: vec![0],
            ..ExperimentConfig::default()
        };
        let scratch = enumerate_jobs(&cfg)
            .into_iter()
            .filter(|j| matches!(j, Job::Scratch { .. }))
            .count();
        assert_eq!(scratch, 2);
    }

    #[test]
    fn ids_follow_the_settings_that_produced_them() {
        let a = tiny();
        let b = ExperimentConfig {
            episodes_finetune: 6,
            ..tiny()
        };
        let k = AnsatzKind::Eqc;
        assert_eq!(scratch_id(&a, k, 4, 1), scratch_id(&b, k, 4, 1));
        assert_eq!(zero_shot_id(&a, k, 4, 5, 1), zero_shot_id(&b, k, 4, 5, 1));
        assert_ne!(finetune_id(&a, k, 4, 5, 1), finetune_id(&b, k, 4, 5, 1));
        let c = ExperimentConfig {
            ansatz: vec![AnsatzKind::EffSu2],
            ..tiny()
        };
        assert_eq!(
            baseline_id(&a, RunMode::BaselineNn, 5, 1),
            baseline_id(&c, RunMode::BaselineNn, 5, 1)
        );
    }

    #[test]
    fn tiny_grid_runs_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let out = run_grid(&cfg, dir.path()).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert_eq!(out.new_rows, 7);
        assert_eq!(out.rows.len(), 7);
        let csv1 = std::fs::read(dir.path().join("results.csv")).unwrap();
        let again = run_grid(&cfg, dir.path()).unwrap();
        assert_eq!(again.new_rows, 0);
        assert_eq!(again.skipped_jobs, 4);
        assert_eq!(std::fs::read(dir.path().join("results.csv")).unwrap(), csv1);
        let opt = out.rows.iter().find(|r| r.mode == RunMode::BaselineOptimal).unwrap();
        assert_eq!(opt.mean_normalized_perf, 1.0);
    }
}
