use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{baseline_id, scratch_id, zero_shot_id};
use super::{fmt_g, mean_std, ExperimentConfig, ResultStore, RunMode};
use crate::agent::{self, EvalSet};
use crate::ansatz::{AnsatzKind, Checkpoint};
use crate::bound::{self, BoundInputs, SizeStats};
use crate::seeding::{self, derive, label};
use crate::{Error, Result};

pub const BOUNDS_FILE: &str = "bounds.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// Parametric penalty `α_n (m−n)/m` with `α_n` fitted to the measured gaps.
    Fitted,
    /// Parametric penalty from the worst-case constants.
    Firstprinciples,
}

impl BoundMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMode::Fitted => "fitted",
            BoundMode::Firstprinciples => "firstprinciples",
        }
    }
}

impl std::str::FromStr for BoundMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fitted" => Ok(BoundMode::Fitted),
            "firstprinciples" | "first-principles" => Ok(BoundMode::Firstprinciples),
            other => Err(Error::InvalidArgument(format!("unknown bound mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for BoundMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What is known about one trained source policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceEstimate {
    pub n: usize,
    pub seed: u64,
    /// Mean greedy normalised performance on fresh size-`n` instances.
    pub p_hat: f64,
    pub theta_l1: f64,
    pub theta_max: f64,
    /// Performance on the grid's own size-`n` evaluation set.
    pub empirical_at_n: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlayInputs {
    pub sources: Vec<SourceEstimate>,
    /// Zero-shot performance by `(n, m, seed)`.
    pub zero_shot: BTreeMap<(usize, usize, u64), f64>,
    pub size_stats: Vec<SizeStats>,
    pub m_episodes: usize,
    pub delta: f64,
    pub l_u: f64,
    pub a_norm: f64,
}

/// One line of `bounds.csv`. `seed = None` marks the across-seed mean of a
/// `(n, m, mode)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub n: usize,
    pub m: usize,
    pub seed: Option<u64>,
    pub mode: BoundMode,
    pub p_hat_n: f64,
    pub empirical: f64,
    pub gen_error: f64,
    pub d_param: f64,
    pub d_struct: f64,
    pub lower_bound: f64,
    pub empirical_above_bound: bool,
}

/// Bound rows for every source size, at `m = n` and at every target with
/// zero-shot data, in both modes. `C′` is fitted from `size_stats` (zero
/// when fewer than two sizes are known) and `α_n` from the seed-mean gaps.
pub fn overlay_rows(inputs: &OverlayInputs) -> Result<Vec<BoundRow>> {
    let sizes: BTreeSet<usize> = inputs.size_stats.iter().map(|s| s.k).collect();
    let c_prime = if sizes.len() >= 2 {
        bound::fit_c_prime(&inputs.size_stats)?
    } else {
        0.0
    };
    let mut by_n: BTreeMap<usize, Vec<&SourceEstimate>> = BTreeMap::new();
    for s in &inputs.sources {
        by_n.entry(s.n).or_default().push(s);
    }
    let mut rows = Vec::new();
    for (&n, sources) in &by_n {
        let targets: BTreeSet<usize> = inputs
            .zero_shot
            .keys()
            .filter(|(sn, m, _)| *sn == n && *m > n)
            .map(|&(_, m, _)| m)
            .collect();
        let mut gaps = Vec::new();
        for &m in &targets {
            let diffs: Vec<f64> = sources
                .iter()
                .filter_map(|s| inputs.zero_shot.get(&(n, m, s.seed)).map(|z| s.p_hat - z))
                .collect();
            let gap = mean_std(&diffs).0 - bound::d_struct(n, m, c_prime);
            gaps.push((n, m, gap.max(0.0)));
        }
        let alpha = if gaps.is_empty() { 0.0 } else { bound::fit_alpha(&gaps)? };

        for m in std::iter::once(n).chain(targets) {
            for mode in [BoundMode::Fitted, BoundMode::Firstprinciples] {
                let mut cell = Vec::new();
                for s in sources {
                    let empirical = if m == n {
                        s.empirical_at_n
                    } else {
                        match inputs.zero_shot.get(&(n, m, s.seed)) {
                            Some(&z) => z,
                            None => continue,
                        }
                    };
                    let bi = BoundInputs {
                        n,
                        m,
                        theta_l1: s.theta_l1,
                        theta_max: s.theta_max,
                        a_norm: inputs.a_norm,
                        l_u: inputs.l_u,
                        c_prime,
                        m_episodes: inputs.m_episodes,
                        delta: inputs.delta,
                        alpha_n: (mode == BoundMode::Fitted).then_some(alpha),
                    };
                    let b = bound::transfer_lower_bound(s.p_hat, &bi)?;
                    cell.push(BoundRow {
                        n,
                        m,
                        seed: Some(s.seed),
                        mode,
                        p_hat_n: s.p_hat,
                        empirical,
                        gen_error: b.gen_error,
                        d_param: b.d_param,
                        d_struct: b.d_struct,
                        lower_bound: b.lower_bound,
                        empirical_above_bound: empirical >= b.lower_bound,
                    });
                }
                if cell.is_empty() {
                    continue;
                }
                let avg = |f: fn(&BoundRow) -> f64| mean_std(&cell.iter().map(f).collect::<Vec<_>>()).0;
                let (empirical, lower_bound) = (avg(|r| r.empirical), avg(|r| r.lower_bound));
                let summary = BoundRow {
                    n,
                    m,
                    seed: None,
                    mode,
                    p_hat_n: avg(|r| r.p_hat_n),
                    empirical,
                    gen_error: avg(|r| r.gen_error),
                    d_param: avg(|r| r.d_param),
                    d_struct: avg(|r| r.d_struct),
                    lower_bound,
                    empirical_above_bound: empirical >= lower_bound,
                };
                rows.extend(cell);
                rows.push(summary);
            }
        }
    }
    Ok(rows)
}

/// Compute the EQC bound overlay for the grid in `dir` and write
/// `bounds.csv` next to `results.csv`.
pub fn run_bound_overlay(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<BoundRow>> {
    cfg.validate()?;
    let store = ResultStore::open(dir)?;
    let kind = AnsatzKind::Eqc;
    let mut sources_needed = Vec::new();
    for &n in &cfg.sources {
        for &seed in &cfg.seeds {
            let id = scratch_id(cfg, kind, n, seed);
            let row = store
                .get(&id)
                .ok_or_else(|| Error::Missing(format!("scratch row for eqc n={n} seed={seed}")))?;
            let ckpt = store.checkpoint_path(&id);
            if !ckpt.exists() {
                return Err(Error::Missing(format!("checkpoint {}", ckpt.display())));
            }
            sources_needed.push((n, seed, row.mean_normalized_perf, ckpt));
        }
    }
    let mut zero_shot = BTreeMap::new();
    for (n, m) in cfg.transfer_pairs() {
        for &seed in &cfg.seeds {
            let row = store
                .get(&zero_shot_id(cfg, kind, n, m, seed))
                .ok_or_else(|| Error::Missing(format!("zero-shot row for eqc {n}->{m} seed={seed}")))?;
            zero_shot.insert((n, m, seed), row.mean_normalized_perf);
        }
    }

    let sources = sources_needed
        .par_iter()
        .map(|(n, seed, empirical_at_n, ckpt)| {
            let params = Checkpoint::load(ckpt)?.params()?;
            let set = EvalSet::generate(
                *n,
                cfg.generator,
                cfg.bound.p_hat_instances,
                derive(*seed, &[label("p-hat")]),
            )?;
            let out = agent::evaluate_on(&params, &set, 0.0, cfg.hyperparams.readout, &mut seeding::rng(0))?;
            let perfs: Vec<f64> = out.iter().map(|o| o.normalized_perf).collect();
            Ok(SourceEstimate {
                n: *n,
                seed: *seed,
                p_hat: mean_std(&perfs).0,
                theta_l1: params.l1_norm(),
                theta_max: params.max_abs(),
                empirical_at_n: *empirical_at_n,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sizes: BTreeSet<usize> = cfg.sources.iter().chain(&cfg.targets).copied().collect();
    let size_stats = sizes
        .into_par_iter()
        .map(|k| size_stats(cfg, &store, k))
        .collect::<Result<Vec<_>>>()?;

    let rows = overlay_rows(&OverlayInputs {
        sources,
        zero_shot,
        size_stats,
        m_episodes: cfg.episodes_scratch,
        delta: cfg.bound.delta,
        l_u: cfg.bound.l_u,
        a_norm: cfg.a_norm(),
    })?;
    write_bounds(&dir.join(BOUNDS_FILE), &rows)?;
    Ok(rows)
}

/// Mean optimum and nearest-neighbour length at size `k`, from the baseline
/// rows when every seed has them, otherwise from regenerated evaluation sets.
fn size_stats(cfg: &ExperimentConfig, store: &ResultStore, k: usize) -> Result<SizeStats> {
    let lookup = |mode: RunMode| -> Option<Vec<f64>> {
        cfg.seeds
            .iter()
            .map(|&s| store.get(&baseline_id(cfg, mode, k, s)).map(|r| r.mean_tour_length))
            .collect()
    };
    if let (Some(opt), Some(nn)) = (lookup(RunMode::BaselineOptimal), lookup(RunMode::BaselineNn)) {
        return Ok(SizeStats {
            k,
            mean_l_opt: mean_std(&opt).0,
            mean_l_max: mean_std(&nn).0,
        });
    }
    let (mut opt, mut max) = (Vec::new(), Vec::new());
    for &seed in &cfg.seeds {
        let set = EvalSet::generate(k, cfg.generator, cfg.eval_instances, seed)?;
        for n in &set.normalizers {
            opt.push(n.l_opt);
            max.push(n.l_max);
        }
    }
    Ok(SizeStats {
        k,
        mean_l_opt: mean_std(&opt).0,
        mean_l_max: mean_std(&max).0,
    })
}

const BOUND_HEADER: [&str; 11] = [
    "n",
    "m",
    "seed",
    "mode",
    "p_hat_n",
    "empirical",
    "gen_error",
    "d_param",
    "d_struct",
    "lower_bound",
    "empirical_above_bound",
];

pub fn write_bounds(path: &Path, rows: &[BoundRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(BOUND_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.seed.map_or_else(|| "all".to_string(), |s| s.to_string()),
            r.mode.to_string(),
            fmt_g(r.p_hat_n),
            fmt_g(r.empirical),
            fmt_g(r.gen_error),
            fmt_g(r.d_param),
            fmt_g(r.d_struct),
            fmt_g(r.lower_bound),
            r.empirical_above_bound.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_bounds(path: &Path) -> Result<Vec<BoundRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let bad = |i: usize| Error::InvalidArgument(format!("{}: bad field {}", path.display(), BOUND_HEADER[i]));
        let get = |i: usize| rec.get(i).ok_or_else(|| bad(i));
        let f = |i: usize| -> Result<f64> { get(i)?.parse().map_err(|_| bad(i)) };
        let u = |i: usize| -> Result<usize> { get(i)?.parse().map_err(|_| bad(i)) };
        out.push(BoundRow {
            n: u(0)?,
            m: u(1)?,
            seed: match get(2)? {
                "all" => None,
                s => Some(s.parse().map_err(|_| bad(2))?),
            },
            mode: get(3)?.parse()?,
            p_hat_n: f(4)?,
            empirical: f(5)?,
            gen_error: f(6)?,
            d_param: f(7)?,
            d_struct: f(8)?,
            lower_bound: f(9)?,
            empirical_above_bound: get(10)?.parse().map_err(|_| bad(10))?,
        });
    }
    Ok(out)
}
