//! Figures and the Markdown summary built from a results store.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::{Path, PathBuf};

use eqc_transfer::harness::{read_bounds, read_results, read_telemetry, BoundMode, BoundRow, RunMode, RunResult};

use crate::svg::{self, Marker, Panel, Series};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Figure {
    TransferPanels,
    BoundOverlay,
    LearningCurves,
}

#[derive(Clone, Debug)]
pub struct ReportSpec {
    pub results: PathBuf,
    pub out_dir: PathBuf,
    pub figures: Vec<Figure>,
    /// Defaults to `bounds.csv` next to the results file.
    pub bounds: Option<PathBuf>,
    pub bound_mode: BoundMode,
}

#[derive(Debug, Default)]
pub struct ReportOutput {
    pub files: Vec<PathBuf>,
    pub skipped: Vec<String>,
}

type CellKey = (String, usize, usize);

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    (mean, (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Rows grouped by `(mode, solver, n_source, m_target)`, one per seed.
struct Grouped {
    seeds: BTreeSet<u64>,
    groups: BTreeMap<(RunMode, String, usize, usize), BTreeMap<u64, RunResult>>,
}

impl Grouped {
    fn new(rows: Vec<RunResult>) -> Result<Self, CliError> {
        let mut seeds = BTreeSet::new();
        let mut groups: BTreeMap<_, BTreeMap<u64, RunResult>> = BTreeMap::new();
        for r in rows {
            seeds.insert(r.seed);
            let key = (r.mode, r.solver.clone(), r.n_source, r.m_target);
            let seed = r.seed;
            if groups.entry(key).or_default().insert(seed, r).is_some() {
                return Err(CliError::invalid(format!("duplicate row for seed {seed}")));
            }
        }
        Ok(Grouped { seeds, groups })
    }

    /// Per-seed rows when every seed is present.
    fn complete(&self, mode: RunMode, solver: &str, n: usize, m: usize) -> Option<Vec<&RunResult>> {
        let g = self.groups.get(&(mode, solver.to_string(), n, m))?;
        (g.len() == self.seeds.len()).then(|| g.values().collect())
    }

    fn cost(&self, mode: RunMode, solver: &str, n: usize, m: usize) -> Option<(f64, f64)> {
        self.complete(mode, solver, n, m)
            .map(|rs| mean_std(&rs.iter().map(|r| r.mean_tour_length).collect::<Vec<_>>()))
    }

    fn perf(&self, mode: RunMode, solver: &str, n: usize, m: usize) -> Option<(f64, f64)> {
        self.complete(mode, solver, n, m)
            .map(|rs| mean_std(&rs.iter().map(|r| r.mean_normalized_perf).collect::<Vec<_>>()))
    }

    /// Transfer cells `(kind, n, m)`, split into complete and incomplete.
    fn transfer_cells(&self) -> (Vec<CellKey>, Vec<String>) {
        let mut keys = BTreeSet::new();
        for (mode, solver, n, m) in self.groups.keys() {
            if matches!(mode, RunMode::ZeroShot | RunMode::Finetune) {
                keys.insert((solver.clone(), *n, *m));
            }
        }
        let mut ok = Vec::new();
        let mut skipped = Vec::new();
        for (kind, n, m) in keys {
            if self.complete(RunMode::ZeroShot, &kind, n, m).is_some()
                && self.complete(RunMode::Finetune, &kind, n, m).is_some()
            {
                ok.push((kind, n, m));
            } else {
                skipped.push(format!("{kind} {n}->{m}: zero-shot or fine-tuned rows missing for some seeds"));
            }
        }
        (ok, skipped)
    }
}

pub fn run_report(spec: &ReportSpec) -> Result<ReportOutput, CliError> {
    if !spec.results.exists() {
        return Err(CliError::io(format!("{} does not exist", spec.results.display())));
    }
    let rows = read_results(&spec.results).map_err(CliError::from_lib)?;
    if rows.is_empty() {
        return Err(CliError::io(format!("{}: no rows", spec.results.display())));
    }
    let data = Grouped::new(rows)?;
    std::fs::create_dir_all(&spec.out_dir)
        .map_err(|e| CliError::io(format!("{}: {e}", spec.out_dir.display())))?;
    let store_dir = spec.results.parent().unwrap_or(Path::new(".")).to_path_buf();
    let bounds_path = spec.bounds.clone().unwrap_or_else(|| store_dir.join("bounds.csv"));
    let bounds = if bounds_path.exists() {
        Some(read_bounds(&bounds_path).map_err(CliError::from_lib)?)
    } else {
        None
    };

    let mut out = ReportOutput::default();
    let (cells, skipped) = data.transfer_cells();
    out.skipped.extend(skipped);
    let write = |name: &str, body: String, out: &mut ReportOutput| -> Result<(), CliError> {
        let p = spec.out_dir.join(name);
        std::fs::write(&p, body).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
        out.files.push(p);
        Ok(())
    };

    let kinds: BTreeSet<String> = cells.iter().map(|c| c.0.clone()).collect();
    if spec.figures.contains(&Figure::TransferPanels) {
        for kind in &kinds {
            let panels = transfer_panels(&data, &cells, kind);
            write(&format!("transfer_panels_{kind}.svg"), svg::render(&panels, 4), &mut out)?;
        }
    }
    if spec.figures.contains(&Figure::BoundOverlay) {
        match &bounds {
            Some(b) => {
                let panels = bound_panels(&data, b, spec.bound_mode);
                write("bound_overlay.svg", svg::render(&panels, 4), &mut out)?;
            }
            None => out
                .skipped
                .push(format!("bound overlay: {} not found", bounds_path.display())),
        }
    }
    if spec.figures.contains(&Figure::LearningCurves) {
        let (panels, missing) = learning_panels(&data, &store_dir.join("telemetry"))?;
        out.skipped.extend(missing);
        if !panels.is_empty() {
            write("learning_curves.svg", svg::render(&panels, 4), &mut out)?;
        }
    }
    let summary = summary_markdown(&data, &cells, bounds.as_deref(), spec.bound_mode, &out.skipped);
    write("summary.md", summary, &mut out)?;
    Ok(out)
}

fn transfer_panels(data: &Grouped, cells: &[CellKey], kind: &str) -> Vec<Panel> {
    let sources: BTreeSet<usize> = cells.iter().filter(|c| c.0 == kind).map(|c| c.1).collect();
    sources
        .into_iter()
        .map(|n| {
            let targets: Vec<usize> = cells
                .iter()
                .filter(|c| c.0 == kind && c.1 == n)
                .map(|c| c.2)
                .collect();
            let mut zs = Series::new("zero-shot", "#1f77b4");
            let mut ft = Series::new("fine-tuned", "#ff7f0e").marker(Marker::Square);
            let mut sc = Series::new("scratch", "#2ca02c");
            let mut ch = Series::new("Christofides", "#555555").dashed().marker(Marker::None);
            let mut opt = Series::new("optimal", "#999999").dashed().marker(Marker::None);
            for &m in &targets {
                let pt = |v: Option<(f64, f64)>| v.map(|(a, b)| (m as f64, a, b));
                zs.points.extend(pt(data.cost(RunMode::ZeroShot, kind, n, m)));
                ft.points.extend(pt(data.cost(RunMode::Finetune, kind, n, m)));
                sc.points.extend(pt(data.cost(RunMode::Scratch, kind, m, m)));
                let no_err = |v: Option<(f64, f64)>| v.map(|(a, _)| (m as f64, a, 0.0));
                ch.points
                    .extend(no_err(data.cost(RunMode::BaselineChristofides, "christofides", 0, m)));
                opt.points
                    .extend(no_err(data.cost(RunMode::BaselineOptimal, "optimal", 0, m)));
            }
            Panel {
                title: format!("{kind}, trained on n = {n}"),
                x_label: "target size m".into(),
                y_label: "mean tour cost".into(),
                series: vec![zs, ft, sc, ch, opt],
                y_range: None,
            }
        })
        .collect()
}

fn bound_panels(data: &Grouped, bounds: &[BoundRow], mode: BoundMode) -> Vec<Panel> {
    let summary: Vec<&BoundRow> = bounds
        .iter()
        .filter(|r| r.mode == mode && r.seed.is_none())
        .collect();
    let sources: BTreeSet<usize> = summary.iter().map(|r| r.n).collect();
    sources
        .into_iter()
        .map(|n| {
            let mut star = Series::new("source task", "#d62728").marker(Marker::Star).no_line();
            let mut zs = Series::new("zero-shot", "#1f77b4").no_line();
            let mut lb = Series::new("lower bound", "#d62728").dashed().marker(Marker::None);
            let mut ft = Series::new("fine-tuned", "#ff7f0e").marker(Marker::Square).no_line();
            for r in summary.iter().filter(|r| r.n == n) {
                let spread = mean_std(
                    &bounds
                        .iter()
                        .filter(|b| b.mode == mode && b.n == n && b.m == r.m && b.seed.is_some())
                        .map(|b| b.empirical)
                        .collect::<Vec<_>>(),
                )
                .1;
                let x = r.m as f64;
                if r.m == n {
                    star.points.push((x, r.p_hat_n, 0.0));
                } else {
                    zs.points.push((x, r.empirical, spread));
                    if let Some((p, s)) = data.perf(RunMode::Finetune, "eqc", n, r.m) {
                        ft.points.push((x, p, s));
                    }
                }
                lb.points.push((x, r.lower_bound.clamp(0.0, 1.0), 0.0));
            }
            Panel {
                title: format!("n = {n} ({mode})"),
                x_label: "target size m".into(),
                y_label: "normalized performance".into(),
                series: vec![star, zs, lb, ft],
                y_range: Some((-0.05, 1.05)),
            }
        })
        .collect()
}

fn learning_panels(data: &Grouped, telemetry: &Path) -> Result<(Vec<Panel>, Vec<String>), CliError> {
    const WINDOW: usize = 50;
    let mut panels = Vec::new();
    let mut missing = Vec::new();
    for ((mode, solver, n, m), rows) in &data.groups {
        if *mode != RunMode::Scratch || n != m || rows.len() != data.seeds.len() {
            continue;
        }
        let mut curves = Vec::new();
        for r in rows.values() {
            let p = telemetry.join(format!("{}.csv", r.run_id));
            if !p.exists() {
                break;
            }
            curves.push(read_telemetry(&p).map_err(CliError::from_lib)?);
        }
        if curves.len() != rows.len() || curves.is_empty() {
            missing.push(format!("learning curve {solver} k={n}: telemetry incomplete"));
            continue;
        }
        let len = curves.iter().map(Vec::len).min().unwrap_or(0);
        let avg: Vec<f64> = (0..len)
            .map(|e| curves.iter().map(|c| c[e].normalized_perf).sum::<f64>() / curves.len() as f64)
            .collect();
        let mut s = Series::new(format!("{} seeds", curves.len()), "#1f77b4").marker(Marker::None);
        for end in (WINDOW.min(len)..=len).step_by(10) {
            let w = &avg[end.saturating_sub(WINDOW)..end];
            if !w.is_empty() {
                s.points.push((end as f64, w.iter().sum::<f64>() / w.len() as f64, 0.0));
            }
        }
        panels.push(Panel {
            title: format!("{solver}, k = {n}"),
            x_label: "episode".into(),
            y_label: format!("normalized performance ({WINDOW}-episode mean)"),
            series: vec![s],
            y_range: Some((0.0, 1.0)),
        });
    }
    Ok((panels, missing))
}

fn fmt_ms(v: Option<(f64, f64)>) -> String {
    v.map_or_else(|| "n/a".into(), |(m, s)| format!("{m:.3} ± {s:.3}"))
}

fn summary_markdown(
    data: &Grouped,
    cells: &[CellKey],
    bounds: Option<&[BoundRow]>,
    mode: BoundMode,
    skipped: &[String],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Transfer summary\n");
    let _ = writeln!(s, "{} seeds per cell. Costs are means over seeds of per-seed mean tour length, ± the standard deviation across seeds.\n", data.seeds.len());
    let _ = writeln!(
        s,
        "| ansatz | n | m | zero-shot cost | fine-tuned cost | scratch cost | Christofides | optimal | zero-shot perf | fine-tuned perf |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|");
    for (kind, n, m) in cells {
        let perf = |mode| {
            data.perf(mode, kind, *n, *m)
                .map_or_else(|| "n/a".into(), |(p, _)| format!("{p:.3}"))
        };
        let _ = writeln!(
            s,
            "| {kind} | {n} | {m} | {} | {} | {} | {} | {} | {} | {} |",
            fmt_ms(data.cost(RunMode::ZeroShot, kind, *n, *m)),
            fmt_ms(data.cost(RunMode::Finetune, kind, *n, *m)),
            fmt_ms(data.cost(RunMode::Scratch, kind, *m, *m)),
            fmt_ms(data.cost(RunMode::BaselineChristofides, "christofides", 0, *m)),
            fmt_ms(data.cost(RunMode::BaselineOptimal, "optimal", 0, *m)),
            perf(RunMode::ZeroShot),
            perf(RunMode::Finetune),
        );
    }
    if let Some(b) = bounds {
        let _ = writeln!(s, "\n## Bound overlay ({mode})\n");
        let _ = writeln!(s, "| n | m | P̂_n | empirical | gen_error | d_param | d_struct | lower bound | above |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|");
        for r in b.iter().filter(|r| r.mode == mode && r.seed.is_none()) {
            let _ = writeln!(
                s,
                "| {} | {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {} |",
                r.n,
                r.m,
                r.p_hat_n,
                r.empirical,
                r.gen_error,
                r.d_param,
                r.d_struct,
                r.lower_bound,
                if r.empirical_above_bound { "yes" } else { "no" }
            );
        }
    }
    if !skipped.is_empty() {
        let _ = writeln!(s, "\n## Skipped\n");
        for k in skipped {
            let _ = writeln!(s, "- {k}");
        }
    }
    s
}
