//! `bep` — catalog, sampling, metric, covering, bound and verification
//! runs over the correlated binary process toolkit, emitting CSV/JSON/DOT
//! artifacts for offline analysis.
//!
//! Exit codes: 0 success, 1 failed checks, 2 usage errors, 3 I/O errors.

use anyhow::{anyhow, Context};
use bep::covering::{covering_report, default_grid};
use bep::delta::{convergence_curve, DeltaOptions, EstimatorMode};
use bep::metrics::{empirical_moments, MetricView};
use bep::process::{catalog_specs, KindParams, ProcessSpec};
use bep::report::{canonical_config, config_hash, delta_csv, write_artifact};
use bep::verify::{run_check, CheckStatus, SUITE};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "bep", version, about = "binomial empirical process toolkit")]
struct Cli {
    /// Output directory for artifacts.
    #[arg(long, global = true, env = "BEP_OUT", default_value = "bep-out")]
    out: PathBuf,
    /// Master seed; every artifact row echoes it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for replicate-parallel estimators.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Enumerated,
    Collapsed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TreeExport {
    Dot,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the built-in catalog and write each entry as a spec JSON.
    Catalog,
    /// Draw a sample batch and dump it as CSV.
    Sample {
        #[arg(long)]
        spec: PathBuf,
        /// Component indices (defaults to 1..=truncation, capped).
        #[arg(long, value_delimiter = ',')]
        indices: Vec<u64>,
        /// Cap when materializing 1..=truncation.
        #[arg(long)]
        truncation: Option<u64>,
        #[arg(long)]
        n: usize,
    },
    /// Empirical moments next to the closed forms.
    Moments {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',')]
        indices: Vec<u64>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        replicates: u64,
    },
    /// Export a metric view (means + cross moments) as CSV.
    Metric {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',')]
        indices: Vec<u64>,
        /// Estimate the view from samples instead of closed forms.
        #[arg(long)]
        empirical: bool,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        replicates: u64,
    },
    /// Covering/packing curves and entropy integrals.
    Cover {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',')]
        indices: Vec<u64>,
        /// Explicit decreasing epsilon grid.
        #[arg(long, value_delimiter = ',')]
        eps_grid: Vec<f64>,
        /// Smallest scale of the default grid.
        #[arg(long, default_value_t = 1e-3)]
        eps_min: f64,
    },
    /// Build a skeleton tree and export it.
    Tree {
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        counts: Vec<u64>,
        #[arg(long)]
        split_budget: Option<u64>,
        #[arg(long, value_enum, default_value_t = TreeExport::Both)]
        export: TreeExport,
    },
    /// Rate functionals and covering-number bounds per sample size.
    Bounds {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        indices: Vec<u64>,
        #[arg(long, default_value_t = 1e-3)]
        eps_min: f64,
        #[arg(long, default_value_t = 1_000_000)]
        probe_depth: u64,
    },
    /// Monte Carlo estimates of the maximal deviation.
    Delta {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        replicates: u64,
        #[arg(long, value_enum, default_value_t = Mode::Collapsed)]
        mode: Mode,
        #[arg(long)]
        block_horizon: Option<u64>,
    },
    /// Run the property suites; nonzero exit on any failed check.
    Verify {
        /// `all`, or a comma list of check names.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Monte Carlo sample count for the witness checks.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

fn load_spec(path: &Path) -> anyhow::Result<ProcessSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading spec {}", path.display()))?;
    ProcessSpec::from_json(&text).map_err(|e| anyhow!("parsing spec: {e}"))
}

fn default_indices(spec: &ProcessSpec, explicit: &[u64], cap: Option<u64>) -> Vec<u64> {
    if !explicit.is_empty() {
        return explicit.to_vec();
    }
    let hi = cap.unwrap_or(64).min(spec.truncation);
    (1..=hi).collect()
}

fn emit(out_dir: &Path, name: &str, content: &str) -> anyhow::Result<PathBuf> {
    let path = out_dir.join(name);
    write_artifact(&path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(path)
}

/// Provenance stamp prepended to CSV artifacts: config hash plus the
/// fields every row was produced under.
fn stamp(fields: &[(&str, String)]) -> String {
    let canonical = canonical_config(fields);
    let mut line = format!("# config_hash={:016x}", config_hash(&canonical));
    for (k, v) in fields {
        line.push_str(&format!(" {k}={v}"));
    }
    line.push('\n');
    line
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let out = &cli.out;
    match cli.cmd {
        Cmd::Catalog => {
            for (name, spec) in catalog_specs() {
                println!(
                    "{name:<18} kind={:<10} truncation={}",
                    spec.kind_name(),
                    spec.truncation
                );
                emit(out, &format!("spec_{name}.json"), &spec.to_json())?;
            }
            Ok(0)
        }
        Cmd::Sample {
            spec,
            indices,
            truncation,
            n,
        } => {
            let spec = load_spec(&spec)?;
            let indices = default_indices(&spec, &indices, truncation);
            let batch = bep::sampling::sample_batch(
                &spec,
                &indices,
                n,
                bep::SeedLineage::new(cli.seed, 0),
            )?;
            let head = stamp(&[
                ("cmd", "sample".into()),
                ("spec", spec.kind_name().into()),
                ("truncation", spec.truncation.to_string()),
                ("n", n.to_string()),
                ("seed", cli.seed.to_string()),
            ]);
            emit(out, "sample.csv", &(head + &batch.to_csv()))?;
            Ok(0)
        }
        Cmd::Moments {
            spec,
            indices,
            n,
            replicates,
        } => {
            let spec = load_spec(&spec)?;
            let indices = default_indices(&spec, &indices, Some(16));
            let emp = empirical_moments(&spec, &indices, n, replicates, cli.seed)?;
            let cf = MetricView::closed_form(&spec, &indices)?;
            let mut csv = stamp(&[
                ("cmd", "moments".into()),
                ("spec", spec.kind_name().into()),
                ("truncation", spec.truncation.to_string()),
                ("n", n.to_string()),
                ("replicates", replicates.to_string()),
                ("seed", cli.seed.to_string()),
            ]);
            csv.push_str("i,j,empirical,closed_form,se\n");
            let se = emp.r_se.as_ref().unwrap();
            let m = indices.len();
            for a in 0..m {
                for b in a..m {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        indices[a],
                        indices[b],
                        emp.r_at(a, b),
                        cf.r_at(a, b),
                        se[a * m + b]
                    ));
                }
            }
            emit(out, "moments.csv", &csv)?;
            Ok(0)
        }
        Cmd::Metric {
            spec,
            indices,
            empirical,
            n,
            replicates,
        } => {
            let spec = load_spec(&spec)?;
            let indices = default_indices(&spec, &indices, Some(64));
            let view = if empirical {
                empirical_moments(&spec, &indices, n, replicates, cli.seed)?
            } else {
                MetricView::closed_form(&spec, &indices)?
            };
            emit(out, "metric_view.csv", &view.to_csv())?;
            let report = bep::metrics::metric_axiom_check(&view, 200_000, cli.seed)?;
            emit(
                out,
                "metric_axioms.json",
                &serde_json::to_string_pretty(&report)?,
            )?;
            Ok(0)
        }
        Cmd::Cover {
            spec,
            indices,
            eps_grid,
            eps_min,
        } => {
            let spec = load_spec(&spec)?;
            let indices = default_indices(&spec, &indices, Some(128));
            let view = MetricView::closed_form(&spec, &indices)?;
            let grid = if eps_grid.is_empty() {
                default_grid(eps_min)
            } else {
                eps_grid
            };
            let tree = match &spec.params {
                KindParams::WideTree { levels, counts } => {
                    Some(bep::trees::build_skeleton(levels, counts, None)?)
                }
                _ => None,
            };
            let report = covering_report(&view, &grid, tree.as_ref())?;
            let head = stamp(&[
                ("cmd", "cover".into()),
                ("spec", spec.kind_name().into()),
                ("truncation", spec.truncation.to_string()),
                ("indices", indices.len().to_string()),
            ]);
            emit(out, "cover.csv", &(head + &report.to_csv()))?;
            let (c_mu, d_mu) = bep::covering::entropy_integrals(&report);
            let summary = serde_json::json!({
                "c_mu": c_mu,
                "d_mu": d_mu,
                "cmu_bracket": report.cmu_bracket,
                "grid_too_coarse": report.grid_too_coarse,
                "sandwich_holds": report.sandwich_holds(),
                "nudged": report.nudged,
            });
            emit(
                out,
                "cover_summary.json",
                &serde_json::to_string_pretty(&summary)?,
            )?;
            Ok(0)
        }
        Cmd::Tree {
            levels,
            counts,
            split_budget,
            export,
        } => {
            let tree = bep::trees::build_skeleton(&levels, &counts, split_budget)?;
            println!(
                "built {} nodes, {} leaves, frontier level {}",
                tree.nodes.len(),
                tree.leaf_catalog().len(),
                tree.frontier_level
            );
            if matches!(export, TreeExport::Dot | TreeExport::Both) {
                emit(out, "tree.dot", &tree.export_dot())?;
            }
            if matches!(export, TreeExport::Json | TreeExport::Both) {
                emit(out, "tree.json", &tree.to_json())?;
            }
            Ok(0)
        }
        Cmd::Bounds {
            spec,
            n,
            indices,
            eps_min,
            probe_depth,
        } => {
            let spec = load_spec(&spec)?;
            let indices = default_indices(&spec, &indices, Some(128));
            let view = MetricView::closed_form(&spec, &indices)?;
            let report = covering_report(&view, &default_grid(eps_min), None)?;
            let (c_mu, d_mu) = bep::covering::entropy_integrals(&report);
            let cover: Vec<(f64, u64)> = report
                .epsilon_grid
                .iter()
                .copied()
                .zip(report.n_upper.iter().copied())
                .collect();
            let rule = match &spec.params {
                KindParams::Product { rule } => Some(rule.clone()),
                _ => None,
            };
            let mut csv = stamp(&[
                ("cmd", "bounds".into()),
                ("spec", spec.kind_name().into()),
                ("truncation", spec.truncation.to_string()),
                ("probe_depth", probe_depth.to_string()),
            ]);
            csv.push_str(bep::bounds::BoundSet::csv_header());
            csv.push('\n');
            let mut sets = Vec::new();
            for &nn in &n {
                let (t, s, regime, rate) = match &rule {
                    Some(r) => {
                        let t = bep::bounds::functional_t(r, probe_depth);
                        let s = bep::bounds::functional_s(r, probe_depth);
                        let (reg, rate) = bep::bounds::independent_rate(r, nn, probe_depth);
                        (Some(t), Some(s), Some(reg), Some(rate))
                    }
                    None => (None, None, None, None),
                };
                let set = bep::bounds::BoundSet {
                    n: nn,
                    t_value: t,
                    s_value: s,
                    indep_regime: regime,
                    indep_rate: rate,
                    chaining: bep::bounds::chaining_bound(&cover, c_mu, nn),
                    dudley: bep::bounds::dudley_bound(d_mu, nn),
                    lower_candidates: vec![],
                };
                csv.push_str(&set.csv_row());
                csv.push('\n');
                sets.push(set);
            }
            emit(out, "bounds.csv", &csv)?;
            emit(out, "bounds.json", &serde_json::to_string_pretty(&sets)?)?;
            Ok(0)
        }
        Cmd::Delta {
            spec,
            n,
            replicates,
            mode,
            block_horizon,
        } => {
            let spec = load_spec(&spec)?;
            let mode = match mode {
                Mode::Enumerated => EstimatorMode::Enumerated,
                Mode::Collapsed => EstimatorMode::Collapsed,
            };
            let opts = DeltaOptions {
                ci_level: 0.95,
                threads: cli.threads,
                block_horizon,
            };
            let ests = convergence_curve(&spec, &n, replicates, mode, cli.seed, &opts)?;
            let hash = config_hash(&canonical_config(&[
                ("cmd", "delta".into()),
                ("spec", spec.to_json()),
                ("n", format!("{n:?}")),
                ("replicates", replicates.to_string()),
                ("mode", format!("{mode:?}")),
                ("seed", cli.seed.to_string()),
            ]));
            for e in &ests {
                println!(
                    "n={:<6} estimate={:.6} ci=[{:.6},{:.6}] ({})",
                    e.n,
                    e.estimate,
                    e.ci_low(),
                    e.ci_high(),
                    e.truncation
                );
            }
            emit(out, "delta.csv", &delta_csv(&spec, &ests, hash))?;
            Ok(0)
        }
        Cmd::Verify { suite, samples } => {
            let names: Vec<&str> = if suite == "all" {
                SUITE.to_vec()
            } else {
                suite.split(',').collect()
            };
            let mut failed = 0;
            let mut rows = Vec::new();
            for name in names {
                let report = run_check(name, cli.seed, samples)?;
                let line = format!(
                    "{:<28} {:<6} margin={:+.3e}",
                    report.name,
                    match report.status {
                        CheckStatus::Pass => "pass",
                        CheckStatus::Fail => "FAIL",
                        CheckStatus::Inconclusive => "inconclusive",
                    },
                    report.margin
                );
                println!("{line}");
                if report.status == CheckStatus::Fail {
                    failed += 1;
                }
                emit(
                    out,
                    &format!("verify_{}.json", report.name),
                    &serde_json::to_string_pretty(&report)?,
                )?;
                rows.push(line);
            }
            emit(out, "verify_summary.txt", &(rows.join("\n") + "\n"))?;
            Ok(if failed > 0 { 1 } else { 0 })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            // I/O-ish failures exit 3; anything else is a usage problem
            let io = e
                .chain()
                .any(|c| c.downcast_ref::<std::io::Error>().is_some());
            std::process::exit(if io { 3 } else { 2 });
        }
    }
}
