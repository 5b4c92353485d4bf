//! Command-line front end: `find` locates attractors and writes them as
//! JSON, `continue` sweeps a parameter and writes the measures CSV, and
//! `oracle-convergence` runs the sample-size convergence study on the
//! radial system. Exit codes: 0 success, 1 configuration error, 2 empty
//! result.

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::attractors::{map_ic_recurrence, AttractorStore};
use crate::config::RunConfig;
use crate::continuation::{global_continuation, measures_along_continuation, MeasurePass, ParameterCurve};
use crate::error::ContinuationError;
use crate::grid::Grid;
use crate::local::local_measures;
use crate::nonlocal::{accumulate, IcSampler, UniformBoxSampler, WeightFunction};
use crate::output;
use crate::systems;

#[derive(Parser)]
#[command(name = "resilience", about = "Attractors and resilience measures of ODE systems", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find attractors at one parameter point and write attractors.json
    Find(CommonArgs),
    /// Sweep a parameter, track attractors, and write measures.csv
    Continue(CommonArgs),
    /// Convergence of the oracle estimates vs sample size (convergence.csv)
    OracleConvergence(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key-value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// RNG seed (shorthand for --set seed=...)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores (results do not depend on this)
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (shorthand for --set out_dir=...)
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let (args, action): (&CommonArgs, fn(&RunConfig) -> anyhow::Result<i32>) = match &cli.command {
        Command::Find(a) => (a, cmd_find),
        Command::Continue(a) => (a, cmd_continue),
        Command::OracleConvergence(a) => (a, cmd_oracle_convergence),
    };

    let mut sets: Vec<(String, String)> = Vec::new();
    for s in &args.sets {
        match s.split_once('=') {
            Some((k, v)) => sets.push((k.to_string(), v.to_string())),
            None => {
                eprintln!("error: --set expects KEY=VALUE, got `{s}`");
                return 1;
            }
        }
    }
    if let Some(seed) = args.seed {
        sets.push(("seed".into(), seed.to_string()));
    }
    if let Some(w) = args.workers {
        sets.push(("workers".into(), w.to_string()));
    }
    if let Some(out) = &args.out {
        sets.push(("out_dir".into(), out.display().to_string()));
    }

    let cfg = match RunConfig::load(args.config.as_deref(), &sets) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if cfg.workers > 0 {
        // results are independent of the pool size; ignore re-initialization
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    match action(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs the recurrence pass with `seeds_per_step` random seeds.
fn find_attractors(cfg: &RunConfig, grid: &Grid) -> anyhow::Result<AttractorStore> {
    let field = cfg.field();
    let mut store = AttractorStore::new(grid);
    let sampler = UniformBoxSampler::new(grid.bounds(), cfg.seed, 0);
    let icfg = cfg.find_integrator();
    for i in 0..cfg.seeds_per_step as u64 {
        let ic = sampler.sample(i);
        map_ic_recurrence(&field, &ic, grid, &cfg.recurrence, &icfg, &mut store)?;
    }
    Ok(store)
}

fn cmd_find(cfg: &RunConfig) -> anyhow::Result<i32> {
    let grid = Grid::new(&cfg.grid);
    let store = find_attractors(cfg, &grid)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let field = cfg.field();
    let doc = output::attractors_json(cfg.system.name, &cfg.system.param_names, field.params(), &store);
    let path = cfg.out_dir.join("attractors.json");
    fs::write(&path, doc)?;
    println!("{} attractors -> {}", store.len(), path.display());
    Ok(if store.is_empty() { 2 } else { 0 })
}

fn cmd_continue(cfg: &RunConfig) -> anyhow::Result<i32> {
    let grid = Grid::new(&cfg.grid);
    let field = cfg.field();
    let pidx = cfg
        .system
        .param_index(&cfg.sweep.param)
        .expect("sweep parameter validated at load time");
    let curve = ParameterCurve::single(pidx, &cfg.sweep.values())?;

    let stores = match global_continuation(
        &field,
        &curve,
        &grid,
        &cfg.recurrence,
        &cfg.find_integrator(),
        cfg.seeds_per_step,
        cfg.seed,
        cfg.match_threshold,
    ) {
        Ok(s) => s,
        Err(ContinuationError::NoAttractorsFound { step, value }) => {
            eprintln!("no attractors found at step {step} (parameter {value})");
            return Ok(2);
        }
        Err(e) => return Err(e.into()),
    };

    fs::create_dir_all(&cfg.out_dir)?;
    let mut pass = MeasurePass::new(
        cfg.sample_box.clone(),
        cfg.n_samples,
        cfg.epsilon,
        cfg.finite_time,
        cfg.seed,
    );
    pass.weights = WeightFunction::uniform();
    pass.lyap_transient = cfg.lyap_transient;
    pass.lyap_total = cfg.lyap_total;

    let dump_dir = cfg.out_dir.clone();
    let dump = cfg.dump_accumulators;
    let result = measures_along_continuation(
        &field,
        &stores,
        &curve,
        &pass,
        &cfg.integrator(),
        move |k, acc| {
            if dump {
                let path = dump_dir.join(format!("accumulator_{k:04}.csv"));
                if let Ok(f) = fs::File::create(&path) {
                    let mut w = BufWriter::new(f);
                    let _ = output::write_accumulator(&mut w, acc);
                }
            }
        },
    )?;

    let csv = output::measures_csv(&result);
    let path = cfg.out_dir.join("measures.csv");
    fs::write(&path, csv)?;
    println!("{} steps -> {}", result.steps.len(), path.display());
    Ok(0)
}

fn cmd_oracle_convergence(cfg: &RunConfig) -> anyhow::Result<i32> {
    if cfg.system.name != "oracle" {
        eprintln!("error: oracle-convergence requires `system = oracle`, got `{}`", cfg.system.name);
        return Ok(1);
    }
    let field = cfg.field();
    let rate = field.params()[0];
    let (_, answers) = systems::radial_oracle(rate);
    let grid = Grid::new(&cfg.grid);
    let store = find_attractors(cfg, &grid)?;
    if store.is_empty() {
        eprintln!("no attractors found for the oracle system");
        return Ok(2);
    }
    let box_area: f64 = cfg.sample_box.iter().map(|(lo, hi)| hi - lo).product();
    let truth_med_beta = answers.median_pace(cfg.epsilon);
    let local = local_measures(&field, store.get(1).expect("id 1"), 10.0 * store.cell_diagonal())?
        .expect("oracle attractor is a point");

    let mut rows = String::from("N,seed,measure,estimate,truth,abs_error\n");
    let weights = WeightFunction::uniform();
    let icfg = cfg.integrator();
    for (ni, &n) in cfg.convergence_ns.iter().enumerate() {
        for s in 0..cfg.convergence_seeds as u64 {
            let sampler = UniformBoxSampler::new(
                cfg.sample_box.clone(),
                cfg.seed.wrapping_add(s),
                (1 << 21) + ni as u64,
            );
            let acc = accumulate(&field, &store, &sampler, n, cfg.epsilon, &weights, &icfg)?;
            let estimates: Vec<(&str, f64, f64)> = vec![
                ("t_R", local.return_time, answers.return_time()),
                ("R0", local.reactivity, answers.reactivity()),
                ("rho_max", local.max_amplification, answers.max_amplification().0),
                ("t_max", local.max_amplification_time, answers.max_amplification().1),
                ("s_min", acc.minimal_critical_shock(1)?, answers.min_critical_shock()),
                ("s_max", acc.maximal_noncritical_shock(1).unwrap_or(f64::NAN), answers.max_noncritical_shock()),
                ("S", acc.basin_stability(1)?, answers.basin_stability(box_area)),
                ("med_tau", acc.median_convergence_time(1).unwrap_or(f64::NAN), answers.median_tau(cfg.epsilon)),
                ("med_beta", acc.median_convergence_pace(1).unwrap_or(f64::NAN), truth_med_beta),
                (
                    "S_ft",
                    acc.finite_time_basin_stability(1, cfg.finite_time)?,
                    answers.finite_time_basin_stability(cfg.finite_time, cfg.epsilon, box_area),
                ),
            ];
            for (name, est, truth) in estimates {
                let abs_err = (est - truth).abs();
                rows.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    n,
                    s,
                    name,
                    output::fmt_value(est),
                    output::fmt_value(truth),
                    output::fmt_value(abs_err)
                ));
            }
        }
    }
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("convergence.csv");
    fs::write(&path, rows)?;
    println!("convergence ladder -> {}", path.display());
    Ok(0)
}

/// Sampler wrapper is re-exported for tests that need the exact stream the
/// CLI uses.
pub fn measure_sampler(cfg: &RunConfig, context: u64) -> impl IcSampler {
    UniformBoxSampler::new(cfg.sample_box.clone(), cfg.seed, context)
}
