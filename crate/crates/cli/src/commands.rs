use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hpfold::benchmark::{self, SuiteConfig};
use hpfold::checkpoint;
use hpfold::confdb::ConfDb;
use hpfold::dqn::{read_curve, Mode, Trainer, TrainerConfig};
use hpfold::lattice::{HpSequence, Residue};
use hpfold::oracle::{self, EnumerateOptions, KNOWN_COUNTS};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, parse_arch, resolve_target, RunConfig};
use crate::{BenchArgs, ConfdbArgs, EnumerateArgs, PlotArgs, TrainArgs, Usage};

pub const RUN_CONFIG_FILE: &str = "run_config.json";

fn out_root(flag: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    flag.or(from_config).unwrap_or_else(|| PathBuf::from("runs"))
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct TrialReport {
    label: String,
    dir: PathBuf,
    best_energy: Option<i32>,
    best_episode: Option<usize>,
    best_actions: Option<String>,
    complete_ratio: f64,
    updates: u64,
}

fn report(label: String, dir: PathBuf, r: &hpfold::dqn::TrainingResult) -> TrialReport {
    TrialReport {
        label,
        dir,
        best_energy: r.best_energy,
        best_episode: r.best_episode,
        best_actions: r.best_actions.clone(),
        complete_ratio: r.complete_ratio,
        updates: r.updates,
    }
}

fn resume(path: &Path, out: Option<PathBuf>) -> anyhow::Result<()> {
    let ckpt = checkpoint::load(path)?;
    let dir = out
        .or_else(|| path.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let label = ckpt.header.label.clone().unwrap_or_else(|| "resumed".into());
    let mut trainer = Trainer::from_checkpoint(ckpt)?;
    let result = trainer.run(Some(&dir))?;
    print_json(&report(label, dir, &result))
}

/// Resolves flags over the config file over defaults.
fn resolve_run(a: &TrainArgs, forced: Option<Mode>) -> anyhow::Result<(RunConfig, HpSequence, String)> {
    let loaded = config::load(a.config.as_deref())?;
    let mut run = loaded.run;
    if a.seq.is_some() || a.benchmark_id.is_some() {
        run.sequence = a.seq.clone();
        run.benchmark_id = a.benchmark_id.clone();
    }
    let target = resolve_target(run.benchmark_id.as_deref(), run.sequence.as_deref())?;
    let t = &mut run.trainer;
    if let Some(e) = a.episodes {
        t.episodes = e;
    } else if !loaded.has_episodes {
        if let Some(d) = target.default_episodes {
            t.episodes = d;
        }
    }
    if let Some(m) = &a.mode {
        t.mode = m.parse()?;
    }
    if let Some(m) = forced {
        t.mode = m;
    }
    if let Some(arch) = &a.arch {
        t.architecture = Some(parse_arch(arch, target.sequence.len())?);
    }
    if a.prune_heuristics {
        t.prune_forward_runs = true;
        t.prune_futile = true;
    }
    if a.reward_trapped {
        t.reward_trapped_partial = true;
    }
    if a.checkpoint_every.is_some() {
        t.checkpoint_every = a.checkpoint_every;
    }
    if let Some(hpfold::nn::Architecture::Fcn { rows, .. }) = t.architecture {
        if rows != target.sequence.len() {
            return Err(Usage(format!(
                "fully connected net built for {rows} monomers, sequence has {}",
                target.sequence.len()
            ))
            .into());
        }
    }
    t.validate()?;
    if !a.seed.is_empty() {
        run.seeds = a.seed.clone();
    }
    if run.seeds.is_empty() {
        run.seeds = vec![run.trainer.seed];
    }
    run.out = Some(out_root(a.out.clone(), run.out.take()));
    Ok((run, target.sequence, target.id))
}

pub fn train(a: TrainArgs, forced: Option<Mode>, workers: usize) -> anyhow::Result<()> {
    if let Some(path) = &a.resume {
        return resume(path, a.out.clone());
    }
    let (run, seq, id) = resolve_run(&a, forced)?;
    let root = run.out.clone().expect("resolved");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.min(run.seeds.len()).max(1))
        .build()?;
    let results: Vec<anyhow::Result<TrialReport>> = pool.install(|| {
        run.seeds
            .par_iter()
            .with_max_len(1)
            .map(|&seed| {
                let config = TrainerConfig {
                    seed,
                    ..run.trainer.clone()
                };
                let label = benchmark::trial_label(&id, config.mode, seed);
                let dir = root.join(&label);
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let trial_run = RunConfig {
                    seeds: vec![seed],
                    out: Some(root.clone()),
                    trainer: config.clone(),
                    ..run.clone()
                };
                let cfg_path = dir.join(RUN_CONFIG_FILE);
                fs::write(&cfg_path, serde_json::to_string_pretty(&trial_run)? + "\n")
                    .with_context(|| format!("writing {}", cfg_path.display()))?;
                let mut trainer = Trainer::new(&seq, &config)?.with_label(&label);
                let result = trainer.run(Some(&dir))?;
                Ok(report(label, dir, &result))
            })
            .collect()
    });
    let mut first_err = None;
    let mut ok = Vec::new();
    for r in results {
        match r {
            Ok(rep) => ok.push(rep),
            Err(e) => {
                eprintln!("error: {e:#}");
                first_err.get_or_insert(e);
            }
        }
    }
    print_json(&ok)?;
    first_err.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct LandscapeSummary {
    path: PathBuf,
    walks: usize,
    max_score: u32,
}

pub fn enumerate(a: EnumerateArgs) -> anyhow::Result<()> {
    let opts = EnumerateOptions {
        collect_optimal: a.collect,
        cap: a.cap,
        allow_large: a.allow_large || a.verify_counts,
        ..Default::default()
    };
    if a.verify_counts {
        let checks = match a.n {
            Some(n) => {
                let found = oracle::count_walks(n, &opts)?;
                let expected = KNOWN_COUNTS.iter().find(|k| k.0 == n).map(|k| k.1);
                vec![serde_json::json!({
                    "n": n,
                    "expected": expected,
                    "found": found,
                    "matches": expected.map(|e| e == found),
                })]
            }
            None => oracle::verify_counts(a.include_heavy)?
                .into_iter()
                .map(|c| serde_json::to_value(c).expect("plain struct"))
                .collect(),
        };
        print_json(&checks)?;
        if checks.iter().any(|c| c["matches"] == serde_json::json!(false)) {
            anyhow::bail!("walk count mismatch");
        }
        return Ok(());
    }
    let seq = match (&a.seq, &a.benchmark_id, a.n) {
        (Some(s), _, _) => s.parse::<HpSequence>()?,
        (_, Some(id), _) => benchmark::entry(id)?.sequence,
        (_, _, Some(n)) => HpSequence::new(vec![Residue::P; n])?,
        _ => return Err(Usage("give --seq, --benchmark-id or --n".into()).into()),
    };
    if let Some(path) = &a.landscape {
        let walks = oracle::landscape_export(&seq, path)?;
        let max_score = oracle::landscape(&seq)?.iter().map(|r| r.score).max().unwrap_or(0);
        return print_json(&LandscapeSummary {
            path: path.clone(),
            walks,
            max_score,
        });
    }
    print_json(&oracle::enumerate_with(&seq, &opts)?)
}

pub fn bench(a: BenchArgs, workers: usize) -> anyhow::Result<()> {
    let mut suite: SuiteConfig = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", p.display())))?
        }
        None => SuiteConfig::default(),
    };
    if !a.entries.is_empty() {
        suite.entries = a.entries.clone();
    }
    let entries: Vec<_> = suite
        .entries
        .iter()
        .map(|id| benchmark::entry(id))
        .collect::<Result<_, _>>()?;
    suite.entries = entries.iter().map(|e| e.id.clone()).collect();
    if !a.modes.is_empty() {
        suite.modes = a.modes.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
    }
    if !a.seeds.is_empty() {
        suite.seeds = a.seeds.clone();
    }
    if a.episodes_override.is_some() {
        suite.episodes_override = a.episodes_override;
    }
    if let Some(arch) = &a.arch {
        let rows: Vec<usize> = entries.iter().map(|e| e.sequence.len()).collect();
        let parsed = parse_arch(arch, rows[0])?;
        if !parsed.is_lstm() && rows.iter().any(|&r| r != rows[0]) {
            return Err(Usage("a fully connected net needs entries of one length".into()).into());
        }
        suite.base.architecture = Some(parsed);
    }
    if a.prune_heuristics {
        suite.base.prune_forward_runs = true;
        suite.base.prune_futile = true;
    }
    if a.reward_trapped {
        suite.base.reward_trapped_partial = true;
    }
    if let Some(n) = suite.episodes_override {
        suite.base.episodes = n;
    }
    suite.base.validate()?;
    suite.workers = workers;
    let root = out_root(a.out, None);
    let outcomes = benchmark::run_suite(&suite, Some(&root))?;
    print_json(&benchmark::comparison(&outcomes))?;
    let failed: Vec<_> = outcomes.iter().filter(|o| o.error.is_some()).collect();
    for o in &failed {
        eprintln!("trial {} failed: {}", o.label, o.error.as_deref().unwrap_or(""));
    }
    if !failed.is_empty() {
        anyhow::bail!(
            "{} of {} trials failed; see {}",
            failed.len(),
            outcomes.len(),
            root.join("summary.csv").display()
        );
    }
    Ok(())
}

/// Trial label without its `_seed<k>` suffix.
fn group_of(label: &str) -> &str {
    match label.rfind("_seed") {
        Some(i) if label[i + 5..].chars().all(|c| c.is_ascii_digit()) && i + 5 < label.len() => &label[..i],
        _ => label,
    }
}

pub fn plotdata(a: PlotArgs) -> anyhow::Result<()> {
    if a.window == 0 {
        return Err(Usage("--window must be at least 1".into()).into());
    }
    let paths = benchmark::find_curves(&a.curves)?;
    if paths.is_empty() {
        anyhow::bail!("no curve.csv under {}", a.curves.display());
    }
    let out = a.out.unwrap_or_else(|| a.curves.join("plotdata"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut groups: BTreeMap<String, Vec<Vec<hpfold::dqn::CurveRow>>> = BTreeMap::new();
    let mut written = Vec::new();
    for p in &paths {
        let label = p
            .parent()
            .and_then(Path::file_name)
            .map_or_else(|| "curve".to_string(), |n| n.to_string_lossy().into_owned());
        let curve = read_curve(p)?;
        let energies = benchmark::plot_energies(&curve);
        let mins = benchmark::moving_minimum(&energies, a.window)?;
        let path = out.join(format!("{label}_movmin.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["episode", "energy", "moving_min"])?;
        for (row, (e, m)) in curve.iter().zip(energies.iter().zip(&mins)) {
            w.write_record(&[row.episode.to_string(), e.to_string(), m.to_string()])?;
        }
        w.flush()?;
        written.push(path);
        groups.entry(group_of(&label).to_string()).or_default().push(curve);
    }
    for (group, curves) in &groups {
        let band = benchmark::seed_band(curves, a.window)?;
        let path = out.join(format!("{group}_band.csv"));
        band.write_csv(&path)?;
        written.push(path);
    }
    print_json(&written)
}

pub fn confdb(a: ConfdbArgs) -> anyhow::Result<()> {
    if a.import.is_empty() && a.records.is_empty() {
        return Err(Usage("nothing to load (use --import or --records)".into()).into());
    }
    let mut db = ConfDb::new();
    let mut rejected = Vec::new();
    for path in &a.records {
        rejected.extend(db.import_records(path)?.rejected);
    }
    for path in &a.import {
        let rep = db.import_logs(path)?;
        rejected.extend(rep.rejected);
    }
    for r in &rejected {
        eprintln!("rejected {}:{}: {}", r.source, r.line, r.reason);
    }
    let failures = db.verify_all();
    if !failures.is_empty() {
        anyhow::bail!("{} stored records failed re-verification", failures.len());
    }
    if let Some(dir) = &a.export {
        db.export(dir, a.draw)?;
        let path = dir.join("rejections.json");
        fs::write(&path, serde_json::to_string_pretty(&rejected)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if a.stats {
        print_json(&db.stats())?;
    } else {
        eprintln!("{} distinct conformations, {} rejected lines", db.len(), rejected.len());
    }
    Ok(())
}
