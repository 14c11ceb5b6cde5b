//! Acceptance checks, one `PASS`/`FAIL`/`SKIP` line per criterion.
//!
//! Environment:
//! - `HPFOLD_ACCEPT_SMOKE=1` runs the reduced training reproduction.
//! - `HPFOLD_ACCEPT_HEAVY=1` also runs the full-size training and the long
//!   benchmark recipes (days of CPU time).
//! - `HPFOLD_ACCEPT_RUNS=DIR` evaluates the long recipes from existing trial
//!   directories (`<id>_<mode>_seed<k>/`) instead of training.
//! - `HPFOLD_ACCEPT_OUT=DIR` keeps training artifacts (default: a temp dir).
//! - `HPFOLD_ACCEPT_STRICT=1` exits with status 1 if any check fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hpfold::benchmark::{self, seed_band, Band};
use hpfold::confdb::{ConfDb, ConformationRecord};
use hpfold::dqn::{
    epsilon_at, fit_batch, read_best_log, read_curve, replay_capacity, CurveRow, Experience, Mode, ReplayMemory,
    StepSettings, TargetSync, Trainer, TrainerConfig, BEST_FILE, CURVE_FILE,
};
use hpfold::encoding::{encode, EncodedState};
use hpfold::lattice::{parse_actions, replay, reset, Action, ActionMask, HpSequence, Residue};
use hpfold::nn::{huber, AdamConfig, AdamState, Architecture, QNetwork};
use hpfold::oracle::{self, EnumerateOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: [u64; 4] = [0, 1, 2, 3];
/// Reduced network for the short training run.
const SMOKE_ARCH: Architecture = Architecture::Lstm { layers: 2, hidden: 32 };
const SMOKE_EPISODES: usize = 20_000;
const WINDOW: usize = 200;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Report {
    rows: Vec<(String, Verdict)>,
}

impl Report {
    fn line(&mut self, id: &str, verdict: Verdict, text: impl AsRef<str>, started: Instant) {
        let tag = match verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        };
        println!(
            "{tag} [{id}] {} ({:.1}s)",
            text.as_ref(),
            started.elapsed().as_secs_f64()
        );
        self.rows.push((id.to_string(), verdict));
    }

    fn check(&mut self, id: &str, ok: bool, text: impl AsRef<str>, started: Instant) {
        self.line(id, if ok { Verdict::Pass } else { Verdict::Fail }, text, started);
    }

    fn skip(&mut self, id: &str, text: impl AsRef<str>) {
        self.line(id, Verdict::Skip, text, Instant::now());
    }
}

fn flag(name: &str) -> bool {
    std::env::var(name).is_ok_and(|v| v == "1")
}

fn seq(s: &str) -> HpSequence {
    s.parse().unwrap()
}

fn count_walks(r: &mut Report) {
    let opts = EnumerateOptions {
        allow_large: true,
        ..Default::default()
    };
    for (id, n, expected) in [("1a", 20usize, 41_889_578u64), ("1b", 24, 2_158_326_727)] {
        let t = Instant::now();
        let found = oracle::count_walks(n, &opts).unwrap();
        r.check(
            id,
            found == expected,
            format!("complete walks N={n}: {found} (expected {expected})"),
            t,
        );
    }
}

fn optimal_energies(r: &mut Report) {
    let t = Instant::now();
    let bench = |id: &str| benchmark::entry(id).unwrap().sequence.to_string();
    let cases = [
        ("HPPHPH".to_string(), -2),
        ("HPPHHPPH".to_string(), -3),
        ("HPPHPHPHHPPHH".to_string(), -6),
        (bench("20mer-A"), -9),
        (bench("20mer-B"), -10),
    ];
    let mut ok = true;
    let mut text = String::from("optimal energies:");
    for (s, want) in cases {
        let got = oracle::optimal_energy(&seq(&s)).unwrap();
        ok &= got == want;
        let _ = write!(text, " {s}={got} (want {want})");
    }
    r.check("2", ok, text, t);
}

fn encoded(s: &str, actions: &str) -> EncodedState {
    let s = seq(s);
    encode(&replay(&s, &parse_actions(actions).unwrap()).unwrap(), &s)
}

fn gradient_check(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let net = QNetwork::<f64>::init(Architecture::Lstm { layers: 2, hidden: 8 }, &mut rng);
    let xs = [
        encoded("HPPHPH", "LF"),
        encoded("HPPHPH", "FLL"),
        encoded("HPPHPH", "L"),
    ];
    let refs: Vec<&EncodedState> = xs.iter().collect();
    let w: Vec<[f64; 3]> = (0..xs.len())
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]
        })
        .collect();
    let objective = |net: &QNetwork<f64>| -> f64 {
        net.forward(&refs)
            .unwrap()
            .iter()
            .zip(&w)
            .map(|(q, w)| q.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    };
    let grads = net.backward(&net.forward_cached(&refs).unwrap(), &w);
    let mut probe = net.clone();
    let (eps, mut worst) = (1e-5, 0.0f64);
    for (ti, g) in grads.tensors().iter().enumerate() {
        for k in 0..g.len() {
            let orig = probe.tensors()[ti].data()[k];
            probe.tensors_mut()[ti].data_mut()[k] = orig + eps;
            let plus = objective(&probe);
            probe.tensors_mut()[ti].data_mut()[k] = orig - eps;
            let minus = objective(&probe);
            probe.tensors_mut()[ti].data_mut()[k] = orig;
            let fd = (plus - minus) / (2.0 * eps);
            let an = g.data()[k];
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-6));
        }
    }
    r.check(
        "3",
        worst <= 1e-4,
        format!("LSTM hidden 8, N=6 gradient max relative error {worst:.2e} (<= 1e-4)"),
        t,
    );
}

fn unit_values(r: &mut Report) {
    let t = Instant::now();
    let schedule = TrainerConfig::default().schedule();
    let psi = schedule.episodes;
    let e0 = epsilon_at(&schedule, 0);
    let e_end = epsilon_at(&schedule, psi);
    let want = 0.01 + 0.99 * (-5.0f64).exp();
    let ok = e0 == 1.0 && (e_end - want).abs() <= 1e-9 && huber(0.5) == 0.125 && huber(2.0) == 1.5;
    r.check(
        "4",
        ok,
        format!(
            "eps(0)={e0}, eps(psi)={e_end:.12} (want {want:.12}), huber(0.5)={}, huber(2)={}",
            huber(0.5),
            huber(2.0)
        ),
        t,
    );
}

fn dqn_mechanics(r: &mut Report) {
    let t = Instant::now();
    let mut notes = Vec::new();

    let law = [1_000usize, 20_000, 100_000, 499_990, 500_000, 600_000, 5_000_000]
        .iter()
        .all(|&psi| replay_capacity(psi) == (psi / 10).min(50_000));
    let s = seq("HPPHPH");
    let e = |k: usize| Experience {
        s: encode(&reset(&s), &s),
        a: Action::L,
        r: k as f64,
        s_next: encode(&reset(&s), &s),
        terminal: true,
        next_valid_mask: ActionMask([false; 3]),
    };
    let mut mem = ReplayMemory::new(10);
    (0..13).for_each(|k| mem.push(e(k)));
    let fifo = mem.len() == 10 && mem.iter().map(|x| x.r as usize).eq(3..13);
    notes.push(format!("capacity law {law}, FIFO {fifo}"));

    let s20 = benchmark::entry("20mer-A").unwrap().sequence;
    let small = TrainerConfig {
        episodes: 200,
        seed: 3,
        architecture: Some(Architecture::Lstm { layers: 1, hidden: 16 }),
        target_sync: 10,
        ..Default::default()
    };
    let mut trainer = Trainer::new(&s20, &small).unwrap();
    let mut sync_ok = true;
    let mut prev = (trainer.target().clone(), trainer.syncs());
    for _ in 0..60 {
        trainer.run_episode().unwrap();
        if trainer.syncs() == prev.1 {
            sync_ok &= trainer.target() == &prev.0;
        }
        prev = (trainer.target().clone(), trainer.syncs());
    }
    let mut policy = trainer.policy().clone();
    let mut target = trainer.target().clone();
    let mut adam = AdamState::new(&policy, AdamConfig::default());
    let mut sync = TargetSync::new(4);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..12 {
        let before = target.clone();
        let batch = trainer.memory().sample(32, &mut rng).unwrap();
        fit_batch(&mut policy, &target, &batch, &mut adam, &StepSettings::from(&small)).unwrap();
        sync_ok &= if sync.after_update(&policy, &mut target) {
            target == policy
        } else {
            target == before
        };
    }
    notes.push(format!("target frozen between syncs {sync_ok}"));

    let full = TrainerConfig {
        eps_min: 1.0,
        eps_max: 1.0,
        ..small.clone()
    };
    let rand = TrainerConfig {
        mode: Mode::Rand,
        ..small.clone()
    };
    let mut a = Trainer::new(&s20, &full).unwrap();
    let mut b = Trainer::new(&s20, &rand).unwrap();
    let same = (0..200).all(|_| a.run_episode().unwrap().actions == b.run_episode().unwrap().actions);
    notes.push(format!("eps=1 trajectories equal RAND {same}"));
    r.check("5", law && fifo && sync_ok && same, notes.join("; "), t);
}

fn overfit(r: &mut Report) {
    let t = Instant::now();
    let s = benchmark::entry("20mer-A").unwrap().sequence;
    let config = TrainerConfig {
        mode: Mode::Rand,
        episodes: 100,
        seed: 6,
        ..Default::default()
    };
    let mut source = Trainer::new(&s, &config).unwrap();
    for _ in 0..100 {
        source.run_episode().unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let batch = source.memory().sample(32, &mut rng).unwrap();
    let arch = Architecture::Lstm { layers: 2, hidden: 64 };
    let mut policy = QNetwork::<f32>::init(arch, &mut rng);
    let target = QNetwork::<f32>::init(arch, &mut rng);
    let mut adam = AdamState::new(&policy, AdamConfig::default());
    let settings = StepSettings::from(&TrainerConfig::default());
    let mut losses = Vec::with_capacity(2000);
    let mut reached = None;
    for step in 0..2000 {
        let loss = fit_batch(&mut policy, &target, &batch, &mut adam, &settings).unwrap();
        losses.push(loss);
        if loss < 1e-3 && reached.is_none() {
            reached = Some(step + 1);
        }
    }
    let means: Vec<f64> = losses
        .chunks(200)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let trend = means.windows(2).all(|w| w[1] <= w[0] + 1e-4);
    let last = *losses.last().unwrap();
    r.check(
        "6",
        trend && last < 1e-3,
        format!(
            "frozen batch of 32: loss {:.3e} -> {last:.3e}, first < 1e-3 at step {reached:?}, trend non-increasing {trend}",
            losses[0]
        ),
        t,
    );
}

struct TrialRun {
    best: Option<i32>,
    curve: Vec<CurveRow>,
    dir: Option<PathBuf>,
}

fn run_trials(
    s: &HpSequence,
    configs: Vec<TrainerConfig>,
    stop: Option<usize>,
    root: Option<&Path>,
    id: &str,
) -> Vec<TrialRun> {
    configs
        .into_par_iter()
        .with_max_len(1)
        .map(|c| {
            let label = benchmark::trial_label(id, c.mode, c.seed);
            let dir = root.map(|r| r.join(&label));
            let mut trainer = Trainer::new(s, &c).unwrap().with_label(label);
            let res = trainer.run_until(dir.as_deref(), stop.unwrap_or(c.episodes)).unwrap();
            TrialRun {
                best: res.best_energy,
                curve: res.curve,
                dir,
            }
        })
        .collect()
}

fn fmt_best(runs: &[TrialRun]) -> String {
    runs.iter()
        .map(|t| t.best.map_or("none".into(), |e| e.to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

fn reaches(runs: &[TrialRun], level: i32) -> usize {
    runs.iter().filter(|t| t.best.is_some_and(|e| e <= level)).count()
}

fn training_smoke(r: &mut Report, root: Option<&Path>) {
    if !(flag("HPFOLD_ACCEPT_SMOKE") || flag("HPFOLD_ACCEPT_HEAVY")) {
        r.skip(
            "7a",
            "reduced 20mer-A training (set HPFOLD_ACCEPT_SMOKE=1; about 25 CPU-minutes per seed)",
        );
        return;
    }
    let t = Instant::now();
    let s = benchmark::entry("20mer-A").unwrap().sequence;
    let configs = SEEDS
        .iter()
        .map(|&seed| TrainerConfig {
            episodes: SMOKE_EPISODES,
            seed,
            architecture: Some(SMOKE_ARCH),
            ..Default::default()
        })
        .collect();
    let runs = run_trials(&s, configs, None, root.map(|p| p.join("smoke")).as_deref(), "20mer-A");
    let k = reaches(&runs, -8);
    r.check(
        "7a",
        k >= 2,
        format!(
            "20mer-A DRL {} x{SMOKE_EPISODES}: best per seed [{}], {k}/4 reach <= -8 (need 2)",
            SMOKE_ARCH.tag(),
            fmt_best(&runs)
        ),
        t,
    );
}

fn training_full(r: &mut Report, root: Option<&Path>) {
    if !flag("HPFOLD_ACCEPT_HEAVY") {
        r.skip(
            "7b",
            "full 2x256 training on 20mer-A/B, 100000 episodes x 4 seeds (set HPFOLD_ACCEPT_HEAVY=1; days of CPU)",
        );
        return;
    }
    for (id, want) in [("20mer-A", -9), ("20mer-B", -10)] {
        let t = Instant::now();
        let s = benchmark::entry(id).unwrap().sequence;
        let configs = SEEDS
            .iter()
            .map(|&seed| TrainerConfig {
                episodes: 100_000,
                seed,
                architecture: Some(Architecture::LSTM_2X256),
                ..Default::default()
            })
            .collect();
        let runs = run_trials(&s, configs, None, root.map(|p| p.join("full")).as_deref(), id);
        let k = reaches(&runs, want);
        r.check(
            "7b",
            k >= 3,
            format!(
                "{id} DRL 2x256 x100000: best per seed [{}], {k}/4 reach {want} (need 3)",
                fmt_best(&runs)
            ),
            t,
        );
    }
}

fn random_baseline(r: &mut Report) {
    for (id, episodes, expected) in [("20mer-A", 100_000, -9), ("25mer", 500_000, -7)] {
        let t = Instant::now();
        let s = benchmark::entry(id).unwrap().sequence;
        let configs = SEEDS
            .iter()
            .map(|&seed| TrainerConfig {
                mode: Mode::Rand,
                episodes,
                seed,
                ..Default::default()
            })
            .collect();
        let runs = run_trials(&s, configs, None, None, id);
        let best = runs.iter().filter_map(|t| t.best).min();
        let ok = best.is_some_and(|b| (b - expected).abs() <= 1);
        r.check(
            "8",
            ok,
            format!(
                "{id} RAND x{episodes}: best per seed [{}], lowest {best:?} (expected {expected} +/- 1)",
                fmt_best(&runs)
            ),
            t,
        );
    }
}

/// Curves (and trial directories) for the long recipes: read from
/// `HPFOLD_ACCEPT_RUNS` if set, else trained to `stop` episodes.
fn long_trials(id: &str, mode: Mode, stop: usize, root: Option<&Path>) -> Vec<TrialRun> {
    let entry = benchmark::entry(id).unwrap();
    if let Ok(dir) = std::env::var("HPFOLD_ACCEPT_RUNS") {
        return SEEDS
            .iter()
            .map(|&seed| {
                let d = Path::new(&dir).join(benchmark::trial_label(id, mode, seed));
                let mut curve = read_curve(&d.join(CURVE_FILE)).unwrap_or_default();
                curve.truncate(stop);
                TrialRun {
                    best: curve.iter().filter(|c| c.complete).map(|c| c.energy).min(),
                    curve,
                    dir: Some(d),
                }
            })
            .collect();
    }
    let configs = SEEDS
        .iter()
        .map(|&seed| TrainerConfig {
            mode,
            seed,
            episodes: entry.episodes_default,
            ..Default::default()
        })
        .collect();
    run_trials(
        &entry.sequence,
        configs,
        Some(stop),
        root.map(|p| p.join("long")).as_deref(),
        id,
    )
}

fn long_recipes(r: &mut Report, root: Option<&Path>) -> BTreeMap<String, Vec<TrialRun>> {
    let mut drl_runs = BTreeMap::new();
    let have_runs = std::env::var("HPFOLD_ACCEPT_RUNS").is_ok();
    if !(flag("HPFOLD_ACCEPT_HEAVY") || have_runs) {
        r.skip("9", "36mer/48mer/50mer DRL vs RAND bands at 20% of budget (set HPFOLD_ACCEPT_HEAVY=1 or HPFOLD_ACCEPT_RUNS=DIR)");
        return drl_runs;
    }
    for id in ["36mer", "48mer", "50mer"] {
        let t = Instant::now();
        let stop = benchmark::entry(id).unwrap().episodes_default / 5;
        let drl = long_trials(id, Mode::Drl, stop, root);
        let rand = long_trials(id, Mode::Rand, stop, root);
        let complete = drl.iter().chain(&rand).all(|t| t.curve.len() == stop);
        let verdict = if complete {
            let band = |runs: &[TrialRun]| -> Band {
                seed_band(&runs.iter().map(|t| t.curve.clone()).collect::<Vec<_>>(), WINDOW).unwrap()
            };
            let (d, q) = (band(&drl), band(&rand));
            let i = stop - 1;
            let ok = d.strictly_below_at(&q, i);
            (
                ok,
                format!(
                    "{id} at episode {stop}: DRL band {:.2} +/- {:.2} vs RAND {:.2} +/- {:.2}, strictly below {ok}",
                    d.mean[i], d.std[i], q.mean[i], q.std[i]
                ),
            )
        } else {
            (false, format!("{id}: curves shorter than {stop} episodes"))
        };
        r.check("9", verdict.0, verdict.1, t);
        drl_runs.insert(id.to_string(), drl);
    }
    drl_runs
}

fn random_sequence(rng: &mut ChaCha8Rng, n: usize) -> HpSequence {
    HpSequence::new(
        (0..n)
            .map(|_| if rng.gen_bool(0.5) { Residue::H } else { Residue::P })
            .collect(),
    )
    .unwrap()
}

fn best_logs(runs: &[TrialRun]) -> Vec<Vec<hpfold::dqn::BestRecord>> {
    runs.iter()
        .map(|t| {
            t.dir
                .as_ref()
                .and_then(|d| read_best_log(&d.join(BEST_FILE)).ok())
                .unwrap_or_default()
        })
        .collect()
}

fn degeneracy(r: &mut Report, long: &BTreeMap<String, Vec<TrialRun>>) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = true;
    let mut checked = 0;
    for n in 4..=10 {
        for _ in 0..8 {
            let s = random_sequence(&mut rng, n);
            let report = oracle::enumerate(&s, true, usize::MAX).unwrap();
            let mut db = ConfDb::new();
            for w in oracle::landscape(&s).unwrap() {
                db.add(ConformationRecord {
                    sequence_id: s.to_string(),
                    sequence: s.clone(),
                    actions: w.actions,
                    energy: -(w.score as i32),
                    coords: w.coords,
                    first_seen_episode: None,
                    trial: "oracle".into(),
                })
                .unwrap();
            }
            ok &= db.distinct(&s.to_string(), report.min_energy.unwrap()) as u64 == report.degeneracy;
            checked += 1;
        }
    }
    r.check(
        "10a",
        ok,
        format!(
            "confdb distinct count at the optimum equals enumeration degeneracy on {checked} random sequences, N=4..10"
        ),
        t,
    );

    match long.get("48mer") {
        None => r.skip("10b", "48mer DRL best-known plurality (needs the long recipes)"),
        Some(runs) => {
            let t = Instant::now();
            let counts: Vec<usize> = best_logs(runs)
                .iter()
                .map(|log| {
                    log.iter()
                        .filter(|b| b.energy == -23)
                        .map(|b| b.actions.as_str())
                        .collect::<std::collections::HashSet<_>>()
                        .len()
                })
                .collect();
            let ok = counts.iter().all(|&c| c > 1);
            r.check(
                "10b",
                ok,
                format!("48mer DRL distinct -23 conformations per trial {counts:?} (each > 1)"),
                t,
            );
        }
    }
    match long.get("36mer") {
        None => r.skip("10c", "36mer distinct-count growth (needs the long recipes)"),
        Some(runs) => {
            let t = Instant::now();
            let s = benchmark::entry("36mer").unwrap().sequence;
            let mut db = ConfDb::new();
            let mut events: Vec<(usize, String, hpfold::dqn::BestRecord)> = Vec::new();
            for (k, log) in best_logs(runs).into_iter().enumerate() {
                events.extend(
                    log.into_iter()
                        .filter(|b| b.energy == -14)
                        .map(|b| (b.episode, format!("seed{k}"), b)),
                );
            }
            events.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
            let mut growth = Vec::new();
            for (_, trial, b) in events {
                db.add(ConformationRecord {
                    sequence_id: "36mer".into(),
                    sequence: s.clone(),
                    actions: b.actions,
                    energy: b.energy,
                    coords: Vec::new(),
                    first_seen_episode: Some(b.episode),
                    trial,
                })
                .unwrap();
                growth.push(db.distinct("36mer", -14));
            }
            let monotone = growth.windows(2).all(|w| w[1] >= w[0]);
            let last = growth.last().copied().unwrap_or(0);
            r.check(
                "10c",
                monotone && last > 0,
                format!("36mer distinct -14 conformations grow monotonically to {last}"),
                t,
            );
        }
    }
}

fn band_well_formed(b: &Band, len: usize) -> bool {
    b.len() == len && b.std.iter().all(|&s| s >= 0.0 && s.is_finite()) && b.mean.iter().all(|m| m.is_finite())
}

fn ablation(r: &mut Report, root: &Path) {
    let t = Instant::now();
    let id = "20mer-A";
    let s = benchmark::entry(id).unwrap().sequence;
    let episodes = 300;
    let lstm = Architecture::Lstm { layers: 1, hidden: 16 };
    let variants = [
        ("lstm", Some(lstm), false),
        ("fcn", Some(Architecture::fcn_matching(lstm, s.len())), false),
        ("pruned", Some(lstm), true),
        ("unpruned", Some(lstm), false),
    ];
    let mut ok = true;
    let mut text = Vec::new();
    for (name, arch, prune) in variants {
        let configs = SEEDS
            .iter()
            .map(|&seed| TrainerConfig {
                episodes,
                seed,
                architecture: arch,
                prune_forward_runs: prune,
                prune_futile: prune,
                ..Default::default()
            })
            .collect();
        let dir = root.join("ablation").join(name);
        let runs = run_trials(&s, configs, None, Some(&dir), id);
        let band = seed_band(&runs.iter().map(|t| t.curve.clone()).collect::<Vec<_>>(), WINDOW).unwrap();
        let csv = dir.join("band.csv");
        band.write_csv(&csv).unwrap();
        let stored = benchmark::find_curves(&dir).unwrap();
        let reread: Vec<Vec<CurveRow>> = stored.iter().map(|p| read_curve(p).unwrap()).collect();
        let same = seed_band(&reread, WINDOW).unwrap() == band;
        let rows = std::fs::read_to_string(&csv).unwrap().lines().count();
        let good = band_well_formed(&band, episodes) && stored.len() == 4 && same && rows == episodes + 1;
        ok &= good;
        text.push(format!("{name} {}", if good { "ok" } else { "malformed" }));
    }
    r.check(
        "11",
        ok,
        format!(
            "paired 4-seed bands (FCN vs LSTM, pruning on vs off): {}",
            text.join(", ")
        ),
        t,
    );
}

fn main() {
    let mut r = Report { rows: Vec::new() };
    let tmp = tempfile::tempdir().unwrap();
    let root = std::env::var("HPFOLD_ACCEPT_OUT").map_or_else(|_| tmp.path().to_path_buf(), PathBuf::from);
    std::fs::create_dir_all(&root).unwrap();

    count_walks(&mut r);
    optimal_energies(&mut r);
    gradient_check(&mut r);
    unit_values(&mut r);
    dqn_mechanics(&mut r);
    overfit(&mut r);
    training_smoke(&mut r, Some(&root));
    training_full(&mut r, Some(&root));
    random_baseline(&mut r);
    let long = long_recipes(&mut r, Some(&root));
    degeneracy(&mut r, &long);
    ablation(&mut r, &root);

    let count = |v| r.rows.iter().filter(|(_, x)| *x == v).count();
    let (pass, fail, skip) = (count(Verdict::Pass), count(Verdict::Fail), count(Verdict::Skip));
    println!("acceptance: {pass} passed, {fail} failed, {skip} skipped");
    if fail > 0 && flag("HPFOLD_ACCEPT_STRICT") {
        std::process::exit(1);
    }
}
