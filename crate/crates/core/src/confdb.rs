//! Database of distinct low-energy conformations, keyed by their action
//! strings, with per-trial and union counts.
//!
//! `records.jsonl` holds one object per distinct conformation:
//!
//! - `sequence_id`: benchmark id, or the raw sequence for ad-hoc runs
//! - `sequence`: the H/P string
//! - `actions`: the `N - 2` moves over `L`, `F`, `R`
//! - `energy`: negative contact count
//! - `coords`: lattice sites of all `N` monomers as `[x, y]` pairs
//! - `first_seen_episode`: episode of first discovery, if known
//! - `trial`: trial that first produced it
//! - `seen_in`: every trial that produced it

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark;
use crate::dqn::{BestRecord, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::lattice::{complete_energy, parse_actions, replay, Coord, HpSequence};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const STATS_FILE: &str = "stats.json";
pub const DRAWINGS_DIR: &str = "drawings";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformationRecord {
    pub sequence_id: String,
    pub sequence: HpSequence,
    pub actions: String,
    pub energy: i32,
    /// Filled in from the action string when empty.
    #[serde(default)]
    pub coords: Vec<(i32, i32)>,
    #[serde(default)]
    pub first_seen_episode: Option<usize>,
    pub trial: String,
}

impl ConformationRecord {
    /// Replays the action string; checks completeness, energy and (when
    /// present) coordinates. Returns the replayed coordinates.
    pub fn verify(&self) -> Result<Vec<(i32, i32)>> {
        let actions = parse_actions(&self.actions)?;
        let energy = complete_energy(&self.sequence, &actions)?;
        if energy != self.energy {
            return Err(Error::Rejected(format!(
                "{}: stored energy {} but the walk has energy {energy}",
                self.actions, self.energy
            )));
        }
        let coords: Vec<(i32, i32)> = replay(&self.sequence, &actions)?
            .placed()
            .iter()
            .map(|&Coord { x, y }| (x, y))
            .collect();
        if !self.coords.is_empty() && self.coords != coords {
            return Err(Error::Rejected(format!(
                "{}: stored coordinates do not match the walk",
                self.actions
            )));
        }
        Ok(coords)
    }
}

/// The action string itself: with the first bond fixed and the first turn
/// forced Left, distinct strings are distinct conformations up to rigid
/// motions and reflection.
pub fn canonical_key(record: &ConformationRecord) -> &str {
    &record.actions
}

type Bucket = (String, i32);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfDb {
    records: Vec<ConformationRecord>,
    index: BTreeMap<(String, i32, String), usize>,
    /// Per (sequence, energy): trial -> keys that trial produced.
    per_trial: BTreeMap<Bucket, BTreeMap<String, BTreeSet<String>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelStats {
    pub energy: i32,
    pub distinct: usize,
    pub per_trial: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceStats {
    pub sequence_id: String,
    pub sequence: String,
    pub best_known: LevelStats,
    pub next_best: LevelStats,
    /// Distinct conformations per stored energy level.
    pub levels: BTreeMap<i32, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseStats {
    pub records: usize,
    pub sequences: Vec<SequenceStats>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub source: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub inserted: usize,
    pub duplicates: usize,
    pub rejected: Vec<Rejection>,
}

impl ImportReport {
    fn absorb(&mut self, other: ImportReport) {
        self.inserted += other.inserted;
        self.duplicates += other.duplicates;
        self.rejected.extend(other.rejected);
    }
}

#[derive(Serialize, Deserialize)]
struct ExportLine {
    #[serde(flatten)]
    record: ConformationRecord,
    seen_in: Vec<String>,
}

impl ConfDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ConformationRecord] {
        &self.records
    }

    /// Verifies `record` by replay and stores it if its key is new for its
    /// (sequence, energy). Per-trial membership is updated either way.
    pub fn add(&mut self, mut record: ConformationRecord) -> Result<bool> {
        record.coords = record.verify()?;
        let bucket = (record.sequence_id.clone(), record.energy);
        let key = canonical_key(&record).to_string();
        self.per_trial
            .entry(bucket)
            .or_default()
            .entry(record.trial.clone())
            .or_default()
            .insert(key.clone());
        let full = (record.sequence_id.clone(), record.energy, key);
        if self.index.contains_key(&full) {
            return Ok(false);
        }
        self.index.insert(full, self.records.len());
        self.records.push(record);
        Ok(true)
    }

    pub fn distinct(&self, sequence_id: &str, energy: i32) -> usize {
        self.per_trial
            .get(&(sequence_id.to_string(), energy))
            .map_or(0, |t| t.values().flatten().collect::<BTreeSet<_>>().len())
    }

    pub fn per_trial(&self, sequence_id: &str, energy: i32) -> BTreeMap<String, usize> {
        self.per_trial
            .get(&(sequence_id.to_string(), energy))
            .map(|t| t.iter().map(|(k, v)| (k.clone(), v.len())).collect())
            .unwrap_or_default()
    }

    fn level(&self, sequence_id: &str, energy: i32) -> LevelStats {
        LevelStats {
            energy,
            distinct: self.distinct(sequence_id, energy),
            per_trial: self.per_trial(sequence_id, energy),
        }
    }

    /// Counts at the best-known level (the published value for benchmark
    /// sequences, otherwise the lowest stored energy) and one above it.
    pub fn stats(&self) -> DatabaseStats {
        let mut seqs: BTreeMap<&str, &HpSequence> = BTreeMap::new();
        for r in &self.records {
            seqs.entry(&r.sequence_id).or_insert(&r.sequence);
        }
        let sequences = seqs
            .into_iter()
            .map(|(id, seq)| {
                let levels: BTreeMap<i32, usize> = self
                    .per_trial
                    .keys()
                    .filter(|(s, _)| s == id)
                    .map(|&(_, e)| (e, self.distinct(id, e)))
                    .collect();
                let lowest = *levels.keys().next().expect("sequence has records");
                let best = benchmark::entry(id).map_or(lowest, |e| e.best_known_energy);
                SequenceStats {
                    sequence_id: id.to_string(),
                    sequence: seq.to_string(),
                    best_known: self.level(id, best),
                    next_best: self.level(id, best + 1),
                    levels,
                }
            })
            .collect();
        DatabaseStats {
            records: self.records.len(),
            sequences,
        }
    }

    /// Re-checks every stored record in parallel; returns the failures.
    pub fn verify_all(&self) -> Vec<(usize, String)> {
        self.records
            .par_iter()
            .enumerate()
            .filter_map(|(i, r)| r.verify().err().map(|e| (i, e.to_string())))
            .collect()
    }

    fn seen_in(&self, r: &ConformationRecord) -> Vec<String> {
        self.per_trial
            .get(&(r.sequence_id.clone(), r.energy))
            .map(|t| {
                t.iter()
                    .filter(|(_, keys)| keys.contains(&r.actions))
                    .map(|(trial, _)| trial.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Writes `records.jsonl` and `stats.json` into `dir`, plus one SVG per
    /// record under `drawings/` when `draw` is set.
    pub fn export(&self, dir: &Path, draw: bool) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RECORDS_FILE);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        for r in &self.records {
            let line = ExportLine {
                record: r.clone(),
                seen_in: self.seen_in(r),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;

        let stats_path = dir.join(STATS_FILE);
        fs::write(&stats_path, serde_json::to_string_pretty(&self.stats())? + "\n")
            .map_err(|e| Error::io(&stats_path, e))?;

        if draw {
            let ddir = dir.join(DRAWINGS_DIR);
            fs::create_dir_all(&ddir).map_err(|e| Error::io(&ddir, e))?;
            for r in &self.records {
                let p = ddir.join(drawing_name(r));
                fs::write(&p, render_svg(&r.sequence, &r.coords)).map_err(|e| Error::io(&p, e))?;
            }
        }
        Ok(())
    }

    /// Loads an exported `records.jsonl`, re-verifying every line.
    pub fn import(path: &Path) -> Result<(Self, ImportReport)> {
        let mut db = Self::new();
        let report = db.import_records(path)?;
        Ok((db, report))
    }

    /// Merges an exported `records.jsonl` into this database.
    pub fn import_records(&mut self, path: &Path) -> Result<ImportReport> {
        let db = self;
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut report = ImportReport::default();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let reject = |reason: String| Rejection {
                source: path.display().to_string(),
                line: i + 1,
                reason,
            };
            let parsed: ExportLine = match serde_json::from_str(line) {
                Ok(p) => p,
                Err(e) => {
                    report.rejected.push(reject(e.to_string()));
                    continue;
                }
            };
            let mut trials = parsed.seen_in;
            if !trials.contains(&parsed.record.trial) {
                trials.insert(0, parsed.record.trial.clone());
            }
            match db.add(parsed.record.clone()) {
                Ok(true) => report.inserted += 1,
                Ok(false) => report.duplicates += 1,
                Err(e) => {
                    report.rejected.push(reject(e.to_string()));
                    continue;
                }
            }
            for t in trials.into_iter().filter(|t| *t != parsed.record.trial) {
                db.add(ConformationRecord {
                    trial: t,
                    ..parsed.record.clone()
                })?;
            }
        }
        Ok(report)
    }

    /// Ingests a trial's `best.jsonl`, reading the sequence and trial id from
    /// the `manifest.json` beside it. Bad lines are reported, not fatal.
    pub fn import_best_log(&mut self, log: &Path) -> Result<ImportReport> {
        let dir = log.parent().unwrap_or(Path::new("."));
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: serde_json::Value = serde_json::from_str(&text)?;
        let sequence: HpSequence = manifest["sequence"]
            .as_str()
            .ok_or_else(|| Error::Config(format!("{}: missing sequence", manifest_path.display())))?
            .parse()?;
        let trial = manifest["label"]
            .as_str()
            .map(str::to_string)
            .or_else(|| dir.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "trial".into());
        let sequence_id = sequence_id_for(&sequence);

        let mut report = ImportReport::default();
        let body = fs::read_to_string(log).map_err(|e| Error::io(log, e))?;
        for (i, line) in body.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let outcome = serde_json::from_str::<BestRecord>(line)
                .map_err(Error::from)
                .and_then(|b| {
                    self.add(ConformationRecord {
                        sequence_id: sequence_id.clone(),
                        sequence: sequence.clone(),
                        actions: b.actions,
                        energy: b.energy,
                        coords: Vec::new(),
                        first_seen_episode: Some(b.episode),
                        trial: trial.clone(),
                    })
                });
            match outcome {
                Ok(true) => report.inserted += 1,
                Ok(false) => report.duplicates += 1,
                Err(e) => report.rejected.push(Rejection {
                    source: log.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                }),
            }
        }
        Ok(report)
    }

    /// Imports every `best.jsonl` found at `path` (a log file, a trial
    /// directory, or a directory of trial directories).
    pub fn import_logs(&mut self, path: &Path) -> Result<ImportReport> {
        let mut report = ImportReport::default();
        for log in find_logs(path)? {
            report.absorb(self.import_best_log(&log)?);
        }
        Ok(report)
    }
}

fn find_logs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let own = path.join(crate::dqn::BEST_FILE);
    if own.is_file() {
        return Ok(vec![own]);
    }
    let mut logs = Vec::new();
    for e in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = e.map_err(|e| Error::io(path, e))?.path().join(crate::dqn::BEST_FILE);
        if p.is_file() {
            logs.push(p);
        }
    }
    logs.sort();
    Ok(logs)
}

/// Benchmark id when the sequence is a benchmark entry, else the sequence.
pub fn sequence_id_for(seq: &HpSequence) -> String {
    benchmark::entries()
        .into_iter()
        .find(|e| &e.sequence == seq)
        .map_or_else(|| seq.to_string(), |e| e.id)
}

fn drawing_name(r: &ConformationRecord) -> String {
    format!("{}_E{}_{}.svg", r.sequence_id, r.energy, r.actions)
}

/// Lattice drawing: backbone polyline, H as filled and P as open circles,
/// non-bonded H-H contacts as dashed links.
pub fn render_svg(seq: &HpSequence, coords: &[(i32, i32)]) -> String {
    const CELL: i32 = 40;
    const PAD: i32 = 30;
    let min_x = coords.iter().map(|c| c.0).min().unwrap_or(0);
    let max_x = coords.iter().map(|c| c.0).max().unwrap_or(0);
    let min_y = coords.iter().map(|c| c.1).min().unwrap_or(0);
    let max_y = coords.iter().map(|c| c.1).max().unwrap_or(0);
    let w = (max_x - min_x) * CELL + 2 * PAD;
    let h = (max_y - min_y) * CELL + 2 * PAD;
    // SVG y grows downwards.
    let px = |c: (i32, i32)| ((c.0 - min_x) * CELL + PAD, (max_y - c.1) * CELL + PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for i in 0..coords.len() {
        for j in i + 2..coords.len() {
            let (a, b) = (coords[i], coords[j]);
            if seq.is_h(i) && seq.is_h(j) && (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1 {
                let ((x1, y1), (x2, y2)) = (px(a), px(b));
                let _ = writeln!(
                    s,
                    r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="red" stroke-width="2" stroke-dasharray="5,4"/>"#
                );
            }
        }
    }
    let points: Vec<String> = coords
        .iter()
        .map(|&c| {
            let (x, y) = px(c);
            format!("{x},{y}")
        })
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="3"/>"#,
        points.join(" ")
    );
    for (i, &c) in coords.iter().enumerate() {
        let (x, y) = px(c);
        let fill = if seq.is_h(i) { "black" } else { "white" };
        let _ = writeln!(
            s,
            r#"<circle cx="{x}" cy="{y}" r="9" fill="{fill}" stroke="black" stroke-width="2"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}
