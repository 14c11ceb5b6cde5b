//! Exhaustive enumeration of the constrained walk tree (fixed first bond,
//! first turn Left) for exact optimal energies, degeneracies and walk counts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{actions_to_string, replay, Action, Coord, HpSequence, Residue};

/// Largest length enumerated without an explicit override.
pub const DEFAULT_MAX_LEN: usize = 22;
/// Largest length for which every complete walk is written out.
pub const LANDSCAPE_MAX_LEN: usize = 14;

/// Complete-walk counts under the symmetry constraints.
pub const KNOWN_COUNTS: [(usize, u64); 4] = [(3, 2), (4, 5), (20, 41_889_578), (24, 2_158_326_727)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerateOptions {
    pub collect_optimal: bool,
    /// Maximum number of optimal action strings kept.
    pub cap: usize,
    pub max_len: usize,
    /// Enumerate beyond `max_len` anyway.
    pub allow_large: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            collect_optimal: false,
            cap: 1000,
            max_len: DEFAULT_MAX_LEN,
            allow_large: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub n: usize,
    pub sequence: String,
    pub complete_count: u64,
    pub trapped_count: u64,
    /// `None` only if no complete walk exists.
    pub min_energy: Option<i32>,
    pub degeneracy: u64,
    /// Complete walks per energy, most negative first.
    pub energy_counts: Vec<(i32, u64)>,
    pub optimal_actions: Vec<String>,
}

/// Receives every leaf of the walk tree in depth-first `L, F, R` order.
pub trait WalkVisitor {
    fn complete(&mut self, actions: &[Action], contacts: u32);
    fn trapped(&mut self, _actions: &[Action], _contacts: u32) {}
}

#[derive(Debug, Clone)]
struct Tally {
    complete: u64,
    trapped: u64,
    /// Complete walks per contact count.
    by_contacts: Vec<u64>,
    collect: bool,
    cap: usize,
    best: u32,
    optimal: Vec<String>,
}

impl Tally {
    fn new(n: usize, opts: &EnumerateOptions) -> Self {
        Self {
            complete: 0,
            trapped: 0,
            by_contacts: vec![0; n + 1],
            collect: opts.collect_optimal,
            cap: opts.cap,
            best: 0,
            optimal: Vec::new(),
        }
    }

    fn merge(&mut self, other: Tally) {
        let had = self.complete > 0;
        self.complete += other.complete;
        self.trapped += other.trapped;
        for (a, b) in self.by_contacts.iter_mut().zip(&other.by_contacts) {
            *a += b;
        }
        if other.complete == 0 {
            return;
        }
        if !had || other.best > self.best {
            self.best = other.best;
            self.optimal = other.optimal;
        } else if other.best == self.best {
            let room = self.cap.saturating_sub(self.optimal.len());
            self.optimal.extend(other.optimal.into_iter().take(room));
        }
    }

    fn report(self, seq: &HpSequence) -> EnumerationReport {
        let energy_counts: Vec<(i32, u64)> = self
            .by_contacts
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (-(k as i32), c))
            .collect();
        let min_energy = energy_counts.first().map(|&(e, _)| e);
        EnumerationReport {
            n: seq.len(),
            sequence: seq.to_string(),
            complete_count: self.complete,
            trapped_count: self.trapped,
            min_energy,
            degeneracy: energy_counts.first().map_or(0, |&(_, c)| c),
            energy_counts,
            optimal_actions: self.optimal,
        }
    }
}

impl WalkVisitor for Tally {
    #[inline]
    fn complete(&mut self, actions: &[Action], contacts: u32) {
        self.complete += 1;
        self.by_contacts[contacts as usize] += 1;
        if self.complete == 1 || contacts > self.best {
            self.best = contacts;
            self.optimal.clear();
        }
        if self.collect && contacts == self.best && self.optimal.len() < self.cap {
            self.optimal.push(actions_to_string(actions));
        }
    }

    #[inline]
    fn trapped(&mut self, _actions: &[Action], _contacts: u32) {
        self.trapped += 1;
    }
}

/// Headings in the environment's order (Up, Left, Down, Right): `L` is +1.
#[derive(Debug, Clone)]
struct Grid {
    n: usize,
    h: Vec<bool>,
    width: isize,
    cells: Vec<u8>,
    steps: [isize; 4],
}

const EMPTY: u8 = 0;
const POLAR: u8 = 1;
const HYDRO: u8 = 2;

impl Grid {
    fn new(seq: &HpSequence) -> Self {
        let n = seq.len();
        let width = 2 * n as isize + 3;
        Self {
            n,
            h: seq.residues().iter().map(|&r| r == Residue::H).collect(),
            width,
            cells: vec![EMPTY; (width * width) as usize],
            steps: [width, -1, -width, 1],
        }
    }

    fn origin(&self) -> isize {
        (self.width / 2) * self.width + self.width / 2
    }

    fn mark(&self, k: usize) -> u8 {
        if self.h[k] {
            HYDRO
        } else {
            POLAR
        }
    }

    /// New contacts made by placing monomer `k` at `pos`, arriving from `from`.
    #[inline]
    fn gain(&self, k: usize, pos: isize, from: isize) -> u32 {
        if !self.h[k] {
            return 0;
        }
        let mut g = 0;
        for d in self.steps {
            let q = pos + d;
            if q != from && self.cells[q as usize] == HYDRO {
                g += 1;
            }
        }
        g
    }
}

/// Walk-tree node: head position, heading, whether a turn happened, depth
/// (monomers placed) and contacts so far.
#[derive(Debug, Clone, Copy)]
struct Node {
    pos: isize,
    heading: usize,
    turned: bool,
    placed: usize,
    contacts: u32,
}

fn moves(node: &Node) -> impl Iterator<Item = (Action, usize)> + '_ {
    Action::ALL.into_iter().filter_map(move |a| {
        let heading = match a {
            Action::L => (node.heading + 1) % 4,
            Action::F => node.heading,
            Action::R if node.turned => (node.heading + 3) % 4,
            Action::R => return None,
        };
        Some((a, heading))
    })
}

fn dfs<V: WalkVisitor>(grid: &mut Grid, node: Node, path: &mut Vec<Action>, visitor: &mut V) {
    if node.placed == grid.n {
        visitor.complete(path, node.contacts);
        return;
    }
    let mut any = false;
    for (a, heading) in moves(&node) {
        let next = node.pos + grid.steps[heading];
        if grid.cells[next as usize] != EMPTY {
            continue;
        }
        any = true;
        let k = node.placed;
        let contacts = node.contacts + grid.gain(k, next, node.pos);
        grid.cells[next as usize] = grid.mark(k);
        path.push(a);
        dfs(
            grid,
            Node {
                pos: next,
                heading,
                turned: node.turned || a != Action::F,
                placed: k + 1,
                contacts,
            },
            path,
            visitor,
        );
        path.pop();
        grid.cells[next as usize] = EMPTY;
    }
    if !any {
        visitor.trapped(path, node.contacts);
    }
}

fn root(grid: &mut Grid) -> Node {
    let o = grid.origin();
    let p1 = o + grid.steps[0];
    grid.cells[o as usize] = grid.mark(0);
    grid.cells[p1 as usize] = grid.mark(1);
    Node {
        pos: p1,
        heading: 0,
        turned: false,
        placed: 2,
        contacts: 0,
    }
}

/// Visits every leaf sequentially in depth-first `L, F, R` order.
pub fn visit<V: WalkVisitor>(seq: &HpSequence, visitor: &mut V) {
    let mut grid = Grid::new(seq);
    let node = root(&mut grid);
    let mut path = Vec::with_capacity(seq.len());
    dfs(&mut grid, node, &mut path, visitor);
}

/// A prefix of the tree: either an internal node to expand or a leaf reached
/// before the split depth.
enum Task {
    Subtree(Vec<Action>),
    Leaf(Vec<Action>, u32, bool),
}

struct Splitter {
    depth: usize,
    tasks: Vec<Task>,
}

impl Splitter {
    fn split(&mut self, grid: &mut Grid, node: Node, path: &mut Vec<Action>) {
        if node.placed == grid.n {
            self.tasks.push(Task::Leaf(path.clone(), node.contacts, true));
            return;
        }
        if path.len() == self.depth {
            self.tasks.push(Task::Subtree(path.clone()));
            return;
        }
        let mut any = false;
        for (a, heading) in moves(&node) {
            let next = node.pos + grid.steps[heading];
            if grid.cells[next as usize] != EMPTY {
                continue;
            }
            any = true;
            let k = node.placed;
            let contacts = node.contacts + grid.gain(k, next, node.pos);
            grid.cells[next as usize] = grid.mark(k);
            path.push(a);
            self.split(
                grid,
                Node {
                    pos: next,
                    heading,
                    turned: node.turned || a != Action::F,
                    placed: k + 1,
                    contacts,
                },
                path,
            );
            path.pop();
            grid.cells[next as usize] = EMPTY;
        }
        if !any {
            self.tasks.push(Task::Leaf(path.clone(), node.contacts, false));
        }
    }
}

/// Replays `prefix` on a fresh grid, returning the node it reaches.
fn descend(grid: &mut Grid, prefix: &[Action]) -> Node {
    let mut node = root(grid);
    for &a in prefix {
        let (_, heading) = moves(&node).find(|&(b, _)| b == a).expect("prefix came from the tree");
        let next = node.pos + grid.steps[heading];
        let k = node.placed;
        node.contacts += grid.gain(k, next, node.pos);
        grid.cells[next as usize] = grid.mark(k);
        node = Node {
            pos: next,
            heading,
            turned: node.turned || a != Action::F,
            placed: k + 1,
            contacts: node.contacts,
        };
    }
    node
}

fn check_bound(n: usize, opts: &EnumerateOptions) -> Result<()> {
    if n > opts.max_len && !opts.allow_large {
        return Err(Error::EnumerationBound { n, bound: opts.max_len });
    }
    Ok(())
}

/// Full enumeration, split into independent subtrees processed on the rayon
/// pool. Results are merged in tree order, so the report (including the
/// order of `optimal_actions`) does not depend on the number of workers.
pub fn enumerate_with(seq: &HpSequence, opts: &EnumerateOptions) -> Result<EnumerationReport> {
    let n = seq.len();
    check_bound(n, opts)?;
    let depth = (n - 2).min(10);
    let mut grid = Grid::new(seq);
    let node = root(&mut grid);
    let mut splitter = Splitter {
        depth,
        tasks: Vec::new(),
    };
    splitter.split(&mut grid, node, &mut Vec::new());

    let parts: Vec<Tally> = splitter
        .tasks
        .into_par_iter()
        .map(|task| {
            let mut tally = Tally::new(n, opts);
            match task {
                Task::Leaf(path, contacts, true) => tally.complete(&path, contacts),
                Task::Leaf(path, contacts, false) => tally.trapped(&path, contacts),
                Task::Subtree(prefix) => {
                    let mut grid = Grid::new(seq);
                    let node = descend(&mut grid, &prefix);
                    let mut path = prefix;
                    dfs(&mut grid, node, &mut path, &mut tally);
                }
            }
            tally
        })
        .collect();
    let mut total = Tally::new(n, opts);
    for part in parts {
        total.merge(part);
    }
    Ok(total.report(seq))
}

pub fn enumerate(seq: &HpSequence, collect_optimal: bool, cap: usize) -> Result<EnumerationReport> {
    enumerate_with(
        seq,
        &EnumerateOptions {
            collect_optimal,
            cap,
            ..Default::default()
        },
    )
}

pub fn optimal_energy(seq: &HpSequence) -> Result<i32> {
    let report = enumerate(seq, false, 0)?;
    Ok(report.min_energy.expect("every length >= 3 has a complete walk"))
}

/// Complete-walk count for length `n` (independent of the sequence).
pub fn count_walks(n: usize, opts: &EnumerateOptions) -> Result<u64> {
    let seq = HpSequence::new(vec![Residue::P; n])?;
    Ok(enumerate_with(&seq, opts)?.complete_count)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountCheck {
    pub n: usize,
    pub expected: u64,
    pub found: u64,
    pub matches: bool,
}

/// Recomputes the known counts; the 24-mer case (billions of leaves) only
/// when `include_heavy` is set.
pub fn verify_counts(include_heavy: bool) -> Result<Vec<CountCheck>> {
    let opts = EnumerateOptions {
        allow_large: true,
        ..Default::default()
    };
    KNOWN_COUNTS
        .iter()
        .filter(|&&(n, _)| include_heavy || n <= DEFAULT_MAX_LEN)
        .map(|&(n, expected)| {
            let found = count_walks(n, &opts)?;
            Ok(CountCheck {
                n,
                expected,
                found,
                matches: found == expected,
            })
        })
        .collect()
}

/// One complete walk of the landscape dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandscapeRecord {
    pub actions: String,
    pub coords: Vec<(i32, i32)>,
    pub score: u32,
}

struct Collect(Vec<(Vec<Action>, u32)>);

impl WalkVisitor for Collect {
    fn complete(&mut self, actions: &[Action], contacts: u32) {
        self.0.push((actions.to_vec(), contacts));
    }
}

pub fn landscape(seq: &HpSequence) -> Result<Vec<LandscapeRecord>> {
    if seq.len() > LANDSCAPE_MAX_LEN {
        return Err(Error::LandscapeBound {
            n: seq.len(),
            bound: LANDSCAPE_MAX_LEN,
        });
    }
    let mut walks = Collect(Vec::new());
    visit(seq, &mut walks);
    walks
        .0
        .into_iter()
        .map(|(actions, score)| {
            let coords = replay(seq, &actions)?
                .placed()
                .iter()
                .map(|&Coord { x, y }| (x, y))
                .collect();
            Ok(LandscapeRecord {
                actions: actions_to_string(&actions),
                coords,
                score,
            })
        })
        .collect()
}

/// Writes one JSON object per complete walk; returns the record count.
pub fn landscape_export(seq: &HpSequence, path: &Path) -> Result<usize> {
    let records = landscape(seq)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in &records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(records.len())
}
