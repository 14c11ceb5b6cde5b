//! Binary trainer snapshots.
//!
//! Layout: the magic `HPFCKPT\0`, a little-endian `u32` format version, a
//! `u64` header length, the JSON header, then raw little-endian sections in
//! header order: policy parameters, target parameters, Adam first and second
//! moments (all `f32`), and the replay memory.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dqn::{Experience, ReplayMemory, TargetSync, TrainerConfig, TrainerProgress};
use crate::encoding::{EncodedState, FEATURES};
use crate::error::{Error, Result};
use crate::lattice::{Action, ActionMask, HpSequence};
use crate::nn::{AdamState, Architecture, QNetwork, Tensor};
use crate::rng::StreamState;

const MAGIC: &[u8; 8] = b"HPFCKPT\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub sequence: HpSequence,
    pub label: Option<String>,
    pub config: TrainerConfig,
    pub architecture: Architecture,
    /// Episodes finished so far; training resumes at this index.
    pub episode: usize,
    pub updates: u64,
    pub sync: TargetSync,
    pub rng: [StreamState; 4],
    pub adam_step: u64,
    pub progress: TrainerProgress,
    pub shapes: Vec<Vec<usize>>,
    pub memory_len: usize,
    pub memory_capacity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub policy: QNetwork<f32>,
    pub target: QNetwork<f32>,
    pub adam: AdamState<f32>,
    pub memory: ReplayMemory,
}

fn put_tensors(out: &mut Vec<u8>, tensors: &[Tensor<f32>]) {
    for t in tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

fn put_experience(out: &mut Vec<u8>, e: &Experience) {
    out.extend_from_slice(e.s.as_flat());
    out.push(e.a.index() as u8);
    out.extend_from_slice(&e.r.to_le_bytes());
    out.extend_from_slice(e.s_next.as_flat());
    out.push(e.terminal as u8);
    let m = e.next_valid_mask.0;
    out.push(m[0] as u8 | (m[1] as u8) << 1 | (m[2] as u8) << 2);
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn tensors(&mut self, shapes: &[Vec<usize>]) -> Result<Vec<Tensor<f32>>> {
        shapes
            .iter()
            .map(|shape| {
                let n: usize = shape.iter().product();
                let raw = self.take(n * 4)?;
                let data = raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                Tensor::from_vec(shape, data)
            })
            .collect()
    }

    fn state(&mut self, rows: usize) -> Result<EncodedState> {
        EncodedState::from_flat(rows, self.take(rows * FEATURES)?.to_vec())
            .ok_or_else(|| Error::Checkpoint("malformed encoded state".into()))
    }

    fn experience(&mut self, rows: usize) -> Result<Experience> {
        let s = self.state(rows)?;
        let a = Action::from_index(self.u8()? as usize).ok_or_else(|| Error::Checkpoint("bad action".into()))?;
        let r = self.f64()?;
        let s_next = self.state(rows)?;
        let terminal = self.u8()? != 0;
        let m = self.u8()?;
        Ok(Experience {
            s,
            a,
            r,
            s_next,
            terminal,
            next_valid_mask: ActionMask([m & 1 != 0, m & 2 != 0, m & 4 != 0]),
        })
    }
}

pub fn to_bytes(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&ckpt.header)?;
    let mut out = Vec::with_capacity(header.len() + 16 + 16 * ckpt.policy.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    put_tensors(&mut out, ckpt.policy.tensors());
    put_tensors(&mut out, ckpt.target.tensors());
    put_tensors(&mut out, &ckpt.adam.m);
    put_tensors(&mut out, &ckpt.adam.v);
    for e in ckpt.memory.iter() {
        put_experience(&mut out, e);
    }
    Ok(out)
}

pub fn from_bytes(buf: &[u8]) -> Result<Checkpoint> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let len = u64::from_le_bytes(cur.take(8)?.try_into().unwrap()) as usize;
    let header: CheckpointHeader = serde_json::from_slice(cur.take(len)?)?;
    if header.shapes != header.architecture.shapes() {
        return Err(Error::Checkpoint("tensor shapes do not match the architecture".into()));
    }
    let arch = header.architecture;
    let policy = QNetwork::from_tensors(arch, cur.tensors(&header.shapes)?)?;
    let target = QNetwork::from_tensors(arch, cur.tensors(&header.shapes)?)?;
    let adam = AdamState {
        config: header.config.adam,
        step: header.adam_step,
        m: cur.tensors(&header.shapes)?,
        v: cur.tensors(&header.shapes)?,
    };
    let rows = header.sequence.len();
    let mut memory = ReplayMemory::new(header.memory_capacity);
    for _ in 0..header.memory_len {
        memory.push(cur.experience(rows)?);
    }
    if cur.pos != buf.len() {
        return Err(Error::Checkpoint("trailing bytes after replay memory".into()));
    }
    Ok(Checkpoint {
        header,
        policy,
        target,
        adam,
        memory,
    })
}

/// Writes through a temporary file so a crash never leaves a torn checkpoint.
pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let bytes = to_bytes(ckpt)?;
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}
