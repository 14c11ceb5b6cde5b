use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{matmul, Scalar, Tensor};
use crate::encoding::{EncodedState, FEATURES};
use crate::error::{Error, Result};

pub const N_ACTIONS: usize = 3;

/// Network family and size.
///
/// `Lstm` stacks `layers` LSTM layers of width `hidden` over the `N x 6`
/// input and reads Q-values off the last layer's final hidden state. `Fcn`
/// is the fully connected control: `layers` ReLU layers of width `hidden`
/// over the flattened `6 * rows` input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Lstm { layers: usize, hidden: usize },
    Fcn { layers: usize, hidden: usize, rows: usize },
}

impl Architecture {
    pub const LSTM_2X256: Architecture = Architecture::Lstm { layers: 2, hidden: 256 };
    pub const LSTM_3X512: Architecture = Architecture::Lstm { layers: 3, hidden: 512 };

    /// 2x256 up to 36 monomers, 3x512 beyond.
    pub fn default_for_len(n: usize) -> Self {
        if n <= 36 {
            Self::LSTM_2X256
        } else {
            Self::LSTM_3X512
        }
    }

    /// Fully connected control with the same depth as the given LSTM and the
    /// width whose parameter count is closest to it, for `rows`-long inputs.
    pub fn fcn_matching(lstm: Architecture, rows: usize) -> Self {
        let Architecture::Lstm { layers, .. } = lstm else {
            return lstm;
        };
        let target = lstm.param_count() as i64;
        let count = |h: usize| {
            Architecture::Fcn {
                layers,
                hidden: h,
                rows,
            }
            .param_count() as i64
        };
        // param_count is increasing in the width; binary search the crossing.
        let (mut lo, mut hi) = (1usize, 1usize << 16);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if count(mid) < target {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let best = if lo > 1 && (target - count(lo - 1)).abs() <= (count(lo) - target).abs() {
            lo - 1
        } else {
            lo
        };
        Architecture::Fcn {
            layers,
            hidden: best,
            rows,
        }
    }

    pub fn layers(&self) -> usize {
        match *self {
            Architecture::Lstm { layers, .. } | Architecture::Fcn { layers, .. } => layers,
        }
    }

    pub fn hidden(&self) -> usize {
        match *self {
            Architecture::Lstm { hidden, .. } | Architecture::Fcn { hidden, .. } => hidden,
        }
    }

    pub fn is_lstm(&self) -> bool {
        matches!(self, Architecture::Lstm { .. })
    }

    /// Shapes of every parameter tensor, in storage order.
    pub fn shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        match *self {
            Architecture::Lstm { layers, hidden } => {
                for l in 0..layers {
                    let input = if l == 0 { FEATURES } else { hidden };
                    shapes.push(vec![4 * hidden, input]);
                    shapes.push(vec![4 * hidden, hidden]);
                    shapes.push(vec![4 * hidden]);
                }
            }
            Architecture::Fcn { layers, hidden, rows } => {
                for l in 0..layers {
                    let input = if l == 0 { FEATURES * rows } else { hidden };
                    shapes.push(vec![hidden, input]);
                    shapes.push(vec![hidden]);
                }
            }
        }
        shapes.push(vec![N_ACTIONS, self.hidden()]);
        shapes.push(vec![N_ACTIONS]);
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.shapes().iter().map(|s| s.iter().product::<usize>()).sum()
    }

    pub fn tag(&self) -> String {
        match *self {
            Architecture::Lstm { layers, hidden } => format!("lstm{layers}x{hidden}"),
            Architecture::Fcn { layers, hidden, .. } => format!("fcn{layers}x{hidden}"),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.layers() == 0 || self.hidden() == 0 {
            return Err(Error::Config(format!("degenerate architecture {}", self.tag())));
        }
        if let Architecture::Fcn { rows: 0, .. } = self {
            return Err(Error::Config("fully connected network needs rows > 0".into()));
        }
        Ok(())
    }
}

/// Gradient tensors aligned one-to-one with [`QNetwork::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S> {
    tensors: Vec<Tensor<S>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn tensors(&self) -> &[Tensor<S>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<S>] {
        &mut self.tensors
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data())
            .map(|v| v.as_f64() * v.as_f64())
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let s = S::cast_from(max_norm / norm);
            for t in &mut self.tensors {
                t.data_mut().iter_mut().for_each(|v| *v = *v * s);
            }
        }
    }
}

/// Intermediate values of a batched forward pass, consumed by
/// [`QNetwork::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    batch: usize,
    rows: usize,
    /// Network input: time-major `rows x batch x 6` for the LSTM,
    /// batch-major `batch x 6*rows` for the FCN.
    input: Vec<S>,
    /// Per layer outputs: LSTM hidden states (time-major) or FCN activations.
    outputs: Vec<Vec<S>>,
    /// LSTM cell states (time-major), empty for the FCN.
    cells: Vec<Vec<S>>,
    /// `tanh` of the cell states.
    cell_tanh: Vec<Vec<S>>,
    /// LSTM activated gates `[i, f, g, o]` per row, empty for the FCN.
    gates: Vec<Vec<S>>,
    q: Vec<[S; N_ACTIONS]>,
}

impl<S: Scalar> ForwardCache<S> {
    pub fn q(&self) -> &[[S; N_ACTIONS]] {
        &self.q
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Per-layer outputs: every LSTM hidden state, or the FCN activations.
    pub fn layer_outputs(&self) -> &[Vec<S>] {
        &self.outputs
    }
}

/// Q-network parameters: the stacked LSTM (or FCN control) plus the linear
/// three-action head.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork<S> {
    arch: Architecture,
    tensors: Vec<Tensor<S>>,
}

impl<S: Scalar> QNetwork<S> {
    pub fn zeros(arch: Architecture) -> Self {
        let tensors = arch.shapes().iter().map(|s| Tensor::zeros(s)).collect();
        Self { arch, tensors }
    }

    /// Uniform `+-1/sqrt(fan_in)` weights. For the LSTM every weight (input,
    /// recurrent and head) uses the recurrent fan-in `hidden`; biases are zero
    /// except the forget gate's, which starts at one.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let mut net = Self::zeros(arch);
        match arch {
            Architecture::Lstm { layers, hidden } => {
                let bound = 1.0 / (hidden as f64).sqrt();
                for l in 0..layers {
                    for t in &mut net.tensors[3 * l..3 * l + 2] {
                        fill_uniform(t, bound, rng);
                    }
                    net.tensors[3 * l + 2].data_mut()[hidden..2 * hidden].fill(S::one());
                }
                fill_uniform(&mut net.tensors[3 * layers], bound, rng);
            }
            Architecture::Fcn { layers, .. } => {
                for l in 0..=layers {
                    let fan_in = net.tensors[2 * l].shape()[1];
                    fill_uniform(&mut net.tensors[2 * l], 1.0 / (fan_in as f64).sqrt(), rng);
                }
            }
        }
        net
    }

    pub fn from_tensors(arch: Architecture, tensors: Vec<Tensor<S>>) -> Result<Self> {
        arch.validate()?;
        let shapes = arch.shapes();
        if shapes.len() != tensors.len() || shapes.iter().zip(&tensors).any(|(s, t)| s.as_slice() != t.shape()) {
            return Err(Error::ShapeMismatch(format!(
                "tensors do not match architecture {}",
                arch.tag()
            )));
        }
        Ok(Self { arch, tensors })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn tensors(&self) -> &[Tensor<S>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<S>] {
        &mut self.tensors
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn zero_gradients(&self) -> Gradients<S> {
        Gradients {
            tensors: self.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> QNetwork<T> {
        QNetwork {
            arch: self.arch,
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    /// Deep copy; the target network is refreshed through this.
    pub fn clone_params(&self) -> Self {
        self.clone()
    }

    pub fn copy_from(&mut self, other: &Self) {
        assert_eq!(self.arch, other.arch, "architecture mismatch");
        for (dst, src) in self.tensors.iter_mut().zip(&other.tensors) {
            dst.data_mut().copy_from_slice(src.data());
        }
    }

    pub fn q_values(&self, x: &EncodedState) -> Result<[S; N_ACTIONS]> {
        Ok(self.forward(&[x])?[0])
    }

    pub fn forward(&self, xs: &[&EncodedState]) -> Result<Vec<[S; N_ACTIONS]>> {
        Ok(self.forward_cached(xs)?.q)
    }

    pub fn forward_cached(&self, xs: &[&EncodedState]) -> Result<ForwardCache<S>> {
        let batch = xs.len();
        let rows = xs.first().map_or(0, |x| x.rows());
        if batch == 0 || rows == 0 {
            return Err(Error::ShapeMismatch("empty input batch".into()));
        }
        if let Some(bad) = xs.iter().find(|x| x.rows() != rows) {
            return Err(Error::ShapeMismatch(format!(
                "batch mixes {rows}-row and {}-row inputs",
                bad.rows()
            )));
        }
        match self.arch {
            Architecture::Lstm { .. } => Ok(self.lstm_forward(xs, batch, rows)),
            Architecture::Fcn { rows: expected, .. } => {
                if rows != expected {
                    return Err(Error::ShapeMismatch(format!(
                        "fully connected network built for {expected} rows, got {rows}"
                    )));
                }
                Ok(self.fcn_forward(xs, batch, rows))
            }
        }
    }

    /// Exact gradient of `sum_b <upstream[b], q[b]>` with respect to every
    /// parameter, by backpropagation through time.
    pub fn backward(&self, cache: &ForwardCache<S>, upstream: &[[S; N_ACTIONS]]) -> Gradients<S> {
        assert_eq!(upstream.len(), cache.batch, "upstream batch size");
        let dq: Vec<S> = upstream.iter().flatten().copied().collect();
        match self.arch {
            Architecture::Lstm { .. } => self.lstm_backward(cache, &dq),
            Architecture::Fcn { .. } => self.fcn_backward(cache, &dq),
        }
    }

    fn head(&self) -> (&Tensor<S>, &Tensor<S>) {
        let k = self.tensors.len();
        (&self.tensors[k - 2], &self.tensors[k - 1])
    }

    fn apply_head(&self, features: &[S], batch: usize) -> Vec<[S; N_ACTIONS]> {
        let hidden = self.arch.hidden();
        let (w, b) = self.head();
        let mut out = vec![S::zero(); batch * N_ACTIONS];
        matmul(
            batch,
            hidden,
            N_ACTIONS,
            features,
            false,
            w.data(),
            true,
            S::zero(),
            &mut out,
        );
        out.chunks_exact(N_ACTIONS)
            .map(|r| [r[0] + b.data()[0], r[1] + b.data()[1], r[2] + b.data()[2]])
            .collect()
    }

    /// Head gradients into the last two gradient slots; returns d(features).
    fn head_backward(&self, features: &[S], dq: &[S], batch: usize, grads: &mut Gradients<S>) -> Vec<S> {
        let hidden = self.arch.hidden();
        let k = grads.tensors.len();
        matmul(
            N_ACTIONS,
            batch,
            hidden,
            dq,
            true,
            features,
            false,
            S::zero(),
            grads.tensors[k - 2].data_mut(),
        );
        let db = grads.tensors[k - 1].data_mut();
        for row in dq.chunks_exact(N_ACTIONS) {
            for (d, &g) in db.iter_mut().zip(row) {
                *d = *d + g;
            }
        }
        let mut dfeat = vec![S::zero(); batch * hidden];
        matmul(
            batch,
            N_ACTIONS,
            hidden,
            dq,
            false,
            self.head().0.data(),
            false,
            S::zero(),
            &mut dfeat,
        );
        dfeat
    }

    fn lstm_forward(&self, xs: &[&EncodedState], batch: usize, rows: usize) -> ForwardCache<S> {
        let Architecture::Lstm { layers, hidden } = self.arch else {
            unreachable!()
        };
        let h4 = 4 * hidden;
        let mut input = vec![S::zero(); rows * batch * FEATURES];
        for (b, x) in xs.iter().enumerate() {
            for t in 0..rows {
                let dst = &mut input[(t * batch + b) * FEATURES..][..FEATURES];
                x.row(t).iter().zip(dst).for_each(|(&v, d)| *d = S::cast_from(v as f64));
            }
        }

        let mut outputs: Vec<Vec<S>> = Vec::with_capacity(layers);
        let mut cells = Vec::with_capacity(layers);
        let mut cell_tanh = Vec::with_capacity(layers);
        let mut gates_all = Vec::with_capacity(layers);
        for l in 0..layers {
            let (w, u, bias) = (&self.tensors[3 * l], &self.tensors[3 * l + 1], &self.tensors[3 * l + 2]);
            let in_dim = w.shape()[1];
            let layer_in: &[S] = if l == 0 { &input } else { &outputs[l - 1] };

            let mut gates = vec![S::zero(); rows * batch * h4];
            matmul(
                rows * batch,
                in_dim,
                h4,
                layer_in,
                false,
                w.data(),
                true,
                S::zero(),
                &mut gates,
            );
            for row in gates.chunks_exact_mut(h4) {
                row.iter_mut().zip(bias.data()).for_each(|(z, &b)| *z = *z + b);
            }

            let mut h = vec![S::zero(); rows * batch * hidden];
            let mut c = vec![S::zero(); rows * batch * hidden];
            let mut tc = vec![S::zero(); rows * batch * hidden];
            let block = batch * hidden;
            for t in 0..rows {
                let g_t = &mut gates[t * batch * h4..(t + 1) * batch * h4];
                let (h_prev, h_rest) = h.split_at_mut(t * block);
                let (c_prev, c_rest) = c.split_at_mut(t * block);
                if t > 0 {
                    matmul(
                        batch,
                        hidden,
                        h4,
                        &h_prev[(t - 1) * block..],
                        false,
                        u.data(),
                        true,
                        S::one(),
                        g_t,
                    );
                }
                let h_t = &mut h_rest[..block];
                let c_t = &mut c_rest[..block];
                let tc_t = &mut tc[t * block..(t + 1) * block];
                for b in 0..batch {
                    let g = &mut g_t[b * h4..(b + 1) * h4];
                    S::sigmoid_slice(&mut g[..2 * hidden]);
                    S::tanh_slice(&mut g[2 * hidden..3 * hidden]);
                    S::sigmoid_slice(&mut g[3 * hidden..]);
                    let cb = &mut c_t[b * hidden..(b + 1) * hidden];
                    let (i_g, rest) = g.split_at(hidden);
                    let (f_g, rest) = rest.split_at(hidden);
                    let c_g = &rest[..hidden];
                    if t > 0 {
                        let cp = &c_prev[(t - 1) * block + b * hidden..][..hidden];
                        for j in 0..hidden {
                            cb[j] = f_g[j] * cp[j] + i_g[j] * c_g[j];
                        }
                    } else {
                        for j in 0..hidden {
                            cb[j] = i_g[j] * c_g[j];
                        }
                    }
                }
                tc_t.copy_from_slice(c_t);
                S::tanh_slice(tc_t);
                for b in 0..batch {
                    let o_g = &g_t[b * h4 + 3 * hidden..(b + 1) * h4];
                    let k = b * hidden;
                    for j in 0..hidden {
                        h_t[k + j] = o_g[j] * tc_t[k + j];
                    }
                }
            }
            outputs.push(h);
            cells.push(c);
            cell_tanh.push(tc);
            gates_all.push(gates);
        }
        let last = &outputs[layers - 1][(rows - 1) * batch * hidden..];
        let q = self.apply_head(last, batch);
        ForwardCache {
            batch,
            rows,
            input,
            outputs,
            cells,
            cell_tanh,
            gates: gates_all,
            q,
        }
    }

    fn lstm_backward(&self, cache: &ForwardCache<S>, dq: &[S]) -> Gradients<S> {
        let Architecture::Lstm { layers, hidden } = self.arch else {
            unreachable!()
        };
        let (batch, rows) = (cache.batch, cache.rows);
        let h4 = 4 * hidden;
        let block = batch * hidden;
        let mut grads = self.zero_gradients();

        let top = &cache.outputs[layers - 1];
        let dlast = self.head_backward(&top[(rows - 1) * block..], dq, batch, &mut grads);
        let mut d_out = vec![S::zero(); rows * block];
        d_out[(rows - 1) * block..].copy_from_slice(&dlast);

        for l in (0..layers).rev() {
            let (w, u) = (&self.tensors[3 * l], &self.tensors[3 * l + 1]);
            let in_dim = w.shape()[1];
            let layer_in: &[S] = if l == 0 { &cache.input } else { &cache.outputs[l - 1] };
            let (gates, c, h) = (&cache.gates[l], &cache.cells[l], &cache.outputs[l]);
            let tcs = &cache.cell_tanh[l];

            let mut dz = vec![S::zero(); rows * batch * h4];
            let mut dh_next = vec![S::zero(); block];
            let mut dc_next = vec![S::zero(); block];
            let one = S::one();
            for t in (0..rows).rev() {
                let dz_t = &mut dz[t * batch * h4..(t + 1) * batch * h4];
                for b in 0..batch {
                    let g = &gates[(t * batch + b) * h4..][..h4];
                    let dzb = &mut dz_t[b * h4..(b + 1) * h4];
                    for j in 0..hidden {
                        let k = b * hidden + j;
                        let dh = d_out[t * block + k] + dh_next[k];
                        let (i_g, f_g, c_g, o_g) = (g[j], g[hidden + j], g[2 * hidden + j], g[3 * hidden + j]);
                        let tc = tcs[t * block + k];
                        let cp = if t > 0 { c[(t - 1) * block + k] } else { S::zero() };
                        let d_o = dh * tc;
                        let dc = dc_next[k] + dh * o_g * (one - tc * tc);
                        dc_next[k] = dc * f_g;
                        dzb[j] = dc * c_g * i_g * (one - i_g);
                        dzb[hidden + j] = dc * cp * f_g * (one - f_g);
                        dzb[2 * hidden + j] = dc * i_g * (one - c_g * c_g);
                        dzb[3 * hidden + j] = d_o * o_g * (one - o_g);
                    }
                }
                if t > 0 {
                    matmul(batch, h4, hidden, dz_t, false, u.data(), false, S::zero(), &mut dh_next);
                }
            }

            let (gw, rest) = grads.tensors[3 * l..].split_at_mut(1);
            let (gu, gb) = rest.split_at_mut(1);
            matmul(
                h4,
                rows * batch,
                in_dim,
                &dz,
                true,
                layer_in,
                false,
                S::zero(),
                gw[0].data_mut(),
            );
            if rows > 1 {
                matmul(
                    h4,
                    (rows - 1) * batch,
                    hidden,
                    &dz[batch * h4..],
                    true,
                    h,
                    false,
                    S::zero(),
                    gu[0].data_mut(),
                );
            }
            let db = gb[0].data_mut();
            for row in dz.chunks_exact(h4) {
                db.iter_mut().zip(row).for_each(|(d, &v)| *d = *d + v);
            }
            if l > 0 {
                d_out = vec![S::zero(); rows * batch * in_dim];
                matmul(
                    rows * batch,
                    h4,
                    in_dim,
                    &dz,
                    false,
                    w.data(),
                    false,
                    S::zero(),
                    &mut d_out,
                );
            }
        }
        grads
    }

    fn fcn_forward(&self, xs: &[&EncodedState], batch: usize, rows: usize) -> ForwardCache<S> {
        let layers = self.arch.layers();
        let width = rows * FEATURES;
        let mut input = vec![S::zero(); batch * width];
        for (b, x) in xs.iter().enumerate() {
            x.write_into(&mut input[b * width..(b + 1) * width]);
        }
        let mut outputs: Vec<Vec<S>> = Vec::with_capacity(layers);
        for l in 0..layers {
            let (w, bias) = (&self.tensors[2 * l], &self.tensors[2 * l + 1]);
            let (out_dim, in_dim) = (w.shape()[0], w.shape()[1]);
            let layer_in: &[S] = if l == 0 { &input } else { &outputs[l - 1] };
            let mut a = vec![S::zero(); batch * out_dim];
            matmul(
                batch,
                in_dim,
                out_dim,
                layer_in,
                false,
                w.data(),
                true,
                S::zero(),
                &mut a,
            );
            for row in a.chunks_exact_mut(out_dim) {
                row.iter_mut()
                    .zip(bias.data())
                    .for_each(|(z, &b)| *z = (*z + b).max(S::zero()));
            }
            outputs.push(a);
        }
        let q = self.apply_head(&outputs[layers - 1], batch);
        ForwardCache {
            batch,
            rows,
            input,
            outputs,
            cells: Vec::new(),
            cell_tanh: Vec::new(),
            gates: Vec::new(),
            q,
        }
    }

    fn fcn_backward(&self, cache: &ForwardCache<S>, dq: &[S]) -> Gradients<S> {
        let layers = self.arch.layers();
        let batch = cache.batch;
        let mut grads = self.zero_gradients();
        let mut da = self.head_backward(&cache.outputs[layers - 1], dq, batch, &mut grads);
        for l in (0..layers).rev() {
            let w = &self.tensors[2 * l];
            let (out_dim, in_dim) = (w.shape()[0], w.shape()[1]);
            let a = &cache.outputs[l];
            for (d, &v) in da.iter_mut().zip(a) {
                if v <= S::zero() {
                    *d = S::zero();
                }
            }
            let layer_in: &[S] = if l == 0 { &cache.input } else { &cache.outputs[l - 1] };
            let (gw, gb) = grads.tensors[2 * l..].split_at_mut(1);
            matmul(
                out_dim,
                batch,
                in_dim,
                &da,
                true,
                layer_in,
                false,
                S::zero(),
                gw[0].data_mut(),
            );
            let db = gb[0].data_mut();
            for row in da.chunks_exact(out_dim) {
                db.iter_mut().zip(row).for_each(|(d, &v)| *d = *d + v);
            }
            if l > 0 {
                let mut prev = vec![S::zero(); batch * in_dim];
                matmul(
                    batch,
                    out_dim,
                    in_dim,
                    &da,
                    false,
                    w.data(),
                    false,
                    S::zero(),
                    &mut prev,
                );
                da = prev;
            }
        }
        grads
    }
}

fn fill_uniform<S: Scalar, R: Rng + ?Sized>(t: &mut Tensor<S>, bound: f64, rng: &mut R) {
    for v in t.data_mut() {
        *v = S::cast_from(rng.gen_range(-bound..bound));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::encode;
    use crate::lattice::{parse_actions, replay, HpSequence};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(seq: &str, actions: &str) -> EncodedState {
        let seq: HpSequence = seq.parse().unwrap();
        encode(&replay(&seq, &parse_actions(actions).unwrap()).unwrap(), &seq)
    }

    #[test]
    fn lstm_2x256_size() {
        assert_eq!(Architecture::LSTM_2X256.param_count(), 269_312 + 525_312 + 771);
        assert_eq!(Architecture::default_for_len(36), Architecture::LSTM_2X256);
        assert_eq!(Architecture::default_for_len(48), Architecture::LSTM_3X512);
    }

    #[test]
    fn fcn_control_within_ten_percent() {
        for (lstm, n) in [
            (Architecture::LSTM_2X256, 20),
            (Architecture::LSTM_2X256, 36),
            (Architecture::LSTM_3X512, 50),
        ] {
            let fcn = Architecture::fcn_matching(lstm, n);
            assert_eq!(fcn.layers(), lstm.layers());
            let ratio = fcn.param_count() as f64 / lstm.param_count() as f64;
            assert!((ratio - 1.0).abs() < 0.1, "{} vs {}: {ratio}", fcn.tag(), lstm.tag());
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let x = state("HPPHPPHH", "LRF");
        for arch in [
            Architecture::Lstm { layers: 2, hidden: 5 },
            Architecture::Fcn {
                layers: 2,
                hidden: 7,
                rows: 8,
            },
        ] {
            let net = QNetwork::<f32>::zeros(arch);
            assert_eq!(net.q_values(&x).unwrap(), [0.0; 3]);
        }
    }

    #[test]
    fn head_bias_passes_through() {
        let xs = [state("HPPHPPHH", "LRF"), state("HHHHPPHH", "")];
        for arch in [
            Architecture::Lstm { layers: 2, hidden: 5 },
            Architecture::Fcn {
                layers: 2,
                hidden: 7,
                rows: 8,
            },
        ] {
            let mut net = QNetwork::<f64>::zeros(arch);
            let k = net.tensors().len();
            net.tensors_mut()[k - 1].data_mut().copy_from_slice(&[1.5, -2.0, 0.25]);
            for x in &xs {
                assert_eq!(net.q_values(x).unwrap(), [1.5, -2.0, 0.25]);
            }
        }
    }

    #[test]
    fn head_bias_gradient_is_upstream() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = QNetwork::<f64>::init(Architecture::Lstm { layers: 2, hidden: 4 }, &mut rng);
        let x = state("HPPHPH", "LF");
        let cache = net.forward_cached(&[&x]).unwrap();
        let g = net.backward(&cache, &[[0.3, -1.0, 2.0]]);
        assert_eq!(g.tensors().last().unwrap().data(), &[0.3, -1.0, 2.0]);
        let zero = net.backward(&cache, &[[0.0; 3]]);
        assert!(zero.tensors().iter().flat_map(|t| t.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn mixed_lengths_rejected() {
        let net = QNetwork::<f32>::zeros(Architecture::Lstm { layers: 1, hidden: 3 });
        let a = state("HPPH", "");
        let b = state("HPPHH", "");
        assert!(net.forward(&[&a, &b]).is_err());
        let fcn = QNetwork::<f32>::zeros(Architecture::Fcn {
            layers: 1,
            hidden: 3,
            rows: 5,
        });
        assert!(fcn.q_values(&a).is_err());
    }

    #[test]
    fn batch_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = QNetwork::<f64>::init(Architecture::Lstm { layers: 2, hidden: 6 }, &mut rng);
        let xs = [
            state("HPPHPHHP", "LR"),
            state("HPPHPHHP", "LRRF"),
            state("HPPHPHHP", ""),
        ];
        let refs: Vec<&EncodedState> = xs.iter().collect();
        let batched = net.forward(&refs).unwrap();
        for (x, q) in xs.iter().zip(&batched) {
            let single = net.q_values(x).unwrap();
            for a in 0..3 {
                assert!((single[a] - q[a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clone_is_deep() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut src = QNetwork::<f32>::init(Architecture::Lstm { layers: 1, hidden: 4 }, &mut rng);
        let copy = src.clone_params();
        let x = state("HPPHPH", "L");
        assert_eq!(copy.q_values(&x).unwrap(), src.q_values(&x).unwrap());
        src.tensors_mut()[0].data_mut()[0] += 1.0;
        assert_ne!(copy, src);
        assert_eq!(copy.clone_params().clone_params(), copy);
    }
}
