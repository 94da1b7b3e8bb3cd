//! Stacked bidirectional LSTM regressor with a two-layer dense head.
//!
//! All parameters live in one flat vector so the optimizer, gradient checks
//! and checkpoints can treat them uniformly. Per direction and layer the
//! block is `W` (4H × (in + H), row-major, gate order i, f, g, o) followed by
//! `b` (4H). The head is `W1` (D × 2H), `b1` (D), `W2` (1 × D), `b2` (1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per parallel work unit. Fixed so the reduction order, and hence
/// the result, does not depend on the thread count.
const CHUNK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiLstmConfig {
    /// Timesteps per input window.
    pub window: usize,
    /// Hidden units per direction per layer.
    pub hidden: usize,
    pub layers: usize,
    /// Width of the ReLU dense layer.
    pub dense_hidden: usize,
    /// Dropout rate between recurrent layers (training only).
    pub dropout: f64,
}

impl Default for BiLstmConfig {
    fn default() -> Self {
        Self {
            window: 9,
            hidden: 50,
            layers: 3,
            dense_hidden: 50,
            dropout: 0.2,
        }
    }
}

impl BiLstmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.hidden == 0 || self.layers == 0 || self.dense_hidden == 0 {
            return Err(Error::InvalidConfig(format!(
                "window, hidden, layers and dense_hidden must all be >= 1: {self:?}"
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }

    pub fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            1
        } else {
            2 * self.hidden
        }
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).total
    }
}

#[derive(Debug, Clone, Copy)]
struct CellBlock {
    w: usize,
    b: usize,
    input: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    cells: Vec<[CellBlock; 2]>,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    total: usize,
}

impl Layout {
    fn new(cfg: &BiLstmConfig) -> Self {
        let h = cfg.hidden;
        let mut at = 0;
        let mut cells = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            let input = cfg.layer_input(l);
            let block = |at: &mut usize| {
                let w = *at;
                *at += 4 * h * (input + h);
                let b = *at;
                *at += 4 * h;
                CellBlock { w, b, input }
            };
            let fwd = block(&mut at);
            let bwd = block(&mut at);
            cells.push([fwd, bwd]);
        }
        let d = cfg.dense_hidden;
        let w1 = at;
        at += d * 2 * h;
        let b1 = at;
        at += d;
        let w2 = at;
        at += d;
        let b2 = at;
        at += 1;
        Self {
            cells,
            w1,
            b1,
            w2,
            b2,
            total: at,
        }
    }
}

/// Named parameter group, used by gradient checks and checkpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGroup {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    cfg: BiLstmConfig,
    params: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-direction cache in processing order.
#[derive(Debug, Clone, Default)]
struct DirCache {
    z: Vec<f64>,
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct LayerCache {
    input: Vec<f64>,
    dirs: [DirCache; 2],
    output: Vec<f64>,
    /// Inverted-dropout multipliers applied to `output` on its way up.
    mask: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
struct Workspace {
    layers: Vec<LayerCache>,
    feat: Vec<f64>,
    u: Vec<f64>,
    d_out: Vec<f64>,
    d_in: Vec<f64>,
    da: Vec<f64>,
    dh_next: Vec<f64>,
    dc_next: Vec<f64>,
}

impl BiLstm {
    /// Weights drawn uniformly from ±1/√fan_in, biases zero.
    pub fn new(cfg: BiLstmConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; layout.total];
        let mut fill = |slice: &mut [f64], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in slice {
                *p = rng.random_range(-bound..bound);
            }
        };
        let h = cfg.hidden;
        for pair in &layout.cells {
            for cell in pair {
                let n = 4 * h * (cell.input + h);
                fill(&mut params[cell.w..cell.w + n], cell.input + h);
            }
        }
        let d = cfg.dense_hidden;
        fill(&mut params[layout.w1..layout.w1 + d * 2 * h], 2 * h);
        fill(&mut params[layout.w2..layout.w2 + d], d);
        Ok(Self { cfg, params })
    }

    pub fn zeros(cfg: BiLstmConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            params: vec![0.0; cfg.param_count()],
            cfg,
        })
    }

    pub fn from_params(cfg: BiLstmConfig, params: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if params.len() != cfg.param_count() {
            return Err(Error::Shape {
                expected: cfg.param_count(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::RejectedInput("non-finite weight".into()));
        }
        Ok(Self { cfg, params })
    }

    pub fn config(&self) -> &BiLstmConfig {
        &self.cfg
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Parameter groups in storage order.
    pub fn groups(&self) -> Vec<ParamGroup> {
        let layout = Layout::new(&self.cfg);
        let h = self.cfg.hidden;
        let d = self.cfg.dense_hidden;
        let mut out = Vec::new();
        for (l, pair) in layout.cells.iter().enumerate() {
            for (dir, cell) in pair.iter().enumerate() {
                let dname = if dir == 0 { "forward" } else { "backward" };
                out.push(ParamGroup {
                    name: format!("layer{l}.{dname}.w"),
                    offset: cell.w,
                    len: 4 * h * (cell.input + h),
                });
                out.push(ParamGroup {
                    name: format!("layer{l}.{dname}.b"),
                    offset: cell.b,
                    len: 4 * h,
                });
            }
        }
        for (name, offset, len) in [
            ("head.w1", layout.w1, d * 2 * h),
            ("head.b1", layout.b1, d),
            ("head.w2", layout.w2, d),
            ("head.b2", layout.b2, 1),
        ] {
            out.push(ParamGroup {
                name: name.into(),
                offset,
                len,
            });
        }
        out
    }

    /// Copies the forward-direction weights of every layer into the backward
    /// direction.
    pub fn tie_directions(&mut self) {
        let layout = Layout::new(&self.cfg);
        let h = self.cfg.hidden;
        for [fwd, bwd] in &layout.cells {
            let n = 4 * h * (fwd.input + h) + 4 * h;
            let src = self.params[fwd.w..fwd.w + n].to_vec();
            self.params[bwd.w..bwd.w + n].copy_from_slice(&src);
        }
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.cfg.window {
            return Err(Error::Shape {
                expected: self.cfg.window,
                got: window.len(),
            });
        }
        Ok(())
    }

    /// Scaled prediction for one window, dropout disabled.
    pub fn forward(&self, window: &[f64]) -> Result<f64> {
        self.check_window(window)?;
        let layout = Layout::new(&self.cfg);
        let mut ws = Workspace::default();
        Ok(self.forward_ws(&layout, window, None, &mut ws))
    }

    /// Input to the dense head: forward direction's final hidden state
    /// followed by the backward direction's final hidden state.
    pub fn features(&self, window: &[f64]) -> Result<Vec<f64>> {
        self.check_window(window)?;
        let layout = Layout::new(&self.cfg);
        let mut ws = Workspace::default();
        self.forward_ws(&layout, window, None, &mut ws);
        Ok(ws.feat)
    }

    pub fn predict_many(&self, windows: &[Vec<f64>]) -> Result<Vec<f64>> {
        for w in windows {
            self.check_window(w)?;
        }
        let layout = Layout::new(&self.cfg);
        let out: Vec<Vec<f64>> = windows
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut ws = Workspace::default();
                chunk
                    .iter()
                    .map(|w| self.forward_ws(&layout, w, None, &mut ws))
                    .collect()
            })
            .collect();
        Ok(out.into_iter().flatten().collect())
    }

    fn forward_ws(&self, layout: &Layout, window: &[f64], mask_seed: Option<u64>, ws: &mut Workspace) -> f64 {
        let t_len = window.len();
        let h = self.cfg.hidden;
        let p = &self.params;
        ws.layers.resize_with(self.cfg.layers, LayerCache::default);
        let mut mask_rng = mask_seed.map(ChaCha8Rng::seed_from_u64);
        let keep = 1.0 - self.cfg.dropout;

        for l in 0..self.cfg.layers {
            let (below, rest) = ws.layers.split_at_mut(l);
            let lc = &mut rest[0];
            let in_dim = self.cfg.layer_input(l);
            lc.input.clear();
            if l == 0 {
                lc.input.extend_from_slice(window);
            } else {
                let prev = &below[l - 1];
                match &prev.mask {
                    Some(m) => lc.input.extend(prev.output.iter().zip(m).map(|(o, m)| o * m)),
                    None => lc.input.extend_from_slice(&prev.output),
                }
            }
            lc.output.clear();
            lc.output.resize(t_len * 2 * h, 0.0);

            for dir in 0..2 {
                let cell = layout.cells[l][dir];
                let zdim = in_dim + h;
                let w = &p[cell.w..cell.w + 4 * h * zdim];
                let b = &p[cell.b..cell.b + 4 * h];
                let dc = &mut lc.dirs[dir];
                dc.z.clear();
                dc.z.resize(t_len * zdim, 0.0);
                dc.gates.clear();
                dc.gates.resize(t_len * 4 * h, 0.0);
                dc.c.clear();
                dc.c.resize(t_len * h, 0.0);
                dc.tanh_c.clear();
                dc.tanh_c.resize(t_len * h, 0.0);
                for k in 0..t_len {
                    let t = if dir == 0 { k } else { t_len - 1 - k };
                    {
                        let z = &mut dc.z[k * zdim..(k + 1) * zdim];
                        z[..in_dim].copy_from_slice(&lc.input[t * in_dim..(t + 1) * in_dim]);
                        if k > 0 {
                            let tp = if dir == 0 { t - 1 } else { t + 1 };
                            z[in_dim..].copy_from_slice(&lc.output[tp * 2 * h + dir * h..tp * 2 * h + (dir + 1) * h]);
                        }
                    }
                    let z = &dc.z[k * zdim..(k + 1) * zdim];
                    let gates = &mut dc.gates[k * 4 * h..(k + 1) * 4 * h];
                    for (r, g) in gates.iter_mut().enumerate() {
                        let row = &w[r * zdim..(r + 1) * zdim];
                        let mut acc = b[r];
                        for (wi, zi) in row.iter().zip(z) {
                            acc += wi * zi;
                        }
                        *g = acc;
                    }
                    for j in 0..h {
                        gates[j] = sigmoid(gates[j]);
                        gates[h + j] = sigmoid(gates[h + j]);
                        gates[2 * h + j] = gates[2 * h + j].tanh();
                        gates[3 * h + j] = sigmoid(gates[3 * h + j]);
                    }
                    for j in 0..h {
                        let c_prev = if k > 0 { dc.c[(k - 1) * h + j] } else { 0.0 };
                        let c = gates[h + j] * c_prev + gates[j] * gates[2 * h + j];
                        let tc = c.tanh();
                        dc.c[k * h + j] = c;
                        dc.tanh_c[k * h + j] = tc;
                        lc.output[t * 2 * h + dir * h + j] = gates[3 * h + j] * tc;
                    }
                }
            }

            lc.mask = None;
            if l + 1 < self.cfg.layers && self.cfg.dropout > 0.0 {
                if let Some(rng) = mask_rng.as_mut() {
                    lc.mask = Some(
                        (0..lc.output.len())
                            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }

        let top = &ws.layers[self.cfg.layers - 1];
        ws.feat.clear();
        ws.feat.extend_from_slice(&top.output[(t_len - 1) * 2 * h..(t_len - 1) * 2 * h + h]);
        ws.feat.extend_from_slice(&top.output[h..2 * h]);

        let d = self.cfg.dense_hidden;
        ws.u.clear();
        ws.u.resize(d, 0.0);
        let w1 = &p[layout.w1..layout.w1 + d * 2 * h];
        for (i, u) in ws.u.iter_mut().enumerate() {
            let mut acc = p[layout.b1 + i];
            for (wi, fi) in w1[i * 2 * h..(i + 1) * 2 * h].iter().zip(&ws.feat) {
                acc += wi * fi;
            }
            *u = acc;
        }
        let mut y = p[layout.b2];
        for (i, u) in ws.u.iter().enumerate() {
            y += p[layout.w2 + i] * u.max(0.0);
        }
        y
    }

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
    fn backward_ws(&self, layout: &Layout, dy: f64, ws: &mut Workspace, grad: &mut [f64]) {
        let h = self.cfg.hidden;
        let d = self.cfg.dense_hidden;
        let p = &self.params;
        let t_len = ws.layers[0].input.len();

        grad[layout.b2] += dy;
        let mut dfeat = vec![0.0; 2 * h];
        for i in 0..d {
            let u = ws.u[i];
            let r = u.max(0.0);
            grad[layout.w2 + i] += dy * r;
            if u <= 0.0 {
                continue;
            }
            let du = dy * p[layout.w2 + i];
            grad[layout.b1 + i] += du;
            let row = layout.w1 + i * 2 * h;
            for k in 0..2 * h {
                grad[row + k] += du * ws.feat[k];
                dfeat[k] += du * p[row + k];
            }
        }

        ws.d_out.clear();
        ws.d_out.resize(t_len * 2 * h, 0.0);
        for j in 0..h {
            ws.d_out[(t_len - 1) * 2 * h + j] += dfeat[j];
            ws.d_out[h + j] += dfeat[h + j];
        }

        for l in (0..self.cfg.layers).rev() {
            let in_dim = self.cfg.layer_input(l);
            let zdim = in_dim + h;
            ws.d_in.clear();
            ws.d_in.resize(t_len * in_dim, 0.0);
            ws.da.resize(4 * h, 0.0);
            ws.dh_next.resize(h, 0.0);
            ws.dc_next.resize(h, 0.0);
            let lc = &ws.layers[l];
            for dir in 0..2 {
                let cell = layout.cells[l][dir];
                let w = &p[cell.w..cell.w + 4 * h * zdim];
                let dc = &lc.dirs[dir];
                ws.dh_next.iter_mut().for_each(|v| *v = 0.0);
                ws.dc_next.iter_mut().for_each(|v| *v = 0.0);
                for k in (0..t_len).rev() {
                    let t = if dir == 0 { k } else { t_len - 1 - k };
                    let gates = &dc.gates[k * 4 * h..(k + 1) * 4 * h];
                    for j in 0..h {
                        let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                        let tc = dc.tanh_c[k * h + j];
                        let c_prev = if k > 0 { dc.c[(k - 1) * h + j] } else { 0.0 };
                        let dh = ws.d_out[t * 2 * h + dir * h + j] + ws.dh_next[j];
                        let d_o = dh * tc;
                        let dcell = dh * o * (1.0 - tc * tc) + ws.dc_next[j];
                        ws.dc_next[j] = dcell * f;
                        ws.da[j] = dcell * g * i * (1.0 - i);
                        ws.da[h + j] = dcell * c_prev * f * (1.0 - f);
                        ws.da[2 * h + j] = dcell * i * (1.0 - g * g);
                        ws.da[3 * h + j] = d_o * o * (1.0 - o);
                    }
                    let z = &dc.z[k * zdim..(k + 1) * zdim];
                    let mut dz = vec![0.0; zdim];
                    for r in 0..4 * h {
                        let a = ws.da[r];
                        if a == 0.0 {
                            continue;
                        }
                        grad[cell.b + r] += a;
                        let gw = &mut grad[cell.w + r * zdim..cell.w + (r + 1) * zdim];
                        for (gi, zi) in gw.iter_mut().zip(z) {
                            *gi += a * zi;
                        }
                        for (dzi, wi) in dz.iter_mut().zip(&w[r * zdim..(r + 1) * zdim]) {
                            *dzi += a * wi;
                        }
                    }
                    for (x, v) in ws.d_in[t * in_dim..(t + 1) * in_dim].iter_mut().zip(&dz[..in_dim]) {
                        *x += v;
                    }
                    ws.dh_next.copy_from_slice(&dz[in_dim..]);
                }
            }
            if l > 0 {
                let below = &ws.layers[l - 1];
                ws.d_out.clear();
                match &below.mask {
                    Some(m) => ws.d_out.extend(ws.d_in.iter().zip(m).map(|(g, m)| g * m)),
                    None => ws.d_out.extend_from_slice(&ws.d_in),
                }
            }
        }
    }

    /// Sum of squared errors over the batch and its gradient. With
    /// `mask_seeds`, dropout is active and sample `i` draws its masks from
    /// `mask_seeds[i]`.
    pub fn sse_gradient(&self, inputs: &[&[f64]], targets: &[f64], mask_seeds: Option<&[u64]>) -> Result<(f64, Vec<f64>)> {
        if inputs.len() != targets.len() {
            return Err(Error::Shape {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        for w in inputs {
            self.check_window(w)?;
        }
        let layout = Layout::new(&self.cfg);
        let n = self.params.len();
        let idx: Vec<usize> = (0..inputs.len()).collect();
        let partials: Vec<(f64, Vec<f64>)> = idx
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut ws = Workspace::default();
                let mut grad = vec![0.0; n];
                let mut sse = 0.0;
                for &i in chunk {
                    let seed = mask_seeds.map(|s| s[i]);
                    let y = self.forward_ws(&layout, inputs[i], seed, &mut ws);
                    let e = y - targets[i];
                    sse += e * e;
                    self.backward_ws(&layout, 2.0 * e, &mut ws, &mut grad);
                }
                (sse, grad)
            })
            .collect();
        let mut grad = vec![0.0; n];
        let mut sse = 0.0;
        for (s, g) in partials {
            sse += s;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok((sse, grad))
    }

    /// Mean squared error (scaled units) with dropout disabled.
    pub fn mse(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::InsufficientData("no windows to evaluate".into()));
        }
        let preds = self.predict_many(inputs)?;
        Ok(preds.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / preds.len() as f64)
    }
}
