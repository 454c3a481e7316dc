//! A linear probe trained on handcrafted node descriptors to predict the
//! P/SE target battery. Stands in for a full GNN backbone while exercising
//! the same loss (MAE + cosine similarity), optimizer (AdamW) and schedule
//! (cosine decay with linear warmup) end to end.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{inject_random_features, Graph, RandomFeatureSpec};
use crate::pse::PseTargets;

const EPS_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpan {
    pub name: String,
    pub start: usize,
    pub width: usize,
}

pub fn layout_of(targets: &PseTargets) -> Vec<GroupSpan> {
    let mut spans = Vec::new();
    let mut start = 0;
    for b in &targets.blocks {
        let width = b.width();
        spans.push(GroupSpan {
            name: b.group_key(),
            start,
            width,
        });
        start += width;
    }
    spans
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProbe {
    /// (input_dim x target_dim), column-major storage via nalgebra.
    pub weights: DMatrix<f64>,
    pub bias: Vec<f64>,
    pub layout: Vec<GroupSpan>,
    /// Input standardization learned from the training corpus.
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
}

impl LinearProbe {
    pub fn predict(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let standardized = standardize(inputs, &self.input_mean, &self.input_std);
        let mut out = standardized * &self.weights;
        for mut row in out.row_iter_mut() {
            for (j, x) in row.iter_mut().enumerate() {
                *x += self.bias[j];
            }
        }
        out
    }
}

fn standardize(inputs: &DMatrix<f64>, mean: &[f64], std: &[f64]) -> DMatrix<f64> {
    let mut out = inputs.clone();
    for mut row in out.row_iter_mut() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (*x - mean[j]) / std[j];
        }
    }
    out
}

/// Per-node handcrafted descriptors (degree, log-degree, local clustering
/// coefficient, graph size) concatenated with the random node features.
pub fn probe_inputs(g: &Graph, spec: &RandomFeatureSpec) -> Result<DMatrix<f64>> {
    let n = g.num_nodes;
    let deg = g.degrees();
    let adj = g.adjacency_lists();
    let neighbor_sets: Vec<std::collections::HashSet<usize>> = adj
        .iter()
        .map(|ns| ns.iter().copied().collect())
        .collect();
    let rf = inject_random_features(g, spec)?;
    let width = 4 + spec.dim;
    let mut m = DMatrix::zeros(n, width);
    for v in 0..n {
        let d = deg[v];
        let clustering = if d >= 2 {
            let mut closed = 0usize;
            for (i, &a) in adj[v].iter().enumerate() {
                for &b in &adj[v][i + 1..] {
                    if neighbor_sets[a].contains(&b) {
                        closed += 1;
                    }
                }
            }
            2.0 * closed as f64 / (d * (d - 1)) as f64
        } else {
            0.0
        };
        m[(v, 0)] = d as f64;
        m[(v, 1)] = (1.0 + d as f64).ln();
        m[(v, 2)] = clustering;
        m[(v, 3)] = n as f64;
        for (j, &x) in rf[v].iter().enumerate() {
            m[(v, 4 + j)] = x;
        }
    }
    Ok(m)
}

/// MAE over all entries plus, per target group and node, one minus the
/// cosine similarity of the predicted and target group vectors. Returns the
/// loss and its gradient with respect to the predictions. Zero-norm target
/// vectors contribute a zero cosine term.
pub fn mae_cosine_loss(
    pred: &DMatrix<f64>,
    target: &DMatrix<f64>,
    layout: &[GroupSpan],
) -> Result<(f64, DMatrix<f64>)> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "pred {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let (rows, cols) = pred.shape();
    let layout_width: usize = layout.iter().map(|s| s.width).sum();
    if layout_width != cols {
        return Err(Error::ShapeMismatch(format!(
            "layout covers {layout_width} columns, matrices have {cols}"
        )));
    }
    let mut grad = DMatrix::zeros(rows, cols);
    let entries = (rows * cols) as f64;
    let mut mae = 0.0;
    // Storage is column-major, so all loops below keep columns outermost.
    for ((g, &p), &t) in grad.iter_mut().zip(pred.iter()).zip(target.iter()) {
        let diff = p - t;
        mae += diff.abs();
        // Subgradient 0 at exact zeros (f64::signum(0.0) is 1.0).
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        *g = sign / entries;
    }
    mae /= entries;

    let terms = (rows * layout.len()) as f64;
    let mut cosine = 0.0;
    let mut p_sq = vec![0.0; rows];
    let mut t_sq = vec![0.0; rows];
    let mut dot = vec![0.0; rows];
    for span in layout {
        p_sq.fill(0.0);
        t_sq.fill(0.0);
        dot.fill(0.0);
        for c in span.start..span.start + span.width {
            let pc = pred.column(c);
            let tc = target.column(c);
            for r in 0..rows {
                p_sq[r] += pc[r] * pc[r];
                t_sq[r] += tc[r] * tc[r];
                dot[r] += pc[r] * tc[r];
            }
        }
        // coef_t * t[c] + coef_p * p[c] is the per-entry cosine gradient.
        let mut coef_t = vec![0.0; rows];
        let mut coef_p = vec![0.0; rows];
        for r in 0..rows {
            let t_norm = t_sq[r].sqrt();
            if t_norm < EPS_NORM {
                continue;
            }
            let p_norm = p_sq[r].sqrt();
            if p_norm < EPS_NORM {
                cosine += 1.0;
                continue;
            }
            cosine += 1.0 - dot[r] / (p_norm * t_norm);
            coef_t[r] = 1.0 / (p_norm * t_norm);
            coef_p[r] = -dot[r] / (p_norm.powi(3) * t_norm);
        }
        for c in span.start..span.start + span.width {
            let pc = pred.column(c);
            let tc = target.column(c);
            let mut gc = grad.column_mut(c);
            for r in 0..rows {
                gc[r] -= (coef_t[r] * tc[r] + coef_p[r] * pc[r]) / terms;
            }
        }
    }
    cosine /= terms;
    Ok((mae + cosine, grad))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamWParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub base_lr: f64,
}

impl Default for AdamWParams {
    fn default() -> Self {
        AdamWParams {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-5,
            base_lr: 0.005,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub hyper: AdamWParams,
}

impl OptimizerState {
    pub fn new(num_params: usize, hyper: AdamWParams) -> Self {
        OptimizerState {
            step: 0,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            hyper,
        }
    }
}

/// One AdamW step with decoupled weight decay: the decay is applied to the
/// parameters directly, separately from the bias-corrected adaptive step.
pub fn adamw_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut OptimizerState,
    lr: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(Error::ShapeMismatch("optimizer state/params/grads".into()));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    state.step += 1;
    let h = &state.hyper;
    let bc1 = 1.0 - h.beta1.powi(state.step as i32);
    let bc2 = 1.0 - h.beta2.powi(state.step as i32);
    for i in 0..params.len() {
        params[i] -= lr * h.weight_decay * params[i];
        let m = &mut state.first_moment[i];
        let v = &mut state.second_moment[i];
        *m = h.beta1 * *m + (1.0 - h.beta1) * grads[i];
        *v = h.beta2 * *v + (1.0 - h.beta2) * grads[i] * grads[i];
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + h.epsilon);
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleState {
    pub total_epochs: usize,
    pub warmup_epochs: usize,
    pub base_lr: f64,
    pub epoch: f64,
}

impl Default for ScheduleState {
    fn default() -> Self {
        ScheduleState {
            total_epochs: 120,
            warmup_epochs: 5,
            base_lr: 0.005,
            epoch: 0.0,
        }
    }
}

/// Linear warmup from 0 to the base rate, then cosine decay to exactly 0 at
/// the final epoch.
pub fn cosine_warmup_lr(s: &ScheduleState) -> f64 {
    let w = s.warmup_epochs as f64;
    let t = s.total_epochs as f64;
    if s.epoch < w {
        s.base_lr * s.epoch / w
    } else {
        s.base_lr * 0.5 * (1.0 + (std::f64::consts::PI * (s.epoch - w) / (t - w)).cos())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeTrainConfig {
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub optimizer: AdamWParams,
}

impl Default for ProbeTrainConfig {
    fn default() -> Self {
        ProbeTrainConfig {
            epochs: 120,
            warmup_epochs: 5,
            optimizer: AdamWParams::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    /// Per-group MAE at this epoch, in layout order.
    pub group_mae: Vec<f64>,
}

fn group_mae(pred: &DMatrix<f64>, target: &DMatrix<f64>, layout: &[GroupSpan]) -> Vec<f64> {
    let rows = pred.nrows();
    layout
        .iter()
        .map(|span| {
            let mut acc = 0.0;
            for c in span.start..span.start + span.width {
                let pc = pred.column(c);
                let tc = target.column(c);
                for r in 0..rows {
                    acc += (pc[r] - tc[r]).abs();
                }
            }
            acc / (rows * span.width) as f64
        })
        .collect()
}

/// Full-batch training loop over a corpus of (inputs, targets) pairs.
/// Deterministic: row order is input order, parameters start at zero.
pub fn train_probe(
    corpus: &[(DMatrix<f64>, PseTargets)],
    cfg: &ProbeTrainConfig,
) -> Result<(LinearProbe, Vec<EpochLog>)> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::Config("empty training corpus".into()))?;
    let layout = layout_of(&first.1);
    let input_dim = first.0.ncols();
    let target_dim: usize = layout.iter().map(|s| s.width).sum();

    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    let mut y_rows: Vec<Vec<f64>> = Vec::new();
    for (inputs, targets) in corpus {
        if layout_of(targets) != layout {
            return Err(Error::ShapeMismatch(format!(
                "target layout of graph {} differs from corpus layout",
                targets.graph_id
            )));
        }
        if inputs.ncols() != input_dim || inputs.nrows() != targets.node_ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "inputs for graph {} do not match its targets",
                targets.graph_id
            )));
        }
        for i in 0..targets.node_ids.len() {
            x_rows.push(inputs.row(i).iter().copied().collect());
            y_rows.push(targets.row(i));
        }
    }
    let rows = x_rows.len();
    let x_raw = DMatrix::from_fn(rows, input_dim, |r, c| x_rows[r][c]);
    let y = DMatrix::from_fn(rows, target_dim, |r, c| y_rows[r][c]);

    let mut mean = vec![0.0; input_dim];
    let mut std = vec![0.0; input_dim];
    for c in 0..input_dim {
        let col_mean = x_raw.column(c).iter().sum::<f64>() / rows as f64;
        let var = x_raw
            .column(c)
            .iter()
            .map(|x| (x - col_mean).powi(2))
            .sum::<f64>()
            / rows as f64;
        mean[c] = col_mean;
        std[c] = if var.sqrt() > 1e-9 { var.sqrt() } else { 1.0 };
    }
    let x = standardize(&x_raw, &mean, &std);

    let num_params = input_dim * target_dim + target_dim;
    let mut params = vec![0.0; num_params];
    let mut state = OptimizerState::new(num_params, cfg.optimizer.clone());
    let mut schedule = ScheduleState {
        total_epochs: cfg.epochs,
        warmup_epochs: cfg.warmup_epochs,
        base_lr: cfg.optimizer.base_lr,
        epoch: 0.0,
    };
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        schedule.epoch = epoch as f64;
        let lr = cosine_warmup_lr(&schedule);
        let w = DMatrix::from_fn(input_dim, target_dim, |i, j| params[i * target_dim + j]);
        let bias = &params[input_dim * target_dim..];
        let mut pred = &x * &w;
        for mut row in pred.row_iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += bias[j];
            }
        }
        let (loss, grad_pred) = mae_cosine_loss(&pred, &y, &layout)?;
        let grad_w = x.tr_mul(&grad_pred);
        let mut grads = vec![0.0; num_params];
        for i in 0..input_dim {
            for j in 0..target_dim {
                grads[i * target_dim + j] = grad_w[(i, j)];
            }
        }
        for j in 0..target_dim {
            grads[input_dim * target_dim + j] = grad_pred.column(j).iter().sum();
        }
        log.push(EpochLog {
            epoch,
            lr,
            loss,
            group_mae: group_mae(&pred, &y, &layout),
        });
        adamw_step(&mut params, &grads, &mut state, lr)?;
    }

    let weights = DMatrix::from_fn(input_dim, target_dim, |i, j| params[i * target_dim + j]);
    let bias = params[input_dim * target_dim..].to_vec();
    Ok((
        LinearProbe {
            weights,
            bias,
            layout,
            input_mean: mean,
            input_std: std,
        },
        log,
    ))
}

const MODEL_MAGIC: &[u8; 8] = b"PSEMDL01";

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    input_dim: usize,
    target_dim: usize,
    layout: Vec<GroupSpan>,
    input_mean: Vec<f64>,
    input_std: Vec<f64>,
    #[serde(default)]
    config_digest: String,
}

/// Model file: magic, JSON header, then the weight matrix (row-major) and
/// bias as little-endian f64.
pub fn save_probe(path: &std::path::Path, probe: &LinearProbe, config_digest: &str) -> Result<()> {
    use std::io::Write as _;
    let header = ModelHeader {
        input_dim: probe.weights.nrows(),
        target_dim: probe.weights.ncols(),
        layout: probe.layout.clone(),
        input_mean: probe.input_mean.clone(),
        input_std: probe.input_std.clone(),
        config_digest: config_digest.to_string(),
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for i in 0..probe.weights.nrows() {
        for j in 0..probe.weights.ncols() {
            w.write_all(&probe.weights[(i, j)].to_le_bytes())?;
        }
    }
    for b in &probe.bias {
        w.write_all(&b.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_probe(path: &std::path::Path) -> Result<LinearProbe> {
    use std::io::Read as _;
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::TargetFormat("bad model magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut header_bytes = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut header_bytes)?;
    let header: ModelHeader = serde_json::from_slice(&header_bytes)?;
    let count = header.input_dim * header.target_dim + header.target_dim;
    let mut raw = vec![0u8; count * 8];
    r.read_exact(&mut raw)?;
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let weights = DMatrix::from_fn(header.input_dim, header.target_dim, |i, j| {
        values[i * header.target_dim + j]
    });
    let bias = values[header.input_dim * header.target_dim..].to_vec();
    Ok(LinearProbe {
        weights,
        bias,
        layout: header.layout,
        input_mean: header.input_mean,
        input_std: header.input_std,
    })
}

/// Training log as CSV: epoch, lr, loss, then one MAE column per group.
pub fn log_to_csv(log: &[EpochLog], layout: &[GroupSpan]) -> String {
    let mut out = String::from("epoch,lr,loss");
    for span in layout {
        out.push_str(&format!(",mae_{}", span.name));
    }
    out.push('\n');
    for e in log {
        out.push_str(&format!("{},{},{}", e.epoch, e.lr, e.loss));
        for v in &e.group_mae {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
