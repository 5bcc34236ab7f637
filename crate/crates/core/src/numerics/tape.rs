use std::collections::BTreeMap;

use super::{NumericsError, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Gradients of a scalar loss with respect to named leaves.
pub type GradMap = BTreeMap<String, Tensor>;

/// Operation record. Inputs always precede outputs on the tape, so walking
/// node indices in reverse visits every node after all of its consumers.
#[derive(Debug, Clone)]
pub enum Op {
    Leaf,
    MatMul { a: Var, b: Var },
    MatVec { w: Var, x: Var },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Tanh { x: Var },
    Sigmoid { x: Var },
    Softmax { x: Var },
    CrossEntropy { logits: Var, target: usize },
    EmbeddingRow { table: Var, index: usize },
    Concat { parts: Vec<Var> },
    Slice { x: Var, start: usize, len: usize },
    Dot { a: Var, b: Var },
    WeightedSum { weights: Var, states: Vec<Var> },
    ScaleConst { x: Var, c: f64 },
    Sum { x: Var },
}

struct Node {
    value: Tensor,
    grad: Vec<f64>,
    op: Op,
    name: Option<String>,
}

/// Wengert tape: one forward pass recorded as a linear sequence of ops,
/// replayed in reverse by [`Tape::backward`]. A tape is confined to a
/// single training step / forward evaluation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let grad = vec![0.0; value.numel()];
        self.nodes.push(Node {
            value,
            grad,
            op,
            name: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient buffer. Populated for leaves after
    /// [`Tape::backward`]; interior buffers are scratch space.
    pub fn grad(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].grad
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].value.shape
    }

    // ── leaves ──────────────────────────────────────────────────────────

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Leaf that participates in [`Tape::backward`]'s gradient map.
    pub fn named_leaf(&mut self, name: &str, value: Tensor) -> Var {
        let v = self.push(value.with_grad(), Op::Leaf);
        self.nodes[v.0].name = Some(name.to_string());
        v
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        let mut value = value;
        value.requires_grad = false;
        self.push(value, Op::Leaf)
    }

    pub fn zeros(&mut self, shape: Vec<usize>) -> Var {
        self.push(Tensor::zeros(shape), Op::Leaf)
    }

    // ── forward ops ─────────────────────────────────────────────────────

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(NumericsError::DimMismatch {
                op: "matmul",
                lhs: sa,
                rhs: sb,
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let da = &self.nodes[a.0].value.data;
        let db = &self.nodes[b.0].value.data;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let aip = da[i * k + p];
                for j in 0..n {
                    out[i * n + j] += aip * db[p * n + j];
                }
            }
        }
        let value = Tensor::new(vec![m, n], out).expect("matmul output shape");
        Ok(self.push(value, Op::MatMul { a, b }))
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var, NumericsError> {
        let (sw, sx) = (self.shape(w).to_vec(), self.shape(x).to_vec());
        if sw.len() != 2 || sx.len() != 1 || sw[1] != sx[0] {
            return Err(NumericsError::DimMismatch {
                op: "matvec",
                lhs: sw,
                rhs: sx,
            });
        }
        let (m, n) = (sw[0], sw[1]);
        let dw = &self.nodes[w.0].value.data;
        let dx = &self.nodes[x.0].value.data;
        let mut out = vec![0.0; m];
        for i in 0..m {
            let row = &dw[i * n..(i + 1) * n];
            out[i] = row.iter().zip(dx.iter()).map(|(a, b)| a * b).sum();
        }
        Ok(self.push(Tensor::vector(out), Op::MatVec { w, x }))
    }

    fn binary_same_shape(
        &mut self,
        op_name: &'static str,
        a: Var,
        b: Var,
    ) -> Result<(), NumericsError> {
        if self.shape(a) != self.shape(b) {
            return Err(NumericsError::DimMismatch {
                op: op_name,
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary_same_shape("add", a, b)?;
        let data = self.nodes[a.0]
            .value
            .data
            .iter()
            .zip(self.nodes[b.0].value.data.iter())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(Tensor::new(shape, data).expect("add shape"), Op::Add { a, b }))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary_same_shape("mul", a, b)?;
        let data = self.nodes[a.0]
            .value
            .data
            .iter()
            .zip(self.nodes[b.0].value.data.iter())
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(Tensor::new(shape, data).expect("mul shape"), Op::Mul { a, b }))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let data = self.nodes[x.0].value.data.iter().map(|v| v.tanh()).collect();
        let shape = self.shape(x).to_vec();
        self.push(Tensor::new(shape, data).expect("tanh shape"), Op::Tanh { x })
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let data = self.nodes[x.0]
            .value
            .data
            .iter()
            .map(|v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        let shape = self.shape(x).to_vec();
        self.push(Tensor::new(shape, data).expect("sigmoid shape"), Op::Sigmoid { x })
    }

    /// Numerically stable softmax over a vector (max subtraction).
    pub fn softmax(&mut self, x: Var) -> Var {
        let d = &self.nodes[x.0].value.data;
        let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = d.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let data: Vec<f64> = exps.iter().map(|e| e / sum).collect();
        self.push(Tensor::vector(data), Op::Softmax { x })
    }

    /// -log softmax(logits)[target], computed via log-sum-exp.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var, NumericsError> {
        let d = &self.nodes[logits.0].value.data;
        if target >= d.len() {
            return Err(NumericsError::IndexOutOfRange {
                what: "cross_entropy target",
                index: target,
                size: d.len(),
            });
        }
        let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + d.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let loss = lse - d[target];
        Ok(self.push(Tensor::scalar(loss), Op::CrossEntropy { logits, target }))
    }

    pub fn embedding_row(&mut self, table: Var, index: usize) -> Result<Var, NumericsError> {
        let shape = self.shape(table).to_vec();
        if shape.len() != 2 {
            return Err(NumericsError::DimMismatch {
                op: "embedding_row",
                lhs: shape,
                rhs: vec![],
            });
        }
        let (v, d) = (shape[0], shape[1]);
        if index >= v {
            return Err(NumericsError::IndexOutOfRange {
                what: "embedding row",
                index,
                size: v,
            });
        }
        let data = self.nodes[table.0].value.data[index * d..(index + 1) * d].to_vec();
        Ok(self.push(Tensor::vector(data), Op::EmbeddingRow { table, index }))
    }

    /// Concatenate vectors (scalars count as length-1 vectors).
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut data = Vec::new();
        for &p in parts {
            data.extend_from_slice(&self.nodes[p.0].value.data);
        }
        self.push(
            Tensor::vector(data),
            Op::Concat {
                parts: parts.to_vec(),
            },
        )
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var, NumericsError> {
        let n = self.nodes[x.0].value.numel();
        if start + len > n {
            return Err(NumericsError::IndexOutOfRange {
                what: "slice end",
                index: start + len,
                size: n,
            });
        }
        let data = self.nodes[x.0].value.data[start..start + len].to_vec();
        Ok(self.push(Tensor::vector(data), Op::Slice { x, start, len }))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        self.binary_same_shape("dot", a, b)?;
        let s: f64 = self.nodes[a.0]
            .value
            .data
            .iter()
            .zip(self.nodes[b.0].value.data.iter())
            .map(|(x, y)| x * y)
            .sum();
        Ok(self.push(Tensor::scalar(s), Op::Dot { a, b }))
    }

    /// sum_i weights[i] * states[i], all states the same shape.
    pub fn weighted_sum(&mut self, weights: Var, states: &[Var]) -> Result<Var, NumericsError> {
        let wn = self.nodes[weights.0].value.numel();
        if wn != states.len() || states.is_empty() {
            return Err(NumericsError::DimMismatch {
                op: "weighted_sum",
                lhs: vec![wn],
                rhs: vec![states.len()],
            });
        }
        let d = self.nodes[states[0].0].value.numel();
        let mut out = vec![0.0; d];
        for (i, &s) in states.iter().enumerate() {
            let w = self.nodes[weights.0].value.data[i];
            let sd = &self.nodes[s.0].value.data;
            if sd.len() != d {
                return Err(NumericsError::DimMismatch {
                    op: "weighted_sum",
                    lhs: vec![d],
                    rhs: vec![sd.len()],
                });
            }
            for (o, v) in out.iter_mut().zip(sd.iter()) {
                *o += w * v;
            }
        }
        Ok(self.push(
            Tensor::vector(out),
            Op::WeightedSum {
                weights,
                states: states.to_vec(),
            },
        ))
    }

    pub fn scale_const(&mut self, x: Var, c: f64) -> Var {
        let data = self.nodes[x.0].value.data.iter().map(|v| v * c).collect();
        let shape = self.shape(x).to_vec();
        self.push(
            Tensor::new(shape, data).expect("scale shape"),
            Op::ScaleConst { x, c },
        )
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s: f64 = self.nodes[x.0].value.data.iter().sum();
        self.push(Tensor::scalar(s), Op::Sum { x })
    }

    /// Fold a list of scalars into one scalar by addition.
    pub fn add_all(&mut self, terms: &[Var]) -> Result<Var, NumericsError> {
        let mut acc = terms[0];
        for &t in &terms[1..] {
            acc = self.add(acc, t)?;
        }
        Ok(acc)
    }

    // ── backward ────────────────────────────────────────────────────────

    /// Reverse sweep from a scalar loss. Each call propagates one unit of
    /// adjoint through pass-local buffers and then adds the result into the
    /// tape's persistent gradients, so repeated calls without a fresh tape
    /// accumulate. Returns the accumulated gradients of every named leaf.
    pub fn backward(&mut self, loss: Var) -> Result<GradMap, NumericsError> {
        if !self.nodes[loss.0].value.is_scalar() {
            return Err(NumericsError::LossNotScalar(
                self.nodes[loss.0].value.shape.clone(),
            ));
        }
        let mut adj: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.numel()])
            .collect();
        adj[loss.0][0] = 1.0;

        for i in (0..=loss.0).rev() {
            match &self.nodes[i].op {
                Op::Leaf => {}
                Op::MatMul { a, b } => {
                    let (a, b) = (*a, *b);
                    let sa = self.shape(a);
                    let sb = self.shape(b);
                    let (m, k, n) = (sa[0], sa[1], sb[1]);
                    let g = std::mem::take(&mut adj[i]);
                    // dA = dC · B^T
                    let bd = &self.nodes[b.0].value.data;
                    let ad = &self.nodes[a.0].value.data;
                    for r in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g[r * n + j] * bd[p * n + j];
                            }
                            adj[a.0][r * k + p] += s;
                        }
                    }
                    // dB = A^T · dC
                    for p in 0..k {
                        for j in 0..n {
                            let mut s = 0.0;
                            for r in 0..m {
                                s += ad[r * k + p] * g[r * n + j];
                            }
                            adj[b.0][p * n + j] += s;
                        }
                    }
                }
                Op::MatVec { w, x } => {
                    let (w, x) = (*w, *x);
                    let sw = self.shape(w);
                    let (m, n) = (sw[0], sw[1]);
                    let g = std::mem::take(&mut adj[i]);
                    let xd = &self.nodes[x.0].value.data;
                    let wd = &self.nodes[w.0].value.data;
                    for r in 0..m {
                        let gr = g[r];
                        if gr == 0.0 {
                            continue;
                        }
                        let row = &mut adj[w.0][r * n..(r + 1) * n];
                        for (gw, xv) in row.iter_mut().zip(xd.iter()) {
                            *gw += gr * xv;
                        }
                    }
                    for c in 0..n {
                        let mut s = 0.0;
                        for r in 0..m {
                            s += wd[r * n + c] * g[r];
                        }
                        adj[x.0][c] += s;
                    }
                }
                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    let g = std::mem::take(&mut adj[i]);
                    for (ga, gv) in adj[a.0].iter_mut().zip(g.iter()) {
                        *ga += gv;
                    }
                    for (gb, gv) in adj[b.0].iter_mut().zip(g.iter()) {
                        *gb += gv;
                    }
                }
                Op::Mul { a, b } => {
                    let (a, b) = (*a, *b);
                    let g = std::mem::take(&mut adj[i]);
                    for (j, gv) in g.iter().enumerate() {
                        adj[a.0][j] += gv * self.nodes[b.0].value.data[j];
                        adj[b.0][j] += gv * self.nodes[a.0].value.data[j];
                    }
                }
                Op::Tanh { x } => {
                    let x = *x;
                    let g = std::mem::take(&mut adj[i]);
                    let out = &self.nodes[i].value.data;
                    for (j, gv) in g.iter().enumerate() {
                        adj[x.0][j] += gv * (1.0 - out[j] * out[j]);
                    }
                }
                Op::Sigmoid { x } => {
                    let x = *x;
                    let g = std::mem::take(&mut adj[i]);
                    let out = &self.nodes[i].value.data;
                    for (j, gv) in g.iter().enumerate() {
                        adj[x.0][j] += gv * out[j] * (1.0 - out[j]);
                    }
                }
                Op::Softmax { x } => {
                    // ds_j = s_j (g_j - sum_k g_k s_k)
                    let x = *x;
                    let g = std::mem::take(&mut adj[i]);
                    let s = &self.nodes[i].value.data;
                    let dot: f64 = g.iter().zip(s.iter()).map(|(a, b)| a * b).sum();
                    for j in 0..s.len() {
                        adj[x.0][j] += s[j] * (g[j] - dot);
                    }
                }
                Op::CrossEntropy { logits, target } => {
                    // d logits = softmax(logits) - one_hot(target)
                    let (logits, target) = (*logits, *target);
                    let g = adj[i][0];
                    let d = &self.nodes[logits.0].value.data;
                    let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = d.iter().map(|v| (v - max).exp()).collect();
                    let sum: f64 = exps.iter().sum();
                    for (j, e) in exps.iter().enumerate() {
                        let p = e / sum;
                        let t = if j == target { 1.0 } else { 0.0 };
                        adj[logits.0][j] += g * (p - t);
                    }
                }
                Op::EmbeddingRow { table, index } => {
                    let (table, index) = (*table, *index);
                    let g = std::mem::take(&mut adj[i]);
                    let d = g.len();
                    for (j, gv) in g.iter().enumerate() {
                        adj[table.0][index * d + j] += gv;
                    }
                }
                Op::Concat { parts } => {
                    let parts = parts.clone();
                    let g = std::mem::take(&mut adj[i]);
                    let mut off = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.numel();
                        for j in 0..n {
                            adj[p.0][j] += g[off + j];
                        }
                        off += n;
                    }
                }
                Op::Slice { x, start, len } => {
                    let (x, start, len) = (*x, *start, *len);
                    let g = std::mem::take(&mut adj[i]);
                    for j in 0..len {
                        adj[x.0][start + j] += g[j];
                    }
                }
                Op::Dot { a, b } => {
                    let (a, b) = (*a, *b);
                    let g = adj[i][0];
                    for j in 0..self.nodes[a.0].value.numel() {
                        adj[a.0][j] += g * self.nodes[b.0].value.data[j];
                        adj[b.0][j] += g * self.nodes[a.0].value.data[j];
                    }
                }
                Op::WeightedSum { weights, states } => {
                    let (weights, states) = (*weights, states.clone());
                    let g = std::mem::take(&mut adj[i]);
                    for (si, s) in states.iter().enumerate() {
                        let w = self.nodes[weights.0].value.data[si];
                        let mut dw = 0.0;
                        for (j, gv) in g.iter().enumerate() {
                            adj[s.0][j] += w * gv;
                            dw += gv * self.nodes[s.0].value.data[j];
                        }
                        adj[weights.0][si] += dw;
                    }
                }
                Op::ScaleConst { x, c } => {
                    let (x, c) = (*x, *c);
                    let g = std::mem::take(&mut adj[i]);
                    for (j, gv) in g.iter().enumerate() {
                        adj[x.0][j] += gv * c;
                    }
                }
                Op::Sum { x } => {
                    let x = *x;
                    let g = adj[i][0];
                    for gx in adj[x.0].iter_mut() {
                        *gx += g;
                    }
                }
            }
        }

        for (node, a) in self.nodes.iter_mut().zip(adj.iter()) {
            for (g, av) in node.grad.iter_mut().zip(a.iter()) {
                *g += av;
            }
        }

        let mut out = GradMap::new();
        for node in &self.nodes {
            if let (Some(name), true) = (&node.name, node.value.requires_grad) {
                out.insert(
                    name.clone(),
                    Tensor::new(node.value.shape.clone(), node.grad.clone())
                        .expect("grad shape matches value"),
                );
            }
        }
        Ok(out)
    }
}
