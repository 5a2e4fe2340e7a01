//! Vector-valued reverse-mode differentiation over a flat parameter buffer.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param { offset: usize },
    Mul(NodeId, NodeId),
    Add(Vec<NodeId>),
    Scale(NodeId, f64),
    /// Argument per component, as an index into the input list.
    Select(Vec<NodeId>, Vec<usize>),
    Mean(Vec<NodeId>),
    Std(Vec<NodeId>),
    Concat(Vec<NodeId>),
    Linear {
        weight: usize,
        bias: usize,
        input: NodeId,
    },
    Relu(NodeId),
    Softmax { input: NodeId, temperature: f64 },
    Mix { weights: NodeId, items: Vec<NodeId> },
    BceWithLogit { logit: NodeId, label: f64, weight: f64 },
}

#[derive(Debug, Clone)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub const STD_EPS: f64 = 1e-8;

/// Records operations on vectors; `backward` returns `∂root/∂params`.
pub struct Tape<'p> {
    params: &'p [f64],
    nodes: Vec<Node>,
    param_cache: HashMap<(usize, usize), NodeId>,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [f64]) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
            param_cache: HashMap::new(),
        }
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Constant)
    }

    /// Leaf reading `params[offset..offset + len]`; repeated reads share a node.
    pub fn param(&mut self, offset: usize, len: usize) -> NodeId {
        if let Some(&id) = self.param_cache.get(&(offset, len)) {
            return id;
        }
        let id = self.push(self.params[offset..offset + len].to_vec(), Op::Param { offset });
        self.param_cache.insert((offset, len), id);
        id
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        self.push(v, Op::Mul(a, b))
    }

    pub fn add(&mut self, items: Vec<NodeId>) -> NodeId {
        let mut v = self.value(items[0]).to_vec();
        for &i in &items[1..] {
            for (a, b) in v.iter_mut().zip(self.value(i)) {
                *a += b;
            }
        }
        self.push(v, Op::Add(items))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a).iter().map(|x| x * c).collect();
        self.push(v, Op::Scale(a, c))
    }

    fn select(&mut self, items: Vec<NodeId>, better: impl Fn(f64, f64) -> bool) -> NodeId {
        let d = self.value(items[0]).len();
        let mut arg = vec![0usize; d];
        let mut v = self.value(items[0]).to_vec();
        for (k, &i) in items.iter().enumerate().skip(1) {
            for (j, &x) in self.value(i).iter().enumerate() {
                if better(x, v[j]) {
                    v[j] = x;
                    arg[j] = k;
                }
            }
        }
        self.push(v, Op::Select(items, arg))
    }

    pub fn max(&mut self, items: Vec<NodeId>) -> NodeId {
        self.select(items, |x, best| x > best)
    }

    pub fn min(&mut self, items: Vec<NodeId>) -> NodeId {
        self.select(items, |x, best| x < best)
    }

    fn mean_of(&self, items: &[NodeId]) -> Vec<f64> {
        let mut v = vec![0.0; self.value(items[0]).len()];
        for &i in items {
            for (a, b) in v.iter_mut().zip(self.value(i)) {
                *a += b;
            }
        }
        let n = items.len() as f64;
        v.iter_mut().for_each(|a| *a /= n);
        v
    }

    pub fn mean(&mut self, items: Vec<NodeId>) -> NodeId {
        let v = self.mean_of(&items);
        self.push(v, Op::Mean(items))
    }

    /// Componentwise `sqrt(population variance + STD_EPS)`.
    pub fn std(&mut self, items: Vec<NodeId>) -> NodeId {
        let mu = self.mean_of(&items);
        let mut var = vec![0.0; mu.len()];
        for &i in &items {
            for ((s, x), m) in var.iter_mut().zip(self.value(i)).zip(&mu) {
                *s += (x - m) * (x - m);
            }
        }
        let n = items.len() as f64;
        let v = var.iter().map(|s| (s / n + STD_EPS).sqrt()).collect();
        self.push(v, Op::Std(items))
    }

    pub fn concat(&mut self, items: Vec<NodeId>) -> NodeId {
        let v = items.iter().flat_map(|&i| self.value(i).iter().copied()).collect();
        self.push(v, Op::Concat(items))
    }

    /// `W x + b` with `W` stored row-major at `weight` (rows = `bias` length).
    pub fn linear(&mut self, weight: usize, bias: usize, rows: usize, input: NodeId) -> NodeId {
        let x = self.value(input);
        let cols = x.len();
        let w = &self.params[weight..weight + rows * cols];
        let b = &self.params[bias..bias + rows];
        let v = (0..rows)
            .map(|r| b[r] + w[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
            .collect();
        self.push(v, Op::Linear { weight, bias, input })
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).iter().map(|x| x.max(0.0)).collect();
        self.push(v, Op::Relu(a))
    }

    pub fn softmax(&mut self, input: NodeId, temperature: f64) -> NodeId {
        let z = self.value(input);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|x| ((x - m) / temperature).exp()).collect();
        let s: f64 = e.iter().sum();
        let v = e.iter().map(|x| x / s).collect();
        self.push(v, Op::Softmax { input, temperature })
    }

    /// `Σ_i weights[i] · items[i]`.
    pub fn mix(&mut self, weights: NodeId, items: Vec<NodeId>) -> NodeId {
        let w = self.value(weights).to_vec();
        let mut v = vec![0.0; self.value(items[0]).len()];
        for (&a, &i) in w.iter().zip(&items) {
            for (o, x) in v.iter_mut().zip(self.value(i)) {
                *o += a * x;
            }
        }
        self.push(v, Op::Mix { weights, items })
    }

    /// `weight · BCE(sigmoid(logit), label)` as a scalar.
    pub fn bce_with_logit(&mut self, logit: NodeId, label: f64, weight: f64) -> NodeId {
        let z = self.value(logit)[0];
        let v = weight * (softplus(z) - label * z);
        self.push(vec![v], Op::BceWithLogit { logit, label, weight })
    }

    /// Gradient of the scalar `root` with respect to every parameter.
    pub fn backward(&self, root: NodeId) -> Vec<f64> {
        let mut pgrad = vec![0.0; self.params.len()];
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![1.0; self.nodes[root.0].value.len()]);

        fn acc(grads: &mut [Option<Vec<f64>>], id: NodeId, f: impl Fn(usize) -> f64, len: usize) {
            let g = grads[id.0].get_or_insert_with(|| vec![0.0; len]);
            for (j, x) in g.iter_mut().enumerate() {
                *x += f(j);
            }
        }

        for k in (0..=root.0).rev() {
            let Some(g) = grads[k].take() else { continue };
            let node = &self.nodes[k];
            let len_of = |id: NodeId| self.nodes[id.0].value.len();
            match &node.op {
                Op::Constant => {}
                Op::Param { offset } => {
                    for (j, x) in g.iter().enumerate() {
                        pgrad[offset + j] += x;
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a).to_vec(), self.value(*b).to_vec());
                    acc(&mut grads, *a, |j| g[j] * vb[j], g.len());
                    acc(&mut grads, *b, |j| g[j] * va[j], g.len());
                }
                Op::Add(items) => {
                    for &i in items {
                        acc(&mut grads, i, |j| g[j], g.len());
                    }
                }
                Op::Scale(a, c) => acc(&mut grads, *a, |j| g[j] * c, g.len()),
                Op::Select(items, arg) => {
                    for (pos, &i) in items.iter().enumerate() {
                        if arg.contains(&pos) {
                            acc(&mut grads, i, |j| if arg[j] == pos { g[j] } else { 0.0 }, g.len());
                        }
                    }
                }
                Op::Mean(items) => {
                    let n = items.len() as f64;
                    for &i in items {
                        acc(&mut grads, i, |j| g[j] / n, g.len());
                    }
                }
                Op::Std(items) => {
                    let mu = self.mean_of(items);
                    let n = items.len() as f64;
                    let sd = &node.value;
                    for &i in items {
                        let x = self.value(i).to_vec();
                        acc(&mut grads, i, |j| g[j] * (x[j] - mu[j]) / (n * sd[j]), g.len());
                    }
                }
                Op::Concat(items) => {
                    let mut at = 0;
                    for &i in items {
                        let l = len_of(i);
                        acc(&mut grads, i, |j| g[at + j], l);
                        at += l;
                    }
                }
                Op::Linear { weight, bias, input } => {
                    let x = self.value(*input).to_vec();
                    let (rows, cols) = (g.len(), x.len());
                    for r in 0..rows {
                        pgrad[bias + r] += g[r];
                        for c in 0..cols {
                            pgrad[weight + r * cols + c] += g[r] * x[c];
                        }
                    }
                    let w = &self.params[*weight..weight + rows * cols];
                    acc(&mut grads, *input, |c| (0..rows).map(|r| g[r] * w[r * cols + c]).sum(), cols);
                }
                Op::Relu(a) => {
                    let x = self.value(*a).to_vec();
                    acc(&mut grads, *a, |j| if x[j] > 0.0 { g[j] } else { 0.0 }, g.len());
                }
                Op::Softmax { input, temperature } => {
                    let p = &node.value;
                    let dot: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
                    acc(&mut grads, *input, |j| p[j] * (g[j] - dot) / temperature, g.len());
                }
                Op::Mix { weights, items } => {
                    let w = self.value(*weights).to_vec();
                    let gw: Vec<f64> = items
                        .iter()
                        .map(|&i| self.value(i).iter().zip(&g).map(|(x, y)| x * y).sum())
                        .collect();
                    acc(&mut grads, *weights, |j| gw[j], w.len());
                    for (&a, &i) in w.iter().zip(items) {
                        acc(&mut grads, i, |j| a * g[j], g.len());
                    }
                }
                Op::BceWithLogit { logit, label, weight } => {
                    let z = self.value(*logit)[0];
                    let d = weight * (sigmoid(z) - label);
                    acc(&mut grads, *logit, |_| g[0] * d, 1);
                }
            }
        }
        pgrad
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_grad(params: &[f64], f: impl Fn(&mut Tape) -> NodeId) -> Vec<f64> {
        let eps = 1e-6;
        (0..params.len())
            .map(|k| {
                let mut p = params.to_vec();
                p[k] += eps;
                let mut t = Tape::new(&p);
                let r = f(&mut t);
                let up = t.value(r)[0];
                p[k] -= 2.0 * eps;
                let mut t = Tape::new(&p);
                let r = f(&mut t);
                (up - t.value(r)[0]) / (2.0 * eps)
            })
            .collect()
    }

    fn check(params: &[f64], f: impl Fn(&mut Tape) -> NodeId) {
        let mut t = Tape::new(params);
        let r = f(&mut t);
        let g = t.backward(r);
        let n = numeric_grad(params, &f);
        for (a, b) in g.iter().zip(&n) {
            assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{g:?} vs {n:?}");
        }
    }

    #[test]
    fn elementwise_and_reductions() {
        let p = vec![0.3, -1.2, 0.7, 2.0, -0.4, 0.9, 1.5, -0.2, 0.6, -0.8, 0.1];
        check(&p, |t| {
            let a = t.param(0, 2);
            let b = t.param(2, 2);
            let c = t.param(4, 2);
            let m = t.mul(a, b);
            let s = t.add(vec![m, c, a]);
            let mx = t.max(vec![a, b, c]);
            let mn = t.min(vec![a, b, c]);
            let me = t.mean(vec![a, b, c]);
            let sd = t.std(vec![a, b, c]);
            let cat = t.concat(vec![s, mx, mn, me, sd]);
            let l = t.linear(0, 10, 1, cat);
            t.bce_with_logit(l, 1.0, 0.5)
        });
    }

    #[test]
    fn attention_path() {
        let p = vec![0.3, -1.2, 0.7, 2.0, -0.4, 0.9, 0.1, 0.2];
        check(&p, |t| {
            let a = t.param(0, 2);
            let b = t.param(2, 2);
            let sa = t.linear(4, 6, 1, a);
            let sb = t.linear(4, 6, 1, b);
            let sc = t.concat(vec![sa, sb]);
            let w = t.softmax(sc, 0.5);
            let x = t.mix(w, vec![a, b]);
            let r = t.relu(x);
            let h = t.linear(6, 7, 1, r);
            let s = t.scale(h, 3.0);
            t.bce_with_logit(s, 0.0, 1.0)
        });
    }

    #[test]
    fn bce_is_stable() {
        let p = vec![];
        let mut t = Tape::new(&p);
        let z = t.constant(vec![800.0]);
        let l = t.bce_with_logit(z, 1.0, 1.0);
        assert!(t.value(l)[0].abs() < 1e-12);
        let l = t.bce_with_logit(z, 0.0, 1.0);
        assert!((t.value(l)[0] - 800.0).abs() < 1e-9);
        assert!((sigmoid(-800.0)).is_finite());
    }
}
