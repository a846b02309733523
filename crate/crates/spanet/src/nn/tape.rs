//! Minimal reverse-mode differentiation over dense matrices.
//!
//! A computation is built as an append-only graph of [`Op`] nodes holding
//! their forward values; [`Graph::backward`] walks the nodes in reverse and
//! accumulates adjoints. The operator set is exactly what the angle
//! predictors need: affine maps, rectifier and shifted-softplus activations,
//! elementwise products, column concatenation, row gather/scatter, and mean
//! squared error.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Op {
    /// Constant input or trainable parameter (`param` = parameter index).
    Leaf { param: Option<usize> },
    MatMul(usize, usize),
    /// X + b with the 1×k bias row broadcast over the rows of X.
    AddBias(usize, usize),
    Add(usize, usize),
    Hadamard(usize, usize),
    Relu(usize),
    /// Shifted softplus ln(½eˣ + ½); fixes f(0) = 0.
    Ssp(usize),
    /// Saturating identity a·tanh(x/a): ≈x for |x| ≪ a, bounded by ±a.
    SoftClip { src: usize, scale: f64 },
    ConcatCols(Vec<usize>),
    GatherRows(usize, Vec<usize>),
    /// Rows of `src` added into a fresh output matrix at `targets`.
    ScatterAddRows { src: usize, targets: Vec<usize> },
    /// Mean of squared entrywise differences against a constant target.
    Mse { pred: usize, target: DMatrix<f64> },
}

struct Node {
    value: DMatrix<f64>,
    op: Op,
}

/// Node handle inside a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tensor(usize);

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    n_params: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn value(&self, t: Tensor) -> &DMatrix<f64> {
        &self.nodes[t.0].value
    }

    fn push(&mut self, value: DMatrix<f64>, op: Op) -> Tensor {
        self.nodes.push(Node { value, op });
        Tensor(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: DMatrix<f64>) -> Tensor {
        self.push(value, Op::Leaf { param: None })
    }

    /// A trainable leaf; `param_index` keys the gradient slot returned by
    /// [`Graph::backward`].
    pub fn parameter(&mut self, param_index: usize, value: DMatrix<f64>) -> Tensor {
        self.n_params = self.n_params.max(param_index + 1);
        self.push(value, Op::Leaf { param: Some(param_index) })
    }

    pub fn matmul(&mut self, a: Tensor, b: Tensor) -> Tensor {
        let value = &self.nodes[a.0].value * &self.nodes[b.0].value;
        self.push(value, Op::MatMul(a.0, b.0))
    }

    pub fn add_bias(&mut self, x: Tensor, bias: Tensor) -> Tensor {
        let xv = &self.nodes[x.0].value;
        let bv = &self.nodes[bias.0].value;
        assert_eq!(bv.nrows(), 1, "bias must be a row vector");
        assert_eq!(bv.ncols(), xv.ncols(), "bias width mismatch");
        let mut value = xv.clone();
        for mut row in value.row_iter_mut() {
            row += bv.row(0);
        }
        self.push(value, Op::AddBias(x.0, bias.0))
    }

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Tensor {
        let value = &self.nodes[a.0].value + &self.nodes[b.0].value;
        self.push(value, Op::Add(a.0, b.0))
    }

    pub fn hadamard(&mut self, a: Tensor, b: Tensor) -> Tensor {
        let value = self.nodes[a.0].value.component_mul(&self.nodes[b.0].value);
        self.push(value, Op::Hadamard(a.0, b.0))
    }

    pub fn relu(&mut self, x: Tensor) -> Tensor {
        let value = self.nodes[x.0].value.map(|v| v.max(0.0));
        self.push(value, Op::Relu(x.0))
    }

    pub fn ssp(&mut self, x: Tensor) -> Tensor {
        // ln(½eˣ + ½) = softplus(x) − ln 2, computed stably.
        let value = self.nodes[x.0].value.map(|v| {
            let softplus = if v > 30.0 { v } else { (1.0 + v.exp()).ln() };
            softplus - std::f64::consts::LN_2
        });
        self.push(value, Op::Ssp(x.0))
    }

    /// Saturating identity a·tanh(x/a); near-identity within ±a and smoothly
    /// bounded outside, guarding downstream layers from out-of-range inputs.
    pub fn soft_clip(&mut self, x: Tensor, scale: f64) -> Tensor {
        assert!(scale > 0.0, "soft_clip scale must be positive");
        let value = self.nodes[x.0].value.map(|v| scale * (v / scale).tanh());
        self.push(value, Op::SoftClip { src: x.0, scale })
    }

    pub fn concat_cols(&mut self, parts: &[Tensor]) -> Tensor {
        assert!(!parts.is_empty());
        let nrows = self.nodes[parts[0].0].value.nrows();
        let ncols: usize = parts.iter().map(|t| self.nodes[t.0].value.ncols()).sum();
        let mut value = DMatrix::<f64>::zeros(nrows, ncols);
        let mut col = 0;
        for t in parts {
            let v = &self.nodes[t.0].value;
            assert_eq!(v.nrows(), nrows, "concat row mismatch");
            value.view_mut((0, col), (nrows, v.ncols())).copy_from(v);
            col += v.ncols();
        }
        self.push(value, Op::ConcatCols(parts.iter().map(|t| t.0).collect()))
    }

    pub fn gather_rows(&mut self, x: Tensor, indices: &[usize]) -> Tensor {
        let xv = &self.nodes[x.0].value;
        let mut value = DMatrix::<f64>::zeros(indices.len(), xv.ncols());
        for (r, &i) in indices.iter().enumerate() {
            value.row_mut(r).copy_from(&xv.row(i));
        }
        self.push(value, Op::GatherRows(x.0, indices.to_vec()))
    }

    pub fn scatter_add_rows(&mut self, src: Tensor, targets: &[usize], n_rows: usize) -> Tensor {
        let sv = &self.nodes[src.0].value;
        assert_eq!(sv.nrows(), targets.len(), "one target per source row");
        let mut value = DMatrix::<f64>::zeros(n_rows, sv.ncols());
        for (r, &i) in targets.iter().enumerate() {
            let mut row = value.row_mut(i);
            row += sv.row(r);
        }
        self.push(
            value,
            Op::ScatterAddRows { src: src.0, targets: targets.to_vec() },
        )
    }

    pub fn mse(&mut self, pred: Tensor, target: DMatrix<f64>) -> Tensor {
        let pv = &self.nodes[pred.0].value;
        assert_eq!(pv.shape(), target.shape(), "mse shape mismatch");
        let diff = pv - &target;
        let value = DMatrix::from_element(1, 1, diff.map(|v| v * v).sum() / diff.len() as f64);
        self.push(value, Op::Mse { pred: pred.0, target })
    }

    /// Reverse pass from a 1×1 loss node. Returns one gradient per parameter
    /// index (zero matrix if the parameter does not influence the loss).
    pub fn backward(&self, loss: Tensor) -> Result<Vec<DMatrix<f64>>> {
        let loss_value = &self.nodes[loss.0].value;
        if loss_value.shape() != (1, 1) {
            return Err(Error::invalid("backward requires a scalar (1×1) loss node"));
        }
        if !loss_value[(0, 0)].is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite loss {}",
                loss_value[(0, 0)]
            )));
        }
        let mut adjoints: Vec<Option<DMatrix<f64>>> = vec![None; self.nodes.len()];
        adjoints[loss.0] = Some(DMatrix::from_element(1, 1, 1.0));

        let mut grads: Vec<Option<DMatrix<f64>>> = vec![None; self.n_params];
        for id in (0..=loss.0).rev() {
            let Some(grad) = adjoints[id].take() else { continue };
            match &self.nodes[id].op {
                Op::Leaf { param } => {
                    if let Some(p) = param {
                        match &mut grads[*p] {
                            Some(g) => *g += &grad,
                            slot => *slot = Some(grad),
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let da = &grad * self.nodes[*b].value.transpose();
                    let db = self.nodes[*a].value.transpose() * &grad;
                    accumulate(&mut adjoints, *a, da);
                    accumulate(&mut adjoints, *b, db);
                }
                Op::AddBias(x, bias) => {
                    let mut db = DMatrix::<f64>::zeros(1, grad.ncols());
                    for row in grad.row_iter() {
                        let mut target = db.row_mut(0);
                        target += row;
                    }
                    accumulate(&mut adjoints, *x, grad);
                    accumulate(&mut adjoints, *bias, db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut adjoints, *a, grad.clone());
                    accumulate(&mut adjoints, *b, grad);
                }
                Op::Hadamard(a, b) => {
                    let da = grad.component_mul(&self.nodes[*b].value);
                    let db = grad.component_mul(&self.nodes[*a].value);
                    accumulate(&mut adjoints, *a, da);
                    accumulate(&mut adjoints, *b, db);
                }
                Op::Relu(x) => {
                    let mask = self.nodes[*x].value.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    accumulate(&mut adjoints, *x, grad.component_mul(&mask));
                }
                Op::Ssp(x) => {
                    let deriv = self.nodes[*x].value.map(sigmoid);
                    accumulate(&mut adjoints, *x, grad.component_mul(&deriv));
                }
                Op::SoftClip { src, scale } => {
                    // d/dx a·tanh(x/a) = 1 − tanh²(x/a).
                    let deriv = self.nodes[*src].value.map(|v| {
                        let t = (v / scale).tanh();
                        1.0 - t * t
                    });
                    accumulate(&mut adjoints, *src, grad.component_mul(&deriv));
                }
                Op::ConcatCols(parts) => {
                    let mut col = 0;
                    for &p in parts {
                        let w = self.nodes[p].value.ncols();
                        let slice = grad.view((0, col), (grad.nrows(), w)).into_owned();
                        accumulate(&mut adjoints, p, slice);
                        col += w;
                    }
                }
                Op::GatherRows(x, indices) => {
                    let xv = &self.nodes[*x].value;
                    let mut dx = DMatrix::<f64>::zeros(xv.nrows(), xv.ncols());
                    for (r, &i) in indices.iter().enumerate() {
                        let mut row = dx.row_mut(i);
                        row += grad.row(r);
                    }
                    accumulate(&mut adjoints, *x, dx);
                }
                Op::ScatterAddRows { src, targets, .. } => {
                    let mut ds = DMatrix::<f64>::zeros(targets.len(), grad.ncols());
                    for (r, &i) in targets.iter().enumerate() {
                        ds.row_mut(r).copy_from(&grad.row(i));
                    }
                    accumulate(&mut adjoints, *src, ds);
                }
                Op::Mse { pred, target } => {
                    let pv = &self.nodes[*pred].value;
                    let scale = 2.0 / target.len() as f64 * grad[(0, 0)];
                    accumulate(&mut adjoints, *pred, (pv - target) * scale);
                }
            }
        }

        Ok(grads
            .into_iter()
            .enumerate()
            .map(|(p, g)| {
                g.unwrap_or_else(|| {
                    // Parameter never touched the loss: zero gradient with
                    // the parameter's own shape if we can find it, else 1×1.
                    let shape = self
                        .nodes
                        .iter()
                        .find_map(|n| match &n.op {
                            Op::Leaf { param: Some(q) } if *q == p => Some(n.value.shape()),
                            _ => None,
                        })
                        .unwrap_or((1, 1));
                    DMatrix::zeros(shape.0, shape.1)
                })
            })
            .collect())
    }
}

fn accumulate(adjoints: &mut [Option<DMatrix<f64>>], id: usize, grad: DMatrix<f64>) {
    match &mut adjoints[id] {
        Some(g) => *g += &grad,
        slot => *slot = Some(grad),
    }
}
