//! Primitive operations and their backward rules.

use super::conv;
use super::tensor::{numel, CustomOp, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Unary {
    Neg,
    Square,
    Sqrt,
    Exp,
    Log,
    Sin,
    Tanh,
    Sigmoid,
    Softplus,
    Relu,
    LeakyRelu(f64),
    Abs,
    ClampMin(f64),
    Powf(f64),
    AddScalar(f64),
    MulScalar(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Binary {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PadMode {
    Zero,
    Reflect,
}

pub(crate) enum OpKind {
    Unary(Unary),
    Binary(Binary),
    MatMul,
    Sum,
    Mean,
    Reshape,
    BroadcastTo,
    Pad { left: usize, right: usize, mode: PadMode },
    AvgPool1d { kernel: usize, stride: usize },
    Conv1d { stride: usize, padding: usize },
    ConvTranspose1d { stride: usize, padding: usize },
    Custom(Box<dyn CustomOp>),
}

/// Numerically stable `ln(1 + e^a)`.
pub fn softplus(a: f64) -> f64 {
    if a > 30.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

impl Unary {
    fn name(self) -> &'static str {
        match self {
            Unary::Neg => "neg",
            Unary::Square => "square",
            Unary::Sqrt => "sqrt",
            Unary::Exp => "exp",
            Unary::Log => "log",
            Unary::Sin => "sin",
            Unary::Tanh => "tanh",
            Unary::Sigmoid => "sigmoid",
            Unary::Softplus => "softplus",
            Unary::Relu => "relu",
            Unary::LeakyRelu(_) => "leaky_relu",
            Unary::Abs => "abs",
            Unary::ClampMin(_) => "clamp_min",
            Unary::Powf(_) => "powf",
            Unary::AddScalar(_) => "add_scalar",
            Unary::MulScalar(_) => "mul_scalar",
        }
    }

    fn forward(self, x: f64) -> f64 {
        match self {
            Unary::Neg => -x,
            Unary::Square => x * x,
            Unary::Sqrt => x.sqrt(),
            Unary::Exp => x.exp(),
            Unary::Log => x.ln(),
            Unary::Sin => x.sin(),
            Unary::Tanh => x.tanh(),
            Unary::Sigmoid => sigmoid(x),
            Unary::Softplus => softplus(x),
            Unary::Relu => x.max(0.0),
            Unary::LeakyRelu(s) => {
                if x > 0.0 {
                    x
                } else {
                    s * x
                }
            }
            Unary::Abs => x.abs(),
            Unary::ClampMin(m) => x.max(m),
            Unary::Powf(p) => x.powf(p),
            Unary::AddScalar(c) => x + c,
            Unary::MulScalar(c) => x * c,
        }
    }

    /// d(out)/d(in) given input `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Unary::Neg => -1.0,
            Unary::Square => 2.0 * x,
            Unary::Sqrt => 0.5 / y,
            Unary::Exp => y,
            Unary::Log => 1.0 / x,
            Unary::Sin => x.cos(),
            Unary::Tanh => 1.0 - y * y,
            Unary::Sigmoid => y * (1.0 - y),
            Unary::Softplus => sigmoid(x),
            Unary::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            // slope at exactly 0
            Unary::LeakyRelu(s) => {
                if x > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Unary::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Unary::ClampMin(m) => {
                if x >= m {
                    1.0
                } else {
                    0.0
                }
            }
            Unary::Powf(p) => p * x.powf(p - 1.0),
            Unary::AddScalar(_) => 1.0,
            Unary::MulScalar(c) => c,
        }
    }
}

impl Binary {
    fn name(self) -> &'static str {
        match self {
            Binary::Add => "add",
            Binary::Sub => "sub",
            Binary::Mul => "mul",
            Binary::Div => "div",
        }
    }

    fn forward(self, a: f64, b: f64) -> f64 {
        match self {
            Binary::Add => a + b,
            Binary::Sub => a - b,
            Binary::Mul => a * b,
            Binary::Div => a / b,
        }
    }
}

/// Numpy-style broadcast of two shapes (trailing dimensions aligned).
pub fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank { a[i + a.len() - rank] } else { 1 };
        let db = if i + b.len() >= rank { b[i + b.len() - rank] } else { 1 };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => {
                return Err(Error::ShapeMismatch {
                    op,
                    lhs: a.to_vec(),
                    rhs: b.to_vec(),
                })
            }
        };
    }
    Ok(out)
}

/// For each element of `out`, the flat index of the `src` element it reads
/// under broadcasting. `None` when `src` already has shape `out`.
fn broadcast_map(src: &[usize], out: &[usize]) -> Option<Vec<usize>> {
    if src == out {
        return None;
    }
    let n = numel(out);
    let rank = out.len();
    if numel(src) == 1 {
        return Some(vec![0; n]);
    }
    let mut strides = vec![0usize; rank];
    let off = rank - src.len();
    let mut s = 1;
    for i in (0..src.len()).rev() {
        strides[off + i] = if src[i] == 1 { 0 } else { s };
        s *= src[i];
    }
    let mut idx = vec![0usize; rank];
    let mut cur = 0usize;
    let mut map = Vec::with_capacity(n);
    for _ in 0..n {
        map.push(cur);
        for d in (0..rank).rev() {
            idx[d] += 1;
            cur += strides[d];
            if idx[d] < out[d] {
                break;
            }
            cur -= strides[d] * out[d];
            idx[d] = 0;
        }
    }
    Some(map)
}

#[inline]
fn at(map: &Option<Vec<usize>>, i: usize) -> usize {
    match map {
        Some(m) => m[i],
        None => i,
    }
}

/// Sums a gradient of the broadcast shape back onto the source shape.
fn reduce_to(g: Vec<f64>, map: &Option<Vec<usize>>, src_len: usize) -> Vec<f64> {
    match map {
        None => g,
        Some(m) => {
            let mut acc = vec![0.0; src_len];
            for (gi, &j) in g.iter().zip(m) {
                acc[j] += gi;
            }
            acc
        }
    }
}

/// C (m×n) = op(A) (m×k) · op(B) (k×n), overwriting or accumulating into C.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_t: bool,
    b: &[f64],
    b_t: bool,
    c: &mut [f64],
    accumulate: bool,
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the slices cover the strided extents checked above, and `c`
    // does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl OpKind {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            OpKind::Unary(u) => u.name(),
            OpKind::Binary(b) => b.name(),
            OpKind::MatMul => "matmul",
            OpKind::Sum => "sum",
            OpKind::Mean => "mean",
            OpKind::Reshape => "reshape",
            OpKind::BroadcastTo => "broadcast_to",
            OpKind::Pad { .. } => "pad",
            OpKind::AvgPool1d { .. } => "avg_pool1d",
            OpKind::Conv1d { .. } => "conv1d",
            OpKind::ConvTranspose1d { .. } => "conv_transpose1d",
            OpKind::Custom(c) => c.name(),
        }
    }

    pub(crate) fn backward(
        &self,
        parents: &[Tensor],
        out_shape: &[usize],
        out: &[f64],
        g: &[f64],
    ) -> Vec<Option<Vec<f64>>> {
        match self {
            OpKind::Unary(u) => {
                let x = parents[0].data();
                let gx = x
                    .iter()
                    .zip(out)
                    .zip(g)
                    .map(|((&xi, &yi), &gi)| gi * u.derivative(xi, yi))
                    .collect();
                vec![Some(gx)]
            }
            OpKind::Binary(b) => {
                let (a, bb) = (&parents[0], &parents[1]);
                let ma = broadcast_map(a.shape(), out_shape);
                let mb = broadcast_map(bb.shape(), out_shape);
                let need_a = a.requires_grad();
                let need_b = bb.requires_grad();
                let (ga, gb) = match b {
                    Binary::Add => (need_a.then(|| g.to_vec()), need_b.then(|| g.to_vec())),
                    Binary::Sub => (
                        need_a.then(|| g.to_vec()),
                        need_b.then(|| g.iter().map(|v| -v).collect()),
                    ),
                    Binary::Mul => {
                        let ad = a.data();
                        let bd = bb.data();
                        (
                            need_a.then(|| g.iter().enumerate().map(|(i, gi)| gi * bd[at(&mb, i)]).collect()),
                            need_b.then(|| g.iter().enumerate().map(|(i, gi)| gi * ad[at(&ma, i)]).collect()),
                        )
                    }
                    Binary::Div => {
                        let ad = a.data();
                        let bd = bb.data();
                        (
                            need_a.then(|| g.iter().enumerate().map(|(i, gi)| gi / bd[at(&mb, i)]).collect()),
                            need_b.then(|| {
                                g.iter()
                                    .enumerate()
                                    .map(|(i, gi)| {
                                        let bv = bd[at(&mb, i)];
                                        -gi * ad[at(&ma, i)] / (bv * bv)
                                    })
                                    .collect()
                            }),
                        )
                    }
                };
                vec![
                    ga.map(|v| reduce_to(v, &ma, a.numel())),
                    gb.map(|v| reduce_to(v, &mb, bb.numel())),
                ]
            }
            OpKind::MatMul => {
                let (a, b) = (&parents[0], &parents[1]);
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = b.shape()[1];
                let ga = a.requires_grad().then(|| {
                    let mut ga = vec![0.0; m * k];
                    gemm(m, n, k, g, false, &b.data(), true, &mut ga, false);
                    ga
                });
                let gb = b.requires_grad().then(|| {
                    let mut gb = vec![0.0; k * n];
                    gemm(k, m, n, &a.data(), true, g, false, &mut gb, false);
                    gb
                });
                vec![ga, gb]
            }
            OpKind::Sum => vec![Some(vec![g[0]; parents[0].numel()])],
            OpKind::Mean => {
                let n = parents[0].numel();
                vec![Some(vec![g[0] / n as f64; n])]
            }
            OpKind::Reshape => vec![Some(g.to_vec())],
            OpKind::BroadcastTo => {
                let p = &parents[0];
                let map = broadcast_map(p.shape(), out_shape);
                vec![Some(reduce_to(g.to_vec(), &map, p.numel()))]
            }
            OpKind::Pad { left, right, mode } => {
                vec![Some(conv::pad_backward(parents[0].shape(), *left, *right, *mode, g))]
            }
            OpKind::AvgPool1d { kernel, stride } => {
                vec![Some(conv::avg_pool_backward(parents[0].shape(), *kernel, *stride, g))]
            }
            OpKind::Conv1d { stride, padding } => {
                let (gx, gk) = conv::conv1d_backward(&parents[0], &parents[1], *stride, *padding, g);
                vec![gx, gk]
            }
            OpKind::ConvTranspose1d { stride, padding } => {
                let (gx, gk) =
                    conv::conv_transpose1d_backward(&parents[0], &parents[1], *stride, *padding, out_shape, g);
                vec![gx, gk]
            }
            OpKind::Custom(c) => c.backward(parents, out, g),
        }
    }
}

impl Tensor {
    fn unary(&self, u: Unary) -> Tensor {
        let data = self.data().iter().map(|&x| u.forward(x)).collect();
        Tensor::from_op(data, self.shape().to_vec(), OpKind::Unary(u), vec![self.clone()])
    }

    fn binary(&self, other: &Tensor, b: Binary) -> Result<Tensor> {
        let shape = broadcast_shape(b.name(), self.shape(), other.shape())?;
        let data = {
            let ad = self.data();
            let bd = other.data();
            if self.shape() == other.shape() {
                ad.iter().zip(bd.iter()).map(|(&x, &y)| b.forward(x, y)).collect()
            } else {
                let ma = broadcast_map(self.shape(), &shape);
                let mb = broadcast_map(other.shape(), &shape);
                (0..numel(&shape))
                    .map(|i| b.forward(ad[at(&ma, i)], bd[at(&mb, i)]))
                    .collect()
            }
        };
        Ok(Tensor::from_op(
            data,
            shape,
            OpKind::Binary(b),
            vec![self.clone(), other.clone()],
        ))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Binary::Add)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Binary::Sub)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Binary::Mul)
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Binary::Div)
    }

    pub fn neg(&self) -> Tensor {
        self.unary(Unary::Neg)
    }

    pub fn square(&self) -> Tensor {
        self.unary(Unary::Square)
    }

    pub fn sqrt(&self) -> Tensor {
        self.unary(Unary::Sqrt)
    }

    pub fn exp(&self) -> Tensor {
        self.unary(Unary::Exp)
    }

    pub fn log(&self) -> Tensor {
        self.unary(Unary::Log)
    }

    pub fn sin(&self) -> Tensor {
        self.unary(Unary::Sin)
    }

    pub fn tanh(&self) -> Tensor {
        self.unary(Unary::Tanh)
    }

    pub fn sigmoid(&self) -> Tensor {
        self.unary(Unary::Sigmoid)
    }

    /// `ln(1 + e^x)`, switching to `x + ln1p(e^-x)` above 30.
    pub fn softplus(&self) -> Tensor {
        self.unary(Unary::Softplus)
    }

    pub fn relu(&self) -> Tensor {
        self.unary(Unary::Relu)
    }

    /// Gradient at exactly 0 is `slope`.
    pub fn leaky_relu(&self, slope: f64) -> Tensor {
        self.unary(Unary::LeakyRelu(slope))
    }

    pub fn abs(&self) -> Tensor {
        self.unary(Unary::Abs)
    }

    /// `max(x, floor)`; `max(·, 0)` is `clamp_min(0.0)`.
    pub fn clamp_min(&self, floor: f64) -> Tensor {
        self.unary(Unary::ClampMin(floor))
    }

    pub fn powf(&self, p: f64) -> Tensor {
        self.unary(Unary::Powf(p))
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        self.unary(Unary::AddScalar(c))
    }

    pub fn mul_scalar(&self, c: f64) -> Tensor {
        self.unary(Unary::MulScalar(c))
    }

    /// Sum of all elements, as a rank-0 tensor.
    pub fn sum(&self) -> Tensor {
        let s = self.data().iter().sum();
        Tensor::from_op(vec![s], vec![], OpKind::Sum, vec![self.clone()])
    }

    pub fn mean(&self) -> Tensor {
        let n = self.numel().max(1) as f64;
        let s: f64 = self.data().iter().sum();
        Tensor::from_op(vec![s / n], vec![], OpKind::Mean, vec![self.clone()])
    }

    /// 2-D product `[m×k]·[k×n]`.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (a, b) = (self.shape(), other.shape());
        if a.len() != 2 || b.len() != 2 || a[1] != b[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: a.to_vec(),
                rhs: b.to_vec(),
            });
        }
        let (m, k, n) = (a[0], a[1], b[1]);
        let mut c = vec![0.0; m * n];
        gemm(m, k, n, &self.data(), false, &other.data(), false, &mut c, false);
        Ok(Tensor::from_op(
            c,
            vec![m, n],
            OpKind::MatMul,
            vec![self.clone(), other.clone()],
        ))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if numel(shape) != self.numel() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: self.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        Ok(Tensor::from_op(
            self.to_vec(),
            shape.to_vec(),
            OpKind::Reshape,
            vec![self.clone()],
        ))
    }

    pub fn broadcast_to(&self, shape: &[usize]) -> Result<Tensor> {
        let out = broadcast_shape("broadcast_to", self.shape(), shape)?;
        if out != shape {
            return Err(Error::ShapeMismatch {
                op: "broadcast_to",
                lhs: self.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        let map = broadcast_map(self.shape(), shape);
        let d = self.data();
        let data = (0..numel(shape)).map(|i| d[at(&map, i)]).collect();
        drop(d);
        Ok(Tensor::from_op(
            data,
            shape.to_vec(),
            OpKind::BroadcastTo,
            vec![self.clone()],
        ))
    }
}
