use std::cell::{Cell, Ref, RefCell};
use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use super::ops::OpKind;
use crate::error::{Error, Result};

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` with graph recording disabled on the current thread.
///
/// Operations executed inside produce plain values with no backward record,
/// even when their inputs are trainable parameters.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|g| g.set(self.0));
        }
    }
    let prev = GRAD_ENABLED.with(|g| g.replace(false));
    let _restore = Restore(prev);
    f()
}

pub fn is_grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// A user-defined differentiable operation.
///
/// `backward` receives the parents in the order they were registered, the
/// forward output, and the upstream gradient; it returns one optional
/// gradient per parent, each with the parent's element count.
pub trait CustomOp {
    fn name(&self) -> &'static str;
    fn backward(&self, parents: &[Tensor], output: &[f64], grad_out: &[f64]) -> Vec<Option<Vec<f64>>>;
}

pub(crate) struct Op {
    pub(crate) kind: OpKind,
    pub(crate) parents: Vec<Tensor>,
}

struct Node {
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    requires_grad: bool,
    op: Option<Op>,
}

/// N-dimensional `f64` array that records the operations producing it.
///
/// Cloning is cheap and shares the underlying node. Leaves created with
/// [`Tensor::param`] accumulate gradients during [`Tensor::backward`].
#[derive(Clone)]
pub struct Tensor(Rc<Node>);

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let data = self.0.data.borrow();
        let op = self.0.op.as_ref().map(|o| o.kind.name());
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .field("op", &op)
            .field("data", &&data[..data.len().min(8)])
            .finish()
    }
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    fn leaf(data: Vec<f64>, shape: Vec<usize>, requires_grad: bool) -> Self {
        Tensor(Rc::new(Node {
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad,
            op: None,
        }))
    }

    /// Constant tensor (no gradient).
    pub fn new(data: Vec<f64>, shape: &[usize]) -> Result<Self> {
        if data.len() != numel(shape) {
            return Err(Error::invalid(
                "tensor",
                format!("{} values do not fill shape {:?}", data.len(), shape),
            ));
        }
        Ok(Self::leaf(data, shape.to_vec(), false))
    }

    /// Trainable leaf; gradients accumulate into it on backward.
    pub fn param(data: Vec<f64>, shape: &[usize]) -> Result<Self> {
        let t = Self::new(data, shape)?;
        Ok(Self::leaf(t.to_vec(), shape.to_vec(), true))
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        let n = data.len();
        Self::leaf(data, vec![n], false)
    }

    pub fn scalar(v: f64) -> Self {
        Self::leaf(vec![v], vec![], false)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], v: f64) -> Self {
        Self::leaf(vec![v; numel(shape)], shape.to_vec(), false)
    }

    /// Builds an op result, attaching the backward record only when some
    /// parent tracks gradients and recording is enabled.
    pub(crate) fn from_op(data: Vec<f64>, shape: Vec<usize>, kind: OpKind, parents: Vec<Tensor>) -> Self {
        debug_assert_eq!(data.len(), numel(&shape));
        let track = is_grad_enabled() && parents.iter().any(|p| p.0.requires_grad);
        if !track {
            return Self::leaf(data, shape, false);
        }
        Tensor(Rc::new(Node {
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad: true,
            op: Some(Op { kind, parents }),
        }))
    }

    /// Result of a user-defined op; see [`CustomOp`].
    pub fn from_custom(data: Vec<f64>, shape: &[usize], parents: Vec<Tensor>, op: Box<dyn CustomOp>) -> Result<Self> {
        if data.len() != numel(shape) {
            return Err(Error::invalid(
                op.name(),
                format!("{} values do not fill shape {:?}", data.len(), shape),
            ));
        }
        Ok(Self::from_op(data, shape.to_vec(), OpKind::Custom(op), parents))
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn numel(&self) -> usize {
        numel(&self.0.shape)
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.op.is_none()
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.borrow().clone()
    }

    /// First element; intended for scalars.
    pub fn item(&self) -> f64 {
        self.0.data.borrow()[0]
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    /// Overwrites the values in place. Meant for leaves (optimizers,
    /// finite differences); graphs already built from this tensor are stale
    /// afterwards.
    pub fn set_data(&self, values: &[f64]) -> Result<()> {
        let mut d = self.0.data.borrow_mut();
        if d.len() != values.len() {
            return Err(Error::invalid(
                "set_data",
                format!("expected {} values, got {}", d.len(), values.len()),
            ));
        }
        d.copy_from_slice(values);
        Ok(())
    }

    pub fn update_data(&self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.0.data.borrow_mut());
    }

    /// Same values, no parents, no gradient.
    pub fn detach(&self) -> Tensor {
        Self::leaf(self.to_vec(), self.0.shape.clone(), false)
    }

    pub fn ptr_eq(&self, other: &Tensor) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    fn key(&self) -> *const () {
        Rc::as_ptr(&self.0) as *const ()
    }

    /// Post-order over the tracked part of the graph.
    fn topo_order(&self) -> Vec<Tensor> {
        let mut order = Vec::new();
        let mut visited = HashSet::new();
        visited.insert(self.key());
        let mut stack: Vec<(Tensor, usize)> = vec![(self.clone(), 0)];
        while let Some((t, idx)) = stack.pop() {
            let next = t.0.op.as_ref().and_then(|op| op.parents.get(idx)).cloned();
            match next {
                Some(p) => {
                    stack.push((t, idx + 1));
                    if p.0.requires_grad && visited.insert(p.key()) {
                        stack.push((p, 0));
                    }
                }
                None => order.push(t),
            }
        }
        order
    }

    /// Reverse-mode sweep from a scalar. Every trainable ancestor receives
    /// d(self)/d(param), added to whatever it already holds.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(Error::NonScalarLoss(self.0.shape.clone()));
        }
        if !self.0.requires_grad {
            return Ok(());
        }
        let order = self.topo_order();
        let mut pending: HashMap<*const (), Vec<f64>> = HashMap::new();
        pending.insert(self.key(), vec![1.0]);
        for t in order.iter().rev() {
            let Some(g) = pending.remove(&t.key()) else {
                continue;
            };
            match &t.0.op {
                None => {
                    let mut slot = t.0.grad.borrow_mut();
                    match slot.as_mut() {
                        Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                        None => *slot = Some(g),
                    }
                }
                Some(op) => {
                    let out = t.0.data.borrow();
                    let parent_grads = op.kind.backward(&op.parents, &t.0.shape, &out, &g);
                    debug_assert_eq!(parent_grads.len(), op.parents.len());
                    for (p, pg) in op.parents.iter().zip(parent_grads) {
                        let Some(pg) = pg else { continue };
                        if !p.0.requires_grad {
                            continue;
                        }
                        debug_assert_eq!(pg.len(), p.numel(), "{}", op.kind.name());
                        match pending.entry(p.key()) {
                            Entry::Occupied(mut e) => e.get_mut().iter_mut().zip(&pg).for_each(|(a, b)| *a += b),
                            Entry::Vacant(e) => {
                                e.insert(pg);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Value-transparent barrier: the result equals `t` but backward never
/// reaches `t` or its ancestors through it.
pub fn stop_gradient(t: &Tensor) -> Tensor {
    t.detach()
}
