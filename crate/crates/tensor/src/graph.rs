use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::{Scalar, Tensor};

/// Data available to a backward closure.
pub struct BackwardCtx<'a, T> {
    pub grad: &'a Tensor<T>,
    pub output: &'a Tensor<T>,
    inputs: Vec<&'a Tensor<T>>,
}

impl<'a, T> BackwardCtx<'a, T> {
    pub fn input(&self, i: usize) -> &'a Tensor<T> {
        self.inputs[i]
    }
}

/// Computes one gradient per parent (None when the parent receives nothing).
pub type BackwardFn<T> = Box<dyn Fn(&BackwardCtx<'_, T>) -> Vec<Option<Tensor<T>>>>;

struct Node<T> {
    value: Rc<Tensor<T>>,
    parents: Vec<usize>,
    backward: Option<BackwardFn<T>>,
    requires_grad: bool,
}

struct Inner<T> {
    nodes: Vec<Node<T>>,
    grad_enabled: bool,
}

/// Define-by-run tape. Cloning shares the tape.
pub struct Graph<T> {
    inner: Rc<RefCell<Inner<T>>>,
}

impl<T> Clone for Graph<T> {
    fn clone(&self) -> Self {
        Self {
            inner: Rc::clone(&self.inner),
        }
    }
}

/// Handle to a value recorded on a [`Graph`].
pub struct Var<T> {
    graph: Graph<T>,
    id: usize,
}

impl<T> Clone for Var<T> {
    fn clone(&self) -> Self {
        Self {
            graph: self.graph.clone(),
            id: self.id,
        }
    }
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self::with_grad(true)
    }

    /// A tape that records values only; nothing on it requires grad.
    pub fn inference() -> Self {
        Self::with_grad(false)
    }

    fn with_grad(grad_enabled: bool) -> Self {
        Self {
            inner: Rc::new(RefCell::new(Inner {
                nodes: Vec::new(),
                grad_enabled,
            })),
        }
    }

    pub fn grad_enabled(&self) -> bool {
        self.inner.borrow().grad_enabled
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same(&self, other: &Graph<T>) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    /// A value that never receives a gradient.
    pub fn constant(&self, value: Tensor<T>) -> Var<T> {
        self.push_leaf(value, false)
    }

    /// A differentiable input (parameter or probe).
    pub fn leaf(&self, value: Tensor<T>) -> Var<T> {
        let rg = self.grad_enabled();
        self.push_leaf(value, rg)
    }

    fn push_leaf(&self, value: Tensor<T>, requires_grad: bool) -> Var<T> {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(Node {
            value: Rc::new(value),
            parents: Vec::new(),
            backward: None,
            requires_grad,
        });
        Var {
            graph: self.clone(),
            id: inner.nodes.len() - 1,
        }
    }

    /// Record an operation whose value was computed by the caller.
    pub fn custom(
        &self,
        value: Tensor<T>,
        parents: &[&Var<T>],
        backward: impl Fn(&BackwardCtx<'_, T>) -> Vec<Option<Tensor<T>>> + 'static,
    ) -> Var<T> {
        self.record(value, parents, Box::new(backward))
    }

    pub(crate) fn record(
        &self,
        value: Tensor<T>,
        parents: &[&Var<T>],
        backward: BackwardFn<T>,
    ) -> Var<T> {
        let mut inner = self.inner.borrow_mut();
        for p in parents {
            assert!(
                Rc::ptr_eq(&p.graph.inner, &self.inner),
                "variables from different graphs"
            );
        }
        let requires_grad =
            inner.grad_enabled && parents.iter().any(|p| inner.nodes[p.id].requires_grad);
        let node = if requires_grad {
            Node {
                value: Rc::new(value),
                parents: parents.iter().map(|p| p.id).collect(),
                backward: Some(backward),
                requires_grad,
            }
        } else {
            Node {
                value: Rc::new(value),
                parents: Vec::new(),
                backward: None,
                requires_grad,
            }
        };
        inner.nodes.push(node);
        Var {
            graph: self.clone(),
            id: inner.nodes.len() - 1,
        }
    }

    fn value_of(&self, id: usize) -> Rc<Tensor<T>> {
        Rc::clone(&self.inner.borrow().nodes[id].value)
    }

    fn requires_grad_of(&self, id: usize) -> bool {
        self.inner.borrow().nodes[id].requires_grad
    }

    /// Reverse sweep from a one-element `loss`.
    pub fn backward(&self, loss: &Var<T>) -> Gradients<T> {
        assert!(self.same(&loss.graph), "loss belongs to a different graph");
        let inner = self.inner.borrow();
        assert_eq!(
            inner.nodes[loss.id].value.numel(),
            1,
            "backward needs a scalar loss"
        );
        let mut grads: Vec<Option<Tensor<T>>> = (0..=loss.id).map(|_| None).collect();
        let mut leaves = HashMap::new();
        if !inner.nodes[loss.id].requires_grad {
            return Gradients { grads: leaves };
        }
        grads[loss.id] = Some(Tensor::ones(inner.nodes[loss.id].value.shape()));
        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &inner.nodes[id];
            match &node.backward {
                Some(bw) => {
                    let ctx = BackwardCtx {
                        grad: &g,
                        output: &node.value,
                        inputs: node.parents.iter().map(|&p| &*inner.nodes[p].value).collect(),
                    };
                    let pgs = bw(&ctx);
                    debug_assert_eq!(pgs.len(), node.parents.len());
                    for (&p, pg) in node.parents.iter().zip(pgs) {
                        let Some(pg) = pg else { continue };
                        if !inner.nodes[p].requires_grad {
                            continue;
                        }
                        assert_eq!(
                            pg.shape(),
                            inner.nodes[p].value.shape(),
                            "gradient shape mismatch for node {p}"
                        );
                        match &mut grads[p] {
                            Some(acc) => acc.add_assign(&pg),
                            slot => *slot = Some(pg),
                        }
                    }
                }
                None => {
                    if node.requires_grad {
                        leaves.insert(id, g);
                    }
                }
            }
        }
        Gradients { grads: leaves }
    }
}

impl<T: Scalar> Var<T> {
    pub fn graph(&self) -> &Graph<T> {
        &self.graph
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> Rc<Tensor<T>> {
        self.graph.value_of(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    pub fn requires_grad(&self) -> bool {
        self.graph.requires_grad_of(self.id)
    }

    /// Same value, cut from the tape.
    pub fn detach(&self) -> Var<T> {
        self.graph.constant((*self.value()).clone())
    }
}

/// Gradients of the leaves reached by a backward sweep.
pub struct Gradients<T> {
    grads: HashMap<usize, Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn wrt(&self, v: &Var<T>) -> Option<&Tensor<T>> {
        self.grads.get(&v.id)
    }

    pub fn take(&mut self, v: &Var<T>) -> Option<Tensor<T>> {
        self.grads.remove(&v.id)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}
