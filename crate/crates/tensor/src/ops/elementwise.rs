use crate::{Scalar, Var};

impl<T: Scalar> Var<T> {
    pub fn add(&self, other: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), other.value());
        let out = a.broadcast_with(&b, |x, y| x + y);
        self.graph().record(
            out,
            &[self, other],
            Box::new(|ctx| {
                let (a, b) = (ctx.input(0), ctx.input(1));
                vec![
                    Some(ctx.grad.reduce_to(a.shape())),
                    Some(ctx.grad.reduce_to(b.shape())),
                ]
            }),
        )
    }

    pub fn sub(&self, other: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), other.value());
        let out = a.broadcast_with(&b, |x, y| x - y);
        self.graph().record(
            out,
            &[self, other],
            Box::new(|ctx| {
                let (a, b) = (ctx.input(0), ctx.input(1));
                vec![
                    Some(ctx.grad.reduce_to(a.shape())),
                    Some(ctx.grad.map(|g| -g).reduce_to(b.shape())),
                ]
            }),
        )
    }

    pub fn mul(&self, other: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), other.value());
        let out = a.broadcast_with(&b, |x, y| x * y);
        self.graph().record(
            out,
            &[self, other],
            Box::new(|ctx| {
                let (a, b) = (ctx.input(0), ctx.input(1));
                vec![
                    Some(ctx.grad.broadcast_with(b, |g, y| g * y).reduce_to(a.shape())),
                    Some(ctx.grad.broadcast_with(a, |g, x| g * x).reduce_to(b.shape())),
                ]
            }),
        )
    }

    pub fn div(&self, other: &Var<T>) -> Var<T> {
        let (a, b) = (self.value(), other.value());
        let out = a.broadcast_with(&b, |x, y| x / y);
        self.graph().record(
            out,
            &[self, other],
            Box::new(|ctx| {
                let (a, b) = (ctx.input(0), ctx.input(1));
                let ga = ctx.grad.broadcast_with(b, |g, y| g / y);
                let gb = ctx
                    .grad
                    .zip_map(ctx.output, |g, o| -g * o)
                    .broadcast_with(b, |g, y| g / y);
                vec![Some(ga.reduce_to(a.shape())), Some(gb.reduce_to(b.shape()))]
            }),
        )
    }

    /// `self + c`.
    pub fn add_scalar(&self, c: T) -> Var<T> {
        let out = self.value().map(|x| x + c);
        self.graph()
            .record(out, &[self], Box::new(|ctx| vec![Some(ctx.grad.clone())]))
    }

    /// `self * c`.
    pub fn scale(&self, c: T) -> Var<T> {
        let out = self.value().map(|x| x * c);
        self.graph().record(
            out,
            &[self],
            Box::new(move |ctx| vec![Some(ctx.grad.map(|g| g * c))]),
        )
    }

    pub fn neg(&self) -> Var<T> {
        self.scale(-T::one())
    }

    /// `1 - self`.
    pub fn one_minus(&self) -> Var<T> {
        let out = self.value().map(|x| T::one() - x);
        self.graph().record(
            out,
            &[self],
            Box::new(|ctx| vec![Some(ctx.grad.map(|g| -g))]),
        )
    }

    /// Elementwise map with derivative `df(x, y)` where `y = f(x)`.
    pub fn unary(
        &self,
        f: impl Fn(T) -> T,
        df: impl Fn(T, T) -> T + 'static,
    ) -> Var<T> {
        let out = self.value().map(f);
        self.graph().record(
            out,
            &[self],
            Box::new(move |ctx| {
                let x = ctx.input(0);
                let mut g = ctx.grad.clone();
                for ((gi, &xi), &yi) in g.data_mut().iter_mut().zip(x.data()).zip(ctx.output.data()) {
                    *gi = *gi * df(xi, yi);
                }
                vec![Some(g)]
            }),
        )
    }

    pub fn exp(&self) -> Var<T> {
        self.unary(|x| x.exp(), |_, y| y)
    }

    pub fn ln(&self) -> Var<T> {
        self.unary(|x| x.ln(), |x, _| x.recip())
    }

    pub fn sqrt(&self) -> Var<T> {
        self.unary(|x| x.sqrt(), |_, y| T::of(0.5) / y)
    }

    pub fn square(&self) -> Var<T> {
        self.unary(|x| x * x, |x, _| x + x)
    }

    /// |x| with subgradient 0 at the origin.
    pub fn abs(&self) -> Var<T> {
        self.unary(
            |x| x.abs(),
            |x, _| {
                if x > T::zero() {
                    T::one()
                } else if x < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            },
        )
    }

    pub fn relu(&self) -> Var<T> {
        self.unary(
            |x| x.max(T::zero()),
            |x, _| if x > T::zero() { T::one() } else { T::zero() },
        )
    }

    pub fn leaky_relu(&self, slope: T) -> Var<T> {
        self.unary(
            move |x| if x > T::zero() { x } else { x * slope },
            move |x, _| if x > T::zero() { T::one() } else { slope },
        )
    }

    pub fn sigmoid(&self) -> Var<T> {
        self.unary(sigmoid, |_, y| y * (T::one() - y))
    }

    pub fn tanh(&self) -> Var<T> {
        self.unary(|x| x.tanh(), |_, y| T::one() - y * y)
    }

    /// `ln(1 + e^x)`, evaluated without overflow.
    pub fn softplus(&self) -> Var<T> {
        self.unary(softplus, |x, _| sigmoid(x))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&self) -> Var<T> {
        let k = T::of((2.0 / std::f64::consts::PI).sqrt());
        let c = T::of(0.044715);
        let half = T::of(0.5);
        self.unary(
            move |x| half * x * (T::one() + (k * (x + c * x * x * x)).tanh()),
            move |x, _| {
                let u = k * (x + c * x * x * x);
                let t = u.tanh();
                let du = k * (T::one() + T::of(3.0) * c * x * x);
                half * (T::one() + t) + half * x * (T::one() - t * t) * du
            },
        )
    }

    /// Clamp into `[lo, hi]`; gradient passes only strictly inside.
    pub fn clamp(&self, lo: T, hi: T) -> Var<T> {
        self.unary(
            move |x| x.max(lo).min(hi),
            move |x, _| if x > lo && x < hi { T::one() } else { T::zero() },
        )
    }
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}
