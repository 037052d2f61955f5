use fgt_tensor::{Scalar, Var};

/// Discriminator hinge loss `mean(relu(1 − real)) + mean(relu(1 + fake))`; never negative.
pub fn tpatchgan_d_loss<T: Scalar>(real: &Var<T>, fake: &Var<T>) -> Var<T> {
    real.one_minus().relu().mean().add(&fake.add_scalar(T::one()).relu().mean())
}

/// Generator loss `−mean(fake)`. Unbounded below: the generator is rewarded for
/// pushing scores up without limit, so only the discriminator side is clipped.
pub fn tpatchgan_g_loss<T: Scalar>(fake: &Var<T>) -> Var<T> {
    fake.mean().neg()
}
