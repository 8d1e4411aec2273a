//! Seeded sampling of the slice, orthogonal matrices and inner products.

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nilalg::{Mat4, TriBracket};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in `(0, hi]`.
fn half_open(rng: &mut impl Rng, hi: f64) -> f64 {
    hi * (1.0 - rng.gen::<f64>())
}

/// `count` seeded points of `(0,2] x [-2,2] x (0,2]`.
pub fn slice_points(count: usize, seed: u64) -> Vec<TriBracket> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let a = half_open(&mut rng, 2.0);
            let b = rng.gen_range(-2.0..=2.0);
            let c = half_open(&mut rng, 2.0);
            TriBracket::unchecked(a, b, c)
        })
        .collect()
}

/// Seeded points of the slice rescaled to `|mu| = norm`, with `a, c` bounded
/// away from zero by `min_ac` before rescaling.
pub fn points_with_norm(count: usize, norm: f64, min_ac: f64, seed: u64) -> Vec<TriBracket> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let a = rng.gen_range(min_ac..=2.0);
            let b = rng.gen_range(-2.0..=2.0);
            let c = rng.gen_range(min_ac..=2.0);
            let p = TriBracket::unchecked(a, b, c);
            p.scale(norm / p.norm_sq().sqrt())
        })
        .collect()
}

/// Haar-ish random orthogonal matrix from the QR factorization of a matrix
/// with uniform entries, signs fixed by the diagonal of R.
pub fn random_orthogonal(rng: &mut impl Rng) -> Mat4 {
    let m = Matrix4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..4 {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random well-conditioned invertible matrix `I + small`.
pub fn random_frame(rng: &mut impl Rng, spread: f64) -> Mat4 {
    Mat4::identity() + Matrix4::from_fn(|_, _| rng.gen_range(-spread..spread))
}
