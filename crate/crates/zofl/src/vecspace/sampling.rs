use super::{norm, DenseVector, Lp, RngStream};

/// A random direction on the unit `l_p` sphere.
///
/// `L2` normalizes a standard Gaussian vector (uniform surface measure).
/// `L1` normalizes i.i.d. Laplace draws, which gives the cone measure of the
/// l1 sphere. The result is renormalized so its `p`-norm is 1 to rounding.
pub fn sample_sphere(d: usize, p: Lp, rng: &mut RngStream) -> DenseVector {
    assert!(d >= 1, "sample_sphere: dimension must be at least 1");
    loop {
        let raw: Vec<f64> = match p {
            Lp::L2 => (0..d).map(|_| rng.standard_normal()).collect(),
            Lp::L1 => (0..d).map(|_| rng.laplace()).collect(),
        };
        let n = norm(&raw, p.norm());
        // All-zero draws have probability zero; redraw if one shows up.
        if n > 0.0 && n.is_finite() {
            let inv = 1.0 / n;
            return DenseVector::from_vec_unchecked(raw.into_iter().map(|v| v * inv).collect());
        }
    }
}

/// A point uniform in the unit `l_p` ball: `U^{1/d}` times a sphere draw.
pub fn sample_ball(d: usize, p: Lp, rng: &mut RngStream) -> DenseVector {
    let direction = sample_sphere(d, p, rng);
    let radius = rng.uniform_open().powf(1.0 / d as f64);
    direction.scale(radius)
}

/// Componentwise sign with `sign(0) = 0`.
pub fn sign_vector(e: &[f64]) -> DenseVector {
    DenseVector::from_vec_unchecked(
        e.iter()
            .map(|&v| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect(),
    )
}
