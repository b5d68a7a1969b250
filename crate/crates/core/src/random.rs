//! Seeded random fields used by restarts, probes and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::MeshDomain;

/// Independent deterministic stream for task `index` of a run seeded with `seed`.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random smooth field: a sum of low cosine modes with decaying coefficients.
pub fn smooth_field<R: Rng>(mesh: &MeshDomain, modes: usize, rng: &mut R) -> Vec<f64> {
    let s = mesh.shape();
    let mut coef = Vec::with_capacity((modes + 1) * (modes + 1));
    for k in 0..=modes {
        for l in 0..=modes {
            let a: f64 = rng.gen_range(-1.0..1.0);
            coef.push((k as f64, l as f64, a / (1.0 + (k + l) as f64)));
        }
    }
    let pi = std::f64::consts::PI;
    mesh.sample_nodes(|x, y| {
        coef.iter()
            .map(|&(k, l, a)| a * (k * pi * x / s.lx).cos() * (l * pi * y / s.ly).cos())
            .sum()
    })
}

/// Smooth field with values spanning exactly `[lo, hi]` (affine rescale of [`smooth_field`]).
pub fn smooth_field_in_range<R: Rng>(mesh: &MeshDomain, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    let f = smooth_field(mesh, 3, rng);
    let (a, b) = f.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if b - a < 1e-14 {
        return vec![0.5 * (lo + hi); f.len()];
    }
    f.iter().map(|v| lo + (hi - lo) * (v - a) / (b - a)).collect()
}

/// Independent uniform nodal values in `[-1, 1]`.
pub fn rough_field<R: Rng>(mesh: &MeshDomain, rng: &mut R) -> Vec<f64> {
    (0..mesh.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rectangle_mesh;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let m = build_rectangle_mesh(1.0, 1.0, 4, 4).unwrap();
        let a = smooth_field(&m, 2, &mut task_rng(7, 0));
        let b = smooth_field(&m, 2, &mut task_rng(7, 0));
        let c = smooth_field(&m, 2, &mut task_rng(7, 1));
        assert_eq!(a, b);
        assert_ne!(a, c);
        let r = smooth_field_in_range(&m, 1.5, 4.0, &mut task_rng(1, 2));
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - 1.5).abs() < 1e-12 && (hi - 4.0).abs() < 1e-12);
    }
}
