//! Deterministic point sets: Halton sequences, cell-centred lattices,
//! cross-section samples and Chebyshev nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const PRIMES: [u32; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

/// Radical inverse of `i` in the given base.
pub fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut f = 1.0 / b;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base as u64) as f64;
        i /= base as u64;
        f /= b;
    }
    r
}

/// The `i`-th Halton point in `[0,1)^dim` (index 0 is skipped to avoid the origin).
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    (0..dim).map(|k| radical_inverse(i + 1, PRIMES[k])).collect()
}

/// `count` low-discrepancy points uniformly filling the ball `B(0, radius)` in `R^dim`.
pub fn halton_ball(count: usize, dim: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        let p: Vec<f64> = halton(i, dim).into_iter().map(|u| 2.0 * u - 1.0).collect();
        i += 1;
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(p.into_iter().map(|v| v * radius).collect());
        }
    }
    out
}

/// Uniform random point in `B(0, radius)` by rejection.
pub fn random_ball(rng: &mut SeededRng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return p.into_iter().map(|v| v * radius).collect();
        }
    }
}

/// Offsets filling the closed ball of radius `r` in `R^dim`, used to sample
/// tube cross-sections. Dimension 1 uses midpoints of an interval, dimension 2
/// a Vogel spiral, higher dimensions Halton rejection.
pub fn cross_section(count: usize, dim: usize, r: f64) -> Vec<Vec<f64>> {
    match dim {
        0 => vec![Vec::new()],
        1 => (0..count)
            .map(|k| vec![r * (-1.0 + (2.0 * k as f64 + 1.0) / count as f64)])
            .collect(),
        2 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let rad = r * ((k as f64 + 0.5) / count as f64).sqrt();
                    let th = k as f64 * golden;
                    vec![rad * th.cos(), rad * th.sin()]
                })
                .collect()
        }
        _ => halton_ball(count, dim, r),
    }
}

/// Midpoints of `count` equal subintervals of `[a, b]`.
pub fn midpoints(a: f64, b: f64, count: usize) -> Vec<f64> {
    let h = (b - a) / count as f64;
    (0..count).map(|k| a + (k as f64 + 0.5) * h).collect()
}

/// `count` Chebyshev points of the first kind on `[a, b]`.
pub fn chebyshev(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let th = std::f64::consts::PI * (2.0 * k as f64 + 1.0) / (2.0 * count as f64);
            0.5 * (a + b) - 0.5 * (b - a) * th.cos()
        })
        .collect()
}

/// Evenly spaced values `a, a + h, …` up to and including `b` (within rounding).
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect()
}

/// Points of the lattice `origin + spacing·Z^d` with cell centres inside
/// `[lo, hi]` that satisfy `keep`, in lexicographic order.
pub fn lattice_in_box(lo: &[f64], hi: &[f64], spacing: f64, keep: impl Fn(&[f64]) -> bool) -> Vec<Vec<f64>> {
    let dim = lo.len();
    let counts: Vec<usize> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (((b - a) / spacing).floor() as usize).max(0))
        .collect();
    if counts.contains(&0) {
        return Vec::new();
    }
    let total: usize = counts.iter().product();
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let p: Vec<f64> = (0..dim)
            .map(|k| {
                let width = counts[k] as f64 * spacing;
                let start = 0.5 * (lo[k] + hi[k]) - 0.5 * width;
                start + (idx[k] as f64 + 0.5) * spacing
            })
            .collect();
        if keep(&p) {
            out.push(p);
        }
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// Lattice `spacing·Z^d` (containing the origin) intersected with `B(0, radius)`.
pub fn lattice_in_ball(dim: usize, radius: f64, spacing: f64) -> Vec<Vec<f64>> {
    let m = (radius / spacing).floor() as i64;
    let side = (2 * m + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for flat in 0..total {
        let mut rem = flat;
        let mut p = vec![0.0; dim];
        for k in (0..dim).rev() {
            p[k] = ((rem % side) as i64 - m) as f64 * spacing;
            rem /= side;
        }
        if p.iter().map(|v| v * v).sum::<f64>() <= radius * radius * (1.0 + 1e-12) {
            out.push(p);
        }
    }
    out
}
