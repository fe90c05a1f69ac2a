//! Deterministic low-discrepancy samples of the closed unit ball.

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// `i`-th Halton point in `[0, 1)^dim` (skipping the origin).
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
    PRIMES[..dim].iter().map(|&b| radical_inverse(i + 1, b)).collect()
}

fn boundary_point(i: usize, count: usize, dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![if i.is_multiple_of(2) { -1.0 } else { 1.0 }];
    }
    if dim == 2 {
        let th = std::f64::consts::TAU * i as f64 / count as f64;
        return vec![th.cos(), th.sin()];
    }
    // normalize a Halton point of the cube, skipping ones near the center
    let mut k = i as u64;
    loop {
        let p: Vec<f64> = halton(k, dim).iter().map(|v| 2.0 * v - 1.0).collect();
        let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.25 && r <= 1.0 {
            return p.iter().map(|v| v / r).collect();
        }
        k += count as u64 + 7;
    }
}

/// `count` points of the unit ball: a quarter on the sphere, the rest inside.
pub fn ball_samples(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let n_boundary = (count / 4).max(1);
    let n_interior = count.saturating_sub(n_boundary);
    let mut out: Vec<Vec<f64>> = (0..n_boundary).map(|i| boundary_point(i, n_boundary, dim)).collect();
    out.extend(interior_samples(dim, n_interior, 0));
    out
}

/// Interior points drawn by rejection from the Halton sequence starting at `offset`.
pub fn interior_samples(dim: usize, count: usize, offset: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut i = offset;
    while out.len() < count {
        let p: Vec<f64> = halton(i, dim).iter().map(|v| 2.0 * v - 1.0).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(p);
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base2() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn samples_in_ball_and_deterministic() {
        for dim in 1..=3 {
            let s = ball_samples(dim, 400);
            assert_eq!(s.len(), 400);
            assert!(s.iter().all(|p| p.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12));
            assert_eq!(s, ball_samples(dim, 400));
        }
    }
}
