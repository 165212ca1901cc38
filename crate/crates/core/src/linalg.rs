//! Dense vector kernels shared by the solver and the estimators.
//!
//! Reductions are summed over fixed-size chunks and the chunk partials are
//! combined in order, so results are bit-identical whatever the thread count.

use rayon::prelude::*;

const CHUNK: usize = 1 << 13;
const PARALLEL_MIN: usize = 4 * CHUNK;

fn dot_seq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partials: Vec<f64> = if a.len() >= PARALLEL_MIN {
        a.par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(x, y)| dot_seq(x, y))
            .collect()
    } else {
        a.chunks(CHUNK)
            .zip(b.chunks(CHUNK))
            .map(|(x, y)| dot_seq(x, y))
            .collect()
    };
    partials.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    if y.len() >= PARALLEL_MIN {
        y.par_chunks_mut(CHUNK)
            .zip(x.par_chunks(CHUNK))
            .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(y, x)| *y += alpha * x));
    } else {
        y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    if x.len() >= PARALLEL_MIN {
        x.par_iter_mut().for_each(|v| *v *= alpha);
    } else {
        x.iter_mut().for_each(|v| *v *= alpha);
    }
}

/// Squared distance `|a - b|^2`.
pub fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let part = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum()
    };
    let partials: Vec<f64> = if a.len() >= PARALLEL_MIN {
        a.par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(x, y)| part(x, y))
            .collect()
    } else {
        a.chunks(CHUNK)
            .zip(b.chunks(CHUNK))
            .map(|(x, y)| part(x, y))
            .collect()
    };
    partials.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_paths_agree_bitwise() {
        let n = PARALLEL_MIN + 123;
        let a: Vec<f64> = (0..n).map(|i| ((i * 37 % 101) as f64 - 50.0) / 7.0).collect();
        let b: Vec<f64> = (0..n).map(|i| ((i * 53 % 97) as f64 - 48.0) / 3.0).collect();
        let seq: f64 = a
            .chunks(CHUNK)
            .zip(b.chunks(CHUNK))
            .map(|(x, y)| dot_seq(x, y))
            .collect::<Vec<_>>()
            .iter()
            .sum();
        assert_eq!(dot(&a, &b).to_bits(), seq.to_bits());
    }

    #[test]
    fn axpy_and_distance() {
        let x = vec![1.0, 2.0, 3.0];
        let mut y = vec![1.0, 1.0, 1.0];
        axpy(2.0, &x, &mut y);
        assert_eq!(y, vec![3.0, 5.0, 7.0]);
        assert_eq!(distance_sq(&x, &y), 4.0 + 9.0 + 16.0);
        scale(0.5, &mut y);
        assert_eq!(y, vec![1.5, 2.5, 3.5]);
    }
}
