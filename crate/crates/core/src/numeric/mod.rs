//! Dense kernels, the seeded generator, initializers, and the finite-difference
//! oracle.

mod fdiff;
mod linalg;
mod rng;

pub use fdiff::{finite_diff_grad, finite_diff_slice, max_relative_error};
pub use linalg::{
    axpy, dot, hadamard, inner, matvec, matvec_into, matvec_t_acc, matvec_transposed, outer_acc,
    relu, sigmoid, DenseMatrix, DenseVector, PROB_EPS,
};
pub use rng::{stream, Rng};

/// I.i.d. uniform on `±sqrt(6 / (rows + cols))`.
pub fn xavier_uniform(rng: &mut Rng, rows: usize, cols: usize) -> DenseMatrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform(-limit, limit)).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("length is rows*cols")
}

pub fn uniform_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.uniform(-scale, scale)).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("length is rows*cols")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xavier_is_deterministic() {
        let a = xavier_uniform(&mut Rng::new(99), 4, 6);
        let b = xavier_uniform(&mut Rng::new(99), 4, 6);
        let bytes = |m: &DenseMatrix| -> Vec<u8> {
            m.as_slice().iter().flat_map(|x| x.to_le_bytes()).collect()
        };
        assert_eq!(bytes(&a), bytes(&b));
    }

    #[test]
    fn xavier_respects_bound() {
        let m = xavier_uniform(&mut Rng::new(1), 30, 20);
        let limit = (6.0f64 / 50.0).sqrt();
        assert!(m.as_slice().iter().all(|x| x.abs() <= limit));
    }

    #[test]
    fn xavier_mean_is_near_zero() {
        // Uniform(-L, L) has sigma = L / sqrt(3); mean of n draws is within
        // 3 sigma / sqrt(n) with overwhelming probability.
        let (rows, cols) = (100, 1000);
        let m = xavier_uniform(&mut Rng::new(2024), rows, cols);
        let n = (rows * cols) as f64;
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let sigma = limit / 3f64.sqrt();
        let mean = m.as_slice().iter().sum::<f64>() / n;
        assert!(mean.abs() < 3.0 * sigma / n.sqrt(), "mean {mean}");
    }
}
