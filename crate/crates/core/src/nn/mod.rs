//! Small numeric core for the Q-network: row-major tensors, a GEMM shim,
//! the stacked-LSTM and fully connected architectures with exact reverse-mode
//! gradients, the Huber loss and Adam.

mod activation;
mod adam;
mod loss;
mod network;

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

pub use adam::{AdamConfig, AdamState};
pub use loss::{huber, huber_grad};
pub use network::{Architecture, ForwardCache, Gradients, QNetwork};

/// Floating-point type the network is generic over (`f32` for training,
/// `f64` for gradient checks).
pub trait Scalar: num_traits::Float + Default + Debug + Send + Sync + 'static {
    /// `c = alpha * a * b + beta * c` with explicit strides (see `matrixmultiply`).
    #[allow(clippy::too_many_arguments)]
    fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );

    fn cast_from(x: f64) -> Self;
    fn as_f64(self) -> f64;
    fn sigmoid_slice(xs: &mut [Self]);
    fn tanh_slice(xs: &mut [Self]);
}

macro_rules! impl_scalar {
    ($t:ty, $gemm:path, $sigmoid:path, $tanh:path) => {
        impl Scalar for $t {
            fn gemm_raw(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                // SAFETY: `matmul` checks every slice against the extents the
                // strides address before calling in here.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    )
                }
            }

            fn cast_from(x: f64) -> Self {
                x as $t
            }

            fn as_f64(self) -> f64 {
                self as f64
            }

            fn sigmoid_slice(xs: &mut [Self]) {
                $sigmoid(xs)
            }

            fn tanh_slice(xs: &mut [Self]) {
                $tanh(xs)
            }
        }
    };
}

impl_scalar!(
    f32,
    matrixmultiply::sgemm,
    activation::sigmoid_f32,
    activation::tanh_f32
);
impl_scalar!(
    f64,
    matrixmultiply::dgemm,
    activation::sigmoid_f64,
    activation::tanh_f64
);

/// `C (m x n) = op(A) (m x k) * op(B) (k x n) + beta * C`, all row-major.
/// `trans_a` means `a` is stored as `k x m`; `trans_b` means `b` is `n x k`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn matmul<S: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[S],
    trans_a: bool,
    b: &[S],
    trans_b: bool,
    beta: S,
    c: &mut [S],
) {
    assert!(a.len() >= m * k, "lhs too short for {m}x{k}");
    assert!(b.len() >= k * n, "rhs too short for {k}x{n}");
    assert!(c.len() >= m * n, "output too short for {m}x{n}");
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    S::gemm_raw(m, k, n, S::one(), a, rsa, csa, b, rsb, csb, beta, c, n as isize, 1);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![S::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<S>) -> crate::Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(crate::Error::ShapeMismatch(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, v: S) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| T::cast_from(v.as_f64())).collect(),
        }
    }
}
