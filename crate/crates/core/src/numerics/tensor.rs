use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element type of tensors: `f32` for training, `f64` for gradient checks.
pub trait Scalar:
    Float
    + FromPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
{
    const DTYPE: &'static str;

    /// `c = alpha * a·b + beta * c` with arbitrary strides.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
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

    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $name:literal, $gemm:path) => {
        impl Scalar for $t {
            const DTYPE: &'static str = $name;

            fn gemm(
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
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: callers pass slices covering the strided extents
                // (checked by the debug assertions below).
                debug_assert!(
                    k == 0 || a.len() >= 1 + (m - 1) * rsa as usize + (k - 1) * csa as usize
                );
                debug_assert!(
                    k == 0 || b.len() >= 1 + (k - 1) * rsb as usize + (n - 1) * csb as usize
                );
                debug_assert!(c.len() >= 1 + (m - 1) * rsc as usize + (n - 1) * csc as usize);
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
        }
    };
}

impl_scalar!(f32, "f32", matrixmultiply::sgemm);
impl_scalar!(f64, "f64", matrixmultiply::dgemm);

/// Dense row-major tensor. Everything on the tape is 2-D; vectors are 1×n.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Debug> Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tensor{:?}", self.shape)?;
        if self.data.len() <= 16 {
            write!(f, "{:?}", self.data)?;
        }
        Ok(())
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape {
                op: "from_vec",
                left: shape.to_vec(),
                right: vec![data.len()],
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar(x: T) -> Self {
        Tensor {
            shape: vec![1, 1],
            data: vec![x],
        }
    }

    pub fn row(data: Vec<T>) -> Self {
        Tensor {
            shape: vec![1, data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols() + c]
    }

    pub fn row_slice(&self, r: usize) -> &[T] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn item(&self) -> T {
        assert_eq!(self.data.len(), 1, "item() on non-scalar {:?}", self.shape);
        self.data[0]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|&x| U::from_f64(x.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Tensor<T>) -> T {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn add_assign(&mut self, other: &Tensor<T>) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, other: &Tensor<T>, scale: T) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * scale;
        }
    }

    /// `self · other` for 2-D operands, optionally transposing either side.
    pub fn matmul_t(&self, trans_a: bool, other: &Tensor<T>, trans_b: bool) -> Result<Tensor<T>> {
        let (m, k) = if trans_a {
            (self.cols(), self.rows())
        } else {
            (self.rows(), self.cols())
        };
        let (k2, n) = if trans_b {
            (other.cols(), other.rows())
        } else {
            (other.rows(), other.cols())
        };
        if k != k2 || self.shape.len() != 2 || other.shape.len() != 2 {
            return Err(Error::Shape {
                op: "matmul",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let mut out = Tensor::zeros(&[m, n]);
        gemm_into(self, trans_a, other, trans_b, &mut out, T::zero());
        Ok(out)
    }

    pub fn matmul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.matmul_t(false, other, false)
    }

    pub fn transpose(&self) -> Tensor<T> {
        let (r, c) = (self.rows(), self.cols());
        let mut data = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                data.push(self.data[i * c + j]);
            }
        }
        Tensor {
            shape: vec![c, r],
            data,
        }
    }
}

/// `out = op(a)·op(b) + beta * out`; shapes must already agree.
pub(crate) fn gemm_into<T: Scalar>(
    a: &Tensor<T>,
    trans_a: bool,
    b: &Tensor<T>,
    trans_b: bool,
    out: &mut Tensor<T>,
    beta: T,
) {
    let (ar, ac) = (a.rows() as isize, a.cols() as isize);
    let (br, bc) = (b.rows() as isize, b.cols() as isize);
    let (m, k, rsa, csa) = if trans_a {
        (ac, ar, 1, ac)
    } else {
        (ar, ac, ac, 1)
    };
    let (n, rsb, csb) = if trans_b { (br, 1, bc) } else { (bc, bc, 1) };
    let _ = br;
    let n_out = out.cols() as isize;
    T::gemm(
        m as usize,
        k as usize,
        n as usize,
        T::one(),
        &a.data,
        rsa,
        csa,
        &b.data,
        rsb,
        csb,
        beta,
        &mut out.data,
        n_out,
        1,
    );
}
