//! Scalar abstraction shared by every numerical module.
//!
//! All physics code is written against [`Real`], which is implemented for
//! `f32` and `f64`. Operations that need a native backend (dense symmetric
//! eigensolves through LAPACK, FFTs through rustfft) are reached through
//! trait methods so generic code never names the concrete float type.

use std::fmt::{Debug, Display, LowerExp};
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};
use rustfft::{Fft, FftPlanner};

/// Which part of a symmetric spectrum to compute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EigenRange<T> {
    /// The lowest `count` eigenpairs.
    Lowest(usize),
    /// All eigenpairs with eigenvalue in the half-open interval `(lower, upper]`.
    Window { lower: T, upper: T },
}

/// Eigenvalues in ascending order with their unit-norm eigenvectors stored
/// column by column (`vectors[k * n + i]` is component `i` of vector `k`).
#[derive(Clone, Debug)]
pub struct Eigenpairs<T> {
    pub values: Vec<T>,
    pub vectors: Vec<T>,
    pub dimension: usize,
}

impl<T: Copy> Eigenpairs<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> &[T] {
        &self.vectors[k * self.dimension..(k + 1) * self.dimension]
    }
}

/// In-place complex transforms of a fixed length.
///
/// `inverse` is normalized, so `forward` followed by `inverse` is the identity.
pub trait Spectral<T>: Send {
    fn forward(&mut self, buffer: &mut [Complex<T>]);
    fn inverse(&mut self, buffer: &mut [Complex<T>]);
}

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float + FloatConst + NumAssign + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal or parameter, rounding if needed.
    fn of(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// Machine epsilon scaled for tolerance checks that depend on precision.
    fn tolerance() -> Self;

    /// Selected eigenpairs of the dense symmetric `n x n` matrix stored in
    /// `matrix` (only the lower triangle is read; the buffer is destroyed).
    ///
    /// On failure the LAPACK `info` code is returned.
    fn symmetric_eigen(
        matrix: &mut [Self],
        n: usize,
        range: EigenRange<Self>,
    ) -> Result<Eigenpairs<Self>, i32>;

    /// All eigenpairs of the symmetric tridiagonal matrix with diagonal
    /// `diag` and off-diagonal `off`. Eigenvalues overwrite `diag` in ascending
    /// order; eigenvectors are stored column by column in `vectors` (`n * n`).
    /// `work` must hold at least `2n − 2` entries.
    fn tridiagonal_eigen(
        diag: &mut [Self],
        off: &mut [Self],
        vectors: &mut [Self],
        work: &mut [Self],
    ) -> Result<(), i32>;

    /// FFT plan pair for complex buffers of length `len`.
    fn spectral(len: usize) -> Box<dyn Spectral<Self>>;
}

struct FftPair<T: rustfft::FftNum> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    scale: T,
}

impl<T: rustfft::FftNum + Float> FftPair<T> {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
            scale: T::one() / T::from(len).unwrap(),
        }
    }
}

impl<T: rustfft::FftNum + Float> Spectral<T> for FftPair<T> {
    fn forward(&mut self, buffer: &mut [Complex<T>]) {
        self.forward.process_with_scratch(buffer, &mut self.scratch);
    }

    fn inverse(&mut self, buffer: &mut [Complex<T>]) {
        self.inverse.process_with_scratch(buffer, &mut self.scratch);
        for z in buffer.iter_mut() {
            *z = *z * self.scale;
        }
    }
}

macro_rules! impl_real {
    ($t:ty, $syevr:path, $stev:path) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }

            fn tolerance() -> Self {
                <$t>::EPSILON * 64.0
            }

            fn symmetric_eigen(
                matrix: &mut [Self],
                n: usize,
                range: EigenRange<Self>,
            ) -> Result<Eigenpairs<Self>, i32> {
                assert_eq!(matrix.len(), n * n, "matrix buffer must hold n*n entries");
                if n == 0 {
                    return Ok(Eigenpairs { values: vec![], vectors: vec![], dimension: 0 });
                }
                let ni = n as i32;
                let (which, vl, vu, il, iu, cap) = match range {
                    EigenRange::Lowest(count) => {
                        let count = count.min(n);
                        if count == 0 {
                            return Ok(Eigenpairs { values: vec![], vectors: vec![], dimension: n });
                        }
                        (b'I', 0.0, 0.0, 1, count as i32, count)
                    }
                    EigenRange::Window { lower, upper } => (b'V', lower, upper, 0, 0, n),
                };
                let mut found = 0i32;
                let mut values = vec![0.0 as $t; n];
                let mut vectors = vec![0.0 as $t; n * cap];
                let mut support = vec![0i32; 2 * cap.max(1)];
                let mut info = 0i32;

                // Workspace query.
                let mut work_query = [0.0 as $t];
                let mut iwork_query = [0i32];
                unsafe {
                    $syevr(
                        b'V', which, b'L', ni, matrix, ni, vl, vu, il, iu, 0.0, &mut found,
                        &mut values, &mut vectors, ni, &mut support, &mut work_query, -1,
                        &mut iwork_query, -1, &mut info,
                    );
                }
                if info != 0 {
                    return Err(info);
                }
                let lwork = work_query[0] as usize;
                let liwork = iwork_query[0] as usize;
                let mut work = vec![0.0 as $t; lwork.max(1)];
                let mut iwork = vec![0i32; liwork.max(1)];
                unsafe {
                    $syevr(
                        b'V', which, b'L', ni, matrix, ni, vl, vu, il, iu, 0.0, &mut found,
                        &mut values, &mut vectors, ni, &mut support, &mut work, lwork as i32,
                        &mut iwork, liwork as i32, &mut info,
                    );
                }
                if info != 0 {
                    return Err(info);
                }
                let found = found as usize;
                values.truncate(found);
                vectors.truncate(found * n);
                Ok(Eigenpairs { values, vectors, dimension: n })
            }

            fn tridiagonal_eigen(
                diag: &mut [Self],
                off: &mut [Self],
                vectors: &mut [Self],
                work: &mut [Self],
            ) -> Result<(), i32> {
                let n = diag.len();
                assert!(off.len() + 1 >= n && vectors.len() >= n * n);
                if n == 0 {
                    return Ok(());
                }
                let mut info = 0i32;
                unsafe {
                    $stev(b'V', n as i32, diag, off, vectors, n as i32, work, &mut info);
                }
                if info == 0 {
                    Ok(())
                } else {
                    Err(info)
                }
            }

            fn spectral(len: usize) -> Box<dyn Spectral<Self>> {
                Box::new(FftPair::<$t>::new(len))
            }
        }
    };
}

impl_real!(f32, lapack::ssyevr, lapack::sstev);
impl_real!(f64, lapack::dsyevr, lapack::dstev);
