//! Thin safe wrappers over `matrixmultiply` for row-major dense layers.

pub(crate) trait Scalar: Copy + Default + PartialOrd + std::ops::AddAssign + std::ops::Mul<Output = Self> {
    const ZERO: Self;
    const ONE: Self;
    /// `c = a * b + beta * c` with explicit strides; `a` is m x k, `b` is k x n.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

/// `out (rows x n) = x (rows x k) * w^T` where `w` is n x k, then adds `bias`.
pub(crate) fn affine<T: Scalar>(x: &[T], rows: usize, k: usize, w: &[T], bias: &[T], out: &mut [T]) {
    let n = bias.len();
    assert!(x.len() >= rows * k && w.len() == n * k && out.len() >= rows * n);
    for r in 0..rows {
        out[r * n..(r + 1) * n].copy_from_slice(bias);
    }
    // SAFETY: bounds asserted above, buffers do not alias (distinct borrows).
    unsafe {
        T::gemm(
            rows,
            k,
            n,
            x.as_ptr(),
            k as isize,
            1,
            w.as_ptr(),
            1,
            k as isize,
            T::ONE,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `out (rows x k) = g (rows x n) * w` where `w` is n x k.
pub(crate) fn back_input<T: Scalar>(g: &[T], rows: usize, n: usize, w: &[T], k: usize, out: &mut [T]) {
    assert!(g.len() >= rows * n && w.len() == n * k && out.len() >= rows * k);
    // SAFETY: bounds asserted above.
    unsafe {
        T::gemm(
            rows,
            n,
            k,
            g.as_ptr(),
            n as isize,
            1,
            w.as_ptr(),
            k as isize,
            1,
            T::ZERO,
            out.as_mut_ptr(),
            k as isize,
            1,
        );
    }
}

/// `dw (n x k) = g^T (n x rows) * x (rows x k)`.
pub(crate) fn back_weights<T: Scalar>(g: &[T], rows: usize, n: usize, x: &[T], k: usize, dw: &mut [T]) {
    assert!(g.len() >= rows * n && x.len() >= rows * k && dw.len() == n * k);
    // SAFETY: bounds asserted above.
    unsafe {
        T::gemm(
            n,
            rows,
            k,
            g.as_ptr(),
            1,
            n as isize,
            x.as_ptr(),
            k as isize,
            1,
            T::ZERO,
            dw.as_mut_ptr(),
            k as isize,
            1,
        );
    }
}
