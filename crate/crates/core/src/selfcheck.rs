//! Built-in numerical self-checks: the push-through identity and the
//! equivalence of the two end-to-end transfer-matrix forms, evaluated on
//! seeded random well-conditioned instances.

use num_complex::Complex;

use crate::error::Result;
use crate::linalg::{relative_frobenius_distance, Matrix};
use crate::multiport::{
    end_to_end_matrix, end_to_end_matrix_alt, push_through_residual, unilateral_matrix,
    PartitionedImpedance, TerminationSpec,
};
use crate::scalar::Scalar;
use crate::C;

/// Residual tolerance of the identity and form-equivalence checks.
pub const SELF_CHECK_RTOL: f64 = 1e-10;

/// Tolerance of the `Z_TR = 0` reduction, which holds to rounding.
pub const REDUCTION_RTOL: f64 = 1e-14;

/// Deterministic generator of test instances: complex entries with
/// independent real and imaginary parts uniform on [-1, 1]; diagonal blocks
/// get `+3I` to keep them well conditioned.
#[derive(Debug, Clone)]
pub struct SeededUniform(u64);

impl SeededUniform {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    /// Uniform on [-1, 1].
    pub fn next_unit(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    pub fn complex<T: Scalar>(&mut self) -> C<T> {
        let re = T::lit(self.next_unit());
        let im = T::lit(self.next_unit());
        Complex::new(re, im)
    }

    pub fn matrix<T: Scalar>(&mut self, rows: usize, cols: usize) -> Matrix<T> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.complex::<T>());
        }
        Matrix::from_fn(rows, cols, |i, j| data[i * cols + j])
    }

    pub fn well_conditioned<T: Scalar>(&mut self, n: usize) -> Matrix<T> {
        self.matrix(n, n)
            .add_scaled_identity(Complex::new(T::lit(3.0), T::zero()))
            .expect("square by construction")
    }

    pub fn symmetric_well_conditioned<T: Scalar>(&mut self, n: usize) -> Matrix<T> {
        let a = self.matrix::<T>(n, n);
        a.add(&a.transpose())
            .expect("same shape")
            .scale(Complex::new(T::lit(0.5), T::zero()))
            .add_scaled_identity(Complex::new(T::lit(3.0), T::zero()))
            .expect("square by construction")
    }

    pub fn reciprocal_partition<T: Scalar>(
        &mut self,
        n_t: usize,
        n_r: usize,
    ) -> PartitionedImpedance<T> {
        let tt = self.symmetric_well_conditioned(n_t);
        let rr = self.symmetric_well_conditioned(n_r);
        let tr = self
            .matrix(n_t, n_r)
            .scale(Complex::new(T::lit(0.3), T::zero()));
        PartitionedImpedance::reciprocal(tt, tr, rr).expect("blocks symmetric by construction")
    }
}

/// Worst-case residuals over the self-check instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfCheckOutcome<T> {
    pub instances: usize,
    /// Largest push-through identity residual.
    pub max_identity_residual: T,
    /// Largest relative deviation between the two end-to-end forms.
    pub max_form_disagreement: T,
    /// Largest relative deviation of the exact matrix from the unilateral
    /// one on `Z_TR = 0` inputs.
    pub max_reduction_error: T,
}

impl<T: Scalar> SelfCheckOutcome<T> {
    pub fn passed(&self) -> bool {
        self.max_identity_residual <= T::lit(SELF_CHECK_RTOL)
            && self.max_form_disagreement <= T::lit(SELF_CHECK_RTOL)
            && self.max_reduction_error <= T::lit(REDUCTION_RTOL)
    }
}

/// Runs the seeded self-check suite with matrix dimensions cycling through 1..=8.
pub fn run_self_check<T: Scalar>(seed: u64, instances: usize) -> Result<SelfCheckOutcome<T>> {
    let mut gen = SeededUniform::new(seed);
    let mut max_identity = T::zero();
    let mut max_forms = T::zero();
    let mut max_reduction = T::zero();

    for i in 0..instances {
        let n = 1 + i % 8;
        let m = 1 + (i / 3) % 8;

        let t = gen.well_conditioned::<T>(n);
        let r = gen.well_conditioned::<T>(m);
        let z = gen.matrix::<T>(m, n);
        let y = gen.matrix::<T>(n, m);
        let residual = push_through_residual(&t, &r, &z, &y)?;
        max_identity = max_identity.max(residual);

        let net = gen.reciprocal_partition::<T>(n, m);
        let term = TerminationSpec::new(
            Complex::new(T::lit(2.0), T::lit(0.4)),
            Complex::new(T::lit(1.7), T::lit(-0.3)),
        )?;
        let d = end_to_end_matrix(&net, &term)?;
        let d_alt = end_to_end_matrix_alt(&net, &term)?;
        max_forms = max_forms.max(relative_frobenius_distance(&d.d, &d_alt.d)?);

        let decoupled =
            PartitionedImpedance::reciprocal(net.tt.clone(), Matrix::zeros(n, m), net.rr.clone())?;
        let exact = end_to_end_matrix(&decoupled, &term)?;
        let unilateral = unilateral_matrix(&decoupled, &term)?;
        max_reduction = max_reduction.max(relative_frobenius_distance(&exact.d, &unilateral.d)?);
    }

    Ok(SelfCheckOutcome {
        instances,
        max_identity_residual: max_identity,
        max_form_disagreement: max_forms,
        max_reduction_error: max_reduction,
    })
}
